#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "camo/attack_model.hpp"
#include "camo/bounds.hpp"
#include "camo/environments.hpp"
#include "camo/mdp.hpp"
#include "camo/oracle.hpp"
#include "camo/planners.hpp"
#include "camo/random_instances.hpp"
#include "camo/serialization.hpp"

namespace camo {

/**
 * Config document for the experiment runner. Minimal example:
 *   { "environment": { "preset": "ring-v1" },
 *     "num_recipients": 2, "horizon": 5,
 *     "modes": ["none", "camouflage", "spa"] }
 * See the repository README for the full schema.
 */
struct ExperimentConfig {
  // environment selection
  std::string preset;                     // named preset, empty when inline
  nlohmann::json inline_environment;      // {"mdp": {...}, "scheme": {...}}
  std::optional<std::vector<std::pair<int, int>>> attacker_positions;  // preset override
  std::optional<int> board_side;                                       // preset override
  nlohmann::json ring_reward_table;                                    // preset override
  std::optional<double> base_reward, bonus_reward, attacker_reward;    // preset overrides

  int num_recipients = 2;
  int horizon = 5;

  std::string init_kind = "uniform";  // uniform | point | explicit
  JointState init_point;
  Dist init_explicit;

  std::vector<std::string> modes{"none", "camouflage", "spa"};
  std::vector<double> budgets;
  double epsilon = 0.5;
  int grid_resolution = 100;

  bool rotation_positive = true;     // ring orientation flag
  bool rows_are_destination = true;  // reward-table orientation flag
  std::string spa_domain = "auto";   // auto | truth | own-state | env-config | both | from-scheme
  bool bounds_sweep = false;
  bool sweep_attacker_positions = false;

  // reduced-suite sizes for certify
  int certify_attack_instances = 50;
  int certify_budget_instances = 100;
  int certify_theorem_instances = 100;
  int certify_lemma_instances = 100;

  std::string output_dir = "out";
  std::uint64_t episodes = 0;  // 0 disables the Monte Carlo cross-check
  std::uint64_t seed = 0;
};

namespace config_detail {

inline void expect(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw std::invalid_argument("config field '" + field + "': " + message);
}

}  // namespace config_detail

inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
  using config_detail::expect;
  ExperimentConfig cfg;
  try {
    if (doc.contains("environment")) {
      const auto& env = doc.at("environment");
      if (env.contains("preset")) cfg.preset = env.at("preset").get<std::string>();
      if (env.contains("inline")) cfg.inline_environment = env.at("inline");
      if (env.contains("attacker_positions")) {
        std::vector<std::pair<int, int>> positions;
        for (const auto& cell : env.at("attacker_positions"))
          positions.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
        cfg.attacker_positions = positions;
      }
      if (env.contains("board_side")) cfg.board_side = env.at("board_side").get<int>();
      if (env.contains("ring_reward_table")) cfg.ring_reward_table = env.at("ring_reward_table");
      if (env.contains("base_reward")) cfg.base_reward = env.at("base_reward").get<double>();
      if (env.contains("bonus_reward")) cfg.bonus_reward = env.at("bonus_reward").get<double>();
      if (env.contains("attacker_reward"))
        cfg.attacker_reward = env.at("attacker_reward").get<double>();
    }
    expect(!cfg.preset.empty() || !cfg.inline_environment.is_null(), "environment",
           "needs a preset or an inline instance");

    if (doc.contains("num_recipients")) cfg.num_recipients = doc.at("num_recipients").get<int>();
    if (doc.contains("horizon")) cfg.horizon = doc.at("horizon").get<int>();
    expect(cfg.num_recipients >= 1, "num_recipients", "must be >= 1");
    expect(cfg.horizon >= 0, "horizon", "must be >= 0");

    if (doc.contains("initial_distribution")) {
      const auto& init = doc.at("initial_distribution");
      if (init.is_string()) {
        cfg.init_kind = init.get<std::string>();
        expect(cfg.init_kind == "uniform", "initial_distribution",
               "string form must be \"uniform\"");
      } else if (init.contains("point")) {
        cfg.init_kind = "point";
        cfg.init_point = init.at("point").get<JointState>();
      } else if (init.contains("explicit")) {
        cfg.init_kind = "explicit";
        cfg.init_explicit = init.at("explicit").get<Dist>();
      } else {
        expect(false, "initial_distribution", "must be \"uniform\", {point: [...]} or {explicit: [...]}");
      }
    }

    if (doc.contains("modes")) cfg.modes = doc.at("modes").get<std::vector<std::string>>();
    for (const auto& mode : cfg.modes)
      expect(mode == "none" || mode == "camouflage" || mode == "spa" || mode == "budgeted",
             "modes", "unknown mode '" + mode + "'");
    if (doc.contains("budgets")) cfg.budgets = doc.at("budgets").get<std::vector<double>>();
    for (double b : cfg.budgets) expect(b >= 0.0, "budgets", "budgets must be >= 0");
    if (doc.contains("epsilon")) cfg.epsilon = doc.at("epsilon").get<double>();
    expect(cfg.epsilon > 0.0, "epsilon", "must be > 0");
    if (doc.contains("grid_resolution")) cfg.grid_resolution = doc.at("grid_resolution").get<int>();

    if (doc.contains("rotation_positive")) cfg.rotation_positive = doc.at("rotation_positive").get<bool>();
    if (doc.contains("rows_are_destination"))
      cfg.rows_are_destination = doc.at("rows_are_destination").get<bool>();
    if (doc.contains("spa_domain")) cfg.spa_domain = doc.at("spa_domain").get<std::string>();
    expect(cfg.spa_domain == "auto" || cfg.spa_domain == "truth" || cfg.spa_domain == "own-state" ||
               cfg.spa_domain == "env-config" || cfg.spa_domain == "both" ||
               cfg.spa_domain == "from-scheme",
           "spa_domain", "unknown domain '" + cfg.spa_domain + "'");
    if (doc.contains("bounds_sweep")) cfg.bounds_sweep = doc.at("bounds_sweep").get<bool>();
    if (doc.contains("sweep_attacker_positions"))
      cfg.sweep_attacker_positions = doc.at("sweep_attacker_positions").get<bool>();

    if (doc.contains("certify_attack_instances"))
      cfg.certify_attack_instances = doc.at("certify_attack_instances").get<int>();
    if (doc.contains("certify_budget_instances"))
      cfg.certify_budget_instances = doc.at("certify_budget_instances").get<int>();
    if (doc.contains("certify_theorem_instances"))
      cfg.certify_theorem_instances = doc.at("certify_theorem_instances").get<int>();
    if (doc.contains("certify_lemma_instances"))
      cfg.certify_lemma_instances = doc.at("certify_lemma_instances").get<int>();

    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("episodes")) cfg.episodes = doc.at("episodes").get<std::uint64_t>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed config document: ") + e.what());
  }
  if (std::find(cfg.modes.begin(), cfg.modes.end(), "budgeted") != cfg.modes.end())
    config_detail::expect(!cfg.budgets.empty(), "budgets", "budgeted mode needs a budget list");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json env;
  if (!cfg.preset.empty()) env["preset"] = cfg.preset;
  if (!cfg.inline_environment.is_null()) env["inline"] = cfg.inline_environment;
  if (cfg.attacker_positions) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [r, c] : *cfg.attacker_positions) cells.push_back({r, c});
    env["attacker_positions"] = cells;
  }
  if (cfg.board_side) env["board_side"] = *cfg.board_side;
  if (!cfg.ring_reward_table.is_null()) env["ring_reward_table"] = cfg.ring_reward_table;
  if (cfg.base_reward) env["base_reward"] = *cfg.base_reward;
  if (cfg.bonus_reward) env["bonus_reward"] = *cfg.bonus_reward;
  if (cfg.attacker_reward) env["attacker_reward"] = *cfg.attacker_reward;

  nlohmann::json init;
  if (cfg.init_kind == "uniform") init = "uniform";
  else if (cfg.init_kind == "point") init = nlohmann::json{{"point", cfg.init_point}};
  else init = nlohmann::json{{"explicit", cfg.init_explicit}};

  return nlohmann::json{{"environment", env},
                        {"num_recipients", cfg.num_recipients},
                        {"horizon", cfg.horizon},
                        {"initial_distribution", init},
                        {"modes", cfg.modes},
                        {"budgets", cfg.budgets},
                        {"epsilon", cfg.epsilon},
                        {"grid_resolution", cfg.grid_resolution},
                        {"rotation_positive", cfg.rotation_positive},
                        {"rows_are_destination", cfg.rows_are_destination},
                        {"spa_domain", cfg.spa_domain},
                        {"bounds_sweep", cfg.bounds_sweep},
                        {"sweep_attacker_positions", cfg.sweep_attacker_positions},
                        {"output_dir", cfg.output_dir},
                        {"episodes", cfg.episodes},
                        {"seed", cfg.seed}};
}

/// Resolved environment instance plus what is needed to rebuild variants.
struct ExperimentInstance {
  StageMdp mdp;
  CamouflageScheme scheme;
  std::string kind;  // "ring" | "chessboard"
  RingSpec ring_spec;
  ChessboardSpec chess_spec;
};

inline ExperimentInstance resolve_environment(const ExperimentConfig& cfg) {
  ExperimentInstance instance;
  if (!cfg.inline_environment.is_null()) {
    instance.kind = "inline";
    instance.mdp = mdp_from_json(cfg.inline_environment.at("mdp"));
    const auto& sch = cfg.inline_environment.at("scheme");
    const std::string kind = sch.at("kind").get<std::string>();
    if (kind == "ring-rotation") {
      const bool positive = sch.value("rotation_positive", cfg.rotation_positive);
      instance.scheme = make_rotation_scheme(instance.mdp.num_states, positive, 0);
    } else if (kind == "attacker-position") {
      const int q = sch.at("board_side").get<int>();
      std::vector<int> cells;
      for (const auto& cell : sch.at("attacker_cells"))
        cells.push_back(board_cell(q, cell.at(0).get<int>(), cell.at(1).get<int>()));
      instance.scheme = make_attacker_position_scheme(q, cells, instance.mdp.num_states);
    } else {
      throw std::invalid_argument("inline scheme kind must be ring-rotation or attacker-position");
    }
    const auto report = validate_scheme(instance.scheme, instance.mdp);
    if (!report.passed())
      throw std::invalid_argument("inline scheme failed validation:\n" + report.to_string());
    return instance;
  }

  if (cfg.preset == "ring-v1") {
    RingSpec spec;
    spec.horizon = cfg.horizon;
    spec.rotation_positive = cfg.rotation_positive;
    spec.rows_are_destination = cfg.rows_are_destination;
    if (!cfg.ring_reward_table.is_null()) {
      const auto table = cfg.ring_reward_table.get<std::vector<std::vector<double>>>();
      if (table.size() != 3 || table[0].size() != 3)
        throw std::invalid_argument("ring_reward_table must be 3x3");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          spec.reward_table[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
              table[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    instance.kind = "ring";
    instance.ring_spec = spec;
    std::tie(instance.mdp, instance.scheme) = build_ring(spec);
    return instance;
  }

  if (cfg.preset == "chessboard-3x3-v1" || cfg.preset == "chessboard-2x2-v1") {
    ChessboardSpec spec;
    spec.horizon = cfg.horizon;
    if (cfg.preset == "chessboard-3x3-v1") {
      spec.q = 3;
      spec.attacker_positions = {{1, 1}, {2, 1}};
    } else {
      spec.q = 2;
      spec.attacker_positions = {{0, 0}};
    }
    if (cfg.board_side) spec.q = *cfg.board_side;
    if (cfg.attacker_positions) spec.attacker_positions = *cfg.attacker_positions;
    if (cfg.base_reward) spec.base_reward = *cfg.base_reward;
    if (cfg.bonus_reward) spec.bonus_reward = *cfg.bonus_reward;
    if (cfg.attacker_reward) spec.attacker_reward = *cfg.attacker_reward;
    instance.kind = "chessboard";
    instance.chess_spec = spec;
    std::tie(instance.mdp, instance.scheme) = build_chessboard(spec);
    return instance;
  }

  throw std::invalid_argument("unknown preset '" + cfg.preset + "'");
}

inline SpaDomain resolve_spa_domain(const ExperimentConfig& cfg, const ExperimentInstance& instance) {
  std::string choice = cfg.spa_domain;
  if (choice == "auto") choice = (instance.kind == "chessboard") ? "env-config" : "own-state";
  if (choice == "truth") return SpaDomain{SpaDomainKind::TruthOnly};
  if (choice == "own-state") return SpaDomain{SpaDomainKind::OwnState};
  if (choice == "env-config") return SpaDomain{SpaDomainKind::EnvConfig};
  if (choice == "both") return SpaDomain{SpaDomainKind::OwnStateAndConfig};
  return SpaDomain{SpaDomainKind::FromScheme, &instance.scheme};
}

inline Dist resolve_init(const ExperimentConfig& cfg, const StageMdp& mdp) {
  if (cfg.init_kind == "uniform") return uniform_joint_dist(mdp.num_states, cfg.num_recipients);
  if (cfg.init_kind == "point") {
    if (static_cast<int>(cfg.init_point.size()) != cfg.num_recipients)
      throw std::invalid_argument("config field 'initial_distribution': point arity mismatch");
    return point_joint_dist(cfg.init_point, mdp.num_states);
  }
  Dist dist = cfg.init_explicit;
  if (dist.size() != joint_count(mdp.num_states, cfg.num_recipients))
    throw std::invalid_argument("config field 'initial_distribution': explicit size mismatch");
  check_distribution(dist);
  return dist;
}

namespace csv_detail {

inline std::string fmt9(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", v);
  return buffer;
}

}  // namespace csv_detail

/// Pass/fail summary per run-time invariant plus all emitted artifacts.
struct RunResult {
  std::vector<std::string> columns;                 // trajectory column names
  std::vector<std::vector<double>> trajectories;    // one per column
  nlohmann::json manifest;
  std::string trajectories_csv;
  std::string summary_csv;
  std::string bounds_csv;  // empty unless bounds_sweep
  bool invariants_ok = true;
};

namespace run_detail {

struct SingleRun {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> trajectories;
  bool ordering_ok = true;
  bool monotonicity_ok = true;
  nlohmann::json rollouts = nlohmann::json::object();
  bool rollouts_ok = true;
};

inline bool enabled(const ExperimentConfig& cfg, const std::string& mode) {
  return std::find(cfg.modes.begin(), cfg.modes.end(), mode) != cfg.modes.end();
}

/// Runs every enabled mode on one concrete instance.
inline SingleRun run_single(const ExperimentConfig& cfg, const ExperimentInstance& instance) {
  SingleRun out;
  const StageMdp& mdp = instance.mdp;
  const CamouflageScheme& scheme = instance.scheme;
  const int n = cfg.num_recipients;
  const int true_config = scheme.true_env_config();
  const PolicyFamily policy = solve_policy_family(mdp);
  const Dist init = resolve_init(cfg, mdp);
  const std::size_t joints = joint_count(mdp.num_states, n);

  const auto none_table = no_attack_value_table(mdp, policy, n, true_config);
  const auto none_traj = expected_reward_no_attack(mdp, policy, n, init, true_config);
  out.columns.push_back("no_attack");
  out.trajectories.push_back(none_traj);

  auto cross_check = [&](const std::string& name, const AttackPlan& plan, double exact_final,
                         const BudgetModel* budget) {
    if (cfg.episodes == 0) return;
    const auto stats =
        simulate_rollouts(mdp, policy, scheme, plan, init, n, cfg.episodes, cfg.seed, budget);
    const double slack = (stats.std_error == 0.0) ? 1e-9 : 4.0 * stats.std_error;
    const bool ok = std::abs(stats.mean - exact_final) <= slack;
    out.rollouts[name] = {{"mean", stats.mean},
                          {"std_error", stats.std_error},
                          {"episodes", stats.episodes},
                          {"exact", exact_final},
                          {"within_four_std_errors", ok}};
    out.rollouts_ok = out.rollouts_ok && ok;
  };

  if (enabled(cfg, "none"))
    cross_check("no_attack", identity_plan(scheme, mdp.horizon, joints), none_traj.back(), nullptr);

  std::optional<PlanResult> cam;
  if (enabled(cfg, "camouflage")) {
    cam = plan_camouflage(mdp, policy, scheme, n);
    const auto trajectory = evaluate_plan(mdp, policy, scheme, cam->plan, init, n);
    out.columns.push_back("camouflage");
    out.trajectories.push_back(trajectory);
    cross_check("camouflage", cam->plan, trajectory.back(), nullptr);
  }

  std::optional<PlanResult> spa;
  if (enabled(cfg, "spa")) {
    const SpaDomain domain = resolve_spa_domain(cfg, instance);
    spa = plan_state_perception(mdp, policy, n, domain, true_config);
    const auto trajectory = evaluate_plan(mdp, policy, scheme, spa->plan, init, n);
    out.columns.push_back("state_perception");
    out.trajectories.push_back(trajectory);
    cross_check("state_perception", spa->plan, trajectory.back(), nullptr);
  }

  if (cam && spa)
    out.ordering_ok =
        check_value_ordering(spa->values.pre, cam->values.pre, none_table).empty();
  else if (cam)
    out.ordering_ok = check_value_ordering(cam->values.pre, cam->values.pre, none_table).empty();
  else if (spa)
    out.ordering_ok = check_value_ordering(spa->values.pre, spa->values.pre, none_table).empty();

  // cumulative trajectories must stay ordered at every time index as well
  {
    const auto column = [&](const std::string& name) -> const std::vector<double>* {
      for (std::size_t c = 0; c < out.columns.size(); ++c)
        if (out.columns[c] == name) return &out.trajectories[c];
      return nullptr;
    };
    const auto* none_col = column("no_attack");
    const auto* cam_col = column("camouflage");
    const auto* spa_col = column("state_perception");
    for (int t = 0; t <= mdp.horizon; ++t) {
      const auto at = static_cast<std::size_t>(t);
      if (cam_col && (*cam_col)[at] > (*none_col)[at] + 1e-9) out.ordering_ok = false;
      if (spa_col && cam_col && (*spa_col)[at] > (*cam_col)[at] + 1e-9) out.ordering_ok = false;
      if (spa_col && !cam_col && (*spa_col)[at] > (*none_col)[at] + 1e-9) out.ordering_ok = false;
    }
  }

  if (enabled(cfg, "budgeted")) {
    std::optional<std::vector<std::vector<double>>> previous;
    double previous_budget = 0.0;
    for (double b : cfg.budgets) {
      const BudgetModel budget =
          (instance.kind == "chessboard")
              ? make_manhattan_budget_model(scheme, instance.chess_spec.q, b, cfg.epsilon)
              : make_absolute_difference_budget_model(scheme, b, cfg.epsilon);
      const auto result = plan_budgeted_camouflage(mdp, policy, scheme, budget, n);
      const auto trajectory = evaluate_plan(mdp, policy, scheme, result.plan, init, n, &budget);
      std::ostringstream column;
      column << "budget_" << csv_detail::fmt9(b);
      out.columns.push_back(column.str());
      out.trajectories.push_back(trajectory);
      cross_check(column.str(), result.plan, trajectory.back(), &budget);

      // larger refillable budgets can only help the attacker
      if (previous && b >= previous_budget) {
        for (std::size_t t = 0; t < result.values.pre.size() && out.monotonicity_ok; ++t)
          for (std::size_t j = 0; j < result.values.pre[t].size(); ++j)
            if (result.values.pre[t][j] > (*previous)[t][j] + 1e-9) {
              out.monotonicity_ok = false;
              break;
            }
      }
      previous = result.values.pre;
      previous_budget = b;
    }
  }
  return out;
}

}  // namespace run_detail

/**
 * Config-driven experiment: plans every enabled attack mode, evaluates exact
 * cumulative-reward trajectories, runs the enabled invariant checks and
 * writes trajectories.csv, summary.csv, optional bounds.csv and a
 * run_manifest.json echoing every resolved parameter into the output
 * directory. Returns the artifacts; invariants_ok mirrors the process exit
 * status.
 */
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  ExperimentInstance base = resolve_environment(cfg);

  run_detail::SingleRun run;
  int placements = 1;
  if (cfg.sweep_attacker_positions) {
    if (base.kind != "chessboard")
      throw std::invalid_argument("sweep_attacker_positions requires a chessboard environment");
    // average the per-placement trajectories of every mode uniformly
    std::vector<run_detail::SingleRun> runs;
    const auto all = enumerate_attacker_placements(
        base.chess_spec.q, static_cast<int>(base.chess_spec.attacker_positions.size()));
    placements = static_cast<int>(all.size());
    for (const auto& cells : all) {
      ExperimentInstance swept = base;
      swept.chess_spec.attacker_positions.clear();
      for (int cell : cells)
        swept.chess_spec.attacker_positions.emplace_back(cell / base.chess_spec.q,
                                                         cell % base.chess_spec.q);
      std::tie(swept.mdp, swept.scheme) = build_chessboard(swept.chess_spec);
      runs.push_back(run_detail::run_single(cfg, swept));
    }
    run = runs.front();
    for (std::size_t r = 1; r < runs.size(); ++r) {
      if (runs[r].columns != run.columns)
        throw std::logic_error("sweep runs disagree on columns");
      for (std::size_t c = 0; c < run.trajectories.size(); ++c)
        for (std::size_t t = 0; t < run.trajectories[c].size(); ++t)
          run.trajectories[c][t] += runs[r].trajectories[c][t];
      run.ordering_ok = run.ordering_ok && runs[r].ordering_ok;
      run.monotonicity_ok = run.monotonicity_ok && runs[r].monotonicity_ok;
      run.rollouts_ok = run.rollouts_ok && runs[r].rollouts_ok;
    }
    for (auto& trajectory : run.trajectories)
      for (double& v : trajectory) v /= static_cast<double>(placements);
    run.rollouts = nlohmann::json::object();  // per-placement rollouts not aggregated
  } else {
    run = run_detail::run_single(cfg, base);
  }
  result.columns = run.columns;
  result.trajectories = run.trajectories;

  // trajectories.csv
  {
    std::ostringstream csv;
    csv << "time_index";
    for (const auto& column : result.columns) csv << ',' << column;
    csv << '\n';
    for (int t = 0; t <= cfg.horizon; ++t) {
      csv << t;
      for (const auto& trajectory : result.trajectories)
        csv << ',' << csv_detail::fmt9(trajectory[static_cast<std::size_t>(t)]);
      csv << '\n';
    }
    result.trajectories_csv = csv.str();
  }

  // summary.csv
  const double no_attack_final = result.trajectories.front().back();
  {
    std::ostringstream csv;
    csv << "mode,final_value,ratio_vs_no_attack\n";
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
      const double final_value = result.trajectories[c].back();
      const double ratio = (no_attack_final != 0.0)
                               ? final_value / no_attack_final
                               : (final_value == 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN());
      csv << result.columns[c] << ',' << csv_detail::fmt9(final_value) << ','
          << csv_detail::fmt9(ratio) << '\n';
    }
    result.summary_csv = csv.str();
  }

  // bounds.csv via per-(stage, joint state) one-step gap checks
  bool bounds_ok = true;
  if (cfg.bounds_sweep) {
    const PolicyFamily policy = solve_policy_family(base.mdp);
    std::ostringstream csv;
    csv << "stage,joint_state,o1,o2,bound,holds\n";
    const std::size_t joints = joint_count(base.mdp.num_states, cfg.num_recipients);
    for (int t = 1; t <= cfg.horizon; ++t) {
      for (std::size_t j = 0; j < joints; ++j) {
        const JointState state = decode_joint(j, base.mdp.num_states, cfg.num_recipients);
        const GapReport report = shared_delusion_gap_check(base.mdp, policy, base.scheme, t, state);
        bounds_ok = bounds_ok && report.holds;
        csv << t << ',' << j << ',' << csv_detail::fmt9(report.constrained_optimum) << ','
            << csv_detail::fmt9(report.unconstrained_optimum) << ','
            << csv_detail::fmt9(report.bound) << ',' << (report.holds ? 1 : 0) << '\n';
      }
    }
    result.bounds_csv = csv.str();
  }

  // orientation report: ring ratios under all four flag combinations
  nlohmann::json orientation_report = nlohmann::json::array();
  if (base.kind == "ring") {
    for (const bool rotation_positive : {true, false}) {
      for (const bool rows_are_destination : {true, false}) {
        RingSpec spec = base.ring_spec;
        spec.rotation_positive = rotation_positive;
        spec.rows_are_destination = rows_are_destination;
        auto [mdp, scheme] = build_ring(spec);
        const PolicyFamily policy = solve_policy_family(mdp);
        const Dist init = resolve_init(cfg, mdp);
        const int n = cfg.num_recipients;
        const double none =
            expected_reward_no_attack(mdp, policy, n, init, scheme.true_env_config()).back();
        const auto cam = plan_camouflage(mdp, policy, scheme, n);
        const double cam_final =
            evaluate_plan(mdp, policy, scheme, cam.plan, init, n).back();
        const auto spa =
            plan_state_perception(mdp, policy, n, SpaDomain{SpaDomainKind::OwnState},
                                  scheme.true_env_config());
        const double spa_final =
            evaluate_plan(mdp, policy, scheme, spa.plan, init, n).back();
        orientation_report.push_back({{"rotation_positive", rotation_positive},
                                      {"rows_are_destination", rows_are_destination},
                                      {"no_attack_final", none},
                                      {"camouflage_ratio", cam_final / none},
                                      {"state_perception_ratio", spa_final / none}});
      }
    }
  }

  result.invariants_ok = run.ordering_ok && run.monotonicity_ok && run.rollouts_ok && bounds_ok;

  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  nlohmann::json summary_rows = nlohmann::json::object();
  for (std::size_t c = 0; c < result.columns.size(); ++c) {
    const double final_value = result.trajectories[c].back();
    summary_rows[result.columns[c]] = {
        {"final", final_value},
        {"ratio_vs_no_attack", no_attack_final != 0.0 ? final_value / no_attack_final : 1.0}};
  }
  result.manifest = {{"config", config_to_json(cfg)},
                     {"environment",
                      {{"kind", base.kind},
                       {"num_states", base.mdp.num_states},
                       {"num_actions", base.mdp.num_actions},
                       {"num_env_configs", base.mdp.num_configs()},
                       {"num_appearances", base.scheme.num_appearances()},
                       {"placements_averaged", placements}}},
                     {"results", summary_rows},
                     {"invariants",
                      {{"value_ordering", run.ordering_ok},
                       {"budget_monotonicity", run.monotonicity_ok},
                       {"monte_carlo_within_four_std_errors", run.rollouts_ok},
                       {"gap_bound_holds_everywhere", bounds_ok}}},
                     {"rollouts", run.rollouts},
                     {"elapsed_ms", elapsed.count()}};
  if (!orientation_report.empty()) result.manifest["orientation_report"] = orientation_report;

  // all file writes happen only once everything is computed
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(out_dir / name);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
    out << content;
  };
  write("trajectories.csv", result.trajectories_csv);
  write("summary.csv", result.summary_csv);
  if (cfg.bounds_sweep) write("bounds.csv", result.bounds_csv);
  write("run_manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

struct CertifyProperty {
  std::string name;
  bool passed = false;
  std::string witness;  // first failure, empty when passed
};

struct CertifyReport {
  std::vector<CertifyProperty> properties;

  bool all_passed() const {
    for (const auto& p : properties)
      if (!p.passed) return false;
    return true;
  }
};

/**
 * Reduced-scale certification: oracle equivalence of both planners, vertex
 * solver dominance over dense grids, the value-ordering invariant, budget
 * monotonicity, the one-step gap bound on the ring and on randomized shared
 * instances, the constrained-vs-free gap bound, and determinism of the exact
 * path under seed changes.
 */
inline CertifyReport certify(const ExperimentConfig& cfg) {
  CertifyReport report;
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  auto add = [&report](const std::string& name, bool passed, const std::string& witness) {
    report.properties.push_back({name, passed, passed ? std::string() : witness});
  };

  // planners equal the exhaustive oracle on random small instances
  {
    bool cam_ok = true, spa_ok = true;
    std::string cam_witness, spa_witness;
    for (int trial = 0; trial < cfg.certify_attack_instances; ++trial) {
      const auto instance = random_attack_instance(rng, 3, 2, 2, 4);
      const auto policy = solve_policy_family(instance.mdp);

      const auto cam = plan_camouflage(instance.mdp, policy, instance.scheme, instance.num_agents);
      double cam_value = 0.0;
      for (std::size_t j = 0; j < instance.init.size(); ++j)
        cam_value += instance.init[j] * cam.values.pre[0][j];
      const double cam_oracle =
          brute_force_attack_value(instance.mdp, policy, instance.scheme, instance.num_agents,
                                   OracleAttackMode::Camouflage, instance.init);
      if (std::abs(cam_value - cam_oracle) > 1e-9 && cam_ok) {
        cam_ok = false;
        cam_witness = "trial " + std::to_string(trial) + ": planner " + std::to_string(cam_value) +
                      " vs oracle " + std::to_string(cam_oracle);
      }

      const SpaDomain domain{SpaDomainKind::FromScheme, &instance.scheme};
      const auto spa = plan_state_perception(instance.mdp, policy, instance.num_agents, domain,
                                             instance.true_config);
      double spa_value = 0.0;
      for (std::size_t j = 0; j < instance.init.size(); ++j)
        spa_value += instance.init[j] * spa.values.pre[0][j];
      const double spa_oracle =
          brute_force_attack_value(instance.mdp, policy, instance.scheme, instance.num_agents,
                                   OracleAttackMode::StatePerception, instance.init, domain);
      if (std::abs(spa_value - spa_oracle) > 1e-9 && spa_ok) {
        spa_ok = false;
        spa_witness = "trial " + std::to_string(trial) + ": planner " + std::to_string(spa_value) +
                      " vs oracle " + std::to_string(spa_oracle);
      }
    }
    add("camouflage planner equals exhaustive oracle", cam_ok, cam_witness);
    add("state-perception planner equals exhaustive oracle", spa_ok, spa_witness);
  }

  // within-step solver never beaten by the dense grid
  {
    bool ok = true;
    std::string witness;
    std::uniform_real_distribution<double> value(0.0, 30.0);
    std::uniform_real_distribution<double> pick_budget(0.0, 5.0);
    std::uniform_int_distribution<int> pick_domain(2, 3);
    for (int trial = 0; trial < cfg.certify_budget_instances; ++trial) {
      CamouflageScheme scheme;
      scheme.kind = "table";
      for (int j = 0; j < 2; ++j) {
        CamouflageObject object;
        object.true_status = 0;
        const int d = pick_domain(rng);
        for (int k = 0; k < d; ++k) object.appearances.push_back(k);
        scheme.objects.push_back(object);
      }
      scheme.perception.assign(static_cast<std::size_t>(scheme.num_appearances()),
                               {{Perception{0, 0}}});
      BudgetModel budget = make_absolute_difference_budget_model(scheme, pick_budget(rng),
                                                                 cfg.epsilon);
      std::vector<std::vector<double>> layer(1);
      layer[0].resize(static_cast<std::size_t>(scheme.num_appearances()));
      for (double& v : layer[0]) v = value(rng);
      const auto exact = within_step_optimize(layer, 0, scheme, budget);
      const double grid = brute_force_budget_value(layer, 0, scheme, budget, 50);
      if (exact.value > grid + 1e-9 && ok) {
        ok = false;
        witness = "trial " + std::to_string(trial) + ": solver " + std::to_string(exact.value) +
                  " vs grid " + std::to_string(grid);
      }
    }
    add("within-step solver at or below dense grid", ok, witness);
  }

  // value ordering on random instances
  {
    bool ok = true;
    std::string witness;
    for (int trial = 0; trial < cfg.certify_attack_instances; ++trial) {
      const auto instance = random_attack_instance(rng, 3, 2, 2, 4);
      const auto policy = solve_policy_family(instance.mdp);
      const auto cam = plan_camouflage(instance.mdp, policy, instance.scheme, instance.num_agents);
      const SpaDomain domain{SpaDomainKind::FromScheme, &instance.scheme};
      const auto spa = plan_state_perception(instance.mdp, policy, instance.num_agents, domain,
                                             instance.true_config);
      const auto none = no_attack_value_table(instance.mdp, policy, instance.num_agents,
                                              instance.true_config);
      const auto violations = check_value_ordering(spa.values.pre, cam.values.pre, none);
      if (!violations.empty() && ok) {
        ok = false;
        witness = "trial " + std::to_string(trial) + ": stage " +
                  std::to_string(violations.front().stage) + " joint " +
                  std::to_string(violations.front().joint);
      }
    }
    add("value ordering spa <= camouflage <= no-attack", ok, witness);
  }

  // budget monotonicity and saturation on a reduced chessboard
  {
    ChessboardSpec spec;
    spec.q = 2;
    spec.horizon = 3;
    spec.attacker_positions = {{1, 0}};
    auto [mdp, scheme] = build_chessboard(spec);
    const auto policy = solve_policy_family(mdp);
    const int n = 2;
    bool monotone = true;
    std::string witness;
    std::optional<std::vector<std::vector<double>>> previous;
    double saturation = 0.0;
    {
      const auto probe = make_manhattan_budget_model(scheme, spec.q, 0.0, cfg.epsilon);
      for (const auto& row : probe.cost)
        saturation += *std::max_element(row.begin(), row.end());
    }
    for (double b : {0.0, 0.5, 1.0, 2.0, saturation}) {
      const auto budget = make_manhattan_budget_model(scheme, spec.q, b, cfg.epsilon);
      const auto result = plan_budgeted_camouflage(mdp, policy, scheme, budget, n);
      if (previous) {
        for (std::size_t t = 0; t < result.values.pre.size() && monotone; ++t)
          for (std::size_t j = 0; j < result.values.pre[t].size(); ++j)
            if (result.values.pre[t][j] > (*previous)[t][j] + 1e-9) {
              monotone = false;
              witness = "budget " + std::to_string(b);
              break;
            }
      }
      previous = result.values.pre;
    }
    add("budgeted values non-increasing in budget", monotone, witness);

    const auto saturated = plan_budgeted_camouflage(
        mdp, policy, scheme, make_manhattan_budget_model(scheme, spec.q, saturation, cfg.epsilon), n);
    const auto unconstrained = plan_camouflage(mdp, policy, scheme, n);
    bool saturated_ok = true;
    std::string saturation_witness;
    for (std::size_t t = 0; t < saturated.values.pre.size() && saturated_ok; ++t)
      for (std::size_t j = 0; j < saturated.values.pre[t].size(); ++j)
        if (std::abs(saturated.values.pre[t][j] - unconstrained.values.pre[t][j]) > 1e-9) {
          saturated_ok = false;
          saturation_witness = "stage " + std::to_string(t) + " joint " + std::to_string(j);
          break;
        }
    add("saturated budget equals unconstrained camouflage", saturated_ok, saturation_witness);
  }

  // one-step gap bound on the ring, every stage and joint state
  {
    auto [mdp, scheme] = build_ring(RingSpec{});
    const auto policy = solve_policy_family(mdp);
    bool ok = true;
    std::string witness;
    for (int t = 1; t <= mdp.horizon && ok; ++t)
      for (int s0 = 0; s0 < 3 && ok; ++s0)
        for (int s1 = 0; s1 < 3; ++s1) {
          const auto gap = shared_delusion_gap_check(mdp, policy, scheme, t, {s0, s1});
          if (!gap.holds) {
            ok = false;
            witness = "stage " + std::to_string(t) + " state (" + std::to_string(s0) + "," +
                      std::to_string(s1) + ")";
            break;
          }
        }
    add("one-step gap bound holds on the ring", ok, witness);
  }

  // one-step gap bound on randomized shared instances
  {
    bool ok = true;
    std::string witness;
    std::uniform_int_distribution<int> pick_agents(2, 3);
    std::uniform_int_distribution<int> pick_state(0, 2);
    for (int trial = 0; trial < cfg.certify_theorem_instances; ++trial) {
      const StageMdp mdp = random_mdp(rng, 3, 3, 2, 1);
      const auto policy = solve_policy_family(mdp);
      const auto scheme = random_table_scheme(rng, 3, 1, 0, 4);
      JointState actual;
      const int agents = pick_agents(rng);
      for (int i = 0; i < agents; ++i) actual.push_back(pick_state(rng));
      const auto gap = shared_delusion_gap_check(mdp, policy, scheme, 1, actual);
      if (!gap.holds && ok) {
        ok = false;
        witness = "trial " + std::to_string(trial);
      }
    }
    add("one-step gap bound holds on randomized instances", ok, witness);
  }

  // constrained-vs-free gap bound on random function tables
  {
    bool ok = true;
    std::string witness;
    std::uniform_int_distribution<int> pick_n(1, 4);
    std::uniform_int_distribution<int> pick_domain(1, 6);
    for (int trial = 0; trial < cfg.certify_lemma_instances; ++trial) {
      const auto functions = random_function_table(rng, pick_n(rng), pick_domain(rng));
      const auto gap = equality_constraint_gap(functions);
      if (!gap.holds && ok) {
        ok = false;
        witness = "trial " + std::to_string(trial);
      }
    }
    add("constrained-vs-free gap bound holds on randomized instances", ok, witness);
  }

  // exact path is seed-independent; rollout means stay within tolerance
  {
    auto [mdp, scheme] = build_ring(RingSpec{});
    const auto policy = solve_policy_family(mdp);
    const int n = 2;
    const Dist init = uniform_joint_dist(3, n);
    const auto cam = plan_camouflage(mdp, policy, scheme, n);
    const auto a = evaluate_plan(mdp, policy, scheme, cam.plan, init, n);
    const auto b = evaluate_plan(mdp, policy, scheme, cam.plan, init, n);
    bool ok = (a == b);
    std::string witness = ok ? "" : "exact trajectories differ across repeated evaluation";
    const auto roll_a = simulate_rollouts(mdp, policy, scheme, cam.plan, init, n, 5000, cfg.seed);
    const auto roll_b =
        simulate_rollouts(mdp, policy, scheme, cam.plan, init, n, 5000, cfg.seed + 1);
    if (ok && std::abs(roll_a.mean - a.back()) > 5.0 * roll_a.std_error) {
      ok = false;
      witness = "seeded rollout mean off the exact value";
    }
    if (ok && std::abs(roll_b.mean - a.back()) > 5.0 * roll_b.std_error) {
      ok = false;
      witness = "re-seeded rollout mean off the exact value";
    }
    add("exact values deterministic, rollout means seed-stable", ok, witness);
  }

  // reward-orientation sensitivity: ratios move, ordering still holds
  {
    bool ordering_ok = true;
    for (const bool rows_are_destination : {true, false}) {
      RingSpec spec;
      spec.rows_are_destination = rows_are_destination;
      auto [mdp, scheme] = build_ring(spec);
      const auto policy = solve_policy_family(mdp);
      const int n = 2;
      const auto cam = plan_camouflage(mdp, policy, scheme, n);
      const auto spa = plan_state_perception(mdp, policy, n, SpaDomain{SpaDomainKind::OwnState},
                                             scheme.true_env_config());
      const auto none = no_attack_value_table(mdp, policy, n, scheme.true_env_config());
      ordering_ok =
          ordering_ok && check_value_ordering(spa.values.pre, cam.values.pre, none).empty();
    }
    add("value ordering robust to reward-table orientation", ordering_ok,
        "ordering violated under transposed rewards");
  }

  return report;
}

}  // namespace camo
