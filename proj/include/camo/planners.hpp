#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "camo/attack_model.hpp"
#include "camo/mdp.hpp"

namespace camo {

/**
 * Attacker-side value functions over dynamic-programming states.
 * pre[t][joint] is V*_t at integer time indices t = 0..T (pre-attack, joint
 * true recipient states); post[t-1][joint][appearance] is V*_{t-0.5}
 * (post-attack, additionally carrying the appearance configuration chosen
 * during step t). pre[T] is identically zero.
 */
struct ValueTable {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<std::vector<double>>> post;
};

enum class AttackMode { Camouflage, StatePerception, Budgeted };

/// Budgeted attack decision at one (t, joint state): per attacker j the
/// targeted appearance (as a position in object j's domain) and the resources
/// spent on it.
struct BudgetAllocation {
  std::vector<int> target;
  std::vector<double> spend;
};

/// Per-stage, per-joint-state attack prescription. Only the table matching
/// `mode` is populated; all tables are indexed [t-1][joint].
struct AttackPlan {
  AttackMode mode = AttackMode::Camouflage;
  std::vector<std::vector<int>> appearance;
  std::vector<std::vector<std::vector<Perception>>> delusion;
  std::vector<std::vector<BudgetAllocation>> allocation;
};

struct PlanResult {
  AttackPlan plan;
  ValueTable values;
};

/**
 * Per-step refillable attack budget. cost[j][pos] is what a guaranteed
 * camouflage of object j into its pos-th appearance would cost (distance +
 * epsilon); spending b on it succeeds with probability min(b / cost, 1).
 */
struct BudgetModel {
  double budget = 0.0;
  double epsilon = 0.5;
  std::vector<std::vector<double>> cost;

  double success_probability(int object, int position, double spend) const {
    const double c = cost[static_cast<std::size_t>(object)][static_cast<std::size_t>(position)];
    if (spend <= 0.0) return 0.0;
    return std::min(spend / c, 1.0);
  }

  void validate(const CamouflageScheme& scheme) const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("budget model: epsilon must be positive");
    if (budget < 0.0) throw std::invalid_argument("budget model: budget must be >= 0");
    if (cost.size() != scheme.objects.size())
      throw std::invalid_argument("budget model: one cost row per object required");
    for (std::size_t j = 0; j < cost.size(); ++j) {
      if (cost[j].size() != scheme.objects[j].appearances.size())
        throw std::invalid_argument("budget model: cost row does not match appearance domain");
      for (double c : cost[j])
        if (!(c > 0.0)) throw std::invalid_argument("budget model: costs must be positive");
    }
  }
};

/// Cost = Manhattan distance between the object's true cell and the advertised
/// cell on a q x q board, plus epsilon.
inline BudgetModel make_manhattan_budget_model(const CamouflageScheme& scheme, int q, double budget,
                                               double epsilon = 0.5) {
  BudgetModel model;
  model.budget = budget;
  model.epsilon = epsilon;
  model.cost.resize(scheme.objects.size());
  for (std::size_t j = 0; j < scheme.objects.size(); ++j) {
    const int from = scheme.objects[j].true_status;
    for (int to : scheme.objects[j].appearances) {
      const int d = std::abs(from / q - to / q) + std::abs(from % q - to % q);
      model.cost[j].push_back(static_cast<double>(d) + epsilon);
    }
  }
  return model;
}

/// Cost = absolute difference of raw appearance values plus epsilon; generic
/// metric for synthetic instances.
inline BudgetModel make_absolute_difference_budget_model(const CamouflageScheme& scheme,
                                                         double budget, double epsilon = 0.5) {
  BudgetModel model;
  model.budget = budget;
  model.epsilon = epsilon;
  model.cost.resize(scheme.objects.size());
  for (std::size_t j = 0; j < scheme.objects.size(); ++j) {
    const int from = scheme.objects[j].true_status;
    for (int to : scheme.objects[j].appearances)
      model.cost[j].push_back(std::abs(from - to) + epsilon);
  }
  return model;
}

/// Which perceptions a state-perception attacker may plant, per agent.
/// FromScheme restricts to the perceptions the camouflage scheme can induce,
/// which guarantees the SPA value lower-bounds the camouflage value.
enum class SpaDomainKind { TruthOnly, OwnState, EnvConfig, OwnStateAndConfig, FromScheme };

struct SpaDomain {
  SpaDomainKind kind = SpaDomainKind::OwnState;
  const CamouflageScheme* scheme = nullptr;

  std::vector<Perception> candidates(int own_state, int true_config, const StageMdp& mdp,
                                     int agent) const {
    std::vector<Perception> out;
    switch (kind) {
      case SpaDomainKind::TruthOnly:
        out.push_back(Perception{own_state, true_config});
        break;
      case SpaDomainKind::OwnState:
        for (int s = 0; s < mdp.num_states; ++s) out.push_back(Perception{s, true_config});
        break;
      case SpaDomainKind::EnvConfig:
        for (int c = 0; c < mdp.num_configs(); ++c) out.push_back(Perception{own_state, c});
        break;
      case SpaDomainKind::OwnStateAndConfig:
        for (int s = 0; s < mdp.num_states; ++s)
          for (int c = 0; c < mdp.num_configs(); ++c) out.push_back(Perception{s, c});
        break;
      case SpaDomainKind::FromScheme: {
        if (scheme == nullptr)
          throw std::invalid_argument("FromScheme SPA domain needs a scheme");
        JointState actual(static_cast<std::size_t>(agent) + 1, 0);
        actual[static_cast<std::size_t>(agent)] = own_state;
        for (int id = 0; id < scheme->num_appearances(); ++id) {
          const Perception p = scheme->perceive(id, actual, agent);
          if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
        }
        break;
      }
    }
    if (out.empty()) throw std::invalid_argument("empty SPA perception domain");
    return out;
  }
};

namespace detail {

/// Expected one-step-return of the joint move phase of step `step` given the
/// per-agent actions: immediate true-configuration reward of all agents plus
/// the expectation of `value_next` over the joint successor.
inline double step_expectation(const StageMdp& mdp, const JointState& state,
                               const std::vector<int>& actions, int step, int true_config,
                               const std::vector<double>& value_next) {
  const int n = static_cast<int>(state.size());
  const int S = mdp.num_states;
  double reward = 0.0;
  for (int i = 0; i < n; ++i) {
    const int s = state[static_cast<std::size_t>(i)];
    const auto& row = mdp.row(step, s, actions[static_cast<std::size_t>(i)]);
    for (int next = 0; next < S; ++next)
      reward += row[static_cast<std::size_t>(next)] * mdp.rew(true_config, step, s, next);
  }
  double continuation = 0.0;
  auto expand = [&](auto&& self, int agent, std::size_t prefix, double mass) -> void {
    if (agent == n) {
      continuation += mass * value_next[prefix];
      return;
    }
    const auto& row = mdp.row(step, state[static_cast<std::size_t>(agent)],
                              actions[static_cast<std::size_t>(agent)]);
    for (int next = 0; next < S; ++next) {
      const double p = row[static_cast<std::size_t>(next)];
      if (p == 0.0) continue;
      self(self, agent + 1, prefix * static_cast<std::size_t>(S) + static_cast<std::size_t>(next),
           mass * p);
    }
  };
  expand(expand, 0, 0, 1.0);
  return reward + continuation;
}

inline std::vector<int> deluded_actions(const PolicyFamily& policy,
                                        const CamouflageScheme& scheme, int appearance_id,
                                        const JointState& state, int step) {
  std::vector<int> actions(state.size());
  for (int i = 0; i < static_cast<int>(state.size()); ++i) {
    const Perception p = scheme.perceive(appearance_id, state, i);
    actions[static_cast<std::size_t>(i)] = policy.act(p.env_config, step - 1, p.own_state);
  }
  return actions;
}

/// Appearance outcomes (id, probability) of a budgeted allocation: attacker j
/// independently succeeds with probability min(spend/cost, 1); on failure its
/// object keeps the truthful appearance.
inline std::vector<std::pair<int, double>> allocation_outcomes(const CamouflageScheme& scheme,
                                                               const BudgetModel& budget,
                                                               const BudgetAllocation& allocation) {
  const int m = static_cast<int>(scheme.objects.size());
  if (static_cast<int>(allocation.target.size()) != m ||
      static_cast<int>(allocation.spend.size()) != m)
    throw std::invalid_argument("allocation arity does not match the scheme");
  std::vector<double> p(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    p[static_cast<std::size_t>(j)] =
        budget.success_probability(j, allocation.target[static_cast<std::size_t>(j)],
                                   allocation.spend[static_cast<std::size_t>(j)]);
  std::vector<std::pair<int, double>> outcomes;
  std::vector<int> tuple(static_cast<std::size_t>(m));
  for (int mask = 0; mask < (1 << m); ++mask) {
    double prob = 1.0;
    for (int j = 0; j < m; ++j) {
      const bool success = (mask >> j) & 1;
      prob *= success ? p[static_cast<std::size_t>(j)] : 1.0 - p[static_cast<std::size_t>(j)];
      tuple[static_cast<std::size_t>(j)] =
          success ? scheme.objects[static_cast<std::size_t>(j)]
                        .appearances[static_cast<std::size_t>(allocation.target[static_cast<std::size_t>(j)])]
                  : scheme.objects[static_cast<std::size_t>(j)].true_status;
    }
    if (prob == 0.0) continue;
    outcomes.emplace_back(scheme.appearance_index(tuple), prob);
  }
  return outcomes;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/**
 * Between-step update: from the pre-attack layer V_t builds the post-attack
 * layer V_{t-0.5}(s_a, Y) for step t. Every agent moves according to the
 * policy evaluated at its perception of Y (stage index t-1); rewards are paid
 * against the true environment configuration.
 */
inline std::vector<std::vector<double>> post_move_update(const StageMdp& mdp,
                                                         const PolicyFamily& policy,
                                                         const CamouflageScheme& scheme,
                                                         int num_agents, int step,
                                                         const std::vector<double>& value_next) {
  const std::size_t joints = joint_count(mdp.num_states, num_agents);
  if (value_next.size() != joints)
    throw std::invalid_argument("post_move_update: V_t layer does not cover all joint states");
  if (step < 1 || step > mdp.horizon) throw std::out_of_range("post_move_update: step out of range");

  const int num_app = scheme.num_appearances();
  const int true_config = scheme.true_env_config();
  std::vector<std::vector<double>> layer(joints,
                                         std::vector<double>(static_cast<std::size_t>(num_app), 0.0));
  for (std::size_t j = 0; j < joints; ++j) {
    const JointState state = decode_joint(j, mdp.num_states, num_agents);
    for (int aid = 0; aid < num_app; ++aid) {
      const std::vector<int> actions = detail::deluded_actions(policy, scheme, aid, state, step);
      layer[j][static_cast<std::size_t>(aid)] =
          detail::step_expectation(mdp, state, actions, step, true_config, value_next);
    }
  }
  return layer;
}

/// Optimal unconstrained camouflage attack: per step the attackers pick one
/// shared appearance configuration minimizing the recipients' expected total
/// reward. Ties break to the lowest appearance id.
inline PlanResult plan_camouflage(const StageMdp& mdp, const PolicyFamily& policy,
                                  const CamouflageScheme& scheme, int num_agents) {
  const std::size_t joints = joint_count(mdp.num_states, num_agents);
  const int T = mdp.horizon;
  PlanResult result;
  result.plan.mode = AttackMode::Camouflage;
  result.plan.appearance.assign(static_cast<std::size_t>(T), std::vector<int>(joints, 0));
  result.values.pre.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(joints, 0.0));
  result.values.post.resize(static_cast<std::size_t>(T));

  for (int t = T; t >= 1; --t) {
    auto layer = post_move_update(mdp, policy, scheme, num_agents, t,
                                  result.values.pre[static_cast<std::size_t>(t)]);
    for (std::size_t j = 0; j < joints; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int best_id = 0;
      for (int aid = 0; aid < scheme.num_appearances(); ++aid) {
        const double v = layer[j][static_cast<std::size_t>(aid)];
        if (v < best) {
          best = v;
          best_id = aid;
        }
      }
      result.values.pre[static_cast<std::size_t>(t) - 1][j] = best;
      result.plan.appearance[static_cast<std::size_t>(t) - 1][j] = best_id;
    }
    result.values.post[static_cast<std::size_t>(t) - 1] = std::move(layer);
  }
  return result;
}

/**
 * Optimal free state-perception attack. Agents transition independently and
 * rewards are additive, so the joint minimization factorizes: one value table
 * per agent over own states, summed into the joint pre-attack layers. See
 * plan_state_perception_joint for the non-factorized cross-check path.
 */
inline PlanResult plan_state_perception(const StageMdp& mdp, const PolicyFamily& policy,
                                        int num_agents, const SpaDomain& domain, int true_config) {
  const int T = mdp.horizon;
  const int S = mdp.num_states;

  // per-agent backward induction over own states
  std::vector<std::vector<std::vector<double>>> value(
      static_cast<std::size_t>(num_agents),
      std::vector<std::vector<double>>(static_cast<std::size_t>(T) + 1,
                                       std::vector<double>(static_cast<std::size_t>(S), 0.0)));
  std::vector<std::vector<std::vector<Perception>>> best_delusion(
      static_cast<std::size_t>(num_agents),
      std::vector<std::vector<Perception>>(static_cast<std::size_t>(T),
                                           std::vector<Perception>(static_cast<std::size_t>(S))));
  for (int i = 0; i < num_agents; ++i) {
    for (int t = T; t >= 1; --t) {
      for (int s = 0; s < S; ++s) {
        const auto options = domain.candidates(s, true_config, mdp, i);
        double best = std::numeric_limits<double>::infinity();
        Perception best_p = options.front();
        for (const Perception& d : options) {
          const int a = policy.act(d.env_config, t - 1, d.own_state);
          const auto& row = mdp.row(t, s, a);
          double v = 0.0;
          for (int next = 0; next < S; ++next) {
            if (row[static_cast<std::size_t>(next)] == 0.0) continue;
            v += row[static_cast<std::size_t>(next)] *
                 (mdp.rew(true_config, t, s, next) +
                  value[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)][static_cast<std::size_t>(next)]);
          }
          if (v < best) {
            best = v;
            best_p = d;
          }
        }
        value[static_cast<std::size_t>(i)][static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(s)] = best;
        best_delusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(s)] = best_p;
      }
    }
  }

  const std::size_t joints = joint_count(S, num_agents);
  PlanResult result;
  result.plan.mode = AttackMode::StatePerception;
  result.plan.delusion.assign(static_cast<std::size_t>(T),
                              std::vector<std::vector<Perception>>(joints));
  result.values.pre.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(joints, 0.0));
  for (int t = 0; t <= T; ++t) {
    for (std::size_t j = 0; j < joints; ++j) {
      const JointState state = decode_joint(j, S, num_agents);
      double sum = 0.0;
      for (int i = 0; i < num_agents; ++i)
        sum += value[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]
                    [static_cast<std::size_t>(state[static_cast<std::size_t>(i)])];
      result.values.pre[static_cast<std::size_t>(t)][j] = sum;
      if (t < T) {
        auto& entry = result.plan.delusion[static_cast<std::size_t>(t)][j];
        entry.resize(static_cast<std::size_t>(num_agents));
        for (int i = 0; i < num_agents; ++i)
          entry[static_cast<std::size_t>(i)] =
              best_delusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]
                           [static_cast<std::size_t>(state[static_cast<std::size_t>(i)])];
      }
    }
  }
  return result;
}

/// Non-factorized state-perception attack: minimizes over the full product of
/// per-agent delusions at every joint state. Exponential in the agent count;
/// intended for cross-checking plan_state_perception on small instances.
inline PlanResult plan_state_perception_joint(const StageMdp& mdp, const PolicyFamily& policy,
                                              int num_agents, const SpaDomain& domain,
                                              int true_config) {
  const int T = mdp.horizon;
  const int S = mdp.num_states;
  const std::size_t joints = joint_count(S, num_agents);

  PlanResult result;
  result.plan.mode = AttackMode::StatePerception;
  result.plan.delusion.assign(static_cast<std::size_t>(T),
                              std::vector<std::vector<Perception>>(joints));
  result.values.pre.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(joints, 0.0));

  std::vector<int> actions(static_cast<std::size_t>(num_agents));
  std::vector<Perception> chosen(static_cast<std::size_t>(num_agents));
  for (int t = T; t >= 1; --t) {
    for (std::size_t j = 0; j < joints; ++j) {
      const JointState state = decode_joint(j, S, num_agents);
      std::vector<std::vector<Perception>> options(static_cast<std::size_t>(num_agents));
      for (int i = 0; i < num_agents; ++i)
        options[static_cast<std::size_t>(i)] =
            domain.candidates(state[static_cast<std::size_t>(i)], true_config, mdp, i);

      double best = std::numeric_limits<double>::infinity();
      std::vector<Perception> best_tuple;
      auto search = [&](auto&& self, int agent) -> void {
        if (agent == num_agents) {
          for (int i = 0; i < num_agents; ++i) {
            const Perception& d = chosen[static_cast<std::size_t>(i)];
            actions[static_cast<std::size_t>(i)] = policy.act(d.env_config, t - 1, d.own_state);
          }
          const double v = detail::step_expectation(
              mdp, state, actions, t, true_config,
              result.values.pre[static_cast<std::size_t>(t)]);
          if (v < best) {
            best = v;
            best_tuple = chosen;
          }
          return;
        }
        for (const Perception& d : options[static_cast<std::size_t>(agent)]) {
          chosen[static_cast<std::size_t>(agent)] = d;
          self(self, agent + 1);
        }
      };
      search(search, 0);
      result.values.pre[static_cast<std::size_t>(t) - 1][j] = best;
      result.plan.delusion[static_cast<std::size_t>(t) - 1][j] = best_tuple;
    }
  }
  return result;
}

enum class BudgetSolver { VertexEnumeration, GridSearch };

struct WithinStepResult {
  BudgetAllocation allocation;
  double value = 0.0;
};

/**
 * Within-step static optimization: given the post-attack layer V_{t+0.5} at a
 * joint true state, jointly picks camouflage targets and a budget allocation
 * minimizing the expected value over independent success outcomes.
 *
 * For each discrete target assignment the objective is multilinear in the
 * success probabilities p_j = min(b_j / C_j, 1) over the polytope
 * {p in [0,1]^m : sum_j C_j p_j <= B}. Along box edges it is linear, so the
 * only candidates besides the polytope vertices are critical points on the
 * budget edge, where the restriction is quadratic (for two attackers the
 * mixed coefficient V00 - V10 - V01 + V11 can make it convex with an
 * interior minimum). The exact solver enumerates vertices plus those edge
 * critical points and is exact for m <= 2; larger attacker teams use the
 * grid solver, which evaluates spends on a uniform lattice of the budget
 * simplex and doubles as a validation mode.
 */
inline WithinStepResult within_step_optimize(const std::vector<std::vector<double>>& value_post,
                                             std::size_t joint, const CamouflageScheme& scheme,
                                             const BudgetModel& budget_model,
                                             BudgetSolver solver = BudgetSolver::VertexEnumeration,
                                             int grid_resolution = 100) {
  budget_model.validate(scheme);
  const int m = static_cast<int>(scheme.objects.size());
  if (joint >= value_post.size())
    throw std::out_of_range("within_step_optimize: joint state out of range");
  if (solver == BudgetSolver::VertexEnumeration && m > 2)
    throw std::invalid_argument(
        "within_step_optimize: exact enumeration supports at most 2 attackers; use grid mode");
  if (solver == BudgetSolver::GridSearch && grid_resolution < 1)
    throw std::invalid_argument("within_step_optimize: grid resolution must be >= 1");

  const auto& values = value_post[joint];
  const double B = budget_model.budget;

  WithinStepResult best;
  best.value = std::numeric_limits<double>::infinity();

  std::vector<int> target(static_cast<std::size_t>(m));
  std::vector<double> pattern_value(static_cast<std::size_t>(1) << m);
  std::vector<double> costs(static_cast<std::size_t>(m));
  std::vector<int> tuple(static_cast<std::size_t>(m));

  auto objective = [&](const std::vector<double>& p) {
    double total = 0.0;
    for (int mask = 0; mask < (1 << m); ++mask) {
      double prob = 1.0;
      for (int j = 0; j < m; ++j)
        prob *= ((mask >> j) & 1) ? p[static_cast<std::size_t>(j)]
                                  : 1.0 - p[static_cast<std::size_t>(j)];
      if (prob != 0.0) total += prob * pattern_value[static_cast<std::size_t>(mask)];
    }
    return total;
  };

  auto consider = [&](const std::vector<double>& p) {
    const double v = objective(p);
    if (v < best.value) {
      best.value = v;
      best.allocation.target = target;
      best.allocation.spend.resize(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j)
        best.allocation.spend[static_cast<std::size_t>(j)] =
            p[static_cast<std::size_t>(j)] * costs[static_cast<std::size_t>(j)];
    }
  };

  auto evaluate_assignment = [&]() {
    for (int j = 0; j < m; ++j)
      costs[static_cast<std::size_t>(j)] =
          budget_model.cost[static_cast<std::size_t>(j)][static_cast<std::size_t>(target[static_cast<std::size_t>(j)])];
    for (int mask = 0; mask < (1 << m); ++mask) {
      for (int j = 0; j < m; ++j) {
        const auto& obj = scheme.objects[static_cast<std::size_t>(j)];
        tuple[static_cast<std::size_t>(j)] =
            ((mask >> j) & 1) ? obj.appearances[static_cast<std::size_t>(target[static_cast<std::size_t>(j)])]
                              : obj.true_status;
      }
      pattern_value[static_cast<std::size_t>(mask)] =
          values[static_cast<std::size_t>(scheme.appearance_index(tuple))];
    }

    if (solver == BudgetSolver::VertexEnumeration) {
      std::vector<double> p(static_cast<std::size_t>(m), 0.0);
      // vertices with every coordinate at a bound
      for (int mask = 0; mask < (1 << m); ++mask) {
        double spent = 0.0;
        for (int j = 0; j < m; ++j) {
          p[static_cast<std::size_t>(j)] = ((mask >> j) & 1) ? 1.0 : 0.0;
          spent += p[static_cast<std::size_t>(j)] * costs[static_cast<std::size_t>(j)];
        }
        if (spent <= B + 1e-12) consider(p);
      }
      // vertices on the budget hyperplane: one free coordinate, rest at bounds
      for (int k = 0; k < m; ++k) {
        for (int mask = 0; mask < (1 << m); ++mask) {
          if ((mask >> k) & 1) continue;
          double spent = 0.0;
          for (int j = 0; j < m; ++j) {
            if (j == k) continue;
            p[static_cast<std::size_t>(j)] = ((mask >> j) & 1) ? 1.0 : 0.0;
            spent += p[static_cast<std::size_t>(j)] * costs[static_cast<std::size_t>(j)];
          }
          const double free = (B - spent) / costs[static_cast<std::size_t>(k)];
          if (free > 0.0 && free < 1.0) {
            p[static_cast<std::size_t>(k)] = free;
            consider(p);
          }
        }
      }
      // interior critical point of the quadratic restriction to the budget
      // edge p0 C0 + p1 C1 = B
      if (m == 2) {
        const double c0 = costs[0];
        const double c1 = costs[1];
        const double lo = std::max(0.0, (B - c1) / c0);
        const double hi = std::min(1.0, B / c0);
        if (hi - lo > 1e-12) {
          auto edge_point = [&](double u) {
            const double v = std::clamp((B - c0 * u) / c1, 0.0, 1.0);
            return std::vector<double>{u, v};
          };
          const double mid = 0.5 * (lo + hi);
          const double h = 0.5 * (hi - lo);
          const double f_lo = objective(edge_point(lo));
          const double f_mid = objective(edge_point(mid));
          const double f_hi = objective(edge_point(hi));
          const double curvature = f_lo - 2.0 * f_mid + f_hi;  // 2 alpha h^2
          if (curvature > 0.0) {
            const double slope = (f_hi - f_lo) / (2.0 * h);
            const double u_star = mid - slope * h * h / curvature;
            if (u_star > lo && u_star < hi) consider(edge_point(u_star));
          }
        }
      }
    } else {
      std::vector<double> spend(static_cast<std::size_t>(m), 0.0);
      std::vector<double> p(static_cast<std::size_t>(m), 0.0);
      const double step = B / static_cast<double>(grid_resolution);
      auto sweep = [&](auto&& self, int j, double remaining) -> void {
        if (j == m) {
          for (int i = 0; i < m; ++i)
            p[static_cast<std::size_t>(i)] = budget_model.success_probability(
                i, target[static_cast<std::size_t>(i)], spend[static_cast<std::size_t>(i)]);
          consider(p);
          return;
        }
        for (int i = 0; i <= grid_resolution; ++i) {
          const double b = (B == 0.0) ? 0.0 : static_cast<double>(i) * step;
          if (b > remaining + 1e-12) break;
          spend[static_cast<std::size_t>(j)] = b;
          self(self, j + 1, remaining - b);
          if (B == 0.0) break;
        }
      };
      sweep(sweep, 0, B);
    }
  };

  auto assignments = [&](auto&& self, int j) -> void {
    if (j == m) {
      evaluate_assignment();
      return;
    }
    const int domain_size = static_cast<int>(scheme.objects[static_cast<std::size_t>(j)].appearances.size());
    for (int pos = 0; pos < domain_size; ++pos) {
      target[static_cast<std::size_t>(j)] = pos;
      self(self, j + 1);
    }
  };
  assignments(assignments, 0);

  return best;
}

/// Budget-constrained camouflage attack: alternates the between-step move
/// update with the within-step allocation optimization from t = T down to 0.
/// The budget refills every step.
inline PlanResult plan_budgeted_camouflage(const StageMdp& mdp, const PolicyFamily& policy,
                                           const CamouflageScheme& scheme,
                                           const BudgetModel& budget_model, int num_agents,
                                           BudgetSolver solver = BudgetSolver::VertexEnumeration,
                                           int grid_resolution = 100) {
  budget_model.validate(scheme);
  const std::size_t joints = joint_count(mdp.num_states, num_agents);
  const int T = mdp.horizon;
  PlanResult result;
  result.plan.mode = AttackMode::Budgeted;
  result.plan.allocation.assign(static_cast<std::size_t>(T), std::vector<BudgetAllocation>(joints));
  result.values.pre.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(joints, 0.0));
  result.values.post.resize(static_cast<std::size_t>(T));

  for (int t = T; t >= 1; --t) {
    auto layer = post_move_update(mdp, policy, scheme, num_agents, t,
                                  result.values.pre[static_cast<std::size_t>(t)]);
    for (std::size_t j = 0; j < joints; ++j) {
      WithinStepResult chosen = within_step_optimize(layer, j, scheme, budget_model, solver,
                                                     grid_resolution);
      result.values.pre[static_cast<std::size_t>(t) - 1][j] = chosen.value;
      result.plan.allocation[static_cast<std::size_t>(t) - 1][j] = std::move(chosen.allocation);
    }
    result.values.post[static_cast<std::size_t>(t) - 1] = std::move(layer);
  }
  return result;
}

/// No-attack value table in the planners' layout: agents are independent and
/// identically rewarded, so the joint value is the sum of the recipients' own
/// optimal values.
inline std::vector<std::vector<double>> no_attack_value_table(const StageMdp& mdp,
                                                              const PolicyFamily& policy,
                                                              int num_agents, int true_config) {
  const std::size_t joints = joint_count(mdp.num_states, num_agents);
  std::vector<std::vector<double>> table(static_cast<std::size_t>(mdp.horizon) + 1,
                                         std::vector<double>(joints, 0.0));
  for (int t = 0; t <= mdp.horizon; ++t) {
    for (std::size_t j = 0; j < joints; ++j) {
      const JointState state = decode_joint(j, mdp.num_states, num_agents);
      double sum = 0.0;
      for (int s : state) sum += policy.val(true_config, t, s);
      table[static_cast<std::size_t>(t)][j] = sum;
    }
  }
  return table;
}

/// Camouflage plan that always shows the truthful appearance.
inline AttackPlan identity_plan(const CamouflageScheme& scheme, int horizon, std::size_t joints) {
  AttackPlan plan;
  plan.mode = AttackMode::Camouflage;
  plan.appearance.assign(static_cast<std::size_t>(horizon),
                         std::vector<int>(joints, scheme.identity_appearance()));
  return plan;
}

/**
 * Exact forward evaluation of an attack plan: cumulative expected total
 * reward at time indices 0..T, propagating the joint-state distribution and
 * mixing over stochastic camouflage outcomes for budgeted plans. The final
 * entry equals the init-average of the plan's V*_0.
 */
inline std::vector<double> evaluate_plan(const StageMdp& mdp, const PolicyFamily& policy,
                                         const CamouflageScheme& scheme, const AttackPlan& plan,
                                         const Dist& init, int num_agents,
                                         const BudgetModel* budget_model = nullptr) {
  check_distribution(init);
  const int S = mdp.num_states;
  const int T = mdp.horizon;
  const std::size_t joints = joint_count(S, num_agents);
  if (init.size() != joints) throw std::invalid_argument("evaluate_plan: init size mismatch");
  if (plan.mode == AttackMode::Budgeted && budget_model == nullptr)
    throw std::invalid_argument("evaluate_plan: budgeted plan needs its budget model");

  auto check_cover = [&](std::size_t outer) {
    if (outer != static_cast<std::size_t>(T))
      throw std::invalid_argument("evaluate_plan: plan does not cover every step");
  };
  switch (plan.mode) {
    case AttackMode::Camouflage: check_cover(plan.appearance.size()); break;
    case AttackMode::StatePerception: check_cover(plan.delusion.size()); break;
    case AttackMode::Budgeted: check_cover(plan.allocation.size()); break;
  }

  const int true_config = scheme.true_env_config();
  std::vector<double> trajectory(static_cast<std::size_t>(T) + 1, 0.0);
  Dist dist = init;

  for (int t = 1; t <= T; ++t) {
    Dist next_dist(joints, 0.0);
    double step_reward = 0.0;
    for (std::size_t src = 0; src < joints; ++src) {
      const double mass = dist[src];
      if (mass == 0.0) continue;
      const JointState state = decode_joint(src, S, num_agents);

      // (actions, probability) branches induced by the plan at (t, src)
      std::vector<std::pair<std::vector<int>, double>> branches;
      if (plan.mode == AttackMode::Camouflage) {
        const int aid = plan.appearance[static_cast<std::size_t>(t) - 1][src];
        branches.emplace_back(detail::deluded_actions(policy, scheme, aid, state, t), 1.0);
      } else if (plan.mode == AttackMode::StatePerception) {
        const auto& delusions = plan.delusion[static_cast<std::size_t>(t) - 1][src];
        if (delusions.size() != static_cast<std::size_t>(num_agents))
          throw std::invalid_argument("evaluate_plan: delusion arity mismatch");
        std::vector<int> actions(static_cast<std::size_t>(num_agents));
        for (int i = 0; i < num_agents; ++i)
          actions[static_cast<std::size_t>(i)] =
              policy.act(delusions[static_cast<std::size_t>(i)].env_config, t - 1,
                         delusions[static_cast<std::size_t>(i)].own_state);
        branches.emplace_back(std::move(actions), 1.0);
      } else {
        const auto outcomes = detail::allocation_outcomes(
            scheme, *budget_model, plan.allocation[static_cast<std::size_t>(t) - 1][src]);
        for (const auto& [aid, prob] : outcomes)
          branches.emplace_back(detail::deluded_actions(policy, scheme, aid, state, t), prob);
      }

      for (const auto& [actions, branch_prob] : branches) {
        const double branch_mass = mass * branch_prob;
        for (int i = 0; i < num_agents; ++i) {
          const int s = state[static_cast<std::size_t>(i)];
          const auto& row = mdp.row(t, s, actions[static_cast<std::size_t>(i)]);
          for (int next = 0; next < S; ++next)
            step_reward += branch_mass * row[static_cast<std::size_t>(next)] *
                           mdp.rew(true_config, t, s, next);
        }
        auto expand = [&](auto&& self, int agent, std::size_t prefix, double p) -> void {
          if (agent == num_agents) {
            next_dist[prefix] += p;
            return;
          }
          const auto& row = mdp.row(t, state[static_cast<std::size_t>(agent)],
                                    actions[static_cast<std::size_t>(agent)]);
          for (int next = 0; next < S; ++next) {
            if (row[static_cast<std::size_t>(next)] == 0.0) continue;
            self(self, agent + 1,
                 prefix * static_cast<std::size_t>(S) + static_cast<std::size_t>(next),
                 p * row[static_cast<std::size_t>(next)]);
          }
        };
        expand(expand, 0, 0, branch_mass);
      }
    }
    trajectory[static_cast<std::size_t>(t)] = trajectory[static_cast<std::size_t>(t) - 1] + step_reward;
    dist = std::move(next_dist);
  }
  return trajectory;
}

struct RolloutStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t episodes = 0;
};

/// Monte Carlo cross-check of evaluate_plan: samples complete episodes under
/// the plan (including stochastic camouflage success) and reports the mean
/// total reward with its standard error. Episodes draw independent generators
/// derived from the seed, so results are reproducible.
inline RolloutStats simulate_rollouts(const StageMdp& mdp, const PolicyFamily& policy,
                                      const CamouflageScheme& scheme, const AttackPlan& plan,
                                      const Dist& init, int num_agents, std::uint64_t episodes,
                                      std::uint64_t seed, const BudgetModel* budget_model = nullptr) {
  if (episodes < 1) throw std::invalid_argument("simulate_rollouts: episodes must be >= 1");
  check_distribution(init);
  if (plan.mode == AttackMode::Budgeted && budget_model == nullptr)
    throw std::invalid_argument("simulate_rollouts: budgeted plan needs its budget model");
  const int S = mdp.num_states;
  const int T = mdp.horizon;
  const int true_config = scheme.true_env_config();

  auto sample_index = [](const std::vector<double>& weights, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  };

  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t e = 0; e < episodes; ++e) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(e + 1)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    JointState state = decode_joint(static_cast<std::size_t>(sample_index(init, unit(rng))), S,
                                    num_agents);
    double total = 0.0;
    for (int t = 1; t <= T; ++t) {
      const std::size_t src = joint_index(state, S);
      std::vector<int> actions(static_cast<std::size_t>(num_agents));
      if (plan.mode == AttackMode::StatePerception) {
        const auto& delusions = plan.delusion[static_cast<std::size_t>(t) - 1][src];
        for (int i = 0; i < num_agents; ++i)
          actions[static_cast<std::size_t>(i)] =
              policy.act(delusions[static_cast<std::size_t>(i)].env_config, t - 1,
                         delusions[static_cast<std::size_t>(i)].own_state);
      } else {
        int aid;
        if (plan.mode == AttackMode::Camouflage) {
          aid = plan.appearance[static_cast<std::size_t>(t) - 1][src];
        } else {
          const auto& alloc = plan.allocation[static_cast<std::size_t>(t) - 1][src];
          std::vector<int> tuple(scheme.objects.size());
          for (std::size_t j = 0; j < scheme.objects.size(); ++j) {
            const double p = budget_model->success_probability(
                static_cast<int>(j), alloc.target[j], alloc.spend[j]);
            tuple[j] = (unit(rng) < p)
                           ? scheme.objects[j].appearances[static_cast<std::size_t>(alloc.target[j])]
                           : scheme.objects[j].true_status;
          }
          aid = scheme.appearance_index(tuple);
        }
        actions = detail::deluded_actions(policy, scheme, aid, state, t);
      }

      JointState next(static_cast<std::size_t>(num_agents));
      for (int i = 0; i < num_agents; ++i) {
        const int s = state[static_cast<std::size_t>(i)];
        const auto& row = mdp.row(t, s, actions[static_cast<std::size_t>(i)]);
        next[static_cast<std::size_t>(i)] = sample_index(row, unit(rng));
        total += mdp.rew(true_config, t, s, next[static_cast<std::size_t>(i)]);
      }
      state = std::move(next);
    }
    sum += total;
    sum_sq += total * total;
  }

  RolloutStats stats;
  stats.episodes = episodes;
  stats.mean = sum / static_cast<double>(episodes);
  if (episodes > 1) {
    const double n = static_cast<double>(episodes);
    const double variance = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    stats.std_error = std::sqrt(variance / n);
  }
  return stats;
}

struct OrderingViolation {
  int stage = 0;
  std::size_t joint = 0;
  double spa = 0.0;
  double camouflage = 0.0;
  double no_attack = 0.0;
};

/// Verifies V_spa <= V_camouflage <= V_no_attack at every (t, joint state).
inline std::vector<OrderingViolation> check_value_ordering(
    const std::vector<std::vector<double>>& spa, const std::vector<std::vector<double>>& camouflage,
    const std::vector<std::vector<double>>& no_attack, double tol = 1e-9) {
  std::vector<OrderingViolation> violations;
  for (std::size_t t = 0; t < no_attack.size(); ++t) {
    for (std::size_t j = 0; j < no_attack[t].size(); ++j) {
      const double v_spa = spa[t][j];
      const double v_cam = camouflage[t][j];
      const double v_none = no_attack[t][j];
      if (v_spa > v_cam + tol || v_cam > v_none + tol)
        violations.push_back({static_cast<int>(t), j, v_spa, v_cam, v_none});
    }
  }
  return violations;
}

}  // namespace camo
