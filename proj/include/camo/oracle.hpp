#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "camo/attack_model.hpp"
#include "camo/mdp.hpp"
#include "camo/planners.hpp"

namespace camo {

/// Caps that keep exhaustive certification tractable. The evaluators estimate
/// their enumeration size up front and refuse instances above max_nodes.
struct OracleBudget {
  std::uint64_t max_nodes = 50'000'000;
  int max_states = 4;
  int max_agents = 2;
  int max_horizon = 3;
  int max_appearances = 16;
  int min_grid_resolution = 10;
};

enum class OracleAttackMode { Camouflage, StatePerception };

namespace oracle_detail {

// The evaluators below deliberately re-derive everything from the raw tables
// (perception, policy lookup, transition rows) instead of reusing the
// planners' update machinery, so that agreement between the two is a real
// cross-check.

inline double spa_option_count(const StageMdp& mdp, const SpaDomain& domain,
                               const JointState& state, int true_config) {
  double count = 1.0;
  for (int i = 0; i < static_cast<int>(state.size()); ++i)
    count *= static_cast<double>(
        domain.candidates(state[static_cast<std::size_t>(i)], true_config, mdp, i).size());
  return count;
}

}  // namespace oracle_detail

/**
 * Exact minimum expected total reward over all deterministic attack policies,
 * computed by exhausting every attack choice at every reachable decision
 * point of the game tree. mode selects shared appearance configurations
 * (camouflage) or free per-agent delusions (state perception, drawn from
 * `domain`).
 */
inline double brute_force_attack_value(const StageMdp& mdp, const PolicyFamily& policy,
                                       const CamouflageScheme& scheme, int num_agents,
                                       OracleAttackMode mode, const Dist& init,
                                       const SpaDomain& domain = {},
                                       const OracleBudget& budget = {}) {
  check_distribution(init);
  const int S = mdp.num_states;
  const int T = mdp.horizon;
  if (init.size() != joint_count(S, num_agents))
    throw std::invalid_argument("brute_force_attack_value: init size mismatch");
  if (S > budget.max_states || num_agents > budget.max_agents || T > budget.max_horizon)
    throw std::invalid_argument("brute_force_attack_value: instance exceeds the oracle budget");
  if (mode == OracleAttackMode::Camouflage && scheme.num_appearances() > budget.max_appearances)
    throw std::invalid_argument("brute_force_attack_value: appearance set exceeds the oracle budget");

  const int true_config = scheme.true_env_config();

  // conservative node estimate: (choices * successor fanout)^T per start
  double per_level = static_cast<double>(joint_count(S, num_agents));
  if (mode == OracleAttackMode::Camouflage) {
    per_level *= static_cast<double>(scheme.num_appearances());
  } else {
    double worst = 1.0;
    for (std::size_t j = 0; j < joint_count(S, num_agents); ++j) {
      const JointState state = decode_joint(j, S, num_agents);
      worst = std::max(worst, oracle_detail::spa_option_count(mdp, domain, state, true_config));
    }
    per_level *= worst;
  }
  double estimate = static_cast<double>(joint_count(S, num_agents));
  for (int t = 0; t < T; ++t) estimate *= per_level;
  if (estimate > static_cast<double>(budget.max_nodes))
    throw std::invalid_argument("brute_force_attack_value: enumeration budget exceeded");

  // expectation of (step reward + recurse) over the joint successor under
  // fixed per-agent actions
  auto outcome_value = [&](auto&& value_fn, const JointState& state,
                           const std::vector<int>& actions, int t) -> double {
    double total = 0.0;
    JointState next(static_cast<std::size_t>(num_agents), 0);
    auto walk = [&](auto&& self, int agent, double prob, double reward) -> void {
      if (agent == num_agents) {
        total += prob * (reward + value_fn(value_fn, next, t + 1));
        return;
      }
      const int s = state[static_cast<std::size_t>(agent)];
      const auto& row = mdp.row(t + 1, s, actions[static_cast<std::size_t>(agent)]);
      for (int nxt = 0; nxt < S; ++nxt) {
        const double p = row[static_cast<std::size_t>(nxt)];
        if (p == 0.0) continue;
        next[static_cast<std::size_t>(agent)] = nxt;
        self(self, agent + 1, prob * p, reward + mdp.rew(true_config, t + 1, s, nxt));
      }
    };
    walk(walk, 0, 1.0, 0.0);
    return total;
  };

  auto value = [&](auto&& self, const JointState& state, int t) -> double {
    if (t == T) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    if (mode == OracleAttackMode::Camouflage) {
      std::vector<int> actions(static_cast<std::size_t>(num_agents));
      for (int aid = 0; aid < scheme.num_appearances(); ++aid) {
        for (int i = 0; i < num_agents; ++i) {
          const Perception p = scheme.perceive(aid, state, i);
          actions[static_cast<std::size_t>(i)] = policy.act(p.env_config, t, p.own_state);
        }
        best = std::min(best, outcome_value(self, state, actions, t));
      }
    } else {
      std::vector<std::vector<Perception>> options(static_cast<std::size_t>(num_agents));
      for (int i = 0; i < num_agents; ++i)
        options[static_cast<std::size_t>(i)] =
            domain.candidates(state[static_cast<std::size_t>(i)], true_config, mdp, i);
      std::vector<int> actions(static_cast<std::size_t>(num_agents));
      auto assign = [&](auto&& inner, int agent) -> void {
        if (agent == num_agents) {
          best = std::min(best, outcome_value(self, state, actions, t));
          return;
        }
        for (const Perception& d : options[static_cast<std::size_t>(agent)]) {
          actions[static_cast<std::size_t>(agent)] = policy.act(d.env_config, t, d.own_state);
          inner(inner, agent + 1);
        }
      };
      assign(assign, 0);
    }
    return best;
  };

  double total = 0.0;
  for (std::size_t j = 0; j < init.size(); ++j) {
    if (init[j] == 0.0) continue;
    total += init[j] * value(value, decode_joint(j, S, num_agents), 0);
  }
  return total;
}

/**
 * Dense grid evaluation of the within-step budgeted objective at one joint
 * state: minimum over all target assignments and all lattice allocations of
 * the budget simplex. Upper-bounds the true optimum; used to certify the
 * vertex solver.
 */
inline double brute_force_budget_value(const std::vector<std::vector<double>>& value_post,
                                       std::size_t joint, const CamouflageScheme& scheme,
                                       const BudgetModel& budget_model, int resolution,
                                       const OracleBudget& budget = {}) {
  budget_model.validate(scheme);
  const int m = static_cast<int>(scheme.objects.size());
  if (m > 3) throw std::invalid_argument("brute_force_budget_value: at most 3 attackers");
  if (resolution < budget.min_grid_resolution)
    throw std::invalid_argument("brute_force_budget_value: grid resolution below the oracle floor");
  if (joint >= value_post.size())
    throw std::out_of_range("brute_force_budget_value: joint state out of range");
  const auto& values = value_post[joint];
  const double B = budget_model.budget;

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> target(static_cast<std::size_t>(m), 0);
  std::vector<double> spend(static_cast<std::size_t>(m), 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(m), 0);

  auto expected_value = [&]() {
    // expectation over independent success outcomes, probabilities from spend
    double total = 0.0;
    for (int mask = 0; mask < (1 << m); ++mask) {
      double prob = 1.0;
      for (int j = 0; j < m; ++j) {
        const double p = budget_model.success_probability(j, target[static_cast<std::size_t>(j)],
                                                          spend[static_cast<std::size_t>(j)]);
        const bool success = (mask >> j) & 1;
        prob *= success ? p : 1.0 - p;
        const auto& obj = scheme.objects[static_cast<std::size_t>(j)];
        tuple[static_cast<std::size_t>(j)] =
            success ? obj.appearances[static_cast<std::size_t>(target[static_cast<std::size_t>(j)])]
                    : obj.true_status;
      }
      if (prob == 0.0) continue;
      total += prob * values[static_cast<std::size_t>(scheme.appearance_index(tuple))];
    }
    return total;
  };

  auto allocations = [&](auto&& self, int j, double remaining) -> void {
    if (j == m) {
      best = std::min(best, expected_value());
      return;
    }
    for (int i = 0; i <= resolution; ++i) {
      const double b = (B == 0.0) ? 0.0 : B * static_cast<double>(i) / static_cast<double>(resolution);
      if (b > remaining + 1e-12) break;
      spend[static_cast<std::size_t>(j)] = b;
      self(self, j + 1, remaining - b);
      if (B == 0.0) break;
    }
  };

  auto assignments = [&](auto&& self, int j) -> void {
    if (j == m) {
      allocations(allocations, 0, B);
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

}  // namespace camo
