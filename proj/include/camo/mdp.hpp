#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace camo {

/// Probability mass must balance to within this tolerance everywhere.
inline constexpr double kProbTol = 1e-9;

/// Distribution over flat-encoded joint states.
using Dist = std::vector<double>;

/// Joint state of n agents as per-agent state identifiers.
using JointState = std::vector<int>;

inline std::size_t joint_count(int num_states, int num_agents) {
  std::size_t count = 1;
  for (int i = 0; i < num_agents; ++i) count *= static_cast<std::size_t>(num_states);
  return count;
}

/// Flat encoding of a joint state; agent 0 is the most significant digit.
inline std::size_t joint_index(const JointState& state, int num_states) {
  std::size_t idx = 0;
  for (int s : state) idx = idx * static_cast<std::size_t>(num_states) + static_cast<std::size_t>(s);
  return idx;
}

inline JointState decode_joint(std::size_t index, int num_states, int num_agents) {
  JointState state(static_cast<std::size_t>(num_agents));
  for (int i = num_agents - 1; i >= 0; --i) {
    state[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(num_states));
    index /= static_cast<std::size_t>(num_states);
  }
  return state;
}

/**
 * Finite-horizon tabular MDP shared by all recipient agents.
 *
 * Time indices run 0..horizon; step t (1..horizon) is the interval from
 * index t-1 to t. transition[t-1][s][a][s'] is the transition row for step t,
 * reward[c][t-1][s_prev][s_next] the reward collected when moving during step
 * t under environment configuration c. Configurations parameterize rewards
 * only; transitions are shared across configurations.
 */
struct StageMdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<std::string> env_configs;  // configuration names, position = id
  std::vector<std::vector<std::vector<std::vector<double>>>> transition;
  std::vector<std::vector<std::vector<std::vector<double>>>> reward;

  int num_configs() const { return static_cast<int>(env_configs.size()); }

  /// Transition probability for step t (1..horizon).
  double prob(int step, int s, int a, int next) const {
    return transition[static_cast<std::size_t>(step - 1)][static_cast<std::size_t>(s)]
                     [static_cast<std::size_t>(a)][static_cast<std::size_t>(next)];
  }

  const std::vector<double>& row(int step, int s, int a) const {
    return transition[static_cast<std::size_t>(step - 1)][static_cast<std::size_t>(s)]
                     [static_cast<std::size_t>(a)];
  }

  /// Reward for moving s_prev -> s_next during step t under configuration c.
  double rew(int config, int step, int s_prev, int s_next) const {
    return reward[static_cast<std::size_t>(config)][static_cast<std::size_t>(step - 1)]
                 [static_cast<std::size_t>(s_prev)][static_cast<std::size_t>(s_next)];
  }
};

struct ValidationIssue {
  std::string what;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool passed() const { return issues.empty(); }

  std::string to_string() const {
    if (passed()) return "pass";
    std::ostringstream out;
    for (const auto& issue : issues) out << issue.what << '\n';
    return out.str();
  }
};

/// Checks table shapes, row normalization, probability ranges and reward
/// finiteness. Diagnostic only: never throws.
inline ValidationReport validate_mdp(const StageMdp& mdp) {
  ValidationReport report;
  auto fail = [&report](const std::string& what) { report.issues.push_back({what}); };

  if (mdp.num_states < 1) fail("num_states must be >= 1");
  if (mdp.num_actions < 1) fail("num_actions must be >= 1");
  if (mdp.horizon < 0) fail("horizon must be >= 0");
  if (mdp.env_configs.empty()) fail("env_configs must be nonempty");
  if (mdp.reward.size() != mdp.env_configs.size())
    fail("reward table count does not match env_configs");
  if (!report.passed()) return report;

  const auto T = static_cast<std::size_t>(mdp.horizon);
  const auto S = static_cast<std::size_t>(mdp.num_states);
  const auto A = static_cast<std::size_t>(mdp.num_actions);

  if (mdp.transition.size() != T) {
    fail("transition must have one table per step 1..horizon");
    return report;
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (mdp.transition[t].size() != S) {
      fail("transition[t=" + std::to_string(t + 1) + "] has wrong state count");
      continue;
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (mdp.transition[t][s].size() != A) {
        fail("transition row count mismatch at (t=" + std::to_string(t + 1) +
             ", s=" + std::to_string(s) + ")");
        continue;
      }
      for (std::size_t a = 0; a < A; ++a) {
        const auto& row = mdp.transition[t][s][a];
        if (row.size() != S) {
          fail("transition row length mismatch at (t=" + std::to_string(t + 1) +
               ", s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
          continue;
        }
        double sum = 0.0;
        bool range_ok = true;
        for (double p : row) {
          if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) range_ok = false;
          sum += p;
        }
        if (!range_ok)
          fail("probability out of [0,1] at (t=" + std::to_string(t + 1) +
               ", s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
        if (std::abs(sum - 1.0) > kProbTol)
          fail("transition row sums to " + std::to_string(sum) + " at (t=" +
               std::to_string(t + 1) + ", s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
      }
    }
  }

  for (std::size_t c = 0; c < mdp.reward.size(); ++c) {
    if (mdp.reward[c].size() != T) {
      fail("reward[config=" + std::to_string(c) + "] must have one table per step");
      continue;
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto& table = mdp.reward[c][t];
      if (table.size() != S) {
        fail("reward table shape mismatch at (config=" + std::to_string(c) +
             ", t=" + std::to_string(t + 1) + ")");
        continue;
      }
      for (std::size_t sp = 0; sp < S; ++sp) {
        if (table[sp].size() != S) {
          fail("reward row length mismatch at (config=" + std::to_string(c) +
               ", t=" + std::to_string(t + 1) + ", s_prev=" + std::to_string(sp) + ")");
          continue;
        }
        for (std::size_t sn = 0; sn < S; ++sn) {
          if (!std::isfinite(table[sp][sn]))
            fail("non-finite reward at (config=" + std::to_string(c) + ", t=" +
                 std::to_string(t + 1) + ", s_prev=" + std::to_string(sp) +
                 ", s_next=" + std::to_string(sn) + ")");
        }
      }
    }
  }
  return report;
}

/**
 * One shared recipient policy per environment configuration.
 *
 * action[c][t][s] is the greedy action an agent at state s takes during step
 * t+1; equivalently, the move phase of step t uses the policy indexed t-1.
 * value[c][t][s] is the agent's optimal expected total reward from time
 * index t to the horizon, with value[c][T][s] = 0.
 */
struct PolicyFamily {
  std::vector<std::vector<std::vector<int>>> action;
  std::vector<std::vector<std::vector<double>>> value;

  int act(int config, int stage, int s) const {
    return action[static_cast<std::size_t>(config)][static_cast<std::size_t>(stage)]
                 [static_cast<std::size_t>(s)];
  }

  double val(int config, int stage, int s) const {
    return value[static_cast<std::size_t>(config)][static_cast<std::size_t>(stage)]
                [static_cast<std::size_t>(s)];
  }
};

/// Backward induction maximizing a single recipient's expected total reward,
/// run independently for every environment configuration. Argmax ties break
/// to the lowest action index.
inline PolicyFamily solve_policy_family(const StageMdp& mdp) {
  ValidationReport report = validate_mdp(mdp);
  if (!report.passed())
    throw std::invalid_argument("solve_policy_family: invalid MDP:\n" + report.to_string());

  const int T = mdp.horizon;
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const int K = mdp.num_configs();

  PolicyFamily family;
  family.action.assign(static_cast<std::size_t>(K),
                       std::vector<std::vector<int>>(static_cast<std::size_t>(T),
                                                     std::vector<int>(static_cast<std::size_t>(S), 0)));
  family.value.assign(static_cast<std::size_t>(K),
                      std::vector<std::vector<double>>(static_cast<std::size_t>(T) + 1,
                                                       std::vector<double>(static_cast<std::size_t>(S), 0.0)));

  for (int c = 0; c < K; ++c) {
    for (int t = T - 1; t >= 0; --t) {
      for (int s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int best_action = 0;
        for (int a = 0; a < A; ++a) {
          double q = 0.0;
          const auto& row = mdp.row(t + 1, s, a);
          for (int next = 0; next < S; ++next) {
            if (row[static_cast<std::size_t>(next)] == 0.0) continue;
            q += row[static_cast<std::size_t>(next)] *
                 (mdp.rew(c, t + 1, s, next) + family.value[c][static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(next)]);
          }
          if (q > best) {
            best = q;
            best_action = a;
          }
        }
        family.value[c][static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = best;
        family.action[c][static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = best_action;
      }
    }
  }
  return family;
}

inline void check_distribution(const Dist& dist) {
  double sum = 0.0;
  for (double p : dist) {
    if (p < -kProbTol) throw std::invalid_argument("distribution has negative mass");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbTol)
    throw std::invalid_argument("distribution sums to " + std::to_string(sum) + ", expected 1");
}

/**
 * Pushes a joint-state distribution through one move phase. Agents transition
 * independently; the action of agent i is action_selector(i, own_state).
 * `step` is the 1-based step whose transition table applies.
 */
template <class ActionSelector>
Dist push_forward(const Dist& dist, ActionSelector&& action_selector, const StageMdp& mdp,
                  int step, int num_agents) {
  check_distribution(dist);
  if (step < 1 || step > mdp.horizon) throw std::out_of_range("push_forward: step out of range");
  const int S = mdp.num_states;
  if (dist.size() != joint_count(S, num_agents))
    throw std::invalid_argument("push_forward: distribution size does not match S^n");

  Dist result(dist.size(), 0.0);
  std::vector<const std::vector<double>*> rows(static_cast<std::size_t>(num_agents));
  // product of the per-agent rows, skipping zero entries
  auto expand = [&](auto&& self, int agent, std::size_t prefix, double mass) -> void {
    if (agent == num_agents) {
      result[prefix] += mass;
      return;
    }
    const auto& row = *rows[static_cast<std::size_t>(agent)];
    for (int next = 0; next < S; ++next) {
      const double p = row[static_cast<std::size_t>(next)];
      if (p == 0.0) continue;
      self(self, agent + 1, prefix * static_cast<std::size_t>(S) + static_cast<std::size_t>(next), mass * p);
    }
  };
  for (std::size_t src = 0; src < dist.size(); ++src) {
    const double mass = dist[src];
    if (mass == 0.0) continue;
    const JointState state = decode_joint(src, S, num_agents);
    for (int i = 0; i < num_agents; ++i)
      rows[static_cast<std::size_t>(i)] =
          &mdp.row(step, state[static_cast<std::size_t>(i)], action_selector(i, state[static_cast<std::size_t>(i)]));
    expand(expand, 0, 0, mass);
  }
  return result;
}

/**
 * Cumulative expected total reward of n recipients playing their optimal
 * policy with no attack, evaluated exactly by distribution push-forward.
 * Entry k is the total collected over steps 1..k; entry 0 is 0.
 */
inline std::vector<double> expected_reward_no_attack(const StageMdp& mdp, const PolicyFamily& policy,
                                                     int num_agents, const Dist& init,
                                                     int true_config = 0) {
  check_distribution(init);
  if (true_config < 0 || true_config >= mdp.num_configs())
    throw std::out_of_range("expected_reward_no_attack: bad env config");
  const int S = mdp.num_states;
  if (init.size() != joint_count(S, num_agents))
    throw std::invalid_argument("expected_reward_no_attack: init size does not match S^n");

  std::vector<double> trajectory(static_cast<std::size_t>(mdp.horizon) + 1, 0.0);
  Dist dist = init;
  for (int t = 1; t <= mdp.horizon; ++t) {
    double step_reward = 0.0;
    for (std::size_t src = 0; src < dist.size(); ++src) {
      if (dist[src] == 0.0) continue;
      const JointState state = decode_joint(src, S, num_agents);
      for (int i = 0; i < num_agents; ++i) {
        const int s = state[static_cast<std::size_t>(i)];
        const int a = policy.act(true_config, t - 1, s);
        const auto& row = mdp.row(t, s, a);
        for (int next = 0; next < S; ++next)
          step_reward += dist[src] * row[static_cast<std::size_t>(next)] * mdp.rew(true_config, t, s, next);
      }
    }
    trajectory[static_cast<std::size_t>(t)] = trajectory[static_cast<std::size_t>(t) - 1] + step_reward;
    dist = push_forward(
        dist, [&](int /*agent*/, int s) { return policy.act(true_config, t - 1, s); }, mdp, t,
        num_agents);
  }
  return trajectory;
}

/// Uniform distribution over all joint states.
inline Dist uniform_joint_dist(int num_states, int num_agents) {
  const std::size_t n = joint_count(num_states, num_agents);
  return Dist(n, 1.0 / static_cast<double>(n));
}

/// Point mass on one joint state.
inline Dist point_joint_dist(const JointState& state, int num_states) {
  Dist dist(joint_count(num_states, static_cast<int>(state.size())), 0.0);
  dist[joint_index(state, num_states)] = 1.0;
  return dist;
}

}  // namespace camo
