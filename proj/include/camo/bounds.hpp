#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "camo/attack_model.hpp"
#include "camo/mdp.hpp"

namespace camo {

/// Result of comparing an equality-constrained minimization (all agents share
/// one choice) against its unconstrained relaxation, together with the
/// additive gap bound.
struct GapReport {
  double constrained_optimum = 0.0;    // o1: min_x sum_i f_i(x)
  double unconstrained_optimum = 0.0;  // o2: sum_i min_x f_i(x)
  double bound = 0.0;
  bool holds = false;
  int shared_minimizer = 0;                  // argmin of the constrained problem
  std::vector<int> per_function_minimizers;  // x*_i, lowest-index ties
  int bound_witness = 0;                     // j attaining the bound
};

/**
 * Gap between minimizing sum_i f_i under x_1 = ... = x_n and minimizing each
 * f_i freely. The bound is min_j C_j with
 * C_j = sum_{i != j} (f_i(x*_j) - f_i(x*_i)), computed from the per-function
 * minimizers; o2 <= o1 <= o2 + bound holds by construction and is verified.
 */
inline GapReport equality_constraint_gap(const std::vector<std::vector<double>>& functions) {
  if (functions.empty()) throw std::invalid_argument("equality_constraint_gap: need at least one function");
  const std::size_t domain = functions.front().size();
  if (domain == 0) throw std::invalid_argument("equality_constraint_gap: empty domain");
  for (const auto& f : functions)
    if (f.size() != domain) throw std::invalid_argument("equality_constraint_gap: domain mismatch");
  const std::size_t n = functions.size();

  GapReport report;

  double best_sum = std::numeric_limits<double>::infinity();
  int best_x = 0;
  for (std::size_t x = 0; x < domain; ++x) {
    double sum = 0.0;
    for (const auto& f : functions) sum += f[x];
    if (sum < best_sum) {
      best_sum = sum;
      best_x = static_cast<int>(x);
    }
  }
  report.constrained_optimum = best_sum;
  report.shared_minimizer = best_x;

  report.per_function_minimizers.resize(n);
  double free_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t x = 0; x < domain; ++x) {
      if (functions[i][x] < best) {
        best = functions[i][x];
        arg = static_cast<int>(x);
      }
    }
    free_sum += best;
    report.per_function_minimizers[i] = arg;
  }
  report.unconstrained_optimum = free_sum;

  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t xj = static_cast<std::size_t>(report.per_function_minimizers[j]);
    double cj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const std::size_t xi = static_cast<std::size_t>(report.per_function_minimizers[i]);
      cj += functions[i][xj] - functions[i][xi];
    }
    if (cj < bound) {
      bound = cj;
      report.bound_witness = static_cast<int>(j);
    }
  }
  report.bound = bound;

  report.holds = report.unconstrained_optimum <= report.constrained_optimum + 1e-9 &&
                 report.constrained_optimum <= report.unconstrained_optimum + report.bound + 1e-9;
  return report;
}

namespace detail {

/// One-step expected rewards per agent and shared appearance configuration:
/// er[i][Y] is what agent i (truly at actual[i]) collects during `step` when
/// it acts on its perception of Y. Rewards are paid against the scheme's true
/// environment configuration.
inline std::vector<std::vector<double>> one_step_expected_rewards(const StageMdp& mdp,
                                                                  const PolicyFamily& policy,
                                                                  const CamouflageScheme& scheme,
                                                                  int step,
                                                                  const JointState& actual) {
  if (step < 1 || step > mdp.horizon)
    throw std::out_of_range("one_step_expected_rewards: step out of range");
  const int n = static_cast<int>(actual.size());
  const int num_app = scheme.num_appearances();
  const int true_config = scheme.true_env_config();
  std::vector<std::vector<double>> er(static_cast<std::size_t>(n),
                                      std::vector<double>(static_cast<std::size_t>(num_app), 0.0));
  for (int i = 0; i < n; ++i) {
    const int s = actual[static_cast<std::size_t>(i)];
    for (int aid = 0; aid < num_app; ++aid) {
      const Perception p = scheme.perceive(aid, actual, i);
      const int a = policy.act(p.env_config, step - 1, p.own_state);
      const auto& row = mdp.row(step, s, a);
      double value = 0.0;
      for (int next = 0; next < mdp.num_states; ++next)
        value += row[static_cast<std::size_t>(next)] * mdp.rew(true_config, step, s, next);
      er[static_cast<std::size_t>(i)][static_cast<std::size_t>(aid)] = value;
    }
  }
  return er;
}

inline void require_shared_observation(const CamouflageScheme& scheme) {
  if (!scheme.shared_observation)
    throw std::invalid_argument("bounds: scheme must have identical observation functions");
}

}  // namespace detail

/**
 * Constants C_ij for one step: how much worse agent i fares under agent j's
 * most damaging delusion than under its own. Delusions range over the shared
 * appearance configurations; minimizer ties break to the lowest id. The
 * diagonal is zero and every entry is nonnegative by optimality.
 */
inline std::vector<std::vector<double>> delusion_regret_matrix(const StageMdp& mdp, const PolicyFamily& policy,
                                                   const CamouflageScheme& scheme, int step,
                                                   const JointState& actual) {
  detail::require_shared_observation(scheme);
  const auto er = detail::one_step_expected_rewards(mdp, policy, scheme, step, actual);
  const std::size_t n = er.size();
  std::vector<int> minimizer(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < er[i].size(); ++y) {
      if (er[i][y] < best) {
        best = er[i][y];
        minimizer[i] = static_cast<int>(y);
      }
    }
  }
  std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[i][j] = er[i][static_cast<std::size_t>(minimizer[j])] -
                er[i][static_cast<std::size_t>(minimizer[i])];
  return c;
}

/**
 * One-step comparison of the optimal shared-delusion (camouflage) attack and
 * the optimal free per-agent (state-perception) attack at a joint state,
 * verifying TR_spa <= TR_ca <= TR_spa + min_j sum_{i != j} C_ij.
 */
inline GapReport shared_delusion_gap_check(const StageMdp& mdp, const PolicyFamily& policy,
                                const CamouflageScheme& scheme, int step,
                                const JointState& actual) {
  detail::require_shared_observation(scheme);
  const auto er = detail::one_step_expected_rewards(mdp, policy, scheme, step, actual);
  GapReport report = equality_constraint_gap(er);

  // rebuild the bound as min_j sum_{i != j} C_ij from the tight constants;
  // coincides with the gap report's bound by construction
  const auto c = delusion_regret_matrix(mdp, policy, scheme, step, actual);
  double bound = std::numeric_limits<double>::infinity();
  int witness = 0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (i != j) sum += c[i][j];
    if (sum < bound) {
      bound = sum;
      witness = static_cast<int>(j);
    }
  }
  report.bound = bound;
  report.bound_witness = witness;
  report.holds = report.unconstrained_optimum <= report.constrained_optimum + 1e-9 &&
                 report.constrained_optimum <= report.unconstrained_optimum + bound + 1e-9;
  return report;
}

}  // namespace camo
