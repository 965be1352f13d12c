#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "camo/environments.hpp"
#include "camo/mdp.hpp"
#include "camo/random_instances.hpp"

namespace {

using namespace camo;

StageMdp one_state_mdp(double reward, int horizon) {
  StageMdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 1;
  mdp.horizon = horizon;
  mdp.env_configs = {"default"};
  mdp.transition.assign(static_cast<std::size_t>(horizon), {{{1.0}}});
  mdp.reward.assign(1, std::vector<std::vector<std::vector<double>>>(
                           static_cast<std::size_t>(horizon), {{reward}}));
  return mdp;
}

// Exhaustive enumeration of all deterministic stage policies; the maximal
// value per start state is the reference for backward induction.
double policy_value(const StageMdp& mdp, int config, const std::vector<std::vector<int>>& policy,
                    int t, int s) {
  if (t == mdp.horizon) return 0.0;
  const int a = policy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
  const auto& row = mdp.row(t + 1, s, a);
  double value = 0.0;
  for (int next = 0; next < mdp.num_states; ++next) {
    if (row[static_cast<std::size_t>(next)] == 0.0) continue;
    value += row[static_cast<std::size_t>(next)] *
             (mdp.rew(config, t + 1, s, next) + policy_value(mdp, config, policy, t + 1, next));
  }
  return value;
}

std::vector<double> enumerate_optimal_values(const StageMdp& mdp, int config) {
  const int slots = mdp.horizon * mdp.num_states;
  std::vector<double> best(static_cast<std::size_t>(mdp.num_states),
                           -std::numeric_limits<double>::infinity());
  std::vector<std::vector<int>> policy(static_cast<std::size_t>(mdp.horizon),
                                       std::vector<int>(static_cast<std::size_t>(mdp.num_states), 0));
  long total = 1;
  for (int i = 0; i < slots; ++i) total *= mdp.num_actions;
  for (long index = 0; index < total; ++index) {
    long rest = index;
    for (int t = 0; t < mdp.horizon; ++t)
      for (int s = 0; s < mdp.num_states; ++s) {
        policy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] =
            static_cast<int>(rest % mdp.num_actions);
        rest /= mdp.num_actions;
      }
    for (int s = 0; s < mdp.num_states; ++s)
      best[static_cast<std::size_t>(s)] =
          std::max(best[static_cast<std::size_t>(s)], policy_value(mdp, config, policy, 0, s));
  }
  return best;
}

TEST(ValidateMdp, RingPasses) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  EXPECT_TRUE(validate_mdp(mdp).passed());
}

TEST(ValidateMdp, RowSumFailureNamesIndices) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  mdp.transition[2][1][0][0] = 0.7;  // row now sums to 0.9
  const auto report = validate_mdp(mdp);
  ASSERT_FALSE(report.passed());
  EXPECT_NE(report.to_string().find("t=3"), std::string::npos);
  EXPECT_NE(report.to_string().find("s=1"), std::string::npos);
  EXPECT_NE(report.to_string().find("a=0"), std::string::npos);
}

TEST(ValidateMdp, OneStateIdentityPasses) {
  EXPECT_TRUE(validate_mdp(one_state_mdp(2.0, 3)).passed());
}

TEST(ValidateMdp, OutOfRangeProbabilityFails) {
  auto mdp = one_state_mdp(1.0, 1);
  mdp.transition[0][0][0][0] = 1.5;
  const auto report = validate_mdp(mdp);
  ASSERT_FALSE(report.passed());
  EXPECT_NE(report.to_string().find("out of [0,1]"), std::string::npos);
}

TEST(SolvePolicyFamily, SingleChoiceEverywhere) {
  const auto mdp = one_state_mdp(2.0, 3);
  const auto family = solve_policy_family(mdp);
  for (int t = 0; t < 3; ++t) EXPECT_EQ(family.act(0, t, 0), 0);
  EXPECT_DOUBLE_EQ(family.val(0, 0, 0), 6.0);
}

TEST(SolvePolicyFamily, DominantActionWins) {
  // two states, two actions: action 1 moves to state 1 (reward 5), action 0
  // stays at state 0 (reward 0)
  StageMdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 2;
  mdp.horizon = 1;
  mdp.env_configs = {"default"};
  mdp.transition = {{{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {0.0, 1.0}}}};
  mdp.reward = {{{{0.0, 5.0}, {0.0, 5.0}}}};
  const auto family = solve_policy_family(mdp);
  EXPECT_EQ(family.act(0, 0, 0), 1);
  EXPECT_DOUBLE_EQ(family.val(0, 0, 0), 5.0);
}

TEST(SolvePolicyFamily, InvalidMdpRejectedWithReport) {
  auto mdp = one_state_mdp(1.0, 1);
  mdp.transition[0][0][0][0] = 0.8;
  try {
    solve_policy_family(mdp);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("sums to"), std::string::npos);
  }
}

TEST(SolvePolicyFamily, MatchesExhaustivePolicyEnumeration) {
  std::mt19937_64 rng(20240811);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> pick_states(2, 3);
    std::uniform_int_distribution<int> pick_actions(2, 3);
    std::uniform_int_distribution<int> pick_horizon(1, 3);
    const StageMdp mdp = random_mdp(rng, pick_states(rng), pick_actions(rng), pick_horizon(rng), 2);
    const auto family = solve_policy_family(mdp);
    for (int c = 0; c < mdp.num_configs(); ++c) {
      const auto reference = enumerate_optimal_values(mdp, c);
      for (int s = 0; s < mdp.num_states; ++s)
        EXPECT_NEAR(family.val(c, 0, s), reference[static_cast<std::size_t>(s)], 1e-9);
    }
  }
}

TEST(SolvePolicyFamily, RingTruncationMatchesEnumeration) {
  // ring world truncated to two steps: 3^6 deterministic stage policies
  RingSpec spec;
  spec.horizon = 2;
  auto [mdp, scheme] = build_ring(spec);
  const auto family = solve_policy_family(mdp);
  const auto reference = enumerate_optimal_values(mdp, 0);
  for (int s = 0; s < 3; ++s)
    EXPECT_NEAR(family.val(0, 0, s), reference[static_cast<std::size_t>(s)], 1e-9);
}

TEST(SolvePolicyFamily, DeterministicTieBreak) {
  // both actions identical: lowest index must win everywhere
  StageMdp mdp = one_state_mdp(1.0, 2);
  mdp.num_actions = 2;
  mdp.transition.assign(2, {{{1.0}, {1.0}}});
  const auto a = solve_policy_family(mdp);
  const auto b = solve_policy_family(mdp);
  EXPECT_EQ(a.action, b.action);
  EXPECT_EQ(a.act(0, 0, 0), 0);
  EXPECT_EQ(a.act(0, 1, 0), 0);
}

TEST(PushForward, PointMassDeterministic) {
  const auto mdp = one_state_mdp(0.0, 1);
  const Dist out = push_forward(Dist{1.0}, [](int, int) { return 0; }, mdp, 1, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], 1.0);
}

TEST(PushForward, RingRightAction) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  const Dist init = point_joint_dist({0}, 3);
  const Dist out = push_forward(init, [](int, int) { return 1; }, mdp, 1, 1);
  EXPECT_NEAR(out[1], 0.8, 1e-12);
  EXPECT_NEAR(out[2], 0.2, 1e-12);
  EXPECT_NEAR(out[0], 0.0, 1e-12);
}

TEST(PushForward, TwoAgentProductLaw) {
  StageMdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 1;
  mdp.horizon = 1;
  mdp.env_configs = {"default"};
  mdp.transition = {{{{0.5, 0.5}}, {{0.5, 0.5}}}};
  mdp.reward = {{{{0.0, 0.0}, {0.0, 0.0}}}};
  const Dist out = push_forward(point_joint_dist({0, 0}, 2), [](int, int) { return 0; }, mdp, 1, 2);
  for (double p : out) EXPECT_NEAR(p, 0.25, 1e-12);
}

TEST(PushForward, PreservesMassOnRandomInstances) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const StageMdp mdp = random_mdp(rng, 3, 2, 2, 1);
    const Dist init = random_joint_dist(rng, 3, 2);
    const Dist out = push_forward(init, [](int, int s) { return s % 2; }, mdp, 1, 2);
    double sum = 0.0;
    for (double p : out) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(PushForward, RejectsNonNormalizedInput) {
  const auto mdp = one_state_mdp(0.0, 1);
  EXPECT_THROW(push_forward(Dist{0.5}, [](int, int) { return 0; }, mdp, 1, 1),
               std::invalid_argument);
}

TEST(ExpectedRewardNoAttack, ZeroHorizon) {
  const auto mdp = one_state_mdp(2.0, 0);
  const auto family = solve_policy_family(mdp);
  const auto trajectory = expected_reward_no_attack(mdp, family, 2, Dist{1.0});
  ASSERT_EQ(trajectory.size(), 1u);
  EXPECT_DOUBLE_EQ(trajectory[0], 0.0);
}

TEST(ExpectedRewardNoAttack, LinearAccumulation) {
  const auto mdp = one_state_mdp(2.0, 3);
  const auto family = solve_policy_family(mdp);
  const auto trajectory = expected_reward_no_attack(mdp, family, 2, Dist{1.0});
  const std::vector<double> expected{0.0, 4.0, 8.0, 12.0};
  ASSERT_EQ(trajectory.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    EXPECT_NEAR(trajectory[i], expected[i], 1e-12);
}

// Independent Monte Carlo oracle for the ring trajectory.
TEST(ExpectedRewardNoAttack, MatchesMonteCarloOnRing) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  const auto family = solve_policy_family(mdp);
  const int n = 2;
  const Dist init = uniform_joint_dist(3, n);
  const auto exact = expected_reward_no_attack(mdp, family, n, init);

  const int episodes = 100000;
  std::mt19937_64 rng(123456789);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> sums(exact.size(), 0.0), sq(exact.size(), 0.0);
  for (int e = 0; e < episodes; ++e) {
    int s0 = static_cast<int>(unit(rng) * 3.0);
    int s1 = static_cast<int>(unit(rng) * 3.0);
    s0 = std::min(s0, 2);
    s1 = std::min(s1, 2);
    std::vector<int> state{s0, s1};
    double total = 0.0;
    for (int t = 1; t <= mdp.horizon; ++t) {
      for (int& s : state) {
        const int a = family.act(0, t - 1, s);
        const auto& row = mdp.row(t, s, a);
        const double u = unit(rng);
        double acc = 0.0;
        int next = 2;
        for (int cand = 0; cand < 3; ++cand) {
          acc += row[static_cast<std::size_t>(cand)];
          if (u < acc) {
            next = cand;
            break;
          }
        }
        total += mdp.rew(0, t, s, next);
        s = next;
      }
      sums[static_cast<std::size_t>(t)] += total;
      sq[static_cast<std::size_t>(t)] += total * total;
    }
  }
  for (std::size_t t = 1; t < exact.size(); ++t) {
    const double mean = sums[t] / episodes;
    const double var = (sq[t] - sums[t] * sums[t] / episodes) / (episodes - 1);
    const double se = std::sqrt(std::max(var, 1e-12) / episodes);
    EXPECT_NEAR(exact[t], mean, 3.0 * se) << "time index " << t;
  }
}

TEST(ExpectedRewardNoAttack, ScalesLinearlyInAgentCount) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  const auto family = solve_policy_family(mdp);
  const auto one = expected_reward_no_attack(mdp, family, 1, uniform_joint_dist(3, 1));
  const auto two = expected_reward_no_attack(mdp, family, 2, uniform_joint_dist(3, 2));
  for (std::size_t t = 0; t < one.size(); ++t) EXPECT_NEAR(two[t], 2.0 * one[t], 1e-9);
}

TEST(JointIndexing, RoundTrips) {
  for (std::size_t idx = 0; idx < joint_count(3, 3); ++idx)
    EXPECT_EQ(joint_index(decode_joint(idx, 3, 3), 3), idx);
}

}  // namespace
