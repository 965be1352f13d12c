#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "camo/environments.hpp"
#include "camo/oracle.hpp"
#include "camo/planners.hpp"
#include "camo/random_instances.hpp"

namespace {

using namespace camo;

CamouflageScheme identity_only_scheme(int num_states, int true_config) {
  CamouflageObject object;
  object.true_status = 0;
  object.appearances = {0};
  std::vector<std::vector<std::vector<Perception>>> table(1);
  table[0].resize(1);
  for (int s = 0; s < num_states; ++s) table[0][0].push_back(Perception{s, true_config});
  return make_table_scheme({object}, std::move(table));
}

// literal enumeration over attack policies as tables (t, joint state) ->
// appearance id, evaluated by forward expectation; feasible only on micro
// instances but pins down what "all deterministic attack policies" means
double enumerate_attack_policies(const StageMdp& mdp, const PolicyFamily& policy,
                                 const CamouflageScheme& scheme, int num_agents,
                                 const Dist& init) {
  const int S = mdp.num_states;
  const int T = mdp.horizon;
  const std::size_t joints = joint_count(S, num_agents);
  const int choices = scheme.num_appearances();
  const int true_config = scheme.true_env_config();
  const std::size_t slots = static_cast<std::size_t>(T) * joints;

  long total = 1;
  for (std::size_t i = 0; i < slots; ++i) total *= choices;

  std::vector<int> table(slots, 0);
  double best = std::numeric_limits<double>::infinity();
  for (long index = 0; index < total; ++index) {
    long rest = index;
    for (std::size_t i = 0; i < slots; ++i) {
      table[i] = static_cast<int>(rest % choices);
      rest /= choices;
    }
    // forward expectation under this fixed attack policy
    Dist dist = init;
    double value = 0.0;
    for (int t = 1; t <= T; ++t) {
      Dist next_dist(joints, 0.0);
      for (std::size_t src = 0; src < joints; ++src) {
        if (dist[src] == 0.0) continue;
        const JointState state = decode_joint(src, S, num_agents);
        const int aid = table[static_cast<std::size_t>(t - 1) * joints + src];
        std::vector<int> actions(static_cast<std::size_t>(num_agents));
        for (int i = 0; i < num_agents; ++i) {
          const Perception p = scheme.perceive(aid, state, i);
          actions[static_cast<std::size_t>(i)] = policy.act(p.env_config, t - 1, p.own_state);
        }
        auto expand = [&](auto&& self, int agent, std::size_t prefix, double mass) -> void {
          if (agent == num_agents) {
            next_dist[prefix] += mass;
            return;
          }
          const int s = state[static_cast<std::size_t>(agent)];
          const auto& row = mdp.row(t, s, actions[static_cast<std::size_t>(agent)]);
          for (int nxt = 0; nxt < S; ++nxt) {
            if (row[static_cast<std::size_t>(nxt)] == 0.0) continue;
            self(self, agent + 1, prefix * static_cast<std::size_t>(S) + static_cast<std::size_t>(nxt),
                 mass * row[static_cast<std::size_t>(nxt)]);
          }
        };
        for (int i = 0; i < num_agents; ++i) {
          const int s = state[static_cast<std::size_t>(i)];
          const auto& row = mdp.row(t, s, actions[static_cast<std::size_t>(i)]);
          for (int nxt = 0; nxt < S; ++nxt)
            value += dist[src] * row[static_cast<std::size_t>(nxt)] * mdp.rew(true_config, t, s, nxt);
        }
        expand(expand, 0, 0, dist[src]);
      }
      dist = std::move(next_dist);
    }
    best = std::min(best, value);
  }
  return best;
}

TEST(BruteForceAttackValue, IdentityOnlySchemeGivesNoAttackValue) {
  std::mt19937_64 rng(3);
  const StageMdp mdp = random_mdp(rng, 3, 2, 2, 1);
  const auto family = solve_policy_family(mdp);
  const auto scheme = identity_only_scheme(3, 0);
  const Dist init = random_joint_dist(rng, 3, 2);
  const double oracle =
      brute_force_attack_value(mdp, family, scheme, 2, OracleAttackMode::Camouflage, init);
  const auto none = no_attack_value_table(mdp, family, 2, 0);
  double expected = 0.0;
  for (std::size_t j = 0; j < init.size(); ++j) expected += init[j] * none[0][j];
  EXPECT_NEAR(oracle, expected, 1e-9);
}

TEST(BruteForceAttackValue, AgreesWithLiteralPolicyEnumeration) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const StageMdp mdp = random_mdp(rng, 2, 2, 2, 2);
    const auto family = solve_policy_family(mdp);
    const auto scheme = random_table_scheme(rng, 2, 2, 0, 2);
    const Dist init = point_joint_dist({trial % 2}, 2);
    const double tree =
        brute_force_attack_value(mdp, family, scheme, 1, OracleAttackMode::Camouflage, init);
    const double literal = enumerate_attack_policies(mdp, family, scheme, 1, init);
    EXPECT_NEAR(tree, literal, 1e-9) << "trial " << trial;
  }
}

TEST(BruteForceAttackValue, RingTruncatedMatchesPlanner) {
  RingSpec spec;
  spec.horizon = 2;
  auto [mdp, scheme] = build_ring(spec);
  const auto family = solve_policy_family(mdp);
  const int n = 2;
  const Dist init = uniform_joint_dist(3, n);
  const auto planned = plan_camouflage(mdp, family, scheme, n);
  double expected = 0.0;
  for (std::size_t j = 0; j < init.size(); ++j) expected += init[j] * planned.values.pre[0][j];
  const double oracle =
      brute_force_attack_value(mdp, family, scheme, n, OracleAttackMode::Camouflage, init);
  EXPECT_NEAR(oracle, expected, 1e-9);
}

TEST(BruteForceAttackValue, SpaNeverAboveCamouflage) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    const auto instance = random_attack_instance(rng, 3, 2, 2, 4);
    const auto family = solve_policy_family(instance.mdp);
    SpaDomain domain{SpaDomainKind::FromScheme, &instance.scheme};
    const double cam = brute_force_attack_value(instance.mdp, family, instance.scheme,
                                                instance.num_agents, OracleAttackMode::Camouflage,
                                                instance.init);
    const double spa = brute_force_attack_value(instance.mdp, family, instance.scheme,
                                                instance.num_agents,
                                                OracleAttackMode::StatePerception, instance.init,
                                                domain);
    EXPECT_LE(spa, cam + 1e-9) << "trial " << trial;
  }
}

TEST(BruteForceAttackValue, PlannersMatchOracleOnRandomInstances) {
  std::mt19937_64 rng(20250810);
  for (int trial = 0; trial < 25; ++trial) {
    const auto instance = random_attack_instance(rng, 3, 2, 2, 4);
    const auto family = solve_policy_family(instance.mdp);

    const auto cam = plan_camouflage(instance.mdp, family, instance.scheme, instance.num_agents);
    double cam_value = 0.0;
    for (std::size_t j = 0; j < instance.init.size(); ++j)
      cam_value += instance.init[j] * cam.values.pre[0][j];
    const double cam_oracle =
        brute_force_attack_value(instance.mdp, family, instance.scheme, instance.num_agents,
                                 OracleAttackMode::Camouflage, instance.init);
    EXPECT_NEAR(cam_value, cam_oracle, 1e-9) << "trial " << trial;

    SpaDomain domain{SpaDomainKind::FromScheme, &instance.scheme};
    const auto spa = plan_state_perception(instance.mdp, family, instance.num_agents, domain,
                                           instance.true_config);
    double spa_value = 0.0;
    for (std::size_t j = 0; j < instance.init.size(); ++j)
      spa_value += instance.init[j] * spa.values.pre[0][j];
    const double spa_oracle =
        brute_force_attack_value(instance.mdp, family, instance.scheme, instance.num_agents,
                                 OracleAttackMode::StatePerception, instance.init, domain);
    EXPECT_NEAR(spa_value, spa_oracle, 1e-9) << "trial " << trial;
  }
}

TEST(BruteForceAttackValue, BudgetExceededRejected) {
  ChessboardSpec spec;
  spec.attacker_positions = {{1, 1}};
  auto [mdp, scheme] = build_chessboard(spec);
  const auto family = solve_policy_family(mdp);
  EXPECT_THROW(brute_force_attack_value(mdp, family, scheme, 3, OracleAttackMode::Camouflage,
                                        uniform_joint_dist(9, 3)),
               std::invalid_argument);
}

TEST(BruteForceBudgetValue, ZeroBudgetIsTruthfulValue) {
  CamouflageObject object;
  object.true_status = 0;
  object.appearances = {0, 1};
  CamouflageScheme scheme;
  scheme.kind = "table";
  scheme.objects = {object};
  scheme.perception.assign(2, {{Perception{0, 0}}});
  BudgetModel budget;
  budget.budget = 0.0;
  budget.epsilon = 0.5;
  budget.cost = {{0.5, 2.0}};
  const std::vector<std::vector<double>> layer{{20.0, 10.0}};
  EXPECT_NEAR(brute_force_budget_value(layer, 0, scheme, budget, 10), 20.0, 1e-12);
}

TEST(BruteForceBudgetValue, LinearCaseFindsHalfProbability) {
  CamouflageObject object;
  object.true_status = 0;
  object.appearances = {0, 1};
  CamouflageScheme scheme;
  scheme.kind = "table";
  scheme.objects = {object};
  scheme.perception.assign(2, {{Perception{0, 0}}});
  BudgetModel budget;
  budget.budget = 1.0;
  budget.epsilon = 0.5;
  budget.cost = {{0.5, 2.0}};
  const std::vector<std::vector<double>> layer{{20.0, 10.0}};
  EXPECT_NEAR(brute_force_budget_value(layer, 0, scheme, budget, 100), 15.0, 1e-9);
}

TEST(BruteForceBudgetValue, VertexSolverDominatesGridOnRandomInstances) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> value(0.0, 30.0);
  std::uniform_real_distribution<double> pick_budget(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    // two objects with 2-3 appearances each
    std::uniform_int_distribution<int> pick_domain(2, 3);
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

    BudgetModel budget;
    budget.budget = pick_budget(rng);
    budget.epsilon = 0.5;
    for (const auto& object : scheme.objects) {
      std::vector<double> row;
      for (int appearance : object.appearances)
        row.push_back(std::abs(appearance - object.true_status) + budget.epsilon);
      budget.cost.push_back(row);
    }

    std::vector<std::vector<double>> layer(1);
    layer[0].resize(static_cast<std::size_t>(scheme.num_appearances()));
    for (double& v : layer[0]) v = value(rng);

    const auto vertex = within_step_optimize(layer, 0, scheme, budget);
    const double grid = brute_force_budget_value(layer, 0, scheme, budget, 60);
    EXPECT_LE(vertex.value, grid + 1e-9) << "trial " << trial;
  }
}

TEST(BruteForceBudgetValue, GridConvergesToExactOptimumWithinLatticeSlack) {
  // fine grids must bracket the exact solver: never below it, and above by at
  // most the lattice step times the objective's Lipschitz constant in spends
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> value(0.0, 30.0);
  std::uniform_real_distribution<double> pick_budget(0.5, 4.0);
  const int resolution = 400;
  for (int trial = 0; trial < 8; ++trial) {
    CamouflageObject object;
    object.true_status = 0;
    object.appearances = {0, 1, 2};
    CamouflageScheme scheme;
    scheme.kind = "table";
    scheme.objects = {object, object};
    scheme.perception.assign(9, {{Perception{0, 0}}});
    BudgetModel budget = make_absolute_difference_budget_model(scheme, pick_budget(rng), 0.5);
    std::vector<std::vector<double>> layer(1);
    layer[0].resize(9);
    double max_value = 0.0;
    for (double& v : layer[0]) {
      v = value(rng);
      max_value = std::max(max_value, v);
    }
    const auto exact = within_step_optimize(layer, 0, scheme, budget);
    const double grid = brute_force_budget_value(layer, 0, scheme, budget, resolution);
    double inverse_cost = 0.0;
    for (const auto& row : budget.cost)
      inverse_cost += 1.0 / *std::min_element(row.begin(), row.end());
    const double slack = (budget.budget / resolution) * 2.0 * max_value * inverse_cost;
    EXPECT_GE(grid, exact.value - 1e-9) << "trial " << trial;
    EXPECT_LE(grid, exact.value + slack + 1e-12) << "trial " << trial;
  }
}

TEST(BruteForceBudgetValue, ResolutionFloorEnforced) {
  CamouflageObject object;
  object.true_status = 0;
  object.appearances = {0, 1};
  CamouflageScheme scheme;
  scheme.kind = "table";
  scheme.objects = {object};
  scheme.perception.assign(2, {{Perception{0, 0}}});
  BudgetModel budget;
  budget.budget = 1.0;
  budget.epsilon = 0.5;
  budget.cost = {{0.5, 2.0}};
  const std::vector<std::vector<double>> layer{{20.0, 10.0}};
  EXPECT_THROW(brute_force_budget_value(layer, 0, scheme, budget, 5), std::invalid_argument);
}

TEST(BruteForceAttackValue, ReproducibleBitForBit) {
  RingSpec spec;
  spec.horizon = 2;
  auto [mdp, scheme] = build_ring(spec);
  const auto family = solve_policy_family(mdp);
  const Dist init = uniform_joint_dist(3, 2);
  const double a =
      brute_force_attack_value(mdp, family, scheme, 2, OracleAttackMode::Camouflage, init);
  const double b =
      brute_force_attack_value(mdp, family, scheme, 2, OracleAttackMode::Camouflage, init);
  EXPECT_EQ(a, b);
}

}  // namespace
