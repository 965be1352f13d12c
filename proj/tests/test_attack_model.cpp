#include <gtest/gtest.h>

#include <random>

#include "camo/attack_model.hpp"
#include "camo/environments.hpp"
#include "camo/random_instances.hpp"

namespace {

using namespace camo;

TEST(EnumerateAppearances, RingRotations) {
  const auto scheme = make_rotation_scheme(3);
  const auto all = scheme.enumerate_appearances();
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], std::vector<int>{0});
  EXPECT_EQ(all[1], std::vector<int>{1});
  EXPECT_EQ(all[2], std::vector<int>{2});
}

TEST(EnumerateAppearances, SingleAttackerOn2x2) {
  const auto scheme = make_attacker_position_scheme(2, {0}, 4);
  EXPECT_EQ(scheme.num_appearances(), 4);
}

TEST(EnumerateAppearances, TwoAttackersOn3x3) {
  const auto scheme = make_attacker_position_scheme(3, {4, 7}, 9);
  EXPECT_EQ(scheme.num_appearances(), 81);
  // truthful configuration is present
  const auto identity = scheme.appearance_tuple(scheme.identity_appearance());
  EXPECT_EQ(identity, (std::vector<int>{4, 7}));
}

TEST(EnumerateAppearances, IndexTupleRoundTrip) {
  const auto scheme = make_attacker_position_scheme(2, {1, 2}, 4);
  for (int id = 0; id < scheme.num_appearances(); ++id)
    EXPECT_EQ(scheme.appearance_index(scheme.appearance_tuple(id)), id);
}

TEST(Perceive, RingIdentityKeepsOwnState) {
  const auto scheme = make_rotation_scheme(3);
  const Perception p = scheme.perceive(0, {2}, 0);
  EXPECT_EQ(p.own_state, 2);
  EXPECT_EQ(p.env_config, 0);
}

TEST(Perceive, RingRotationShiftsByConvention) {
  const auto plus = make_rotation_scheme(3, true);
  EXPECT_EQ(plus.perceive(1, {0}, 0).own_state, 1);
  const auto minus = make_rotation_scheme(3, false);
  EXPECT_EQ(minus.perceive(1, {0}, 0).own_state, 2);
}

TEST(Perceive, ChessboardCamouflagePerceivesAdvertisedPlacement) {
  // one attacker truly at (1,1) on a 2x2 board, camouflaged to (0,0)
  const int q = 2;
  const auto scheme = make_attacker_position_scheme(q, {board_cell(q, 1, 1)}, q * q);
  const int advertised = scheme.appearance_index({board_cell(q, 0, 0)});
  const Perception p = scheme.perceive(advertised, {2, 1}, 1);
  EXPECT_EQ(p.own_state, 1);  // own state untouched
  EXPECT_EQ(p.env_config, placement_config_id(q, {board_cell(q, 0, 0)}));
}

TEST(Perceive, OutOfDomainConfigurationThrows) {
  const auto scheme = make_rotation_scheme(3);
  EXPECT_THROW(scheme.perceive(3, {0}, 0), std::out_of_range);
  EXPECT_THROW(scheme.perceive(0, {0}, 2), std::out_of_range);
}

TEST(IdentityAppearance, RingIsRotationZero) {
  const auto scheme = make_rotation_scheme(3);
  EXPECT_EQ(scheme.identity_appearance(), 0);
}

TEST(IdentityAppearance, ChessboardIsTruePlacement) {
  const int q = 3;
  const std::vector<int> cells{board_cell(q, 1, 1), board_cell(q, 2, 1)};
  const auto scheme = make_attacker_position_scheme(q, cells, q * q);
  EXPECT_EQ(scheme.appearance_tuple(scheme.identity_appearance()), cells);
  EXPECT_EQ(scheme.true_env_config(), placement_config_id(q, cells));
}

TEST(IdentityAppearance, PerceptionIsIdentityForAllAgents) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto instance = random_attack_instance(rng);
    const int identity = instance.scheme.identity_appearance();
    for (int s = 0; s < instance.mdp.num_states; ++s) {
      JointState joint(static_cast<std::size_t>(instance.num_agents), s);
      for (int i = 0; i < instance.num_agents; ++i) {
        const Perception p = instance.scheme.perceive(identity, joint, i);
        EXPECT_EQ(p.own_state, s);
        EXPECT_EQ(p.env_config, instance.true_config);
      }
    }
  }
}

TEST(SchemeValidation, AcceptsBuiltSchemes) {
  auto [ring_mdp, ring_scheme] = build_ring(RingSpec{});
  EXPECT_TRUE(validate_scheme(ring_scheme, ring_mdp).passed());

  ChessboardSpec spec;
  spec.attacker_positions = {{1, 1}, {2, 1}};
  auto [board_mdp, board_scheme] = build_chessboard(spec);
  EXPECT_TRUE(validate_scheme(board_scheme, board_mdp).passed());
}

TEST(SchemeValidation, RejectsNonTruthfulIdentity) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  scheme.perception[0][0][1] = Perception{2, 0};
  const auto report = validate_scheme(scheme, mdp);
  ASSERT_FALSE(report.passed());
  EXPECT_NE(report.to_string().find("identity"), std::string::npos);
}

TEST(SchemeValidation, RejectsTrueStatusOutsideDomain) {
  auto [mdp, scheme] = build_ring(RingSpec{});
  scheme.objects[0].true_status = 7;
  EXPECT_FALSE(validate_scheme(scheme, mdp).passed());
}

TEST(SharedObservation, EnvPartAgreesAcrossAgentsAndOwnPartDependsOnOwnState) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    const auto instance = random_attack_instance(rng);
    const auto& scheme = instance.scheme;
    ASSERT_TRUE(scheme.shared_observation);
    for (int aid = 0; aid < scheme.num_appearances(); ++aid) {
      for (int s = 0; s < instance.mdp.num_states; ++s) {
        JointState joint(2, s);
        const Perception a = scheme.perceive(aid, joint, 0);
        const Perception b = scheme.perceive(aid, joint, 1);
        EXPECT_EQ(a.env_config, b.env_config);
        EXPECT_EQ(a.own_state, b.own_state);
      }
    }
  }
}

TEST(Perceive, TotalOverAppearancesStatesAgents) {
  const auto scheme = make_attacker_position_scheme(2, {0, 3}, 4);
  for (int aid = 0; aid < scheme.num_appearances(); ++aid)
    for (int s0 = 0; s0 < 4; ++s0)
      for (int s1 = 0; s1 < 4; ++s1)
        for (int agent = 0; agent < 2; ++agent)
          EXPECT_NO_THROW(scheme.perceive(aid, {s0, s1}, agent));
}

}  // namespace
