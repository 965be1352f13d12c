#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "camo/attack_model.hpp"
#include "camo/mdp.hpp"

namespace camo {

/// Random stage MDP with normalized transition rows and rewards in [0, 10].
inline StageMdp random_mdp(std::mt19937_64& rng, int num_states, int num_actions, int horizon,
                           int num_configs = 1) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StageMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.horizon = horizon;
  for (int c = 0; c < num_configs; ++c) mdp.env_configs.push_back("cfg" + std::to_string(c));

  mdp.transition.resize(static_cast<std::size_t>(horizon));
  for (auto& per_state : mdp.transition) {
    per_state.resize(static_cast<std::size_t>(num_states));
    for (auto& per_action : per_state) {
      per_action.resize(static_cast<std::size_t>(num_actions));
      for (auto& row : per_action) {
        row.resize(static_cast<std::size_t>(num_states));
        double sum = 0.0;
        for (double& p : row) {
          p = unit(rng) + 1e-3;
          sum += p;
        }
        for (double& p : row) p /= sum;
      }
    }
  }

  mdp.reward.resize(static_cast<std::size_t>(num_configs));
  for (auto& per_step : mdp.reward) {
    per_step.resize(static_cast<std::size_t>(horizon));
    for (auto& table : per_step) {
      table.resize(static_cast<std::size_t>(num_states));
      for (auto& row : table) {
        row.resize(static_cast<std::size_t>(num_states));
        for (double& r : row) r = 10.0 * unit(rng);
      }
    }
  }
  return mdp;
}

/// Random shared-observation scheme over one object: appearance 0 is the
/// identity (truthful perception), every other appearance plants an arbitrary
/// (own state, env config) delusion per actual own state.
inline CamouflageScheme random_table_scheme(std::mt19937_64& rng, int num_states, int num_configs,
                                            int true_config, int num_appearances) {
  std::uniform_int_distribution<int> pick_state(0, num_states - 1);
  std::uniform_int_distribution<int> pick_config(0, num_configs - 1);

  CamouflageObject object;
  object.true_status = 0;
  for (int k = 0; k < num_appearances; ++k) object.appearances.push_back(k);

  std::vector<std::vector<std::vector<Perception>>> table(
      static_cast<std::size_t>(num_appearances));
  for (int k = 0; k < num_appearances; ++k) {
    table[static_cast<std::size_t>(k)].resize(1);
    auto& row = table[static_cast<std::size_t>(k)][0];
    row.resize(static_cast<std::size_t>(num_states));
    for (int s = 0; s < num_states; ++s)
      row[static_cast<std::size_t>(s)] =
          (k == 0) ? Perception{s, true_config} : Perception{pick_state(rng), pick_config(rng)};
  }
  return make_table_scheme({object}, std::move(table));
}

/// Random normalized joint distribution.
inline Dist random_joint_dist(std::mt19937_64& rng, int num_states, int num_agents) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dist dist(joint_count(num_states, num_agents));
  double sum = 0.0;
  for (double& p : dist) {
    p = unit(rng) + 1e-3;
    sum += p;
  }
  for (double& p : dist) p /= sum;
  return dist;
}

struct RandomInstance {
  StageMdp mdp;
  CamouflageScheme scheme;
  int num_agents = 1;
  int true_config = 0;
  Dist init;
};

/// Small randomized attack instance inside the certification caps.
inline RandomInstance random_attack_instance(std::mt19937_64& rng, int max_states = 3,
                                             int max_agents = 2, int max_horizon = 2,
                                             int max_appearances = 4) {
  std::uniform_int_distribution<int> pick_states(2, max_states);
  std::uniform_int_distribution<int> pick_actions(2, 3);
  std::uniform_int_distribution<int> pick_horizon(1, max_horizon);
  std::uniform_int_distribution<int> pick_agents(1, max_agents);
  std::uniform_int_distribution<int> pick_appearances(2, max_appearances);
  std::uniform_int_distribution<int> pick_configs(1, 2);

  RandomInstance instance;
  const int S = pick_states(rng);
  const int K = pick_configs(rng);
  instance.mdp = random_mdp(rng, S, pick_actions(rng), pick_horizon(rng), K);
  std::uniform_int_distribution<int> pick_config(0, K - 1);
  instance.true_config = pick_config(rng);
  instance.scheme = random_table_scheme(rng, S, K, instance.true_config, pick_appearances(rng));
  instance.num_agents = pick_agents(rng);
  instance.init = random_joint_dist(rng, S, instance.num_agents);
  return instance;
}

/// Random function tables for the constrained-vs-free gap suite.
inline std::vector<std::vector<double>> random_function_table(std::mt19937_64& rng, int n,
                                                              int domain) {
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  std::vector<std::vector<double>> functions(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(domain)));
  for (auto& f : functions)
    for (double& v : f) v = value(rng);
  return functions;
}

}  // namespace camo
