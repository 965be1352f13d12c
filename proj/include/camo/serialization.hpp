#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "camo/attack_model.hpp"
#include "camo/bounds.hpp"
#include "camo/mdp.hpp"
#include "camo/planners.hpp"

namespace camo {

/**
 * MDP document schema:
 *   num_states, num_actions, horizon : integers
 *   env_configs : array of names (optional, defaults to ["default"])
 *   transitions : [t][s][a][s'] probabilities, one entry per step 1..horizon
 *   rewards     : object keyed by env config name; each value is either a
 *                 [s_prev][s_next] table (applied to every step) or a
 *                 [t][s_prev][s_next] stack
 * Probabilities are validated on load.
 */
inline nlohmann::json mdp_to_json(const StageMdp& mdp) {
  nlohmann::json doc;
  doc["num_states"] = mdp.num_states;
  doc["num_actions"] = mdp.num_actions;
  doc["horizon"] = mdp.horizon;
  doc["env_configs"] = mdp.env_configs;
  doc["transitions"] = mdp.transition;
  nlohmann::json rewards = nlohmann::json::object();
  for (int c = 0; c < mdp.num_configs(); ++c)
    rewards[mdp.env_configs[static_cast<std::size_t>(c)]] = mdp.reward[static_cast<std::size_t>(c)];
  doc["rewards"] = rewards;
  return doc;
}

inline StageMdp mdp_from_json(const nlohmann::json& doc) {
  StageMdp mdp;
  try {
    mdp.num_states = doc.at("num_states").get<int>();
    mdp.num_actions = doc.at("num_actions").get<int>();
    mdp.horizon = doc.at("horizon").get<int>();
    if (doc.contains("env_configs"))
      mdp.env_configs = doc.at("env_configs").get<std::vector<std::string>>();
    else
      mdp.env_configs = {"default"};
    mdp.transition =
        doc.at("transitions").get<std::vector<std::vector<std::vector<std::vector<double>>>>>();

    const auto& rewards = doc.at("rewards");
    mdp.reward.resize(mdp.env_configs.size());
    for (std::size_t c = 0; c < mdp.env_configs.size(); ++c) {
      const auto& entry = rewards.at(mdp.env_configs[c]);
      if (!entry.is_array() || entry.empty())
        throw std::invalid_argument("reward entry must be a non-empty array");
      const bool stage_indexed = entry[0].is_array() && !entry[0].empty() && entry[0][0].is_array();
      if (stage_indexed) {
        mdp.reward[c] = entry.get<std::vector<std::vector<std::vector<double>>>>();
      } else {
        const auto table = entry.get<std::vector<std::vector<double>>>();
        mdp.reward[c].assign(static_cast<std::size_t>(mdp.horizon), table);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed MDP document: ") + e.what());
  }

  const ValidationReport report = validate_mdp(mdp);
  if (!report.passed())
    throw std::invalid_argument("MDP document failed validation:\n" + report.to_string());
  return mdp;
}

inline void save_mdp(const StageMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << mdp_to_json(mdp).dump(2) << '\n';
}

inline StageMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  return mdp_from_json(doc);
}

inline nlohmann::json scheme_to_json(const CamouflageScheme& scheme) {
  nlohmann::json doc;
  doc["kind"] = scheme.kind;
  doc["shared_observation"] = scheme.shared_observation;
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& obj : scheme.objects)
    objects.push_back({{"true_status", obj.true_status}, {"appearances", obj.appearances}});
  doc["objects"] = objects;
  return doc;
}

inline nlohmann::json value_table_to_json(const ValueTable& values) {
  nlohmann::json doc;
  doc["pre"] = values.pre;
  doc["post"] = values.post;
  return doc;
}

inline nlohmann::json plan_to_json(const AttackPlan& plan) {
  nlohmann::json doc;
  switch (plan.mode) {
    case AttackMode::Camouflage:
      doc["mode"] = "camouflage";
      doc["appearance"] = plan.appearance;
      break;
    case AttackMode::StatePerception: {
      doc["mode"] = "state-perception";
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& per_joint : plan.delusion) {
        nlohmann::json joints = nlohmann::json::array();
        for (const auto& per_agent : per_joint) {
          nlohmann::json agents = nlohmann::json::array();
          for (const auto& p : per_agent)
            agents.push_back({{"own_state", p.own_state}, {"env_config", p.env_config}});
          joints.push_back(agents);
        }
        stages.push_back(joints);
      }
      doc["delusion"] = stages;
      break;
    }
    case AttackMode::Budgeted: {
      doc["mode"] = "budgeted";
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& per_joint : plan.allocation) {
        nlohmann::json joints = nlohmann::json::array();
        for (const auto& alloc : per_joint)
          joints.push_back({{"target", alloc.target}, {"spend", alloc.spend}});
        stages.push_back(joints);
      }
      doc["allocation"] = stages;
      break;
    }
  }
  return doc;
}

inline nlohmann::json gap_report_to_json(const GapReport& report) {
  return nlohmann::json{{"o1", report.constrained_optimum},
                        {"o2", report.unconstrained_optimum},
                        {"bound", report.bound},
                        {"holds", report.holds},
                        {"shared_minimizer", report.shared_minimizer},
                        {"per_function_minimizers", report.per_function_minimizers},
                        {"bound_witness", report.bound_witness}};
}

}  // namespace camo
