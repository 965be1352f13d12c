#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "camo/mdp.hpp"

namespace camo {

/// What a recipient believes after observing the (possibly camouflaged)
/// world: its own state plus the environment configuration that selects its
/// reward table.
struct Perception {
  int own_state = 0;
  int env_config = 0;

  friend bool operator==(const Perception& a, const Perception& b) {
    return a.own_state == b.own_state && a.env_config == b.env_config;
  }
};

/// One controllable object: its underlying true status and the finite set of
/// appearances the attackers can dress it in. The true status is always a
/// member of the appearance domain, so "no attack" is always available.
struct CamouflageObject {
  int true_status = 0;
  std::vector<int> appearances;
};

/**
 * Camouflageable objects plus the deterministic perception map that turns an
 * appearance configuration into each recipient's delusion.
 *
 * Appearance configurations are tuples (one appearance per object) indexed in
 * mixed-radix order with object 0 most significant. The perception table is
 * indexed [appearance_id][agent_slot][own_state]; shared-observation schemes
 * store a single agent slot shared by everyone.
 */
class CamouflageScheme {
 public:
  std::string kind;  // "ring-rotation" | "attacker-position" | "table"
  std::vector<CamouflageObject> objects;
  bool shared_observation = true;
  std::vector<std::vector<std::vector<Perception>>> perception;

  int num_appearances() const {
    std::size_t n = 1;
    for (const auto& obj : objects) n *= obj.appearances.size();
    return static_cast<int>(n);
  }

  /// Appearance tuple for an id, in enumeration order.
  std::vector<int> appearance_tuple(int id) const {
    std::vector<int> tuple(objects.size(), 0);
    std::size_t rest = static_cast<std::size_t>(id);
    for (std::size_t j = objects.size(); j-- > 0;) {
      const auto& domain = objects[j].appearances;
      tuple[j] = domain[rest % domain.size()];
      rest /= domain.size();
    }
    if (rest != 0) throw std::out_of_range("appearance id out of range");
    return tuple;
  }

  /// Inverse of appearance_tuple.
  int appearance_index(const std::vector<int>& tuple) const {
    if (tuple.size() != objects.size())
      throw std::invalid_argument("appearance tuple has wrong arity");
    std::size_t id = 0;
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const auto& domain = objects[j].appearances;
      const auto it = std::find(domain.begin(), domain.end(), tuple[j]);
      if (it == domain.end())
        throw std::invalid_argument("appearance value not in object " + std::to_string(j) + " domain");
      id = id * domain.size() + static_cast<std::size_t>(it - domain.begin());
    }
    return static_cast<int>(id);
  }

  /// Cartesian product of the per-object appearance domains, id order.
  std::vector<std::vector<int>> enumerate_appearances() const {
    const int n = num_appearances();
    std::vector<std::vector<int>> all;
    all.reserve(static_cast<std::size_t>(n));
    for (int id = 0; id < n; ++id) all.push_back(appearance_tuple(id));
    return all;
  }

  /// Id of the truthful configuration (every object shows its true status).
  int identity_appearance() const {
    std::vector<int> truth(objects.size());
    for (std::size_t j = 0; j < objects.size(); ++j) truth[j] = objects[j].true_status;
    return appearance_index(truth);
  }

  /// Environment configuration the recipients perceive when nothing is
  /// camouflaged, i.e. the true configuration.
  int true_env_config() const {
    return perception[static_cast<std::size_t>(identity_appearance())][0][0].env_config;
  }

  Perception perceive(int appearance_id, const JointState& actual, int agent) const {
    if (appearance_id < 0 || appearance_id >= num_appearances())
      throw std::out_of_range("appearance id out of range");
    if (agent < 0 || static_cast<std::size_t>(agent) >= actual.size())
      throw std::out_of_range("agent index out of range");
    const auto& per_agent = perception[static_cast<std::size_t>(appearance_id)];
    const std::size_t slot = shared_observation ? 0 : static_cast<std::size_t>(agent);
    if (slot >= per_agent.size()) throw std::out_of_range("agent slot out of range");
    const int own = actual[static_cast<std::size_t>(agent)];
    if (own < 0 || static_cast<std::size_t>(own) >= per_agent[slot].size())
      throw std::out_of_range("own state out of perception table range");
    return per_agent[slot][static_cast<std::size_t>(own)];
  }

  Perception perceive(const std::vector<int>& appearance_tuple_values, const JointState& actual,
                      int agent) const {
    return perceive(appearance_index(appearance_tuple_values), actual, agent);
  }
};

/// Scheme-level invariant check against a host MDP: identity availability,
/// table shapes, perception ranges, truthfulness of the identity appearance
/// and (when flagged) the shared-observation property.
inline ValidationReport validate_scheme(const CamouflageScheme& scheme, const StageMdp& mdp) {
  ValidationReport report;
  auto fail = [&report](const std::string& what) { report.issues.push_back({what}); };

  if (scheme.objects.empty()) fail("scheme has no objects");
  for (std::size_t j = 0; j < scheme.objects.size(); ++j) {
    const auto& obj = scheme.objects[j];
    if (obj.appearances.empty()) fail("object " + std::to_string(j) + " has empty appearance domain");
    if (std::find(obj.appearances.begin(), obj.appearances.end(), obj.true_status) ==
        obj.appearances.end())
      fail("object " + std::to_string(j) + " true status not in its appearance domain");
  }
  if (!report.passed()) return report;

  const int num_app = scheme.num_appearances();
  if (scheme.perception.size() != static_cast<std::size_t>(num_app)) {
    fail("perception table must have one entry per appearance configuration");
    return report;
  }
  for (int id = 0; id < num_app; ++id) {
    const auto& per_agent = scheme.perception[static_cast<std::size_t>(id)];
    if (per_agent.empty()) {
      fail("perception[" + std::to_string(id) + "] has no agent slots");
      continue;
    }
    if (scheme.shared_observation && per_agent.size() != 1)
      fail("shared-observation scheme must use a single agent slot");
    for (std::size_t slot = 0; slot < per_agent.size(); ++slot) {
      if (per_agent[slot].size() != static_cast<std::size_t>(mdp.num_states)) {
        fail("perception rows must cover every own state");
        continue;
      }
      for (int s = 0; s < mdp.num_states; ++s) {
        const Perception& p = per_agent[slot][static_cast<std::size_t>(s)];
        if (p.own_state < 0 || p.own_state >= mdp.num_states)
          fail("perceived own state out of range at appearance " + std::to_string(id));
        if (p.env_config < 0 || p.env_config >= mdp.num_configs())
          fail("perceived env config out of range at appearance " + std::to_string(id));
      }
    }
  }
  if (!report.passed()) return report;

  const int identity = scheme.identity_appearance();
  const int truth_config = scheme.perception[static_cast<std::size_t>(identity)][0][0].env_config;
  for (std::size_t slot = 0; slot < scheme.perception[static_cast<std::size_t>(identity)].size(); ++slot) {
    for (int s = 0; s < mdp.num_states; ++s) {
      const Perception& p = scheme.perception[static_cast<std::size_t>(identity)][slot][static_cast<std::size_t>(s)];
      if (p.own_state != s)
        fail("identity appearance must preserve own state (state " + std::to_string(s) + ")");
      if (p.env_config != truth_config)
        fail("identity appearance must map to one true env config");
    }
  }
  return report;
}

/// Rotation camouflage on a cyclic state space: appearance k makes an agent
/// truly at s perceive itself at (s + k) mod S, or (s - k) mod S when
/// positive_sign is false. Appearance 0 is the identity.
inline CamouflageScheme make_rotation_scheme(int num_states, bool positive_sign = true,
                                             int true_config = 0) {
  if (num_states < 1) throw std::invalid_argument("rotation scheme needs at least one state");
  CamouflageScheme scheme;
  scheme.kind = "ring-rotation";
  scheme.shared_observation = true;
  CamouflageObject orientation;
  orientation.true_status = 0;
  for (int k = 0; k < num_states; ++k) orientation.appearances.push_back(k);
  scheme.objects.push_back(orientation);
  scheme.perception.resize(static_cast<std::size_t>(num_states));
  for (int k = 0; k < num_states; ++k) {
    auto& slot = scheme.perception[static_cast<std::size_t>(k)];
    slot.resize(1);
    slot[0].resize(static_cast<std::size_t>(num_states));
    for (int s = 0; s < num_states; ++s) {
      const int shifted = positive_sign ? (s + k) % num_states
                                        : ((s - k) % num_states + num_states) % num_states;
      slot[0][static_cast<std::size_t>(s)] = Perception{shifted, true_config};
    }
  }
  return scheme;
}

/// Attackers camouflage their own fixed positions: object j's appearance is
/// the cell attacker j advertises. The perceived environment configuration is
/// the advertised placement tuple; own-state perception is untouched.
/// Appearance ids coincide with the env-config ids produced by the matching
/// chessboard builder.
inline CamouflageScheme make_attacker_position_scheme(int q, const std::vector<int>& true_cells,
                                                      int num_states) {
  if (q < 1) throw std::invalid_argument("board side must be >= 1");
  const int cells = q * q;
  CamouflageScheme scheme;
  scheme.kind = "attacker-position";
  scheme.shared_observation = true;
  for (int cell : true_cells) {
    if (cell < 0 || cell >= cells) throw std::invalid_argument("attacker cell off the board");
    CamouflageObject obj;
    obj.true_status = cell;
    for (int c = 0; c < cells; ++c) obj.appearances.push_back(c);
    scheme.objects.push_back(obj);
  }
  const int num_app = scheme.num_appearances();
  scheme.perception.resize(static_cast<std::size_t>(num_app));
  for (int id = 0; id < num_app; ++id) {
    auto& slot = scheme.perception[static_cast<std::size_t>(id)];
    slot.resize(1);
    slot[0].resize(static_cast<std::size_t>(num_states));
    for (int s = 0; s < num_states; ++s)
      slot[0][static_cast<std::size_t>(s)] = Perception{s, id};
  }
  return scheme;
}

/// Fully tabular scheme; rows give the shared perception per own state for
/// each appearance configuration. Used for synthetic instances.
inline CamouflageScheme make_table_scheme(std::vector<CamouflageObject> objects,
                                          std::vector<std::vector<std::vector<Perception>>> perception,
                                          bool shared_observation = true) {
  CamouflageScheme scheme;
  scheme.kind = "table";
  scheme.objects = std::move(objects);
  scheme.perception = std::move(perception);
  scheme.shared_observation = shared_observation;
  return scheme;
}

}  // namespace camo
