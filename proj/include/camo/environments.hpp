#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "camo/attack_model.hpp"
#include "camo/mdp.hpp"

namespace camo {

/// Three-state ring world. Actions: 0 = left (-1 mod 3), 1 = right (+1 mod 3),
/// 2 = stay. The reward table is stored as printed, rows indexed by the first
/// header label; rows_are_destination controls whether that label is s_t
/// (default) or s_{t-1}.
struct RingSpec {
  int num_positions = 3;
  std::array<std::array<double, 3>, 3> reward_table = {{{3.0, 10.6, 1.0},
                                                        {10.0, 1.0, 0.0},
                                                        {1.0, 0.0, 11.6}}};
  double move_success = 0.8;   // left/right: intended direction
  double stay_success = 0.8;   // stay: remain in place
  double stay_slip = 0.1;      // stay: drift one step either way
  bool rows_are_destination = true;
  bool rotation_positive = true;  // perceived own state = (s + k) mod 3
  int horizon = 5;
};

inline std::pair<StageMdp, CamouflageScheme> build_ring(const RingSpec& spec) {
  if (spec.num_positions != 3)
    throw std::invalid_argument("ring world is defined for exactly 3 positions");
  if (spec.horizon < 0) throw std::invalid_argument("horizon must be >= 0");

  const int S = 3;
  const int A = 3;
  StageMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.horizon = spec.horizon;
  mdp.env_configs = {"ring"};

  std::vector<std::vector<std::vector<double>>> step_transition(
      S, std::vector<std::vector<double>>(A, std::vector<double>(S, 0.0)));
  const double slip = 1.0 - spec.move_success;
  for (int s = 0; s < S; ++s) {
    const int left = (s + S - 1) % S;
    const int right = (s + 1) % S;
    step_transition[s][0][left] += spec.move_success;
    step_transition[s][0][right] += slip;
    step_transition[s][1][right] += spec.move_success;
    step_transition[s][1][left] += slip;
    step_transition[s][2][s] += spec.stay_success;
    step_transition[s][2][left] += spec.stay_slip;
    step_transition[s][2][right] += spec.stay_slip;
  }

  std::vector<std::vector<double>> step_reward(S, std::vector<double>(S, 0.0));
  for (int prev = 0; prev < S; ++prev)
    for (int next = 0; next < S; ++next)
      step_reward[prev][next] = spec.rows_are_destination
                                    ? spec.reward_table[static_cast<std::size_t>(next)][static_cast<std::size_t>(prev)]
                                    : spec.reward_table[static_cast<std::size_t>(prev)][static_cast<std::size_t>(next)];

  mdp.transition.assign(static_cast<std::size_t>(spec.horizon), step_transition);
  mdp.reward.assign(1, std::vector<std::vector<std::vector<double>>>(
                           static_cast<std::size_t>(spec.horizon), step_reward));

  CamouflageScheme scheme = make_rotation_scheme(S, spec.rotation_positive, 0);
  return {std::move(mdp), std::move(scheme)};
}

/// q x q chessboard with fixed attackers. Recipients move deterministically
/// (up/down/left/right, clamped at the edges); rewards depend only on the
/// entered cell and on the perceived attacker placement.
struct ChessboardSpec {
  int q = 3;
  std::vector<std::pair<int, int>> attacker_positions;
  double base_reward = 5.0;
  std::pair<int, int> bonus_cell = {0, 1};
  double bonus_reward = 10.0;
  double attacker_reward = 1.0;
  int horizon = 5;
};

inline int board_cell(int q, int row, int col) { return row * q + col; }

/// Env-config id of a placement tuple; attacker 0 is the most significant
/// digit in base q*q. The builder and the attacker-position scheme share this
/// numbering, so appearance ids double as env-config ids.
inline int placement_config_id(int q, const std::vector<int>& cells) {
  const std::size_t base = static_cast<std::size_t>(q) * static_cast<std::size_t>(q);
  std::size_t id = 0;
  for (int cell : cells) id = id * base + static_cast<std::size_t>(cell);
  return static_cast<int>(id);
}

inline std::pair<StageMdp, CamouflageScheme> build_chessboard(const ChessboardSpec& spec) {
  if (spec.q < 1) throw std::invalid_argument("board side must be >= 1");
  if (spec.horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (spec.attacker_positions.empty()) throw std::invalid_argument("need at least one attacker");

  const int q = spec.q;
  const int S = q * q;
  const int A = 4;  // 0 = up, 1 = down, 2 = left, 3 = right
  const int m = static_cast<int>(spec.attacker_positions.size());

  std::vector<int> true_cells;
  for (const auto& [row, col] : spec.attacker_positions) {
    if (row < 0 || row >= q || col < 0 || col >= q)
      throw std::invalid_argument("attacker position off the board");
    true_cells.push_back(board_cell(q, row, col));
  }
  for (std::size_t i = 0; i < true_cells.size(); ++i)
    for (std::size_t j = i + 1; j < true_cells.size(); ++j)
      if (true_cells[i] == true_cells[j])
        throw std::invalid_argument("attacker positions must be distinct");

  StageMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.horizon = spec.horizon;

  std::vector<std::vector<std::vector<double>>> step_transition(
      S, std::vector<std::vector<double>>(A, std::vector<double>(S, 0.0)));
  for (int row = 0; row < q; ++row) {
    for (int col = 0; col < q; ++col) {
      const int s = board_cell(q, row, col);
      const std::array<std::pair<int, int>, 4> moves = {{{row - 1, col}, {row + 1, col},
                                                         {row, col - 1}, {row, col + 1}}};
      for (int a = 0; a < A; ++a) {
        auto [r2, c2] = moves[static_cast<std::size_t>(a)];
        // moves beyond the boundary leave the recipient in place
        if (r2 < 0 || r2 >= q || c2 < 0 || c2 >= q) { r2 = row; c2 = col; }
        step_transition[s][a][board_cell(q, r2, c2)] = 1.0;
      }
    }
  }
  mdp.transition.assign(static_cast<std::size_t>(spec.horizon), step_transition);

  // one reward table per perceived placement tuple (cells may repeat: a
  // camouflaged placement is any tuple of advertised cells)
  const int bonus = board_cell(q, spec.bonus_cell.first, spec.bonus_cell.second);
  std::size_t num_configs = 1;
  for (int j = 0; j < m; ++j) num_configs *= static_cast<std::size_t>(S);
  mdp.env_configs.resize(num_configs);
  mdp.reward.resize(num_configs);
  std::vector<int> placement(static_cast<std::size_t>(m), 0);
  for (std::size_t cfg = 0; cfg < num_configs; ++cfg) {
    std::size_t rest = cfg;
    for (std::size_t j = static_cast<std::size_t>(m); j-- > 0;) {
      placement[j] = static_cast<int>(rest % static_cast<std::size_t>(S));
      rest /= static_cast<std::size_t>(S);
    }
    std::string name;
    for (std::size_t j = 0; j < placement.size(); ++j) {
      if (j) name += ';';
      name += '(' + std::to_string(placement[j] / q) + ',' + std::to_string(placement[j] % q) + ')';
    }
    mdp.env_configs[cfg] = name;

    std::vector<double> cell_reward(static_cast<std::size_t>(S), spec.base_reward);
    cell_reward[static_cast<std::size_t>(bonus)] = spec.bonus_reward;
    // attacker occupancy wins over the bonus cell
    for (int cell : placement) cell_reward[static_cast<std::size_t>(cell)] = spec.attacker_reward;

    std::vector<std::vector<double>> step_reward(static_cast<std::size_t>(S),
                                                 std::vector<double>(static_cast<std::size_t>(S), 0.0));
    for (int prev = 0; prev < S; ++prev)
      for (int next = 0; next < S; ++next)
        step_reward[static_cast<std::size_t>(prev)][static_cast<std::size_t>(next)] =
            cell_reward[static_cast<std::size_t>(next)];
    mdp.reward[cfg].assign(static_cast<std::size_t>(spec.horizon), step_reward);
  }

  CamouflageScheme scheme = make_attacker_position_scheme(q, true_cells, S);
  return {std::move(mdp), std::move(scheme)};
}

/// All ordered tuples of m distinct cells on a q x q board, enumeration order.
inline std::vector<std::vector<int>> enumerate_attacker_placements(int q, int m) {
  const int cells = q * q;
  std::vector<std::vector<int>> placements;
  std::vector<int> tuple;
  auto recurse = [&](auto&& self) -> void {
    if (static_cast<int>(tuple.size()) == m) {
      placements.push_back(tuple);
      return;
    }
    for (int c = 0; c < cells; ++c) {
      if (std::find(tuple.begin(), tuple.end(), c) != tuple.end()) continue;
      tuple.push_back(c);
      self(self);
      tuple.pop_back();
    }
  };
  recurse(recurse);
  return placements;
}

/**
 * Runs `run` on the chessboard instance built for every placement in the
 * sweep set and averages the returned trajectories uniformly. The default
 * sweep set is every ordered placement of the template's attacker count; a
 * one-element set reduces the sweep to a direct run. `run` gets the instance
 * plus the placement cells and must return a trajectory of fixed length.
 */
template <class RunFn>
std::vector<double> attacker_position_sweep(const ChessboardSpec& spec_template, RunFn&& run,
                                            std::vector<std::vector<int>> placements = {}) {
  const int m = static_cast<int>(spec_template.attacker_positions.size());
  if (placements.empty()) placements = enumerate_attacker_placements(spec_template.q, m);
  if (placements.empty()) throw std::invalid_argument("no attacker placements to sweep");

  std::vector<double> average;
  for (const auto& cells : placements) {
    ChessboardSpec spec = spec_template;
    spec.attacker_positions.clear();
    for (int cell : cells)
      spec.attacker_positions.emplace_back(cell / spec.q, cell % spec.q);
    auto [mdp, scheme] = build_chessboard(spec);
    const std::vector<double> trajectory = run(mdp, scheme, cells);
    if (average.empty()) average.assign(trajectory.size(), 0.0);
    if (trajectory.size() != average.size())
      throw std::invalid_argument("sweep trajectories must have equal length");
    for (std::size_t i = 0; i < trajectory.size(); ++i) average[i] += trajectory[i];
  }
  for (double& v : average) v /= static_cast<double>(placements.size());
  return average;
}

}  // namespace camo
