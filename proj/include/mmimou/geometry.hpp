// SPDX-License-Identifier: Apache-2.0
//
// mmimou - system-level simulator for massive MIMO in unlicensed indoor bands
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "mmimou/common.hpp"

namespace mmimou {

struct FloorPlan {
  double width_m = 120.0;
  double depth_m = 50.0;
  double ap_height_m = 3.0;
  double sta_height_m = 1.5;

  bool valid() const {
    return width_m > 0 && depth_m > 0 && ap_height_m > 0 && sta_height_m > 0;
  }
};

enum class Role { AP, STA };

struct Point3 {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

struct NodeDescriptor {
  int id = 0;
  Role role = Role::STA;
  Point3 position;
  int num_antennas = 1;
  // Planar array layout (rows x cols == num_antennas), horizontal plane.
  int array_rows = 1;
  int array_cols = 1;
  double max_power_dbm = 18.0;

  bool is_ap() const { return role == Role::AP; }
  friend bool operator==(const NodeDescriptor&, const NodeDescriptor&) = default;
};

/// Inputs of the deployment generator; the engine fills this from its config.
struct DeploymentParams {
  FloorPlan floor;
  int num_stas = 30;
  double ap_power_dbm = 24.0;
  double sta_power_dbm = 18.0;
  // Antenna array per AP, left to right. Exactly three APs.
  struct ArrayShape {
    int rows = 1;
    int cols = 1;
  };
  std::vector<ArrayShape> ap_arrays = {{1, 1}, {1, 1}, {1, 1}};
};

struct Deployment {
  FloorPlan floor;
  std::vector<NodeDescriptor> nodes;  // APs first (ids 0..2), then STAs

  std::span<const NodeDescriptor> aps() const {
    return std::span(nodes).first(num_aps);
  }
  std::span<const NodeDescriptor> stas() const {
    return std::span(nodes).subspan(num_aps);
  }
  std::size_t num_aps = 0;
};

/// Three ceiling APs at the midpoints of the corridor thirds, STAs i.i.d.
/// uniform over the floor rectangle.
template <class Rng>
Deployment generate_drop(const DeploymentParams& params, Rng& rng) {
  if (!params.floor.valid())
    throw std::invalid_argument("generate_drop: floor dimensions must be positive");
  if (params.num_stas <= 0)
    throw std::invalid_argument("generate_drop: STA count must be positive");
  if (params.ap_arrays.size() != 3)
    throw std::invalid_argument("generate_drop: exactly three APs are supported");

  const FloorPlan& f = params.floor;
  Deployment d;
  d.floor = f;
  d.num_aps = params.ap_arrays.size();

  const double n_aps = static_cast<double>(d.num_aps);
  for (std::size_t a = 0; a < d.num_aps; ++a) {
    const auto& arr = params.ap_arrays[a];
    if (arr.rows < 1 || arr.cols < 1)
      throw std::invalid_argument("generate_drop: antenna array dimensions must be >= 1");
    NodeDescriptor n;
    n.id = static_cast<int>(a);
    n.role = Role::AP;
    n.position = {f.width_m * (static_cast<double>(a) + 0.5) / n_aps, f.depth_m / 2.0,
                  f.ap_height_m};
    n.array_rows = arr.rows;
    n.array_cols = arr.cols;
    n.num_antennas = arr.rows * arr.cols;
    n.max_power_dbm = params.ap_power_dbm;
    d.nodes.push_back(n);
  }

  std::uniform_real_distribution<double> ux(0.0, f.width_m);
  std::uniform_real_distribution<double> uy(0.0, f.depth_m);
  for (int s = 0; s < params.num_stas; ++s) {
    NodeDescriptor n;
    n.id = static_cast<int>(d.num_aps) + s;
    n.role = Role::STA;
    const double x = ux(rng);
    const double y = uy(rng);
    n.position = {x, y, f.sta_height_m};
    n.max_power_dbm = params.sta_power_dbm;
    d.nodes.push_back(n);
  }
  return d;
}

inline Deployment generate_drop(const DeploymentParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return generate_drop(params, rng);
}

struct AssociationMap {
  std::map<int, int> serving_ap;             // sta id -> ap id
  std::map<int, std::vector<int>> served;    // ap id -> sta ids, ascending

  int ap_of(int sta) const { return serving_ap.at(sta); }
  const std::vector<int>& users_of(int ap) const {
    static const std::vector<int> none;
    auto it = served.find(ap);
    return it == served.end() ? none : it->second;
  }
};

/// Strongest average RSS association. `slow_gain_db(s, a)` is the slow gain
/// between stas[s] and aps[a]. Ties go to the lowest AP id.
inline AssociationMap associate(std::span<const NodeDescriptor> stas,
                                std::span<const NodeDescriptor> aps,
                                const Eigen::MatrixXd& slow_gain_db) {
  if (slow_gain_db.rows() != static_cast<Eigen::Index>(stas.size()) ||
      slow_gain_db.cols() != static_cast<Eigen::Index>(aps.size()))
    throw ContractError("associate: slow gain table does not cover every (STA, AP) pair");
  if (!stas.empty() && aps.empty())
    throw ContractError("associate: no APs");

  AssociationMap m;
  for (const auto& ap : aps) m.served[ap.id];
  for (std::size_t s = 0; s < stas.size(); ++s) {
    int best = -1;
    double best_rss = 0.0;
    for (std::size_t a = 0; a < aps.size(); ++a) {
      const double rss = aps[a].max_power_dbm + slow_gain_db(s, a);
      if (best < 0 || rss > best_rss || (rss == best_rss && aps[a].id < best)) {
        best = aps[a].id;
        best_rss = rss;
      }
    }
    m.serving_ap[stas[s].id] = best;
    m.served[best].push_back(stas[s].id);
  }
  for (auto& [ap, users] : m.served) std::sort(users.begin(), users.end());
  return m;
}

/// True iff every STA receives at least `min_rss_dbm` from its serving AP at
/// maximum power.
inline bool validate_coverage(const AssociationMap& assoc,
                              std::span<const NodeDescriptor> stas,
                              std::span<const NodeDescriptor> aps,
                              const Eigen::MatrixXd& slow_gain_db,
                              double min_rss_dbm = -82.0) {
  for (std::size_t s = 0; s < stas.size(); ++s) {
    const int ap_id = assoc.ap_of(stas[s].id);
    for (std::size_t a = 0; a < aps.size(); ++a) {
      if (aps[a].id != ap_id) continue;
      if (aps[a].max_power_dbm + slow_gain_db(s, a) < min_rss_dbm) return false;
    }
  }
  return true;
}

}  // namespace mmimou
