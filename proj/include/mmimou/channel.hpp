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

#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "mmimou/common.hpp"
#include "mmimou/geometry.hpp"

namespace mmimou {

// ----- Parameters ---------------------------------------------------------

/// Indoor-hotspot path loss: PL = a + b*log10(d) + c*log10(f_GHz).
struct PathLossParams {
  double los_intercept_db = 32.8;
  double los_slope_db = 16.9;
  double nlos_intercept_db = 11.5;
  double nlos_slope_db = 43.3;
  double freq_coeff_db = 20.0;
};

struct FadingParams {
  // Ricean K factor of LOS links, log-normal in dB.
  double k_factor_mean_db = 9.0;
  double k_factor_std_db = 5.0;
  double carrier_ghz = 5.18;
};

struct ChannelParams {
  PathLossParams path_loss;
  FadingParams fading;
  double shadowing_los_std_db = 3.0;
  double shadowing_nlos_std_db = 4.0;
};

// ----- Large-scale model --------------------------------------------------

/// Indoor LOS probability versus 3D distance.
inline double los_probability(double d_3d) {
  if (!(d_3d >= 0.0)) throw std::invalid_argument("los_probability: negative distance");
  if (d_3d <= 18.0) return 1.0;
  if (d_3d <= 37.0) return std::exp(-(d_3d - 18.0) / 27.0);
  return 0.5;
}

/// Distances below 1 m are clamped to 1 m. The NLOS loss is never below the
/// LOS loss at the same distance.
inline double path_loss_db(double d_3d, bool los, double carrier_ghz,
                           const PathLossParams& p = {}) {
  const double d = std::max(d_3d, 1.0);
  const double freq_term = p.freq_coeff_db * std::log10(carrier_ghz);
  const double pl_los = p.los_intercept_db + p.los_slope_db * std::log10(d) + freq_term;
  if (los) return pl_los;
  return std::max(pl_los, p.nlos_intercept_db + p.nlos_slope_db * std::log10(d) + freq_term);
}

// ----- Link ---------------------------------------------------------------

/// Channel between nodes i and j. The signal received at i from j is
/// sqrt(slow_gain_linear) * H * x_j, H being M_i x M_j; the reverse direction
/// uses H^H.
struct LinkChannel {
  bool los = false;
  double path_loss_db = 0.0;
  double shadowing_db = 0.0;  // added to the loss
  double k_factor = 0.0;      // linear; +inf for pure LOS
  double slow_gain_linear = 1.0;
  CMatrix H;

  double slow_gain_db() const { return -(path_loss_db + shadowing_db); }
};

/// Unit-modulus array response of `node` toward `toward` for a horizontal
/// half-wavelength planar array. Single-antenna nodes return [1].
inline CVector steering_vector(const NodeDescriptor& node, const Point3& toward) {
  CVector a(node.num_antennas);
  const double d = distance(node.position, toward);
  const double ux = d > 0 ? (toward.x - node.position.x) / d : 0.0;
  const double uy = d > 0 ? (toward.y - node.position.y) / d : 0.0;
  for (int r = 0; r < node.array_rows; ++r)
    for (int c = 0; c < node.array_cols; ++c)
      a(r * node.array_cols + c) = std::polar(1.0, std::numbers::pi * (r * ux + c * uy));
  return a;
}

/// Standard complex Gaussian CN(0, 1) entries.
template <class Rng>
CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = n(rng);
      const double im = n(rng);
      m(r, c) = cd(re, im);
    }
  return m;
}

/// Ricean small-scale fading: sqrt(K/(K+1)) * LOS + sqrt(1/(K+1)) * Rayleigh.
/// The LOS part is the rank-one product of the two array responses with a
/// uniformly random common phase.
template <class Rng>
CMatrix sample_fading(const NodeDescriptor& i, const NodeDescriptor& j, double k_factor,
                      Rng& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double phi = phase(rng);
  CMatrix rayleigh = complex_gaussian(i.num_antennas, j.num_antennas, rng);
  if (k_factor <= 0.0) return rayleigh;
  CMatrix los = std::polar(1.0, phi) * steering_vector(i, j.position) *
                steering_vector(j, i.position).adjoint();
  if (std::isinf(k_factor)) return los;
  return std::sqrt(k_factor / (k_factor + 1.0)) * los +
         std::sqrt(1.0 / (k_factor + 1.0)) * rayleigh;
}

/// Draws the per-drop part of a link: LOS state, path loss, shadowing and K.
/// NLOS links are Rayleigh (K = 0).
template <class Rng>
LinkChannel sample_large_scale(const NodeDescriptor& i, const NodeDescriptor& j,
                               const ChannelParams& params, Rng& rng) {
  if (i.id == j.id) throw ContractError("sample_link: a node has no channel to itself");
  const double d = distance(i.position, j.position);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);

  LinkChannel link;
  link.los = u(rng) < los_probability(d);
  link.path_loss_db = path_loss_db(d, link.los, params.fading.carrier_ghz, params.path_loss);
  link.shadowing_db =
      (link.los ? params.shadowing_los_std_db : params.shadowing_nlos_std_db) * n(rng);
  const double k_db = params.fading.k_factor_mean_db + params.fading.k_factor_std_db * n(rng);
  link.k_factor = link.los ? db_to_linear(k_db) : 0.0;
  link.slow_gain_linear = db_to_linear(link.slow_gain_db());
  return link;
}

template <class Rng>
LinkChannel sample_link(const NodeDescriptor& i, const NodeDescriptor& j,
                        const ChannelParams& params, Rng& rng) {
  LinkChannel link = sample_large_scale(i, j, params, rng);
  link.H = sample_fading(i, j, link.k_factor, rng);
  return link;
}

// ----- All node pairs -----------------------------------------------------

/// Reciprocal channels between every pair of nodes. Only i < j is stored.
class ChannelTable {
 public:
  ChannelTable() = default;

  /// Draws large-scale parameters and one fading realization for all pairs.
  template <class Rng>
  ChannelTable(std::span<const NodeDescriptor> nodes, const ChannelParams& params, Rng& rng)
      : nodes_(nodes.begin(), nodes.end()), links_(pair_count(nodes.size())) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].id != static_cast<int>(i))
        throw ContractError("ChannelTable: node ids must equal their index");
      for (std::size_t j = i + 1; j < nodes_.size(); ++j)
        links_[index(i, j)] = sample_large_scale(nodes_[i], nodes_[j], params, rng);
    }
    resample_fading(rng);
  }

  /// New block-fading realization; large-scale parameters are kept.
  template <class Rng>
  void resample_fading(Rng& rng) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
        auto& l = links_[index(i, j)];
        l.H = sample_fading(nodes_[i], nodes_[j], l.k_factor, rng);
      }
  }

  std::size_t size() const { return nodes_.size(); }
  const NodeDescriptor& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::span<const NodeDescriptor> nodes() const { return nodes_; }

  const LinkChannel& link(int i, int j) const {
    check(i, j);
    return i < j ? links_[index(i, j)] : links_[index(j, i)];
  }
  LinkChannel& link(int i, int j) {
    check(i, j);
    return i < j ? links_[index(i, j)] : links_[index(j, i)];
  }

  double slow_gain(int i, int j) const { return link(i, j).slow_gain_linear; }
  double slow_gain_db(int i, int j) const { return link(i, j).slow_gain_db(); }

  /// Fading matrix seen at `rx` from `tx` (M_rx x M_tx); slow gain excluded.
  CMatrix response(int rx, int tx) const {
    const auto& l = link(rx, tx);
    return rx < tx ? l.H : CMatrix(l.H.adjoint());
  }

 private:
  static std::size_t pair_count(std::size_t n) { return n * (n > 0 ? n - 1 : 0) / 2; }
  std::size_t index(std::size_t i, std::size_t j) const {
    // row-major upper triangle without diagonal
    const std::size_t n = nodes_.size();
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  }
  void check(int i, int j) const {
    const int n = static_cast<int>(nodes_.size());
    if (i == j || i < 0 || j < 0 || i >= n || j >= n)
      throw ContractError("ChannelTable: no link between " + std::to_string(i) + " and " +
                          std::to_string(j));
  }

  std::vector<NodeDescriptor> nodes_;
  std::vector<LinkChannel> links_;
};

/// A node radiating during the current round.
struct ActiveTransmitter {
  int node = 0;
  double power_mw = 0.0;
  CMatrix W;               // M_node x K, unit Frobenius norm; [1] for single-antenna nodes
  std::vector<int> users;  // intended receiver of each stream (column of W)
};

/// Effective received signature of `tx` at `rx` (M_rx x K_tx), including
/// transmit power and slow gain: sqrt(P g) * H_rx<-tx * W.
inline CMatrix received_signature(const ChannelTable& channels, int rx,
                                  const ActiveTransmitter& tx) {
  const CMatrix R = channels.response(rx, tx.node);
  if (R.cols() != tx.W.rows())
    throw ContractError("received_signature: precoder does not match antenna count");
  return std::sqrt(tx.power_mw * channels.slow_gain(rx, tx.node)) * (R * tx.W);
}

/// Covariance of the signal received at `x`:
/// sum_j P_j g_xj (H W_j)(H W_j)^H + noise * I.
inline CMatrix received_covariance(const ChannelTable& channels, int x,
                                   std::span<const ActiveTransmitter> active,
                                   double noise_mw) {
  const int m = channels.node(x).num_antennas;
  CMatrix Z = noise_mw * CMatrix::Identity(m, m);
  for (const auto& tx : active) {
    if (tx.node == x) continue;
    const CMatrix A = received_signature(channels, x, tx);
    Z.noalias() += A * A.adjoint();
  }
  return Z;
}

}  // namespace mmimou
