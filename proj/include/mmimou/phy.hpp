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
#include <span>
#include <vector>

#include "mmimou/channel.hpp"
#include "mmimou/common.hpp"

namespace mmimou {

// ----- Transmit power -----------------------------------------------------

/// Regulatory back-off by the beamforming gain per stream:
/// P = P_max - 10 log10((M - N) / K) dBm.
inline double tx_power_dbm(double p_max_dbm, int num_antennas, int num_nulls, int num_streams) {
  if (num_streams < 1) throw std::invalid_argument("tx_power: at least one stream required");
  if (num_nulls < 0) throw std::invalid_argument("tx_power: negative null count");
  const int dof = num_antennas - num_nulls;
  if (dof < num_streams)
    throw CapabilityError("tx_power: fewer free antennas than streams");
  return p_max_dbm - 10.0 * std::log10(static_cast<double>(dof) / num_streams);
}

struct PowerBudget {
  double p_max_dbm = 24.0;
  int antennas = 1;
  int nulls = 0;
  int streams = 1;

  double p_tx_dbm() const { return tx_power_dbm(p_max_dbm, antennas, nulls, streams); }
};

// ----- Noise --------------------------------------------------------------

inline double noise_power_dbm(double bandwidth_hz, double noise_figure_db,
                              double psd_dbm_hz = -174.0) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("noise_power: bandwidth must be > 0");
  return psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

inline double noise_power_mw(double bandwidth_hz, double noise_figure_db,
                             double psd_dbm_hz = -174.0) {
  return dbm_to_mw(noise_power_dbm(bandwidth_hz, noise_figure_db, psd_dbm_hz));
}

// ----- Rate mapping -------------------------------------------------------

struct RateRow {
  double min_sinr_db = 0.0;
  double rate_bps = 0.0;
  friend bool operator==(const RateRow&, const RateRow&) = default;
};

/// SINR thresholds to PHY rates for one 20 MHz spatial stream.
class RateTable {
 public:
  RateTable() : RateTable(default_rows()) {}
  explicit RateTable(std::vector<RateRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw ConfigError("rate_table: at least one row is required");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!std::isfinite(rows_[i].min_sinr_db) || !(rows_[i].rate_bps > 0.0))
        throw ConfigError("rate_table: row " + std::to_string(i) + " is invalid");
      if (i > 0 && (rows_[i].min_sinr_db <= rows_[i - 1].min_sinr_db ||
                    rows_[i].rate_bps <= rows_[i - 1].rate_bps))
        throw ConfigError("rate_table: rows must be strictly increasing in SINR and rate");
    }
  }

  /// 802.11ac MCS0..MCS8, 20 MHz, one stream, long guard interval.
  static std::vector<RateRow> default_rows() {
    return {{2, 6.5e6},   {5, 13e6},  {9, 19.5e6}, {11, 26e6}, {15, 39e6},
            {18, 52e6},   {20, 58.5e6}, {25, 65e6}, {29, 78e6}};
  }

  const std::vector<RateRow>& rows() const { return rows_; }

  /// Rate of the highest row whose threshold is met; 0 below the first row.
  double map_rate(double sinr_db) const {
    auto it = std::upper_bound(rows_.begin(), rows_.end(), sinr_db,
                               [](double s, const RateRow& r) { return s < r.min_sinr_db; });
    return it == rows_.begin() ? 0.0 : std::prev(it)->rate_bps;
  }

  friend bool operator==(const RateTable&, const RateTable&) = default;

 private:
  std::vector<RateRow> rows_;
};

inline double map_rate(double sinr_db, const RateTable& table) { return table.map_rate(sinr_db); }

// ----- SINR ---------------------------------------------------------------

/// Downlink SINR of `user` served by `serving_ap`, whose transmitter entry in
/// `active` carries the user on one of its streams. Every other active
/// transmitter contributes the squared norm of its received signature over
/// all its streams; streams of the serving AP for other users add the
/// intra-cell term.
inline double compute_sinr(const ChannelTable& channels, int user, int serving_ap,
                           std::span<const ActiveTransmitter> active, double noise_mw) {
  const ActiveTransmitter* serving = nullptr;
  for (const auto& tx : active)
    if (tx.node == serving_ap) serving = &tx;
  if (serving == nullptr) throw ContractError("compute_sinr: serving AP is not active");
  auto pos = std::find(serving->users.begin(), serving->users.end(), user);
  if (pos == serving->users.end())
    throw ContractError("compute_sinr: user is not scheduled by its serving AP");
  const auto stream = static_cast<Eigen::Index>(pos - serving->users.begin());

  const CMatrix own = received_signature(channels, user, *serving);  // 1 x K
  const double signal = std::norm(own(0, stream));
  const double intra = own.squaredNorm() - signal;

  double inter = 0.0;
  for (const auto& tx : active) {
    if (tx.node == serving_ap || tx.node == user) continue;
    inter += received_signature(channels, user, tx).squaredNorm();
  }
  return signal / (inter + intra + noise_mw);
}

/// Single-user uplink SINR at a (possibly multi-antenna) AP using a matched
/// filter receive combiner.
inline double uplink_sinr(const ChannelTable& channels, int ap, int sta,
                          std::span<const ActiveTransmitter> active, double noise_mw) {
  const ActiveTransmitter* src = nullptr;
  for (const auto& tx : active)
    if (tx.node == sta) src = &tx;
  if (src == nullptr) throw ContractError("uplink_sinr: STA is not active");
  const CMatrix s = received_signature(channels, ap, *src);  // M_ap x 1
  const double sn = s.norm();
  if (!(sn > 0.0)) return 0.0;
  const CVector v = s.col(0) / sn;
  double inter = 0.0;
  for (const auto& tx : active) {
    if (tx.node == sta || tx.node == ap) continue;
    inter += (v.adjoint() * received_signature(channels, ap, tx)).squaredNorm();
  }
  return sn * sn / (inter + noise_mw);
}

}  // namespace mmimou
