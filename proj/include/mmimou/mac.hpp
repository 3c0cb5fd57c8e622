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
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mmimou/beamforming.hpp"
#include "mmimou/channel.hpp"
#include "mmimou/common.hpp"

namespace mmimou {

// ----- Traffic ------------------------------------------------------------

/// Per-round traffic of every node, indexed by node id. A STA with traffic
/// has downlink data and, with probability ul_fraction, uplink data too.
struct TrafficState {
  std::vector<bool> has_traffic;
  std::vector<bool> wants_uplink;

  bool active(int id) const { return has_traffic[id]; }
  bool active_ul(int id) const { return has_traffic[id] && wants_uplink[id]; }
};

template <class Rng>
TrafficState draw_traffic(std::span<const NodeDescriptor> nodes, double p_tr,
                          double ul_fraction, Rng& rng) {
  if (!(p_tr >= 0.0 && p_tr <= 1.0)) throw std::invalid_argument("draw_traffic: P_tr not in [0,1]");
  if (!(ul_fraction >= 0.0 && ul_fraction <= 1.0))
    throw std::invalid_argument("draw_traffic: UL fraction not in [0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrafficState t;
  t.has_traffic.assign(nodes.size(), false);
  t.wants_uplink.assign(nodes.size(), false);
  for (const auto& n : nodes) {
    if (n.is_ap()) continue;
    // Both draws always happen so the stream position does not depend on p_tr.
    const double a = u(rng);
    const double b = u(rng);
    t.has_traffic[n.id] = a < p_tr;
    t.wants_uplink[n.id] = t.has_traffic[n.id] && b < ul_fraction;
  }
  return t;
}

// ----- Clear channel assessment --------------------------------------------

/// Energy detection: idle iff the received power is strictly below gamma.
inline bool energy_detect(double total_rx_mw, double gamma_lbt_mw) {
  return total_rx_mw < gamma_lbt_mw;
}

struct SourceRx {
  double power_mw = 0.0;
  double sinr = 0.0;  // linear
};

struct PreambleParams {
  double gamma_preamble_mw = dbm_to_mw(-82.0);
  double min_sinr = db_to_linear(-0.8);
};

/// True if any source's preamble is decodable (forces deferral).
inline bool preamble_detect(std::span<const SourceRx> sources, const PreambleParams& p = {}) {
  return std::any_of(sources.begin(), sources.end(), [&](const SourceRx& s) {
    return s.power_mw >= p.gamma_preamble_mw && s.sinr >= p.min_sinr;
  });
}

/// Each source's SINR against all other sources plus noise.
inline std::vector<SourceRx> preamble_sources(std::span<const double> powers_mw, double noise_mw) {
  double total = noise_mw;
  for (double p : powers_mw) total += p;
  std::vector<SourceRx> out;
  out.reserve(powers_mw.size());
  for (double p : powers_mw) out.push_back({p, p / (total - p)});
  return out;
}

// ----- Contention ---------------------------------------------------------

enum class AccessMode { LBT, eLBT };
enum class DeferCause { none, energy, preamble, precoder };

struct AccessAttempt {
  int node_id = 0;
  AccessMode mode = AccessMode::LBT;
  int backoff_slot = 0;
  bool granted = false;
  DeferCause defer_cause = DeferCause::none;
};

struct Contender {
  int node = 0;
  AccessMode mode = AccessMode::LBT;
  int num_nulls = 0;                     // eLBT only
  bool cap_nulls_by_noise = false;       // eLBT only: N <= #{eigenvalues > 3 noise}
  std::vector<int> covariance_exempt;    // eLBT only: nodes left out of Z_x
  // eLBT only: other nodes active this round that enter Z_x even when they
  // are not yet on the air (the covariance is averaged over the round).
  std::vector<ActiveTransmitter> covariance_sources;
};

struct CcaParams {
  double gamma_lbt_mw = dbm_to_mw(-62.0);
  PreambleParams preamble;
  int contention_window = 16;
  double noise_mw = dbm_to_mw(-91.99);
};

/// Builds the transmission of a node that just won access; `nulls` is the
/// covariance subspace of an eLBT node (null for LBT). Returning nullopt voids
/// the grant.
using TransmitterFactory =
    std::function<std::optional<ActiveTransmitter>(int node, const CovarianceSubspace* nulls)>;

struct ContentionResult {
  std::vector<AccessAttempt> attempts;     // in admission order
  std::vector<ActiveTransmitter> granted;  // in admission order
};

/// Outcome of one node's clear channel assessment against what is already on
/// the air.
struct CcaDecision {
  bool idle = false;
  DeferCause cause = DeferCause::none;
  std::optional<CovarianceSubspace> subspace;  // eLBT only
};

/// CCA of `c` against the transmitters in `on_air`. Powers are averaged per
/// receive antenna; for eLBT the signal is first projected onto the complement
/// of the dominant covariance directions.
inline CcaDecision assess_channel(const ChannelTable& channels, const Contender& c,
                                  std::span<const ActiveTransmitter> on_air,
                                  const CcaParams& params) {
  const int m = channels.node(c.node).num_antennas;
  std::vector<CMatrix> sig;
  sig.reserve(on_air.size());
  for (const auto& tx : on_air)
    if (tx.node != c.node) sig.push_back(received_signature(channels, c.node, tx));

  CcaDecision d;
  std::vector<double> powers;
  double noise = params.noise_mw;

  if (c.mode == AccessMode::eLBT) {
    auto listed = [](const auto& ids, int id) {
      return std::find(ids.begin(), ids.end(), id) != ids.end();
    };
    std::vector<ActiveTransmitter> heard;
    std::vector<int> heard_ids;
    for (const auto& tx : on_air)
      if (tx.node != c.node && !listed(c.covariance_exempt, tx.node)) {
        heard.push_back(tx);
        heard_ids.push_back(tx.node);
      }
    for (const auto& tx : c.covariance_sources)
      if (tx.node != c.node && !listed(c.covariance_exempt, tx.node) && !listed(heard_ids, tx.node))
        heard.push_back(tx);
    const CMatrix Z = received_covariance(channels, c.node, heard, params.noise_mw);
    int n = std::min(c.num_nulls, m);
    d.subspace = dominant_subspace(Z, n);
    if (c.cap_nulls_by_noise) {
      int strong = 0;
      for (Eigen::Index i = 0; i < d.subspace->eigenvalues.size(); ++i)
        if (d.subspace->eigenvalues(i) > 3.0 * params.noise_mw) ++strong;
      d.subspace->n_dominant = std::min(n, strong);
    }
    for (const auto& s : sig) powers.push_back(residual_power(*d.subspace, s) / m);
    noise = params.noise_mw * static_cast<double>(m - d.subspace->n_dominant) / m;
  } else {
    for (const auto& s : sig) powers.push_back(s.squaredNorm() / m);
  }

  double total = noise;
  for (double p : powers) total += p;
  if (!energy_detect(total, params.gamma_lbt_mw)) {
    d.cause = DeferCause::energy;
    return d;
  }
  const auto sources = preamble_sources(powers, noise);
  if (preamble_detect(sources, params.preamble)) {
    d.cause = DeferCause::preamble;
    return d;
  }
  d.idle = true;
  return d;
}

/// Snapshot contention. Every contender draws a backoff in [0, CW); they are
/// admitted in ascending backoff order (ties by node id), each against the
/// transmitters admitted before it. Granted nodes transmit for the round.
template <class Rng>
ContentionResult contend(const ChannelTable& channels, std::span<const Contender> contenders,
                         const CcaParams& params, Rng& rng, const TransmitterFactory& make_tx) {
  if (params.contention_window < 1) throw std::invalid_argument("contend: CW must be >= 1");
  std::uniform_int_distribution<int> slot(0, params.contention_window - 1);

  struct Entry {
    const Contender* c;
    int backoff;
  };
  std::vector<Entry> order;
  order.reserve(contenders.size());
  for (const auto& c : contenders) order.push_back({&c, slot(rng)});
  std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
    return a.backoff != b.backoff ? a.backoff < b.backoff : a.c->node < b.c->node;
  });

  ContentionResult r;
  for (const auto& e : order) {
    AccessAttempt a;
    a.node_id = e.c->node;
    a.mode = e.c->mode;
    a.backoff_slot = e.backoff;
    CcaDecision d = assess_channel(channels, *e.c, r.granted, params);
    if (d.idle) {
      auto tx = make_tx(e.c->node, d.subspace ? &*d.subspace : nullptr);
      if (tx) {
        a.granted = true;
        r.granted.push_back(std::move(*tx));
      } else {
        a.defer_cause = DeferCause::precoder;
      }
    } else {
      a.defer_cause = d.cause;
    }
    r.attempts.push_back(a);
  }
  return r;
}

// ----- Scheduling ---------------------------------------------------------

/// Interference-vulnerability score of a STA from slow gains only:
/// beta = P_a g_a / (sum_{j != a} P_j g_j + noise). `gain(i, j)` is linear.
template <class GainFn>
double vulnerability_metric(int sta, int serving_ap, std::span<const NodeDescriptor> aps,
                            GainFn&& gain, double noise_mw) {
  double signal = 0.0;
  double interference = 0.0;
  for (const auto& ap : aps) {
    const double rx = dbm_to_mw(ap.max_power_dbm) * gain(sta, ap.id);
    if (ap.id == serving_ap)
      signal = rx;
    else
      interference += rx;
  }
  return signal / (interference + noise_mw);
}

struct UserPartition {
  std::vector<int> elbt;  // least interfered, ascending id
  std::vector<int> lbt;   // the rest, ascending id
};

/// Splits `active` users: the floor(fraction * n) users with highest beta go
/// to the eLBT set (beta ties by lower id), the remainder to the LBT set.
inline UserPartition partition_users(std::span<const int> active,
                                     const std::map<int, double>& beta, double fraction) {
  std::vector<int> ranked(active.begin(), active.end());
  std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    const double ba = beta.at(a), bb = beta.at(b);
    return ba != bb ? ba > bb : a < b;
  });
  const auto n_elbt = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ranked.size())));
  UserPartition p;
  p.elbt.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n_elbt));
  p.lbt.assign(ranked.begin() + static_cast<std::ptrdiff_t>(n_elbt), ranked.end());
  std::sort(p.elbt.begin(), p.elbt.end());
  std::sort(p.lbt.begin(), p.lbt.end());
  return p;
}

enum class Phase { LBT, eLBT };

/// Repeating pattern: the first `elbt_rounds` of every `period` rounds are
/// eLBT, the rest LBT.
inline Phase phase_pattern(long round_index, int period = 5, int elbt_rounds = 2) {
  if (period < 1 || elbt_rounds < 0 || elbt_rounds > period)
    throw std::invalid_argument("phase_pattern: invalid pattern");
  const long r = ((round_index % period) + period) % period;
  return r < elbt_rounds ? Phase::eLBT : Phase::LBT;
}

/// Round-robin cursor: remembers the last user served.
struct RoundRobin {
  int last = -1;

  /// Up to k users from `candidates` (ascending ids), continuing after the
  /// last one served. Does not advance.
  std::vector<int> peek(std::span<const int> candidates, int k) const {
    std::vector<int> out;
    if (candidates.empty() || k <= 0) return out;
    auto start = std::upper_bound(candidates.begin(), candidates.end(), last);
    const std::size_t n = candidates.size();
    std::size_t i = static_cast<std::size_t>(start - candidates.begin()) % n;
    for (std::size_t c = 0; c < n && static_cast<int>(out.size()) < k; ++c, i = (i + 1) % n)
      out.push_back(candidates[i]);
    return out;
  }
  void advance(std::span<const int> served) {
    if (!served.empty()) last = served.back();
  }
  std::vector<int> take(std::span<const int> candidates, int k) {
    auto out = peek(candidates, k);
    advance(out);
    return out;
  }
};

enum class ApKind { single_antenna, mmimo, mmimo_u };

/// Per-AP scheduler bookkeeping for one drop.
struct SchedulerState {
  ApKind kind = ApKind::single_antenna;
  int max_streams = 1;
  RoundRobin dl;         // single-antenna and mMIMO
  RoundRobin dl_elbt;    // mMIMO-U, eLBT phase
  RoundRobin dl_lbt;     // mMIMO-U, LBT phase
  RoundRobin ul;
  std::map<int, double> beta;  // served users' vulnerability metric
  UserPartition partition;     // mMIMO-U: fixed per drop over all served users
};

/// Active downlink users of an AP in ascending id order, leaving out the
/// cell's uplink contender (`ul_sta`, -1 for none).
inline std::vector<int> active_dl_users(std::span<const int> served, const TrafficState& t,
                                        int ul_sta = -1) {
  std::vector<int> out;
  for (int u : served)
    if (t.active(u) && u != ul_sta) out.push_back(u);
  return out;
}

/// The user pool the AP draws from in the given phase. For mMIMO-U the eLBT
/// phase uses the eLBT set and the LBT phase the LBT set; other APs use every
/// active user.
inline std::vector<int> phase_pool(const SchedulerState& s, std::span<const int> active,
                                   Phase phase) {
  if (s.kind != ApKind::mmimo_u) return {active.begin(), active.end()};
  const auto& set = phase == Phase::eLBT ? s.partition.elbt : s.partition.lbt;
  std::vector<int> out;
  for (int u : active)
    if (std::binary_search(set.begin(), set.end(), u)) out.push_back(u);
  return out;
}

/// Downlink users for an AP that has been granted access. Advances the
/// cursor of the pool it used.
inline std::vector<int> schedule(SchedulerState& s, std::span<const int> served,
                                 const TrafficState& traffic, Phase phase, int ul_sta = -1) {
  const auto active = active_dl_users(served, traffic, ul_sta);
  const auto pool = phase_pool(s, active, phase);
  const int k = s.kind == ApKind::single_antenna ? 1 : s.max_streams;
  if (s.kind != ApKind::mmimo_u) return s.dl.take(pool, k);
  return phase == Phase::eLBT ? s.dl_elbt.take(pool, k) : s.dl_lbt.take(pool, k);
}

/// The cell's uplink turn: round robin over all active STAs of the cell; the
/// STA picked contends for the uplink if it has uplink data. At most one STA
/// per cell, and the uplink gets its traffic share of the cell's turns.
inline std::optional<int> schedule_uplink(SchedulerState& s, std::span<const int> served,
                                          const TrafficState& traffic) {
  std::vector<int> active;
  for (int u : served)
    if (traffic.active(u)) active.push_back(u);
  auto pick = s.ul.take(active, 1);
  if (pick.empty() || !traffic.active_ul(pick.front())) return std::nullopt;
  return pick.front();
}

}  // namespace mmimou
