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
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "mmimou/beamforming.hpp"
#include "mmimou/channel.hpp"
#include "mmimou/config.hpp"
#include "mmimou/geometry.hpp"
#include "mmimou/mac.hpp"
#include "mmimou/phy.hpp"

namespace mmimou {

inline constexpr int kNumAps = 3;
inline constexpr int kCentralAp = 1;

// ----- Results ------------------------------------------------------------

struct UserResult {
  int sta = 0;
  int ap = 0;
  double sinr_db = 0.0;
  double rate_bps = 0.0;
};

/// Everything that happened in one round.
struct RoundOutcome {
  Phase phase = Phase::LBT;
  std::vector<AccessAttempt> attempts;
  std::vector<ActiveTransmitter> transmitters;
  std::vector<UserResult> downlink;
  std::vector<UserResult> uplink;  // `ap` is the receiving AP
};

struct DropResult {
  std::vector<long> ap_attempts = std::vector<long>(kNumAps, 0);
  std::vector<long> ap_grants = std::vector<long>(kNumAps, 0);
  std::vector<double> sinr_db;                  // DL, one per scheduled user-round
  std::map<int, double> user_throughput_bps;    // DL, every STA of the drop
  double sum_throughput_bps = 0.0;              // DL
  double ul_sum_throughput_bps = 0.0;           // tracked, not reported
  bool covered = true;

  /// NaN when the AP never attempted.
  double access_rate(int ap) const {
    return ap_attempts[ap] > 0 ? static_cast<double>(ap_grants[ap]) / ap_attempts[ap]
                               : std::numeric_limits<double>::quiet_NaN();
  }
};

// ----- Empirical statistics -------------------------------------------------

using Cdf = std::vector<std::pair<double, double>>;

/// Empirical CDF: samples ascending, the i-th (0-based) at probability (i+1)/n.
inline Cdf aggregate_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  Cdf out;
  out.reserve(samples.size());
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.emplace_back(samples[i], static_cast<double>(i + 1) / n);
  return out;
}

/// Smallest sample whose empirical CDF reaches p (p in (0, 1]).
inline double empirical_quantile(const std::vector<double>& samples, double p) {
  if (samples.empty()) throw std::invalid_argument("empirical_quantile: no samples");
  std::vector<double> s(samples);
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-12));
  k = std::clamp<std::size_t>(k, 1, s.size());
  return s[k - 1];
}

struct ResultSet {
  ScenarioConfig config;
  std::vector<DropResult> drops;

  long attempts(int ap) const {
    long a = 0;
    for (const auto& d : drops) a += d.ap_attempts[ap];
    return a;
  }
  long grants(int ap) const {
    long g = 0;
    for (const auto& d : drops) g += d.ap_grants[ap];
    return g;
  }
  /// Pooled grants / attempts over all drops; NaN without attempts.
  double access_rate(int ap) const {
    const long a = attempts(ap);
    return a > 0 ? static_cast<double>(grants(ap)) / a : std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<double> access_rate_samples(int ap) const {
    std::vector<double> v;
    for (const auto& d : drops)
      if (d.ap_attempts[ap] > 0) v.push_back(d.access_rate(ap));
    return v;
  }
  std::vector<double> sinr_samples() const {
    std::vector<double> v;
    for (const auto& d : drops) v.insert(v.end(), d.sinr_db.begin(), d.sinr_db.end());
    return v;
  }
  std::vector<double> sum_throughput_samples() const {
    std::vector<double> v;
    for (const auto& d : drops) v.push_back(d.sum_throughput_bps);
    return v;
  }

  Cdf sinr_cdf() const { return aggregate_cdf(sinr_samples()); }
  Cdf throughput_cdf() const { return aggregate_cdf(sum_throughput_samples()); }
  Cdf access_rate_cdf(int ap) const { return aggregate_cdf(access_rate_samples(ap)); }
};

// ----- Drop -----------------------------------------------------------------

/// Independent random streams of one drop, so that scenarios sharing a seed
/// share geometry, large-scale fading and traffic.
struct DropStreams {
  std::mt19937_64 geometry;
  std::mt19937_64 large_scale;
  std::mt19937_64 fading;
  std::mt19937_64 traffic;
  std::mt19937_64 access;

  DropStreams(std::uint64_t seed, std::uint64_t drop)
      : geometry(stream(seed, drop, 0)),
        large_scale(stream(seed, drop, 1)),
        fading(stream(seed, drop, 2)),
        traffic(stream(seed, drop, 3)),
        access(stream(seed, drop, 4)) {}

 private:
  static std::mt19937_64 stream(std::uint64_t seed, std::uint64_t drop, std::uint32_t which) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(drop), static_cast<std::uint32_t>(drop >> 32),
                      which};
    return std::mt19937_64(seq);
  }
};

/// State of one drop: geometry, slow gains, association and schedulers.
class DropState {
 public:
  DropState(const ScenarioConfig& config, std::uint64_t drop_index)
      : config_(&config), streams_(config.seed, drop_index) {
    const auto params = config.deployment();
    const int attempts = config.redraw_uncovered ? config.max_redraws + 1 : 1;
    for (int a = 0; a < attempts; ++a) {
      deployment_ = generate_drop(params, streams_.geometry);
      channels_ = ChannelTable(deployment_.nodes, config.channel, streams_.large_scale);
      Eigen::MatrixXd gains(static_cast<Eigen::Index>(deployment_.stas().size()), kNumAps);
      for (std::size_t s = 0; s < deployment_.stas().size(); ++s)
        for (int ap = 0; ap < kNumAps; ++ap)
          gains(static_cast<Eigen::Index>(s), ap) =
              channels_.slow_gain_db(deployment_.stas()[s].id, ap);
      association_ = associate(deployment_.stas(), deployment_.aps(), gains);
      covered_ = validate_coverage(association_, deployment_.stas(), deployment_.aps(), gains,
                                   config.min_coverage_rss_dbm);
      if (covered_) break;
    }
    init_schedulers();
  }

  const ScenarioConfig& config() const { return *config_; }
  const Deployment& deployment() const { return deployment_; }
  const ChannelTable& channels() const { return channels_; }
  ChannelTable& channels() { return channels_; }
  const AssociationMap& association() const { return association_; }
  const SchedulerState& scheduler(int ap) const { return schedulers_.at(ap); }
  DropStreams& streams() { return streams_; }
  bool covered() const { return covered_; }

  ApKind kind(int ap) const { return schedulers_.at(ap).kind; }

  /// One contention-plus-transmission snapshot.
  RoundOutcome run_round(long round_index);

 private:
  void init_schedulers() {
    const auto& c = *config_;
    const double noise = c.noise_mw();
    schedulers_.assign(kNumAps, SchedulerState{});
    for (int ap = 0; ap < kNumAps; ++ap) {
      auto& s = schedulers_[ap];
      const bool central = ap == kCentralAp;
      s.kind = !central || c.scenario == Scenario::A_single_antenna ? ApKind::single_antenna
               : c.scenario == Scenario::B_mmimo                     ? ApKind::mmimo
                                                                     : ApKind::mmimo_u;
      s.max_streams = s.kind == ApKind::single_antenna ? 1 : c.max_streams;
      for (int u : association_.users_of(ap))
        s.beta[u] = vulnerability_metric(
            u, ap, deployment_.aps(), [&](int i, int j) { return channels_.slow_gain(i, j); },
            noise);
      // Without the partition every user is eligible in eLBT rounds.
      const double fraction =
          c.access_pattern == AccessPattern::elbt_only ? 1.0 : c.elbt_user_fraction;
      s.partition = partition_users(association_.users_of(ap), s.beta, fraction);
    }
  }

  std::optional<ActiveTransmitter> build_downlink(int ap, const std::vector<int>& users,
                                                  const CovarianceSubspace* nulls) const;

  const ScenarioConfig* config_;
  DropStreams streams_;
  Deployment deployment_;
  ChannelTable channels_;
  AssociationMap association_;
  std::vector<SchedulerState> schedulers_;
  bool covered_ = true;
};

/// Downlink transmitter for `users`: matched filter for single-antenna APs,
/// zero-forcing for multi-antenna APs, zero-forcing with nulls on the dominant
/// directions after eLBT. Rank-deficient user sets shed their weakest user
/// until the precoder exists; nullopt when none is left.
inline std::optional<ActiveTransmitter> DropState::build_downlink(
    int ap, const std::vector<int>& users, const CovarianceSubspace* nulls) const {
  const auto& node = channels_.node(ap);
  const int m = node.num_antennas;
  std::vector<int> kept = users;
  const CMatrix U = nulls ? nulls->dominant() : CMatrix(m, 0);

  while (!kept.empty()) {
    CMatrix H(m, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k)
      H.col(static_cast<Eigen::Index>(k)) = channels_.response(kept[k], ap).adjoint();
    try {
      PrecoderSet p;
      if (m == 1)
        p = matched_filter(H.col(0));
      else if (U.cols() == 0)
        p = zf_precoder(H);
      else
        p = zf_with_nulls(H, U);
      p.user_map = kept;
      ActiveTransmitter tx;
      tx.node = ap;
      tx.W = std::move(p.W);
      tx.users = kept;
      const int nulls_used = static_cast<int>(U.cols());
      tx.power_mw = dbm_to_mw(
          tx_power_dbm(node.max_power_dbm, m, nulls_used, static_cast<int>(kept.size())));
      return tx;
    } catch (const SingularError&) {
      const auto worst = weakest_user_column(H, U);
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(worst));
    } catch (const CapabilityError&) {
      kept.pop_back();
    }
  }
  return std::nullopt;
}

inline RoundOutcome DropState::run_round(long round_index) {
  const auto& c = *config_;
  const double noise = c.noise_mw();
  RoundOutcome out;

  channels_.resample_fading(streams_.fading);

  // (1) traffic
  const TrafficState traffic =
      draw_traffic(deployment_.nodes, c.p_tr, 1.0 - c.dl_fraction, streams_.traffic);

  // (2) mMIMO-U phase
  out.phase = c.access_pattern == AccessPattern::elbt_only
                  ? Phase::eLBT
                  : phase_pattern(round_index, c.pattern_period, c.pattern_elbt_rounds);

  // (3) contenders; the eLBT covariance itself is measured during contention
  std::vector<Contender> contenders;
  std::vector<int> ul_sta(kNumAps, -1);
  for (int ap = 0; ap < kNumAps; ++ap) {
    if (auto sta = schedule_uplink(schedulers_[ap], association_.users_of(ap), traffic)) {
      ul_sta[ap] = *sta;
      Contender ct;
      ct.node = *sta;
      contenders.push_back(std::move(ct));
    }
  }
  std::vector<Phase> ap_phase(kNumAps, Phase::LBT);
  for (int ap = 0; ap < kNumAps; ++ap) {
    const auto& served = association_.users_of(ap);
    const auto active = active_dl_users(served, traffic, ul_sta[ap]);
    if (active.empty()) continue;
    Contender ct;
    ct.node = ap;
    if (schedulers_[ap].kind == ApKind::mmimo_u) {
      const Phase ph = out.phase;
      if (phase_pool(schedulers_[ap], active, ph).empty()) continue;
      ap_phase[ap] = ph;
      if (ph == Phase::eLBT) {
        ct.mode = AccessMode::eLBT;
        ct.num_nulls = c.num_nulls;
        ct.cap_nulls_by_noise = c.cap_nulls_by_noise;
        ct.covariance_exempt = served;
      }
    }
    contenders.push_back(std::move(ct));
  }
  // Every other contender of the round is a covariance source of an eLBT AP,
  // radiating omnidirectionally at full power.
  for (auto& ct : contenders) {
    if (ct.mode != AccessMode::eLBT) continue;
    for (const auto& other : contenders) {
      const auto& n = channels_.node(other.node);
      if (other.node == ct.node || n.num_antennas != 1) continue;
      ActiveTransmitter src;
      src.node = other.node;
      src.power_mw = dbm_to_mw(n.max_power_dbm);
      src.W = CMatrix::Ones(1, 1);
      ct.covariance_sources.push_back(std::move(src));
    }
  }

  // (4)-(6) contention, scheduling, precoding and power
  CcaParams cca;
  cca.gamma_lbt_mw = dbm_to_mw(c.gamma_lbt_dbm);
  cca.preamble.gamma_preamble_mw = dbm_to_mw(c.gamma_preamble_dbm);
  cca.preamble.min_sinr = db_to_linear(c.preamble_min_sinr_db);
  cca.contention_window = c.contention_window;
  cca.noise_mw = noise;

  const TransmitterFactory factory = [&](int node,
                                         const CovarianceSubspace* nulls) -> std::optional<ActiveTransmitter> {
    if (node < kNumAps) {
      const auto users = schedule(schedulers_[node], association_.users_of(node), traffic,
                                  ap_phase[node], ul_sta[node]);
      if (users.empty()) return std::nullopt;
      return build_downlink(node, users, nulls);
    }
    ActiveTransmitter tx;
    tx.node = node;
    tx.power_mw = dbm_to_mw(channels_.node(node).max_power_dbm);
    tx.W = CMatrix::Ones(1, 1);
    tx.users = {association_.ap_of(node)};
    return tx;
  };
  auto contention = contend(channels_, contenders, cca, streams_.access, factory);
  out.attempts = std::move(contention.attempts);
  out.transmitters = std::move(contention.granted);

  // (7)-(8) SINR and rates
  std::vector<bool> ap_on_air(kNumAps, false);
  for (const auto& tx : out.transmitters)
    if (tx.node < kNumAps) ap_on_air[tx.node] = true;
  for (const auto& tx : out.transmitters) {
    if (tx.node < kNumAps) {
      for (int u : tx.users) {
        const double sinr = compute_sinr(channels_, u, tx.node, out.transmitters, noise);
        const double sinr_db = linear_to_db(sinr);
        out.downlink.push_back({u, tx.node, sinr_db, c.rate_table.map_rate(sinr_db)});
      }
    } else {
      const int ap = tx.users.front();
      if (ap_on_air[ap]) {
        out.uplink.push_back({tx.node, ap, -std::numeric_limits<double>::infinity(), 0.0});
        continue;
      }
      const double sinr_db = linear_to_db(uplink_sinr(channels_, ap, tx.node, out.transmitters, noise));
      out.uplink.push_back({tx.node, ap, sinr_db, c.rate_table.map_rate(sinr_db)});
    }
  }
  return out;
}

/// Runs one drop to completion and reduces it to a DropResult.
inline DropResult run_drop(const ScenarioConfig& config, std::uint64_t drop_index) {
  DropState drop(config, drop_index);
  DropResult r;
  r.covered = drop.covered();
  std::map<int, double> dl_rate_sum;
  double ul_rate_sum = 0.0;
  for (const auto& sta : drop.deployment().stas()) dl_rate_sum[sta.id] = 0.0;

  for (long round = 0; round < config.n_rounds; ++round) {
    const RoundOutcome o = drop.run_round(round);
    for (const auto& a : o.attempts) {
      if (a.node_id >= kNumAps) continue;
      ++r.ap_attempts[a.node_id];
      if (a.granted) ++r.ap_grants[a.node_id];
    }
    for (const auto& u : o.downlink) {
      r.sinr_db.push_back(u.sinr_db);
      dl_rate_sum[u.sta] += u.rate_bps;
    }
    for (const auto& u : o.uplink) ul_rate_sum += u.rate_bps;
  }

  // (9) airtime: DL share of time over all rounds
  const double rounds = static_cast<double>(std::max(config.n_rounds, 1));
  for (const auto& [sta, sum] : dl_rate_sum) {
    const double thr = config.n_rounds > 0 ? config.dl_fraction * sum / rounds : 0.0;
    r.user_throughput_bps[sta] = thr;
    r.sum_throughput_bps += thr;
  }
  r.ul_sum_throughput_bps =
      config.n_rounds > 0 ? (1.0 - config.dl_fraction) * ul_rate_sum / rounds : 0.0;
  return r;
}

/// All drops, in parallel when config.threads != 1. Results do not depend on
/// the thread count.
inline ResultSet run_simulation(const ScenarioConfig& config) {
  validate_or_throw(config);
  ResultSet rs;
  rs.config = config;
  rs.drops.resize(static_cast<std::size_t>(config.n_drops));

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.n_drops));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t d = next.fetch_add(1);
      if (d >= rs.drops.size()) return;
      try {
        rs.drops[d] = run_drop(config, d);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = rs.drops.size();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return rs;
}

}  // namespace mmimou
