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

#include "catch_amalgamated.hpp"

#include "mmimou/engine.hpp"

using namespace mmimou;
using Catch::Matchers::WithinAbs;

namespace {

ScenarioConfig small(Scenario s, double p_tr = 1.0)
{
    ScenarioConfig c;
    c.scenario = s;
    c.p_tr = p_tr;
    c.n_drops = 6;
    c.n_rounds = 20;
    c.threads = 1;
    return c;
}

} // namespace

TEST_CASE("aggregate_cdf - empirical steps")
{
    CHECK(aggregate_cdf({}).empty());
    const auto one = aggregate_cdf({3.0});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == std::pair<double, double>{3.0, 1.0});
    const auto four = aggregate_cdf({4.0, 1.0, 3.0, 2.0});
    REQUIRE(four.size() == 4);
    CHECK(four[0] == std::pair<double, double>{1.0, 0.25});
    CHECK(four[3] == std::pair<double, double>{4.0, 1.0});
    for (std::size_t i = 1; i < four.size(); ++i)
    {
        CHECK(four[i].first >= four[i - 1].first);
        CHECK(four[i].second > four[i - 1].second);
    }
}

TEST_CASE("empirical_quantile - first crossing")
{
    CHECK(empirical_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.0);
    CHECK(empirical_quantile({1.0, 2.0, 3.0, 4.0}, 0.51) == 3.0);
    CHECK(empirical_quantile({5.0}, 0.05) == 5.0);
    CHECK(empirical_quantile({4.0, 3.0, 2.0, 1.0}, 0.0) == 1.0);
    CHECK(empirical_quantile({4.0, 3.0, 2.0, 1.0}, 1.0) == 4.0);
    CHECK_THROWS_AS(empirical_quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("run_round - no traffic, no attempts")
{
    auto c = small(Scenario::C_mmimo_u, 0.0);
    DropState d(c, 0);
    for (long r = 0; r < 10; ++r)
    {
        const auto o = d.run_round(r);
        CHECK(o.attempts.empty());
        CHECK(o.transmitters.empty());
        CHECK(o.downlink.empty());
    }
}

TEST_CASE("run_round - grants carry precoders and scheduled users")
{
    auto c = small(Scenario::C_mmimo_u);
    DropState d(c, 1);
    CHECK(d.kind(kCentralAp) == ApKind::mmimo_u);
    CHECK(d.kind(0) == ApKind::single_antenna);
    for (long r = 0; r < 20; ++r)
    {
        const auto o = d.run_round(r);
        CHECK(o.phase == phase_pattern(r));
        for (const auto& tx : o.transmitters)
        {
            CHECK_THAT(tx.W.norm(), WithinAbs(1.0, 1e-9));
            if (tx.node < kNumAps)
            {
                CHECK(tx.users.size() >= 1);
                CHECK(static_cast<int>(tx.users.size()) <= (tx.node == kCentralAp ? 4 : 1));
                for (int u : tx.users) CHECK(d.association().ap_of(u) == tx.node);
            }
        }
        std::size_t dl_users = 0;
        for (const auto& tx : o.transmitters)
            if (tx.node < kNumAps) dl_users += tx.users.size();
        CHECK(o.downlink.size() == dl_users);
    }
}

TEST_CASE("run_round - at most one uplink contender per cell")
{
    auto c = small(Scenario::A_single_antenna);
    DropState d(c, 2);
    for (long r = 0; r < 30; ++r)
    {
        const auto o = d.run_round(r);
        std::vector<int> per_cell(kNumAps, 0);
        for (const auto& a : o.attempts)
            if (a.node_id >= kNumAps) ++per_cell[d.association().ap_of(a.node_id)];
        for (int n : per_cell) CHECK(n <= 1);
    }
}

TEST_CASE("run_simulation - zero rounds gives empty samples")
{
    auto c = small(Scenario::B_mmimo);
    c.n_drops = 1;
    c.n_rounds = 0;
    const auto r = run_simulation(c);
    REQUIRE(r.drops.size() == 1);
    CHECK(r.sinr_samples().empty());
    CHECK(r.sum_throughput_samples() == std::vector<double>{0.0});
    CHECK(r.attempts(0) == 0);
    CHECK(std::isnan(r.access_rate(0)));
}

TEST_CASE("run_simulation - accounting invariants")
{
    for (auto s : {Scenario::A_single_antenna, Scenario::B_mmimo, Scenario::C_mmimo_u})
    {
        const auto r = run_simulation(small(s, 0.5));
        for (const auto& d : r.drops)
        {
            double sum = 0.0;
            for (const auto& [sta, thr] : d.user_throughput_bps)
            {
                CHECK(thr >= 0.0);
                sum += thr;
            }
            CHECK(d.user_throughput_bps.size() == 30);
            CHECK_THAT(d.sum_throughput_bps, WithinAbs(sum, 1e-6));
            for (int ap = 0; ap < kNumAps; ++ap)
            {
                CHECK(d.ap_grants[ap] <= d.ap_attempts[ap]);
                CHECK(d.ap_attempts[ap] <= r.config.n_rounds);
            }
        }
    }
}

TEST_CASE("run_drop - throughput is the DL share of the mean scheduled rate")
{
    auto c = small(Scenario::C_mmimo_u);
    DropState d(c, 3);
    std::map<int, double> sum;
    for (long r = 0; r < c.n_rounds; ++r)
        for (const auto& u : d.run_round(r).downlink) sum[u.sta] += u.rate_bps;
    const auto res = run_drop(c, 3);
    for (const auto& [sta, s] : sum)
        CHECK(res.user_throughput_bps.at(sta) == c.dl_fraction * s / c.n_rounds);
}

TEST_CASE("run_simulation - identical seeds, identical results")
{
    const auto c = small(Scenario::C_mmimo_u);
    const auto a = run_simulation(c);
    const auto b = run_simulation(c);
    for (std::size_t i = 0; i < a.drops.size(); ++i)
    {
        CHECK(a.drops[i].sinr_db == b.drops[i].sinr_db);
        CHECK(a.drops[i].ap_grants == b.drops[i].ap_grants);
        CHECK(a.drops[i].sum_throughput_bps == b.drops[i].sum_throughput_bps);
    }
    auto other = c;
    other.seed = 2;
    CHECK(run_simulation(other).sinr_samples() != a.sinr_samples());
}

TEST_CASE("run_simulation - parallel equals sequential")
{
    auto c = small(Scenario::B_mmimo);
    c.n_drops = 9;
    const auto seq = run_simulation(c);
    c.threads = 4;
    const auto par = run_simulation(c);
    for (std::size_t i = 0; i < seq.drops.size(); ++i)
    {
        CHECK(seq.drops[i].sinr_db == par.drops[i].sinr_db);
        CHECK(seq.drops[i].ap_attempts == par.drops[i].ap_attempts);
        CHECK(seq.drops[i].user_throughput_bps == par.drops[i].user_throughput_bps);
    }
}

TEST_CASE("run_simulation - scenarios share geometry on paired seeds")
{
    const auto a = small(Scenario::A_single_antenna);
    const auto c = small(Scenario::C_mmimo_u);
    for (std::uint64_t drop = 0; drop < 3; ++drop)
    {
        DropState da(a, drop), dc(c, drop);
        for (std::size_t i = 0; i < da.deployment().nodes.size(); ++i)
            CHECK(da.deployment().nodes[i].position == dc.deployment().nodes[i].position);
        CHECK(da.channels().slow_gain(1, 5) == dc.channels().slow_gain(1, 5));
        CHECK(da.association().serving_ap == dc.association().serving_ap);
    }
}

TEST_CASE("run_simulation - invalid configuration names the field")
{
    auto c = small(Scenario::C_mmimo_u);
    c.num_nulls = 40;
    CHECK_THROWS_WITH(run_simulation(c), Catch::Matchers::ContainsSubstring("num_nulls"));
}

TEST_CASE("contend - symmetric collision domain matches the closed form")
{
    // Three mutually audible APs, CW 16, ties to the lower id:
    // P(win) = sum_s 1/16 * P(lower ids > s) * P(higher ids >= s).
    std::vector<NodeDescriptor> nodes;
    for (int i = 0; i < 3; ++i)
    {
        NodeDescriptor n;
        n.id = i;
        n.role = Role::AP;
        n.position = {10.0 * i, 0, 3};
        n.max_power_dbm = 24.0;
        nodes.push_back(n);
    }
    std::mt19937_64 rng(1);
    ChannelTable t(nodes, ChannelParams{}, rng);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) t.link(i, j).slow_gain_linear = 1e-4;
    const std::vector<Contender> contenders{{0}, {1}, {2}};
    const TransmitterFactory f = [](int node, const CovarianceSubspace*)
        -> std::optional<ActiveTransmitter> {
        return ActiveTransmitter{node, dbm_to_mw(24.0), CMatrix::Ones(1, 1), {}};
    };
    std::vector<int> wins(3, 0);
    const int trials = 40000;
    for (int k = 0; k < trials; ++k)
    {
        const auto r = contend(t, contenders, CcaParams{}, rng, f);
        REQUIRE(r.granted.size() == 1);
        ++wins[r.granted[0].node];
    }
    CHECK_THAT(wins[0] / double(trials), WithinAbs(187.0 / 512.0, 0.01));
    CHECK_THAT(wins[1] / double(trials), WithinAbs(85.0 / 256.0, 0.01));
    CHECK_THAT(wins[2] / double(trials), WithinAbs(155.0 / 512.0, 0.01));
}
