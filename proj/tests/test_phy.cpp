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

#include "mmimou/beamforming.hpp"
#include "mmimou/phy.hpp"

using namespace mmimou;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NodeDescriptor make_node(int id, Point3 pos, int rows = 1, int cols = 1)
{
    NodeDescriptor n;
    n.id = id;
    n.role = id < 3 ? Role::AP : Role::STA;
    n.position = pos;
    n.array_rows = rows;
    n.array_cols = cols;
    n.num_antennas = rows * cols;
    return n;
}

ChannelTable network(std::uint64_t seed)
{
    std::vector<NodeDescriptor> nodes = {
        make_node(0, {20, 25, 3}), make_node(1, {60, 25, 3}, 2, 2), make_node(2, {100, 25, 3}),
        make_node(3, {15, 20, 1.5}), make_node(4, {55, 30, 1.5}), make_node(5, {65, 20, 1.5}),
        make_node(6, {95, 35, 1.5})};
    std::mt19937_64 rng(seed);
    return ChannelTable(nodes, ChannelParams{}, rng);
}

} // namespace

TEST_CASE("tx_power_dbm - back-off by the per-stream array gain")
{
    CHECK_THAT(tx_power_dbm(24.0, 36, 0, 4), WithinAbs(14.457574905606752, 1e-9));
    CHECK_THAT(tx_power_dbm(24.0, 36, 24, 4), WithinAbs(19.228787452803374, 1e-9));
    CHECK_THAT(tx_power_dbm(24.0, 36, 0, 1), WithinAbs(8.436974992327126, 1e-9));
    CHECK(tx_power_dbm(24.0, 1, 0, 1) == 24.0);
    CHECK(PowerBudget{24.0, 36, 24, 4}.p_tx_dbm() == tx_power_dbm(24.0, 36, 24, 4));
}

TEST_CASE("tx_power_dbm - invalid budgets")
{
    CHECK_THROWS_AS(tx_power_dbm(24.0, 36, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(tx_power_dbm(24.0, 36, -1, 4), std::invalid_argument);
    CHECK_THROWS_AS(tx_power_dbm(24.0, 36, 34, 4), CapabilityError);
}

TEST_CASE("noise_power - thermal floor plus noise figure")
{
    CHECK_THAT(noise_power_dbm(20e6, 9.0), WithinAbs(-91.98970004336019, 1e-9));
    CHECK_THAT(noise_power_mw(20e6, 9.0), WithinRel(db_to_linear(-91.98970004336019), 1e-12));
    CHECK_THROWS_AS(noise_power_dbm(0.0, 9.0), std::invalid_argument);
}

TEST_CASE("RateTable - threshold lookup")
{
    const RateTable t;
    CHECK(map_rate(-10.0, t) == 0.0);
    CHECK(map_rate(1.999, t) == 0.0);
    CHECK(map_rate(2.0, t) == 6.5e6);
    CHECK(map_rate(10.0, t) == 19.5e6);
    CHECK(map_rate(28.99, t) == 65e6);
    CHECK(map_rate(29.0, t) == 78e6);
    CHECK(map_rate(60.0, t) == 78e6);
}

TEST_CASE("RateTable - monotone in SINR")
{
    const RateTable t;
    double prev = 0.0;
    for (double s = -20.0; s <= 50.0; s += 0.1)
    {
        const double r = t.map_rate(s);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("RateTable - validation")
{
    CHECK_THROWS_AS(RateTable(std::vector<RateRow>{}), ConfigError);
    CHECK_THROWS_AS(RateTable({{5, 1e6}, {2, 2e6}}), ConfigError);
    CHECK_THROWS_AS(RateTable({{2, 2e6}, {5, 1e6}}), ConfigError);
    CHECK_THROWS_AS(RateTable({{2, 0.0}}), ConfigError);
    CHECK_NOTHROW(RateTable({{0, 1e6}}));
}

TEST_CASE("compute_sinr - single link without interference")
{
    const auto t = network(1);
    ActiveTransmitter tx{0, dbm_to_mw(24.0), CMatrix::Ones(1, 1), {3}};
    const double noise = noise_power_mw(20e6, 9.0);
    const double expected = dbm_to_mw(24.0) * t.slow_gain(3, 0) * t.response(3, 0).squaredNorm() / noise;
    std::vector<ActiveTransmitter> active{tx};
    CHECK_THAT(compute_sinr(t, 3, 0, active, noise), WithinRel(expected, 1e-12));
}

TEST_CASE("compute_sinr - intra-cell streams and inter-cell interference")
{
    const auto t = network(2);
    const double noise = noise_power_mw(20e6, 9.0);
    CMatrix H(4, 2);
    H.col(0) = t.response(4, 1).adjoint();
    H.col(1) = t.response(5, 1).adjoint();
    ActiveTransmitter ap1{1, dbm_to_mw(tx_power_dbm(24.0, 4, 0, 2)), zf_precoder(H).W, {4, 5}};
    ActiveTransmitter ap0{0, dbm_to_mw(24.0), CMatrix::Ones(1, 1), {3}};
    ActiveTransmitter sta6{6, dbm_to_mw(18.0), CMatrix::Ones(1, 1), {2}};
    std::vector<ActiveTransmitter> active{ap0, ap1, sta6};

    const cd s = (t.response(4, 1) * ap1.W)(0, 0);
    const cd x = (t.response(4, 1) * ap1.W)(0, 1);
    const double p1 = ap1.power_mw * t.slow_gain(4, 1);
    const double signal = p1 * std::norm(s);
    const double intra = p1 * std::norm(x);
    const double inter = ap0.power_mw * t.slow_gain(4, 0) * std::norm(t.response(4, 0)(0, 0)) +
                         sta6.power_mw * t.slow_gain(4, 6) * std::norm(t.response(4, 6)(0, 0));
    CHECK(intra < 1e-20 * signal);
    CHECK_THAT(compute_sinr(t, 4, 1, active, noise),
               WithinRel(signal / (intra + inter + noise), 1e-12));
}

TEST_CASE("compute_sinr - contract checks")
{
    const auto t = network(3);
    std::vector<ActiveTransmitter> active{{0, 1.0, CMatrix::Ones(1, 1), {3}}};
    CHECK_THROWS_AS(compute_sinr(t, 3, 2, active, 1e-9), ContractError);
    CHECK_THROWS_AS(compute_sinr(t, 4, 0, active, 1e-9), ContractError);
}

TEST_CASE("uplink_sinr - matched filter combining")
{
    const auto t = network(4);
    const double noise = noise_power_mw(20e6, 9.0);
    ActiveTransmitter sta{4, dbm_to_mw(18.0), CMatrix::Ones(1, 1), {1}};
    ActiveTransmitter other{3, dbm_to_mw(18.0), CMatrix::Ones(1, 1), {0}};
    std::vector<ActiveTransmitter> alone{sta};
    const CMatrix s = received_signature(t, 1, sta);
    CHECK_THAT(uplink_sinr(t, 1, 4, alone, noise), WithinRel(s.squaredNorm() / noise, 1e-12));

    std::vector<ActiveTransmitter> both{sta, other};
    const CVector v = s.col(0) / s.norm();
    const double i = std::norm((v.adjoint() * received_signature(t, 1, other))(0, 0));
    CHECK_THAT(uplink_sinr(t, 1, 4, both, noise), WithinRel(s.squaredNorm() / (i + noise), 1e-12));
}
