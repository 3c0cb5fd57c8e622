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

#include "mmimou/channel.hpp"

using namespace mmimou;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NodeDescriptor make_node(int id, Point3 pos, int rows = 1, int cols = 1)
{
    NodeDescriptor n;
    n.id = id;
    n.role = rows * cols > 1 ? Role::AP : Role::STA;
    n.position = pos;
    n.array_rows = rows;
    n.array_cols = cols;
    n.num_antennas = rows * cols;
    return n;
}

std::vector<NodeDescriptor> small_network()
{
    return {make_node(0, {20, 25, 3}), make_node(1, {60, 25, 3}, 6, 6), make_node(2, {100, 25, 3}),
            make_node(3, {55, 10, 1.5}), make_node(4, {30, 40, 1.5})};
}

} // namespace

TEST_CASE("los_probability - piecewise values")
{
    CHECK(los_probability(0.0) == 1.0);
    CHECK(los_probability(10.0) == 1.0);
    CHECK(los_probability(18.0) == 1.0);
    CHECK_THAT(los_probability(27.0), WithinAbs(0.7165313105737893, 1e-12));
    CHECK_THAT(los_probability(37.0), WithinAbs(0.49474950069645335, 1e-12));
    CHECK(los_probability(37.0001) == 0.5);
    CHECK(los_probability(45.0) == 0.5);
    CHECK(los_probability(130.0) == 0.5);
    CHECK_THROWS_AS(los_probability(-1.0), std::invalid_argument);
}

TEST_CASE("los_probability - non-increasing up to the far-field constant")
{
    double prev = 1.0;
    for (double d = 0.0; d <= 37.0; d += 0.25)
    {
        const double p = los_probability(d);
        CHECK(p <= prev);
        prev = p;
    }
    for (double d = 37.25; d <= 130.0; d += 0.25)
        CHECK(los_probability(d) == 0.5);
}

TEST_CASE("path_loss_db - reference values at 5.18 GHz")
{
    CHECK_THAT(path_loss_db(10.0, true, 5.18), WithinAbs(63.98659519490465, 1e-9));
    CHECK_THAT(path_loss_db(10.0, false, 5.18), WithinAbs(69.08659519490466, 1e-9));
    CHECK_THAT(path_loss_db(50.0, true, 5.18), WithinAbs(75.79918826818337, 1e-9));
    CHECK_THAT(path_loss_db(50.0, false, 5.18), WithinAbs(99.35199638265426, 1e-9));
    CHECK_THAT(path_loss_db(1.0, true, 5.18), WithinAbs(47.08659519490466, 1e-9));
    CHECK(path_loss_db(0.2, true, 5.18) == path_loss_db(1.0, true, 5.18));
    CHECK_THAT(path_loss_db(100.0, false, 5.18) - path_loss_db(10.0, false, 5.18),
               WithinAbs(43.3, 1e-9));
}

TEST_CASE("path_loss_db - NLOS floored at LOS below the crossover")
{
    // Branches cross at d = 10^(21.3 / 26.4) = 6.4146 m.
    CHECK(path_loss_db(3.0, false, 5.18) == path_loss_db(3.0, true, 5.18));
    CHECK(path_loss_db(6.0, false, 5.18) == path_loss_db(6.0, true, 5.18));
    CHECK(path_loss_db(7.0, false, 5.18) > path_loss_db(7.0, true, 5.18));
}

TEST_CASE("path_loss_db - NLOS never below LOS")
{
    for (double d = 1.0; d <= 130.0; d += 0.5)
        CHECK(path_loss_db(d, false, 5.18) >= path_loss_db(d, true, 5.18));
}

TEST_CASE("steering_vector - unit modulus, single antenna is one")
{
    const auto ap = make_node(0, {60, 25, 3}, 6, 6);
    const auto sta = make_node(1, {70, 35, 1.5});
    const CVector a = steering_vector(ap, sta.position);
    REQUIRE(a.size() == 36);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        CHECK_THAT(std::abs(a(i)), WithinAbs(1.0, 1e-12));
    CHECK(steering_vector(sta, ap.position)(0) == cd(1.0, 0.0));
}

TEST_CASE("sample_fading - unit average power per entry")
{
    const auto ap = make_node(0, {60, 25, 3}, 6, 6);
    const auto sta = make_node(1, {70, 35, 1.5});
    std::mt19937_64 rng(11);
    for (double k : {0.0, 1.0, 10.0})
    {
        double acc = 0.0;
        const int n = 2000;
        for (int i = 0; i < n; ++i)
            acc += sample_fading(sta, ap, k, rng).squaredNorm() / 36.0;
        CHECK_THAT(acc / n, WithinAbs(1.0, 0.05));
    }
    const CMatrix los = sample_fading(sta, ap, std::numeric_limits<double>::infinity(), rng);
    for (Eigen::Index i = 0; i < los.size(); ++i)
        CHECK_THAT(std::abs(los(i)), WithinAbs(1.0, 1e-12));
}

TEST_CASE("sample_large_scale - NLOS links are Rayleigh")
{
    const auto a = make_node(0, {0, 0, 3});
    const auto b = make_node(1, {100, 0, 1.5});
    ChannelParams p;
    std::mt19937_64 rng(5);
    int los = 0;
    std::vector<double> k_db;
    for (int i = 0; i < 4000; ++i)
    {
        const auto l = sample_large_scale(a, b, p, rng);
        if (l.los)
        {
            ++los;
            k_db.push_back(linear_to_db(l.k_factor));
        }
        else
        {
            CHECK(l.k_factor == 0.0);
        }
        CHECK_THAT(l.slow_gain_linear, WithinRel(db_to_linear(l.slow_gain_db()), 1e-12));
    }
    CHECK_THAT(los / 4000.0, WithinAbs(0.5, 0.03));
    double mean = 0.0;
    for (double k : k_db) mean += k;
    mean /= static_cast<double>(k_db.size());
    CHECK_THAT(mean, WithinAbs(9.0, 0.4));
}

TEST_CASE("sample_large_scale - shadowing spread")
{
    const auto a = make_node(0, {0, 0, 3});
    const auto b = make_node(1, {5, 0, 1.5});
    std::mt19937_64 rng(9);
    double s = 0.0, s2 = 0.0;
    const int n = 5000;
    for (int i = 0; i < n; ++i)
    {
        const auto l = sample_large_scale(a, b, ChannelParams{}, rng);
        REQUIRE(l.los);
        s += l.shadowing_db;
        s2 += l.shadowing_db * l.shadowing_db;
    }
    CHECK_THAT(s / n, WithinAbs(0.0, 0.15));
    CHECK_THAT(std::sqrt(s2 / n), WithinAbs(3.0, 0.1));
    CHECK_THROWS_AS(sample_large_scale(a, a, ChannelParams{}, rng), ContractError);
}

TEST_CASE("ChannelTable - reciprocity and dimensions")
{
    const auto nodes = small_network();
    std::mt19937_64 rng(1);
    ChannelTable t(nodes, ChannelParams{}, rng);
    CHECK(t.response(3, 1).rows() == 1);
    CHECK(t.response(3, 1).cols() == 36);
    CHECK(t.response(1, 3).rows() == 36);
    CHECK(t.response(1, 3).isApprox(t.response(3, 1).adjoint(), 0.0));
    CHECK(t.slow_gain(0, 4) == t.slow_gain(4, 0));
    CHECK_THROWS_AS(t.link(2, 2), ContractError);
    CHECK_THROWS_AS(t.link(0, 9), ContractError);
}

TEST_CASE("ChannelTable - block fading keeps the large scale")
{
    const auto nodes = small_network();
    std::mt19937_64 rng(1);
    ChannelTable t(nodes, ChannelParams{}, rng);
    const double g = t.slow_gain(1, 3);
    const CMatrix h = t.response(3, 1);
    t.resample_fading(rng);
    CHECK(t.slow_gain(1, 3) == g);
    CHECK_FALSE(t.response(3, 1).isApprox(h));
}

TEST_CASE("ChannelTable - deterministic per seed")
{
    const auto nodes = small_network();
    std::mt19937_64 r1(42), r2(42);
    ChannelTable a(nodes, ChannelParams{}, r1);
    ChannelTable b(nodes, ChannelParams{}, r2);
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
        {
            CHECK(a.slow_gain(i, j) == b.slow_gain(i, j));
            CHECK(a.response(i, j) == b.response(i, j));
        }
}

TEST_CASE("ChannelTable - node ids must match their index")
{
    auto nodes = small_network();
    nodes[2].id = 7;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(ChannelTable(nodes, ChannelParams{}, rng), ContractError);
}

TEST_CASE("received_covariance - Hermitian, PSD, noise floor")
{
    const auto nodes = small_network();
    std::mt19937_64 rng(3);
    ChannelTable t(nodes, ChannelParams{}, rng);
    std::vector<ActiveTransmitter> active;
    for (int id : {0, 2, 3, 4})
        active.push_back({id, dbm_to_mw(18.0), CMatrix::Ones(1, 1), {}});
    const double noise = dbm_to_mw(-91.99);
    const CMatrix Z = received_covariance(t, 1, active, noise);
    CHECK((Z - Z.adjoint()).norm() <= 1e-12 * Z.norm());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(Z);
    CHECK(es.eigenvalues().minCoeff() >= noise * (1.0 - 1e-6));

    double expected = 36.0 * noise;
    for (const auto& tx : active)
        expected += received_signature(t, 1, tx).squaredNorm();
    CHECK_THAT(Z.trace().real(), WithinRel(expected, 1e-12));
}

TEST_CASE("received_signature - precoder dimension check")
{
    const auto nodes = small_network();
    std::mt19937_64 rng(3);
    ChannelTable t(nodes, ChannelParams{}, rng);
    ActiveTransmitter tx{1, 1.0, CMatrix::Ones(4, 1), {3}};
    CHECK_THROWS_AS(received_signature(t, 3, tx), ContractError);
}
