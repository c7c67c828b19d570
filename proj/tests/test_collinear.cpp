#include <catch2/catch.hpp>

#include <cmath>

#include "oracles.hpp"
#include "sbc/collinear.hpp"
#include "sbc/nbody.hpp"

using sbc::MassVector;
using sbc::OrderingLabel;
using sbc::PlanarConfiguration;
using sbc::SParam;

TEST_CASE("equal masses give the symmetric configuration", "[collinear]") {
    const MassVector m({1.0, 1.0, 1.0});
    const PlanarConfiguration q = sbc::solve_collinear_cc(m, OrderingLabel::identity(3));
    const double a = 1.0 / std::sqrt(2.0);
    CHECK(q.y(0) == Approx(-a).epsilon(1e-12));
    CHECK(q.y(1) == Approx(0.0).margin(1e-12));
    CHECK(q.y(2) == Approx(a).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) CHECK(q.x(i) == 0.0);
}

TEST_CASE("two bodies", "[collinear]") {
    const MassVector m({1.0, 1.0});
    const PlanarConfiguration q = sbc::solve_collinear_cc(m, OrderingLabel::identity(2));
    CHECK(sbc::weighted_moment(q, m, SParam(1.0)) == Approx(1.0).epsilon(1e-13));
    CHECK(sbc::balance_residual(q, m, SParam(1.0)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(q.y(0) < q.y(1));
}

TEST_CASE("matches the independent quintic root", "[collinear][oracle]") {
    SECTION("big mass outside") {
        const MassVector m({1.0, 0.5, 0.5});
        const PlanarConfiguration q = sbc::solve_collinear_cc(m, OrderingLabel::identity(3));
        const Eigen::Vector3d expected = oracle::euler_positions(1.0, 0.5, 0.5);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(q.y(i) == Approx(expected[static_cast<int>(i)]).margin(1e-10));
    }
    SECTION("random masses") {
        std::mt19937_64 rng(707);
        for (int k = 0; k < 20; ++k) {
            const auto masses = oracle::random_masses(rng, 3, 0.2, 3.0);
            const MassVector m(masses);
            const PlanarConfiguration q = sbc::solve_collinear_cc(m, OrderingLabel::identity(3));
            const Eigen::Vector3d expected =
                oracle::euler_positions(masses[0], masses[1], masses[2]);
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(q.y(i) == Approx(expected[static_cast<int>(i)]).margin(1e-10));
        }
    }
}

TEST_CASE("residual is below 1e-12 for every s", "[collinear]") {
    std::mt19937_64 rng(808);
    for (std::size_t n : {3u, 4u, 5u}) {
        const MassVector m(oracle::random_masses(rng, n));
        const PlanarConfiguration q = sbc::solve_collinear_cc(m, OrderingLabel::identity(n));
        for (double s : {1.0, 2.0, 5.0, 50.0})
            CHECK(sbc::balance_residual(q, m, SParam(s)).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(sbc::weighted_moment(q, m, SParam(3.0)) == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("deterministic output", "[collinear]") {
    const MassVector m({1.3, 0.7, 2.1, 0.9});
    const OrderingLabel ord({2, 0, 3, 1});
    const PlanarConfiguration a = sbc::solve_collinear_cc(m, ord);
    const PlanarConfiguration b = sbc::solve_collinear_cc(m, ord);
    CHECK((a.coords() - b.coords()).lpNorm<Eigen::Infinity>() == 0.0);

    // bottom-to-top order honored
    CHECK(a.y(2) < a.y(0));
    CHECK(a.y(0) < a.y(3));
    CHECK(a.y(3) < a.y(1));
}

TEST_CASE("ordering equivariance under mass relabeling", "[collinear]") {
    const std::vector<double> masses = {1.0, 0.6, 1.8};
    const MassVector m(masses);
    const PlanarConfiguration base = sbc::solve_collinear_cc(m, OrderingLabel({1, 0, 2}));

    // Relabel the bodies by the permutation p (new body k is old body p[k]).
    const std::vector<int> p = {1, 0, 2};
    const MassVector mp({masses[1], masses[0], masses[2]});
    // The same geometric ordering asks for new labels: old bottom body 1 is
    // now called 0.
    const PlanarConfiguration relabeled = sbc::solve_collinear_cc(mp, OrderingLabel({0, 1, 2}));
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(relabeled.y(k) ==
              Approx(base.y(static_cast<std::size_t>(p[k]))).margin(1e-12));
    }
}

TEST_CASE("axis transfer onto the x axis", "[collinear]") {
    const MassVector m({1.0, 1.0, 1.0});
    const PlanarConfiguration q_hat = sbc::solve_collinear_cc(m, OrderingLabel::identity(3));

    SECTION("s = 1 is a pure rotation") {
        const PlanarConfiguration q = sbc::make_s_csbc(q_hat, m, SParam(1.0));
        CHECK(sbc::balance_residual(q, m, SParam(1.0)).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(sbc::collinearity_angle(q) == Approx(0.0).margin(1e-14));
    }
    SECTION("s = 4 halves the scale") {
        const PlanarConfiguration q = sbc::make_s_csbc(q_hat, m, SParam(4.0));
        CHECK(q.x(0) == Approx(-1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-12));
        CHECK(q.x(2) == Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-12));
        CHECK(sbc::balance_residual(q, m, SParam(4.0)).lpNorm<Eigen::Infinity>() < 1e-10);
    }
    SECTION("unit weighted moment and residual for several s") {
        for (double s : {1.0, 2.0, 10.0}) {
            const PlanarConfiguration q = sbc::make_s_csbc(q_hat, m, SParam(s));
            CHECK(sbc::weighted_moment(q, m, SParam(s)) == Approx(1.0).epsilon(1e-13));
            CHECK(sbc::balance_residual(q, m, SParam(s)).lpNorm<Eigen::Infinity>() < 1e-10);
        }
    }
}

TEST_CASE("invalid orderings are rejected", "[collinear]") {
    CHECK_THROWS_AS(OrderingLabel({0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(OrderingLabel({0, 3, 1}), std::invalid_argument);
}
