#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sbc/nbody.hpp"

using sbc::MassVector;
using sbc::PlanarConfiguration;
using sbc::SParam;

namespace {

PlanarConfiguration two_body_pair(const MassVector& m) {
    Eigen::VectorXd q(4);
    q << 0.0, -0.5, 0.0, 0.5;
    return PlanarConfiguration(q, m);
}

// Unit masses on the y axis at (-a, 0, a), a = 1/sqrt(2); the normalized
// equal-mass collinear central configuration.
PlanarConfiguration symmetric_triple(const MassVector& m) {
    const double a = 1.0 / std::sqrt(2.0);
    Eigen::VectorXd q(6);
    q << 0.0, -a, 0.0, 0.0, 0.0, a;
    return PlanarConfiguration(q, m);
}

PlanarConfiguration equilateral(const MassVector& m) {
    // Unit side, circumradius 1/sqrt(3): moment of inertia equals one.
    const double r = 1.0 / std::sqrt(3.0);
    Eigen::VectorXd q(6);
    q << 0.0, r, -0.5, -0.5 * r, 0.5, -0.5 * r;
    return PlanarConfiguration(q, m);
}

}  // namespace

TEST_CASE("potential on reference configurations", "[nbody]") {
    const MassVector m2({1.0, 1.0});
    CHECK(sbc::potential(two_body_pair(m2), m2) == Approx(1.0).epsilon(1e-14));

    const MassVector m3({1.0, 1.0, 1.0});
    CHECK(sbc::potential(symmetric_triple(m3), m3) ==
          Approx(5.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("potential homogeneity of degree -1", "[nbody]") {
    std::mt19937_64 rng(101);
    const MassVector m(oracle::random_masses(rng, 4));
    for (int k = 0; k < 20; ++k) {
        const PlanarConfiguration q = oracle::random_configuration(rng, m);
        const double u = sbc::potential(q, m);
        const double c = oracle::uniform(rng, 0.1, 10.0);
        const PlanarConfiguration qc(c * q.coords(), m);
        CHECK(std::abs(sbc::potential(qc, m) - u / c) <= 1e-12 * u);
    }
}

TEST_CASE("gradient of the two-body pair", "[nbody]") {
    const MassVector m({1.0, 1.0});
    const Eigen::VectorXd g = sbc::gradient(two_body_pair(m), m);
    // body 1 sits below body 2; the pull on body 1 points up
    CHECK(g[0] == Approx(0.0).margin(1e-15));
    CHECK(g[1] == Approx(1.0).epsilon(1e-14));
    CHECK(g[2] == Approx(0.0).margin(1e-15));
    CHECK(g[3] == Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("gradient translation invariance", "[nbody]") {
    std::mt19937_64 rng(202);
    for (std::size_t n : {3u, 4u, 5u}) {
        const MassVector m(oracle::random_masses(rng, n));
        for (int k = 0; k < 10; ++k) {
            const PlanarConfiguration q = oracle::random_configuration(rng, m);
            const Eigen::VectorXd g = sbc::gradient(q, m);
            double sx = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sx += g[2 * i];
                sy += g[2 * i + 1];
            }
            CHECK(std::hypot(sx, sy) <= 1e-12 * g.norm());
        }
    }
}

TEST_CASE("gradient matches finite differences of the potential", "[nbody][oracle]") {
    std::mt19937_64 rng(303);
    const MassVector m({1.0, 0.8, 1.3});
    for (int k = 0; k < 25; ++k) {
        const PlanarConfiguration q = oracle::random_configuration(rng, m);
        const Eigen::VectorXd g = sbc::gradient(q, m);
        const Eigen::VectorXd fd = oracle::fd_gradient(q.coords(), m, 1e-6);
        CHECK((g - fd).norm() <= 1e-6 * g.norm());
    }
}

TEST_CASE("hessian off-diagonal block of the two-body pair", "[nbody]") {
    const MassVector m({1.0, 1.0});
    const Eigen::MatrixXd h = sbc::hessian_U(two_body_pair(m), m);
    // pair direction is the y axis, so the coupling block is diag(1, -2)
    CHECK(h(0, 2) == Approx(1.0).epsilon(1e-14));
    CHECK(h(1, 3) == Approx(-2.0).epsilon(1e-14));
    CHECK(h(0, 3) == Approx(0.0).margin(1e-15));
    CHECK(h(1, 2) == Approx(0.0).margin(1e-15));
}

TEST_CASE("hessian symmetry and zero block-row sums", "[nbody]") {
    std::mt19937_64 rng(404);
    const MassVector m(oracle::random_masses(rng, 4));
    const PlanarConfiguration q = oracle::random_configuration(rng, m);
    const Eigen::MatrixXd h = sbc::hessian_U(q, m);
    CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12 * h.norm());
    for (std::size_t i = 0; i < m.size(); ++i) {
        Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
        for (std::size_t j = 0; j < m.size(); ++j)
            sum += h.block<2, 2>(2 * static_cast<Eigen::Index>(i),
                                 2 * static_cast<Eigen::Index>(j));
        CHECK(sum.lpNorm<Eigen::Infinity>() <= 1e-12 * h.lpNorm<Eigen::Infinity>());
    }
}

TEST_CASE("hessian matches finite differences of the gradient", "[nbody][oracle]") {
    std::mt19937_64 rng(505);
    for (std::size_t n : {3u, 4u, 5u}) {
        const MassVector m(oracle::random_masses(rng, n));
        for (int k = 0; k < 10; ++k) {
            const PlanarConfiguration q = oracle::random_configuration(rng, m);
            const Eigen::MatrixXd h = sbc::hessian_U(q, m);
            const Eigen::MatrixXd fd = oracle::fd_hessian(q.coords(), m, 1e-6);
            CHECK((h - fd).lpNorm<Eigen::Infinity>() <=
                  1e-5 * h.lpNorm<Eigen::Infinity>());
        }
    }
}

TEST_CASE("weighted moment", "[nbody]") {
    const MassVector m({1.0, 1.0, 1.0});
    const PlanarConfiguration q = symmetric_triple(m);
    CHECK(sbc::weighted_moment(q, m, SParam(1.0)) == Approx(1.0).epsilon(1e-14));
    CHECK(sbc::weighted_moment(q, m, SParam(7.0)) == Approx(1.0).epsilon(1e-14));

    // Same shape rotated onto the x axis: every term picks up the factor s.
    Eigen::VectorXd c(6);
    const double a = 1.0 / std::sqrt(2.0);
    c << -a, 0.0, 0.0, 0.0, a, 0.0;
    const PlanarConfiguration qx(c, m);
    CHECK(sbc::weighted_moment(qx, m, SParam(4.0)) == Approx(4.0).epsilon(1e-14));

    const PlanarConfiguration q3(3.0 * q.coords(), m);
    CHECK(sbc::weighted_moment(q3, m, SParam(2.0)) == Approx(9.0).epsilon(1e-14));
}

TEST_CASE("balance residual vanishes on known solutions", "[nbody]") {
    const MassVector m({1.0, 1.0, 1.0});

    SECTION("equilateral at s = 1") {
        const auto f = sbc::balance_residual(equilateral(m), m, SParam(1.0));
        CHECK(f.lpNorm<Eigen::Infinity>() < 1e-10);
    }
    SECTION("y-axis collinear solves for every s") {
        for (double s : {1.0, 1.7, 4.0, 50.0}) {
            const auto f = sbc::balance_residual(symmetric_triple(m), m, SParam(s));
            CHECK(f.lpNorm<Eigen::Infinity>() < 1e-10);
        }
    }
    SECTION("x-axis collinear requires the 1/sqrt(s) rescaling") {
        Eigen::VectorXd c(6);
        const double a = 1.0 / std::sqrt(2.0);
        c << -a, 0.0, 0.0, 0.0, a, 0.0;
        const PlanarConfiguration qx(c, m);
        CHECK(sbc::balance_residual(qx, m, SParam(1.0)).lpNorm<Eigen::Infinity>() < 1e-10);
        CHECK(sbc::balance_residual(qx, m, SParam(2.0)).lpNorm<Eigen::Infinity>() > 0.1);
        const PlanarConfiguration scaled(c / std::sqrt(2.0), m);
        CHECK(sbc::balance_residual(scaled, m, SParam(2.0)).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("normalize", "[nbody]") {
    const MassVector m({1.0, 1.0, 1.0});
    Eigen::VectorXd c(6);
    c << 0.0, -1.0, 0.0, 0.0, 0.0, 1.0;
    const PlanarConfiguration q(c, m);
    const PlanarConfiguration qn = sbc::normalize(q, m, SParam(3.0));
    CHECK(sbc::weighted_moment(qn, m, SParam(3.0)) == Approx(1.0).epsilon(1e-14));
    CHECK(qn.y(0) == Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(qn.y(2) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

    const PlanarConfiguration again = sbc::normalize(qn, m, SParam(3.0));
    CHECK((again.coords() - qn.coords()).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("collinearity angle", "[nbody]") {
    const MassVector m({1.0, 1.0, 1.0});
    constexpr double half_pi = std::numbers::pi / 2.0;

    Eigen::VectorXd cx(6);
    cx << -1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    CHECK(sbc::collinearity_angle(PlanarConfiguration(cx, m)) == Approx(0.0).margin(1e-14));

    CHECK(sbc::collinearity_angle(symmetric_triple(m)) == Approx(half_pi).epsilon(1e-14));

    // Equilateral triangle with one side on the x axis.
    Eigen::VectorXd ce(6);
    ce << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    CHECK(sbc::collinearity_angle(PlanarConfiguration(ce, m)) ==
          Approx(std::numbers::pi / 3.0).epsilon(1e-12));
}

TEST_CASE("reflection is an involutive isometry and F is equivariant", "[nbody]") {
    std::mt19937_64 rng(606);
    const MassVector m(oracle::random_masses(rng, 3));
    for (int k = 0; k < 10; ++k) {
        const PlanarConfiguration q = oracle::random_configuration(rng, m);
        for (sbc::Axis axis : {sbc::Axis::X, sbc::Axis::Y}) {
            const PlanarConfiguration r = sbc::reflect(q, m, axis);
            const PlanarConfiguration rr = sbc::reflect(r, m, axis);
            CHECK((rr.coords() - q.coords()).lpNorm<Eigen::Infinity>() < 1e-15);
            CHECK(sbc::potential(r, m) == Approx(sbc::potential(q, m)).epsilon(1e-14));

            const double s = 1.0 + 2.0 * oracle::uniform01(rng);
            const Eigen::VectorXd lhs = sbc::balance_residual(r, m, SParam(s));
            const Eigen::VectorXd rhs =
                sbc::detail::reflect_raw(sbc::balance_residual(q, m, SParam(s)), axis);
            CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
        }
    }
}

TEST_CASE("collision and degeneracy errors", "[nbody]") {
    const MassVector m({1.0, 1.0});
    Eigen::VectorXd c(4);
    c << 0.0, 0.0, 0.0, 1e-12;
    CHECK_THROWS_AS(PlanarConfiguration(c, m), sbc::CollisionError);

    CHECK_THROWS_AS(MassVector({1.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(SParam(0.5), std::invalid_argument);
}
