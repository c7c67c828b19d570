#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sbc/nbody.hpp"
#include "sbc/types.hpp"

namespace sbc {

/// Bottom-to-top order of the bodies along the axis (0-based body indices).
struct OrderingLabel {
    std::vector<int> order;

    explicit OrderingLabel(std::vector<int> o) : order(std::move(o)) {
        std::vector<int> seen(order.size(), 0);
        for (int v : order) {
            if (v < 0 || v >= static_cast<int>(order.size()) || seen[static_cast<std::size_t>(v)]++)
                throw std::invalid_argument("OrderingLabel: not a permutation");
        }
    }

    static OrderingLabel identity(std::size_t n) {
        std::vector<int> o(n);
        std::iota(o.begin(), o.end(), 0);
        return OrderingLabel(std::move(o));
    }

    std::size_t size() const { return order.size(); }
    bool operator==(const OrderingLabel&) const = default;
};

namespace detail {

// Axial balance map G(y) = M^{-1} B(y) y + U(y) y on the line; zeros are the
// normalized collinear central configurations. The axial gradient of U at a
// collinear configuration is exactly B(y) y.
inline Eigen::VectorXd axial_residual(const Eigen::VectorXd& y, const MassVector& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    double u = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = y[i] - y[j];
            const double r = std::abs(d);
            const double mi = m[static_cast<std::size_t>(i)];
            const double mj = m[static_cast<std::size_t>(j)];
            u += mi * mj / r;
            const double c = mi * mj / (r * r * r);
            g[i] -= c * d;
            g[j] += c * d;
        }
    Eigen::VectorXd res(n);
    for (Eigen::Index i = 0; i < n; ++i)
        res[i] = g[i] / m[static_cast<std::size_t>(i)] + u * y[i];
    return res;
}

inline Eigen::MatrixXd axial_jacobian(const Eigen::VectorXd& y, const MassVector& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    double u = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = y[i] - y[j];
            const double r = std::abs(d);
            const double mi = m[static_cast<std::size_t>(i)];
            const double mj = m[static_cast<std::size_t>(j)];
            const double c = mi * mj / (r * r * r);
            b(i, j) = c;
            b(i, i) -= c;
            g[i] -= c * d;
            if (j > i) u += mi * mj / r;
        }
    // d/dy of the axial gradient is -2B; add the rank-one term from U(y).
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index i = 0; i < n; ++i) jac.row(i) = -2.0 * b.row(i) / m[static_cast<std::size_t>(i)];
    jac += y * (b * y).transpose();  // grad U along the axis equals B y
    jac.diagonal().array() += u;
    return jac;
}

inline Eigen::VectorXd axial_lift(const Eigen::VectorXd& yr, const MassVector& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::VectorXd y(n);
    y.head(n - 1) = yr;
    double c = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) c += m[static_cast<std::size_t>(i)] * yr[i];
    y[n - 1] = -c / m[m.size() - 1];
    return y;
}

}  // namespace detail

/// Unique normalized collinear central configuration on the y axis with the
/// bodies in the given bottom-to-top order. Damped Newton from equally spaced
/// bodies; the result is deterministic and solves the balance equations for
/// every s (the x components vanish identically).
inline PlanarConfiguration solve_collinear_cc(const MassVector& m, const OrderingLabel& ord) {
    const auto n = static_cast<Eigen::Index>(m.size());
    if (ord.size() != m.size())
        throw std::invalid_argument("solve_collinear_cc: ordering size mismatch");

    // Equally spaced initial guess on [-1, 1] in the requested order.
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = (n == 1) ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / (n - 1);
        y[ord.order[static_cast<std::size_t>(k)]] = t;
    }
    {  // project the barycenter
        double c = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) c += m[static_cast<std::size_t>(i)] * y[i];
        y.array() -= c / m.total();
    }

    Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(n, n - 1);
    lift.topLeftCorner(n - 1, n - 1).setIdentity();
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        lift(n - 1, i) = -m[static_cast<std::size_t>(i)] / m[m.size() - 1];

    Eigen::VectorXd yr = y.head(n - 1);
    const int max_iters = 120;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd yf = detail::axial_lift(yr, m);
        const Eigen::VectorXd res = detail::axial_residual(yf, m).head(n - 1);
        if (res.lpNorm<Eigen::Infinity>() < 1e-13) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd jac = (detail::axial_jacobian(yf, m) * lift).topRows(n - 1);
        const Eigen::VectorXd step = jac.partialPivLu().solve(-res);

        // Armijo backtracking; also rejects steps that reorder or collide.
        const double phi0 = res.squaredNorm();
        double t = 1.0;
        bool accepted = false;
        while (t >= 1e-8) {
            const Eigen::VectorXd trial = yr + t * step;
            const Eigen::VectorXd tf = detail::axial_lift(trial, m);
            bool ordered = true;
            for (Eigen::Index k = 0; k + 1 < n; ++k)
                if (!(tf[ord.order[static_cast<std::size_t>(k)]] <
                      tf[ord.order[static_cast<std::size_t>(k + 1)]] - 1e-12))
                    ordered = false;
            if (ordered) {
                const double phi = detail::axial_residual(tf, m).head(n - 1).squaredNorm();
                if (phi <= phi0 * (1.0 - 1e-4 * t)) {
                    yr = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted)
            throw NoConvergence("solve_collinear_cc: line search stalled");
    }
    if (!converged)
        throw NoConvergence("solve_collinear_cc: Newton did not converge");

    Eigen::VectorXd yf = detail::axial_lift(yr, m);
    double moment = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) moment += m[static_cast<std::size_t>(i)] * yf[i] * yf[i];
    yf /= std::sqrt(moment);

    Eigen::VectorXd coords = Eigen::VectorXd::Zero(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) coords[2 * i + 1] = yf[i];
    return PlanarConfiguration(std::move(coords), m);
}

/// Moves a normalized collinear configuration from the y axis onto the x axis
/// and rescales by 1/sqrt(s); the result solves the balance equations at s
/// with unit weighted moment.
inline PlanarConfiguration make_s_csbc(const PlanarConfiguration& q_hat, const MassVector& m,
                                       SParam s) {
    const std::size_t n = q_hat.n();
    Eigen::VectorXd coords = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(n));
    const double scale = 1.0 / std::sqrt(s.value);
    for (std::size_t i = 0; i < n; ++i)
        coords[2 * static_cast<Eigen::Index>(i)] = q_hat.y(i) * scale;
    return PlanarConfiguration(std::move(coords), m);
}

}  // namespace sbc
