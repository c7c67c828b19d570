#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sbc/types.hpp"

namespace sbc {

namespace detail {

inline void require_collision_free(const Eigen::VectorXd& coords,
                                   double threshold = kCollisionThreshold) {
    if (!(min_pair_distance(coords) > threshold))
        throw CollisionError("configuration has a pairwise distance below threshold");
}

inline double potential_raw(const Eigen::VectorXd& q, const MassVector& m) {
    const std::size_t n = body_count(q);
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = q[2 * i] - q[2 * j];
            const double dy = q[2 * i + 1] - q[2 * j + 1];
            u += m[i] * m[j] / std::hypot(dx, dy);
        }
    return u;
}

inline Eigen::VectorXd gradient_raw(const Eigen::VectorXd& q, const MassVector& m) {
    const std::size_t n = body_count(q);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(q.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = q[2 * i] - q[2 * j];
            const double dy = q[2 * i + 1] - q[2 * j + 1];
            const double r = std::hypot(dx, dy);
            const double c = m[i] * m[j] / (r * r * r);
            // d/dq_i of m_i m_j / r points from body i toward body j.
            g[2 * i] += -c * dx;
            g[2 * i + 1] += -c * dy;
            g[2 * j] += c * dx;
            g[2 * j + 1] += c * dy;
        }
    return g;
}

inline Eigen::MatrixXd hessian_raw(const Eigen::VectorXd& q, const MassVector& m) {
    const std::size_t n = body_count(q);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q.size(), q.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = q[2 * i] - q[2 * j];
            const double dy = q[2 * i + 1] - q[2 * j + 1];
            const double r = std::hypot(dx, dy);
            const double c = m[i] * m[j] / (r * r * r);
            Eigen::Matrix2d block;
            const double ux = dx / r, uy = dy / r;
            block << 1.0 - 3.0 * ux * ux, -3.0 * ux * uy,
                     -3.0 * ux * uy, 1.0 - 3.0 * uy * uy;
            block *= c;
            h.block<2, 2>(2 * i, 2 * j) = block;
            h.block<2, 2>(2 * i, 2 * i) -= block;  // diagonal carries minus the row sum
        }
    return h;
}

inline double weighted_moment_raw(const Eigen::VectorXd& q, const MassVector& m, double s) {
    const std::size_t n = body_count(q);
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        w += m[i] * (s * q[2 * i] * q[2 * i] + q[2 * i + 1] * q[2 * i + 1]);
    return w;
}

// F(q,s) = M^{-1} grad U(q) + U(q) * diag(s,1,...,s,1) q.
// Zeros are exactly the normalized balanced configurations: Euler's identity
// <grad U, q> = -U forces the weighted moment to equal 1 at any zero.
inline Eigen::VectorXd balance_residual_raw(const Eigen::VectorXd& q, const MassVector& m,
                                            double s) {
    const std::size_t n = body_count(q);
    const Eigen::VectorXd g = gradient_raw(q, m);
    const double u = potential_raw(q, m);
    Eigen::VectorXd f(q.size());
    for (std::size_t i = 0; i < n; ++i) {
        f[2 * i] = g[2 * i] / m[i] + u * s * q[2 * i];
        f[2 * i + 1] = g[2 * i + 1] / m[i] + u * q[2 * i + 1];
    }
    return f;
}

// Ambient Jacobian dF/dq = M^{-1} D2U + (S q) (grad U)^T + U S.
inline Eigen::MatrixXd balance_jacobian_q_raw(const Eigen::VectorXd& q, const MassVector& m,
                                              double s) {
    const std::size_t n = body_count(q);
    const Eigen::MatrixXd d2u = hessian_raw(q, m);
    const Eigen::VectorXd g = gradient_raw(q, m);
    const double u = potential_raw(q, m);
    Eigen::MatrixXd jac(q.size(), q.size());
    for (std::size_t i = 0; i < n; ++i) {
        jac.row(2 * i) = d2u.row(2 * i) / m[i];
        jac.row(2 * i + 1) = d2u.row(2 * i + 1) / m[i];
    }
    Eigen::VectorXd sq(q.size());
    for (std::size_t i = 0; i < n; ++i) {
        sq[2 * i] = s * q[2 * i];
        sq[2 * i + 1] = q[2 * i + 1];
    }
    jac += sq * g.transpose();
    for (std::size_t i = 0; i < n; ++i) {
        jac(2 * i, 2 * i) += u * s;
        jac(2 * i + 1, 2 * i + 1) += u;
    }
    return jac;
}

// dF/ds: only the x-components of the weighting matrix depend on s.
inline Eigen::VectorXd balance_residual_ds_raw(const Eigen::VectorXd& q, const MassVector& m) {
    const std::size_t n = body_count(q);
    const double u = potential_raw(q, m);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(q.size());
    for (std::size_t i = 0; i < n; ++i) d[2 * i] = u * q[2 * i];
    return d;
}

// --- zero-barycenter reduction -------------------------------------------
//
// Newton systems eliminate the last body, q_n = -(1/m_n) sum_{i<n} m_i q_i,
// which removes the two translation directions exactly. "Reduced" vectors
// hold the first n-1 bodies, flat.

inline Eigen::VectorXd reduce(const Eigen::VectorXd& ambient) {
    return ambient.head(ambient.size() - 2);
}

inline Eigen::VectorXd lift(const Eigen::VectorXd& reduced, const MassVector& m) {
    const std::size_t n = m.size();
    Eigen::VectorXd q(2 * n);
    q.head(reduced.size()) = reduced;
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        cx += m[i] * reduced[2 * i];
        cy += m[i] * reduced[2 * i + 1];
    }
    q[2 * n - 2] = -cx / m[n - 1];
    q[2 * n - 1] = -cy / m[n - 1];
    return q;
}

inline Eigen::MatrixXd lift_matrix(const MassVector& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2 * n, 2 * n - 2);
    l.topLeftCorner(2 * n - 2, 2 * n - 2).setIdentity();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        l(2 * n - 2, 2 * i) = -m[static_cast<std::size_t>(i)] / m[m.size() - 1];
        l(2 * n - 1, 2 * i + 1) = -m[static_cast<std::size_t>(i)] / m[m.size() - 1];
    }
    return l;
}

inline Eigen::VectorXd balance_residual_reduced(const Eigen::VectorXd& x, const MassVector& m,
                                                double s) {
    return reduce(balance_residual_raw(lift(x, m), m, s));
}

inline Eigen::MatrixXd balance_jacobian_reduced(const Eigen::VectorXd& x, const MassVector& m,
                                                double s) {
    const Eigen::VectorXd q = lift(x, m);
    const Eigen::MatrixXd jac = balance_jacobian_q_raw(q, m, s);
    const Eigen::MatrixXd l = lift_matrix(m);
    return (jac * l).topRows(q.size() - 2);
}

inline double collinearity_angle_raw(const Eigen::VectorXd& q) {
    const std::size_t n = body_count(q);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = q[2 * i] - q[2 * j];
            const double dy = q[2 * i + 1] - q[2 * j + 1];
            const double r = std::hypot(dx, dy);
            // angle between the pair line and the x direction, in [0, pi/2]
            const double c = std::min(1.0, std::abs(dx) / r);
            worst = std::max(worst, std::acos(c));
        }
    return worst;
}

// Largest off-axis fraction |dq_perp| / r over all pairs: zero iff the bodies
// are collinear along the given axis. Unlike the collinearity angle, a single
// axis-aligned pair (a symmetric isosceles shape, say) cannot saturate it.
inline double axis_collinearity_deviation(const Eigen::VectorXd& q, Axis axis) {
    const std::size_t n = body_count(q);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = q[2 * i] - q[2 * j];
            const double dy = q[2 * i + 1] - q[2 * j + 1];
            const double r = std::hypot(dx, dy);
            const double off = axis == Axis::Y ? std::abs(dx) : std::abs(dy);
            worst = std::max(worst, off / r);
        }
    return worst;
}

}  // namespace detail

/// Newtonian potential U(q) = sum_{i<j} m_i m_j / |q_i - q_j|.
inline double potential(const PlanarConfiguration& q, const MassVector& m) {
    detail::require_collision_free(q.coords());
    return detail::potential_raw(q.coords(), m);
}

/// Gradient of U as a flat vector of length 2n. The per-body blocks sum to
/// zero (translation invariance).
inline Eigen::VectorXd gradient(const PlanarConfiguration& q, const MassVector& m) {
    detail::require_collision_free(q.coords());
    return detail::gradient_raw(q.coords(), m);
}

/// Hessian D2U(q), a symmetric 2n x 2n matrix with zero block-row sums.
inline Eigen::MatrixXd hessian_U(const PlanarConfiguration& q, const MassVector& m) {
    detail::require_collision_free(q.coords());
    return detail::hessian_raw(q.coords(), m);
}

/// Weighted moment of inertia I_S(q) = sum_i m_i (s x_i^2 + y_i^2).
inline double weighted_moment(const PlanarConfiguration& q, const MassVector& m, SParam s) {
    return detail::weighted_moment_raw(q.coords(), m, s.value);
}

/// Balance residual F(q,s); zeros are the normalized balanced configurations.
inline Eigen::VectorXd balance_residual(const PlanarConfiguration& q, const MassVector& m,
                                        SParam s) {
    detail::require_collision_free(q.coords());
    return detail::balance_residual_raw(q.coords(), m, s.value);
}

/// Rescales q so that the weighted moment equals one.
inline PlanarConfiguration normalize(const PlanarConfiguration& q, const MassVector& m,
                                     SParam s) {
    const double w = detail::weighted_moment_raw(q.coords(), m, s.value);
    if (!(w > 0.0))
        throw DegenerateConfiguration("normalize: weighted moment is zero");
    return PlanarConfiguration(q.coords() / std::sqrt(w), m);
}

/// Largest angle between any pair line q_i - q_j and the x axis, in [0, pi/2].
/// Zero iff the bodies are collinear along the x axis; pi/2 iff along y.
inline double collinearity_angle(const PlanarConfiguration& q) {
    detail::require_collision_free(q.coords());
    return detail::collinearity_angle_raw(q.coords());
}

/// Reflection across a coordinate axis: Axis::X maps (x,y) -> (x,-y),
/// Axis::Y maps (x,y) -> (-x,y). An involution; U is invariant and the
/// balance residual is equivariant under both.
inline PlanarConfiguration reflect(const PlanarConfiguration& q, const MassVector& m, Axis axis) {
    Eigen::VectorXd c = q.coords();
    const std::size_t n = q.n();
    for (std::size_t i = 0; i < n; ++i) {
        if (axis == Axis::X)
            c[2 * i + 1] = -c[2 * i + 1];
        else
            c[2 * i] = -c[2 * i];
    }
    return PlanarConfiguration(std::move(c), m);
}

namespace detail {

inline Eigen::VectorXd reflect_raw(const Eigen::VectorXd& q, Axis axis) {
    Eigen::VectorXd c = q;
    const std::size_t n = body_count(q);
    for (std::size_t i = 0; i < n; ++i) {
        if (axis == Axis::X)
            c[2 * i + 1] = -c[2 * i + 1];
        else
            c[2 * i] = -c[2 * i];
    }
    return c;
}

}  // namespace detail

}  // namespace sbc
