#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "sbc/collinear.hpp"
#include "sbc/nbody.hpp"
#include "sbc/spectral.hpp"
#include "sbc/types.hpp"

namespace sbc {

struct ContinuationSettings {
    double delta = 1e-3;        // arclength step
    double delta_s = 1e-4;      // initial parameter displacement (signed)
    double newton_tol = 1e-12;  // on the residual max-norm and the arclength equation
    int max_newton_iters = 50;
    long max_steps = 200000;
    double s_min = 1.0 + 1e-6;
    double s_max = 100.0;
    double shrink = 0.5;  // step adaptation on corrector failure
    double grow = 1.3;    // growth after grow_after consecutive successes
    int grow_after = 5;
    double delta_min = 1e-6;
    double delta_max = 1e-2;
    double s_weight = 1.0;  // weight of the s component in the augmented norm

    // Seeding and probing knobs.
    double seed_epsilon = 1e-3;      // kernel displacement for branch seeding
    double probe_s_offset = 2e-2;    // parameter offset for turning-point probes
    double probe_radius = 1e-2;      // random probe displacement per body
    int n_random_probes = 64;
    double branch_distance_factor = 10.0;  // times delta: "off the branch" cutoff

    // Detection thresholds.
    double collinear_arrival_tol = 1e-6;    // max off-axis pair fraction |dx|/r
    double asymptotic_ratio = 1.5;          // compare configurations at s and ratio*s
    double asymptotic_tol = 1e-6;
};

struct BranchPoint {
    PlanarConfiguration q;
    double s = 0.0;
    InertiaIndices indices;
    double residual_norm = 0.0;
    double moment_error = 0.0;
    double arclength = 0.0;
};

enum class SeedKind { Bifurcation, TurningPoint, User };

struct SeedInfo {
    SeedKind kind = SeedKind::User;
    double s_origin = 0.0;   // bifurcation value or turning-point parameter
    int kernel_sign = 0;     // sign of the kernel displacement (bifurcation seeds)
    int direction = 0;       // +1 toward larger s, -1 toward smaller (probe seeds)
};

enum class TerminationKind {
    ReachedSMin,
    ReachedSMax,
    ArrivedAtCollinear,
    MaxSteps,
    NewtonFailure,
};

struct Termination {
    TerminationKind kind = TerminationKind::MaxSteps;
    std::optional<OrderingLabel> arrived_ordering;
};

struct AsymptoticInfo {
    double s_detected = 0.0;
    double config_difference = 0.0;
    Eigen::VectorXd limit_candidate;
};

struct Branch {
    std::vector<BranchPoint> points;
    std::vector<double> step_deltas;  // commanded step for points[i] -> points[i+1]
    SeedInfo seed;
    Termination termination;
    std::optional<AsymptoticInfo> asymptotic;
};

// A pair of consecutive solutions that starts the predictor-corrector.
struct SeedPair {
    Eigen::VectorXd x0;  // reduced coordinates
    double s0 = 0.0;
    Eigen::VectorXd x1;
    double s1 = 0.0;
    SeedInfo info;
};

struct NewtonResult {
    Eigen::VectorXd x;
    double s = 0.0;
    int iterations = 0;
    double residual_norm = 0.0;  // ambient max-norm of the balance residual
};

struct TurningPoint {
    std::size_t point_index = 0;  // accepted point adjacent to the sign change
    double s_turn = 0.0;
    double smallest_singular_value = 0.0;
    double singular_value_scale = 0.0;  // largest singular value at the turn
    Eigen::VectorXd x_turn;             // reduced coordinates
};

struct FoundSolution {
    PlanarConfiguration q;
    bool collinear = false;
    InertiaIndices indices;
};

namespace detail {

// Distances between branch points live in the full configuration space plus
// the parameter; measuring them on the reduced coordinates instead would hide
// the motion of the eliminated body (fatal when that body is light and
// swings the widest).
inline double augmented_norm(const Eigen::VectorXd& dq_ambient, double ds, double s_weight) {
    return std::sqrt(dq_ambient.squaredNorm() + s_weight * ds * ds);
}

inline double ambient_distance(const MassVector& m, const Eigen::VectorXd& x_a, double s_a,
                               const Eigen::VectorXd& x_b, double s_b, double s_weight) {
    return augmented_norm(lift(x_a, m) - lift(x_b, m), s_a - s_b, s_weight);
}

// Deterministic uniform and circle samplers on top of mt19937_64; the standard
// distributions are implementation-defined, these are not.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Eigen::Vector2d unit_direction(std::mt19937_64& rng) {
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    return {std::cos(theta), std::sin(theta)};
}

inline double gaussian(std::mt19937_64& rng) {
    // Box-Muller; fully specified so runs reproduce bitwise across platforms.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

/// Secant predictor: current + gamma * (current - previous) with
/// gamma = delta / |current - previous| in the augmented (configuration, s)
/// norm. The prediction is formed in reduced coordinates; the lift is linear,
/// so this is the same as predicting in the full space.
inline std::pair<Eigen::VectorXd, double> predict_tangent(const MassVector& m,
                                                          const Eigen::VectorXd& x_cur,
                                                          double s_cur,
                                                          const Eigen::VectorXd& x_prev,
                                                          double s_prev, double delta,
                                                          double s_weight = 1.0) {
    const double len = detail::ambient_distance(m, x_cur, s_cur, x_prev, s_prev, s_weight);
    if (len < 1e-15)
        throw DegenerateSecant("predict_tangent: consecutive points coincide");
    const double gamma = delta / len;
    return {x_cur + gamma * (x_cur - x_prev), s_cur + gamma * (s_cur - s_prev)};
}

/// Corrector for the augmented system {F(q,s) = 0, |(q,s)-(q_i,s_i)|^2 = delta^2}
/// in reduced coordinates. Fails if the augmented Jacobian degenerates or the
/// iteration budget runs out; failure is the signal that drives step halving.
inline NewtonResult newton_correct(const MassVector& m, Eigen::VectorXd x, double s,
                                   const Eigen::VectorXd& x_anchor, double s_anchor,
                                   double delta, const ContinuationSettings& settings) {
    const Eigen::Index dim = x.size() + 1;
    const Eigen::VectorXd q_anchor = detail::lift(x_anchor, m);
    const Eigen::MatrixXd lift_mat = detail::lift_matrix(m);
    // The arclength equation is quadratic in the distance, so meeting the
    // per-step distance budget |dist - delta| needs a tolerance that scales
    // with delta; 4e-16 is the evaluation noise floor of the constraint.
    const double arc_tol =
        std::max(std::min(settings.newton_tol, 1e-9 * delta), 4e-16);
    for (int it = 1; it <= settings.max_newton_iters; ++it) {
        Eigen::VectorXd q;
        try {
            q = detail::lift(x, m);
            detail::require_collision_free(q);
        } catch (const CollisionError&) {
            throw NewtonFailure("newton_correct: iterate collided");
        }
        const Eigen::VectorXd f_amb = detail::balance_residual_raw(q, m, s);
        const Eigen::VectorXd dq = q - q_anchor;
        const double ds = s - s_anchor;
        const double arc = dq.squaredNorm() + settings.s_weight * ds * ds - delta * delta;

        const double fnorm = f_amb.lpNorm<Eigen::Infinity>();
        if (fnorm <= settings.newton_tol && std::abs(arc) <= arc_tol)
            return {std::move(x), s, it - 1, fnorm};

        Eigen::MatrixXd jac(dim, dim);
        jac.topLeftCorner(dim - 1, dim - 1) = detail::balance_jacobian_reduced(x, m, s);
        jac.topRightCorner(dim - 1, 1) =
            detail::reduce(detail::balance_residual_ds_raw(q, m));
        jac.bottomLeftCorner(1, dim - 1) = 2.0 * dq.transpose() * lift_mat;
        jac(dim - 1, dim - 1) = 2.0 * settings.s_weight * ds;

        Eigen::VectorXd rhs(dim);
        rhs.head(dim - 1) = -detail::reduce(f_amb);
        rhs[dim - 1] = -arc;

        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        lu.setThreshold(1e-14);
        if (lu.rank() < dim)
            throw NewtonFailure("newton_correct: singular augmented Jacobian");
        const Eigen::VectorXd step = lu.solve(rhs);
        x += step.head(dim - 1);
        s += step[dim - 1];
    }
    throw NewtonFailure("newton_correct: no convergence within iteration budget");
}

namespace detail {

// Plain damped Newton on F(., s) = 0 at fixed parameter, in reduced
// coordinates. Returns nullopt on failure instead of throwing: probes and
// multistart treat failures as normal outcomes.
inline std::optional<NewtonResult> fixed_s_newton(const MassVector& m, Eigen::VectorXd x,
                                                  double s, double tol, int max_iters) {
    for (int it = 1; it <= max_iters; ++it) {
        const Eigen::VectorXd q = lift(x, m);
        if (!(min_pair_distance(q) > kCollisionThreshold)) return std::nullopt;
        const Eigen::VectorXd f_amb = balance_residual_raw(q, m, s);
        if (f_amb.lpNorm<Eigen::Infinity>() <= tol) return NewtonResult{x, s, it - 1,
                                                                        f_amb.lpNorm<Eigen::Infinity>()};
        const Eigen::VectorXd res = reduce(f_amb);
        const Eigen::MatrixXd jac = balance_jacobian_reduced(x, m, s);
        // LU when the Jacobian is regular (sign-exact under reflections, so
        // mirrored runs stay bitwise mirrored); thresholded least squares as
        // the fallback, since at s = 1 the rotational symmetry makes the
        // Jacobian exactly singular at solutions and the minimal-norm step is
        // Newton on the quotient.
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        lu.setThreshold(1e-13);
        Eigen::VectorXd step;
        if (lu.rank() == jac.rows()) {
            step = lu.solve(-res);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac,
                                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-13);
            step = svd.solve(-res);
        }
        if (!step.allFinite()) return std::nullopt;

        const double phi0 = res.squaredNorm();
        double t = 1.0;
        bool accepted = false;
        while (t >= 1e-8) {
            const Eigen::VectorXd trial = x + t * step;
            const Eigen::VectorXd tq = lift(trial, m);
            if (min_pair_distance(tq) > kCollisionThreshold) {
                const double phi = reduce(balance_residual_raw(tq, m, s)).squaredNorm();
                if (phi <= phi0 * (1.0 - 1e-4 * t)) {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted) return std::nullopt;
    }
    return std::nullopt;
}

inline BranchPoint make_branch_point(const MassVector& m, const Eigen::VectorXd& x, double s,
                                     double arclength) {
    const Eigen::VectorXd q = lift(x, m);
    PlanarConfiguration config(q, m);
    const double residual =
        balance_residual_raw(config.coords(), m, s).lpNorm<Eigen::Infinity>();
    const double moment_error = std::abs(weighted_moment_raw(config.coords(), m, s) - 1.0);
    // Euler's identity ties the weighted moment to the residual at every
    // converged solution; a violation here means a broken residual evaluation.
    if (residual <= 1e-10 && moment_error > 1e-8)
        throw std::logic_error("branch point violates the moment identity");
    auto [indices, eigenvalues] = constrained_hessian_spectrum(config, m, SParam(s));
    (void)eigenvalues;
    return BranchPoint{std::move(config), s, indices, residual, moment_error, arclength};
}

// Kernel direction of dF/dq at a near-singular point, via the smallest right
// singular vector of the reduced Jacobian.
inline Eigen::VectorXd reduced_kernel_direction(const MassVector& m, const Eigen::VectorXd& x,
                                                double s) {
    const Eigen::MatrixXd jac = balance_jacobian_reduced(x, m, s);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(jac.cols() - 1);
    // Fix the sign deterministically.
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0) v = -v;
            break;
        }
    }
    return v;
}

// Kernel dimension of the reduced Jacobian at relative threshold tau.
inline int reduced_kernel_dimension(const MassVector& m, const Eigen::VectorXd& x, double s,
                                    double tau = kIndexZeroThreshold) {
    const Eigen::MatrixXd jac = balance_jacobian_reduced(x, m, s);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const Eigen::VectorXd sv = svd.singularValues();
    int dim = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] <= tau * sv[0]) ++dim;
    return dim;
}

inline bool y_axis_collinear(const Eigen::VectorXd& q, double tol) {
    return axis_collinearity_deviation(q, Axis::Y) < tol;
}

// Signed x-amplitude used to detect crossings of the y-axis trivial family:
// the x coordinate of the body farthest from the axis.
inline double x_amplitude(const Eigen::VectorXd& q) {
    const std::size_t n = body_count(q);
    double amp = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(q[2 * i]) > std::abs(amp)) amp = q[2 * i];
    return amp;
}

inline OrderingLabel ordering_from_y(const Eigen::VectorXd& q) {
    const std::size_t n = body_count(q);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return q[2 * static_cast<Eigen::Index>(a) + 1] < q[2 * static_cast<Eigen::Index>(b) + 1];
    });
    return OrderingLabel(std::move(order));
}

}  // namespace detail

/// Two consecutive solutions off the trivial family at a bifurcation value:
/// Newton at s_tilde + delta_s from the configuration displaced along the
/// kernel of dF/dq. Both displacement signs and, failing that, both signs of
/// delta_s are tried; the escalation ladder on the displacement magnitude
/// keeps the guess outside the basin of the trivial solution.
inline SeedPair seed_secondary_solution(const MassVector& m, const PlanarConfiguration& q_hat,
                                        double s_tilde, const ContinuationSettings& settings,
                                        int preferred_sign = +1) {
    const Eigen::VectorXd x_hat = detail::reduce(q_hat.coords());
    const int kernel_dim = detail::reduced_kernel_dimension(m, x_hat, s_tilde);
    if (kernel_dim > 1)
        throw KernelDimensionUnsupported("seed_secondary_solution: kernel dimension " +
                                         std::to_string(kernel_dim));
    if (kernel_dim == 0)
        throw NotAdmissible("seed_secondary_solution: s_tilde is not a degeneracy instant");
    const Eigen::VectorXd v_ker = detail::reduced_kernel_direction(m, x_hat, s_tilde);

    // Smallest displacements first, on both sides of s_tilde, so the local
    // bifurcating pair is found before a large displacement can jump to some
    // unrelated faraway branch; the locality guard rejects such jumps anyway.
    // Newton converges only linearly this close to the degenerate point, so
    // the solves get an enlarged iteration budget.
    const int seed_iters = 4 * settings.max_newton_iters;
    for (double eps_scale : {1.0, 3.0, 10.0, 30.0, 100.0}) {
        for (double ds : {settings.delta_s, -settings.delta_s}) {
            const double s0 = s_tilde + ds;
            if (s0 < 1.0) continue;
            for (int sign : {preferred_sign, -preferred_sign}) {
                const double eps = sign * eps_scale * settings.seed_epsilon;
                auto first = detail::fixed_s_newton(m, x_hat + eps * v_ker, s0,
                                                    settings.newton_tol, seed_iters);
                if (!first) continue;
                const Eigen::VectorXd q0 = detail::lift(first->x, m);
                if (detail::y_axis_collinear(q0, settings.collinear_arrival_tol)) continue;
                if ((first->x - x_hat).lpNorm<Eigen::Infinity>() > 0.2) continue;

                const double s1 = s0 + ds;
                auto second = detail::fixed_s_newton(m, first->x, s1, settings.newton_tol,
                                                     seed_iters);
                if (!second) continue;
                const Eigen::VectorXd q1 = detail::lift(second->x, m);
                if (detail::y_axis_collinear(q1, settings.collinear_arrival_tol)) continue;

                SeedInfo info{SeedKind::Bifurcation, s_tilde, sign, ds > 0 ? +1 : -1};
                return SeedPair{first->x, s0, second->x, s1, info};
            }
        }
    }
    throw FellBackToTrivial(
        "seed_secondary_solution: Newton returned collinear points for all displacements");
}

/// Mirror image of a seed pair across the y axis; follows the reflected branch.
inline SeedPair reflect_seed(const SeedPair& seed, const MassVector& m) {
    auto flip = [&](const Eigen::VectorXd& x) {
        return detail::reduce(detail::reflect_raw(detail::lift(x, m), Axis::Y));
    };
    SeedPair out = seed;
    out.x0 = flip(seed.x0);
    out.x1 = flip(seed.x1);
    out.info.kernel_sign = -seed.info.kernel_sign;
    return out;
}

/// Predictor-corrector continuation from a seed pair. Steps adapt on corrector
/// failure; every accepted point carries its inertia indices and residual
/// diagnostics. Termination: leaving [s_min, s_max] (the endpoint is then
/// re-solved exactly on the boundary), arriving back at the trivial collinear
/// family, running out of steps, or an unrecoverable corrector failure.
inline Branch follow_branch(const MassVector& m, const SeedPair& seed,
                            const ContinuationSettings& settings) {
    Branch branch;
    branch.seed = seed.info;

    Eigen::VectorXd x_prev = seed.x0;
    double s_prev = seed.s0;
    Eigen::VectorXd x_cur = seed.x1;
    double s_cur = seed.s1;

    double arclength = 0.0;
    branch.points.push_back(detail::make_branch_point(m, x_prev, s_prev, arclength));
    arclength += detail::ambient_distance(m, x_cur, s_cur, x_prev, s_prev, settings.s_weight);
    branch.points.push_back(detail::make_branch_point(m, x_cur, s_cur, arclength));
    branch.step_deltas.assign(1, 0.0);  // seed spacing is delta_s-based, not delta

    // Checkpoints with strictly increasing s for the asymptotic-limit test.
    std::vector<std::pair<double, Eigen::VectorXd>> s_checkpoints;
    std::size_t checkpoint_lo = 0;

    double delta = settings.delta;
    int successes = 0;

    auto solve_at_fixed_s = [&](const Eigen::VectorXd& x_guess, double s_fix)
        -> std::optional<NewtonResult> {
        return detail::fixed_s_newton(m, x_guess, s_fix, settings.newton_tol,
                                      settings.max_newton_iters);
    };

    for (long step = 0; step < settings.max_steps; ++step) {
        auto [x_pred, s_pred] =
            predict_tangent(m, x_cur, s_cur, x_prev, s_prev, delta, settings.s_weight);

        NewtonResult corrected{Eigen::VectorXd(), 0.0, 0, 0.0};
        try {
            corrected = newton_correct(m, x_pred, s_pred, x_cur, s_cur, delta, settings);
        } catch (const NewtonFailure&) {
            if (delta <= settings.delta_min + 1e-18) {
                branch.termination = {TerminationKind::NewtonFailure, std::nullopt};
                return branch;
            }
            delta = std::max(delta * settings.shrink, settings.delta_min);
            successes = 0;
            continue;
        }

        // Reject steps that double back onto the previous point.
        const double forward =
            (detail::lift(corrected.x, m) - detail::lift(x_cur, m))
                .dot(detail::lift(x_cur, m) - detail::lift(x_prev, m)) +
            settings.s_weight * (corrected.s - s_cur) * (s_cur - s_prev);
        if (forward <= 0.0) {
            if (delta <= settings.delta_min + 1e-18) {
                branch.termination = {TerminationKind::NewtonFailure, std::nullopt};
                return branch;
            }
            delta = std::max(delta * settings.shrink, settings.delta_min);
            successes = 0;
            continue;
        }

        // Boundary handling: land exactly on s_min / s_max and stop.
        if (corrected.s < settings.s_min || corrected.s > settings.s_max) {
            const double s_edge = corrected.s < settings.s_min ? settings.s_min : settings.s_max;
            auto edge = solve_at_fixed_s(corrected.x, s_edge);
            if (!edge) edge = solve_at_fixed_s(x_cur, s_edge);
            const Eigen::VectorXd& x_end = edge ? edge->x : corrected.x;
            const double s_end = edge ? s_edge : corrected.s;
            arclength +=
                detail::ambient_distance(m, x_end, s_end, x_cur, s_cur, settings.s_weight);
            branch.step_deltas.push_back(delta);
            branch.points.push_back(detail::make_branch_point(m, x_end, s_end, arclength));
            branch.termination = {corrected.s < settings.s_min ? TerminationKind::ReachedSMin
                                                               : TerminationKind::ReachedSMax,
                                  std::nullopt};
            return branch;
        }

        const Eigen::VectorXd q_new = detail::lift(corrected.x, m);
        const Eigen::VectorXd q_cur = detail::lift(x_cur, m);

        // Crossing of the y-axis trivial family: the signed x amplitude flips
        // while nearly collinear. Bisect along the curve down to the junction.
        const bool near_axis =
            detail::axis_collinearity_deviation(q_cur, Axis::Y) < 0.3;
        const double amp_cur = detail::x_amplitude(q_cur);
        const double amp_new = detail::x_amplitude(q_new);
        const bool crossed = near_axis && amp_cur * amp_new < 0.0;
        const bool arrived =
            detail::y_axis_collinear(q_new, settings.collinear_arrival_tol);

        if (crossed || arrived) {
            Eigen::VectorXd x_a = x_cur;
            double s_a = s_cur;
            Eigen::VectorXd x_b = corrected.x;
            double s_b = corrected.s;
            if (arrived && !crossed) {
                x_a = corrected.x;
                s_a = corrected.s;
            }
            for (int iter = 0; iter < 80; ++iter) {
                const double amp_a = detail::x_amplitude(detail::lift(x_a, m));
                if (std::abs(amp_a) < 1e-9) break;
                const double gap =
                    detail::ambient_distance(m, x_b, s_b, x_a, s_a, settings.s_weight);
                if (gap < 1e-14) break;
                try {
                    NewtonResult mid =
                        newton_correct(m, 0.5 * (x_a + x_b), 0.5 * (s_a + s_b), x_a, s_a,
                                       0.5 * gap, settings);
                    const double amp_mid = detail::x_amplitude(detail::lift(mid.x, m));
                    if (amp_mid * amp_a >= 0.0) {
                        x_a = mid.x;
                        s_a = mid.s;
                    } else {
                        x_b = mid.x;
                        s_b = mid.s;
                    }
                } catch (const NewtonFailure&) {
                    break;
                }
            }
            arclength +=
                detail::ambient_distance(m, x_a, s_a, x_cur, s_cur, settings.s_weight);
            branch.step_deltas.push_back(delta);
            branch.points.push_back(detail::make_branch_point(m, x_a, s_a, arclength));
            branch.termination = {TerminationKind::ArrivedAtCollinear,
                                  detail::ordering_from_y(detail::lift(x_a, m))};
            return branch;
        }

        arclength += detail::ambient_distance(m, corrected.x, corrected.s, x_cur, s_cur,
                                              settings.s_weight);
        branch.step_deltas.push_back(delta);
        branch.points.push_back(detail::make_branch_point(m, corrected.x, corrected.s, arclength));

        x_prev = std::move(x_cur);
        s_prev = s_cur;
        x_cur = corrected.x;
        s_cur = corrected.s;

        // Asymptotic-limit test on ascending segments: configurations at s and
        // asymptotic_ratio * s must agree within asymptotic_tol.
        if (!branch.asymptotic) {
            if (s_checkpoints.empty() || s_cur > s_checkpoints.back().first)
                s_checkpoints.emplace_back(s_cur, q_new);
            while (checkpoint_lo + 1 < s_checkpoints.size() &&
                   s_checkpoints[checkpoint_lo + 1].first * settings.asymptotic_ratio <= s_cur)
                ++checkpoint_lo;
            const auto& [s_old, q_old] = s_checkpoints[checkpoint_lo];
            if (s_old * settings.asymptotic_ratio <= s_cur) {
                const double diff = (q_new - q_old).lpNorm<Eigen::Infinity>();
                if (diff < settings.asymptotic_tol)
                    branch.asymptotic = AsymptoticInfo{s_cur, diff, q_new};
            }
        }

        if (++successes >= settings.grow_after) {
            delta = std::min(delta * settings.grow, settings.delta_max);
            successes = 0;
        }
    }
    branch.termination = {TerminationKind::MaxSteps, std::nullopt};
    return branch;
}

namespace detail {

// Natural-parameter solve with one reduced coordinate frozen: unknowns are the
// remaining coordinates plus s. Used to walk through turning points, where s
// itself is not a valid parameter.
struct FixedCoordinateResult {
    Eigen::VectorXd x;
    double s;
};

inline std::optional<FixedCoordinateResult> solve_fixed_coordinate(
    const MassVector& m, Eigen::Index pivot, double xi, Eigen::VectorXd x, double s,
    double tol, int max_iters) {
    const Eigen::Index nx = x.size();
    x[pivot] = xi;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd q = lift(x, m);
        if (!(min_pair_distance(q) > kCollisionThreshold)) return std::nullopt;
        const Eigen::VectorXd f = reduce(balance_residual_raw(q, m, s));
        if (f.lpNorm<Eigen::Infinity>() <= tol) return FixedCoordinateResult{x, s};

        Eigen::MatrixXd jac_full = balance_jacobian_reduced(x, m, s);
        Eigen::MatrixXd jac(nx, nx);
        Eigen::Index col = 0;
        for (Eigen::Index j = 0; j < nx; ++j) {
            if (j == pivot) continue;
            jac.col(col++) = jac_full.col(j);
        }
        jac.col(nx - 1) = reduce(balance_residual_ds_raw(q, m));

        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        lu.setThreshold(1e-14);
        if (lu.rank() < nx) return std::nullopt;
        const Eigen::VectorXd step = lu.solve(-f);
        col = 0;
        for (Eigen::Index j = 0; j < nx; ++j) {
            if (j == pivot) continue;
            x[j] += step[col++];
        }
        s += step[nx - 1];
    }
    return std::nullopt;
}

}  // namespace detail

/// First turning point after start_index: a sign change of the s component of
/// the branch secant. The location is refined by bisection on the tangent's s
/// component (with a frozen pivot coordinate as the local parameter) until the
/// s bracket is below 1e-8, and the smallest singular value of dF/dq at the
/// refined point is reported.
inline std::optional<TurningPoint> detect_turning_point(const MassVector& m,
                                                        const Branch& branch,
                                                        const ContinuationSettings& settings,
                                                        std::size_t start_index = 1) {
    const auto& pts = branch.points;
    if (pts.size() < 3) return std::nullopt;

    for (std::size_t i = std::max<std::size_t>(start_index, 1); i + 1 < pts.size(); ++i) {
        const double ds_in = pts[i].s - pts[i - 1].s;
        const double ds_out = pts[i + 1].s - pts[i].s;
        if (!(ds_in * ds_out < 0.0)) continue;

        const Eigen::VectorXd x_lo = detail::reduce(pts[i - 1].q.coords());
        const Eigen::VectorXd x_hi = detail::reduce(pts[i + 1].q.coords());
        const Eigen::VectorXd x_mid = detail::reduce(pts[i].q.coords());

        Eigen::Index pivot = 0;
        (x_hi - x_lo).cwiseAbs().maxCoeff(&pivot);

        struct Node {
            double xi;
            Eigen::VectorXd x;
            double s;
            double sigma_min;
            double sigma_max;
        };
        // The s extremum sits where dF/dq degenerates. The smallest singular
        // value is V-shaped in the curve parameter through the singular point
        // whether or not the critical eigenvalue changes sign there, so a
        // ternary search pins it for plain folds and fold-crossing points
        // alike.
        // s is quadratic in the curve parameter through the fold, so the
        // vertex of a parabola fitted at shrinking half-widths pins the fold
        // to ~1e-8 in the coordinate without ever solving inside the
        // ill-conditioned core where the two crossing curves are
        // indistinguishable.
        auto eval = [&](double xi, const Eigen::VectorXd& x_init,
                        double s_init) -> std::optional<Node> {
            auto sol = detail::solve_fixed_coordinate(m, pivot, xi, x_init, s_init,
                                                      settings.newton_tol,
                                                      4 * settings.max_newton_iters);
            if (!sol) return std::nullopt;
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(
                detail::balance_jacobian_reduced(sol->x, m, sol->s));
            const auto& sv = svd.singularValues();
            return Node{xi, sol->x, sol->s, sv[sv.size() - 1], sv[0]};
        };

        auto best = eval(x_mid[pivot], x_mid, pts[i].s);
        if (!best) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(
                detail::balance_jacobian_reduced(x_mid, m, pts[i].s));
            const auto& sv = svd.singularValues();
            return TurningPoint{i, pts[i].s, sv[sv.size() - 1], sv[0], x_mid};
        }
        double xi_star = best->xi;
        const double bracket = std::abs(x_hi[pivot] - x_lo[pivot]);
        for (double w : {0.25 * bracket, 1e-3, 1e-4}) {
            auto left = eval(xi_star - w, best->x, best->s);
            auto right = eval(xi_star + w, best->x, best->s);
            auto center = eval(xi_star, best->x, best->s);
            if (!left || !right || !center) break;
            const double curvature = left->s - 2.0 * center->s + right->s;
            if (!(curvature > 0.0)) continue;
            double shift = 0.5 * w * (left->s - right->s) / curvature;
            shift = std::clamp(shift, -w, w);
            xi_star += shift;
            best = center;
        }
        if (auto final_node = eval(xi_star, best->x, best->s)) best = final_node;
        return TurningPoint{i, best->s, best->sigma_min, best->sigma_max, best->x};
    }
    return std::nullopt;
}

namespace detail {

// Minimal augmented distance from (x, s) to the polyline of branch points,
// minimized over the reflection group orbit of the candidate.
inline double orbit_distance_to_branch(const Eigen::VectorXd& x, double s,
                                       const MassVector& m, const Branch& branch,
                                       double s_weight) {
    const Eigen::VectorXd q = lift(x, m);
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < 4; ++g) {
        Eigen::VectorXd qg = q;
        if (g & 1) qg = reflect_raw(qg, Axis::X);
        if (g & 2) qg = reflect_raw(qg, Axis::Y);
        for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
            const Eigen::VectorXd& a = branch.points[i].q.coords();
            const Eigen::VectorXd& b = branch.points[i + 1].q.coords();
            const double sa = branch.points[i].s, sb = branch.points[i + 1].s;
            const Eigen::VectorXd dab = b - a;
            const double dsab = sb - sa;
            const double len2 = dab.squaredNorm() + s_weight * dsab * dsab;
            double t = 0.0;
            if (len2 > 0)
                t = std::clamp(((qg - a).dot(dab) + s_weight * (s - sa) * dsab) / len2, 0.0, 1.0);
            best = std::min(best, augmented_norm(qg - (a + t * dab), s - (sa + t * dsab),
                                                 s_weight));
        }
    }
    return best;
}

}  // namespace detail

/// Newton probes around a near-singular branch point: kernel-direction
/// displacements at two magnitudes and both signs, plus seeded random per-body
/// displacements, each solved at a parameter offset on both sides of the
/// turning point. Solutions that are axis-collinear (the known trivial
/// families) or that land back on the current branch orbit are discarded;
/// survivors are deduplicated under the reflection group and returned as seed
/// pairs pointing away from the turning point. An empty result is a valid
/// outcome.
inline std::vector<SeedPair> probe_secondary_branches(const MassVector& m, const Branch& branch,
                                                      const TurningPoint& turn,
                                                      const ContinuationSettings& settings,
                                                      std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    const Eigen::VectorXd v_ker = detail::reduced_kernel_direction(m, turn.x_turn, turn.s_turn);
    const std::size_t n = m.size();

    std::vector<Eigen::VectorXd> starts;
    for (double eps : {1e-3, 1e-2}) {
        starts.push_back(turn.x_turn + eps * v_ker);
        starts.push_back(turn.x_turn - eps * v_ker);
    }
    const Eigen::VectorXd q_turn = detail::lift(turn.x_turn, m);
    for (int k = 0; k < settings.n_random_probes; ++k) {
        Eigen::VectorXd q = q_turn;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d dir = detail::unit_direction(rng);
            q[2 * static_cast<Eigen::Index>(i)] += settings.probe_radius * dir.x();
            q[2 * static_cast<Eigen::Index>(i) + 1] += settings.probe_radius * dir.y();
        }
        starts.push_back(detail::reduce(detail::com_project(q, m)));
    }

    const double cutoff = settings.branch_distance_factor * settings.delta;
    std::vector<SeedPair> seeds;

    for (int side : {-1, +1}) {
        double offset = settings.probe_s_offset;
        if (side < 0) offset = std::min(offset, 0.5 * (turn.s_turn - settings.s_min));
        if (side > 0) offset = std::min(offset, 0.5 * (settings.s_max - turn.s_turn));
        if (offset <= 0) continue;
        const double s_probe = turn.s_turn + side * offset;

        std::vector<Eigen::VectorXd> found;
        for (const auto& start : starts) {
            auto sol = detail::fixed_s_newton(m, start, s_probe, settings.newton_tol,
                                              settings.max_newton_iters);
            if (!sol) continue;
            const Eigen::VectorXd q = detail::lift(sol->x, m);
            if (detail::axis_collinearity_deviation(q, Axis::X) < 1e-6 ||
                detail::axis_collinearity_deviation(q, Axis::Y) < 1e-6)
                continue;  // landed on one of the known collinear families
            if (detail::orbit_distance_to_branch(sol->x, s_probe, m, branch,
                                                 settings.s_weight) <= cutoff)
                continue;
            bool duplicate = false;
            for (const auto& other : found) {
                for (int g = 0; g < 4 && !duplicate; ++g) {
                    Eigen::VectorXd qg = q;
                    if (g & 1) qg = detail::reflect_raw(qg, Axis::X);
                    if (g & 2) qg = detail::reflect_raw(qg, Axis::Y);
                    if ((detail::reduce(qg) - other).lpNorm<Eigen::Infinity>() < 1e-6)
                        duplicate = true;
                }
                if (duplicate) break;
            }
            if (duplicate) continue;
            found.push_back(sol->x);
        }

        std::sort(found.begin(), found.end(),
                  [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                      for (Eigen::Index i = 0; i < a.size(); ++i)
                          if (a[i] != b[i]) return a[i] < b[i];
                      return false;
                  });

        for (const auto& x0 : found) {
            const double s1 = s_probe + side * offset;
            auto second = detail::fixed_s_newton(m, x0, s1, settings.newton_tol,
                                                 settings.max_newton_iters);
            if (!second) continue;
            SeedInfo info{SeedKind::TurningPoint, turn.s_turn, 0, side};
            seeds.push_back(SeedPair{x0, s_probe, second->x, s1, info});
        }
    }
    return seeds;
}

/// Newton from n_starts random normalized configurations at fixed s.
/// Converged zeros are deduplicated under the reflection group and a
/// coordinate tolerance, then tagged collinear / non-collinear with indices.
inline std::vector<FoundSolution> multistart_search(const MassVector& m, SParam s, int n_starts,
                                                    std::uint64_t rng_seed,
                                                    const ContinuationSettings& settings = {}) {
    std::mt19937_64 rng(rng_seed);
    const std::size_t n = m.size();
    std::vector<Eigen::VectorXd> reps;  // deduplicated reduced coordinates

    for (int k = 0; k < n_starts; ++k) {
        Eigen::VectorXd q(2 * static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = detail::gaussian(rng);
        q = detail::com_project(q, m);
        const double w = detail::weighted_moment_raw(q, m, s.value);
        if (!(w > 1e-12)) continue;
        q /= std::sqrt(w);
        if (!(detail::min_pair_distance(q) > 1e-4)) continue;

        auto sol = detail::fixed_s_newton(m, detail::reduce(q), s.value, settings.newton_tol,
                                          settings.max_newton_iters);
        if (!sol) continue;
        const Eigen::VectorXd qs = detail::lift(sol->x, m);
        if (!(detail::min_pair_distance(qs) > kCollisionThreshold)) continue;

        bool duplicate = false;
        for (const auto& rep : reps) {
            for (int g = 0; g < 4 && !duplicate; ++g) {
                Eigen::VectorXd qg = qs;
                if (g & 1) qg = detail::reflect_raw(qg, Axis::X);
                if (g & 2) qg = detail::reflect_raw(qg, Axis::Y);
                if ((detail::reduce(qg) - rep).lpNorm<Eigen::Infinity>() < 1e-6) duplicate = true;
            }
            if (duplicate) break;
        }
        if (!duplicate) reps.push_back(sol->x);
    }

    std::sort(reps.begin(), reps.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (a[i] != b[i]) return a[i] < b[i];
        return false;
    });

    std::vector<FoundSolution> out;
    for (const auto& rep : reps) {
        PlanarConfiguration config(detail::lift(rep, m), m);
        const bool collinear =
            detail::axis_collinearity_deviation(config.coords(), Axis::X) < 1e-8 ||
            detail::axis_collinearity_deviation(config.coords(), Axis::Y) < 1e-8;
        auto [indices, ev] = constrained_hessian_spectrum(config, m, s);
        (void)ev;
        out.push_back(FoundSolution{std::move(config), collinear, indices});
    }
    return out;
}

}  // namespace sbc
