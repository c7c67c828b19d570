#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "sbc/nbody.hpp"
#include "sbc/types.hpp"

namespace sbc {

/// Signature (negative / zero / positive eigenvalue counts) of a constrained
/// Hessian. The three always add up to 2n-3.
struct InertiaIndices {
    int minus = 0;
    int zero = 0;
    int plus = 0;

    bool operator==(const InertiaIndices&) const = default;
};

/// Distinct eigenvalues eta_0 > eta_1 > ... > eta_k (all negative) of the
/// mass-normalized interaction matrix at a collinear configuration, restricted
/// to the zero-barycenter subspace, with multiplicities. eta_0 equals -U and
/// is simple; the multiplicities add up to n-1.
struct SpectrumInfo {
    std::vector<double> etas;
    std::vector<int> alphas;
    double u_value = 0.0;
};

struct Crossing {
    double s_value = 0.0;
    int kernel_dim = 0;
};

/// Zero-eigenvalue crossings of the constrained Hessian along a trivial
/// family, and the net index change between the interval endpoints.
struct CrossingReport {
    std::vector<Crossing> crossings;
    int flow = 0;
};

namespace detail {

// Relative threshold below which a constrained-Hessian eigenvalue counts as
// zero. Eigenvalues pass through zero linearly in s, so this separates true
// kernels from roundoff.
inline constexpr double kIndexZeroThreshold = 1e-8;

// Relative gap used to cluster eigenvalues into distinct values.
inline constexpr double kClusterTolerance = 1e-6;

// Orthonormal basis of the orthogonal complement of the columns of c.
inline Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& c) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
    Eigen::MatrixXd full = qr.householderQ();
    return full.rightCols(c.rows() - c.cols());
}

// Eigenvalues of the quadratic form v -> <M H(q) v, v> on the subspace
// {sum m_i v_i = 0, <S M q, v> = 0}, in a mass-orthonormal basis.
inline Eigen::VectorXd constrained_hessian_eigenvalues(const Eigen::VectorXd& q,
                                                       const MassVector& m, double s) {
    const auto n = static_cast<Eigen::Index>(body_count(q));
    const double u = potential_raw(q, m);

    // G = D2U + U * S M is the matrix of the quadratic form.
    Eigen::MatrixXd g = hessian_raw(q, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mi = m[static_cast<std::size_t>(i)];
        g(2 * i, 2 * i) += u * s * mi;
        g(2 * i + 1, 2 * i + 1) += u * mi;
    }

    // Constraints expressed in mass-weighted coordinates w = M^{1/2} v.
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * n, 3);
    Eigen::VectorXd inv_sqrt_m(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sm = std::sqrt(m[static_cast<std::size_t>(i)]);
        inv_sqrt_m[2 * i] = 1.0 / sm;
        inv_sqrt_m[2 * i + 1] = 1.0 / sm;
        c(2 * i, 0) = sm;
        c(2 * i + 1, 1) = sm;
        c(2 * i, 2) = sm * s * q[2 * i];
        c(2 * i + 1, 2) = sm * q[2 * i + 1];
    }
    const Eigen::MatrixXd basis_w = orthogonal_complement(c);  // 2n x (2n-3)
    const Eigen::MatrixXd basis_v = inv_sqrt_m.asDiagonal() * basis_w;

    const Eigen::MatrixXd a = basis_v.transpose() * g * basis_v;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    return es.eigenvalues();
}

inline InertiaIndices count_inertia(const Eigen::VectorXd& eigenvalues, double zero_threshold) {
    const double scale = eigenvalues.cwiseAbs().maxCoeff();
    const double tau = zero_threshold * std::max(scale, 1e-300);
    InertiaIndices idx;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] < -tau)
            ++idx.minus;
        else if (eigenvalues[i] > tau)
            ++idx.plus;
        else
            ++idx.zero;
    }
    return idx;
}

}  // namespace detail

/// Inertia indices and eigenvalues (ascending) of the Hessian of U restricted
/// to the normalization ellipsoid, at a critical point of the balance
/// equations. At non-critical points the result is a diagnostic only.
inline std::pair<InertiaIndices, std::vector<double>> constrained_hessian_spectrum(
    const PlanarConfiguration& q, const MassVector& m, SParam s) {
    detail::require_collision_free(q.coords());
    const Eigen::VectorXd ev = detail::constrained_hessian_eigenvalues(q.coords(), m, s.value);
    const InertiaIndices idx = detail::count_inertia(ev, detail::kIndexZeroThreshold);
    return {idx, std::vector<double>(ev.data(), ev.data() + ev.size())};
}

/// Interaction matrix B(q) with entries m_i m_j / r_ij^3 off the diagonal and
/// zero row sums. Only defined at configurations collinear along one of the
/// coordinate axes.
inline Eigen::MatrixXd b_matrix(const PlanarConfiguration& q, const MassVector& m) {
    detail::require_collision_free(q.coords());
    if (!(detail::axis_collinearity_deviation(q.coords(), Axis::X) < 1e-10 ||
          detail::axis_collinearity_deviation(q.coords(), Axis::Y) < 1e-10))
        throw NotCollinear("b_matrix: configuration is not axis-collinear");

    const auto n = static_cast<Eigen::Index>(q.n());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double r = (q.body(static_cast<std::size_t>(i)) -
                              q.body(static_cast<std::size_t>(j)))
                                 .norm();
            const double v =
                m[static_cast<std::size_t>(i)] * m[static_cast<std::size_t>(j)] / (r * r * r);
            b(i, j) = v;
            b(i, i) -= v;
        }
    return b;
}

/// Spectrum of M^{-1} B at a normalized collinear configuration on the y
/// axis, restricted to the zero-barycenter subspace and clustered into
/// distinct eigenvalues with multiplicities. Computed via the symmetric
/// congruence M^{-1/2} B M^{-1/2}, which preserves inertia.
inline SpectrumInfo b_spectrum(const PlanarConfiguration& q, const MassVector& m,
                               double cluster_tol = detail::kClusterTolerance) {
    if (!(detail::axis_collinearity_deviation(q.coords(), Axis::Y) < 1e-10))
        throw NotCollinear("b_spectrum: expected a configuration collinear along the y axis");

    const auto n = static_cast<Eigen::Index>(q.n());
    const Eigen::MatrixXd b = b_matrix(q, m);
    Eigen::VectorXd inv_sqrt_m(n), sqrt_m(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sqrt_m[i] = std::sqrt(m[static_cast<std::size_t>(i)]);
        inv_sqrt_m[i] = 1.0 / sqrt_m[i];
    }
    const Eigen::MatrixXd sym = inv_sqrt_m.asDiagonal() * b * inv_sqrt_m.asDiagonal();

    // Project out the translation mode (1,...,1), i.e. M^{1/2} 1 in the
    // symmetrized coordinates, before extracting eigenvalues.
    const Eigen::MatrixXd basis = detail::orthogonal_complement(sqrt_m);
    const Eigen::MatrixXd a = basis.transpose() * sym * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    Eigen::VectorXd ev = es.eigenvalues();  // ascending, all negative
    std::vector<double> sorted(ev.data(), ev.data() + ev.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());  // descending: eta_0 first

    const double scale = std::abs(sorted.empty() ? 1.0 : sorted.front());
    const double gap_scale = std::max(scale, std::abs(sorted.back()));

    SpectrumInfo info;
    info.u_value = detail::potential_raw(q.coords(), m);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!info.etas.empty()) {
            const double gap = std::abs(info.etas.back() - sorted[i]) / gap_scale;
            if (gap < cluster_tol) {
                ++info.alphas.back();
                continue;
            }
            if (gap < 10.0 * cluster_tol)
                throw DegenerateSpectrum("b_spectrum: eigenvalue gap ambiguous at tolerance");
        }
        info.etas.push_back(sorted[i]);
        info.alphas.push_back(1);
    }

    if (info.alphas.front() != 1 ||
        std::abs(info.etas.front() + info.u_value) > 1e-8 * std::abs(info.u_value))
        throw DegenerateSpectrum(
            "b_spectrum: leading eigenvalue is not a simple -U; input is not a normalized "
            "collinear central configuration");
    return info;
}

/// Inertia indices of a collinear configuration on the trivial family, from
/// the interaction spectrum alone. Total over the three-way split is 2n-3.
inline InertiaIndices csbc_indices_closed_form(const SpectrumInfo& spec, SParam s, int n) {
    const double u = spec.u_value;
    const int k = static_cast<int>(spec.etas.size()) - 1;
    auto ratio = [&](int j) { return -spec.etas[static_cast<std::size_t>(j)] / u; };
    auto prefix = [&](int j) {  // sum of alpha_0..alpha_j
        int sum = 0;
        for (int i = 0; i <= j; ++i) sum += spec.alphas[static_cast<std::size_t>(i)];
        return sum;
    };

    const double sv = s.value;
    const double tol = 1e-12 * std::max(1.0, sv);

    // On a crossing s = -eta_j / U the kernel dimension is alpha_j.
    for (int j = 0; j <= k; ++j) {
        if (std::abs(sv - ratio(j)) <= tol) {
            InertiaIndices idx;
            idx.zero = spec.alphas[static_cast<std::size_t>(j)];
            idx.plus = n - 2 + (j > 0 ? prefix(j - 1) : 0);
            idx.minus = n - 1 - prefix(j);
            return idx;
        }
    }
    if (sv > ratio(k)) return {0, 0, 2 * n - 3};
    for (int j = 0; j < k; ++j) {
        if (sv > ratio(j) && sv < ratio(j + 1))
            return {n - 1 - prefix(j), 0, n - 2 + prefix(j)};
    }
    // s below every crossing cannot happen for s >= 1 since ratio(0) = 1.
    return {n - 2, 1, n - 2};
}

/// Parameter values at which the trivial family degenerates, strictly
/// increasing and all greater than one. Empty for n = 2.
inline std::vector<double> bifurcation_values(const SpectrumInfo& spec) {
    std::vector<double> out;
    for (std::size_t j = 1; j < spec.etas.size(); ++j)
        out.push_back(-spec.etas[j] / spec.u_value);
    return out;
}

/// Net count of constrained-Hessian eigenvalues crossing zero along the
/// trivial family between s1 and s2, together with the crossing locations.
/// Equals the index difference between the (non-degenerate) endpoints.
inline CrossingReport spectral_flow_trivial_branch(const PlanarConfiguration& q_hat,
                                                   const MassVector& m, SParam s1, SParam s2) {
    const SpectrumInfo spec = b_spectrum(q_hat, m);
    const std::vector<double> values = bifurcation_values(spec);
    const int n = static_cast<int>(m.size());

    auto degenerate = [&](double s) {
        for (double v : values)
            if (std::abs(s - v) <= 1e-9 * std::max(1.0, v)) return true;
        return false;
    };
    if (degenerate(s1.value) || degenerate(s2.value))
        throw NotAdmissible("spectral_flow_trivial_branch: endpoint is a crossing");

    const double lo = std::min(s1.value, s2.value);
    const double hi = std::max(s1.value, s2.value);
    CrossingReport report;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (values[j] > lo && values[j] < hi)
            report.crossings.push_back({values[j], spec.alphas[j + 1]});
    }
    const InertiaIndices a = csbc_indices_closed_form(spec, s1, n);
    const InertiaIndices b = csbc_indices_closed_form(spec, s2, n);
    report.flow = a.minus - b.minus;
    return report;
}

}  // namespace sbc
