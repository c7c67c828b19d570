#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sbc {

// Pairwise distances below this are treated as collisions (normalized units).
inline constexpr double kCollisionThreshold = 1e-9;

struct CollisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotCollinear : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateSpectrum : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotAdmissible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NewtonFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateSecant : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct KernelDimensionUnsupported : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FellBackToTrivial : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Positive point masses m_1..m_n. The diagonal mass matrix is kept implicit;
/// every routine that needs it works with this vector directly.
class MassVector {
  public:
    explicit MassVector(std::vector<double> masses) {
        if (masses.size() < 2)
            throw std::invalid_argument("MassVector: need at least two bodies");
        values_.resize(static_cast<Eigen::Index>(masses.size()));
        for (std::size_t i = 0; i < masses.size(); ++i) {
            if (!(masses[i] > 0.0) || !std::isfinite(masses[i]))
                throw std::invalid_argument("MassVector: masses must be positive");
            values_[static_cast<Eigen::Index>(i)] = masses[i];
        }
    }

    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
    const Eigen::VectorXd& values() const { return values_; }
    double total() const { return values_.sum(); }

  private:
    Eigen::VectorXd values_;
};

/// Rotation-rate ratio parameter. s = 1 is the central-configuration limit.
struct SParam {
    double value;
    explicit SParam(double s) : value(s) {
        if (!(s >= 1.0) || !std::isfinite(s))
            throw std::invalid_argument("SParam: require s >= 1");
    }
};

namespace detail {

inline std::size_t body_count(const Eigen::VectorXd& coords) {
    return static_cast<std::size_t>(coords.size()) / 2;
}

inline double min_pair_distance(const Eigen::VectorXd& coords) {
    const std::size_t n = body_count(coords);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = coords[2 * i] - coords[2 * j];
            const double dy = coords[2 * i + 1] - coords[2 * j + 1];
            best = std::min(best, std::hypot(dx, dy));
        }
    return best;
}

// Subtracts the mass-weighted barycenter from every body.
inline Eigen::VectorXd com_project(Eigen::VectorXd coords, const MassVector& m) {
    const std::size_t n = body_count(coords);
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cx += m[i] * coords[2 * i];
        cy += m[i] * coords[2 * i + 1];
    }
    cx /= m.total();
    cy /= m.total();
    for (std::size_t i = 0; i < n; ++i) {
        coords[2 * i] -= cx;
        coords[2 * i + 1] -= cy;
    }
    return coords;
}

}  // namespace detail

/// Planar positions (x_i, y_i) of n bodies, stored flat as [x1,y1,...,xn,yn].
/// Construction projects onto the zero-barycenter subspace and rejects
/// configurations with near-colliding bodies.
class PlanarConfiguration {
  public:
    PlanarConfiguration(Eigen::VectorXd coords, const MassVector& m,
                        double collision_threshold = kCollisionThreshold) {
        if (coords.size() != static_cast<Eigen::Index>(2 * m.size()))
            throw std::invalid_argument("PlanarConfiguration: coords/masses size mismatch");
        coords_ = detail::com_project(std::move(coords), m);
        const double dmin = detail::min_pair_distance(coords_);
        if (!(dmin > collision_threshold))
            throw CollisionError("PlanarConfiguration: bodies closer than " +
                                 std::to_string(collision_threshold));
    }

    std::size_t n() const { return detail::body_count(coords_); }
    const Eigen::VectorXd& coords() const { return coords_; }
    double x(std::size_t i) const { return coords_[2 * static_cast<Eigen::Index>(i)]; }
    double y(std::size_t i) const { return coords_[2 * static_cast<Eigen::Index>(i) + 1]; }
    Eigen::Vector2d body(std::size_t i) const { return {x(i), y(i)}; }

  private:
    Eigen::VectorXd coords_;
};

struct ProblemInstance {
    MassVector masses;
    SParam s;
};

enum class Axis { X, Y };

}  // namespace sbc
