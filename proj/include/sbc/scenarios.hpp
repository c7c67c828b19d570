#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sbc/branch_io.hpp"
#include "sbc/collinear.hpp"
#include "sbc/continuation.hpp"
#include "sbc/nbody.hpp"
#include "sbc/spectral.hpp"

namespace sbc {

struct ScenarioSpec {
    std::vector<double> masses;
    std::vector<int> ordering;  // 0-based bottom-to-top
    ContinuationSettings settings;
    std::uint64_t rng_seed = 20240915;
    std::string output_path;  // directory for branch files; empty writes nothing
    bool probe = false;
};

struct NamedBranch {
    std::string name;
    Branch branch;
};

struct FollowResult {
    PlanarConfiguration q_hat;
    SpectrumInfo spectrum;
    std::vector<double> bifurcation_values;
    std::vector<NamedBranch> branches;            // primary pair, then secondaries
    std::optional<TurningPoint> turning_point;    // first turn on the primary branch
    int turning_count = 0;                        // secant sign changes on the primary branch
    int secondary_seed_count = 0;
};

namespace detail {

inline int count_s_sign_changes(const Branch& branch) {
    int count = 0;
    const auto& pts = branch.points;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double a = pts[i].s - pts[i - 1].s;
        const double b = pts[i + 1].s - pts[i].s;
        if (a * b < 0.0) ++count;
    }
    return count;
}

inline void write_branch_files(const std::string& dir, const NamedBranch& nb) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = std::filesystem::path(dir) / nb.name;
    write_branch_jsonl(base.string() + ".jsonl", nb.branch);
    write_branch_csv(base.string() + ".csv", nb.branch);
}

}  // namespace detail

/// Seeds the non-trivial branch pair at the first degeneracy instant of the
/// trivial family and follows it (plus, optionally, secondary branches found
/// by probing the first turning point). Branch files are written per branch
/// when an output directory is given.
inline FollowResult run_follow(const ScenarioSpec& spec) {
    const MassVector m(spec.masses);
    const OrderingLabel ordering(spec.ordering);
    PlanarConfiguration q_hat = solve_collinear_cc(m, ordering);
    SpectrumInfo spectrum = b_spectrum(q_hat, m);
    std::vector<double> values = bifurcation_values(spectrum);

    FollowResult result{std::move(q_hat), std::move(spectrum), values, {}, std::nullopt, 0, 0};
    if (values.empty()) return result;

    const double s_tilde = values.front();
    const SeedPair seed = seed_secondary_solution(m, result.q_hat, s_tilde, spec.settings);
    result.branches.push_back({"branch_plus", follow_branch(m, seed, spec.settings)});
    result.branches.push_back(
        {"branch_minus", follow_branch(m, reflect_seed(seed, m), spec.settings)});

    const Branch& primary = result.branches.front().branch;
    result.turning_count = detail::count_s_sign_changes(primary);
    result.turning_point = detect_turning_point(m, primary, spec.settings);

    if (spec.probe && result.turning_point) {
        const auto seeds =
            probe_secondary_branches(m, primary, *result.turning_point, spec.settings,
                                     spec.rng_seed);
        result.secondary_seed_count = static_cast<int>(seeds.size());
        int k = 0;
        for (const auto& sp : seeds) {
            const std::string name =
                "secondary_" + std::string(sp.info.direction < 0 ? "down" : "up") +
                (k > 1 ? "_" + std::to_string(k) : "");
            result.branches.push_back({name, follow_branch(m, sp, spec.settings)});
            ++k;
        }
    }

    for (const auto& nb : result.branches) detail::write_branch_files(spec.output_path, nb);
    return result;
}

enum class ScenarioName { EqualMasses, OneBigTwoSmall, TwoBigOneSmall };

inline const char* to_string(ScenarioName name) {
    switch (name) {
        case ScenarioName::EqualMasses: return "equal-masses";
        case ScenarioName::OneBigTwoSmall: return "one-big-two-small";
        case ScenarioName::TwoBigOneSmall: return "two-big-one-small";
    }
    return "?";
}

inline std::optional<ScenarioName> scenario_from_string(const std::string& s) {
    if (s == "equal-masses") return ScenarioName::EqualMasses;
    if (s == "one-big-two-small") return ScenarioName::OneBigTwoSmall;
    if (s == "two-big-one-small") return ScenarioName::TwoBigOneSmall;
    return std::nullopt;
}

/// Canned three-body experiment setups. The mass triples place the odd mass
/// outside the segment joining the other two.
inline ScenarioSpec make_scenario(ScenarioName name, double mu) {
    ScenarioSpec spec;
    spec.ordering = {0, 1, 2};
    switch (name) {
        case ScenarioName::EqualMasses:
            spec.masses = {1.0, 1.0, 1.0};
            break;
        case ScenarioName::OneBigTwoSmall:
            spec.masses = {1.0, mu, mu};  // unit mass at the bottom end
            spec.probe = true;
            break;
        case ScenarioName::TwoBigOneSmall:
            spec.masses = {1.0, 1.0, mu};  // small mass at the top end
            spec.probe = true;
            break;
    }
    return spec;
}

struct ReproduceResult {
    FollowResult follow;
    nlohmann::json verdict;
};

namespace detail {

inline double pairwise_distance_spread(const PlanarConfiguration& q) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < q.n(); ++i)
        for (std::size_t j = i + 1; j < q.n(); ++j) {
            const double d = (q.body(i) - q.body(j)).norm();
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    return hi - lo;
}

inline bool strictly_decreasing_s(const Branch& branch) {
    for (std::size_t i = 1; i < branch.points.size(); ++i)
        if (!(branch.points[i].s < branch.points[i - 1].s)) return false;
    return true;
}

inline bool all_minima(const Branch& branch) {
    return std::all_of(branch.points.begin(), branch.points.end(),
                       [](const BranchPoint& p) { return p.indices.minus == 0; });
}

// Max deviation between branch b and the y-axis mirror image of branch a.
inline double mirror_deviation(const Branch& a, const Branch& b) {
    if (a.points.size() != b.points.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const Eigen::VectorXd ref = reflect_raw(a.points[i].q.coords(), Axis::Y);
        worst = std::max(worst, (ref - b.points[i].q.coords()).lpNorm<Eigen::Infinity>());
        worst = std::max(worst, std::abs(a.points[i].s - b.points[i].s));
    }
    return worst;
}

// Deviation from a configuration that is isosceles-symmetric about the y
// axis, with the equal-mass pair (i, j) mirrored and body k on the axis.
inline double y_symmetry_deviation(const PlanarConfiguration& q, std::size_t i, std::size_t j,
                                   std::size_t k) {
    return std::max({std::abs(q.x(k)), std::abs(q.x(i) + q.x(j)), std::abs(q.y(i) - q.y(j))});
}

}  // namespace detail

/// Runs one of the named experiments and assembles the machine-readable
/// verdict consumed by the acceptance suite.
inline ReproduceResult run_reproduce(ScenarioName name, double mu, const std::string& out_dir,
                                     const ContinuationSettings& overrides = {}) {
    ScenarioSpec spec = make_scenario(name, mu);
    spec.settings = overrides;
    spec.output_path = out_dir;
    if (name != ScenarioName::EqualMasses) spec.probe = true;

    FollowResult follow = run_follow(spec);
    nlohmann::json v;
    v["scenario"] = to_string(name);
    v["masses"] = spec.masses;
    v["bifurcation_values"] = follow.bifurcation_values;
    const double s_tilde =
        follow.bifurcation_values.empty() ? 0.0 : follow.bifurcation_values.front();
    v["bifurcation_s"] = s_tilde;

    const MassVector m(spec.masses);

    if (name == ScenarioName::EqualMasses) {
        const Branch& plus = follow.branches.at(0).branch;
        const Branch& minus = follow.branches.at(1).branch;
        const BranchPoint& end = plus.points.back();
        v["monotone_s"] = detail::strictly_decreasing_s(plus);
        v["all_minima"] = detail::all_minima(plus);
        v["endpoint_s"] = end.s;
        v["endpoint_reached_s_min"] = plus.termination.kind == TerminationKind::ReachedSMin;
        v["endpoint_pairwise_spread"] = detail::pairwise_distance_spread(end.q);
        v["endpoint"] = detail::pairwise_distance_spread(end.q) <= 1e-4 ? "equilateral" : "other";
        v["mirror_deviation"] = detail::mirror_deviation(plus, minus);
    } else if (name == ScenarioName::OneBigTwoSmall) {
        const Branch& plus = follow.branches.at(0).branch;
        v["mu"] = mu;
        v["turning_points"] = follow.turning_count;
        if (follow.turning_point) {
            const TurningPoint& turn = *follow.turning_point;
            v["s_turn"] = turn.s_turn;
            v["sigma_min"] = turn.smallest_singular_value;
            v["sigma_ratio"] = turn.smallest_singular_value / turn.singular_value_scale;
            const PlanarConfiguration q_turn(detail::lift(turn.x_turn, m), m);
            v["turn_isosceles_deviation"] = detail::y_symmetry_deviation(q_turn, 1, 2, 0);
        }
        const bool arrived = plus.termination.kind == TerminationKind::ArrivedAtCollinear;
        v["returns_to_s_tilde"] =
            arrived && std::abs(plus.points.back().s - s_tilde) <= 1e-6;
        bool swapped = false;
        double match_error = std::numeric_limits<double>::infinity();
        if (arrived && plus.termination.arrived_ordering) {
            const OrderingLabel expected({0, 2, 1});  // the two small masses exchanged
            swapped = *plus.termination.arrived_ordering == expected;
            const PlanarConfiguration q_swap = solve_collinear_cc(m, expected);
            match_error = (plus.points.back().q.coords() - q_swap.coords())
                              .lpNorm<Eigen::Infinity>();
        }
        v["swapped_ordering"] = swapped;
        v["endpoint_match_error"] = match_error;
        v["secondary_branches"] = follow.secondary_seed_count;
        for (const auto& nb : follow.branches) {
            if (nb.name.starts_with("secondary_down")) {
                v["secondary_down_terminates_s_min"] =
                    nb.branch.termination.kind == TerminationKind::ReachedSMin;
                v["secondary_down_endpoint_spread"] =
                    detail::pairwise_distance_spread(nb.branch.points.back().q);
                v["secondary_down_all_minima"] = detail::all_minima(nb.branch);
            } else if (nb.name.starts_with("secondary_up")) {
                v["secondary_up_final_index"] = nb.branch.points.back().indices.minus;
            }
        }
    } else {
        const Branch& plus = follow.branches.at(0).branch;
        v["mu"] = mu;
        v["turning_points"] = follow.turning_count;
        if (follow.turning_point) {
            const TurningPoint& turn = *follow.turning_point;
            v["s_turn"] = turn.s_turn;
            v["sigma_min"] = turn.smallest_singular_value;
            v["sigma_ratio"] = turn.smallest_singular_value / turn.singular_value_scale;
            const std::size_t i = turn.point_index;
            const int before = plus.points.at(i >= 1 ? i - 1 : 0).indices.minus;
            const std::size_t after_idx = std::min(i + 2, plus.points.size() - 1);
            const int after = plus.points.at(after_idx).indices.minus;
            v["index_before_turn"] = before;
            v["index_after_turn"] = after;
            v["index_jump_at_turning"] = before == 0 && after >= 1;
        }
        v["secondary_branches"] = follow.secondary_seed_count;
        v["asymptotic_config_detected"] = plus.asymptotic.has_value();
        if (plus.asymptotic) {
            v["asymptotic_s"] = plus.asymptotic->s_detected;
            v["asymptotic_diff"] = plus.asymptotic->config_difference;
        }
        v["final_s"] = plus.points.back().s;
    }

    return ReproduceResult{std::move(follow), std::move(v)};
}

}  // namespace sbc
