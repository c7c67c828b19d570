// Command-line front end: compute collinear central configurations, locate
// degeneracy instants of the trivial family, follow non-trivial solution
// branches, and reproduce the three canned experiments.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbc/sbc.hpp"

namespace {

std::vector<int> parse_ordering(const std::vector<int>& one_based, std::size_t n) {
    if (one_based.empty()) {
        std::vector<int> id(n);
        for (std::size_t i = 0; i < n; ++i) id[i] = static_cast<int>(i);
        return id;
    }
    std::vector<int> zero_based;
    zero_based.reserve(one_based.size());
    for (int v : one_based) zero_based.push_back(v - 1);
    return zero_based;
}

std::string ordering_to_string(const sbc::OrderingLabel& ord) {
    std::string s;
    for (std::size_t i = 0; i < ord.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(ord.order[i] + 1);
    }
    return s;
}

int validate_masses(const std::vector<double>& masses) {
    if (masses.size() < 2) {
        std::cerr << "error: need at least two masses\n";
        return 1;
    }
    for (double v : masses)
        if (!(v > 0.0)) {
            std::cerr << "error: masses must be positive\n";
            return 1;
        }
    return 0;
}

void print_configuration(const sbc::PlanarConfiguration& q) {
    for (std::size_t i = 0; i < q.n(); ++i)
        std::printf("  body %zu: x = % .12f  y = % .12f\n", i + 1, q.x(i), q.y(i));
}

int cmd_collinear(const std::vector<double>& masses, const std::vector<int>& ordering_1based) {
    if (int rc = validate_masses(masses)) return rc;
    try {
        const sbc::MassVector m(masses);
        const sbc::OrderingLabel ord(parse_ordering(ordering_1based, masses.size()));
        const sbc::PlanarConfiguration q = sbc::solve_collinear_cc(m, ord);
        const double u = sbc::potential(q, m);
        const double residual =
            sbc::balance_residual(q, m, sbc::SParam(1.0)).lpNorm<Eigen::Infinity>();
        std::printf("collinear central configuration (y axis, bottom to top: %s)\n",
                    ordering_to_string(ord).c_str());
        print_configuration(q);
        std::printf("U = %.12f\n", u);
        std::printf("residual = %.3e\n", residual);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_bifurcations(const std::vector<double>& masses, const std::vector<int>& ordering_1based) {
    if (int rc = validate_masses(masses)) return rc;
    try {
        const sbc::MassVector m(masses);
        const sbc::OrderingLabel ord(parse_ordering(ordering_1based, masses.size()));
        const sbc::PlanarConfiguration q = sbc::solve_collinear_cc(m, ord);
        const sbc::SpectrumInfo spec = sbc::b_spectrum(q, m);
        std::printf("U = %.12f\n", spec.u_value);
        std::printf("interaction spectrum (zero-barycenter subspace):\n");
        for (std::size_t j = 0; j < spec.etas.size(); ++j)
            std::printf("  eta_%zu = %.12f  (multiplicity %d)\n", j, spec.etas[j],
                        spec.alphas[j]);
        const auto values = sbc::bifurcation_values(spec);
        if (values.empty()) {
            std::printf("bifurcation values: none\n");
        } else {
            std::printf("bifurcation values:\n");
            for (double v : values) std::printf("  s = %.9f\n", v);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

void apply_overrides(sbc::ContinuationSettings& settings, const std::optional<double>& s_min,
                     const std::optional<double>& s_max, const std::optional<double>& delta,
                     const std::optional<double>& delta_s, const std::optional<double>& tol) {
    if (s_min) settings.s_min = *s_min;
    if (s_max) settings.s_max = *s_max;
    if (delta) {
        settings.delta = *delta;
        settings.delta_max = std::max(settings.delta_max, *delta);
    }
    if (delta_s) settings.delta_s = *delta_s;
    if (tol) settings.newton_tol = *tol;
}

const char* termination_name(sbc::TerminationKind kind) {
    switch (kind) {
        case sbc::TerminationKind::ReachedSMin: return "reached s_min";
        case sbc::TerminationKind::ReachedSMax: return "reached s_max";
        case sbc::TerminationKind::ArrivedAtCollinear: return "arrived at collinear";
        case sbc::TerminationKind::MaxSteps: return "max steps";
        case sbc::TerminationKind::NewtonFailure: return "Newton failure";
    }
    return "?";
}

void print_branch_summary(const sbc::NamedBranch& nb) {
    const sbc::Branch& b = nb.branch;
    std::printf("branch %-16s points=%zu  s: %.6f -> %.6f  termination: %s",
                nb.name.c_str(), b.points.size(), b.points.front().s, b.points.back().s,
                termination_name(b.termination.kind));
    if (b.termination.arrived_ordering)
        std::printf(" (ordering %s)", ordering_to_string(*b.termination.arrived_ordering).c_str());
    if (b.asymptotic)
        std::printf("  [asymptotic limit detected at s=%.3f]", b.asymptotic->s_detected);
    std::printf("\n");
    std::printf("  indices: first (%d,%d,%d), last (%d,%d,%d)\n",
                b.points.front().indices.minus, b.points.front().indices.zero,
                b.points.front().indices.plus, b.points.back().indices.minus,
                b.points.back().indices.zero, b.points.back().indices.plus);
}

int cmd_follow(const std::vector<double>& masses, const std::vector<int>& ordering_1based,
               const sbc::ContinuationSettings& settings, std::uint64_t seed, bool probe,
               const std::string& out) {
    if (int rc = validate_masses(masses)) return rc;
    try {
        sbc::ScenarioSpec spec;
        spec.masses = masses;
        spec.ordering = parse_ordering(ordering_1based, masses.size());
        spec.settings = settings;
        spec.rng_seed = seed;
        spec.probe = probe;
        spec.output_path = out;
        const sbc::FollowResult result = sbc::run_follow(spec);

        std::printf("U = %.12f\n", result.spectrum.u_value);
        if (result.bifurcation_values.empty()) {
            std::printf("no bifurcation values; nothing to follow\n");
            return 0;
        }
        std::printf("seeding at s = %.9f\n", result.bifurcation_values.front());
        for (const auto& nb : result.branches) print_branch_summary(nb);
        if (result.turning_point)
            std::printf("turning point: s_turn = %.9f, smallest singular value %.3e\n",
                        result.turning_point->s_turn,
                        result.turning_point->smallest_singular_value);
        if (probe)
            std::printf("secondary seeds found: %d\n", result.secondary_seed_count);
        if (!out.empty()) std::printf("branch files written to %s\n", out.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_reproduce(const std::string& name, double mu, const sbc::ContinuationSettings& settings,
                  const std::string& out) {
    const auto scenario = sbc::scenario_from_string(name);
    if (!scenario) {
        std::cerr << "error: unknown scenario '" << name << "'\n";
        return 1;
    }
    try {
        const sbc::ReproduceResult result = sbc::run_reproduce(*scenario, mu, out, settings);
        std::printf("scenario %s\n", name.c_str());
        for (const auto& nb : result.follow.branches) print_branch_summary(nb);
        std::printf("%s\n", sbc::kVerdictDelimiter);
        std::printf("%s\n", result.verdict.dump().c_str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_multistart(const std::vector<double>& masses, double s, int starts,
                   std::uint64_t seed) {
    if (int rc = validate_masses(masses)) return rc;
    try {
        const sbc::MassVector m(masses);
        const auto found = sbc::multistart_search(m, sbc::SParam(s), starts, seed);
        int non_collinear = 0;
        for (const auto& sol : found)
            if (!sol.collinear) ++non_collinear;
        std::printf("distinct solutions (reflection orbits): %zu, non-collinear: %d\n",
                    found.size(), non_collinear);
        for (const auto& sol : found) {
            std::printf("%s  indices (%d,%d,%d)\n",
                        sol.collinear ? "collinear    " : "non-collinear",
                        sol.indices.minus, sol.indices.zero, sol.indices.plus);
            print_configuration(sol.q);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"S-balanced configurations of the planar n-body problem"};
    app.require_subcommand(1);

    std::vector<double> masses;
    std::vector<int> ordering;
    std::optional<double> s_min, s_max, delta, delta_s, tol;
    std::uint64_t seed = 20240915;
    bool probe = false;
    std::string out;
    double mu = 0.99;
    double s_value = 2.0;
    int starts = 2000;
    std::string scenario;

    auto add_common = [&](CLI::App* cmd, bool with_masses = true) {
        if (with_masses)
            cmd->add_option("--masses", masses, "comma-separated masses")
                ->delimiter(',')
                ->required();
        cmd->add_option("--ordering", ordering,
                        "bottom-to-top body order (1-based, default 1,2,...,n)")
            ->delimiter(',');
    };

    auto* collinear = app.add_subcommand("collinear", "collinear central configuration");
    add_common(collinear);

    auto* bif = app.add_subcommand("bifurcations",
                                   "interaction spectrum and degeneracy instants");
    add_common(bif);

    auto* follow = app.add_subcommand("follow", "continue non-trivial branches");
    add_common(follow);
    follow->add_option("--s-min", s_min, "lower continuation bound");
    follow->add_option("--s-max", s_max, "upper continuation bound");
    follow->add_option("--delta", delta, "arclength step");
    follow->add_option("--delta-s", delta_s, "seeding parameter displacement");
    follow->add_option("--tol", tol, "Newton tolerance");
    follow->add_option("--seed", seed, "random seed for probing");
    follow->add_flag("--probe", probe, "probe turning points for secondary branches");
    follow->add_option("--out", out, "output directory for branch files");

    auto* repro = app.add_subcommand("reproduce", "run a canned experiment");
    repro->add_option("name", scenario,
                      "equal-masses | one-big-two-small | two-big-one-small")
        ->required();
    repro->add_option("--mu", mu, "mass ratio for the unequal-mass scenarios");
    repro->add_option("--s-min", s_min, "lower continuation bound");
    repro->add_option("--s-max", s_max, "upper continuation bound");
    repro->add_option("--delta", delta, "arclength step");
    repro->add_option("--delta-s", delta_s, "seeding parameter displacement");
    repro->add_option("--tol", tol, "Newton tolerance");
    repro->add_option("--seed", seed, "random seed for probing");
    repro->add_option("--out", out, "output directory for branch files");

    auto* multi = app.add_subcommand("multistart", "random multistart search for solutions");
    add_common(multi);
    multi->add_option("--s", s_value, "parameter value")->required();
    multi->add_option("--starts", starts, "number of random starts");
    multi->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    sbc::ContinuationSettings settings;
    apply_overrides(settings, s_min, s_max, delta, delta_s, tol);

    if (collinear->parsed()) return cmd_collinear(masses, ordering);
    if (bif->parsed()) return cmd_bifurcations(masses, ordering);
    if (follow->parsed())
        return cmd_follow(masses, ordering, settings, seed, probe, out);
    if (repro->parsed()) {
        if (scenario == "two-big-one-small" && !repro->count("--mu")) mu = 0.01;
        return cmd_reproduce(scenario, mu, settings, out);
    }
    if (multi->parsed()) return cmd_multistart(masses, s_value, starts, seed);
    return 1;
}
