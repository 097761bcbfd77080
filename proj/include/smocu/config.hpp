#pragma once

// Run configuration: an INI-style key=value file with [section] headers,
// overridable from the command line. resolved_text() writes every value,
// defaults included, in the same format so it can be fed back as a config.

#include "csv.hpp"
#include "gp.hpp"
#include "refinement.hpp"
#include "seeding.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace smocu {

enum class Benchmark { synthetic, multifidelity, spring };
enum class Method { full, static_surrogate, adaptive_surrogate };

inline const char* to_string(Benchmark b) {
    switch (b) {
        case Benchmark::synthetic: return "synthetic";
        case Benchmark::multifidelity: return "multifidelity";
        case Benchmark::spring: return "spring";
    }
    return "?";
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::full: return "full";
        case Method::static_surrogate: return "static_surrogate";
        case Method::adaptive_surrogate: return "adaptive_surrogate";
    }
    return "?";
}

inline Benchmark parse_benchmark(const std::string& s) {
    if (s == "synthetic") return Benchmark::synthetic;
    if (s == "multifidelity") return Benchmark::multifidelity;
    if (s == "spring") return Benchmark::spring;
    throw Error("unknown benchmark '" + s + "' (expected synthetic, multifidelity or spring)");
}

inline Method parse_method(const std::string& s) {
    if (s == "full") return Method::full;
    if (s == "static_surrogate" || s == "static") return Method::static_surrogate;
    if (s == "adaptive_surrogate" || s == "adaptive") return Method::adaptive_surrogate;
    throw Error("unknown method '" + s + "' (expected full, static_surrogate or adaptive_surrogate)");
}

struct RunConfig {
    Benchmark benchmark = Benchmark::synthetic;
    Method method = Method::full;
    int n_experiments = 256;
    int n_realizations = 128;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";

    int n_theta = 64;
    int n_psi = 64;

    /// Sample budget every surrogate method is held to.
    static constexpr int kSampleBudget = 48;

    int static_initial_points = kSampleBudget;
    int adaptive_initial_points = 32;
    GpSettings gp;

    RefinementConfig refinement = RefinementConfig::defaults_for({64, 64});

    int n_springs = 16;
    double spring_noise_halfwidth = 0.1;
    double spring_damping = 0.125;
    double spring_mass = 1.0;
    /// Stiffness-table seed; derived from master_seed when unset.
    std::optional<std::uint64_t> spring_seed;

    int diagnostics_realizations = 64;
    int diagnostics_training_points = 48;

    IndexGrid grid() const { return {n_theta, n_psi}; }

    int initial_points(Method m) const {
        return m == Method::adaptive_surrogate ? adaptive_initial_points : static_initial_points;
    }

    void validate() const {
        if (n_theta < 4 || n_theta % 4 != 0) throw Error("config: n_theta must be a positive multiple of 4");
        if (n_psi < 2) throw Error("config: n_psi must be >= 2");
        if (n_experiments < 1) throw Error("config: experiments must be >= 1");
        if (n_realizations < 1) throw Error("config: realizations must be >= 1");
        if (static_initial_points < 2 || adaptive_initial_points < 3) {
            throw Error("config: need >= 2 static and >= 3 adaptive initial points");
        }
        if (static_initial_points > n_theta * n_psi || adaptive_initial_points > n_theta * n_psi) {
            throw Error("config: more initial points than grid cells");
        }
        if (gp.restarts < 1 || gp.max_iterations < 1) throw Error("config: restarts and max_iterations must be >= 1");
        refinement.validate();
        const int adaptive_budget =
            adaptive_initial_points + refinement.max_refinements * refinement.points_per_refinement;
        if (adaptive_budget > kSampleBudget) {
            throw Error("config: adaptive budget (initial + max_refinements * points_per_refinement = " +
                        std::to_string(adaptive_budget) + ") exceeds the sample budget of " +
                        std::to_string(kSampleBudget));
        }
        if (n_springs < 1 || !(spring_damping > 0.0) || !(spring_mass > 0.0) || !(spring_noise_halfwidth >= 0.0)) {
            throw Error("config: invalid spring parameters");
        }
        if (diagnostics_realizations < 1 || diagnostics_training_points < 3) {
            throw Error("config: diagnostics need >= 1 realization and >= 3 training points");
        }
    }

    std::string resolved_text() const {
        std::ostringstream o;
        auto d = [](double v) { return csv::format(v); };
        o << "[run]\n"
          << "benchmark=" << to_string(benchmark) << "\n"
          << "method=" << to_string(method) << "\n"
          << "experiments=" << n_experiments << "\n"
          << "realizations=" << n_realizations << "\n"
          << "seed=" << master_seed << "\n"
          << "output_dir=" << output_dir << "\n\n"
          << "[grid]\n"
          << "n_theta=" << n_theta << "\n"
          << "n_psi=" << n_psi << "\n\n"
          << "[surrogate]\n"
          << "static_initial_points=" << static_initial_points << "\n"
          << "adaptive_initial_points=" << adaptive_initial_points << "\n"
          << "nu=" << d(nu_value(gp.nu)) << "\n"
          << "restarts=" << gp.restarts << "\n"
          << "max_iterations=" << gp.max_iterations << "\n"
          << "gradient_tolerance=" << d(gp.gradient_tolerance) << "\n\n"
          << "[refinement]\n"
          << "variance_fraction=" << d(refinement.variance_fraction) << "\n"
          << "points_per_refinement=" << refinement.points_per_refinement << "\n"
          << "max_refinements=" << refinement.max_refinements << "\n"
          << "proposal_std_theta=" << d(refinement.proposal_std_theta) << "\n"
          << "proposal_std_psi=" << d(refinement.proposal_std_psi) << "\n"
          << "band_lower=" << d(refinement.band_lower) << "\n"
          << "band_upper=" << d(refinement.band_upper) << "\n\n"
          << "[spring]\n"
          << "n_springs=" << n_springs << "\n"
          << "noise_halfwidth=" << d(spring_noise_halfwidth) << "\n"
          << "damping=" << d(spring_damping) << "\n"
          << "mass=" << d(spring_mass) << "\n"
          << "seed=" << resolved_spring_seed() << "\n\n"
          << "[diagnostics]\n"
          << "realizations=" << diagnostics_realizations << "\n"
          << "training_points=" << diagnostics_training_points << "\n";
        return o.str();
    }

    std::uint64_t resolved_spring_seed() const {
        return spring_seed ? *spring_seed : stream_seed(master_seed, Stream::benchmark);
    }
};

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof()) {
        throw Error("config: cannot parse value '" + text + "' for key " + key);
    }
    return v;
}

}  // namespace detail

/// Applies every key in an INI property tree onto `cfg`. Unknown keys are errors.
inline void apply_ini(RunConfig& cfg, const boost::property_tree::ptree& tree) {
    using detail::parse_value;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw Error("config: key " + section + " outside any section");
        for (const auto& [key, node] : body) {
            const std::string k = section + "." + key;
            const std::string v = node.get_value<std::string>();
            if (k == "run.benchmark") cfg.benchmark = parse_benchmark(v);
            else if (k == "run.method") cfg.method = parse_method(v);
            else if (k == "run.experiments") cfg.n_experiments = parse_value<int>(k, v);
            else if (k == "run.realizations") cfg.n_realizations = parse_value<int>(k, v);
            else if (k == "run.seed") cfg.master_seed = parse_value<std::uint64_t>(k, v);
            else if (k == "run.output_dir") cfg.output_dir = v;
            else if (k == "grid.n_theta") cfg.n_theta = parse_value<int>(k, v);
            else if (k == "grid.n_psi") cfg.n_psi = parse_value<int>(k, v);
            else if (k == "surrogate.static_initial_points") cfg.static_initial_points = parse_value<int>(k, v);
            else if (k == "surrogate.adaptive_initial_points") cfg.adaptive_initial_points = parse_value<int>(k, v);
            else if (k == "surrogate.nu") cfg.gp.nu = nu_from_value(parse_value<double>(k, v));
            else if (k == "surrogate.restarts") cfg.gp.restarts = parse_value<int>(k, v);
            else if (k == "surrogate.max_iterations") cfg.gp.max_iterations = parse_value<int>(k, v);
            else if (k == "surrogate.gradient_tolerance") cfg.gp.gradient_tolerance = parse_value<double>(k, v);
            else if (k == "refinement.variance_fraction") cfg.refinement.variance_fraction = parse_value<double>(k, v);
            else if (k == "refinement.points_per_refinement") cfg.refinement.points_per_refinement = parse_value<int>(k, v);
            else if (k == "refinement.max_refinements") cfg.refinement.max_refinements = parse_value<int>(k, v);
            else if (k == "refinement.proposal_std_theta") cfg.refinement.proposal_std_theta = parse_value<double>(k, v);
            else if (k == "refinement.proposal_std_psi") cfg.refinement.proposal_std_psi = parse_value<double>(k, v);
            else if (k == "refinement.band_lower") cfg.refinement.band_lower = parse_value<double>(k, v);
            else if (k == "refinement.band_upper") cfg.refinement.band_upper = parse_value<double>(k, v);
            else if (k == "spring.n_springs") cfg.n_springs = parse_value<int>(k, v);
            else if (k == "spring.noise_halfwidth") cfg.spring_noise_halfwidth = parse_value<double>(k, v);
            else if (k == "spring.damping") cfg.spring_damping = parse_value<double>(k, v);
            else if (k == "spring.mass") cfg.spring_mass = parse_value<double>(k, v);
            else if (k == "spring.seed") cfg.spring_seed = parse_value<std::uint64_t>(k, v);
            else if (k == "diagnostics.realizations") cfg.diagnostics_realizations = parse_value<int>(k, v);
            else if (k == "diagnostics.training_points") cfg.diagnostics_training_points = parse_value<int>(k, v);
            else throw Error("config: unknown key " + k);
        }
    }
}

/// Proposal spreads follow the grid unless the config sets them explicitly.
inline RunConfig load_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    const bool explicit_theta = tree.get_child_optional("refinement.proposal_std_theta").has_value();
    const bool explicit_psi = tree.get_child_optional("refinement.proposal_std_psi").has_value();
    apply_ini(cfg, tree);
    const auto defaults = RefinementConfig::defaults_for(cfg.grid());
    if (!explicit_theta) cfg.refinement.proposal_std_theta = defaults.proposal_std_theta;
    if (!explicit_psi) cfg.refinement.proposal_std_psi = defaults.proposal_std_psi;
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path);
    return load_config(in);
}

}  // namespace smocu
