// smocu: command-line driver for sparse adaptive MOCU campaigns.
//
//   smocu run         single campaign, one trace per method
//   smocu ensemble    Monte Carlo study with per-experiment aggregates
//   smocu diagnostics gradient / leave-one-out sensitivity maps
//   smocu bode        frequency-response sweep of the spring chain

#include "smocu/smocu.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::string> benchmark;
    std::optional<std::string> method;
    std::optional<std::uint64_t> seed;
    std::optional<int> realizations;
    std::optional<int> experiments;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "key=value config file with [section] headers");
    cmd->add_option("--benchmark", o.benchmark, "synthetic | multifidelity | spring");
    cmd->add_option("--method", o.method, "full | static_surrogate | adaptive_surrogate | all");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--realizations", o.realizations, "Monte Carlo realizations");
    cmd->add_option("--experiments", o.experiments, "experiments per campaign");
    cmd->add_option("--out", o.out, "output directory");
}

// Returns the resolved config plus the list of methods to run ("all" expands).
std::pair<smocu::RunConfig, std::vector<smocu::Method>> resolve(const CommonOptions& o) {
    smocu::RunConfig cfg = o.config_path.empty() ? smocu::RunConfig{} : smocu::load_config_file(o.config_path);
    if (o.config_path.empty()) {
        cfg.refinement = smocu::RefinementConfig::defaults_for(cfg.grid());
    }
    if (o.benchmark) cfg.benchmark = smocu::parse_benchmark(*o.benchmark);
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.realizations) cfg.n_realizations = *o.realizations;
    if (o.experiments) cfg.n_experiments = *o.experiments;
    if (o.out) cfg.output_dir = *o.out;

    std::vector<smocu::Method> methods;
    if (o.method && *o.method == "all") {
        methods = {smocu::Method::full, smocu::Method::static_surrogate, smocu::Method::adaptive_surrogate};
    } else {
        if (o.method) cfg.method = smocu::parse_method(*o.method);
        methods = {cfg.method};
    }
    cfg.validate();
    return {cfg, methods};
}

std::filesystem::path prepare_output(const smocu::RunConfig& cfg) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "resolved-config.txt", std::ios::binary | std::ios::trunc) << cfg.resolved_text();
    return dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse, adaptive MOCU experimental design"};
    app.require_subcommand(1);

    CommonOptions run_opts, ens_opts, diag_opts, bode_opts;
    int realization = 0;
    auto* run = app.add_subcommand("run", "run a single campaign");
    add_common(run, run_opts);
    run->add_option("--realization", realization, "realization id (selects the child seed)");

    auto* ensemble = app.add_subcommand("ensemble", "run a Monte Carlo ensemble");
    add_common(ensemble, ens_opts);

    auto* diagnostics = app.add_subcommand("diagnostics", "emit cost, gradient and sensitivity maps");
    add_common(diagnostics, diag_opts);

    std::optional<int> bode_theta;
    int bode_points = 256;
    double omega_lo = 1e-2, omega_hi = 1e-1;
    auto* bode = app.add_subcommand("bode", "frequency-response sweep of the spring chain");
    add_common(bode, bode_opts);
    bode->add_option("--theta", bode_theta, "use stiffness row theta (default: all springs k = 1)");
    bode->add_option("--points", bode_points, "number of log-spaced frequencies");
    bode->add_option("--omega-min", omega_lo, "lowest frequency");
    bode->add_option("--omega-max", omega_hi, "highest frequency");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto [cfg, methods] = resolve(run_opts);
            const auto dir = prepare_output(cfg);
            const auto problem = smocu::make_problem(cfg);
            int status = 0;
            for (auto m : methods) {
                const auto res = smocu::run_campaign(cfg, problem, m, realization);
                smocu::csv::write_lines(
                    (dir / ("trace_" + std::string(smocu::to_string(m)) + "_" + std::to_string(realization) + ".csv"))
                        .string(),
                    smocu::trace_lines(res));
                if (res.failure) {
                    std::cerr << smocu::to_string(m) << ": campaign failed: " << *res.failure << "\n";
                    status = 2;
                }
            }
            return status;
        }
        if (*ensemble) {
            auto [cfg, methods] = resolve(ens_opts);
            const auto dir = prepare_output(cfg);
            const auto problem = smocu::make_problem(cfg);
            int status = 0;
            for (auto m : methods) {
                const auto e = smocu::run_ensemble(cfg, problem, m, dir);
                const int failed = e.failures();
                std::cerr << smocu::to_string(m) << ": " << (cfg.n_realizations - failed) << "/" << cfg.n_realizations
                          << " realizations succeeded\n";
                if (failed == cfg.n_realizations) status = 2;
            }
            return status;
        }
        if (*diagnostics) {
            auto [cfg, methods] = resolve(diag_opts);
            const auto dir = prepare_output(cfg);
            smocu::emit_diagnostics(cfg, dir);
            return 0;
        }
        if (*bode) {
            auto [cfg, methods] = resolve(bode_opts);
            const auto dir = prepare_output(cfg);
            auto spec = smocu::build_spring_class(smocu::spring_spec_from(cfg), cfg.resolved_spring_seed());
            Eigen::VectorXd k = Eigen::VectorXd::Ones(spec.n_springs);
            if (bode_theta) {
                if (*bode_theta < 1 || *bode_theta > spec.n_theta) throw smocu::BoundsError("--theta out of range");
                k = spec.stiffness_table.row(*bode_theta - 1).transpose();
            }
            const auto sweep = smocu::bode_sweep(smocu::state_space(k, spec), omega_lo, omega_hi, bode_points);
            std::vector<std::string> lines{"omega,magnitude"};
            for (const auto& p : sweep) {
                smocu::csv::Row row;
                row << p.omega << p.magnitude;
                lines.push_back(row.str());
            }
            smocu::csv::write_lines((dir / "bode.csv").string(), lines);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
