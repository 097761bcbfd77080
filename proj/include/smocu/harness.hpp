#pragma once

// Campaign orchestration: builds a benchmark's ground truth, runs full,
// static-surrogate and adaptive-surrogate MOCU campaigns, aggregates Monte
// Carlo ensembles and produces surrogate diagnostics maps. Every training
// cost query goes through an instrumented oracle so evaluation budgets can be
// audited; scoring against the exact cost never touches the oracle.

#include "benchmarks.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "gp.hpp"
#include "mocu.hpp"
#include "problem.hpp"
#include "refinement.hpp"
#include "seeding.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace smocu {

/// Ground truth of one benchmark: exact (fine) costs, optional coarse costs,
/// the experiment model and the true class member.
struct Problem {
    Benchmark kind = Benchmark::synthetic;
    IndexGrid grid;
    int theta_true = 1;
    ExperimentModel experiments;
    CostMatrix fine;
    std::optional<CostMatrix> coarse;
};

inline SpringSpec spring_spec_from(const RunConfig& cfg) {
    SpringSpec s;
    s.n_springs = cfg.n_springs;
    s.mass = cfg.spring_mass;
    s.damping = cfg.spring_damping;
    s.noise_halfwidth = cfg.spring_noise_halfwidth;
    s.n_theta = cfg.n_theta;
    s.n_psi = cfg.n_psi;
    return s;
}

inline Problem make_problem(const RunConfig& cfg) {
    const IndexGrid grid = cfg.grid();
    const int n_candidates = std::min(16, cfg.n_theta / 4);
    Problem p;
    p.kind = cfg.benchmark;
    p.grid = grid;
    p.experiments = gaussian_detection_model(cfg.n_theta, n_candidates);
    switch (cfg.benchmark) {
        case Benchmark::synthetic:
        case Benchmark::multifidelity: {
            const SyntheticSpec s{cfg.n_theta, cfg.n_psi};
            p.theta_true = s.theta_true();
            p.fine = CostMatrix::tabulate(grid, [&](int t, int q) { return synthetic_cost(t, q, s); }, Provenance::exact);
            if (cfg.benchmark == Benchmark::multifidelity) {
                p.coarse = CostMatrix::tabulate(grid, [&](int t, int q) { return coarse_cost(t, q, s); },
                                                Provenance::exact);
            }
            break;
        }
        case Benchmark::spring: {
            const SpringBenchmark bench(build_spring_class(spring_spec_from(cfg), cfg.resolved_spring_seed()));
            p.theta_true = bench.spec().theta_true();
            p.fine = CostMatrix::tabulate(grid, [&](int t, int q) { return bench.cost(t, q); }, Provenance::exact);
            break;
        }
    }
    return p;
}

struct OracleCounts {
    long fine = 0;
    long coarse = 0;
};

/// Cost oracle over a Problem that counts every query by fidelity.
class CountingOracle {
   public:
    explicit CountingOracle(const Problem& p) : problem_(&p) {}

    double operator()(int theta, int psi, Fidelity f) {
        if (!problem_->grid.contains(theta, psi)) throw BoundsError("oracle: query outside grid");
        if (f == Fidelity::coarse) {
            if (!problem_->coarse) throw Error("oracle: benchmark has no coarse model");
            ++counts_.coarse;
            return (*problem_->coarse)(theta, psi);
        }
        ++counts_.fine;
        return problem_->fine(theta, psi);
    }

    CostOracle as_function() {
        return [this](int t, int q, Fidelity f) { return (*this)(t, q, f); };
    }

    const OracleCounts& counts() const { return counts_; }

   private:
    const Problem* problem_;
    OracleCounts counts_;
};

/// Initial design: theta drawn from `prior`, psi uniform, distinct points only.
template <typename Rng>
TrainingSet sample_initial_points(int count, const DiscreteDistribution& prior, const IndexGrid& grid, Fidelity f,
                                  const CostOracle& oracle, Rng& rng) {
    if (count > grid.size()) throw Error("sample_initial_points: more points than grid cells");
    std::discrete_distribution<int> theta_dist(prior.mass().begin(), prior.mass().end());
    std::uniform_int_distribution<int> psi_dist(1, grid.n_psi);
    TrainingSet ts;
    const long budget = 1000L * count;
    for (long draw = 0; draw < budget && static_cast<int>(ts.size()) < count; ++draw) {
        const GridPoint g{theta_dist(rng) + 1, psi_dist(rng)};
        if (ts.contains(g)) continue;
        ts.add({g.theta, g.psi, oracle(g.theta, g.psi, f), f});
    }
    if (static_cast<int>(ts.size()) < count) {
        throw Error("sample_initial_points: prior support too small for the requested point count");
    }
    return ts;
}

struct TraceRow {
    int realization_id = 0;
    int experiment_index = 0;
    int x_selected = 0;
    int y_outcome = 0;
    int psi_selected = 1;
    double true_cost = 0.0;
    double posterior_mean = 0.0;
    double posterior_variance = 0.0;
    int map_theta = 1;
    IndexInterval band68;
    IndexInterval band95;
    std::size_t training_set_size = 0;
    bool refined_this_step = false;
};

struct CampaignResult {
    Method method = Method::full;
    int realization_id = 0;
    std::vector<TraceRow> rows;
    OracleCounts oracle_calls;
    TrainingSet training;
    int refinements = 0;
    double initial_variance = 0.0;
    std::optional<std::string> failure;
};

namespace detail {

struct CampaignRngs {
    std::mt19937_64 initial;
    std::mt19937_64 outcomes;
    std::mt19937_64 gp;
    std::mt19937_64 proposals;

    CampaignRngs(std::uint64_t master, int realization)
        : initial(stream_seed(child_seed(master, static_cast<std::uint64_t>(realization)), Stream::initial_sampling)),
          outcomes(stream_seed(child_seed(master, static_cast<std::uint64_t>(realization)), Stream::outcomes)),
          gp(stream_seed(child_seed(master, static_cast<std::uint64_t>(realization)), Stream::gp_restarts)),
          proposals(stream_seed(child_seed(master, static_cast<std::uint64_t>(realization)), Stream::proposals)) {}
};

}  // namespace detail

/// One sequential-design campaign for `method` on a prebuilt problem.
/// Component errors stop the campaign; rows completed so far are kept and the
/// message is stored in `failure`.
inline CampaignResult run_campaign(const RunConfig& cfg, const Problem& problem, Method method, int realization_id) {
    CampaignResult res;
    res.method = method;
    res.realization_id = realization_id;

    detail::CampaignRngs rngs(cfg.master_seed, realization_id);
    CountingOracle counter(problem);
    const CostOracle oracle = counter.as_function();
    const IndexGrid grid = problem.grid;
    const DiscreteDistribution prior = make_uniform_prior(grid);
    res.initial_variance = distribution_stats(prior).variance;

    const Eigen::VectorXd truth_row = problem.fine.values().row(problem.theta_true - 1).transpose();
    const std::span<const double> true_costs(truth_row.data(), static_cast<std::size_t>(truth_row.size()));

    try {
        CostMatrix j;
        std::optional<GpModel> model;
        TrainingSet ts;
        if (method == Method::full) {
            j = CostMatrix::tabulate(grid, [&](int t, int q) { return oracle(t, q, Fidelity::fine); }, Provenance::exact);
        } else {
            const Fidelity f = (problem.kind == Benchmark::multifidelity && method == Method::adaptive_surrogate)
                                   ? Fidelity::coarse
                                   : Fidelity::fine;
            ts = sample_initial_points(cfg.initial_points(method), prior, grid, f, oracle, rngs.initial);
            model = fit(ts, grid, cfg.gp, rngs.gp());
            j = model->predict_mean(grid);
        }

        CampaignState state{prior, 0};
        RefinementState gate{res.initial_variance, 0};
        res.rows.reserve(static_cast<std::size_t>(cfg.n_experiments));
        for (int e = 1; e <= cfg.n_experiments; ++e) {
            const auto rec = run_mocu_step(state, j, problem.experiments, problem.theta_true, true_costs, rngs.outcomes);
            bool refined = false;
            if (method == Method::adaptive_surrogate) {
                auto r = maybe_refine(gate, ts, state.posterior, cfg.refinement, *model, grid, oracle, rngs.proposals);
                gate = r.state;
                if (r.refit) {
                    ts = std::move(r.training);
                    model = fit(ts, grid, cfg.gp, rngs.gp());
                    j = model->predict_mean(grid);
                    refined = true;
                }
            }
            TraceRow row;
            row.realization_id = realization_id;
            row.experiment_index = e;
            row.x_selected = rec.x_theta;
            row.y_outcome = rec.y_label;
            row.psi_selected = rec.psi_robust;
            row.true_cost = rec.true_cost;
            row.posterior_mean = rec.posterior_stats.mean;
            row.posterior_variance = rec.posterior_stats.variance;
            row.map_theta = rec.posterior_stats.map_index;
            row.band68 = rec.band68;
            row.band95 = rec.band95;
            row.training_set_size = ts.size();
            row.refined_this_step = refined;
            res.rows.push_back(row);
        }
        res.refinements = gate.refinements_used;
        res.training = std::move(ts);
    } catch (const std::exception& e) {
        res.failure = e.what();
    }
    res.oracle_calls = counter.counts();
    return res;
}

inline CampaignResult run_campaign(const RunConfig& cfg, int realization_id) {
    return run_campaign(cfg, make_problem(cfg), cfg.method, realization_id);
}

inline std::vector<std::string> trace_lines(const CampaignResult& r) {
    std::vector<std::string> lines{
        "realization_id,experiment_index,x_selected,y_outcome,psi_selected,true_cost,posterior_mean,"
        "posterior_variance,map_theta,p68_lo,p68_hi,p95_lo,p95_hi,training_set_size,refined_this_step"};
    for (const auto& t : r.rows) {
        csv::Row row;
        row << t.realization_id << t.experiment_index << t.x_selected << t.y_outcome << t.psi_selected << t.true_cost
            << t.posterior_mean << t.posterior_variance << t.map_theta << t.band68.lo << t.band68.hi << t.band95.lo
            << t.band95.hi << t.training_set_size << t.refined_this_step;
        lines.push_back(row.str());
    }
    if (r.failure) lines.push_back("# failed: " + *r.failure);
    return lines;
}

struct AggregateRow {
    int experiment_index = 0;
    int n = 0;
    double mean_true_cost = 0.0;
    double se_true_cost = 0.0;
    double mean_posterior_variance = 0.0;
    double se_posterior_variance = 0.0;
    double map_hit_rate = 0.0;
    double mean_map_theta = 0.0;
    double mean_p68_lo = 0.0, mean_p68_hi = 0.0, mean_p95_lo = 0.0, mean_p95_hi = 0.0;
    double mean_training_set_size = 0.0;
};

struct EnsembleResult {
    Method method = Method::full;
    std::vector<CampaignResult> campaigns;
    std::vector<AggregateRow> aggregate;
    double initial_variance = 0.0;

    int failures() const {
        int f = 0;
        for (const auto& c : campaigns) f += c.failure ? 1 : 0;
        return f;
    }
};

namespace detail {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    }
    return out;
}

}  // namespace detail

/// Per-experiment statistics across the successful campaigns.
inline std::vector<AggregateRow> aggregate(const std::vector<CampaignResult>& campaigns, int n_experiments,
                                           int theta_true) {
    std::vector<const CampaignResult*> ok;
    for (const auto& c : campaigns) {
        if (!c.failure && static_cast<int>(c.rows.size()) == n_experiments) ok.push_back(&c);
    }
    std::vector<AggregateRow> out;
    out.reserve(static_cast<std::size_t>(n_experiments));
    for (int e = 0; e < n_experiments; ++e) {
        AggregateRow a;
        a.experiment_index = e + 1;
        a.n = static_cast<int>(ok.size());
        std::vector<double> cost, var;
        double hits = 0.0;
        for (const auto* c : ok) {
            const auto& r = c->rows[static_cast<std::size_t>(e)];
            cost.push_back(r.true_cost);
            var.push_back(r.posterior_variance);
            hits += r.map_theta == theta_true ? 1.0 : 0.0;
            a.mean_map_theta += r.map_theta;
            a.mean_p68_lo += r.band68.lo;
            a.mean_p68_hi += r.band68.hi;
            a.mean_p95_lo += r.band95.lo;
            a.mean_p95_hi += r.band95.hi;
            a.mean_training_set_size += static_cast<double>(r.training_set_size);
        }
        const auto c = detail::mean_se(cost);
        const auto v = detail::mean_se(var);
        a.mean_true_cost = c.mean;
        a.se_true_cost = c.se;
        a.mean_posterior_variance = v.mean;
        a.se_posterior_variance = v.se;
        if (a.n > 0) {
            const double n = a.n;
            a.map_hit_rate = hits / n;
            a.mean_map_theta /= n;
            a.mean_p68_lo /= n;
            a.mean_p68_hi /= n;
            a.mean_p95_lo /= n;
            a.mean_p95_hi /= n;
            a.mean_training_set_size /= n;
        }
        out.push_back(a);
    }
    return out;
}

inline std::vector<std::string> aggregate_lines(const EnsembleResult& e) {
    std::vector<std::string> lines{
        "experiment_index,n,mean_true_cost,se_true_cost,mean_posterior_variance,se_posterior_variance,"
        "map_hit_rate,mean_map_theta,mean_p68_lo,mean_p68_hi,mean_p95_lo,mean_p95_hi,mean_training_set_size"};
    for (const auto& a : e.aggregate) {
        csv::Row row;
        row << a.experiment_index << a.n << a.mean_true_cost << a.se_true_cost << a.mean_posterior_variance
            << a.se_posterior_variance << a.map_hit_rate << a.mean_map_theta << a.mean_p68_lo << a.mean_p68_hi
            << a.mean_p95_lo << a.mean_p95_hi << a.mean_training_set_size;
        lines.push_back(row.str());
    }
    const int failed = e.failures();
    lines.push_back("# realizations=" + std::to_string(e.campaigns.size()) +
                    " succeeded=" + std::to_string(static_cast<int>(e.campaigns.size()) - failed) +
                    " failed=" + std::to_string(failed));
    for (const auto& c : e.campaigns) {
        if (c.failure) lines.push_back("# realization " + std::to_string(c.realization_id) + " failed: " + *c.failure);
    }
    return lines;
}

inline std::vector<std::string> summary_lines(const EnsembleResult& e) {
    std::vector<std::string> lines{
        "realization_id,status,fine_oracle_calls,coarse_oracle_calls,final_training_set_size,refinements,"
        "completed_experiments"};
    for (const auto& c : e.campaigns) {
        csv::Row row;
        row << c.realization_id << (c.failure ? "failed" : "ok") << static_cast<long long>(c.oracle_calls.fine)
            << static_cast<long long>(c.oracle_calls.coarse) << c.training.size() << c.refinements << c.rows.size();
        lines.push_back(row.str());
    }
    return lines;
}

/// Monte Carlo study of one method. Realization r always uses the child seed
/// of (master_seed, r). When `out_dir` is set, writes trace_<method>_<r>.csv,
/// aggregate_<method>.csv and summary_<method>.csv there.
inline EnsembleResult run_ensemble(const RunConfig& cfg, const Problem& problem, Method method,
                                   const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
    EnsembleResult e;
    e.method = method;
    e.initial_variance = distribution_stats(make_uniform_prior(problem.grid)).variance;
    const std::string tag = to_string(method);
    for (int r = 0; r < cfg.n_realizations; ++r) {
        e.campaigns.push_back(run_campaign(cfg, problem, method, r));
        if (out_dir) {
            csv::write_lines((*out_dir / ("trace_" + tag + "_" + std::to_string(r) + ".csv")).string(),
                             trace_lines(e.campaigns.back()));
        }
    }
    e.aggregate = aggregate(e.campaigns, cfg.n_experiments, problem.theta_true);
    if (out_dir) {
        csv::write_lines((*out_dir / ("aggregate_" + tag + ".csv")).string(), aggregate_lines(e));
        csv::write_lines((*out_dir / ("summary_" + tag + ".csv")).string(), summary_lines(e));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Finite-difference gradient magnitude of a cost matrix: central differences
/// in the interior, one-sided at the edges, unit grid spacing.
inline Eigen::MatrixXd gradient_magnitude(const Eigen::MatrixXd& m) {
    const auto rows = m.rows(), cols = m.cols();
    auto diff = [](const Eigen::MatrixXd& a, Eigen::Index i, Eigen::Index j, bool along_rows, Eigen::Index n) {
        const Eigen::Index k = along_rows ? i : j;
        if (n < 2) return 0.0;
        auto at = [&](Eigen::Index q) { return along_rows ? a(q, j) : a(i, q); };
        if (k == 0) return at(1) - at(0);
        if (k == n - 1) return at(n - 1) - at(n - 2);
        return 0.5 * (at(k + 1) - at(k - 1));
    };
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double gt = diff(m, i, j, true, rows);
            const double gp = diff(m, i, j, false, cols);
            g(i, j) = std::sqrt(gt * gt + gp * gp);
        }
    }
    return g;
}

struct DiagnosticsMaps {
    Eigen::MatrixXd cost;
    Eigen::MatrixXd gradient;     // realization mean of |grad J~|
    Eigen::MatrixXd sensitivity;  // mean LOO sensitivity of points sampled at each cell
    Eigen::MatrixXd sensitivity_hits;
};

/// Monte Carlo averaged surrogate diagnostics on the synthetic surface.
inline DiagnosticsMaps compute_diagnostics(const RunConfig& cfg) {
    if (cfg.benchmark != Benchmark::synthetic) {
        throw Error("diagnostics: only the synthetic benchmark is supported");
    }
    const Problem problem = make_problem(cfg);
    const IndexGrid grid = problem.grid;
    const DiscreteDistribution prior = make_uniform_prior(grid);

    DiagnosticsMaps d;
    d.cost = problem.fine.values();
    d.gradient = Eigen::MatrixXd::Zero(grid.n_theta, grid.n_psi);
    Eigen::MatrixXd sens_sum = Eigen::MatrixXd::Zero(grid.n_theta, grid.n_psi);
    d.sensitivity_hits = Eigen::MatrixXd::Zero(grid.n_theta, grid.n_psi);

    for (int r = 0; r < cfg.diagnostics_realizations; ++r) {
        detail::CampaignRngs rngs(cfg.master_seed, r);
        CountingOracle counter(problem);
        const auto ts = sample_initial_points(cfg.diagnostics_training_points, prior, grid, Fidelity::fine,
                                              counter.as_function(), rngs.initial);
        const auto model = fit(ts, grid, cfg.gp, rngs.gp());
        d.gradient += gradient_magnitude(model.predict_mean(grid).values());

        std::vector<std::size_t> all(ts.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        const auto rep = loo_sensitivities(ts, all, model, grid);
        for (std::size_t k = 0; k < rep.indices.size(); ++k) {
            const auto& p = ts[rep.indices[k]];
            sens_sum(p.theta - 1, p.psi - 1) += rep.sensitivities[k];
            d.sensitivity_hits(p.theta - 1, p.psi - 1) += 1.0;
        }
    }
    d.gradient /= static_cast<double>(cfg.diagnostics_realizations);
    d.sensitivity = Eigen::MatrixXd::Zero(grid.n_theta, grid.n_psi);
    for (Eigen::Index i = 0; i < sens_sum.rows(); ++i) {
        for (Eigen::Index j = 0; j < sens_sum.cols(); ++j) {
            if (d.sensitivity_hits(i, j) > 0.0) d.sensitivity(i, j) = sens_sum(i, j) / d.sensitivity_hits(i, j);
        }
    }
    return d;
}

inline void emit_diagnostics(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const auto d = compute_diagnostics(cfg);
    csv::write_lines((out_dir / "cost_heatmap.csv").string(), csv::matrix_lines(d.cost));
    csv::write_lines((out_dir / "gradient_map.csv").string(), csv::matrix_lines(d.gradient));
    csv::write_lines((out_dir / "sensitivity_map.csv").string(), csv::matrix_lines(d.sensitivity));
    csv::write_lines((out_dir / "sensitivity_hits.csv").string(), csv::matrix_lines(d.sensitivity_hits));
}

}  // namespace smocu
