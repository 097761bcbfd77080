#pragma once

// Posterior-informed surrogate refinement. Once the belief over theta has
// contracted enough, the training points inside its inner 68% band are ranked
// by leave-one-out sensitivity and new samples are drawn around the most
// sensitive one.

#include "gp.hpp"
#include "problem.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace smocu {

struct RefinementConfig {
    double variance_fraction = 0.25;
    int points_per_refinement = 8;
    int max_refinements = 2;
    double proposal_std_theta = 4.0;
    double proposal_std_psi = 4.0;
    double band_lower = 0.16;
    double band_upper = 0.84;

    /// Proposal spread of (n_theta/16, n_psi/16) grid cells.
    static RefinementConfig defaults_for(const IndexGrid& grid) {
        RefinementConfig c;
        c.proposal_std_theta = grid.n_theta / 16.0;
        c.proposal_std_psi = grid.n_psi / 16.0;
        return c;
    }

    void validate() const {
        if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
            throw Error("RefinementConfig: variance_fraction must lie in (0, 1]");
        }
        if (points_per_refinement < 1 || max_refinements < 0) {
            throw Error("RefinementConfig: points_per_refinement >= 1 and max_refinements >= 0 required");
        }
        if (!(proposal_std_theta >= 0.0) || !(proposal_std_psi >= 0.0)) {
            throw Error("RefinementConfig: proposal spreads must be non-negative");
        }
        if (!(band_lower >= 0.0 && band_lower < band_upper && band_upper <= 1.0)) {
            throw Error("RefinementConfig: invalid percentile band");
        }
    }
};

inline bool converged(double initial_variance, double current_variance, double fraction) {
    return current_variance <= fraction * initial_variance;
}

/// Training indices whose theta lies inside the belief's percentile band.
inline std::vector<std::size_t> select_p68(const TrainingSet& ts, const DiscreteDistribution& d,
                                           double lower_q = 0.16, double upper_q = 0.84) {
    const auto band = percentile_interval(d, lower_q, upper_q);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (band.contains(ts[i].theta)) out.push_back(i);
    }
    return out;
}

struct SensitivityReport {
    std::vector<std::size_t> indices;
    std::vector<double> sensitivities;
    std::size_t argmax = 0;  // training index with the largest sensitivity
};

/// L2 norm over the full grid of the prediction change when each candidate is
/// left out, hyperparameters and prior mean frozen at `fitted`.
inline SensitivityReport loo_sensitivities(const TrainingSet& ts, const std::vector<std::size_t>& candidates,
                                           const GpModel& fitted, const IndexGrid& grid) {
    if (ts.size() < 3) {
        throw Error("loo_sensitivities: need at least three training points");
    }
    if (candidates.empty()) {
        throw Error("loo_sensitivities: no candidates");
    }
    const Eigen::MatrixXd base = fitted.predict_mean(grid).values();
    SensitivityReport rep;
    rep.indices = candidates;
    rep.sensitivities.reserve(candidates.size());
    double best = -1.0;
    for (std::size_t i : candidates) {
        const auto loo = refit_without(ts, i, fitted.params(), fitted.target_mean(), grid);
        const double s = (loo.values() - base).norm();
        rep.sensitivities.push_back(s);
        if (s > best || (s == best && i < rep.argmax)) {
            best = s;
            rep.argmax = i;
        }
    }
    return rep;
}

/// Rounded, clamped 2-D Gaussian draws around `center`, rejecting anything
/// already in `existing` or already accepted. At most 100 draws per point.
template <typename Rng>
std::vector<GridPoint> propose_points(GridPoint center, const RefinementConfig& cfg, const IndexGrid& grid,
                                      const TrainingSet& existing, Rng& rng) {
    if (!grid.contains(center.theta, center.psi)) {
        throw BoundsError("propose_points: center outside grid");
    }
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<GridPoint> accepted;
    const int budget = 100 * cfg.points_per_refinement;
    for (int draw = 0; draw < budget && static_cast<int>(accepted.size()) < cfg.points_per_refinement; ++draw) {
        const double dt = unit(rng) * cfg.proposal_std_theta;
        const double dp = unit(rng) * cfg.proposal_std_psi;
        GridPoint g{
            std::clamp(static_cast<int>(std::lround(center.theta + dt)), 1, grid.n_theta),
            std::clamp(static_cast<int>(std::lround(center.psi + dp)), 1, grid.n_psi),
        };
        if (existing.contains(g) || std::find(accepted.begin(), accepted.end(), g) != accepted.end()) continue;
        accepted.push_back(g);
    }
    return accepted;
}

/// Gate bookkeeping carried across steps of one campaign. The trigger compares
/// against `reference_variance`, which starts at the prior variance and is
/// reset to the current variance after each refinement.
struct RefinementState {
    double reference_variance = 0.0;
    int refinements_used = 0;
};

using CostOracle = std::function<double(int theta, int psi, Fidelity fidelity)>;

struct RefineResult {
    TrainingSet training;
    RefinementState state;
    bool refit = false;
    std::optional<GridPoint> center;
    std::vector<GridPoint> proposals;
    std::optional<SensitivityReport> sensitivity;
};

template <typename Rng>
RefineResult maybe_refine(const RefinementState& state, const TrainingSet& ts, const DiscreteDistribution& d,
                          const RefinementConfig& cfg, const GpModel& fitted, const IndexGrid& grid,
                          const CostOracle& oracle, Rng& rng) {
    RefineResult out{ts, state, false, std::nullopt, {}, std::nullopt};
    const auto stats = distribution_stats(d);
    if (!converged(state.reference_variance, stats.variance, cfg.variance_fraction)) return out;
    if (state.refinements_used >= cfg.max_refinements) return out;
    if (ts.size() < 3) return out;

    auto candidates = select_p68(ts, d, cfg.band_lower, cfg.band_upper);
    if (candidates.empty()) {
        // Nearest training theta to the MAP, lowest training index on ties.
        std::size_t nearest = 0;
        for (std::size_t i = 1; i < ts.size(); ++i) {
            if (std::abs(ts[i].theta - stats.map_index) < std::abs(ts[nearest].theta - stats.map_index)) nearest = i;
        }
        candidates.push_back(nearest);
    }

    auto report = loo_sensitivities(ts, candidates, fitted, grid);
    const GridPoint center = ts[report.argmax].location();
    auto proposals = propose_points(center, cfg, grid, ts, rng);
    for (const auto& g : proposals) {
        out.training.add({g.theta, g.psi, oracle(g.theta, g.psi, Fidelity::fine), Fidelity::fine});
    }
    out.state.refinements_used += 1;
    out.state.reference_variance = stats.variance;
    out.refit = !proposals.empty();
    out.center = center;
    out.proposals = std::move(proposals);
    out.sensitivity = std::move(report);
    return out;
}

}  // namespace smocu
