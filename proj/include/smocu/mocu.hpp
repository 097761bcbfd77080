#pragma once

// Mean objective cost of uncertainty: theta-specific and robust policies,
// MOCU under a distribution, expected-MOCU experiment selection and the
// Bayesian posterior update. Every argmin breaks ties to the lowest index.

#include "problem.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace smocu {

struct PolicyResult {
    int psi_index = 1;
    double expected_cost = 0.0;
};

struct ExperimentChoice {
    std::size_t x_index = 0;
    double expected_mocu = 0.0;
    /// Indexed by outcome position; empty where the outcome has zero probability.
    std::vector<std::optional<DiscreteDistribution>> per_outcome_posteriors;
    std::vector<double> outcome_probabilities;
};

namespace detail {

inline void check_dimensions(const CostMatrix& j, const DiscreteDistribution& d) {
    if (j.n_theta() != d.size()) {
        throw Error("cost matrix and distribution disagree on n_theta");
    }
}

// argmin over a vector, lowest index on ties; returns 0-based position.
template <typename Vec>
Eigen::Index argmin_lowest(const Vec& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) < v(best)) best = i;
    }
    return best;
}

}  // namespace detail

/// psi_theta = argmin_psi J(theta, psi) for every theta (1-based results).
inline std::vector<int> theta_specific_policies(const CostMatrix& j) {
    std::vector<int> out(static_cast<std::size_t>(j.n_theta()));
    for (int t = 0; t < j.n_theta(); ++t) {
        out[static_cast<std::size_t>(t)] = static_cast<int>(detail::argmin_lowest(j.values().row(t))) + 1;
    }
    return out;
}

inline PolicyResult robust_policy(const CostMatrix& j, const DiscreteDistribution& d) {
    detail::check_dimensions(j, d);
    const Eigen::Map<const Eigen::VectorXd> w(d.mass().data(), d.size());
    const Eigen::VectorXd expected = j.values().transpose() * w;
    const auto best = detail::argmin_lowest(expected);
    return {static_cast<int>(best) + 1, expected(best)};
}

/// Precomputed per-theta optimal costs J(theta, psi_theta), reusable across
/// many MOCU evaluations on the same cost matrix.
class MocuEvaluator {
   public:
    explicit MocuEvaluator(const CostMatrix& j) : j_(&j), row_min_(j.values().rowwise().minCoeff()) {}

    double operator()(const DiscreteDistribution& d) const {
        detail::check_dimensions(*j_, d);
        const Eigen::Map<const Eigen::VectorXd> w(d.mass().data(), d.size());
        const Eigen::VectorXd expected = j_->values().transpose() * w;
        const auto robust = detail::argmin_lowest(expected);
        // Sum_theta d(theta) [J(theta, psi_robust) - J(theta, psi_theta)], each term >= 0.
        return (j_->values().col(robust) - row_min_).dot(w);
    }

    const CostMatrix& cost() const { return *j_; }

   private:
    const CostMatrix* j_;
    Eigen::VectorXd row_min_;
};

inline double mocu(const CostMatrix& j, const DiscreteDistribution& d) { return MocuEvaluator(j)(d); }

/// Bayes rule: posterior(theta) proportional to likelihood(x, y, theta) * prior(theta).
inline DiscreteDistribution posterior_update(const DiscreteDistribution& d, const ExperimentModel& em,
                                             std::size_t x, std::size_t y) {
    if (em.n_theta() != d.size()) {
        throw Error("posterior_update: experiment model and distribution disagree on n_theta");
    }
    if (x >= em.n_experiments() || y >= em.n_outcomes()) {
        throw BoundsError("posterior_update: experiment or outcome out of range");
    }
    const auto row = em.likelihood_row(x, y);
    std::vector<double> w(d.mass().size());
    double evidence = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = row(static_cast<Eigen::Index>(i)) * d.mass()[i];
        evidence += w[i];
    }
    if (!(evidence > 0.0)) {
        throw ImpossibleOutcomeError("posterior_update: outcome has zero evidence under the current belief");
    }
    return DiscreteDistribution::from_weights(std::move(w));
}

inline ExperimentChoice expected_mocu_of_experiment(const MocuEvaluator& eval, const DiscreteDistribution& d,
                                                    const ExperimentModel& em, std::size_t x) {
    if (x >= em.n_experiments()) {
        throw BoundsError("expected_mocu_of_experiment: experiment out of range");
    }
    ExperimentChoice c;
    c.x_index = x;
    c.per_outcome_posteriors.resize(em.n_outcomes());
    c.outcome_probabilities.resize(em.n_outcomes(), 0.0);
    for (std::size_t y = 0; y < em.n_outcomes(); ++y) {
        const auto row = em.likelihood_row(x, y);
        double p = 0.0;
        for (int t = 0; t < d.size(); ++t) p += row(t) * d.mass()[static_cast<std::size_t>(t)];
        c.outcome_probabilities[y] = p;
        if (!(p > 0.0)) continue;
        auto post = posterior_update(d, em, x, y);
        c.expected_mocu += p * eval(post);
        c.per_outcome_posteriors[y] = std::move(post);
    }
    return c;
}

inline ExperimentChoice expected_mocu_of_experiment(const CostMatrix& j, const DiscreteDistribution& d,
                                                    const ExperimentModel& em, std::size_t x) {
    return expected_mocu_of_experiment(MocuEvaluator(j), d, em, x);
}

/// x* = argmin_x E_y[MOCU(posterior_{x,y})].
inline ExperimentChoice select_experiment(const CostMatrix& j, const DiscreteDistribution& d,
                                          const ExperimentModel& em) {
    if (em.n_experiments() == 0) {
        throw Error("select_experiment: no experiments");
    }
    const MocuEvaluator eval(j);
    ExperimentChoice best = expected_mocu_of_experiment(eval, d, em, 0);
    for (std::size_t x = 1; x < em.n_experiments(); ++x) {
        auto c = expected_mocu_of_experiment(eval, d, em, x);
        if (c.expected_mocu < best.expected_mocu) best = std::move(c);
    }
    return best;
}

struct CampaignState {
    DiscreteDistribution posterior;
    int step = 0;
};

struct StepRecord {
    int step = 0;
    std::size_t x_index = 0;
    int x_theta = 0;  // experiment descriptor
    std::size_t y_index = 0;
    int y_label = 0;
    int psi_robust = 1;
    double true_cost = 0.0;
    DistributionStats posterior_stats;
    IndexInterval band68;
    IndexInterval band95;
    double expected_mocu = 0.0;
};

/// Draws an outcome from rho(. | x, theta_true).
template <typename Rng>
std::size_t simulate_outcome(const ExperimentModel& em, std::size_t x, int theta_true, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double draw = u(rng);
    double cdf = 0.0;
    std::size_t last_possible = 0;
    for (std::size_t y = 0; y < em.n_outcomes(); ++y) {
        const double p = em.likelihood(x, y, theta_true);
        if (p > 0.0) last_possible = y;
        cdf += p;
        if (draw < cdf) return y;
    }
    return last_possible;
}

/// One sequential-design step: pick x*, simulate its outcome at theta_true,
/// update the belief and score the resulting robust policy against the exact
/// costs at theta_true (`true_costs[psi - 1]`).
template <typename Rng>
StepRecord run_mocu_step(CampaignState& state, const CostMatrix& j, const ExperimentModel& em, int theta_true,
                         std::span<const double> true_costs, Rng& rng) {
    if (static_cast<int>(true_costs.size()) != j.n_psi()) {
        throw Error("run_mocu_step: true cost row has wrong length");
    }
    const auto choice = select_experiment(j, state.posterior, em);
    const std::size_t y = simulate_outcome(em, choice.x_index, theta_true, rng);
    state.posterior = posterior_update(state.posterior, em, choice.x_index, y);
    state.step += 1;

    StepRecord r;
    r.step = state.step;
    r.x_index = choice.x_index;
    r.x_theta = em.experiments()[choice.x_index];
    r.y_index = y;
    r.y_label = em.outcomes()[y];
    r.psi_robust = robust_policy(j, state.posterior).psi_index;
    r.true_cost = true_costs[static_cast<std::size_t>(r.psi_robust - 1)];
    r.posterior_stats = distribution_stats(state.posterior);
    r.band68 = percentile_interval(state.posterior, 0.16, 0.84);
    r.band95 = percentile_interval(state.posterior, 0.025, 0.975);
    r.expected_mocu = choice.expected_mocu;
    return r;
}

}  // namespace smocu
