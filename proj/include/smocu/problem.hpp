#pragma once

// Discrete problem definition shared by every other header: the
// uncertainty-class / action grids, probability mass functions over the
// uncertainty class, cost matrices, experiment models and training sets.
//
// All theta and psi references are 1-based grid indices. Experiments and
// outcomes are addressed by their 0-based position in the model.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smocu {

class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
   public:
    using Error::Error;
};

class SingularKernelError : public Error {
   public:
    using Error::Error;
};

class ImpossibleOutcomeError : public Error {
   public:
    using Error::Error;
};

class SingularSystemError : public Error {
   public:
    using Error::Error;
};

struct IndexGrid {
    int n_theta = 1;
    int n_psi = 1;

    IndexGrid() = default;
    IndexGrid(int theta_count, int psi_count) : n_theta(theta_count), n_psi(psi_count) {
        if (n_theta < 1 || n_psi < 1) {
            throw Error("IndexGrid: counts must be >= 1");
        }
    }

    bool contains_theta(int theta) const { return theta >= 1 && theta <= n_theta; }
    bool contains_psi(int psi) const { return psi >= 1 && psi <= n_psi; }
    bool contains(int theta, int psi) const { return contains_theta(theta) && contains_psi(psi); }
    int size() const { return n_theta * n_psi; }

    bool operator==(const IndexGrid&) const = default;
};

struct GridPoint {
    int theta = 1;
    int psi = 1;

    bool operator==(const GridPoint&) const = default;
};

/// Probability mass over Theta = {1..n_theta}. Always normalized and
/// non-negative; construct through from_weights() or the checked constructor.
class DiscreteDistribution {
   public:
    static constexpr double kSumTolerance = 1e-12;

    DiscreteDistribution() = default;

    explicit DiscreteDistribution(std::vector<double> mass) : mass_(std::move(mass)) {
        if (mass_.empty()) {
            throw Error("DiscreteDistribution: empty mass vector");
        }
        double total = 0.0;
        for (double m : mass_) {
            if (!(m >= 0.0) || !std::isfinite(m)) {
                throw Error("DiscreteDistribution: masses must be finite and non-negative");
            }
            total += m;
        }
        if (std::abs(total - 1.0) > kSumTolerance) {
            throw Error("DiscreteDistribution: masses do not sum to 1");
        }
    }

    /// Normalizes arbitrary non-negative weights.
    static DiscreteDistribution from_weights(std::vector<double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw Error("DiscreteDistribution: weights must be finite and non-negative");
            }
            total += w;
        }
        if (!(total > 0.0)) {
            throw Error("DiscreteDistribution: weights have zero total");
        }
        for (double& w : weights) {
            w /= total;
        }
        return DiscreteDistribution(std::move(weights));
    }

    static DiscreteDistribution point_mass(int n_theta, int theta) {
        if (theta < 1 || theta > n_theta) {
            throw BoundsError("point_mass: theta out of range");
        }
        std::vector<double> m(static_cast<std::size_t>(n_theta), 0.0);
        m[static_cast<std::size_t>(theta - 1)] = 1.0;
        return DiscreteDistribution(std::move(m));
    }

    int size() const { return static_cast<int>(mass_.size()); }
    /// Mass at 1-based theta.
    double operator()(int theta) const { return mass_[static_cast<std::size_t>(theta - 1)]; }
    const std::vector<double>& mass() const { return mass_; }

    bool operator==(const DiscreteDistribution&) const = default;

   private:
    std::vector<double> mass_;
};

inline DiscreteDistribution make_uniform_prior(const IndexGrid& grid) {
    return DiscreteDistribution::from_weights(
        std::vector<double>(static_cast<std::size_t>(grid.n_theta), 1.0));
}

struct DistributionStats {
    double mean = 0.0;
    double variance = 0.0;
    int map_index = 1;
};

/// Index-space moments and the MAP index (lowest index wins ties).
inline DistributionStats distribution_stats(const DiscreteDistribution& d) {
    DistributionStats s;
    const auto& m = d.mass();
    double best = -1.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        s.mean += static_cast<double>(i + 1) * m[i];
        if (m[i] > best) {
            best = m[i];
            s.map_index = static_cast<int>(i + 1);
        }
    }
    // Two-pass form: exactly zero for a point mass, never negative.
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double dev = static_cast<double>(i + 1) - s.mean;
        s.variance += dev * dev * m[i];
    }
    return s;
}

struct IndexInterval {
    int lo = 1;
    int hi = 1;

    bool contains(int theta) const { return theta >= lo && theta <= hi; }
    bool operator==(const IndexInterval&) const = default;
};

/// Smallest index whose CDF reaches each quantile. The CDF comparison allows
/// a 1e-12 slack so that accumulated rounding never skips the exact index.
inline IndexInterval percentile_interval(const DiscreteDistribution& d, double lower_q, double upper_q) {
    if (!(lower_q >= 0.0 && lower_q < upper_q && upper_q <= 1.0)) {
        throw Error("percentile_interval: require 0 <= lower_q < upper_q <= 1");
    }
    constexpr double slack = 1e-12;
    const auto& m = d.mass();
    const int n = d.size();
    auto first_reaching = [&](double q) {
        double cdf = 0.0;
        for (int i = 0; i < n; ++i) {
            cdf += m[static_cast<std::size_t>(i)];
            if (cdf >= q - slack) {
                return i + 1;
            }
        }
        return n;
    };
    return {first_reaching(lower_q), first_reaching(upper_q)};
}

enum class Provenance { exact, surrogate };

/// n_theta x n_psi matrix of design costs, addressed with 1-based indices.
class CostMatrix {
   public:
    CostMatrix() = default;
    CostMatrix(Eigen::MatrixXd values, Provenance provenance)
        : values_(std::move(values)), provenance_(provenance) {
        if (values_.rows() < 1 || values_.cols() < 1) {
            throw Error("CostMatrix: empty matrix");
        }
        if (!values_.allFinite()) {
            throw Error("CostMatrix: non-finite entry");
        }
    }

    /// Tabulates f(theta, psi) over the whole grid.
    template <typename F>
    static CostMatrix tabulate(const IndexGrid& grid, F&& f, Provenance provenance) {
        Eigen::MatrixXd v(grid.n_theta, grid.n_psi);
        for (int t = 1; t <= grid.n_theta; ++t) {
            for (int p = 1; p <= grid.n_psi; ++p) {
                v(t - 1, p - 1) = f(t, p);
            }
        }
        return CostMatrix(std::move(v), provenance);
    }

    int n_theta() const { return static_cast<int>(values_.rows()); }
    int n_psi() const { return static_cast<int>(values_.cols()); }
    IndexGrid grid() const { return {n_theta(), n_psi()}; }
    double operator()(int theta, int psi) const { return values_(theta - 1, psi - 1); }
    const Eigen::MatrixXd& values() const { return values_; }
    Provenance provenance() const { return provenance_; }

   private:
    Eigen::MatrixXd values_;
    Provenance provenance_ = Provenance::exact;
};

/// Candidate experiments X, outcome labels Y, and a tabulated likelihood
/// rho(y | x, theta). Tables are validated once at construction.
class ExperimentModel {
   public:
    static constexpr double kNormalizationTolerance = 1e-12;

    using Likelihood = std::function<double(std::size_t x_pos, std::size_t y_pos, int theta)>;

    ExperimentModel() = default;

    ExperimentModel(std::vector<int> experiments, std::vector<int> outcomes, int n_theta,
                    const Likelihood& likelihood, double sigma_x = 0.0)
        : experiments_(std::move(experiments)), outcomes_(std::move(outcomes)), n_theta_(n_theta),
          sigma_x_(sigma_x) {
        if (experiments_.empty() || outcomes_.empty() || n_theta_ < 1) {
            throw Error("ExperimentModel: empty experiment, outcome or theta set");
        }
        tables_.reserve(experiments_.size());
        for (std::size_t x = 0; x < experiments_.size(); ++x) {
            Eigen::MatrixXd table(static_cast<Eigen::Index>(outcomes_.size()), n_theta_);
            for (std::size_t y = 0; y < outcomes_.size(); ++y) {
                for (int t = 1; t <= n_theta_; ++t) {
                    const double l = likelihood(x, y, t);
                    if (!(l >= 0.0 && l <= 1.0)) {
                        throw Error("ExperimentModel: likelihood outside [0,1]");
                    }
                    table(static_cast<Eigen::Index>(y), t - 1) = l;
                }
            }
            for (int t = 0; t < n_theta_; ++t) {
                if (std::abs(table.col(t).sum() - 1.0) > kNormalizationTolerance) {
                    throw Error("ExperimentModel: likelihood does not sum to 1 over outcomes");
                }
            }
            tables_.push_back(std::move(table));
        }
    }

    std::size_t n_experiments() const { return experiments_.size(); }
    std::size_t n_outcomes() const { return outcomes_.size(); }
    int n_theta() const { return n_theta_; }
    double sigma_x() const { return sigma_x_; }
    const std::vector<int>& experiments() const { return experiments_; }
    const std::vector<int>& outcomes() const { return outcomes_; }

    double likelihood(std::size_t x_pos, std::size_t y_pos, int theta) const {
        return tables_.at(x_pos)(static_cast<Eigen::Index>(y_pos), theta - 1);
    }
    /// Row y of the table for experiment x: rho(y | x, theta) for theta = 1..n.
    auto likelihood_row(std::size_t x_pos, std::size_t y_pos) const {
        return tables_.at(x_pos).row(static_cast<Eigen::Index>(y_pos));
    }

   private:
    std::vector<int> experiments_;
    std::vector<int> outcomes_;
    int n_theta_ = 0;
    double sigma_x_ = 0.0;
    std::vector<Eigen::MatrixXd> tables_;
};

enum class Fidelity { coarse, fine };

inline const char* to_string(Fidelity f) { return f == Fidelity::coarse ? "coarse" : "fine"; }

struct TrainingPoint {
    int theta = 1;
    int psi = 1;
    double cost = 0.0;
    Fidelity fidelity = Fidelity::fine;

    GridPoint location() const { return {theta, psi}; }
    bool operator==(const TrainingPoint&) const = default;
};

class TrainingSet {
   public:
    TrainingSet() = default;
    explicit TrainingSet(std::vector<TrainingPoint> points) : points_(std::move(points)) {}

    /// Throws BoundsError when any point lies outside the grid.
    void validate(const IndexGrid& grid) const {
        for (const auto& p : points_) {
            if (!grid.contains(p.theta, p.psi)) {
                throw BoundsError("TrainingSet: point outside grid");
            }
            if (!std::isfinite(p.cost)) {
                throw Error("TrainingSet: non-finite cost");
            }
        }
    }

    void add(TrainingPoint p) { points_.push_back(p); }
    bool contains(GridPoint g) const {
        return std::any_of(points_.begin(), points_.end(),
                           [&](const TrainingPoint& p) { return p.location() == g; });
    }
    TrainingSet without(std::size_t index) const {
        if (index >= points_.size()) {
            throw BoundsError("TrainingSet::without: index out of range");
        }
        std::vector<TrainingPoint> kept;
        kept.reserve(points_.size() - 1);
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (i != index) {
                kept.push_back(points_[i]);
            }
        }
        return TrainingSet(std::move(kept));
    }

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const TrainingPoint& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<TrainingPoint>& points() const { return points_; }
    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }

    std::size_t count(Fidelity f) const {
        return static_cast<std::size_t>(std::count_if(
            points_.begin(), points_.end(), [f](const TrainingPoint& p) { return p.fidelity == f; }));
    }

    bool operator==(const TrainingSet&) const = default;

   private:
    std::vector<TrainingPoint> points_;
};

}  // namespace smocu
