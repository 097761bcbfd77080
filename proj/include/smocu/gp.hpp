#pragma once

// Gaussian-process surrogate for the design-cost matrix.
//
// Inputs are raw (theta, psi) grid indices with one lengthscale per axis;
// targets are centered by their mean before conditioning and the mean is
// added back on prediction. Hyperparameters are fitted by projected
// gradient ascent on the log marginal likelihood in log-parameter space.

#include "problem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace smocu {

enum class MaternNu { half, three_halves, five_halves };

inline double nu_value(MaternNu nu) {
    switch (nu) {
        case MaternNu::half: return 0.5;
        case MaternNu::three_halves: return 1.5;
        case MaternNu::five_halves: return 2.5;
    }
    return 2.5;
}

inline MaternNu nu_from_value(double v) {
    if (v == 0.5) return MaternNu::half;
    if (v == 1.5) return MaternNu::three_halves;
    if (v == 2.5) return MaternNu::five_halves;
    throw Error("Matern nu must be one of 0.5, 1.5, 2.5");
}

inline constexpr double kNoiseFloor = 1e-10;

struct KernelParams {
    double signal_variance = 1.0;
    double lengthscale_theta = 1.0;
    double lengthscale_psi = 1.0;
    MaternNu nu = MaternNu::five_halves;
    double noise_variance = kNoiseFloor;

    void validate() const {
        if (!(signal_variance > 0.0) || !(lengthscale_theta > 0.0) || !(lengthscale_psi > 0.0)) {
            throw Error("KernelParams: variance and lengthscales must be positive");
        }
        if (!(noise_variance >= kNoiseFloor)) {
            throw Error("KernelParams: noise variance below jitter floor");
        }
    }

    bool operator==(const KernelParams&) const = default;
};

/// Matern covariance at scaled distance r (already divided by lengthscales).
inline double matern_kernel(double r, const KernelParams& p) {
    switch (p.nu) {
        case MaternNu::half:
            return p.signal_variance * std::exp(-r);
        case MaternNu::three_halves: {
            const double s = std::sqrt(3.0) * r;
            return p.signal_variance * (1.0 + s) * std::exp(-s);
        }
        case MaternNu::five_halves: {
            const double s = std::sqrt(5.0) * r;
            return p.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
    }
    return 0.0;
}

inline double scaled_distance(GridPoint a, GridPoint b, const KernelParams& p) {
    const double dt = static_cast<double>(a.theta - b.theta) / p.lengthscale_theta;
    const double dp = static_cast<double>(a.psi - b.psi) / p.lengthscale_psi;
    return std::sqrt(dt * dt + dp * dp);
}

inline double kernel(GridPoint a, GridPoint b, const KernelParams& p) {
    return matern_kernel(scaled_distance(a, b, p), p);
}

namespace detail {

// d k / d log(lengthscale) for one axis, where axis_sq = (delta / lengthscale)^2.
inline double kernel_dlog_lengthscale(double r, double axis_sq, const KernelParams& p) {
    switch (p.nu) {
        case MaternNu::half:
            return r > 0.0 ? p.signal_variance * std::exp(-r) * axis_sq / r : 0.0;
        case MaternNu::three_halves:
            return 3.0 * p.signal_variance * std::exp(-std::sqrt(3.0) * r) * axis_sq;
        case MaternNu::five_halves: {
            const double s = std::sqrt(5.0) * r;
            return (5.0 / 3.0) * p.signal_variance * (1.0 + s) * std::exp(-s) * axis_sq;
        }
    }
    return 0.0;
}

inline std::vector<GridPoint> locations(const TrainingSet& ts) {
    std::vector<GridPoint> out;
    out.reserve(ts.size());
    for (const auto& p : ts) out.push_back(p.location());
    return out;
}

inline Eigen::VectorXd targets(const TrainingSet& ts) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ts.size()));
    for (std::size_t i = 0; i < ts.size(); ++i) y(static_cast<Eigen::Index>(i)) = ts[i].cost;
    return y;
}

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

// Factorizes gram + (noise + jitter) I. Jitter starts at zero, then
// 1e-10 * signal_variance, growing tenfold up to 1e-4 * signal_variance.
inline Factorization factorize(const Eigen::MatrixXd& gram, const KernelParams& p) {
    std::vector<double> schedule{0.0};
    for (double j = 1e-10; j <= 1e-4 * (1.0 + 1e-9); j *= 10.0) schedule.push_back(j * p.signal_variance);
    for (double jitter : schedule) {
        Eigen::MatrixXd k = gram;
        k.diagonal().array() += p.noise_variance + jitter;
        Factorization f{Eigen::LLT<Eigen::MatrixXd>(k), jitter};
        if (f.llt.info() == Eigen::Success && f.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
            return f;
        }
    }
    throw SingularKernelError("kernel Gram matrix not positive definite after jitter escalation");
}

}  // namespace detail

/// Signal part of the Gram matrix (no noise term). Symmetric by construction.
inline Eigen::MatrixXd gram_matrix(const std::vector<GridPoint>& x, const KernelParams& p) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = p.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)], p);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// Gradient components are ordered (log signal_variance, log lengthscale_theta,
/// log lengthscale_psi, log noise_variance).
struct LmlResult {
    double value = 0.0;
    std::array<double, 4> gradient{};
};

/// Log marginal likelihood of `y` (taken as given, no centering).
inline LmlResult log_marginal_likelihood(const std::vector<GridPoint>& x, const Eigen::VectorXd& y,
                                         const KernelParams& p) {
    p.validate();
    if (x.empty()) {
        throw Error("log_marginal_likelihood: empty training set");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::MatrixXd gram = gram_matrix(x, p);
    const auto fac = detail::factorize(gram, p);
    const Eigen::VectorXd alpha = fac.llt.solve(y);

    LmlResult out;
    const double log_det = 2.0 * fac.llt.matrixLLT().diagonal().array().log().sum();
    out.value = -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    const Eigen::MatrixXd k_inv = fac.llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd w = alpha * alpha.transpose() - k_inv;

    double g_sig = 0.0, g_lt = 0.0, g_lp = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        g_sig += 0.5 * w(i, i) * gram(i, i);
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto& a = x[static_cast<std::size_t>(i)];
            const auto& b = x[static_cast<std::size_t>(j)];
            const double at = static_cast<double>(a.theta - b.theta) / p.lengthscale_theta;
            const double ap = static_cast<double>(a.psi - b.psi) / p.lengthscale_psi;
            const double r = std::sqrt(at * at + ap * ap);
            // Off-diagonal pairs appear twice in the trace.
            g_sig += w(i, j) * gram(i, j);
            g_lt += w(i, j) * detail::kernel_dlog_lengthscale(r, at * at, p);
            g_lp += w(i, j) * detail::kernel_dlog_lengthscale(r, ap * ap, p);
        }
    }
    out.gradient = {g_sig, g_lt, g_lp, 0.5 * p.noise_variance * w.trace()};
    return out;
}

/// Log marginal likelihood of the mean-centered training targets; this is the
/// objective fit() maximizes.
inline LmlResult log_marginal_likelihood(const TrainingSet& ts, const KernelParams& p) {
    if (ts.empty()) {
        throw Error("log_marginal_likelihood: empty training set");
    }
    Eigen::VectorXd y = detail::targets(ts);
    y.array() -= y.mean();
    return log_marginal_likelihood(detail::locations(ts), y, p);
}

struct GpSettings {
    MaternNu nu = MaternNu::five_halves;
    int restarts = 4;
    int max_iterations = 200;
    double gradient_tolerance = 1e-5;
};

class GpModel;
GpModel fit(const TrainingSet& ts, const IndexGrid& grid, const GpSettings& settings, std::uint64_t seed);

/// A GP conditioned on a training set with fixed hyperparameters.
class GpModel {
   public:
    /// Conditions on `ts` with the given hyperparameters and prior mean offset.
    static GpModel condition(const TrainingSet& ts, const KernelParams& params, double target_mean) {
        params.validate();
        if (ts.empty()) {
            throw Error("GpModel: empty training set");
        }
        GpModel m;
        m.training_ = ts;
        m.params_ = params;
        m.target_mean_ = target_mean;
        m.x_ = detail::locations(ts);
        const Eigen::MatrixXd gram = gram_matrix(m.x_, params);
        auto fac = detail::factorize(gram, params);
        m.jitter_ = fac.jitter;
        Eigen::VectorXd y = detail::targets(ts);
        y.array() -= target_mean;
        m.weights_ = fac.llt.solve(y);
        return m;
    }

    /// Conditions on `ts`, centering by its own target mean.
    static GpModel condition(const TrainingSet& ts, const KernelParams& params) {
        return condition(ts, params, detail::targets(ts).mean());
    }

    double predict(GridPoint g) const {
        double acc = target_mean_;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            acc += kernel(g, x_[i], params_) * weights_(static_cast<Eigen::Index>(i));
        }
        return acc;
    }

    CostMatrix predict_mean(const IndexGrid& grid) const {
        return CostMatrix::tabulate(grid, [this](int t, int p) { return predict({t, p}); },
                                    Provenance::surrogate);
    }

    const TrainingSet& training() const { return training_; }
    const KernelParams& params() const { return params_; }
    double target_mean() const { return target_mean_; }
    /// Extra diagonal jitter the factorization needed beyond the noise term.
    double jitter() const { return jitter_; }
    double log_likelihood() const { return log_likelihood_; }

   private:
    friend GpModel fit(const TrainingSet&, const IndexGrid&, const GpSettings&, std::uint64_t);

    TrainingSet training_;
    std::vector<GridPoint> x_;
    KernelParams params_;
    double target_mean_ = 0.0;
    double jitter_ = 0.0;
    double log_likelihood_ = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd weights_;
};

inline CostMatrix predict_mean(const GpModel& m, const IndexGrid& grid) { return m.predict_mean(grid); }

namespace detail {

struct LogBox {
    std::array<double, 4> lo{};
    std::array<double, 4> hi{};

    std::array<double, 4> clamp(std::array<double, 4> v) const {
        for (std::size_t i = 0; i < 4; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
        return v;
    }
};

inline KernelParams from_log(const std::array<double, 4>& phi, MaternNu nu) {
    KernelParams p;
    p.signal_variance = std::exp(phi[0]);
    p.lengthscale_theta = std::exp(phi[1]);
    p.lengthscale_psi = std::exp(phi[2]);
    p.noise_variance = std::max(kNoiseFloor, std::exp(phi[3]));
    p.nu = nu;
    return p;
}

}  // namespace detail

/// Fits hyperparameters by multi-start projected gradient ascent on the log
/// marginal likelihood and returns the best restart's conditioned model.
///
/// Restart i draws its log-uniform starting point from the i-th block of the
/// seeded stream, so k restarts always include the 1-restart run.
inline GpModel fit(const TrainingSet& ts, const IndexGrid& grid, const GpSettings& settings, std::uint64_t seed) {
    if (ts.size() < 2) {
        throw Error("fit: need at least two training points");
    }
    if (settings.restarts < 1) {
        throw Error("fit: restarts must be >= 1");
    }
    ts.validate(grid);

    const auto x = detail::locations(ts);
    Eigen::VectorXd y = detail::targets(ts);
    const double mean = y.mean();
    y.array() -= mean;
    const double var = y.squaredNorm() / static_cast<double>(y.size());
    const double scale = var > 0.0 ? var : 1.0;

    // Search box in log space.
    detail::LogBox box;
    box.lo = {std::log(1e-4 * scale), std::log(0.1), std::log(0.1), std::log(kNoiseFloor)};
    box.hi = {std::log(1e4 * scale), std::log(10.0 * grid.n_theta), std::log(10.0 * grid.n_psi),
              std::log(std::max(scale, kNoiseFloor))};

    std::mt19937_64 rng(seed);
    auto log_uniform = [&rng](double a, double b) {
        std::uniform_real_distribution<double> u(std::log(a), std::log(b));
        return u(rng);
    };

    struct Eval {
        bool ok = false;
        double value = -std::numeric_limits<double>::infinity();
        std::array<double, 4> grad{};
    };
    auto evaluate = [&](const std::array<double, 4>& phi) {
        try {
            const auto r = log_marginal_likelihood(x, y, detail::from_log(phi, settings.nu));
            if (!std::isfinite(r.value)) return Eval{};
            return Eval{true, r.value, r.gradient};
        } catch (const SingularKernelError&) {
            return Eval{};
        }
    };

    std::optional<std::array<double, 4>> best_phi;
    double best_value = -std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < settings.restarts; ++restart) {
        std::array<double, 4> phi{
            log_uniform(0.01 * scale, 10.0 * scale),
            log_uniform(1.0, std::max(1.0, grid.n_theta / 2.0)),
            log_uniform(1.0, std::max(1.0, grid.n_psi / 2.0)),
            log_uniform(std::max(kNoiseFloor, 1e-8 * scale), std::max(kNoiseFloor, 1e-2 * scale)),
        };
        phi = box.clamp(phi);
        Eval cur = evaluate(phi);
        if (!cur.ok) continue;

        double step = 0.1;
        for (int it = 0; it < settings.max_iterations; ++it) {
            // Project out components pushing against an active bound.
            std::array<double, 4> g = cur.grad;
            double g_inf = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                if ((phi[i] <= box.lo[i] && g[i] < 0.0) || (phi[i] >= box.hi[i] && g[i] > 0.0)) g[i] = 0.0;
                g_inf = std::max(g_inf, std::abs(g[i]));
            }
            if (g_inf <= settings.gradient_tolerance) break;

            bool accepted = false;
            double trial = std::min(step, 1.0 / g_inf);
            while (trial >= 1e-12) {
                std::array<double, 4> cand{};
                double ascent = 0.0;
                for (std::size_t i = 0; i < 4; ++i) cand[i] = phi[i] + trial * g[i];
                cand = box.clamp(cand);
                for (std::size_t i = 0; i < 4; ++i) ascent += g[i] * (cand[i] - phi[i]);
                Eval next = evaluate(cand);
                if (next.ok && next.value >= cur.value + 1e-4 * ascent) {
                    phi = cand;
                    cur = next;
                    accepted = true;
                    break;
                }
                trial *= 0.5;
            }
            if (!accepted) break;
            step = 2.0 * trial;
        }

        if (cur.value > best_value) {
            best_value = cur.value;
            best_phi = phi;
        }
    }

    if (!best_phi) {
        throw SingularKernelError("fit: every restart failed to factorize the kernel");
    }
    GpModel m = GpModel::condition(ts, detail::from_log(*best_phi, settings.nu), mean);
    m.log_likelihood_ = best_value;
    return m;
}

/// Full-grid mean prediction with training point `omit_index` removed and the
/// hyperparameters and prior mean offset held fixed.
inline CostMatrix refit_without(const TrainingSet& ts, std::size_t omit_index, const KernelParams& frozen_params,
                                double frozen_target_mean, const IndexGrid& grid) {
    if (ts.size() < 3) {
        throw Error("refit_without: need at least three training points");
    }
    if (omit_index >= ts.size()) {
        throw BoundsError("refit_without: omit index out of range");
    }
    return GpModel::condition(ts.without(omit_index), frozen_params, frozen_target_mean).predict_mean(grid);
}

}  // namespace smocu
