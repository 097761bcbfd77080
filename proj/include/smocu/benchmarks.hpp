#pragma once

// Ground-truth cost models: a fabricated surface with a long ridge of local
// minima and one isolated global minimum, its cheap/expensive fidelity pair,
// and a coupled spring-mass-damper chain scored by frequency response.

#include "problem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace smocu {

// ---------------------------------------------------------------------------
// Fabricated surface
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    int n_theta = 64;
    int n_psi = 64;

    IndexGrid grid() const { return {n_theta, n_psi}; }
    int theta_true() const { return n_theta / 4; }
};

namespace synthetic_terms {

/// Ridge term, in [1, 2].
inline double j1(int theta, int psi, const SyntheticSpec& s) {
    const double t = theta, p = psi, nt = s.n_theta, np = s.n_psi;
    const double centre = t * t / (2.0 * nt * nt);
    const double width = (nt + np) / 8.0;
    const double z = (p - centre) / width;
    return 2.0 - std::exp(-0.5 * z * z);
}

inline double j2(int psi, const SyntheticSpec& s) {
    const double z = (psi - 0.75 * s.n_psi) / (s.n_psi / 16.0);
    return std::exp(-0.5 * z * z);
}

inline double j3(int theta, const SyntheticSpec& s) {
    const double z = (theta - 0.25 * s.n_theta) / (s.n_theta / 8.0);
    return std::exp(-0.5 * z * z);
}

}  // namespace synthetic_terms

/// J = J1 (1 - J2 J3).
inline double synthetic_cost(int theta, int psi, const SyntheticSpec& s) {
    using namespace synthetic_terms;
    return j1(theta, psi, s) * (1.0 - j2(psi, s) * j3(theta, s));
}

/// Cheap model: the ridge term alone, blind to the isolated minimum.
inline double coarse_cost(int theta, int psi, const SyntheticSpec& s) { return synthetic_terms::j1(theta, psi, s); }

/// Point experiments at theta = 4k with binary outcomes and a Gaussian
/// detection likelihood of width n_theta / 8.
inline ExperimentModel gaussian_detection_model(int n_theta, int n_experiments = 16) {
    if (n_theta % 4 != 0) {
        throw Error("experiment model: n_theta must be divisible by 4");
    }
    const double sigma = n_theta / 8.0;
    std::vector<int> xs;
    for (int k = 1; k <= n_experiments; ++k) xs.push_back(4 * k);
    for (int x : xs) {
        if (x > n_theta) throw Error("experiment model: experiment location beyond n_theta");
    }
    auto like = [xs, sigma](std::size_t x, std::size_t y, int theta) {
        const double z = (xs[x] - theta) / sigma;
        const double hit = std::exp(-0.5 * z * z);
        return y == 1 ? hit : 1.0 - hit;
    };
    return ExperimentModel(xs, {0, 1}, n_theta, like, sigma);
}

inline ExperimentModel synthetic_experiment_model(const SyntheticSpec& s) { return gaussian_detection_model(s.n_theta); }

// ---------------------------------------------------------------------------
// Spring-mass-damper chain
// ---------------------------------------------------------------------------

struct SpringSpec {
    int n_springs = 16;
    double mass = 1.0;
    double damping = 0.125;
    double stiffness_floor = 0.1;
    double noise_halfwidth = 0.1;
    int n_theta = 64;
    int n_psi = 64;
    double omega_min = 0.03;
    double omega_max = 0.1;
    /// Row theta-1 holds the n_springs stiffnesses for class member theta.
    Eigen::MatrixXd stiffness_table;

    IndexGrid grid() const { return {n_theta, n_psi}; }
    int theta_true() const { return 3 * n_theta / 4; }
};

/// Fills the stiffness table: k = max(floor, 0.1 + 0.9 theta / n_theta + eta),
/// eta ~ U[-h, h] drawn per (theta, spring) in row-major order.
inline SpringSpec build_spring_class(SpringSpec spec, std::uint64_t seed) {
    if (spec.n_springs < 1 || spec.n_theta < 1) {
        throw Error("build_spring_class: need at least one spring and one class member");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> eta(-spec.noise_halfwidth, spec.noise_halfwidth);
    spec.stiffness_table.resize(spec.n_theta, spec.n_springs);
    for (int t = 1; t <= spec.n_theta; ++t) {
        const double level = 0.1 + 0.9 * t / static_cast<double>(spec.n_theta);
        for (int i = 0; i < spec.n_springs; ++i) {
            const double noise = spec.noise_halfwidth > 0.0 ? eta(rng) : 0.0;
            spec.stiffness_table(t - 1, i) = std::max(spec.stiffness_floor, level + noise);
        }
    }
    return spec;
}

struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

/// First-order form of the chain: state (x, v), force on mass 1, output the
/// mean displacement. Spring/damper i connects mass i to mass i-1 (the wall
/// for i = 1).
inline StateSpace state_space(const Eigen::VectorXd& k, const SpringSpec& spec) {
    const auto n = k.size();
    if (n != spec.n_springs) {
        throw Error("state_space: stiffness vector length must equal n_springs");
    }
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(n, spec.damping);
    Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd a3 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Element i couples mass i to mass i-1; element i+1 couples it to i+1.
        a2(i, i) -= k(i);
        a3(i, i) -= d(i);
        if (i > 0) {
            a2(i, i - 1) += k(i);
            a3(i, i - 1) += d(i);
        }
        if (i + 1 < n) {
            a2(i, i) -= k(i + 1);
            a2(i, i + 1) += k(i + 1);
            a3(i, i) -= d(i + 1);
            a3(i, i + 1) += d(i + 1);
        }
    }
    a2 /= spec.mass;
    a3 /= spec.mass;

    StateSpace ss;
    ss.a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    ss.a.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    ss.a.bottomLeftCorner(n, n) = a2;
    ss.a.bottomRightCorner(n, n) = a3;
    ss.b = Eigen::VectorXd::Zero(2 * n);
    ss.b(n) = 1.0 / spec.mass;
    ss.c = Eigen::VectorXd::Zero(2 * n);
    ss.c.head(n).setConstant(1.0 / static_cast<double>(n));
    return ss;
}

/// |c^T (i omega I - A)^{-1} b| via one complex LU solve.
inline double transfer_magnitude(const StateSpace& ss, double omega) {
    using Cd = std::complex<double>;
    Eigen::MatrixXcd sys = -ss.a.cast<Cd>();
    sys.diagonal().array() += Cd(0.0, omega);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys);
    if (!(lu.rcond() > 1e-14)) {
        throw SingularSystemError("transfer_magnitude: (i omega I - A) is singular");
    }
    const Eigen::VectorXcd z = lu.solve(ss.b.cast<Cd>());
    return std::abs(ss.c.cast<Cd>().dot(z));
}

/// Log-spaced forcing frequency for action psi.
inline double omega_map(int psi, int n_psi, double omega_min = 0.03, double omega_max = 0.1) {
    if (psi < 1 || psi > n_psi) {
        throw BoundsError("omega_map: psi out of range");
    }
    if (psi == 1) return omega_min;
    if (psi == n_psi) return omega_max;
    const double frac = static_cast<double>(psi - 1) / static_cast<double>(n_psi - 1);
    return omega_min * std::pow(omega_max / omega_min, frac);
}

/// Frequency-response cost J(theta, psi) = max_psi' |H| - |H(psi)|, with the
/// full magnitude table tabulated once at construction.
class SpringBenchmark {
   public:
    explicit SpringBenchmark(SpringSpec spec) : spec_(std::move(spec)) {
        if (spec_.stiffness_table.rows() != spec_.n_theta || spec_.stiffness_table.cols() != spec_.n_springs) {
            throw Error("SpringBenchmark: stiffness table not built");
        }
        magnitude_.resize(spec_.n_theta, spec_.n_psi);
        for (int t = 1; t <= spec_.n_theta; ++t) {
            const auto ss = state_space(spec_.stiffness_table.row(t - 1).transpose(), spec_);
            for (int p = 1; p <= spec_.n_psi; ++p) {
                magnitude_(t - 1, p - 1) =
                    transfer_magnitude(ss, omega_map(p, spec_.n_psi, spec_.omega_min, spec_.omega_max));
            }
        }
        row_max_ = magnitude_.rowwise().maxCoeff();
    }

    double cost(int theta, int psi) const {
        if (!spec_.grid().contains(theta, psi)) {
            throw BoundsError("spring_cost: index out of range");
        }
        return row_max_(theta - 1) - magnitude_(theta - 1, psi - 1);
    }
    double magnitude(int theta, int psi) const { return magnitude_(theta - 1, psi - 1); }

    const SpringSpec& spec() const { return spec_; }

   private:
    SpringSpec spec_;
    Eigen::MatrixXd magnitude_;
    Eigen::VectorXd row_max_;
};

inline double spring_cost(int theta, int psi, const SpringBenchmark& bench) { return bench.cost(theta, psi); }

struct BodePoint {
    double omega = 0.0;
    double magnitude = 0.0;
};

/// Magnitude response over a log-spaced frequency grid.
inline std::vector<BodePoint> bode_sweep(const StateSpace& ss, double omega_lo, double omega_hi, int points) {
    if (points < 2 || !(omega_lo > 0.0) || !(omega_hi > omega_lo)) {
        throw Error("bode_sweep: need >= 2 points over a positive increasing range");
    }
    std::vector<BodePoint> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double w = i + 1 == points ? omega_hi
                                         : omega_lo * std::pow(omega_hi / omega_lo, i / static_cast<double>(points - 1));
        out.push_back({w, transfer_magnitude(ss, w)});
    }
    return out;
}

}  // namespace smocu
