#include <catch_amalgamated.hpp>

#include "smocu/benchmarks.hpp"

#include <cmath>

using namespace smocu;
using Catch::Approx;

TEST_CASE("fabricated cost surface", "[benchmarks]") {
    const SyntheticSpec s;
    REQUIRE(s.theta_true() == 16);
    REQUIRE(synthetic_cost(16, 48, s) == 0.0);
    REQUIRE(synthetic_cost(16, 16, s) == Approx(1.3922847115996675).margin(1e-12));

    double best = 1e300;
    GridPoint at{};
    for (int t = 1; t <= 64; ++t) {
        for (int p = 1; p <= 64; ++p) {
            const double v = synthetic_cost(t, p, s);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 2.0);
            if (v < best) best = v, at = {t, p};
        }
    }
    REQUIRE(best == 0.0);
    REQUIRE(at == GridPoint{16, 48});
}

TEST_CASE("coarse model hides the isolated minimum", "[benchmarks]") {
    const SyntheticSpec s;
    REQUIRE(coarse_cost(16, 48, s) == Approx(1.988825741926824).margin(1e-12));

    int coarse_best = 1, fine_best = 1;
    for (int p = 2; p <= 64; ++p) {
        if (coarse_cost(16, p, s) < coarse_cost(16, coarse_best, s)) coarse_best = p;
        if (synthetic_cost(16, p, s) < synthetic_cost(16, fine_best, s)) fine_best = p;
    }
    REQUIRE(fine_best == 48);
    REQUIRE(coarse_best != fine_best);

    for (int t = 1; t <= 64; ++t) {
        for (int p = 1; p <= 64; ++p) {
            const double c = coarse_cost(t, p, s);
            REQUIRE(c >= 1.0);
            REQUIRE(c <= 2.0);
            if (synthetic_terms::j2(p, s) * synthetic_terms::j3(t, s) <= 1e-12) {
                REQUIRE(c == Approx(synthetic_cost(t, p, s)).margin(1e-11));
            }
        }
    }
}

TEST_CASE("detection experiment model", "[benchmarks]") {
    const auto em = synthetic_experiment_model(SyntheticSpec{});
    REQUIRE(em.n_experiments() == 16);
    REQUIRE(em.experiments().front() == 4);
    REQUIRE(em.experiments().back() == 64);
    REQUIRE(em.sigma_x() == 8.0);
    REQUIRE(em.likelihood(3, 1, 16) == 1.0);
    REQUIRE(em.likelihood(3, 1, 24) == Approx(std::exp(-0.5)).margin(1e-15));
    REQUIRE(em.likelihood(3, 1, 24) == Approx(0.6065).margin(1e-4));
    for (std::size_t x = 0; x < 16; ++x)
        for (int t = 1; t <= 64; ++t) REQUIRE(em.likelihood(x, 0, t) + em.likelihood(x, 1, t) == Approx(1.0).margin(1e-15));

    REQUIRE_THROWS_AS(gaussian_detection_model(62), Error);
}

TEST_CASE("spring stiffness class", "[benchmarks]") {
    SpringSpec spec;
    REQUIRE(spec.theta_true() == 48);

    const auto noisy = build_spring_class(spec, 17);
    REQUIRE(noisy.stiffness_table.rows() == 64);
    REQUIRE(noisy.stiffness_table.cols() == 16);
    REQUIRE(noisy.stiffness_table.minCoeff() >= 0.1);
    REQUIRE(build_spring_class(spec, 17).stiffness_table == noisy.stiffness_table);
    REQUIRE(build_spring_class(spec, 18).stiffness_table != noisy.stiffness_table);
    for (int t = 1; t <= 64; ++t) {
        const double level = 0.1 + 0.9 * t / 64.0;
        for (int i = 0; i < 16; ++i) REQUIRE(std::abs(noisy.stiffness_table(t - 1, i) - level) <= 0.1 + 1e-15);
    }

    spec.noise_halfwidth = 0.0;
    const auto clean = build_spring_class(spec, 17);
    for (int t = 1; t <= 64; ++t) {
        for (int i = 0; i < 16; ++i) REQUIRE(clean.stiffness_table(t - 1, i) == 0.1 + 0.9 * t / 64.0);
        if (t > 1) REQUIRE(clean.stiffness_table(t - 1, 0) > clean.stiffness_table(t - 2, 0));
    }
    REQUIRE(clean.stiffness_table(63, 5) == 1.0);
}

TEST_CASE("spring state space", "[benchmarks]") {
    SpringSpec one;
    one.n_springs = 1;
    const auto s1 = state_space(Eigen::VectorXd::Ones(1), one);
    Eigen::Matrix2d a1;
    a1 << 0, 1, -1, -0.125;
    REQUIRE(s1.a == a1);
    REQUIRE(s1.b == Eigen::Vector2d(0, 1));
    REQUIRE(s1.c == Eigen::Vector2d(1, 0));

    SpringSpec two;
    two.n_springs = 2;
    const auto s2 = state_space(Eigen::VectorXd::Ones(2), two);
    Eigen::Matrix2d a2, a3;
    a2 << -2, 1, 1, -1;
    a3 << -0.25, 0.125, 0.125, -0.125;
    REQUIRE(s2.a.bottomLeftCorner(2, 2) == a2);
    REQUIRE(s2.a.bottomRightCorner(2, 2) == a3);
    REQUIRE(s2.a.topLeftCorner(2, 2).isZero());
    REQUIRE(s2.a.topRightCorner(2, 2).isIdentity());
    REQUIRE(s2.c == Eigen::Vector4d(0.5, 0.5, 0, 0));

    REQUIRE_THROWS_AS(state_space(Eigen::VectorXd::Ones(3), two), Error);
}

TEST_CASE("transfer magnitude", "[benchmarks]") {
    SpringSpec one;
    one.n_springs = 1;
    const auto ss = state_space(Eigen::VectorXd::Ones(1), one);
    REQUIRE(transfer_magnitude(ss, 1.0) == Approx(8.0).epsilon(1e-12));
    REQUIRE(transfer_magnitude(ss, 1e-6) == Approx(1.0).epsilon(1e-9));
    REQUIRE(transfer_magnitude(ss, 1e4) < 1e-7);
    for (double w : {0.3, 0.7, 1.3, 2.0}) {
        const double analytic = 1.0 / std::abs(std::complex<double>(1.0 - w * w, 0.125 * w));
        REQUIRE(transfer_magnitude(ss, w) == Approx(analytic).epsilon(1e-12));
    }

    StateSpace undamped{Eigen::Matrix2d{{0, 1}, {-1, 0}}, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0)};
    REQUIRE_THROWS_AS(transfer_magnitude(undamped, 1.0), SingularSystemError);
}

TEST_CASE("frequency mapping", "[benchmarks]") {
    REQUIRE(omega_map(1, 64) == 0.03);
    REQUIRE(omega_map(64, 64) == 0.1);
    REQUIRE(omega_map(33, 65) == Approx(std::sqrt(0.003)).epsilon(1e-14));
    REQUIRE(omega_map(33, 65) == Approx(0.05477).margin(1e-5));
    for (int p = 2; p <= 64; ++p) REQUIRE(omega_map(p, 64) > omega_map(p - 1, 64));
    REQUIRE_THROWS_AS(omega_map(0, 64), BoundsError);
}

TEST_CASE("spring cost", "[benchmarks]") {
    const auto spec = build_spring_class(SpringSpec{}, 5);
    const SpringBenchmark bench(spec);

    for (int t = 1; t <= 64; ++t) {
        const auto ss = state_space(spec.stiffness_table.row(t - 1).transpose(), spec);
        std::vector<double> direct(64);
        double peak = 0.0;
        for (int p = 1; p <= 64; ++p) {
            direct[static_cast<std::size_t>(p - 1)] = transfer_magnitude(ss, omega_map(p, 64));
            peak = std::max(peak, direct[static_cast<std::size_t>(p - 1)]);
        }
        int zeros = 0;
        for (int p = 1; p <= 64; ++p) {
            const double c = spring_cost(t, p, bench);
            REQUIRE(c >= 0.0);
            REQUIRE(c == peak - direct[static_cast<std::size_t>(p - 1)]);
            zeros += c == 0.0;
        }
        REQUIRE(zeros >= 1);
    }
    REQUIRE_THROWS_AS(bench.cost(65, 1), BoundsError);
}

TEST_CASE("transfer magnitude is finite across the band", "[benchmarks]") {
    const auto spec = build_spring_class(SpringSpec{}, 9);
    for (int t = 1; t <= 64; t += 7) {
        const auto ss = state_space(spec.stiffness_table.row(t - 1).transpose(), spec);
        const auto sweep = bode_sweep(ss, 0.03, 0.1, 1000);
        REQUIRE(sweep.size() == 1000);
        REQUIRE(sweep.front().omega == 0.03);
        REQUIRE(sweep.back().omega == 0.1);
        for (const auto& b : sweep) {
            REQUIRE(std::isfinite(b.magnitude));
            REQUIRE(b.magnitude > 0.0);
        }
    }
    REQUIRE_THROWS_AS(bode_sweep(StateSpace{}, 0.1, 0.03, 10), Error);
}
