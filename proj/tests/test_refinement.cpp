#include <catch_amalgamated.hpp>

#include "smocu/benchmarks.hpp"
#include "smocu/refinement.hpp"

#include <random>
#include <set>

using namespace smocu;

namespace {

const SyntheticSpec kSpec;

TrainingPoint sample(int t, int p) { return {t, p, synthetic_cost(t, p, kSpec), Fidelity::fine}; }

KernelParams fixed_params() {
    KernelParams p;
    p.lengthscale_theta = 4.0;
    p.lengthscale_psi = 4.0;
    p.noise_variance = 1e-8;
    return p;
}

TrainingSet spread_points() {
    TrainingSet ts;
    for (int t : {4, 16, 28, 40, 52, 64})
        for (int p : {8, 30, 48, 60}) ts.add(sample(t, p));
    return ts;
}

}  // namespace

TEST_CASE("converged", "[refinement]") {
    REQUIRE(converged(4.0, 0.9, 0.25));
    REQUIRE_FALSE(converged(4.0, 1.1, 0.25));
    REQUIRE(converged(3.0, 3.0, 1.0));
}

TEST_CASE("select_p68", "[refinement]") {
    TrainingSet three({sample(5, 1), sample(30, 1), sample(60, 1)});
    REQUIRE(select_p68(three, make_uniform_prior({64, 64})) == std::vector<std::size_t>{1});

    TrainingSet pair({sample(16, 1), sample(17, 1)});
    REQUIRE(select_p68(pair, DiscreteDistribution::point_mass(64, 16)) == std::vector<std::size_t>{0});

    REQUIRE(select_p68(three, DiscreteDistribution::point_mass(64, 40)).empty());
}

TEST_CASE("leave-one-out sensitivities", "[refinement]") {
    const IndexGrid grid = kSpec.grid();

    SECTION("duplicates carry no information") {
        auto ts = spread_points();
        ts.add(ts[5]);
        const auto m = GpModel::condition(ts, fixed_params());
        const auto rep = loo_sensitivities(ts, {5, ts.size() - 1}, m, grid);
        REQUIRE(rep.sensitivities[0] <= 1e-6);
        REQUIRE(rep.sensitivities[1] <= 1e-6);
    }

    SECTION("an isolated point near the minimum outranks a crowded one") {
        TrainingSet ts;
        ts.add(sample(16, 48));  // isolated, sits in the narrow well
        ts.add(sample(50, 10));  // crowded
        for (auto [t, p] : {std::pair{49, 10}, {51, 10}, {50, 9}, {50, 11}, {51, 11}}) ts.add(sample(t, p));
        for (auto [t, p] : {std::pair{60, 60}, {5, 5}, {35, 25}}) ts.add(sample(t, p));
        const auto m = GpModel::condition(ts, fixed_params());
        const auto rep = loo_sensitivities(ts, {0, 1}, m, grid);
        REQUIRE(rep.sensitivities[0] > rep.sensitivities[1]);
        REQUIRE(rep.argmax == 0);

        const auto again = loo_sensitivities(ts, {0, 1}, m, grid);
        REQUIRE(again.sensitivities == rep.sensitivities);
    }

    SECTION("order of candidates does not matter") {
        const auto ts = spread_points();
        const auto m = GpModel::condition(ts, fixed_params());
        const auto fwd = loo_sensitivities(ts, {2, 7, 11, 19}, m, grid);
        const auto rev = loo_sensitivities(ts, {19, 11, 7, 2}, m, grid);
        for (std::size_t i = 0; i < 4; ++i) REQUIRE(fwd.sensitivities[i] == rev.sensitivities[3 - i]);
        REQUIRE(fwd.argmax == rev.argmax);
    }

    SECTION("preconditions") {
        TrainingSet small({sample(1, 1), sample(2, 2)});
        const auto m = GpModel::condition(small, fixed_params());
        REQUIRE_THROWS_AS(loo_sensitivities(small, {0}, m, grid), Error);
        const auto ts = spread_points();
        REQUIRE_THROWS_AS(loo_sensitivities(ts, {}, GpModel::condition(ts, fixed_params()), grid), Error);
    }
}

TEST_CASE("propose_points", "[refinement]") {
    const IndexGrid grid{64, 64};
    auto cfg = RefinementConfig::defaults_for(grid);
    REQUIRE(cfg.proposal_std_theta == 4.0);

    SECTION("zero spread yields only the centre") {
        cfg.proposal_std_theta = cfg.proposal_std_psi = 0.0;
        std::mt19937_64 rng(1);
        const auto pts = propose_points({16, 48}, cfg, grid, TrainingSet{}, rng);
        REQUIRE(pts == std::vector<GridPoint>{{16, 48}});
    }

    SECTION("distinct in-bounds proposals, reproducible") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto existing = spread_points();
            for (GridPoint c : {GridPoint{16, 48}, GridPoint{1, 1}, GridPoint{64, 64}}) {
                std::mt19937_64 a(seed), b(seed);
                const auto pts = propose_points(c, cfg, grid, existing, a);
                REQUIRE(pts == propose_points(c, cfg, grid, existing, b));
                REQUIRE(pts.size() == 8);
                std::set<std::pair<int, int>> seen;
                for (auto g : pts) {
                    REQUIRE(grid.contains(g.theta, g.psi));
                    REQUIRE_FALSE(existing.contains(g));
                    REQUIRE(seen.insert({g.theta, g.psi}).second);
                }
            }
        }
    }

    SECTION("exhausted budget returns a partial list") {
        const IndexGrid tiny{2, 2};
        cfg.points_per_refinement = 8;
        std::mt19937_64 rng(3);
        const auto pts = propose_points({1, 1}, cfg, tiny, TrainingSet({sample(2, 2)}), rng);
        REQUIRE(pts.size() == 3);
    }

    REQUIRE_THROWS_AS(
        [&] {
            std::mt19937_64 rng(1);
            return propose_points({65, 1}, cfg, grid, TrainingSet{}, rng);
        }(),
        BoundsError);
}

TEST_CASE("maybe_refine", "[refinement]") {
    const IndexGrid grid = kSpec.grid();
    const auto cfg = RefinementConfig::defaults_for(grid);
    const auto ts = spread_points();
    const auto fitted = GpModel::condition(ts, fixed_params());
    int calls = 0;
    CostOracle oracle = [&](int t, int p, Fidelity f) {
        ++calls;
        REQUIRE(f == Fidelity::fine);
        return synthetic_cost(t, p, kSpec);
    };
    const double prior_var = distribution_stats(make_uniform_prior(grid)).variance;

    SECTION("gate closed while the belief is wide") {
        std::mt19937_64 rng(1);
        const auto r = maybe_refine({prior_var, 0}, ts, make_uniform_prior(grid), cfg, fitted, grid, oracle, rng);
        REQUIRE_FALSE(r.refit);
        REQUIRE(r.training == ts);
        REQUIRE(r.state.refinements_used == 0);
        REQUIRE(calls == 0);
    }

    SECTION("gate closed when refinements are used up") {
        std::mt19937_64 rng(1);
        const auto r = maybe_refine({prior_var, cfg.max_refinements}, ts, DiscreteDistribution::point_mass(64, 16),
                                    cfg, fitted, grid, oracle, rng);
        REQUIRE_FALSE(r.refit);
        REQUIRE(r.training == ts);
    }

    SECTION("refines around the sensitive point under a converged belief") {
        std::vector<double> w(64, 0.0);
        w[14] = w[15] = w[16] = 1.0;
        const auto narrow = DiscreteDistribution::from_weights(w);
        std::mt19937_64 rng(7);
        const auto r = maybe_refine({prior_var, 0}, ts, narrow, cfg, fitted, grid, oracle, rng);
        REQUIRE(r.refit);
        REQUIRE(r.proposals.size() == 8);
        REQUIRE(r.training.size() == ts.size() + r.proposals.size());
        REQUIRE(calls == 8);
        REQUIRE(r.state.refinements_used == 1);
        REQUIRE(r.state.reference_variance == distribution_stats(narrow).variance);
        REQUIRE(r.center->theta == 16);
        for (auto g : r.proposals) {
            REQUIRE(std::abs(g.theta - r.center->theta) <= 20);
            REQUIRE(std::abs(g.psi - r.center->psi) <= 20);
        }
        for (std::size_t i = ts.size(); i < r.training.size(); ++i) REQUIRE(r.training[i].fidelity == Fidelity::fine);

        const auto held = maybe_refine(r.state, r.training, narrow, cfg, fitted, grid, oracle, rng);
        REQUIRE_FALSE(held.refit);
        REQUIRE(held.training == r.training);

        const auto next = maybe_refine(r.state, r.training, DiscreteDistribution::point_mass(64, 16), cfg, fitted,
                                       grid, oracle, rng);
        REQUIRE(next.refit);
        REQUIRE(next.state.refinements_used == 2);
    }

    SECTION("empty band falls back to the training point nearest the MAP") {
        std::mt19937_64 rng(2);
        const auto r = maybe_refine({prior_var, 0}, ts, DiscreteDistribution::point_mass(64, 20), cfg, fitted, grid,
                                    oracle, rng);
        REQUIRE(r.refit);
        REQUIRE(r.center->theta == 16);
    }
}
