#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hybridlab/averaged.hpp"
#include "hybridlab/simulator.hpp"
#include "oracles.hpp"

using namespace hybridlab;

namespace {

constexpr double pi = std::numbers::pi;

GridFunction sine(const SpatialGrid& g, double amp = 1.0) {
    return GridFunction::sample(g, [amp](double xi) { return amp * std::sin(pi * xi); });
}

double relative_l2(const GridFunction& a, const GridFunction& b) {
    return std::sqrt(distance_squared(a, b) / inner_product(b, b));
}

}  // namespace

TEST_CASE("zero conductance reduces both solvers to heat decay") {
    const SpatialGrid g(199);
    const ChannelModel m = two_state_constant(1.0, 3.0, {0.0, 0.0}, {0.0, 1.0});
    const GridFunction exact = sine(g, std::exp(-pi * pi * 0.1));
    const DeterministicTrajectory avg = solve_averaged(m, 2, SpatialGrid(199), 1e-4, 0.1, sine(g));
    CHECK(relative_l2(avg.path.x.back(), exact) <= 0.01);
    const DeterministicTrajectory lim = solve_limit(m, g, 1e-4, 0.1, sine(g));
    CHECK(relative_l2(lim.path.x.back(), exact) <= 0.01);
    CHECK(avg.path.times.back() == 0.1);
}

TEST_CASE("single-state averaged solution equals the zero-rate hybrid run") {
    const ChannelModel m({"o"}, {0.7}, {0.9}, {RateFunction::zero()});
    SimParams p;
    p.population = 4;
    p.grid = SpatialGrid(200);
    p.horizon = 0.3;
    p.dt = 1e-3;
    const GridFunction x0 = sine(p.grid, 0.5);
    const HybridTrajectory h = simulate(m, p, x0, ChannelConfig{{0, 0, 0}});
    const DeterministicTrajectory a = solve_averaged(m, 4, p.grid, 1e-3, 0.3, x0);
    REQUIRE(a.path.times.size() == h.path.times.size());
    for (std::size_t k = 0; k < a.path.times.size(); ++k) {
        CHECK(a.path.times[k] == h.path.times[k]);
        for (int j = 0; j < p.grid.size(); ++j) CHECK(std::abs(a.path.x[k][j] - h.path.x[k][j]) <= 1e-12);
    }
}

TEST_CASE("averaged solver self-convergence") {
    const ChannelModel m = default_sigmoid_model();
    const int n = 2;
    const double dt = 2e-3, horizon = 0.2;
    auto run = [&](int nodes, double step) {
        const SpatialGrid g(nodes);
        return solve_averaged(m, n, g, step, horizon, sine(g, 0.5)).path.x.back();
    };
    // Reference (dt/4, 2M+1); node j of M = 199 sits at node 2j+1 of M = 399.
    const GridFunction coarse = run(199, dt), fine = run(399, dt / 2), ref = run(399, dt / 4);
    double e_coarse = 0.0, e_fine = 0.0;
    for (int j = 0; j < 199; ++j) e_coarse += std::pow(coarse[j] - ref[2 * j + 1], 2) / 200.0;
    for (int j = 0; j < 399; ++j) e_fine += std::pow(fine[j] - ref[j], 2) / 400.0;
    MESSAGE("coarse " << std::sqrt(e_coarse) << " fine " << std::sqrt(e_fine));
    CHECK(std::sqrt(e_coarse) >= 3.0 * std::sqrt(e_fine));
}

TEST_CASE("limit solution approaches the Newton steady state") {
    const int m = 99;
    const SpatialGrid g(m);
    const ChannelModel model = two_state_constant(1.0, 3.0, {0.0, 1.0}, {0.0, 1.0});
    const Eigen::VectorXd star =
        oracle::newton_steady_state(m, [](double u) { return 0.25 * (1.0 - u); }, [](double) { return -0.25; });
    const DeterministicTrajectory lim = solve_limit(model, g, 1e-3, 5.0, GridFunction(g));
    double worst = 0.0;
    for (int j = 0; j < m; ++j) worst = std::max(worst, std::abs(lim.path.x.back()[j] - star(j)));
    CHECK(worst <= 1e-4);
    for (const GridFunction& x : lim.path.x)
        for (int j = 0; j < m; ++j) {
            CHECK(x[j] >= -1e-15);
            CHECK(x[j] <= 1.0);
        }
}

TEST_CASE("interpolation between lattice points") {
    const SpatialGrid g(50);
    const ChannelModel model = default_sigmoid_model();
    const DeterministicTrajectory a = solve_limit(model, g, 1e-2, 0.1, sine(g, 0.5));
    const GridFunction mid = a.at(0.015);
    for (int j = 0; j < g.size(); ++j) CHECK(mid[j] == doctest::Approx(0.5 * (a.path.x[1][j] + a.path.x[2][j])));
    const GridFunction end = a.at(0.1);
    for (int j = 0; j < g.size(); ++j) CHECK(end[j] == a.path.x.back()[j]);
}

TEST_CASE("averaged-vs-limit gap over N") {
    const ChannelModel m = default_sigmoid_model();
    const SpatialGrid g(50 * 64);
    const GridFunction x0 = sine(g, 0.5);
    const DeterministicTrajectory lim = solve_limit(m, g, 1e-3, 1.0, x0);
    double prev = 1e300;
    for (int n : {8, 16, 32, 64}) {
        const double gap = deterministic_gap(solve_averaged(m, n, g, 1e-3, 1.0, x0), lim);
        MESSAGE("N=" << n << " sup ||Xbar^N - Xbar||^2 = " << gap);
        CHECK(gap < prev);
        prev = gap;
    }
}
