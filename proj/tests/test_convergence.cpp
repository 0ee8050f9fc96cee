#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hybridlab/convergence.hpp"
#include "hybridlab/error.hpp"
#include "hybridlab/stats.hpp"
#include "oracles.hpp"

using namespace hybridlab;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

DeterministicTrajectory constant_target(const SpatialGrid& g, std::vector<double> times, double value) {
    DeterministicTrajectory d;
    d.path.grid = g;
    d.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
    for (double t : times) {
        d.path.times.push_back(t);
        GridFunction x(g);
        for (auto& v : x.values()) v = value;
        d.path.x.push_back(x);
    }
    return d;
}

ErrorReport synthetic(double power, double c) {
    ErrorReport r;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        PairReport p{eps, 8, {}, 0, 0, 0, {}};
        for (int k = 0; k < 9; ++k) p.sup_err2.push_back(c * std::pow(eps, power) * (1.0 + 0.0 * k));
        r.pairs.push_back(p);
    }
    return r;
}

}  // namespace

TEST_CASE("psi values") {
    CHECK(psi(0.0) == 1.0);
    CHECK(psi(1.0) == doctest::Approx(oracle::psi_quadrature(1.0)).epsilon(1e-12));
    CHECK(std::abs(psi(1.0) - (4 * std::log(2.0) - 2)) <= 1e-12);
    CHECK(psi(1e6) <= 1e-4);
    CHECK(psi(1e6) > 0.0);
    CHECK(code_of([] { psi(-0.5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("psi against quadrature and monotone on a lattice") {
    double prev = 2.0, worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double x = 1e3 * k / 9999.0;
        const double v = psi(x);
        worst = std::max(worst, std::abs(v - oracle::psi_quadrature(x)));
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(worst <= 1e-10);
    const double below = psi(std::nextafter(1e-4, 0.0)), above = psi(1e-4);
    CHECK(std::abs(below - above) / above <= 1e-10);
}

TEST_CASE("tail bound indicator and limits") {
    BoundParameters p;
    p.c = {1.0, 1.0, 2.0, 1.0, 1.0};
    // eps (beta + gamma) = 0.5 (8^1.5 + 8^3) >> delta: vacuous.
    CHECK(theoretical_tail_bound(1.0, 0.5, 8, 0.0, p) >= 1.0);

    p.c[1] = 1e12;  // keep the indicator off
    double prev = 1e300;
    for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double v = theoretical_tail_bound(1.0, eps, 8, 0.0, p);
        CHECK((v < prev || v == 0.0));
        prev = v;
    }
    CHECK(prev <= 1e-300);
    CHECK(theoretical_tail_bound(1.0, 1e-8, 8, 0.3, p) == doctest::Approx(0.3));

    double last = 1e300;
    for (int k = 0; k <= 200; ++k) {
        const double v = theoretical_tail_bound(0.01 * (k + 1), 0.1, 8, 0.0, p);
        CHECK(v <= last);
        last = v;
    }
    CHECK(code_of([&] { theoretical_tail_bound(0.0, 0.1, 8, 0.0, p); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("tail bound closed-form evaluation") {
    // delta = 1, eps = 1e-3, N = 10, rho = 1000: exponent C4 delta^2/(eps rho) = 1, Psi argument 10/1000.
    BoundParameters p;
    p.c = {1.0, 2.0, 2.0, 1.0, 1.0};
    const double x = 0.01;
    const double psi_ref = 2 * ((1 + x) * std::log1p(x) - x) / (x * x);
    CHECK(theoretical_tail_bound(1.0, 1e-3, 10, 0.0, p) == doctest::Approx(2.0 * std::exp(-psi_ref)).epsilon(1e-14));
    // With C2 = 1 the indicator fires: 1e-3 (10^1.5 + 10^3) >= 1.
    p.c[1] = 1.0;
    CHECK(theoretical_tail_bound(1.0, 1e-3, 10, 0.0, p) >= 1.0);
}

TEST_CASE("sup_diff examples") {
    const SpatialGrid g(9);
    const DeterministicTrajectory b = constant_target(g, {0.0, 0.5, 1.0}, 0.25);

    SampledPath same{g, b.path.times, b.path.x};
    CHECK(sup_diff(same, b) == 0.0);

    SampledPath shifted{g, {0.0, 0.3, 0.5, 0.9, 1.0}, {}};
    for (std::size_t k = 0; k < shifted.times.size(); ++k) {
        GridFunction x(g);
        for (auto& v : x.values()) v = 0.25 + 0.2;
        shifted.x.push_back(x);
    }
    const double ones = 9 * g.spacing();  // ||1||^2 on the grid
    CHECK(sup_diff(shifted, b) == doctest::Approx(0.04 * ones).epsilon(1e-14));

    // Hand-built: one node off by 1, 3, 2 at the three snapshots.
    SampledPath hand{g, {0.0, 0.5, 1.0}, {}};
    for (double off : {1.0, 3.0, 2.0}) {
        GridFunction x = b.path.x[0];
        x[4] += off;
        hand.x.push_back(x);
    }
    CHECK(sup_diff(hand, b) == doctest::Approx(9.0 * g.spacing()).epsilon(1e-14));

    SampledPath other{SpatialGrid(10), {0.0, 1.0}, {GridFunction(SpatialGrid(10)), GridFunction(SpatialGrid(10))}};
    CHECK(code_of([&] { sup_diff(other, b); }) == ErrorCode::InvalidArgument);
    SampledPath short_path{g, {0.0, 0.5}, {b.path.x[0], b.path.x[1]}};
    CHECK(code_of([&] { sup_diff(short_path, b); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sup_diff interpolates the target at jump times") {
    const SpatialGrid g(5);
    DeterministicTrajectory b = constant_target(g, {0.0, 1.0}, 0.0);
    for (auto& v : b.path.x[1].values()) v = 1.0;  // target t -> t
    SampledPath a{g, {0.0, 0.25, 1.0}, {}};
    for (double t : {0.0, 0.25, 1.0}) {
        GridFunction x(g);
        for (auto& v : x.values()) v = t;
        a.x.push_back(x);
    }
    a.x[1][2] += 0.5;
    CHECK(sup_diff(a, b) == doctest::Approx(0.25 * g.spacing()).epsilon(1e-14));
}

TEST_CASE("single-state ensemble reproduces the averaged target exactly") {
    ExperimentPlan plan;
    plan.model = ChannelModel({"o"}, {0.8}, {0.6}, {RateFunction::zero()});
    plan.pairs = ExperimentPlan::product({0.1, 0.01}, {4});
    plan.replications = 3;
    plan.horizon = 0.2;
    plan.dt = 1e-3;
    plan.target_dt = 1e-3;
    plan.initial.fixed_state = 0;
    const ErrorReport r = run_ensemble(plan, 2);
    for (const auto& p : r.pairs)
        for (double v : p.sup_err2) CHECK(v <= 1e-12);
}

TEST_CASE("ensemble determinism across worker counts and report invariants") {
    ExperimentPlan plan;
    plan.pairs = ExperimentPlan::product({0.1, 0.05}, {4});
    plan.replications = 6;
    plan.horizon = 0.2;
    plan.seed = 77;
    const ErrorReport a = run_ensemble(plan, 1), b = run_ensemble(plan, 3);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
        CHECK(a.pairs[k].sup_err2 == b.pairs[k].sup_err2);
        CHECK(a.pairs[k].q10 <= a.pairs[k].q50);
        CHECK(a.pairs[k].q50 <= a.pairs[k].q90);
        REQUIRE(a.pairs[k].tail.size() == a.delta_grid.size());
        for (const auto& t : a.pairs[k].tail) {
            CHECK(t.freq >= 0.0);
            CHECK(t.freq <= 1.0);
            CHECK(t.ci_half >= 0.0);
        }
    }
    CHECK(a.delta_grid == b.delta_grid);
    CHECK(a.delta_grid.size() == 12);
    CHECK(std::is_sorted(a.delta_grid.begin(), a.delta_grid.end()));
    const BoundParameters fit = fit_tail_constants(a);
    CHECK(tail_domination_margin(a, fit) <= 0.0);
}

TEST_CASE("plan validation") {
    ExperimentPlan plan;
    plan.pairs = {{1.5, 4}};
    CHECK(code_of([&] { plan.validate(); }) == ErrorCode::InvalidArgument);
    plan.pairs = {{0.1, 4}};
    plan.replications = 0;
    CHECK(code_of([&] { plan.validate(); }) == ErrorCode::InvalidArgument);
    const auto sched = ExperimentPlan::joint_schedule(0.1, {4, 10});
    CHECK(sched[0].first == doctest::Approx(0.1 / 64));
    CHECK(sched[1].first == doctest::Approx(1e-4));
}

TEST_CASE("fit_scaling on exact power laws") {
    const ScalingFit one = fit_scaling(synthetic(1.0, 3.0), 8, 200, 1);
    CHECK(std::abs(one.slope - 1.0) <= 1e-12);
    CHECK(std::abs(one.lo - 1.0) <= 1e-12);
    CHECK(std::abs(one.hi - 1.0) <= 1e-12);
    const ScalingFit two = fit_scaling(synthetic(2.0, 0.5), 8, 200, 1);
    CHECK(std::abs(two.slope - 2.0) <= 1e-12);
    const ScalingFit zero = fit_scaling(synthetic(1.0, 0.0), 8, 200, 1);
    CHECK(zero.degenerate);
    ErrorReport few = synthetic(1.0, 1.0);
    few.pairs.pop_back();
    few.pairs.pop_back();
    CHECK(code_of([&] { fit_scaling(few, 8); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("joint table monotonicity up to half-widths") {
    ErrorReport r;
    const double meds[] = {4.0, 3.0, 3.05, 1.0};
    int n = 4;
    for (double m : meds) {
        PairReport p{0.1 / (n * n * n), n, {}, 0, 0, 0, {}};
        for (int k = -10; k <= 10; ++k) p.sup_err2.push_back(m + 0.01 * k);
        r.pairs.push_back(p);
        n += 2;
    }
    const auto rows = joint_scaling_table(r);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].median == doctest::Approx(4.0));
    CHECK(joint_nonincreasing(rows));
    r.pairs[2].sup_err2.assign(21, 3.5);
    CHECK_FALSE(joint_nonincreasing(joint_scaling_table(r)));
}

TEST_CASE("type-7 quantiles and interval helpers") {
    const std::vector<double> v{3.0, 1.0, 4.0, 1.5, 9.0};
    CHECK(quantile(v, 0.5) == 3.0);
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 9.0);
    CHECK(quantile(v, 0.1) == doctest::Approx(1.0 + 0.4 * 0.5));
    CHECK(quantile(v, 0.9) == doctest::Approx(4.0 + 0.6 * 5.0));
    const double z = normal_quantile_two_sided(0.9);
    CHECK(z == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    // Wilson half-width, 3 of 20 at 90%.
    const double p = 0.15, n = 20.0;
    const double hw = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
    CHECK(wilson_half_width(3, 20) == doctest::Approx(hw).epsilon(1e-14));
    CHECK(wilson_half_width(0, 20) > 0.0);
    std::vector<double> big;
    for (int k = 0; k < 101; ++k) big.push_back(k);
    const Interval ci = median_interval(big);
    CHECK(ci.lo <= 50.0);
    CHECK(ci.hi >= 50.0);
    CHECK(ci.hi - ci.lo <= 20.0);
    const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    CHECK(least_squares_slope(x, y) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("svg plot is produced") {
    ErrorReport r = synthetic(1.0, 2.0);
    summarize(r);
    const std::string svg = render_svg(r);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}
