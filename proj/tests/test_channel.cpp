#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hybridlab/channel.hpp"
#include "hybridlab/error.hpp"
#include "hybridlab/rng.hpp"
#include "oracles.hpp"

using namespace hybridlab;

namespace {

ChannelModel single_state(double c, double v) {
    return ChannelModel({"o"}, {c}, {v}, {RateFunction::zero()});
}

ChannelModel from_generator(const Eigen::MatrixXd& q) {
    const int n = static_cast<int>(q.rows());
    std::vector<std::string> names;
    std::vector<double> c, v;
    std::vector<RateFunction> rates;
    for (int a = 0; a < n; ++a) {
        names.push_back("s" + std::to_string(a));
        c.push_back(0.5 + a);
        v.push_back(1.0 - 0.3 * a);
        for (int b = 0; b < n; ++b) rates.push_back(a == b ? RateFunction::zero() : RateFunction::constant(q(a, b)));
    }
    return ChannelModel(names, c, v, rates);
}

}  // namespace

TEST_CASE("sigmoid rates stay in [0, a_plus] and respect their Lipschitz constant") {
    const ChannelModel m = default_sigmoid_model();
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> z(-20.0, 20.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            if (a == b) continue;
            const auto& r = m.rate(a, b);
            for (int k = 0; k < 4001; ++k) {
                const double v = r(-20.0 + 0.01 * k);
                CHECK(v >= 0.0);
                CHECK(v <= m.a_plus());
            }
            for (int k = 0; k < 2000; ++k) {
                const double z1 = z(gen), z2 = z1 + 1e-3 * (z(gen) / 20.0);
                CHECK(std::abs(r(z1) - r(z2)) <= m.rate_lipschitz() * std::abs(z1 - z2) * (1 + 1e-9) + 1e-15);
            }
        }
}

TEST_CASE("two-state constant generator") {
    const ChannelModel m = two_state_constant(1.0, 3.0, {0.0, 1.0}, {0.0, 1.0});
    const RateMatrix q = rate_matrix(m, 0.7);
    CHECK(q(0, 0) == -1.0);
    CHECK(q(0, 1) == 1.0);
    CHECK(q(1, 0) == 3.0);
    CHECK(q(1, 1) == -3.0);
    const StateVector nu = stationary_measure(q);
    CHECK(nu(0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(nu(1) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("sigmoid opening rate saturates at its declared maximum") {
    const ChannelModel m = default_sigmoid_model();
    const RateFunction& open = m.rate(0, 1);
    CHECK(rate_matrix(m, 50.0)(0, 1) == doctest::Approx(open.hi()).epsilon(1e-12));
    CHECK(rate_matrix(m, -50.0)(0, 1) == doctest::Approx(open.lo()).epsilon(1e-12));
}

TEST_CASE("stationary measure of random generators matches the matrix exponential") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 5;
        const Eigen::MatrixXd q = oracle::random_generator(n, gen);
        const StateVector nu = stationary_measure(q);
        const Eigen::VectorXd ref = oracle::stationary_by_exponential(q);
        CHECK((nu - ref).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((nu.transpose() * q).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(std::abs(nu.sum() - 1.0) <= 1e-12);
        CHECK(nu.minCoeff() >= 0.0);
        const RateMatrix qm = rate_matrix(from_generator(q), 0.3);
        CHECK((qm - q).cwiseAbs().maxCoeff() <= 1e-15);
        for (int a = 0; a < n; ++a) CHECK(std::abs(qm.row(a).sum()) <= 1e-14 * q.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("symmetric generator has uniform stationary measure") {
    Eigen::MatrixXd q = Eigen::MatrixXd::Constant(5, 5, 0.7);
    q.diagonal().setConstant(-0.7 * 4);
    const StateVector nu = stationary_measure(q);
    for (int a = 0; a < 5; ++a) CHECK(nu(a) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("reducible generators are rejected") {
    // {0, 1} and {2} never communicate.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3, 3);
    q(0, 1) = 1.0;
    q(0, 0) = -1.0;
    q(1, 0) = 2.0;
    q(1, 1) = -2.0;
    bool reducible = false;
    try {
        stationary_measure(q);
    } catch (const Error& e) {
        reducible = e.code() == ErrorCode::ReducibleChain;
    }
    CHECK(reducible);
}

TEST_CASE("reaction term of a single open state") {
    const double j2 = oracle::bump_moment(2);
    const SpatialGrid g(399);
    const MollifierFamily fam(2, g);
    const ChannelModel m = single_state(1.0, 1.0);
    const GridFunction f = reaction_term(m, GridFunction(g), ChannelConfig{{0}}, fam);
    // F = (1/N) c (v - 0) phi_1 with N = 2, so ||F||^2 = ||phi_1||^2 / 4 = 2 J2 / 4.
    CHECK(inner_product(f, f) == doctest::Approx(j2 / 2.0).epsilon(1e-6));
    const GridFunction phi = mollifier_build(1, 2, g).samples();
    for (int j = 0; j < g.size(); ++j) CHECK(f[j] == doctest::Approx(0.5 * phi[j]).epsilon(1e-15));
}

TEST_CASE("degenerate conductances") {
    const SpatialGrid g(199);
    const MollifierFamily fam(4, g);
    const auto x = GridFunction::sample(g, [](double xi) { return std::sin(std::numbers::pi * xi); });
    const ChannelModel zero_c = two_state_constant(1.0, 3.0, {0.0, 0.0}, {0.0, 1.0});
    const ChannelModel shared = two_state_constant(1.0, 3.0, {0.8, 0.8}, {0.4, 0.4});
    const ChannelConfig y1{{0, 1, 1}}, y2{{1, 0, 0}};
    for (int j = 0; j < g.size(); ++j) {
        CHECK(reaction_term(zero_c, x, y1, fam)[j] == 0.0);
        CHECK(averaged_drift(zero_c, x, fam)[j] == 0.0);
        CHECK(limit_drift(zero_c, x)[j] == 0.0);
        CHECK(reaction_term(shared, x, y1, fam)[j] == doctest::Approx(reaction_term(shared, x, y2, fam)[j]));
    }
}

TEST_CASE("averaged drift equals the reaction term for a single state") {
    const SpatialGrid g(199);
    const MollifierFamily fam(4, g);
    const ChannelModel m = single_state(1.3, 0.2);
    const auto x = GridFunction::sample(g, [](double xi) { return xi * (1 - xi); });
    const GridFunction a = averaged_drift(m, x, fam);
    const GridFunction r = reaction_term(m, x, ChannelConfig{{0, 0, 0}}, fam);
    for (int j = 0; j < g.size(); ++j) CHECK(a[j] == doctest::Approx(r[j]).epsilon(1e-14));

    const DriftEstimate est = empirical_average_drift(m, x, fam, 10, 3);
    for (int j = 0; j < g.size(); ++j) {
        CHECK(est.mean[j] == doctest::Approx(a[j]).epsilon(1e-14));
        CHECK(est.standard_error[j] == 0.0);
    }
}

TEST_CASE("two-state averaged drift at zero potential") {
    const int n = 8;
    const SpatialGrid g(50 * n);
    const MollifierFamily fam(n, g);
    const ChannelModel m = two_state_constant(1.0, 3.0, {0.0, 1.0}, {0.0, 1.0});
    const GridFunction a = averaged_drift(m, GridFunction(g), fam);
    for (int j = 0; j < g.size(); ++j) {
        double s = 0.0;
        for (int i = 1; i < n; ++i) s += mollifier_build(i, n, g).samples()[j];
        CHECK(a[j] == doctest::Approx(0.25 * s / n).epsilon(1e-13));
    }
    const GridFunction l = limit_drift(m, GridFunction(g));
    for (int j = 0; j < g.size(); ++j) CHECK(l[j] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("empirical average drift converges and is reproducible") {
    const int n = 4;
    const SpatialGrid g(200);
    const MollifierFamily fam(n, g);
    const ChannelModel m = default_sigmoid_model();
    const auto x = GridFunction::sample(g, [](double xi) { return 0.5 * std::sin(std::numbers::pi * xi); });
    const GridFunction exact = averaged_drift(m, x, fam);
    const DriftEstimate est = empirical_average_drift(m, x, fam, 100000, 42);
    for (int j = 0; j < g.size(); ++j) {
        if (est.standard_error[j] == 0.0) {
            CHECK(est.mean[j] == doctest::Approx(exact[j]).epsilon(1e-12));
        } else {
            CHECK(std::abs(est.mean[j] - exact[j]) <= 4.0 * est.standard_error[j]);
        }
    }
    const DriftEstimate again = empirical_average_drift(m, x, fam, 1000, 5);
    const DriftEstimate again2 = empirical_average_drift(m, x, fam, 1000, 5);
    for (int j = 0; j < g.size(); ++j) CHECK(again.mean[j] == again2.mean[j]);
}

TEST_CASE("product measure sampling follows nu per site") {
    const ChannelModel m = two_state_constant(1.0, 3.0, {0.0, 1.0}, {0.0, 1.0});
    SplitMix64 rng(99);
    const std::vector<double> zeta(20, 0.0);
    long open = 0, total = 0;
    for (int k = 0; k < 5000; ++k) {
        const ChannelConfig y = sample_configuration(m, zeta, rng);
        REQUIRE(y.size() == 20);
        for (int s : y.states) open += s == 1;
        total += 20;
    }
    const double p = static_cast<double>(open) / total;
    CHECK(std::abs(p - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / total));
}

TEST_CASE("averaged drift approaches the limit drift as N grows for smooth x") {
    const SpatialGrid g(3199);
    const ChannelModel m = default_sigmoid_model();
    const auto x = GridFunction::sample(g, [](double xi) { return 0.5 * std::sin(std::numbers::pi * xi); });
    const GridFunction lim = limit_drift(m, x);
    double prev = 1e300;
    for (int n : {8, 16, 32, 64}) {
        const GridFunction a = averaged_drift(m, x, MollifierFamily(n, g));
        const double gap = distance_squared(a, lim);
        MESSAGE("N=" << n << " ||Fbar^N - Fbar||^2 = " << gap);
        CHECK(gap < prev);
        prev = gap;
    }
}
