// Acceptance suite. One PASS/FAIL line per criterion.
//
// Exit status is 0 once every selected criterion was evaluated, whatever the
// verdicts; --strict turns the number of failed criteria into the exit status.
// Errors while evaluating a criterion (exceptions, missing CLI) exit with 2.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hybridlab/averaged.hpp"
#include "hybridlab/convergence.hpp"
#include "hybridlab/error.hpp"
#include "hybridlab/imex.hpp"
#include "hybridlab/poisson.hpp"
#include "hybridlab/rng.hpp"
#include "hybridlab/simulator.hpp"
#include "oracles.hpp"

using namespace hybridlab;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

GridFunction sine(const SpatialGrid& g, double amp) {
    return GridFunction::sample(g, [amp](double xi) { return amp * std::sin(pi * xi); });
}

GridFunction random_smooth(const SpatialGrid& g, std::mt19937_64& gen, double scale) {
    std::normal_distribution<double> d;
    double c[8];
    for (double& v : c) v = d(gen) * scale;
    return GridFunction::sample(g, [&](double xi) {
        double s = 0.0;
        for (int k = 0; k < 8; ++k) s += c[k] * std::sin((k + 1) * pi * xi) / (k + 1);
        return s;
    });
}

Verdict stationary_measures() {
    std::mt19937_64 gen(101);
    double worst_res = 0.0, worst_sum = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + trial % 5;
        const Eigen::MatrixXd q = oracle::random_generator(n, gen);
        const StateVector nu = stationary_measure(q);
        worst_res = std::max(worst_res, (nu.transpose() * q).cwiseAbs().maxCoeff());
        worst_sum = std::max(worst_sum, std::abs(nu.sum() - 1.0));
    }
    std::uniform_real_distribution<double> d(0.05, 5.0);
    double worst_closed = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = d(gen), b = d(gen);
        Eigen::MatrixXd q(2, 2);
        q << -a, a, b, -b;
        const StateVector nu = stationary_measure(q);
        worst_closed = std::max({worst_closed, std::abs(nu(0) - b / (a + b)), std::abs(nu(1) - a / (a + b))});
    }
    return {worst_res <= 1e-10 && worst_sum <= 1e-12 && worst_closed <= 1e-12,
            "max |nu Q| " + num(worst_res) + ", max |sum - 1| " + num(worst_sum) + ", two-state gap " +
                num(worst_closed)};
}

Verdict poisson_suite() {
    const int n = 8;
    const SpatialGrid g(400);
    const MollifierFamily fam(n, g);
    const ChannelModel m = three_state_chain(RateFunction::sigmoid(0.5, 2.0, 4.0, 0.0),
                                             RateFunction::sigmoid(0.3, 1.0, -3.0, 0.2), RateFunction::constant(1.1),
                                             RateFunction::sigmoid(0.2, 2.5, -5.0, 0.1), {0.0, 0.3, 1.2},
                                             {-0.5, 0.2, 1.0});
    std::mt19937_64 gen(202);
    std::uniform_int_distribution<int> state(0, 2);
    double res = 0.0, cen = 0.0, ident = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const GridFunction x = random_smooth(g, gen, 0.5), z = random_smooth(g, gen, 0.5);
        ChannelConfig y{std::vector<int>(n - 1)};
        for (int& s : y.states) s = state(gen);
        const PoissonSolution sol = solve_poisson(m, x, z, fam);
        res = std::max(res, sol.max_residual());
        cen = std::max(cen, sol.max_centering());
        const GridFunction fy = reaction_term(m, x, y, fam), fbar = averaged_drift(m, x, fam);
        double phi = 0.0;
        for (int j = 0; j < g.size(); ++j) phi += (fy[j] - fbar[j]) * (x[j] - z[j]);
        phi *= g.spacing();
        ident = std::max(ident, std::abs(sol.generator_applied(y) - phi));
    }
    return {res <= 1e-10 && cen <= 1e-12 && ident <= 1e-8,
            "residual " + num(res) + ", centering " + num(cen) + ", generator identity " + num(ident)};
}

Verdict scaling_slopes() {
    const ScalingReport r = measure_scalings(default_sigmoid_model(), {8, 16, 32, 64}, ScalingOptions{}, 303);
    const bool alpha_ok = !r.alpha.degenerate && r.alpha.slope >= 0.7 && r.alpha.slope <= 1.3;
    const bool rho_ok = !r.rho.degenerate && r.rho.slope >= 2.5 && r.rho.slope <= 3.5;
    const bool consistent = r.consistent();
    return {alpha_ok && rho_ok && consistent,
            "sup|f| slope " + num(r.alpha.slope) + " [" + num(r.alpha.lo) + ", " + num(r.alpha.hi) +
                "], bracket slope " + num(r.rho.slope) + " [" + num(r.rho.lo) + ", " + num(r.rho.hi) +
                "], consistent " + (consistent ? "yes" : "no")};
}

Verdict psi_correctness() {
    double worst = 0.0;
    bool mono = true;
    double prev = psi(0.0);
    for (int k = 1; k <= 10000; ++k) {
        const double x = 1e3 * k / 10000.0;
        const double v = psi(x);
        worst = std::max(worst, std::abs(v - oracle::psi_quadrature(x)));
        mono = mono && v < prev;
        prev = v;
    }
    const bool zero = psi(0.0) == 1.0;
    return {worst <= 1e-10 && zero && mono, "max error " + num(worst) + ", psi(0) = " + num(psi(0.0)) +
                                                ", monotone " + (mono ? "yes" : "no")};
}

Verdict pde_order() {
    const SpatialGrid g(199);
    const Tridiagonal lap = laplacian_matrix(g);
    const GridFunction zero(g);
    GridFunction x = sine(g, 1.0);
    const double dt = 1e-4;
    for (int k = 0; k < 1000; ++k) x = imex_step(x, zero, dt, lap);
    const GridFunction exact = sine(g, std::exp(-pi * pi * 0.1));
    const double rel = std::sqrt(distance_squared(x, exact) / inner_product(exact, exact));

    // Self-convergence of the averaged solver. Reference at (dt/4, 2M+1);
    // node j of M = 199 sits at node 2j+1 of M = 399.
    const ChannelModel m = default_sigmoid_model();
    auto run = [&](int nodes, double step) {
        const SpatialGrid grid(nodes);
        return solve_averaged(m, 2, grid, step, 0.1, sine(grid, 0.5)).path.x.back();
    };
    const GridFunction coarse = run(199, dt), fine = run(399, dt / 2), ref = run(399, dt / 4);
    double e_coarse = 0.0, e_fine = 0.0;
    for (int j = 0; j < 199; ++j) e_coarse += std::pow(coarse[j] - ref[2 * j + 1], 2) / 200.0;
    for (int j = 0; j < 399; ++j) e_fine += std::pow(fine[j] - ref[j], 2) / 400.0;
    const double ratio = std::sqrt(e_coarse / e_fine);
    return {rel <= 0.01 && ratio >= 3.0, "heat relative L2 error " + num(rel) + ", self-convergence ratio " + num(ratio)};
}

Verdict thinning_exactness() {
    // c = 0 freezes x at 0, one site (N = 2).
    const double alpha = 2.0, beta = 1.0, eps = 0.1;
    const ChannelModel m = two_state_constant(alpha, beta, {0.0, 0.0}, {0.0, 1.0});
    SimParams p;
    p.epsilon = eps;
    p.population = 2;
    p.grid = SpatialGrid(100);
    p.horizon = 1.0;
    p.dt = 0.05;
    const int reps = 10000;
    double sum = 0.0, sum2 = 0.0;
    long held = 0, open = 0;
    for (int r = 0; r < reps; ++r) {
        SplitMix64 rng(replication_seed(606, static_cast<std::uint64_t>(r)));
        double first = -1.0;
        int last = 0;
        simulate(m, p, GridFunction(p.grid), ChannelConfig{{0}}, rng, [&](const SnapshotView& s) {
            if (s.jump && first < 0.0) first = s.time;
            last = s.y.states[0];
        });
        if (first >= 0.0) {
            ++held;
            sum += first;
            sum2 += first * first;
        }
        open += last;
    }
    const double mean = sum / held;
    const double se = std::sqrt((sum2 / held - mean * mean) / (held - 1));
    const double expected = eps / alpha;
    const double nu_open = alpha / (alpha + beta);
    const double e_open = reps * nu_open, e_closed = reps * (1 - nu_open);
    const double chi2 = std::pow(open - e_open, 2) / e_open + std::pow((reps - open) - e_closed, 2) / e_closed;
    const double pval = oracle::chi_square_survival(chi2, 1);
    return {held == reps && std::abs(mean - expected) <= 3 * se && pval > 0.01,
            "holding mean " + num(mean) + " vs " + num(expected) + " (se " + num(se) + "), occupancy p " + num(pval)};
}

Verdict a_priori_ball() {
    const ChannelModel m = default_sigmoid_model();
    int inside = 0, total = 0;
    double worst = 0.0;
    for (double eps : {1e-1, 1e-2})
        for (int n : {4, 8}) {
            SimParams p;
            p.epsilon = eps;
            p.population = n;
            p.grid = SpatialGrid(50 * n);
            p.horizon = 1.0;
            p.dt = default_time_step(eps);
            p.check_a_priori = false;
            const MollifierFamily fam(n, p.grid);
            const APrioriBound b = a_priori_bound(m, fam);
            const GridFunction x0 = sine(p.grid, 0.5);
            const double r0 = inner_product(x0, x0);
            const double h = p.grid.spacing();
            for (int r = 0; r < 25; ++r) {
                SplitMix64 rng(replication_seed(707, static_cast<std::uint64_t>(total)));
                const ChannelConfig y0 = sample_configuration(m, x0, fam, rng);
                bool ok = true;
                simulate(m, p, x0, y0, rng, [&](const SnapshotView& s) {
                    const double ratio = discrete_dot(h, s.x, s.x) / b.radius_squared(s.time, r0);
                    worst = std::max(worst, ratio);
                    ok = ok && ratio <= 1.0;
                });
                inside += ok;
                ++total;
            }
        }
    return {inside == total, std::to_string(inside) + "/" + std::to_string(total) +
                                 " runs inside, max ||x||^2 / radius^2 = " + num(worst)};
}

ErrorReport run_plan(std::vector<std::pair<double, int>> pairs, int reps, Target target, std::uint64_t seed) {
    ExperimentPlan plan;
    plan.pairs = std::move(pairs);
    plan.replications = reps;
    plan.target = target;
    plan.seed = seed;
    ErrorReport report = run_ensemble(plan, worker_count());
    summarize(report);
    return report;
}

Verdict fixed_n_rate() {
    const ErrorReport r = run_plan(ExperimentPlan::product({1e-1, 1e-2, 1e-3}, {8}), 200, Target::Averaged, 808);
    bool decreasing = true;
    std::string medians;
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
        if (k > 0) decreasing = decreasing && r.pairs[k].q50 < r.pairs[k - 1].q50;
        medians += (k ? ", " : "") + num(r.pairs[k].q50);
    }
    const ScalingFit fit = fit_scaling(r, 8, 1000, 808);
    return {decreasing && !fit.degenerate && fit.slope >= 0.7 && fit.slope <= 1.3,
            "medians " + medians + "; slope " + num(fit.slope) + " [" + num(fit.lo) + ", " + num(fit.hi) + "]"};
}

Verdict joint_scaling() {
    const ErrorReport r = run_plan(ExperimentPlan::joint_schedule(0.1, {4, 6, 8, 10}), 100, Target::Limit, 909);
    const std::vector<JointRow> rows = joint_scaling_table(r);
    const bool table_ok = joint_nonincreasing(rows);
    std::string medians;
    for (std::size_t k = 0; k < rows.size(); ++k) medians += (k ? ", " : "") + num(rows[k].median);

    const ChannelModel m = default_sigmoid_model();
    const SpatialGrid g(50 * 64);
    const GridFunction x0 = sine(g, 0.5);
    const DeterministicTrajectory lim = solve_limit(m, g, 1e-3, 1.0, x0);
    bool gap_ok = true;
    double prev = 1e300;
    std::string gaps;
    for (int n : {8, 16, 32, 64}) {
        const double gap = deterministic_gap(solve_averaged(m, n, g, 1e-3, 1.0, x0), lim);
        gap_ok = gap_ok && gap < prev;
        prev = gap;
        gaps += (n == 8 ? "" : ", ") + num(gap);
    }
    return {table_ok && gap_ok, "medians " + medians + (table_ok ? " (nonincreasing)" : " (increase)") +
                                    "; averaged-vs-limit gaps " + gaps};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) raise(ErrorCode::Io, "cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / "hybridlab_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "sweep.cfg";
    std::ofstream(cfg) << "model.states = C,O\n"
                          "model.conductance = 0,1\n"
                          "model.reversal = 0,1\n"
                          "model.rate.C.O = sigmoid(0.5, 3, 10, 0.1)\n"
                          "model.rate.O.C = sigmoid(0.5, 3, -10, 0.1)\n"
                          "numerics.T = 1\n"
                          "experiment.epsilon = 0.1, 0.01, 0.001\n"
                          "experiment.N = 8\n"
                          "experiment.replications = 20\n";
    for (int jobs : {1, 8}) {
        const std::string cmd = std::string("\"") + HYBRIDLAB_CLI + "\" sweep --config \"" + cfg.string() +
                                "\" --seed 1010 --jobs " + std::to_string(jobs) + " --out \"" +
                                (dir / ("jobs" + std::to_string(jobs))).string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) raise(ErrorCode::Internal, "sweep failed: " + cmd);
    }
    bool same = true;
    std::string detail;
    for (const char* name : {"sweep_errors.csv", "sweep_summary.csv", "sweep_tail.csv"}) {
        const bool eq = slurp(dir / "jobs1" / name) == slurp(dir / "jobs8" / name);
        same = same && eq;
        detail += std::string(detail.empty() ? "" : ", ") + name + (eq ? " identical" : " differs");
    }
    fs::remove_all(dir);
    return {same, detail};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    std::vector<int> only;
    bool strict = false;
    app.add_option("--criterion", only, "run only these criteria (1-10)")->check(CLI::Range(1, 10));
    app.add_flag("--strict", strict, "exit with the number of failed criteria");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "stationary measures", stationary_measures},
        {2, "Poisson equation suite", poisson_suite},
        {3, "scaling slopes of f and the bracket", scaling_slopes},
        {4, "Psi closed form", psi_correctness},
        {5, "PDE solver order", pde_order},
        {6, "thinning exactness", thinning_exactness},
        {7, "a-priori ball", a_priori_ball},
        {8, "fixed-N averaging rate", fixed_n_rate},
        {9, "joint scaling", joint_scaling},
        {10, "sweep determinism across --jobs", determinism},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            std::cout << "criterion " << c.id << " ERROR " << c.name << ": " << e.what() << std::endl;
            return 2;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !v.pass;
        std::cout << "criterion " << c.id << " " << (v.pass ? "PASS" : "FAIL") << " " << c.name << ": " << v.detail
                  << " (" << num(secs) << " s)" << std::endl;
    }
    return strict ? failed : 0;
}
