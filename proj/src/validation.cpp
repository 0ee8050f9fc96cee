#include "hybridlab/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hybridlab/convergence.hpp"
#include "hybridlab/error.hpp"
#include "hybridlab/poisson.hpp"
#include "hybridlab/rng.hpp"
#include "hybridlab/simulator.hpp"

namespace hybridlab {

double stationary_lipschitz_estimate(const ChannelModel& model, double lo, double hi, int points) {
    require(hi > lo && points >= 2, "Lipschitz lattice needs hi > lo and >= 2 points");
    const double step = (hi - lo) / (points - 1);
    StateVector prev = stationary_measure(model, lo);
    double best = 0.0;
    for (int k = 1; k < points; ++k) {
        const StateVector cur = stationary_measure(model, lo + step * k);
        best = std::max(best, (cur - prev).cwiseAbs().sum() / step);
        prev = cur;
    }
    return 1.05 * best;
}

double averaged_growth_constant(const ChannelModel& model, const MollifierFamily& mollifiers, double zeta_bound) {
    const double lip_nu = stationary_lipschitz_estimate(model, -zeta_bound, zeta_bound);
    const double lip_g = model.max_driving_current() * lip_nu;
    const double lip_h = model.c_plus() * lip_nu;
    return mollifiers.gram_row_bound() / mollifiers.population() * (lip_g + lip_h * zeta_bound);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

GridFunction random_in_ball(const SpatialGrid& grid, double radius, SplitMix64& rng) {
    constexpr int modes = 16;
    double coef[modes];
    for (double& c : coef) c = rng.normal();
    GridFunction u = GridFunction::sample(grid, [&](double xi) {
        double s = 0.0;
        for (int k = 0; k < modes; ++k) s += coef[k] * std::sin((k + 1) * std::numbers::pi * xi);
        return s;
    });
    const double scale = radius * std::pow(rng.uniform(), 1.0 / modes) / norm(u);
    for (auto& v : u.values()) v *= scale;
    return u;
}

ChannelConfig random_config(const ChannelModel& model, int sites, SplitMix64& rng) {
    ChannelConfig y{std::vector<int>(static_cast<std::size_t>(sites))};
    for (auto& s : y.states) s = static_cast<int>(rng.uniform() * model.num_states());
    return y;
}

}  // namespace

std::vector<CheckResult> run_validation(const ChannelModel& model, const ValidationSettings& settings) {
    const int n = settings.population;
    const SpatialGrid grid(settings.grid_nodes > 0 ? settings.grid_nodes : 50 * n);
    const MollifierFamily family(n, grid);
    const int states = model.num_states();
    SplitMix64 rng(settings.seed);
    std::vector<CheckResult> out;

    {
        double worst_over = 0.0, worst_lip = 0.0;
        for (int a = 0; a < states; ++a)
            for (int b = 0; b < states; ++b) {
                if (a == b) continue;
                const auto& r = model.rate(a, b);
                for (int k = 0; k <= 2000; ++k) {
                    const double z = -10.0 + 0.01 * k;
                    const double v = r(z);
                    worst_over = std::max({worst_over, v - model.a_plus(), -v});
                }
                for (int k = 0; k < 1000; ++k) {
                    const double z1 = -10.0 + 20.0 * rng.uniform();
                    const double z2 = z1 + (rng.uniform() - 0.5) * 1e-2;
                    if (z1 == z2) continue;
                    worst_lip = std::max(worst_lip,
                                         std::abs(r(z1) - r(z2)) / std::abs(z1 - z2) - model.rate_lipschitz() * (1 + 1e-9));
                }
            }
        out.push_back({"rate bounds and Lipschitz constants", worst_over <= 0.0 && worst_lip <= 1e-12,
                       "max excess over a_plus " + fmt(worst_over) + ", Lipschitz excess " + fmt(worst_lip)});
    }
    {
        double worst_row = 0.0, worst_res = 0.0, worst_sum = 0.0, min_off = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const double z = -10.0 + 20.0 * rng.uniform();
            const RateMatrix q = rate_matrix(model, z);
            const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
            for (int a = 0; a < states; ++a) {
                worst_row = std::max(worst_row, std::abs(q.row(a).sum()) / scale);
                for (int b = 0; b < states; ++b)
                    if (a != b) min_off = std::min(min_off, q(a, b));
            }
            const StateVector nu = stationary_measure(q);
            worst_res = std::max(worst_res, (nu.transpose() * q).cwiseAbs().maxCoeff());
            worst_sum = std::max(worst_sum, std::abs(nu.sum() - 1.0));
        }
        out.push_back({"generator property", worst_row <= 1e-14 && min_off >= 0.0,
                       "max |row sum| " + fmt(worst_row) + ", min off-diagonal " + fmt(min_off)});
        out.push_back({"stationary measure", worst_res <= 1e-10 && worst_sum <= 1e-12,
                       "max |nu Q| " + fmt(worst_res) + ", max |sum nu - 1| " + fmt(worst_sum)});
    }
    {
        double worst = 0.0;
        double min_value = 0.0;
        bool support = true;
        for (const Mollifier& m : family) {
            worst = std::max(worst, m.norm() / std::sqrt(2.0 * n));
            const auto band = m.band();
            for (std::size_t j = 0; j < band.size(); ++j) {
                min_value = std::min(min_value, band[j]);
                const double xi = grid.node(m.first_node() + static_cast<int>(j));
                if (band[j] != 0.0 && std::abs(xi - m.center()) >= 1.0 / n) support = false;
            }
        }
        out.push_back({"mollifier norms and support", worst <= 1.02 && min_value >= 0.0 && support,
                       "max ||phi|| / sqrt(2N) " + fmt(worst)});
    }
    {
        const Tridiagonal lap = laplacian_matrix(grid);
        const double lambda = laplacian_first_eigenvalue(grid);
        double worst = -1e300;
        for (int k = 0; k < 100; ++k) {
            GridFunction u(grid);
            for (auto& v : u.values()) v = rng.normal();
            const auto lu = lap.apply(u.values());
            const double h = grid.spacing();
            worst = std::max(worst, discrete_dot(h, lu, u.values()) + lambda * (1 - 1e-9) * inner_product(u, u));
        }
        out.push_back({"Laplacian dissipativity", worst <= 0.0, "max (Lu,u) + lambda_1 ||u||^2 = " + fmt(worst)});
    }
    const APrioriBound bound = a_priori_bound(model, family);
    const GridFunction x0 =
        GridFunction::sample(grid, [](double xi) { return 0.5 * std::sin(std::numbers::pi * xi); });
    const double x0_sq = inner_product(x0, x0);
    const double radius = std::sqrt(std::max(bound.radius_squared(0.0, x0_sq),
                                             bound.radius_squared(settings.horizon, x0_sq)));
    {
        double max_phi = 0.0;
        for (const Mollifier& m : family) max_phi = std::max(max_phi, m.norm());
        const double zeta_bound = max_phi * radius;
        const double l = averaged_growth_constant(model, family, zeta_bound);
        double worst = -1e300;
        for (int k = 0; k < 200; ++k) {
            const GridFunction a = random_in_ball(grid, radius, rng);
            const GridFunction b = random_in_ball(grid, radius, rng);
            const GridFunction fa = averaged_drift(model, a, family);
            const GridFunction fb = averaged_drift(model, b, family);
            GridFunction df(grid), dx(grid);
            for (int j = 0; j < grid.size(); ++j) {
                df[j] = fa[j] - fb[j];
                dx[j] = a[j] - b[j];
            }
            const double d2 = inner_product(dx, dx);
            worst = std::max(worst, inner_product(df, dx) - l * d2 - 1e-12 * d2);
        }
        out.push_back({"averaged drift growth", worst <= 0.0, "L = " + fmt(l) + ", max excess " + fmt(worst)});
    }
    {
        double res = 0.0, cen = 0.0, ident = 0.0, bracket_excess = -1e300;
        for (int k = 0; k < 20; ++k) {
            const GridFunction x = random_in_ball(grid, radius, rng);
            const GridFunction z = random_in_ball(grid, radius, rng);
            const ChannelConfig y = random_config(model, family.sites(), rng);
            const PoissonSolution sol = solve_poisson(model, x, z, family);
            res = std::max(res, sol.max_residual());
            cen = std::max(cen, sol.max_centering());
            const GridFunction fx = reaction_term(model, x, y, family);
            const GridFunction fbar = averaged_drift(model, x, family);
            double phi = 0.0;
            for (int j = 0; j < grid.size(); ++j) phi += (fx[j] - fbar[j]) * (x[j] - z[j]);
            phi *= grid.spacing();
            ident = std::max(ident, std::abs(sol.generator_applied(y) - phi));
            bracket_excess = std::max(bracket_excess, bracket_bound(model, sol, y) - bracket_ceiling(model, sol, n));
        }
        out.push_back({"Poisson residuals and generator identity",
                       res <= 1e-10 && cen <= 1e-12 && ident <= 1e-8 && bracket_excess <= 0.0,
                       "residual " + fmt(res) + ", centering " + fmt(cen) + ", identity gap " + fmt(ident)});
    }
    {
        int ok = 0;
        std::string detail;
        for (int r = 0; r < settings.hybrid_runs; ++r) {
            SimParams p;
            p.epsilon = settings.epsilon;
            p.population = n;
            p.horizon = settings.horizon;
            p.dt = default_time_step(settings.epsilon);
            p.grid = grid;
            p.seed = replication_seed(settings.seed, static_cast<std::uint64_t>(r));
            SplitMix64 stream(p.seed);
            const ChannelConfig y0 = sample_configuration(model, x0, family, stream);
            try {
                simulate(model, p, x0, y0, stream, [](const SnapshotView&) {});
                ++ok;
            } catch (const Error& e) {
                detail = e.what();
            }
        }
        out.push_back({"a-priori ball on hybrid runs", ok == settings.hybrid_runs,
                       std::to_string(ok) + "/" + std::to_string(settings.hybrid_runs) + " runs inside" +
                           (detail.empty() ? "" : "; " + detail)});
    }
    {
        bool mono = psi(0.0) == 1.0;
        double prev = 1.0;
        for (int k = 1; k <= 10000 && mono; ++k) {
            const double v = psi(1e3 * k / 10000.0);
            mono = v < prev && v > 0.0;
            prev = v;
        }
        out.push_back({"Psi in (0,1] and decreasing", mono, "Psi(1e3) = " + fmt(psi(1e3))});
    }
    return out;
}

}  // namespace hybridlab
