#include "hybridlab/averaged.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hybridlab/error.hpp"
#include "hybridlab/imex.hpp"

namespace hybridlab {

void DeterministicTrajectory::interpolate(double t, std::span<double> out) const {
    const auto& times = path.times;
    require(!times.empty(), "empty trajectory");
    require(out.size() == static_cast<std::size_t>(path.grid.size()), "interpolation target has wrong size");
    if (t <= times.front()) {
        std::copy_n(path.x.front().values().begin(), out.size(), out.begin());
        return;
    }
    if (t >= times.back()) {
        std::copy_n(path.x.back().values().begin(), out.size(), out.begin());
        return;
    }
    auto k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    const double t0 = times[k - 1];
    const double t1 = times[k];
    const double w = (t - t0) / (t1 - t0);
    const auto a = path.x[k - 1].values();
    const auto b = path.x[k].values();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = a[j] + w * (b[j] - a[j]);
}

GridFunction DeterministicTrajectory::at(double t) const {
    GridFunction g(path.grid);
    interpolate(t, g.values());
    return g;
}

namespace {

template <class Drift, class Check>
DeterministicTrajectory integrate(const SpatialGrid& grid, double dt, double horizon, const GridFunction& x0,
                                  Drift&& drift_into, Check&& check) {
    require(x0.grid() == grid, "initial potential lives on a different grid");
    require(std::isfinite(dt) && dt > 0.0 && dt <= 1e-2, "time step must satisfy 0 < dt <= 1e-2");
    const TimeLattice lattice(dt, horizon);
    ImexStepper stepper(grid, dt);

    DeterministicTrajectory traj;
    traj.dt = dt;
    traj.path.grid = grid;
    traj.path.times.reserve(static_cast<std::size_t>(lattice.intervals() + 1));
    traj.path.x.reserve(static_cast<std::size_t>(lattice.intervals() + 1));

    std::vector<double> x(x0.values().begin(), x0.values().end());
    std::vector<double> drift(x.size());
    traj.path.times.push_back(0.0);
    traj.path.x.push_back(x0);
    double t = 0.0;
    for (long k = 1; k <= lattice.intervals(); ++k) {
        const double next = lattice.time(k);
        drift_into(std::span<const double>(x), std::span<double>(drift));
        stepper.step(x, drift, next - t);
        t = next;
        check(std::span<const double>(x), t);
        traj.path.times.push_back(t);
        traj.path.x.emplace_back(grid, x);
    }
    return traj;
}

}  // namespace

DeterministicTrajectory solve_averaged(const ChannelModel& model, int population, const SpatialGrid& grid, double dt,
                                       double horizon, const GridFunction& x0) {
    require(population >= 2, "population N must be >= 2");
    require(grid.size() >= 50 * population, "grid needs M >= 50 N interior nodes (M = " +
                                                std::to_string(grid.size()) + ", N = " + std::to_string(population) +
                                                ")");
    const MollifierFamily family(population, grid);
    const auto sites = static_cast<std::size_t>(family.sites());
    const double inv_n = 1.0 / population;
    const APrioriBound bound = a_priori_bound(model, family, dt);
    const double h = grid.spacing();
    const double x0_sq = discrete_dot(h, x0.values(), x0.values());
    std::vector<double> zeta(sites);
    std::vector<double> weights(sites);

    return integrate(
        grid, dt, horizon, x0,
        [&](std::span<const double> x, std::span<double> drift) {
            family.project(x, zeta);
            for (std::size_t s = 0; s < sites; ++s)
                weights[s] = inv_n * mean_current(model, stationary_measure(model, zeta[s]), zeta[s]);
            family.combine(weights, drift);
        },
        [&](std::span<const double> x, double t) {
            const double n2 = discrete_dot(h, x, x);
            if (n2 > bound.radius_squared(t, x0_sq) * (1.0 + 1e-9) + 1e-300)
                raise(ErrorCode::Internal,
                      "a-priori bound violated by the averaged solution at t=" + std::to_string(t));
        });
}

DeterministicTrajectory solve_limit(const ChannelModel& model, const SpatialGrid& grid, double dt, double horizon,
                                    const GridFunction& x0) {
    return integrate(
        grid, dt, horizon, x0,
        [&](std::span<const double> x, std::span<double> drift) {
            for (std::size_t j = 0; j < x.size(); ++j)
                drift[j] = mean_current(model, stationary_measure(model, x[j]), x[j]);
        },
        [](std::span<const double>, double) {});
}

double deterministic_gap(const DeterministicTrajectory& a, const DeterministicTrajectory& b) {
    require(a.path.grid == b.path.grid, "trajectories live on different grids");
    require(a.path.times.size() == b.path.times.size(), "trajectories have different lattices");
    const double h = a.path.grid.spacing();
    double sup = 0.0;
    for (std::size_t k = 0; k < a.path.times.size(); ++k) {
        require(std::abs(a.path.times[k] - b.path.times[k]) <= 1e-12 * std::max(1.0, a.path.times[k]),
                "trajectories have different lattices");
        const auto u = a.path.x[k].values();
        const auto v = b.path.x[k].values();
        double s = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) s += (u[j] - v[j]) * (u[j] - v[j]);
        sup = std::max(sup, h * s);
    }
    return sup;
}

}  // namespace hybridlab
