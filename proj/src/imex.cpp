#include "hybridlab/imex.hpp"

#include <cmath>

#include "hybridlab/error.hpp"

namespace hybridlab {

TimeLattice::TimeLattice(double dt, double horizon) : dt_(dt), horizon_(horizon), intervals_(1) {
    require(std::isfinite(horizon) && horizon > 0.0, "time horizon must be > 0");
    require(std::isfinite(dt) && dt > 0.0 && dt <= horizon, "time step must satisfy 0 < dt <= T");
    intervals_ = static_cast<long>(std::ceil(horizon / dt * (1.0 - 1e-12)));
    if (intervals_ < 1) intervals_ = 1;
}

GridFunction imex_step(const GridFunction& x, const GridFunction& drift, double dt, const Tridiagonal& laplacian) {
    require(x.grid() == drift.grid(), "imex_step: state and drift live on different grids");
    require(laplacian.size() == x.size(), "imex_step: operator dimension mismatch");
    require(std::isfinite(dt) && dt > 0.0, "imex_step: dt must be > 0");
    const int n = x.size();
    Tridiagonal system{std::vector<double>(laplacian.lower.size()), std::vector<double>(laplacian.diag.size()),
                       std::vector<double>(laplacian.upper.size())};
    std::vector<double> rhs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        system.lower[k] = -dt * laplacian.lower[k];
        system.diag[k] = 1.0 - dt * laplacian.diag[k];
        system.upper[k] = -dt * laplacian.upper[k];
        rhs[k] = x[j] + dt * drift[j];
    }
    std::vector<double> scratch(static_cast<std::size_t>(n));
    GridFunction out(x.grid());
    solve_tridiagonal(system, rhs, out.values(), scratch);
    return out;
}

ImexStepper::ImexStepper(const SpatialGrid& grid, double nominal_dt)
    : grid_(grid),
      nominal_dt_(nominal_dt),
      tmp_sweep_(static_cast<std::size_t>(grid.size())),
      tmp_pivot_inv_(static_cast<std::size_t>(grid.size())) {
    require(std::isfinite(nominal_dt) && nominal_dt > 0.0, "time step must be > 0");
    factor(nominal_dt, sweep_, pivot_inv_);
}

void ImexStepper::factor(double dt, std::vector<double>& sweep, std::vector<double>& pivot_inv) const {
    const auto n = static_cast<std::size_t>(grid_.size());
    sweep.resize(n);
    pivot_inv.resize(n);
    const double r = dt / (grid_.spacing() * grid_.spacing());
    const double off = -r;
    const double diag = 1.0 + 2.0 * r;
    double m = diag;
    pivot_inv[0] = 1.0 / m;
    sweep[0] = off * pivot_inv[0];
    for (std::size_t j = 1; j < n; ++j) {
        m = diag - off * sweep[j - 1];
        pivot_inv[j] = 1.0 / m;
        sweep[j] = off * pivot_inv[j];
    }
}

void ImexStepper::solve(std::span<double> x, std::span<const double> drift, double dt,
                        const std::vector<double>& sweep, const std::vector<double>& pivot_inv) {
    const std::size_t n = x.size();
    const double off = -dt / (grid_.spacing() * grid_.spacing());
    double prev = (x[0] + dt * drift[0]) * pivot_inv[0];
    x[0] = prev;
    for (std::size_t j = 1; j < n; ++j) {
        prev = (x[j] + dt * drift[j] - off * prev) * pivot_inv[j];
        x[j] = prev;
    }
    for (std::size_t j = n - 1; j-- > 0;) x[j] -= sweep[j] * x[j + 1];
}

void ImexStepper::step(std::span<double> x, std::span<const double> drift, double dt) {
    if (std::abs(dt - nominal_dt_) <= 1e-9 * nominal_dt_) {
        solve(x, drift, nominal_dt_, sweep_, pivot_inv_);
        return;
    }
    factor(dt, tmp_sweep_, tmp_pivot_inv_);
    solve(x, drift, dt, tmp_sweep_, tmp_pivot_inv_);
}

}  // namespace hybridlab
