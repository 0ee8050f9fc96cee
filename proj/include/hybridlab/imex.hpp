#pragma once

#include <span>
#include <vector>

#include "hybridlab/grid.hpp"

namespace hybridlab {

/// Snapshot lattice t_k = k*dt for k < K and t_K = T, with K = ceil(T/dt).
class TimeLattice {
public:
    TimeLattice(double dt, double horizon);

    double dt() const noexcept { return dt_; }
    double horizon() const noexcept { return horizon_; }
    long intervals() const noexcept { return intervals_; }
    double time(long k) const noexcept { return k >= intervals_ ? horizon_ : static_cast<double>(k) * dt_; }

private:
    double dt_;
    double horizon_;
    long intervals_;
};

/// One backward-Euler diffusion step with the reaction frozen explicitly:
/// solve (I - dt L) x' = x + dt * drift.
GridFunction imex_step(const GridFunction& x, const GridFunction& drift, double dt, const Tridiagonal& laplacian);

/// In-place imex_step for the Dirichlet Laplacian of a fixed grid. The Thomas
/// factorization for the nominal step is cached; other step sizes are
/// factored on the fly with the same arithmetic.
class ImexStepper {
public:
    ImexStepper(const SpatialGrid& grid, double nominal_dt);

    const SpatialGrid& grid() const noexcept { return grid_; }
    double nominal_dt() const noexcept { return nominal_dt_; }

    /// Steps within a relative 1e-9 of the nominal size are taken as exactly nominal.
    void step(std::span<double> x, std::span<const double> drift, double dt);

private:
    void factor(double dt, std::vector<double>& sweep, std::vector<double>& pivot_inv) const;
    void solve(std::span<double> x, std::span<const double> drift, double dt, const std::vector<double>& sweep,
               const std::vector<double>& pivot_inv);

    SpatialGrid grid_;
    double nominal_dt_;
    std::vector<double> sweep_;
    std::vector<double> pivot_inv_;
    std::vector<double> tmp_sweep_;
    std::vector<double> tmp_pivot_inv_;
};

}  // namespace hybridlab
