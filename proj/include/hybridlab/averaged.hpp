#pragma once

#include <span>

#include "hybridlab/channel.hpp"
#include "hybridlab/grid.hpp"
#include "hybridlab/simulator.hpp"

namespace hybridlab {

/// Deterministic path on the uniform lattice of a TimeLattice.
struct DeterministicTrajectory {
    SampledPath path;
    double dt = 0.0;

    /// Linear interpolation in time; t is clamped to [0, T].
    void interpolate(double t, std::span<double> out) const;
    GridFunction at(double t) const;
};

/// Averaged equation dX/dt = Lap X + Fbar^N(X). Needs M >= 50 N and dt <= 1e-2.
/// The stepping and lattice match simulate(), so a single-state model reproduces
/// a zero-rate hybrid run exactly. Each snapshot is checked against the
/// a-priori ball and an internal error is raised on violation.
DeterministicTrajectory solve_averaged(const ChannelModel& model, int population, const SpatialGrid& grid, double dt,
                                       double horizon, const GridFunction& x0);

/// Limit equation dX/dt = Lap X + limit_drift(X).
DeterministicTrajectory solve_limit(const ChannelModel& model, const SpatialGrid& grid, double dt, double horizon,
                                    const GridFunction& x0);

/// sup_t ||a(t) - b(t)||^2 over the shared lattice of two deterministic paths.
double deterministic_gap(const DeterministicTrajectory& a, const DeterministicTrajectory& b);

}  // namespace hybridlab
