#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybridlab/channel.hpp"
#include "hybridlab/grid.hpp"

namespace hybridlab {

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

struct ValidationSettings {
    int population = 8;
    int grid_nodes = 0;   // 0: 50 * population
    double epsilon = 0.1;
    double horizon = 1.0;
    int hybrid_runs = 4;
    std::uint64_t seed = 0;
};

/// Largest ||nu(a) - nu(b)||_1 / |a - b| over neighbouring points of a uniform
/// lattice on [lo, hi], scaled by a 5% safety factor.
double stationary_lipschitz_estimate(const ChannelModel& model, double lo, double hi, int points = 4001);

/// L in (Fbar(x1) - Fbar(x2), x1 - x2) <= L ||x1 - x2||^2 for projections bounded
/// by zeta_bound in magnitude: (1/N) G (Lip_g + Lip_h zeta_bound) with
/// g = sum nu c v, h = sum nu c and G the Gram row bound of the mollifiers.
double averaged_growth_constant(const ChannelModel& model, const MollifierFamily& mollifiers, double zeta_bound);

/// Invariant suite for a model: rate bounds, generator property, stationary
/// residuals, mollifier norms, dissipativity, averaged growth, Poisson residuals,
/// a-priori ball on a few hybrid runs and Psi monotonicity.
std::vector<CheckResult> run_validation(const ChannelModel& model, const ValidationSettings& settings);

}  // namespace hybridlab
