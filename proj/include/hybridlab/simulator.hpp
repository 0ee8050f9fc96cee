#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hybridlab/channel.hpp"
#include "hybridlab/grid.hpp"
#include "hybridlab/imex.hpp"

namespace hybridlab {

/// Parameters of one hybrid run. population is N (N-1 channel sites).
struct SimParams {
    double epsilon = 0.1;
    int population = 4;
    double horizon = 1.0;
    double dt = 1e-3;
    SpatialGrid grid{200};
    std::uint64_t seed = 0;
    /// Check every snapshot against the a-priori Gronwall ball.
    bool check_a_priori = true;

    void validate() const;
};

/// min(1e-3, eps/10)
double default_time_step(double epsilon) noexcept;

struct JumpEvent {
    double time;
    int site;  // 1-based, as in z_i = i/N
    int from;
    int to;
};

/// One recorded snapshot as seen by a sink. jump is null for lattice rows;
/// lattice_index is -1 for jump rows. y is the configuration after the jump.
struct SnapshotView {
    double time;
    std::span<const double> x;
    const ChannelConfig& y;
    const JumpEvent* jump;
    long lattice_index;
};

using SnapshotSink = std::function<void(const SnapshotView&)>;

/// Time-stamped samples of a path X_t on a shared grid.
struct SampledPath {
    SpatialGrid grid{3};
    std::vector<double> times;
    std::vector<GridFunction> x;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

struct HybridTrajectory {
    SampledPath path;
    std::vector<ChannelConfig> y;
    /// index into jumps for jump rows, -1 for lattice rows
    std::vector<int> event;
    std::vector<long> lattice_index;
    std::vector<JumpEvent> jumps;
};

/// Radius of the a-priori ball: with kappa = 1 + 2 F_d - 2 A_d,
/// sup ||x_t||^2 <= e^{kappa t} ||x_0||^2 + F_0^2 (e^{kappa t} - 1) / kappa.
struct APrioriBound {
    double dissipation = 0.0;  // [A]_d
    double growth = 0.0;       // [F]_d
    double forcing = 0.0;      // [F]_0

    double kappa() const noexcept { return 1.0 + 2.0 * growth - 2.0 * dissipation; }
    double radius_squared(double t, double x0_norm_squared) const noexcept;
};

/// Constants for the neuron model on a discrete grid: [A]_d is the first
/// Dirichlet eigenvalue, [F]_d = 0 since F^N(., y) is monotone decreasing,
/// [F]_0 = max|c_e v_e| * ||(1/N) sum_i phi_i||.
/// With dt > 0 the dissipation is the backward-Euler rate log(1 + lambda dt) / dt,
/// which is what the stepped solution actually achieves.
APrioriBound a_priori_bound(const ChannelModel& model, const MollifierFamily& mollifiers, double dt = 0.0);

/// Majorant (N-1) a_+ (|E|-1) / eps of the total jump intensity.
double thinning_majorant(const ChannelModel& model, int population, double epsilon) noexcept;

/// Exact-in-law jump simulation by thinning, PDE flow by imex steps of at most
/// dt with y frozen. Random draws, in order: for each candidate its waiting
/// time (drawn when the previous candidate is resolved), an acceptance
/// uniform, and on acceptance one uniform selecting (site, target).
void simulate(const ChannelModel& model, const SimParams& params, const GridFunction& x0, const ChannelConfig& y0,
              const SnapshotSink& sink);
/// As above but drawing from rng; params.seed is ignored.
void simulate(const ChannelModel& model, const SimParams& params, const GridFunction& x0, const ChannelConfig& y0,
              SplitMix64& rng, const SnapshotSink& sink);
HybridTrajectory simulate(const ChannelModel& model, const SimParams& params, const GridFunction& x0,
                          const ChannelConfig& y0);

/// Scalar instance: H = R, A = -decay, F(x, y) = c_y (v_y - x), zeta = x.
struct ToyParams {
    double epsilon = 0.1;
    double horizon = 1.0;
    double dt = 1e-2;
    double decay = 1.0;
    std::uint64_t seed = 0;
};

struct ToyTrajectory {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<int> y;
    std::vector<JumpEvent> jumps;
};

/// Same thinning scheme as simulate, with the exact exponential flow between events.
ToyTrajectory simulate_toy(const ChannelModel& model, const ToyParams& params, double x0, int y0);

}  // namespace hybridlab
