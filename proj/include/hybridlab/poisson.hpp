#pragma once

#include <cstdint>
#include <vector>

#include "hybridlab/channel.hpp"
#include "hybridlab/grid.hpp"

namespace hybridlab {

/// Site-i contribution to Phi(x, y) = (F^N(x,y) - Fbar^N(x), x - z) when y(i) = e:
/// (1/N) [c_e (v_e - zeta_i) - sum_e' nu_e' c_e' (v_e' - zeta_i)] (phi_i, x - z).
/// site is 1-based.
double phi_site(const ChannelModel& model, int site, const GridFunction& x, int state, const GridFunction& z,
                const MollifierFamily& mollifiers);

/// Centered solution of Q f = phi, nu . f = 0, from the bordered least-squares
/// system [Q; nu] f = [phi; 0]. Throws inconsistent-rhs when nu . phi != 0 and
/// reducible-chain when the system is rank deficient.
StateVector solve_poisson_site(const RateMatrix& q, const StateVector& phi, const StateVector& nu);

struct SitePoisson {
    double zeta = 0.0;
    RateMatrix q;
    StateVector nu;
    StateVector phi;
    StateVector f;
};

/// f^N(x, ., z) in site-decomposed form: f^N(x, y) = sum_i f_i(y(i)).
struct PoissonSolution {
    std::vector<SitePoisson> sites;

    double value(const ChannelConfig& y) const;
    /// Phi(x, y) = sum_i phi_i(y(i)).
    double phi(const ChannelConfig& y) const;
    /// sum_i [Q(zeta_i) f_i](y(i)); equals phi(y) up to rounding.
    double generator_applied(const ChannelConfig& y) const;
    /// sup_y |f^N(x, y)|, exact via the site decomposition.
    double sup_abs() const;
    /// max_{i,e} |f_i(e)|
    double max_site_abs() const;
    /// Worst per-site residual |Q f_i - phi_i|_inf and centering |nu . f_i|.
    double max_residual() const;
    double max_centering() const;
};

PoissonSolution solve_poisson(const ChannelModel& model, const GridFunction& x, const GridFunction& z,
                              const MollifierFamily& mollifiers);

/// f^N(x, y, z) = sum_i f_i(y(i)).
double assemble_f(const ChannelModel& model, const GridFunction& x, const ChannelConfig& y, const GridFunction& z,
                  const MollifierFamily& mollifiers);

/// sum_i sum_{e != y(i)} a_{y(i) e}(zeta_i) (f_i(e) - f_i(y(i)))^2
double bracket_bound(const ChannelModel& model, const PoissonSolution& solution, const ChannelConfig& y);
double bracket_bound(const ChannelModel& model, const GridFunction& x, const ChannelConfig& y, const GridFunction& z,
                     const MollifierFamily& mollifiers);
/// sup over y of bracket_bound, exact via the site decomposition.
double bracket_sup(const ChannelModel& model, const PoissonSolution& solution);
/// 4 a_+ |E| N (max_{i,e} |f_i(e)|)^2
double bracket_ceiling(const ChannelModel& model, const PoissonSolution& solution, int population);

struct ScalingOptions {
    int samples = 64;          // x draws per N
    int time_points = 5;       // lattice points t along Xbar^N
    int directions = 10;       // finite-difference directions for f_x
    double fd_step = 1e-5;
    int sine_modes = 16;
    double horizon = 1.0;
    double dt = 1e-3;          // averaged trajectory step, also the f_t difference step
    double x0_amplitude = 0.5; // Xbar^N starts from x0_amplitude * sin(pi xi)
    int bootstrap = 200;
    int grid_factor = 50;      // M = grid_factor * N
};

struct ScalingRow {
    int population = 0;
    double sup_f = 0.0;
    double sup_bracket = 0.0;
    double sup_fx = 0.0;
    double sup_ft = 0.0;
};

struct SlopeEstimate {
    double slope = 0.0;
    double lo = 0.0;   // 90% bootstrap interval
    double hi = 0.0;
    bool degenerate = false;

    double half_width() const noexcept { return 0.5 * (hi - lo); }
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    SlopeEstimate alpha;   // sup |f|
    SlopeEstimate rho;     // sup bracket
    SlopeEstimate beta;    // sup |f_x|
    SlopeEstimate gamma;   // sup |f_t|
    ScalingOptions options;
    std::uint64_t seed = 0;

    /// slope_rho within the combined 90% half-widths of 1 + 2 slope_alpha.
    bool consistent() const noexcept;
};

/// Sample x uniformly in the a-priori ball (random sine combinations), z on a
/// time lattice along Xbar^N, sup over y exactly; fit log-log slopes against N.
ScalingReport measure_scalings(const ChannelModel& model, const std::vector<int>& populations,
                               const ScalingOptions& options, std::uint64_t seed);

}  // namespace hybridlab
