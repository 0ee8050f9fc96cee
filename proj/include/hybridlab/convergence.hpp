#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybridlab/averaged.hpp"
#include "hybridlab/channel.hpp"
#include "hybridlab/simulator.hpp"

namespace hybridlab {

/// Psi(x) = (2/x^2) int_0^x log(1+y) dy = 2((1+x) log(1+x) - x)/x^2, Psi(0) = 1.
/// Below 1e-4 the series 1 - x/3 + x^2/6 is used.
double psi(double x);

/// Constants C1..C5 and the exponents of alpha_N, beta_N, gamma_N, rho_N as powers of N.
struct BoundParameters {
    std::array<double, 5> c{1.0, 1.0, 1.0, 1.0, 1.0};
    double alpha_exp = 1.0;
    double beta_exp = 1.5;
    double gamma_exp = 3.0;
    double rho_exp = 3.0;

    double alpha(int n) const { return std::pow(static_cast<double>(n), alpha_exp); }
    double beta(int n) const { return std::pow(static_cast<double>(n), beta_exp); }
    double gamma(int n) const { return std::pow(static_cast<double>(n), gamma_exp); }
    double rho(int n) const { return std::pow(static_cast<double>(n), rho_exp); }
    void validate() const;
};

/// p0 + 1{eps (beta_N + gamma_N) >= C2 delta}
///    + C3 exp(-C4 delta^2 / (eps rho_N) * Psi(C5 delta alpha_N / rho_N))
double theoretical_tail_bound(double delta, double epsilon, int population, double p0, const BoundParameters& params);

/// Running sup_t ||X_t - target(t)||^2 over the union of the snapshot times fed
/// in and the target lattice. Between fed snapshots X is linearly interpolated;
/// the target is interpolated at fed times.
class SupDiffTracker {
public:
    explicit SupDiffTracker(const DeterministicTrajectory& target);

    void add(double t, std::span<const double> x);
    double value() const noexcept { return sup_; }
    double last_time() const noexcept { return last_t_; }

private:
    double gap_at_target_index(std::size_t k, std::span<const double> x) const;

    const DeterministicTrajectory& target_;
    std::vector<double> prev_;
    std::vector<double> scratch_;
    std::vector<double> interp_;
    double last_t_ = -1.0;
    std::size_t next_index_ = 0;  // first target lattice point not yet compared
    double sup_ = 0.0;
};

/// sup_diff of a hybrid path against a deterministic path on the union lattice.
double sup_diff(const SampledPath& a, const DeterministicTrajectory& b);

enum class Target { Averaged, Limit };

struct InitialState {
    double x0_amplitude = 0.5;          // x0 = amplitude * sin(pi xi)
    std::optional<int> fixed_state;     // y0 constant; otherwise sampled from mu_N(x0)
};

struct ExperimentPlan {
    ChannelModel model = default_sigmoid_model();
    std::vector<std::pair<double, int>> pairs;  // (eps, N)
    int replications = 1;
    double horizon = 1.0;
    double dt = 0.0;            // 0: min(1e-3, eps/10) per pair
    double target_dt = 1e-4;
    int grid_nodes = 0;         // 0: 50 * max N
    InitialState initial;
    std::uint64_t seed = 0;
    Target target = Target::Averaged;

    /// Cartesian product of eps and N lists.
    static std::vector<std::pair<double, int>> product(const std::vector<double>& eps, const std::vector<int>& ns);
    /// eps = c / N^3 for each N.
    static std::vector<std::pair<double, int>> joint_schedule(double c, const std::vector<int>& ns);

    int resolved_grid_nodes() const;
    double step_for(double epsilon) const { return dt > 0.0 ? dt : default_time_step(epsilon); }
    void validate() const;
};

struct TailPoint {
    double delta;
    double freq;
    double ci_half;
};

struct PairReport {
    double epsilon;
    int population;
    std::vector<double> sup_err2;  // by replication index
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
    std::vector<TailPoint> tail;
};

struct ErrorReport {
    std::vector<PairReport> pairs;
    std::vector<double> delta_grid;
};

/// Runs R replications per pair on `jobs` worker threads. Replication r of every
/// pair uses seed splitmix64(master ^ r). Results are merged by index, so the
/// report does not depend on jobs. A failing replication aborts the run with
/// an error naming (eps, N, rep).
ErrorReport run_ensemble(const ExperimentPlan& plan, int jobs, const std::vector<double>* delta_grid = nullptr);

/// 12 log-spaced points between the pooled 5th and 95th percentiles.
std::vector<double> default_delta_grid(const std::vector<PairReport>& pairs);

/// Fill quantiles and tail frequencies of each pair.
void summarize(ErrorReport& report);

struct ScalingFit {
    double slope = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false;
    int points = 0;
};

/// Least-squares slope of log median sup-err^2 against log eps at fixed N,
/// with a 90% bootstrap interval over replications.
ScalingFit fit_scaling(const ErrorReport& report, int population, int bootstrap = 1000, std::uint64_t seed = 0);

struct JointRow {
    int population;
    double epsilon;
    double median;
    double median_lo;
    double median_hi;
};

/// Pairs sorted by N with order-statistic 90% intervals for the median.
std::vector<JointRow> joint_scaling_table(const ErrorReport& report);

/// Medians nonincreasing in N up to the interval half-widths of neighbouring rows.
bool joint_nonincreasing(const std::vector<JointRow>& rows);

/// C1 = C2 = C5 = 1; C4 on a log grid spanning 12 decades around the reciprocal
/// typical exponent, C3 the smallest value making the bound
/// dominate freq + ci_half at every (pair, delta). Returns the (C3, C4) with the
/// smallest total bound over the grid.
BoundParameters fit_tail_constants(const ErrorReport& report);

/// Largest (freq + ci_half) - bound over the report; <= 0 when the bound dominates.
double tail_domination_margin(const ErrorReport& report, const BoundParameters& params);

/// Log-log SVG of median sup-err^2 against eps per N, and against N when the
/// pairs follow eps = c/N^3.
std::string render_svg(const ErrorReport& report);

}  // namespace hybridlab
