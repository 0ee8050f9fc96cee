#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridlab/grid.hpp"
#include "hybridlab/rng.hpp"

namespace hybridlab {

/// A voltage-dependent jump rate a(zeta): identically zero, constant, or a
/// logistic sigmoid lo + (hi - lo) / (1 + exp(-slope (zeta - midpoint))).
/// A negative slope gives a decreasing rate.
class RateFunction {
public:
    enum class Kind { Zero, Constant, Sigmoid };

    static RateFunction zero() noexcept { return RateFunction(Kind::Zero, 0, 0, 0, 0); }
    static RateFunction constant(double rate);
    static RateFunction sigmoid(double lo, double hi, double slope, double midpoint);

    double operator()(double zeta) const noexcept {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return lo_;
            case Kind::Sigmoid: return lo_ + (hi_ - lo_) / (1.0 + std::exp(-slope_ * (zeta - midpoint_)));
        }
        return 0.0;
    }

    Kind kind() const noexcept { return kind_; }
    bool is_zero() const noexcept { return kind_ == Kind::Zero; }
    double supremum() const noexcept;
    double lipschitz() const noexcept;

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double slope() const noexcept { return slope_; }
    double midpoint() const noexcept { return midpoint_; }

private:
    RateFunction(Kind kind, double lo, double hi, double slope, double midpoint) noexcept
        : kind_(kind), lo_(lo), hi_(hi), slope_(slope), midpoint_(midpoint) {}

    Kind kind_;
    double lo_;
    double hi_;
    double slope_;
    double midpoint_;
};

/// Finite channel state space E with conductances c_e >= 0, reversal
/// potentials v_e and the rate family a_{e1 e2}(zeta).
class ChannelModel {
public:
    /// rates is row-major |E| x |E|; diagonal entries are ignored.
    /// declared_a_plus overrides the majorant used by the simulator; it
    /// defaults to the largest rate supremum.
    ChannelModel(std::vector<std::string> states, std::vector<double> conductance, std::vector<double> reversal,
                 std::vector<RateFunction> rates, std::optional<double> declared_a_plus = std::nullopt);

    int num_states() const noexcept { return static_cast<int>(states_.size()); }
    const std::string& state_name(int e) const { return states_[static_cast<std::size_t>(e)]; }
    /// -1 when absent
    int state_index(std::string_view name) const noexcept;

    double conductance(int e) const noexcept { return conductance_[static_cast<std::size_t>(e)]; }
    double reversal(int e) const noexcept { return reversal_[static_cast<std::size_t>(e)]; }
    const RateFunction& rate(int from, int to) const noexcept {
        return rates_[static_cast<std::size_t>(from * num_states() + to)];
    }

    /// Current c_e (v_e - zeta) carried by a channel in state e.
    double current(int e, double zeta) const noexcept { return conductance(e) * (reversal(e) - zeta); }
    /// Sum of a_{from,e}(zeta) over e != from.
    double exit_rate(int from, double zeta) const noexcept;

    double a_plus() const noexcept { return a_plus_; }
    double c_plus() const noexcept { return c_plus_; }
    double v_plus() const noexcept { return v_plus_; }
    /// Largest Lipschitz constant among the rates.
    double rate_lipschitz() const noexcept;
    /// Largest |c_e v_e|.
    double max_driving_current() const noexcept;

private:
    std::vector<std::string> states_;
    std::vector<double> conductance_;
    std::vector<double> reversal_;
    std::vector<RateFunction> rates_;
    double a_plus_ = 0.0;
    double c_plus_ = 0.0;
    double v_plus_ = 0.0;
};

/// States (C, O); C->O at opening, O->C at closing.
ChannelModel two_state_constant(double opening, double closing, std::array<double, 2> conductance,
                                std::array<double, 2> reversal);
ChannelModel two_state_sigmoid(RateFunction opening, RateFunction closing, std::array<double, 2> conductance,
                               std::array<double, 2> reversal);
/// Linear chain C1 <-> C2 <-> O; C1 <-> O rates are identically zero.
ChannelModel three_state_chain(RateFunction c1_c2, RateFunction c2_c1, RateFunction c2_o, RateFunction o_c2,
                               std::array<double, 3> conductance, std::array<double, 3> reversal);
/// Default two-state sigmoid instance used by experiments and examples.
ChannelModel default_sigmoid_model();

using RateMatrix = Eigen::MatrixXd;
using StateVector = Eigen::VectorXd;

RateMatrix rate_matrix(const ChannelModel& model, double zeta);

/// Unique probability vector with nu Q = 0, from the bordered least-squares
/// system [Q^T; 1^T] nu = [0; 1]. Throws reducible-chain when the kernel of Q^T
/// is more than one-dimensional.
StateVector stationary_measure(const RateMatrix& q);
StateVector stationary_measure(const ChannelModel& model, double zeta);

/// y(i) for the N-1 sites, stored 0-based by site.
struct ChannelConfig {
    std::vector<int> states;

    int size() const noexcept { return static_cast<int>(states.size()); }
    int operator[](int k) const { return states[static_cast<std::size_t>(k)]; }
    int& operator[](int k) { return states[static_cast<std::size_t>(k)]; }
    bool operator==(const ChannelConfig&) const = default;
};

/// y(i) drawn independently from nu((x, phi_i)): one uniform per site, in site order.
ChannelConfig sample_configuration(const ChannelModel& model, std::span<const double> zeta, SplitMix64& rng);
ChannelConfig sample_configuration(const ChannelModel& model, const GridFunction& x,
                                   const MollifierFamily& mollifiers, SplitMix64& rng);

/// F^N(x,y) = (1/N) sum_i c_{y(i)} (v_{y(i)} - (x,phi_i)) phi_i
GridFunction reaction_term(const ChannelModel& model, const GridFunction& x, const ChannelConfig& y,
                           const MollifierFamily& mollifiers);

/// Mean current sum_e nu_e c_e (v_e - zeta).
double mean_current(const ChannelModel& model, const StateVector& nu, double zeta) noexcept;

/// Fbar^N(x) = (1/N) sum_i sum_e nu((x,phi_i))_e c_e (v_e - (x,phi_i)) phi_i
GridFunction averaged_drift(const ChannelModel& model, const GridFunction& x, const MollifierFamily& mollifiers);

struct DriftEstimate {
    GridFunction mean;
    GridFunction standard_error;
};

/// Monte Carlo estimate of Fbar^N(x) from i.i.d. configurations drawn from mu_N(x).
DriftEstimate empirical_average_drift(const ChannelModel& model, const GridFunction& x,
                                      const MollifierFamily& mollifiers, int samples, std::uint64_t seed);

/// Pointwise drift sum_e nu(x(xi))_e c_e (v_e - x(xi)) of the infinite-population limit.
GridFunction limit_drift(const ChannelModel& model, const GridFunction& x);

}  // namespace hybridlab
