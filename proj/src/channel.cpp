#include "hybridlab/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hybridlab/error.hpp"

namespace hybridlab {

RateFunction RateFunction::constant(double rate) {
    require(std::isfinite(rate) && rate >= 0.0, "constant rate must be finite and >= 0");
    if (rate == 0.0) return zero();
    return RateFunction(Kind::Constant, rate, rate, 0.0, 0.0);
}

RateFunction RateFunction::sigmoid(double lo, double hi, double slope, double midpoint) {
    require(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(slope) && std::isfinite(midpoint),
            "sigmoid rate parameters must be finite");
    require(lo > 0.0 && hi >= lo, "sigmoid rate needs 0 < lo <= hi");
    return RateFunction(Kind::Sigmoid, lo, hi, slope, midpoint);
}

double RateFunction::supremum() const noexcept {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return lo_;
        case Kind::Sigmoid: return hi_;
    }
    return 0.0;
}

double RateFunction::lipschitz() const noexcept {
    if (kind_ != Kind::Sigmoid) return 0.0;
    return (hi_ - lo_) * std::abs(slope_) / 4.0;
}

ChannelModel::ChannelModel(std::vector<std::string> states, std::vector<double> conductance,
                           std::vector<double> reversal, std::vector<RateFunction> rates,
                           std::optional<double> declared_a_plus)
    : states_(std::move(states)),
      conductance_(std::move(conductance)),
      reversal_(std::move(reversal)),
      rates_(std::move(rates)) {
    const auto n = states_.size();
    require(n >= 1 && n <= 8, "channel model needs 1..8 states, got " + std::to_string(n));
    require(conductance_.size() == n, "one conductance per state required");
    require(reversal_.size() == n, "one reversal potential per state required");
    require(rates_.size() == n * n, "rate table must be |E| x |E|");
    for (std::size_t a = 0; a < n; ++a) {
        require(!states_[a].empty(), "state names must be non-empty");
        for (std::size_t b = a + 1; b < n; ++b) require(states_[a] != states_[b], "duplicate state " + states_[a]);
        require(std::isfinite(conductance_[a]) && conductance_[a] >= 0.0, "conductances must be finite and >= 0");
        require(std::isfinite(reversal_[a]), "reversal potentials must be finite");
        rates_[a * n + a] = RateFunction::zero();
    }
    double sup = 0.0;
    for (const auto& r : rates_) sup = std::max(sup, r.supremum());
    if (declared_a_plus) {
        require(std::isfinite(*declared_a_plus) && *declared_a_plus >= 0.0, "declared a_plus must be >= 0");
        a_plus_ = *declared_a_plus;
    } else {
        a_plus_ = sup;
    }
    for (std::size_t e = 0; e < n; ++e) {
        c_plus_ = std::max(c_plus_, conductance_[e]);
        v_plus_ = std::max(v_plus_, std::abs(reversal_[e]));
    }
}

int ChannelModel::state_index(std::string_view name) const noexcept {
    for (std::size_t e = 0; e < states_.size(); ++e)
        if (states_[e] == name) return static_cast<int>(e);
    return -1;
}

double ChannelModel::exit_rate(int from, double zeta) const noexcept {
    double total = 0.0;
    for (int e = 0; e < num_states(); ++e)
        if (e != from) total += rate(from, e)(zeta);
    return total;
}

double ChannelModel::rate_lipschitz() const noexcept {
    double l = 0.0;
    for (const auto& r : rates_) l = std::max(l, r.lipschitz());
    return l;
}

double ChannelModel::max_driving_current() const noexcept {
    double m = 0.0;
    for (int e = 0; e < num_states(); ++e) m = std::max(m, std::abs(conductance(e) * reversal(e)));
    return m;
}

ChannelModel two_state_constant(double opening, double closing, std::array<double, 2> conductance,
                                std::array<double, 2> reversal) {
    return two_state_sigmoid(RateFunction::constant(opening), RateFunction::constant(closing), conductance,
                             reversal);
}

ChannelModel two_state_sigmoid(RateFunction opening, RateFunction closing, std::array<double, 2> conductance,
                               std::array<double, 2> reversal) {
    return ChannelModel({"C", "O"}, {conductance[0], conductance[1]}, {reversal[0], reversal[1]},
                        {RateFunction::zero(), opening, closing, RateFunction::zero()});
}

ChannelModel three_state_chain(RateFunction c1_c2, RateFunction c2_c1, RateFunction c2_o, RateFunction o_c2,
                               std::array<double, 3> conductance, std::array<double, 3> reversal) {
    const auto z = RateFunction::zero();
    return ChannelModel({"C1", "C2", "O"}, {conductance.begin(), conductance.end()},
                        {reversal.begin(), reversal.end()}, {z, c1_c2, z, c2_c1, z, c2_o, z, o_c2, z});
}

ChannelModel default_sigmoid_model() {
    return two_state_sigmoid(RateFunction::sigmoid(0.5, 3.0, 10.0, 0.1), RateFunction::sigmoid(0.5, 3.0, -10.0, 0.1),
                             {0.0, 1.0}, {0.0, 1.0});
}

RateMatrix rate_matrix(const ChannelModel& model, double zeta) {
    const int n = model.num_states();
    RateMatrix q = RateMatrix::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        double out = 0.0;
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const double r = model.rate(a, b)(zeta);
            q(a, b) = r;
            out += r;
        }
        q(a, a) = -out;
    }
    return q;
}

StateVector stationary_measure(const RateMatrix& q) {
    const auto n = q.rows();
    require(n >= 1 && q.cols() == n, "rate matrix must be square and non-empty");
    if (n == 1) return StateVector::Ones(1);
    Eigen::MatrixXd bordered(n + 1, n);
    bordered.topRows(n) = q.transpose();
    bordered.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bordered);
    qr.setThreshold(1e-12);
    if (qr.rank() < n) {
        raise(ErrorCode::ReducibleChain,
              "generator has a stationary space of dimension > 1 (reducible chain)");
    }
    StateVector nu = qr.solve(rhs);
    for (Eigen::Index e = 0; e < n; ++e) nu(e) = std::max(nu(e), 0.0);
    return nu / nu.sum();
}

StateVector stationary_measure(const ChannelModel& model, double zeta) {
    return stationary_measure(rate_matrix(model, zeta));
}

namespace {

int draw_state(const StateVector& nu, double u) noexcept {
    const auto n = static_cast<int>(nu.size());
    double acc = 0.0;
    for (int e = 0; e < n; ++e) {
        acc += nu(e);
        if (u < acc) return e;
    }
    return n - 1;
}

}  // namespace

ChannelConfig sample_configuration(const ChannelModel& model, std::span<const double> zeta, SplitMix64& rng) {
    ChannelConfig y{std::vector<int>(zeta.size(), 0)};
    for (std::size_t k = 0; k < zeta.size(); ++k) y.states[k] = draw_state(stationary_measure(model, zeta[k]), rng.uniform());
    return y;
}

ChannelConfig sample_configuration(const ChannelModel& model, const GridFunction& x,
                                   const MollifierFamily& mollifiers, SplitMix64& rng) {
    const auto zeta = mollifiers.project(x);
    return sample_configuration(model, zeta, rng);
}

namespace {

void check_config(const ChannelModel& model, const ChannelConfig& y, const MollifierFamily& mollifiers) {
    require(y.size() == mollifiers.sites(), "configuration has " + std::to_string(y.size()) + " sites, expected " +
                                                std::to_string(mollifiers.sites()));
    for (int s : y.states) require(s >= 0 && s < model.num_states(), "configuration holds an invalid state");
}

}  // namespace

GridFunction reaction_term(const ChannelModel& model, const GridFunction& x, const ChannelConfig& y,
                           const MollifierFamily& mollifiers) {
    check_config(model, y, mollifiers);
    const auto zeta = mollifiers.project(x);
    const double inv_n = 1.0 / mollifiers.population();
    std::vector<double> w(zeta.size());
    for (std::size_t k = 0; k < zeta.size(); ++k) w[k] = inv_n * model.current(y.states[k], zeta[k]);
    return mollifiers.combine(w);
}

double mean_current(const ChannelModel& model, const StateVector& nu, double zeta) noexcept {
    double s = 0.0;
    for (int e = 0; e < model.num_states(); ++e) s += nu(e) * model.current(e, zeta);
    return s;
}

GridFunction averaged_drift(const ChannelModel& model, const GridFunction& x, const MollifierFamily& mollifiers) {
    const auto zeta = mollifiers.project(x);
    const double inv_n = 1.0 / mollifiers.population();
    std::vector<double> w(zeta.size());
    for (std::size_t k = 0; k < zeta.size(); ++k)
        w[k] = inv_n * mean_current(model, stationary_measure(model, zeta[k]), zeta[k]);
    return mollifiers.combine(w);
}

DriftEstimate empirical_average_drift(const ChannelModel& model, const GridFunction& x,
                                      const MollifierFamily& mollifiers, int samples, std::uint64_t seed) {
    require(samples >= 1, "empirical_average_drift needs samples >= 1");
    const auto zeta = mollifiers.project(x);
    const auto m = static_cast<std::size_t>(x.size());
    // Welford running moments per node.
    std::vector<double> mean_acc(m, 0.0);
    std::vector<double> m2(m, 0.0);
    std::vector<double> w(zeta.size());
    std::vector<double> f(m);
    const double inv_n = 1.0 / mollifiers.population();
    std::vector<StateVector> nus;
    nus.reserve(zeta.size());
    for (double z : zeta) nus.push_back(stationary_measure(model, z));
    SplitMix64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < zeta.size(); ++k)
            w[k] = inv_n * model.current(draw_state(nus[k], rng.uniform()), zeta[k]);
        mollifiers.combine(w, f);
        const double count = s + 1;
        for (std::size_t j = 0; j < m; ++j) {
            const double d = f[j] - mean_acc[j];
            mean_acc[j] += d / count;
            m2[j] += d * (f[j] - mean_acc[j]);
        }
    }
    GridFunction mean(x.grid(), std::move(mean_acc));
    GridFunction se(x.grid());
    if (samples > 1) {
        const double r = samples;
        for (std::size_t j = 0; j < m; ++j) se.values()[j] = std::sqrt(std::max(0.0, m2[j] / (r - 1.0)) / r);
    }
    return {std::move(mean), std::move(se)};
}

GridFunction limit_drift(const ChannelModel& model, const GridFunction& x) {
    GridFunction out(x.grid());
    for (int j = 0; j < x.size(); ++j) {
        const double xi = x[j];
        out[j] = mean_current(model, stationary_measure(model, xi), xi);
    }
    return out;
}

}  // namespace hybridlab
