#include "hybridlab/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hybridlab/averaged.hpp"
#include "hybridlab/error.hpp"
#include "hybridlab/rng.hpp"
#include "hybridlab/simulator.hpp"
#include "hybridlab/stats.hpp"

namespace hybridlab {

namespace {

void check_site(int site, const MollifierFamily& mollifiers) {
    require(site >= 1 && site < mollifiers.population(),
            "site " + std::to_string(site) + " out of range 1.." + std::to_string(mollifiers.population() - 1));
}

// Vector over E of the site-i map at zeta with pairing (phi_i, x - z).
StateVector site_phi_vector(const ChannelModel& model, const StateVector& nu, double zeta, double pairing,
                            int population) {
    const int n = model.num_states();
    const double mean = mean_current(model, nu, zeta);
    StateVector out(n);
    for (int e = 0; e < n; ++e) out(e) = (model.current(e, zeta) - mean) * pairing / population;
    return out;
}

// sup over y of |sum_i v_i(y(i))|
double sup_abs_sum(const std::vector<StateVector>& v) {
    double hi = 0.0;
    double lo = 0.0;
    for (const auto& s : v) {
        hi += s.maxCoeff();
        lo += s.minCoeff();
    }
    return std::max(std::abs(hi), std::abs(lo));
}

}  // namespace

double phi_site(const ChannelModel& model, int site, const GridFunction& x, int state, const GridFunction& z,
                const MollifierFamily& mollifiers) {
    check_site(site, mollifiers);
    require(state >= 0 && state < model.num_states(), "state out of range");
    require(x.grid() == mollifiers.grid() && z.grid() == mollifiers.grid(), "x and z must live on the mollifier grid");
    const Mollifier& m = mollifiers[site - 1];
    const double zeta = m.project(x.values());
    const double pairing = zeta - m.project(z.values());
    const StateVector nu = stationary_measure(model, zeta);
    return (model.current(state, zeta) - mean_current(model, nu, zeta)) * pairing / mollifiers.population();
}

StateVector solve_poisson_site(const RateMatrix& q, const StateVector& phi, const StateVector& nu) {
    const auto n = q.rows();
    require(n >= 1 && q.cols() == n, "rate matrix must be square and non-empty");
    require(phi.size() == n && nu.size() == n, "phi and nu must have one entry per state");
    const double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
    const double solvability = nu.dot(phi);
    if (!(std::abs(solvability) <= 1e-10 * scale)) {
        raise(ErrorCode::InconsistentRhs,
              "right-hand side is not centered: nu . phi = " + std::to_string(solvability));
    }
    if (n == 1) return StateVector::Zero(1);

    Eigen::MatrixXd bordered(n + 1, n);
    bordered.topRows(n) = q;
    bordered.row(n) = nu.transpose();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = phi;
    rhs(n) = 0.0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bordered);
    qr.setThreshold(1e-12);
    if (qr.rank() < n) raise(ErrorCode::ReducibleChain, "Poisson system is rank deficient (reducible chain)");
    StateVector f = qr.solve(rhs);
    f.array() -= nu.dot(f) / nu.sum();

    const double residual = (q * f - phi).cwiseAbs().maxCoeff();
    if (!(residual <= 1e-10 * scale))
        raise(ErrorCode::Internal, "Poisson residual " + std::to_string(residual) + " exceeds 1e-10");
    const double centering = std::abs(nu.dot(f));
    if (!(centering <= 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff())))
        raise(ErrorCode::Internal, "Poisson centering " + std::to_string(centering) + " exceeds 1e-12");
    return f;
}

double PoissonSolution::value(const ChannelConfig& y) const {
    require(y.size() == static_cast<int>(sites.size()), "configuration size does not match the solution");
    double s = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) s += sites[i].f(y.states[i]);
    return s;
}

double PoissonSolution::phi(const ChannelConfig& y) const {
    require(y.size() == static_cast<int>(sites.size()), "configuration size does not match the solution");
    double s = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) s += sites[i].phi(y.states[i]);
    return s;
}

double PoissonSolution::generator_applied(const ChannelConfig& y) const {
    require(y.size() == static_cast<int>(sites.size()), "configuration size does not match the solution");
    double s = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) s += sites[i].q.row(y.states[i]).dot(sites[i].f);
    return s;
}

double PoissonSolution::sup_abs() const {
    std::vector<StateVector> f;
    f.reserve(sites.size());
    for (const auto& s : sites) f.push_back(s.f);
    return sup_abs_sum(f);
}

double PoissonSolution::max_site_abs() const {
    double m = 0.0;
    for (const auto& s : sites) m = std::max(m, s.f.cwiseAbs().maxCoeff());
    return m;
}

double PoissonSolution::max_residual() const {
    double m = 0.0;
    for (const auto& s : sites) m = std::max(m, (s.q * s.f - s.phi).cwiseAbs().maxCoeff());
    return m;
}

double PoissonSolution::max_centering() const {
    double m = 0.0;
    for (const auto& s : sites) m = std::max(m, std::abs(s.nu.dot(s.f)));
    return m;
}

PoissonSolution solve_poisson(const ChannelModel& model, const GridFunction& x, const GridFunction& z,
                              const MollifierFamily& mollifiers) {
    require(x.grid() == mollifiers.grid() && z.grid() == mollifiers.grid(), "x and z must live on the mollifier grid");
    PoissonSolution sol;
    sol.sites.reserve(static_cast<std::size_t>(mollifiers.sites()));
    for (const Mollifier& m : mollifiers) {
        SitePoisson site;
        site.zeta = m.project(x.values());
        const double pairing = site.zeta - m.project(z.values());
        site.q = rate_matrix(model, site.zeta);
        site.nu = stationary_measure(site.q);
        site.phi = site_phi_vector(model, site.nu, site.zeta, pairing, mollifiers.population());
        site.f = solve_poisson_site(site.q, site.phi, site.nu);
        sol.sites.push_back(std::move(site));
    }
    return sol;
}

double assemble_f(const ChannelModel& model, const GridFunction& x, const ChannelConfig& y, const GridFunction& z,
                  const MollifierFamily& mollifiers) {
    require(y.size() == mollifiers.sites(), "configuration has " + std::to_string(y.size()) + " sites, expected " +
                                                std::to_string(mollifiers.sites()));
    return solve_poisson(model, x, z, mollifiers).value(y);
}

double bracket_bound(const ChannelModel& model, const PoissonSolution& solution, const ChannelConfig& y) {
    require(y.size() == static_cast<int>(solution.sites.size()), "configuration size does not match the solution");
    const int n = model.num_states();
    double total = 0.0;
    for (std::size_t i = 0; i < solution.sites.size(); ++i) {
        const auto& s = solution.sites[i];
        const int from = y.states[i];
        for (int e = 0; e < n; ++e) {
            if (e == from) continue;
            const double d = s.f(e) - s.f(from);
            total += s.q(from, e) * d * d;
        }
    }
    return total;
}

double bracket_bound(const ChannelModel& model, const GridFunction& x, const ChannelConfig& y, const GridFunction& z,
                     const MollifierFamily& mollifiers) {
    // Every term carries a rate factor; with all rates zero the Poisson problem is not even posed.
    bool any_rate = false;
    for (int a = 0; a < model.num_states(); ++a)
        for (int b = 0; b < model.num_states(); ++b) any_rate = any_rate || (a != b && !model.rate(a, b).is_zero());
    if (!any_rate) return 0.0;
    return bracket_bound(model, solve_poisson(model, x, z, mollifiers), y);
}

double bracket_sup(const ChannelModel& model, const PoissonSolution& solution) {
    const int n = model.num_states();
    double total = 0.0;
    for (const auto& s : solution.sites) {
        double best = 0.0;
        for (int from = 0; from < n; ++from) {
            double g = 0.0;
            for (int e = 0; e < n; ++e) {
                if (e == from) continue;
                const double d = s.f(e) - s.f(from);
                g += s.q(from, e) * d * d;
            }
            best = std::max(best, g);
        }
        total += best;
    }
    return total;
}

double bracket_ceiling(const ChannelModel& model, const PoissonSolution& solution, int population) {
    const double m = solution.max_site_abs();
    return 4.0 * model.a_plus() * model.num_states() * population * m * m;
}

bool ScalingReport::consistent() const noexcept {
    if (alpha.degenerate || rho.degenerate) return false;
    return std::abs(rho.slope - (1.0 + 2.0 * alpha.slope)) <= rho.half_width() + 2.0 * alpha.half_width();
}

namespace {

// r * u / ||u|| with u a Gaussian combination of the first `modes` sine modes.
GridFunction random_sine_direction(const SpatialGrid& grid, int modes, SplitMix64& rng) {
    std::vector<double> coef(static_cast<std::size_t>(modes));
    for (auto& c : coef) c = rng.normal();
    GridFunction u = GridFunction::sample(grid, [&](double xi) {
        double s = 0.0;
        for (int k = 0; k < modes; ++k) s += coef[static_cast<std::size_t>(k)] * std::sin((k + 1) * std::numbers::pi * xi);
        return s;
    });
    const double n = norm(u);
    for (auto& v : u.values()) v /= n;
    return u;
}

GridFunction shifted(const GridFunction& x, const GridFunction& d, double step) {
    GridFunction out = x;
    for (int j = 0; j < x.size(); ++j) out[j] += step * d[j];
    return out;
}

std::vector<StateVector> difference(const PoissonSolution& plus, const PoissonSolution& minus, double width) {
    std::vector<StateVector> out;
    out.reserve(plus.sites.size());
    for (std::size_t i = 0; i < plus.sites.size(); ++i) out.push_back((plus.sites[i].f - minus.sites[i].f) / width);
    return out;
}

struct SampleMaxima {
    std::vector<double> f, bracket, fx, ft;
};

SampleMaxima sample_population(const ChannelModel& model, int population, const ScalingOptions& opt,
                               std::uint64_t seed) {
    const SpatialGrid grid(std::max(3, opt.grid_factor * population));
    const MollifierFamily family(population, grid);
    const GridFunction x0 =
        GridFunction::sample(grid, [&](double xi) { return opt.x0_amplitude * std::sin(std::numbers::pi * xi); });
    const DeterministicTrajectory zbar = solve_averaged(model, population, grid, opt.dt, opt.horizon, x0);
    const APrioriBound bound = a_priori_bound(model, family);
    const double x0_sq = inner_product(x0, x0);
    const double radius =
        std::sqrt(std::max(bound.radius_squared(0.0, x0_sq), bound.radius_squared(opt.horizon, x0_sq)));

    // Lattice indices strictly inside (0, K) so that k +- 1 exists for f_t.
    const long last = static_cast<long>(zbar.path.times.size()) - 1;
    std::vector<long> idx;
    for (int p = 0; p < opt.time_points; ++p) {
        const double frac = opt.time_points == 1 ? 0.5 : static_cast<double>(p) / (opt.time_points - 1);
        const long k = 1 + std::lround(frac * static_cast<double>(last - 2));
        idx.push_back(std::clamp<long>(k, 1, last - 1));
    }

    SplitMix64 rng(seed);
    SampleMaxima out;
    for (int s = 0; s < opt.samples; ++s) {
        GridFunction x = random_sine_direction(grid, opt.sine_modes, rng);
        const double r = radius * std::pow(rng.uniform(), 1.0 / opt.sine_modes);
        for (auto& v : x.values()) v *= r;
        std::vector<GridFunction> dirs;
        for (int d = 0; d < opt.directions; ++d) dirs.push_back(random_sine_direction(grid, opt.sine_modes, rng));

        double mf = 0.0, mb = 0.0, mfx = 0.0, mft = 0.0;
        for (long k : idx) {
            const auto ku = static_cast<std::size_t>(k);
            const GridFunction& z = zbar.path.x[ku];
            const PoissonSolution sol = solve_poisson(model, x, z, family);
            mf = std::max(mf, sol.sup_abs());
            mb = std::max(mb, bracket_sup(model, sol));
            for (const auto& d : dirs) {
                const auto plus = solve_poisson(model, shifted(x, d, opt.fd_step), z, family);
                const auto minus = solve_poisson(model, shifted(x, d, -opt.fd_step), z, family);
                mfx = std::max(mfx, sup_abs_sum(difference(plus, minus, 2.0 * opt.fd_step)));
            }
            const auto later = solve_poisson(model, x, zbar.path.x[ku + 1], family);
            const auto earlier = solve_poisson(model, x, zbar.path.x[ku - 1], family);
            const double width = zbar.path.times[ku + 1] - zbar.path.times[ku - 1];
            mft = std::max(mft, sup_abs_sum(difference(later, earlier, width)));
        }
        out.f.push_back(mf);
        out.bracket.push_back(mb);
        out.fx.push_back(mfx);
        out.ft.push_back(mft);
    }
    return out;
}

double max_of(const std::vector<double>& v, const std::vector<std::size_t>* pick) {
    double m = 0.0;
    if (pick) {
        for (auto i : *pick) m = std::max(m, v[i]);
    } else {
        for (double a : v) m = std::max(m, a);
    }
    return m;
}

}  // namespace

ScalingReport measure_scalings(const ChannelModel& model, const std::vector<int>& populations,
                               const ScalingOptions& options, std::uint64_t seed) {
    require(populations.size() >= 2, "need at least two population sizes");
    for (std::size_t k = 0; k < populations.size(); ++k) {
        require(populations[k] >= 4, "population sizes must be >= 4");
        if (k > 0) require(populations[k] > populations[k - 1], "population sizes must be increasing");
    }
    require(options.samples >= 1 && options.time_points >= 1 && options.directions >= 1 && options.sine_modes >= 1,
            "scaling options must be positive");
    require(options.fd_step > 0.0 && options.bootstrap >= 1, "scaling options must be positive");

    ScalingReport report;
    report.options = options;
    report.seed = seed;
    std::vector<SampleMaxima> per_n;
    for (int n : populations) {
        per_n.push_back(sample_population(model, n, options, replication_seed(seed, static_cast<std::uint64_t>(n))));
        const auto& m = per_n.back();
        report.rows.push_back({n, max_of(m.f, nullptr), max_of(m.bracket, nullptr), max_of(m.fx, nullptr),
                               max_of(m.ft, nullptr)});
    }

    std::vector<double> logn;
    for (int n : populations) logn.push_back(std::log(static_cast<double>(n)));

    auto fit = [&](auto member) {
        SlopeEstimate est;
        std::vector<double> logy;
        for (std::size_t k = 0; k < per_n.size(); ++k) {
            const double v = max_of(per_n[k].*member, nullptr);
            if (!(v > 0.0) || !std::isfinite(v)) {
                est.degenerate = true;
                return est;
            }
            logy.push_back(std::log(v));
        }
        est.slope = least_squares_slope(logn, logy);
        SplitMix64 boot(splitmix64(seed ^ 0xb007u));
        std::vector<double> slopes;
        std::vector<std::size_t> pick(static_cast<std::size_t>(options.samples));
        for (int b = 0; b < options.bootstrap; ++b) {
            for (std::size_t k = 0; k < per_n.size(); ++k) {
                for (auto& p : pick) p = static_cast<std::size_t>(boot.uniform() * options.samples);
                logy[k] = std::log(std::max(max_of(per_n[k].*member, &pick), 1e-300));
            }
            slopes.push_back(least_squares_slope(logn, logy));
        }
        est.lo = quantile(slopes, 0.05);
        est.hi = quantile(slopes, 0.95);
        return est;
    };
    report.alpha = fit(&SampleMaxima::f);
    report.rho = fit(&SampleMaxima::bracket);
    report.beta = fit(&SampleMaxima::fx);
    report.gamma = fit(&SampleMaxima::ft);
    return report;
}

}  // namespace hybridlab
