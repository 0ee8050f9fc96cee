#include "hybridlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hybridlab/error.hpp"

namespace hybridlab {

void SimParams::validate() const {
    require(std::isfinite(epsilon) && epsilon > 0.0 && epsilon <= 1.0, "epsilon must be in (0,1]");
    require(population >= 2, "population N must be >= 2");
    require(std::isfinite(horizon) && horizon > 0.0, "horizon T must be > 0");
    require(std::isfinite(dt) && dt > 0.0 && dt <= horizon, "time step must satisfy 0 < dt <= T");
    require(grid.size() >= 50 * population, "grid needs M >= 50 N interior nodes (M = " + std::to_string(grid.size()) +
                                                ", N = " + std::to_string(population) + ")");
}

double default_time_step(double epsilon) noexcept { return std::min(1e-3, epsilon / 10.0); }

double APrioriBound::radius_squared(double t, double x0_norm_squared) const noexcept {
    const double k = kappa();
    const double f2 = forcing * forcing;
    if (std::abs(k) < 1e-14) return x0_norm_squared + f2 * t;
    return std::exp(k * t) * x0_norm_squared + f2 * std::expm1(k * t) / k;
}

APrioriBound a_priori_bound(const ChannelModel& model, const MollifierFamily& mollifiers, double dt) {
    std::vector<double> ones(static_cast<std::size_t>(mollifiers.sites()), 1.0 / mollifiers.population());
    const GridFunction sum = mollifiers.combine(ones);
    APrioriBound b;
    const double lambda = laplacian_first_eigenvalue(mollifiers.grid());
    b.dissipation = dt > 0.0 ? std::log1p(lambda * dt) / dt : lambda;
    b.growth = 0.0;
    b.forcing = model.max_driving_current() * norm(sum);
    return b;
}

double thinning_majorant(const ChannelModel& model, int population, double epsilon) noexcept {
    return (population - 1) * model.a_plus() * (model.num_states() - 1) / epsilon;
}

namespace {

void check_initial_config(const ChannelModel& model, const ChannelConfig& y0, int sites) {
    require(y0.size() == sites, "initial configuration has " + std::to_string(y0.size()) + " sites, expected " +
                                    std::to_string(sites));
    for (int s : y0.states) require(s >= 0 && s < model.num_states(), "initial configuration holds an invalid state");
}

[[noreturn]] void majorant_violation(double total, double lambda, double t) {
    raise(ErrorCode::MajorantViolation, "total jump rate " + std::to_string(total) + " exceeds majorant " +
                                            std::to_string(lambda) + " at t=" + std::to_string(t) +
                                            " (declared a_plus too small)");
}

}  // namespace

void simulate(const ChannelModel& model, const SimParams& params, const GridFunction& x0, const ChannelConfig& y0,
              const SnapshotSink& sink) {
    SplitMix64 rng(params.seed);
    simulate(model, params, x0, y0, rng, sink);
}

void simulate(const ChannelModel& model, const SimParams& params, const GridFunction& x0, const ChannelConfig& y0,
              SplitMix64& rng, const SnapshotSink& sink) {
    params.validate();
    require(x0.grid() == params.grid, "initial potential lives on a different grid");
    const MollifierFamily family(params.population, params.grid);
    const int sites = family.sites();
    check_initial_config(model, y0, sites);

    ImexStepper stepper(params.grid, params.dt);
    const TimeLattice lattice(params.dt, params.horizon);
    const double lambda = thinning_majorant(model, params.population, params.epsilon);
    const double inv_eps = 1.0 / params.epsilon;
    const double inv_n = 1.0 / params.population;
    const double dt = params.dt;
    const int n_states = model.num_states();

    std::vector<double> x(x0.values().begin(), x0.values().end());
    std::vector<double> zeta(static_cast<std::size_t>(sites));
    std::vector<double> weights(static_cast<std::size_t>(sites));
    std::vector<double> drift(x.size());
    ChannelConfig y = y0;
    bool zeta_fresh = false;

    const APrioriBound bound = a_priori_bound(model, family, params.dt);
    const double x0_sq = discrete_dot(params.grid.spacing(), x, x);

    auto refresh_zeta = [&] {
        if (!zeta_fresh) {
            family.project(x, zeta);
            zeta_fresh = true;
        }
    };

    auto emit = [&](double t, const JumpEvent* jump, long k) {
        if (params.check_a_priori) {
            const double r2 = bound.radius_squared(t, x0_sq);
            const double n2 = discrete_dot(params.grid.spacing(), x, x);
            if (n2 > r2 * (1.0 + 1e-9) + 1e-300) {
                raise(ErrorCode::Internal, "a-priori bound violated at t=" + std::to_string(t) +
                                               ": ||x||^2=" + std::to_string(n2) + " > " + std::to_string(r2));
            }
        }
        sink(SnapshotView{t, x, y, jump, k});
    };

    // PDE flow with y frozen, in steps of at most dt landing exactly on target.
    auto advance = [&](double t, double target) {
        while (t < target) {
            double step = target - t;
            const bool last = step <= dt * (1.0 + 1e-9);
            if (!last) step = dt;
            refresh_zeta();
            for (int k = 0; k < sites; ++k) {
                const auto s = static_cast<std::size_t>(k);
                weights[s] = inv_n * model.current(y.states[s], zeta[s]);
            }
            family.combine(weights, drift);
            stepper.step(x, drift, step);
            zeta_fresh = false;
            t = last ? target : t + step;
        }
        return t;
    };

    double t = 0.0;
    emit(0.0, nullptr, 0);
    long k = 1;
    const double inf = std::numeric_limits<double>::infinity();
    double next_candidate = lambda > 0.0 ? rng.exponential(lambda) : inf;
    while (true) {
        const double next_lattice = lattice.time(k);
        if (next_candidate < next_lattice) {
            t = advance(t, next_candidate);
            refresh_zeta();
            double total = 0.0;
            for (int s = 0; s < sites; ++s)
                total += model.exit_rate(y.states[static_cast<std::size_t>(s)], zeta[static_cast<std::size_t>(s)]);
            total *= inv_eps;
            if (total > lambda * (1.0 + 1e-12)) majorant_violation(total, lambda, t);
            const double accept = rng.uniform();
            if (accept * lambda < total) {
                const double pick = rng.uniform() * total;
                // Last positive-rate pair doubles as the fallback when rounding leaves pick >= total.
                double acc = 0.0;
                int site = -1;
                int target = -1;
                bool found = false;
                for (int s = 0; s < sites && !found; ++s) {
                    const int from = y.states[static_cast<std::size_t>(s)];
                    for (int e = 0; e < n_states && !found; ++e) {
                        if (e == from) continue;
                        const double r = model.rate(from, e)(zeta[static_cast<std::size_t>(s)]) * inv_eps;
                        if (r <= 0.0) continue;
                        acc += r;
                        site = s;
                        target = e;
                        found = pick < acc;
                    }
                }
                if (site < 0) raise(ErrorCode::Internal, "thinning selection found no positive rate");
                const JumpEvent event{t, site + 1, y.states[static_cast<std::size_t>(site)], target};
                y.states[static_cast<std::size_t>(site)] = target;
                emit(t, &event, -1);
            }
            next_candidate = t + rng.exponential(lambda);
        } else {
            t = advance(t, next_lattice);
            emit(t, nullptr, k);
            if (k == lattice.intervals()) break;
            ++k;
        }
    }
}

HybridTrajectory simulate(const ChannelModel& model, const SimParams& params, const GridFunction& x0,
                          const ChannelConfig& y0) {
    HybridTrajectory traj;
    traj.path.grid = params.grid;
    simulate(model, params, x0, y0, [&](const SnapshotView& s) {
        traj.path.times.push_back(s.time);
        traj.path.x.emplace_back(params.grid, std::vector<double>(s.x.begin(), s.x.end()));
        traj.y.push_back(s.y);
        traj.lattice_index.push_back(s.lattice_index);
        if (s.jump) {
            traj.event.push_back(static_cast<int>(traj.jumps.size()));
            traj.jumps.push_back(*s.jump);
        } else {
            traj.event.push_back(-1);
        }
    });
    return traj;
}

ToyTrajectory simulate_toy(const ChannelModel& model, const ToyParams& params, double x0, int y0) {
    require(std::isfinite(params.epsilon) && params.epsilon > 0.0 && params.epsilon <= 1.0, "epsilon must be in (0,1]");
    require(std::isfinite(params.decay) && params.decay >= 0.0, "toy decay must be >= 0");
    require(std::isfinite(x0), "toy initial value must be finite");
    require(y0 >= 0 && y0 < model.num_states(), "toy initial state out of range");
    const TimeLattice lattice(params.dt, params.horizon);
    const double lambda = model.a_plus() * (model.num_states() - 1) / params.epsilon;
    const double inv_eps = 1.0 / params.epsilon;

    SplitMix64 rng(params.seed);
    ToyTrajectory traj;
    double x = x0;
    int y = y0;
    double t = 0.0;

    auto flow = [&](double to) {
        const double s = to - t;
        const double rate = params.decay + model.conductance(y);
        if (rate > 0.0) {
            const double eq = model.conductance(y) * model.reversal(y) / rate;
            x = eq + (x - eq) * std::exp(-rate * s);
        }
        t = to;
    };
    auto record = [&] {
        traj.times.push_back(t);
        traj.x.push_back(x);
        traj.y.push_back(y);
    };

    record();
    long k = 1;
    double next_candidate = lambda > 0.0 ? rng.exponential(lambda) : std::numeric_limits<double>::infinity();
    while (true) {
        const double next_lattice = lattice.time(k);
        if (next_candidate < next_lattice) {
            flow(next_candidate);
            const double total = model.exit_rate(y, x) * inv_eps;
            if (total > lambda * (1.0 + 1e-12)) majorant_violation(total, lambda, t);
            const double accept = rng.uniform();
            if (accept * lambda < total) {
                const double pick = rng.uniform() * total;
                double acc = 0.0;
                int target = -1;
                for (int e = 0; e < model.num_states(); ++e) {
                    if (e == y) continue;
                    const double r = model.rate(y, e)(x) * inv_eps;
                    if (r <= 0.0) continue;
                    acc += r;
                    target = e;
                    if (pick < acc) break;
                }
                traj.jumps.push_back(JumpEvent{t, 1, y, target});
                y = target;
                record();
            }
            next_candidate = t + rng.exponential(lambda);
        } else {
            flow(next_lattice);
            record();
            if (k == lattice.intervals()) break;
            ++k;
        }
    }
    return traj;
}

}  // namespace hybridlab
