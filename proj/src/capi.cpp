#include "hybridlab/hybridlab.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <numbers>
#include <sstream>
#include <string>

#include "hybridlab/config.hpp"
#include "hybridlab/convergence.hpp"
#include "hybridlab/error.hpp"
#include "hybridlab/poisson.hpp"
#include "hybridlab/report_io.hpp"
#include "hybridlab/simulator.hpp"
#include "hybridlab/validation.hpp"

struct hl_config {
    hybridlab::RunConfig cfg;
};

struct hl_model {
    hybridlab::ChannelModel model;
};

namespace {

using namespace hybridlab;

thread_local std::string last_error;

template <class F>
hl_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return HL_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return static_cast<hl_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return HL_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return HL_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return HL_INTERNAL;
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_string(char** dst, const std::string& s) {
    if (dst) *dst = copy_string(s);
}

void check_ptr(const void* p, const char* what) {
    require(p != nullptr, std::string(what) + " must not be null");
}

struct RunSettings {
    std::uint64_t seed = 0;
    int jobs = 0;
    std::filesystem::path out;
    int stride = 1;
    bool plot = false;
};

RunSettings settings_for(const RunConfig& cfg, const hl_run_options* options) {
    RunSettings s;
    s.out = cfg.output_dir;
    s.stride = cfg.stride;
    s.plot = cfg.plot;
    if (options) {
        s.seed = options->seed;
        s.jobs = options->jobs;
        if (options->out_dir) s.out = options->out_dir;
        if (options->stride > 0) s.stride = options->stride;
        if (options->plot) s.plot = true;
    }
    return s;
}

GridFunction initial_potential(const RunConfig& cfg, const SpatialGrid& grid) {
    return GridFunction::sample(grid,
                                [&](double xi) { return cfg.x0_amplitude * std::sin(std::numbers::pi * xi); });
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) raise(ErrorCode::Io, path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::Io, path.string() + ": cannot open for writing");
    return out;
}

std::string sweep_digest(const RunConfig& cfg, const ErrorReport& report, std::uint64_t seed) {
    std::ostringstream os;
    os.precision(6);
    for (const auto& p : report.pairs)
        os << "eps=" << p.epsilon << " N=" << p.population << " median sup_err2=" << p.q50 << '\n';
    std::vector<int> seen;
    for (const auto& p : report.pairs) {
        if (std::find(seen.begin(), seen.end(), p.population) != seen.end()) continue;
        seen.push_back(p.population);
        int count = 0;
        for (const auto& q : report.pairs) count += q.population == p.population;
        if (count < 3) continue;
        const ScalingFit fit = fit_scaling(report, p.population, 1000, seed);
        if (fit.degenerate)
            os << "N=" << p.population << " slope: degenerate (zero errors)\n";
        else
            os << "N=" << p.population << " slope=" << fit.slope << " ci90=[" << fit.lo << ", " << fit.hi << "]\n";
    }
    if (cfg.joint_c) {
        const auto rows = joint_scaling_table(report);
        for (const auto& r : rows)
            os << "joint N=" << r.population << " eps=" << r.epsilon << " median=" << r.median << " ci90=["
               << r.median_lo << ", " << r.median_hi << "]\n";
        os << "joint nonincreasing: " << (joint_nonincreasing(rows) ? "yes" : "no") << '\n';
    }
    const BoundParameters fitted = fit_tail_constants(report);
    os << "tail fit C3=" << fitted.c[2] << " C4=" << fitted.c[3]
       << " margin=" << tail_domination_margin(report, fitted) << '\n';
    return os.str();
}

}  // namespace

extern "C" {

const char* hl_status_name(hl_status status) {
    if (status == HL_OK) return "ok";
    if (status < HL_INVALID_ARGUMENT || status > HL_INTERNAL) return "unknown";
    return error_code_name(static_cast<ErrorCode>(static_cast<int>(status)));
}

const char* hl_last_error(void) { return last_error.c_str(); }

void hl_string_free(char* s) { std::free(s); }

hl_status hl_config_load(const char* path, hl_config** out) {
    return guarded([&] {
        check_ptr(path, "path");
        check_ptr(out, "out");
        *out = new hl_config{parse_config(path)};
    });
}

hl_status hl_config_parse(const char* text, hl_config** out) {
    return guarded([&] {
        check_ptr(text, "text");
        check_ptr(out, "out");
        *out = new hl_config{parse_config_text(text)};
    });
}

void hl_config_free(hl_config* config) { delete config; }

hl_status hl_config_model(const hl_config* config, hl_model** out) {
    return guarded([&] {
        check_ptr(config, "config");
        check_ptr(out, "out");
        *out = new hl_model{config->cfg.model};
    });
}

hl_status hl_model_two_state(double opening, double closing, const double* c, const double* v, hl_model** out) {
    return guarded([&] {
        check_ptr(c, "c");
        check_ptr(v, "v");
        check_ptr(out, "out");
        *out = new hl_model{two_state_constant(opening, closing, {c[0], c[1]}, {v[0], v[1]})};
    });
}

hl_status hl_model_default(hl_model** out) {
    return guarded([&] {
        check_ptr(out, "out");
        *out = new hl_model{default_sigmoid_model()};
    });
}

void hl_model_free(hl_model* model) { delete model; }

int hl_model_num_states(const hl_model* model) { return model ? model->model.num_states() : 0; }

hl_status hl_model_stationary(const hl_model* model, double zeta, double* nu, size_t len) {
    return guarded([&] {
        check_ptr(model, "model");
        check_ptr(nu, "nu");
        require(len == static_cast<size_t>(model->model.num_states()), "nu must hold one entry per state");
        const StateVector v = stationary_measure(model->model, zeta);
        for (size_t e = 0; e < len; ++e) nu[e] = v(static_cast<Eigen::Index>(e));
    });
}

hl_status hl_psi(double x, double* out) {
    return guarded([&] {
        check_ptr(out, "out");
        *out = psi(x);
    });
}

hl_status hl_tail_bound(double delta, double epsilon, int population, double p0, const double* c, double* out) {
    return guarded([&] {
        check_ptr(c, "c");
        check_ptr(out, "out");
        BoundParameters params;
        for (int k = 0; k < 5; ++k) params.c[static_cast<std::size_t>(k)] = c[k];
        *out = theoretical_tail_bound(delta, epsilon, population, p0, params);
    });
}

hl_status hl_psi_table(double max, int points, char** csv) {
    return guarded([&] {
        check_ptr(csv, "csv");
        std::ostringstream os;
        write_psi_table(os, max, points);
        *csv = copy_string(os.str());
    });
}

hl_status hl_run_simulate(const hl_config* config, const hl_run_options* options, char** path) {
    return guarded([&] {
        check_ptr(config, "config");
        const RunConfig& cfg = config->cfg;
        const RunSettings run = settings_for(cfg, options);
        const auto [eps, n] = cfg.pairs().front();
        SimParams params;
        params.epsilon = eps;
        params.population = n;
        params.horizon = cfg.horizon;
        params.dt = cfg.dt > 0.0 ? cfg.dt : default_time_step(eps);
        params.grid = SpatialGrid(cfg.resolved_grid_nodes());
        params.seed = replication_seed(run.seed, 0);
        params.validate();
        const GridFunction x0 = initial_potential(cfg, params.grid);
        const MollifierFamily family(n, params.grid);
        SplitMix64 rng(params.seed);
        ChannelConfig y0;
        if (cfg.y0_state)
            y0.states.assign(static_cast<std::size_t>(family.sites()), *cfg.y0_state);
        else
            y0 = sample_configuration(cfg.model, x0, family, rng);

        const auto file = run.out / "trajectory.csv";
        std::ofstream out = open_output(file);
        const TimeLattice lattice(params.dt, params.horizon);
        TrajectoryCsvSink sink(out, cfg.model, params.grid.size(), run.stride, lattice.intervals());
        simulate(cfg.model, params, x0, y0, rng, [&](const SnapshotView& s) { sink(s); });
        out.flush();
        if (!out) raise(ErrorCode::Io, file.string() + ": write failed");
        set_string(path, file.string());
    });
}

hl_status hl_run_average(const hl_config* config, const hl_run_options* options, char** path) {
    return guarded([&] {
        check_ptr(config, "config");
        const RunConfig& cfg = config->cfg;
        const RunSettings run = settings_for(cfg, options);
        const SpatialGrid grid(cfg.resolved_grid_nodes());
        const GridFunction x0 = initial_potential(cfg, grid);
        const DeterministicTrajectory traj =
            cfg.target == Target::Limit
                ? solve_limit(cfg.model, grid, cfg.target_dt, cfg.horizon, x0)
                : solve_averaged(cfg.model, cfg.populations.front(), grid, cfg.target_dt, cfg.horizon, x0);
        std::ostringstream os;
        write_deterministic_csv(os, traj, run.stride);
        const auto file = run.out / "average.csv";
        write_file(file, os.str());
        set_string(path, file.string());
    });
}

hl_status hl_run_sweep(const hl_config* config, const hl_run_options* options, char** summary) {
    return guarded([&] {
        check_ptr(config, "config");
        const RunConfig& cfg = config->cfg;
        const RunSettings run = settings_for(cfg, options);
        const ExperimentPlan plan = cfg.plan(run.seed);
        const ErrorReport report =
            run_ensemble(plan, run.jobs, cfg.delta_grid ? &*cfg.delta_grid : nullptr);
        std::ostringstream errors, sum, tail;
        write_errors_csv(errors, report);
        write_summary_csv(sum, report);
        write_tail_csv(tail, report);
        write_file(run.out / "sweep_errors.csv", errors.str());
        write_file(run.out / "sweep_summary.csv", sum.str());
        write_file(run.out / "sweep_tail.csv", tail.str());
        if (run.plot) write_file(run.out / "sweep_plot.svg", render_svg(report));
        set_string(summary, sweep_digest(cfg, report, run.seed));
    });
}

hl_status hl_run_poisson_check(const hl_config* config, const hl_run_options* options, char** summary) {
    return guarded([&] {
        check_ptr(config, "config");
        const RunConfig& cfg = config->cfg;
        const RunSettings run = settings_for(cfg, options);
        const ScalingReport report =
            measure_scalings(cfg.model, cfg.poisson_populations, cfg.scaling_options(), run.seed);
        std::ostringstream csv, meta;
        write_scaling_csv(csv, report);
        write_scaling_metadata(meta, report, cfg.poisson_populations);
        write_file(run.out / "scaling.csv", csv.str());
        write_file(run.out / "scaling_meta.jsonl", meta.str());
        std::ostringstream os;
        os.precision(6);
        auto line = [&](const char* name, const SlopeEstimate& s) {
            os << name << " slope: ";
            if (s.degenerate)
                os << "degenerate\n";
            else
                os << s.slope << " ci90=[" << s.lo << ", " << s.hi << "]\n";
        };
        line("sup_f", report.alpha);
        line("sup_bracket", report.rho);
        line("sup_fx_fd", report.beta);
        line("sup_ft_fd", report.gamma);
        os << "bracket vs 1 + 2 sup_f slope consistent: " << (report.consistent() ? "yes" : "no") << '\n';
        set_string(summary, os.str());
    });
}

hl_status hl_run_validate(const hl_config* config, const hl_run_options* options, char** report, int* all_passed) {
    return guarded([&] {
        check_ptr(config, "config");
        const RunConfig& cfg = config->cfg;
        const RunSettings run = settings_for(cfg, options);
        ValidationSettings vs;
        const auto [eps, n] = cfg.pairs().front();
        vs.population = n;
        vs.epsilon = eps;
        vs.horizon = cfg.horizon;
        vs.grid_nodes = 50 * n;
        vs.seed = run.seed;
        const auto checks = run_validation(cfg.model, vs);
        std::ostringstream os;
        bool ok = true;
        for (const auto& c : checks) {
            os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
            ok = ok && c.passed;
        }
        if (all_passed) *all_passed = ok ? 1 : 0;
        set_string(report, os.str());
    });
}

}  // extern "C"
