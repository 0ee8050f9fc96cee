#include "hybridlab/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "hybridlab/error.hpp"
#include "hybridlab/rng.hpp"
#include "hybridlab/stats.hpp"

namespace hybridlab {

double psi(double x) {
    require(x >= 0.0, "psi is evaluated at x >= 0 only");
    if (std::isinf(x)) return 0.0;
    if (x < 1e-4) return 1.0 - x / 3.0 + x * x / 6.0;
    return 2.0 * ((1.0 + x) * std::log1p(x) - x) / (x * x);
}

void BoundParameters::validate() const {
    for (double v : c) require(std::isfinite(v) && v > 0.0, "bound constants C1..C5 must be positive");
}

double theoretical_tail_bound(double delta, double epsilon, int population, double p0, const BoundParameters& params) {
    require(std::isfinite(delta) && delta > 0.0, "delta must be > 0");
    require(std::isfinite(epsilon) && epsilon > 0.0 && epsilon <= 1.0, "epsilon must be in (0,1]");
    require(population >= 1, "population must be >= 1");
    require(p0 >= 0.0 && p0 <= 1.0, "p0 must be a probability");
    params.validate();
    const auto& c = params.c;
    const double indicator = epsilon * (params.beta(population) + params.gamma(population)) >= c[1] * delta ? 1.0 : 0.0;
    const double rho = params.rho(population);
    const double exponent = c[3] * delta * delta / (epsilon * rho) * psi(c[4] * delta * params.alpha(population) / rho);
    return p0 + indicator + c[2] * std::exp(-exponent);
}

SupDiffTracker::SupDiffTracker(const DeterministicTrajectory& target)
    : target_(target),
      prev_(static_cast<std::size_t>(target.path.grid.size())),
      scratch_(prev_.size()),
      interp_(prev_.size()) {
    require(!target.path.times.empty(), "empty target trajectory");
}

double SupDiffTracker::gap_at_target_index(std::size_t k, std::span<const double> x) const {
    const auto v = target_.path.x[k].values();
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - v[j]) * (x[j] - v[j]);
    return target_.path.grid.spacing() * s;
}

void SupDiffTracker::add(double t, std::span<const double> x) {
    require(x.size() == prev_.size(), "snapshot lives on a different grid");
    const auto& times = target_.path.times;
    if (last_t_ >= 0.0 && t > last_t_) {
        const double span = t - last_t_;
        while (next_index_ < times.size() && times[next_index_] < t) {
            const double tau = times[next_index_];
            if (tau > last_t_) {
                const double w = (tau - last_t_) / span;
                for (std::size_t j = 0; j < x.size(); ++j) interp_[j] = prev_[j] + w * (x[j] - prev_[j]);
                sup_ = std::max(sup_, gap_at_target_index(next_index_, interp_));
            }
            ++next_index_;
        }
    }
    target_.interpolate(t, scratch_);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - scratch_[j]) * (x[j] - scratch_[j]);
    sup_ = std::max(sup_, target_.path.grid.spacing() * s);
    while (next_index_ < times.size() && times[next_index_] <= t) ++next_index_;
    std::copy(x.begin(), x.end(), prev_.begin());
    last_t_ = std::max(last_t_, t);
}

double sup_diff(const SampledPath& a, const DeterministicTrajectory& b) {
    require(a.grid == b.path.grid, "trajectories live on different grids");
    require(!a.times.empty(), "empty trajectory");
    require(std::abs(a.horizon() - b.path.horizon()) <= 1e-9 * std::max(1.0, a.horizon()),
            "trajectories have different horizons");
    SupDiffTracker tracker(b);
    for (std::size_t k = 0; k < a.times.size(); ++k) tracker.add(a.times[k], a.x[k].values());
    return tracker.value();
}

std::vector<std::pair<double, int>> ExperimentPlan::product(const std::vector<double>& eps, const std::vector<int>& ns) {
    std::vector<std::pair<double, int>> out;
    for (int n : ns)
        for (double e : eps) out.emplace_back(e, n);
    return out;
}

std::vector<std::pair<double, int>> ExperimentPlan::joint_schedule(double c, const std::vector<int>& ns) {
    std::vector<std::pair<double, int>> out;
    for (int n : ns) out.emplace_back(c / (static_cast<double>(n) * n * n), n);
    return out;
}

int ExperimentPlan::resolved_grid_nodes() const {
    if (grid_nodes > 0) return grid_nodes;
    int nmax = 2;
    for (const auto& p : pairs) nmax = std::max(nmax, p.second);
    return 50 * nmax;
}

void ExperimentPlan::validate() const {
    require(!pairs.empty(), "experiment needs at least one (eps, N) pair");
    require(replications >= 1, "replications must be >= 1");
    require(std::isfinite(horizon) && horizon > 0.0, "horizon T must be > 0");
    require(std::isfinite(target_dt) && target_dt > 0.0 && target_dt <= 1e-2 && target_dt <= horizon,
            "target time step must be in (0, min(1e-2, T)]");
    require(std::isfinite(initial.x0_amplitude), "x0 amplitude must be finite");
    if (initial.fixed_state)
        require(*initial.fixed_state >= 0 && *initial.fixed_state < model.num_states(), "y0 state out of range");
    const SpatialGrid grid(resolved_grid_nodes());
    for (const auto& [eps, n] : pairs) {
        SimParams p;
        p.epsilon = eps;
        p.population = n;
        p.horizon = horizon;
        p.dt = step_for(eps);
        p.grid = grid;
        p.validate();
    }
}

namespace {

std::string pair_label(double eps, int n, int rep) {
    std::ostringstream os;
    os << "eps=" << eps << ", N=" << n << ", rep=" << rep;
    return os.str();
}

}  // namespace

ErrorReport run_ensemble(const ExperimentPlan& plan, int jobs, const std::vector<double>* delta_grid) {
    plan.validate();
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const SpatialGrid grid(plan.resolved_grid_nodes());
    const GridFunction x0 = GridFunction::sample(
        grid, [&](double xi) { return plan.initial.x0_amplitude * std::sin(std::numbers::pi * xi); });

    // Targets, solved once per population (or once for the limit).
    std::map<int, DeterministicTrajectory> targets;
    std::map<int, MollifierFamily> families;
    std::optional<DeterministicTrajectory> limit;
    if (plan.target == Target::Limit) limit = solve_limit(plan.model, grid, plan.target_dt, plan.horizon, x0);
    for (const auto& [eps, n] : plan.pairs) {
        if (!families.count(n)) families.emplace(n, MollifierFamily(n, grid));
        if (plan.target == Target::Averaged && !targets.count(n))
            targets.emplace(n, solve_averaged(plan.model, n, grid, plan.target_dt, plan.horizon, x0));
    }

    const std::size_t reps = static_cast<std::size_t>(plan.replications);
    const std::size_t tasks = plan.pairs.size() * reps;
    std::vector<double> results(tasks, 0.0);
    std::vector<std::exception_ptr> failures(tasks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= tasks) return;
            const auto [eps, n] = plan.pairs[task / reps];
            const auto rep = static_cast<std::uint64_t>(task % reps);
            try {
                const std::uint64_t seed = replication_seed(plan.seed, rep);
                SplitMix64 rng(seed);
                const MollifierFamily& family = families.at(n);
                ChannelConfig y0;
                if (plan.initial.fixed_state)
                    y0.states.assign(static_cast<std::size_t>(family.sites()), *plan.initial.fixed_state);
                else
                    y0 = sample_configuration(plan.model, x0, family, rng);
                SimParams params;
                params.epsilon = eps;
                params.population = n;
                params.horizon = plan.horizon;
                params.dt = plan.step_for(eps);
                params.grid = grid;
                params.seed = seed;
                const DeterministicTrajectory& target = limit ? *limit : targets.at(n);
                SupDiffTracker tracker(target);
                simulate(plan.model, params, x0, y0, rng,
                         [&](const SnapshotView& s) { tracker.add(s.time, s.x); });
                results[task] = tracker.value();
            } catch (...) {
                failures[task] = std::current_exception();
            }
        }
    };
    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), tasks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t task = 0; task < tasks; ++task) {
        if (!failures[task]) continue;
        const auto [eps, n] = plan.pairs[task / reps];
        const std::string where = "replication failed (" + pair_label(eps, n, static_cast<int>(task % reps)) + "): ";
        try {
            std::rethrow_exception(failures[task]);
        } catch (const Error& e) {
            raise(e.code(), where + e.what());
        } catch (const std::exception& e) {
            raise(ErrorCode::Internal, where + e.what());
        }
    }

    ErrorReport report;
    for (std::size_t p = 0; p < plan.pairs.size(); ++p) {
        PairReport pr;
        pr.epsilon = plan.pairs[p].first;
        pr.population = plan.pairs[p].second;
        pr.sup_err2.assign(results.begin() + static_cast<long>(p * reps),
                           results.begin() + static_cast<long>((p + 1) * reps));
        report.pairs.push_back(std::move(pr));
    }
    report.delta_grid = delta_grid && !delta_grid->empty() ? *delta_grid : default_delta_grid(report.pairs);
    summarize(report);
    return report;
}

std::vector<double> default_delta_grid(const std::vector<PairReport>& pairs) {
    std::vector<double> pooled;
    for (const auto& p : pairs) pooled.insert(pooled.end(), p.sup_err2.begin(), p.sup_err2.end());
    double lo = pooled.empty() ? 0.0 : quantile(pooled, 0.05);
    double hi = pooled.empty() ? 0.0 : quantile(pooled, 0.95);
    if (!(hi > 0.0)) {
        lo = 1e-12;
        hi = 1.0;
    } else if (!(lo > 0.0)) {
        lo = hi * 1e-6;
    }
    if (!(lo < hi)) {
        lo = hi * 0.5;
        hi = hi * 2.0;
    }
    constexpr int points = 12;
    std::vector<double> grid(points);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int k = 0; k < points; ++k) grid[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (points - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

void summarize(ErrorReport& report) {
    for (auto& p : report.pairs) {
        std::vector<double> sorted = p.sup_err2;
        std::sort(sorted.begin(), sorted.end());
        p.q10 = quantile_sorted(sorted, 0.10);
        p.q50 = quantile_sorted(sorted, 0.50);
        p.q90 = quantile_sorted(sorted, 0.90);
        p.tail.clear();
        const long r = static_cast<long>(sorted.size());
        for (double delta : report.delta_grid) {
            const long hits = std::count_if(sorted.begin(), sorted.end(), [&](double v) { return v >= delta; });
            p.tail.push_back({delta, static_cast<double>(hits) / static_cast<double>(r), wilson_half_width(hits, r)});
        }
    }
}

ScalingFit fit_scaling(const ErrorReport& report, int population, int bootstrap, std::uint64_t seed) {
    std::vector<const PairReport*> rows;
    for (const auto& p : report.pairs)
        if (p.population == population) rows.push_back(&p);
    require(rows.size() >= 3, "slope fit needs at least 3 eps values at N=" + std::to_string(population));
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->epsilon < b->epsilon; });

    ScalingFit fit;
    fit.points = static_cast<int>(rows.size());
    std::vector<double> loge, logm;
    for (const auto* p : rows) {
        const double m = quantile(p->sup_err2, 0.5);
        if (!(m > 0.0)) {
            fit.degenerate = true;
            return fit;
        }
        loge.push_back(std::log(p->epsilon));
        logm.push_back(std::log(m));
    }
    fit.slope = least_squares_slope(loge, logm);

    SplitMix64 rng(splitmix64(seed ^ 0xf17u));
    std::vector<double> slopes;
    std::vector<double> resample;
    for (int b = 0; b < bootstrap; ++b) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& v = rows[k]->sup_err2;
            resample.resize(v.size());
            for (auto& s : resample) s = v[static_cast<std::size_t>(rng.uniform() * static_cast<double>(v.size()))];
            logm[k] = std::log(std::max(quantile(resample, 0.5), std::numeric_limits<double>::min()));
        }
        slopes.push_back(least_squares_slope(loge, logm));
    }
    if (slopes.empty()) {
        fit.lo = fit.hi = fit.slope;
    } else {
        fit.lo = quantile(slopes, 0.05);
        fit.hi = quantile(slopes, 0.95);
    }
    return fit;
}

std::vector<JointRow> joint_scaling_table(const ErrorReport& report) {
    std::vector<JointRow> rows;
    for (const auto& p : report.pairs) {
        const Interval ci = median_interval(p.sup_err2);
        rows.push_back({p.population, p.epsilon, quantile(p.sup_err2, 0.5), ci.lo, ci.hi});
    }
    std::sort(rows.begin(), rows.end(), [](const JointRow& a, const JointRow& b) { return a.population < b.population; });
    return rows;
}

bool joint_nonincreasing(const std::vector<JointRow>& rows) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double hw_prev = 0.5 * (rows[k - 1].median_hi - rows[k - 1].median_lo);
        const double hw = 0.5 * (rows[k].median_hi - rows[k].median_lo);
        if (rows[k].median > rows[k - 1].median + hw_prev + hw) return false;
    }
    return true;
}

namespace {

double bound_exponent(double delta, double eps, int n, const BoundParameters& p) {
    const double rho = p.rho(n);
    return p.c[3] * delta * delta / (eps * rho) * psi(p.c[4] * delta * p.alpha(n) / rho);
}

}  // namespace

BoundParameters fit_tail_constants(const ErrorReport& report) {
    BoundParameters best;
    double best_total = std::numeric_limits<double>::infinity();
    // The exponent is linear in C4; centre the grid on 1 / (geometric mean of the unit exponent).
    double log_sum = 0.0;
    int count = 0;
    for (const auto& pr : report.pairs)
        for (const auto& tp : pr.tail) {
            const double e = bound_exponent(tp.delta, pr.epsilon, pr.population, BoundParameters{});
            if (e > 0.0 && std::isfinite(e)) {
                log_sum += std::log10(e);
                ++count;
            }
        }
    const double centre = count > 0 ? -log_sum / count : 0.0;
    constexpr int grid_points = 121;
    for (int g = 0; g < grid_points; ++g) {
        BoundParameters p;
        p.c[3] = std::pow(10.0, centre - 6.0 + 12.0 * g / (grid_points - 1));
        double c3 = 1e-12;
        bool feasible = true;
        for (const auto& pr : report.pairs) {
            for (const auto& tp : pr.tail) {
                const double indicator =
                    pr.epsilon * (p.beta(pr.population) + p.gamma(pr.population)) >= p.c[1] * tp.delta ? 1.0 : 0.0;
                const double need = tp.freq + tp.ci_half - indicator;
                if (need <= 0.0) continue;
                const double decay = std::exp(-bound_exponent(tp.delta, pr.epsilon, pr.population, p));
                if (!(decay > 0.0)) {
                    feasible = false;
                    break;
                }
                c3 = std::max(c3, need / decay * (1.0 + 1e-12));
            }
            if (!feasible) break;
        }
        if (!feasible || !std::isfinite(c3)) continue;
        p.c[2] = c3;
        double total = 0.0;
        for (const auto& pr : report.pairs)
            for (const auto& tp : pr.tail) total += theoretical_tail_bound(tp.delta, pr.epsilon, pr.population, 0.0, p);
        if (total < best_total) {
            best_total = total;
            best = p;
        }
    }
    return best;
}

double tail_domination_margin(const ErrorReport& report, const BoundParameters& params) {
    double margin = -std::numeric_limits<double>::infinity();
    for (const auto& pr : report.pairs)
        for (const auto& tp : pr.tail)
            margin = std::max(margin, tp.freq + tp.ci_half -
                                          theoretical_tail_bound(tp.delta, pr.epsilon, pr.population, 0.0, params));
    return margin;
}

namespace {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

void draw_panel(std::ostringstream& os, double x0, double y0, double w, double h, const std::string& xlabel,
                const std::vector<Series>& series) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            xmin = std::min(xmin, std::log10(x));
            xmax = std::max(xmax, std::log10(x));
            ymin = std::min(ymin, std::log10(y));
            ymax = std::max(ymax, std::log10(y));
        }
    os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 + h + 30 << "\" text-anchor=\"middle\">log10 " << xlabel
       << "</text>\n";
    os << "<text x=\"" << x0 - 40 << "\" y=\"" << y0 + h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
       << x0 - 40 << ' ' << y0 + h / 2 << ")\">log10 median sup err^2</text>\n";
    if (!std::isfinite(xmin)) return;
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    auto px = [&](double x) { return x0 + (std::log10(x) - xmin) / (xmax - xmin) * w; };
    auto py = [&](double y) { return y0 + h - (std::log10(y) - ymin) / (ymax - ymin) * h; };
    os << "<text x=\"" << x0 << "\" y=\"" << y0 + h + 15 << "\">" << xmin << "</text>\n";
    os << "<text x=\"" << x0 + w << "\" y=\"" << y0 + h + 15 << "\" text-anchor=\"end\">" << xmax << "</text>\n";
    os << "<text x=\"" << x0 - 5 << "\" y=\"" << y0 + h << "\" text-anchor=\"end\">" << ymin << "</text>\n";
    os << "<text x=\"" << x0 - 5 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << ymax << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = colors[k % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (auto [x, y] : series[k].points)
            if (x > 0.0 && y > 0.0) os << px(x) << ',' << py(y) << ' ';
        os << "\"/>\n";
        for (auto [x, y] : series[k].points)
            if (x > 0.0 && y > 0.0)
                os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        os << "<text x=\"" << x0 + w - 5 << "\" y=\"" << y0 + 15 + 15 * static_cast<double>(k)
           << "\" text-anchor=\"end\" fill=\"" << color << "\">" << series[k].label << "</text>\n";
    }
}

}  // namespace

std::string render_svg(const ErrorReport& report) {
    std::map<int, Series> by_n;
    for (const auto& p : report.pairs) {
        auto& s = by_n[p.population];
        s.label = "N=" + std::to_string(p.population);
        s.points.emplace_back(p.epsilon, p.q50);
    }
    std::vector<Series> eps_series;
    for (auto& [n, s] : by_n) {
        std::sort(s.points.begin(), s.points.end());
        if (s.points.size() >= 2) eps_series.push_back(s);
    }
    // Joint schedule: one pair per N with eps N^3 constant.
    bool joint = by_n.size() >= 2;
    double c = -1.0;
    for (const auto& p : report.pairs) {
        if (by_n[p.population].points.size() != 1) joint = false;
        const double v = p.epsilon * p.population * p.population * p.population;
        if (c < 0.0) c = v;
        if (std::abs(v - c) > 1e-9 * c) joint = false;
    }

    std::ostringstream os;
    os.precision(4);
    const int panels = (eps_series.empty() ? 0 : 1) + (joint ? 1 : 0);
    const int width = 60 + 420 * std::max(1, panels);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"360\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    double x = 80;
    if (!eps_series.empty()) {
        draw_panel(os, x, 20, 340, 280, "eps", eps_series);
        x += 420;
    }
    if (joint) {
        Series s{"eps = " + std::to_string(c) + "/N^3", {}};
        for (const auto& p : report.pairs) s.points.emplace_back(p.population, p.q50);
        std::sort(s.points.begin(), s.points.end());
        draw_panel(os, x, 20, 340, 280, "N", {s});
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace hybridlab
