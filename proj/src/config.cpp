#include "hybridlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hybridlab/error.hpp"

namespace hybridlab {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void parse_error(const std::string& key, const std::string& why) {
    raise(ErrorCode::ConfigParse, key + ": " + why);
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    raise(ErrorCode::ConfigValidation, key + ": " + why);
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last) parse_error(key, "expected a number, got '" + text + "'");
    return v;
}

long to_long(const std::string& key, const std::string& text) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        parse_error(key, "expected an integer, got '" + text + "'");
    return v;
}

int to_int(const std::string& key, const std::string& text) {
    const long v = to_long(key, text);
    if (v < -2147483647L || v > 2147483647L) invalid(key, "integer out of range");
    return static_cast<int>(v);
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
    return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) out.push_back(to_int(key, item));
    return out;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "off" || text == "no" || text == "0") return false;
    parse_error(key, "expected true or false, got '" + text + "'");
}

// number | constant(r) | sigmoid(lo, hi, slope, midpoint)
RateFunction to_rate(const std::string& key, const std::string& text) {
    const auto open = text.find('(');
    if (open == std::string::npos) {
        const double r = to_double(key, text);
        if (!(r >= 0.0) || !std::isfinite(r)) invalid(key, "rates must be finite and >= 0");
        return RateFunction::constant(r);
    }
    if (text.back() != ')') parse_error(key, "unterminated rate expression '" + text + "'");
    const std::string name = trim(std::string_view(text).substr(0, open));
    const auto args = to_doubles(key, text.substr(open + 1, text.size() - open - 2));
    if (name == "constant") {
        if (args.size() != 1) parse_error(key, "constant(r) takes one argument");
        if (!(args[0] >= 0.0) || !std::isfinite(args[0])) invalid(key, "rates must be finite and >= 0");
        return RateFunction::constant(args[0]);
    }
    if (name == "sigmoid") {
        if (args.size() != 4) parse_error(key, "sigmoid(lo, hi, slope, midpoint) takes four arguments");
        for (double a : args)
            if (!std::isfinite(a)) invalid(key, "sigmoid parameters must be finite");
        if (!(args[0] > 0.0 && args[1] >= args[0])) invalid(key, "sigmoid rate needs 0 < lo <= hi");
        return RateFunction::sigmoid(args[0], args[1], args[2], args[3]);
    }
    parse_error(key, "unknown rate family '" + name + "' (expected constant or sigmoid)");
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "model.states",         "model.conductance",     "model.reversal",     "model.a_plus",
        "numerics.M",           "numerics.T",            "numerics.dt",        "numerics.target_dt",
        "experiment.epsilon",   "experiment.N",          "experiment.joint_c", "experiment.replications",
        "experiment.target",    "experiment.delta_grid", "experiment.x0_amplitude", "experiment.y0",
        "poisson.N",            "poisson.samples",       "poisson.times",      "output.dir",
        "output.stride",        "output.plot"};
    return keys;
}

ChannelModel build_model(const std::map<std::string, std::string>& kv) {
    for (const char* required : {"model.states", "model.conductance", "model.reversal"})
        if (!kv.count(required)) invalid(required, "required key is missing");
    const auto states = split_list(kv.at("model.states"));
    if (states.empty() || states.size() > 8) invalid("model.states", "model needs 1..8 states");
    for (std::size_t a = 0; a < states.size(); ++a) {
        if (states[a].empty()) invalid("model.states", "state names must be non-empty");
        if (states[a].find('.') != std::string::npos) invalid("model.states", "state names must not contain '.'");
        for (std::size_t b = 0; b < a; ++b)
            if (states[a] == states[b]) invalid("model.states", "duplicate state " + states[a]);
    }
    const std::size_t n = states.size();
    const auto c = to_doubles("model.conductance", kv.at("model.conductance"));
    const auto v = to_doubles("model.reversal", kv.at("model.reversal"));
    if (c.size() != n) invalid("model.conductance", "one conductance per state required");
    if (v.size() != n) invalid("model.reversal", "one reversal potential per state required");
    for (double ce : c)
        if (!(ce >= 0.0) || !std::isfinite(ce)) invalid("model.conductance", "conductances must be finite and >= 0");
    for (double ve : v)
        if (!std::isfinite(ve)) invalid("model.reversal", "reversal potentials must be finite");

    std::vector<RateFunction> rates(n * n, RateFunction::zero());
    for (const auto& [key, value] : kv) {
        if (key.rfind("model.rate.", 0) != 0) continue;
        const std::string pair = key.substr(11);
        const auto dot = pair.find('.');
        const auto from = std::find(states.begin(), states.end(), pair.substr(0, dot));
        const auto to = dot == std::string::npos ? states.end()
                                                 : std::find(states.begin(), states.end(), pair.substr(dot + 1));
        if (from == states.end() || to == states.end()) invalid(key, "unknown key (no such state pair)");
        if (from == to) invalid(key, "self-transition rates are not allowed");
        rates[static_cast<std::size_t>(from - states.begin()) * n + static_cast<std::size_t>(to - states.begin())] =
            to_rate(key, value);
    }
    std::optional<double> a_plus;
    if (kv.count("model.a_plus")) {
        a_plus = to_double("model.a_plus", kv.at("model.a_plus"));
        if (!(*a_plus >= 0.0) || !std::isfinite(*a_plus)) invalid("model.a_plus", "a_plus must be finite and >= 0");
    }
    // Every state must reach every other through rates that are not identically zero.
    for (std::size_t start = 0; start < n; ++start) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{start};
        seen[start] = true;
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            for (std::size_t b = 0; b < n; ++b)
                if (!seen[b] && !rates[a * n + b].is_zero()) {
                    seen[b] = true;
                    stack.push_back(b);
                }
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            invalid("model.rate", "rate graph is reducible");
    }
    ChannelModel model(states, c, v, rates, a_plus);
    try {
        (void)stationary_measure(model, 0.0);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ReducibleChain) invalid("model.rate", "rate graph is reducible");
        throw;
    }
    return model;
}

}  // namespace

std::vector<std::pair<double, int>> RunConfig::pairs() const {
    if (joint_c) return ExperimentPlan::joint_schedule(*joint_c, populations);
    return ExperimentPlan::product(epsilons, populations);
}

int RunConfig::resolved_grid_nodes() const {
    if (grid_nodes > 0) return grid_nodes;
    int nmax = 2;
    for (int n : populations) nmax = std::max(nmax, n);
    return 50 * nmax;
}

ExperimentPlan RunConfig::plan(std::uint64_t seed) const {
    ExperimentPlan p;
    p.model = model;
    p.pairs = pairs();
    p.replications = replications;
    p.horizon = horizon;
    p.dt = dt;
    p.target_dt = target_dt;
    p.grid_nodes = resolved_grid_nodes();
    p.initial.x0_amplitude = x0_amplitude;
    p.initial.fixed_state = y0_state;
    p.seed = seed;
    p.target = target;
    return p;
}

ScalingOptions RunConfig::scaling_options() const {
    ScalingOptions o;
    o.samples = poisson_samples;
    o.time_points = poisson_times;
    o.horizon = horizon;
    o.x0_amplitude = x0_amplitude;
    return o;
}

RunConfig parse_config_text(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            raise(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) raise(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": empty key");
        if (value.empty()) parse_error(key, "empty value");
        if (kv.count(key)) parse_error(key, "duplicate key (line " + std::to_string(lineno) + ")");
        if (!known_keys().count(key) && key.rfind("model.rate.", 0) != 0) invalid(key, "unknown key");
        kv.emplace(key, value);
    }

    RunConfig cfg;
    cfg.model = build_model(kv);
    auto has = [&](const char* k) { return kv.count(k) > 0; };
    auto get = [&](const char* k) { return kv.at(k); };

    if (has("numerics.M")) {
        cfg.grid_nodes = to_int("numerics.M", get("numerics.M"));
        if (cfg.grid_nodes < 3) invalid("numerics.M", "grid needs M >= 3");
    }
    if (has("numerics.T")) cfg.horizon = to_double("numerics.T", get("numerics.T"));
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) invalid("numerics.T", "horizon T must be > 0");
    if (has("numerics.dt")) {
        cfg.dt = to_double("numerics.dt", get("numerics.dt"));
        if (!(cfg.dt > 0.0 && cfg.dt <= cfg.horizon)) invalid("numerics.dt", "time step must satisfy 0 < dt <= T");
    }
    if (has("numerics.target_dt")) cfg.target_dt = to_double("numerics.target_dt", get("numerics.target_dt"));
    if (!(cfg.target_dt > 0.0 && cfg.target_dt <= 1e-2 && cfg.target_dt <= cfg.horizon))
        invalid("numerics.target_dt", "target time step must be in (0, min(1e-2, T)]");

    if (!has("experiment.N")) invalid("experiment.N", "required key is missing");
    cfg.populations = to_ints("experiment.N", get("experiment.N"));
    for (int n : cfg.populations)
        if (n < 2) invalid("experiment.N", "population N must be >= 2");
    if (has("experiment.joint_c")) {
        if (has("experiment.epsilon")) invalid("experiment.joint_c", "give either experiment.epsilon or joint_c");
        const double c = to_double("experiment.joint_c", get("experiment.joint_c"));
        if (!(c > 0.0) || !std::isfinite(c)) invalid("experiment.joint_c", "joint_c must be > 0");
        cfg.joint_c = c;
        for (const auto& [eps, n] : cfg.pairs())
            if (!(eps > 0.0 && eps <= 1.0)) invalid("experiment.joint_c", "epsilon must be in (0,1]");
    } else {
        if (!has("experiment.epsilon")) invalid("experiment.epsilon", "required key is missing");
        cfg.epsilons = to_doubles("experiment.epsilon", get("experiment.epsilon"));
        for (double e : cfg.epsilons)
            if (!(e > 0.0 && e <= 1.0)) invalid("experiment.epsilon", "epsilon must be in (0,1]");
    }
    for (const auto& [eps, n] : cfg.pairs())
        if (cfg.dt == 0.0 && default_time_step(eps) > cfg.horizon)
            invalid("numerics.T", "horizon is shorter than the default time step");
    int nmax = 2;
    for (int n : cfg.populations) nmax = std::max(nmax, n);
    if (cfg.grid_nodes > 0 && cfg.grid_nodes < 50 * nmax)
        invalid("numerics.M", "grid needs M >= 50 N interior nodes (N = " + std::to_string(nmax) + ")");

    if (has("experiment.replications")) {
        cfg.replications = to_int("experiment.replications", get("experiment.replications"));
        if (cfg.replications < 1) invalid("experiment.replications", "replications must be >= 1");
    }
    if (has("experiment.target")) {
        const auto t = get("experiment.target");
        if (t == "averaged") cfg.target = Target::Averaged;
        else if (t == "limit") cfg.target = Target::Limit;
        else invalid("experiment.target", "target must be averaged or limit");
    }
    if (has("experiment.delta_grid") && get("experiment.delta_grid") != "auto") {
        auto grid = to_doubles("experiment.delta_grid", get("experiment.delta_grid"));
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (!(grid[k] > 0.0) || !std::isfinite(grid[k])) invalid("experiment.delta_grid", "deltas must be > 0");
            if (k > 0 && !(grid[k] > grid[k - 1])) invalid("experiment.delta_grid", "deltas must be increasing");
        }
        cfg.delta_grid = std::move(grid);
    }
    if (has("experiment.x0_amplitude")) {
        cfg.x0_amplitude = to_double("experiment.x0_amplitude", get("experiment.x0_amplitude"));
        if (!std::isfinite(cfg.x0_amplitude)) invalid("experiment.x0_amplitude", "amplitude must be finite");
    }
    if (has("experiment.y0") && get("experiment.y0") != "sampled") {
        const int e = cfg.model.state_index(get("experiment.y0"));
        if (e < 0) invalid("experiment.y0", "y0 must be 'sampled' or a state name");
        cfg.y0_state = e;
    }

    if (has("poisson.N")) {
        cfg.poisson_populations = to_ints("poisson.N", get("poisson.N"));
        if (cfg.poisson_populations.size() < 2) invalid("poisson.N", "need at least two population sizes");
        for (std::size_t k = 0; k < cfg.poisson_populations.size(); ++k) {
            if (cfg.poisson_populations[k] < 4) invalid("poisson.N", "population sizes must be >= 4");
            if (k > 0 && cfg.poisson_populations[k] <= cfg.poisson_populations[k - 1])
                invalid("poisson.N", "population sizes must be increasing");
        }
    }
    if (has("poisson.samples")) {
        cfg.poisson_samples = to_int("poisson.samples", get("poisson.samples"));
        if (cfg.poisson_samples < 1) invalid("poisson.samples", "samples must be >= 1");
    }
    if (has("poisson.times")) {
        cfg.poisson_times = to_int("poisson.times", get("poisson.times"));
        if (cfg.poisson_times < 1) invalid("poisson.times", "time points must be >= 1");
    }

    if (has("output.dir")) cfg.output_dir = get("output.dir");
    if (has("output.stride")) {
        cfg.stride = to_int("output.stride", get("output.stride"));
        if (cfg.stride < 1) invalid("output.stride", "stride must be >= 1");
    }
    if (has("output.plot")) cfg.plot = to_bool("output.plot", get("output.plot"));
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::ConfigMissingFile, path + ": cannot open configuration file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace hybridlab
