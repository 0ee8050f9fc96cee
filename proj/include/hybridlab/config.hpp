#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridlab/channel.hpp"
#include "hybridlab/convergence.hpp"
#include "hybridlab/poisson.hpp"

namespace hybridlab {

/// Parsed run configuration. Format: one `key = value` per line, `#` starts a
/// comment, keys carry a dotted block prefix. Unknown keys are errors.
///
///   model.states       = C,O
///   model.conductance  = 0,1
///   model.reversal     = 0,1
///   model.rate.C.O     = sigmoid(0.5, 3, 10, 0.1)   # or constant(r), or a number
///   model.a_plus       = 3                          # optional majorant override
///   numerics.M / numerics.T / numerics.dt / numerics.target_dt
///   experiment.epsilon / experiment.N / experiment.joint_c / experiment.replications
///   experiment.target (averaged|limit) / experiment.delta_grid (auto|list)
///   experiment.x0_amplitude / experiment.y0 (sampled|<state>)
///   poisson.N / poisson.samples / poisson.times
///   output.dir / output.stride / output.plot
struct RunConfig {
    ChannelModel model = default_sigmoid_model();

    int grid_nodes = 0;  // 0: 50 * max N
    double horizon = 1.0;
    double dt = 0.0;  // 0: min(1e-3, eps/10)
    double target_dt = 1e-4;

    std::vector<double> epsilons;
    std::vector<int> populations;
    std::optional<double> joint_c;
    int replications = 1;
    Target target = Target::Averaged;
    std::optional<std::vector<double>> delta_grid;  // nullopt: automatic
    double x0_amplitude = 0.5;
    std::optional<int> y0_state;  // nullopt: sampled from mu_N(x0)

    std::vector<int> poisson_populations{8, 16, 32, 64};
    int poisson_samples = 64;
    int poisson_times = 5;

    std::string output_dir = ".";
    int stride = 1;
    bool plot = false;

    /// (eps, N) pairs: the joint schedule when joint_c is set, else the product.
    std::vector<std::pair<double, int>> pairs() const;
    int resolved_grid_nodes() const;
    ExperimentPlan plan(std::uint64_t seed) const;
    ScalingOptions scaling_options() const;
};

/// Throws config-missing-file, config-parse (syntax, duplicate keys, malformed
/// values) or config-validation (unknown or missing keys, out-of-range values).
/// Messages start with the offending key path.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(std::string_view text);

}  // namespace hybridlab
