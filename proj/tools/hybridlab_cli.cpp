// hybridlab-cli: command-line front end over the C API.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "hybridlab/hybridlab.h"

namespace {

int fail(hl_status status) {
    std::fprintf(stderr, "error: code=%s message=%s\n", hl_status_name(status), hl_last_error());
    return 1 + static_cast<int>(status);
}

void print_and_free(char* text) {
    if (!text) return;
    std::fputs(text, stdout);
    hl_string_free(text);
}

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string out;
    int stride = 0;
    bool plot = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Configuration file")->required();
    cmd->add_option("--seed", c.seed, "Master seed")->default_val(0);
    cmd->add_option("--jobs", c.jobs, "Worker threads (default: available parallelism)");
    cmd->add_option("--out", c.out, "Output directory (overrides output.dir)");
    cmd->add_option("--stride", c.stride, "Write every k-th lattice row (overrides output.stride)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--plot", c.plot, "Write an SVG plot");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid cable-equation / ion-channel simulation laboratory"};
    app.require_subcommand(1);

    Common common;
    auto* simulate = app.add_subcommand("simulate", "Simulate one hybrid trajectory");
    auto* average = app.add_subcommand("average", "Solve the averaged or limit equation");
    auto* sweep = app.add_subcommand("sweep", "Run the (eps, N) ensemble and write error reports");
    auto* poisson = app.add_subcommand("poisson-check", "Measure Poisson-solution scalings in N");
    auto* validate = app.add_subcommand("validate", "Run the invariant suite on the configured model");
    for (auto* cmd : {simulate, average, sweep, poisson, validate}) add_common(cmd, common);

    double psi_max = 10.0;
    int psi_points = 101;
    auto* psi_table = app.add_subcommand("psi-table", "Print x,psi(x) on a uniform lattice");
    psi_table->add_option("--max", psi_max, "Largest x")->default_val(10.0);
    psi_table->add_option("--points", psi_points, "Number of lattice points")->default_val(101);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error: code=usage message=%s\n", e.what());
        return 2;
    }

    if (psi_table->parsed()) {
        char* csv = nullptr;
        const hl_status st = hl_psi_table(psi_max, psi_points, &csv);
        if (st != HL_OK) return fail(st);
        print_and_free(csv);
        return 0;
    }

    hl_config* cfg = nullptr;
    hl_status st = hl_config_load(common.config.c_str(), &cfg);
    if (st != HL_OK) return fail(st);

    hl_run_options opts{};
    opts.seed = common.seed;
    opts.jobs = common.jobs > 0 ? common.jobs : static_cast<int>(std::thread::hardware_concurrency());
    opts.out_dir = common.out.empty() ? nullptr : common.out.c_str();
    opts.stride = common.stride;
    opts.plot = common.plot ? 1 : 0;

    char* text = nullptr;
    int passed = 1;
    if (simulate->parsed()) {
        st = hl_run_simulate(cfg, &opts, &text);
        if (st == HL_OK) std::printf("wrote %s\n", text);
        hl_string_free(text);
    } else if (average->parsed()) {
        st = hl_run_average(cfg, &opts, &text);
        if (st == HL_OK) std::printf("wrote %s\n", text);
        hl_string_free(text);
    } else if (sweep->parsed()) {
        st = hl_run_sweep(cfg, &opts, &text);
        if (st == HL_OK) print_and_free(text);
    } else if (poisson->parsed()) {
        st = hl_run_poisson_check(cfg, &opts, &text);
        if (st == HL_OK) print_and_free(text);
    } else if (validate->parsed()) {
        st = hl_run_validate(cfg, &opts, &text, &passed);
        if (st == HL_OK) print_and_free(text);
    }
    hl_config_free(cfg);
    if (st != HL_OK) return fail(st);
    return passed ? 0 : 1;
}
