// ftlsim: plan | simulate | estimate | antinomy

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ftl/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulator and estimator for an interferometric superluminal-signaling device"};
    app.require_subcommand(1, 1);

    ftl::CommandOptions opts;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t cycles = 0;
    unsigned threads = 0;
    std::string logs;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "Run configuration (JSON)")->required();
        sub->add_option("--seed", seed, "Override master_seed");
        sub->add_option("--out", out,
                        std::string("Output directory (overrides ") + ftl::kOutDirEnv +
                            " and output_dir)");
        sub->add_option("--cycles", cycles, "Override the cycle count");
        sub->add_option("--threads", threads, "Worker threads, 0 = all cores");
        sub->add_flag("--quiet", opts.quiet, "Do not echo the report");
    };

    add_common(app.add_subcommand("plan", "Speed bounds, feasibility and a geometry sweep"));
    add_common(app.add_subcommand("simulate", "Simulate cycles and write alarms.log"));
    auto* estimate = app.add_subcommand("estimate", "Reliability table, v_eff and the p01/p11 bound");
    add_common(estimate);
    estimate->add_option("--logs", logs, "Alarm log to read (default <out>/alarms.log)");
    add_common(app.add_subcommand("antinomy", "Posterior chain and the boosted event table"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ftl::exit_code::validation;
    }

    auto* sub = app.get_subcommands().front();
    auto given = [](const CLI::App* app, const std::string& name) {
        const CLI::Option* o = app->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    if (given(sub, "--seed")) {
        opts.seed = seed;
    }
    if (given(sub, "--out")) {
        opts.out = out;
    }
    if (given(sub, "--cycles")) {
        opts.cycles = cycles;
    }
    if (given(sub, "--threads")) {
        opts.threads = threads;
    }
    if (given(sub, "--logs")) {
        opts.logs = logs;
    }
    return ftl::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
