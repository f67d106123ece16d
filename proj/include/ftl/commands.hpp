#pragma once

// ftlsim subcommands. Each one loads and validates the whole config before
// doing any work, writes plot-ready CSV and a short text report into the
// output directory, and echoes the report unless quiet.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ftl/alarm_log_io.hpp"
#include "ftl/config.hpp"
#include "ftl/errors.hpp"
#include "ftl/protocol.hpp"
#include "ftl/relativity.hpp"

namespace ftl {

inline constexpr const char* kOutDirEnv = "FTLSIM_OUT_DIR";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int statistical = 3;
inline constexpr int io = 4;
}  // namespace exit_code

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> cycles;
    std::optional<unsigned> threads;
    std::optional<std::filesystem::path> logs;  // estimate only
    bool quiet = false;
};

// Shortest text that reads back to the same double.
inline std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

namespace detail {

// --seed and --cycles override the file, --out overrides FTLSIM_OUT_DIR, which
// overrides output_dir.
inline RunConfig resolve_config(const CommandOptions& opts) {
    RunConfig cfg = load_config(opts.config);
    if (opts.seed) {
        cfg.master_seed = *opts.seed;
    }
    if (opts.cycles) {
        if (*opts.cycles == 0) {
            throw ConfigError("--cycles must be positive");
        }
        cfg.cycles = *opts.cycles;
    }
    if (opts.threads) {
        cfg.threads = *opts.threads;
    }
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
        cfg.output_dir = env;
    }
    if (opts.out) {
        cfg.output_dir = *opts.out;
    }
    return cfg;
}

inline std::filesystem::path prepare_output(const RunConfig& cfg) {
    const std::filesystem::path dir = cfg.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError(dir.string(), "cannot create output directory");
    }
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

inline void emit(const CommandOptions& opts, std::ostream& out, const std::string& report) {
    if (!opts.quiet) {
        out << report;
    }
}

inline const char* status_name(EffectiveSpeed::Status s) {
    switch (s) {
        case EffectiveSpeed::Status::bracketed:
            return "bracketed";
        case EffectiveSpeed::Status::unbracketed_above:
            return "unbracketed_above";
        case EffectiveSpeed::Status::undetectable:
            break;
    }
    return "undetectable";
}

}  // namespace detail

//---------------------------------------------------------------------------//
// plan

inline void cmd_plan(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = detail::resolve_config(opts);
    const ApparatusGeometry& g = cfg.require_geometry();
    const double top = v_max(g);
    const double bottom = v_min(g);
    const bool ok = feasible(g);

    std::ostringstream report;
    report << "v_max = " << format_number(top) << " c\n"
           << "v_min = " << format_number(bottom) << " c\n"
           << "detector_response_s = " << format_number(g.detector_response()) << '\n'
           << "feasible = " << (ok ? "true" : "false") << "  (r*sqrt(2) > c*T0)\n";

    std::ostringstream sweep;
    sweep << "i_over_s,pump_arm_r,v_max,v_min,feasible\n";
    for (const double f : cfg.plan.i_over_s) {
        for (const double scale : cfg.plan.r_scale) {
            ApparatusGeometry h = g;
            h.leg_i = f * g.leg_s;
            h.pump_arm_r = scale * g.pump_arm_r;
            sweep << format_number(f) << ',' << format_number(h.pump_arm_r) << ','
                  << format_number(v_max(h)) << ',' << format_number(v_min(h)) << ','
                  << (feasible(h) ? 1 : 0) << '\n';
        }
    }

    const auto dir = detail::prepare_output(cfg);
    detail::write_text(dir / "plan.txt", report.str());
    detail::write_text(dir / "plan_sweep.csv", sweep.str());
    detail::emit(opts, out, report.str());
}

//---------------------------------------------------------------------------//
// simulate

inline void cmd_simulate(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = detail::resolve_config(opts);
    const auto& g = cfg.require_geometry();
    const auto& h = cfg.require_hypothesis();
    const auto& sched = cfg.require_schedule();

    const auto logs = simulate_cycles(g, h, sched.ceiling_cycle(), cfg.cycles,
                                      derive_seed(cfg.master_seed, stream::kCycles), cfg.threads);
    std::size_t alarms = 0;
    for (const auto& log : logs) {
        alarms += log.alarm_times.size();
    }

    std::ostringstream report;
    report << "cycles = " << logs.size() << '\n'
           << "cycle_length_s = " << format_number(sched.ceiling_cycle().duration().count())
           << '\n'
           << "alarms = " << alarms << '\n'
           << "mean_alarms_per_cycle = "
           << format_number(static_cast<double>(alarms) / static_cast<double>(logs.size()))
           << '\n';

    const auto dir = detail::prepare_output(cfg);
    save_alarm_logs(dir / "alarms.log", logs);
    detail::write_text(dir / "simulate.txt", report.str());
    detail::emit(opts, out, report.str());
}

//---------------------------------------------------------------------------//
// estimate

inline void cmd_estimate(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = detail::resolve_config(opts);
    const auto& g = cfg.require_geometry();
    const auto& sched = cfg.require_schedule();
    const auto dir = detail::prepare_output(cfg);
    const auto logs_path = opts.logs.value_or(dir / "alarms.log");

    const auto logs = load_alarm_logs(logs_path);
    if (logs.empty()) {
        throw EstimationError("no cycles in " + logs_path.string());
    }

    const auto& est_cfg = cfg.estimate;
    const RecordedDevice device(logs, sched, g.pump_arm_r,
                                derive_seed(cfg.master_seed, stream::kBootstrap),
                                est_cfg.bootstrap_resamples);
    const auto veff = effective_speed(device, est_cfg.significance,
                                      {est_cfg.relative_width, est_cfg.max_bisections});

    std::vector<const ProbeOutcome*> probes;
    for (const auto& p : veff.probes) {
        probes.push_back(&p);
    }
    std::stable_sort(probes.begin(), probes.end(),
                     [](const auto* a, const auto* b) { return a->speed < b->speed; });

    std::ostringstream csv;
    csv << "V,standby_s,Q_avg,Q0_avg,R,R_ci_low,R_ci_high,cycles\n";
    for (const auto* p : probes) {
        if (!p->estimate) {
            continue;
        }
        for (const auto& level : p->estimate->levels) {
            csv << format_number(p->speed) << ',' << format_number(level.standby.count()) << ','
                << format_number(level.q_avg) << ',' << format_number(level.q0_avg) << ','
                << format_number(level.reliability) << ',' << format_number(level.ci_low) << ','
                << format_number(level.ci_high) << ',' << p->estimate->cycles_used << '\n';
        }
    }

    std::ostringstream report;
    report << "cycles = " << logs.size() << '\n'
           << "significance = " << format_number(est_cfg.significance) << '\n'
           << "v_eff_status = " << detail::status_name(veff.status) << '\n';
    if (veff.status != EffectiveSpeed::Status::undetectable) {
        report << "v_eff_lower = " << format_number(veff.lower) << " c\n";
    }
    if (veff.status == EffectiveSpeed::Status::bracketed) {
        report << "v_eff_upper = " << format_number(veff.upper) << " c\n"
               << "v_eff_relative_width = " << format_number(veff.relative_width()) << '\n';
    }
    report << "probes:\n";
    for (const auto* p : probes) {
        report << "  V = " << format_number(p->speed) << "  ";
        if (p->estimate) {
            report << "R = " << format_number(p->estimate->reliability()) << "  ci_low = "
                   << format_number(p->estimate->ci_low())
                   << (p->positive ? "  positive" : "  not positive") << '\n';
        } else {
            report << "undefined: " << p->error << '\n';
        }
    }

    // p01/p11 against 1 - R at each configured probe speed, with the channel
    // simulated from the configured hypothesis.
    std::ostringstream bound;
    if (cfg.hypothesis) {
        bound << "V,p01,p11,ratio,one_minus_R,margin,tolerance,holds\n";
        report << "bound p01/p11 <= 1 - R:\n";
        std::vector<double> speeds = sched.probe_speeds;
        std::sort(speeds.begin(), speeds.end());
        speeds.erase(std::unique(speeds.begin(), speeds.end()), speeds.end());
        const std::size_t channel_cycles =
            est_cfg.channel_cycles > 0 ? est_cfg.channel_cycles : cfg.cycles;
        for (std::size_t k = 0; k < speeds.size(); ++k) {
            const double v = speeds[k];
            const auto it = std::find_if(probes.begin(), probes.end(), [&](const auto* p) {
                return p->speed == v && p->estimate.has_value();
            });
            if (it == probes.end()) {
                continue;
            }
            const auto channel = channel_at_speed(
                *cfg.hypothesis, g, sched, v,
                {channel_cycles, derive_seed(derive_seed(cfg.master_seed, stream::kBound), k), 1,
                 cfg.threads},
                est_cfg.receive_slot);
            if (channel.matrix.p11() == 0.0) {
                report << "  V = " << format_number(v) << "  undefined: p11 = 0\n";
                continue;
            }
            const auto check = verify_bound(channel, *(*it)->estimate);
            bound << format_number(v) << ',' << format_number(channel.matrix.p01()) << ','
                  << format_number(channel.matrix.p11()) << ',' << format_number(check.ratio)
                  << ',' << format_number(check.one_minus_r) << ',' << format_number(check.margin)
                  << ',' << format_number(check.tolerance) << ',' << (check.holds ? 1 : 0) << '\n';
            report << "  V = " << format_number(v) << "  margin = " << format_number(check.margin)
                   << "  tolerance = " << format_number(check.tolerance)
                   << (check.holds ? "  holds" : "  VIOLATED") << '\n';
        }
    }

    detail::write_text(dir / "estimates.csv", csv.str());
    detail::write_text(dir / "veff.txt", report.str());
    if (cfg.hypothesis) {
        detail::write_text(dir / "bound.csv", bound.str());
    }
    detail::emit(opts, out, report.str());
}

//---------------------------------------------------------------------------//
// antinomy

inline void cmd_antinomy(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = detail::resolve_config(opts);
    const AntinomySettings& a = cfg.require_channel();
    const ProbabilityMatrix channel(a.p01, a.p11);
    const bool fixed_point = channel.uninformative();

    // With p01 = p11 every iterate equals the prior; one step shows it.
    const ChainOptions chain_opts{a.epsilon, fixed_point ? std::size_t{1} : a.max_steps};
    const auto sc = antinomy_scenario(channel, Probability(a.prior), a.signal_speed,
                                      kNaturalLightSpeed, chain_opts);

    std::ostringstream table;
    table << "step,p\n";
    for (std::size_t n = 0; n < sc.chain.iterates.size(); ++n) {
        table << n << ',' << format_number(sc.chain.iterates[n]) << '\n';
    }

    std::ostringstream report;
    report << "prior = " << format_number(a.prior) << '\n'
           << "p01 = " << format_number(a.p01) << "  p11 = " << format_number(a.p11) << '\n'
           << "signal_speed = " << format_number(sc.signal_speed) << " c\n";
    if (sc.chain.iterates.size() > 1) {
        report << "first_iterate = " << format_number(sc.chain.iterates[1]) << '\n';
    }
    if (fixed_point) {
        report << "fixed point: p01 = p11, every iterate equals the prior, zero progress\n";
    } else if (sc.chain.converged) {
        report << "steps_to_1_minus_epsilon = " << sc.chain.steps()
               << "  (epsilon = " << format_number(a.epsilon) << ")\n";
    } else {
        report << "not converged after " << sc.chain.steps() << " steps; last p = "
               << format_number(sc.chain.last()) << '\n';
    }
    if (sc.chain.vacuous) {
        report << "note: conditioning event had probability 0 at some step\n";
    }
    report << "frame_beta = " << format_number(sc.frame.beta()) << '\n'
           << "events (x, t) -> boosted (x', t'):\n";
    const auto row = [&](const char* name, const SpacetimeEvent& e, const SpacetimeEvent& b) {
        report << "  " << name << "  (" << format_number(e.position) << ", "
               << format_number(e.time) << ") -> (" << format_number(b.position) << ", "
               << format_number(b.time) << ")\n";
    };
    row("start    ", sc.start, sc.start_boosted);
    row("departure", sc.departure, sc.departure_boosted);
    row("arrival  ", sc.arrival, sc.arrival_boosted);
    report << "boosted_arrival_time = " << format_number(sc.arrival_boosted.time)
           << (sc.arrival_boosted.time < 0.0 ? "  (before the start)" : "") << '\n';

    const auto dir = detail::prepare_output(cfg);
    detail::write_text(dir / "antinomy_chain.csv", table.str());
    detail::write_text(dir / "antinomy.txt", report.str());
    detail::emit(opts, out, report.str());
}

//---------------------------------------------------------------------------//

// Runs a subcommand and maps failures onto exit codes.
inline int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out,
                       std::ostream& err) {
    try {
        if (name == "plan") {
            cmd_plan(opts, out);
        } else if (name == "simulate") {
            cmd_simulate(opts, out);
        } else if (name == "estimate") {
            cmd_estimate(opts, out);
        } else if (name == "antinomy") {
            cmd_antinomy(opts, out);
        } else {
            err << "ftlsim: unknown subcommand '" << name << "'\n";
            return exit_code::validation;
        }
        return exit_code::ok;
    } catch (const IoError& e) {
        err << "ftlsim: i/o error: " << e.what() << '\n';
        return exit_code::io;
    } catch (const ValidationError& e) {
        err << "ftlsim: invalid input: " << e.what() << '\n';
        return exit_code::validation;
    } catch (const StatisticalError& e) {
        err << "ftlsim: estimation failed: " << e.what() << '\n';
        return exit_code::statistical;
    } catch (const std::exception& e) {
        err << "ftlsim: error: " << e.what() << '\n';
        return exit_code::statistical;
    }
}

}  // namespace ftl
