#pragma once

// Run configuration: one JSON file with nested blocks.
//
//   {
//     "units": "natural",            // or "si"
//     "master_seed": 1,
//     "output_dir": "out",
//     "cycles": 10000,
//     "threads": 1,
//     "geometry":   { "leg_s": 2, "leg_i": 1, "pump_arm_r": 0.25, ... },
//     "hypothesis": { "model": "signaling", "signal_speed": 2.2, "dark_rate": 10, ... },
//     "schedule":   { "action_s": 0.01, "standby_s": [0.5, 1], "waiting": {...}, ... },
//     "estimate":   { "significance": 0.01, ... },
//     "channel":    { "prior": 0.5, "p01": 0.1, "p11": 0.9, ... },
//     "plan":       { "i_over_s": [0, 0.5, 0.9], "r_scale": [0.5, 1, 2] }
//   }
//
// Natural units put c = 1: lengths are light-seconds and speeds are
// multiples of c. With "units": "si" lengths are metres and speeds m/s; they
// are divided by c on load, and k is scaled by c^2 so that k r^2 / I keeps its
// value in seconds. Times are seconds either way. Serialization always writes
// natural units.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftl/channel.hpp"
#include "ftl/errors.hpp"
#include "ftl/geometry.hpp"
#include "ftl/optics_sim.hpp"
#include "ftl/protocol.hpp"
#include "ftl/relativity.hpp"

namespace ftl {

using Json = nlohmann::json;

struct EstimateSettings {
    double significance = 0.01;
    std::size_t bootstrap_resamples = 1000;
    double relative_width = 0.02;
    std::size_t max_bisections = 64;
    Seconds receive_slot = kDefaultReceiveSlot;
    // Cycles per channel estimate in the bound check; 0 means `cycles`.
    std::size_t channel_cycles = 0;
};

struct AntinomySettings {
    double prior = 0.5;
    double p01 = 0.1;
    double p11 = 0.9;
    double epsilon = 1e-9;
    std::size_t max_steps = 1'000'000;
    double signal_speed = 2.0;
};

struct PlanSettings {
    std::vector<double> i_over_s{0.0, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> r_scale{0.5, 1.0, 2.0};
};

struct RunConfig {
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    std::size_t cycles = 10000;
    unsigned threads = 1;

    std::optional<ApparatusGeometry> geometry;
    std::optional<PhysicsHypothesis> hypothesis;
    std::optional<CycleSchedule> schedule;
    EstimateSettings estimate;
    std::optional<AntinomySettings> channel;
    PlanSettings plan;

    void validate() const;

    const ApparatusGeometry& require_geometry() const {
        if (!geometry) {
            throw ConfigError("config has no geometry block");
        }
        return *geometry;
    }
    const PhysicsHypothesis& require_hypothesis() const {
        if (!hypothesis) {
            throw ConfigError("config has no hypothesis block");
        }
        return *hypothesis;
    }
    const CycleSchedule& require_schedule() const {
        if (!schedule) {
            throw ConfigError("config has no schedule block");
        }
        return *schedule;
    }
    const AntinomySettings& require_channel() const {
        if (!channel) {
            throw ConfigError("config has no channel block");
        }
        return *channel;
    }
};

namespace detail {

// Reads one block, rejecting keys it does not know.
class BlockReader {
public:
    BlockReader(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) {
            throw ConfigError(name_ + " must be an object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        if (!has(key)) {
            throw ConfigError(name_ + "." + key + " is required");
        }
        return convert<T>(key, raw(key));
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        return has(key) ? convert<T>(key, raw(key)) : fallback;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError("unknown key " + name_ + "." + key);
            }
        }
    }

private:
    template <typename T>
    T convert(const std::string& key, const Json& value) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!value.is_number()) {
                    throw ConfigError(name_ + "." + key + " must be a number");
                }
            }
            if constexpr (std::is_integral_v<T>) {
                if (!value.is_number_integer() ||
                    (std::is_unsigned_v<T> && value.is_number_integer() &&
                     !value.is_number_unsigned())) {
                    throw ConfigError(name_ + "." + key + " must be a non-negative integer");
                }
            }
            return value.get<T>();
        } catch (const Json::exception& e) {
            throw ConfigError(name_ + "." + key + ": " + e.what());
        }
    }

    const Json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

inline DistinguishabilityMap parse_map(const Json& j) {
    BlockReader b(j, "hypothesis.distinguishability");
    DistinguishabilityMap map;
    const auto shape = b.get<std::string>("shape", "identity");
    if (shape == "identity") {
        map.shape = DistinguishabilityMap::Shape::identity;
    } else if (shape == "power") {
        map.shape = DistinguishabilityMap::Shape::power;
    } else if (shape == "step") {
        map.shape = DistinguishabilityMap::Shape::step;
    } else {
        throw ConfigError("unknown distinguishability shape '" + shape + "'");
    }
    map.parameter = b.get<double>("parameter", 1.0);
    b.finish();
    return map;
}

inline const char* shape_name(DistinguishabilityMap::Shape s) {
    switch (s) {
        case DistinguishabilityMap::Shape::power:
            return "power";
        case DistinguishabilityMap::Shape::step:
            return "step";
        case DistinguishabilityMap::Shape::identity:
            break;
    }
    return "identity";
}

}  // namespace detail

inline void RunConfig::validate() const {
    if (cycles == 0) {
        throw ConfigError("cycles must be positive");
    }
    if (geometry) {
        geometry->validate();
    }
    if (hypothesis) {
        hypothesis->validate(require_geometry());
    }
    if (schedule) {
        schedule->validate();
        if (geometry) {
            schedule->ceiling_cycle().validate(*geometry);
        }
    }
    if (!(estimate.significance > 0.0 && estimate.significance < 0.5)) {
        throw ConfigError("estimate.significance must lie in (0, 0.5)");
    }
    if (estimate.bootstrap_resamples < 2) {
        throw ConfigError("estimate.bootstrap_resamples must be at least 2");
    }
    if (!(estimate.relative_width > 0.0)) {
        throw ConfigError("estimate.relative_width must be positive");
    }
    if (!(estimate.receive_slot > Seconds{0})) {
        throw ConfigError("estimate.receive_slot_s must be positive");
    }
    if (channel) {
        (void)Probability(channel->prior);
        (void)ProbabilityMatrix(channel->p01, channel->p11);
        if (!(channel->epsilon > 0.0 && channel->epsilon < 1.0)) {
            throw ConfigError("channel.epsilon must lie in (0, 1)");
        }
        if (channel->max_steps == 0) {
            throw ConfigError("channel.max_steps must be positive");
        }
        if (!(channel->signal_speed > 0.0)) {
            throw ConfigError("channel.signal_speed must be positive");
        }
    }
    for (const double f : plan.i_over_s) {
        if (!(f >= 0.0 && f < 1.0)) {
            throw ConfigError("plan.i_over_s entries must lie in [0, 1)");
        }
    }
    for (const double f : plan.r_scale) {
        if (!(f > 0.0)) {
            throw ConfigError("plan.r_scale entries must be positive");
        }
    }
}

// Parses and validates. Throws ConfigError, or the block's own
// ValidationError subclass.
inline RunConfig parse_config(const Json& j) {
    using detail::BlockReader;
    BlockReader top(j, "config");
    RunConfig cfg;

    const auto units = top.get<std::string>("units", "natural");
    if (units != "natural" && units != "si") {
        throw ConfigError("units must be \"natural\" or \"si\"");
    }
    const bool si = units == "si";
    cfg.master_seed = top.get<std::uint64_t>("master_seed", 0);
    cfg.output_dir = top.get<std::string>("output_dir", "out");
    cfg.cycles = top.get<std::size_t>("cycles", cfg.cycles);
    cfg.threads = top.get<unsigned>("threads", 1);

    double c = 1.0;
    if (top.has("geometry")) {
        BlockReader b(top.raw("geometry"), "geometry");
        ApparatusGeometry g;
        c = b.get<double>("light_speed_c", si ? kSiLightSpeed : kNaturalLightSpeed);
        if (!(c > 0.0)) {
            throw ConfigError("geometry.light_speed_c must be positive");
        }
        g.leg_s = b.get<double>("leg_s") / c;
        g.leg_i = b.get<double>("leg_i") / c;
        g.pump_arm_r = b.get<double>("pump_arm_r") / c;
        g.detector_k = b.get<double>("detector_k", 0.0) * c * c;
        g.intensity_I = b.get<double>("intensity_I", 1.0);
        g.raise_time_T = b.get<double>("raise_time_T", 0.0);
        g.electronics_T0 = b.get<double>("electronics_T0", 0.0);
        g.light_speed_c = 1.0;
        b.finish();
        cfg.geometry = g;
    } else if (si) {
        c = kSiLightSpeed;
    }

    if (top.has("hypothesis")) {
        BlockReader b(top.raw("hypothesis"), "hypothesis");
        const auto model = b.get<std::string>("model");
        const double dark = b.get<double>("dark_rate");
        if (model == "null") {
            cfg.hypothesis = PhysicsHypothesis::null(dark);
        } else if (model == "signaling") {
            double bright = 0.0;
            if (b.has("bright_rate") == b.has("pair_rate")) {
                throw ConfigError("hypothesis needs exactly one of bright_rate, pair_rate");
            }
            if (b.has("bright_rate")) {
                bright = b.get<double>("bright_rate");
            } else {
                bright = PhysicsHypothesis::bright_rate_from_pair_rate(b.get<double>("pair_rate"));
            }
            DistinguishabilityMap map;
            if (b.has("distinguishability")) {
                map = detail::parse_map(b.raw("distinguishability"));
            }
            cfg.hypothesis =
                PhysicsHypothesis::signaling(b.get<double>("signal_speed") / c, dark, bright, map);
        } else {
            throw ConfigError("hypothesis.model must be \"null\" or \"signaling\"");
        }
        b.finish();
    }

    if (top.has("schedule")) {
        BlockReader b(top.raw("schedule"), "schedule");
        CycleSchedule s;
        s.action = Seconds{b.get<double>("action_s")};
        for (const double x : b.get<std::vector<double>>("standby_s")) {
            s.standby.emplace_back(x);
        }
        if (b.has("waiting")) {
            BlockReader w(b.raw("waiting"), "schedule.waiting");
            const auto rule = w.get<std::string>("rule", "fixed");
            const Seconds value{w.get<double>("value_s", 0.0)};
            if (rule == "fixed") {
                s.waiting = WaitingRule::fixed(value);
            } else if (rule == "constant_edge") {
                s.waiting = WaitingRule::constant_edge(value);
            } else {
                throw ConfigError("schedule.waiting.rule must be \"fixed\" or \"constant_edge\"");
            }
            w.finish();
        }
        for (const double v : b.get<std::vector<double>>("probe_speeds", {})) {
            s.probe_speeds.push_back(v / c);
        }
        b.finish();
        cfg.schedule = s;
    }

    if (top.has("estimate")) {
        BlockReader b(top.raw("estimate"), "estimate");
        auto& e = cfg.estimate;
        e.significance = b.get<double>("significance", e.significance);
        e.bootstrap_resamples = b.get<std::size_t>("bootstrap_resamples", e.bootstrap_resamples);
        e.relative_width = b.get<double>("relative_width", e.relative_width);
        e.max_bisections = b.get<std::size_t>("max_bisections", e.max_bisections);
        e.receive_slot = Seconds{b.get<double>("receive_slot_s", e.receive_slot.count())};
        e.channel_cycles = b.get<std::size_t>("channel_cycles", e.channel_cycles);
        b.finish();
    }

    if (top.has("channel")) {
        BlockReader b(top.raw("channel"), "channel");
        AntinomySettings a;
        a.prior = b.get<double>("prior", a.prior);
        a.p01 = b.get<double>("p01");
        a.p11 = b.get<double>("p11");
        a.epsilon = b.get<double>("epsilon", a.epsilon);
        a.max_steps = b.get<std::size_t>("max_steps", a.max_steps);
        a.signal_speed = b.get<double>("signal_speed", a.signal_speed * c) / c;
        b.finish();
        cfg.channel = a;
    }

    if (top.has("plan")) {
        BlockReader b(top.raw("plan"), "plan");
        cfg.plan.i_over_s = b.get<std::vector<double>>("i_over_s", cfg.plan.i_over_s);
        cfg.plan.r_scale = b.get<std::vector<double>>("r_scale", cfg.plan.r_scale);
        b.finish();
    }

    top.finish();
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open config");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

// Natural-unit form; parse_config(to_json(cfg)) reproduces cfg.
inline Json to_json(const RunConfig& cfg) {
    Json j;
    j["units"] = "natural";
    j["master_seed"] = cfg.master_seed;
    j["output_dir"] = cfg.output_dir;
    j["cycles"] = cfg.cycles;
    j["threads"] = cfg.threads;
    if (cfg.geometry) {
        const auto& g = *cfg.geometry;
        j["geometry"] = {{"leg_s", g.leg_s},
                         {"leg_i", g.leg_i},
                         {"pump_arm_r", g.pump_arm_r},
                         {"detector_k", g.detector_k},
                         {"intensity_I", g.intensity_I},
                         {"raise_time_T", g.raise_time_T},
                         {"electronics_T0", g.electronics_T0},
                         {"light_speed_c", g.light_speed_c}};
    }
    if (cfg.hypothesis) {
        const auto& h = *cfg.hypothesis;
        Json b{{"model", h.signaling() ? "signaling" : "null"}, {"dark_rate", h.dark_rate}};
        if (h.signaling()) {
            b["signal_speed"] = h.signal_speed;
            b["bright_rate"] = h.bright_rate;
            b["distinguishability"] = {{"shape", detail::shape_name(h.distinguishability.shape)},
                                       {"parameter", h.distinguishability.parameter}};
        }
        j["hypothesis"] = b;
    }
    if (cfg.schedule) {
        const auto& s = *cfg.schedule;
        std::vector<double> standby;
        for (const Seconds x : s.standby) {
            standby.push_back(x.count());
        }
        j["schedule"] = {
            {"action_s", s.action.count()},
            {"standby_s", standby},
            {"waiting",
             {{"rule", s.waiting.kind == WaitingRule::Kind::fixed ? "fixed" : "constant_edge"},
              {"value_s", s.waiting.value.count()}}},
            {"probe_speeds", s.probe_speeds}};
    }
    const auto& e = cfg.estimate;
    j["estimate"] = {{"significance", e.significance},
                     {"bootstrap_resamples", e.bootstrap_resamples},
                     {"relative_width", e.relative_width},
                     {"max_bisections", e.max_bisections},
                     {"receive_slot_s", e.receive_slot.count()},
                     {"channel_cycles", e.channel_cycles}};
    if (cfg.channel) {
        const auto& a = *cfg.channel;
        j["channel"] = {{"prior", a.prior},         {"p01", a.p01},
                        {"p11", a.p11},             {"epsilon", a.epsilon},
                        {"max_steps", a.max_steps}, {"signal_speed", a.signal_speed}};
    }
    j["plan"] = {{"i_over_s", cfg.plan.i_over_s}, {"r_scale", cfg.plan.r_scale}};
    return j;
}

}  // namespace ftl
