#pragma once

// Line-oriented alarm log records:
//
//   # ftlsim alarm log v1
//   # cycles=<count>
//   cycle_index,seed,alarm_time_ns
//   0,8836101955396349345,1520331
//   0,8836101955396349345,7004512
//   1,1143301843826513127,
//
// One alarm per line. A cycle without alarms is written as a single line
// with an empty time field so that every cycle has at least one record.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ftl/errors.hpp"
#include "ftl/optics_sim.hpp"

namespace ftl {

inline constexpr std::string_view kAlarmLogMagic = "# ftlsim alarm log v1";
inline constexpr std::string_view kAlarmLogHeader = "cycle_index,seed,alarm_time_ns";

inline void write_alarm_logs(std::ostream& out, std::span<const AlarmLog> logs) {
    out << kAlarmLogMagic << '\n' << "# cycles=" << logs.size() << '\n' << kAlarmLogHeader << '\n';
    for (const AlarmLog& log : logs) {
        if (log.alarm_times.empty()) {
            out << log.cycle_index << ',' << log.seed << ",\n";
            continue;
        }
        for (const Nanos t : log.alarm_times) {
            out << log.cycle_index << ',' << log.seed << ',' << t.count() << '\n';
        }
    }
}

namespace detail {

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
    if (text.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace detail

// `source` names the stream in error messages.
inline std::vector<AlarmLog> read_alarm_logs(std::istream& in, const std::string& source) {
    std::vector<AlarmLog> logs;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> declared;
    bool header_seen = false;

    auto fail = [&](const std::string& what) {
        throw IoError(source, "line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            constexpr std::string_view key = "# cycles=";
            if (line.starts_with(key)) {
                std::size_t n = 0;
                if (!detail::parse_int(std::string_view(line).substr(key.size()), n)) {
                    fail("bad cycle count");
                }
                declared = n;
            }
            continue;
        }
        if (!header_seen) {
            if (line != kAlarmLogHeader) {
                fail("missing header '" + std::string(kAlarmLogHeader) + "'");
            }
            header_seen = true;
            continue;
        }

        const std::string_view view(line);
        const auto c1 = view.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
        if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos) {
            fail("expected three comma-separated fields");
        }
        std::uint64_t index = 0;
        std::uint64_t seed = 0;
        if (!detail::parse_int(view.substr(0, c1), index)) {
            fail("bad cycle_index");
        }
        if (!detail::parse_int(view.substr(c1 + 1, c2 - c1 - 1), seed)) {
            fail("bad seed");
        }
        const std::string_view time_field = view.substr(c2 + 1);

        const bool new_cycle = logs.empty() || logs.back().cycle_index != index;
        if (new_cycle) {
            if (!logs.empty() && index < logs.back().cycle_index) {
                fail("cycle_index decreases");
            }
            logs.push_back({index, seed, {}});
        } else if (logs.back().seed != seed) {
            fail("seed changes within a cycle");
        }
        AlarmLog& log = logs.back();

        if (time_field.empty()) {
            if (!new_cycle) {
                fail("empty alarm record inside a non-empty cycle");
            }
            continue;
        }
        if (!new_cycle && log.alarm_times.empty()) {
            fail("alarm after an empty-cycle record");
        }
        std::int64_t ns = 0;
        if (!detail::parse_int(time_field, ns) || ns <= 0) {
            fail("bad alarm_time_ns");
        }
        if (!log.alarm_times.empty() && log.alarm_times.back().count() >= ns) {
            fail("alarm times not strictly increasing");
        }
        log.alarm_times.emplace_back(ns);
    }
    if (!header_seen) {
        throw IoError(source, "not an alarm log (no header)");
    }
    if (declared && *declared != logs.size()) {
        throw IoError(source, "declared " + std::to_string(*declared) + " cycles, found " +
                                  std::to_string(logs.size()));
    }
    return logs;
}

inline void save_alarm_logs(const std::filesystem::path& path, std::span<const AlarmLog> logs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    write_alarm_logs(out, logs);
    out.flush();
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

inline std::vector<AlarmLog> load_alarm_logs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open for reading");
    }
    return read_alarm_logs(in, path.string());
}

}  // namespace ftl
