#include "ems/clock.hpp"

#include <cstdio>
#include <ctime>

#include <nlohmann/json.hpp>

#include "ems/errors.hpp"
#include "ems/fs_util.hpp"

namespace ems {

using nlohmann::json;

std::string to_iso8601(TimePoint t) {
    auto ms_total = t.time_since_epoch().count();
    std::time_t secs = ms_total / 1000;
    int ms = int(ms_total % 1000);
    if (ms < 0) {
        ms += 1000;
        secs -= 1;
    }
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
    return buf;
}

TimePoint parse_iso8601(const std::string& s) {
    std::tm tm{};
    int ms = 0;
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d", &tm.tm_year, &tm.tm_mon,
                        &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms);
    if (n < 6) {
        raise(errc::malformed_config, "bad timestamp: " + s);
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    std::time_t secs = timegm(&tm);
    return TimePoint(Millis(std::int64_t(secs) * 1000 + ms));
}

TimePoint WallClock::now() const {
    return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

SimulatedClock::SimulatedClock(std::filesystem::path state_file) : state_file_(std::move(state_file)) {}

TimePoint SimulatedClock::now() const {
    std::int64_t ms = 0;
    if (std::filesystem::exists(state_file_)) {
        auto parsed = json::parse(read_file(state_file_), nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("now_ms")) {
            ms = parsed["now_ms"].get<std::int64_t>();
        }
    }
    return TimePoint(Millis(ms));
}

TimePoint SimulatedClock::advance(Millis by) {
    auto t = now() + by;
    json j;
    j["now_ms"] = t.time_since_epoch().count();
    atomic_write_file(state_file_, j.dump());
    return t;
}

std::unique_ptr<Clock> make_clock(const std::string& mode, const std::filesystem::path& state_dir) {
    if (mode == "wall") {
        return std::make_unique<WallClock>();
    }
    if (mode == "simulated" || mode.empty()) {
        return std::make_unique<SimulatedClock>(state_dir / "clock.json");
    }
    raise(errc::malformed_config, "EMS_CLOCK must be 'simulated' or 'wall', got '" + mode + "'");
}

} // namespace ems
