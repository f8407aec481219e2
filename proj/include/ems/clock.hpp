#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

namespace ems {

using TimePoint = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

std::string to_iso8601(TimePoint t);
TimePoint parse_iso8601(const std::string& s);

// Injectable time source. Cluster lifecycle and job timestamps run off this
// so lifecycle tests complete in milliseconds under the simulated clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
};

class WallClock final : public Clock {
public:
    TimePoint now() const override;
};

// Monotone counter persisted to a JSON file; shared between CLI invocations.
// Time passes only through advance().
class SimulatedClock final : public Clock {
public:
    explicit SimulatedClock(std::filesystem::path state_file);
    TimePoint now() const override;
    TimePoint advance(Millis by);

private:
    std::filesystem::path state_file_;
};

// Picks the clock from mode ("wall" or "simulated").
std::unique_ptr<Clock> make_clock(const std::string& mode, const std::filesystem::path& state_dir);

} // namespace ems
