#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <mutex>

#include "resus/units.hpp"

namespace resus {

using WallTime = std::chrono::sys_time<std::chrono::nanoseconds>;

// A point in time as seen by the engine. Protocol logic only ever looks at
// monotonic_nanos; wall_time is carried along for rendering documentation.
struct Instant {
  std::int64_t monotonic_nanos = 0;
  WallTime wall_time{};

  bool operator==(const Instant&) const = default;

  Instant operator+(Duration d) const {
    return Instant{monotonic_nanos + d.nanos(), wall_time + d.chrono()};
  }
};

// b - a on the monotonic axis; throws if b was observed before a.
Duration elapsed_between(const Instant& a, const Instant& b);

// 2021-05-07T15:00:00Z, the default wall origin for virtual clocks.
WallTime default_virtual_wall_origin();

class TimeSource {
 public:
  virtual ~TimeSource() = default;
  virtual Instant now() = 0;
  // Only meaningful for virtual sources; real sources throw std::logic_error.
  virtual Instant advance(Duration d) = 0;
};

// Deterministic source for tests, scenario runs and replay.
class VirtualClock final : public TimeSource {
 public:
  explicit VirtualClock(WallTime wall_origin = default_virtual_wall_origin());

  Instant now() override;
  Instant advance(Duration d) override;
  // Moves forward to an absolute monotonic offset; no-op if already past it.
  Instant advance_to(Duration since_epoch);

 private:
  std::mutex mu_;
  Instant current_;
};

// steady_clock for the monotonic axis, system_clock for wall time.
class SystemClock final : public TimeSource {
 public:
  SystemClock();

  Instant now() override;
  Instant advance(Duration d) override;

 private:
  std::chrono::steady_clock::time_point epoch_;
  std::mutex mu_;
  std::int64_t last_nanos_ = 0;
};

}  // namespace resus
