#include "resus/clock.hpp"

#include <stdexcept>

namespace resus {

Duration elapsed_between(const Instant& a, const Instant& b) {
  if (b.monotonic_nanos < a.monotonic_nanos) {
    throw std::invalid_argument("elapsed_between: second instant precedes the first");
  }
  return Duration::from_nanos(b.monotonic_nanos - a.monotonic_nanos);
}

WallTime default_virtual_wall_origin() {
  using namespace std::chrono;
  return WallTime{sys_days{year{2021} / May / 7} + hours{15}};
}

VirtualClock::VirtualClock(WallTime wall_origin) : current_{0, wall_origin} {}

Instant VirtualClock::now() {
  std::lock_guard lock(mu_);
  return current_;
}

Instant VirtualClock::advance(Duration d) {
  std::lock_guard lock(mu_);
  current_ = current_ + d;
  return current_;
}

Instant VirtualClock::advance_to(Duration since_epoch) {
  std::lock_guard lock(mu_);
  if (since_epoch.nanos() > current_.monotonic_nanos) {
    current_ = current_ + Duration::from_nanos(since_epoch.nanos() - current_.monotonic_nanos);
  }
  return current_;
}

SystemClock::SystemClock() : epoch_(std::chrono::steady_clock::now()) {}

Instant SystemClock::now() {
  using namespace std::chrono;
  std::lock_guard lock(mu_);
  auto mono = duration_cast<nanoseconds>(steady_clock::now() - epoch_).count();
  // steady_clock is already monotonic; the clamp guards against misbehaving platforms.
  if (mono < last_nanos_) mono = last_nanos_;
  last_nanos_ = mono;
  return Instant{mono, time_point_cast<nanoseconds>(system_clock::now())};
}

Instant SystemClock::advance(Duration) {
  throw std::logic_error("advance is only supported on a virtual time source");
}

}  // namespace resus
