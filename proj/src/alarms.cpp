#include "resus/alarms.hpp"

#include <stdexcept>

namespace resus {

namespace {
constexpr std::int64_t kNanosPerSecond = 1'000'000'000;
}

Countdown start_countdown(const Instant& now, Duration duration, Duration warning_threshold) {
  if (duration.nanos() <= 0) throw std::invalid_argument("countdown duration must be positive");
  if (warning_threshold >= duration) {
    throw std::invalid_argument("warning threshold must be shorter than the countdown");
  }
  Countdown cd;
  cd.started_at = now;
  cd.duration = duration;
  cd.warning_threshold = warning_threshold;
  return cd;
}

Duration remaining(const Countdown& cd, const Instant& now) {
  std::int64_t since = now.monotonic_nanos - cd.started_at.monotonic_nanos;
  if (since <= 0) return cd.duration;
  return cd.duration.saturating_sub(Duration::from_nanos(since));
}

TickResult tick(const Countdown& cd, const Instant& now) {
  if (now.monotonic_nanos < cd.started_at.monotonic_nanos) {
    throw std::invalid_argument("countdown tick before the countdown started");
  }
  TickResult out{cd, {}};
  if (cd.finished) return out;

  const std::int64_t rem = remaining(cd, now).nanos();
  if (cd.last_processed_remaining_second &&
      rem > static_cast<std::int64_t>(*cd.last_processed_remaining_second) * kNanosPerSecond) {
    throw std::invalid_argument("countdown tick went back in time");
  }

  Countdown& next = out.countdown;
  if (!next.warning_emitted && rem <= cd.warning_threshold.nanos()) {
    next.warning_emitted = true;
    out.signals.push_back({AlarmKind::WarningSound, 0, now});
  }

  int mark = next.last_processed_remaining_second ? *next.last_processed_remaining_second - 1
                                                  : static_cast<int>(cd.warning_threshold.seconds());
  for (; mark >= 0 && rem <= mark * kNanosPerSecond; --mark) {
    next.last_processed_remaining_second = mark;
    out.signals.push_back({AlarmKind::Blink, mark, now});
  }

  if (rem == 0) {
    next.finished = true;
    out.signals.push_back({AlarmKind::Vibrate, 0, now});
    out.signals.push_back({AlarmKind::Finished, 0, now});
  }
  return out;
}

}  // namespace resus
