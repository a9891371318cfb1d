#pragma once

// The compression countdown and its three alert stages: one warning sound
// when the remaining time drops to the warning threshold, one blink per
// whole second from the threshold down to zero, and vibrate + finished at
// zero. Ticks may arrive at any cadence; a late tick emits every stage it
// skipped over, in order.

#include <optional>
#include <vector>

#include "resus/clock.hpp"
#include "resus/units.hpp"

namespace resus {

struct Countdown {
  Instant started_at;
  Duration duration = Duration::from_seconds(120);
  Duration warning_threshold = Duration::from_seconds(10);
  // Lowest blink mark already emitted.
  std::optional<int> last_processed_remaining_second;
  bool warning_emitted = false;
  bool finished = false;

  bool operator==(const Countdown&) const = default;
};

enum class AlarmKind { WarningSound, Blink, Vibrate, Finished };

struct AlarmSignal {
  AlarmKind kind;
  int second_mark = 0;  // Blink only
  Instant at;

  bool operator==(const AlarmSignal&) const = default;
};

Countdown start_countdown(const Instant& now, Duration duration = Duration::from_seconds(120),
                          Duration warning_threshold = Duration::from_seconds(10));

// max(0, duration - (now - started_at)); before started_at the full duration.
Duration remaining(const Countdown& cd, const Instant& now);

struct TickResult {
  Countdown countdown;
  std::vector<AlarmSignal> signals;
};

// Emits every stage reached by `now` that has not been emitted yet. Ticking
// twice at the same instant emits nothing the second time. Throws
// std::invalid_argument when `now` precedes the start or lies before a
// stage that was already processed.
TickResult tick(const Countdown& cd, const Instant& now);

}  // namespace resus
