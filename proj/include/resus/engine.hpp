#pragma once

// Deterministic resuscitation protocol state machine.
//
// The engine is a pure function of (state, command): it never reads a clock
// and never performs I/O. Every accepted command appends at least one Event;
// a rejected command appends exactly one CommandRejected event and leaves the
// protocol state untouched. Folding the same commands from new_session()
// always yields the same state and the same events.
//
// Phase graph:
//
//   Idle --StartSession--> Analysis --AnalyzeRhythm--> RhythmSelection
//   RhythmSelection --SelectAsystolePea--> AsystolePea
//   RhythmSelection --SelectVfVt--------> VfVt
//   RhythmSelection --EndSession--------> Ended (terminal)
//   AsystolePea | VfVt --ReturnToAnalysis--> Analysis

#include <bitset>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "resus/alarms.hpp"
#include "resus/clock.hpp"
#include "resus/units.hpp"

namespace resus {

enum class Phase { Idle, Analysis, RhythmSelection, AsystolePea, VfVt, Ended };

enum class CommandKind {
  StartSession,
  StartCompression,
  AnalyzeRhythm,
  SelectAsystolePea,
  SelectVfVt,
  Defibrillate,
  AdministerAdrenaline,
  AdministerAmiodarone,
  ReturnToAnalysis,
  AddNote,
  EndSession,
  Tick,
};
inline constexpr std::size_t kCommandKindCount = 12;

enum class Rhythm { AsystolePea, VfVt };

enum class RejectReason { NotEnabled, TerminalPhase, NonMonotonicTime };

enum class EventKind {
  SessionStarted,
  CompressionStarted,
  CompressionWarning,
  CompressionBlink,
  CompressionFinished,
  AnalysisOpened,
  RhythmSelectionOpened,
  RhythmSelected,
  DefibrillationDelivered,
  AdrenalineGiven,
  AmiodaroneGiven,
  AdrenalineDue,
  AmiodaroneDue,
  NoteAdded,
  CommandRejected,
  SessionEnded,
};

std::string_view to_string(Phase p);
std::string_view to_string(CommandKind k);
std::string_view to_string(Rhythm r);
std::string_view to_string(RejectReason r);
std::string_view to_string(EventKind k);

// Inverse of to_string; std::nullopt for unknown names.
std::optional<Phase> parse_phase(std::string_view s);
std::optional<CommandKind> parse_command_kind(std::string_view s);
std::optional<Rhythm> parse_rhythm(std::string_view s);
std::optional<RejectReason> parse_reject_reason(std::string_view s);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct DosingConfig {
  Milligrams adrenaline_dose_mg = Milligrams::whole(1);
  Duration adrenaline_interval = Duration::from_seconds(240);
  Milligrams amiodarone_first_dose_mg = Milligrams::whole(300);
  Milligrams amiodarone_repeat_dose_mg = Milligrams::whole(150);
  Duration compression_duration = Duration::from_seconds(120);
  Duration warning_threshold = Duration::from_seconds(10);
  int vfvt_adrenaline_min_defibs = 3;

  bool operator==(const DosingConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> fields);
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

// Names of the fields that violate the config invariants: every value
// positive, durations in whole seconds, warning_threshold shorter than
// compression_duration. Empty when the config is valid.
std::vector<std::string> config_violations(const DosingConfig& config);
// Throws ConfigError listing config_violations().
void validate(const DosingConfig& config);

struct Command {
  CommandKind kind = CommandKind::Tick;
  Instant at;
  std::string note_text;  // AddNote only

  bool operator==(const Command&) const = default;
};

namespace payload {
struct None {
  bool operator==(const None&) const = default;
};
struct Blink {
  int second_mark = 0;
  bool operator==(const Blink&) const = default;
};
struct RhythmChoice {
  Rhythm rhythm = Rhythm::AsystolePea;
  bool operator==(const RhythmChoice&) const = default;
};
struct Defibrillation {
  int ordinal = 0;
  bool operator==(const Defibrillation&) const = default;
};
struct Dose {
  Milligrams mg;
  bool operator==(const Dose&) const = default;
};
struct Note {
  std::string text;
  bool operator==(const Note&) const = default;
};
struct Rejection {
  CommandKind command = CommandKind::Tick;
  RejectReason reason = RejectReason::NotEnabled;
  bool operator==(const Rejection&) const = default;
};
}  // namespace payload

using EventPayload = std::variant<payload::None, payload::Blink, payload::RhythmChoice, payload::Defibrillation,
                                  payload::Dose, payload::Note, payload::Rejection>;

// True when `p` holds the alternative that events of kind `k` carry.
bool payload_matches(EventKind k, const EventPayload& p);

struct Event {
  std::uint64_t seq = 0;
  Instant at;
  EventKind kind = EventKind::SessionStarted;
  EventPayload payload;

  bool operator==(const Event&) const = default;
};

class CommandSet {
 public:
  CommandSet() = default;
  CommandSet(std::initializer_list<CommandKind> kinds) {
    for (auto k : kinds) insert(k);
  }

  void insert(CommandKind k) { bits_.set(static_cast<std::size_t>(k)); }
  bool contains(CommandKind k) const { return bits_.test(static_cast<std::size_t>(k)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }
  // In CommandKind declaration order.
  std::vector<CommandKind> kinds() const;

  bool operator==(const CommandSet&) const = default;

 private:
  std::bitset<kCommandKindCount> bits_;
};

struct AdrenalineDose {
  Instant at;
  Milligrams mg;
  bool operator==(const AdrenalineDose&) const = default;
};

struct AmiodaroneDose {
  Instant at;
  Milligrams mg;
  int defib_count_at_dose = 0;
  bool operator==(const AmiodaroneDose&) const = default;
};

struct NoteEntry {
  Instant at;
  std::string text;
  bool operator==(const NoteEntry&) const = default;
};

struct SessionState {
  Phase phase = Phase::Idle;
  Instant session_start;
  int defib_count = 0;
  std::optional<Instant> last_adrenaline_at;
  std::vector<AdrenalineDose> adrenaline_doses;
  std::vector<AmiodaroneDose> amiodarone_doses;
  std::optional<int> last_amiodarone_defib_count;
  std::optional<Countdown> active_countdown;
  std::vector<NoteEntry> notes;
  DosingConfig config;

  // Last evaluated value of each reminder condition; reminders fire on the
  // false -> true edge only.
  bool adrenaline_reminder_armed = false;
  bool amiodarone_reminder_armed = false;

  // Event cursor: the next sequence number and the timestamp of the newest
  // event. Commands stamped before last_event_at are rejected.
  std::uint64_t event_seq = 1;
  std::optional<Instant> last_event_at;

  bool operator==(const SessionState&) const = default;
};

struct Transition {
  SessionState state;
  std::vector<Event> events;
  bool accepted = false;
};

// Starts a session in the Analysis phase. Throws ConfigError for an invalid config.
Transition new_session(const DosingConfig& config, const Instant& start);

Transition apply(const SessionState& state, const Command& cmd);

CommandSet enabled_commands(const SessionState& state, const Instant& now);

// No dose yet, or the last one at least adrenaline_interval ago. Ignores phase.
bool adrenaline_due(const SessionState& state, const Instant& now);

// At defibrillation 3, 5, 7, ... and not yet given for the current count.
bool amiodarone_due(const SessionState& state);

// Throws std::invalid_argument when now precedes the session start.
Duration elapsed(const SessionState& state, const Instant& now);

Milligrams adrenaline_total(const SessionState& state);
Milligrams amiodarone_total(const SessionState& state);

}  // namespace resus
