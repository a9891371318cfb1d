#include "resus/engine.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace resus {

namespace {

constexpr std::array<std::string_view, 6> kPhaseNames = {"Idle",        "Analysis", "RhythmSelection",
                                                         "AsystolePea", "VfVt",     "Ended"};

constexpr std::array<std::string_view, kCommandKindCount> kCommandNames = {
    "StartSession",         "StartCompression",     "AnalyzeRhythm",    "SelectAsystolePea",
    "SelectVfVt",           "Defibrillate",         "AdministerAdrenaline",
    "AdministerAmiodarone", "ReturnToAnalysis",     "AddNote",          "EndSession",
    "Tick"};

constexpr std::array<std::string_view, 2> kRhythmNames = {"AsystolePea", "VfVt"};

constexpr std::array<std::string_view, 3> kReasonNames = {"not-enabled", "terminal-phase", "non-monotonic-time"};

constexpr std::array<std::string_view, 16> kEventNames = {
    "SessionStarted",        "CompressionStarted", "CompressionWarning",      "CompressionBlink",
    "CompressionFinished",   "AnalysisOpened",     "RhythmSelectionOpened",   "RhythmSelected",
    "DefibrillationDelivered", "AdrenalineGiven",  "AmiodaroneGiven",         "AdrenalineDue",
    "AmiodaroneDue",         "NoteAdded",          "CommandRejected",         "SessionEnded"};

template <class Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  auto it = std::find(names.begin(), names.end(), s);
  if (it == names.end()) return std::nullopt;
  return static_cast<Enum>(it - names.begin());
}

// Builds the events of one apply() call and keeps the cursor in step.
class Emitter {
 public:
  Emitter(Transition& t) : t_(t) {}

  void emit(EventKind kind, const Instant& at, EventPayload payload = payload::None{}) {
    SessionState& s = t_.state;
    t_.events.push_back(Event{s.event_seq, at, kind, std::move(payload)});
    ++s.event_seq;
    s.last_event_at = at;
  }

 private:
  Transition& t_;
};

bool adrenaline_reminder_condition(const SessionState& s, const Instant& now) {
  switch (s.phase) {
    case Phase::AsystolePea:
      return adrenaline_due(s, now);
    case Phase::VfVt:
      return s.defib_count >= s.config.vfvt_adrenaline_min_defibs && adrenaline_due(s, now);
    default:
      return false;
  }
}

bool amiodarone_reminder_condition(const SessionState& s) {
  return s.phase == Phase::VfVt && amiodarone_due(s);
}

void reevaluate_reminders(Transition& t, Emitter& out, const Instant& at) {
  SessionState& s = t.state;
  bool adrenaline = adrenaline_reminder_condition(s, at);
  bool amiodarone = amiodarone_reminder_condition(s);
  if (adrenaline && !s.adrenaline_reminder_armed) out.emit(EventKind::AdrenalineDue, at);
  if (amiodarone && !s.amiodarone_reminder_armed) out.emit(EventKind::AmiodaroneDue, at);
  s.adrenaline_reminder_armed = adrenaline;
  s.amiodarone_reminder_armed = amiodarone;
}

void start_session(Transition& t, Emitter& out, const Instant& at) {
  SessionState& s = t.state;
  s.phase = Phase::Analysis;
  s.session_start = at;
  out.emit(EventKind::SessionStarted, at);
  out.emit(EventKind::AnalysisOpened, at);
}

void run_countdown(Transition& t, Emitter& out, const Instant& at) {
  SessionState& s = t.state;
  if (!s.active_countdown) return;
  TickResult r = tick(*s.active_countdown, at);
  for (const AlarmSignal& sig : r.signals) {
    switch (sig.kind) {
      case AlarmKind::WarningSound:
        out.emit(EventKind::CompressionWarning, sig.at);
        break;
      case AlarmKind::Blink:
        out.emit(EventKind::CompressionBlink, sig.at, payload::Blink{sig.second_mark});
        break;
      case AlarmKind::Vibrate:
        // Rendered by clients from CompressionFinished.
        break;
      case AlarmKind::Finished:
        out.emit(EventKind::CompressionFinished, sig.at);
        break;
    }
  }
  if (r.countdown.finished) {
    s.active_countdown.reset();
  } else {
    s.active_countdown = r.countdown;
  }
}

Transition reject(const SessionState& state, CommandKind kind, RejectReason reason, const Instant& at) {
  Transition t{state, {}, false};
  Emitter out(t);
  out.emit(EventKind::CommandRejected, at, payload::Rejection{kind, reason});
  return t;
}

}  // namespace

std::string_view to_string(Phase p) { return kPhaseNames.at(static_cast<std::size_t>(p)); }
std::string_view to_string(CommandKind k) { return kCommandNames.at(static_cast<std::size_t>(k)); }
std::string_view to_string(Rhythm r) { return kRhythmNames.at(static_cast<std::size_t>(r)); }
std::string_view to_string(RejectReason r) { return kReasonNames.at(static_cast<std::size_t>(r)); }
std::string_view to_string(EventKind k) { return kEventNames.at(static_cast<std::size_t>(k)); }

std::optional<Phase> parse_phase(std::string_view s) { return lookup<Phase>(kPhaseNames, s); }
std::optional<CommandKind> parse_command_kind(std::string_view s) { return lookup<CommandKind>(kCommandNames, s); }
std::optional<Rhythm> parse_rhythm(std::string_view s) { return lookup<Rhythm>(kRhythmNames, s); }
std::optional<RejectReason> parse_reject_reason(std::string_view s) {
  return lookup<RejectReason>(kReasonNames, s);
}
std::optional<EventKind> parse_event_kind(std::string_view s) { return lookup<EventKind>(kEventNames, s); }

namespace {
std::string join_fields(const std::vector<std::string>& fields) {
  std::string out = "invalid dosing config fields:";
  for (const auto& f : fields) out += " " + f;
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> fields)
    : std::invalid_argument(join_fields(fields)), fields_(std::move(fields)) {}

std::vector<std::string> config_violations(const DosingConfig& c) {
  std::vector<std::string> bad;
  auto positive_duration = [&](Duration d, const char* name) {
    if (d.nanos() <= 0 || !d.whole_seconds()) bad.emplace_back(name);
  };
  if (c.adrenaline_dose_mg.micrograms() <= 0) bad.emplace_back("adrenaline_dose_mg");
  positive_duration(c.adrenaline_interval, "adrenaline_interval");
  if (c.amiodarone_first_dose_mg.micrograms() <= 0) bad.emplace_back("amiodarone_first_dose_mg");
  if (c.amiodarone_repeat_dose_mg.micrograms() <= 0) bad.emplace_back("amiodarone_repeat_dose_mg");
  positive_duration(c.compression_duration, "compression_duration");
  if (c.warning_threshold.nanos() <= 0 || !c.warning_threshold.whole_seconds() ||
      c.warning_threshold >= c.compression_duration) {
    bad.emplace_back("warning_threshold");
  }
  if (c.vfvt_adrenaline_min_defibs <= 0) bad.emplace_back("vfvt_adrenaline_min_defibs");
  return bad;
}

void validate(const DosingConfig& config) {
  auto bad = config_violations(config);
  if (!bad.empty()) throw ConfigError(std::move(bad));
}

bool payload_matches(EventKind k, const EventPayload& p) {
  switch (k) {
    case EventKind::CompressionBlink:
      return std::holds_alternative<payload::Blink>(p);
    case EventKind::RhythmSelected:
      return std::holds_alternative<payload::RhythmChoice>(p);
    case EventKind::DefibrillationDelivered:
      return std::holds_alternative<payload::Defibrillation>(p);
    case EventKind::AdrenalineGiven:
    case EventKind::AmiodaroneGiven:
      return std::holds_alternative<payload::Dose>(p);
    case EventKind::NoteAdded:
      return std::holds_alternative<payload::Note>(p);
    case EventKind::CommandRejected:
      return std::holds_alternative<payload::Rejection>(p);
    default:
      return std::holds_alternative<payload::None>(p);
  }
}

std::vector<CommandKind> CommandSet::kinds() const {
  std::vector<CommandKind> out;
  for (std::size_t i = 0; i < kCommandKindCount; ++i) {
    if (bits_.test(i)) out.push_back(static_cast<CommandKind>(i));
  }
  return out;
}

Transition new_session(const DosingConfig& config, const Instant& start) {
  validate(config);
  Transition t;
  t.state.config = config;
  t.accepted = true;
  Emitter out(t);
  start_session(t, out, start);
  return t;
}

bool adrenaline_due(const SessionState& state, const Instant& now) {
  if (!state.last_adrenaline_at) return true;
  return now.monotonic_nanos - state.last_adrenaline_at->monotonic_nanos >= state.config.adrenaline_interval.nanos();
}

bool amiodarone_due(const SessionState& state) {
  int n = state.defib_count;
  return n >= 3 && n % 2 == 1 && state.last_amiodarone_defib_count != n;
}

Duration elapsed(const SessionState& state, const Instant& now) {
  return elapsed_between(state.session_start, now);
}

Milligrams adrenaline_total(const SessionState& state) {
  Milligrams total;
  for (const auto& d : state.adrenaline_doses) total += d.mg;
  return total;
}

Milligrams amiodarone_total(const SessionState& state) {
  Milligrams total;
  for (const auto& d : state.amiodarone_doses) total += d.mg;
  return total;
}

CommandSet enabled_commands(const SessionState& s, const Instant& now) {
  using K = CommandKind;
  CommandSet set;
  const bool can_compress = !s.active_countdown.has_value();
  switch (s.phase) {
    case Phase::Idle:
      set.insert(K::StartSession);
      break;
    case Phase::Analysis:
      if (can_compress) set.insert(K::StartCompression);
      set.insert(K::AnalyzeRhythm);
      set.insert(K::AddNote);
      set.insert(K::Tick);
      break;
    case Phase::RhythmSelection:
      set = {K::SelectAsystolePea, K::SelectVfVt, K::EndSession, K::AddNote, K::Tick};
      break;
    case Phase::AsystolePea:
      if (adrenaline_due(s, now)) set.insert(K::AdministerAdrenaline);
      if (can_compress) set.insert(K::StartCompression);
      set.insert(K::ReturnToAnalysis);
      set.insert(K::AddNote);
      set.insert(K::Tick);
      break;
    case Phase::VfVt:
      set.insert(K::Defibrillate);
      if (adrenaline_due(s, now) && s.defib_count >= s.config.vfvt_adrenaline_min_defibs) {
        set.insert(K::AdministerAdrenaline);
      }
      if (amiodarone_due(s)) set.insert(K::AdministerAmiodarone);
      if (can_compress) set.insert(K::StartCompression);
      set.insert(K::ReturnToAnalysis);
      set.insert(K::AddNote);
      set.insert(K::Tick);
      break;
    case Phase::Ended:
      break;
  }
  return set;
}

Transition apply(const SessionState& state, const Command& cmd) {
  if (state.phase == Phase::Ended) {
    Instant at = cmd.at;
    if (state.last_event_at && at.monotonic_nanos < state.last_event_at->monotonic_nanos) at = *state.last_event_at;
    return reject(state, cmd.kind, RejectReason::TerminalPhase, at);
  }
  if (state.last_event_at && cmd.at.monotonic_nanos < state.last_event_at->monotonic_nanos) {
    return reject(state, cmd.kind, RejectReason::NonMonotonicTime, *state.last_event_at);
  }
  if (!enabled_commands(state, cmd.at).contains(cmd.kind)) {
    return reject(state, cmd.kind, RejectReason::NotEnabled, cmd.at);
  }

  Transition t{state, {}, true};
  SessionState& s = t.state;
  Emitter out(t);
  const Instant& at = cmd.at;

  switch (cmd.kind) {
    case CommandKind::StartSession:
      start_session(t, out, at);
      break;
    case CommandKind::StartCompression:
      s.active_countdown = start_countdown(at, s.config.compression_duration, s.config.warning_threshold);
      out.emit(EventKind::CompressionStarted, at);
      break;
    case CommandKind::AnalyzeRhythm:
      s.phase = Phase::RhythmSelection;
      out.emit(EventKind::RhythmSelectionOpened, at);
      break;
    case CommandKind::SelectAsystolePea:
      s.phase = Phase::AsystolePea;
      out.emit(EventKind::RhythmSelected, at, payload::RhythmChoice{Rhythm::AsystolePea});
      break;
    case CommandKind::SelectVfVt:
      s.phase = Phase::VfVt;
      out.emit(EventKind::RhythmSelected, at, payload::RhythmChoice{Rhythm::VfVt});
      break;
    case CommandKind::Defibrillate:
      ++s.defib_count;
      out.emit(EventKind::DefibrillationDelivered, at, payload::Defibrillation{s.defib_count});
      break;
    case CommandKind::AdministerAdrenaline:
      s.adrenaline_doses.push_back({at, s.config.adrenaline_dose_mg});
      s.last_adrenaline_at = at;
      out.emit(EventKind::AdrenalineGiven, at, payload::Dose{s.config.adrenaline_dose_mg});
      break;
    case CommandKind::AdministerAmiodarone: {
      Milligrams mg =
          s.amiodarone_doses.empty() ? s.config.amiodarone_first_dose_mg : s.config.amiodarone_repeat_dose_mg;
      s.amiodarone_doses.push_back({at, mg, s.defib_count});
      s.last_amiodarone_defib_count = s.defib_count;
      out.emit(EventKind::AmiodaroneGiven, at, payload::Dose{mg});
      break;
    }
    case CommandKind::ReturnToAnalysis:
      s.phase = Phase::Analysis;
      out.emit(EventKind::AnalysisOpened, at);
      break;
    case CommandKind::AddNote:
      s.notes.push_back({at, cmd.note_text});
      out.emit(EventKind::NoteAdded, at, payload::Note{cmd.note_text});
      break;
    case CommandKind::EndSession:
      s.phase = Phase::Ended;
      s.active_countdown.reset();
      out.emit(EventKind::SessionEnded, at);
      break;
    case CommandKind::Tick:
      run_countdown(t, out, at);
      break;
  }

  reevaluate_reminders(t, out, at);
  return t;
}

}  // namespace resus
