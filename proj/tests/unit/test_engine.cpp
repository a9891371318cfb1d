#include <doctest.h>

#include <random>
#include <set>

#include "resus/engine.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace resus;
using namespace resus::literals;

namespace {

// Drives a session with commands stamped in seconds from the start.
struct Driver {
  explicit Driver(DosingConfig config = {}) {
    auto t = new_session(config, gen::at_nanos(0));
    state = t.state;
    events = t.events;
  }

  Transition send(CommandKind kind, double at_s, std::string text = {}) {
    auto t = apply(state, Command{kind, gen::at_seconds(at_s), std::move(text)});
    state = t.state;
    events.insert(events.end(), t.events.begin(), t.events.end());
    return t;
  }

  // Ticks once per second in (from_s, to_s].
  void tick_through(int from_s, int to_s) {
    for (int s = from_s + 1; s <= to_s; ++s) send(CommandKind::Tick, s);
  }

  SessionState state;
  std::vector<Event> events;
};

std::vector<EventKind> kinds_of(const std::vector<Event>& events) {
  std::vector<EventKind> out;
  for (const auto& e : events) out.push_back(e.kind);
  return out;
}

std::set<std::string> names(const CommandSet& set) {
  std::set<std::string> out;
  for (auto k : set.kinds()) out.emplace(to_string(k));
  return out;
}

oracle::ProtocolView view_of(const SessionState& s, const Instant& now) {
  oracle::ProtocolView v;
  v.phase = std::string(to_string(s.phase));
  v.defib_count = s.defib_count;
  v.countdown_active = s.active_countdown.has_value();
  v.adrenaline_interval_elapsed =
      s.adrenaline_doses.empty() ||
      now.monotonic_nanos - s.adrenaline_doses.back().at.monotonic_nanos >= s.config.adrenaline_interval.nanos();
  v.amiodarone_given_at_current_count =
      !s.amiodarone_doses.empty() && s.amiodarone_doses.back().defib_count_at_dose == s.defib_count;
  v.vfvt_min_defibs = s.config.vfvt_adrenaline_min_defibs;
  return v;
}

const payload::Rejection& rejection_of(const Transition& t) {
  REQUIRE(t.events.size() == 1);
  REQUIRE(t.events[0].kind == EventKind::CommandRejected);
  return std::get<payload::Rejection>(t.events[0].payload);
}

}  // namespace

TEST_CASE("names round-trip") {
  for (std::size_t i = 0; i < kCommandKindCount; ++i) {
    auto k = static_cast<CommandKind>(i);
    CHECK(parse_command_kind(to_string(k)) == k);
  }
  for (int i = 0; i < 16; ++i) {
    auto k = static_cast<EventKind>(i);
    CHECK(parse_event_kind(to_string(k)) == k);
  }
  for (int i = 0; i < 6; ++i) CHECK(parse_phase(to_string(static_cast<Phase>(i))) == static_cast<Phase>(i));
  CHECK(parse_reject_reason("non-monotonic-time") == RejectReason::NonMonotonicTime);
  CHECK(parse_rhythm("VfVt") == Rhythm::VfVt);
  CHECK_FALSE(parse_command_kind("Nope").has_value());
}

TEST_CASE("config validation names each bad field") {
  DosingConfig c;
  CHECK(config_violations(c).empty());
  c.adrenaline_interval = Duration{};
  c.warning_threshold = 200_s;
  c.amiodarone_repeat_dose_mg = Milligrams{};
  auto bad = config_violations(c);
  CHECK(bad == std::vector<std::string>{"adrenaline_interval", "amiodarone_repeat_dose_mg", "warning_threshold"});
  CHECK_THROWS_AS(new_session(c, gen::at_nanos(0)), ConfigError);

  DosingConfig frac;
  frac.compression_duration = 120500_ms;
  CHECK(config_violations(frac) == std::vector<std::string>{"compression_duration"});
}

TEST_CASE("a new session opens analysis") {
  Driver d;
  CHECK(d.state.phase == Phase::Analysis);
  CHECK(kinds_of(d.events) == std::vector{EventKind::SessionStarted, EventKind::AnalysisOpened});
  CHECK(d.events[0].seq == 1);
  CHECK(d.events[1].seq == 2);
  CHECK(names(enabled_commands(d.state, gen::at_nanos(0))) ==
        std::set<std::string>{"StartCompression", "AnalyzeRhythm", "AddNote", "Tick"});
}

TEST_CASE("defibrillation is not offered in analysis") {
  Driver d;
  auto t = d.send(CommandKind::Defibrillate, 1);
  CHECK_FALSE(t.accepted);
  CHECK(rejection_of(t).reason == RejectReason::NotEnabled);
  CHECK(rejection_of(t).command == CommandKind::Defibrillate);
  CHECK(d.state.defib_count == 0);
}

TEST_CASE("VF/VT: third shock makes adrenaline and amiodarone due") {
  Driver d;
  d.send(CommandKind::AnalyzeRhythm, 1);
  d.send(CommandKind::SelectVfVt, 2);
  CHECK(names(enabled_commands(d.state, gen::at_seconds(2))) ==
        std::set<std::string>{"Defibrillate", "StartCompression", "ReturnToAnalysis", "AddNote", "Tick"});
  d.send(CommandKind::Defibrillate, 3);
  d.send(CommandKind::Defibrillate, 4);
  auto t = d.send(CommandKind::Defibrillate, 5);
  CHECK(kinds_of(t.events) == std::vector{EventKind::DefibrillationDelivered, EventKind::AdrenalineDue,
                                          EventKind::AmiodaroneDue});
  CHECK(std::get<payload::Defibrillation>(t.events[0].payload).ordinal == 3);
  auto enabled = enabled_commands(d.state, gen::at_seconds(5));
  CHECK(enabled.contains(CommandKind::AdministerAdrenaline));
  CHECK(enabled.contains(CommandKind::AdministerAmiodarone));

  auto amio = d.send(CommandKind::AdministerAmiodarone, 6);
  CHECK(std::get<payload::Dose>(amio.events[0].payload).mg == Milligrams::whole(300));
  CHECK_FALSE(amiodarone_due(d.state));
  d.send(CommandKind::Defibrillate, 7);
  CHECK_FALSE(amiodarone_due(d.state));
  d.send(CommandKind::Defibrillate, 8);
  CHECK(amiodarone_due(d.state));
  auto second = d.send(CommandKind::AdministerAmiodarone, 9);
  CHECK(std::get<payload::Dose>(second.events[0].payload).mg == Milligrams::whole(150));
  CHECK(amiodarone_total(d.state) == Milligrams::whole(450));
}

TEST_CASE("adrenaline interval boundary") {
  Driver d;
  d.send(CommandKind::AnalyzeRhythm, 0);
  d.send(CommandKind::SelectAsystolePea, 0);
  CHECK(adrenaline_due(d.state, gen::at_seconds(0)));
  CHECK(d.send(CommandKind::AdministerAdrenaline, 0).accepted);
  CHECK_FALSE(adrenaline_due(d.state, gen::at_seconds(239)));
  CHECK_FALSE(adrenaline_due(d.state, gen::at_nanos(240 * oracle::kSec - 1)));
  CHECK(adrenaline_due(d.state, gen::at_seconds(240)));
  CHECK_FALSE(d.send(CommandKind::AdministerAdrenaline, 239).accepted);
  CHECK(d.send(CommandKind::AdministerAdrenaline, 240).accepted);
  CHECK(adrenaline_total(d.state) == Milligrams::whole(2));
}

TEST_CASE("adrenaline spacing is global across rhythm changes") {
  Driver d;
  d.send(CommandKind::AnalyzeRhythm, 0);
  d.send(CommandKind::SelectVfVt, 1);
  for (int i = 0; i < 3; ++i) d.send(CommandKind::Defibrillate, 2 + i);
  CHECK(d.send(CommandKind::AdministerAdrenaline, 270).accepted);
  d.send(CommandKind::ReturnToAnalysis, 300);
  d.send(CommandKind::AnalyzeRhythm, 350);
  d.send(CommandKind::SelectAsystolePea, 360);
  CHECK_FALSE(adrenaline_due(d.state, gen::at_seconds(400)));
  CHECK_FALSE(enabled_commands(d.state, gen::at_seconds(400)).contains(CommandKind::AdministerAdrenaline));
  CHECK(adrenaline_due(d.state, gen::at_seconds(510)));
}

TEST_CASE("adrenaline in VF/VT waits for the minimum shock count") {
  DosingConfig c;
  c.vfvt_adrenaline_min_defibs = 2;
  Driver d(c);
  d.send(CommandKind::AnalyzeRhythm, 0);
  d.send(CommandKind::SelectVfVt, 1);
  d.send(CommandKind::Defibrillate, 2);
  CHECK_FALSE(enabled_commands(d.state, gen::at_seconds(2)).contains(CommandKind::AdministerAdrenaline));
  auto t = d.send(CommandKind::Defibrillate, 3);
  CHECK(kinds_of(t.events) == std::vector{EventKind::DefibrillationDelivered, EventKind::AdrenalineDue});
}

TEST_CASE("adrenaline reminder fires on the edge only") {
  Driver d;
  d.send(CommandKind::AnalyzeRhythm, 0);
  auto sel = d.send(CommandKind::SelectAsystolePea, 1);
  CHECK(kinds_of(sel.events) == std::vector{EventKind::RhythmSelected, EventKind::AdrenalineDue});
  CHECK(d.send(CommandKind::Tick, 2).events.empty());
  d.send(CommandKind::AdministerAdrenaline, 3);
  d.tick_through(3, 242);
  auto due = std::count_if(d.events.begin(), d.events.end(),
                           [](const Event& e) { return e.kind == EventKind::AdrenalineDue; });
  CHECK(due == 1);
  auto t = d.send(CommandKind::Tick, 243);
  CHECK(kinds_of(t.events) == std::vector{EventKind::AdrenalineDue});
  CHECK(d.send(CommandKind::Tick, 244).events.empty());
}

TEST_CASE("compression countdown runs through ticks") {
  Driver d;
  CHECK(d.send(CommandKind::StartCompression, 0).accepted);
  CHECK_FALSE(enabled_commands(d.state, gen::at_seconds(1)).contains(CommandKind::StartCompression));
  auto again = d.send(CommandKind::StartCompression, 1);
  CHECK(rejection_of(again).reason == RejectReason::NotEnabled);

  d.tick_through(1, 120);
  std::vector<EventKind> alarms;
  std::vector<int> blinks;
  for (const auto& e : d.events) {
    if (e.kind == EventKind::CompressionWarning || e.kind == EventKind::CompressionBlink ||
        e.kind == EventKind::CompressionFinished) {
      alarms.push_back(e.kind);
    }
    if (e.kind == EventKind::CompressionBlink) blinks.push_back(std::get<payload::Blink>(e.payload).second_mark);
  }
  CHECK(std::count(alarms.begin(), alarms.end(), EventKind::CompressionWarning) == 1);
  CHECK(blinks == std::vector{10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0});
  CHECK(alarms.back() == EventKind::CompressionFinished);
  CHECK_FALSE(d.state.active_countdown.has_value());
  CHECK(enabled_commands(d.state, gen::at_seconds(120)).contains(CommandKind::StartCompression));
}

TEST_CASE("empty tick is a no-op") {
  Driver d;
  auto before = d.state;
  auto t = d.send(CommandKind::Tick, 50);
  CHECK(t.accepted);
  CHECK(t.events.empty());
  CHECK(d.state == before);
}

TEST_CASE("elapsed time") {
  Driver d;
  CHECK(elapsed(d.state, gen::at_seconds(75)) == 75_s);
  CHECK(elapsed(d.state, gen::at_nanos(0)) == Duration{});
  auto later = new_session(DosingConfig{}, gen::at_seconds(10)).state;
  CHECK_THROWS_AS(elapsed(later, gen::at_seconds(5)), std::invalid_argument);
}

TEST_CASE("commands stamped before the last event are rejected") {
  Driver d;
  d.send(CommandKind::AddNote, 10, "first");
  auto t = d.send(CommandKind::AddNote, 9, "late");
  CHECK(rejection_of(t).reason == RejectReason::NonMonotonicTime);
  CHECK(t.events[0].at.monotonic_nanos == 10 * oracle::kSec);
  CHECK(d.state.notes.size() == 1);
}

TEST_CASE("ended is terminal") {
  Driver d;
  d.send(CommandKind::AnalyzeRhythm, 1);
  auto end = d.send(CommandKind::EndSession, 2);
  CHECK(kinds_of(end.events) == std::vector{EventKind::SessionEnded});
  CHECK(enabled_commands(d.state, gen::at_seconds(3)).empty());
  for (std::size_t i = 0; i < kCommandKindCount; ++i) {
    auto t = d.send(static_cast<CommandKind>(i), 3);
    CHECK(rejection_of(t).reason == RejectReason::TerminalPhase);
  }
  auto early = d.send(CommandKind::AddNote, 1);
  CHECK(rejection_of(early).reason == RejectReason::TerminalPhase);
  CHECK(early.events[0].at.monotonic_nanos == 3 * oracle::kSec);
}

TEST_CASE("end session clears the countdown") {
  Driver d;
  d.send(CommandKind::StartCompression, 0);
  d.send(CommandKind::AnalyzeRhythm, 1);
  d.send(CommandKind::EndSession, 2);
  CHECK_FALSE(d.state.active_countdown.has_value());
}

TEST_CASE("payload shapes") {
  CHECK(payload_matches(EventKind::CompressionBlink, payload::Blink{3}));
  CHECK_FALSE(payload_matches(EventKind::CompressionBlink, payload::None{}));
  CHECK(payload_matches(EventKind::SessionEnded, payload::None{}));
  CHECK_FALSE(payload_matches(EventKind::NoteAdded, payload::Dose{}));
}

// Properties over random command streams.

TEST_CASE("property: folding is deterministic") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto cmds = gen::random_commands(rng, DosingConfig{}, {.length = 150, .allow_backwards = true});
    auto a = gen::fold(DosingConfig{}, cmds);
    auto b = gen::fold(DosingConfig{}, cmds);
    REQUIRE(a.state == b.state);
    REQUIRE(a.events == b.events);
  }
}

TEST_CASE("property: acceptance matches the enabled set and the oracle table") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto cmds = gen::random_commands(rng, DosingConfig{}, {.length = 200, .allow_backwards = true});
    auto state = new_session(DosingConfig{}, gen::at_nanos(0)).state;
    for (const auto& cmd : cmds) {
      auto enabled = enabled_commands(state, cmd.at);
      REQUIRE(names(enabled) == oracle::enabled(view_of(state, cmd.at)));
      bool in_order = !state.last_event_at || cmd.at.monotonic_nanos >= state.last_event_at->monotonic_nanos;
      auto t = apply(state, cmd);
      REQUIRE(t.accepted == (in_order && enabled.contains(cmd.kind)));
      state = t.state;
    }
  }
}

TEST_CASE("property: a rejected command only moves the event cursor") {
  std::mt19937_64 rng(13);
  int rejections = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto cmds = gen::random_commands(rng, DosingConfig{}, {.length = 200, .allow_backwards = true});
    auto state = new_session(DosingConfig{}, gen::at_nanos(0)).state;
    for (const auto& cmd : cmds) {
      auto t = apply(state, cmd);
      if (!t.accepted) {
        ++rejections;
        REQUIRE(t.events.size() == 1);
        REQUIRE(t.events[0].kind == EventKind::CommandRejected);
        REQUIRE(t.events[0].seq == state.event_seq);
        REQUIRE(t.state.event_seq == state.event_seq + 1);
        REQUIRE(gen::without_cursor(t.state) == gen::without_cursor(state));
      }
      state = t.state;
    }
  }
  CHECK(rejections > 1000);
}

TEST_CASE("property: event stream is well formed") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto cmds = gen::random_commands(rng, DosingConfig{}, {.length = 200, .allow_backwards = true});
    auto f = gen::fold(DosingConfig{}, cmds);
    for (std::size_t i = 0; i < f.events.size(); ++i) {
      REQUIRE(f.events[i].seq == i + 1);
      REQUIRE(payload_matches(f.events[i].kind, f.events[i].payload));
      if (i > 0) REQUIRE(f.events[i].at.monotonic_nanos >= f.events[i - 1].at.monotonic_nanos);
    }
  }
}

TEST_CASE("property: adrenaline doses are spaced by the interval") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    DosingConfig c;
    c.adrenaline_interval = Duration::from_seconds(std::uniform_int_distribution<int>(30, 400)(rng));
    auto f = gen::fold(c, gen::random_commands(rng, c, {.length = 200}));
    const auto& doses = f.state.adrenaline_doses;
    for (std::size_t i = 1; i < doses.size(); ++i) {
      REQUIRE(doses[i].at.monotonic_nanos - doses[i - 1].at.monotonic_nanos >= c.adrenaline_interval.nanos());
    }
  }
}

TEST_CASE("property: amiodarone only at odd shock counts from three") {
  std::mt19937_64 rng(23);
  int dosed_sessions = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto f = gen::fold(DosingConfig{}, gen::random_commands(rng, DosingConfig{}, {.length = 250}));
    const auto& doses = f.state.amiodarone_doses;
    if (!doses.empty()) ++dosed_sessions;
    std::vector<int> counts;
    for (std::size_t i = 0; i < doses.size(); ++i) {
      int n = doses[i].defib_count_at_dose;
      REQUIRE(n >= 3);
      REQUIRE(n % 2 == 1);
      if (i > 0) REQUIRE(n > doses[i - 1].defib_count_at_dose);
      REQUIRE(doses[i].mg == (i == 0 ? Milligrams::whole(300) : Milligrams::whole(150)));
      counts.push_back(n);
    }
    REQUIRE(amiodarone_total(f.state).micrograms() == oracle::amiodarone_total_ug(counts, 300'000, 150'000));
  }
  CHECK(dosed_sessions > 0);
}
