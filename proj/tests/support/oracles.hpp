#pragma once

// Reference models used by the tests. Nothing here calls into the engine's
// rule code: each oracle restates one rule directly so the tests compare two
// independent derivations.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

constexpr std::int64_t kSec = 1'000'000'000;

// (kind, second_mark) with kind in {"warn", "blink", "vibrate", "finished"}.
using Signal = std::pair<std::string, int>;

// Signals of one full countdown: warning once, a blink per whole second
// from `warning_s` down to 0, then vibrate and finished.
inline std::vector<Signal> full_countdown_signals(int warning_s) {
  std::vector<Signal> out{{"warn", 0}};
  for (int s = warning_s; s >= 0; --s) out.emplace_back("blink", s);
  out.emplace_back("vibrate", 0);
  out.emplace_back("finished", 0);
  return out;
}

// Brute force over an explicit schedule: at each tick, every stage whose
// trigger time lies in (previous tick, this tick] fires. Trigger times are
// computed from the countdown length directly: blink s fires at duration - s,
// the warning with blink `warning_s`, vibrate/finished at duration.
inline std::vector<Signal> signals_for_schedule(std::int64_t duration_ns, int warning_s,
                                                const std::vector<std::int64_t>& ticks_ns) {
  std::vector<std::pair<std::int64_t, Signal>> stages;
  stages.push_back({duration_ns - warning_s * kSec, {"warn", 0}});
  for (int s = warning_s; s >= 0; --s) stages.push_back({duration_ns - s * kSec, {"blink", s}});
  stages.push_back({duration_ns, {"vibrate", 0}});
  stages.push_back({duration_ns, {"finished", 0}});

  std::vector<Signal> out;
  std::size_t next = 0;
  for (std::int64_t t : ticks_ns) {
    while (next < stages.size() && stages[next].first <= t) out.push_back(stages[next++].second);
  }
  return out;
}

// Enabled command names for a compact description of the session, written
// straight from the protocol table.
struct ProtocolView {
  std::string phase;  // Idle, Analysis, RhythmSelection, AsystolePea, VfVt, Ended
  int defib_count = 0;
  bool countdown_active = false;
  bool adrenaline_interval_elapsed = true;  // or never dosed
  bool amiodarone_given_at_current_count = false;
  int vfvt_min_defibs = 3;
};

inline std::set<std::string> enabled(const ProtocolView& v) {
  std::set<std::string> s;
  const bool amio = v.defib_count >= 3 && v.defib_count % 2 == 1 && !v.amiodarone_given_at_current_count;
  if (v.phase == "Idle") {
    s = {"StartSession"};
  } else if (v.phase == "Analysis") {
    s = {"AnalyzeRhythm", "AddNote", "Tick"};
    if (!v.countdown_active) s.insert("StartCompression");
  } else if (v.phase == "RhythmSelection") {
    s = {"SelectAsystolePea", "SelectVfVt", "EndSession", "AddNote", "Tick"};
  } else if (v.phase == "AsystolePea") {
    s = {"ReturnToAnalysis", "AddNote", "Tick"};
    if (!v.countdown_active) s.insert("StartCompression");
    if (v.adrenaline_interval_elapsed) s.insert("AdministerAdrenaline");
  } else if (v.phase == "VfVt") {
    s = {"Defibrillate", "ReturnToAnalysis", "AddNote", "Tick"};
    if (!v.countdown_active) s.insert("StartCompression");
    if (v.adrenaline_interval_elapsed && v.defib_count >= v.vfvt_min_defibs) s.insert("AdministerAdrenaline");
    if (amio) s.insert("AdministerAmiodarone");
  }
  return s;
}

// Adrenaline given at the first whole second of each window where it is
// allowed, with consecutive doses at least `interval_s` apart.
inline std::vector<int> adrenaline_dose_times(const std::vector<std::pair<int, int>>& windows, int horizon_s,
                                              int interval_s) {
  std::vector<int> doses;
  for (int t = 0; t <= horizon_s; ++t) {
    bool open = std::any_of(windows.begin(), windows.end(), [&](auto w) { return t >= w.first && t < w.second; });
    if (!open) continue;
    if (doses.empty() || t - doses.back() >= interval_s) doses.push_back(t);
  }
  return doses;
}

// Amiodarone: first dose then repeats; due at defibrillation 3, 5, 7, ...
// Returns total micrograms for doses given at the listed defibrillation counts.
inline std::int64_t amiodarone_total_ug(const std::vector<int>& given_at_counts, std::int64_t first_ug,
                                        std::int64_t repeat_ug) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < given_at_counts.size(); ++i) total += i == 0 ? first_ug : repeat_ug;
  return total;
}

}  // namespace oracle
