#pragma once

// Scripted sessions. A scenario file is JSON:
//
//   {
//     "name": "s1_vfvt_five_shocks",
//     "wall_start": "2021-05-07T15:00:00Z",        (optional)
//     "config": {"adrenaline_interval": 240},       (optional overrides)
//     "steps": [
//       {"at_s": 0, "command": "AnalyzeRhythm"},
//       {"at_s": 4, "command": "AddNote", "text": "IV access"},
//       {"at_s": 9, "command": "Defibrillate", "expect": "rejected"}
//     ]
//   }
//
// at_s is the offset from session start in seconds (fractions allowed).
// Steps run against a virtual clock; the runner injects a Tick at every
// whole second between steps so alarms and reminders land in the log.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "resus/engine.hpp"
#include "resus/records.hpp"

namespace resus {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t step, const std::string& what);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct ScenarioStep {
  Duration offset;
  CommandKind kind = CommandKind::Tick;
  std::string text;
  bool expect_rejected = false;
};

struct Scenario {
  std::string name;
  WallTime wall_start = default_virtual_wall_origin();
  DosingConfig config;
  std::vector<ScenarioStep> steps;
};

// Throws ParseError (JSON syntax, with line) or ScenarioError (with step index).
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct StepOutcome {
  std::size_t step = 0;
  CommandKind kind = CommandKind::Tick;
  bool accepted = false;
  std::optional<RejectReason> reason;
  bool expected = true;
};

struct ScenarioReport {
  EventLog log;
  SessionState final_state;
  Summary summary;
  std::vector<StepOutcome> outcomes;

  std::vector<StepOutcome> unexpected() const;
  std::vector<StepOutcome> rejections() const;
};

ScenarioReport run_scenario(const Scenario& scenario);

}  // namespace resus
