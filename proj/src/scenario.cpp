#include "resus/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace resus {

using nlohmann::json;

ScenarioError::ScenarioError(std::size_t step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

namespace {

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

ScenarioStep parse_step(const json& j, std::size_t index) {
  if (!j.is_object()) throw ScenarioError(index, "step must be an object");
  ScenarioStep step;
  if (!j.contains("at_s") || !j["at_s"].is_number()) throw ScenarioError(index, "missing numeric at_s");
  double at = j["at_s"].get<double>();
  if (!std::isfinite(at) || at < 0) throw ScenarioError(index, "at_s must be a non-negative number");
  step.offset = Duration::from_nanos(std::llround(at * 1e9));

  if (!j.contains("command") || !j["command"].is_string()) throw ScenarioError(index, "missing command");
  auto name = j["command"].get<std::string>();
  auto kind = parse_command_kind(name);
  if (!kind) throw ScenarioError(index, "unknown command '" + name + "'");
  step.kind = *kind;

  if (j.contains("text")) {
    if (!j["text"].is_string()) throw ScenarioError(index, "text must be a string");
    step.text = j["text"].get<std::string>();
  }
  if (j.contains("expect")) {
    auto expect = j["expect"].is_string() ? j["expect"].get<std::string>() : std::string{};
    if (expect == "rejected") {
      step.expect_rejected = true;
    } else if (expect != "accepted") {
      throw ScenarioError(index, "expect must be \"accepted\" or \"rejected\"");
    }
  }
  return step;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ParseError(line_of_byte(text, ex.byte == 0 ? 0 : ex.byte - 1), ex.what());
  }
  if (!j.is_object()) throw ParseError(1, "scenario must be a JSON object");

  Scenario s;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ParseError(1, "name must be a string");
    s.name = j["name"].get<std::string>();
  }
  if (j.contains("wall_start")) {
    try {
      s.wall_start = parse_rfc3339(j["wall_start"].get<std::string>());
    } catch (const std::exception& ex) {
      throw ParseError(1, std::string("wall_start: ") + ex.what());
    }
  }
  if (j.contains("config")) {
    try {
      s.config = config_from_json(j["config"]);
    } catch (const ConfigError& ex) {
      throw ParseError(1, ex.what());
    }
  }
  if (!j.contains("steps") || !j["steps"].is_array()) throw ParseError(1, "missing steps array");

  Duration previous;
  for (std::size_t i = 0; i < j["steps"].size(); ++i) {
    ScenarioStep step = parse_step(j["steps"][i], i);
    if (step.offset < previous) throw ScenarioError(i, "at_s goes backwards");
    previous = step.offset;
    s.steps.push_back(std::move(step));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open scenario");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<StepOutcome> ScenarioReport::unexpected() const {
  std::vector<StepOutcome> out;
  std::copy_if(outcomes.begin(), outcomes.end(), std::back_inserter(out), [](const auto& o) { return !o.expected; });
  return out;
}

std::vector<StepOutcome> ScenarioReport::rejections() const {
  std::vector<StepOutcome> out;
  std::copy_if(outcomes.begin(), outcomes.end(), std::back_inserter(out), [](const auto& o) { return !o.accepted; });
  return out;
}

ScenarioReport run_scenario(const Scenario& scenario) {
  constexpr std::int64_t kSecond = 1'000'000'000;
  VirtualClock clock(scenario.wall_start);

  ScenarioReport report;
  report.log.session_id = "scenario-" + (scenario.name.empty() ? std::string("unnamed") : scenario.name);
  report.log.config = scenario.config;

  Transition t = new_session(scenario.config, clock.now());
  SessionState state = std::move(t.state);
  auto record = [&](const std::vector<Event>& events) {
    for (const Event& e : events) {
      check_appendable(report.log, e);
      report.log.events.push_back(e);
    }
  };
  record(t.events);

  std::int64_t next_tick = kSecond;
  for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
    const ScenarioStep& step = scenario.steps[i];
    for (; next_tick <= step.offset.nanos(); next_tick += kSecond) {
      if (state.phase == Phase::Ended) continue;
      Transition tick = apply(state, Command{CommandKind::Tick, clock.advance_to(Duration::from_nanos(next_tick)), {}});
      record(tick.events);
      state = std::move(tick.state);
    }

    Command cmd{step.kind, clock.advance_to(step.offset), step.text};
    Transition r = apply(state, cmd);
    record(r.events);
    state = std::move(r.state);

    StepOutcome outcome{i, step.kind, r.accepted, std::nullopt, r.accepted != step.expect_rejected};
    if (!r.accepted) outcome.reason = std::get<payload::Rejection>(r.events.front().payload).reason;
    report.outcomes.push_back(outcome);
  }

  report.summary = summarize(report.log);
  report.final_state = std::move(state);
  return report;
}

}  // namespace resus
