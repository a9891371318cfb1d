#include <pybind11/chrono.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "resus/alarms.hpp"
#include "resus/engine.hpp"
#include "resus/records.hpp"
#include "resus/scenario.hpp"

namespace py = pybind11;
using namespace resus;

namespace {

Instant at_seconds(double seconds) {
  auto nanos = static_cast<std::int64_t>(std::llround(seconds * 1e9));
  return Instant{nanos, default_virtual_wall_origin() + std::chrono::nanoseconds{nanos}};
}

double to_seconds(Duration d) { return static_cast<double>(d.nanos()) / 1e9; }

std::vector<std::string> kind_names(const CommandSet& set) {
  std::vector<std::string> out;
  for (CommandKind k : set.kinds()) out.emplace_back(to_string(k));
  return out;
}

CommandKind command_kind(const std::string& name) {
  auto k = parse_command_kind(name);
  if (!k) throw py::value_error("unknown command kind: " + name);
  return *k;
}

py::dict event_dict(const Event& e) {
  py::module_ json = py::module_::import("json");
  return json.attr("loads")(event_to_json(e).dump());
}

py::list events_list(const std::vector<Event>& events) {
  py::list out;
  for (const Event& e : events) out.append(event_dict(e));
  return out;
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["defibrillation_count"] = s.defibrillation_count;
  d["adrenaline_total_mg"] = s.adrenaline_total_mg.as_double();
  d["cordarone_total_mg"] = s.cordarone_total_mg.as_double();
  d["session_duration_s"] = to_seconds(s.session_duration);
  d["ended"] = s.ended;
  return d;
}

DosingConfig config_from_kwargs(const py::dict& overrides) {
  py::module_ json = py::module_::import("json");
  std::string text = py::str(json.attr("dumps")(overrides));
  return config_from_json(nlohmann::json::parse(text));
}

// A session driven from Python with explicit timestamps in seconds.
class PySession {
 public:
  explicit PySession(const py::dict& config, double start_s) {
    Transition t = new_session(config_from_kwargs(config), at_seconds(start_s));
    state_ = std::move(t.state);
    log_.session_id = "python";
    log_.config = state_.config;
    record(t.events);
  }

  py::dict apply_command(const std::string& kind, double at_s, const std::string& text) {
    Transition t = apply(state_, Command{command_kind(kind), at_seconds(at_s), text});
    state_ = std::move(t.state);
    record(t.events);
    py::dict d;
    d["accepted"] = t.accepted;
    d["events"] = events_list(t.events);
    return d;
  }

  std::vector<std::string> enabled(double at_s) const { return kind_names(enabled_commands(state_, at_seconds(at_s))); }
  bool adrenaline_is_due(double at_s) const { return adrenaline_due(state_, at_seconds(at_s)); }
  bool amiodarone_is_due() const { return amiodarone_due(state_); }
  double elapsed_s(double at_s) const { return to_seconds(elapsed(state_, at_seconds(at_s))); }
  std::string phase() const { return std::string(to_string(state_.phase)); }
  int defib_count() const { return state_.defib_count; }
  py::dict summary() const { return summary_dict(summarize(log_)); }
  py::list events() const { return events_list(log_.events); }
  std::string serialize() const { return serialize_session(log_); }
  const EventLog& log() const { return log_; }

 private:
  void record(const std::vector<Event>& events) {
    for (const Event& e : events) log_ = append(log_, e);
  }

  SessionState state_;
  EventLog log_;
};

}  // namespace

PYBIND11_MODULE(_resus, m) {
  m.doc() = "Resuscitation protocol engine: state machine, countdown alarms, session records.";

  py::register_exception<IntegrityError>(m, "IntegrityError");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<VerificationError>(m, "VerificationError");
  py::register_exception<IoError>(m, "IoError");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<EventLog>(m, "EventLog")
      .def_readonly("session_id", &EventLog::session_id)
      .def_property_readonly("events", [](const EventLog& l) { return events_list(l.events); })
      .def("__len__", [](const EventLog& l) { return l.events.size(); })
      .def("__eq__", [](const EventLog& a, const EventLog& b) { return a == b; });

  py::class_<PySession>(m, "Session")
      .def(py::init<const py::dict&, double>(), py::arg("config") = py::dict(), py::arg("start_s") = 0.0)
      .def("apply", &PySession::apply_command, py::arg("kind"), py::arg("at_s"), py::arg("text") = "")
      .def("enabled_commands", &PySession::enabled, py::arg("at_s"))
      .def("adrenaline_due", &PySession::adrenaline_is_due, py::arg("at_s"))
      .def("amiodarone_due", &PySession::amiodarone_is_due)
      .def("elapsed", &PySession::elapsed_s, py::arg("at_s"))
      .def_property_readonly("phase", &PySession::phase)
      .def_property_readonly("defib_count", &PySession::defib_count)
      .def("summary", &PySession::summary)
      .def("events", &PySession::events)
      .def("serialize", &PySession::serialize)
      .def_property_readonly("log", &PySession::log);

  m.def(
      "countdown_signals",
      [](double duration_s, double warning_s, const std::vector<double>& tick_times) {
        Countdown cd = start_countdown(at_seconds(0), Duration::from_nanos(std::llround(duration_s * 1e9)),
                                       Duration::from_nanos(std::llround(warning_s * 1e9)));
        py::list out;
        for (double t : tick_times) {
          TickResult r = tick(cd, at_seconds(t));
          cd = r.countdown;
          for (const auto& sig : r.signals) {
            static constexpr const char* kNames[] = {"WarningSound", "Blink", "Vibrate", "Finished"};
            out.append(py::make_tuple(kNames[static_cast<int>(sig.kind)], sig.second_mark, t));
          }
        }
        return out;
      },
      py::arg("duration_s") = 120.0, py::arg("warning_s") = 10.0, py::arg("tick_times"),
      "Signals emitted by a countdown started at t=0 and ticked at the given times.");

  m.def("summarize", [](const EventLog& log) { return summary_dict(summarize(log)); });
  m.def(
      "render_documentation",
      [](const EventLog& log, bool verbose, bool utc) {
        RenderOptions o;
        o.verbose = verbose;
        if (utc) o.utc_offset = std::chrono::minutes{0};
        std::vector<std::string> out;
        for (const auto& line : render_documentation(log, o)) out.push_back(line.text());
        return out;
      },
      py::arg("log"), py::arg("verbose") = false, py::arg("utc") = true);
  m.def(
      "render_notes",
      [](const EventLog& log, bool utc) {
        RenderOptions o;
        if (utc) o.utc_offset = std::chrono::minutes{0};
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& n : render_notes(log, o)) out.emplace_back(n.timestamp_text, n.text);
        return out;
      },
      py::arg("log"), py::arg("utc") = true);
  m.def("save_session", &save_session, py::arg("log"), py::arg("path"));
  m.def("load_session", &load_session, py::arg("path"));
  m.def("parse_session", [](const py::bytes& b) { return parse_session(std::string(b)); });
  m.def("serialize_session", [](const EventLog& log) { return py::bytes(serialize_session(log)); });
  m.def("replay_verify", [](const EventLog& log) { return std::string(to_string(replay_verify(log).phase)); },
        "Replays the log through the engine; returns the final phase or raises VerificationError.");
  m.def(
      "run_scenario",
      [](const std::filesystem::path& path) {
        ScenarioReport r = run_scenario(load_scenario(path));
        py::dict d;
        d["summary"] = summary_dict(r.summary);
        d["summary_text"] = render_summary(r.summary);
        d["unexpected"] = r.unexpected().size();
        d["log"] = r.log;
        return d;
      },
      py::arg("path"));
}
