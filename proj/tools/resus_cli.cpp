// resus: run scripted sessions, verify and render session files, serve live sessions.
//
// Exit codes: 0 ok, 1 verification or rejection failure, 2 parse or I/O error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "resus/http_server.hpp"
#include "resus/records.hpp"
#include "resus/scenario.hpp"
#include "resus/service.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInputError = 2;

std::filesystem::path default_output(const std::filesystem::path& scenario) {
  auto out = scenario;
  out.replace_extension(".session");
  return out;
}

int run_command(const std::string& scenario_path, const std::string& out_path) {
  auto scenario = resus::load_scenario(scenario_path);
  auto report = resus::run_scenario(scenario);
  std::filesystem::path out = out_path.empty() ? default_output(scenario_path) : std::filesystem::path(out_path);
  resus::save_session(report.log, out);

  std::cout << resus::render_summary(report.summary) << "\n";
  for (const auto& o : report.outcomes) {
    if (o.accepted && o.expected) continue;
    const char* label = o.accepted ? "UNEXPECTED acceptance" : (o.expected ? "rejected (expected)" : "UNEXPECTED rejection");
    std::cout << label << ": step " << o.step << " " << resus::to_string(o.kind);
    if (o.reason) std::cout << " (" << resus::to_string(*o.reason) << ")";
    std::cout << "\n";
  }
  std::cout << "session written to " << out.string() << "\n";
  return report.unexpected().empty() ? kOk : kFailed;
}

int replay_command(const std::string& path) {
  auto log = resus::load_session(path);
  try {
    auto state = resus::replay_verify(log);
    std::cout << "verified " << log.events.size() << " events, final phase " << resus::to_string(state.phase)
              << "\n";
    return kOk;
  } catch (const resus::VerificationError& ex) {
    std::cout << "divergence at seq " << ex.seq() << ": " << ex.what() << "\n";
    return kFailed;
  }
}

int show_command(const std::string& path, const std::string& view, bool verbose, bool utc) {
  auto log = resus::load_session(path);
  resus::RenderOptions options;
  options.verbose = verbose;
  if (utc) options.utc_offset = std::chrono::minutes{0};

  if (view == "summary") {
    std::cout << resus::render_summary(resus::summarize(log)) << "\n";
  } else if (view == "documentation") {
    for (const auto& line : resus::render_documentation(log, options)) std::cout << line.text() << "\n";
  } else {
    for (const auto& note : resus::render_notes(log, options)) std::cout << note.timestamp_text << " " << note.text << "\n";
  }
  return kOk;
}

resus::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve_command(const std::string& host, int port, const std::string& config_path, const std::string& journal_dir) {
  resus::SessionService::Options options;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw resus::IoError(config_path, "cannot open config");
    options.default_config = resus::config_from_json(nlohmann::json::parse(in));
  }
  if (!journal_dir.empty()) options.journal_dir = journal_dir;

  resus::SessionService service(std::move(options));
  resus::HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on " << host << ":" << port << "\n";
  server.run(host, port);
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resuscitation protocol engine: scenarios, session files, live service"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  auto* run = app.add_subcommand("run", "Run a scenario file against a virtual clock");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_path, "Session file to write (default: <scenario>.session)");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Verify a session file by replaying it through the engine");
  replay->add_option("session", replay_path, "Session file")->required();

  std::string show_path, view = "summary";
  bool verbose = false, utc = false;
  auto* show = app.add_subcommand("show", "Render a session file");
  show->add_option("session", show_path, "Session file")->required();
  show->add_option("--view", view, "summary | documentation | notes")
      ->capture_default_str()
      ->check(CLI::IsMember({"summary", "documentation", "notes"}));
  show->add_flag("--verbose", verbose, "Include reminders, alarms and rejections in the documentation view");
  show->add_flag("--utc", utc, "Render timestamps in UTC instead of the local timezone");

  std::string host = "127.0.0.1", config_path, journal_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the session service over HTTP");
  serve->add_option("--port", port, "Port to listen on");
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--config", config_path, "JSON file with default dosing config overrides");
  serve->add_option("--journal-dir", journal_dir, "Directory for write-ahead session journals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*run) return run_command(scenario_path, out_path);
    if (*replay) return replay_command(replay_path);
    if (*show) return show_command(show_path, view, verbose, utc);
    if (*serve) return serve_command(host, port, config_path, journal_dir);
  } catch (const resus::IntegrityError& ex) {
    std::cerr << "integrity error: " << ex.what() << "\n";
    return kFailed;
  } catch (const resus::ParseError& ex) {
    std::cerr << "parse error: " << ex.what() << "\n";
    return kInputError;
  } catch (const resus::ScenarioError& ex) {
    std::cerr << "scenario error: " << ex.what() << "\n";
    return kInputError;
  } catch (const resus::IoError& ex) {
    std::cerr << "i/o error: " << ex.what() << "\n";
    return kInputError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kInputError;
  }
  return kOk;
}
