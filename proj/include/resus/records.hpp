#pragma once

// Session records: the append-only event log, its on-disk format, the
// documentation / notes / summary views, and replay verification.
//
// Session file layout (UTF-8, one JSON object per line, '\n' terminated):
//
//   {"schema_version":1,"session_id":"...","config":{...}}
//   {"seq":1,"monotonic_ns":0,"wall_utc":"2021-05-07T15:00:00Z","kind":"SessionStarted","payload":{}}
//   ...
//   {"checksum":"sha256:<hex digest of every preceding byte>"}
//
// Config durations are whole seconds, doses are decimal milligrams.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "resus/engine.hpp"

namespace resus {

inline constexpr int kSchemaVersion = 1;

struct EventLog {
  std::string session_id;
  DosingConfig config;
  std::vector<Event> events;
  int schema_version = kSchemaVersion;

  bool operator==(const EventLog&) const = default;
};

struct Summary {
  int defibrillation_count = 0;
  Milligrams adrenaline_total_mg;
  Milligrams cordarone_total_mg;
  Duration session_duration;
  bool ended = false;

  bool operator==(const Summary&) const = default;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class VerificationError : public std::runtime_error {
 public:
  VerificationError(std::uint64_t seq, const std::string& what);
  // First stored sequence number whose event the engine did not reproduce.
  std::uint64_t seq() const { return seq_; }

 private:
  std::uint64_t seq_;
};

// Throws IntegrityError unless `e` may follow the log's last event
// (seq exactly one higher, timestamp not earlier).
void check_appendable(const EventLog& log, const Event& e);
EventLog append(const EventLog& log, const Event& e);

Summary summarize(const EventLog& log);
// The same figures taken from engine state; the duration runs to the newest event.
Summary summarize(const SessionState& state);

// --- Rendering --------------------------------------------------------------

struct RenderOptions {
  bool verbose = false;
  // Fixed offset from UTC for timestamps; unset means the device timezone.
  std::optional<std::chrono::minutes> utc_offset;
};

struct DocumentationLine {
  std::string timestamp_text;  // YYYY-MM-DD HH:MM
  std::string description;

  // "<description> at <timestamp>"
  std::string text() const;
  bool operator==(const DocumentationLine&) const = default;
};

struct NoteLine {
  std::string timestamp_text;
  std::string text;
  bool operator==(const NoteLine&) const = default;
};

std::string format_minute(WallTime wall, const RenderOptions& options = {});

// True for events shown in the default documentation view.
bool is_procedure_event(EventKind kind);

std::vector<DocumentationLine> render_documentation(const EventLog& log, const RenderOptions& options = {});
std::vector<NoteLine> render_notes(const EventLog& log, const RenderOptions& options = {});
// "defibrillations: 5, adrenaline: 2mg, cordarone: 450mg"
std::string render_summary(const Summary& summary);

// --- Serialization ----------------------------------------------------------

std::string format_rfc3339(WallTime wall);
WallTime parse_rfc3339(std::string_view text);

nlohmann::ordered_json config_to_json(const DosingConfig& config);
// Starts from `base` and overrides the fields present in `j`. Unknown keys and
// malformed values raise ConfigError naming the field; the result is validated.
DosingConfig config_from_json(const nlohmann::json& j, const DosingConfig& base = {});

nlohmann::ordered_json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

std::string serialize_session(const EventLog& log);
EventLog parse_session(std::string_view bytes);

// Atomic: writes a temp file next to `destination`, syncs it, renames it.
void save_session(const EventLog& log, const std::filesystem::path& destination);
EventLog load_session(const std::filesystem::path& source);

// Write-ahead journal: header then one event per line, flushed on every
// append. Unlike a saved session it has no checksum record.
class JournalWriter {
 public:
  JournalWriter(const std::filesystem::path& path, const std::string& session_id, const DosingConfig& config);
  ~JournalWriter();
  JournalWriter(const JournalWriter&) = delete;
  JournalWriter& operator=(const JournalWriter&) = delete;

  void append(const Event& e);
  const std::filesystem::path& path() const { return path_; }

 private:
  void write_line(const std::string& line);

  std::filesystem::path path_;
  int fd_ = -1;
};

// Reads a journal, dropping a torn final line left by a crash.
EventLog recover_journal(const std::filesystem::path& path);

// --- Replay -----------------------------------------------------------------

// Re-derives the session by feeding the commands implied by the stored events
// through the engine and checks that the engine reproduces every stored event.
// Throws VerificationError at the first mismatch.
SessionState replay_verify(const EventLog& log);

}  // namespace resus
