#include "resus/records.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace resus {

using nlohmann::json;
using nlohmann::ordered_json;

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

IoError::IoError(const std::filesystem::path& path, const std::string& what)
    : std::runtime_error(path.string() + ": " + what), path_(path) {}

VerificationError::VerificationError(std::uint64_t seq, const std::string& what)
    : std::runtime_error("replay diverged at seq " + std::to_string(seq) + ": " + what), seq_(seq) {}

// --- Log --------------------------------------------------------------------

void check_appendable(const EventLog& log, const Event& e) {
  std::uint64_t expected = log.events.empty() ? 1 : log.events.back().seq + 1;
  if (e.seq != expected) {
    throw IntegrityError("event seq " + std::to_string(e.seq) + " where " + std::to_string(expected) +
                         " was expected");
  }
  if (!log.events.empty() && e.at.monotonic_nanos < log.events.back().at.monotonic_nanos) {
    throw IntegrityError("event seq " + std::to_string(e.seq) + " is timestamped before its predecessor");
  }
  if (!payload_matches(e.kind, e.payload)) {
    throw IntegrityError("event seq " + std::to_string(e.seq) + " carries the wrong payload for " +
                         std::string(to_string(e.kind)));
  }
}

EventLog append(const EventLog& log, const Event& e) {
  check_appendable(log, e);
  EventLog next = log;
  next.events.push_back(e);
  return next;
}

Summary summarize(const EventLog& log) {
  Summary s;
  for (const Event& e : log.events) {
    switch (e.kind) {
      case EventKind::DefibrillationDelivered:
        ++s.defibrillation_count;
        break;
      case EventKind::AdrenalineGiven:
        s.adrenaline_total_mg += std::get<payload::Dose>(e.payload).mg;
        break;
      case EventKind::AmiodaroneGiven:
        s.cordarone_total_mg += std::get<payload::Dose>(e.payload).mg;
        break;
      case EventKind::SessionEnded:
        s.ended = true;
        break;
      default:
        break;
    }
  }
  if (!log.events.empty()) s.session_duration = elapsed_between(log.events.front().at, log.events.back().at);
  return s;
}

Summary summarize(const SessionState& state) {
  Summary s;
  s.defibrillation_count = state.defib_count;
  s.adrenaline_total_mg = adrenaline_total(state);
  s.cordarone_total_mg = amiodarone_total(state);
  if (state.last_event_at) s.session_duration = elapsed_between(state.session_start, *state.last_event_at);
  s.ended = state.phase == Phase::Ended;
  return s;
}

// --- Rendering --------------------------------------------------------------

namespace {

std::tm to_tm(std::time_t t, const RenderOptions& options) {
  std::tm tm{};
  if (options.utc_offset) {
    t += std::chrono::duration_cast<std::chrono::seconds>(*options.utc_offset).count();
    gmtime_r(&t, &tm);
  } else {
    localtime_r(&t, &tm);
  }
  return tm;
}

std::string rhythm_label(Rhythm r) { return r == Rhythm::AsystolePea ? "Asystole/PEA" : "VF/VT"; }

std::string describe(const Event& e) {
  switch (e.kind) {
    case EventKind::SessionStarted:
      return "CPR started";
    case EventKind::CompressionStarted:
      return "heart compression started";
    case EventKind::CompressionWarning:
      return "compression warning";
    case EventKind::CompressionBlink:
      return "compression " + std::to_string(std::get<payload::Blink>(e.payload).second_mark) + "s left";
    case EventKind::CompressionFinished:
      return "heart compression finished";
    case EventKind::AnalysisOpened:
      return "analysis";
    case EventKind::RhythmSelectionOpened:
      return "rhythm analysis";
    case EventKind::RhythmSelected:
      return "rhythm " + rhythm_label(std::get<payload::RhythmChoice>(e.payload).rhythm);
    case EventKind::DefibrillationDelivered:
      return "defibrillation #" + std::to_string(std::get<payload::Defibrillation>(e.payload).ordinal);
    case EventKind::AdrenalineGiven:
      return std::get<payload::Dose>(e.payload).mg.to_string() + "mg adrenaline";
    case EventKind::AmiodaroneGiven:
      return std::get<payload::Dose>(e.payload).mg.to_string() + "mg cordarone";
    case EventKind::AdrenalineDue:
      return "adrenaline due";
    case EventKind::AmiodaroneDue:
      return "cordarone due";
    case EventKind::NoteAdded:
      return "note: " + std::get<payload::Note>(e.payload).text;
    case EventKind::CommandRejected: {
      const auto& r = std::get<payload::Rejection>(e.payload);
      return "rejected " + std::string(to_string(r.command)) + " (" + std::string(to_string(r.reason)) + ")";
    }
    case EventKind::SessionEnded:
      return "CPR ended";
  }
  return {};
}

}  // namespace

std::string format_minute(WallTime wall, const RenderOptions& options) {
  auto secs = std::chrono::floor<std::chrono::seconds>(wall);
  std::tm tm = to_tm(static_cast<std::time_t>(secs.time_since_epoch().count()), options);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min);
  return buf;
}

std::string DocumentationLine::text() const { return description + " at " + timestamp_text; }

bool is_procedure_event(EventKind kind) {
  switch (kind) {
    case EventKind::SessionStarted:
    case EventKind::CompressionStarted:
    case EventKind::CompressionFinished:
    case EventKind::RhythmSelected:
    case EventKind::DefibrillationDelivered:
    case EventKind::AdrenalineGiven:
    case EventKind::AmiodaroneGiven:
    case EventKind::NoteAdded:
    case EventKind::SessionEnded:
      return true;
    default:
      return false;
  }
}

std::vector<DocumentationLine> render_documentation(const EventLog& log, const RenderOptions& options) {
  std::vector<DocumentationLine> lines;
  for (const Event& e : log.events) {
    if (!options.verbose && !is_procedure_event(e.kind)) continue;
    lines.push_back({format_minute(e.at.wall_time, options), describe(e)});
  }
  return lines;
}

std::vector<NoteLine> render_notes(const EventLog& log, const RenderOptions& options) {
  std::vector<NoteLine> notes;
  for (const Event& e : log.events) {
    if (e.kind != EventKind::NoteAdded) continue;
    notes.push_back({format_minute(e.at.wall_time, options), std::get<payload::Note>(e.payload).text});
  }
  return notes;
}

std::string render_summary(const Summary& s) {
  return "defibrillations: " + std::to_string(s.defibrillation_count) +
         ", adrenaline: " + s.adrenaline_total_mg.to_string() + "mg" +
         ", cordarone: " + s.cordarone_total_mg.to_string() + "mg";
}

// --- Timestamps -------------------------------------------------------------

std::string format_rfc3339(WallTime wall) {
  using namespace std::chrono;
  auto secs = floor<seconds>(wall);
  auto frac = (wall - secs).count();
  std::time_t t = static_cast<std::time_t>(secs.time_since_epoch().count());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                        tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  if (frac != 0) std::snprintf(buf + n, sizeof buf - n, ".%09lld", static_cast<long long>(frac));
  return std::string(buf) + "Z";
}

WallTime parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  auto fail = [&] { return std::invalid_argument("invalid RFC 3339 timestamp: '" + std::string(text) + "'"); };
  auto digits = [&](std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw fail();
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') throw fail();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != 't') ||
      text[13] != ':' || text[16] != ':') {
    throw fail();
  }
  year_month_day ymd{year{digits(0, 4)}, month{static_cast<unsigned>(digits(5, 2))},
                     day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) throw fail();
  int hh = digits(11, 2), mm = digits(14, 2), ss = digits(17, 2);
  if (hh > 23 || mm > 59 || ss > 60) throw fail();

  std::size_t pos = 19;
  std::int64_t nanos = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t n = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (n == 9) throw fail();
      nanos = nanos * 10 + (text[pos] - '0');
      ++pos;
      ++n;
    }
    if (n == 0) throw fail();
    for (; n < 9; ++n) nanos *= 10;
  }
  if (pos + 1 != text.size() || (text[pos] != 'Z' && text[pos] != 'z')) throw fail();

  return WallTime{sys_days{ymd}.time_since_epoch() + hours{hh} + minutes{mm} + seconds{ss} + nanoseconds{nanos}};
}

// --- JSON codecs ------------------------------------------------------------

namespace {

ordered_json mg_to_json(Milligrams mg) {
  if (mg.is_whole()) return mg.micrograms() / Milligrams::kMicrogramsPerMg;
  return mg.as_double();
}

Milligrams mg_from_json(const json& j) {
  if (j.is_number_integer() || j.is_number_unsigned()) return Milligrams::whole(j.get<std::int64_t>());
  if (j.is_number_float()) return Milligrams::from_double(j.get<double>());
  if (j.is_string()) return Milligrams::parse(j.get<std::string>());
  throw std::invalid_argument("expected a milligram amount");
}

Duration seconds_from_json(const json& j) {
  if (j.is_number_integer() || j.is_number_unsigned()) return Duration::from_seconds(j.get<std::int64_t>());
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (v == static_cast<double>(static_cast<std::int64_t>(v))) {
      return Duration::from_seconds(static_cast<std::int64_t>(v));
    }
  }
  throw std::invalid_argument("expected whole seconds");
}

}  // namespace

ordered_json config_to_json(const DosingConfig& c) {
  ordered_json j;
  j["adrenaline_dose_mg"] = mg_to_json(c.adrenaline_dose_mg);
  j["adrenaline_interval"] = c.adrenaline_interval.seconds();
  j["amiodarone_first_dose_mg"] = mg_to_json(c.amiodarone_first_dose_mg);
  j["amiodarone_repeat_dose_mg"] = mg_to_json(c.amiodarone_repeat_dose_mg);
  j["compression_duration"] = c.compression_duration.seconds();
  j["warning_threshold"] = c.warning_threshold.seconds();
  j["vfvt_adrenaline_min_defibs"] = c.vfvt_adrenaline_min_defibs;
  return j;
}

DosingConfig config_from_json(const json& j, const DosingConfig& base) {
  if (j.is_null()) {
    validate(base);
    return base;
  }
  if (!j.is_object()) throw ConfigError({"config"});
  DosingConfig c = base;
  std::vector<std::string> bad;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "adrenaline_dose_mg") {
        c.adrenaline_dose_mg = mg_from_json(value);
      } else if (key == "adrenaline_interval") {
        c.adrenaline_interval = seconds_from_json(value);
      } else if (key == "amiodarone_first_dose_mg") {
        c.amiodarone_first_dose_mg = mg_from_json(value);
      } else if (key == "amiodarone_repeat_dose_mg") {
        c.amiodarone_repeat_dose_mg = mg_from_json(value);
      } else if (key == "compression_duration") {
        c.compression_duration = seconds_from_json(value);
      } else if (key == "warning_threshold") {
        c.warning_threshold = seconds_from_json(value);
      } else if (key == "vfvt_adrenaline_min_defibs") {
        if (!value.is_number_integer()) throw std::invalid_argument("expected an integer");
        c.vfvt_adrenaline_min_defibs = value.get<int>();
      } else {
        bad.push_back(key);
      }
    } catch (const std::invalid_argument&) {
      bad.push_back(key);
    }
  }
  for (auto& field : config_violations(c)) {
    if (std::find(bad.begin(), bad.end(), field) == bad.end()) bad.push_back(std::move(field));
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return c;
}

ordered_json event_to_json(const Event& e) {
  ordered_json p = ordered_json::object();
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, payload::Blink>) {
          p["second_mark"] = v.second_mark;
        } else if constexpr (std::is_same_v<T, payload::RhythmChoice>) {
          p["rhythm"] = to_string(v.rhythm);
        } else if constexpr (std::is_same_v<T, payload::Defibrillation>) {
          p["ordinal"] = v.ordinal;
        } else if constexpr (std::is_same_v<T, payload::Dose>) {
          p["mg"] = mg_to_json(v.mg);
        } else if constexpr (std::is_same_v<T, payload::Note>) {
          p["text"] = v.text;
        } else if constexpr (std::is_same_v<T, payload::Rejection>) {
          p["command"] = to_string(v.command);
          p["reason"] = to_string(v.reason);
        }
      },
      e.payload);

  ordered_json j;
  j["seq"] = e.seq;
  j["monotonic_ns"] = e.at.monotonic_nanos;
  j["wall_utc"] = format_rfc3339(e.at.wall_time);
  j["kind"] = to_string(e.kind);
  j["payload"] = std::move(p);
  return j;
}

Event event_from_json(const json& j) {
  auto need = [](const auto& opt, const std::string& what) {
    if (!opt) throw std::invalid_argument("unknown " + what);
    return *opt;
  };
  Event e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.at.monotonic_nanos = j.at("monotonic_ns").get<std::int64_t>();
  e.at.wall_time = parse_rfc3339(j.at("wall_utc").get<std::string>());
  auto kind_name = j.at("kind").get<std::string>();
  e.kind = need(parse_event_kind(kind_name), "event kind '" + kind_name + "'");
  const json& p = j.at("payload");
  if (!p.is_object()) throw std::invalid_argument("payload must be an object");

  switch (e.kind) {
    case EventKind::CompressionBlink:
      e.payload = payload::Blink{p.at("second_mark").get<int>()};
      break;
    case EventKind::RhythmSelected:
      e.payload = payload::RhythmChoice{need(parse_rhythm(p.at("rhythm").get<std::string>()), "rhythm")};
      break;
    case EventKind::DefibrillationDelivered:
      e.payload = payload::Defibrillation{p.at("ordinal").get<int>()};
      break;
    case EventKind::AdrenalineGiven:
    case EventKind::AmiodaroneGiven:
      e.payload = payload::Dose{mg_from_json(p.at("mg"))};
      break;
    case EventKind::NoteAdded:
      e.payload = payload::Note{p.at("text").get<std::string>()};
      break;
    case EventKind::CommandRejected:
      e.payload = payload::Rejection{need(parse_command_kind(p.at("command").get<std::string>()), "command"),
                                     need(parse_reject_reason(p.at("reason").get<std::string>()), "reason")};
      break;
    default:
      e.payload = payload::None{};
      break;
  }
  return e;
}

// --- Session files ----------------------------------------------------------

namespace {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string header_line(const std::string& session_id, const DosingConfig& config, int schema_version) {
  ordered_json h;
  h["schema_version"] = schema_version;
  h["session_id"] = session_id;
  h["config"] = config_to_json(config);
  return h.dump() + "\n";
}

std::string event_line(const Event& e) { return event_to_json(e).dump() + "\n"; }

struct Line {
  std::size_t number;
  std::size_t offset;
  std::string_view text;
};

// Splits on '\n'. `torn` reports a trailing fragment without its newline.
std::vector<Line> split_lines(std::string_view bytes, bool& torn) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  torn = false;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) {
      torn = true;
      lines.push_back({lines.size() + 1, pos, bytes.substr(pos)});
      break;
    }
    lines.push_back({lines.size() + 1, pos, bytes.substr(pos, nl - pos)});
    pos = nl + 1;
  }
  return lines;
}

json parse_line(const Line& line) {
  json j = json::parse(line.text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError(line.number, "malformed record");
  return j;
}

EventLog parse_header(const Line& line) {
  json h = parse_line(line);
  EventLog log;
  try {
    log.schema_version = h.at("schema_version").get<int>();
  } catch (const json::exception&) {
    throw ParseError(line.number, "header lacks an integer schema_version");
  }
  if (log.schema_version != kSchemaVersion) {
    throw ParseError(line.number, "unsupported schema_version " + std::to_string(log.schema_version));
  }
  try {
    log.session_id = h.at("session_id").get<std::string>();
    log.config = config_from_json(h.at("config"), DosingConfig{});
  } catch (const json::exception& ex) {
    throw ParseError(line.number, std::string("bad header: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw ParseError(line.number, ex.what());
  }
  return log;
}

void append_event_line(EventLog& log, const Line& line) {
  json j = parse_line(line);
  Event e;
  try {
    e = event_from_json(j);
  } catch (const json::exception& ex) {
    throw ParseError(line.number, std::string("bad event record: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ParseError(line.number, std::string("bad event record: ") + ex.what());
  }
  try {
    check_appendable(log, e);
  } catch (const IntegrityError& ex) {
    throw IntegrityError("line " + std::to_string(line.number) + ": " + ex.what());
  }
  log.events.push_back(std::move(e));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path, "read failed");
  return ss.str();
}

void write_all(int fd, std::string_view bytes, const std::filesystem::path& path) {
  while (!bytes.empty()) {
    ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(path, std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void sync_directory(const std::filesystem::path& dir) {
  int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string serialize_session(const EventLog& log) {
  std::string out = header_line(log.session_id, log.config, log.schema_version);
  for (const Event& e : log.events) out += event_line(e);
  ordered_json c;
  c["checksum"] = "sha256:" + sha256_hex(out);
  out += c.dump() + "\n";
  return out;
}

EventLog parse_session(std::string_view bytes) {
  if (bytes.empty()) throw ParseError(1, "empty session file");
  bool torn = false;
  std::vector<Line> lines = split_lines(bytes, torn);
  if (torn) throw ParseError(lines.back().number, "truncated record");

  std::vector<json> parsed;
  parsed.reserve(lines.size());
  for (const Line& line : lines) parsed.push_back(parse_line(line));

  const Line& last = lines.back();
  if (lines.size() < 2 || !parsed.back().contains("checksum") || !parsed.back()["checksum"].is_string()) {
    throw ParseError(last.number, "missing checksum record");
  }
  std::string expected = "sha256:" + sha256_hex(bytes.substr(0, last.offset));
  if (parsed.back()["checksum"].get<std::string>() != expected) {
    throw IntegrityError("checksum mismatch (line " + std::to_string(last.number) + ")");
  }

  EventLog log = parse_header(lines.front());
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) append_event_line(log, lines[i]);
  return log;
}

void save_session(const EventLog& log, const std::filesystem::path& destination) {
  static std::atomic<unsigned> counter{0};
  const std::string bytes = serialize_session(log);
  auto dir = destination.parent_path();
  auto tmp = dir / ("." + destination.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));

  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError(destination, std::string("cannot create temp file: ") + std::strerror(errno));
  try {
    write_all(fd, bytes, destination);
    if (::fsync(fd) != 0) throw IoError(destination, std::string("fsync failed: ") + std::strerror(errno));
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), destination.c_str()) != 0) {
    int err = errno;
    ::unlink(tmp.c_str());
    throw IoError(destination, std::string("rename failed: ") + std::strerror(err));
  }
  sync_directory(dir);
}

EventLog load_session(const std::filesystem::path& source) { return parse_session(read_file(source)); }

JournalWriter::JournalWriter(const std::filesystem::path& path, const std::string& session_id,
                             const DosingConfig& config)
    : path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError(path, std::string("cannot open journal: ") + std::strerror(errno));
  write_line(header_line(session_id, config, kSchemaVersion));
}

JournalWriter::~JournalWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void JournalWriter::append(const Event& e) { write_line(event_line(e)); }

void JournalWriter::write_line(const std::string& line) {
  write_all(fd_, line, path_);
  if (::fdatasync(fd_) != 0) throw IoError(path_, std::string("fdatasync failed: ") + std::strerror(errno));
}

EventLog recover_journal(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  if (bytes.empty()) throw ParseError(1, "empty journal");
  bool torn = false;
  std::vector<Line> lines = split_lines(bytes, torn);
  if (torn) lines.pop_back();
  if (lines.empty()) throw ParseError(1, "journal header is incomplete");
  EventLog log = parse_header(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) append_event_line(log, lines[i]);
  return log;
}

// --- Replay -----------------------------------------------------------------

namespace {

// The command that must have produced a batch whose first event is `e`.
Command implied_command(const Event& e) {
  Command cmd{CommandKind::Tick, e.at, {}};
  switch (e.kind) {
    case EventKind::SessionStarted:
      cmd.kind = CommandKind::StartSession;
      break;
    case EventKind::CompressionStarted:
      cmd.kind = CommandKind::StartCompression;
      break;
    case EventKind::CompressionWarning:
    case EventKind::CompressionBlink:
    case EventKind::CompressionFinished:
    case EventKind::AdrenalineDue:
    case EventKind::AmiodaroneDue:
      cmd.kind = CommandKind::Tick;
      break;
    case EventKind::AnalysisOpened:
      cmd.kind = CommandKind::ReturnToAnalysis;
      break;
    case EventKind::RhythmSelectionOpened:
      cmd.kind = CommandKind::AnalyzeRhythm;
      break;
    case EventKind::RhythmSelected:
      cmd.kind = std::get<payload::RhythmChoice>(e.payload).rhythm == Rhythm::AsystolePea
                     ? CommandKind::SelectAsystolePea
                     : CommandKind::SelectVfVt;
      break;
    case EventKind::DefibrillationDelivered:
      cmd.kind = CommandKind::Defibrillate;
      break;
    case EventKind::AdrenalineGiven:
      cmd.kind = CommandKind::AdministerAdrenaline;
      break;
    case EventKind::AmiodaroneGiven:
      cmd.kind = CommandKind::AdministerAmiodarone;
      break;
    case EventKind::NoteAdded:
      cmd.kind = CommandKind::AddNote;
      cmd.note_text = std::get<payload::Note>(e.payload).text;
      break;
    case EventKind::SessionEnded:
      cmd.kind = CommandKind::EndSession;
      break;
    case EventKind::CommandRejected: {
      const auto& r = std::get<payload::Rejection>(e.payload);
      cmd.kind = r.command;
      // The rejection is stamped with the newest event time; any earlier
      // instant reproduces it.
      if (r.reason == RejectReason::NonMonotonicTime) {
        cmd.at.monotonic_nanos -= 1;
        cmd.at.wall_time -= std::chrono::nanoseconds{1};
      }
      break;
    }
  }
  return cmd;
}

void expect_batch(const std::vector<Event>& stored, std::size_t from, const std::vector<Event>& produced) {
  for (std::size_t j = 0; j < produced.size(); ++j) {
    std::size_t i = from + j;
    if (i >= stored.size()) {
      throw VerificationError(produced[j].seq, "engine emitted " + std::string(to_string(produced[j].kind)) +
                                                   " past the end of the log");
    }
    if (!(stored[i] == produced[j])) {
      throw VerificationError(stored[i].seq, "stored " + std::string(to_string(stored[i].kind)) +
                                                 ", engine produced " + std::string(to_string(produced[j].kind)));
    }
  }
}

}  // namespace

SessionState replay_verify(const EventLog& log) {
  const auto& events = log.events;
  if (events.empty() || events.front().kind != EventKind::SessionStarted) {
    throw VerificationError(events.empty() ? 1 : events.front().seq, "log does not begin with SessionStarted");
  }
  Transition t = new_session(log.config, events.front().at);
  expect_batch(events, 0, t.events);
  SessionState state = std::move(t.state);
  std::size_t i = t.events.size();

  while (i < events.size()) {
    Transition next = apply(state, implied_command(events[i]));
    if (next.events.empty()) {
      throw VerificationError(events[i].seq, "engine produced nothing for stored " +
                                                 std::string(to_string(events[i].kind)));
    }
    expect_batch(events, i, next.events);
    i += next.events.size();
    state = std::move(next.state);
  }
  return state;
}

}  // namespace resus
