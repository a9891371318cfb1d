#pragma once

// In-process session service. Each session owns one writer lock that acts as
// its serialized command queue; commands are stamped with the service clock
// on receipt, applied, journaled and published to subscribers. Snapshots are
// immutable projections swapped in after every write, so readers never wait
// on the engine.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "resus/clock.hpp"
#include "resus/engine.hpp"
#include "resus/records.hpp"

namespace resus {

class UnknownSessionError : public std::out_of_range {
 public:
  explicit UnknownSessionError(const std::string& id) : std::out_of_range("unknown session: " + id) {}
};

struct Ack {
  bool accepted = false;
  std::optional<RejectReason> reason;
  std::vector<Event> events;
  CommandSet enabled;
};

struct Snapshot {
  std::string session_id;
  Phase phase = Phase::Idle;
  int defib_count = 0;
  Milligrams adrenaline_total_mg;
  Milligrams cordarone_total_mg;
  CommandSet enabled;
  std::optional<Duration> countdown_remaining;
  Duration elapsed;
  std::uint64_t last_seq = 0;
  bool ended = false;

  bool operator==(const Snapshot&) const = default;
};

struct EventBatch {
  std::vector<Event> events;
  // The session has ended and every event has been delivered.
  bool end_of_stream = false;
};

class SessionService {
 public:
  struct Options {
    std::shared_ptr<TimeSource> clock = std::make_shared<SystemClock>();
    DosingConfig default_config;
    // When set, every session is journaled to <dir>/<session_id>.journal.
    std::optional<std::filesystem::path> journal_dir;
    std::chrono::milliseconds tick_period{250};
    bool run_tick_loop = true;
  };

  SessionService();
  explicit SessionService(Options options);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Throws ConfigError listing the offending fields.
  std::string create_session(const nlohmann::json& config_overrides = nullptr);
  Ack submit_command(const std::string& id, CommandKind kind, const std::string& note_text = {});
  Snapshot snapshot(const std::string& id) const;
  // Events with seq >= from_seq that exist right now.
  EventBatch events_since(const std::string& id, std::uint64_t from_seq) const;
  // Like events_since, but blocks up to `timeout` for the first new event.
  // A from_seq beyond the head waits for the next event.
  EventBatch wait_events(const std::string& id, std::uint64_t from_seq, std::chrono::milliseconds timeout) const;
  std::string export_session(const std::string& id) const;
  EventLog log(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  // One Tick for every live session; the tick loop calls this periodically.
  void tick_all();

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  Ack apply_locked(Session& s, Command cmd);
  void tick_loop();
  std::string next_id();

  Options options_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;

  std::mutex loop_mu_;
  std::condition_variable loop_cv_;
  bool stopping_ = false;
  std::thread loop_;
};

nlohmann::ordered_json snapshot_to_json(const Snapshot& s);
nlohmann::ordered_json ack_to_json(const Ack& a);

}  // namespace resus
