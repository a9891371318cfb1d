#include "resus/service.hpp"

#include <algorithm>
#include <random>

namespace resus {

struct SessionService::Session {
  std::string id;
  DosingConfig config;

  // Held for the whole stamp -> apply -> journal -> publish path.
  std::mutex writer;
  SessionState state;
  Instant observed_at;
  std::unique_ptr<JournalWriter> journal;
  // Set once create_session has finished; guarded by `writer`.
  bool ready = false;

  mutable std::mutex read_mu;
  mutable std::condition_variable published;
  std::vector<Event> events;
  std::shared_ptr<const Snapshot> snap;
  bool ended = false;
};

namespace {

Snapshot project(const std::string& id, const SessionState& state, const Instant& at) {
  Snapshot s;
  s.session_id = id;
  s.phase = state.phase;
  s.defib_count = state.defib_count;
  s.adrenaline_total_mg = adrenaline_total(state);
  s.cordarone_total_mg = amiodarone_total(state);
  s.enabled = enabled_commands(state, at);
  if (state.active_countdown) s.countdown_remaining = remaining(*state.active_countdown, at);
  s.elapsed = elapsed(state, at);
  s.last_seq = state.event_seq - 1;
  s.ended = state.phase == Phase::Ended;
  return s;
}

std::vector<Event> slice_from(const std::vector<Event>& events, std::uint64_t from_seq) {
  std::size_t start = from_seq <= 1 ? 0 : static_cast<std::size_t>(from_seq - 1);
  if (start >= events.size()) return {};
  return {events.begin() + static_cast<std::ptrdiff_t>(start), events.end()};
}

nlohmann::ordered_json kinds_to_json(const CommandSet& set) {
  auto arr = nlohmann::ordered_json::array();
  for (CommandKind k : set.kinds()) arr.push_back(to_string(k));
  return arr;
}

}  // namespace

SessionService::SessionService() : SessionService(Options{}) {}

SessionService::SessionService(Options options) : options_(std::move(options)) {
  if (!options_.clock) throw std::invalid_argument("SessionService needs a time source");
  validate(options_.default_config);
  if (options_.journal_dir) std::filesystem::create_directories(*options_.journal_dir);
  if (options_.run_tick_loop) loop_ = std::thread([this] { tick_loop(); });
}

SessionService::~SessionService() {
  {
    std::lock_guard lock(loop_mu_);
    stopping_ = true;
  }
  loop_cv_.notify_all();
  if (loop_.joinable()) loop_.join();
}

std::string SessionService::next_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

std::string SessionService::create_session(const nlohmann::json& config_overrides) {
  DosingConfig config = config_from_json(config_overrides, options_.default_config);

  auto session = std::make_shared<Session>();
  session->config = config;
  // Locked before the session becomes visible so the tick loop never sees it half built.
  std::lock_guard writer(session->writer);
  {
    std::unique_lock ids(sessions_mu_);
    do {
      session->id = next_id();
    } while (sessions_.count(session->id) != 0);
    sessions_[session->id] = session;
  }

  Instant now = options_.clock->now();
  Transition t = new_session(config, now);
  if (options_.journal_dir) {
    try {
      session->journal =
          std::make_unique<JournalWriter>(*options_.journal_dir / (session->id + ".journal"), session->id, config);
      for (const Event& e : t.events) session->journal->append(e);
    } catch (...) {
      std::unique_lock ids(sessions_mu_);
      sessions_.erase(session->id);
      throw;
    }
  }
  session->state = std::move(t.state);
  session->observed_at = now;
  session->ready = true;

  std::lock_guard read(session->read_mu);
  session->events = std::move(t.events);
  session->snap = std::make_shared<const Snapshot>(project(session->id, session->state, now));
  return session->id;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSessionError(id);
  return it->second;
}

Ack SessionService::apply_locked(Session& s, Command cmd) {
  cmd.at = options_.clock->now();
  Transition t = apply(s.state, cmd);
  if (s.journal) {
    for (const Event& e : t.events) s.journal->append(e);
  }
  s.state = std::move(t.state);
  if (cmd.at.monotonic_nanos > s.observed_at.monotonic_nanos) s.observed_at = cmd.at;

  Ack ack;
  ack.accepted = t.accepted;
  if (!t.accepted) ack.reason = std::get<payload::Rejection>(t.events.front().payload).reason;
  ack.enabled = enabled_commands(s.state, s.observed_at);

  auto snap = std::make_shared<const Snapshot>(project(s.id, s.state, s.observed_at));
  {
    std::lock_guard read(s.read_mu);
    s.events.insert(s.events.end(), t.events.begin(), t.events.end());
    s.snap = std::move(snap);
    s.ended = s.state.phase == Phase::Ended;
  }
  if (!t.events.empty()) s.published.notify_all();
  ack.events = std::move(t.events);
  return ack;
}

Ack SessionService::submit_command(const std::string& id, CommandKind kind, const std::string& note_text) {
  auto s = find(id);
  std::lock_guard writer(s->writer);
  if (!s->ready) throw UnknownSessionError(id);
  return apply_locked(*s, Command{kind, Instant{}, note_text});
}

Snapshot SessionService::snapshot(const std::string& id) const {
  auto s = find(id);
  std::lock_guard read(s->read_mu);
  if (!s->snap) throw UnknownSessionError(id);
  return *s->snap;
}

EventBatch SessionService::events_since(const std::string& id, std::uint64_t from_seq) const {
  auto s = find(id);
  std::lock_guard read(s->read_mu);
  EventBatch batch{slice_from(s->events, from_seq), false};
  batch.end_of_stream = s->ended;
  return batch;
}

EventBatch SessionService::wait_events(const std::string& id, std::uint64_t from_seq,
                                       std::chrono::milliseconds timeout) const {
  auto s = find(id);
  std::unique_lock read(s->read_mu);
  std::uint64_t head = s->events.size();
  if (from_seq > head + 1) from_seq = head + 1;
  if (from_seq < 1) from_seq = 1;
  s->published.wait_for(read, timeout, [&] { return s->events.size() >= from_seq || s->ended; });
  EventBatch batch{slice_from(s->events, from_seq), false};
  batch.end_of_stream = s->ended;
  return batch;
}

EventLog SessionService::log(const std::string& id) const {
  auto s = find(id);
  EventLog log;
  log.session_id = id;
  {
    std::lock_guard read(s->read_mu);
    log.events = s->events;
  }
  log.config = s->config;
  return log;
}

std::string SessionService::export_session(const std::string& id) const { return serialize_session(log(id)); }

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(sessions_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

void SessionService::tick_all() {
  std::vector<std::shared_ptr<Session>> live;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [_, s] : sessions_) live.push_back(s);
  }
  for (const auto& s : live) {
    std::lock_guard writer(s->writer);
    if (!s->ready || s->state.phase == Phase::Ended) continue;
    apply_locked(*s, Command{CommandKind::Tick, Instant{}, {}});
  }
}

void SessionService::tick_loop() {
  std::unique_lock lock(loop_mu_);
  while (!stopping_) {
    loop_cv_.wait_for(lock, options_.tick_period, [this] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    tick_all();
    lock.lock();
  }
}

nlohmann::ordered_json snapshot_to_json(const Snapshot& s) {
  nlohmann::ordered_json j;
  j["session_id"] = s.session_id;
  j["phase"] = to_string(s.phase);
  j["defib_count"] = s.defib_count;
  j["adrenaline_total_mg"] = s.adrenaline_total_mg.as_double();
  j["cordarone_total_mg"] = s.cordarone_total_mg.as_double();
  j["enabled_commands"] = kinds_to_json(s.enabled);
  if (s.countdown_remaining) {
    j["countdown_remaining_ns"] = s.countdown_remaining->nanos();
  } else {
    j["countdown_remaining_ns"] = nullptr;
  }
  j["elapsed_ns"] = s.elapsed.nanos();
  j["last_seq"] = s.last_seq;
  j["ended"] = s.ended;
  return j;
}

nlohmann::ordered_json ack_to_json(const Ack& a) {
  nlohmann::ordered_json j;
  j["accepted"] = a.accepted;
  if (a.reason) {
    j["reason"] = to_string(*a.reason);
  } else {
    j["reason"] = nullptr;
  }
  auto events = nlohmann::ordered_json::array();
  for (const Event& e : a.events) events.push_back(event_to_json(e));
  j["events"] = std::move(events);
  j["enabled_commands"] = kinds_to_json(a.enabled);
  return j;
}

}  // namespace resus
