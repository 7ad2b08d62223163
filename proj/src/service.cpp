#include "focusplus/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus::service {

namespace fs = std::filesystem;

Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

std::map<std::string, Principal> parse_tokens(std::istream& in) {
  std::map<std::string, Principal> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    try {
      const auto rec = RecordLine::parse(line);
      if (rec.tag != "token") throw Error(ErrorCode::MalformedRecord, "expected a token record");
      Principal p;
      const std::string& role = rec.at("role");
      if (role == "student") {
        p.role = Role::Student;
      } else if (role == "teacher") {
        p.role = Role::Teacher;
      } else {
        throw Error(ErrorCode::MalformedRecord, "role must be student or teacher");
      }
      p.user_id = rec.at("user");
      p.class_id = rec.at("class");
      if (!is_valid_identifier(p.user_id) || !is_valid_identifier(p.class_id)) {
        throw Error(ErrorCode::MalformedRecord, "invalid identifier");
      }
      out[rec.at("t")] = p;
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, "token file line " + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FocusLogStore

FocusLogStore::FocusLogStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  for (const auto& f : fs::directory_iterator(dir_)) {
    if (!f.is_regular_file() || f.path().extension() != ".fplog") continue;
    std::ifstream in(f.path(), std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    Entry e;
    bool have_meta = false;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn final write: ignore the partial line
      const std::string_view line(text.data() + pos, nl - pos);
      pos = nl + 1;
      if (line.rfind("meta ", 0) == 0) {
        e.meta = parse_meta(line);
        have_meta = true;
      } else if (line.rfind("pkt ", 0) == 0) {
        e.seen.insert(parse_packet(line).timestamp_ms);
      }
    }
    if (!have_meta) throw Error(ErrorCode::MalformedRecord, f.path().string() + ": missing meta record");
    const auto key = std::make_pair(e.meta.user_id, e.meta.session_id);
    entries_.emplace(key, std::move(e));
  }
}

fs::path FocusLogStore::file_of(const std::string& user_id, const std::string& session_id) const {
  // '+' is not an identifier character, so the name is unambiguous
  return dir_ / (user_id + "+" + session_id + ".fplog");
}

void FocusLogStore::append_line(const Entry& e, const std::string& line) {
  std::ofstream out(file_of(e.meta.user_id, e.meta.session_id), std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "cannot append to the focus log of " + e.meta.session_id);
}

void FocusLogStore::register_session(const SessionMeta& meta) {
  if (!is_valid_identifier(meta.user_id) || !is_valid_identifier(meta.session_id)) {
    throw Error(ErrorCode::SchemaViolation, "invalid session or user id");
  }
  std::unique_lock lock(mu_);
  const auto key = std::make_pair(meta.user_id, meta.session_id);
  if (auto it = entries_.find(key); it != entries_.end()) {
    if (!(it->second.meta == meta)) throw Error(ErrorCode::SchemaViolation, "session already registered with other metadata");
    return;
  }
  Entry e;
  e.meta = meta;
  append_line(e, serialize_meta(meta));
  entries_.emplace(key, std::move(e));
}

bool FocusLogStore::has_session(const std::string& user_id, const std::string& session_id) const {
  std::shared_lock lock(mu_);
  return entries_.count({user_id, session_id}) > 0;
}

FocusLogStore::Entry& FocusLogStore::entry(const std::string& user_id, const std::string& session_id) {
  std::shared_lock lock(mu_);
  auto it = entries_.find({user_id, session_id});
  if (it == entries_.end()) throw Error(ErrorCode::UnknownSession, user_id + "/" + session_id);
  return it->second;  // entries are never erased, so the reference stays valid
}

const FocusLogStore::Entry& FocusLogStore::entry(const std::string& user_id, const std::string& session_id) const {
  return const_cast<FocusLogStore*>(this)->entry(user_id, session_id);
}

bool FocusLogStore::append(const MetricPacket& packet) {
  validate_packet(packet);
  Entry& e = entry(packet.user_id, packet.session_id);
  std::lock_guard lock(*e.mu);
  if (!e.seen.insert(packet.timestamp_ms).second) return false;
  try {
    append_line(e, serialize_packet(packet));
  } catch (...) {
    e.seen.erase(packet.timestamp_ms);
    throw;
  }
  return true;
}

void FocusLogStore::set_survey(const std::string& user_id, const std::string& session_id, std::optional<int> quiz,
                               std::optional<int> distraction, std::optional<int> accuracy) {
  if ((quiz && (*quiz < 0 || *quiz > 10)) || (distraction && (*distraction < 1 || *distraction > 7)) ||
      (accuracy && (*accuracy < 1 || *accuracy > 7))) {
    throw Error(ErrorCode::SchemaViolation, "survey answer out of range");
  }
  Entry& e = entry(user_id, session_id);
  std::lock_guard lock(*e.mu);
  std::string line = "survey";
  if (quiz) line += " quiz=" + std::to_string(*quiz);
  if (distraction) line += " distraction=" + std::to_string(*distraction);
  if (accuracy) line += " accuracy=" + std::to_string(*accuracy);
  append_line(e, line);
}

SessionRecord FocusLogStore::read(const std::string& user_id, const std::string& session_id) const {
  const Entry& e = entry(user_id, session_id);
  std::string text;
  {
    std::lock_guard lock(*e.mu);
    std::ifstream in(file_of(user_id, session_id), std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  SessionRecord rec;
  rec.meta = e.meta;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.rfind("pkt ", 0) == 0) {
      rec.packets.push_back(parse_packet(line));
    } else if (line.rfind("survey", 0) == 0) {
      const auto r = RecordLine::parse(line);
      if (r.has("quiz")) rec.quiz_score = static_cast<int>(parse_int(r.at("quiz")));
      if (r.has("distraction")) rec.self_report_distraction = static_cast<int>(parse_int(r.at("distraction")));
      if (r.has("accuracy")) rec.perceived_accuracy = static_cast<int>(parse_int(r.at("accuracy")));
    }
  }
  std::stable_sort(rec.packets.begin(), rec.packets.end(),
                   [](const MetricPacket& a, const MetricPacket& b) { return a.timestamp_ms < b.timestamp_ms; });
  return rec;
}

std::vector<SessionMeta> FocusLogStore::sessions_of(const std::string& user_id) const {
  std::shared_lock lock(mu_);
  std::vector<SessionMeta> out;
  for (const auto& [key, e] : entries_) {
    if (key.first == user_id) out.push_back(e.meta);
  }
  return out;
}

std::vector<SessionMeta> FocusLogStore::all_sessions() const {
  std::shared_lock lock(mu_);
  std::vector<SessionMeta> out;
  for (const auto& [key, e] : entries_) out.push_back(e.meta);
  return out;
}

std::int64_t FocusLogStore::newest_timestamp(const std::string& user_id, const std::string& session_id) const {
  const Entry& e = entry(user_id, session_id);
  std::lock_guard lock(*e.mu);
  return e.seen.empty() ? -1 : *e.seen.rbegin();
}

// ---------------------------------------------------------------------------
// Wire records

std::string_view connection_status_name(ConnectionStatus s) noexcept {
  switch (s) {
    case ConnectionStatus::Connected: return "connected";
    case ConnectionStatus::Stale: return "stale";
    case ConnectionStatus::Disconnected: return "disconnected";
  }
  return "disconnected";
}

std::string snapshot_json(const ClassSnapshot& snap) {
  nlohmann::json j;
  j["v"] = 1;
  j["class_id"] = snap.class_id;
  j["students"] = nlohmann::json::array();
  for (const auto& s : snap.students) {
    j["students"].push_back({{"user_id", s.user_id},
                             {"session_id", s.session_id},
                             {"latest_emotion", std::string(emotion_name(s.latest_emotion))},
                             {"latest_level", s.latest_level},
                             {"rolling_mean", s.rolling_mean},
                             {"latest_t", s.latest_timestamp_ms},
                             {"status", std::string(connection_status_name(s.status))},
                             {"accepted", s.packets_accepted},
                             {"duplicates", s.packets_duplicate},
                             {"rejected", s.packets_rejected}});
  }
  return j.dump();
}

std::string serialize_ack(const IngestAck& ack) {
  return "ack v=1 session=" + ack.session_id + " t=" + std::to_string(ack.timestamp_ms) +
         " status=" + (ack.status == IngestStatus::Accepted ? "accepted" : "duplicate");
}

IngestAck parse_ack(std::string_view line) {
  const auto r = RecordLine::parse(line);
  if (r.tag != "ack") throw Error(ErrorCode::MalformedRecord, "expected an ack record");
  IngestAck a;
  a.session_id = r.at("session");
  a.timestamp_ms = parse_int(r.at("t"));
  const std::string& st = r.at("status");
  if (st != "accepted" && st != "duplicate") throw Error(ErrorCode::MalformedRecord, "bad ack status");
  a.status = st == "accepted" ? IngestStatus::Accepted : IngestStatus::Duplicate;
  return a;
}

std::string serialize_error(ErrorCode code, std::optional<std::int64_t> timestamp_ms) {
  std::string s = "error v=1 code=" + std::string(error_code_name(code));
  if (timestamp_ms) s += " t=" + std::to_string(*timestamp_ms);
  return s;
}

std::string serialize_calibration_sample(const calibration::CalibrationSample& s) {
  return "calsample t=" + std::to_string(s.timestamp_ms) + " target=" + std::to_string(s.target_index) +
         " face=" + (s.face_present ? "1" : "0") + " gx=" + format_double(s.raw.gx) + " gy=" + format_double(s.raw.gy);
}

calibration::CalibrationSample parse_calibration_sample(std::string_view line) {
  const auto r = RecordLine::parse(line);
  if (r.tag != "calsample") throw Error(ErrorCode::MalformedRecord, "expected a calsample record");
  calibration::CalibrationSample s;
  s.timestamp_ms = parse_int(r.at("t"));
  const auto target = parse_int(r.at("target"));
  if (target < 0) throw Error(ErrorCode::MalformedRecord, "negative target index");
  s.target_index = static_cast<std::size_t>(target);
  const std::string& face = r.at("face");
  if (face != "0" && face != "1") throw Error(ErrorCode::MalformedRecord, "face must be 0 or 1");
  s.face_present = face == "1";
  s.raw = {parse_double(r.at("gx")), parse_double(r.at("gy"))};
  return s;
}

std::string serialize_plan(const calibration::CalibrationPlan& plan) {
  std::string s = "plan v=1 dwell=" + std::to_string(plan.dwell_ms) + " settle=" + std::to_string(plan.settle_ms) +
                  " targets=" + std::to_string(plan.targets.size()) + "\n";
  for (std::size_t i = 0; i < plan.targets.size(); ++i) {
    s += "target i=" + std::to_string(i) + " u=" + format_double(plan.targets[i].u) + " v=" + format_double(plan.targets[i].v) + "\n";
  }
  return s;
}

calibration::CalibrationPlan parse_plan(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "missing plan record");
  const auto head = RecordLine::parse(line);
  if (head.tag != "plan") throw Error(ErrorCode::MalformedRecord, "expected a plan record");
  calibration::CalibrationPlan plan;
  plan.dwell_ms = parse_int(head.at("dwell"));
  plan.settle_ms = parse_int(head.at("settle"));
  const auto n = parse_int(head.at("targets"));
  for (std::int64_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "truncated plan");
    const auto r = RecordLine::parse(line);
    if (r.tag != "target" || parse_int(r.at("i")) != i) throw Error(ErrorCode::MalformedRecord, "bad target record");
    plan.targets.push_back({parse_double(r.at("u")), parse_double(r.at("v"))});
  }
  plan.validate();
  return plan;
}

// ---------------------------------------------------------------------------
// ServiceCore

ServiceCore::ServiceCore(ServiceConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)), store_(config_.data_dir / "logs") {
  if (config_.reorder_window_ms < 0 || config_.stale_after_ms <= 0 || config_.rolling_window_ms <= 0) {
    throw Error(ErrorCode::InvalidArgument, "service windows must be positive");
  }
  fs::create_directories(config_.data_dir / "gaze");
}

const Principal& ServiceCore::authenticate(const std::string& token) const {
  auto it = config_.tokens.find(token);
  if (token.empty() || it == config_.tokens.end()) throw Error(ErrorCode::Unauthorized, "unknown token");
  return it->second;
}

bool ServiceCore::class_exists(const std::string& class_id) const {
  return std::any_of(config_.tokens.begin(), config_.tokens.end(),
                     [&](const auto& kv) { return kv.second.class_id == class_id; });
}

ServiceCore::Live& ServiceCore::live_of(const Principal& who, const std::string& session_id) const {
  const auto key = std::make_pair(who.user_id, session_id);
  {
    std::shared_lock lock(live_mu_);
    if (auto it = live_.find(key); it != live_.end()) return *it->second;
  }
  if (!store_.has_session(who.user_id, session_id)) throw Error(ErrorCode::UnknownSession, who.user_id + "/" + session_id);
  std::unique_lock lock(live_mu_);
  auto& slot = live_[key];
  if (!slot) {
    slot = std::make_unique<Live>();
    slot->class_id = who.class_id;
    slot->user_id = who.user_id;
    slot->session_id = session_id;
    slot->newest = store_.newest_timestamp(who.user_id, session_id);  // restored after a restart
    slot->closed = true;
  }
  return *slot;
}

void ServiceCore::register_session(const Principal& who, const SessionMeta& meta) {
  if (who.role != Role::Student || meta.user_id != who.user_id) {
    throw Error(ErrorCode::Unauthorized, "students register only their own sessions");
  }
  store_.register_session(meta);
  Live& l = live_of(who, meta.session_id);
  std::lock_guard lock(l.mu);
  l.closed = false;
  l.last_seen_wall = clock_();
}

IngestAck ServiceCore::ingest(const Principal& who, const MetricPacket& packet) {
  if (who.role != Role::Student || packet.user_id != who.user_id) {
    throw Error(ErrorCode::Unauthorized, "packets may only be sent for one's own sessions");
  }
  Live& l = live_of(who, packet.session_id);
  std::lock_guard lock(l.mu);
  try {
    validate_packet(packet);
    if (l.newest >= 0 && packet.timestamp_ms < l.newest - config_.reorder_window_ms) {
      throw Error(ErrorCode::OutOfOrderPacket, "t=" + std::to_string(packet.timestamp_ms) + " is more than " +
                                                   std::to_string(config_.reorder_window_ms) + " ms behind " +
                                                   std::to_string(l.newest));
    }
  } catch (const Error&) {
    ++l.rejected;
    throw;
  }
  IngestAck ack{packet.session_id, packet.timestamp_ms, IngestStatus::Accepted};
  l.last_seen_wall = clock_();
  l.closed = false;
  if (!store_.append(packet)) {
    ++l.duplicate;
    ack.status = IngestStatus::Duplicate;
    return ack;
  }
  ++l.accepted;
  if (packet.timestamp_ms >= l.newest) {
    l.newest = packet.timestamp_ms;
    l.latest = packet;
  }
  // rolling window ordered by timestamp; late packets are inserted in place
  auto pos = std::upper_bound(l.window.begin(), l.window.end(), packet.timestamp_ms,
                              [](std::int64_t t, const auto& e) { return t < e.first; });
  l.window.insert(pos, {packet.timestamp_ms, packet.anomaly_level});
  l.window_sum += packet.anomaly_level;
  while (!l.window.empty() && l.window.front().first <= l.newest - config_.rolling_window_ms) {
    l.window_sum -= l.window.front().second;
    l.window.pop_front();
  }
  return ack;
}

void ServiceCore::disconnect(const std::string& user_id, const std::string& session_id) {
  std::shared_lock lock(live_mu_);
  auto it = live_.find({user_id, session_id});
  if (it == live_.end()) return;
  std::lock_guard l(it->second->mu);
  it->second->closed = true;
}

ClassSnapshot ServiceCore::dashboard_snapshot(const Principal& who, const std::string& class_id) const {
  if (!class_exists(class_id)) throw Error(ErrorCode::UnknownClass, class_id);
  if (who.role != Role::Teacher || who.class_id != class_id) throw Error(ErrorCode::Unauthorized, "teachers of the class only");
  return dashboard_snapshot(class_id);
}

ClassSnapshot ServiceCore::dashboard_snapshot(const std::string& class_id) const {
  if (!class_exists(class_id)) throw Error(ErrorCode::UnknownClass, class_id);
  ClassSnapshot snap;
  snap.class_id = class_id;
  const std::int64_t now = clock_();
  std::map<std::string, StudentSnapshot> by_user;  // one row per student: their most recently active session
  std::map<std::string, std::int64_t> seen_at;
  std::shared_lock lock(live_mu_);
  for (const auto& [key, lp] : live_) {
    Live& l = *lp;
    if (l.class_id != class_id) continue;
    std::lock_guard g(l.mu);
    StudentSnapshot s;
    s.user_id = l.user_id;
    s.session_id = l.session_id;
    if (l.latest) {
      s.latest_emotion = l.latest->emotion_label;
      s.latest_level = l.latest->anomaly_level;
      s.latest_timestamp_ms = l.latest->timestamp_ms;
    }
    s.rolling_mean = l.window.empty() ? 0.0 : std::clamp(l.window_sum / static_cast<double>(l.window.size()), 0.0, 1.0);
    s.status = l.closed ? ConnectionStatus::Disconnected
               : now - l.last_seen_wall > config_.stale_after_ms ? ConnectionStatus::Stale
                                                                 : ConnectionStatus::Connected;
    s.packets_accepted = l.accepted;
    s.packets_duplicate = l.duplicate;
    s.packets_rejected = l.rejected;
    auto it = seen_at.find(l.user_id);
    if (it == seen_at.end() || l.last_seen_wall >= it->second) {
      seen_at[l.user_id] = l.last_seen_wall;
      by_user[l.user_id] = s;
    }
  }
  for (auto& [user, s] : by_user) snap.students.push_back(std::move(s));
  return snap;
}

SessionRecord ServiceCore::fetch_focus_log(const Principal& who, const std::string& user_id,
                                           const std::string& session_id) const {
  if (who.role == Role::Student && who.user_id != user_id) throw Error(ErrorCode::Unauthorized, "students read only their own logs");
  if (who.role == Role::Teacher) {
    const bool in_class = std::any_of(config_.tokens.begin(), config_.tokens.end(), [&](const auto& kv) {
      return kv.second.role == Role::Student && kv.second.user_id == user_id && kv.second.class_id == who.class_id;
    });
    if (!in_class) throw Error(ErrorCode::Unauthorized, "student is not in the teacher's class");
  }
  return store_.read(user_id, session_id);
}

void ServiceCore::submit_survey(const Principal& who, const std::string& session_id, std::optional<int> quiz,
                                std::optional<int> distraction, std::optional<int> accuracy) {
  if (who.role != Role::Student) throw Error(ErrorCode::Unauthorized, "students submit their own surveys");
  store_.set_survey(who.user_id, session_id, quiz, distraction, accuracy);
}

stats::SessionReport ServiceCore::report(const Principal& who, const std::string& user_id) const {
  std::vector<SessionRecord> records;
  for (const auto& meta : store_.sessions_of(user_id)) records.push_back(fetch_focus_log(who, user_id, meta.session_id));
  if (records.empty()) {
    // still enforce authorization for users without sessions
    if (who.role == Role::Student && who.user_id != user_id) throw Error(ErrorCode::Unauthorized, "own reports only");
    throw Error(ErrorCode::UnknownSession, "no sessions for " + user_id);
  }
  return stats::session_report(records);
}

fs::path ServiceCore::gaze_map_path(const std::string& user_id) const {
  return config_.data_dir / "gaze" / (user_id + ".gazemap");
}

calibration::CalibrationPlan ServiceCore::start_calibration(const Principal& who) {
  if (who.role != Role::Student) throw Error(ErrorCode::Unauthorized, "students calibrate their own gaze");
  std::lock_guard lock(calib_mu_);
  calibrations_.insert_or_assign(who.user_id, calibration::CalibrationSession(calibration::CalibrationPlan::default_grid()));
  return calibrations_.at(who.user_id).plan();
}

void ServiceCore::add_calibration_samples(const Principal& who, const std::vector<calibration::CalibrationSample>& samples) {
  std::lock_guard lock(calib_mu_);
  auto it = calibrations_.find(who.user_id);
  if (it == calibrations_.end()) throw Error(ErrorCode::InvalidArgument, "no calibration run in progress");
  auto& run = it->second;
  for (const auto& s : samples) {
    if (s.target_index >= run.plan().targets.size()) throw Error(ErrorCode::InvalidArgument, "target index out of range");
    while (!run.finished() && run.current_target() < s.target_index) run.advance();
    if (run.current_target() != s.target_index) throw Error(ErrorCode::InvalidArgument, "samples must follow the target order");
    run.record(s.timestamp_ms, s.face_present, s.raw);
  }
}

calibration::GazeMap ServiceCore::finish_calibration(const Principal& who) {
  std::lock_guard lock(calib_mu_);
  auto it = calibrations_.find(who.user_id);
  if (it == calibrations_.end()) throw Error(ErrorCode::InvalidArgument, "no calibration run in progress");
  const calibration::GazeMap map = it->second.fit();  // throws; run stays open for a retry
  const fs::path dst = gaze_map_path(who.user_id);
  const fs::path tmp = dst.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    calibration::write_gaze_map(map, out);
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "cannot write the gaze map");
  }
  fs::rename(tmp, dst);  // atomic replace: last writer wins
  calibrations_.erase(it);
  return map;
}

std::optional<calibration::GazeMap> ServiceCore::gaze_map(const std::string& user_id) const {
  std::ifstream in(gaze_map_path(user_id), std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  return calibration::parse_gaze_map(line);
}

}  // namespace focusplus::service
