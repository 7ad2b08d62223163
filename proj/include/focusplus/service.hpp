#pragma once

// Server-side state: live class dashboard, durable focus logs, static-token
// authorization and calibration runs. Transport independent; the HTTP /
// WebSocket front end lives in server.hpp.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "focusplus/calibration.hpp"
#include "focusplus/error.hpp"
#include "focusplus/stats.hpp"
#include "focusplus/types.hpp"

namespace focusplus::service {

/// Milliseconds on a monotonic wall clock; injectable for tests.
using Clock = std::function<std::int64_t()>;
Clock steady_clock_ms();

enum class Role { Student, Teacher };

struct Principal {
  Role role = Role::Student;
  std::string user_id;  // students: their own id; teachers: informational
  std::string class_id;
};

/// Token file: one `token t=<token> role=student|teacher user=<id> class=<id>` record per line.
std::map<std::string, Principal> parse_tokens(std::istream& in);

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::map<std::string, Principal> tokens;
  std::int64_t reorder_window_ms = 5000;
  std::int64_t stale_after_ms = 5000;
  std::int64_t rolling_window_ms = 60000;
};

/// Append-only per-(user, session) logs. Each session is one file of line
/// records (meta, pkt, survey) written in arrival order and flushed per append;
/// reads return packets sorted by timestamp.
class FocusLogStore {
 public:
  explicit FocusLogStore(std::filesystem::path dir);

  /// Creates the session file if new; re-registering identical metadata is a no-op.
  /// Throws SchemaViolation if the session exists with different metadata.
  void register_session(const SessionMeta& meta);
  bool has_session(const std::string& user_id, const std::string& session_id) const;
  /// Returns false for duplicates (same session and timestamp); throws UnknownSession.
  bool append(const MetricPacket& packet);
  void set_survey(const std::string& user_id, const std::string& session_id, std::optional<int> quiz,
                  std::optional<int> distraction, std::optional<int> accuracy);
  /// Throws UnknownSession.
  SessionRecord read(const std::string& user_id, const std::string& session_id) const;
  std::vector<SessionMeta> sessions_of(const std::string& user_id) const;
  std::vector<SessionMeta> all_sessions() const;
  /// Largest stored packet timestamp, -1 when empty.
  std::int64_t newest_timestamp(const std::string& user_id, const std::string& session_id) const;
  std::filesystem::path file_of(const std::string& user_id, const std::string& session_id) const;

 private:
  struct Entry {
    SessionMeta meta;
    std::set<std::int64_t> seen;
    std::unique_ptr<std::mutex> mu = std::make_unique<std::mutex>();
  };
  Entry& entry(const std::string& user_id, const std::string& session_id);
  const Entry& entry(const std::string& user_id, const std::string& session_id) const;
  void append_line(const Entry& e, const std::string& line);

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<std::pair<std::string, std::string>, Entry> entries_;
};

enum class ConnectionStatus { Connected, Stale, Disconnected };
std::string_view connection_status_name(ConnectionStatus s) noexcept;

struct StudentSnapshot {
  std::string user_id;
  std::string session_id;
  EmotionLabel latest_emotion = EmotionLabel::NoFace;
  double latest_level = 0.0;
  double rolling_mean = 0.0;
  std::int64_t latest_timestamp_ms = 0;
  ConnectionStatus status = ConnectionStatus::Disconnected;
  std::uint64_t packets_accepted = 0;
  std::uint64_t packets_duplicate = 0;
  std::uint64_t packets_rejected = 0;
};

struct ClassSnapshot {
  std::string class_id;
  std::vector<StudentSnapshot> students;  // sorted by user id
};

std::string snapshot_json(const ClassSnapshot& snapshot);

enum class IngestStatus { Accepted, Duplicate };

struct IngestAck {
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  IngestStatus status = IngestStatus::Accepted;
};

/// `ack v=1 session=<id> t=<ms> status=accepted|duplicate`
std::string serialize_ack(const IngestAck& ack);
IngestAck parse_ack(std::string_view line);
/// `error v=1 code=<ErrorCode> t=<ms>` (t only when tied to a packet)
std::string serialize_error(ErrorCode code, std::optional<std::int64_t> timestamp_ms = std::nullopt);

/// `calsample t=<ms> target=<i> face=0|1 gx=<r> gy=<r>`
std::string serialize_calibration_sample(const calibration::CalibrationSample& s);
calibration::CalibrationSample parse_calibration_sample(std::string_view line);
/// `plan v=1 dwell=<ms> settle=<ms> targets=<n>` then `target i=<i> u=<r> v=<r>` per target.
std::string serialize_plan(const calibration::CalibrationPlan& plan);
calibration::CalibrationPlan parse_plan(std::istream& in);

class ServiceCore {
 public:
  explicit ServiceCore(ServiceConfig config, Clock clock = steady_clock_ms());

  /// Throws Unauthorized for unknown tokens.
  const Principal& authenticate(const std::string& token) const;

  /// Students register their own sessions in their class. Throws Unauthorized / SchemaViolation.
  void register_session(const Principal& who, const SessionMeta& meta);
  /// Throws UnknownSession, SchemaViolation, OutOfOrderPacket (older than the
  /// session's newest packet by more than the reordering window), Unauthorized.
  IngestAck ingest(const Principal& who, const MetricPacket& packet);
  /// Marks a session's channel closed; status stays Disconnected until its next packet.
  void disconnect(const std::string& user_id, const std::string& session_id);

  /// Throws UnknownClass / Unauthorized (teachers of the class only).
  ClassSnapshot dashboard_snapshot(const Principal& who, const std::string& class_id) const;
  ClassSnapshot dashboard_snapshot(const std::string& class_id) const;

  /// Students read their own logs, teachers those of their class. Throws UnknownSession / Unauthorized.
  SessionRecord fetch_focus_log(const Principal& who, const std::string& user_id, const std::string& session_id) const;
  void submit_survey(const Principal& who, const std::string& session_id, std::optional<int> quiz,
                     std::optional<int> distraction, std::optional<int> accuracy);
  /// Report over every stored session of `user_id`.
  stats::SessionReport report(const Principal& who, const std::string& user_id) const;

  /// Starts (or restarts) the calling student's calibration run.
  calibration::CalibrationPlan start_calibration(const Principal& who);
  void add_calibration_samples(const Principal& who, const std::vector<calibration::CalibrationSample>& samples);
  /// Fits and persists the map (replacing any previous one). On failure nothing
  /// is persisted and the run stays open so the client can add samples and retry.
  calibration::GazeMap finish_calibration(const Principal& who);
  std::optional<calibration::GazeMap> gaze_map(const std::string& user_id) const;

  const FocusLogStore& store() const noexcept { return store_; }
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Live {
    std::string class_id;
    std::string user_id;
    std::string session_id;
    std::optional<MetricPacket> latest;
    std::deque<std::pair<std::int64_t, double>> window;  // (timestamp, level) within the rolling window
    double window_sum = 0.0;
    std::int64_t last_seen_wall = 0;
    bool closed = false;
    std::int64_t newest = -1;  // largest accepted timestamp
    std::uint64_t accepted = 0, duplicate = 0, rejected = 0;
    std::mutex mu;
  };
  Live& live_of(const Principal& who, const std::string& session_id) const;
  bool class_exists(const std::string& class_id) const;
  std::filesystem::path gaze_map_path(const std::string& user_id) const;

  ServiceConfig config_;
  Clock clock_;
  FocusLogStore store_;
  mutable std::shared_mutex live_mu_;
  mutable std::map<std::pair<std::string, std::string>, std::unique_ptr<Live>> live_;
  mutable std::mutex calib_mu_;
  std::map<std::string, calibration::CalibrationSession> calibrations_;
};

}  // namespace focusplus::service
