#include "focusplus/records.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "focusplus/error.hpp"

namespace focusplus {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::string checked_id(const RecordLine& rec, std::string_view key) {
  const std::string& v = rec.at(key);
  if (!is_valid_identifier(v)) throw Error(ErrorCode::MalformedRecord, "invalid identifier for '" + std::string(key) + "'");
  return v;
}

void require_version(const RecordLine& rec) {
  if (rec.has("v") && parse_int(rec.at("v")) != kRecordVersion) {
    throw Error(ErrorCode::FormatVersionMismatch, "record version " + rec.at("v"));
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::MalformedRecord, "bad real '" + std::string(text) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::MalformedRecord, "bad integer '" + std::string(text) + "'");
  }
  return v;
}

RecordLine RecordLine::parse(std::string_view line) {
  line = trim(line);
  RecordLine rec;
  std::size_t pos = 0;
  bool first = true;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view tok = line.substr(pos, end - pos);
    pos = end + 1;
    if (tok.empty()) continue;
    if (first) {
      rec.tag = std::string(tok);
      first = false;
      continue;
    }
    auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(ErrorCode::MalformedRecord, "expected key=value, got '" + std::string(tok) + "'");
    }
    rec.fields.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
  }
  if (rec.tag.empty()) throw Error(ErrorCode::MalformedRecord, "empty record");
  return rec;
}

const std::string& RecordLine::at(std::string_view key) const {
  auto it = fields.find(key);
  if (it == fields.end()) throw Error(ErrorCode::MalformedRecord, "'" + tag + "' record lacks '" + std::string(key) + "'");
  return it->second;
}

std::string serialize_meta(const SessionMeta& meta) {
  return "meta v=1 session=" + meta.session_id + " user=" + meta.user_id + " course=" + meta.course_type +
         " kind=" + std::string(session_kind_name(meta.session_kind)) + " started=" + meta.started_at +
         " landmarks=" + std::to_string(meta.landmark_count);
}

SessionMeta parse_meta(std::string_view line) {
  RecordLine rec = RecordLine::parse(line);
  if (rec.tag != "meta") throw Error(ErrorCode::MalformedHeader, "expected meta record, got '" + rec.tag + "'");
  require_version(rec);
  SessionMeta meta;
  meta.session_id = checked_id(rec, "session");
  meta.user_id = checked_id(rec, "user");
  meta.course_type = checked_id(rec, "course");
  meta.session_kind = parse_session_kind(rec.at("kind"));
  meta.started_at = checked_id(rec, "started");
  std::int64_t n = parse_int(rec.at("landmarks"));
  if (n <= 0) throw Error(ErrorCode::MalformedHeader, "landmark count must be positive");
  meta.landmark_count = static_cast<std::size_t>(n);
  return meta;
}

std::string serialize_packet(const MetricPacket& p) {
  return "pkt v=1 session=" + p.session_id + " user=" + p.user_id + " t=" + std::to_string(p.timestamp_ms) +
         " emotion=" + std::string(emotion_name(p.emotion_label)) + " level=" + format_double(p.anomaly_level) +
         " face=" + (p.face_present ? "1" : "0");
}

MetricPacket parse_packet(std::string_view line) {
  RecordLine rec;
  try {
    rec = RecordLine::parse(line);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
  if (rec.tag != "pkt") throw Error(ErrorCode::SchemaViolation, "expected pkt record, got '" + rec.tag + "'");
  if (rec.has("v")) require_version(rec);
  MetricPacket p;
  try {
    require_version(rec);
    p.session_id = rec.at("session");
    p.user_id = rec.at("user");
    p.timestamp_ms = parse_int(rec.at("t"));
    p.emotion_label = parse_emotion(rec.at("emotion"));
    p.anomaly_level = parse_double(rec.at("level"));
    const std::string& face = rec.at("face");
    if (face != "0" && face != "1") throw Error(ErrorCode::MalformedRecord, "face must be 0 or 1");
    p.face_present = face == "1";
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
  validate_packet(p);
  return p;
}

std::string serialize_event(const SessionEvent& e) {
  return "event t=" + std::to_string(e.timestamp_ms) + " end=" + std::to_string(e.end_ms) + " kind=" + e.kind;
}

SessionEvent parse_event(std::string_view line) {
  RecordLine rec = RecordLine::parse(line);
  if (rec.tag != "event") throw Error(ErrorCode::MalformedRecord, "expected event record");
  SessionEvent e;
  e.timestamp_ms = parse_int(rec.at("t"));
  e.end_ms = rec.has("end") ? parse_int(rec.at("end")) : e.timestamp_ms;
  e.kind = checked_id(rec, "kind");
  if (e.end_ms < e.timestamp_ms) throw Error(ErrorCode::MalformedRecord, "event ends before it starts");
  return e;
}

void write_session_record(std::ostream& out, const SessionRecord& record) {
  validate_record(record);
  out << "FPSR " << kRecordVersion << '\n' << serialize_meta(record.meta) << '\n';
  for (const auto& e : record.events) out << serialize_event(e) << '\n';
  if (record.quiz_score || record.self_report_distraction || record.perceived_accuracy) {
    out << "survey";
    if (record.quiz_score) out << " quiz=" << *record.quiz_score;
    if (record.self_report_distraction) out << " distraction=" << *record.self_report_distraction;
    if (record.perceived_accuracy) out << " accuracy=" << *record.perceived_accuracy;
    out << '\n';
  }
  for (const auto& p : record.packets) out << serialize_packet(p) << '\n';
}

SessionRecord read_session_record(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "empty session record");
  std::string_view magic = trim(line);
  if (magic.substr(0, 5) != "FPSR ") throw Error(ErrorCode::MalformedHeader, "not a session record");
  if (magic != "FPSR 1") throw Error(ErrorCode::FormatVersionMismatch, "session record version " + std::string(magic.substr(5)));
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "missing meta record");
  SessionRecord record;
  record.meta = parse_meta(line);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      RecordLine rec = RecordLine::parse(line);
      if (rec.tag == "pkt") {
        record.packets.push_back(parse_packet(line));
      } else if (rec.tag == "event") {
        record.events.push_back(parse_event(line));
      } else if (rec.tag == "survey") {
        if (rec.has("quiz")) record.quiz_score = static_cast<int>(parse_int(rec.at("quiz")));
        if (rec.has("distraction")) record.self_report_distraction = static_cast<int>(parse_int(rec.at("distraction")));
        if (rec.has("accuracy")) record.perceived_accuracy = static_cast<int>(parse_int(rec.at("accuracy")));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_record(record);
  return record;
}

}  // namespace focusplus
