#pragma once

// Line-delimited text records shared by stream files, session records and the
// service wire protocol. Every record is one line: a tag followed by
// space-separated key=value fields. Readers ignore unknown keys; writers emit
// only the documented ones, in the documented order.
//
//   meta  v=1 session=<id> user=<id> course=<id> kind=FS|DAS|MWS|LIVE started=<id> landmarks=<n>
//   pkt   v=1 session=<id> user=<id> t=<ms> emotion=<label> level=<real> face=0|1
//   event t=<ms> end=<ms> kind=<id>
//   survey [quiz=<0..10>] [distraction=<1..7>] [accuracy=<1..7>]
//
// Reals use the shortest representation that round-trips exactly.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "focusplus/types.hpp"

namespace focusplus {

inline constexpr int kRecordVersion = 1;

std::string format_double(double value);
/// Throws MalformedRecord.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// A parsed `tag key=value ...` line.
struct RecordLine {
  std::string tag;
  std::map<std::string, std::string, std::less<>> fields;

  static RecordLine parse(std::string_view line);
  /// Throws MalformedRecord if the key is missing.
  const std::string& at(std::string_view key) const;
  bool has(std::string_view key) const { return fields.find(key) != fields.end(); }
};

std::string serialize_meta(const SessionMeta& meta);
SessionMeta parse_meta(std::string_view line);

std::string serialize_packet(const MetricPacket& packet);
/// Throws SchemaViolation on semantic violations, MalformedRecord on syntax.
MetricPacket parse_packet(std::string_view line);

std::string serialize_event(const SessionEvent& event);
SessionEvent parse_event(std::string_view line);

void write_session_record(std::ostream& out, const SessionRecord& record);
SessionRecord read_session_record(std::istream& in);

}  // namespace focusplus
