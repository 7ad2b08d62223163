#pragma once

// Landmark stream files:
//
//   FPLS 1
//   meta v=1 session=<id> user=<id> course=<id> kind=<kind> started=<id> landmarks=<n>
//   event t=<ms> end=<ms> kind=<id>          (zero or more, before any frame)
//   f <t_ms> 1 <x0> <y0> <z0> <x1> ...       (3n reals, landmark order)
//   f <t_ms> 0                               (no face)
//
// Reals use the shortest exact round-trip representation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focusplus/types.hpp"

namespace focusplus::io {

inline constexpr int kStreamVersion = 1;

class StreamWriter {
 public:
  StreamWriter(std::ostream& out, const SessionMeta& meta, std::span<const SessionEvent> events = {});
  /// Validates the frame and timestamp ordering before writing.
  void write(const LandmarkFrame& frame);
  std::size_t frames_written() const noexcept { return frames_; }

 private:
  std::ostream& out_;
  SessionMeta meta_;
  std::int64_t last_ts_ = 0;
  std::size_t frames_ = 0;
  std::string buf_;
};

/// Pull parser; holds one frame at a time.
class StreamReader {
 public:
  /// Reads the header. Throws MalformedHeader / FormatVersionMismatch.
  explicit StreamReader(std::istream& in);

  const SessionMeta& meta() const noexcept { return meta_; }
  const std::vector<SessionEvent>& events() const noexcept { return events_; }
  /// Next frame, or nullopt at end of stream. Throws FrameCountMismatch,
  /// NonMonotoneTimestamp or MalformedRecord with the line number in the message.
  std::optional<LandmarkFrame> next();
  std::size_t line_number() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  SessionMeta meta_;
  std::vector<SessionEvent> events_;
  std::string line_;
  bool pending_ = false;  // line_ holds the first frame line read while scanning the header
  std::size_t line_no_ = 0;
  std::int64_t last_ts_ = -1;
};

void write_stream(std::ostream& out, const SessionMeta& meta, std::span<const LandmarkFrame> frames,
                  std::span<const SessionEvent> events = {});

struct LoadedStream {
  SessionMeta meta;
  std::vector<SessionEvent> events;
  std::vector<LandmarkFrame> frames;
};
LoadedStream read_stream(std::istream& in);

}  // namespace focusplus::io
