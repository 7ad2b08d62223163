#include "focusplus/stream.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus::io {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

// Splits off the next space-delimited token.
std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && rest[b] == ' ') ++b;
  std::size_t e = b;
  while (e < rest.size() && rest[e] != ' ' && rest[e] != '\r') ++e;
  std::string_view tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

}  // namespace

StreamWriter::StreamWriter(std::ostream& out, const SessionMeta& meta, std::span<const SessionEvent> events)
    : out_(out), meta_(meta) {
  out_ << "FPLS " << kStreamVersion << '\n' << serialize_meta(meta_) << '\n';
  for (const auto& e : events) out_ << serialize_event(e) << '\n';
}

void StreamWriter::write(const LandmarkFrame& frame) {
  validate_frame(frame, meta_.landmark_count);
  if (frames_ > 0 && frame.timestamp_ms < last_ts_) {
    throw Error(ErrorCode::NonMonotoneTimestamp, "timestamp " + std::to_string(frame.timestamp_ms) + " after " +
                                                     std::to_string(last_ts_));
  }
  buf_.clear();
  buf_ += "f ";
  buf_ += std::to_string(frame.timestamp_ms);
  buf_ += frame.face_present ? " 1" : " 0";
  for (const auto& p : frame.points) {
    for (double v : {p.x, p.y, p.z}) {
      buf_ += ' ';
      append_double(buf_, v);
    }
  }
  buf_ += '\n';
  out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  last_ts_ = frame.timestamp_ms;
  ++frames_;
}

StreamReader::StreamReader(std::istream& in) : in_(in) {
  if (!std::getline(in_, line_)) throw Error(ErrorCode::MalformedHeader, "empty stream");
  ++line_no_;
  if (!line_.empty() && line_.back() == '\r') line_.pop_back();
  if (line_.rfind("FPLS ", 0) != 0) throw Error(ErrorCode::MalformedHeader, "line 1: not a landmark stream");
  if (line_ != "FPLS 1") throw Error(ErrorCode::FormatVersionMismatch, "line 1: stream version '" + line_.substr(5) + "'");
  if (!std::getline(in_, line_)) throw Error(ErrorCode::MalformedHeader, "missing meta record");
  ++line_no_;
  try {
    meta_ = parse_meta(line_);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedHeader, "line 2: " + std::string(e.what()));
  }
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (line_.rfind("event ", 0) == 0) {
      try {
        events_.push_back(parse_event(line_));
      } catch (const Error& e) {
        throw Error(ErrorCode::MalformedHeader, "line " + std::to_string(line_no_) + ": " + e.what());
      }
      continue;
    }
    if (line_.empty()) continue;
    pending_ = true;
    break;
  }
}

std::optional<LandmarkFrame> StreamReader::next() {
  if (!pending_) {
    do {
      if (!std::getline(in_, line_)) return std::nullopt;
      ++line_no_;
    } while (line_.empty() || line_ == "\r");
  }
  pending_ = false;

  auto fail = [&](ErrorCode code, const std::string& what) -> Error {
    return Error(code, "line " + std::to_string(line_no_) + ": " + what);
  };
  std::string_view rest(line_);
  if (next_token(rest) != "f") throw fail(ErrorCode::MalformedRecord, "expected a frame record");

  LandmarkFrame frame;
  const std::string_view ts = next_token(rest);
  auto r = std::from_chars(ts.data(), ts.data() + ts.size(), frame.timestamp_ms);
  if (r.ec != std::errc() || r.ptr != ts.data() + ts.size()) throw fail(ErrorCode::MalformedRecord, "bad timestamp");
  if (frame.timestamp_ms < 0 || frame.timestamp_ms < last_ts_) {
    throw fail(ErrorCode::NonMonotoneTimestamp,
               "timestamp " + std::to_string(frame.timestamp_ms) + " after " + std::to_string(last_ts_));
  }
  const std::string_view face = next_token(rest);
  if (face != "0" && face != "1") throw fail(ErrorCode::MalformedRecord, "face flag must be 0 or 1");
  frame.face_present = face == "1";

  std::size_t count = 0;
  const std::size_t expected = frame.face_present ? 3 * meta_.landmark_count : 0;
  if (frame.face_present) frame.points.reserve(meta_.landmark_count);
  double xyz[3];
  for (std::string_view tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) throw fail(ErrorCode::MalformedRecord, "bad coordinate");
    if (count < expected) {
      xyz[count % 3] = v;
      if (count % 3 == 2) frame.points.push_back({xyz[0], xyz[1], xyz[2]});
    }
    ++count;
  }
  if (count != expected) {
    throw fail(ErrorCode::FrameCountMismatch,
               std::to_string(count) + " coordinates, expected " + std::to_string(expected));
  }
  last_ts_ = frame.timestamp_ms;
  return frame;
}

void write_stream(std::ostream& out, const SessionMeta& meta, std::span<const LandmarkFrame> frames,
                  std::span<const SessionEvent> events) {
  StreamWriter w(out, meta, events);
  for (const auto& f : frames) w.write(f);
}

LoadedStream read_stream(std::istream& in) {
  StreamReader r(in);
  LoadedStream s{r.meta(), r.events(), {}};
  while (auto f = r.next()) s.frames.push_back(std::move(*f));
  return s;
}

}  // namespace focusplus::io
