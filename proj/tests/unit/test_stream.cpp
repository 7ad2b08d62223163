#include <random>
#include <sstream>
#include <streambuf>

#include "doctest.h"
#include "expect.hpp"
#include "focusplus/records.hpp"
#include "focusplus/stream.hpp"
#include "oracles.hpp"

using namespace focusplus;
using oracle::thrown;

namespace {

SessionMeta meta(std::size_t landmarks) {
  SessionMeta m;
  m.session_id = "S1";
  m.user_id = "U1";
  m.session_kind = SessionKind::DAS;
  m.landmark_count = landmarks;
  return m;
}

LandmarkFrame random_frame(std::int64_t t, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LandmarkFrame f{t, true, {}};
  for (std::size_t i = 0; i < n; ++i) f.points.push_back({u(rng), u(rng), u(rng) - 0.5});
  return f;
}

std::string header(std::size_t landmarks) { return "FPLS 1\n" + serialize_meta(meta(landmarks)) + "\n"; }

// Produces a stream file line by line on demand, so the whole text never exists in memory.
class GeneratedStream : public std::streambuf {
 public:
  GeneratedStream(std::size_t frames, std::size_t landmarks) : frames_(frames), landmarks_(landmarks) {
    line_ = header(landmarks);
    setg(line_.data(), line_.data(), line_.data() + line_.size());
  }

 protected:
  int_type underflow() override {
    if (next_ >= frames_) return traits_type::eof();
    line_ = "f " + std::to_string(next_ * 100);
    if (next_ % 97 == 13) {
      line_ += " 0";
    } else {
      line_ += " 1";
      for (std::size_t i = 0; i < 3 * landmarks_; ++i) line_ += ' ' + format_double(0.001 * static_cast<double>((next_ + i) % 1000));
    }
    line_ += '\n';
    ++next_;
    setg(line_.data(), line_.data(), line_.data() + line_.size());
    return traits_type::to_int_type(line_[0]);
  }

 private:
  std::size_t frames_;
  std::size_t landmarks_;
  std::size_t next_ = 0;
  std::string line_;
};

}  // namespace

TEST_CASE("write then parse gives the identical frame sequence, meta and events") {
  std::mt19937_64 rng(1);
  std::vector<LandmarkFrame> frames;
  for (int i = 0; i < 50; ++i)
    frames.push_back(i % 7 == 3 ? LandmarkFrame::no_face(i * 100) : random_frame(i * 100, 478, rng));
  frames.push_back(random_frame(4900, 478, rng));  // repeated timestamp is allowed (non-decreasing)
  const std::vector<SessionEvent> events{{1000, "notification", 4000}, {3000, "notification", 3500}};
  std::stringstream ss;
  io::write_stream(ss, meta(478), frames, events);
  const auto loaded = io::read_stream(ss);
  CHECK(loaded.meta == meta(478));
  CHECK(loaded.events == events);
  CHECK(loaded.frames == frames);
}

TEST_CASE("frame with 7 coordinates when 3 x landmark_count = 1434") {
  std::stringstream ss(header(478) + "f 0 1 0.1 0.2 0.3 0.4 0.5 0.6 0.7\n");
  io::StreamReader reader(ss);
  CHECK(thrown([&] { reader.next(); }) == "FrameCountMismatch");
}

TEST_CASE("timestamps 0, 100, 50 are rejected as non-monotone") {
  std::stringstream ss(header(1) + "f 0 1 0 0 0\nf 100 1 0 0 0\nf 50 1 0 0 0\n");
  io::StreamReader reader(ss);
  CHECK(reader.next().has_value());
  CHECK(reader.next().has_value());
  try {
    reader.next();
    FAIL("expected NonMonotoneTimestamp");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotoneTimestamp);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("the writer refuses what the reader would reject") {
  std::stringstream ss;
  io::StreamWriter w(ss, meta(2));
  w.write({100, true, {{0, 0, 0}, {1, 1, 1}}});
  CHECK(thrown([&] { w.write({50, true, {{0, 0, 0}, {1, 1, 1}}}); }) == "NonMonotoneTimestamp");
  CHECK(thrown([&] { w.write({200, true, {{0, 0, 0}}}); }) == "FrameCountMismatch");
  CHECK(w.frames_written() == 1);
}

TEST_CASE("header and record errors") {
  std::stringstream empty("");
  CHECK(thrown([&] { io::StreamReader r(empty); }) == "MalformedHeader");
  std::stringstream wrong_magic("FOO 1\n");
  CHECK(thrown([&] { io::StreamReader r(wrong_magic); }) == "MalformedHeader");
  std::stringstream version("FPLS 2\n" + serialize_meta(meta(1)) + "\n");
  CHECK(thrown([&] { io::StreamReader r(version); }) == "FormatVersionMismatch");
  std::stringstream no_meta("FPLS 1\nf 0 0\n");
  CHECK(thrown([&] { io::StreamReader r(no_meta); }) == "MalformedHeader");
  std::stringstream bad_number(header(1) + "f 0 1 0 zero 0\n");
  io::StreamReader r(bad_number);
  CHECK(thrown([&] { r.next(); }) == "MalformedRecord");
  std::stringstream bad_flag(header(1) + "f 0 2\n");
  io::StreamReader r2(bad_flag);
  CHECK(thrown([&] { r2.next(); }) != "none");
  std::stringstream no_face_coords(header(1) + "f 0 0 1 2 3\n");
  io::StreamReader r3(no_face_coords);
  CHECK(thrown([&] { r3.next(); }) == "FrameCountMismatch");
}

TEST_CASE("a million-frame stream parses in bounded memory") {
  const std::size_t frames = 1000000, landmarks = 8;
  GeneratedStream source(frames, landmarks);
  std::istream in(&source);
  io::StreamReader reader(in);
  // Warm up so allocator and buffers reach their steady state before measuring.
  for (int i = 0; i < 1000; ++i) REQUIRE(reader.next().has_value());
  const long before = oracle::peak_rss_kb();
  std::size_t count = 1000, faces = 0;
  double checksum = 0.0;
  while (auto f = reader.next()) {
    ++count;
    if (f->face_present) {
      ++faces;
      checksum += f->points[landmarks - 1].z;
    }
  }
  const long grown_kb = oracle::peak_rss_kb() - before;
  CHECK(count == frames);
  CHECK(faces > 0);
  CHECK(checksum > 0.0);
  // Holding the frames would take > 190 MB (10^6 x 8 points x 24 bytes).
  MESSAGE("peak RSS growth while parsing: " << grown_kb << " kB");
  CHECK(grown_kb < 8 * 1024);
}
