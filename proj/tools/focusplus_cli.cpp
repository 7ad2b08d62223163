// focusplus: generate synthetic sessions, train, replay/score streams, build
// reports and run the class service.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "focusplus/error.hpp"
#include "focusplus/pipeline.hpp"
#include "focusplus/records.hpp"
#include "focusplus/server.hpp"
#include "focusplus/stats.hpp"
#include "focusplus/stream.hpp"
#include "focusplus/synth.hpp"

#ifndef FOCUSPLUS_DATA_DIR
#define FOCUSPLUS_DATA_DIR "data"
#endif

using namespace focusplus;

namespace {

std::atomic<bool> g_stop{false};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

std::vector<std::int64_t> parse_ms_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(static_cast<std::int64_t>(parse_double(item) * 1000.0));
  }
  return out;
}

struct ModelOptions {
  std::string template_path = std::string(FOCUSPLUS_DATA_DIR) + "/canonical_face_v1.txt";
  std::string weights;
  std::uint64_t emotion_seed = 1;
  std::string gaze_map;
};

std::shared_ptr<const emotion::MlpModel> load_classifier(const ModelOptions& o, const CanonicalFaceTemplate& tmpl) {
  if (!o.weights.empty()) {
    auto in = open_in(o.weights);
    return std::make_shared<const emotion::MlpModel>(emotion::load_weights(in));
  }
  std::cerr << "no --weights given; fitting the surrogate expression classifier (seed " << o.emotion_seed << ")\n";
  return std::make_shared<const emotion::MlpModel>(synth::train_surrogate_classifier(tmpl, o.emotion_seed));
}

std::optional<calibration::GazeMap> load_gaze_map(const std::string& path) {
  if (path.empty()) return std::nullopt;
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  return calibration::parse_gaze_map(line);
}

// Wraps a StreamReader so errors carry the file name and line.
FrameSource reader_source(io::StreamReader& reader, const std::string& path) {
  return [&reader, path]() -> std::optional<LandmarkFrame> {
    try {
      return reader.next();
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Focus+ learner-distraction engine"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic FS / DAS / MWS landmark stream");
  std::string g_kind = "FS", g_out, g_notes, g_template = std::string(FOCUSPLUS_DATA_DIR) + "/canonical_face_v1.txt";
  std::uint64_t g_seed = 1, g_user = 1;
  double g_duration = 600.0, g_fps = 10.0;
  std::string g_session, g_userid, g_course = "lecture";
  synth::Dynamics dyn;
  gen->add_option("--kind", g_kind, "FS, DAS or MWS")->check(CLI::IsMember({"FS", "DAS", "MWS"}));
  gen->add_option("--seed", g_seed, "Session seed");
  gen->add_option("--user-seed", g_user, "Face shape / camera seed (share across one user's sessions)");
  gen->add_option("--duration", g_duration, "Seconds");
  gen->add_option("--fps", g_fps, "Frames per second");
  gen->add_option("--notifications", g_notes, "DAS notification times in seconds, comma separated (default: one per minute)");
  gen->add_option("--session-id", g_session);
  gen->add_option("--user-id", g_userid);
  gen->add_option("--course", g_course);
  gen->add_option("--head-turn", dyn.head_turn_deg, "DAS head-turn amplitude (deg)");
  gen->add_option("--gaze-drift", dyn.gaze_drift, "MWS gaze-drift amplitude");
  gen->add_option("--blink-rate", dyn.blink_rate_hz, "Blinks per second");
  gen->add_option("--no-face-rate", dyn.no_face_rate_hz, "Face dropouts per second (DAS / MWS)");
  gen->add_option("--template", g_template);
  gen->add_option("-o,--out", g_out, "Output stream file")->required();

  // train
  auto* train = app.add_subcommand("train", "Fit the surrogate expression classifier and write its weights");
  std::string t_out, t_template = std::string(FOCUSPLUS_DATA_DIR) + "/canonical_face_v1.txt";
  std::uint64_t t_seed = 1;
  train->add_option("--seed", t_seed);
  train->add_option("--template", t_template);
  train->add_option("-o,--out", t_out, "Weights file")->required();

  // replay / score share most options
  ModelOptions mo;
  PipelineConfig pc;
  std::string r_stream, r_bundle_in, r_bundle_out, r_packets, r_record, r_log, r_gamma = "median";
  double r_train_window = 0.0;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--stream", r_stream, "Landmark stream file")->required();
    c->add_option("--template", mo.template_path);
    c->add_option("--weights", mo.weights, "Emotion classifier weights");
    c->add_option("--emotion-seed", mo.emotion_seed, "Seed of the surrogate classifier when no weights are given");
    c->add_option("--packets-out", r_packets, "MetricPacket lines");
    c->add_option("--record-out", r_record, "SessionRecord file");
    c->add_option("--focus-log", r_log, "Focus-log CSV");
  };
  auto* replay = app.add_subcommand("replay", "Run the full pipeline over a stream (optionally training first)");
  add_common(replay);
  replay->add_option("--bundle", r_bundle_in, "Trained model bundle");
  replay->add_option("--train-window", r_train_window, "Train on the first N seconds of the stream");
  replay->add_option("--bundle-out", r_bundle_out, "Where to write the trained bundle");
  replay->add_option("--gaze-map", mo.gaze_map, "Calibrated gaze map record");
  replay->add_option("--nu", pc.focus.nu);
  replay->add_option("--gamma", r_gamma, "'median' or a fixed RBF gamma");
  replay->add_option("--kernel", pc.focus.kernel, "")->transform(
      CLI::CheckedTransformer(std::map<std::string, KernelSpec::Type>{{"rbf", KernelSpec::Type::Rbf}, {"linear", KernelSpec::Type::Linear}}));
  replay->add_option("--k", pc.features.pca_components, "PCA components");
  replay->add_option("--lambda", pc.lambda, "EWMA smoothing factor");
  replay->add_option("--min-frames", pc.focus.min_frames);
  auto* score = app.add_subcommand("score", "Score a stream with an existing model bundle");
  add_common(score);
  score->add_option("--bundle", r_bundle_in, "Trained model bundle")->required();

  // report
  auto* report = app.add_subcommand("report", "Statistics over session records");
  std::vector<std::string> p_records;
  std::string p_json, p_csv;
  double p_alpha = 0.05;
  std::int64_t p_window = 2000;
  report->add_option("records", p_records, "SessionRecord files")->required();
  report->add_option("--json", p_json, "Machine-readable report");
  report->add_option("--csv", p_csv, "Per-session aggregates");
  report->add_option("--alpha", p_alpha, "Scheffe alpha");
  report->add_option("--event-window", p_window, "Event-lock window (ms)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the class service (HTTP + WebSocket)");
  std::string s_addr = "127.0.0.1", s_data, s_tokens;
  unsigned short s_port = 8080;
  int s_threads = 2;
  serve->add_option("--address", s_addr);
  serve->add_option("--port", s_port);
  serve->add_option("--threads", s_threads);
  serve->add_option("--data-dir", s_data)->required();
  serve->add_option("--tokens", s_tokens, "Token file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const auto tmpl = CanonicalFaceTemplate::load(g_template);
      synth::SyntheticSessionSpec spec = synth::SyntheticSessionSpec::defaults(parse_session_kind(g_kind), g_seed, g_user);
      spec.duration_s = g_duration;
      spec.fps = g_fps;
      spec.dynamics = dyn;
      spec.session_id = g_session;
      spec.user_id = g_userid;
      spec.course_type = g_course;
      if (spec.kind == SessionKind::DAS) {
        spec.notifications_ms = g_notes.empty() ? synth::default_notification_schedule(g_duration, g_seed) : parse_ms_list(g_notes);
      }
      auto out = open_out(g_out);
      const auto events = synth::generate_session(spec, tmpl, out);
      std::cout << "wrote " << spec.frame_count() << " frames, " << events.size() << " events to " << g_out << '\n';
      for (const auto& e : events) std::cout << "  " << serialize_event(e) << '\n';
      return 0;
    }
    if (train->parsed()) {
      const auto tmpl = CanonicalFaceTemplate::load(t_template);
      double acc = 0.0;
      const auto model = synth::train_surrogate_classifier(tmpl, t_seed, &acc);
      auto out = open_out(t_out);
      emotion::save_weights(model, out);
      std::cout << "training accuracy " << format_double(acc) << ", weights written to " << t_out << '\n';
      return 0;
    }
    if (replay->parsed() || score->parsed()) {
      const auto tmpl = CanonicalFaceTemplate::load(mo.template_path);
      ModelBundle bundle;
      std::shared_ptr<const emotion::MlpModel> classifier;
      std::optional<calibration::GazeMap> gaze = load_gaze_map(mo.gaze_map);
      if (!r_bundle_in.empty()) {
        bundle = load_bundle(r_bundle_in);
        classifier = bundle.emotion;
        if (!gaze) gaze = bundle.gaze_map;
      } else {
        if (!(r_train_window > 0.0)) throw Error(ErrorCode::InvalidArgument, "give --bundle or --train-window");
        classifier = load_classifier(mo, tmpl);
      }
      FrameAnalyzer analyzer(tmpl, classifier, gaze);
      if (r_train_window > 0.0) {
        pc.focus.window_seconds = r_train_window;
        pc.features.landmark_count = tmpl.landmark_count();
        if (r_gamma == "median") {
          pc.focus.gamma_policy = anomaly::GammaPolicy::MedianHeuristic;
        } else {
          pc.focus.gamma_policy = anomaly::GammaPolicy::Fixed;
          pc.focus.fixed_gamma = parse_double(r_gamma);
        }
        auto in = open_in(r_stream);
        io::StreamReader reader(in);
        bundle = train_bundle(reader_source(reader, r_stream), reader.meta(), analyzer, pc);
        bundle.emotion = classifier;
        bundle.gaze_map = gaze;
        std::cout << "focus window: " << bundle.stats.frames_in_window << " frames, " << bundle.stats.usable_frames
                  << " used for training, " << bundle.stats.no_face_frames << " without a face\n"
                  << "support vectors: " << bundle.detector->svm.alphas.size()
                  << ", gamma " << format_double(bundle.detector->svm.kernel.gamma) << '\n';
        if (!r_bundle_out.empty()) {
          save_bundle(bundle, r_bundle_out);
          std::cout << "bundle written to " << r_bundle_out << '\n';
        }
      }
      auto in = open_in(r_stream);
      io::StreamReader reader(in);
      const auto t1 = std::chrono::steady_clock::now();
      const ScoredSession s = score_stream(reader_source(reader, r_stream), reader.meta(), reader.events(), bundle, analyzer);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
      double mean = 0.0;
      for (const auto& f : s.frames) mean += f.smoothed_level;
      mean = s.frames.empty() ? 0.0 : mean / static_cast<double>(s.frames.size());
      std::cout << "session " << s.record.meta.session_id << " (" << session_kind_name(s.record.meta.session_kind)
                << "): " << s.frames.size() << " frames, mean smoothed anomaly " << format_double(mean)
                << ", gaze " << (analyzer.gaze_calibrated() ? "calibrated" : "uncalibrated") << ", "
                << static_cast<long long>(secs > 0 ? static_cast<double>(s.frames.size()) / secs : 0.0)
                << " frames/s scoring\n";
      if (!r_packets.empty()) {
        auto out = open_out(r_packets);
        for (const auto& p : s.record.packets) out << serialize_packet(p) << '\n';
      }
      if (!r_record.empty()) {
        auto out = open_out(r_record);
        write_session_record(out, s.record);
      }
      if (!r_log.empty()) {
        auto out = open_out(r_log);
        write_focus_log(out, s.frames);
      }
      return 0;
    }
    if (report->parsed()) {
      std::vector<SessionRecord> records;
      for (const auto& path : p_records) {
        auto in = open_in(path);
        try {
          records.push_back(read_session_record(in));
        } catch (const Error& e) {
          throw Error(e.code(), path + ": " + e.what());
        }
      }
      const auto rep = stats::session_report(records, {p_alpha, p_window});
      stats::write_report_text(std::cout, rep);
      if (!p_json.empty()) open_out(p_json) << stats::report_json(rep) << '\n';
      if (!p_csv.empty()) {
        auto out = open_out(p_csv);
        stats::write_report_csv(out, rep);
      }
      return 0;
    }
    if (serve->parsed()) {
      service::ServiceConfig cfg;
      cfg.data_dir = s_data;
      auto tin = open_in(s_tokens);
      cfg.tokens = service::parse_tokens(tin);
      service::ServiceCore core(cfg);
      service::Server server(core, s_addr, s_port, s_threads);
      server.start();
      std::cout << "listening on " << s_addr << ':' << server.port() << std::endl;
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      server.stop();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
