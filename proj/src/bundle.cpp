#include "focusplus/bundle.hpp"

#include <fstream>
#include <sstream>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus {

namespace {

void write_section(std::ostream& out, const char* name, const std::string& body) {
  out << "section name=" << name << " bytes=" << body.size() << '\n' << body;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    const std::size_t e = s.find(',', b);
    out.push_back(s.substr(b, e == std::string::npos ? std::string::npos : e - b));
    if (e == std::string::npos) break;
    b = e + 1;
  }
  return out;
}

void write_values(std::ostream& out, const char* tag, const std::vector<double>& v) {
  out << tag;
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

std::vector<double> read_values(std::istream& in, const char* tag, std::size_t n) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, std::string("missing scaler ") + tag);
  std::istringstream ls(line);
  std::string word;
  ls >> word;
  if (word != tag) throw Error(ErrorCode::MalformedRecord, std::string("expected scaler ") + tag);
  std::vector<double> v;
  while (ls >> word) v.push_back(parse_double(word));
  if (v.size() != n) throw Error(ErrorCode::MalformedRecord, std::string("scaler ") + tag + " has wrong length");
  return v;
}

}  // namespace

void write_scaler(const anomaly::FeatureScaler& scaler, std::ostream& out) {
  out << "scaler dim=" << scaler.mean.size() << '\n';
  write_values(out, "mean", scaler.mean);
  write_values(out, "scale", scaler.scale);
}

anomaly::FeatureScaler read_scaler(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "missing scaler header");
  const auto rec = RecordLine::parse(line);
  if (rec.tag != "scaler") throw Error(ErrorCode::MalformedRecord, "expected scaler header");
  const auto n = static_cast<std::size_t>(parse_int(rec.at("dim")));
  anomaly::FeatureScaler s;
  s.mean = read_values(in, "mean", n);
  s.scale = read_values(in, "scale", n);
  return s;
}

void write_bundle(const ModelBundle& b, std::ostream& out) {
  if (!b.detector || !b.emotion) throw Error(ErrorCode::ModelNotTrained, "bundle is missing a model");
  out << "FPBUNDLE " << kBundleVersion << '\n';
  out << "features landmarks=" << b.features.landmark_count << " k=" << b.features.pca_components
      << " courses=" << join(b.features.course_types) << '\n';
  out << "focus window=" << format_double(b.focus.window_seconds) << " min_frames=" << b.focus.min_frames
      << " nu=" << format_double(b.focus.nu) << " kernel=" << (b.focus.kernel == KernelSpec::Type::Rbf ? "rbf" : "linear")
      << " gamma_policy=" << (b.focus.gamma_policy == anomaly::GammaPolicy::Fixed ? "fixed" : "median")
      << " fixed_gamma=" << format_double(b.focus.fixed_gamma) << " standardize=" << (b.focus.standardize ? 1 : 0)
      << " lambda=" << format_double(b.lambda) << '\n';
  out << "stats frames=" << b.stats.frames_in_window << " usable=" << b.stats.usable_frames
      << " no_face=" << b.stats.no_face_frames << '\n';
  std::ostringstream s;
  emotion::save_weights(*b.emotion, s);
  write_section(out, "emotion", s.str());
  s.str("");
  pca::write_model(b.pca, s);
  write_section(out, "pca", s.str());
  s.str("");
  write_scaler(b.detector->scaler, s);
  write_section(out, "scaler", s.str());
  s.str("");
  anomaly::write_model(b.detector->svm, s);
  write_section(out, "ocsvm", s.str());
  if (b.gaze_map) {
    s.str("");
    calibration::write_gaze_map(*b.gaze_map, s);
    write_section(out, "gazemap", s.str());
  }
  out << "end\n";
}

ModelBundle read_bundle(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, std::string("bundle truncated before ") + what);
    ++line_no;
  };
  next_line("magic");
  if (line.rfind("FPBUNDLE ", 0) != 0) throw Error(ErrorCode::MalformedHeader, "not a model bundle");
  if (line != "FPBUNDLE 1") throw Error(ErrorCode::FormatVersionMismatch, "bundle version '" + line.substr(9) + "'");

  ModelBundle b;
  try {
    next_line("features");
    auto rec = RecordLine::parse(line);
    if (rec.tag != "features") throw Error(ErrorCode::MalformedHeader, "expected features record");
    b.features.landmark_count = static_cast<std::size_t>(parse_int(rec.at("landmarks")));
    b.features.pca_components = static_cast<std::size_t>(parse_int(rec.at("k")));
    b.features.course_types = split_commas(rec.at("courses"));

    next_line("focus");
    rec = RecordLine::parse(line);
    if (rec.tag != "focus") throw Error(ErrorCode::MalformedHeader, "expected focus record");
    b.focus.window_seconds = parse_double(rec.at("window"));
    b.focus.min_frames = static_cast<std::size_t>(parse_int(rec.at("min_frames")));
    b.focus.nu = parse_double(rec.at("nu"));
    b.focus.kernel = rec.at("kernel") == "linear" ? KernelSpec::Type::Linear : KernelSpec::Type::Rbf;
    b.focus.gamma_policy = rec.at("gamma_policy") == "fixed" ? anomaly::GammaPolicy::Fixed : anomaly::GammaPolicy::MedianHeuristic;
    b.focus.fixed_gamma = parse_double(rec.at("fixed_gamma"));
    b.focus.standardize = rec.at("standardize") == "1";
    b.lambda = parse_double(rec.at("lambda"));

    next_line("stats");
    rec = RecordLine::parse(line);
    if (rec.tag != "stats") throw Error(ErrorCode::MalformedHeader, "expected stats record");
    b.stats.frames_in_window = static_cast<std::size_t>(parse_int(rec.at("frames")));
    b.stats.usable_frames = static_cast<std::size_t>(parse_int(rec.at("usable")));
    b.stats.no_face_frames = static_cast<std::size_t>(parse_int(rec.at("no_face")));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedHeader) throw;
    throw Error(ErrorCode::MalformedHeader, "bundle line " + std::to_string(line_no) + ": " + e.what());
  }

  auto detector = std::make_shared<anomaly::Detector>();
  bool have_pca = false, have_scaler = false, have_svm = false;
  for (;;) {
    next_line("end");
    if (line == "end") break;
    const auto rec = RecordLine::parse(line);
    if (rec.tag != "section") throw Error(ErrorCode::MalformedRecord, "bundle line " + std::to_string(line_no) + ": expected a section");
    const auto bytes = parse_int(rec.at("bytes"));
    if (bytes < 0 || bytes > (std::int64_t{1} << 34)) throw Error(ErrorCode::MalformedRecord, "bad section size");
    std::string body(static_cast<std::size_t>(bytes), '\0');
    if (!in.read(body.data(), bytes)) throw Error(ErrorCode::MalformedRecord, "section " + rec.at("bytes") + " truncated");
    for (char c : body) line_no += c == '\n';
    std::istringstream s(body);
    const std::string& name = rec.at("name");
    if (name == "emotion") {
      b.emotion = std::make_shared<const emotion::MlpModel>(emotion::load_weights(s));
    } else if (name == "pca") {
      b.pca = pca::read_model(s);
      have_pca = true;
    } else if (name == "scaler") {
      detector->scaler = read_scaler(s);
      have_scaler = true;
    } else if (name == "ocsvm") {
      detector->svm = anomaly::read_model(s);
      have_svm = true;
    } else if (name == "gazemap") {
      std::string map_line;
      std::getline(s, map_line);
      b.gaze_map = calibration::parse_gaze_map(map_line);
    }  // unknown sections are skipped
  }
  if (!b.emotion || !have_pca || !have_scaler || !have_svm) {
    throw Error(ErrorCode::MalformedRecord, "bundle is missing a required section");
  }
  if (b.pca.components.cols() != 3 * b.features.landmark_count || b.pca.components.rows() != b.features.pca_components ||
      detector->svm.dimension() != b.features.dimension() ||
      (!detector->scaler.empty() && detector->scaler.mean.size() != b.features.dimension()) ||
      b.emotion->input_dim() != 3 * b.features.landmark_count) {
    throw Error(ErrorCode::DimensionMismatch, "bundle sections disagree on dimensions");
  }
  b.detector = detector;
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_bundle(bundle, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_bundle(in);
}

}  // namespace focusplus
