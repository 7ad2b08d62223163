#include "focusplus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double x, double a, double b) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::NonConvergence, "incomplete beta continued fraction");
}

double gamma_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw Error(ErrorCode::NonConvergence, "incomplete gamma series");
}

// Q(a, x) by Lentz continued fraction.
double gamma_cf(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw Error(ErrorCode::NonConvergence, "incomplete gamma continued fraction");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive");
}

struct GroupMoments {
  std::vector<double> means;
  std::vector<std::size_t> sizes;
  double grand_mean = 0.0;
  std::size_t total = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
};

GroupMoments moments(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 groups");
  GroupMoments m;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::InsufficientData, "every group needs at least 2 observations");
    double s = 0.0;
    for (double v : g) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite observation");
      s += v;
    }
    m.means.push_back(s / static_cast<double>(g.size()));
    m.sizes.push_back(g.size());
    grand_sum += s;
    m.total += g.size();
  }
  m.grand_mean = grand_sum / static_cast<double>(m.total);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double dm = m.means[i] - m.grand_mean;
    m.ss_between += static_cast<double>(m.sizes[i]) * dm * dm;
    for (double v : groups[i]) m.ss_within += (v - m.means[i]) * (v - m.means[i]);
  }
  if (!(m.ss_within > 0.0)) throw Error(ErrorCode::ZeroWithinVariance, "all groups are constant; F is undefined");
  return m;
}

}  // namespace

double regularized_beta(double x, double a, double b) {
  require_positive(a, "a");
  require_positive(b, "b");
  if (std::isnan(x)) throw Error(ErrorCode::InvalidArgument, "x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
  return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double regularized_gamma_p(double a, double x) {
  require_positive(a, "a");
  if (std::isnan(x)) throw Error(ErrorCode::InvalidArgument, "x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_series(a, x) : 1.0 - gamma_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  require_positive(a, "a");
  if (std::isnan(x)) throw Error(ErrorCode::InvalidArgument, "x is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_series(a, x) : gamma_cf(a, x);
}

double f_cdf(double f, double df1, double df2) {
  require_positive(df1, "df1");
  require_positive(df2, "df2");
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return regularized_beta(df1 * f / (df1 * f + df2), 0.5 * df1, 0.5 * df2);
}

double f_sf(double f, double df1, double df2) {
  require_positive(df1, "df1");
  require_positive(df2, "df2");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return regularized_beta(df2 / (df2 + df1 * f), 0.5 * df2, 0.5 * df1);
}

double f_inv(double p, double df1, double df2) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "F quantile needs p in [0, 1)");
  if (p == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (f_cdf(hi, df1, df2) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) throw Error(ErrorCode::NonConvergence, "F quantile bracket");
  }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (f_cdf(mid, df1, df2) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double chi2_cdf(double x, double df) { return regularized_gamma_p(0.5 * df, 0.5 * x); }
double chi2_sf(double x, double df) { return regularized_gamma_q(0.5 * df, 0.5 * x); }

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  const GroupMoments m = moments(groups);
  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = m.total - groups.size();
  if (r.df_within == 0) throw Error(ErrorCode::InsufficientData, "no within-group degrees of freedom");
  r.group_means = m.means;
  r.group_sizes = m.sizes;
  r.ss_between = m.ss_between;
  r.ss_within = m.ss_within;
  r.ms_between = m.ss_between / static_cast<double>(r.df_between);
  r.ms_within = m.ss_within / static_cast<double>(r.df_within);
  r.f = r.ms_between / r.ms_within;
  r.p_value = std::clamp(f_sf(r.f, static_cast<double>(r.df_between), static_cast<double>(r.df_within)), 0.0, 1.0);
  return r;
}

ScheffeResult scheffe_posthoc(std::span<const std::vector<double>> groups, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1)");
  const AnovaResult a = one_way_anova(groups);
  ScheffeResult r;
  r.alpha = alpha;
  r.critical_value = static_cast<double>(a.df_between) *
                     f_inv(1.0 - alpha, static_cast<double>(a.df_between), static_cast<double>(a.df_within));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      ScheffePair p;
      p.i = i;
      p.j = j;
      p.mean_difference = a.group_means[i] - a.group_means[j];
      const double se2 = a.ms_within * (1.0 / static_cast<double>(a.group_sizes[i]) +
                                        1.0 / static_cast<double>(a.group_sizes[j]));
      p.statistic = p.mean_difference * p.mean_difference / se2;
      p.critical_value = r.critical_value;
      p.significant = p.statistic > p.critical_value;
      r.pairs.push_back(p);
    }
  }
  return r;
}

Chi2Result chi_squared_frequency(const std::vector<std::vector<double>>& observed) {
  const std::size_t rows = observed.size();
  if (rows < 2) throw Error(ErrorCode::DegenerateTable, "need at least 2 rows");
  const std::size_t cols = observed.front().size();
  if (cols < 2) throw Error(ErrorCode::DegenerateTable, "need at least 2 columns");
  std::vector<double> row_tot(rows, 0.0), col_tot(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (observed[i].size() != cols) throw Error(ErrorCode::DegenerateTable, "ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      const double o = observed[i][j];
      if (!(o >= 0.0) || !std::isfinite(o)) throw Error(ErrorCode::InvalidArgument, "counts must be finite and >= 0");
      row_tot[i] += o;
      col_tot[j] += o;
      total += o;
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (!(row_tot[i] > 0.0)) throw Error(ErrorCode::DegenerateTable, "row " + std::to_string(i) + " total is zero");
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (!(col_tot[j] > 0.0)) throw Error(ErrorCode::DegenerateTable, "column " + std::to_string(j) + " total is zero");
  }
  Chi2Result r;
  r.observed = observed;
  r.expected.assign(rows, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = row_tot[i] * col_tot[j] / total;
      r.expected[i][j] = e;
      const double d = observed[i][j] - e;
      r.statistic += d * d / e;
    }
  }
  r.df = (rows - 1) * (cols - 1);
  r.p_value = std::clamp(chi2_sf(r.statistic, static_cast<double>(r.df)), 0.0, 1.0);
  return r;
}

double sus_score(std::span<const int> answers) {
  if (answers.size() != 10) {
    throw Error(ErrorCode::WrongItemCount, "SUS needs 10 answers, got " + std::to_string(answers.size()));
  }
  int total = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const int a = answers[i];
    if (a < 1 || a > 5) throw Error(ErrorCode::OutOfRangeAnswer, "item " + std::to_string(i + 1) + " answer " + std::to_string(a));
    total += i % 2 == 0 ? a - 1 : 5 - a;  // items 1, 3, 5, ... are positively worded
  }
  return 2.5 * total;
}

SessionReport session_report(std::span<const SessionRecord> records, const ReportOptions& options) {
  if (options.event_window_ms <= 0) throw Error(ErrorCode::InvalidArgument, "event window must be positive");
  SessionReport rep;
  rep.options = options;
  std::map<SessionKind, std::vector<double>> levels;
  std::map<SessionKind, std::array<std::size_t, kEmotionCount>> emotions;

  for (const auto& rec : records) {
    validate_record(rec);
    SessionSummary s;
    s.session_id = rec.meta.session_id;
    s.user_id = rec.meta.user_id;
    s.kind = rec.meta.session_kind;
    s.packets = rec.packets.size();
    s.quiz_score = rec.quiz_score;
    s.self_report_distraction = rec.self_report_distraction;
    s.perceived_accuracy = rec.perceived_accuracy;
    double sum = 0.0;
    for (const auto& p : rec.packets) sum += p.anomaly_level;
    s.mean_level = s.packets ? sum / static_cast<double>(s.packets) : 0.0;
    double ss = 0.0;
    for (const auto& p : rec.packets) {
      ss += (p.anomaly_level - s.mean_level) * (p.anomaly_level - s.mean_level);
      ++s.emotion_counts[static_cast<std::size_t>(p.emotion_label)];
      s.face_packets += p.face_present ? 1 : 0;
      levels[s.kind].push_back(p.anomaly_level);
    }
    s.variance_level = s.packets > 1 ? ss / static_cast<double>(s.packets - 1) : 0.0;
    auto& em = emotions[s.kind];
    for (std::size_t l = 0; l < kEmotionCount; ++l) em[l] += s.emotion_counts[l];
    rep.sessions.push_back(s);

    if (rec.meta.session_kind == SessionKind::DAS && !rec.events.empty()) {
      auto inside_event = [&](std::int64_t t) {
        return std::any_of(rec.events.begin(), rec.events.end(), [&](const SessionEvent& e) {
          return t >= e.timestamp_ms && t < std::max(e.end_ms, e.timestamp_ms + options.event_window_ms);
        });
      };
      double base = 0.0;
      std::size_t nb = 0;
      for (const auto& p : rec.packets) {
        if (inside_event(p.timestamp_ms)) continue;
        base += p.anomaly_level;
        ++nb;
      }
      base = nb ? base / static_cast<double>(nb) : 0.0;
      for (const auto& e : rec.events) {
        EventLock lock;
        lock.session_id = rec.meta.session_id;
        lock.timestamp_ms = e.timestamp_ms;
        lock.kind = e.kind;
        lock.baseline_mean = base;
        double w = 0.0;
        for (const auto& p : rec.packets) {
          if (p.timestamp_ms >= e.timestamp_ms && p.timestamp_ms < e.timestamp_ms + options.event_window_ms) {
            w += p.anomaly_level;
            ++lock.packets;
          }
        }
        lock.window_mean = lock.packets ? w / static_cast<double>(lock.packets) : 0.0;
        lock.elevated = lock.packets > 0 && nb > 0 && lock.window_mean > base;
        rep.event_lock.push_back(lock);
      }
    }
  }
  if (!rep.event_lock.empty()) {
    const auto up = std::count_if(rep.event_lock.begin(), rep.event_lock.end(), [](const EventLock& l) { return l.elevated; });
    rep.event_lock_fraction = static_cast<double>(up) / static_cast<double>(rep.event_lock.size());
  }

  std::vector<std::vector<double>> groups;
  for (auto& [kind, v] : levels) {
    rep.groups.push_back(kind);
    double s = 0.0;
    for (double x : v) s += x;
    rep.group_means.push_back(v.empty() ? 0.0 : s / static_cast<double>(v.size()));
    groups.push_back(v);
  }
  try {
    rep.anova = one_way_anova(groups);
    rep.scheffe = scheffe_posthoc(groups, options.alpha);
  } catch (const Error& e) {
    rep.anova.reset();
    rep.scheffe.reset();
    rep.anova_error = e.what();
  }

  // Emotion frequencies: face-present labels only, all-zero columns dropped.
  std::vector<std::vector<double>> table(rep.groups.size());
  for (std::size_t l = 0; l + 1 < kEmotionCount; ++l) {
    std::size_t col = 0;
    for (auto kind : rep.groups) col += emotions[kind][l];
    if (col == 0) continue;
    rep.chi2_columns.push_back(static_cast<EmotionLabel>(l));
    for (std::size_t g = 0; g < rep.groups.size(); ++g) table[g].push_back(static_cast<double>(emotions[rep.groups[g]][l]));
  }
  try {
    rep.chi2 = chi_squared_frequency(table);
  } catch (const Error& e) {
    rep.chi2_error = e.what();
  }
  return rep;
}

std::string report_json(const SessionReport& r) {
  using nlohmann::json;
  json j;
  j["observation_unit"] = "packet";
  j["alpha"] = r.options.alpha;
  j["event_window_ms"] = r.options.event_window_ms;
  json sessions = json::array();
  for (const auto& s : r.sessions) {
    json e;
    e["session_id"] = s.session_id;
    e["user_id"] = s.user_id;
    e["kind"] = std::string(session_kind_name(s.kind));
    e["packets"] = s.packets;
    e["face_packets"] = s.face_packets;
    e["mean_level"] = s.mean_level;
    e["variance_level"] = s.variance_level;
    json em = json::object();
    for (std::size_t l = 0; l < kEmotionCount; ++l) em[std::string(emotion_name(static_cast<EmotionLabel>(l)))] = s.emotion_counts[l];
    e["emotion_counts"] = em;
    e["quiz_score"] = s.quiz_score ? json(*s.quiz_score) : json(nullptr);
    e["self_report_distraction"] = s.self_report_distraction ? json(*s.self_report_distraction) : json(nullptr);
    e["perceived_accuracy"] = s.perceived_accuracy ? json(*s.perceived_accuracy) : json(nullptr);
    sessions.push_back(e);
  }
  j["sessions"] = sessions;
  json groups = json::array();
  for (std::size_t g = 0; g < r.groups.size(); ++g) {
    groups.push_back({{"kind", std::string(session_kind_name(r.groups[g]))}, {"mean_level", r.group_means[g]}});
  }
  j["groups"] = groups;
  if (r.anova) {
    j["anova"] = {{"f", r.anova->f},
                  {"df_between", r.anova->df_between},
                  {"df_within", r.anova->df_within},
                  {"p_value", r.anova->p_value},
                  {"ms_between", r.anova->ms_between},
                  {"ms_within", r.anova->ms_within}};
  } else {
    j["anova"] = {{"error", r.anova_error}};
  }
  if (r.scheffe) {
    json pairs = json::array();
    for (const auto& p : r.scheffe->pairs) {
      pairs.push_back({{"a", std::string(session_kind_name(r.groups[p.i]))},
                       {"b", std::string(session_kind_name(r.groups[p.j]))},
                       {"mean_difference", p.mean_difference},
                       {"statistic", p.statistic},
                       {"critical_value", p.critical_value},
                       {"significant", p.significant}});
    }
    j["scheffe"] = {{"alpha", r.scheffe->alpha}, {"critical_value", r.scheffe->critical_value}, {"pairs", pairs}};
  }
  if (r.chi2) {
    json cols = json::array();
    for (auto l : r.chi2_columns) cols.push_back(std::string(emotion_name(l)));
    j["chi2"] = {{"statistic", r.chi2->statistic},
                 {"df", r.chi2->df},
                 {"p_value", r.chi2->p_value},
                 {"columns", cols},
                 {"observed", r.chi2->observed},
                 {"expected", r.chi2->expected}};
  } else {
    j["chi2"] = {{"error", r.chi2_error}};
  }
  json locks = json::array();
  for (const auto& l : r.event_lock) {
    locks.push_back({{"session_id", l.session_id},
                     {"t", l.timestamp_ms},
                     {"kind", l.kind},
                     {"packets", l.packets},
                     {"window_mean", l.window_mean},
                     {"baseline_mean", l.baseline_mean},
                     {"elevated", l.elevated}});
  }
  j["event_lock"] = {{"events", locks}, {"elevated_fraction", r.event_lock_fraction}};
  return j.dump(2);
}

void write_report_text(std::ostream& out, const SessionReport& r) {
  out << "Session report (observations: per-packet smoothed anomaly levels)\n\n";
  for (const auto& s : r.sessions) {
    out << "  " << session_kind_name(s.kind) << "  " << s.session_id << "  user " << s.user_id << "  packets " << s.packets
        << "  mean " << format_double(s.mean_level) << "  var " << format_double(s.variance_level) << '\n';
  }
  out << "\nGroup means:";
  for (std::size_t g = 0; g < r.groups.size(); ++g) out << "  " << session_kind_name(r.groups[g]) << '=' << format_double(r.group_means[g]);
  out << '\n';
  if (r.anova) {
    out << "One-way ANOVA: F(" << r.anova->df_between << ", " << r.anova->df_within << ") = " << format_double(r.anova->f)
        << ", p = " << format_double(r.anova->p_value) << '\n';
  } else {
    out << "One-way ANOVA: not computed (" << r.anova_error << ")\n";
  }
  if (r.scheffe) {
    out << "Scheffe (alpha " << format_double(r.scheffe->alpha) << ", critical " << format_double(r.scheffe->critical_value) << "):\n";
    for (const auto& p : r.scheffe->pairs) {
      out << "  " << session_kind_name(r.groups[p.i]) << " vs " << session_kind_name(r.groups[p.j]) << ": diff "
          << format_double(p.mean_difference) << ", statistic " << format_double(p.statistic)
          << (p.significant ? "  significant" : "  not significant") << '\n';
    }
  }
  if (r.chi2) {
    out << "Emotion frequencies chi-squared(" << r.chi2->df << ") = " << format_double(r.chi2->statistic)
        << ", p = " << format_double(r.chi2->p_value) << '\n';
  } else {
    out << "Emotion frequencies chi-squared: not computed (" << r.chi2_error << ")\n";
  }
  if (r.event_lock.empty()) {
    out << "Event-locked analysis: no events\n";
  } else {
    const auto up = std::count_if(r.event_lock.begin(), r.event_lock.end(), [](const EventLock& l) { return l.elevated; });
    out << "Event-locked analysis (" << r.options.event_window_ms << " ms window): " << up << " of " << r.event_lock.size()
        << " events above the session baseline\n";
  }
}

void write_report_csv(std::ostream& out, const SessionReport& r) {
  out << "session_id,user_id,kind,packets,face_packets,mean_level,variance_level";
  for (std::size_t l = 0; l < kEmotionCount; ++l) out << ",count_" << emotion_name(static_cast<EmotionLabel>(l));
  out << ",quiz_score,self_report_distraction,perceived_accuracy\n";
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& s : r.sessions) {
    out << s.session_id << ',' << s.user_id << ',' << session_kind_name(s.kind) << ',' << s.packets << ',' << s.face_packets
        << ',' << format_double(s.mean_level) << ',' << format_double(s.variance_level);
    for (auto c : s.emotion_counts) out << ',' << c;
    out << ',' << opt(s.quiz_score) << ',' << opt(s.self_report_distraction) << ',' << opt(s.perceived_accuracy) << '\n';
  }
}

}  // namespace focusplus::stats
