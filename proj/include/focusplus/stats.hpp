#pragma once

// One-way ANOVA, Scheffé post hoc comparisons, Pearson chi-squared on
// frequency tables, SUS scoring and the FS/DAS/MWS session report.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focusplus/types.hpp"

namespace focusplus::stats {

/// Regularized incomplete beta I_x(a, b); continued fraction with the usual
/// symmetry switch at x > (a+1)/(a+b+2).
double regularized_beta(double x, double a, double b);
/// Regularized lower / upper incomplete gamma P(a, x), Q(a, x); series below
/// x < a+1, continued fraction above.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double f_cdf(double f, double df1, double df2);
double f_sf(double f, double df1, double df2);
/// Bisection on f_cdf to an absolute tolerance of 1e-8 in F.
double f_inv(double p, double df1, double df2);
double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);

struct AnovaResult {
  double f = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p_value = 1.0;
  std::vector<double> group_means;
  std::vector<std::size_t> group_sizes;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ms_between = 0.0;
  double ms_within = 0.0;
};

/// Throws InsufficientData (< 2 groups or a group with < 2 observations),
/// ZeroWithinVariance, NonFiniteInput.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

struct ScheffePair {
  std::size_t i = 0;
  std::size_t j = 0;
  double mean_difference = 0.0;  // mean_i - mean_j
  double statistic = 0.0;
  double critical_value = 0.0;
  bool significant = false;
};

struct ScheffeResult {
  double alpha = 0.05;
  double critical_value = 0.0;  // (k-1) F_inv(1-alpha; k-1, N-k)
  std::vector<ScheffePair> pairs;
};

/// Throws as one_way_anova, plus InvalidAlpha.
ScheffeResult scheffe_posthoc(std::span<const std::vector<double>> groups, double alpha = 0.05);

struct Chi2Result {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  std::vector<std::vector<double>> observed;
  std::vector<std::vector<double>> expected;
};

/// Rows are groups, columns categories. Throws DegenerateTable (zero marginal,
/// ragged or too small table) or InvalidArgument (negative / non-finite count).
Chi2Result chi_squared_frequency(const std::vector<std::vector<double>>& observed);

/// Standard SUS scoring. Throws WrongItemCount / OutOfRangeAnswer.
double sus_score(std::span<const int> answers);

struct ReportOptions {
  double alpha = 0.05;
  std::int64_t event_window_ms = 2000;
};

struct SessionSummary {
  std::string session_id;
  std::string user_id;
  SessionKind kind = SessionKind::LIVE;
  std::size_t packets = 0;
  std::size_t face_packets = 0;
  double mean_level = 0.0;
  double variance_level = 0.0;  // sample variance (n-1)
  std::array<std::size_t, kEmotionCount> emotion_counts{};
  std::optional<int> quiz_score;
  std::optional<int> self_report_distraction;
  std::optional<int> perceived_accuracy;
};

struct EventLock {
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  std::string kind;
  std::size_t packets = 0;  // packets inside [t, t + window)
  double window_mean = 0.0;
  double baseline_mean = 0.0;  // the session's packets outside every event interval
  bool elevated = false;       // window_mean > baseline_mean
};

struct SessionReport {
  std::vector<SessionSummary> sessions;
  std::vector<SessionKind> groups;  // kinds compared, in FS, DAS, MWS, LIVE order
  std::vector<double> group_means;
  std::optional<AnovaResult> anova;
  std::optional<ScheffeResult> scheffe;
  std::string anova_error;  // set instead of anova/scheffe when the test is undefined
  std::optional<Chi2Result> chi2;
  std::vector<EmotionLabel> chi2_columns;  // emotion labels kept (non-zero column totals)
  std::string chi2_error;
  std::vector<EventLock> event_lock;  // DAS sessions only; empty without events
  double event_lock_fraction = 0.0;   // elevated / total, 0 when empty
  ReportOptions options;
};

/// Observations for ANOVA are per-packet anomaly levels pooled per session kind.
/// Test failures on degenerate inputs are reported in the *_error fields.
SessionReport session_report(std::span<const SessionRecord> records, const ReportOptions& options = {});

std::string report_json(const SessionReport& report);
void write_report_text(std::ostream& out, const SessionReport& report);
/// One row per session: aggregates used by the dashboard.
void write_report_csv(std::ostream& out, const SessionReport& report);

}  // namespace focusplus::stats
