#pragma once

// Evaluation report: metrics, per-image summaries, and latency. JSON keeps
// a stable key order; wall-clock fields live only under "timing" so two runs
// can be compared byte-for-byte with that object removed.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mmms {

inline constexpr int kReportSchemaMajor = 1;
inline constexpr int kReportSchemaMinor = 0;

struct NocEntry {
  double theta_iou = 0.0;
  double noc = 0.0;
  int failures = 0;
  int surfaces = 0;

  friend bool operator==(const NocEntry&, const NocEntry&) = default;
};

struct MultiSurfaceMetrics {
  double theta_iou = 0.0;
  double theta_avg = 0.0;
  double nocms = 0.0;
  double frms = 0.0;  // percent
  int failures = 0;
  int surfaces = 0;
  int revisits = 0;

  friend bool operator==(const MultiSurfaceMetrics&, const MultiSurfaceMetrics&) = default;
};

struct LatencyStats {
  double feature_seconds = 0.0;  // prepare() time summed over images
  double click_seconds = 0.0;    // predict() time summed over clicks
  long long clicks = 0;
  int images = 0;

  // Feature time spread over all clicks, plus the click time.
  double amortized_ms_per_click() const;
  // Click-phase time only.
  double isolated_ms_per_click() const;

  friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

struct ImageSummary {
  std::string image_id;
  int surfaces = 0;
  // Single-surface clicks per threshold (same order as EvalReport::noc).
  std::vector<std::vector<int>> single_clicks;
  // Multi-surface accumulated clicks and failure flags (empty in single mode).
  std::vector<int> multi_clicks;
  std::vector<bool> multi_failed;
  int revisits = 0;
  double final_avg_iou = 0.0;

  friend bool operator==(const ImageSummary&, const ImageSummary&) = default;
};

struct RunError {
  std::string image_id;
  std::string message;

  friend bool operator==(const RunError&, const RunError&) = default;
};

struct Fingerprints {
  std::string dataset;
  std::string predictor;
  std::string config;

  friend bool operator==(const Fingerprints&, const Fingerprints&) = default;
};

struct EvalReport {
  int schema_major = kReportSchemaMajor;
  int schema_minor = kReportSchemaMinor;
  std::string mode;  // "single" or "multi"
  int n_max = 20;
  Fingerprints fingerprints;
  std::vector<NocEntry> noc;
  std::optional<MultiSurfaceMetrics> multi;
  std::vector<ImageSummary> images;
  std::vector<RunError> errors;
  LatencyStats latency;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Throws ConfigError when invariants (FRMS range, NoC range, fingerprints) fail.
void validate(const EvalReport& report);

nlohmann::ordered_json to_json(const EvalReport& report);
// Rejects unknown major schema versions.
EvalReport report_from_json(const nlohmann::ordered_json& j);

// (name, value) per headline metric, in CSV row order.
std::vector<std::pair<std::string, double>> report_metrics(const EvalReport& report);
std::string to_csv(const EvalReport& report);

enum class ReportFormat { json, csv };
void emit(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace mmms
