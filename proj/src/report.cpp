#include "mmms/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmms/errors.hpp"

namespace mmms {
using nlohmann::ordered_json;

namespace {

std::string fmt_theta(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

double LatencyStats::amortized_ms_per_click() const {
  if (clicks <= 0) return 0.0;
  return (feature_seconds + click_seconds) * 1000.0 / static_cast<double>(clicks);
}

double LatencyStats::isolated_ms_per_click() const {
  if (clicks <= 0) return 0.0;
  return click_seconds * 1000.0 / static_cast<double>(clicks);
}

void validate(const EvalReport& r) {
  if (r.fingerprints.dataset.empty() || r.fingerprints.predictor.empty() ||
      r.fingerprints.config.empty()) {
    throw ConfigError("report: fingerprints must be non-empty");
  }
  for (const NocEntry& e : r.noc) {
    if (e.surfaces > 0 && (e.noc < 1.0 || e.noc > r.n_max)) {
      throw ConfigError("report: NoC@" + fmt_theta(e.theta_iou) + " = " + std::to_string(e.noc) +
                        " outside [1, n_max]");
    }
  }
  if (r.multi && (r.multi->frms < 0.0 || r.multi->frms > 100.0)) {
    throw ConfigError("report: FRMS outside [0, 100]");
  }
}

ordered_json to_json(const EvalReport& r) {
  ordered_json j;
  j["schema_version"] = std::to_string(r.schema_major) + "." + std::to_string(r.schema_minor);
  j["mode"] = r.mode;
  j["n_max"] = r.n_max;
  j["fingerprints"] = {{"dataset", r.fingerprints.dataset},
                       {"predictor", r.fingerprints.predictor},
                       {"config", r.fingerprints.config}};
  ordered_json metrics;
  ordered_json noc = ordered_json::array();
  for (const NocEntry& e : r.noc) {
    noc.push_back({{"theta_iou", e.theta_iou},
                   {"noc", e.noc},
                   {"failures", e.failures},
                   {"surfaces", e.surfaces}});
  }
  metrics["noc"] = std::move(noc);
  if (r.multi) {
    const auto& m = *r.multi;
    metrics["multi"] = {{"theta_iou", m.theta_iou}, {"theta_avg", m.theta_avg},
                        {"nocms", m.nocms},         {"frms", m.frms},
                        {"failures", m.failures},   {"surfaces", m.surfaces},
                        {"revisits", m.revisits}};
  } else {
    metrics["multi"] = nullptr;
  }
  j["metrics"] = std::move(metrics);

  ordered_json images = ordered_json::array();
  for (const ImageSummary& s : r.images) {
    ordered_json failed = ordered_json::array();
    for (bool f : s.multi_failed) failed.push_back(f);
    images.push_back({{"image_id", s.image_id},
                      {"surfaces", s.surfaces},
                      {"single_clicks", s.single_clicks},
                      {"multi_clicks", s.multi_clicks},
                      {"multi_failed", std::move(failed)},
                      {"revisits", s.revisits},
                      {"final_avg_iou", s.final_avg_iou}});
  }
  j["images"] = std::move(images);

  ordered_json errors = ordered_json::array();
  for (const RunError& e : r.errors) errors.push_back({{"image_id", e.image_id}, {"message", e.message}});
  j["errors"] = std::move(errors);

  const LatencyStats& l = r.latency;
  j["timing"] = {{"feature_seconds", l.feature_seconds},
                 {"click_seconds", l.click_seconds},
                 {"clicks", l.clicks},
                 {"images", l.images},
                 {"amortized_ms_per_click", l.amortized_ms_per_click()},
                 {"isolated_ms_per_click", l.isolated_ms_per_click()}};
  return j;
}

EvalReport report_from_json(const ordered_json& j) {
  EvalReport r;
  try {
    const std::string version = j.at("schema_version").get<std::string>();
    const auto dot = version.find('.');
    r.schema_major = std::stoi(version.substr(0, dot));
    r.schema_minor = dot == std::string::npos ? 0 : std::stoi(version.substr(dot + 1));
    if (r.schema_major != kReportSchemaMajor) {
      throw ConfigError("report schema major version " + std::to_string(r.schema_major) +
                        " is not supported (expected " + std::to_string(kReportSchemaMajor) + ")");
    }
    r.mode = j.at("mode").get<std::string>();
    r.n_max = j.at("n_max").get<int>();
    const auto& fp = j.at("fingerprints");
    r.fingerprints = {fp.at("dataset").get<std::string>(), fp.at("predictor").get<std::string>(),
                      fp.at("config").get<std::string>()};
    const auto& metrics = j.at("metrics");
    for (const auto& e : metrics.at("noc")) {
      r.noc.push_back({e.at("theta_iou").get<double>(), e.at("noc").get<double>(),
                       e.at("failures").get<int>(), e.at("surfaces").get<int>()});
    }
    if (!metrics.at("multi").is_null()) {
      const auto& m = metrics.at("multi");
      r.multi = MultiSurfaceMetrics{m.at("theta_iou").get<double>(), m.at("theta_avg").get<double>(),
                                    m.at("nocms").get<double>(),     m.at("frms").get<double>(),
                                    m.at("failures").get<int>(),     m.at("surfaces").get<int>(),
                                    m.at("revisits").get<int>()};
    }
    for (const auto& s : j.at("images")) {
      ImageSummary img;
      img.image_id = s.at("image_id").get<std::string>();
      img.surfaces = s.at("surfaces").get<int>();
      img.single_clicks = s.at("single_clicks").get<std::vector<std::vector<int>>>();
      img.multi_clicks = s.at("multi_clicks").get<std::vector<int>>();
      img.multi_failed = s.at("multi_failed").get<std::vector<bool>>();
      img.revisits = s.at("revisits").get<int>();
      img.final_avg_iou = s.at("final_avg_iou").get<double>();
      r.images.push_back(std::move(img));
    }
    for (const auto& e : j.at("errors")) {
      r.errors.push_back({e.at("image_id").get<std::string>(), e.at("message").get<std::string>()});
    }
    const auto& t = j.at("timing");
    r.latency.feature_seconds = t.at("feature_seconds").get<double>();
    r.latency.click_seconds = t.at("click_seconds").get<double>();
    r.latency.clicks = t.at("clicks").get<long long>();
    r.latency.images = t.at("images").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::vector<std::pair<std::string, double>> report_metrics(const EvalReport& r) {
  std::vector<std::pair<std::string, double>> out;
  for (const NocEntry& e : r.noc) {
    out.emplace_back("NoC@" + fmt_theta(e.theta_iou), e.noc);
    out.emplace_back("failures@" + fmt_theta(e.theta_iou), e.failures);
  }
  if (r.multi) {
    const auto& m = *r.multi;
    const std::string pair = "@(" + fmt_theta(m.theta_iou) + "," + fmt_theta(m.theta_avg) + ")";
    out.emplace_back("NoCMS" + pair, m.nocms);
    out.emplace_back("FRMS" + pair, m.frms);
    out.emplace_back("failures" + pair, m.failures);
    out.emplace_back("revisits" + pair, m.revisits);
  }
  out.emplace_back("latency_amortized_ms", r.latency.amortized_ms_per_click());
  out.emplace_back("latency_isolated_ms", r.latency.isolated_ms_per_click());
  return out;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream ss;
  ss << "metric,value\n";
  for (const auto& [name, value] : report_metrics(r)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    ss << '"' << name << "\"," << buf << "\n";
  }
  return ss.str();
}

void emit(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  validate(report);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report to " + path.string());
  if (format == ReportFormat::json) {
    out << to_json(report).dump(2) << "\n";
  } else {
    out << to_csv(report);
  }
  if (!out) throw ConfigError("failed writing report to " + path.string());
}

}  // namespace mmms
