#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mmms/errors.hpp"
#include "mmms/report.hpp"

using namespace mmms;

namespace {

EvalReport sample_report() {
  EvalReport r;
  r.mode = "multi";
  r.fingerprints = {"abc", "classical(eps=0.001,bg=0.25)", "multi;theta_iou=80"};
  r.noc = {{80, 26.0 / 3.0, 1, 3}};
  r.multi = MultiSurfaceMetrics{80, 70, 9.25, 25.0, 1, 4, 2};
  r.images = {{"a", 2, {{1, 20}}, {3, 20}, {false, true}, 2, 71.5},
              {"b", 2, {{2, 2}}, {2, 2}, {false, false}, 0, 88.0}};
  r.errors = {{"c", "predictor timed out"}};
  r.latency = {1.25, 0.5, 27, 3};
  return r;
}

}  // namespace

TEST_CASE("report json round trip keeps every field") {
  const EvalReport r = sample_report();
  const auto j = to_json(r);
  CHECK(report_from_json(j) == r);
  CHECK(report_from_json(nlohmann::ordered_json::parse(j.dump())) == r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"schema_version", "mode", "n_max", "fingerprints",
                                         "metrics", "images", "errors", "timing"});
  CHECK(j.at("schema_version") == "1.0");
}

TEST_CASE("unknown major schema versions are rejected") {
  auto j = to_json(sample_report());
  j["schema_version"] = "2.0";
  CHECK_THROWS_AS(report_from_json(j), ConfigError);
  j["schema_version"] = "1.7";
  CHECK(report_from_json(j).schema_minor == 7);
  j.erase("timing");
  CHECK_THROWS_AS(report_from_json(j), ConfigError);
}

TEST_CASE("validation catches out-of-range metrics") {
  EvalReport r = sample_report();
  CHECK_NOTHROW(validate(r));
  r.noc[0].noc = 0.5;
  CHECK_THROWS_AS(validate(r), ConfigError);
  r = sample_report();
  r.multi->frms = 120;
  CHECK_THROWS_AS(validate(r), ConfigError);
  r = sample_report();
  r.fingerprints.dataset.clear();
  CHECK_THROWS_AS(validate(r), ConfigError);
}

TEST_CASE("csv lists headline metrics in order") {
  const std::string csv = to_csv(sample_report());
  std::istringstream in(csv);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] == "metric,value");
  CHECK(lines[1] == "\"NoC@80\",8.666667");
  CHECK(lines[3] == "\"NoCMS@(80,70)\",9.250000");
  CHECK(lines[4] == "\"FRMS@(80,70)\",25.000000");
  CHECK(lines[7] == "\"latency_amortized_ms\",64.814815");
  CHECK(lines[8] == "\"latency_isolated_ms\",18.518519");
}

TEST_CASE("emit writes both formats") {
  fixtures::TempDir dir;
  const auto json_path = dir.path() / "sub" / "r.json";
  emit(sample_report(), ReportFormat::json, json_path);
  emit(sample_report(), ReportFormat::csv, dir.path() / "r.csv");
  std::ifstream in(json_path);
  CHECK(report_from_json(nlohmann::ordered_json::parse(in)) == sample_report());
  EvalReport bad = sample_report();
  bad.multi->frms = -1;
  CHECK_THROWS_AS(emit(bad, ReportFormat::json, dir.path() / "bad.json"), ConfigError);
}
