#pragma once

// Shared test data: in-memory samples and the committed overlap fixture.

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmms/dataset.hpp"
#include "mmms/predictor.hpp"

namespace fixtures {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "mmms-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// For a request with n clicks, returns the surface's ground truth eroded
// (surface % 3) + 2 - n times. Needs a few clicks and never leaves the
// ground truth.
class ErodingOracle final : public mmms::Predictor {
 public:
  std::string describe() const override { return "eroding"; }
  void prepare(const mmms::Sample& sample) override { gt_ = sample.gt_joint; }
  mmms::PredictResponse predict(const mmms::PredictRequest& request) override {
    mmms::BinaryMask m = mmms::joint_extract(gt_, request.surface);
    const int steps = request.surface % 3 + 2 - static_cast<int>(request.clicks.size());
    for (int s = 0; s < steps; ++s) {
      mmms::BinaryMask next(m.height(), m.width());
      for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c) {
          const auto in = [&](int y, int x) { return m.contains(y, x) && m.test(y, x); };
          next.set(r, c, in(r, c) && in(r - 1, c) && in(r + 1, c) && in(r, c - 1) && in(r, c + 1));
        }
      m = std::move(next);
    }
    return {mmms::to_probabilities(m), {}};
  }

 private:
  mmms::JointMask gt_;
};

inline mmms::Sample sample_from_joint(const mmms::JointMask& gt, const std::string& id = "img") {
  mmms::Sample s;
  s.id = id;
  s.rgb = mmms::Tensor3(gt.height(), gt.width(), 3, 0.5f);
  s.gt_joint = gt;
  s.label_mapping.resize(static_cast<std::size_t>(gt.surface_count()) + 1);
  for (std::size_t k = 0; k < s.label_mapping.size(); ++k) s.label_mapping[k] = static_cast<std::uint32_t>(k);
  return s;
}

// Single-surface sample whose ground truth is an axis-aligned box.
inline mmms::Sample box_sample(int h, int w, int r0, int r1, int c0, int c1) {
  std::vector<mmms::SurfaceLabel> labels(static_cast<std::size_t>(h) * w, 0);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) labels[static_cast<std::size_t>(r) * w + c] = 1;
  return sample_from_joint(mmms::JointMask(h, w, 1, labels));
}

struct OverlapFixture {
  mmms::Sample sample;
  mmms::OracleScript script;
  double theta_iou = 0;
  double theta_avg = 0;
  int n_max = 0;
  nlohmann::json expected;
};

inline OverlapFixture load_overlap_fixture() {
  const std::filesystem::path path = std::filesystem::path(MMMS_TEST_DATA) / "overlap_fixture.json";
  std::ifstream in(path);
  const nlohmann::json j = nlohmann::json::parse(in);
  OverlapFixture f;
  const int h = j.at("height"), w = j.at("width");
  const auto gt = j.at("gt").get<std::vector<mmms::SurfaceLabel>>();
  int surfaces = 0;
  for (auto l : gt) surfaces = std::max<int>(surfaces, l);
  f.sample = sample_from_joint(mmms::JointMask(h, w, surfaces, gt), "overlap");
  for (const auto& [key, masks] : j.at("scripts").items()) {
    std::vector<mmms::BinaryMask> list;
    for (const auto& rows : masks) {
      mmms::BinaryMask m(h, w);
      for (int r = 0; r < h; ++r) {
        const std::string row = rows.at(r);
        for (int c = 0; c < w; ++c) m.set(r, c, row[c] == '1');
      }
      list.push_back(std::move(m));
    }
    f.script.per_surface[std::stoi(key)] = std::move(list);
  }
  f.theta_iou = j.at("theta_iou");
  f.theta_avg = j.at("theta_avg");
  f.n_max = j.at("n_max");
  f.expected = j.at("expected");
  return f;
}

}  // namespace fixtures
