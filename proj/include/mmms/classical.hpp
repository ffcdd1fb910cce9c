#pragma once

// Deterministic click segmenter without learned weights: seeded geodesic
// labeling over a per-pixel feature grid (RGB plus every modality).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmms/predictor.hpp"

namespace mmms {

struct ClassicalParams {
  double epsilon = 1e-3;           // added to every 4-neighbor edge cost
  double background_fraction = 0.25;  // of the largest distance, when no negatives exist
  // Modalities to include; empty means every modality of the sample.
  std::vector<std::string> modalities;
};

// Geodesic distances and labels for one set of seeds.
struct GeodesicResult {
  std::vector<double> distance;
  std::vector<std::uint8_t> positive;  // label of the nearest seed
};

// Multi-source Dijkstra over a H×W grid with `channels` features per pixel.
// Positive seeds win ties.
GeodesicResult geodesic_labels(const std::vector<float>& features, int height, int width,
                               int channels, std::span<const Click> clicks, double epsilon);

class ClassicalPredictor final : public Predictor {
 public:
  explicit ClassicalPredictor(ClassicalParams params = {});

  std::string describe() const override;
  void prepare(const Sample& sample) override;
  PredictResponse predict(const PredictRequest& request) override;

  int channels() const noexcept { return channels_; }

 private:
  ClassicalParams params_;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> features_;
};

}  // namespace mmms
