#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mmms/dataset.hpp"
#include "mmms/mask.hpp"

namespace mmms {

struct PredictRequest {
  std::string image_id;
  // Which surface the clicks belong to. Only scripted oracles look at it.
  int surface = 0;
  std::vector<Click> clicks;  // all accumulated clicks, oldest first
  BinaryMask prev_mask;

  friend bool operator==(const PredictRequest&, const PredictRequest&) = default;
};

struct ProbabilityMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;  // row-major, each in [0, 1]
};

struct PredictTiming {
  double feature_seconds = 0.0;
  double click_seconds = 0.0;
};

struct PredictResponse {
  ProbabilityMap probabilities;
  PredictTiming timing;
};

// Pixels strictly above `threshold` become foreground.
BinaryMask binarize(const ProbabilityMap& map, double threshold);
ProbabilityMap to_probabilities(const BinaryMask& mask);

// A click-driven segmenter. prepare() does the per-image work once; predict()
// may then be called any number of times for that image and must not mutate
// what prepare() built. One instance serves one run at a time.
class Predictor {
 public:
  virtual ~Predictor() = default;

  // Stable description of the backend and its configuration (fingerprinted
  // into reports).
  virtual std::string describe() const = 0;

  virtual void prepare(const Sample& sample) = 0;
  virtual PredictResponse predict(const PredictRequest& request) = 0;
};

// Masks returned on successive calls for each surface; the last one repeats.
struct OracleScript {
  std::map<int, std::vector<BinaryMask>> per_surface;
};

// Returns script[surface][n - 1] for a request carrying n clicks. Stateless
// per call, so identical requests give identical answers.
class ScriptedOracle final : public Predictor {
 public:
  // Scripts keyed by image id.
  explicit ScriptedOracle(std::map<std::string, OracleScript> scripts);
  // Single-image convenience: the script applies to every image.
  explicit ScriptedOracle(OracleScript script);

  std::string describe() const override;
  void prepare(const Sample& sample) override;
  PredictResponse predict(const PredictRequest& request) override;

 private:
  std::map<std::string, OracleScript> scripts_;
  std::shared_ptr<const OracleScript> fallback_;
  const OracleScript* active_ = nullptr;
};

// Answers every request with the requested surface's ground truth.
class GroundTruthOracle final : public Predictor {
 public:
  std::string describe() const override { return "oracle:gt"; }
  void prepare(const Sample& sample) override;
  PredictResponse predict(const PredictRequest& request) override;

 private:
  JointMask gt_;
};

// Reads an oracle script file:
// {"images": {"<id>": {"<surface>": [{"h":H,"w":W,"counts":[...]}, ...]}}}
std::map<std::string, OracleScript> load_oracle_scripts(const std::string& path);

}  // namespace mmms
