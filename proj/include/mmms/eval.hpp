#pragma once

// Click-count evaluation. The single-surface loop simulates corrective clicks
// until one surface reaches the IoU threshold; the multi-surface loop
// annotates every surface of an image into one joint mask and keeps revisiting
// the worst surface until the average IoU is high enough.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmms/dataset.hpp"
#include "mmms/mask.hpp"
#include "mmms/predictor.hpp"
#include "mmms/report.hpp"

namespace mmms {

struct EvalParams {
  double theta_iou = 80.0;
  double theta_avg = 70.0;
  int n_max = 20;
  int disk_radius = kDefaultDiskRadius;
  double mask_threshold = 0.5;
};

// Validated parameters: theta_iou >= theta_avg, both in [0, 100], n_max >= 1.
class EvalConfig {
 public:
  explicit EvalConfig(const EvalParams& params);

  double theta_iou() const noexcept { return p_.theta_iou; }
  double theta_avg() const noexcept { return p_.theta_avg; }
  int n_max() const noexcept { return p_.n_max; }
  int disk_radius() const noexcept { return p_.disk_radius; }
  double mask_threshold() const noexcept { return p_.mask_threshold; }
  const EvalParams& params() const noexcept { return p_; }

  EvalConfig with_theta_iou(double theta) const;
  std::string describe() const;

 private:
  EvalParams p_;
};

struct SurfaceRunResult {
  int surface = 0;
  int clicks_used = 0;
  std::vector<double> iou_trace;  // one entry per click
  bool succeeded = false;
  std::vector<Click> clicks;
  BinaryMask final_mask;
  double click_seconds = 0.0;
};

struct MultiSurfaceRunResult {
  std::vector<int> per_surface_clicks;  // accumulated over all attempts
  std::vector<bool> per_surface_failed;
  // Phase-1 outcome per surface; identical to run_single_surface.
  std::vector<SurfaceRunResult> phase1;
  int revisit_count = 0;
  std::vector<int> revisit_order;  // surface id of each revisit
  JointMask final_joint;
  double final_avg_iou = 0.0;
  std::vector<double> final_ious;
  double click_seconds = 0.0;

  int total_clicks() const;
};

// Runs one surface from an empty previous mask. The predictor must already be
// prepared for `sample`.
SurfaceRunResult run_single_surface(Predictor& predictor, const Sample& sample, int surface,
                                    const BinaryMask& surface_gt, const EvalConfig& cfg);

MultiSurfaceRunResult run_multi_surface(Predictor& predictor, const Sample& sample,
                                        const JointMask& gt_joint, const EvalConfig& cfg);

// Unweighted mean of per-surface IoUs between the two joint masks.
double average_iou(const JointMask& joint, const JointMask& gt_joint);
std::vector<double> surface_ious(const JointMask& joint, const JointMask& gt_joint);

// Surface (1-based) to revisit next: the lowest-IoU surface that is not
// failed and still below theta_iou; ties go to the smallest id.
std::optional<int> select_worst_surface(std::span<const double> ious,
                                        const std::vector<bool>& failed, double theta_iou);

// ---- dataset level ----

enum class EvalMode { single, multi };

struct ImageResult {
  std::string image_id;
  int surfaces = 0;
  // Single mode: one run list per threshold, each holding one result per surface.
  std::vector<std::vector<SurfaceRunResult>> single;
  std::optional<MultiSurfaceRunResult> multi;
  double feature_seconds = 0.0;
  double click_seconds = 0.0;
  long long clicks = 0;
  std::optional<std::string> error;
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

struct DatasetEvalOptions {
  EvalMode mode = EvalMode::multi;
  // Single mode evaluates every threshold here; multi mode uses the config's.
  std::vector<double> thetas;
  int workers = 1;
};

// Evaluates every manifest image with one predictor instance per worker.
// Predictor failures are recorded per image; dataset errors abort the run.
std::vector<ImageResult> evaluate_dataset(const DatasetManifest& manifest,
                                          const PredictorFactory& factory, const EvalConfig& cfg,
                                          const DatasetEvalOptions& options);

// Runs one already-loaded sample with a prepared-on-demand predictor.
ImageResult evaluate_sample(Predictor& predictor, const Sample& sample, const EvalConfig& cfg,
                            const DatasetEvalOptions& options);

// NoC with n_max substituted for failures.
NocEntry noc_of(std::span<const SurfaceRunResult> runs, double theta, int n_max);

EvalReport aggregate(std::span<const ImageResult> results, const EvalConfig& cfg,
                     const DatasetEvalOptions& options, const Fingerprints& fingerprints);

}  // namespace mmms
