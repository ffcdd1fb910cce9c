#include "mmms/eval.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "mmms/click_sim.hpp"
#include "mmms/errors.hpp"

namespace mmms {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Re-throws a predictor failure with image/surface context, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ProtocolError& e) {
    throw ProtocolError(context + ": " + e.what(), e.payload());
  } catch (const TimeoutError& e) {
    throw TimeoutError(context + ": " + e.what());
  } catch (const ChildExitError& e) {
    throw ChildExitError(context + ": " + e.what());
  } catch (const RemoteError& e) {
    throw RemoteError(context + ": " + e.what());
  } catch (const PredictorError& e) {
    throw PredictorError(context + ": " + e.what());
  }
}

struct SurfaceTrack {
  int surface = 0;
  std::vector<Click> clicks;
  BinaryMask mask;
  int clicks_used = 0;
  std::vector<double> trace;
  bool succeeded = false;
  double click_seconds = 0.0;
};

// Adds clicks to one surface until its IoU reaches theta_iou or the surface
// has used its whole budget.
void improve_surface(Predictor& predictor, const Sample& sample, const BinaryMask& gt,
                     const EvalConfig& cfg, SurfaceTrack& track) {
  track.succeeded = false;
  while (track.clicks_used < cfg.n_max()) {
    const std::optional<Click> click = next_click(track.mask, gt);
    if (!click) {
      track.succeeded = true;  // mask already equals the ground truth
      return;
    }
    track.clicks.push_back(*click);
    ++track.clicks_used;

    PredictRequest request{sample.id, track.surface, track.clicks, track.mask};
    const auto start = Clock::now();
    PredictResponse response;
    try {
      response = predictor.predict(request);
    } catch (const PredictorError&) {
      rethrow_with_context("image '" + sample.id + "' surface " + std::to_string(track.surface) +
                           " click " + std::to_string(track.clicks_used));
    }
    track.click_seconds += seconds_since(start);

    BinaryMask mask = binarize(response.probabilities, cfg.mask_threshold());
    require_same_shape(mask, gt, "predictor output");
    track.mask = std::move(mask);
    const double v = iou(track.mask, gt);
    track.trace.push_back(v);
    if (v >= cfg.theta_iou()) {
      track.succeeded = true;
      return;
    }
  }
}

SurfaceRunResult to_result(const SurfaceTrack& t) {
  return {t.surface, t.clicks_used, t.trace, t.succeeded, t.clicks, t.mask, t.click_seconds};
}

SurfaceTrack fresh_track(int surface, const BinaryMask& gt) {
  SurfaceTrack t;
  t.surface = surface;
  t.mask = BinaryMask(gt.height(), gt.width());
  return t;
}

}  // namespace

EvalConfig::EvalConfig(const EvalParams& params) : p_(params) {
  const auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
  if (!in_range(p_.theta_iou) || !in_range(p_.theta_avg)) {
    throw ConfigError("IoU thresholds must lie in [0, 100]");
  }
  if (p_.theta_iou < p_.theta_avg) {
    throw ConfigError("theta_iou (" + std::to_string(p_.theta_iou) +
                      ") must be >= theta_avg (" + std::to_string(p_.theta_avg) + ")");
  }
  if (p_.n_max < 1) throw ConfigError("n_max must be >= 1");
  if (p_.disk_radius < 0) throw ConfigError("disk radius must be >= 0");
  if (!(p_.mask_threshold >= 0.0 && p_.mask_threshold < 1.0)) {
    throw ConfigError("mask threshold must lie in [0, 1)");
  }
}

EvalConfig EvalConfig::with_theta_iou(double theta) const {
  EvalParams p = p_;
  p.theta_iou = theta;
  p.theta_avg = std::min(p.theta_avg, theta);
  return EvalConfig(p);
}

std::string EvalConfig::describe() const {
  std::ostringstream ss;
  ss << "theta_iou=" << p_.theta_iou << ";theta_avg=" << p_.theta_avg << ";n_max=" << p_.n_max
     << ";radius=" << p_.disk_radius << ";threshold=" << p_.mask_threshold;
  return ss.str();
}

int MultiSurfaceRunResult::total_clicks() const {
  int total = 0;
  for (int c : per_surface_clicks) total += c;
  return total;
}

SurfaceRunResult run_single_surface(Predictor& predictor, const Sample& sample, int surface,
                                    const BinaryMask& surface_gt, const EvalConfig& cfg) {
  SurfaceTrack track = fresh_track(surface, surface_gt);
  improve_surface(predictor, sample, surface_gt, cfg, track);
  return to_result(track);
}

std::vector<double> surface_ious(const JointMask& joint, const JointMask& gt_joint) {
  if (joint.surface_count() != gt_joint.surface_count()) {
    throw DimensionError("average_iou: surface counts differ (" +
                         std::to_string(joint.surface_count()) + " vs " +
                         std::to_string(gt_joint.surface_count()) + ")");
  }
  std::vector<double> out;
  for (int k = 1; k <= joint.surface_count(); ++k) {
    out.push_back(iou(joint_extract(joint, k), joint_extract(gt_joint, k)));
  }
  return out;
}

double average_iou(const JointMask& joint, const JointMask& gt_joint) {
  const std::vector<double> ious = surface_ious(joint, gt_joint);
  if (ious.empty()) throw DimensionError("average_iou: no surfaces");
  double sum = 0.0;
  for (double v : ious) sum += v;
  return sum / static_cast<double>(ious.size());
}

std::optional<int> select_worst_surface(std::span<const double> ious,
                                        const std::vector<bool>& failed, double theta_iou) {
  std::optional<int> best;
  double best_iou = 0.0;
  for (std::size_t i = 0; i < ious.size(); ++i) {
    if ((i < failed.size() && failed[i]) || ious[i] >= theta_iou) continue;
    if (!best || ious[i] < best_iou) {
      best = static_cast<int>(i) + 1;
      best_iou = ious[i];
    }
  }
  return best;
}

MultiSurfaceRunResult run_multi_surface(Predictor& predictor, const Sample& sample,
                                        const JointMask& gt_joint, const EvalConfig& cfg) {
  const int surfaces = gt_joint.surface_count();
  if (surfaces < 1) throw DatasetError("image '" + sample.id + "' has no surfaces");

  std::vector<BinaryMask> gts;
  for (int k = 1; k <= surfaces; ++k) {
    gts.push_back(joint_extract(gt_joint, k));
    if (gts.back().none()) {
      throw DatasetError("image '" + sample.id + "': surface " + std::to_string(k) + " is empty");
    }
  }

  MultiSurfaceRunResult out;
  std::vector<SurfaceTrack> tracks;
  JointMask joint(gt_joint.height(), gt_joint.width(), surfaces);

  // Phase 1: every surface once, in id order, pasted over earlier ones.
  for (int k = 1; k <= surfaces; ++k) {
    SurfaceTrack track = fresh_track(k, gts[static_cast<std::size_t>(k - 1)]);
    improve_surface(predictor, sample, gts[static_cast<std::size_t>(k - 1)], cfg, track);
    out.phase1.push_back(to_result(track));
    joint = joint_insert_classical(joint, k, track.mask);
    tracks.push_back(std::move(track));
  }
  std::vector<bool> failed(static_cast<std::size_t>(surfaces));
  for (int k = 0; k < surfaces; ++k) failed[static_cast<std::size_t>(k)] = !tracks[static_cast<std::size_t>(k)].succeeded;

  // Phase 2: revisit the worst surface until the average condition holds.
  std::vector<double> ious = surface_ious(joint, gt_joint);
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  while (mean(ious) < cfg.theta_avg()) {
    for (int k = 0; k < surfaces; ++k) {
      const auto i = static_cast<std::size_t>(k);
      if (!failed[i] && ious[i] < cfg.theta_iou() && tracks[i].clicks_used >= cfg.n_max()) {
        failed[i] = true;
      }
    }
    const std::optional<int> pick = select_worst_surface(ious, failed, cfg.theta_iou());
    if (!pick) break;
    const auto i = static_cast<std::size_t>(*pick - 1);
    ++out.revisit_count;
    out.revisit_order.push_back(*pick);

    SurfaceTrack& track = tracks[i];
    track.mask = joint_extract(joint, *pick);
    improve_surface(predictor, sample, gts[i], cfg, track);
    if (!track.succeeded) failed[i] = true;
    joint = joint_insert_revisit(joint, *pick, track.mask);
    ious = surface_ious(joint, gt_joint);
  }

  for (const SurfaceTrack& t : tracks) {
    out.per_surface_clicks.push_back(t.clicks_used);
    out.click_seconds += t.click_seconds;
  }
  out.per_surface_failed = failed;
  out.final_avg_iou = mean(ious);
  out.final_ious = ious;
  out.final_joint = std::move(joint);
  return out;
}

ImageResult evaluate_sample(Predictor& predictor, const Sample& sample, const EvalConfig& cfg,
                            const DatasetEvalOptions& options) {
  ImageResult r;
  r.image_id = sample.id;
  r.surfaces = sample.gt_joint.surface_count();
  try {
    const auto start = Clock::now();
    try {
      predictor.prepare(sample);
    } catch (const PredictorError&) {
      rethrow_with_context("image '" + sample.id + "' prepare");
    }
    r.feature_seconds = seconds_since(start);

    if (options.mode == EvalMode::single) {
      const std::vector<double> thetas =
          options.thetas.empty() ? std::vector<double>{cfg.theta_iou()} : options.thetas;
      for (double theta : thetas) {
        const EvalConfig c = cfg.with_theta_iou(theta);
        std::vector<SurfaceRunResult> runs;
        for (int k = 1; k <= r.surfaces; ++k) {
          const BinaryMask gt = joint_extract(sample.gt_joint, k);
          if (gt.none()) {
            throw DatasetError("image '" + sample.id + "': surface " + std::to_string(k) + " is empty");
          }
          runs.push_back(run_single_surface(predictor, sample, k, gt, c));
          r.click_seconds += runs.back().click_seconds;
          r.clicks += runs.back().clicks_used;
        }
        r.single.push_back(std::move(runs));
      }
    } else {
      r.multi = run_multi_surface(predictor, sample, sample.gt_joint, cfg);
      r.click_seconds = r.multi->click_seconds;
      r.clicks = r.multi->total_clicks();
    }
  } catch (const PredictorError& e) {
    r.error = e.what();
    r.single.clear();
    r.multi.reset();
  }
  return r;
}

std::vector<ImageResult> evaluate_dataset(const DatasetManifest& manifest,
                                          const PredictorFactory& factory, const EvalConfig& cfg,
                                          const DatasetEvalOptions& options) {
  const std::size_t n = manifest.images.size();
  std::vector<ImageResult> results(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::atomic<bool> stop{false};

  const auto worker = [&] {
    try {
      std::unique_ptr<Predictor> predictor = factory();
      while (!stop.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        const Sample sample = load_sample(manifest, manifest.images[i]);
        results[i] = evaluate_sample(*predictor, sample, cfg, options);
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      stop.store(true);
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

NocEntry noc_of(std::span<const SurfaceRunResult> runs, double theta, int n_max) {
  NocEntry e;
  e.theta_iou = theta;
  e.surfaces = static_cast<int>(runs.size());
  double sum = 0.0;
  for (const SurfaceRunResult& r : runs) {
    if (r.succeeded) {
      sum += r.clicks_used;
    } else {
      sum += n_max;
      ++e.failures;
    }
  }
  e.noc = runs.empty() ? 0.0 : sum / static_cast<double>(runs.size());
  return e;
}

EvalReport aggregate(std::span<const ImageResult> results, const EvalConfig& cfg,
                     const DatasetEvalOptions& options, const Fingerprints& fingerprints) {
  if (results.empty()) throw ConfigError("aggregate: no results");
  EvalReport report;
  report.mode = options.mode == EvalMode::single ? "single" : "multi";
  report.n_max = cfg.n_max();
  report.fingerprints = fingerprints;

  const std::vector<double> thetas = options.mode == EvalMode::single && !options.thetas.empty()
                                         ? options.thetas
                                         : std::vector<double>{cfg.theta_iou()};
  std::vector<std::vector<SurfaceRunResult>> per_theta(thetas.size());
  MultiSurfaceMetrics multi{cfg.theta_iou(), cfg.theta_avg(), 0.0, 0.0, 0, 0, 0};
  long long multi_clicks = 0;

  for (const ImageResult& r : results) {
    report.latency.feature_seconds += r.feature_seconds;
    report.latency.click_seconds += r.click_seconds;
    report.latency.clicks += r.clicks;
    ++report.latency.images;
    if (r.error) {
      report.errors.push_back({r.image_id, *r.error});
      continue;
    }
    ImageSummary s;
    s.image_id = r.image_id;
    s.surfaces = r.surfaces;
    if (options.mode == EvalMode::single) {
      for (std::size_t t = 0; t < r.single.size() && t < thetas.size(); ++t) {
        std::vector<int> clicks;
        for (const SurfaceRunResult& run : r.single[t]) {
          per_theta[t].push_back(run);
          clicks.push_back(run.succeeded ? run.clicks_used : cfg.n_max());
        }
        s.single_clicks.push_back(std::move(clicks));
      }
    } else if (r.multi) {
      const MultiSurfaceRunResult& m = *r.multi;
      std::vector<int> phase1;
      for (const SurfaceRunResult& run : m.phase1) {
        per_theta[0].push_back(run);
        phase1.push_back(run.succeeded ? run.clicks_used : cfg.n_max());
      }
      s.single_clicks.push_back(std::move(phase1));
      for (std::size_t k = 0; k < m.per_surface_clicks.size(); ++k) {
        const bool f = m.per_surface_failed[k];
        multi_clicks += f ? cfg.n_max() : m.per_surface_clicks[k];
        multi.failures += f ? 1 : 0;
        ++multi.surfaces;
      }
      multi.revisits += m.revisit_count;
      s.multi_clicks = m.per_surface_clicks;
      s.multi_failed = m.per_surface_failed;
      s.revisits = m.revisit_count;
      s.final_avg_iou = m.final_avg_iou;
    }
    report.images.push_back(std::move(s));
  }

  for (std::size_t t = 0; t < thetas.size(); ++t) {
    report.noc.push_back(noc_of(per_theta[t], thetas[t], cfg.n_max()));
  }
  if (options.mode == EvalMode::multi) {
    if (multi.surfaces > 0) {
      multi.nocms = static_cast<double>(multi_clicks) / multi.surfaces;
      multi.frms = 100.0 * multi.failures / multi.surfaces;
    }
    report.multi = multi;
  }
  return report;
}

}  // namespace mmms
