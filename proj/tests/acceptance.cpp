// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "mmms/classical.hpp"
#include "mmms/click_sim.hpp"
#include "mmms/errors.hpp"
#include "mmms/eval.hpp"
#include "mmms/neural_predictor.hpp"
#include "mmms/nn/model.hpp"
#include "mmms/nn/segformer.hpp"
#include "mmms/remote.hpp"
#include "mmms/report.hpp"
#include "mmms/synth.hpp"
#include "oracles.hpp"

using namespace mmms;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failing expectation.
struct Checker {
  Outcome out;
  void expect(bool cond, const std::string& what) {
    if (!cond && out.ok) {
      out.ok = false;
      out.detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

EvalConfig config(double theta_iou, double theta_avg, int n_max) {
  return EvalConfig(EvalParams{theta_iou, theta_avg, n_max});
}

Outcome iou_agreement() {
  Checker c;
  std::mt19937_64 rng(1001);
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int h = 1 + static_cast<int>(rng() % 64), w = 1 + static_cast<int>(rng() % 64);
    const double da = (rng() % 5) / 4.0, db = (rng() % 5) / 4.0;
    const auto a = oracle::random_bits(rng, static_cast<std::size_t>(h) * w, da);
    const auto b = oracle::random_bits(rng, static_cast<std::size_t>(h) * w, db);
    const double got = iou(oracle::to_mask(a, h, w), oracle::to_mask(b, h, w));
    const double want = oracle::iou(a, b);
    c.expect(std::abs(got - want) <= 1e-9, "pair " + std::to_string(i) + ": " + fmt(got) + " vs " + fmt(want));
  }
  const double s = seconds_since(t0);
  c.expect(s < 5.0, "took " + fmt(s) + " s");
  if (c.out.ok) c.out.detail = "1000 pairs in " + fmt(s) + " s";
  return c.out;
}

Outcome joint_rules() {
  Checker c;
  std::mt19937_64 rng(1002);
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int h = 1 + static_cast<int>(rng() % 48), w = 1 + static_cast<int>(rng() % 48);
    const int L = 1 + static_cast<int>(rng() % 6);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    oracle::Labels labels(n);
    for (auto& l : labels) l = static_cast<std::uint16_t>(rng() % (L + 1));
    const auto bits = oracle::random_bits(rng, n, 0.4);
    const int k = 1 + static_cast<int>(rng() % L);
    const JointMask joint(h, w, L, std::vector<SurfaceLabel>(labels.begin(), labels.end()));
    const BinaryMask m = oracle::to_mask(bits, h, w);
    for (int rule = 0; rule < 2; ++rule) {
      const JointMask got = rule == 0 ? joint_insert_classical(joint, k, m) : joint_insert_revisit(joint, k, m);
      const auto want = oracle::insert(labels, k, bits, rule);
      c.expect(std::equal(got.labels().begin(), got.labels().end(), want.begin(), want.end()),
               "triple " + std::to_string(i) + " rule " + std::to_string(rule));
      c.expect(oracle::from_mask(joint_extract(got, k)) == oracle::extract(want, k),
               "extract after triple " + std::to_string(i));
    }
  }
  const double s = seconds_since(t0);
  c.expect(s < 5.0, "took " + fmt(s) + " s");
  if (c.out.ok) c.out.detail = "1000 triples, both rules, in " + fmt(s) + " s";
  return c.out;
}

// Shapes whose largest error region is unique and whose interior maximum is
// attained at a single pixel, so the click location is unambiguous.
Outcome click_placement() {
  Checker c;
  std::mt19937_64 rng(1003);
  int accepted = 0, tried = 0;
  while (accepted < 50 && tried < 20000) {
    ++tried;
    const int h = 8 + static_cast<int>(rng() % 40), w = 8 + static_cast<int>(rng() % 40);
    const auto gt = oracle::random_blobs(rng, h, w, 1 + static_cast<int>(rng() % 3));
    const auto pred = (rng() & 1) ? oracle::random_blobs(rng, h, w, 1) : oracle::Bits(gt.size(), 0);
    oracle::Bits fn(gt.size()), fp(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      fn[i] = gt[i] && !pred[i];
      fp[i] = pred[i] && !gt[i];
    }
    auto comps = oracle::components(fn, h, w);
    for (auto& comp : oracle::components(fp, h, w)) comps.push_back(std::move(comp));
    if (comps.empty()) continue;
    std::size_t best = 0, runner = 0;
    for (const auto& comp : comps) {
      if (comp.size() > best) {
        runner = best;
        best = comp.size();
      } else {
        runner = std::max(runner, comp.size());
      }
    }
    if (best == runner) continue;
    const auto& region = *std::find_if(comps.begin(), comps.end(), [&](const auto& v) { return v.size() == best; });
    oracle::Bits rb(gt.size(), 0);
    for (int p : region) rb[p] = 1;
    const auto d = oracle::edt_squared(rb, h, w);
    std::int64_t top = -1;
    int where = -1, ties = 0;
    for (int p : region) {
      if (d[p] > top) {
        top = d[p];
        where = p;
        ties = 1;
      } else if (d[p] == top) {
        ++ties;
      }
    }
    if (ties != 1) continue;
    ++accepted;
    const auto got = next_click(oracle::to_mask(pred, h, w), oracle::to_mask(gt, h, w));
    const bool ok = got && got->row == where / w && got->col == where % w &&
                    got->positive() == (gt[where] != 0);
    c.expect(ok, "shape " + std::to_string(accepted) + " (" + std::to_string(h) + "x" + std::to_string(w) + ")");
  }
  c.expect(accepted == 50, "only " + std::to_string(accepted) + " unambiguous shapes found");
  if (c.out.ok) c.out.detail = "50 unambiguous shapes out of " + std::to_string(tried) + " drawn";
  return c.out;
}

Outcome scripted_noc() {
  Checker c;
  const Sample s = fixtures::box_sample(24, 24, 5, 18, 4, 15);
  const BinaryMask gt = joint_extract(s.gt_joint, 1);
  const auto cfg = config(85, 85, 20);
  std::vector<SurfaceRunResult> runs;
  for (int k = 1; k <= 5; ++k) {
    OracleScript script;
    std::vector<BinaryMask> masks(static_cast<std::size_t>(k - 1), BinaryMask(24, 24));
    masks.push_back(gt);
    script.per_surface[1] = masks;
    ScriptedOracle o(script);
    o.prepare(s);
    const auto r = run_single_surface(o, s, 1, gt, cfg);
    c.expect(r.clicks_used == k && r.succeeded, "k=" + std::to_string(k) + " used " + std::to_string(r.clicks_used));
  }
  OracleScript never;
  never.per_surface[1] = {BinaryMask(24, 24)};
  ScriptedOracle o(never);
  o.prepare(s);
  const auto fail = run_single_surface(o, s, 1, gt, cfg);
  c.expect(fail.clicks_used == 20 && !fail.succeeded, "failing script used " + std::to_string(fail.clicks_used));
  // successes after 2 and 4 clicks plus one failure
  runs = {SurfaceRunResult{1, 2, {}, true, {}, {}, 0.0}, SurfaceRunResult{2, 4, {}, true, {}, {}, 0.0}, fail};
  const NocEntry e = noc_of(runs, 85, 20);
  c.expect(std::abs(e.noc - 26.0 / 3.0) < 1e-12, "aggregate NoC " + fmt(e.noc));
  if (c.out.ok) c.out.detail = "k=1..5 exact, failure at 20, NoC " + fmt(e.noc);
  return c.out;
}

Outcome disjoint_equivalence() {
  Checker c;
  SynthParams p;
  p.seed = 1005;
  p.overlap = OverlapMode::disjoint;
  p.count = 8;
  std::vector<ImageResult> results;
  const auto cfg = config(85, 85, 20);
  DatasetEvalOptions opts;
  for (int i = 0; i < p.count; ++i) {
    const Sample s = generate_synthetic_sample(p, i);
    fixtures::ErodingOracle o;
    results.push_back(evaluate_sample(o, s, cfg, opts));
  }
  const EvalReport r = aggregate(results, cfg, opts, {"d", "p", "c"});
  c.expect(r.multi.has_value(), "no multi metrics");
  if (!r.multi) return c.out;
  c.expect(r.multi->revisits == 0, std::to_string(r.multi->revisits) + " revisits");
  c.expect(r.multi->nocms == r.noc[0].noc, "NoCMS " + fmt(r.multi->nocms) + " vs NoC " + fmt(r.noc[0].noc));
  c.expect(r.noc[0].noc > 1.0, "oracle needed only one click everywhere");
  if (c.out.ok) c.out.detail = "NoC = NoCMS = " + fmt(r.multi->nocms) + ", 0 revisits";
  return c.out;
}

Outcome dominance() {
  Checker c;
  const auto cfg = config(90, 90, 20);
  ClassicalPredictor pred;
  int surfaces = 0, revisits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthParams p;
    p.seed = 2000 + seed;
    p.overlap = OverlapMode::adjacent;
    for (int index = 0; index < 3; ++index) {
      Sample s = generate_synthetic_sample(p, index);
      // noisy colors make the geodesic masks bleed into neighbouring surfaces
      std::mt19937_64 rng(seed * 3 + index);
      std::normal_distribution<float> noise(0.0f, 0.3f);
      for (float& v : s.rgb.values()) v += noise(rng);
      pred.prepare(s);
      const auto m = run_multi_surface(pred, s, s.gt_joint, cfg);
      const std::string where = "seed " + std::to_string(seed) + " image " + std::to_string(index);
      for (std::size_t k = 0; k < m.phase1.size(); ++k) {
        const int single = m.phase1[k].succeeded ? m.phase1[k].clicks_used : cfg.n_max();
        const int multi = m.per_surface_failed[k] ? cfg.n_max() : m.per_surface_clicks[k];
        c.expect(multi >= single, where + " surface " + std::to_string(k + 1));
        c.expect(m.per_surface_clicks[k] <= cfg.n_max(), where + ": budget exceeded");
        ++surfaces;
      }
      c.expect(m.total_clicks() <= s.gt_joint.surface_count() * cfg.n_max(), where + ": total budget exceeded");
      revisits += m.revisit_count;
    }
  }
  if (c.out.ok) c.out.detail = std::to_string(surfaces) + " surfaces, " + std::to_string(revisits) + " revisits";
  return c.out;
}

Outcome overlap_trace() {
  Checker c;
  const auto f = fixtures::load_overlap_fixture();
  ScriptedOracle o(f.script);
  o.prepare(f.sample);
  const auto r = run_multi_surface(o, f.sample, f.sample.gt_joint, config(f.theta_iou, f.theta_avg, f.n_max));
  const auto& e = f.expected;
  std::vector<int> phase1;
  for (const auto& p : r.phase1) phase1.push_back(p.clicks_used);
  c.expect(phase1 == e.at("phase1_clicks").get<std::vector<int>>(), "phase-1 clicks");
  c.expect(r.per_surface_clicks == e.at("per_surface_clicks").get<std::vector<int>>(), "per-surface clicks");
  c.expect(r.per_surface_failed == e.at("per_surface_failed").get<std::vector<bool>>(), "failure flags");
  c.expect(r.revisit_order == e.at("revisit_order").get<std::vector<int>>(), "revisit order");
  c.expect(r.final_ious == e.at("final_ious").get<std::vector<double>>(), "final IoUs");
  const auto labels = e.at("final_joint").get<std::vector<SurfaceLabel>>();
  c.expect(std::equal(r.final_joint.labels().begin(), r.final_joint.labels().end(), labels.begin(), labels.end()),
           "final joint mask");
  if (c.out.ok) c.out.detail = std::to_string(r.revisit_count) + " revisits, final mean IoU " + fmt(r.final_avg_iou);
  return c.out;
}

Outcome nn_shapes() {
  Checker c;
  nn::FpnConfig fc{768, 16, nn::kDefaultEmbed};
  c.expect(fc.d_hidden() == std::array<int, 4>{384, 384, 768, 1536}, "hidden widths");
  const std::array<int, 4> want_r{64, 16, 4, 1};
  for (int i = 0; i < 4; ++i) {
    c.expect(nn::reduction_for_stride(nn::kPyramidStrides[i]) == want_r[i], "reduction at level " + std::to_string(i));
  }
  nn::Init init(8);
  const nn::ParallelFpn fpn(fc, init);
  const nn::InverseParallelFpn inv(fc, init);
  std::mt19937_64 rng(1008);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  nn::BackboneFeatures f{448, 448, 16, 768, {}};
  for (int i = 0; i < 4; ++i) {
    Tensor3 t(28, 28, 768);
    for (float& v : t.values()) v = nd(rng);
    f.taps.push_back(std::move(t));
  }
  const nn::FeaturePyramid p = fpn(f);
  for (int i = 0; i < 4; ++i) {
    const int side = 448 / nn::kPyramidStrides[i];
    c.expect(p.levels[i].height() == side && p.levels[i].width() == side &&
                 p.levels[i].channels() == nn::kDefaultEmbed[i],
             "pyramid level " + std::to_string(i));
  }
  const nn::BackboneFeatures back = inv(p, 448, 448);
  c.expect(back.taps.size() == 4, "inverse tap count");
  for (const Tensor3& t : back.taps) {
    c.expect(t.height() == 28 && t.width() == 28 && t.channels() == 768, "inverse tap shape");
  }

  SynthParams sp;
  sp.seed = 1008;
  sp.height = 448;
  sp.width = 448;
  const Sample s = generate_synthetic_sample(sp, 0);
  nn::ModelConfig mc;
  mc.seed = 8;
  mc.backbone.seed = 8;
  for (const auto& m : s.modalities) mc.modalities.push_back({m.name, m.tensor.channels()});
  const nn::Model model(mc);
  const auto t0 = Clock::now();
  const nn::PreparedImage prep = model.prepare(s);
  const Tensor3 out = model.predict(prep, std::vector<Click>{{200, 200, Polarity::positive}}, BinaryMask(448, 448));
  const double secs = seconds_since(t0);
  c.expect(out.height() == 448 && out.width() == 448 && out.channels() == 1, "output shape");
  bool in_range = true;
  for (float v : out.values()) in_range = in_range && v >= 0.0f && v <= 1.0f;
  c.expect(in_range, "probabilities outside [0,1]");
  if (c.out.ok) c.out.detail = "448/P16/d768 forward in " + fmt(secs) + " s";
  return c.out;
}

nn::ModelConfig small_config(std::uint64_t seed) {
  nn::ModelConfig m;
  m.resolution = 64;
  m.backbone.patch = 8;
  m.backbone.dim = 32;
  m.backbone.depth = 4;
  m.backbone.seed = seed;
  m.dims = {8, 16, 24, 32};
  m.head_dim = 16;
  m.seed = seed;
  m.modalities = {{"depth", 1}};
  return m;
}

Outcome nn_stability() {
  Checker c;
  std::mt19937_64 rng(1009);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  nn::Init init(9);
  nn::EncoderBlock block = nn::EncoderBlock::make(16, 4, 4, init);
  block.attn.proj.zero();
  block.ffn.fc2.zero();
  Tensor3 x(8, 8, 16);
  for (float& v : x.values()) v = nd(rng);
  c.expect(block(x) == x, "encoder block identity");
  nn::FuserConfig none;
  none.dims = {8, 16, 24, 32};
  nn::MmFuser fuser(none, init);
  nn::FeaturePyramid p;
  for (int i = 0; i < 4; ++i) {
    p.levels[i] = Tensor3(64 / nn::kPyramidStrides[i], 64 / nn::kPyramidStrides[i], none.dims[i]);
    for (float& v : p.levels[i].values()) v = nd(rng);
  }
  c.expect(fuser(p, {}) == p, "fuser without modalities is the identity");

  SynthParams sp;
  sp.seed = 1009;
  sp.height = 40;
  sp.width = 56;
  const Sample s = generate_synthetic_sample(sp, 0);
  const std::vector<Click> clicks{{10, 10, Polarity::positive}, {30, 40, Polarity::negative}};
  const BinaryMask prev(s.height(), s.width());
  const nn::Model a(small_config(3)), b(small_config(3));
  const auto pa = a.prepare(s);
  c.expect(pa.digest == b.prepare(s).digest, "same seed, different features");
  c.expect(a.predict(pa, clicks, prev) == b.predict(b.prepare(s), clicks, prev), "same seed, different output");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const nn::Model m(small_config(seed));
    const auto prep = m.prepare(s);
    bool finite = true;
    for (const Tensor3& level : prep.f_mix.levels)
      for (float v : level.values()) finite = finite && std::isfinite(v);
    for (float v : m.predict(prep, clicks, prev).values()) finite = finite && std::isfinite(v);
    c.expect(finite, "non-finite values for seed " + std::to_string(seed));
  }
  if (c.out.ok) c.out.detail = "identities exact, 100 seeds finite";
  return c.out;
}

Outcome feature_reuse() {
  Checker c;
  SynthParams sp;
  sp.seed = 1010;
  sp.height = 40;
  sp.width = 48;
  const Sample s = generate_synthetic_sample(sp, 0);
  auto model = std::make_shared<const nn::Model>(small_config(5));
  NeuralPredictor pred(model);
  const auto cfg = config(100, 100, 10);
  DatasetEvalOptions opts;
  opts.mode = EvalMode::single;
  opts.thetas = {100};
  const ImageResult r = evaluate_sample(pred, s, cfg, opts);
  c.expect(!r.error.has_value(), r.error.value_or(""));
  const long surfaces = s.gt_joint.surface_count();
  const nn::ModelCounters n = model->counters();
  c.expect(n.backbone == 1 && n.fpn == 1 && n.fuser == 1,
           "per-image stages ran " + std::to_string(n.backbone) + "/" + std::to_string(n.fpn) + "/" +
               std::to_string(n.fuser) + " times");
  c.expect(r.clicks == surfaces * 10, std::to_string(r.clicks) + " clicks");
  c.expect(n.patch_embed == r.clicks && n.csnet == r.clicks, "per-click stages ran " + std::to_string(n.csnet) + " times");
  const EvalReport rep = aggregate(std::vector<ImageResult>{r}, cfg, opts, {"d", "p", "c"});
  const double iso = 1000.0 * r.click_seconds / r.clicks;
  const double amo = 1000.0 * (r.click_seconds + r.feature_seconds) / r.clicks;
  c.expect(r.feature_seconds > 0.0, "feature time not recorded");
  c.expect(std::abs(rep.latency.isolated_ms_per_click() - iso) <= 1e-9 * (1 + iso), "isolated latency");
  c.expect(std::abs(rep.latency.amortized_ms_per_click() - amo) <= 1e-9 * (1 + amo), "amortized latency");
  if (c.out.ok) {
    c.out.detail = std::to_string(r.clicks) + " clicks, backbone once; isolated " + fmt(iso) + " ms, amortized " +
                   fmt(amo) + " ms";
  }
  return c.out;
}

RemoteParams remote(const std::string& mode, int timeout_ms) {
  return RemoteParams{std::string(MMMS_ECHO_PREDICTOR) + " " + mode, std::chrono::milliseconds(timeout_ms), 1};
}

Outcome remote_protocol() {
  Checker c;
  std::mt19937_64 rng(1011);
  RemotePredictor echo(remote("echo", 5000));
  const Sample s = fixtures::box_sample(37, 53, 3, 20, 4, 30);
  echo.prepare(s);
  int lossless = 0;
  for (int i = 0; i < 1000; ++i) {
    PredictRequest r;
    r.image_id = s.id;
    r.surface = 1;
    r.clicks.push_back({static_cast<int>(rng() % 37), static_cast<int>(rng() % 53), Polarity::positive});
    r.prev_mask = oracle::to_mask(oracle::random_bits(rng, 37 * 53, (rng() % 11) / 10.0), 37, 53);
    if (binarize(echo.predict(r).probabilities, 0.5) == r.prev_mask) ++lossless;
  }
  c.expect(lossless == 1000, std::to_string(lossless) + "/1000 round trips lossless");

  PredictRequest r{s.id, 1, {{5, 5, Polarity::positive}}, BinaryMask(37, 53)};
  std::string malformed = "no error", timeout = "no error";
  try {
    RemotePredictor p(remote("malformed", 5000));
    p.prepare(s);
    p.predict(r);
  } catch (const ProtocolError&) {
    malformed = "protocol";
  } catch (const std::exception& e) {
    malformed = e.what();
  }
  const auto t0 = Clock::now();
  try {
    RemotePredictor p(remote("hang", 300));
    p.prepare(s);
    p.predict(r);
  } catch (const TimeoutError&) {
    timeout = "timeout";
  } catch (const std::exception& e) {
    timeout = e.what();
  }
  const double waited = seconds_since(t0);
  c.expect(malformed == "protocol", "malformed reply gave: " + malformed);
  c.expect(timeout == "timeout", "hanging child gave: " + timeout);
  c.expect(waited < 3.0, "timeout took " + fmt(waited) + " s");
  if (c.out.ok) c.out.detail = "1000/1000 lossless; malformed -> ProtocolError, hang -> TimeoutError";
  return c.out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MMMS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_latency_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("latency") == std::string::npos) out += line + "\n";
  }
  return out;
}

Outcome end_to_end() {
  Checker c;
  fixtures::TempDir dir;
  const auto data = (dir.path() / "data").string();
  const auto t0 = Clock::now();
  c.expect(run_cli("gen-synth --seed 12 --count 20 --overlap adjacent --out " + data) == 0, "gen-synth failed");
  std::string json[2], csv[2];
  for (int run = 0; run < 2; ++run) {
    const auto j = dir.path() / ("r" + std::to_string(run) + ".json");
    const auto v = dir.path() / ("r" + std::to_string(run) + ".csv");
    const int code = run_cli("eval-multi --dataset " + data + " --predictor classical --workers 1 --out " +
                             j.string() + " --csv " + v.string());
    c.expect(code == 0, "eval-multi exited " + std::to_string(code));
    json[run] = slurp(j);
    csv[run] = slurp(v);
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "took " + fmt(secs) + " s");
  try {
    nlohmann::ordered_json a = nlohmann::ordered_json::parse(json[0]);
    nlohmann::ordered_json b = nlohmann::ordered_json::parse(json[1]);
    const EvalReport rep = report_from_json(a);
    validate(rep);
    c.expect(rep.images.size() == 20, std::to_string(rep.images.size()) + " images in report");
    c.expect(rep.errors.empty(), "report lists errors");
    c.expect(!csv[0].empty(), "empty CSV");
    a.erase("timing");
    b.erase("timing");
    c.expect(a.dump() == b.dump(), "JSON differs between runs");
    c.expect(without_latency_rows(csv[0]) == without_latency_rows(csv[1]), "CSV differs between runs");
    if (c.out.ok) {
      c.out.detail = "20 images, NoCMS " + fmt(rep.multi->nocms) + ", FR_MS " + fmt(rep.multi->frms) + "%, " +
                     fmt(secs) + " s for gen + 2 runs";
    }
  } catch (const std::exception& e) {
    c.expect(false, std::string("report invalid: ") + e.what());
  }
  return c.out;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"iou matches reference on 1000 random pairs", iou_agreement},
      {"joint insert/extract rules match reference", joint_rules},
      {"click simulator picks the unique deepest error pixel", click_placement},
      {"scripted oracle NoC bookkeeping", scripted_noc},
      {"disjoint surfaces: NoCMS equals NoC, no revisits", disjoint_equivalence},
      {"multi-surface clicks dominate single-surface clicks", dominance},
      {"overlap fixture revisit trace", overlap_trace},
      {"network shapes at 448/P16/d768", nn_shapes},
      {"residual identities, determinism, finite outputs", nn_stability},
      {"per-image features reused across clicks; latency split", feature_reuse},
      {"remote predictor protocol", remote_protocol},
      {"end-to-end CLI run is valid and reproducible", end_to_end},
  };
  int failed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.ok) ++failed;
    std::printf("%s  AC%02d  %s  (%s)\n", o.ok ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
