// mmms command-line entry point.
//
// Exit codes: 0 success, 2 configuration error, 3 dataset error,
// 4 predictor or protocol error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "mmms/errors.hpp"
#include "mmms/eval.hpp"
#include "mmms/hash.hpp"
#include "mmms/nn/backbone.hpp"
#include "mmms/nn/feature_archive.hpp"
#include "mmms/nn/layers.hpp"
#include "mmms/predictor_factory.hpp"
#include "mmms/report.hpp"
#include "mmms/service.hpp"
#include "mmms/synth.hpp"

namespace fs = std::filesystem;
using namespace mmms;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitPredictor = 4;

struct EvalArgs {
  std::string dataset;
  std::string predictor = "classical";
  std::vector<double> thetas;
  double theta_avg = 70.0;
  int max_clicks = 20;
  int workers = 1;
  std::uint64_t seed = 0;
  int timeout_ms = 10'000;
  std::string out = "report.json";
  std::string csv;
};

void add_eval_options(CLI::App* cmd, EvalArgs& a, bool multi) {
  cmd->add_option("--dataset", a.dataset, "dataset root (contains manifest.json)")->required();
  cmd->add_option("--predictor", a.predictor,
                  "oracle | oracle:FILE | classical[:k=v,...] | neural[:k=v,...] | remote:CMD");
  if (multi) {
    cmd->add_option("--theta-iou", a.thetas, "per-surface IoU threshold (percent)")
        ->expected(1);
    cmd->add_option("--theta-avg", a.theta_avg, "average IoU threshold (percent)");
  } else {
    cmd->add_option("--theta-iou", a.thetas, "IoU threshold(s) in percent; repeatable");
  }
  cmd->add_option("--max-clicks", a.max_clicks, "click budget per surface");
  cmd->add_option("--workers", a.workers, "parallel images");
  cmd->add_option("--seed", a.seed, "seed for seeded predictors");
  cmd->add_option("--timeout-ms", a.timeout_ms, "remote predictor per-call timeout");
  cmd->add_option("--out", a.out, "JSON report path");
  cmd->add_option("--csv", a.csv, "optional CSV report path");
}

int run_eval(const EvalArgs& a, EvalMode mode) {
  const DatasetManifest manifest = load_manifest(a.dataset);
  std::vector<double> thetas = a.thetas;
  if (thetas.empty()) thetas.push_back(mode == EvalMode::single ? 90.0 : 80.0);

  EvalParams params;
  params.theta_iou = mode == EvalMode::multi ? thetas.front() : *std::max_element(thetas.begin(), thetas.end());
  params.theta_avg = mode == EvalMode::multi ? a.theta_avg : std::min(a.theta_avg, params.theta_iou);
  params.n_max = a.max_clicks;
  const EvalConfig cfg(params);

  FactoryContext ctx;
  ctx.manifest = &manifest;
  ctx.remote_timeout = std::chrono::milliseconds(a.timeout_ms);
  ctx.seed = a.seed;
  const PredictorFactory factory = make_predictor_factory(a.predictor, ctx);

  DatasetEvalOptions options;
  options.mode = mode;
  options.thetas = mode == EvalMode::single ? thetas : std::vector<double>{};
  options.workers = a.workers;

  Fingerprints fp;
  fp.dataset = hex64(manifest_fingerprint(manifest));
  fp.predictor = factory()->describe();
  std::ostringstream config;
  config << (mode == EvalMode::single ? "single" : "multi") << ";" << cfg.describe();
  if (mode == EvalMode::single) {
    config << ";thetas=";
    for (std::size_t i = 0; i < thetas.size(); ++i) config << (i ? "/" : "") << thetas[i];
  }
  fp.config = config.str();

  const auto results = evaluate_dataset(manifest, factory, cfg, options);
  const EvalReport report = aggregate(results, cfg, options, fp);
  validate(report);
  emit(report, ReportFormat::json, a.out);
  if (!a.csv.empty()) emit(report, ReportFormat::csv, a.csv);

  for (const auto& [name, value] : report_metrics(report)) {
    std::printf("%-28s %.4f\n", name.c_str(), value);
  }
  for (const RunError& e : report.errors) {
    std::fprintf(stderr, "error: %s: %s\n", e.image_id.c_str(), e.message.c_str());
  }
  return report.errors.empty() ? 0 : kExitPredictor;
}

struct ExtractArgs {
  std::string dataset;
  std::string backbone = "stub:0";
  std::string out = "features";
  int resolution = 448;
  int patch = 16;
  int dim = 768;
  int depth = 12;
  double mlp = 1.0;
};

int run_extract(const ExtractArgs& a) {
  if (a.backbone.rfind("stub:", 0) != 0) throw ConfigError("backbone must be stub:SEED");
  nn::BackboneConfig cfg;
  try {
    cfg.seed = std::stoull(a.backbone.substr(5));
  } catch (const std::exception&) {
    throw ConfigError("backbone seed is not a number: " + a.backbone);
  }
  cfg.patch = a.patch;
  cfg.dim = a.dim;
  cfg.depth = a.depth;
  cfg.mlp_ratio = a.mlp;
  if (a.resolution % 32 != 0 || a.resolution % a.patch != 0) {
    throw ConfigError("resolution must be divisible by 32 and by the patch size");
  }
  const nn::StubBackbone backbone(cfg);
  const DatasetManifest manifest = load_manifest(a.dataset);
  fs::create_directories(a.out);
  for (const std::string& id : manifest.images) {
    const Sample s = load_sample(manifest, id);
    const Tensor3 rgb = nn::resize_bilinear(s.rgb, a.resolution, a.resolution);
    nn::write_feature_archive(nn::feature_archive_path(a.out, id), backbone.forward(rgb));
    std::printf("%s\n", id.c_str());
  }
  return 0;
}

struct SynthArgs {
  SynthParams params;
  std::string overlap = "adjacent";
  std::string out;
};

int run_synth(SynthArgs a) {
  a.params.overlap = parse_overlap_mode(a.overlap);
  if (a.params.count < 1) throw ConfigError("--count must be >= 1");
  if (a.params.surfaces_per_image < 1) throw ConfigError("--surfaces must be >= 1");
  const DatasetManifest m = generate_synthetic(a.params, a.out);
  std::printf("wrote %zu images to %s\n", m.images.size(), a.out.c_str());
  return 0;
}

struct ServeArgs {
  std::string dataset;
  std::string predictor = "classical";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  int idle_minutes = 30;
  int timeout_ms = 10'000;
};

Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  ServiceOptions opts;
  opts.manifest = load_manifest(a.dataset);
  opts.default_predictor = a.predictor;
  opts.context.remote_timeout = std::chrono::milliseconds(a.timeout_ms);
  opts.idle_timeout = std::chrono::minutes(a.idle_minutes);
  opts.static_dir = a.static_dir;
  make_predictor_factory(a.predictor, {&opts.manifest, opts.context.remote_timeout, 0});
  Service service(std::move(opts));
  if (!service.bind(a.host, a.port)) {
    throw ConfigError("cannot bind " + a.host + ":" + std::to_string(a.port));
  }
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::printf("listening on http://%s:%d\n", a.host.c_str(), a.port);
  std::fflush(stdout);
  service.listen();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-surface interactive segmentation benchmark"};
  app.require_subcommand(1);

  EvalArgs single_args;
  EvalArgs multi_args;
  ExtractArgs extract_args;
  SynthArgs synth_args;
  ServeArgs serve_args;

  auto* single = app.add_subcommand("eval-single", "NoC over every surface independently");
  add_eval_options(single, single_args, false);
  auto* multi = app.add_subcommand("eval-multi", "NoCMS / FRMS with a shared joint mask");
  add_eval_options(multi, multi_args, true);

  auto* extract = app.add_subcommand("extract-features", "bulk backbone feature extraction");
  extract->add_option("--dataset", extract_args.dataset)->required();
  extract->add_option("--backbone", extract_args.backbone, "stub:SEED");
  extract->add_option("--out", extract_args.out);
  extract->add_option("--resolution", extract_args.resolution);
  extract->add_option("--patch", extract_args.patch);
  extract->add_option("--dim", extract_args.dim);
  extract->add_option("--depth", extract_args.depth);
  extract->add_option("--mlp", extract_args.mlp);

  auto* synth = app.add_subcommand("gen-synth", "write a synthetic multi-surface dataset");
  synth->add_option("--seed", synth_args.params.seed);
  synth->add_option("--count", synth_args.params.count);
  synth->add_option("--surfaces", synth_args.params.surfaces_per_image);
  synth->add_option("--overlap", synth_args.overlap, "disjoint | adjacent");
  synth->add_option("--height", synth_args.params.height);
  synth->add_option("--width", synth_args.params.width);
  synth->add_option("--out", synth_args.out)->required();

  auto* serve = app.add_subcommand("serve", "annotation service");
  serve->add_option("--dataset", serve_args.dataset)->required();
  serve->add_option("--predictor", serve_args.predictor);
  serve->add_option("--host", serve_args.host);
  serve->add_option("--port", serve_args.port);
  serve->add_option("--static", serve_args.static_dir, "directory with UI assets");
  serve->add_option("--idle-minutes", serve_args.idle_minutes);
  serve->add_option("--timeout-ms", serve_args.timeout_ms);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*single) return run_eval(single_args, EvalMode::single);
    if (*multi) return run_eval(multi_args, EvalMode::multi);
    if (*extract) return run_extract(extract_args);
    if (*synth) return run_synth(synth_args);
    if (*serve) return run_serve(serve_args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DatasetError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return kExitDataset;
  } catch (const PredictorError& e) {
    std::fprintf(stderr, "predictor error: %s\n", e.what());
    return kExitPredictor;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "predictor error: %s\n", e.what());
    return kExitPredictor;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
