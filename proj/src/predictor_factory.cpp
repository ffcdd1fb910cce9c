#include "mmms/predictor_factory.hpp"

#include <charconv>
#include <memory>

#include "mmms/classical.hpp"
#include "mmms/errors.hpp"
#include "mmms/neural_predictor.hpp"
#include "mmms/remote.hpp"

namespace mmms {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T number(const PredictorSpec& spec, const std::string& key, T fallback) {
  const auto it = spec.options.find(key);
  if (it == spec.options.end()) return fallback;
  T value{};
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("predictor option " + key + "=" + it->second + " is not a number");
  }
  return value;
}

void reject_unknown(const PredictorSpec& spec, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : spec.options) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown option '" + key + "' for predictor " + spec.kind);
  }
}

std::vector<std::string> modality_names(const PredictorSpec& spec, const FactoryContext& ctx,
                                        bool default_all) {
  const auto it = spec.options.find("modalities");
  if (it != spec.options.end()) {
    if (it->second == "none" || it->second.empty()) return {};
    return split(it->second, '+');
  }
  std::vector<std::string> out;
  if (default_all && ctx.manifest != nullptr) {
    for (const ModalitySpec& m : ctx.manifest->modalities) out.push_back(m.name);
  }
  return out;
}

PredictorFactory neural_factory(const PredictorSpec& spec, const FactoryContext& ctx) {
  reject_unknown(spec, {"res", "patch", "dim", "depth", "mlp", "head", "enc", "cs", "seed",
                        "modalities", "features"});
  nn::ModelConfig cfg;
  cfg.resolution = number(spec, "res", 448);
  cfg.seed = number<std::uint64_t>(spec, "seed", ctx.seed);
  cfg.backbone.patch = number(spec, "patch", 16);
  cfg.backbone.dim = number(spec, "dim", 768);
  cfg.backbone.depth = number(spec, "depth", 12);
  cfg.backbone.mlp_ratio = number(spec, "mlp", 1.0);
  cfg.backbone.seed = cfg.seed;
  cfg.head_dim = number(spec, "head", 256);
  cfg.encoder_depth = number(spec, "enc", 1);
  cfg.csnet_depth = number(spec, "cs", 1);
  for (const std::string& name : modality_names(spec, ctx, true)) {
    int channels = 1;
    if (ctx.manifest != nullptr) {
      bool found = false;
      for (const ModalitySpec& m : ctx.manifest->modalities) {
        if (m.name == name) {
          channels = m.channels;
          found = true;
        }
      }
      if (!found) throw ConfigError("neural: dataset has no modality '" + name + "'");
    }
    cfg.modalities.push_back({name, channels});
  }
  std::shared_ptr<const nn::FeatureProvider> provider;
  if (const auto it = spec.options.find("features"); it != spec.options.end()) {
    provider = std::make_shared<const nn::ArchiveBackbone>(it->second, cfg.backbone.patch,
                                                           cfg.backbone.dim);
  }
  auto model = std::make_shared<const nn::Model>(cfg, provider);
  return [model] { return std::make_unique<NeuralPredictor>(model); };
}

}  // namespace

PredictorSpec parse_predictor_spec(const std::string& text) {
  PredictorSpec spec;
  const std::size_t colon = text.find(':');
  spec.kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (spec.kind == "oracle" || spec.kind == "remote") {
    spec.argument = rest;
    if (spec.kind == "remote" && rest.empty()) throw ConfigError("remote predictor needs a command");
    return spec;
  }
  if (spec.kind != "classical" && spec.kind != "neural") {
    throw ConfigError("unknown predictor '" + spec.kind + "'");
  }
  if (!rest.empty()) {
    for (const std::string& item : split(rest, ',')) {
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ConfigError("predictor option '" + item + "' is not key=value");
      }
      spec.options[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  return spec;
}

PredictorFactory make_predictor_factory(const std::string& text, const FactoryContext& ctx) {
  const PredictorSpec spec = parse_predictor_spec(text);
  if (spec.kind == "oracle") {
    if (spec.argument.empty()) return [] { return std::make_unique<GroundTruthOracle>(); };
    auto scripts = std::make_shared<const std::map<std::string, OracleScript>>(
        load_oracle_scripts(spec.argument));
    return [scripts] { return std::make_unique<ScriptedOracle>(*scripts); };
  }
  if (spec.kind == "classical") {
    reject_unknown(spec, {"eps", "bg", "modalities"});
    ClassicalParams params;
    params.epsilon = number(spec, "eps", params.epsilon);
    params.background_fraction = number(spec, "bg", params.background_fraction);
    params.modalities = modality_names(spec, ctx, false);
    ClassicalPredictor probe(params);  // validates parameters up front
    return [params] { return std::make_unique<ClassicalPredictor>(params); };
  }
  if (spec.kind == "neural") return neural_factory(spec, ctx);
  RemoteParams params{spec.argument, ctx.remote_timeout, 1};
  return [params] { return std::make_unique<RemotePredictor>(params); };
}

}  // namespace mmms
