#include "mmms/predictor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mmms/errors.hpp"
#include "mmms/wire.hpp"

namespace mmms {

BinaryMask binarize(const ProbabilityMap& map, double threshold) {
  BinaryMask out(map.height, map.width);
  if (map.values.size() != out.size()) {
    throw DimensionError("binarize: probability map holds " + std::to_string(map.values.size()) +
                         " values for " + std::to_string(map.height) + "x" +
                         std::to_string(map.width));
  }
  auto bits = out.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = map.values[i] > threshold ? 1 : 0;
  return out;
}

ProbabilityMap to_probabilities(const BinaryMask& mask) {
  ProbabilityMap out{mask.height(), mask.width(), {}};
  out.values.assign(mask.bits().begin(), mask.bits().end());
  return out;
}

ScriptedOracle::ScriptedOracle(std::map<std::string, OracleScript> scripts)
    : scripts_(std::move(scripts)) {}

ScriptedOracle::ScriptedOracle(OracleScript script)
    : fallback_(std::make_shared<const OracleScript>(std::move(script))) {}

std::string ScriptedOracle::describe() const {
  std::ostringstream ss;
  ss << "oracle:script(images=" << scripts_.size() << ",fallback=" << (fallback_ ? 1 : 0) << ")";
  return ss.str();
}

void ScriptedOracle::prepare(const Sample& sample) {
  const auto it = scripts_.find(sample.id);
  if (it != scripts_.end()) {
    active_ = &it->second;
  } else if (fallback_) {
    active_ = fallback_.get();
  } else {
    throw PredictorError("oracle script has no entry for image '" + sample.id + "'");
  }
}

PredictResponse ScriptedOracle::predict(const PredictRequest& request) {
  if (active_ == nullptr) throw PredictorError("oracle: predict before prepare");
  const auto it = active_->per_surface.find(request.surface);
  if (it == active_->per_surface.end() || it->second.empty()) {
    throw PredictorError("oracle script has no masks for surface " +
                         std::to_string(request.surface));
  }
  const auto& masks = it->second;
  const std::size_t call = request.clicks.empty() ? 0 : request.clicks.size() - 1;
  const BinaryMask& mask = masks[std::min(call, masks.size() - 1)];
  require_same_shape(mask, request.prev_mask, "oracle");
  return {to_probabilities(mask), {}};
}

void GroundTruthOracle::prepare(const Sample& sample) { gt_ = sample.gt_joint; }

PredictResponse GroundTruthOracle::predict(const PredictRequest& request) {
  if (request.surface < 1 || request.surface > gt_.surface_count()) {
    throw PredictorError("oracle: unknown surface " + std::to_string(request.surface));
  }
  return {to_probabilities(joint_extract(gt_, request.surface)), {}};
}

std::map<std::string, OracleScript> load_oracle_scripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read oracle script " + path);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("images") || !j.at("images").is_object()) {
    throw ConfigError("oracle script " + path + " must be {\"images\": {...}}");
  }
  std::map<std::string, OracleScript> out;
  try {
    for (const auto& [id, surfaces] : j.at("images").items()) {
      OracleScript script;
      for (const auto& [key, masks] : surfaces.items()) {
        auto& list = script.per_surface[std::stoi(key)];
        for (const auto& m : masks) {
          list.push_back(rle_decode(wire::decode_rle(m, id + "." + key)));
        }
        if (list.empty()) throw ConfigError("oracle script: empty mask list for " + id + "." + key);
      }
      out.emplace(id, std::move(script));
    }
  } catch (const ProtocolError& e) {
    throw ConfigError(std::string("oracle script: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("oracle script: ") + e.what());
  }
  return out;
}

}  // namespace mmms
