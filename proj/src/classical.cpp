#include "mmms/classical.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "mmms/errors.hpp"

namespace mmms {

GeodesicResult geodesic_labels(const std::vector<float>& features, int height, int width,
                               int channels, std::span<const Click> clicks, double epsilon) {
  const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  GeodesicResult out;
  out.distance.assign(n, std::numeric_limits<double>::infinity());
  out.positive.assign(n, 0);

  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (const Click& c : clicks) {
    if (c.row < 0 || c.col < 0 || c.row >= height || c.col >= width) {
      throw DimensionError("classical: click outside the image");
    }
    const auto i = static_cast<std::uint32_t>(c.row * width + c.col);
    out.distance[i] = 0.0;
    if (c.positive()) out.positive[i] = 1;
    heap.emplace(0.0, i);
  }

  const auto edge = [&](std::size_t a, std::size_t b) {
    double sum = 0.0;
    const float* fa = features.data() + a * static_cast<std::size_t>(channels);
    const float* fb = features.data() + b * static_cast<std::size_t>(channels);
    for (int c = 0; c < channels; ++c) {
      const double d = static_cast<double>(fa[c]) - static_cast<double>(fb[c]);
      sum += d * d;
    }
    return std::sqrt(sum) + epsilon;
  };
  const auto relax = [&](std::uint32_t u, std::uint32_t v) {
    const double candidate = out.distance[u] + edge(u, v);
    if (candidate < out.distance[v]) {
      out.distance[v] = candidate;
      out.positive[v] = out.positive[u];
      heap.emplace(candidate, v);
    } else if (candidate == out.distance[v] && out.positive[u] && !out.positive[v]) {
      out.positive[v] = 1;
      heap.emplace(candidate, v);
    }
  };

  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > out.distance[u]) continue;
    const int r = static_cast<int>(u) / width;
    const int c = static_cast<int>(u) % width;
    if (r > 0) relax(u, u - static_cast<std::uint32_t>(width));
    if (r + 1 < height) relax(u, u + static_cast<std::uint32_t>(width));
    if (c > 0) relax(u, u - 1);
    if (c + 1 < width) relax(u, u + 1);
  }
  return out;
}

ClassicalPredictor::ClassicalPredictor(ClassicalParams params) : params_(std::move(params)) {
  if (!(params_.epsilon > 0.0)) throw ConfigError("classical: epsilon must be positive");
  if (!(params_.background_fraction > 0.0 && params_.background_fraction <= 1.0)) {
    throw ConfigError("classical: background fraction must lie in (0, 1]");
  }
}

std::string ClassicalPredictor::describe() const {
  std::ostringstream ss;
  ss << "classical(eps=" << params_.epsilon << ",bg=" << params_.background_fraction;
  if (!params_.modalities.empty()) {
    ss << ",modalities=";
    for (std::size_t i = 0; i < params_.modalities.size(); ++i) {
      ss << (i ? "+" : "") << params_.modalities[i];
    }
  }
  ss << ")";
  return ss.str();
}

void ClassicalPredictor::prepare(const Sample& sample) {
  std::vector<const Tensor3*> planes{&sample.rgb};
  if (params_.modalities.empty()) {
    for (const NamedTensor& m : sample.modalities) planes.push_back(&m.tensor);
  } else {
    for (const std::string& name : params_.modalities) {
      const Tensor3* t = sample.modality(name);
      if (t == nullptr) {
        throw PredictorError("classical: image '" + sample.id + "' lacks modality '" + name + "'");
      }
      planes.push_back(t);
    }
  }
  height_ = sample.height();
  width_ = sample.width();
  channels_ = 0;
  for (const Tensor3* t : planes) {
    if (t->height() != height_ || t->width() != width_) {
      throw DimensionError("classical: modality resolution differs from RGB");
    }
    channels_ += t->channels();
  }
  const std::size_t n = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  features_.assign(n * static_cast<std::size_t>(channels_), 0.0f);
  int offset = 0;
  for (const Tensor3* t : planes) {
    const int tc = t->channels();
    const float* src = t->data();
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < tc; ++c) {
        features_[i * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(offset + c)] =
            src[i * static_cast<std::size_t>(tc) + static_cast<std::size_t>(c)];
      }
    }
    offset += tc;
  }
}

PredictResponse ClassicalPredictor::predict(const PredictRequest& request) {
  if (features_.empty()) throw PredictorError("classical: predict before prepare");
  if (request.prev_mask.height() != height_ || request.prev_mask.width() != width_) {
    throw DimensionError("classical: previous mask does not match the prepared image");
  }
  bool any_positive = false;
  bool any_negative = false;
  for (const Click& c : request.clicks) {
    (c.positive() ? any_positive : any_negative) = true;
  }
  if (!any_positive) throw PredictorError("classical: needs at least one positive click");

  const auto start = std::chrono::steady_clock::now();
  const GeodesicResult g =
      geodesic_labels(features_, height_, width_, channels_, request.clicks, params_.epsilon);

  ProbabilityMap map{height_, width_, std::vector<float>(g.distance.size(), 0.0f)};
  if (any_negative) {
    for (std::size_t i = 0; i < g.positive.size(); ++i) map.values[i] = g.positive[i];
  } else {
    double max_distance = 0.0;
    for (double d : g.distance) max_distance = std::max(max_distance, d);
    const double bound = params_.background_fraction * max_distance;
    for (std::size_t i = 0; i < g.distance.size(); ++i) {
      map.values[i] = g.distance[i] <= bound ? 1.0f : 0.0f;
    }
  }
  PredictTiming timing;
  timing.click_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(map), timing};
}

}  // namespace mmms
