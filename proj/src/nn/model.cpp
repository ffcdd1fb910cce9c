#include "mmms/nn/model.hpp"

#include <algorithm>
#include <sstream>

#include "mmms/errors.hpp"
#include "mmms/hash.hpp"

namespace mmms::nn {
namespace {

std::shared_ptr<const FeatureProvider> default_provider(const ModelConfig& config,
                                                        std::shared_ptr<const FeatureProvider> p) {
  if (p) return p;
  return std::make_shared<const StubBackbone>(config.backbone);
}

const ModelConfig& checked(const ModelConfig& c) {
  if (c.resolution < 32 || c.resolution % 32 != 0) {
    throw ConfigError("model: resolution must be a positive multiple of 32");
  }
  if (c.resolution % c.backbone.patch != 0) {
    throw ConfigError("model: resolution must be divisible by the backbone patch size");
  }
  return c;
}

// Init streams per component so adding a modality leaves the others unchanged.
Init component_init(std::uint64_t seed, std::uint64_t component) {
  return Init(seed * 0x9E3779B97F4A7C15ull + component);
}

FpnConfig fpn_config(const ModelConfig& c, const FeatureProvider& p) {
  return {p.dim(), p.patch(), c.dims};
}

// Maps a source coordinate onto the working grid through pixel centers.
int rescale(int v, int from, int to) {
  const long long mapped = (2LL * v + 1) * to / (2LL * from);
  return static_cast<int>(std::clamp<long long>(mapped, 0, to - 1));
}

}  // namespace

std::string ModelConfig::describe() const {
  std::ostringstream ss;
  ss << "res=" << resolution << ",dims=" << dims[0] << "/" << dims[1] << "/" << dims[2] << "/"
     << dims[3] << ",enc=" << encoder_depth << ",cs=" << csnet_depth << ",mlp=" << mlp_ratio
     << ",head=" << head_dim << ",radius=" << disk_radius << ",seed=" << seed << ",modalities=";
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    ss << (i ? "+" : "") << modalities[i].name << ":" << modalities[i].channels;
  }
  return ss.str();
}

std::uint64_t pyramid_digest(const FeaturePyramid& p) {
  Fnv1a h;
  for (const Tensor3& t : p.levels) {
    const int dims[3] = {t.height(), t.width(), t.channels()};
    h.update(dims, sizeof dims);
    h.update(t.data(), t.size() * sizeof(float));
  }
  return h.digest();
}

Model::Model(ModelConfig config, std::shared_ptr<const FeatureProvider> provider)
    : config_(checked(config)),
      provider_(default_provider(config_, std::move(provider))),
      fpn_([&] {
        Init init = component_init(config_.seed, 1);
        return ParallelFpn(fpn_config(config_, *provider_), init);
      }()),
      fuser_([&] {
        Init init = component_init(config_.seed, 2);
        return MmFuser(FuserConfig{config_.modalities, config_.dims, config_.encoder_depth,
                                   config_.mlp_ratio, config_.mlp_ratio},
                       init);
      }()),
      embed_([&] {
        Init init = component_init(config_.seed, 3);
        return MsPatchEmbed(config_.dims, init);
      }()),
      csnet_([&] {
        Init init = component_init(config_.seed, 4);
        return CsNet(CsnetConfig{config_.dims, config_.csnet_depth, config_.mlp_ratio,
                                 config_.head_dim},
                     init);
      }()) {
  if (config_.resolution % provider_->patch() != 0) {
    throw ConfigError("model: resolution not divisible by the feature provider's patch size");
  }
}

std::string Model::describe() const {
  return "neural(" + config_.describe() + ",backbone=" + provider_->describe() + ")";
}

ModelCounters Model::counters() const {
  return {provider_->calls(), fpn_calls_.load(), fuser_calls_.load(), embed_calls_.load(),
          csnet_calls_.load()};
}

PreparedImage Model::prepare(const Sample& sample) const {
  const int r = config_.resolution;
  PreparedImage out;
  out.image_id = sample.id;
  out.source_height = sample.height();
  out.source_width = sample.width();

  std::vector<Tensor3> modalities;
  for (const ModalityInput& m : config_.modalities) {
    const Tensor3* t = sample.modality(m.name);
    if (t == nullptr) {
      throw PredictorError("neural: image '" + sample.id + "' lacks modality '" + m.name + "'");
    }
    if (t->channels() != m.channels) {
      throw PredictorError("neural: modality '" + m.name + "' has " +
                           std::to_string(t->channels()) + " channels, model expects " +
                           std::to_string(m.channels));
    }
    modalities.push_back(resize_bilinear(*t, r, r));
  }

  const BackboneFeatures features = provider_->extract(sample.id, resize_bilinear(sample.rgb, r, r));
  fpn_calls_.fetch_add(1);
  const FeaturePyramid f_img = fpn_(features);
  fuser_calls_.fetch_add(1);
  out.f_mix = fuser_(f_img, modalities);
  out.digest = pyramid_digest(out.f_mix);
  return out;
}

Tensor3 Model::predict(const PreparedImage& image, std::span<const Click> clicks,
                       const BinaryMask& prev_mask) const {
  const int r = config_.resolution;
  const int h = image.source_height;
  const int w = image.source_width;
  if (prev_mask.height() != h || prev_mask.width() != w) {
    throw DimensionError("neural: previous mask does not match the prepared image");
  }
  std::vector<Click> scaled;
  scaled.reserve(clicks.size());
  for (const Click& c : clicks) {
    if (!prev_mask.contains(c.row, c.col)) throw DimensionError("neural: click outside the image");
    scaled.push_back({rescale(c.row, h, r), rescale(c.col, w, r), c.polarity});
  }
  BinaryMask prev(r, r);
  for (int i = 0; i < r; ++i) {
    const int si = rescale(i, r, h);
    for (int j = 0; j < r; ++j) prev.set(i, j, prev_mask.test(si, rescale(j, r, w)));
  }
  const InteractionTensor interaction = assemble_interaction(scaled, prev, config_.disk_radius);
  embed_calls_.fetch_add(1);
  const FeaturePyramid f_int = embed_(interaction.planes);
  csnet_calls_.fetch_add(1);
  Tensor3 prob = resize_bilinear(csnet_(image.f_mix, f_int, r, r), h, w);
  for (float& v : prob.values()) v = std::clamp(v, 0.0f, 1.0f);
  return prob;
}

}  // namespace mmms::nn
