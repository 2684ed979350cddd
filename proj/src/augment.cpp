#include "augpt/augment.hpp"

#include "augpt/errors.hpp"

namespace augpt {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kAsa:
      return "asa";
    case Strategy::kRandaugmentFixed:
      return "randaugment-fixed";
    case Strategy::kCropOnly:
      return "crop-only";
    case Strategy::kCopyOnly:
      return "copy-only";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "asa") return Strategy::kAsa;
  if (name == "randaugment-fixed") return Strategy::kRandaugmentFixed;
  if (name == "crop-only") return Strategy::kCropOnly;
  if (name == "copy-only") return Strategy::kCopyOnly;
  throw ConfigError("unknown augment strategy '" + std::string(name) + "'");
}

void AugmentConfig::validate() const {
  if (n_views < 0) throw ConfigError("augment.n_views must be >= 0");
  if (steps < 1) throw ConfigError("augment.steps must be >= 1");
  bool fixed = amplitude_mode == AmplitudeMode::kFixed30;
  if (fixed && (fixed_a < 0.0 || fixed_a > 30.0))
    throw ConfigError("augment.fixed_a must be set in [0,30] for fixed mode");
  if (!fixed && fixed_a >= 0.0)
    throw ConfigError("augment.fixed_a is only valid in fixed mode");
  if (strategy == Strategy::kRandaugmentFixed && !fixed)
    throw ConfigError("randaugment-fixed strategy requires fixed mode");
  if (strategy == Strategy::kAsa && fixed)
    throw ConfigError("asa strategy requires dynamic amplitude mode");
  if (!(crop_scale_lo > 0.0) || crop_scale_lo > crop_scale_hi ||
      crop_scale_hi > 1.0)
    throw ConfigError("augment.crop_scale range must satisfy 0 < lo <= hi <= 1");
}

std::vector<PolicyDraw> sample_policy_group(const AugmentConfig& cfg,
                                            RandomStream& stream) {
  const auto& table = policy_table();
  if (table.empty()) throw ConfigError("empty policy table");

  std::vector<PolicyDraw> group;
  group.reserve(cfg.steps);
  for (int s = 0; s < cfg.steps; ++s) {
    PolicyDraw draw;
    draw.policy = &table[stream.uniform_int(static_cast<uint32_t>(table.size()))];
    if (cfg.amplitude_mode == AmplitudeMode::kDynamicUniform) {
      draw.a_raw = stream.uniform(0.0, draw.policy->a_max);
      draw.amplitude = convert_amplitude(*draw.policy, draw.a_raw,
                                         AmplitudeMode::kDynamicUniform);
    } else {
      draw.a_raw = cfg.fixed_a;
      draw.amplitude =
          convert_amplitude(*draw.policy, draw.a_raw, AmplitudeMode::kFixed30);
    }
    draw.aux_seed = stream.next_u64();
    group.push_back(draw);
  }
  return group;
}

namespace {

std::vector<ViewProvenance> strategy_stub_provenance(const AugmentConfig& cfg,
                                                     std::string_view op,
                                                     uint64_t seed) {
  std::vector<ViewProvenance> prov(cfg.steps);
  for (auto& p : prov) {
    p.op = std::string(op);
    p.aux_seed = seed;
  }
  return prov;
}

}  // namespace

ViewSet build_view_set(const Raster& img, const AugmentConfig& cfg,
                       std::string_view image_key, int64_t epoch,
                       uint64_t base_seed) {
  if (!img.valid()) throw DataError("build_view_set: invalid raster");
  cfg.validate();

  ViewSet vs;
  vs.raw = img;
  vs.image_key = std::string(image_key);
  vs.epoch = epoch;
  vs.views.reserve(cfg.n_views);
  vs.provenance.reserve(cfg.n_views);

  for (int i = 1; i <= cfg.n_views; ++i) {
    uint64_t view_seed = derive_seed(base_seed, image_key, epoch, i);
    RandomStream stream(view_seed);

    switch (cfg.strategy) {
      case Strategy::kCopyOnly: {
        vs.views.push_back(img);
        vs.provenance.push_back(strategy_stub_provenance(cfg, "copy", 0));
        break;
      }
      case Strategy::kCropOnly: {
        Raster v = random_resized_crop(img, stream, cfg.crop_scale_lo,
                                       cfg.crop_scale_hi);
        if (stream.coin()) v = horizontal_flip(v);
        vs.views.push_back(std::move(v));
        vs.provenance.push_back(
            strategy_stub_provenance(cfg, "crop-flip", view_seed));
        break;
      }
      case Strategy::kAsa:
      case Strategy::kRandaugmentFixed: {
        auto group = sample_policy_group(cfg, stream);
        Raster v = img;
        std::vector<ViewProvenance> prov;
        prov.reserve(group.size());
        for (const auto& draw : group) {
          RandomStream aux(draw.aux_seed);
          v = apply_policy(v, *draw.policy, draw.amplitude, aux);
          prov.push_back({std::string(draw.policy->name), draw.a_raw,
                          draw.amplitude, draw.aux_seed});
        }
        vs.views.push_back(std::move(v));
        vs.provenance.push_back(std::move(prov));
        break;
      }
    }
  }
  return vs;
}

}  // namespace augpt
