#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "augpt/policies.hpp"
#include "augpt/raster.hpp"
#include "augpt/rng.hpp"

namespace augpt {

enum class Strategy { kAsa, kRandaugmentFixed, kCropOnly, kCopyOnly };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);  // throws ConfigError

struct AugmentConfig {
  int n_views = 5;
  int steps = 2;
  AmplitudeMode amplitude_mode = AmplitudeMode::kDynamicUniform;
  double fixed_a = -1.0;  // required (in [0,30]) iff amplitude_mode is fixed
  Strategy strategy = Strategy::kAsa;
  double crop_scale_lo = 0.5;  // crop-only strategy only
  double crop_scale_hi = 1.0;

  void validate() const;  // throws ConfigError on inconsistent settings
};

// One sampled policy application: which policy, the raw magnitude drawn,
// the converted native-unit amplitude and the seed of the aux stream that
// replays the application's random bits.
struct PolicyDraw {
  const PolicySpec* policy = nullptr;
  double a_raw = 0.0;
  double amplitude = 0.0;
  uint64_t aux_seed = 0;
};

// Draws the policies composed into one augmented view: `steps` i.i.d.
// uniform picks from the 16-entry table, magnitudes per the config's
// amplitude mode. Consumes, per step: 1 policy draw, 1 magnitude draw
// (dynamic mode only), 1 aux-seed draw.
std::vector<PolicyDraw> sample_policy_group(const AugmentConfig& cfg,
                                            RandomStream& stream);

// The raw image plus its augmented variants.
struct ViewProvenance {
  std::string op;
  double a_raw = 0.0;
  double amplitude = 0.0;
  uint64_t aux_seed = 0;
};

struct ViewSet {
  Raster raw;
  std::vector<Raster> views;  // length n_views
  std::vector<std::vector<ViewProvenance>> provenance;  // n_views x steps
  std::string image_key;
  int64_t epoch = 0;

  size_t member_count() const { return views.size() + 1; }
  // Member j: 0 = raw, j >= 1 = views[j-1].
  const Raster& member(size_t j) const { return j == 0 ? raw : views[j - 1]; }
};

// Builds the view set for one image. The stream for variant i (1-based) is
// seeded by derive_seed(base_seed, image_key, epoch, i), so identical inputs
// reproduce the set bit-exactly and any of (key, epoch, seed) re-rolls it.
ViewSet build_view_set(const Raster& img, const AugmentConfig& cfg,
                       std::string_view image_key, int64_t epoch,
                       uint64_t base_seed);

}  // namespace augpt
