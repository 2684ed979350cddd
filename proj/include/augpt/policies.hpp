#pragma once

#include <array>
#include <string_view>

#include "augpt/raster.hpp"
#include "augpt/rng.hpp"

namespace augpt {

enum class Policy {
  kAutoContrast,
  kEqualize,
  kInvert,
  kRotate,
  kPosterize,
  kCutout,
  kSolarize,
  kSolarizeAdd,
  kColor,
  kContrast,
  kBrightness,
  kSharpness,
  kShearX,
  kShearY,
  kTranslateX,
  kTranslateY,
};

inline constexpr int kPolicyCount = 16;

// One registered transformation policy with its native amplitude range.
// signed_amp: geometric ops negate, enhancement factors mirror about 1.0,
// each with probability 1/2 drawn from the aux stream inside apply_policy.
struct PolicySpec {
  Policy id;
  std::string_view name;
  double a_min;
  double a_max;
  bool signed_amp;
};

const std::array<PolicySpec, kPolicyCount>& policy_table();
const PolicySpec& find_policy(std::string_view name);  // throws ConfigError

enum class AmplitudeMode { kFixed30, kDynamicUniform };

// Maps a raw magnitude onto the policy's native range.
//   fixed-30:  a_raw in [0,30]     -> (a_raw/30)(a_max-a_min)+a_min
//   dynamic:   a_raw in [0,a_max]  -> (a_raw/a_max)(a_max-a_min)+a_min
double convert_amplitude(const PolicySpec& policy, double a_raw,
                         AmplitudeMode mode);

// Applies one policy at the given native-unit strength. Pure in
// (img bytes, policy, strength, aux stream state); never mutates the input.
// Aux draw contract (fixed per policy, independent of pixel content):
//   Rotate/ShearX/ShearY/TranslateX/TranslateY: 1 sign draw
//   Color/Contrast/Brightness/Sharpness:        1 mirror draw
//   Cutout:                                     2 draws (center x, center y)
//   all others:                                 none
Raster apply_policy(const Raster& img, const PolicySpec& policy,
                    double strength, RandomStream& aux);

// Backbone-default transforms.
Raster horizontal_flip(const Raster& img);
Raster random_resized_crop(const Raster& img, RandomStream& aux,
                           double scale_lo, double scale_hi);

// Building blocks, exposed for oracles and the synthetic generator.
Raster crop_region(const Raster& img, int x0, int y0, int w, int h);
Raster resize_bilinear(const Raster& img, int new_w, int new_h);

}  // namespace augpt
