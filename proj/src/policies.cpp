#include "augpt/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "augpt/errors.hpp"

namespace augpt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr uint8_t kFillGray = 128;

// Round half-to-even, saturate to a byte.
uint8_t sat_byte(double v) {
  double r = std::nearbyint(v);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<uint8_t>(r);
}

double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

void require_geometric_dims(const Raster& img, const char* op) {
  if (img.width < 8 || img.height < 8)
    throw std::invalid_argument(std::string(op) +
                                ": image smaller than 8x8");
}

// Bilinear sample with mid-gray fill for out-of-frame neighbors.
double sample_bilinear_fill(const Raster& img, double sx, double sy, int ch) {
  double fx0 = std::floor(sx);
  double fy0 = std::floor(sy);
  int x0 = static_cast<int>(fx0);
  int y0 = static_cast<int>(fy0);
  double wx = sx - fx0;
  double wy = sy - fy0;

  auto tap = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height)
      return static_cast<double>(kFillGray);
    return static_cast<double>(img.at(x, y, ch));
  };

  double top = tap(x0, y0) * (1.0 - wx) + tap(x0 + 1, y0) * wx;
  double bot = tap(x0, y0 + 1) * (1.0 - wx) + tap(x0 + 1, y0 + 1) * wx;
  return top * (1.0 - wy) + bot * wy;
}

// Inverse affine map about the image center:
//   sx = a*(x-cx) + b*(y-cy) + cx,  sy = d*(x-cx) + e*(y-cy) + cy
Raster affine_sample(const Raster& img, double a, double b, double d,
                     double e, double tx, double ty) {
  Raster out = img;
  double cx = (img.width - 1) * 0.5;
  double cy = (img.height - 1) * 0.5;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double rx = x - cx;
      double ry = y - cy;
      double sx = a * rx + b * ry + cx + tx;
      double sy = d * rx + e * ry + cy + ty;
      for (int ch = 0; ch < 3; ++ch)
        out.at(x, y, ch) = sat_byte(sample_bilinear_fill(img, sx, sy, ch));
    }
  }
  return out;
}

Raster rotate(const Raster& img, double degrees) {
  require_geometric_dims(img, "rotate");
  double rad = degrees * kPi / 180.0;
  double c = std::cos(rad);
  double s = std::sin(rad);
  return affine_sample(img, c, s, -s, c, 0.0, 0.0);
}

Raster shear(const Raster& img, double amount, bool horizontal) {
  require_geometric_dims(img, "shear");
  if (horizontal) return affine_sample(img, 1.0, amount, 0.0, 1.0, 0.0, 0.0);
  return affine_sample(img, 1.0, 0.0, amount, 1.0, 0.0, 0.0);
}

Raster translate(const Raster& img, double fraction, bool horizontal) {
  require_geometric_dims(img, "translate");
  double tx = horizontal ? fraction * img.width : 0.0;
  double ty = horizontal ? 0.0 : fraction * img.height;
  return affine_sample(img, 1.0, 0.0, 0.0, 1.0, tx, ty);
}

Raster auto_contrast(const Raster& img) {
  Raster out = img;
  for (int ch = 0; ch < 3; ++ch) {
    uint8_t lo = 255, hi = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        uint8_t v = img.at(x, y, ch);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (hi <= lo) continue;
    double scale = 255.0 / (hi - lo);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(x, y, ch) = sat_byte((img.at(x, y, ch) - lo) * scale);
  }
  return out;
}

Raster equalize(const Raster& img) {
  Raster out = img;
  size_t npix = static_cast<size_t>(img.width) * img.height;
  for (int ch = 0; ch < 3; ++ch) {
    std::array<size_t, 256> hist{};
    for (size_t p = 0; p < npix; ++p) ++hist[img.pixels[p * 3 + ch]];

    int first = 0;
    while (first < 256 && hist[first] == 0) ++first;
    int last = 255;
    while (last > 0 && hist[last] == 0) --last;
    if (first >= last) continue;  // constant channel, skip remap

    std::array<size_t, 256> cdf{};
    size_t run = 0;
    for (int v = 0; v < 256; ++v) {
      run += hist[v];
      cdf[v] = run;
    }
    size_t cdf_min = cdf[first];
    double denom = static_cast<double>(npix - cdf_min);
    std::array<uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v)
      lut[v] = sat_byte(255.0 * (static_cast<double>(cdf[v]) - cdf_min) /
                        denom);
    for (size_t p = 0; p < npix; ++p)
      out.pixels[p * 3 + ch] = lut[img.pixels[p * 3 + ch]];
  }
  return out;
}

Raster invert(const Raster& img) {
  Raster out = img;
  for (auto& v : out.pixels) v = static_cast<uint8_t>(255 - v);
  return out;
}

Raster posterize(const Raster& img, double strength) {
  int bits = static_cast<int>(std::nearbyint(strength));
  bits = std::clamp(bits, 1, 8);
  uint8_t mask = static_cast<uint8_t>(0xFF << (8 - bits));
  Raster out = img;
  for (auto& v : out.pixels) v = static_cast<uint8_t>(v & mask);
  return out;
}

Raster solarize(const Raster& img, double threshold) {
  Raster out = img;
  for (auto& v : out.pixels)
    if (static_cast<double>(v) >= threshold) v = static_cast<uint8_t>(255 - v);
  return out;
}

Raster solarize_add(const Raster& img, double amount) {
  Raster out = img;
  for (auto& v : out.pixels)
    if (v < 128) v = sat_byte(static_cast<double>(v) + amount);
  return out;
}

Raster enhance_color(const Raster& img, double factor) {
  Raster out = img;
  size_t npix = static_cast<size_t>(img.width) * img.height;
  for (size_t p = 0; p < npix; ++p) {
    double r = img.pixels[p * 3], g = img.pixels[p * 3 + 1],
           b = img.pixels[p * 3 + 2];
    double l = luma(r, g, b);
    out.pixels[p * 3] = sat_byte(l + factor * (r - l));
    out.pixels[p * 3 + 1] = sat_byte(l + factor * (g - l));
    out.pixels[p * 3 + 2] = sat_byte(l + factor * (b - l));
  }
  return out;
}

Raster enhance_contrast(const Raster& img, double factor) {
  size_t npix = static_cast<size_t>(img.width) * img.height;
  double mean = 0.0;
  for (size_t p = 0; p < npix; ++p)
    mean += luma(img.pixels[p * 3], img.pixels[p * 3 + 1],
                 img.pixels[p * 3 + 2]);
  mean /= static_cast<double>(npix);
  Raster out = img;
  for (size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = sat_byte(mean + factor * (img.pixels[i] - mean));
  return out;
}

Raster enhance_brightness(const Raster& img, double factor) {
  Raster out = img;
  for (size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = sat_byte(factor * img.pixels[i]);
  return out;
}

// Smooth = 3x3 kernel ((1,1,1),(1,5,1),(1,1,1))/13 on the interior, border
// rows/columns untouched; result blends original toward/away from smooth.
Raster enhance_sharpness(const Raster& img, double factor) {
  Raster out = img;
  if (img.width < 3 || img.height < 3) return out;
  for (int y = 1; y < img.height - 1; ++y) {
    for (int x = 1; x < img.width - 1; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            acc += img.at(x + dx, y + dy, ch) *
                   ((dx == 0 && dy == 0) ? 5.0 : 1.0);
        double smooth = acc / 13.0;
        double orig = img.at(x, y, ch);
        out.at(x, y, ch) = sat_byte(smooth + factor * (orig - smooth));
      }
    }
  }
  return out;
}

Raster cutout(const Raster& img, double fraction, RandomStream& aux) {
  // Center draws always happen so the aux contract is content-independent.
  int cx = static_cast<int>(aux.uniform_int(static_cast<uint32_t>(img.width)));
  int cy =
      static_cast<int>(aux.uniform_int(static_cast<uint32_t>(img.height)));
  int side = static_cast<int>(
      std::nearbyint(fraction * std::min(img.width, img.height)));
  Raster out = img;
  if (side <= 0) return out;
  int x0 = std::max(0, cx - side / 2);
  int y0 = std::max(0, cy - side / 2);
  int x1 = std::min(img.width, x0 + side);
  int y1 = std::min(img.height, y0 + side);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = kFillGray;
  return out;
}

}  // namespace

const std::array<PolicySpec, kPolicyCount>& policy_table() {
  static const std::array<PolicySpec, kPolicyCount> table = {{
      {Policy::kAutoContrast, "AutoContrast", 0.0, 1.0, false},
      {Policy::kEqualize, "Equalize", 0.0, 1.0, false},
      {Policy::kInvert, "Invert", 0.0, 1.0, false},
      {Policy::kRotate, "Rotate", 0.0, 30.0, true},
      {Policy::kPosterize, "Posterize", 4.0, 8.0, false},
      {Policy::kCutout, "Cutout", 0.0, 0.2, false},
      {Policy::kSolarize, "Solarize", 0.0, 256.0, false},
      {Policy::kSolarizeAdd, "SolarizeAdd", 0.0, 110.0, false},
      {Policy::kColor, "Color", 0.1, 1.9, true},
      {Policy::kContrast, "Contrast", 0.1, 1.9, true},
      {Policy::kBrightness, "Brightness", 0.1, 1.9, true},
      {Policy::kSharpness, "Sharpness", 0.1, 1.9, true},
      {Policy::kShearX, "ShearX", 0.0, 0.3, true},
      {Policy::kShearY, "ShearY", 0.0, 0.3, true},
      {Policy::kTranslateX, "TranslateX", 0.0, 0.33, true},
      {Policy::kTranslateY, "TranslateY", 0.0, 0.33, true},
  }};
  return table;
}

const PolicySpec& find_policy(std::string_view name) {
  for (const auto& p : policy_table())
    if (p.name == name) return p;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

double convert_amplitude(const PolicySpec& policy, double a_raw,
                         AmplitudeMode mode) {
  if (mode == AmplitudeMode::kFixed30) {
    if (a_raw < 0.0 || a_raw > 30.0)
      throw std::invalid_argument("fixed-mode magnitude outside [0,30]");
    return (a_raw / 30.0) * (policy.a_max - policy.a_min) + policy.a_min;
  }
  if (policy.a_max == 0.0)
    throw std::invalid_argument("dynamic mode needs a_max > 0");
  if (a_raw < 0.0 || a_raw > policy.a_max)
    throw std::invalid_argument("dynamic-mode magnitude outside [0,a_max]");
  return (a_raw / policy.a_max) * (policy.a_max - policy.a_min) +
         policy.a_min;
}

Raster apply_policy(const Raster& img, const PolicySpec& policy,
                    double strength, RandomStream& aux) {
  if (!img.valid()) throw DataError("apply_policy: invalid raster");
  if (strength < policy.a_min - 1e-9 || strength > policy.a_max + 1e-9)
    throw std::invalid_argument(std::string(policy.name) +
                                ": strength outside amplitude range");

  switch (policy.id) {
    case Policy::kAutoContrast:
      return auto_contrast(img);
    case Policy::kEqualize:
      return equalize(img);
    case Policy::kInvert:
      return invert(img);
    case Policy::kRotate: {
      double s = aux.coin() ? -strength : strength;
      return rotate(img, s);
    }
    case Policy::kPosterize:
      return posterize(img, strength);
    case Policy::kCutout:
      return cutout(img, strength, aux);
    case Policy::kSolarize:
      return solarize(img, strength);
    case Policy::kSolarizeAdd:
      return solarize_add(img, strength);
    case Policy::kColor: {
      double f = aux.coin() ? 2.0 - strength : strength;
      return enhance_color(img, f);
    }
    case Policy::kContrast: {
      double f = aux.coin() ? 2.0 - strength : strength;
      return enhance_contrast(img, f);
    }
    case Policy::kBrightness: {
      double f = aux.coin() ? 2.0 - strength : strength;
      return enhance_brightness(img, f);
    }
    case Policy::kSharpness: {
      double f = aux.coin() ? 2.0 - strength : strength;
      return enhance_sharpness(img, f);
    }
    case Policy::kShearX: {
      double s = aux.coin() ? -strength : strength;
      return shear(img, s, true);
    }
    case Policy::kShearY: {
      double s = aux.coin() ? -strength : strength;
      return shear(img, s, false);
    }
    case Policy::kTranslateX: {
      double s = aux.coin() ? -strength : strength;
      return translate(img, s, true);
    }
    case Policy::kTranslateY: {
      double s = aux.coin() ? -strength : strength;
      return translate(img, s, false);
    }
  }
  throw ConfigError("unregistered policy id");
}

Raster horizontal_flip(const Raster& img) {
  if (!img.valid()) throw DataError("horizontal_flip: invalid raster");
  Raster out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int ch = 0; ch < 3; ++ch)
        out.at(x, y, ch) = img.at(img.width - 1 - x, y, ch);
  return out;
}

Raster crop_region(const Raster& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width ||
      y0 + h > img.height)
    throw std::invalid_argument("crop_region: rectangle out of bounds");
  Raster out;
  out.width = w;
  out.height = h;
  out.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch)
        out.at(x, y, ch) = img.at(x0 + x, y0 + y, ch);
  return out;
}

Raster resize_bilinear(const Raster& img, int new_w, int new_h) {
  if (new_w <= 0 || new_h <= 0)
    throw std::invalid_argument("resize_bilinear: non-positive target");
  Raster out;
  out.width = new_w;
  out.height = new_h;
  out.pixels.resize(static_cast<size_t>(new_w) * new_h * 3);
  double sx_scale = static_cast<double>(img.width) / new_w;
  double sy_scale = static_cast<double>(img.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    double sy = (y + 0.5) * sy_scale - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = sy - y0;
    for (int x = 0; x < new_w; ++x) {
      double sx = (x + 0.5) * sx_scale - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = sx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        double top = img.at(x0, y0, ch) * (1.0 - wx) + img.at(x1, y0, ch) * wx;
        double bot = img.at(x0, y1, ch) * (1.0 - wx) + img.at(x1, y1, ch) * wx;
        out.at(x, y, ch) = sat_byte(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Raster random_resized_crop(const Raster& img, RandomStream& aux,
                           double scale_lo, double scale_hi) {
  if (!(scale_lo > 0.0) || scale_lo > scale_hi || scale_hi > 1.0)
    throw std::invalid_argument("random_resized_crop: bad scale range");
  require_geometric_dims(img, "random_resized_crop");
  double area = aux.uniform(scale_lo, scale_hi);
  double side = std::sqrt(area);
  int cw = std::clamp(static_cast<int>(std::nearbyint(img.width * side)), 1,
                      img.width);
  int ch = std::clamp(static_cast<int>(std::nearbyint(img.height * side)), 1,
                      img.height);
  int x0 =
      static_cast<int>(aux.uniform_int(static_cast<uint32_t>(img.width - cw + 1)));
  int y0 = static_cast<int>(
      aux.uniform_int(static_cast<uint32_t>(img.height - ch + 1)));
  return resize_bilinear(crop_region(img, x0, y0, cw, ch), img.width,
                         img.height);
}

}  // namespace augpt
