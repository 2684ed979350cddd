#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "augpt/raster.hpp"

namespace augpt {

enum class EncoderKind { kPatchMean, kRandomProjection, kExternal };

std::string_view encoder_kind_name(EncoderKind k);
EncoderKind parse_encoder_kind(std::string_view name);

// Frozen feature extractor. Parameters are fixed at construction; encoding
// identical bytes always yields identical features.
class Encoder {
 public:
  // Per-patch per-channel means over a fixed square grid, flattened
  // patch-major / channel-minor and truncated to out_dim. Values in [0,1].
  static Encoder patch_mean(int out_dim);

  // Fixed seeded Gaussian linear map of the normalized pixel vector.
  // Bound to one input geometry so the projection matrix is a frozen
  // construction-time parameter.
  static Encoder random_projection(int out_dim, int in_width, int in_height,
                                   uint64_t seed);

  // Placeholder for features that arrive through the logits ingestion path;
  // encode() is unsupported.
  static Encoder external(int out_dim);

  std::vector<double> encode(const Raster& img) const;

  EncoderKind kind() const { return kind_; }
  int out_dim() const { return out_dim_; }

 private:
  Encoder(EncoderKind kind, int out_dim) : kind_(kind), out_dim_(out_dim) {}

  EncoderKind kind_;
  int out_dim_;
  int grid_ = 0;                   // patch-mean
  int in_width_ = 0, in_height_ = 0;  // random-projection
  std::vector<double> projection_;    // out_dim x (w*h*3), row-major
};

// Unit-normalized class embedding rows.
struct ClassEmbeddings {
  std::vector<double> matrix;  // count x dim, row-major
  int dim = 0;
  std::vector<std::string> class_names;

  int count() const { return static_cast<int>(class_names.size()); }
  std::span<const double> row(int i) const {
    return {matrix.data() + static_cast<size_t>(i) * dim,
            static_cast<size_t>(dim)};
  }
  std::span<double> row(int i) {
    return {matrix.data() + static_cast<size_t>(i) * dim,
            static_cast<size_t>(dim)};
  }
  void validate() const;  // throws on non-unit rows or count < 2
};

// rows are normalized on construction
ClassEmbeddings make_class_embeddings(const std::vector<std::vector<double>>& rows,
                                      std::vector<std::string> names);

struct LogitVector {
  std::vector<double> values;
  int view_index = 0;
};

// values[i] = <feat, emb[i]> / (|feat| |emb[i]|)
LogitVector cosine_logits(std::span<const double> feat,
                          const ClassEmbeddings& emb);

// Numerically stable softmax of values/tau; sums to 1.
std::vector<double> softmax_prob(std::span<const double> values, double tau);
inline std::vector<double> softmax_prob(const LogitVector& lv, double tau) {
  return softmax_prob(lv.values, tau);
}

int argmax_index(std::span<const double> values);  // ties -> lowest index

// Logits CSV: header `image_key,view_index,c0,...,c{c-1}`, doubles with 17
// significant digits. Externally produced values bypass the cosine bound.
struct KeyedLogits {
  std::string image_key;
  LogitVector logits;
};

std::vector<KeyedLogits> ingest_logits(const std::filesystem::path& path);
void write_logits_csv(const std::vector<KeyedLogits>& rows,
                      const std::filesystem::path& path);

}  // namespace augpt
