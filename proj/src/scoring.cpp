#include "augpt/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "augpt/errors.hpp"
#include "augpt/rng.hpp"
#include "augpt/vecmath.hpp"

namespace augpt {

std::string_view encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::kPatchMean:
      return "patch-mean";
    case EncoderKind::kRandomProjection:
      return "random-projection";
    case EncoderKind::kExternal:
      return "external";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "patch-mean") return EncoderKind::kPatchMean;
  if (name == "random-projection") return EncoderKind::kRandomProjection;
  if (name == "external") return EncoderKind::kExternal;
  throw ConfigError("unknown encoder kind '" + std::string(name) + "'");
}

Encoder Encoder::patch_mean(int out_dim) {
  if (out_dim < 1) throw ConfigError("encoder out_dim must be >= 1");
  Encoder e(EncoderKind::kPatchMean, out_dim);
  int patches_needed = (out_dim + 2) / 3;
  int grid = 1;
  while (grid * grid < patches_needed) ++grid;
  e.grid_ = grid;
  return e;
}

Encoder Encoder::random_projection(int out_dim, int in_width, int in_height,
                                   uint64_t seed) {
  if (out_dim < 1) throw ConfigError("encoder out_dim must be >= 1");
  if (in_width < 1 || in_height < 1)
    throw ConfigError("random-projection encoder needs positive input dims");
  Encoder e(EncoderKind::kRandomProjection, out_dim);
  e.in_width_ = in_width;
  e.in_height_ = in_height;
  size_t in_dim = static_cast<size_t>(in_width) * in_height * 3;
  e.projection_.resize(static_cast<size_t>(out_dim) * in_dim);
  RandomStream rs(mix_seed({seed, fnv1a64("random-projection")}));
  double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& w : e.projection_) w = rs.gaussian() * scale;
  return e;
}

Encoder Encoder::external(int out_dim) {
  return Encoder(EncoderKind::kExternal, out_dim);
}

std::vector<double> Encoder::encode(const Raster& img) const {
  if (!img.valid()) throw DataError("encode: invalid raster");
  switch (kind_) {
    case EncoderKind::kPatchMean: {
      if (img.width < grid_ || img.height < grid_)
        throw DataError("encode: image smaller than patch grid");
      std::vector<double> feat(static_cast<size_t>(out_dim_), 0.0);
      size_t slot = 0;
      for (int gy = 0; gy < grid_ && slot < feat.size(); ++gy) {
        int y0 = gy * img.height / grid_;
        int y1 = (gy + 1) * img.height / grid_;
        for (int gx = 0; gx < grid_ && slot < feat.size(); ++gx) {
          int x0 = gx * img.width / grid_;
          int x1 = (gx + 1) * img.width / grid_;
          double sums[3] = {0.0, 0.0, 0.0};
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
              for (int ch = 0; ch < 3; ++ch) sums[ch] += img.at(x, y, ch);
          double count = static_cast<double>(y1 - y0) * (x1 - x0);
          for (int ch = 0; ch < 3 && slot < feat.size(); ++ch)
            feat[slot++] = sums[ch] / count / 255.0;
        }
      }
      return feat;
    }
    case EncoderKind::kRandomProjection: {
      if (img.width != in_width_ || img.height != in_height_)
        throw DataError("encode: image geometry does not match encoder");
      size_t in_dim = img.pixels.size();
      std::vector<double> feat(static_cast<size_t>(out_dim_), 0.0);
      for (int o = 0; o < out_dim_; ++o) {
        const double* row = projection_.data() + static_cast<size_t>(o) * in_dim;
        double s = 0.0;
        for (size_t i = 0; i < in_dim; ++i)
          s += row[i] * (img.pixels[i] / 255.0);
        feat[o] = s;
      }
      return feat;
    }
    case EncoderKind::kExternal:
      throw std::invalid_argument(
          "external encoder has no encode path; features arrive via ingestion");
  }
  throw std::logic_error("unreachable");
}

void ClassEmbeddings::validate() const {
  if (count() < 2) throw DataError("class embeddings need at least 2 classes");
  if (matrix.size() != static_cast<size_t>(count()) * dim)
    throw DataError("class embedding matrix shape mismatch");
  for (int i = 0; i < count(); ++i) {
    double n = norm(row(i));
    if (std::abs(n - 1.0) > 1e-9)
      throw DataError("class embedding row " + std::to_string(i) +
                      " is not unit-normalized");
  }
}

ClassEmbeddings make_class_embeddings(
    const std::vector<std::vector<double>>& rows,
    std::vector<std::string> names) {
  if (rows.empty() || rows.size() != names.size())
    throw DataError("class embeddings: rows/names mismatch");
  ClassEmbeddings emb;
  emb.dim = static_cast<int>(rows[0].size());
  emb.class_names = std::move(names);
  emb.matrix.reserve(rows.size() * emb.dim);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != emb.dim)
      throw DataError("class embeddings: ragged rows");
    auto u = normalized(r);
    emb.matrix.insert(emb.matrix.end(), u.begin(), u.end());
  }
  emb.validate();
  return emb;
}

LogitVector cosine_logits(std::span<const double> feat,
                          const ClassEmbeddings& emb) {
  if (static_cast<int>(feat.size()) != emb.dim)
    throw DataError("cosine_logits: feature length != embedding dim");
  double nf = norm(feat);
  if (nf <= 0.0) throw NumericError("cosine_logits: zero-norm feature");
  LogitVector lv;
  lv.values.resize(emb.count());
  for (int i = 0; i < emb.count(); ++i) {
    auto r = emb.row(i);
    lv.values[i] = dot(feat, r) / (nf * norm(r));
  }
  return lv;
}

std::vector<double> softmax_prob(std::span<const double> values, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax tau must be > 0");
  if (values.empty()) throw DataError("softmax of empty vector");
  double mx = *std::max_element(values.begin(), values.end());
  std::vector<double> p(values.size());
  double z = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    p[i] = std::exp((values[i] - mx) / tau);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

int argmax_index(std::span<const double> values) {
  if (values.empty()) throw DataError("argmax of empty vector");
  int best = 0;
  for (size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& cell) {
  const char* s = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw DataError("logits csv: non-numeric cell '" + cell + "'");
  return v;
}

}  // namespace

std::vector<KeyedLogits> ingest_logits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("logits csv: empty file");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "image_key" ||
      header[1] != "view_index")
    throw DataError("logits csv: bad header");
  size_t c = header.size() - 2;
  for (size_t i = 0; i < c; ++i)
    if (header[2 + i] != "c" + std::to_string(i))
      throw DataError("logits csv: bad header column '" + header[2 + i] + "'");

  std::vector<KeyedLogits> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("logits csv: row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    KeyedLogits kl;
    kl.image_key = cells[0];
    double vi = parse_cell(cells[1]);
    kl.logits.view_index = static_cast<int>(vi);
    kl.logits.values.reserve(c);
    for (size_t i = 0; i < c; ++i)
      kl.logits.values.push_back(parse_cell(cells[2 + i]));
    rows.push_back(std::move(kl));
  }
  return rows;
}

void write_logits_csv(const std::vector<KeyedLogits>& rows,
                      const std::filesystem::path& path) {
  if (rows.empty()) throw DataError("write_logits_csv: no rows");
  size_t c = rows[0].logits.values.size();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "image_key,view_index";
  for (size_t i = 0; i < c; ++i) out << ",c" << i;
  out << "\n";
  for (const auto& r : rows) {
    if (r.logits.values.size() != c)
      throw DataError("write_logits_csv: ragged rows");
    out << r.image_key << "," << r.logits.view_index;
    for (double v : r.logits.values) out << "," << fmt17(v);
    out << "\n";
  }
}

}  // namespace augpt
