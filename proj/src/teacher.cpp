#include "augpt/teacher.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "augpt/errors.hpp"
#include "augpt/jsonio.hpp"
#include "augpt/rng.hpp"
#include "augpt/vecmath.hpp"

namespace augpt {

TeacherModel::TeacherModel(Encoder encoder, ClassEmbeddings emb,
                           std::vector<double> visual_bias, double tau)
    : encoder_(std::move(encoder)),
      emb_(std::move(emb)),
      visual_bias_(std::move(visual_bias)),
      tau_(tau) {
  emb_.validate();
  if (static_cast<int>(visual_bias_.size()) != emb_.dim)
    throw DataError("teacher: visual bias length != embedding dim");
  if (!(tau_ > 0.0)) throw std::invalid_argument("teacher: tau must be > 0");
}

LogitVector TeacherModel::logits(const Raster& img) const {
  std::vector<double> z = encoder_.encode(img);
  for (size_t i = 0; i < z.size(); ++i) z[i] += visual_bias_[i];
  return cosine_logits(z, emb_);
}

std::vector<LogitVector> TeacherModel::logits_batch(const ViewSet& vs) const {
  std::vector<LogitVector> out;
  out.reserve(vs.member_count());
  for (size_t j = 0; j < vs.member_count(); ++j) {
    LogitVector lv = logits(vs.member(j));
    lv.view_index = static_cast<int>(j);
    out.push_back(std::move(lv));
  }
  return out;
}

TeacherModel TeacherModel::extend_classes(
    const std::vector<std::vector<double>>& rows,
    std::vector<std::string> names) const {
  if (rows.size() != names.size())
    throw DataError("extend_classes: rows/names mismatch");
  ClassEmbeddings emb = emb_;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != emb.dim)
      throw DataError("extend_classes: row dim mismatch");
    auto u = normalized(rows[i]);
    emb.matrix.insert(emb.matrix.end(), u.begin(), u.end());
    emb.class_names.push_back(std::move(names[i]));
  }
  TeacherModel ext(encoder_, std::move(emb), visual_bias_, tau_);
  ext.seed = seed;
  return ext;
}

void TeacherModel::save(const std::filesystem::path& path) const {
  JsonWriter w;
  w.begin_object();
  w.key("format").value_string("augpt-teacher");
  w.key("c").value_int(emb_.count());
  w.key("d_t").value_int(emb_.dim);
  w.key("tau").value_double(tau_);
  w.key("seed").value_uint(seed);
  w.key("class_names").begin_array();
  for (const auto& n : emb_.class_names) w.value_string(n);
  w.end_array();
  w.key("class_emb").begin_array();
  for (int i = 0; i < emb_.count(); ++i) w.array_of_doubles(emb_.row(i));
  w.end_array();
  w.key("visual_bias").array_of_doubles(visual_bias_);
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

TeacherModel TeacherModel::load(const std::filesystem::path& path,
                                Encoder encoder) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("teacher checkpoint parse error: " + std::string(e.what()));
  }
  try {
    if (j.at("format") != "augpt-teacher")
      throw DataError("not a teacher checkpoint");
    int c = j.at("c");
    int d_t = j.at("d_t");
    if (encoder.out_dim() != d_t)
      throw DataError("teacher checkpoint dim does not match encoder");
    ClassEmbeddings emb;
    emb.dim = d_t;
    emb.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (static_cast<int>(emb.class_names.size()) != c)
      throw DataError("teacher checkpoint class count mismatch");
    for (const auto& row : j.at("class_emb")) {
      auto vals = row.get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != d_t)
        throw DataError("teacher checkpoint row dim mismatch");
      emb.matrix.insert(emb.matrix.end(), vals.begin(), vals.end());
    }
    std::vector<double> vb = j.at("visual_bias").get<std::vector<double>>();
    TeacherModel model(std::move(encoder), std::move(emb), std::move(vb),
                       j.at("tau").get<double>());
    model.seed = j.at("seed").get<uint64_t>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("teacher checkpoint schema error: " +
                    std::string(e.what()));
  }
}

TeacherGradients teacher_ce_gradients(
    const std::vector<std::pair<std::vector<double>, int>>& features,
    const ClassEmbeddings& emb, const std::vector<double>& visual_bias,
    double tau) {
  if (features.empty()) throw DataError("teacher gradients: empty batch");
  int c = emb.count();
  int d = emb.dim;

  TeacherGradients g;
  g.d_class_emb.assign(static_cast<size_t>(c) * d, 0.0);
  g.d_visual_bias.assign(d, 0.0);

  std::vector<double> z(d), logit(c), row_norms(c);
  for (int i = 0; i < c; ++i) row_norms[i] = norm(emb.row(i));

  for (const auto& [feat, label] : features) {
    if (static_cast<int>(feat.size()) != d)
      throw DataError("teacher gradients: feature dim mismatch");
    if (label < 0 || label >= c)
      throw DataError("teacher gradients: label out of range");

    for (int k = 0; k < d; ++k) z[k] = feat[k] + visual_bias[k];
    double nz = norm(z);
    if (nz <= 0.0) throw NumericError("teacher gradients: zero-norm feature");

    for (int i = 0; i < c; ++i)
      logit[i] = dot(z, emb.row(i)) / (nz * row_norms[i]);
    auto p = softmax_prob(logit, tau);
    g.loss += -std::log(std::max(p[label], 1e-300));

    for (int i = 0; i < c; ++i) {
      double gl = (p[i] - (i == label ? 1.0 : 0.0)) / tau;
      auto row = emb.row(i);
      double* drow = g.d_class_emb.data() + static_cast<size_t>(i) * d;
      double inv_ne = 1.0 / row_norms[i];
      double inv_nz = 1.0 / nz;
      for (int k = 0; k < d; ++k) {
        // d logit_i / d z_k and d logit_i / d e_ik of the full cosine
        double dz = row[k] * inv_nz * inv_ne - logit[i] * z[k] * inv_nz * inv_nz;
        double de = z[k] * inv_nz * inv_ne - logit[i] * row[k] * inv_ne * inv_ne;
        g.d_visual_bias[k] += gl * dz;
        drow[k] += gl * de;
      }
    }
  }

  double inv_n = 1.0 / static_cast<double>(features.size());
  g.loss *= inv_n;
  for (auto& v : g.d_class_emb) v *= inv_n;
  for (auto& v : g.d_visual_bias) v *= inv_n;
  return g;
}

namespace {

double mean_ce(const std::vector<std::pair<std::vector<double>, int>>& feats,
               const ClassEmbeddings& emb, const std::vector<double>& vb,
               double tau) {
  double total = 0.0;
  std::vector<double> z(emb.dim);
  for (const auto& [feat, label] : feats) {
    for (int k = 0; k < emb.dim; ++k) z[k] = feat[k] + vb[k];
    auto lv = cosine_logits(z, emb);
    auto p = softmax_prob(lv.values, tau);
    total += -std::log(std::max(p[label], 1e-300));
  }
  return total / static_cast<double>(feats.size());
}

}  // namespace

TeacherFitResult fit_teacher(const std::vector<std::pair<Raster, int>>& train,
                             const Encoder& encoder,
                             std::vector<std::string> class_names,
                             const TeacherConfig& cfg) {
  if (train.empty()) throw DataError("fit_teacher: empty training set");
  int c = static_cast<int>(class_names.size());
  if (c < 2) throw DataError("fit_teacher: need at least 2 classes");
  if (cfg.epochs < 0 || cfg.batch < 1)
    throw ConfigError("fit_teacher: bad epochs/batch");
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("fit_teacher: tau <= 0");

  std::set<int> seen;
  for (const auto& [img, label] : train) {
    if (label < 0 || label >= c)
      throw DataError("fit_teacher: label out of range");
    seen.insert(label);
  }
  if (static_cast<int>(seen.size()) != c)
    throw DataError("fit_teacher: every class needs at least one example");

  int d = encoder.out_dim();
  std::vector<std::pair<std::vector<double>, int>> feats;
  feats.reserve(train.size());
  for (const auto& [img, label] : train)
    feats.emplace_back(encoder.encode(img), label);

  // init: noisy class-mean rows, small Gaussian bias
  std::vector<std::vector<double>> means(c, std::vector<double>(d, 0.0));
  std::vector<int> counts(c, 0);
  for (const auto& [feat, label] : feats) {
    for (int k = 0; k < d; ++k) means[label][k] += feat[k];
    ++counts[label];
  }
  RandomStream init_rs(mix_seed({cfg.seed, fnv1a64("teacher-init")}));
  ClassEmbeddings emb;
  emb.dim = d;
  emb.class_names = std::move(class_names);
  for (int i = 0; i < c; ++i) {
    std::vector<double> row(d);
    for (int k = 0; k < d; ++k)
      row[k] = means[i][k] / counts[i] + 0.02 * init_rs.gaussian();
    auto u = normalized(row);
    emb.matrix.insert(emb.matrix.end(), u.begin(), u.end());
  }
  std::vector<double> vb(d);
  for (int k = 0; k < d; ++k) vb[k] = 0.02 * init_rs.gaussian();

  std::vector<double> trace;
  trace.push_back(mean_ce(feats, emb, vb, cfg.tau));

  size_t n = feats.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order =
        shuffled_indices(n, derive_seed(cfg.seed, "teacher-epoch", epoch, 0));
    for (size_t start = 0; start < n; start += cfg.batch) {
      size_t stop = std::min(n, start + cfg.batch);
      std::vector<std::pair<std::vector<double>, int>> batch;
      batch.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) batch.push_back(feats[order[i]]);
      auto g = teacher_ce_gradients(batch, emb, vb, cfg.tau);
      if (!std::isfinite(g.loss))
        throw NumericError("fit_teacher: non-finite loss");
      if (cfg.lr != 0.0) {
        for (size_t i = 0; i < emb.matrix.size(); ++i)
          emb.matrix[i] -= cfg.lr * g.d_class_emb[i];
        for (int k = 0; k < d; ++k) vb[k] -= cfg.lr * g.d_visual_bias[k];
        for (int i = 0; i < c; ++i) normalize_in_place(emb.row(i));
      }
    }
    trace.push_back(mean_ce(feats, emb, vb, cfg.tau));
  }

  TeacherModel model(encoder, std::move(emb), std::move(vb), cfg.tau);
  model.seed = cfg.seed;
  return {std::move(model), std::move(trace)};
}

}  // namespace augpt
