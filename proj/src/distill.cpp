#include "augpt/distill.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "augpt/errors.hpp"
#include "augpt/jsonio.hpp"
#include "augpt/parallel.hpp"
#include "augpt/rng.hpp"
#include "augpt/vecmath.hpp"

namespace augpt {

StudentModel::StudentModel(Encoder encoder, int teacher_dim, int proj_layers,
                           double tau, uint64_t seed)
    : StudentModel(std::move(encoder), teacher_dim, tau, seed) {
  if (proj_layers < 1 || proj_layers > 3)
    throw ConfigError("student: proj_layers must be 1, 2 or 3");
  if (!(tau > 0.0)) throw std::invalid_argument("student: tau must be > 0");
  int d_s = encoder_.out_dim();

  RandomStream rs(mix_seed({seed, fnv1a64("student-init")}));
  prompt_bias.resize(d_s);
  for (auto& v : prompt_bias) v = 0.02 * rs.gaussian();
  prompt_scale.assign(d_s, 1.0);

  int in = d_s;
  for (int l = 0; l < proj_layers; ++l) {
    AffineLayer layer;
    layer.in_dim = in;
    layer.out_dim = teacher_dim_;
    layer.weights.resize(static_cast<size_t>(layer.out_dim) * layer.in_dim);
    for (auto& w : layer.weights) w = 0.02 * rs.gaussian();
    layer.biases.assign(layer.out_dim, 0.0);
    proj.push_back(std::move(layer));
    in = teacher_dim_;
  }
}

StudentModel::Forward StudentModel::forward(const Raster& img,
                                            const ClassEmbeddings& emb) const {
  Forward f;
  f.feat = encoder_.encode(img);
  int d_s = feature_dim();
  f.modulated.resize(d_s);
  for (int k = 0; k < d_s; ++k)
    f.modulated[k] = prompt_scale[k] * f.feat[k] + prompt_bias[k];

  const std::vector<double>* act = &f.modulated;
  f.pre_act.reserve(proj.size());
  for (size_t l = 0; l < proj.size(); ++l) {
    const auto& layer = proj[l];
    std::vector<double> pre(layer.out_dim, 0.0);
    for (int o = 0; o < layer.out_dim; ++o) {
      const double* row =
          layer.weights.data() + static_cast<size_t>(o) * layer.in_dim;
      double s = layer.biases[o];
      if (l == 0) {
        for (int i = 0; i < layer.in_dim; ++i) s += row[i] * (*act)[i];
      } else {
        // hidden activations pass through ReLU
        for (int i = 0; i < layer.in_dim; ++i)
          s += row[i] * std::max(0.0, (*act)[i]);
      }
      pre[o] = s;
    }
    f.pre_act.push_back(std::move(pre));
    act = &f.pre_act.back();
  }
  f.projected = f.pre_act.back();
  f.logits = cosine_logits(f.projected, emb);
  return f;
}

size_t StudentModel::parameter_count() const {
  size_t n = prompt_bias.size() + prompt_scale.size();
  for (const auto& l : proj) n += l.weights.size() + l.biases.size();
  return n;
}

double StudentModel::get_parameter(size_t i) const {
  if (i < prompt_bias.size()) return prompt_bias[i];
  i -= prompt_bias.size();
  if (i < prompt_scale.size()) return prompt_scale[i];
  i -= prompt_scale.size();
  for (const auto& l : proj) {
    if (i < l.weights.size()) return l.weights[i];
    i -= l.weights.size();
    if (i < l.biases.size()) return l.biases[i];
    i -= l.biases.size();
  }
  throw std::out_of_range("student parameter index");
}

void StudentModel::set_parameter(size_t i, double v) {
  if (i < prompt_bias.size()) {
    prompt_bias[i] = v;
    return;
  }
  i -= prompt_bias.size();
  if (i < prompt_scale.size()) {
    prompt_scale[i] = v;
    return;
  }
  i -= prompt_scale.size();
  for (auto& l : proj) {
    if (i < l.weights.size()) {
      l.weights[i] = v;
      return;
    }
    i -= l.weights.size();
    if (i < l.biases.size()) {
      l.biases[i] = v;
      return;
    }
    i -= l.biases.size();
  }
  throw std::out_of_range("student parameter index");
}

LogitVector student_logits(const StudentModel& s, const TeacherModel& t,
                           const Raster& img) {
  return s.forward(img, t.class_emb()).logits;
}

namespace {

// log softmax(values/tau), max-subtracted
std::vector<double> log_softmax(std::span<const double> values, double tau) {
  double mx = *std::max_element(values.begin(), values.end());
  std::vector<double> lp(values.size());
  double z = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    lp[i] = (values[i] - mx) / tau;
    z += std::exp(lp[i]);
  }
  double lz = std::log(z);
  for (auto& v : lp) v -= lz;
  return lp;
}

double kl_pair(const LogitVector& tea, const LogitVector& stu, double tau) {
  auto lp = log_softmax(tea.values, tau);
  auto lq = log_softmax(stu.values, tau);
  double kl = 0.0;
  for (size_t i = 0; i < lp.size(); ++i) {
    double p = std::exp(lp[i]);
    if (p > 0.0) kl += p * (lp[i] - lq[i]);
  }
  return std::max(0.0, kl);  // guards rounding noise; true KL is nonnegative
}

}  // namespace

double kl_loss(const std::vector<LogitVector>& teacher_logits,
               const std::vector<LogitVector>& student_logits, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("kl_loss: tau must be > 0");
  if (teacher_logits.empty() ||
      teacher_logits.size() != student_logits.size())
    throw DataError("kl_loss: teacher/student lists not aligned");
  double total = 0.0;
  for (size_t i = 0; i < teacher_logits.size(); ++i) {
    if (teacher_logits[i].values.size() != student_logits[i].values.size())
      throw DataError("kl_loss: class-count mismatch");
    total += kl_pair(teacher_logits[i], student_logits[i], tau);
  }
  return total / static_cast<double>(teacher_logits.size());
}

namespace {

// Loss and flat-parameter gradient of KL(tea || stu) for a single view.
void view_kl_gradient(const StudentModel& s, const ClassEmbeddings& emb,
                      const Raster& img, const LogitVector& target, double tau,
                      double* out_loss, std::vector<double>& out_flat) {
  auto f = s.forward(img, emb);
  int c = emb.count();
  int d_t = emb.dim;
  int d_s = s.feature_dim();

  auto lp = log_softmax(target.values, tau);
  auto lq = log_softmax(f.logits.values, tau);
  double kl = 0.0;
  for (int i = 0; i < c; ++i) {
    double p = std::exp(lp[i]);
    if (p > 0.0) kl += p * (lp[i] - lq[i]);
  }
  *out_loss = std::max(0.0, kl);

  // d KL / d student-logit_i = (q_i - p_i) / tau
  std::vector<double> gl(c);
  for (int i = 0; i < c; ++i)
    gl[i] = (std::exp(lq[i]) - std::exp(lp[i])) / tau;

  // through the cosine head
  const auto& z = f.projected;
  double nz = norm(z);
  std::vector<double> dz(d_t, 0.0);
  for (int i = 0; i < c; ++i) {
    auto row = emb.row(i);
    double ne = norm(row);
    double li = f.logits.values[i];
    for (int k = 0; k < d_t; ++k)
      dz[k] += gl[i] * (row[k] / (nz * ne) - li * z[k] / (nz * nz));
  }

  // through the projection stack
  size_t nlayers = s.proj.size();
  std::vector<std::vector<double>> d_weights(nlayers);
  std::vector<std::vector<double>> d_biases(nlayers);
  std::vector<double> d_pre = dz;
  for (size_t l = nlayers; l-- > 0;) {
    const auto& layer = s.proj[l];
    const std::vector<double>& input_pre =
        (l == 0) ? f.modulated : f.pre_act[l - 1];
    d_weights[l].assign(layer.weights.size(), 0.0);
    d_biases[l].assign(layer.biases.size(), 0.0);
    std::vector<double> d_in(layer.in_dim, 0.0);
    for (int o = 0; o < layer.out_dim; ++o) {
      double g = d_pre[o];
      d_biases[l][o] = g;
      const double* wrow =
          layer.weights.data() + static_cast<size_t>(o) * layer.in_dim;
      double* dwrow =
          d_weights[l].data() + static_cast<size_t>(o) * layer.in_dim;
      for (int i = 0; i < layer.in_dim; ++i) {
        double a = (l == 0) ? input_pre[i] : std::max(0.0, input_pre[i]);
        dwrow[i] = g * a;
        d_in[i] += g * wrow[i];
      }
    }
    if (l > 0) {
      for (int i = 0; i < layer.in_dim; ++i)
        if (f.pre_act[l - 1][i] <= 0.0) d_in[i] = 0.0;
    }
    d_pre = std::move(d_in);
  }

  // modulation: m = scale*feat + bias
  std::vector<double> d_bias(d_s), d_scale(d_s);
  for (int k = 0; k < d_s; ++k) {
    d_bias[k] = d_pre[k];
    d_scale[k] = d_pre[k] * f.feat[k];
  }

  out_flat.clear();
  out_flat.reserve(s.parameter_count());
  out_flat.insert(out_flat.end(), d_bias.begin(), d_bias.end());
  out_flat.insert(out_flat.end(), d_scale.begin(), d_scale.end());
  for (size_t l = 0; l < nlayers; ++l) {
    out_flat.insert(out_flat.end(), d_weights[l].begin(), d_weights[l].end());
    out_flat.insert(out_flat.end(), d_biases[l].begin(), d_biases[l].end());
  }
}

}  // namespace

StudentGradients student_kl_gradients(
    const StudentModel& s, const ClassEmbeddings& emb,
    const std::vector<const Raster*>& views,
    const std::vector<const LogitVector*>& targets, double tau, int threads) {
  if (views.empty() || views.size() != targets.size())
    throw DataError("student gradients: views/targets not aligned");

  size_t n = views.size();
  std::vector<double> losses(n, 0.0);
  std::vector<std::vector<double>> grads(n);
  parallel_for(n, threads, [&](size_t i) {
    view_kl_gradient(s, emb, *views[i], *targets[i], tau, &losses[i],
                     grads[i]);
  });

  StudentGradients out;
  out.flat.assign(s.parameter_count(), 0.0);
  // fixed reduction order: view slots ascending
  for (size_t i = 0; i < n; ++i) {
    out.loss += losses[i];
    for (size_t k = 0; k < out.flat.size(); ++k) out.flat[k] += grads[i][k];
  }
  double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (auto& v : out.flat) v *= inv;
  return out;
}

double distill_step(StudentModel& s,
                    const std::vector<std::pair<GateResult, ViewSet>>& batch,
                    const TeacherModel& t, const DistillConfig& cfg) {
  std::vector<const Raster*> views;
  std::vector<const LogitVector*> targets;
  for (const auto& [gr, vs] : batch) {
    if (gr.accepted_indices.empty())
      throw DataError("distill_step: empty gate result");
    for (size_t a = 0; a < gr.accepted_indices.size(); ++a) {
      views.push_back(&vs.member(gr.accepted_indices[a]));
      targets.push_back(&gr.accepted_logits[a]);
    }
  }

  auto g = student_kl_gradients(s, t.class_emb(), views, targets, cfg.tau,
                                cfg.threads);
  bool finite = std::isfinite(g.loss);
  for (double v : g.flat)
    if (!std::isfinite(v)) finite = false;
  if (!finite)
    throw NumericError("distill_step: non-finite loss or gradient (batch of " +
                       std::to_string(batch.size()) + " images, " +
                       std::to_string(views.size()) + " views, loss=" +
                       fmt_double(g.loss) + ")");

  if (cfg.lr != 0.0)
    for (size_t i = 0; i < g.flat.size(); ++i)
      s.set_parameter(i, s.get_parameter(i) - cfg.lr * g.flat[i]);
  return g.loss;
}

DistillResult run_distillation(
    const std::vector<std::pair<std::string, Raster>>& dataset,
    const TeacherModel& teacher, StudentModel student,
    const DistillConfig& cfg, const ViewHook& view_hook) {
  if (dataset.empty()) throw DataError("run_distillation: empty dataset");
  cfg.augment.validate();
  if (cfg.batch < 1) throw ConfigError("distill batch must be >= 1");

  std::vector<EpochLog> log;
  size_t n = dataset.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order =
        shuffled_indices(n, derive_seed(cfg.seed, "distill-epoch", epoch, 0));

    double loss_weighted = 0.0;
    size_t accepted_total = 0, members_total = 0, raw_discards = 0;

    for (size_t start = 0; start < n; start += cfg.batch) {
      size_t stop = std::min(n, start + cfg.batch);
      size_t bsz = stop - start;

      std::vector<std::pair<GateResult, ViewSet>> batch(bsz);
      parallel_for(bsz, cfg.threads, [&](size_t bi) {
        const auto& [key, img] = dataset[order[start + bi]];
        ViewSet vs = build_view_set(img, cfg.augment, key, epoch, cfg.seed);
        if (view_hook) view_hook(vs, epoch);
        auto tl = teacher.logits_batch(vs);
        GateResult gr;
        if (cfg.gate_enabled) {
          gr = cfg.top_k == 1 ? gate_logits(tl) : gate_logits_topk(tl, cfg.top_k);
        } else {
          gr.top1_seq = top1_sequence(tl);
          gr.consensus = consensus(gr.top1_seq);
          for (size_t j = 0; j < tl.size(); ++j) {
            gr.accepted_indices.push_back(static_cast<int>(j));
            gr.accepted_logits.push_back(tl[j]);
          }
          gr.raw_discarded = false;
        }
        batch[bi] = {std::move(gr), std::move(vs)};
      });

      size_t batch_views = 0;
      for (const auto& [gr, vs] : batch) {
        batch_views += gr.accepted_indices.size();
        members_total += vs.member_count();
        if (gr.raw_discarded) ++raw_discards;
      }
      accepted_total += batch_views;

      double loss = distill_step(student, batch, teacher, cfg);
      loss_weighted += loss * static_cast<double>(batch_views);
    }

    EpochLog el;
    el.epoch = epoch;
    el.mean_kl = accepted_total ? loss_weighted / accepted_total : 0.0;
    el.acceptance_rate =
        members_total ? static_cast<double>(accepted_total) / members_total : 0.0;
    el.raw_discard_rate = static_cast<double>(raw_discards) / n;
    log.push_back(el);
  }

  return {std::move(student), std::move(log)};
}

void write_train_log(const std::vector<EpochLog>& log,
                     const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : log) {
    JsonWriter w;
    w.begin_object();
    w.key("epoch").value_int(e.epoch);
    w.key("mean_kl").value_double(e.mean_kl);
    w.key("acceptance_rate").value_double(e.acceptance_rate);
    w.key("raw_discard_rate").value_double(e.raw_discard_rate);
    w.end_object();
    out += w.str();
    out += "\n";
  }
  write_text_file(path, out);
}

void StudentModel::save(const std::filesystem::path& path) const {
  JsonWriter w;
  w.begin_object();
  w.key("format").value_string("augpt-student");
  w.key("d_s").value_int(feature_dim());
  w.key("d_t").value_int(teacher_dim_);
  w.key("L").value_int(layer_count());
  w.key("tau").value_double(tau_);
  w.key("seed").value_uint(seed_);
  w.key("prompt_bias").array_of_doubles(prompt_bias);
  w.key("prompt_scale").array_of_doubles(prompt_scale);
  w.key("proj_weights").begin_array();
  for (const auto& l : proj) w.array_of_doubles(l.weights);
  w.end_array();
  w.key("proj_biases").begin_array();
  for (const auto& l : proj) w.array_of_doubles(l.biases);
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

StudentModel StudentModel::load(const std::filesystem::path& path,
                                Encoder encoder) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("student checkpoint parse error: " + std::string(e.what()));
  }
  try {
    if (j.at("format") != "augpt-student")
      throw DataError("not a student checkpoint");
    int d_s = j.at("d_s");
    int d_t = j.at("d_t");
    int layers = j.at("L");
    if (encoder.out_dim() != d_s)
      throw DataError("student checkpoint dim does not match encoder");
    StudentModel s(std::move(encoder), d_t, j.at("tau").get<double>(),
                   j.at("seed").get<uint64_t>());
    s.prompt_bias = j.at("prompt_bias").get<std::vector<double>>();
    s.prompt_scale = j.at("prompt_scale").get<std::vector<double>>();
    if (static_cast<int>(s.prompt_bias.size()) != d_s ||
        static_cast<int>(s.prompt_scale.size()) != d_s)
      throw DataError("student checkpoint modulation shape mismatch");
    auto weights = j.at("proj_weights");
    auto biases = j.at("proj_biases");
    if (static_cast<int>(weights.size()) != layers ||
        static_cast<int>(biases.size()) != layers)
      throw DataError("student checkpoint layer count mismatch");
    int in = d_s;
    for (int l = 0; l < layers; ++l) {
      AffineLayer layer;
      layer.in_dim = in;
      layer.out_dim = d_t;
      layer.weights = weights[l].get<std::vector<double>>();
      layer.biases = biases[l].get<std::vector<double>>();
      if (layer.weights.size() !=
              static_cast<size_t>(layer.out_dim) * layer.in_dim ||
          layer.biases.size() != static_cast<size_t>(layer.out_dim))
        throw DataError("student checkpoint layer shape mismatch");
      s.proj.push_back(std::move(layer));
      in = d_t;
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("student checkpoint schema error: " +
                    std::string(e.what()));
  }
}

}  // namespace augpt
