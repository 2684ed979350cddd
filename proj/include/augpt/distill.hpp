#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "augpt/augment.hpp"
#include "augpt/gate.hpp"
#include "augpt/teacher.hpp"

namespace augpt {

struct AffineLayer {
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> biases;   // out_dim
  int in_dim = 0;
  int out_dim = 0;
};

// Learnable student: frozen encoder, per-dimension feature modulation
// (scale * feat + bias) and an MLP projection into the teacher embedding
// space. ReLU between affine layers, none after the last.
class StudentModel {
 public:
  StudentModel(Encoder encoder, int teacher_dim, int proj_layers, double tau,
               uint64_t seed);

  struct Forward {
    std::vector<double> feat;                    // encoder output
    std::vector<double> modulated;               // scale*feat + bias
    std::vector<std::vector<double>> pre_act;    // per layer, before ReLU
    std::vector<double> projected;               // final layer output
    LogitVector logits;
  };

  Forward forward(const Raster& img, const ClassEmbeddings& emb) const;

  const Encoder& encoder() const { return encoder_; }
  int feature_dim() const { return encoder_.out_dim(); }
  int teacher_dim() const { return teacher_dim_; }
  int layer_count() const { return static_cast<int>(proj.size()); }
  double tau() const { return tau_; }
  uint64_t seed() const { return seed_; }

  std::vector<double> prompt_bias;
  std::vector<double> prompt_scale;
  std::vector<AffineLayer> proj;

  void save(const std::filesystem::path& path) const;
  static StudentModel load(const std::filesystem::path& path, Encoder encoder);

  // Flat parameter view in the fixed order: prompt_bias, prompt_scale,
  // then per layer weights followed by biases. Used by the optimizer and
  // the finite-difference checks.
  size_t parameter_count() const;
  double get_parameter(size_t i) const;
  void set_parameter(size_t i, double v);

 private:
  StudentModel(Encoder encoder, int teacher_dim, double tau, uint64_t seed)
      : encoder_(std::move(encoder)), teacher_dim_(teacher_dim), tau_(tau),
        seed_(seed) {}

  Encoder encoder_;
  int teacher_dim_;
  double tau_;
  uint64_t seed_;
};

LogitVector student_logits(const StudentModel& s, const TeacherModel& t,
                           const Raster& img);

// Mean over aligned pairs of KL(softmax(tea/tau) || softmax(stu/tau)),
// 0*log 0 = 0 convention, never negative.
double kl_loss(const std::vector<LogitVector>& teacher_logits,
               const std::vector<LogitVector>& student_logits, double tau);

struct DistillConfig {
  int epochs = 20;
  double lr = 0.005;
  int batch = 16;
  double tau = 1.0;
  uint64_t seed = 0;
  bool gate_enabled = true;
  int top_k = 1;
  int threads = 1;
  AugmentConfig augment;
};

// Accumulated KL gradient over a set of (view image, teacher logits) pairs;
// exposed for the gradient checks.
struct StudentGradients {
  double loss = 0.0;
  std::vector<double> flat;  // same layout as StudentModel parameters
};

StudentGradients student_kl_gradients(
    const StudentModel& s, const ClassEmbeddings& emb,
    const std::vector<const Raster*>& views,
    const std::vector<const LogitVector*>& targets, double tau, int threads);

// One SGD step over the accepted views of the batch; flat per-view
// averaging. Returns the batch loss at the pre-update parameters.
double distill_step(StudentModel& s,
                    const std::vector<std::pair<GateResult, ViewSet>>& batch,
                    const TeacherModel& t, const DistillConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double mean_kl = 0.0;
  double acceptance_rate = 0.0;
  double raw_discard_rate = 0.0;
};

struct DistillResult {
  StudentModel student;
  std::vector<EpochLog> log;
};

using ViewHook = std::function<void(ViewSet&, int64_t epoch)>;

// Full distillation loop over an unlabeled dataset (labels are structurally
// absent from the input). Per epoch: image order is
// shuffled_indices(n, derive_seed(seed, "distill-epoch", epoch, 0)); each
// image's views are rebuilt with build_view_set(img, cfg.augment, key, epoch,
// cfg.seed), optionally post-processed by view_hook, scored by the frozen
// teacher, gated (all members accepted when the gate is off) and used for one
// distill_step per batch.
DistillResult run_distillation(
    const std::vector<std::pair<std::string, Raster>>& dataset,
    const TeacherModel& teacher, StudentModel student,
    const DistillConfig& cfg, const ViewHook& view_hook = nullptr);

void write_train_log(const std::vector<EpochLog>& log,
                     const std::filesystem::path& path);

}  // namespace augpt
