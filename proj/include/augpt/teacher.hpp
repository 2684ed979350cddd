#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "augpt/augment.hpp"
#include "augpt/raster.hpp"
#include "augpt/scoring.hpp"

namespace augpt {

struct TeacherConfig {
  int epochs = 20;
  double lr = 0.002;
  int batch = 16;
  double tau = 1.0;
  uint64_t seed = 0;
};

// Frozen scorer: class embeddings plus a visual bias added to every encoded
// feature before cosine scoring. Immutable once constructed; fitting happens
// in fit_teacher and class-set extension returns a new model.
class TeacherModel {
 public:
  TeacherModel(Encoder encoder, ClassEmbeddings emb,
               std::vector<double> visual_bias, double tau);

  LogitVector logits(const Raster& img) const;
  std::vector<LogitVector> logits_batch(const ViewSet& vs) const;

  // Appends unit-normalized rows for classes unseen during fitting.
  TeacherModel extend_classes(const std::vector<std::vector<double>>& rows,
                              std::vector<std::string> names) const;

  const Encoder& encoder() const { return encoder_; }
  const ClassEmbeddings& class_emb() const { return emb_; }
  const std::vector<double>& visual_bias() const { return visual_bias_; }
  double tau() const { return tau_; }
  int class_count() const { return emb_.count(); }
  uint64_t seed = 0;  // provenance only

  void save(const std::filesystem::path& path) const;
  static TeacherModel load(const std::filesystem::path& path, Encoder encoder);

 private:
  Encoder encoder_;
  ClassEmbeddings emb_;
  std::vector<double> visual_bias_;
  double tau_;
};

struct TeacherFitResult {
  TeacherModel model;
  std::vector<double> loss_trace;  // mean CE over the full set, entry 0 = init
};

// Cross-entropy fit of class embeddings + visual bias on labeled pairs.
// Embedding rows are re-normalized to unit norm after every update step.
// Initialization: row = unit(class mean feature + N(0, 0.02^2) noise),
// visual bias ~ N(0, 0.02^2).
TeacherFitResult fit_teacher(
    const std::vector<std::pair<Raster, int>>& train, const Encoder& encoder,
    std::vector<std::string> class_names, const TeacherConfig& cfg);

// Mean cross-entropy plus gradients for one parameter point; shared by the
// optimizer and the finite-difference checks.
struct TeacherGradients {
  double loss = 0.0;
  std::vector<double> d_class_emb;   // c x d_t
  std::vector<double> d_visual_bias;  // d_t
};

TeacherGradients teacher_ce_gradients(
    const std::vector<std::pair<std::vector<double>, int>>& features,
    const ClassEmbeddings& emb, const std::vector<double>& visual_bias,
    double tau);

}  // namespace augpt
