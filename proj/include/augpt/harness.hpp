#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "augpt/distill.hpp"
#include "augpt/raster.hpp"
#include "augpt/teacher.hpp"

namespace augpt {

// Synthetic dataset: each class is a deterministic block-color motif; every
// sample is the motif under a small pose jitter (rotation + translation)
// plus i.i.d. Gaussian pixel noise. corruption_rate drives the stress hook
// that replaces that fraction of augmented views with structureless noise
// during distillation.
struct SyntheticDatasetSpec {
  int c = 10;
  int per_class = 20;
  int width = 32;
  int height = 32;
  uint64_t class_generator_seed = 1;
  double noise_level = 25.0;
  double corruption_rate = 0.0;

  void validate() const;
};

struct DatasetItem {
  std::string image_key;
  Raster image;
  int label = 0;
};

// Deterministic class pattern; also the source of surrogate zero-shot
// embeddings for classes the teacher was never fit on.
Raster class_motif(const SyntheticDatasetSpec& spec, int class_idx);

Raster synth_image(const SyntheticDatasetSpec& spec, int class_idx,
                   uint64_t sample_seed);

// Fully determined by (spec, tag); the run seed never feeds generation.
std::vector<DatasetItem> make_dataset(const SyntheticDatasetSpec& spec,
                                      std::string_view tag);

// PPM files plus manifest.jsonl ({image_key, path, label} per line).
void write_dataset(const std::vector<DatasetItem>& items,
                   const std::filesystem::path& dir);
std::vector<DatasetItem> load_dataset(const std::filesystem::path& manifest);

// Manifest without the label field; what the distillation CLI consumes.
void write_unlabeled_manifest(const std::vector<DatasetItem>& items,
                              const std::filesystem::path& dir);

struct SplitPlan {
  std::vector<int> base_classes;
  std::vector<int> new_classes;
  int shots = 0;  // 0 = full unlabeled pool, otherwise per-class samples
};

SplitPlan make_even_split(int class_count, int shots);

double harmonic_mean(double base, double nw);

struct EvalReport {
  double base_acc = 0.0;  // percent
  double new_acc = 0.0;
  double hm = 0.0;
  std::map<int, double> per_class;
  std::string config_digest;
};

// Student inference over a labeled test set. row_to_class maps teacher
// embedding rows onto original class ids.
EvalReport evaluate(const StudentModel& student, const TeacherModel& teacher,
                    const std::vector<DatasetItem>& test,
                    const SplitPlan& split,
                    const std::vector<int>& row_to_class, int threads);

std::string eval_report_json(const EvalReport& report);

// Stress mode: replaces augmented views (never the raw member) with uniform
// noise at spec.corruption_rate, deterministically per (seed, key, epoch,
// view index).
ViewHook make_corruption_hook(const SyntheticDatasetSpec& spec,
                              uint64_t run_seed);

}  // namespace augpt
