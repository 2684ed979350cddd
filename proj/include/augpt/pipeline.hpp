#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "augpt/config.hpp"
#include "augpt/harness.hpp"

namespace augpt {

// Everything one end-to-end run produces. write_run_artifacts serializes the
// whole set with deterministic bytes.
struct RunArtifacts {
  TeacherModel teacher;
  StudentModel student;
  std::vector<double> teacher_loss_trace;
  std::vector<EpochLog> distill_log;
  EvalReport report;
  std::vector<int> row_to_class;
  std::string resolved_config;
};

Encoder make_encoder(const std::string& kind, int out_dim,
                     const SyntheticDatasetSpec& geometry, uint64_t seed);

// Teacher fit on base-class few-shot pairs, candidate set extended with
// motif-derived rows for the new classes, distillation over the (redacted)
// unlabeled pool, evaluation on a held-out test set.
RunArtifacts run_base_to_new(const RunConfig& cfg);

// Teacher fit on all source classes, candidate set rebuilt from the target's
// motif generator, student distilled on target unlabeled images.
RunArtifacts run_cross_dataset(const RunConfig& cfg);

struct AblationCell {
  std::string value;
  EvalReport report;
};

// One run_base_to_new per grid value with all other config held fixed.
// sweep is one of n_views | steps | topk | proj_layers | strategy.
std::vector<AblationCell> run_ablation(const RunConfig& base,
                                       const std::string& sweep,
                                       const std::vector<std::string>& grid);

std::string ablation_csv(const std::vector<AblationCell>& cells);

// Writes resolved.cfg, teacher.json, student.json, teacher_trace.jsonl,
// train_log.jsonl and report.json into dir (which must exist).
void write_run_artifacts(const RunArtifacts& artifacts,
                         const std::filesystem::path& dir);

}  // namespace augpt
