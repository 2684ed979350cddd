#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "augpt/distill.hpp"
#include "augpt/harness.hpp"
#include "augpt/teacher.hpp"

namespace augpt {

// Whole-run configuration, parsed from a flat dotted-key = value text file.
// Unknown keys are hard errors. The resolved form (defaults expanded,
// canonical key order) is written next to every run's outputs and is what
// the config digest hashes.
struct RunConfig {
  uint64_t seed = 7;
  int threads = 1;  // execution-only knob (CLI flag); never part of the
                    // resolved config text or digest
  SyntheticDatasetSpec dataset;
  SyntheticDatasetSpec source;  // cross-dataset runs only
  bool has_source = false;
  int split_shots = 0;  // 0 = full unlabeled pool
  int teacher_shots = 16;
  std::string encoder_kind = "patch-mean";
  int teacher_dim = 32;
  int student_dim = 16;
  int proj_layers = 2;
  TeacherConfig teacher;
  DistillConfig distill;

  void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

// `key=value` pairs, e.g. from command-line overrides; applied on top.
void apply_override(RunConfig& cfg, const std::string& assignment);

std::string resolved_config_text(const RunConfig& cfg);
std::string config_digest(const RunConfig& cfg);

}  // namespace augpt
