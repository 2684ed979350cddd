#include "augpt/config.hpp"

#include <cstdlib>
#include <sstream>

#include "augpt/errors.hpp"
#include "augpt/jsonio.hpp"
#include "augpt/rng.hpp"

namespace augpt {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    int64_t r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError(key + ": expected integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError(key + ": expected unsigned integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  const char* s = v.c_str();
  char* end = nullptr;
  double r = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw ConfigError(key + ": expected number, got '" + v + "'");
  return r;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected on/off, got '" + v + "'");
}

void assign_dataset_key(SyntheticDatasetSpec& spec, const std::string& key,
                        const std::string& field, const std::string& v) {
  if (field == "c")
    spec.c = static_cast<int>(parse_int(key, v));
  else if (field == "per_class")
    spec.per_class = static_cast<int>(parse_int(key, v));
  else if (field == "width")
    spec.width = static_cast<int>(parse_int(key, v));
  else if (field == "height")
    spec.height = static_cast<int>(parse_int(key, v));
  else if (field == "motif_seed")
    spec.class_generator_seed = parse_u64(key, v);
  else if (field == "noise_level")
    spec.noise_level = parse_real(key, v);
  else if (field == "corruption_rate")
    spec.corruption_rate = parse_real(key, v);
  else
    throw ConfigError("unknown config key '" + key + "'");
}

void assign(RunConfig& cfg, const std::string& key, const std::string& value) {
  std::string v = trim(value);
  if (key == "seed") {
    cfg.seed = parse_u64(key, v);
  } else if (key.rfind("dataset.", 0) == 0) {
    assign_dataset_key(cfg.dataset, key, key.substr(8), v);
  } else if (key.rfind("source.", 0) == 0) {
    cfg.has_source = true;
    assign_dataset_key(cfg.source, key, key.substr(7), v);
  } else if (key == "split.shots") {
    cfg.split_shots = v == "full" ? 0 : static_cast<int>(parse_int(key, v));
  } else if (key == "teacher.shots") {
    cfg.teacher_shots = static_cast<int>(parse_int(key, v));
  } else if (key == "teacher.epochs") {
    cfg.teacher.epochs = static_cast<int>(parse_int(key, v));
  } else if (key == "teacher.lr") {
    cfg.teacher.lr = parse_real(key, v);
  } else if (key == "teacher.batch") {
    cfg.teacher.batch = static_cast<int>(parse_int(key, v));
  } else if (key == "teacher.tau") {
    cfg.teacher.tau = parse_real(key, v);
  } else if (key == "encoder.kind") {
    cfg.encoder_kind = v;
    parse_encoder_kind(v);  // validates
  } else if (key == "encoder.teacher_dim") {
    cfg.teacher_dim = static_cast<int>(parse_int(key, v));
  } else if (key == "encoder.student_dim") {
    cfg.student_dim = static_cast<int>(parse_int(key, v));
  } else if (key == "student.proj_layers") {
    cfg.proj_layers = static_cast<int>(parse_int(key, v));
  } else if (key == "augment.n_views") {
    cfg.distill.augment.n_views = static_cast<int>(parse_int(key, v));
  } else if (key == "augment.steps") {
    cfg.distill.augment.steps = static_cast<int>(parse_int(key, v));
  } else if (key == "augment.mode") {
    if (v == "dynamic")
      cfg.distill.augment.amplitude_mode = AmplitudeMode::kDynamicUniform;
    else if (v == "fixed")
      cfg.distill.augment.amplitude_mode = AmplitudeMode::kFixed30;
    else
      throw ConfigError("augment.mode: expected dynamic or fixed");
  } else if (key == "augment.fixed_a") {
    cfg.distill.augment.fixed_a = parse_real(key, v);
  } else if (key == "augment.strategy") {
    cfg.distill.augment.strategy = parse_strategy(v);
  } else if (key == "augment.crop_scale_lo") {
    cfg.distill.augment.crop_scale_lo = parse_real(key, v);
  } else if (key == "augment.crop_scale_hi") {
    cfg.distill.augment.crop_scale_hi = parse_real(key, v);
  } else if (key == "distill.epochs") {
    cfg.distill.epochs = static_cast<int>(parse_int(key, v));
  } else if (key == "distill.lr") {
    cfg.distill.lr = parse_real(key, v);
  } else if (key == "distill.batch") {
    cfg.distill.batch = static_cast<int>(parse_int(key, v));
  } else if (key == "distill.tau") {
    cfg.distill.tau = parse_real(key, v);
  } else if (key == "distill.gate") {
    cfg.distill.gate_enabled = parse_flag(key, v);
  } else if (key == "distill.top_k") {
    cfg.distill.top_k = static_cast<int>(parse_int(key, v));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

void RunConfig::validate() const {
  dataset.validate();
  if (has_source) source.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (split_shots < 0) throw ConfigError("split.shots must be >= 0");
  if (teacher_shots < 1) throw ConfigError("teacher.shots must be >= 1");
  if (teacher_dim < 2 || student_dim < 2)
    throw ConfigError("encoder dims must be >= 2");
  if (proj_layers < 1 || proj_layers > 3)
    throw ConfigError("student.proj_layers must be 1, 2 or 3");
  if (teacher.epochs < 0 || teacher.batch < 1)
    throw ConfigError("bad teacher.epochs/batch");
  if (!(teacher.tau > 0.0) || !(distill.tau > 0.0))
    throw ConfigError("tau values must be > 0");
  if (distill.epochs < 0 || distill.batch < 1)
    throw ConfigError("bad distill.epochs/batch");
  if (distill.top_k < 1) throw ConfigError("distill.top_k must be >= 1");
  distill.augment.validate();
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    assign(cfg, key, s.substr(eq + 1));
  }
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_text_file(path));
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "': expected key=value");
  assign(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

namespace {

void emit_dataset(std::string& out, const std::string& prefix,
                  const SyntheticDatasetSpec& spec) {
  out += prefix + ".c = " + std::to_string(spec.c) + "\n";
  out += prefix + ".per_class = " + std::to_string(spec.per_class) + "\n";
  out += prefix + ".width = " + std::to_string(spec.width) + "\n";
  out += prefix + ".height = " + std::to_string(spec.height) + "\n";
  out += prefix + ".motif_seed = " + std::to_string(spec.class_generator_seed) +
         "\n";
  out += prefix + ".noise_level = " + fmt_double(spec.noise_level) + "\n";
  out += prefix + ".corruption_rate = " + fmt_double(spec.corruption_rate) +
         "\n";
}

}  // namespace

std::string resolved_config_text(const RunConfig& cfg) {
  std::string out;
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  emit_dataset(out, "dataset", cfg.dataset);
  if (cfg.has_source) emit_dataset(out, "source", cfg.source);
  out += "split.shots = " + std::to_string(cfg.split_shots) + "\n";
  out += "teacher.shots = " + std::to_string(cfg.teacher_shots) + "\n";
  out += "teacher.epochs = " + std::to_string(cfg.teacher.epochs) + "\n";
  out += "teacher.lr = " + fmt_double(cfg.teacher.lr) + "\n";
  out += "teacher.batch = " + std::to_string(cfg.teacher.batch) + "\n";
  out += "teacher.tau = " + fmt_double(cfg.teacher.tau) + "\n";
  out += "encoder.kind = " + cfg.encoder_kind + "\n";
  out += "encoder.teacher_dim = " + std::to_string(cfg.teacher_dim) + "\n";
  out += "encoder.student_dim = " + std::to_string(cfg.student_dim) + "\n";
  out += "student.proj_layers = " + std::to_string(cfg.proj_layers) + "\n";
  const auto& aug = cfg.distill.augment;
  out += "augment.n_views = " + std::to_string(aug.n_views) + "\n";
  out += "augment.steps = " + std::to_string(aug.steps) + "\n";
  out += std::string("augment.mode = ") +
         (aug.amplitude_mode == AmplitudeMode::kFixed30 ? "fixed" : "dynamic") +
         "\n";
  if (aug.amplitude_mode == AmplitudeMode::kFixed30)
    out += "augment.fixed_a = " + fmt_double(aug.fixed_a) + "\n";
  out += "augment.strategy = " + std::string(strategy_name(aug.strategy)) +
         "\n";
  out += "augment.crop_scale_lo = " + fmt_double(aug.crop_scale_lo) + "\n";
  out += "augment.crop_scale_hi = " + fmt_double(aug.crop_scale_hi) + "\n";
  out += "distill.epochs = " + std::to_string(cfg.distill.epochs) + "\n";
  out += "distill.lr = " + fmt_double(cfg.distill.lr) + "\n";
  out += "distill.batch = " + std::to_string(cfg.distill.batch) + "\n";
  out += "distill.tau = " + fmt_double(cfg.distill.tau) + "\n";
  out += std::string("distill.gate = ") +
         (cfg.distill.gate_enabled ? "on" : "off") + "\n";
  out += "distill.top_k = " + std::to_string(cfg.distill.top_k) + "\n";
  return out;
}

std::string config_digest(const RunConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(resolved_config_text(cfg))));
  return buf;
}

}  // namespace augpt
