#include "augpt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "augpt/errors.hpp"
#include "augpt/jsonio.hpp"
#include "augpt/parallel.hpp"
#include "augpt/policies.hpp"
#include "augpt/rng.hpp"

namespace augpt {

namespace {

constexpr int kMotifGrid = 4;
// pose jitter ranges baked into the generator
constexpr double kJitterRotateDeg = 14.0;
constexpr double kJitterTranslate = 0.08;

uint8_t sat_round(double v) {
  double r = std::nearbyint(v);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<uint8_t>(r);
}

}  // namespace

void SyntheticDatasetSpec::validate() const {
  if (c < 4) throw ConfigError("dataset.c must be >= 4");
  if (per_class < 1) throw ConfigError("dataset.per_class must be >= 1");
  if (width < 8 || height < 8)
    throw ConfigError("dataset images must be at least 8x8");
  if (noise_level < 0.0) throw ConfigError("dataset.noise_level must be >= 0");
  if (corruption_rate < 0.0 || corruption_rate > 1.0)
    throw ConfigError("dataset.corruption_rate must lie in [0,1]");
}

Raster class_motif(const SyntheticDatasetSpec& spec, int class_idx) {
  spec.validate();
  if (class_idx < 0 || class_idx >= spec.c)
    throw std::invalid_argument("class_motif: class index out of range");
  RandomStream rs(
      mix_seed({spec.class_generator_seed, fnv1a64("motif"),
                static_cast<uint64_t>(class_idx)}));
  // saturated block colors: maximal contrast between classes so the motif
  // survives pose jitter and pixel noise
  std::array<uint8_t, kMotifGrid * kMotifGrid * 3> colors;
  for (auto& b : colors) b = rs.coin() ? 255 : 0;

  Raster img;
  img.width = spec.width;
  img.height = spec.height;
  img.pixels.resize(static_cast<size_t>(spec.width) * spec.height * 3);
  for (int y = 0; y < spec.height; ++y) {
    int gy = y * kMotifGrid / spec.height;
    for (int x = 0; x < spec.width; ++x) {
      int gx = x * kMotifGrid / spec.width;
      const uint8_t* cell = &colors[(gy * kMotifGrid + gx) * 3];
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = cell[ch];
    }
  }
  return img;
}

Raster synth_image(const SyntheticDatasetSpec& spec, int class_idx,
                   uint64_t sample_seed) {
  Raster img = class_motif(spec, class_idx);
  RandomStream rs(sample_seed);

  const auto& table = policy_table();
  const PolicySpec& rot = table[static_cast<int>(Policy::kRotate)];
  const PolicySpec& tx = table[static_cast<int>(Policy::kTranslateX)];
  const PolicySpec& ty = table[static_cast<int>(Policy::kTranslateY)];

  img = apply_policy(img, rot, rs.uniform(0.0, kJitterRotateDeg), rs);
  img = apply_policy(img, tx, rs.uniform(0.0, kJitterTranslate), rs);
  img = apply_policy(img, ty, rs.uniform(0.0, kJitterTranslate), rs);

  if (spec.noise_level > 0.0)
    for (auto& b : img.pixels)
      b = sat_round(static_cast<double>(b) + spec.noise_level * rs.gaussian());
  return img;
}

std::vector<DatasetItem> make_dataset(const SyntheticDatasetSpec& spec,
                                      std::string_view tag) {
  spec.validate();
  std::vector<DatasetItem> items;
  items.reserve(static_cast<size_t>(spec.c) * spec.per_class);
  char key[64];
  for (int cls = 0; cls < spec.c; ++cls) {
    for (int i = 0; i < spec.per_class; ++i) {
      uint64_t sample_seed =
          mix_seed({spec.class_generator_seed, fnv1a64("sample"), fnv1a64(tag),
                    static_cast<uint64_t>(cls), static_cast<uint64_t>(i)});
      std::snprintf(key, sizeof(key), "%.*s_c%02d_i%04d",
                    static_cast<int>(tag.size()), tag.data(), cls, i);
      items.push_back({key, synth_image(spec, cls, sample_seed), cls});
    }
  }
  return items;
}

void write_dataset(const std::vector<DatasetItem>& items,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::string manifest;
  for (const auto& item : items) {
    std::string rel = "images/" + item.image_key + ".ppm";
    save_ppm(item.image, dir / rel);
    JsonWriter w;
    w.begin_object();
    w.key("image_key").value_string(item.image_key);
    w.key("path").value_string(rel);
    w.key("label").value_int(item.label);
    w.end_object();
    manifest += w.str();
    manifest += "\n";
  }
  write_text_file(dir / "manifest.jsonl", manifest);
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& manifest) {
  std::string text = read_text_file(manifest);
  std::filesystem::path base = manifest.parent_path();
  std::vector<DatasetItem> items;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest parse error: " + std::string(e.what()));
    }
    DatasetItem item;
    try {
      item.image_key = j.at("image_key").get<std::string>();
      item.image = load_ppm(base / j.at("path").get<std::string>());
      item.label = j.contains("label") ? j.at("label").get<int>() : -1;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest schema error: " + std::string(e.what()));
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw DataError("manifest is empty");
  return items;
}

void write_unlabeled_manifest(const std::vector<DatasetItem>& items,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::string manifest;
  for (const auto& item : items) {
    std::string rel = "images/" + item.image_key + ".ppm";
    save_ppm(item.image, dir / rel);
    JsonWriter w;
    w.begin_object();
    w.key("image_key").value_string(item.image_key);
    w.key("path").value_string(rel);
    w.end_object();
    manifest += w.str();
    manifest += "\n";
  }
  write_text_file(dir / "manifest.jsonl", manifest);
}

SplitPlan make_even_split(int class_count, int shots) {
  if (class_count < 4)
    throw ConfigError("split needs at least 4 classes");
  SplitPlan plan;
  plan.shots = shots;
  int base_count = (class_count + 1) / 2;
  for (int i = 0; i < class_count; ++i)
    (i < base_count ? plan.base_classes : plan.new_classes).push_back(i);
  return plan;
}

double harmonic_mean(double base, double nw) {
  double s = base + nw;
  return s > 0.0 ? 2.0 * base * nw / s : 0.0;
}

EvalReport evaluate(const StudentModel& student, const TeacherModel& teacher,
                    const std::vector<DatasetItem>& test,
                    const SplitPlan& split,
                    const std::vector<int>& row_to_class, int threads) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  if (static_cast<int>(row_to_class.size()) != teacher.class_count())
    throw DataError("evaluate: row_to_class size mismatch");

  std::set<int> base_set(split.base_classes.begin(), split.base_classes.end());
  std::set<int> new_set(split.new_classes.begin(), split.new_classes.end());
  for (const auto& item : test)
    if (!base_set.count(item.label) && !new_set.count(item.label))
      throw DataError("evaluate: test label " + std::to_string(item.label) +
                      " outside the split");

  std::vector<int> predicted(test.size());
  parallel_for(test.size(), threads, [&](size_t i) {
    auto lv = student_logits(student, teacher, test[i].image);
    predicted[i] = row_to_class[argmax_index(lv.values)];
  });

  std::map<int, std::pair<int, int>> per_class_counts;  // label -> (hit, total)
  for (size_t i = 0; i < test.size(); ++i) {
    auto& [hit, total] = per_class_counts[test[i].label];
    ++total;
    if (predicted[i] == test[i].label) ++hit;
  }

  auto bucket_acc = [&](const std::set<int>& classes) {
    long hit = 0, total = 0;
    for (const auto& [cls, counts] : per_class_counts) {
      if (!classes.count(cls)) continue;
      hit += counts.first;
      total += counts.second;
    }
    return total ? 100.0 * static_cast<double>(hit) / total : 0.0;
  };

  EvalReport report;
  report.base_acc = bucket_acc(base_set);
  report.new_acc = bucket_acc(new_set);
  report.hm = harmonic_mean(report.base_acc, report.new_acc);
  for (const auto& [cls, counts] : per_class_counts)
    report.per_class[cls] = 100.0 * counts.first / counts.second;
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("base_acc").value_double(report.base_acc);
  w.key("new_acc").value_double(report.new_acc);
  w.key("hm").value_double(report.hm);
  w.key("per_class").begin_object();
  for (const auto& [cls, acc] : report.per_class) {
    w.key(std::to_string(cls)).value_double(acc);
  }
  w.end_object();
  w.key("config_digest").value_string(report.config_digest);
  w.end_object();
  return w.str() + "\n";
}

ViewHook make_corruption_hook(const SyntheticDatasetSpec& spec,
                              uint64_t run_seed) {
  double rate = spec.corruption_rate;
  uint64_t hook_seed = mix_seed({run_seed, fnv1a64("corrupt")});
  return [rate, hook_seed](ViewSet& vs, int64_t epoch) {
    for (size_t i = 1; i <= vs.views.size(); ++i) {
      RandomStream rs(derive_seed(hook_seed, vs.image_key, epoch,
                                  static_cast<int64_t>(i)));
      if (rs.uniform() >= rate) continue;
      for (auto& b : vs.views[i - 1].pixels)
        b = static_cast<uint8_t>(rs.uniform_int(256));
    }
  };
}

}  // namespace augpt
