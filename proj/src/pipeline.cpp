#include "augpt/pipeline.hpp"

#include <algorithm>

#include "augpt/errors.hpp"
#include "augpt/jsonio.hpp"
#include "augpt/rng.hpp"

namespace augpt {

Encoder make_encoder(const std::string& kind, int out_dim,
                     const SyntheticDatasetSpec& geometry, uint64_t seed) {
  switch (parse_encoder_kind(kind)) {
    case EncoderKind::kPatchMean:
      return Encoder::patch_mean(out_dim);
    case EncoderKind::kRandomProjection:
      return Encoder::random_projection(out_dim, geometry.width,
                                        geometry.height, seed);
    case EncoderKind::kExternal:
      return Encoder::external(out_dim);
  }
  throw ConfigError("unsupported encoder kind");
}

namespace {

// Few-shot per-class sampling; the sampler sees labels, the returned subset
// keeps them for the caller to strip or use.
std::vector<const DatasetItem*> sample_per_class(
    const std::vector<DatasetItem>& items, const std::vector<int>& classes,
    int shots, uint64_t seed, std::string_view tag) {
  std::vector<const DatasetItem*> picked;
  for (int cls : classes) {
    std::vector<const DatasetItem*> pool;
    for (const auto& item : items)
      if (item.label == cls) pool.push_back(&item);
    if (pool.empty())
      throw DataError("no images for class " + std::to_string(cls));
    if (shots <= 0 || shots >= static_cast<int>(pool.size())) {
      picked.insert(picked.end(), pool.begin(), pool.end());
      continue;
    }
    auto order = shuffled_indices(
        pool.size(), derive_seed(seed, tag, 0, cls));
    for (int i = 0; i < shots; ++i) picked.push_back(pool[order[i]]);
  }
  return picked;
}

// Surrogate zero-shot row for a class the teacher never saw: mean encoder
// feature over a handful of generator renderings (seeded purely by the
// class generator, never the run seed) plus the fitted visual bias.
std::vector<double> motif_row(const SyntheticDatasetSpec& spec, int cls,
                              const Encoder& encoder,
                              const std::vector<double>& visual_bias) {
  constexpr int kRenderings = 8;
  std::vector<double> feat(encoder.out_dim(), 0.0);
  for (int r = 0; r < kRenderings; ++r) {
    uint64_t seed = mix_seed({spec.class_generator_seed, fnv1a64("zeroshot"),
                              static_cast<uint64_t>(cls),
                              static_cast<uint64_t>(r)});
    auto f = encoder.encode(synth_image(spec, cls, seed));
    for (size_t k = 0; k < feat.size(); ++k) feat[k] += f[k];
  }
  for (size_t k = 0; k < feat.size(); ++k)
    feat[k] = feat[k] / kRenderings + visual_bias[k];
  return feat;
}

struct DistillInputs {
  std::vector<std::pair<std::string, Raster>> pool;  // labels stripped
};

DistillInputs build_unlabeled_pool(const std::vector<DatasetItem>& train,
                                   const SplitPlan& split, int shots,
                                   uint64_t seed) {
  std::vector<int> all_classes = split.base_classes;
  all_classes.insert(all_classes.end(), split.new_classes.begin(),
                     split.new_classes.end());
  auto picked =
      sample_per_class(train, all_classes, shots, seed, "unlabeled-shots");
  std::sort(picked.begin(), picked.end(),
            [](const DatasetItem* a, const DatasetItem* b) {
              return a->image_key < b->image_key;
            });
  DistillInputs inputs;
  inputs.pool.reserve(picked.size());
  for (const auto* item : picked)
    inputs.pool.emplace_back(item->image_key, item->image);
  return inputs;
}

RunArtifacts finish_run(const RunConfig& cfg, TeacherModel teacher,
                        std::vector<double> teacher_trace,
                        const std::vector<int>& row_to_class,
                        const std::vector<DatasetItem>& test,
                        const SplitPlan& split,
                        const DistillInputs& inputs) {
  Encoder student_encoder = make_encoder(cfg.encoder_kind, cfg.student_dim,
                                         cfg.dataset,
                                         mix_seed({cfg.seed, fnv1a64("student-encoder")}));
  StudentModel student(student_encoder, cfg.teacher_dim, cfg.proj_layers,
                       cfg.distill.tau, mix_seed({cfg.seed, fnv1a64("student")}));

  DistillConfig dcfg = cfg.distill;
  dcfg.seed = mix_seed({cfg.seed, fnv1a64("distill")});
  dcfg.threads = cfg.threads;

  ViewHook hook;
  if (cfg.dataset.corruption_rate > 0.0)
    hook = make_corruption_hook(cfg.dataset, cfg.seed);

  auto result =
      run_distillation(inputs.pool, teacher, std::move(student), dcfg, hook);

  EvalReport report = evaluate(result.student, teacher, test, split,
                               row_to_class, cfg.threads);
  report.config_digest = config_digest(cfg);

  RunArtifacts artifacts{std::move(teacher),
                         std::move(result.student),
                         std::move(teacher_trace),
                         std::move(result.log),
                         std::move(report),
                         row_to_class,
                         resolved_config_text(cfg)};
  return artifacts;
}

}  // namespace

RunArtifacts run_base_to_new(const RunConfig& cfg) {
  cfg.validate();
  auto train = make_dataset(cfg.dataset, "train");
  auto test = make_dataset(cfg.dataset, "test");
  SplitPlan split = make_even_split(cfg.dataset.c, cfg.split_shots);

  Encoder teacher_encoder = make_encoder(cfg.encoder_kind, cfg.teacher_dim,
                                         cfg.dataset,
                                         mix_seed({cfg.seed, fnv1a64("teacher-encoder")}));

  // labeled few-shot pairs from base classes, base-local label indexing
  auto labeled = sample_per_class(train, split.base_classes, cfg.teacher_shots,
                                  cfg.seed, "teacher-shots");
  std::vector<std::pair<Raster, int>> pairs;
  pairs.reserve(labeled.size());
  std::vector<std::string> base_names;
  for (size_t bi = 0; bi < split.base_classes.size(); ++bi)
    base_names.push_back("class_" + std::to_string(split.base_classes[bi]));
  for (const auto* item : labeled) {
    auto it = std::find(split.base_classes.begin(), split.base_classes.end(),
                        item->label);
    pairs.emplace_back(item->image,
                       static_cast<int>(it - split.base_classes.begin()));
  }

  TeacherConfig tcfg = cfg.teacher;
  tcfg.seed = mix_seed({cfg.seed, fnv1a64("teacher")});
  auto fit = fit_teacher(pairs, teacher_encoder, base_names, tcfg);

  // candidate set extension: surrogate rows for the held-out classes
  std::vector<std::vector<double>> new_rows;
  std::vector<std::string> new_names;
  for (int cls : split.new_classes) {
    new_rows.push_back(motif_row(cfg.dataset, cls, fit.model.encoder(),
                                 fit.model.visual_bias()));
    new_names.push_back("class_" + std::to_string(cls));
  }
  TeacherModel teacher = fit.model.extend_classes(new_rows, new_names);

  std::vector<int> row_to_class = split.base_classes;
  row_to_class.insert(row_to_class.end(), split.new_classes.begin(),
                      split.new_classes.end());

  auto inputs = build_unlabeled_pool(train, split, cfg.split_shots, cfg.seed);
  return finish_run(cfg, std::move(teacher), std::move(fit.loss_trace),
                    row_to_class, test, split, inputs);
}

RunArtifacts run_cross_dataset(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.has_source)
    throw ConfigError("cross-dataset run needs source.* keys");

  auto src_train = make_dataset(cfg.source, "train");
  auto tgt_train = make_dataset(cfg.dataset, "train");
  auto tgt_test = make_dataset(cfg.dataset, "test");
  SplitPlan split = make_even_split(cfg.dataset.c, cfg.split_shots);

  if (cfg.source.width != cfg.dataset.width ||
      cfg.source.height != cfg.dataset.height)
    throw ConfigError("cross-dataset: source/target image sizes must match");

  Encoder teacher_encoder = make_encoder(cfg.encoder_kind, cfg.teacher_dim,
                                         cfg.source,
                                         mix_seed({cfg.seed, fnv1a64("teacher-encoder")}));

  // teacher sees every source class
  std::vector<int> src_classes(cfg.source.c);
  for (int i = 0; i < cfg.source.c; ++i) src_classes[i] = i;
  auto labeled = sample_per_class(src_train, src_classes, cfg.teacher_shots,
                                  cfg.seed, "teacher-shots");
  std::vector<std::pair<Raster, int>> pairs;
  for (const auto* item : labeled) pairs.emplace_back(item->image, item->label);
  std::vector<std::string> src_names;
  for (int i = 0; i < cfg.source.c; ++i)
    src_names.push_back("src_class_" + std::to_string(i));

  TeacherConfig tcfg = cfg.teacher;
  tcfg.seed = mix_seed({cfg.seed, fnv1a64("teacher")});
  auto fit = fit_teacher(pairs, teacher_encoder, src_names, tcfg);

  // candidate set rebuilt for the target label space: every target class is
  // unseen, so all rows come from the target motif generator
  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  std::vector<int> row_to_class;
  for (int cls = 0; cls < cfg.dataset.c; ++cls) {
    rows.push_back(motif_row(cfg.dataset, cls, fit.model.encoder(),
                             fit.model.visual_bias()));
    names.push_back("class_" + std::to_string(cls));
    row_to_class.push_back(cls);
  }
  TeacherModel teacher(fit.model.encoder(), make_class_embeddings(rows, names),
                       fit.model.visual_bias(), fit.model.tau());
  teacher.seed = tcfg.seed;

  auto inputs =
      build_unlabeled_pool(tgt_train, split, cfg.split_shots, cfg.seed);
  return finish_run(cfg, std::move(teacher), std::move(fit.loss_trace),
                    row_to_class, tgt_test, split, inputs);
}

std::vector<AblationCell> run_ablation(const RunConfig& base,
                                       const std::string& sweep,
                                       const std::vector<std::string>& grid) {
  if (grid.empty()) throw std::invalid_argument("ablation grid is empty");

  std::vector<AblationCell> cells;
  for (const auto& value : grid) {
    RunConfig cfg = base;
    if (sweep == "n_views") {
      cfg.distill.augment.n_views = std::stoi(value);
    } else if (sweep == "steps") {
      cfg.distill.augment.steps = std::stoi(value);
    } else if (sweep == "topk") {
      cfg.distill.top_k = std::stoi(value);
    } else if (sweep == "proj_layers") {
      cfg.proj_layers = std::stoi(value);
    } else if (sweep == "strategy") {
      cfg.distill.augment.strategy = parse_strategy(value);
      // keep mode/fixed_a consistent with the strategy being swept in
      if (cfg.distill.augment.strategy == Strategy::kRandaugmentFixed) {
        cfg.distill.augment.amplitude_mode = AmplitudeMode::kFixed30;
        if (cfg.distill.augment.fixed_a < 0.0)
          cfg.distill.augment.fixed_a = 15.0;
      } else {
        cfg.distill.augment.amplitude_mode = AmplitudeMode::kDynamicUniform;
        cfg.distill.augment.fixed_a = -1.0;
      }
    } else {
      throw std::invalid_argument("unknown ablation sweep '" + sweep + "'");
    }
    cells.push_back({value, run_base_to_new(cfg).report});
  }
  return cells;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
  std::string out = "sweep_value,base,new,hm\n";
  for (const auto& cell : cells) {
    out += cell.value + "," + fmt_double(cell.report.base_acc) + "," +
           fmt_double(cell.report.new_acc) + "," + fmt_double(cell.report.hm) +
           "\n";
  }
  return out;
}

void write_run_artifacts(const RunArtifacts& artifacts,
                         const std::filesystem::path& dir) {
  write_text_file(dir / "resolved.cfg", artifacts.resolved_config);
  artifacts.teacher.save(dir / "teacher.json");
  artifacts.student.save(dir / "student.json");

  std::string trace;
  for (size_t i = 0; i < artifacts.teacher_loss_trace.size(); ++i) {
    JsonWriter w;
    w.begin_object();
    w.key("epoch").value_int(static_cast<int64_t>(i) - 1);
    w.key("mean_ce").value_double(artifacts.teacher_loss_trace[i]);
    w.end_object();
    trace += w.str();
    trace += "\n";
  }
  write_text_file(dir / "teacher_trace.jsonl", trace);

  write_train_log(artifacts.distill_log, dir / "train_log.jsonl");
  write_text_file(dir / "report.json", eval_report_json(artifacts.report));
}

}  // namespace augpt
