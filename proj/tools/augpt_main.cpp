#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "augpt/config.hpp"
#include "augpt/errors.hpp"
#include "augpt/gate.hpp"
#include "augpt/jsonio.hpp"
#include "augpt/pipeline.hpp"
#include "augpt/selftest.hpp"

namespace fs = std::filesystem;
using namespace augpt;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_set = false;
  uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "run config file");
  if (config_required) c->required();
  cmd->add_option("--set", opts.overrides,
                  "override a config key (key=value, repeatable)");
  cmd->add_option("--seed", opts.seed, "override the run seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--threads", opts.threads, "worker cap (1 = sequential)");
}

RunConfig load_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty()
                      ? RunConfig{}
                      : parse_config_file(opts.config_path);
  for (const auto& assignment : opts.overrides)
    apply_override(cfg, assignment);
  if (opts.seed_set) cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  cfg.validate();
  return cfg;
}

// All data lands in a tmp directory that is renamed over the target only
// after the writer succeeds; failed runs leave nothing behind.
void with_output_dir(const std::string& out,
                     const std::function<void(const fs::path&)>& writer) {
  fs::path target(out);
  if (fs::exists(target))
    throw ConfigError("output directory already exists: " + out);
  fs::path tmp = target;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    writer(tmp);
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  fs::rename(tmp, target);
}

int cmd_gen_data(const CommonOpts& opts, const std::string& out) {
  RunConfig cfg = load_config(opts);
  with_output_dir(out, [&](const fs::path& dir) {
    write_dataset(make_dataset(cfg.dataset, "train"), dir / "train");
    write_dataset(make_dataset(cfg.dataset, "test"), dir / "test");
    write_text_file(dir / "resolved.cfg", resolved_config_text(cfg));
  });
  return 0;
}

int cmd_fit_teacher(const CommonOpts& opts, const std::string& manifest,
                    const std::string& out) {
  RunConfig cfg = load_config(opts);
  auto items = load_dataset(manifest);
  int c = 0;
  for (const auto& item : items) {
    if (item.label < 0) throw DataError("fit-teacher needs labeled data");
    c = std::max(c, item.label + 1);
  }
  std::vector<std::pair<Raster, int>> pairs;
  for (const auto& item : items) pairs.emplace_back(item.image, item.label);
  std::vector<std::string> names;
  for (int i = 0; i < c; ++i) names.push_back("class_" + std::to_string(i));

  Encoder enc = make_encoder(cfg.encoder_kind, cfg.teacher_dim, cfg.dataset,
                             mix_seed({cfg.seed, fnv1a64("teacher-encoder")}));
  TeacherConfig tcfg = cfg.teacher;
  tcfg.seed = mix_seed({cfg.seed, fnv1a64("teacher")});
  auto fit = fit_teacher(pairs, enc, names, tcfg);

  with_output_dir(out, [&](const fs::path& dir) {
    fit.model.save(dir / "teacher.json");
    std::string trace;
    for (size_t i = 0; i < fit.loss_trace.size(); ++i) {
      JsonWriter w;
      w.begin_object();
      w.key("epoch").value_int(static_cast<int64_t>(i) - 1);
      w.key("mean_ce").value_double(fit.loss_trace[i]);
      w.end_object();
      trace += w.str() + "\n";
    }
    write_text_file(dir / "teacher_trace.jsonl", trace);
    write_text_file(dir / "resolved.cfg", resolved_config_text(cfg));
  });
  return 0;
}

int cmd_augment(const CommonOpts& opts, const std::string& manifest,
                const std::string& out, int epoch) {
  RunConfig cfg = load_config(opts);
  auto items = load_dataset(manifest);
  with_output_dir(out, [&](const fs::path& dir) {
    std::string prov;
    for (const auto& item : items) {
      ViewSet vs = build_view_set(item.image, cfg.distill.augment,
                                  item.image_key, epoch, cfg.seed);
      fs::path vdir = dir / "views" / item.image_key;
      fs::create_directories(vdir);
      for (size_t j = 0; j < vs.member_count(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "v%02zu.ppm", j);
        save_ppm(vs.member(j), vdir / name);
      }
      for (size_t v = 0; v < vs.provenance.size(); ++v) {
        JsonWriter w;
        w.begin_object();
        w.key("image_key").value_string(item.image_key);
        w.key("epoch").value_int(epoch);
        w.key("view_index").value_int(static_cast<int64_t>(v) + 1);
        w.key("steps").begin_array();
        for (const auto& step : vs.provenance[v]) {
          w.begin_object();
          w.key("op").value_string(step.op);
          w.key("a_raw").value_double(step.a_raw);
          w.key("amplitude").value_double(step.amplitude);
          w.key("aux_seed").value_uint(step.aux_seed);
          w.end_object();
        }
        w.end_array();
        w.end_object();
        prov += w.str() + "\n";
      }
    }
    write_text_file(dir / "provenance.jsonl", prov);
    write_text_file(dir / "resolved.cfg", resolved_config_text(cfg));
  });
  return 0;
}

int cmd_gate(const std::string& logits_path, const std::string& out, int k) {
  auto rows = ingest_logits(logits_path);
  // group by image_key in order of first appearance
  std::vector<std::string> order;
  std::map<std::string, std::vector<LogitVector>> groups;
  for (auto& row : rows) {
    if (!groups.count(row.image_key)) order.push_back(row.image_key);
    groups[row.image_key].push_back(std::move(row.logits));
  }
  std::string out_text;
  for (const auto& key : order) {
    auto& logits = groups[key];
    std::sort(logits.begin(), logits.end(),
              [](const LogitVector& a, const LogitVector& b) {
                return a.view_index < b.view_index;
              });
    for (size_t j = 0; j < logits.size(); ++j)
      if (logits[j].view_index != static_cast<int>(j))
        throw DataError("gate: view indices for '" + key +
                        "' are not contiguous from 0");
    GateResult gr = k == 1 ? gate_logits(logits) : gate_logits_topk(logits, k);
    JsonWriter w;
    w.begin_object();
    w.key("image_key").value_string(key);
    w.key("consensus").value_int(gr.consensus);
    w.key("top1_seq").begin_array();
    for (int t : gr.top1_seq) w.value_int(t);
    w.end_array();
    w.key("accepted_indices").begin_array();
    for (int idx : gr.accepted_indices) w.value_int(idx);
    w.end_array();
    w.key("raw_discarded").value_bool(gr.raw_discarded);
    w.end_object();
    out_text += w.str() + "\n";
  }
  if (out == "-") {
    std::cout << out_text;
  } else {
    write_text_file(out, out_text);
  }
  return 0;
}

int cmd_distill(const CommonOpts& opts, const std::string& teacher_path,
                const std::string& manifest, const std::string& out) {
  RunConfig cfg = load_config(opts);
  Encoder tenc = make_encoder(cfg.encoder_kind, cfg.teacher_dim, cfg.dataset,
                              mix_seed({cfg.seed, fnv1a64("teacher-encoder")}));
  TeacherModel teacher = TeacherModel::load(teacher_path, tenc);

  auto items = load_dataset(manifest);
  std::vector<std::pair<std::string, Raster>> pool;
  for (const auto& item : items)  // drops any label field on the floor
    pool.emplace_back(item.image_key, item.image);

  Encoder senc = make_encoder(cfg.encoder_kind, cfg.student_dim, cfg.dataset,
                              mix_seed({cfg.seed, fnv1a64("student-encoder")}));
  StudentModel student(senc, cfg.teacher_dim, cfg.proj_layers, cfg.distill.tau,
                       mix_seed({cfg.seed, fnv1a64("student")}));
  DistillConfig dcfg = cfg.distill;
  dcfg.seed = mix_seed({cfg.seed, fnv1a64("distill")});
  dcfg.threads = cfg.threads;
  ViewHook hook;
  if (cfg.dataset.corruption_rate > 0.0)
    hook = make_corruption_hook(cfg.dataset, cfg.seed);

  auto result = run_distillation(pool, teacher, std::move(student), dcfg, hook);

  with_output_dir(out, [&](const fs::path& dir) {
    result.student.save(dir / "student.json");
    write_train_log(result.log, dir / "train_log.jsonl");
    write_text_file(dir / "resolved.cfg", resolved_config_text(cfg));
  });
  return 0;
}

std::vector<int> rows_to_classes(const TeacherModel& teacher) {
  std::vector<int> map;
  for (const auto& name : teacher.class_emb().class_names) {
    size_t underscore = name.rfind('_');
    if (underscore == std::string::npos)
      throw DataError("teacher class name '" + name +
                      "' does not carry a class id");
    map.push_back(std::stoi(name.substr(underscore + 1)));
  }
  return map;
}

int cmd_eval(const CommonOpts& opts, const std::string& teacher_path,
             const std::string& student_path, const std::string& manifest,
             const std::string& out) {
  RunConfig cfg = load_config(opts);
  Encoder tenc = make_encoder(cfg.encoder_kind, cfg.teacher_dim, cfg.dataset,
                              mix_seed({cfg.seed, fnv1a64("teacher-encoder")}));
  TeacherModel teacher = TeacherModel::load(teacher_path, tenc);
  Encoder senc = make_encoder(cfg.encoder_kind, cfg.student_dim, cfg.dataset,
                              mix_seed({cfg.seed, fnv1a64("student-encoder")}));
  StudentModel student = StudentModel::load(student_path, senc);

  auto test = load_dataset(manifest);
  SplitPlan split = make_even_split(cfg.dataset.c, cfg.split_shots);
  EvalReport report = evaluate(student, teacher, test, split,
                               rows_to_classes(teacher), cfg.threads);
  report.config_digest = config_digest(cfg);

  if (out == "-") {
    std::cout << eval_report_json(report);
  } else {
    with_output_dir(out, [&](const fs::path& dir) {
      write_text_file(dir / "report.json", eval_report_json(report));
      write_text_file(dir / "resolved.cfg", resolved_config_text(cfg));
    });
  }
  return 0;
}

int cmd_base_to_new(const CommonOpts& opts, const std::string& out) {
  RunConfig cfg = load_config(opts);
  auto artifacts = run_base_to_new(cfg);
  with_output_dir(out,
                  [&](const fs::path& dir) { write_run_artifacts(artifacts, dir); });
  std::cerr << "base " << artifacts.report.base_acc << " new "
            << artifacts.report.new_acc << " hm " << artifacts.report.hm
            << "\n";
  return 0;
}

int cmd_cross_dataset(const CommonOpts& opts, const std::string& out) {
  RunConfig cfg = load_config(opts);
  auto artifacts = run_cross_dataset(cfg);
  with_output_dir(out,
                  [&](const fs::path& dir) { write_run_artifacts(artifacts, dir); });
  std::cerr << "base " << artifacts.report.base_acc << " new "
            << artifacts.report.new_acc << " hm " << artifacts.report.hm
            << "\n";
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& sweep,
               const std::string& grid_csv, const std::string& out) {
  RunConfig cfg = load_config(opts);
  std::vector<std::string> grid;
  std::string cur;
  for (char ch : grid_csv) {
    if (ch == ',') {
      grid.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) grid.push_back(cur);

  auto cells = run_ablation(cfg, sweep, grid);
  with_output_dir(out, [&](const fs::path& dir) {
    write_text_file(dir / "ablation.csv", ablation_csv(cells));
    std::string reports;
    for (const auto& cell : cells) {
      JsonWriter w;
      w.begin_object();
      w.key("sweep_value").value_string(cell.value);
      w.key("base").value_double(cell.report.base_acc);
      w.key("new").value_double(cell.report.new_acc);
      w.key("hm").value_double(cell.report.hm);
      w.key("config_digest").value_string(cell.report.config_digest);
      w.end_object();
      reports += w.str() + "\n";
    }
    write_text_file(dir / "cells.jsonl", reports);
    write_text_file(dir / "resolved.cfg", resolved_config_text(cfg));
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AugPT: consensus-gated augmentation distillation, desk scale"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_dir, manifest, teacher_path, student_path, logits_path;
  std::string sweep, grid;
  int epoch = 0;
  int topk = 1;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen, opts);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* fitt = app.add_subcommand("fit-teacher", "fit the frozen teacher");
  add_common(fitt, opts);
  fitt->add_option("--data", manifest, "labeled manifest.jsonl")->required();
  fitt->add_option("--out", out_dir, "output directory")->required();

  auto* aug = app.add_subcommand("augment", "build augmented view sets");
  add_common(aug, opts);
  aug->add_option("--manifest", manifest, "image manifest.jsonl")->required();
  aug->add_option("--epoch", epoch, "epoch index for stream derivation");
  aug->add_option("--out", out_dir, "output directory")->required();

  auto* gate = app.add_subcommand("gate", "consensus-filter a logits CSV");
  gate->add_option("--logits", logits_path, "logits CSV")->required();
  gate->add_option("--topk", topk, "consensus strictness (default 1)");
  gate->add_option("--out", out_dir, "output JSONL path ('-' for stdout)")
      ->required();

  auto* dist = app.add_subcommand("distill", "distill a student");
  add_common(dist, opts);
  dist->add_option("--teacher", teacher_path, "teacher.json")->required();
  dist->add_option("--manifest", manifest, "unlabeled manifest.jsonl")
      ->required();
  dist->add_option("--out", out_dir, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a student");
  add_common(ev, opts);
  ev->add_option("--teacher", teacher_path, "teacher.json")->required();
  ev->add_option("--student", student_path, "student.json")->required();
  ev->add_option("--test", manifest, "labeled test manifest.jsonl")
      ->required();
  ev->add_option("--out", out_dir, "output directory ('-' for stdout)")
      ->required();

  auto* b2n = app.add_subcommand("base-to-new", "full base-to-new run");
  add_common(b2n, opts);
  b2n->add_option("--out", out_dir, "output directory")->required();

  auto* cross = app.add_subcommand("cross-dataset", "cross-dataset transfer");
  add_common(cross, opts);
  cross->add_option("--out", out_dir, "output directory")->required();

  auto* abl = app.add_subcommand("ablate", "sweep one knob");
  add_common(abl, opts);
  abl->add_option("--sweep", sweep,
                  "n_views | steps | topk | proj_layers | strategy")
      ->required();
  abl->add_option("--grid", grid, "comma-separated values")->required();
  abl->add_option("--out", out_dir, "output directory")->required();

  auto* self = app.add_subcommand("selftest", "run the bundled invariants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opts, out_dir);
    if (fitt->parsed()) return cmd_fit_teacher(opts, manifest, out_dir);
    if (aug->parsed()) return cmd_augment(opts, manifest, out_dir, epoch);
    if (gate->parsed()) return cmd_gate(logits_path, out_dir, topk);
    if (dist->parsed())
      return cmd_distill(opts, teacher_path, manifest, out_dir);
    if (ev->parsed())
      return cmd_eval(opts, teacher_path, student_path, manifest, out_dir);
    if (b2n->parsed()) return cmd_base_to_new(opts, out_dir);
    if (cross->parsed()) return cmd_cross_dataset(opts, out_dir);
    if (abl->parsed()) return cmd_ablate(opts, sweep, grid, out_dir);
    if (self->parsed()) return run_selftest(std::cout) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
