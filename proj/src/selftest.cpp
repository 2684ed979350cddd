#include "augpt/selftest.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "augpt/distill.hpp"
#include "augpt/gate.hpp"
#include "augpt/harness.hpp"
#include "augpt/policies.hpp"
#include "augpt/rng.hpp"
#include "augpt/teacher.hpp"

namespace augpt {

namespace {

Raster random_image(RandomStream& rs, int w, int h) {
  Raster img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (auto& b : img.pixels) b = static_cast<uint8_t>(rs.uniform_int(256));
  return img;
}

bool check_identities(std::string& detail) {
  RandomStream rs(101);
  struct Case {
    const char* name;
    double strength;
  };
  const Case cases[] = {
      {"Rotate", 0.0},     {"ShearX", 0.0},     {"ShearY", 0.0},
      {"TranslateX", 0.0}, {"TranslateY", 0.0}, {"Cutout", 0.0},
      {"Posterize", 8.0},  {"Solarize", 256.0}, {"SolarizeAdd", 0.0},
      {"Color", 1.0},      {"Contrast", 1.0},   {"Brightness", 1.0},
      {"Sharpness", 1.0},
  };
  for (int trial = 0; trial < 20; ++trial) {
    Raster img = random_image(rs, 16, 12);
    for (const auto& c : cases) {
      RandomStream aux(rs.next_u64());
      if (apply_policy(img, find_policy(c.name), c.strength, aux) != img) {
        detail = std::string(c.name) + " identity broke";
        return false;
      }
    }
    RandomStream aux(1);
    const auto& inv = find_policy("Invert");
    if (apply_policy(apply_policy(img, inv, 0.0, aux), inv, 0.0, aux) != img) {
      detail = "Invert involution broke";
      return false;
    }
    const auto& ac = find_policy("AutoContrast");
    Raster once = apply_policy(img, ac, 0.0, aux);
    if (apply_policy(once, ac, 0.0, aux) != once) {
      detail = "AutoContrast idempotence broke";
      return false;
    }
    if (horizontal_flip(horizontal_flip(img)) != img) {
      detail = "flip involution broke";
      return false;
    }
  }
  return true;
}

bool check_amplitude(std::string& detail) {
  auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  if (!close(convert_amplitude(find_policy("Color"), 15.0,
                               AmplitudeMode::kFixed30),
             1.0) ||
      !close(convert_amplitude(find_policy("Rotate"), 30.0,
                               AmplitudeMode::kDynamicUniform),
             30.0) ||
      !close(convert_amplitude(find_policy("Rotate"), 0.0,
                               AmplitudeMode::kDynamicUniform),
             0.0)) {
    detail = "conversion formula mismatch";
    return false;
  }
  return true;
}

// independent mode-counting oracle
bool gate_oracle_matches(const std::vector<LogitVector>& logits) {
  std::vector<int> top1;
  for (const auto& lv : logits) {
    int best = 0;
    for (size_t i = 1; i < lv.values.size(); ++i)
      if (lv.values[i] > lv.values[best]) best = static_cast<int>(i);
    top1.push_back(best);
  }
  std::map<int, int> freq;
  for (int t : top1) ++freq[t];
  int mode = -1, best_count = -1;
  for (auto& [cls, count] : freq)
    if (count > best_count) {
      mode = cls;
      best_count = count;
    }
  std::vector<int> expected;
  for (size_t j = 0; j < top1.size(); ++j)
    if (top1[j] == mode) expected.push_back(static_cast<int>(j));

  auto gr = gate_logits(logits);
  if (gr.consensus != mode || gr.accepted_indices != expected) return false;
  for (int j : gr.accepted_indices)
    if (gr.top1_seq[j] != gr.consensus) return false;
  return !gr.accepted_indices.empty();
}

bool check_gate(std::string& detail) {
  RandomStream rs(202);
  for (int trial = 0; trial < 200; ++trial) {
    int n = static_cast<int>(rs.uniform_int(9));
    int c = 2 + static_cast<int>(rs.uniform_int(19));
    std::vector<LogitVector> logits(n + 1);
    for (auto& lv : logits) {
      lv.values.resize(c);
      for (auto& v : lv.values)
        v = rs.coin() ? rs.uniform(-1.0, 1.0)
                      : std::floor(rs.uniform(-2.0, 3.0)) * 0.5;  // force ties
    }
    if (!gate_oracle_matches(logits)) {
      detail = "trial " + std::to_string(trial);
      return false;
    }
  }
  return true;
}

bool check_softmax(std::string& detail) {
  std::vector<double> uniform(7, 0.42);
  for (double p : softmax_prob(uniform, 1.0))
    if (p != 1.0 / 7.0) {
      detail = "uniform logits not exactly 1/c";
      return false;
    }
  RandomStream rs(303);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> l(5);
    for (auto& v : l) v = rs.uniform(-2.0, 2.0);
    double tau = rs.uniform(0.05, 5.0);
    if (argmax_index(softmax_prob(l, tau)) != argmax_index(l)) {
      detail = "temperature changed the argmax";
      return false;
    }
  }
  return true;
}

bool check_kl(std::string& detail) {
  RandomStream rs(404);
  for (int trial = 0; trial < 100; ++trial) {
    LogitVector a, b;
    a.values.resize(6);
    b.values.resize(6);
    for (auto& v : a.values) v = rs.uniform(-3.0, 3.0);
    for (auto& v : b.values) v = rs.uniform(-3.0, 3.0);
    if (kl_loss({a}, {a}, 1.0) != 0.0) {
      detail = "KL(p,p) != 0";
      return false;
    }
    if (kl_loss({a}, {b}, 1.0) < 0.0) {
      detail = "negative KL";
      return false;
    }
  }
  return true;
}

bool check_gradients(std::string& detail) {
  RandomStream rs(505);
  int c = 4, d = 6;
  std::vector<std::vector<double>> rows(c, std::vector<double>(d));
  for (auto& r : rows)
    for (auto& v : r) v = rs.uniform(-1.0, 1.0);
  std::vector<std::string> names;
  for (int i = 0; i < c; ++i) names.push_back("k" + std::to_string(i));
  auto emb = make_class_embeddings(rows, names);
  std::vector<double> vb(d);
  for (auto& v : vb) v = 0.1 * rs.gaussian();
  std::vector<std::pair<std::vector<double>, int>> feats;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> f(d);
    for (auto& v : f) v = rs.uniform(0.1, 1.0);
    feats.emplace_back(f, static_cast<int>(rs.uniform_int(c)));
  }
  auto g = teacher_ce_gradients(feats, emb, vb, 1.0);
  const double eps = 1e-5;
  for (int k = 0; k < d; ++k) {
    auto vb_p = vb, vb_m = vb;
    vb_p[k] += eps;
    vb_m[k] -= eps;
    double fd = (teacher_ce_gradients(feats, emb, vb_p, 1.0).loss -
                 teacher_ce_gradients(feats, emb, vb_m, 1.0).loss) /
                (2 * eps);
    double an = g.d_visual_bias[k];
    if (std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}) >
        1e-4) {
      detail = "teacher CE gradient mismatch";
      return false;
    }
  }

  Encoder enc = Encoder::patch_mean(6);
  StudentModel s(enc, d, 2, 1.0, 99);
  RandomStream imgrs(606);
  Raster img = random_image(imgrs, 12, 12);
  LogitVector target;
  target.values.resize(c);
  for (auto& v : target.values) v = imgrs.uniform(-1.0, 1.0);
  std::vector<const Raster*> views{&img};
  std::vector<const LogitVector*> targets{&target};
  auto sg = student_kl_gradients(s, emb, views, targets, 1.0, 1);
  for (size_t i = 0; i < s.parameter_count(); i += 7) {
    double saved = s.get_parameter(i);
    s.set_parameter(i, saved + eps);
    double lp = student_kl_gradients(s, emb, views, targets, 1.0, 1).loss;
    s.set_parameter(i, saved - eps);
    double lm = student_kl_gradients(s, emb, views, targets, 1.0, 1).loss;
    s.set_parameter(i, saved);
    double fd = (lp - lm) / (2 * eps);
    double an = sg.flat[i];
    if (std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}) >
        1e-4) {
      detail = "student KL gradient mismatch at param " + std::to_string(i);
      return false;
    }
  }
  return true;
}

bool check_determinism(std::string& detail) {
  SyntheticDatasetSpec spec;
  spec.c = 4;
  spec.per_class = 2;
  spec.width = 16;
  spec.height = 16;
  auto items = make_dataset(spec, "selftest");
  AugmentConfig acfg;
  acfg.n_views = 3;
  auto a = build_view_set(items[0].image, acfg, items[0].image_key, 2, 42);
  auto b = build_view_set(items[0].image, acfg, items[0].image_key, 2, 42);
  for (size_t j = 0; j < a.member_count(); ++j)
    if (a.member(j) != b.member(j)) {
      detail = "view set replay diverged";
      return false;
    }
  auto c2 = build_view_set(items[0].image, acfg, items[0].image_key, 3, 42);
  bool all_same = true;
  for (size_t j = 1; j < a.member_count(); ++j)
    if (a.member(j) != c2.member(j)) all_same = false;
  if (all_same) {
    detail = "epoch change did not refresh views";
    return false;
  }
  return true;
}

}  // namespace

int run_selftest(std::ostream& out) {
  struct Check {
    const char* name;
    bool (*fn)(std::string&);
  };
  const Check checks[] = {
      {"transform identities/involutions", check_identities},
      {"amplitude conversion", check_amplitude},
      {"consensus gate vs oracle", check_gate},
      {"softmax invariants", check_softmax},
      {"kl properties", check_kl},
      {"gradient checks", check_gradients},
      {"determinism contracts", check_determinism},
  };
  int failures = 0;
  for (const auto& check : checks) {
    std::string detail;
    bool ok = false;
    try {
      ok = check.fn(detail);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    out << (ok ? "[PASS] " : "[FAIL] ") << check.name;
    if (!ok && !detail.empty()) out << " (" << detail << ")";
    out << "\n";
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace augpt
