#include "augpt/gate.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "augpt/errors.hpp"

namespace augpt {

std::vector<int> top1_sequence(const std::vector<LogitVector>& logits) {
  if (logits.empty()) throw DataError("top1_sequence: empty logits list");
  size_t c = logits[0].values.size();
  std::vector<int> seq;
  seq.reserve(logits.size());
  for (const auto& lv : logits) {
    if (lv.values.size() != c)
      throw DataError("top1_sequence: inconsistent class counts");
    seq.push_back(argmax_index(lv.values));
  }
  return seq;
}

int consensus(const std::vector<int>& top1) {
  if (top1.empty()) throw DataError("consensus: empty sequence");
  std::map<int, int> counts;
  for (int t : top1) ++counts[t];
  int best = top1[0];
  int best_count = 0;
  for (const auto& [cls, count] : counts) {
    if (count > best_count) {  // map iterates ascending: ties keep lowest
      best = cls;
      best_count = count;
    }
  }
  return best;
}

GateResult gate_logits(const std::vector<LogitVector>& logits) {
  GateResult gr;
  gr.top1_seq = top1_sequence(logits);
  gr.consensus = consensus(gr.top1_seq);
  for (size_t j = 0; j < gr.top1_seq.size(); ++j) {
    if (gr.top1_seq[j] == gr.consensus) {
      gr.accepted_indices.push_back(static_cast<int>(j));
      gr.accepted_logits.push_back(logits[j]);
    }
  }
  gr.raw_discarded = gr.accepted_indices.empty() || gr.accepted_indices[0] != 0;
  return gr;
}

GateResult filter_views(const ViewSet& vs,
                        const std::vector<LogitVector>& logits) {
  if (logits.size() != vs.member_count())
    throw DataError("filter_views: logits not aligned with view set");
  return gate_logits(logits);
}

namespace {

// Ordered top-k class indices; ties inside a signature break ascending.
std::vector<int> topk_signature(const LogitVector& lv, int k) {
  std::vector<int> idx(lv.values.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (lv.values[a] != lv.values[b]) return lv.values[a] > lv.values[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

}  // namespace

GateResult gate_logits_topk(const std::vector<LogitVector>& logits, int k) {
  if (logits.empty()) throw DataError("gate: empty logits list");
  int c = static_cast<int>(logits[0].values.size());
  if (k < 1 || k > c)
    throw std::invalid_argument("top-k gate: k must lie in [1, c]");

  std::vector<std::vector<int>> sigs;
  sigs.reserve(logits.size());
  for (const auto& lv : logits) {
    if (static_cast<int>(lv.values.size()) != c)
      throw DataError("gate: inconsistent class counts");
    sigs.push_back(topk_signature(lv, k));
  }

  // map keyed by signature: iteration order is lexicographic, so frequency
  // ties resolve toward the smallest signature
  std::map<std::vector<int>, int> counts;
  for (const auto& s : sigs) ++counts[s];
  const std::vector<int>* best = nullptr;
  int best_count = 0;
  for (const auto& [sig, count] : counts) {
    if (count > best_count) {
      best = &sig;
      best_count = count;
    }
  }

  GateResult gr;
  gr.top1_seq.reserve(sigs.size());
  for (const auto& s : sigs) gr.top1_seq.push_back(s[0]);
  gr.consensus = (*best)[0];
  for (size_t j = 0; j < sigs.size(); ++j) {
    if (sigs[j] == *best) {
      gr.accepted_indices.push_back(static_cast<int>(j));
      gr.accepted_logits.push_back(logits[j]);
    }
  }
  gr.raw_discarded = gr.accepted_indices.empty() || gr.accepted_indices[0] != 0;
  return gr;
}

GateResult filter_views_topk(const ViewSet& vs,
                             const std::vector<LogitVector>& logits, int k) {
  if (logits.size() != vs.member_count())
    throw DataError("filter_views_topk: logits not aligned with view set");
  return gate_logits_topk(logits, k);
}

}  // namespace augpt
