#pragma once

#include <vector>

#include "augpt/augment.hpp"
#include "augpt/scoring.hpp"

namespace augpt {

// Outcome of consensus filtering over one view set. accepted_indices is
// sorted ascending, index 0 meaning the raw image; accepted_logits align
// one-to-one with accepted_indices.
struct GateResult {
  int consensus = -1;
  std::vector<int> top1_seq;
  std::vector<int> accepted_indices;
  std::vector<LogitVector> accepted_logits;
  bool raw_discarded = false;
};

// Per-view argmax class indices; ties break toward the lowest class index.
std::vector<int> top1_sequence(const std::vector<LogitVector>& logits);

// Mode of the top-1 sequence; frequency ties break toward the lowest class.
int consensus(const std::vector<int>& top1);

// Core top-1 gate over an aligned list of per-view logits (member 0 = raw).
GateResult gate_logits(const std::vector<LogitVector>& logits);

// Same, validated against the view set it belongs to.
GateResult filter_views(const ViewSet& vs,
                        const std::vector<LogitVector>& logits);

// Stricter variant: a view's signature is its ordered top-k class sequence
// (value descending, index ascending on ties); views whose signature equals
// the modal signature are accepted. Signature-frequency ties break toward
// the lexicographically smallest signature. consensus = first element of the
// winning signature.
GateResult gate_logits_topk(const std::vector<LogitVector>& logits, int k);
GateResult filter_views_topk(const ViewSet& vs,
                             const std::vector<LogitVector>& logits, int k);

}  // namespace augpt
