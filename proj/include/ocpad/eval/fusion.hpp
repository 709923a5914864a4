#pragma once

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "ocpad/eval/score_set.hpp"

namespace ocpad::eval {

/// Min-max range of a reference score set.
struct NormStats {
  double min = 0.0;
  double max = 1.0;

  bool degenerate() const { return !(max > min); }
};

inline NormStats norm_stats(const ScoreSet& reference) {
  if (reference.records.empty()) throw ContractError("normalization reference has no scores");
  NormStats s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& r : reference.records) {
    s.min = std::min(s.min, r.score);
    s.max = std::max(s.max, r.score);
  }
  return s;
}

/// Maps into [0,1] with clamping; a degenerate range maps everything to 0.5.
inline double normalize(double score, const NormStats& s) {
  if (s.degenerate()) return 0.5;
  return std::clamp((score - s.min) / (s.max - s.min), 0.0, 1.0);
}

struct FusionResult {
  ScoreSet scores;
  bool degenerate_a = false;
  bool degenerate_b = false;
};

/// Weighted score-level fusion w*a + (1-w)*b of normalized scores. Records
/// are matched by sample id and emitted in the order of `a`.
inline FusionResult fuse(const ScoreSet& a, const ScoreSet& b, double w, const NormStats& stats_a,
                         const NormStats& stats_b) {
  if (!(w >= 0.0 && w <= 1.0)) throw UsageError("fusion weight must lie in [0,1]");
  if (a.size() != b.size()) throw ContractError("fusion inputs cover different sample sets");
  std::unordered_map<std::string, const ScoreRecord*> by_id;
  for (const auto& r : b.records)
    if (!by_id.emplace(r.sample_id, &r).second) throw ContractError("duplicate sample id '" + r.sample_id + "'");
  FusionResult out;
  out.degenerate_a = stats_a.degenerate();
  out.degenerate_b = stats_b.degenerate();
  out.scores.records.reserve(a.size());
  for (const auto& ra : a.records) {
    auto it = by_id.find(ra.sample_id);
    if (it == by_id.end()) throw ContractError("sample '" + ra.sample_id + "' is missing from the second score set");
    const ScoreRecord& rb = *it->second;
    if (rb.label != ra.label || rb.species != ra.species)
      throw ContractError("sample '" + ra.sample_id + "' carries different labels in the two score sets");
    ScoreRecord r = ra;
    r.score = w * normalize(ra.score, stats_a) + (1.0 - w) * normalize(rb.score, stats_b);
    out.scores.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace ocpad::eval
