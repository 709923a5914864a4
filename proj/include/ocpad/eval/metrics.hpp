#pragma once

// Presentation attack detection error rates. The decision rule is fixed:
// a presentation is classified as an attack iff score >= threshold.
//
//   APCER(t) = |{attack: score < t}| / |attacks|
//   BPCER(t) = |{bona fide: score >= t}| / |bona fides|

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ocpad/eval/score_set.hpp"

namespace ocpad::eval {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_class(const ScoreSet& s) {
  bool bona = false, attack = false;
  for (const auto& r : s.records) (r.label == Label::bonafide ? bona : attack) = true;
  if (!bona) throw ContractError("error rates need at least one bona fide score");
  if (!attack) throw ContractError("error rates need at least one attack score");
}

}  // namespace detail

inline double apcer(const ScoreSet& s, double threshold) {
  detail::require_class(s);
  std::size_t missed = 0, total = 0;
  for (const auto& r : s.records) {
    if (r.label != Label::attack) continue;
    ++total;
    if (r.score < threshold) ++missed;
  }
  return static_cast<double>(missed) / static_cast<double>(total);
}

inline double bpcer(const ScoreSet& s, double threshold) {
  detail::require_class(s);
  std::size_t rejected = 0, total = 0;
  for (const auto& r : s.records) {
    if (r.label != Label::bonafide) continue;
    ++total;
    if (r.score >= threshold) ++rejected;
  }
  return static_cast<double>(rejected) / static_cast<double>(total);
}

/// APCER of each attack species at `threshold`.
inline std::map<std::string, double> apcer_per_species(const ScoreSet& s, double threshold) {
  detail::require_class(s);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // missed, total
  for (const auto& r : s.records) {
    if (r.label != Label::attack) continue;
    auto& c = counts[r.species];
    ++c.second;
    if (r.score < threshold) ++c.first;
  }
  std::map<std::string, double> out;
  for (const auto& [name, c] : counts) out[name] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

/// Species with the highest APCER (ties: lexicographically first).
inline std::pair<std::string, double> worst_species(const ScoreSet& s, double threshold) {
  std::pair<std::string, double> worst{"", -1.0};
  for (const auto& [name, v] : apcer_per_species(s, threshold))
    if (v > worst.second) worst = {name, v};
  return worst;
}

struct DetPoint {
  double threshold = 0.0;
  double apcer = 0.0;
  double bpcer = 0.0;

  friend bool operator==(const DetPoint&, const DetPoint&) = default;
};

/// Operating points ordered by increasing threshold: APCER nondecreasing,
/// BPCER nonincreasing, from (0,1) at -inf to (1,0) at +inf.
struct DetCurve {
  std::vector<DetPoint> points;
};

inline DetCurve det_curve(const ScoreSet& s) {
  detail::require_class(s);
  std::vector<double> att = s.scores(Label::attack), bona = s.scores(Label::bonafide);
  std::sort(att.begin(), att.end());
  std::sort(bona.begin(), bona.end());
  std::vector<double> thresholds;
  thresholds.reserve(att.size() + bona.size());
  std::merge(att.begin(), att.end(), bona.begin(), bona.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double na = static_cast<double>(att.size()), nb = static_cast<double>(bona.size());
  DetCurve c;
  auto push = [&](double t, std::size_t missed, std::size_t rejected) {
    DetPoint p{t, static_cast<double>(missed) / na, static_cast<double>(rejected) / nb};
    if (!c.points.empty() && c.points.back().apcer == p.apcer && c.points.back().bpcer == p.bpcer) return;
    c.points.push_back(p);
  };
  push(-kInf, 0, bona.size());
  std::size_t ia = 0, ib = 0;
  for (double t : thresholds) {
    while (ia < att.size() && att[ia] < t) ++ia;
    while (ib < bona.size() && bona[ib] < t) ++ib;
    push(t, ia, bona.size() - ib);
  }
  push(kInf, att.size(), 0);
  return c;
}

/// Area under BPCER over APCER in [0, limit], divided by limit. Points are
/// joined by straight segments; the curve always spans APCER in [0, 1].
inline double pauc(const DetCurve& c, double limit = 0.2) {
  double area = 0.0;
  const auto& p = c.points;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double a0 = p[k].apcer, a1 = p[k + 1].apcer;
    const double b0 = std::min(p[k].bpcer, 1.0), b1 = std::min(p[k + 1].bpcer, 1.0);
    if (a0 >= limit) break;
    if (a1 <= limit) {
      area += (a1 - a0) * (b0 + b1) / 2.0;
    } else {
      const double b_lim = b0 + (b1 - b0) * (limit - a0) / (a1 - a0);
      area += (limit - a0) * (b0 + b_lim) / 2.0;
      break;
    }
  }
  return area / limit;
}

inline double pauc20(const DetCurve& c) { return pauc(c, 0.2); }

struct EqualErrorRate {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Crossing of APCER and BPCER along the DET curve, linearly interpolated
/// between the two operating points that straddle it.
inline EqualErrorRate d_eer(const DetCurve& c) {
  const auto& p = c.points;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double diff = p[k].bpcer - p[k].apcer;
    if (diff == 0.0) return {p[k].apcer, p[k].threshold};
    if (diff < 0.0) {
      // k > 0 because the first point is (0, 1).
      const DetPoint& lo = p[k - 1];
      const double dlo = lo.bpcer - lo.apcer;
      const double t = dlo / (dlo - diff);
      const double eer = lo.apcer + t * (p[k].apcer - lo.apcer);
      double thr;
      if (!std::isfinite(lo.threshold))
        thr = p[k].threshold;
      else if (!std::isfinite(p[k].threshold))
        thr = lo.threshold;
      else
        thr = lo.threshold + t * (p[k].threshold - lo.threshold);
      return {eer, thr};
    }
  }
  return {0.0, kInf};  // unreachable: the last point is (1, 0)
}

inline EqualErrorRate d_eer(const ScoreSet& s) { return d_eer(det_curve(s)); }

struct OperatingPoint {
  double target_bpcer = 0.0;
  double threshold = 0.0;
  double apcer = 0.0;
  double bpcer = 0.0;
};

/// Smallest threshold whose BPCER does not exceed `target`, with its APCER.
inline OperatingPoint apcer_at_bpcer(const DetCurve& c, double target) {
  if (!(target >= 0.0 && target <= 1.0)) throw UsageError("target BPCER must lie in [0,1]");
  for (const auto& p : c.points)
    if (p.bpcer <= target) return {target, p.threshold, p.apcer, p.bpcer};
  return {target, kInf, 1.0, 0.0};  // unreachable: BPCER is 0 at +inf
}

inline OperatingPoint apcer_at_bpcer(const ScoreSet& s, double target) { return apcer_at_bpcer(det_curve(s), target); }

}  // namespace ocpad::eval
