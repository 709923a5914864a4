#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ocpad/core/rng.hpp"
#include "ocpad/eval/metrics.hpp"

using namespace ocpad;
using namespace ocpad::eval;

namespace {

ScoreSet make(const std::vector<double>& bona, const std::vector<double>& attack,
              const std::vector<std::string>& species = {}) {
  ScoreSet s;
  for (std::size_t i = 0; i < bona.size(); ++i) s.records.push_back({"b" + std::to_string(i), Label::bonafide, "bonafide", bona[i]});
  for (std::size_t i = 0; i < attack.size(); ++i)
    s.records.push_back({"a" + std::to_string(i), Label::attack, species.empty() ? "pai" : species[i], attack[i]});
  return s;
}

ScoreSet random_set(SplitMix64& rng, std::size_t nb, std::size_t na, double shift, bool ties) {
  std::vector<double> b(nb), a(na);
  auto draw = [&](double mu) {
    const double v = mu + rng.normal();
    return ties ? std::round(v * 4.0) / 4.0 : v;
  };
  for (double& v : b) v = draw(0.0);
  for (double& v : a) v = draw(shift);
  return make(b, a);
}

// Every distinct operating point obtained by sweeping each observed score and +-inf.
std::vector<DetPoint> brute_force_points(const ScoreSet& s) {
  std::set<double> t{-kInf, kInf};
  for (const auto& r : s.records) t.insert(r.score);
  std::vector<DetPoint> out;
  for (double th : t) out.push_back({th, apcer(s, th), bpcer(s, th)});
  return out;
}

}  // namespace

TEST(ErrorRates, FollowTheDecisionRule) {
  const auto s = make({0.1, 0.2, 0.3, 0.4}, {0.35, 0.5, 0.6, 0.7});
  EXPECT_DOUBLE_EQ(apcer(s, 0.5), 0.25);  // 0.35 is accepted as bona fide
  EXPECT_DOUBLE_EQ(bpcer(s, 0.3), 0.5);   // score == threshold is classified as an attack
  EXPECT_DOUBLE_EQ(apcer(s, -kInf), 0.0);
  EXPECT_DOUBLE_EQ(bpcer(s, kInf), 0.0);
  EXPECT_THROW(apcer(make({0.1}, {}), 0.0), ContractError);
  EXPECT_THROW(bpcer(make({}, {0.1}), 0.0), ContractError);
}

TEST(DetCurve, MatchesBruteForceSweep) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(rng, 1 + rng.below(30), 1 + rng.below(30), rng.uniform(-1.0, 3.0), trial % 2 == 0);
    const auto c = det_curve(s);
    ASSERT_GE(c.points.size(), 2u);
    EXPECT_EQ(c.points.front().apcer, 0.0);
    EXPECT_EQ(c.points.front().bpcer, 1.0);
    EXPECT_EQ(c.points.back().apcer, 1.0);
    EXPECT_EQ(c.points.back().bpcer, 0.0);
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      EXPECT_GE(c.points[k].apcer, c.points[k - 1].apcer);
      EXPECT_LE(c.points[k].bpcer, c.points[k - 1].bpcer);
      EXPECT_GT(c.points[k].threshold, c.points[k - 1].threshold);
    }
    // Each curve point is exactly what the definitions give at its threshold,
    // and every brute-force operating point appears on the curve.
    std::set<std::pair<double, double>> on_curve;
    for (const auto& p : c.points) {
      EXPECT_EQ(p.apcer, apcer(s, p.threshold));
      EXPECT_EQ(p.bpcer, bpcer(s, p.threshold));
      on_curve.insert({p.apcer, p.bpcer});
    }
    for (const auto& p : brute_force_points(s)) EXPECT_TRUE(on_curve.count({p.apcer, p.bpcer}));
  }
}

TEST(EqualErrorRate, HandExample) {
  const auto s = make({0.1, 0.2, 0.3, 0.4}, {0.35, 0.5, 0.6, 0.7});
  const auto e = d_eer(s);
  EXPECT_DOUBLE_EQ(e.eer, 0.25);
  EXPECT_DOUBLE_EQ(e.threshold, 0.4);
}

TEST(EqualErrorRate, InterpolatesBetweenStraddlingPoints) {
  // bona {0, 1}, attack {0.5}: (A,B) moves (0,1) -> (0,0.5) -> (1,0.5) -> (1,0).
  const auto e = d_eer(make({0.0, 1.0}, {0.5}));
  EXPECT_DOUBLE_EQ(e.eer, 0.5);
  const auto f = d_eer(make({0.0, 1.0, 2.0}, {1.5}));
  // (0,1/3) at t=1.5 then (1,1/3) at t=2: crossing a third of the way along
  EXPECT_NEAR(f.eer, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.threshold, 1.5 + 0.5 / 3.0, 1e-12);
}

TEST(EqualErrorRate, LiesInsideBruteForceBracket) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_set(rng, 1 + rng.below(40), 1 + rng.below(40), rng.uniform(-1.0, 3.0), trial % 3 == 0);
    const auto e = d_eer(s);
    const auto pts = brute_force_points(s);
    // The crossing is bounded by min over thresholds of max(A,B) and by max
    // over thresholds of min(A,B).
    double upper = 1.0, lower = 0.0;
    for (const auto& p : pts) {
      upper = std::min(upper, std::max(p.apcer, p.bpcer));
      lower = std::max(lower, std::min(p.apcer, p.bpcer));
    }
    EXPECT_LE(e.eer, upper + 1e-12);
    EXPECT_GE(e.eer, lower - 1e-12);
  }
}

TEST(EqualErrorRate, ExtremesOfSeparation) {
  EXPECT_DOUBLE_EQ(d_eer(make({0.1, 0.2}, {0.8, 0.9})).eer, 0.0);
  EXPECT_DOUBLE_EQ(d_eer(make({0.8, 0.9}, {0.1, 0.2})).eer, 1.0);
  EXPECT_DOUBLE_EQ(d_eer(make({0.5, 0.5}, {0.5})).eer, 0.5);  // all tied: no threshold separates anything
}

TEST(Pauc, ClosedFormCases) {
  EXPECT_DOUBLE_EQ(pauc20(det_curve(make({0.1, 0.2}, {0.8, 0.9}))), 0.0);
  EXPECT_DOUBLE_EQ(pauc20(det_curve(make({0.8, 0.9}, {0.1, 0.2}))), 1.0);
  // bona {0,1}, attack {0.5}: BPCER is 0.5 for APCER in (0,1]
  const auto c = det_curve(make({0.0, 1.0}, {0.5}));
  EXPECT_DOUBLE_EQ(pauc(c, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(pauc20(c), 0.5);
  // Straight descending segment from (0,1) to (1,0): mean BPCER over [0,0.2] is 0.9.
  DetCurve line{{{-kInf, 0.0, 1.0}, {kInf, 1.0, 0.0}}};
  EXPECT_NEAR(pauc20(line), 0.9, 1e-12);
}

TEST(Pauc, MatchesNumericIntegration) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = det_curve(random_set(rng, 5 + rng.below(20), 5 + rng.below(20), 1.0, false));
    // midpoint rule on the piecewise-linear curve, taking the lower envelope at vertical jumps
    const int steps = 200000;
    double sum = 0;
    for (int k = 0; k < steps; ++k) {
      const double a = 0.2 * (k + 0.5) / steps;
      double b = 1.0;
      for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const auto &p = c.points[i], &q = c.points[i + 1];
        if (a >= p.apcer && a <= q.apcer && q.apcer > p.apcer)
          b = std::min(b, p.bpcer + (q.bpcer - p.bpcer) * (a - p.apcer) / (q.apcer - p.apcer));
      }
      sum += b;
    }
    EXPECT_NEAR(pauc20(c), sum / steps, 1e-4);
  }
}

TEST(Metrics, InvariantUnderStrictlyIncreasingTransforms) {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng, 3 + rng.below(30), 3 + rng.below(30), 1.5, trial % 2 == 0);
    auto t = s;
    for (auto& r : t.records) r.score = std::exp(0.5 * r.score) * 3.0 + 1.0;
    const auto cs = det_curve(s), ct = det_curve(t);
    ASSERT_EQ(cs.points.size(), ct.points.size());
    for (std::size_t k = 0; k < cs.points.size(); ++k) {
      EXPECT_EQ(cs.points[k].apcer, ct.points[k].apcer);
      EXPECT_EQ(cs.points[k].bpcer, ct.points[k].bpcer);
    }
    EXPECT_NEAR(d_eer(cs).eer, d_eer(ct).eer, 1e-12);
    EXPECT_NEAR(pauc20(cs), pauc20(ct), 1e-12);
    EXPECT_EQ(apcer_at_bpcer(cs, 0.05).apcer, apcer_at_bpcer(ct, 0.05).apcer);
  }
}

TEST(OperatingPoint, IsSmallestThresholdMeetingTarget) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(rng, 1 + rng.below(50), 1 + rng.below(50), 2.0, trial % 2 == 1);
    for (double target : {0.0, 0.002, 0.01, 0.05, 0.3, 1.0}) {
      const auto op = apcer_at_bpcer(s, target);
      double best = kInf;
      for (const auto& p : brute_force_points(s))
        if (p.bpcer <= target) best = std::min(best, p.threshold);
      EXPECT_EQ(op.threshold, best);
      EXPECT_EQ(op.apcer, apcer(s, best));
      EXPECT_LE(op.bpcer, target);
    }
  }
  EXPECT_THROW(apcer_at_bpcer(make({0.0}, {1.0}), 1.5), UsageError);
}

TEST(SpeciesBreakdown, PerSpeciesApcerAndWorst) {
  const auto s = make({0.0, 0.1}, {0.2, 0.9, 0.3, 0.95}, {"x", "x", "y", "z"});
  const auto per = apcer_per_species(s, 0.5);
  EXPECT_DOUBLE_EQ(per.at("x"), 0.5);
  EXPECT_DOUBLE_EQ(per.at("y"), 1.0);
  EXPECT_DOUBLE_EQ(per.at("z"), 0.0);
  EXPECT_EQ(worst_species(s, 0.5).first, "y");
  EXPECT_EQ(worst_species(s, 0.0).first, "x");  // all zero: first name wins
}
