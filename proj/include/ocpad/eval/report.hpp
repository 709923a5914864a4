#pragma once

#include <array>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "ocpad/eval/metrics.hpp"

namespace ocpad::eval {

/// BPCER targets reported alongside D-EER and pAUC.
inline constexpr std::array<double, 3> kReportBpcerTargets{0.002, 0.01, 0.05};

struct ReportOperatingPoint {
  OperatingPoint point;
  std::string worst_species;
  double worst_species_apcer = 0.0;
};

struct Report {
  std::size_t bonafide = 0;
  std::size_t attacks = 0;
  EqualErrorRate eer;
  double pauc20 = 0.0;
  std::vector<ReportOperatingPoint> operating_points;
  std::map<std::string, double> species_apcer_at_eer;
  DetCurve curve;
};

inline Report make_report(const ScoreSet& s) {
  s.validate();
  Report r;
  r.bonafide = s.scores(Label::bonafide).size();
  r.attacks = s.scores(Label::attack).size();
  r.curve = det_curve(s);
  r.eer = d_eer(r.curve);
  r.pauc20 = pauc20(r.curve);
  for (double target : kReportBpcerTargets) {
    ReportOperatingPoint op{apcer_at_bpcer(r.curve, target), "", 0.0};
    std::tie(op.worst_species, op.worst_species_apcer) = worst_species(s, op.point.threshold);
    r.operating_points.push_back(op);
  }
  r.species_apcer_at_eer = apcer_per_species(s, r.eer.threshold);
  return r;
}

inline nlohmann::ordered_json threshold_json(double t) {
  if (std::isfinite(t)) return t;
  return t > 0 ? "inf" : "-inf";
}

inline nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["bonafide"] = r.bonafide;
  j["attacks"] = r.attacks;
  j["d_eer"] = r.eer.eer;
  j["d_eer_threshold"] = threshold_json(r.eer.threshold);
  j["pauc20"] = r.pauc20;
  j["pauc20_percent"] = 100.0 * r.pauc20;
  auto ops = nlohmann::ordered_json::array();
  for (const auto& op : r.operating_points) {
    nlohmann::ordered_json o;
    o["target_bpcer"] = op.point.target_bpcer;
    o["threshold"] = threshold_json(op.point.threshold);
    o["apcer"] = op.point.apcer;
    o["bpcer"] = op.point.bpcer;
    o["worst_species"] = op.worst_species;
    o["worst_species_apcer"] = op.worst_species_apcer;
    ops.push_back(o);
  }
  j["apcer_at_bpcer"] = ops;
  j["species_apcer_at_d_eer"] = r.species_apcer_at_eer;
  return j;
}

}  // namespace ocpad::eval
