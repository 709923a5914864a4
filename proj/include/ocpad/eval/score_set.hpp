#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ocpad/dataset/sample_set.hpp"

namespace ocpad::eval {

struct ScoreRecord {
  std::string sample_id;
  Label label = Label::bonafide;
  std::string species{kBonafideSpecies};
  double score = 0.0;  ///< higher means more likely an attack

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

struct ScoreSet {
  std::vector<ScoreRecord> records;

  std::size_t size() const { return records.size(); }

  std::vector<double> scores(Label l) const {
    std::vector<double> out;
    for (const auto& r : records)
      if (r.label == l) out.push_back(r.score);
    return out;
  }

  /// Unique ids, finite scores, and at least one sample of each class.
  void validate() const {
    std::unordered_set<std::string> ids;
    bool bona = false, attack = false;
    for (const auto& r : records) {
      if (!ids.insert(r.sample_id).second) throw ContractError("duplicate sample id '" + r.sample_id + "' in scores");
      if (!std::isfinite(r.score)) throw NumericError("non-finite score for '" + r.sample_id + "'");
      (r.label == Label::bonafide ? bona : attack) = true;
    }
    if (!bona) throw ContractError("score set has no bona fide records");
    if (!attack) throw ContractError("score set has no attack records");
  }

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;
};

/// Pairs sample metadata with scores in the same order.
inline ScoreSet make_score_set(const std::vector<SampleInfo>& infos, const std::vector<double>& scores) {
  if (infos.size() != scores.size()) throw ContractError("score count does not match sample count");
  ScoreSet s;
  s.records.reserve(infos.size());
  for (std::size_t i = 0; i < infos.size(); ++i)
    s.records.push_back({infos[i].sample_id, infos[i].label, infos[i].species, scores[i]});
  return s;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw FormatError(where + ": '" + s + "' is not a number");
  return v;
}

inline void check_csv_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw ContractError(std::string(what) + " '" + s + "' cannot be written to CSV (contains a comma or newline)");
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace detail

inline void write_scores_csv(const ScoreSet& set, std::ostream& out) {
  out << "sample_id,label,species,score\n";
  for (const auto& r : set.records) {
    detail::check_csv_field(r.sample_id, "sample id");
    detail::check_csv_field(r.species, "species");
    out << r.sample_id << ',' << to_string(r.label) << ',' << r.species << ',' << detail::format_double(r.score) << '\n';
  }
}

inline void write_scores_csv(const ScoreSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_scores_csv(set, out);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline ScoreSet read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "sample_id,label,species,score")
    throw FormatError("'" + path.string() + "' lacks the header sample_id,label,species,score");
  ScoreSet s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 4) throw FormatError(where + ": expected 4 fields");
    s.records.push_back({f[0], parse_label(f[1]), f[2], detail::parse_double(f[3], where)});
  }
  return s;
}

}  // namespace ocpad::eval
