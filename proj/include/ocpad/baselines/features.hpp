#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ocpad/eval/score_set.hpp"

namespace ocpad::baselines {

struct FeatureRecord {
  std::string sample_id;
  Label label = Label::bonafide;
  std::string species{kBonafideSpecies};
  std::vector<double> values;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// Fixed-width feature vectors with sample metadata, e.g. autoencoder latents
/// or features computed by an external network.
struct FeatureSet {
  std::size_t dim = 0;
  std::vector<FeatureRecord> records;

  std::size_t size() const { return records.size(); }

  std::vector<std::vector<double>> matrix() const {
    std::vector<std::vector<double>> m;
    m.reserve(records.size());
    for (const auto& r : records) m.push_back(r.values);
    return m;
  }

  void add(FeatureRecord r) {
    if (records.empty() && dim == 0) dim = r.values.size();
    if (r.values.size() != dim)
      throw ContractError("feature vector of '" + r.sample_id + "' has width " + std::to_string(r.values.size()) +
                          ", expected " + std::to_string(dim));
    records.push_back(std::move(r));
  }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

inline void write_features_csv(const FeatureSet& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "sample_id,label,species";
  for (std::size_t k = 0; k < f.dim; ++k) out << ",f" << k;
  out << '\n';
  for (const auto& r : f.records) {
    eval::detail::check_csv_field(r.sample_id, "sample id");
    eval::detail::check_csv_field(r.species, "species");
    out << r.sample_id << ',' << to_string(r.label) << ',' << r.species;
    for (double v : r.values) out << ',' << eval::detail::format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline FeatureSet read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path.string() + "' is empty");
  const auto header = eval::detail::split_csv_line(eval::detail::strip_cr(line));
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "label" || header[2] != "species")
    throw FormatError("'" + path.string() + "' lacks the header sample_id,label,species,f0..");
  for (std::size_t k = 3; k < header.size(); ++k)
    if (header[k] != "f" + std::to_string(k - 3))
      throw FormatError("'" + path.string() + "': feature column " + std::to_string(k - 3) + " is named '" +
                        header[k] + "'");
  FeatureSet f;
  f.dim = header.size() - 3;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = eval::detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = eval::detail::split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) throw FormatError(where + ": expected " + std::to_string(header.size()) + " fields");
    FeatureRecord r{fields[0], parse_label(fields[1]), fields[2], {}};
    r.values.reserve(f.dim);
    for (std::size_t k = 3; k < fields.size(); ++k) {
      r.values.push_back(eval::detail::parse_double(fields[k], where));
      if (!std::isfinite(r.values.back())) throw FormatError(where + ": non-finite feature value");
    }
    f.add(std::move(r));
  }
  return f;
}

/// Per-dimension zero mean, unit variance using training statistics.
/// Constant dimensions keep unit scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const std::vector<std::vector<double>>& x) {
    if (x.empty()) throw ContractError("cannot standardize an empty feature set");
    const std::size_t d = x.front().size();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& row : x)
      for (std::size_t k = 0; k < d; ++k) s.mean[k] += row[k];
    for (double& m : s.mean) m /= static_cast<double>(x.size());
    for (const auto& row : x)
      for (std::size_t k = 0; k < d; ++k) s.scale[k] += (row[k] - s.mean[k]) * (row[k] - s.mean[k]);
    for (double& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(x.size()));
      if (!(v > 1e-12)) v = 1.0;
    }
    return s;
  }

  std::vector<double> apply(std::vector<double> row) const {
    if (row.size() != mean.size()) throw ContractError("feature width does not match the standardizer");
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = (row[k] - mean[k]) / scale[k];
    return row;
  }

  std::vector<std::vector<double>> apply(const std::vector<std::vector<double>>& x) const {
    std::vector<std::vector<double>> out;
    out.reserve(x.size());
    for (const auto& r : x) out.push_back(apply(r));
    return out;
  }
};

}  // namespace ocpad::baselines
