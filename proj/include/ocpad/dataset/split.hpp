#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ocpad/core/rng.hpp"
#include "ocpad/dataset/sample_set.hpp"

namespace ocpad::dataset {

struct Split {
  SampleSet train;
  SampleSet validation;
  SampleSet test;
};

struct SplitFractions {
  double train = 0.3;
  double validation = 0.2;
  double test = 0.5;
};

struct SubjectAssignment {
  std::vector<std::string> train, validation, test;
};

/// Subject-level partition. Subjects owning any attack sample are pinned to
/// the test partition; the remaining (bona fide only) subjects are shuffled and
/// cut into floor(f_train*n) / floor(f_val*n) / remainder.
inline SubjectAssignment assign_subjects(const SampleSet& set, const SplitFractions& f, std::uint64_t seed) {
  if (!(f.train > 0 && f.validation > 0 && f.test > 0) ||
      std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw UsageError("split fractions must be positive and sum to 1");
  std::set<std::string> all, pinned;
  for (const auto& s : set.infos()) {
    all.insert(s.subject_id);
    if (s.label == Label::attack) pinned.insert(s.subject_id);
  }
  std::vector<std::string> candidates;
  for (const auto& s : all)
    if (!pinned.count(s)) candidates.push_back(s);
  const std::size_t n = candidates.size();
  const auto n_train = static_cast<std::size_t>(std::floor(f.train * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(f.validation * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw ContractError("too few bona fide subjects (" + std::to_string(n) + ") for a three-way split");

  SplitMix64 rng(derive_seed(seed, "split"));
  shuffle(std::span<std::string>(candidates), rng);
  SubjectAssignment a;
  a.train.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n_train));
  a.validation.assign(candidates.begin() + static_cast<std::ptrdiff_t>(n_train),
                      candidates.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  a.test.assign(candidates.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), candidates.end());
  a.test.insert(a.test.end(), pinned.begin(), pinned.end());
  for (auto* v : {&a.train, &a.validation, &a.test}) std::sort(v->begin(), v->end());
  return a;
}

/// Training and validation receive bona fide samples only; every attack ends
/// up in the test partition. Sample order within each partition is preserved.
inline Split split_by_subject(const SampleSet& set, const SplitFractions& f, std::uint64_t seed) {
  const auto a = assign_subjects(set, f, seed);
  std::map<std::string, int> part;
  for (const auto& s : a.train) part[s] = 0;
  for (const auto& s : a.validation) part[s] = 1;
  for (const auto& s : a.test) part[s] = 2;
  std::array<std::vector<std::size_t>, 3> idx;
  for (std::size_t i = 0; i < set.size(); ++i) idx[static_cast<std::size_t>(part.at(set.info(i).subject_id))].push_back(i);
  return {set.subset(idx[0]), set.subset(idx[1]), set.subset(idx[2])};
}

}  // namespace ocpad::dataset
