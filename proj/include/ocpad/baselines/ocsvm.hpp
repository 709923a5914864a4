#pragma once

// nu one-class SVM with an RBF kernel, trained by SMO on the dual
//   min 1/2 a'Qa   s.t.  sum(a) = 1,  0 <= a_i <= 1/(nu n)
// with second-order working set selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ocpad/baselines/features.hpp"
#include "ocpad/core/rng.hpp"

namespace ocpad::baselines {

struct OcSvmOptions {
  double nu = 0.1;
  double gamma = 0.0;  ///< 0 selects 1 / (dim * feature variance)
  std::uint64_t seed = 0;
  double tol = 1e-4;
  std::size_t max_iter = 0;  ///< 0 selects max(10^7, 100 n)

  void validate() const {
    if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("nu must lie in (0,1]");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be positive (or 0 for automatic)");
    if (!(tol > 0.0)) throw UsageError("KKT tolerance must be positive");
  }
};

struct OcSvmModel {
  double nu = 0.1;
  double gamma = 1.0;
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> alpha;
  double rho = 0.0;

  std::size_t dim() const { return support_vectors.empty() ? 0 : support_vectors.front().size(); }
};

struct OcSvmFit {
  OcSvmModel model;
  std::vector<double> alpha;  ///< one coefficient per training sample
  double objective = 0.0;     ///< 1/2 a'Qa at the solution
  double kkt_gap = 0.0;       ///< max violation m(a) - M(a) at exit
  std::size_t iterations = 0;
};

inline double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * s);
}

/// 1 / (dim * variance of all feature values).
inline double default_gamma(const std::vector<std::vector<double>>& x) {
  double sum = 0.0, sq = 0.0, count = 0.0;
  for (const auto& row : x)
    for (double v : row) {
      sum += v;
      sq += v * v;
      count += 1.0;
    }
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  const double d = static_cast<double>(x.front().size());
  return var > 1e-12 ? 1.0 / (d * var) : 1.0 / d;
}

inline double ocsvm_decision(const OcSvmModel& m, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i) s += m.alpha[i] * rbf_kernel(m.support_vectors[i], x, m.gamma);
  return s;
}

/// rho - sum a_i k(sv_i, x); positive outside the learnt support.
inline double ocsvm_score(const OcSvmModel& m, const std::vector<double>& x) {
  if (x.size() != m.dim())
    throw ContractError("feature width " + std::to_string(x.size()) + " does not match SVM width " +
                        std::to_string(m.dim()));
  return m.rho - ocsvm_decision(m, x);
}

inline OcSvmFit ocsvm_fit(const std::vector<std::vector<double>>& x, const OcSvmOptions& opt = {}) {
  opt.validate();
  if (x.size() < 2) throw ContractError("ocsvm_fit needs at least two samples");
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d || d == 0) throw ContractError("ocsvm_fit: feature vectors differ in width");
    for (double v : row)
      if (!std::isfinite(v)) throw NumericError("ocsvm_fit: non-finite feature value");
  }
  const std::size_t n = x.size();
  const double gamma = opt.gamma > 0.0 ? opt.gamma : default_gamma(x);
  const double C = 1.0 / (opt.nu * static_cast<double>(n));
  const std::size_t max_iter = opt.max_iter ? opt.max_iter : std::max<std::size_t>(10'000'000, 100 * n);

  std::vector<double> Q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    Q[i * n + i] = 1.0;
    for (std::size_t j = 0; j < i; ++j) Q[i * n + j] = Q[j * n + i] = rbf_kernel(x[i], x[j], gamma);
  }

  // Feasible start: fill a seeded permutation at the upper bound until the
  // unit mass is spent.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(opt.seed, "ocsvm"));
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<double> a(n, 0.0);
  double left = 1.0;
  for (std::size_t i : order) {
    if (left <= 0.0) break;
    a[i] = std::min(C, left);
    left -= a[i];
  }

  std::vector<double> G(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] > 0.0)
      for (std::size_t t = 0; t < n; ++t) G[t] += Q[i * n + t] * a[i];

  constexpr double tau = 1e-12;
  const double bound_eps = C * 1e-12;
  auto upper = [&](std::size_t t) { return a[t] >= C - bound_eps; };
  auto lower = [&](std::size_t t) { return a[t] <= bound_eps; };

  OcSvmFit fit;
  double gap = 0.0;
  std::size_t it = 0;
  for (;; ++it) {
    // i maximises -G over indices that may grow; j is chosen among those
    // that may shrink by the largest second-order decrease.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (!upper(t) && -G[t] > gmax) {
        gmax = -G[t];
        i = t;
      }
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (lower(t)) continue;
      gmin = std::min(gmin, -G[t]);
      if (i == n) continue;
      const double b = gmax + G[t];
      if (b > 0.0) {
        double q = Q[i * n + i] + Q[t * n + t] - 2.0 * Q[i * n + t];
        if (q <= 0.0) q = tau;
        const double obj = -(b * b) / q;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    gap = gmax - gmin;
    if (i == n || j == n || gap < opt.tol) break;
    if (it >= max_iter) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "OC-SVM did not reach KKT tolerance %g after %zu iterations (residual %.3e)",
                    opt.tol, it, gap);
      throw NumericError(buf);
    }

    double q = Q[i * n + i] + Q[j * n + j] - 2.0 * Q[i * n + j];
    if (q <= 0.0) q = tau;
    const double ai = a[i], aj = a[j];
    const double sum = ai + aj;
    double ni = ai + (G[j] - G[i]) / q;
    ni = std::clamp(ni, std::max(0.0, sum - C), std::min(C, sum));
    const double nj = sum - ni;
    a[i] = ni;
    a[j] = nj;
    const double di = ni - ai, dj = nj - aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q[i * n + t] * di + Q[j * n + t] * dj;
  }

  // rho: mean gradient over free vectors, or the midpoint of the feasible
  // interval when every coefficient sits on a bound.
  double free_sum = 0.0, lb = -std::numeric_limits<double>::infinity(), ub = std::numeric_limits<double>::infinity();
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (upper(t))
      lb = std::max(lb, G[t]);
    else if (lower(t))
      ub = std::min(ub, G[t]);
    else {
      free_sum += G[t];
      ++free_count;
    }
  }
  double rho;
  if (free_count)
    rho = free_sum / static_cast<double>(free_count);
  else if (std::isfinite(lb) && std::isfinite(ub))
    rho = (lb + ub) / 2.0;
  else
    rho = std::isfinite(lb) ? lb : ub;

  fit.alpha = a;
  fit.kkt_gap = gap;
  fit.iterations = it;
  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += a[t] * G[t];
  fit.objective = 0.5 * obj;

  OcSvmModel& m = fit.model;
  m.nu = opt.nu;
  m.gamma = gamma;
  m.rho = rho;
  for (std::size_t t = 0; t < n; ++t)
    if (a[t] > 0.0) {
      m.support_vectors.push_back(x[t]);
      m.alpha.push_back(a[t]);
    }
  return fit;
}

struct OcSvmClassifier {
  Standardizer scaler;
  OcSvmModel model;

  double score(const std::vector<double>& raw) const { return ocsvm_score(model, scaler.apply(raw)); }
};

inline OcSvmClassifier fit_ocsvm_classifier(const std::vector<std::vector<double>>& raw, const OcSvmOptions& opt = {}) {
  if (raw.empty()) throw ContractError("ocsvm_fit needs at least two samples");
  OcSvmClassifier c;
  c.scaler = Standardizer::fit(raw);
  c.model = ocsvm_fit(c.scaler.apply(raw), opt).model;
  return c;
}

}  // namespace ocpad::baselines
