#pragma once

// Diagonal-covariance Gaussian mixture fitted by EM.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "ocpad/baselines/features.hpp"
#include "ocpad/core/rng.hpp"

namespace ocpad::baselines {

struct GmmOptions {
  std::size_t components = 4;
  std::uint64_t seed = 0;
  std::size_t max_iter = 200;
  double tol = 1e-6;  ///< stop when the mean per-sample log-likelihood gains less
  double variance_floor = 1e-6;

  void validate() const {
    if (components == 0) throw UsageError("GMM needs at least one component");
    if (max_iter == 0) throw UsageError("GMM max_iter must be positive");
    if (!(tol >= 0.0)) throw UsageError("GMM tolerance must be nonnegative");
    if (!(variance_floor > 0.0)) throw UsageError("GMM variance floor must be positive");
  }
};

struct GmmModel {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }

  /// Rescales the weights to sum to one.
  void normalize_weights() {
    double s = 0.0;
    for (double w : weights) s += w;
    if (!(s > 0.0)) throw NumericError("GMM weights sum to zero");
    for (double& w : weights) w /= s;
  }

  friend bool operator==(const GmmModel&, const GmmModel&) = default;
};

struct GmmFit {
  GmmModel model;
  std::vector<double> log_likelihood;  ///< total, before the first and after every M-step
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t reseeds = 0;
};

namespace detail {

inline void check_matrix(const std::vector<std::vector<double>>& x, const char* what) {
  if (x.empty()) throw ContractError(std::string(what) + " needs at least one feature vector");
  const std::size_t d = x.front().size();
  if (d == 0) throw ContractError(std::string(what) + ": feature vectors are empty");
  for (const auto& row : x) {
    if (row.size() != d) throw ContractError(std::string(what) + ": feature vectors differ in width");
    for (double v : row)
      if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite feature value");
  }
}

inline double log_gaussian(const std::vector<double>& x, const std::vector<double>& mean,
                           const std::vector<double>& var) {
  constexpr double log2pi = 1.8378770664093454836;
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - mean[k];
    s += d * d / var[k] + std::log(var[k]) + log2pi;
  }
  return -0.5 * s;
}

/// log p(x) under the mixture; fills `log_resp` with log posterior weights.
inline double log_density(const GmmModel& m, const std::vector<double>& x, std::vector<double>& log_resp) {
  log_resp.resize(m.components());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.components(); ++k) {
    log_resp[k] = (m.weights[k] > 0.0 ? std::log(m.weights[k]) : -std::numeric_limits<double>::infinity()) +
                  log_gaussian(x, m.means[k], m.variances[k]);
    hi = std::max(hi, log_resp[k]);
  }
  if (!std::isfinite(hi)) throw NumericError("mixture density underflowed for every component");
  double s = 0.0;
  for (double v : log_resp) s += std::exp(v - hi);
  const double lse = hi + std::log(s);
  for (double& v : log_resp) v -= lse;
  return lse;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

}  // namespace detail

/// Negative log-likelihood of `x`; higher means more anomalous.
inline double gmm_score(const GmmModel& m, const std::vector<double>& x) {
  if (x.size() != m.dim())
    throw ContractError("feature width " + std::to_string(x.size()) + " does not match GMM width " +
                        std::to_string(m.dim()));
  std::vector<double> scratch;
  return -detail::log_density(m, x, scratch);
}

/// EM from a k-means++ initialisation. Components that lose all mass are
/// moved onto the worst-explained sample.
inline GmmFit gmm_fit(const std::vector<std::vector<double>>& x, const GmmOptions& opt = {}) {
  opt.validate();
  detail::check_matrix(x, "gmm_fit");
  const std::size_t n = x.size(), d = x.front().size(), K = opt.components;
  if (n < K) throw ContractError("gmm_fit needs at least K=" + std::to_string(K) + " samples, got " + std::to_string(n));

  std::vector<double> global_mean(d, 0.0), global_var(d, 0.0);
  for (const auto& row : x)
    for (std::size_t k = 0; k < d; ++k) global_mean[k] += row[k];
  for (double& v : global_mean) v /= static_cast<double>(n);
  for (const auto& row : x)
    for (std::size_t k = 0; k < d; ++k) global_var[k] += (row[k] - global_mean[k]) * (row[k] - global_mean[k]);
  for (double& v : global_var) v = std::max(v / static_cast<double>(n), opt.variance_floor);

  SplitMix64 rng(derive_seed(opt.seed, "gmm"));
  GmmFit fit;
  GmmModel& m = fit.model;
  m.weights.assign(K, 1.0 / static_cast<double>(K));
  m.variances.assign(K, global_var);
  m.means.push_back(x[rng.below(n)]);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (m.means.size() < K) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], detail::squared_distance(x[i], m.means.back()));
      total += dist[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < dist[i]) {
          pick = i;
          break;
        }
        u -= dist[i];
      }
    } else {
      pick = rng.below(n);  // all samples coincide with chosen centres
    }
    m.means.push_back(x[pick]);
  }

  std::vector<std::vector<double>> resp(n);
  std::vector<double> sample_ll(n);
  auto e_step = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sample_ll[i] = detail::log_density(m, x[i], resp[i]);
      for (double& r : resp[i]) r = std::exp(r);
      total += sample_ll[i];
    }
    return total;
  };

  double ll = e_step();
  fit.log_likelihood.push_back(ll);
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    std::vector<double> mass(K, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < K; ++k) mass[k] += resp[i][k];
    for (std::size_t k = 0; k < K; ++k) {
      if (mass[k] < 1e-10) {
        // Farthest point: the sample least explained by the current mixture.
        const std::size_t far =
            static_cast<std::size_t>(std::min_element(sample_ll.begin(), sample_ll.end()) - sample_ll.begin());
        m.means[k] = x[far];
        m.variances[k] = global_var;
        m.weights[k] = 1.0 / static_cast<double>(n);
        sample_ll[far] = std::numeric_limits<double>::infinity();
        ++fit.reseeds;
        continue;
      }
      std::vector<double> mu(d, 0.0), var(d, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mu[j] += resp[i][k] * x[i][j];
      for (double& v : mu) v /= mass[k];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) var[j] += resp[i][k] * (x[i][j] - mu[j]) * (x[i][j] - mu[j]);
      for (double& v : var) v = std::max(v / mass[k], opt.variance_floor);
      m.means[k] = std::move(mu);
      m.variances[k] = std::move(var);
      m.weights[k] = mass[k] / static_cast<double>(n);
    }
    m.normalize_weights();
    const double next = e_step();
    fit.log_likelihood.push_back(next);
    fit.iterations = it;
    if (!std::isfinite(next)) throw NumericError("GMM log-likelihood became non-finite");
    if (next - ll < opt.tol * static_cast<double>(n)) {
      fit.converged = true;
      break;
    }
    ll = next;
  }
  return fit;
}

/// A fitted mixture with the standardization learnt from its training set.
struct GmmClassifier {
  Standardizer scaler;
  GmmModel model;

  double score(const std::vector<double>& raw) const { return gmm_score(model, scaler.apply(raw)); }
};

inline GmmClassifier fit_gmm_classifier(const std::vector<std::vector<double>>& raw, const GmmOptions& opt = {}) {
  detail::check_matrix(raw, "gmm_fit");
  GmmClassifier c;
  c.scaler = Standardizer::fit(raw);
  c.model = gmm_fit(c.scaler.apply(raw), opt).model;
  return c;
}

}  // namespace ocpad::baselines
