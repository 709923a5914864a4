#pragma once

// Flat experiment configuration: one "key = value" per line, '#' starts a
// comment. Unknown keys are rejected so typos do not silently fall back.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ocpad/baselines/gmm.hpp"
#include "ocpad/baselines/ocsvm.hpp"
#include "ocpad/dataset/generator.hpp"
#include "ocpad/losses.hpp"
#include "ocpad/models/architecture.hpp"
#include "ocpad/models/training.hpp"

namespace ocpad {

struct ExperimentConfig {
  // dataset
  std::string data_dir = "data";
  std::uint64_t seed = 42;
  std::size_t channels = 4;
  std::size_t height = 32;
  std::size_t width = 96;
  std::size_t subjects = 50;
  std::size_t attack_subjects = 20;
  std::size_t bonafide_count = 1000;
  std::size_t attacks_per_species = 100;
  double noise = 0.03;
  double glare_probability = 0.3;
  // architecture
  models::ArchKind arch = models::ArchKind::dense_ae;
  std::size_t filters = 12;
  std::size_t latent = 64;
  // loss
  losses::LossKind loss = losses::LossKind::proposed_wmse;
  double c = 1.8;
  double alpha = 1.0;
  // optimizer
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-7;
  // baselines
  std::size_t gmm_components = 4;
  std::size_t gmm_max_iter = 200;
  double gmm_tol = 1e-6;
  double svm_nu = 0.1;
  double svm_gamma = 0.0;
  // output
  std::string out_dir = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  dataset::GeneratorConfig generator() const {
    dataset::GeneratorConfig g;
    g.channels = channels;
    g.height = height;
    g.width = width;
    g.subjects = subjects;
    g.attack_subjects = attack_subjects;
    g.bonafide_count = bonafide_count;
    g.attacks = dataset::GeneratorConfig::default_attacks(attacks_per_species);
    g.noise = noise;
    g.glare_probability = glare_probability;
    g.seed = seed;
    return g;
  }

  models::AEArchitecture architecture() const {
    models::AEArchitecture a;
    a.kind = arch;
    a.channels = channels;
    a.height = height;
    a.width = width;
    a.filters = filters;
    a.latent = latent;
    return a;
  }

  losses::LossConfig loss_config() const { return {loss, c, alpha}; }

  models::TrainOptions train_options() const {
    models::TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.optimizer = {learning_rate, rho, epsilon};
    t.seed = seed;
    return t;
  }

  baselines::GmmOptions gmm_options() const {
    baselines::GmmOptions o;
    o.components = gmm_components;
    o.seed = seed;
    o.max_iter = gmm_max_iter;
    o.tol = gmm_tol;
    return o;
  }

  baselines::OcSvmOptions svm_options() const {
    baselines::OcSvmOptions o;
    o.nu = svm_nu;
    o.gamma = svm_gamma;
    o.seed = seed;
    return o;
  }
};

namespace config_detail {

inline std::string format(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string format(std::uint64_t v) { return std::to_string(v); }

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw UsageError("config key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
    throw UsageError("config key '" + key + "' expects a finite number, got '" + v + "'");
  return out;
}

// Serialization order is the order of this table.
inline const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto str = [&](const char* k, std::string C::*m) {
      t.push_back({k, {[m](const C& c) { return c.*m; }, [m](C& c, const std::string& v) { c.*m = v; }}});
    };
    auto u64 = [&](const char* k, auto C::*m) {
      std::string key = k;
      t.push_back({k,
                   {[m](const C& c) { return format(static_cast<std::uint64_t>(c.*m)); },
                    [m, key](C& c, const std::string& v) { c.*m = parse_u64(key, v); }}});
    };
    auto real = [&](const char* k, double C::*m) {
      std::string key = k;
      t.push_back({k,
                   {[m](const C& c) { return format(c.*m); },
                    [m, key](C& c, const std::string& v) { c.*m = parse_real(key, v); }}});
    };
    str("data_dir", &C::data_dir);
    u64("seed", &C::seed);
    u64("channels", &C::channels);
    u64("height", &C::height);
    u64("width", &C::width);
    u64("subjects", &C::subjects);
    u64("attack_subjects", &C::attack_subjects);
    u64("bonafide_count", &C::bonafide_count);
    u64("attacks_per_species", &C::attacks_per_species);
    real("noise", &C::noise);
    real("glare_probability", &C::glare_probability);
    t.push_back({"arch",
                 {[](const C& c) { return std::string(models::to_string(c.arch)); },
                  [](C& c, const std::string& v) { c.arch = models::parse_arch_kind(v); }}});
    u64("filters", &C::filters);
    u64("latent", &C::latent);
    t.push_back({"loss",
                 {[](const C& c) { return std::string(losses::to_string(c.loss)); },
                  [](C& c, const std::string& v) { c.loss = losses::parse_loss_kind(v); }}});
    real("c", &C::c);
    real("alpha", &C::alpha);
    u64("epochs", &C::epochs);
    u64("batch_size", &C::batch_size);
    real("learning_rate", &C::learning_rate);
    real("rho", &C::rho);
    real("epsilon", &C::epsilon);
    u64("gmm_components", &C::gmm_components);
    u64("gmm_max_iter", &C::gmm_max_iter);
    real("gmm_tol", &C::gmm_tol);
    real("svm_nu", &C::svm_nu);
    real("svm_gamma", &C::svm_gamma);
    str("out_dir", &C::out_dir);
    return t;
  }();
  return table;
}

}  // namespace config_detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& [name, f] : config_detail::fields()) k.push_back(name);
  return k;
}

/// Sets one field from its textual value.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  for (const auto& [name, f] : config_detail::fields())
    if (name == key) {
      f.set(c, value);
      return;
    }
  throw UsageError("unknown config key '" + key + "'");
}

inline std::string get_config_value(const ExperimentConfig& c, const std::string& key) {
  for (const auto& [name, f] : config_detail::fields())
    if (name == key) return f.get(c);
  throw UsageError("unknown config key '" + key + "'");
}

/// Applies a config document on top of `base`.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = config_detail::trim(line.substr(0, eq));
    const std::string value = config_detail::trim(line.substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [name, f] : config_detail::fields()) out += name + " = " + f.get(c) + "\n";
  return out;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace ocpad
