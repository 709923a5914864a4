#pragma once

// Deterministic synthetic fingertip captures.
//
// Bona fide images are sinusoidal ridge patterns with per-subject frequency,
// orientation, curvature and phase, inside a soft fingertip envelope. For
// 4-channel (SWIR-like) stacks the base intensity drops with the channel
// index; 3-channel (laser-like) stacks share one base intensity under a
// radial focus spot and carry a small frame-to-frame flicker. Some bona fide
// captures get a bright specular blob as illumination interference.
//
// Attacks start from the same machinery and apply a SpeciesSpec: either a
// full fake finger with its own reflectance spectrum and ridge texture, or an
// overlay blended over a live finger with a given opacity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "ocpad/core/rng.hpp"
#include "ocpad/dataset/sample_set.hpp"

namespace ocpad::dataset {

enum class Coverage { full, overlay };

struct SpeciesSpec {
  std::string name;
  std::array<double, 4> reflectance{1.0, 1.0, 1.0, 1.0};  ///< per-channel multipliers, > 0
  double ridge_frequency_scale = 1.0;                     ///< material ridge frequency relative to the subject's
  double orientation_jitter = 0.0;                        ///< radians, uniform +-
  double ridge_contrast = 0.3;                            ///< amplitude of the material ridge modulation
  double noise = 0.03;                                    ///< additive Gaussian sigma
  Coverage coverage = Coverage::full;
  double opacity = 1.0;  ///< overlay opacity in (0, 1]

  void validate() const {
    if (name.empty() || name == kBonafideSpecies) throw UsageError("attack species needs a name other than 'bonafide'");
    for (double r : reflectance)
      if (!(r > 0.0)) throw UsageError("species '" + name + "': reflectance multipliers must be > 0");
    if (!(opacity > 0.0 && opacity <= 1.0)) throw UsageError("species '" + name + "': opacity must lie in (0,1]");
    if (!(noise >= 0.0)) throw UsageError("species '" + name + "': noise must be >= 0");
  }
};

/// Four attack groups: a full fake finger and opaque, semi-transparent and
/// transparent overlays.
inline std::vector<SpeciesSpec> default_species() {
  std::vector<SpeciesSpec> s(4);
  s[0].name = "fakefinger";
  s[0].reflectance = {0.95, 1.15, 1.4, 1.7};
  s[0].ridge_frequency_scale = 1.35;
  s[0].orientation_jitter = 0.4;
  s[0].ridge_contrast = 0.2;
  s[1].name = "overlay_opaque";
  s[1].reflectance = {0.75, 1.0, 1.25, 1.45};
  s[1].coverage = Coverage::overlay;
  s[1].opacity = 1.0;
  s[1].ridge_frequency_scale = 1.25;
  s[2].name = "overlay_semi";
  s[2].reflectance = {1.35, 0.8, 1.3, 0.75};
  s[2].coverage = Coverage::overlay;
  s[2].opacity = 0.7;
  s[2].ridge_frequency_scale = 1.7;
  s[2].ridge_contrast = 0.45;
  s[3].name = "overlay_transparent";
  s[3].reflectance = {0.72, 1.38, 0.78, 1.5};
  s[3].coverage = Coverage::overlay;
  s[3].opacity = 0.6;
  s[3].ridge_frequency_scale = 2.1;
  s[3].ridge_contrast = 0.45;
  return s;
}

struct AttackCount {
  SpeciesSpec species;
  std::size_t count = 0;
};

struct GeneratorConfig {
  std::size_t channels = 4;
  std::size_t height = 32;
  std::size_t width = 96;
  std::size_t subjects = 50;         ///< bona fide donors
  std::size_t attack_subjects = 20;  ///< PAI donors, disjoint from bona fide subjects
  std::size_t bonafide_count = 1000;
  std::vector<AttackCount> attacks = default_attacks(100);
  double noise = 0.03;
  double glare_probability = 0.3;  ///< bona fide captures with a specular blob
  std::uint64_t seed = 42;

  static std::vector<AttackCount> default_attacks(std::size_t per_species) {
    std::vector<AttackCount> a;
    for (auto& s : default_species()) a.push_back({s, per_species});
    return a;
  }

  std::size_t attack_count() const {
    std::size_t n = 0;
    for (const auto& a : attacks) n += a.count;
    return n;
  }

  void validate() const {
    if (channels != 3 && channels != 4) throw UsageError("generator supports 3 or 4 channels");
    if (height < 4 || width < 4) throw UsageError("generated images must be at least 4x4");
    if (height > 65535 || width > 65535) throw UsageError("image dimensions exceed 65535");
    if (subjects < 1) throw UsageError("generator needs at least one subject");
    if (attack_count() > 0 && attack_subjects < 1) throw UsageError("attacks need at least one PAI subject");
    if (!(noise >= 0.0)) throw UsageError("noise must be >= 0");
    for (const auto& a : attacks) a.species.validate();
  }
};

namespace detail {

struct RidgeParams {
  double period = 8.0;  // pixels
  double orientation = 0.0;
  double curvature = 0.0;
  double phase = 0.0;
};

inline RidgeParams subject_ridges(std::uint64_t seed, const std::string& subject, double scale) {
  SplitMix64 rng(derive_seed(seed, "subject:" + subject));
  RidgeParams p;
  p.period = rng.uniform(6.5, 10.0) * scale;
  p.orientation = rng.uniform(-0.45, 0.45);
  p.curvature = rng.uniform(-1.0, 1.0);
  p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return p;
}

struct Canvas {
  std::size_t d, h, w;
  std::vector<float> px;
  float& at(std::size_t c, std::size_t y, std::size_t x) { return px[(c * h + y) * w + x]; }
};

inline double smoothstep_edge(double dist, double soft) { return 1.0 / (1.0 + std::exp(dist / soft)); }

// Soft fingertip support in [0,1].
inline double envelope(double x, double y, double w, double h) {
  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  const double ex = std::abs(x - cx) - 0.44 * w;
  const double ey = std::abs(y - cy) - 0.42 * h;
  return smoothstep_edge(ex, 1.5) * smoothstep_edge(ey, 1.2);
}

inline double ridge_wave(const RidgeParams& r, double x, double y, double w, double h, double dx, double dy,
                         double phase_jitter) {
  const double xs = x - 0.5 * w + dx, ys = y - 0.5 * h + dy;
  const double c = std::cos(r.orientation), s = std::sin(r.orientation);
  const double u = xs * c + ys * s;
  const double v = -xs * s + ys * c;
  const double bend = r.curvature * v * v / h;
  return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (u + bend) / r.period + r.phase + phase_jitter);
}

inline double channel_base(std::size_t d, std::size_t c) {
  if (d == 4) return 0.85 - 0.15 * static_cast<double>(c);  // darker for longer wavelengths
  return 0.8;
}

// Laser focus spot: bright centre, darker rim.
inline double focus_spot(double x, double y, double w, double h) {
  const double rx = (x - 0.5 * (w - 1)) / (0.45 * w), ry = (y - 0.5 * (h - 1)) / (0.9 * h);
  return 0.45 + 0.55 * std::exp(-2.0 * (rx * rx + ry * ry));
}

struct Presentation {
  double dx, dy, phase_jitter, gain;
  std::array<double, 3> flicker;
};

inline Presentation draw_presentation(SplitMix64& rng) {
  Presentation p;
  p.dx = rng.uniform(-2.0, 2.0);
  p.dy = rng.uniform(-1.5, 1.5);
  p.phase_jitter = rng.uniform(-0.3, 0.3);
  p.gain = rng.uniform(0.92, 1.08);
  for (double& f : p.flicker) f = rng.uniform(-0.03, 0.03);
  return p;
}

inline constexpr double kBackground = 0.05;

// Skin render shared by bona fide samples and the live layer under overlays.
inline void render_live(Canvas& cv, const RidgeParams& ridges, const Presentation& pr) {
  const double W = static_cast<double>(cv.w), H = static_cast<double>(cv.h);
  for (std::size_t y = 0; y < cv.h; ++y)
    for (std::size_t x = 0; x < cv.w; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double env = envelope(fx, fy, W, H);
      const double ridge = ridge_wave(ridges, fx, fy, W, H, pr.dx, pr.dy, pr.phase_jitter);
      for (std::size_t c = 0; c < cv.d; ++c) {
        double v = channel_base(cv.d, c) * pr.gain * (0.7 + 0.3 * ridge);
        if (cv.d == 3) v *= focus_spot(fx, fy, W, H) * (1.0 + pr.flicker[c]);
        cv.at(c, y, x) = static_cast<float>(kBackground + env * (v - kBackground));
      }
    }
}

inline void add_glare(Canvas& cv, SplitMix64& rng) {
  const double cx = rng.uniform(0.2, 0.8) * static_cast<double>(cv.w);
  const double cy = rng.uniform(0.25, 0.75) * static_cast<double>(cv.h);
  const double radius = rng.uniform(1.5, 3.0) * static_cast<double>(cv.h) / 32.0;
  const double amp = rng.uniform(0.3, 0.5);
  for (std::size_t y = 0; y < cv.h; ++y)
    for (std::size_t x = 0; x < cv.w; ++x) {
      const double r2 = (static_cast<double>(x) - cx) * (static_cast<double>(x) - cx) +
                        (static_cast<double>(y) - cy) * (static_cast<double>(y) - cy);
      const double g = amp * std::exp(-r2 / (2.0 * radius * radius));
      for (std::size_t c = 0; c < cv.d; ++c) cv.at(c, y, x) += static_cast<float>(g);
    }
}

inline void add_noise_and_clamp(Canvas& cv, double sigma, SplitMix64& rng) {
  for (float& v : cv.px) {
    const double n = sigma > 0.0 ? sigma * rng.normal() : 0.0;
    v = static_cast<float>(std::clamp(static_cast<double>(v) + n, 0.0, 1.0));
  }
}

}  // namespace detail

/// Renders one bona fide capture of `subject`.
inline std::vector<float> render_bonafide(const GeneratorConfig& cfg, const std::string& subject,
                                          std::uint64_t sample_seed) {
  const double scale = static_cast<double>(cfg.height) / 32.0;
  detail::Canvas cv{cfg.channels, cfg.height, cfg.width, std::vector<float>(cfg.channels * cfg.height * cfg.width)};
  SplitMix64 rng(sample_seed);
  const auto pr = detail::draw_presentation(rng);
  detail::render_live(cv, detail::subject_ridges(cfg.seed, subject, scale), pr);
  if (rng.uniform() < cfg.glare_probability) detail::add_glare(cv, rng);
  detail::add_noise_and_clamp(cv, cfg.noise, rng);
  return std::move(cv.px);
}

/// Renders one presentation attack of `species` made from the PAI donor `subject`.
inline std::vector<float> render_attack(const GeneratorConfig& cfg, const SpeciesSpec& sp, const std::string& subject,
                                        std::uint64_t sample_seed) {
  const double scale = static_cast<double>(cfg.height) / 32.0;
  const double W = static_cast<double>(cfg.width), H = static_cast<double>(cfg.height);
  detail::Canvas cv{cfg.channels, cfg.height, cfg.width, std::vector<float>(cfg.channels * cfg.height * cfg.width)};
  SplitMix64 rng(sample_seed);
  const auto pr = detail::draw_presentation(rng);
  const auto donor = detail::subject_ridges(cfg.seed, subject, scale);

  // Material layer: the donor's ridges re-cast with the species' texture.
  detail::RidgeParams mat = donor;
  mat.period = donor.period / sp.ridge_frequency_scale;
  mat.orientation += rng.uniform(-sp.orientation_jitter, sp.orientation_jitter);
  mat.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  if (sp.coverage == Coverage::overlay) detail::render_live(cv, donor, pr);
  // Overlays cover the distal part of the fingertip with a soft edge.
  const double x_edge = rng.uniform(0.3, 0.45) * W;
  for (std::size_t y = 0; y < cv.h; ++y)
    for (std::size_t x = 0; x < cv.w; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double env = detail::envelope(fx, fy, W, H);
      const double ridge = detail::ridge_wave(mat, fx, fy, W, H, pr.dx, pr.dy, 0.0);
      const double cover =
          sp.coverage == Coverage::full ? 1.0 : sp.opacity * detail::smoothstep_edge(x_edge - fx, 1.5);
      for (std::size_t c = 0; c < cv.d; ++c) {
        double m = detail::channel_base(cv.d, c) * sp.reflectance[c] * pr.gain *
                   (1.0 - sp.ridge_contrast + sp.ridge_contrast * ridge);
        if (cv.d == 3) m *= detail::focus_spot(fx, fy, W, H);
        const double material = detail::kBackground + env * (m - detail::kBackground);
        float& px = cv.at(c, y, x);
        px = static_cast<float>((1.0 - cover) * px + cover * material);
      }
    }
  detail::add_noise_and_clamp(cv, sp.noise, rng);
  return std::move(cv.px);
}

inline std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%0*zu", prefix, width, i);
  return buf;
}

/// Generates the full labeled set. Each sample draws from its own stream
/// derived from (seed, sample index), so samples are independent of one another.
inline SampleSet generate(const GeneratorConfig& cfg) {
  cfg.validate();
  SampleSet set(cfg.channels, cfg.height, cfg.width);
  const std::uint64_t stream = derive_seed(cfg.seed, "dataset");
  std::size_t index = 0;
  for (std::size_t i = 0; i < cfg.bonafide_count; ++i, ++index) {
    const std::string subject = numbered("subj", i % cfg.subjects, 4);
    set.add({numbered("bf", i, 5), subject, Label::bonafide, std::string(kBonafideSpecies)},
            render_bonafide(cfg, subject, derive_seed(stream, index)));
  }
  std::size_t attack_index = 0;
  for (const auto& group : cfg.attacks) {
    for (std::size_t i = 0; i < group.count; ++i, ++index, ++attack_index) {
      const std::string subject = numbered("pai", attack_index % cfg.attack_subjects, 4);
      set.add({numbered(group.species.name.c_str(), i, 5), subject, Label::attack, group.species.name},
              render_attack(cfg, group.species, subject, derive_seed(stream, index)));
    }
  }
  return set;
}

}  // namespace ocpad::dataset
