#pragma once

// Checkpoint layout (little-endian):
//   "OCAE"  u16 version=1  u32 header_len  header (UTF-8 "key=value\n" lines)
//   then every parameter tensor as f32, in layer order, weights before bias.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "ocpad/core/binary_io.hpp"
#include "ocpad/models/autoencoder.hpp"

namespace ocpad::models {

inline constexpr char kCheckpointMagic[] = "OCAE";
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string checkpoint_header(const AEModel& m) {
  const auto& a = m.architecture();
  const auto& md = m.metadata();
  std::ostringstream os;
  os << "arch=" << to_string(a.kind) << '\n'
     << "channels=" << a.channels << '\n'
     << "height=" << a.height << '\n'
     << "width=" << a.width << '\n'
     << "filters=" << a.filters << '\n'
     << "latent=" << a.latent << '\n'
     << "loss=" << losses::to_string(m.loss().kind) << '\n'
     << "c=" << format_double(m.loss().c) << '\n'
     << "alpha=" << format_double(m.loss().alpha) << '\n'
     << "seed=" << md.seed << '\n'
     << "epochs_run=" << md.epochs_run << '\n'
     << "best_epoch=" << md.best_epoch << '\n'
     << "best_val_loss=" << format_double(md.best_val_loss) << '\n'
     << "final_val_loss=" << format_double(md.final_val_loss) << '\n'
     << "param_count=" << m.params().parameter_count() << '\n';
  return os.str();
}

inline std::map<std::string, std::string> parse_header(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint header line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("checkpoint header is missing '" + key + "'");
  return it->second;
}

inline std::uint64_t to_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw FormatError("checkpoint field '" + key + "' is not an integer");
  return v;
}

inline double to_double(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw FormatError("checkpoint field '" + key + "' is not a number");
  return v;
}

}  // namespace detail

inline ByteWriter checkpoint_bytes(const AEModel& m) {
  ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put_u16(kCheckpointVersion);
  const std::string header = detail::checkpoint_header(m);
  w.put_u32(static_cast<std::uint32_t>(header.size()));
  w.put_bytes(header);
  const auto& p = m.params();
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    if (p.weights[i].empty()) continue;
    w.put_f32(p.weights[i].data());
    w.put_f32(p.biases[i].data());
  }
  return w;
}

inline void save_checkpoint(const AEModel& m, const std::filesystem::path& path) {
  checkpoint_bytes(m).write_file(path);
}

inline AEModel deserialize_checkpoint(ByteReader r) {
  if (r.get_bytes(4) != std::string_view(kCheckpointMagic, 4))
    throw FormatError("'" + r.source() + "' is not a checkpoint (bad magic)");
  const auto version = r.get_u16();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = r.get_u32();
  const auto kv = detail::parse_header(r.get_bytes(header_len));
  using detail::require;
  using detail::to_u64;
  AEArchitecture a;
  try {
    a.kind = parse_arch_kind(require(kv, "arch"));
  } catch (const UsageError& e) {
    throw FormatError(e.what());
  }
  a.channels = to_u64(require(kv, "channels"), "channels");
  a.height = to_u64(require(kv, "height"), "height");
  a.width = to_u64(require(kv, "width"), "width");
  a.filters = to_u64(require(kv, "filters"), "filters");
  a.latent = to_u64(require(kv, "latent"), "latent");
  losses::LossConfig loss;
  try {
    loss.kind = losses::parse_loss_kind(require(kv, "loss"));
  } catch (const UsageError& e) {
    throw FormatError(e.what());
  }
  loss.c = detail::to_double(require(kv, "c"), "c");
  loss.alpha = detail::to_double(require(kv, "alpha"), "alpha");
  const auto seed = to_u64(require(kv, "seed"), "seed");

  AEModel m(a, loss, seed);
  auto& md = m.mutable_metadata();
  md.epochs_run = to_u64(require(kv, "epochs_run"), "epochs_run");
  md.best_epoch = to_u64(require(kv, "best_epoch"), "best_epoch");
  md.best_val_loss = detail::to_double(require(kv, "best_val_loss"), "best_val_loss");
  md.final_val_loss = detail::to_double(require(kv, "final_val_loss"), "final_val_loss");
  auto& p = m.mutable_params();
  if (to_u64(require(kv, "param_count"), "param_count") != p.parameter_count())
    throw FormatError("checkpoint parameter count does not match its architecture");
  if (r.remaining() != p.parameter_count() * 4)
    throw FormatError("checkpoint '" + r.source() + "' has " + std::to_string(r.remaining()) +
                      " parameter bytes, expected " + std::to_string(p.parameter_count() * 4));
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    if (p.weights[i].empty()) continue;
    r.get_f32(p.weights[i].data());
    r.get_f32(p.biases[i].data());
    p.weight_acc[i].fill(0.0f);
    p.bias_acc[i].fill(0.0f);
  }
  return m;
}

inline AEModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(ByteReader::from_file(path));
}

}  // namespace ocpad::models
