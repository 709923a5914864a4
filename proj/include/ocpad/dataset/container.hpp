#pragma once

// Sample container layout (little-endian, 28-byte fixed header):
//   0  "OCPD"
//   4  u16 version = 1
//   6  u8  flags = 0
//   7  u8  reserved = 0
//   8  u32 N
//  12  u16 d, u16 H, u16 W
//  18  u16 reserved = 0
//  20  u64 metadata length
//  28  metadata: N lines "sample_id\tsubject_id\tlabel\tspecies\n" (UTF-8)
//      then N*d*H*W f32 values, sample-major then channel-major.

#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include "ocpad/core/binary_io.hpp"
#include "ocpad/dataset/sample_set.hpp"

namespace ocpad::dataset {

inline constexpr char kContainerMagic[] = "OCPD";
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 28;

namespace detail {

inline void check_field(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of("\t\n\r") != std::string::npos)
    throw ContractError(std::string(what) + " '" + s + "' must be non-empty and free of tabs and newlines");
}

inline std::string metadata_block(const SampleSet& set) {
  std::string out;
  for (const auto& s : set.infos()) {
    check_field(s.sample_id, "sample id");
    check_field(s.subject_id, "subject id");
    check_field(s.species, "species");
    out += s.sample_id + '\t' + s.subject_id + '\t' + std::string(to_string(s.label)) + '\t' + s.species + '\n';
  }
  return out;
}

}  // namespace detail

inline ByteWriter container_bytes(const SampleSet& set) {
  set.validate();
  if (set.size() > std::numeric_limits<std::uint32_t>::max() || set.height() > 65535 || set.width() > 65535)
    throw ContractError("sample set exceeds container dimension limits");
  ByteWriter w;
  w.put_bytes(std::string_view(kContainerMagic, 4));
  w.put_u16(kContainerVersion);
  w.put_u8(0);
  w.put_u8(0);
  w.put_u32(static_cast<std::uint32_t>(set.size()));
  w.put_u16(static_cast<std::uint16_t>(set.channels()));
  w.put_u16(static_cast<std::uint16_t>(set.height()));
  w.put_u16(static_cast<std::uint16_t>(set.width()));
  w.put_u16(0);
  const std::string meta = detail::metadata_block(set);
  w.put_u64(meta.size());
  w.put_bytes(meta);
  w.put_f32(set.pixels());
  return w;
}

inline void save_container(const SampleSet& set, const std::filesystem::path& path) {
  container_bytes(set).write_file(path);
}

inline SampleSet parse_container(ByteReader r) {
  if (r.get_bytes(4) != std::string_view(kContainerMagic, 4))
    throw FormatError("'" + r.source() + "' is not a sample container (bad magic)");
  const auto version = r.get_u16();
  if (version != kContainerVersion) throw FormatError("unsupported container version " + std::to_string(version));
  const auto flags = r.get_u8();
  if (flags != 0 || r.get_u8() != 0) throw FormatError("unsupported container flags");
  const std::uint64_t n = r.get_u32();
  const std::uint64_t d = r.get_u16(), h = r.get_u16(), w = r.get_u16();
  if (r.get_u16() != 0) throw FormatError("container reserved field is not zero");
  if (d == 0 || h == 0 || w == 0) throw FormatError("container has a zero image dimension");
  const std::uint64_t meta_len = r.get_u64();
  if (meta_len > r.remaining()) throw FormatError("'" + r.source() + "' is truncated inside the metadata block");
  const std::string meta = r.get_bytes(static_cast<std::size_t>(meta_len));

  unsigned __int128 values = static_cast<unsigned __int128>(n) * d * h * w;
  if (values * 4 > static_cast<unsigned __int128>(std::numeric_limits<std::size_t>::max()))
    throw FormatError("container dimensions overflow");
  if (values * 4 != r.remaining())
    throw FormatError("'" + r.source() + "' holds " + std::to_string(r.remaining()) + " pixel bytes, expected " +
                      std::to_string(static_cast<std::uint64_t>(values * 4)));

  SampleSet set(d, h, w);
  std::istringstream lines(meta);
  std::string line;
  std::vector<float> img(d * h * w);
  std::vector<SampleInfo> infos;
  while (std::getline(lines, line)) {
    SampleInfo s;
    std::istringstream fields(line);
    std::string label;
    if (!std::getline(fields, s.sample_id, '\t') || !std::getline(fields, s.subject_id, '\t') ||
        !std::getline(fields, label, '\t') || !std::getline(fields, s.species))
      throw FormatError("malformed container metadata line: " + line);
    s.label = parse_label(label);
    infos.push_back(std::move(s));
  }
  if (infos.size() != n)
    throw FormatError("container metadata lists " + std::to_string(infos.size()) + " samples, header says " +
                      std::to_string(n));
  for (auto& s : infos) {
    r.get_f32(img);
    set.add(std::move(s), img);
  }
  try {
    set.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("invalid container contents: ") + e.what());
  }
  return set;
}

inline SampleSet load_container(const std::filesystem::path& path) { return parse_container(ByteReader::from_file(path)); }

}  // namespace ocpad::dataset
