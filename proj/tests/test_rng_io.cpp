#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <set>

#include "ocpad/core/binary_io.hpp"
#include "ocpad/core/rng.hpp"

using namespace ocpad;

TEST(SplitMix64, MatchesReferenceSequence) {
  // Reference values of the public-domain splitmix64 for state 0.
  SplitMix64 r(0);
  EXPECT_EQ(r.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(r.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(r.next(), 0x06c45d188009454fULL);
}

TEST(SplitMix64, UniformStaysInHalfOpenUnitInterval) {
  SplitMix64 r(7);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(SplitMix64, BelowCoversRangeUniformly) {
  SplitMix64 r(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(r.below(1), 0u);
}

TEST(SplitMix64, NormalHasUnitMoments) {
  SplitMix64 r(3);
  double s = 0.0, ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.02);
}

TEST(Shuffle, IsAPermutationAndDeterministic) {
  std::vector<int> a(50), b;
  std::iota(a.begin(), a.end(), 0);
  b = a;
  SplitMix64 r1(5), r2(5);
  shuffle(std::span<int>(a), r1);
  shuffle(std::span<int>(b), r2);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(a.begin(), a.end()));
}

TEST(DeriveSeed, SeparatesNamesAndIndices) {
  std::set<std::uint64_t> seen;
  for (const char* n : {"dataset", "split", "shuffle", "gmm", "ocsvm"}) seen.insert(derive_seed(42, n));
  for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 105u);
  EXPECT_EQ(derive_seed(42, "split"), derive_seed(42, "split"));
  EXPECT_NE(derive_seed(42, "split"), derive_seed(43, "split"));
}

TEST(BinaryIo, RoundTripsLittleEndianFields) {
  ByteWriter w;
  w.put_u8(0xab);
  w.put_u16(0x1234);
  w.put_u32(0xdeadbeef);
  w.put_u64(0x0102030405060708ULL);
  const float f[] = {1.5f, -0.0f, 3.25e-8f};
  w.put_f32(f);
  w.put_bytes("tail");
  const auto& bytes = w.bytes();
  ASSERT_EQ(bytes.size(), 1u + 2 + 4 + 8 + 12 + 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[1]), 0x34);  // little-endian low byte first
  EXPECT_EQ(static_cast<unsigned char>(bytes[2]), 0x12);

  ByteReader r(std::vector<char>(bytes.begin(), bytes.end()), "mem");
  EXPECT_EQ(r.get_u8(), 0xab);
  EXPECT_EQ(r.get_u16(), 0x1234);
  EXPECT_EQ(r.get_u32(), 0xdeadbeefu);
  EXPECT_EQ(r.get_u64(), 0x0102030405060708ULL);
  float g[3];
  r.get_f32(g);
  EXPECT_EQ(std::memcmp(f, g, sizeof f), 0);
  EXPECT_EQ(r.get_bytes(4), "tail");
  EXPECT_EQ(r.remaining(), 0u);
}

TEST(BinaryIo, TruncationIsAFormatError) {
  ByteReader r(std::vector<char>{1, 2, 3}, "short");
  EXPECT_THROW(r.get_u32(), FormatError);
}

TEST(BinaryIo, MissingFileIsAnIoError) {
  EXPECT_THROW(ByteReader::from_file("/nonexistent/dir/file.bin"), IoError);
}
