#include <gtest/gtest.h>

#include <random>
#include <set>

#include "pairgrpo/rng.hpp"

using namespace pairgrpo;

TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

static_assert(std::uniform_random_bit_generator<Rng>);

TEST(Rng, SameSeedAndStreamRepeat) {
  Rng a(42, StreamPurpose::kTrainBatch, 7);
  Rng b(42, StreamPurpose::kTrainBatch, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsAndSeedsDiffer) {
  Rng a(42, StreamPurpose::kTrainBatch, 7);
  Rng b(42, StreamPurpose::kTrainBatch, 8);
  Rng c(43, StreamPurpose::kTrainBatch, 7);
  Rng d(42, StreamPurpose::kVarianceSample, 7);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Rng, StreamIdSeparatesPurposes) {
  EXPECT_NE(make_stream_id(StreamPurpose::kTrainBatch, 0),
            make_stream_id(StreamPurpose::kEquivalence, 0));
  EXPECT_NE(make_stream_id(StreamPurpose::kTrainBatch, 1),
            make_stream_id(StreamPurpose::kTrainBatch, 2));
}

TEST(Rng, UniformMoments) {
  Rng rng(1, StreamPurpose::kGeneric, 0);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  // 5 sigma on the mean of U(0,1): sigma = sqrt(1/12/n).
  EXPECT_NEAR(mean, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
  Rng rng(2, StreamPurpose::kGeneric, 0);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, BelowCoversRangeEvenly) {
  Rng rng(3, StreamPurpose::kGeneric, 0);
  const int n = 70000;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < n; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
}
