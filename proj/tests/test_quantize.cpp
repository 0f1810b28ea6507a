#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qmap/quantize.hpp"

namespace {

using qmap::quantize_scalar;

// floor(x) plus the binary digits of the fraction, peeled off one at a time.
double digitwise(double x, int b) {
  const double whole = std::floor(x);
  double frac = x - whole;
  double out = whole;
  double place = 0.5;
  for (int i = 0; i < b; ++i) {
    frac *= 2.0;
    if (frac >= 1.0) {
      out += place;
      frac -= 1.0;
    }
    place /= 2.0;
  }
  return out;
}

TEST(QuantizeScalar, Examples) {
  EXPECT_EQ(quantize_scalar(0.75, 1), 0.5);
  EXPECT_EQ(quantize_scalar(1.0, 3), 1.0);
  EXPECT_EQ(quantize_scalar(-0.3, 2), -0.5);
  EXPECT_EQ(digitwise(-0.3, 2), -0.5);
}

TEST(QuantizeScalar, MatchesDigitOracle) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> d(-20.0, 20.0);
  for (int t = 0; t < 20000; ++t) {
    const double x = d(gen);
    const int b = 1 + t % 24;
    ASSERT_EQ(quantize_scalar(x, b), digitwise(x, b)) << x << " b=" << b;
  }
}

TEST(QuantizeScalar, Properties) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (int t = 0; t < 5000; ++t) {
    const double x = d(gen), y = d(gen);
    const int b = 1 + t % 16;
    const double q = quantize_scalar(x, b);
    EXPECT_EQ(quantize_scalar(q, b), q);
    EXPECT_GE(x - q, 0.0);
    EXPECT_LT(x - q, std::ldexp(1.0, -b));
    if (x <= y) {
      EXPECT_LE(q, quantize_scalar(y, b));
    }
    EXPECT_GE(quantize_scalar(x, b + 1), q);
  }
}

TEST(QuantizeScalar, DyadicPointsAreFixed) {
  for (int j = -64; j <= 64; ++j) EXPECT_EQ(quantize_scalar(j / 16.0, 4), j / 16.0);
}

TEST(QuantizeScalar, Errors) {
  EXPECT_THROW(quantize_scalar(NAN, 2), qmap::InputError);
  EXPECT_THROW(quantize_scalar(INFINITY, 2), qmap::InputError);
  EXPECT_THROW(quantize_scalar(0.1, 0), qmap::InputError);
}

TEST(Alphabet, Examples) {
  const auto a1 = qmap::build_alphabet(0, 1, 1);
  EXPECT_EQ(std::vector<double>(a1.values().begin(), a1.values().end()), (std::vector<double>{0, 0.5}));
  const auto a2 = qmap::build_alphabet(0, 1, 2);
  EXPECT_EQ(std::vector<double>(a2.values().begin(), a2.values().end()), (std::vector<double>{0, 0.25, 0.5, 0.75}));
  const auto a3 = qmap::build_alphabet(-1, 1, 1);
  EXPECT_EQ(std::vector<double>(a3.values().begin(), a3.values().end()), (std::vector<double>{-1, -0.5, 0, 0.5}));
  EXPECT_THROW(qmap::build_alphabet(1, 1, 2), qmap::InputError);
  EXPECT_THROW(qmap::build_alphabet(2, 1, 2), qmap::InputError);
}

TEST(Alphabet, Invariants) {
  for (int b = 1; b <= 8; ++b) {
    for (double lo : {-2.0, -0.3, 0.0, 0.7}) {
      const double hi = lo + 1.7;
      const auto a = qmap::build_alphabet(lo, hi, b);
      const auto v = a.values();
      EXPECT_LE(static_cast<double>(a.size()), (hi - lo) * std::ldexp(1.0, b) + 2);
      for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(quantize_scalar(v[i], b), v[i]);
        EXPECT_EQ(a.index_of(v[i]), i);
        if (i > 0) {
          EXPECT_EQ(v[i] - v[i - 1], std::ldexp(1.0, -b));
        }
      }
      // every x in [lo, hi] lands in a cell whose value is [x]_b (last cell for hi)
      EXPECT_EQ(a.quantize(hi), a.size() - 1);
    }
  }
}

TEST(Alphabet, NearestTiesGoLow) {
  const auto a = qmap::build_alphabet(0, 1, 1);
  EXPECT_EQ(a.nearest(0.25), 0u);
  EXPECT_EQ(a.nearest(0.2500001), 1u);
  EXPECT_EQ(a.nearest(-3.0), 0u);
  EXPECT_EQ(a.nearest(7.0), 1u);
}

TEST(QuantizeVector, Examples) {
  const auto a1 = qmap::build_alphabet(0, 1, 1);
  EXPECT_EQ(qmap::quantize_vector(std::vector<double>{0.1, 0.9}, a1), (qmap::SymbolSeq{0, 1}));
  EXPECT_EQ(qmap::quantize_vector(std::vector<double>(5, 0.0), qmap::build_alphabet(0, 1, 6)), qmap::SymbolSeq(5, 0));
  const auto a2 = qmap::build_alphabet(0, 1, 2);
  EXPECT_EQ(qmap::quantize_vector(std::vector<double>{0.26, 0.74, 0.5}, a2), (qmap::SymbolSeq{1, 2, 2}));
}

TEST(QuantizeVector, ErrorNamesIndex) {
  const auto a = qmap::build_alphabet(0, 1, 2);
  try {
    qmap::quantize_vector(std::vector<double>{0.1, 0.2, 1.5}, a);
    FAIL();
  } catch (const qmap::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

}  // namespace
