#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qmap/empirics.hpp"

namespace {

using namespace qmap;

SymbolSeq random_seq(std::mt19937_64& gen, std::size_t n, std::size_t S) {
  std::uniform_int_distribution<Symbol> d(0, static_cast<Symbol>(S - 1));
  SymbolSeq u(n);
  for (auto& s : u) s = d(gen);
  return u;
}

// naive window counting keyed by the tuple itself
std::map<SymbolSeq, std::size_t> naive_counts(const SymbolSeq& u, int len) {
  std::map<SymbolSeq, std::size_t> out;
  for (std::size_t i = 0; i + len <= u.size(); ++i) ++out[SymbolSeq(u.begin() + i, u.begin() + i + len)];
  return out;
}

double plugin_entropy(const std::map<SymbolSeq, std::size_t>& counts) {
  double total = 0;
  for (const auto& [t, c] : counts) total += c;
  double h = 0;
  for (const auto& [t, c] : counts) h -= c / total * std::log2(c / total);
  return h;
}

TEST(KType, Examples) {
  const auto t = k_type(SymbolSeq{0, 0, 1}, 0);
  EXPECT_DOUBLE_EQ(t.prob(0), 2.0 / 3);
  EXPECT_DOUBLE_EQ(t.prob(1), 1.0 / 3);
  const auto t1 = k_type(SymbolSeq{0, 1, 0, 1}, 1);
  EXPECT_DOUBLE_EQ(t1.prob(0 * 2 + 1), 2.0 / 3);
  EXPECT_DOUBLE_EQ(t1.prob(1 * 2 + 0), 1.0 / 3);
  EXPECT_THROW(k_type(SymbolSeq{0, 1}, 2), InputError);
}

TEST(KType, MatchesNaiveCounting) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t S = 2 + trial % 4;
    const int k = trial % 4;
    const auto u = random_seq(gen, 10 + trial % 50, S);
    const auto t = k_type(u, k, S);
    const auto ref = naive_counts(u, k + 1);
    std::size_t total = 0;
    for (const auto& [tuple, c] : ref) {
      std::size_t idx = 0;
      for (Symbol s : tuple) idx = idx * S + s;
      EXPECT_EQ(t.counts.at(idx), c);
      total += c;
    }
    EXPECT_EQ(t.counts.size(), ref.size());
    EXPECT_EQ(total, u.size() - k);
    // marginalizing the last symbol gives the k-windows starting at positions 0..n-k-1
    if (k > 0) {
      const auto ctx = t.context_counts();
      const auto ref_ctx = naive_counts(SymbolSeq(u.begin(), u.end() - 1), k);
      EXPECT_EQ(ctx.size(), ref_ctx.size());
    }
  }
}

TEST(ComplexityCost, SpikeSlabAllZeros) {
  const double p = 0.2;
  const int b = 3;
  const auto w = weights_from_kernel(quantized_kernel(SourceModel::spike_slab(p), b));
  EXPECT_NEAR(complexity_cost(SymbolSeq(20, 0), w), -std::log2((1 - p) + p * std::ldexp(1.0, -b)), 1e-15);
}

TEST(ComplexityCost, SpikeSlabIdentity) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 300; ++t) {
    const double p = 0.05 + 0.9 * (t % 17) / 17.0;
    const int b = 1 + t % 5;
    const auto w = weights_from_kernel(quantized_kernel(SourceModel::spike_slab(p), b));
    const auto u = random_seq(gen, 5 + t % 40, std::size_t{1} << b);
    const double l0 = std::count_if(u.begin(), u.end(), [](Symbol s) { return s != 0; });
    // c_w + log2((1 - p) + p 2^-b) = (||u||_0 / n) alpha_b
    EXPECT_NEAR(complexity_cost(u, w) + std::log2((1 - p) + p * std::ldexp(1.0, -b)),
                l0 / u.size() * alpha_b(p, b), 1e-10);
  }
}

TEST(ComplexityCost, PcMarkovIdentity) {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 300; ++t) {
    const double p = 0.05 + 0.9 * (t % 13) / 13.0;
    const int b = 1 + t % 4;
    const auto w = weights_from_kernel(quantized_kernel(SourceModel::pc_markov(p), b));
    const auto u = random_seq(gen, 5 + t % 40, std::size_t{1} << b);
    EXPECT_NEAR(complexity_cost(u, w),
                alpha_b(p, b) * count_jumps(u) / (u.size() - 1.0) - std::log2(1 - p + p * std::ldexp(1.0, -b)), 1e-10);
  }
}

TEST(ComplexityCost, ForbiddenWindowIsInfinite) {
  QuantKernel q;
  q.alphabet = build_alphabet(0, 1, 1);
  q.k = 1;
  q.probs = {1.0, 0.0, 0.5, 0.5};
  q.marginal = stationary_contexts(q.probs, 2, 1);
  const auto w = weights_from_kernel(q);
  EXPECT_TRUE(std::isinf(complexity_cost(SymbolSeq{0, 1, 1}, w)));
  EXPECT_TRUE(std::isfinite(complexity_cost(SymbolSeq{1, 1, 0, 0}, w)));
}

TEST(CondEmpiricalEntropy, Examples) {
  EXPECT_EQ(cond_empirical_entropy(SymbolSeq(9, 2), 1), 0.0);
  EXPECT_NEAR(cond_empirical_entropy(SymbolSeq{0, 1, 0, 1, 0, 1, 0, 1}, 0), 1.0, 1e-15);
}

TEST(CondEmpiricalEntropy, ChainRuleOracle) {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 200; ++t) {
    const int k = t % 3;
    const auto u = random_seq(gen, 6 + t % 60, 2 + t % 3);
    // H(U^{k+1}) - H(U^k) over the same n-k windows
    const auto joint = naive_counts(u, k + 1);
    std::map<SymbolSeq, std::size_t> ctx;
    for (const auto& [tuple, c] : joint) ctx[SymbolSeq(tuple.begin(), tuple.end() - 1)] += c;
    EXPECT_NEAR(cond_empirical_entropy(u, k), plugin_entropy(joint) - plugin_entropy(ctx), 1e-12);
  }
}

TEST(Decomposition, CostIsEntropyPlusKl) {
  std::mt19937_64 gen(33);
  std::uniform_real_distribution<double> d(0.05, 1.0);
  for (int t = 0; t < 200; ++t) {
    QuantKernel q;
    q.alphabet = build_alphabet(0, 1, 1 + t % 2);
    q.k = t % 3;
    const std::size_t S = q.symbols();
    const std::size_t C = checked_pow(S, q.k, 1 << 20);
    q.probs.resize(C * S);
    for (std::size_t c = 0; c < C; ++c) {
      double row = 0;
      for (std::size_t a = 0; a < S; ++a) row += (q.probs[c * S + a] = d(gen));
      for (std::size_t a = 0; a < S; ++a) q.probs[c * S + a] /= row;
    }
    q.marginal = stationary_contexts(q.probs, S, q.k);
    const auto w = weights_from_kernel(q);
    const auto u = random_seq(gen, 10 + t % 50, S);
    const double c = complexity_cost(u, w);
    EXPECT_NEAR(c, cond_empirical_entropy(u, q.k) + context_weighted_kl(u, q), 1e-10);
    EXPECT_GE(c + 1e-12, cond_empirical_entropy(u, q.k));
  }
}

TEST(CountJumps, Examples) {
  EXPECT_EQ(count_jumps(SymbolSeq{0, 0, 1, 1, 0}), 2u);
  EXPECT_EQ(count_jumps(SymbolSeq(7, 3)), 0u);
  EXPECT_EQ(count_jumps(SymbolSeq{0, 1, 0, 1, 0, 1}), 5u);
  EXPECT_THROW(count_jumps(SymbolSeq{1}), InputError);
}

TEST(Divergence, Basics) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(l1_distance(p, p), 0.0);
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_TRUE(std::isinf(kl_divergence(p, std::vector<double>{0.5, 0.5, 0.0})));
  EXPECT_EQ(kl_divergence(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}), 1.0);
}

TEST(Divergence, ContinuityBounds) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 2000; ++t) {
    const std::size_t U = 2 + t % 6;
    std::vector<double> q(U), p(U);
    double sq = 0;
    for (auto& v : q) sq += (v = 0.05 + d(gen));
    for (auto& v : q) v /= sq;
    // p = q plus a small perturbation that keeps p << q
    double sp = 0;
    for (std::size_t i = 0; i < U; ++i) sp += (p[i] = q[i] * (1 + 0.3 * (d(gen) - 0.5)));
    for (auto& v : p) v /= sp;
    const double eps = l1_distance(p, q);
    if (!(eps > 0 && eps <= 0.5)) continue;
    const double qmin = *std::min_element(q.begin(), q.end());
    const double base = -eps * std::log2(eps) + eps * std::log2(double(U));
    EXPECT_LE(kl_divergence(p, q), base - eps * std::log2(qmin) + 1e-12);
    EXPECT_LE(std::abs(entropy_bits(p) - entropy_bits(q)), base + 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(Lz78, Examples) {
  const auto ph = lz78_parse(SymbolSeq{0, 0, 0});
  ASSERT_EQ(ph.size(), 2u);
  EXPECT_EQ(lz78_length(SymbolSeq{0, 0, 0}, 2), 3u);
  EXPECT_EQ(lz78_length(SymbolSeq{2}, 5), 3u);
  EXPECT_EQ(lz78_length(SymbolSeq{0}, 1), 0u);
}

TEST(Lz78, ParseIsDecodable) {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 300; ++t) {
    const auto u = random_seq(gen, 1 + t % 80, 2 + t % 3);
    const auto ph = lz78_parse(u);
    EXPECT_EQ(lz78_decode(ph), u);
  }
}

TEST(Lz78, CodelengthNearEmpiricalEntropy) {
  // (1/(n b)) l_LZ <= Hhat_k / b + b(kb + b + 3) / ((1 - eps) log2 n - b), eps taken as 0.1
  const std::size_t n = std::size_t{1} << 14;
  const int b = 1, k = 1;
  QuantKernel q;
  q.alphabet = build_alphabet(0, 1, b);
  q.k = k;
  q.probs = {0.95, 0.05, 0.1, 0.9};
  q.marginal = stationary_contexts(q.probs, 2, 1);
  const auto x = sample_path(SourceModel::table_markov(q), n, 5);
  const auto u = quantize_vector(x, q.alphabet);
  const double lhs = lz78_length(u, 2) / double(n * b);
  const double slack = b * (k * b + b + 3.0) / (0.9 * std::log2(double(n)) - b);
  EXPECT_LE(lhs, cond_empirical_entropy(u, k) / b + slack);
  EXPECT_LT(lhs, 1.0);
}

TEST(ComplexityCost, ConvergesToEntropyRate) {
  for (const auto& model : {SourceModel::spike_slab(0.1), SourceModel::pc_markov(0.1)}) {
    const int b = 4;
    const auto q = quantized_kernel(model, b);
    const auto w = weights_from_kernel(q);
    const auto x = sample_path(model, std::size_t{1} << 14, 31);
    const auto u = quantize_vector(x, q.alphabet);
    EXPECT_NEAR(complexity_cost(u, w) / b, cond_entropy(q) / b, 0.05);
  }
}

}  // namespace
