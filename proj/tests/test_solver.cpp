#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qmap/qmap.hpp"

namespace {

using namespace qmap;

TEST(Step, PairingWithScale) {
  const auto U = gen_gaussian(8, 16, Scale::unit, 1);
  const auto N = gen_gaussian(8, 16, Scale::normalized, 1);
  EXPECT_DOUBLE_EQ(paired_step(U), 1.0 / 8);
  EXPECT_DOUBLE_EQ(paired_step(N), 2.0);
  PgdConfig cfg;
  EXPECT_DOUBLE_EQ(resolve_step(U, cfg), 1.0 / 8);
  cfg.mu = 2.0;
  EXPECT_THROW(resolve_step(U, cfg), InputError);
  EXPECT_DOUBLE_EQ(resolve_step(N, cfg), 2.0);
  cfg.allow_custom_step = true;
  EXPECT_DOUBLE_EQ(resolve_step(U, cfg), 2.0);
  cfg.mu = -1.0;
  EXPECT_THROW(resolve_step(U, cfg), InputError);
  const auto E = SenseMatrix::from_matrix(Matrix::Identity(3, 3));
  EXPECT_THROW(resolve_step(E, PgdConfig{}), InputError);
}

TEST(Pgd, IdentityConvergesInOneStep) {
  const auto a = build_alphabet(0, 1, 3);
  const auto w = weights_from_kernel(quantized_kernel(SourceModel::spike_slab(0.3), 3));
  const auto A = SenseMatrix::from_matrix(Matrix::Identity(6, 6));
  const std::vector<double> x{0.0, 0.5, 0.0, 0.25, 0.875, 0.0};
  const auto y = to_std(measure(A, x, 0, 0));
  PgdConfig cfg;
  cfg.mu = 1.0;
  cfg.projector = LagrangianProjector{0.0};
  const auto r = pgd_solve(A, y, w, a, cfg, std::span<const double>(x));
  EXPECT_EQ(r.estimate, x);
  EXPECT_EQ(r.trace.status, PgdStatus::converged);
  EXPECT_EQ(r.trace.iterations, 2);
  EXPECT_EQ(r.trace.converged_at, 1);
  EXPECT_EQ(r.trace.records.back().err_quantized, 0.0);
  EXPECT_EQ(r.trace.records.back().residual, 0.0);
  ASSERT_EQ(r.trace.records.size(), 3u);
  EXPECT_EQ(r.trace.records[0].t, 0);
}

TEST(Pgd, SquareMatrixRecoversSparseGridSignal) {
  // m = n with normalized scaling and the paired step n/m = 1
  const int n = 32, b = 4;
  const auto model = SourceModel::spike_slab(0.1);
  const auto kernel = quantized_kernel(model, b);
  const auto w = weights_from_kernel(kernel);
  const auto x = quantize_values(sample_path(model, n, 3), b);
  const auto A = SenseMatrix::from_matrix(Matrix::Identity(n, n));
  const auto y = to_std(measure(A, x, 0, 0));
  PgdConfig cfg;
  cfg.mu = 1.0;
  cfg.projector = L0Projector{static_cast<std::size_t>(l0_norm(x))};
  const auto r = pgd_solve(A, y, w, kernel.alphabet, cfg, std::span<const double>(x));
  EXPECT_EQ(r.estimate, x);
}

TEST(Pgd, ConstrainedIteratesAreFeasible) {
  const int n = 40, m = 30, b = 3;
  const auto model = SourceModel::pc_markov(0.1);
  const auto kernel = quantized_kernel(model, b);
  const auto w = weights_from_kernel(kernel);
  const double gamma = default_gamma(kernel, 1, 0.1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = sample_path(model, n, seed);
    const auto A = gen_gaussian(m, n, Scale::normalized, seed + 100);
    const auto y = to_std(measure(A, x, 0.01, seed));
    PgdConfig cfg;
    cfg.max_iters = 30;
    cfg.projector = ConstrainedProjector{gamma};
    const auto r = pgd_solve(A, y, w, kernel.alphabet, cfg, std::span<const double>(x));
    for (std::size_t t = 1; t < r.trace.records.size(); ++t) EXPECT_LE(r.trace.records[t].cost, gamma + 1e-12);
    EXPECT_LE(complexity_cost(r.symbols, w), gamma + 1e-12);
    EXPECT_EQ(r.trace.records.back().hash, sequence_hash(r.symbols));
  }
}

TEST(Pgd, DeterministicTrace) {
  const auto kernel = quantized_kernel(SourceModel::spike_slab(0.1), 4);
  const auto w = weights_from_kernel(kernel);
  const auto x = sample_path(SourceModel::spike_slab(0.1), 64, 8);
  const auto A = gen_gaussian(40, 64, Scale::unit, 8);
  const auto y = to_std(measure(A, x, 0.1, 8));
  PgdConfig cfg;
  cfg.projector = L0Projector{10};
  cfg.max_iters = 25;
  const auto r1 = pgd_solve(A, y, w, kernel.alphabet, cfg, std::span<const double>(x));
  const auto r2 = pgd_solve(A, y, w, kernel.alphabet, cfg, std::span<const double>(x));
  ASSERT_EQ(r1.trace.records.size(), r2.trace.records.size());
  for (std::size_t t = 0; t < r1.trace.records.size(); ++t) {
    EXPECT_EQ(r1.trace.records[t].hash, r2.trace.records[t].hash);
    EXPECT_EQ(r1.trace.records[t].residual, r2.trace.records[t].residual);
  }
}

TEST(Pgd, InfeasibleBudgetNamesIteration) {
  const auto kernel = quantized_kernel(SourceModel::spike_slab(0.1), 2);
  const auto w = weights_from_kernel(kernel);
  const auto A = gen_gaussian(4, 8, Scale::unit, 1);
  const auto y = to_std(measure(A, std::vector<double>(8, 0.25), 0, 0));
  PgdConfig cfg;
  cfg.projector = ConstrainedProjector{0.01};
  try {
    pgd_solve(A, y, w, kernel.alphabet, cfg);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.iteration(), 1);
    EXPECT_NEAR(e.min_cost(), -std::log2(0.9 + 0.1 * 0.25), 1e-12);
  }
}

TEST(Pgd, RejectsBadConfig) {
  const auto kernel = quantized_kernel(SourceModel::spike_slab(0.1), 2);
  const auto w = weights_from_kernel(kernel);
  const auto A = gen_gaussian(4, 8, Scale::unit, 1);
  const std::vector<double> y(4, 0.0);
  PgdConfig cfg;
  cfg.max_iters = 0;
  EXPECT_THROW(pgd_solve(A, y, w, kernel.alphabet, cfg), InputError);
  EXPECT_THROW(pgd_solve(A, std::vector<double>(3), w, kernel.alphabet, PgdConfig{}), InputError);
}

// Independent Lagrangian Q-MAP oracle: scans X_b^n in a shuffled order and
// resolves ties toward the lexicographically smaller sequence.
SymbolSeq shuffled_lagrangian_oracle(const SenseMatrix& A, const std::vector<double>& y, const WeightTable& w,
                                     const QuantAlphabet& a, double lambda, std::mt19937_64& gen) {
  const std::size_t n = static_cast<std::size_t>(A.cols());
  const std::size_t total = checked_pow(a.size(), static_cast<int>(n), 1 << 20);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), gen);
  SymbolSeq best;
  double best_obj = kInf;
  for (std::size_t idx : order) {
    const SymbolSeq u = tuple_symbols(idx, a.size(), static_cast<int>(n));
    const double cost = complexity_cost(u, w);
    if (!std::isfinite(cost)) continue;
    const Vector r = A.a * to_eigen(a.to_values(u)) - to_eigen(y);
    const double obj = cost + lambda / double(n * n) * r.squaredNorm();
    if (best.empty() || obj < best_obj || (obj == best_obj && u < best)) {
      best_obj = obj;
      best = u;
    }
  }
  return best;
}

TEST(QmapBruteForce, LagrangianMatchesShuffledOracle) {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 40; ++t) {
    const int b = 1 + t % 2;
    const std::size_t n = b == 1 ? 6 : 4;
    const auto model = t % 3 ? SourceModel::spike_slab(0.3) : SourceModel::pc_markov(0.3);
    const auto kernel = quantized_kernel(model, b);
    const auto w = weights_from_kernel(kernel);
    const auto A = gen_gaussian(3, static_cast<Eigen::Index>(n), Scale::unit, 500 + t);
    const auto x = sample_path(model, n, 900 + t);
    const auto y = to_std(measure(A, x, 0.05, t));
    const double lambda = std::vector<double>{0.5, 5, 50, 500}[t % 4];
    const auto ref = shuffled_lagrangian_oracle(A, y, w, kernel.alphabet, lambda, gen);
    const auto u = qmap_lagrangian_bruteforce(A, y, w, kernel.alphabet, lambda);
    EXPECT_NEAR(qmap_lagrangian_objective(A, y, w, kernel.alphabet, u, lambda),
                qmap_lagrangian_objective(A, y, w, kernel.alphabet, ref, lambda), 1e-12);
  }
}

TEST(QmapBruteForce, ConstrainedExamples) {
  const auto a = build_alphabet(0, 1, 1);
  const auto w = weights_from_kernel(quantized_kernel(SourceModel::spike_slab(0.2), 1));
  const auto A = SenseMatrix::from_matrix(Matrix::Identity(4, 4));
  const std::vector<double> y{0.5, 0.0, 0.5, 0.5};
  // unconstrained optimum is y itself
  EXPECT_EQ(qmap_bruteforce(A, y, w, a, kInf), (SymbolSeq{1, 0, 1, 1}));
  // budget for one nonzero: three tied sequences, the lexicographically first wins
  const double w0 = w.at(0, 0), w1 = w.at(0, 1);
  EXPECT_EQ(qmap_bruteforce(A, y, w, a, (3 * w0 + w1) / 4), (SymbolSeq{0, 0, 0, 1}));
  EXPECT_THROW(qmap_bruteforce(A, y, w, a, w0 / 2), InfeasibleError);
  EXPECT_THROW(qmap_bruteforce(SenseMatrix::from_matrix(Matrix::Identity(21, 21)), std::vector<double>(21), w, a, 1),
               SizeError);
}

TEST(QmapBruteForce, PgdNeverBeatsOracle) {
  const int n = 6, m = 4, b = 1;
  const auto model = SourceModel::spike_slab(0.3);
  const auto kernel = quantized_kernel(model, b);
  const auto w = weights_from_kernel(kernel);
  const double gamma = default_gamma(kernel, 0, 0.1);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto A = gen_gaussian(m, n, Scale::unit, s);
    const auto x = sample_path(model, n, s + 50);
    const auto y = to_std(measure(A, x, 0, 0));
    const auto ref = qmap_bruteforce(A, y, w, kernel.alphabet, gamma);
    PgdConfig cfg;
    cfg.projector = ConstrainedProjector{gamma};
    cfg.max_iters = 50;
    const auto r = pgd_solve(A, y, w, kernel.alphabet, cfg);
    EXPECT_LE(complexity_cost(r.symbols, w), gamma + 1e-12);
    EXPECT_GE(residual_sq(A, r.estimate, y) + 1e-12, residual_sq(A, kernel.alphabet.to_values(ref), y));
  }
}

TEST(Presets, Values) {
  EXPECT_EQ(preset_bits(65536, 1.0), 4);
  EXPECT_DOUBLE_EQ(preset_lambda(65536, 1.0), 256.0);
  EXPECT_NEAR(contraction_floor_unit(256, 128, 6), 2 * std::pow(2 + std::sqrt(2.0), 2) / 64, 1e-15);
  EXPECT_NEAR(contraction_floor_normalized(256, 128, 6),
              2 * std::pow(16 + 2 * std::sqrt(128.0), 2) / 128 / 64, 1e-12);
}

TEST(DefaultGamma, SpikeSlab) {
  const auto kernel = quantized_kernel(SourceModel::spike_slab(0.1), 4);
  // one context, so the kernel row is the pmf of [X]_b
  EXPECT_NEAR(default_gamma(kernel, 0, 0.1), entropy_bits(kernel.probs) + 0.4, 1e-12);
}

}  // namespace
