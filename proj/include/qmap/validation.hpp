#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "empirics.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "quantize.hpp"
#include "rng.hpp"
#include "sources.hpp"

namespace qmap {

inline constexpr double kConcentrationC = 1.0 / (2.0 * std::numbers::ln2);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Normal approximation with continuity correction, clamped to [0, 1].
inline Interval binomial_interval(std::size_t hits, std::size_t trials, double z) {
  if (trials == 0) throw InputError("binomial_interval: trials must be >= 1");
  const double N = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / N;
  const double half = z * std::sqrt(p * (1.0 - p) / N) + 0.5 / N;
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ999 = 3.290526731491926;  // two-sided 99.9%

struct TailEstimate {
  std::size_t trials = 0;
  std::size_t hits = 0;
  double estimate = 0.0;
  Interval ci95;
  double bound = 1.0;
  double log2_bound = 0.0;

  // The bound is violated only if it lies below the 99.9% interval.
  bool respects_bound() const {
    if (!(bound < 1.0)) return true;
    return binomial_interval(hits, trials, kZ999).lo <= bound;
  }
};

inline TailEstimate make_estimate(std::size_t hits, std::size_t trials, double log2_bound) {
  TailEstimate t;
  t.trials = trials;
  t.hits = hits;
  t.estimate = static_cast<double>(hits) / static_cast<double>(trials);
  t.ci95 = binomial_interval(hits, trials, kZ95);
  t.log2_bound = log2_bound;
  t.bound = std::exp2(log2_bound);
  return t;
}

namespace detail {

template <typename Trial>
std::size_t count_hits(std::size_t trials, std::uint64_t seed, unsigned jobs, Trial&& trial) {
  if (trials == 0) throw InputError("trials must be >= 1");
  std::vector<char> hit(trials, 0);
  parallel_for(trials, jobs, [&](std::size_t i) {
    Engine eng = make_engine(derive_seed(seed, i));
    hit[i] = trial(eng) ? 1 : 0;
  });
  std::size_t total = 0;
  for (char h : hit) total += static_cast<std::size_t>(h);
  return total;
}

}  // namespace detail

// log2 of the k-type deviation bound
//   2^{c eps^2 / d} (k+g) n^{|Z|^k} 2^{-c eps^2 n / (8(k+g))},
// with d = 4 for quantized Markov chains and d = 8 for Psi*-mixing sources.
inline double log2_deviation_bound(std::size_t n, int k, int g, double epsilon, std::size_t alphabet_size,
                                   bool markov) {
  if (k < 1 || g < 1) throw InputError("deviation bound: need k >= 1 and g >= 1");
  const double c = kConcentrationC;
  const double e2 = epsilon * epsilon;
  const double kg = static_cast<double>(k + g);
  const double types = std::pow(static_cast<double>(alphabet_size), k);
  return c * e2 / (markov ? 4.0 : 8.0) + std::log2(kg) + types * std::log2(static_cast<double>(n)) -
         c * e2 * static_cast<double>(n) / (8.0 * kg);
}

// l1 distance between the order-k empirical law of u (n-k+1 windows of length
// k) and a dense reference law over S^k tuples.
inline double ktype_l1_deviation(std::span<const Symbol> u, int k, std::span<const double> law, std::size_t S) {
  if (k < 1) throw InputError("ktype_l1_deviation: k must be >= 1");
  const KType t = k_type(u, k - 1, S);
  double l1 = 0.0;
  for (double m : law) l1 += m;
  const double N = static_cast<double>(t.windows());
  for (const auto& [idx, c] : t.counts) {
    const double p = static_cast<double>(c) / N;
    l1 += std::abs(p - law[idx]) - law[idx];
  }
  return std::max(l1, 0.0);
}

// P(||p^(k)(.|Z^n) - mu_k^(b)||_1 >= epsilon) for Z = [X]_b.
inline TailEstimate mc_empirical_deviation(const SourceModel& model, std::size_t n, int k, int b, double epsilon,
                                           std::size_t trials, std::uint64_t seed, int g = 1,
                                           unsigned jobs = 1) {
  if (k < 1) throw InputError("mc_empirical_deviation: k must be >= 1");
  if (n <= static_cast<std::size_t>(k)) throw InputError("mc_empirical_deviation: need n > k");
  const QuantKernel kernel = quantized_kernel(model, b);
  const std::vector<double> law = tuple_law(kernel, k);
  const QuantAlphabet& alphabet = kernel.alphabet;
  const std::size_t S = alphabet.size();
  const std::size_t hits = detail::count_hits(trials, seed, jobs, [&](Engine& eng) {
    const std::uint64_t path_seed = eng();
    const auto x = sample_path(model, n, path_seed);
    const SymbolSeq z = quantize_vector(x, alphabet);
    return ktype_l1_deviation(z, k, law, S) >= epsilon;
  });
  const bool markov = model.kind() != SourceKind::spike_slab;
  return make_estimate(hits, trials, log2_deviation_bound(n, k, g, epsilon, S, markov));
}

struct ChiSquareTails {
  TailEstimate upper;                 // P(sum U_i^2 > m (1 + tau))
  std::optional<TailEstimate> lower;  // P(sum U_i^2 < m (1 - tau)), tau < 1 only
};

inline ChiSquareTails chi_square_tail(std::size_t m, double tau, std::size_t trials, std::uint64_t seed,
                                      unsigned jobs = 1) {
  if (m < 1) throw InputError("chi_square_tail: m must be >= 1");
  if (!(tau > 0.0)) throw InputError("chi_square_tail: tau must be > 0");
  const double M = static_cast<double>(m);
  std::vector<double> stat(trials);
  if (trials == 0) throw InputError("trials must be >= 1");
  parallel_for(trials, jobs, [&](std::size_t i) {
    Engine eng = make_engine(derive_seed(seed, i));
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double z = standard_normal(eng);
      s += z * z;
    }
    stat[i] = s;
  });
  std::size_t up = 0;
  std::size_t down = 0;
  for (double s : stat) {
    up += s > M * (1.0 + tau);
    down += s < M * (1.0 - tau);
  }
  const double log2e = std::numbers::log2e;
  ChiSquareTails out;
  out.upper = make_estimate(up, trials, -M * (tau - std::log1p(tau)) / 2.0 * log2e);
  if (tau < 1.0) out.lower = make_estimate(down, trials, M * (tau + std::log1p(-tau)) / 2.0 * log2e);
  return out;
}

namespace detail {

// Maximizes a concave function on [lo, hi] by golden-section search.
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol, double* arg = nullptr) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    }
  }
  const double x = 0.5 * (a + b);
  const double fx = f(x);
  double best = fx, best_x = x;
  if (fc > best) best = fc, best_x = c;
  if (fd > best) best = fd, best_x = d;
  if (arg) *arg = best_x;
  return best;
}

}  // namespace detail

// ln of the inner-product tail bound e^{m(alpha - tau)s - (m/2) ln((1 + s alpha)^2 - s^2)}, per unit m.
inline double inner_product_exponent(double alpha, double tau, double s) {
  const double q = (1.0 + s * alpha) * (1.0 + s * alpha) - s * s;
  if (!(q > 0.0)) return kInf;
  return (alpha - tau) * s - 0.5 * std::log(q);
}

// min over s in (0, 1/(1 - alpha)) of the exponent; the exponent is convex in s.
inline double inner_product_min_exponent(double alpha, double tau) {
  const double s_max = 1.0 / (1.0 - alpha);
  double best = 0.0;  // s -> 0 gives the trivial bound 1
  const int grid = 400;
  int arg = -1;
  for (int i = 1; i < grid; ++i) {
    const double v = inner_product_exponent(alpha, tau, s_max * i / grid);
    if (v < best) best = v, arg = i;
  }
  if (arg < 0) return best;
  const double lo = s_max * (arg - 1) / grid, hi = s_max * (arg + 1) / grid;
  const double refined =
      -detail::golden_max([&](double s) { return -inner_product_exponent(alpha, tau, s); }, lo, hi, 1e-10);
  return std::min(best, refined);
}

struct InnerProductTail {
  TailEstimate tail;       // bound: minimized over s
  double rate_bound;  // 2^{-0.05 m}
};

// P((1/m) <A u, A v> - alpha <= -tau) for unit u, v with <u, v> = alpha and
// A an m x 2 block of i.i.d. N(0, 1) entries (u = e1, v = alpha e1 + beta e2).
inline InnerProductTail inner_product_tail(double alpha, std::size_t m, double tau, std::size_t trials,
                                           std::uint64_t seed, unsigned jobs = 1) {
  if (!(alpha > -1.0 && alpha < 1.0)) throw InputError("inner_product_tail: alpha must lie in (-1, 1)");
  if (m < 1) throw InputError("inner_product_tail: m must be >= 1");
  const double beta = std::sqrt(1.0 - alpha * alpha);
  const double M = static_cast<double>(m);
  const std::size_t hits = detail::count_hits(trials, seed, jobs, [&](Engine& eng) {
    double dot = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double a1 = standard_normal(eng);
      const double a2 = standard_normal(eng);
      dot += a1 * (alpha * a1 + beta * a2);
    }
    return dot / M - alpha <= -tau;
  });
  const double log2_bound = M * inner_product_min_exponent(alpha, tau) * std::numbers::log2e;
  return {make_estimate(hits, trials, log2_bound), std::exp2(-0.05 * M)};
}

// f(alpha, s) = log2(e) (1/2 ln((1 + s alpha)^2 - s^2) - (alpha - 0.45) s).
inline double f_alpha_s(double alpha, double s) {
  const double q = (1.0 + s * alpha) * (1.0 + s * alpha) - s * s;
  if (!(q > 0.0)) return -kInf;
  return std::numbers::log2e * (0.5 * std::log(q) - (alpha - 0.45) * s);
}

// max over s in (0, 1/(1 - alpha)); f is concave in s, so the grid maximum is
// refined by golden section inside its neighbouring cells.
inline double f_max_over_s(double alpha, std::span<const double> s_fractions, double* s_star = nullptr) {
  const double s_max = 1.0 / (1.0 - alpha);
  double best = -kInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < s_fractions.size(); ++i) {
    const double v = f_alpha_s(alpha, s_fractions[i] * s_max);
    if (v > best) best = v, arg = i;
  }
  const double lo = (arg == 0 ? 0.0 : s_fractions[arg - 1]) * s_max;
  const double hi = (arg + 1 == s_fractions.size() ? 1.0 : s_fractions[arg + 1]) * s_max;
  double s = s_fractions.empty() ? 0.0 : s_fractions[arg] * s_max;
  const double refined = detail::golden_max([&](double v) { return f_alpha_s(alpha, v); }, lo, hi, 1e-6, &s);
  if (refined > best) {
    best = refined;
  } else if (!s_fractions.empty()) {
    s = s_fractions[arg] * s_max;
  }
  if (s_star) *s_star = s;
  return best;
}

struct Minimax {
  double value;
  double alpha;
  double s;
};

// min over alpha of max over s of f(alpha, s). s is given as fractions in
// (0, 1) of the admissible range (0, 1/(1 - alpha)).
inline Minimax f_minimax_detail(std::span<const double> alpha_grid, std::span<const double> s_fractions) {
  if (alpha_grid.empty() || s_fractions.empty()) throw InputError("f_minimax: empty grid");
  for (double a : alpha_grid) {
    if (!(a > -1.0 && a < 1.0)) throw InputError("f_minimax: alpha grid must lie in (-1, 1)");
  }
  for (double t : s_fractions) {
    if (!(t > 0.0 && t < 1.0)) throw InputError("f_minimax: s fractions must lie in (0, 1)");
  }
  Minimax out{kInf, 0.0, 0.0};
  for (double a : alpha_grid) {
    double s = 0.0;
    const double v = f_max_over_s(a, s_fractions, &s);
    if (v < out.value) out = {v, a, s};
  }
  return out;
}

inline double f_minimax(std::span<const double> alpha_grid, std::span<const double> s_fractions) {
  return f_minimax_detail(alpha_grid, s_fractions).value;
}

inline std::vector<double> open_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * (static_cast<double>(i) + 1.0) / (static_cast<double>(points) + 1.0);
  }
  return g;
}

struct GaussianProjectionCheck {
  std::size_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double ks = 0.0;           // sup |F_emp - Phi|
  double correlation = 0.0;  // corr(<U, V>/||U||, ||U||)
  bool ks_ok = false;        // ks < 0.02
  bool corr_ok = false;      // |correlation| < 0.03
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// T = <U, V> / ||U|| for independent U, V ~ N(0, I_n) should be N(0, 1) and
// independent of ||U||.
inline GaussianProjectionCheck gaussian_projection_check(std::size_t n, std::size_t trials, std::uint64_t seed,
                                                         unsigned jobs = 1) {
  if (n < 2) throw InputError("gaussian_projection_check: n must be >= 2");
  if (trials < 2) throw InputError("gaussian_projection_check: trials must be >= 2");
  std::vector<double> t(trials), norm(trials);
  parallel_for(trials, jobs, [&](std::size_t i) {
    Engine eng = make_engine(derive_seed(seed, i));
    double uu = 0.0, uv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = standard_normal(eng);
      const double v = standard_normal(eng);
      uu += u * u;
      uv += u * v;
    }
    norm[i] = std::sqrt(uu);
    t[i] = uv / norm[i];
  });
  GaussianProjectionCheck out;
  out.samples = trials;
  const double N = static_cast<double>(trials);
  double mt = 0.0, mn = 0.0;
  for (std::size_t i = 0; i < trials; ++i) mt += t[i], mn += norm[i];
  mt /= N;
  mn /= N;
  double vt = 0.0, vn = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    vt += (t[i] - mt) * (t[i] - mt);
    vn += (norm[i] - mn) * (norm[i] - mn);
    cov += (t[i] - mt) * (norm[i] - mn);
  }
  out.mean = mt;
  out.variance = vt / (N - 1.0);
  out.correlation = cov / std::sqrt(vt * vn);
  std::vector<double> sorted = t;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double F = normal_cdf(sorted[i]);
    ks = std::max({ks, static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N});
  }
  out.ks = ks;
  out.ks_ok = ks < 0.02;
  out.corr_ok = std::abs(out.correlation) < 0.03;
  return out;
}

}  // namespace qmap
