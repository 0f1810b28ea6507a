#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "quantize.hpp"
#include "rng.hpp"
#include "tuple.hpp"

namespace qmap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kRowTolerance = 1e-12;

// Quantized order-k conditional law q_{k+1}(a | a^k) with its stationary
// context marginal q_k. Dense storage indexed as in tuple.hpp.
struct QuantKernel {
  QuantAlphabet alphabet;
  int k = 0;
  std::vector<double> probs;     // size S^{k+1}
  std::vector<double> marginal;  // size S^k

  std::size_t symbols() const noexcept { return alphabet.size(); }
  std::size_t contexts() const noexcept { return marginal.size(); }
  double prob(std::size_t context, Symbol a) const { return probs[context * symbols() + a]; }

  // Dimensions, nonnegativity, and unit row sums of probs.
  void validate_rows() const {
    const std::size_t S = symbols();
    const std::size_t C = checked_pow(S, k, kMaxDenseTuples);
    if (probs.size() != C * S) throw InputError("kernel table has inconsistent dimensions");
    for (std::size_t c = 0; c < C; ++c) {
      double row = 0.0;
      for (std::size_t a = 0; a < S; ++a) {
        const double q = probs[c * S + a];
        if (!(q >= 0.0) || !std::isfinite(q)) throw InputError("kernel entries must be finite and >= 0");
        row += q;
      }
      if (std::abs(row - 1.0) > kRowTolerance) {
        throw InputError("kernel row " + std::to_string(c) + " sums to " + std::to_string(row));
      }
    }
  }

  void validate() const {
    validate_rows();
    if (marginal.size() * symbols() != probs.size()) throw InputError("kernel marginal has the wrong size");
    double total = 0.0;
    for (double q : marginal) {
      if (!(q >= 0.0)) throw InputError("marginal entries must be >= 0");
      total += q;
    }
    if (std::abs(total - 1.0) > kRowTolerance) throw InputError("kernel marginal does not sum to 1");
  }
};

// Stationary law of the context chain c -> (c*S + a) mod S^k. Power iteration,
// falling back to the Cesaro average for periodic chains.
inline std::vector<double> stationary_contexts(std::span<const double> probs, std::size_t S, int k) {
  const std::size_t C = checked_pow(S, k, kMaxDenseTuples);
  std::vector<double> pi(C, 1.0 / static_cast<double>(C));
  if (k == 0) return pi;
  std::vector<double> next(C), avg(C, 0.0);
  constexpr int kMaxIter = 100000;
  for (int it = 1; it <= kMaxIter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      if (pi[c] == 0.0) continue;
      const std::size_t shifted = (c * S) % C;
      for (std::size_t a = 0; a < S; ++a) next[shifted + a] += pi[c] * probs[c * S + a];
    }
    double diff = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      diff += std::abs(next[c] - pi[c]);
      avg[c] += next[c];
    }
    pi.swap(next);
    if (diff < 1e-15) return pi;
    if (it == kMaxIter) {
      for (double& v : avg) v /= kMaxIter;
      return avg;
    }
  }
  return pi;
}

enum class SourceKind { spike_slab, pc_markov, table_markov };

// Stationary source. Built-in slabs are Unif[0,1) (density floor 1).
class SourceModel {
public:
  static SourceModel spike_slab(double p) { return SourceModel(SourceKind::spike_slab, p, nullptr); }
  static SourceModel pc_markov(double p) { return SourceModel(SourceKind::pc_markov, p, nullptr); }
  static SourceModel table_markov(QuantKernel kernel) {
    kernel.validate();
    return SourceModel(SourceKind::table_markov, 0.0,
                       std::make_shared<const QuantKernel>(std::move(kernel)));
  }

  SourceKind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  const QuantKernel& table() const {
    if (!table_) throw InputError("source model has no kernel table");
    return *table_;
  }

  // Memory of the quantized kernel.
  int order() const noexcept {
    switch (kind_) {
      case SourceKind::spike_slab: return 0;
      case SourceKind::pc_markov: return 1;
      case SourceKind::table_markov: return table_->k;
    }
    return 0;
  }

  double lo() const noexcept { return kind_ == SourceKind::table_markov ? table_->alphabet.lo() : 0.0; }
  double hi() const noexcept { return kind_ == SourceKind::table_markov ? table_->alphabet.hi() : 1.0; }

  std::string name() const {
    switch (kind_) {
      case SourceKind::spike_slab: return "spike_slab";
      case SourceKind::pc_markov: return "pc_markov";
      case SourceKind::table_markov: return "table_markov";
    }
    return "?";
  }

private:
  SourceModel(SourceKind kind, double p, std::shared_ptr<const QuantKernel> table)
      : kind_(kind), p_(p), table_(std::move(table)) {
    if (kind != SourceKind::table_markov && !(p >= 0.0 && p <= 1.0)) {
      throw InputError("source probability p must lie in [0, 1]");
    }
  }

  SourceKind kind_;
  double p_;
  std::shared_ptr<const QuantKernel> table_;
};

namespace detail {

inline std::size_t draw_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // rounding slack: last positive entry
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace detail

// X^n from the model; deterministic in (model, n, seed).
inline std::vector<double> sample_path(const SourceModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("sample_path: n must be >= 1");
  Engine eng = make_engine(seed);
  std::vector<double> x(n);
  switch (model.kind()) {
    case SourceKind::spike_slab:
      for (auto& xi : x) {
        const double coin = uniform01(eng);
        const double slab = uniform01(eng);
        xi = coin < model.p() ? slab : 0.0;
      }
      break;
    case SourceKind::pc_markov:
      x[0] = uniform01(eng);
      for (std::size_t i = 1; i < n; ++i) {
        const double coin = uniform01(eng);
        const double slab = uniform01(eng);
        x[i] = coin < model.p() ? slab : x[i - 1];
      }
      break;
    case SourceKind::table_markov: {
      const QuantKernel& q = model.table();
      const std::size_t S = q.symbols();
      const std::size_t C = q.contexts();
      std::size_t ctx = detail::draw_index(q.marginal, uniform01(eng));
      const SymbolSeq first = tuple_symbols(ctx, S, q.k);
      for (std::size_t i = 0; i < n; ++i) {
        if (i < static_cast<std::size_t>(q.k)) {
          x[i] = q.alphabet.value(first[i]);
          continue;
        }
        const auto row = std::span<const double>(q.probs).subspan(ctx * S, S);
        const auto a = detail::draw_index(row, uniform01(eng));
        x[i] = q.alphabet.value(static_cast<Symbol>(a));
        ctx = C == 1 ? 0 : (ctx * S + a) % C;
      }
      break;
    }
  }
  return x;
}

// Exact quantized kernel at b bits for the built-in models.
inline QuantKernel quantized_kernel(const SourceModel& model, int b) {
  if (model.kind() == SourceKind::table_markov) {
    const QuantKernel& t = model.table();
    if (b != t.alphabet.bits()) {
      throw InputError("table_markov kernel is fixed at b = " + std::to_string(t.alphabet.bits()));
    }
    return t;
  }
  QuantKernel q;
  q.alphabet = build_alphabet(0.0, 1.0, b);
  const std::size_t S = q.alphabet.size();
  const double p = model.p();
  const double cell = p * std::ldexp(1.0, -b);
  if (model.kind() == SourceKind::spike_slab) {
    q.k = 0;
    q.probs.assign(S, cell);
    q.probs[0] = (1.0 - p) + cell;
    q.marginal = {1.0};
  } else {
    q.k = 1;
    checked_pow(S, 2, kMaxDenseTuples);
    q.probs.assign(S * S, cell);
    for (std::size_t a = 0; a < S; ++a) q.probs[a * S + a] = (1.0 - p) + cell;
    q.marginal.assign(S, 1.0 / static_cast<double>(S));
  }
  return q;
}

// w[a^{k+1}] = -log2 q(a_{k+1} | a^k); +inf where the conditional vanishes.
struct WeightTable {
  QuantAlphabet alphabet;
  int k = 0;
  std::vector<double> w;  // size S^{k+1}

  std::size_t symbols() const noexcept { return alphabet.size(); }
  std::size_t contexts() const noexcept { return symbols() == 0 ? 0 : w.size() / symbols(); }
  double at(std::size_t context, Symbol a) const { return w[context * symbols() + a]; }

  double max_finite() const {
    double m = 0.0;
    for (double v : w)
      if (std::isfinite(v)) m = std::max(m, v);
    return m;
  }

  void validate() const {
    const std::size_t C = checked_pow(symbols(), k, kMaxDenseTuples);
    if (w.size() != C * symbols()) throw InputError("weight table has inconsistent dimensions");
    for (double v : w)
      if (!(v >= 0.0)) throw InputError("weights must be non-negative (or +inf)");
  }
};

inline WeightTable weights_from_kernel(const QuantKernel& kernel) {
  WeightTable t{kernel.alphabet, kernel.k, std::vector<double>(kernel.probs.size())};
  for (std::size_t i = 0; i < kernel.probs.size(); ++i) {
    const double q = kernel.probs[i];
    t.w[i] = q > 0.0 ? -std::log2(q) : kInf;
    if (t.w[i] == 0.0) t.w[i] = 0.0;  // normalize -0
  }
  return t;
}

inline double entropy_bits(std::span<const double> pmf) {
  double h = 0.0;
  for (double q : pmf)
    if (q > 0.0) h -= q * std::log2(q);
  return h;
}

// H([X_{k+1}]_b | [X^k]_b) for the kernel's own order k.
inline double cond_entropy(const QuantKernel& kernel) {
  const std::size_t S = kernel.symbols();
  double h = 0.0;
  for (std::size_t c = 0; c < kernel.contexts(); ++c) {
    if (kernel.marginal[c] == 0.0) continue;
    h += kernel.marginal[c] * entropy_bits(std::span<const double>(kernel.probs).subspan(c * S, S));
  }
  return h;
}

// Stationary law of `len` consecutive quantized symbols.
inline std::vector<double> tuple_law(const QuantKernel& kernel, int len) {
  const std::size_t S = kernel.symbols();
  const std::size_t out_size = checked_pow(S, len, kMaxDenseTuples);
  if (len <= kernel.k) {
    // keep the last `len` symbols of the context
    std::vector<double> out(out_size, 0.0);
    for (std::size_t c = 0; c < kernel.contexts(); ++c) out[c % out_size] += kernel.marginal[c];
    return out;
  }
  std::vector<double> law = kernel.marginal;
  const std::size_t C = kernel.contexts();
  for (int l = kernel.k; l < len; ++l) {
    std::vector<double> next(law.size() * S, 0.0);
    for (std::size_t t = 0; t < law.size(); ++t) {
      if (law[t] == 0.0) continue;
      const std::size_t ctx = t % C;
      for (std::size_t a = 0; a < S; ++a) next[t * S + a] = law[t] * kernel.probs[ctx * S + a];
    }
    law.swap(next);
  }
  return law;
}

// H([X_{j+1}]_b | [X^j]_b) for any order j, via the chain rule when j < k.
inline double conditional_entropy(const QuantKernel& kernel, int j) {
  if (j < 0) throw InputError("conditional_entropy: order must be >= 0");
  if (j >= kernel.k) return cond_entropy(kernel);
  return entropy_bits(tuple_law(kernel, j + 1)) - entropy_bits(tuple_law(kernel, j));
}

// Order-j conditional law of the same process: q(a | a^j) = P(a^j a) / P(a^j).
// Contexts of probability zero get a uniform row.
inline QuantKernel kernel_at_order(const QuantKernel& kernel, int j) {
  if (j < 0) throw InputError("kernel_at_order: order must be >= 0");
  if (j == kernel.k) return kernel;
  const std::size_t S = kernel.symbols();
  QuantKernel out;
  out.alphabet = kernel.alphabet;
  out.k = j;
  const std::vector<double> joint = tuple_law(kernel, j + 1);
  out.marginal = tuple_law(kernel, j);
  out.probs.assign(joint.size(), 1.0 / static_cast<double>(S));
  for (std::size_t c = 0; c < out.marginal.size(); ++c) {
    const double m = out.marginal[c];
    if (!(m > 0.0)) continue;
    double row = 0.0;
    for (std::size_t a = 0; a < S; ++a) row += joint[c * S + a];
    for (std::size_t a = 0; a < S; ++a) out.probs[c * S + a] = joint[c * S + a] / row;
  }
  return out;
}

struct InfoDimPoint {
  int b;
  double entropy;  // bits
  double ratio;    // entropy / b
};

inline std::vector<InfoDimPoint> info_dimension_curve(const SourceModel& model, int k,
                                                      std::span<const int> b_list) {
  std::vector<InfoDimPoint> out;
  out.reserve(b_list.size());
  for (int b : b_list) {
    const QuantKernel q = quantized_kernel(model, b);
    const double h = conditional_entropy(q, k);
    out.push_back({b, h, h / b});
  }
  return out;
}

// Per-symbol weight gap log2(((1-p) + p 2^-b) / (p 2^-b)).
inline double alpha_b(double p, int b) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("alpha_b: p must lie in (0, 1)");
  check_bits(b);
  const double cell = p * std::ldexp(1.0, -b);
  return std::log2(((1.0 - p) + cell) / cell);
}

// Upper bound on Psi_1(b, g) for the piecewise-constant chain with slab
// density floor f_min.
inline double psi1_upper_bound_pc(double p, double f_min, int b, int g) {
  if (!(p > 0.0 && p < 1.0) || !(f_min > 0.0) || b < 1 || g < 1) {
    throw InputError("psi1_upper_bound_pc: need 0 < p < 1, f_min > 0, b >= 1, g >= 1");
  }
  const double stay = std::pow(1.0 - p, g);
  return (1.0 - stay) + stay * std::ldexp(1.0, b) / f_min;
}

// Psi_2 is identically 1 for the piecewise-constant chain.
inline double psi2_pc(int /*b*/ = 1) { return 1.0; }

}  // namespace qmap
