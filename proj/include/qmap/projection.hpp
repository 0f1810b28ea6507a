#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "empirics.hpp"
#include "error.hpp"
#include "quantize.hpp"
#include "sources.hpp"
#include "tuple.hpp"

namespace qmap {

inline constexpr std::size_t kMaxTrellisStates = std::size_t{1} << 20;
inline constexpr std::size_t kMaxTrellisCells = std::size_t{1} << 28;
inline constexpr std::size_t kMaxEnumeration = 1000000;
inline constexpr double kCostTolerance = 1e-12;

// c <= gamma up to a relative 1e-12 slack for accumulated rounding.
inline bool within_budget(double cost, double gamma) {
  return cost <= gamma + kCostTolerance * std::max(1.0, std::abs(gamma));
}

inline double squared_distortion(std::span<const Symbol> u, std::span<const double> x,
                                 const QuantAlphabet& alphabet) {
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = alphabet.value(u[i]) - x[i];
    d += e * e;
  }
  return d;
}

namespace detail {

inline void check_projection_inputs(std::span<const double> x, const WeightTable& w,
                                    const QuantAlphabet& alphabet) {
  if (w.symbols() != alphabet.size()) throw InputError("weight table and alphabet sizes differ");
  if (x.size() <= static_cast<std::size_t>(w.k)) {
    throw InputError("projection: length must exceed k = " + std::to_string(w.k));
  }
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("projection: non-finite input coordinate");
}

// Cost with lexicographic order: total weight first, then distortion.
struct LexCost {
  double weight = 0.0;
  double dist = 0.0;
  friend LexCost operator+(const LexCost& a, const LexCost& b) {
    return {a.weight + b.weight, a.dist + b.dist};
  }
  friend bool operator<(const LexCost& a, const LexCost& b) {
    return a.weight < b.weight || (a.weight == b.weight && a.dist < b.dist);
  }
};

// Trellis over the S^k contexts. Positions 0..k-1 contribute lead(j, a);
// positions i >= k contribute edge(i, context, a) on allowed transitions.
// Solved backwards (cost-to-go), then read forwards choosing the smallest
// optimal symbol at each step, which yields the lexicographically smallest
// minimizer. Path totals associate as lead-prefix + (e_k + (e_{k+1} + ...)).
template <typename Cost, typename Lead, typename Edge>
std::optional<std::pair<SymbolSeq, Cost>> trellis_search(std::size_t n, std::size_t S, int k,
                                                         std::span<const char> allowed, Lead lead,
                                                         Edge edge) {
  const std::size_t C = checked_pow(S, k, kMaxTrellisStates);
  const std::size_t stages = n - static_cast<std::size_t>(k);
  if (stages > kMaxTrellisCells / C) throw SizeError("trellis exceeds 2^28 stage-state cells");

  std::vector<Cost> next(C, Cost{}), cur(C);
  std::vector<char> next_ok(C, 1), cur_ok(C);
  std::vector<Symbol> choice(stages * C, 0);

  for (std::size_t i = n; i-- > static_cast<std::size_t>(k);) {
    Symbol* row_choice = choice.data() + (i - static_cast<std::size_t>(k)) * C;
    for (std::size_t c = 0; c < C; ++c) {
      bool found = false;
      Cost best{};
      Symbol best_a = 0;
      const std::size_t shifted = (c * S) % C;
      for (std::size_t a = 0; a < S; ++a) {
        const std::size_t t = c * S + a;
        if (!allowed[t]) continue;
        const std::size_t nc = C == 1 ? 0 : shifted + a;
        if (!next_ok[nc]) continue;
        const Cost cand = edge(i, c, static_cast<Symbol>(a)) + next[nc];
        if (!found || cand < best) {
          best = cand;
          best_a = static_cast<Symbol>(a);
          found = true;
        }
      }
      cur[c] = best;
      cur_ok[c] = found;
      row_choice[c] = best_a;
    }
    next.swap(cur);
    next_ok.swap(cur_ok);
  }

  bool found = false;
  Cost best{};
  std::size_t best_ctx = 0;
  for (std::size_t c = 0; c < C; ++c) {
    if (!next_ok[c]) continue;
    const SymbolSeq head = tuple_symbols(c, S, k);
    Cost total{};
    for (int j = 0; j < k; ++j) total = total + lead(static_cast<std::size_t>(j), head[static_cast<std::size_t>(j)]);
    total = total + next[c];
    if (!found || total < best) {
      best = total;
      best_ctx = c;
      found = true;
    }
  }
  if (!found) return std::nullopt;

  SymbolSeq u = tuple_symbols(best_ctx, S, k);
  u.reserve(n);
  std::size_t ctx = best_ctx;
  for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) {
    const Symbol a = choice[(i - static_cast<std::size_t>(k)) * C + ctx];
    u.push_back(a);
    ctx = C == 1 ? 0 : (ctx * S + a) % C;
  }
  return std::make_pair(std::move(u), best);
}

inline std::vector<char> allowed_mask(const WeightTable& w) {
  std::vector<char> m(w.w.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::isfinite(w.w[i]) ? 1 : 0;
  return m;
}

}  // namespace detail

// sum_i (v(u_i) - x_i)^2 + alpha * sum_{i>k} w[u_{i-k..i}], associated exactly
// as the trellis does. +inf on forbidden windows.
inline double lagrangian_objective(std::span<const Symbol> u, std::span<const double> x,
                                   const WeightTable& w, const QuantAlphabet& alphabet, double alpha) {
  const std::size_t S = alphabet.size();
  const auto k = static_cast<std::size_t>(w.k);
  const std::size_t C = w.contexts();
  double head = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double e = alphabet.value(u[j]) - x[j];
    head = head + e * e;
  }
  // contexts along the path, then accumulate from the back
  std::vector<std::size_t> ctx(u.size(), 0);
  std::size_t c = tuple_index(u.subspan(0, k), S);
  for (std::size_t i = k; i < u.size(); ++i) {
    ctx[i] = c;
    c = C == 1 ? 0 : (c * S + u[i]) % C;
  }
  double tail = 0.0;
  for (std::size_t i = u.size(); i-- > k;) {
    const double wi = w.at(ctx[i], u[i]);
    if (std::isinf(wi)) return kInf;
    const double e = alphabet.value(u[i]) - x[i];
    tail = (e * e + alpha * wi) + tail;
  }
  return head + tail;
}

// Global minimizer of the Lagrangian projection objective via Viterbi over
// S^k context states. Forbidden (+inf) windows are pruned for every alpha.
inline SymbolSeq project_lagrangian(std::span<const double> x, const WeightTable& w,
                                    const QuantAlphabet& alphabet, double alpha) {
  detail::check_projection_inputs(x, w, alphabet);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("project_lagrangian: alpha must be finite and >= 0");
  const std::size_t S = alphabet.size();
  const auto values = alphabet.values();
  const auto mask = detail::allowed_mask(w);
  auto lead = [&](std::size_t j, Symbol a) {
    const double e = values[a] - x[j];
    return e * e;
  };
  auto edge = [&](std::size_t i, std::size_t c, Symbol a) {
    const double e = values[a] - x[i];
    return e * e + alpha * w.w[c * S + a];
  };
  auto res = detail::trellis_search<double>(x.size(), S, w.k, mask, lead, edge);
  if (!res) throw InfeasibleError("project_lagrangian: every trellis path is forbidden", kInf);
  return std::move(res->first);
}

// Sequence of minimum complexity cost, closest to x among those.
inline SymbolSeq min_cost_sequence(std::span<const double> x, const WeightTable& w,
                                   const QuantAlphabet& alphabet) {
  detail::check_projection_inputs(x, w, alphabet);
  const std::size_t S = alphabet.size();
  const auto values = alphabet.values();
  const auto mask = detail::allowed_mask(w);
  using detail::LexCost;
  auto lead = [&](std::size_t j, Symbol a) {
    const double e = values[a] - x[j];
    return LexCost{0.0, e * e};
  };
  auto edge = [&](std::size_t i, std::size_t c, Symbol a) {
    const double e = values[a] - x[i];
    return LexCost{w.w[c * S + a], e * e};
  };
  auto res = detail::trellis_search<LexCost>(x.size(), S, w.k, mask, lead, edge);
  if (!res) throw InfeasibleError("no sequence has finite complexity cost", kInf);
  return std::move(res->first);
}

struct ConstrainedProjection {
  SymbolSeq u;
  double alpha = 0.0;       // multiplier that produced u (-1 for the min-cost fallback)
  double distortion = 0.0;  // ||v(u) - x||^2
  double cost = 0.0;        // c_w(u)
  int evaluations = 0;      // Viterbi runs
};

inline constexpr int kBisectionSteps = 40;

// Projection onto {u : c_w(u) <= gamma} by bisection on the Lagrange
// multiplier over [0, 2 * max finite weight * n]. Returns the feasible point
// of smallest distortion seen along the sweep; not guaranteed to reach the
// constrained optimum when the Lagrangian has a duality gap.
inline ConstrainedProjection project_constrained_detail(std::span<const double> x, const WeightTable& w,
                                                        const QuantAlphabet& alphabet, double gamma) {
  detail::check_projection_inputs(x, w, alphabet);
  ConstrainedProjection best;
  bool have = false;
  int evals = 0;
  auto consider = [&](SymbolSeq u, double alpha) {
    const double cost = complexity_cost(u, w);
    if (!within_budget(cost, gamma)) return false;
    const double dist = squared_distortion(u, x, alphabet);
    if (!have || dist < best.distortion || (dist == best.distortion && u < best.u)) {
      best = {std::move(u), alpha, dist, cost, 0};
      have = true;
    }
    return true;
  };

  ++evals;
  if (consider(project_lagrangian(x, w, alphabet, 0.0), 0.0)) {
    best.evaluations = evals;
    return best;
  }

  SymbolSeq floor_seq = min_cost_sequence(x, w, alphabet);
  ++evals;
  const double min_cost = complexity_cost(floor_seq, w);
  if (!within_budget(min_cost, gamma)) {
    throw InfeasibleError("project_constrained: budget " + std::to_string(gamma) +
                              " below minimum achievable cost " + std::to_string(min_cost),
                          min_cost);
  }

  double lo = 0.0;
  double hi = 2.0 * w.max_finite() * static_cast<double>(x.size());
  ++evals;
  if (consider(project_lagrangian(x, w, alphabet, hi), hi)) {
    for (int step = 0; step < kBisectionSteps; ++step) {
      const double mid = 0.5 * (lo + hi);
      ++evals;
      if (consider(project_lagrangian(x, w, alphabet, mid), mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  if (!have) {
    consider(std::move(floor_seq), -1.0);
  }
  best.evaluations = evals;
  return best;
}

inline SymbolSeq project_constrained(std::span<const double> x, const WeightTable& w,
                                     const QuantAlphabet& alphabet, double gamma) {
  return project_constrained_detail(x, w, alphabet, gamma).u;
}

// Exhaustive enumeration of X_b^n in lexicographic order. Constrained mode
// minimizes ||v(u) - x||^2 subject to c_w(u) <= gamma; Lagrangian mode
// minimizes lagrangian_objective. Ties keep the lexicographically first.
struct BruteForceMode {
  enum class Kind { lagrangian, constrained } kind;
  double param;
  static BruteForceMode lagrangian(double alpha) { return {Kind::lagrangian, alpha}; }
  static BruteForceMode constrained(double gamma) { return {Kind::constrained, gamma}; }
};

template <typename Visit>
void enumerate_sequences(std::size_t n, std::size_t S, Visit&& visit) {
  checked_pow(S, static_cast<int>(n), kMaxEnumeration);
  SymbolSeq u(n, 0);
  for (;;) {
    visit(std::span<const Symbol>(u));
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++u[pos] < S) break;
      u[pos] = 0;
      if (pos == 0) return;
    }
    if (n == 0) return;
  }
}

inline SymbolSeq project_bruteforce(std::span<const double> x, const WeightTable& w,
                                    const QuantAlphabet& alphabet, BruteForceMode mode) {
  detail::check_projection_inputs(x, w, alphabet);
  const std::size_t S = alphabet.size();
  try {
    checked_pow(S, static_cast<int>(x.size()), kMaxEnumeration);
  } catch (const SizeError&) {
    throw SizeError("project_bruteforce: S^n exceeds 10^6");
  }
  SymbolSeq best;
  double best_obj = kInf;
  double min_cost = kInf;
  enumerate_sequences(x.size(), S, [&](std::span<const Symbol> u) {
    double obj;
    if (mode.kind == BruteForceMode::Kind::lagrangian) {
      obj = lagrangian_objective(u, x, w, alphabet, mode.param);
    } else {
      const double cost = complexity_cost(u, w);
      min_cost = std::min(min_cost, cost);
      if (!within_budget(cost, mode.param)) return;
      obj = squared_distortion(u, x, alphabet);
    }
    if (std::isfinite(obj) && (best.empty() || obj < best_obj)) {
      best_obj = obj;
      best.assign(u.begin(), u.end());
    }
  });
  if (best.empty()) {
    throw InfeasibleError("project_bruteforce: no feasible sequence", min_cost);
  }
  return best;
}

// Distortion of the bisection sweep against the exhaustive constrained
// optimum; gap > 0 means the Lagrangian sweep missed the optimum.
struct ProjectionGap {
  double sweep = 0.0;
  double optimum = 0.0;
  double gap = 0.0;
};

inline ProjectionGap constrained_gap(std::span<const double> x, const WeightTable& w, const QuantAlphabet& alphabet,
                                     double gamma) {
  const auto sweep = project_constrained_detail(x, w, alphabet, gamma);
  const auto best = project_bruteforce(x, w, alphabet, BruteForceMode::constrained(gamma));
  const double opt = squared_distortion(best, x, alphabet);
  return {sweep.distortion, opt, sweep.distortion - opt};
}

// Exact projection onto s-sparse grid vectors: per-coordinate nearest grid
// value, keep the s largest gains x^2 - (x - q)^2 (stable on ties).
inline SymbolSeq project_l0(std::span<const double> x, const QuantAlphabet& alphabet, std::size_t s) {
  const long zero = alphabet.zero_index();
  if (zero < 0) throw InputError("project_l0: alphabet must contain 0");
  if (s > x.size()) throw InputError("project_l0: sparsity budget exceeds length");
  const std::size_t n = x.size();
  SymbolSeq nearest(n);
  std::vector<double> gain(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) throw InputError("project_l0: non-finite input coordinate");
    nearest[i] = alphabet.nearest(x[i]);
    const double e = x[i] - alphabet.value(nearest[i]);
    gain[i] = x[i] * x[i] - e * e;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
  SymbolSeq u(n, static_cast<Symbol>(zero));
  for (std::size_t r = 0; r < s; ++r) u[order[r]] = nearest[order[r]];
  return u;
}

}  // namespace qmap
