#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "empirics.hpp"
#include "error.hpp"
#include "projection.hpp"
#include "quantize.hpp"
#include "sensing.hpp"
#include "sources.hpp"

namespace qmap {

struct ConstrainedProjector {
  double gamma;
};
struct LagrangianProjector {
  double alpha;
};
struct L0Projector {
  std::size_t s;
};
using Projector = std::variant<ConstrainedProjector, LagrangianProjector, L0Projector>;

struct PgdConfig {
  std::optional<double> mu;  // defaults to the step paired with the matrix scale
  int max_iters = 200;
  double stop_tol = 0.0;
  Projector projector = L0Projector{0};
  bool allow_custom_step = false;  // accept mu that does not match the scale pairing
};

enum class PgdStatus { converged, max_iters, infeasible };

inline std::string to_string(PgdStatus s) {
  switch (s) {
    case PgdStatus::converged: return "converged";
    case PgdStatus::max_iters: return "max_iters";
    case PgdStatus::infeasible: return "infeasible";
  }
  return "?";
}

// Errors are per coordinate: (1/sqrt(n)) * ||.||. NaN when no truth is given.
struct PgdRecord {
  int t = 0;
  double residual = 0.0;  // ||y - A xhat(t)||
  double cost = 0.0;      // c_w(xhat(t))
  double err_quantized = 0.0;
  double err_analog = 0.0;
  std::uint64_t hash = 0;  // FNV-1a of the symbol sequence
};

struct PgdTrace {
  std::vector<PgdRecord> records;  // t = 0, 1, ..., iterations
  PgdStatus status = PgdStatus::max_iters;
  int iterations = 0;
  int converged_at = -1;  // last t with xhat(t) != xhat(t-1)
  double mu = 0.0;
};

struct PgdResult {
  SymbolSeq symbols;
  std::vector<double> estimate;
  PgdTrace trace;
};

inline double paired_step(const SenseMatrix& A) {
  const auto m = static_cast<double>(A.rows());
  const auto n = static_cast<double>(A.cols());
  switch (A.scale) {
    case Scale::unit: return 1.0 / m;
    case Scale::normalized: return n / m;
    case Scale::explicit_: break;
  }
  throw InputError("explicit matrices need an explicit step size mu");
}

inline double resolve_step(const SenseMatrix& A, const PgdConfig& cfg) {
  if (!cfg.mu) return paired_step(A);
  const double mu = *cfg.mu;
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("step size mu must be positive");
  if (A.scale != Scale::explicit_ && !cfg.allow_custom_step) {
    const double paired = paired_step(A);
    if (std::abs(mu - paired) > 1e-12 * paired) {
      throw InputError("mu = " + std::to_string(mu) + " does not match the " + to_string(A.scale) +
                       " scale pairing mu = " + std::to_string(paired));
    }
  }
  return mu;
}

inline std::uint64_t sequence_hash(std::span<const Symbol> u) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Symbol s : u) {
    for (int byte = 0; byte < 4; ++byte) {
      h ^= (s >> (8 * byte)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace detail {

inline double rms_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace detail

inline SymbolSeq apply_projector(const Projector& proj, std::span<const double> s, const WeightTable& w,
                                 const QuantAlphabet& alphabet) {
  return std::visit(
      [&](const auto& p) -> SymbolSeq {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstrainedProjector>) {
          return project_constrained(s, w, alphabet, p.gamma);
        } else if constexpr (std::is_same_v<P, LagrangianProjector>) {
          return project_lagrangian(s, w, alphabet, p.alpha);
        } else {
          return project_l0(s, alphabet, p.s);
        }
      },
      proj);
}

// Projected gradient descent from xhat(0) = 0^n:
//   s(t+1) = xhat(t) + mu A^T (y - A xhat(t)),  xhat(t+1) = P(s(t+1)).
// Stops once ||xhat(t+1) - xhat(t)|| <= stop_tol or after max_iters.
inline PgdResult pgd_solve(const SenseMatrix& A, std::span<const double> y, const WeightTable& w,
                           const QuantAlphabet& alphabet, const PgdConfig& cfg,
                           std::optional<std::span<const double>> truth = std::nullopt) {
  const auto n = static_cast<std::size_t>(A.cols());
  if (static_cast<Eigen::Index>(y.size()) != A.rows()) throw InputError("pgd_solve: y length differs from A rows");
  if (w.symbols() != alphabet.size()) throw InputError("pgd_solve: weights and alphabet differ");
  if (truth && truth->size() != n) throw InputError("pgd_solve: truth length differs from A columns");
  if (cfg.max_iters < 1) throw InputError("pgd_solve: max_iters must be >= 1");
  if (!(cfg.stop_tol >= 0.0)) throw InputError("pgd_solve: stop_tol must be >= 0");

  PgdResult out;
  out.trace.mu = resolve_step(A, cfg);
  const double mu = out.trace.mu;
  const Vector yv = to_eigen(y);
  std::vector<double> truth_q;
  if (truth) truth_q = quantize_values(*truth, alphabet.bits());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const long zero = alphabet.zero_index();
  auto record = [&](int t, const std::vector<double>& xhat, const SymbolSeq* u) {
    PgdRecord r;
    r.t = t;
    r.residual = (yv - A.a * to_eigen(xhat)).norm();
    r.cost = u ? complexity_cost(*u, w) : nan;
    r.err_quantized = truth ? detail::rms_distance(xhat, truth_q) : nan;
    r.err_analog = truth ? detail::rms_distance(xhat, *truth) : nan;
    r.hash = u ? sequence_hash(*u) : 0;
    out.trace.records.push_back(r);
  };

  std::vector<double> xhat(n, 0.0);
  SymbolSeq u_prev;
  if (zero >= 0 && n > static_cast<std::size_t>(w.k)) {
    u_prev.assign(n, static_cast<Symbol>(zero));
    record(0, xhat, &u_prev);
  } else {
    record(0, xhat, nullptr);
  }

  out.trace.status = PgdStatus::max_iters;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const Vector xv = to_eigen(xhat);
    const Vector s = xv + mu * (A.a.transpose() * (yv - A.a * xv));
    SymbolSeq u;
    try {
      u = apply_projector(cfg.projector, std::span<const double>(s.data(), n), w, alphabet);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(std::string(e.what()) + " (iteration " + std::to_string(t) + ")", e.min_cost(), t);
    }
    std::vector<double> next = alphabet.to_values(u);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += (next[i] - xhat[i]) * (next[i] - xhat[i]);
    change = std::sqrt(change);
    xhat = std::move(next);
    record(t, xhat, &u);
    out.trace.iterations = t;
    if (change > 0.0) out.trace.converged_at = t;
    u_prev = std::move(u);
    if (change <= cfg.stop_tol) {
      out.trace.status = PgdStatus::converged;
      if (out.trace.converged_at < 0) out.trace.converged_at = t;
      break;
    }
  }
  out.symbols = std::move(u_prev);
  out.estimate = std::move(xhat);
  return out;
}

inline double residual_sq(const SenseMatrix& A, std::span<const double> u_values, std::span<const double> y) {
  return (A.a * to_eigen(u_values) - to_eigen(y)).squaredNorm();
}

namespace detail {

inline void check_qmap_inputs(const SenseMatrix& A, std::span<const double> y, const WeightTable& w,
                              const QuantAlphabet& alphabet) {
  if (static_cast<Eigen::Index>(y.size()) != A.rows()) throw InputError("y length differs from A rows");
  if (w.symbols() != alphabet.size()) throw InputError("weights and alphabet differ");
  if (static_cast<std::size_t>(A.cols()) <= static_cast<std::size_t>(w.k)) throw InputError("n must exceed k");
  try {
    checked_pow(alphabet.size(), static_cast<int>(A.cols()), kMaxEnumeration);
  } catch (const SizeError&) {
    throw SizeError("exhaustive Q-MAP: S^n exceeds 10^6");
  }
}

}  // namespace detail

// argmin ||A u - y||^2 over u in X_b^n with c_w(u) <= gamma (exhaustive).
inline SymbolSeq qmap_bruteforce(const SenseMatrix& A, std::span<const double> y, const WeightTable& w,
                                 const QuantAlphabet& alphabet, double gamma) {
  detail::check_qmap_inputs(A, y, w, alphabet);
  const auto n = static_cast<std::size_t>(A.cols());
  SymbolSeq best;
  double best_res = kInf;
  double min_cost = kInf;
  std::vector<double> vals(n);
  enumerate_sequences(n, alphabet.size(), [&](std::span<const Symbol> u) {
    const double cost = complexity_cost(u, w);
    min_cost = std::min(min_cost, cost);
    if (!within_budget(cost, gamma)) return;
    for (std::size_t i = 0; i < n; ++i) vals[i] = alphabet.value(u[i]);
    const double r = residual_sq(A, vals, y);
    if (best.empty() || r < best_res) {
      best_res = r;
      best.assign(u.begin(), u.end());
    }
  });
  if (best.empty()) throw InfeasibleError("qmap_bruteforce: no sequence within budget", min_cost);
  return best;
}

// argmin c_w(u) + (lambda / n^2) ||A u - y||^2 (exhaustive).
inline double qmap_lagrangian_objective(const SenseMatrix& A, std::span<const double> y, const WeightTable& w,
                                        const QuantAlphabet& alphabet, std::span<const Symbol> u, double lambda) {
  const double cost = complexity_cost(u, w);
  if (std::isinf(cost)) return kInf;
  const auto n = static_cast<double>(u.size());
  const auto vals = alphabet.to_values(u);
  return cost + lambda / (n * n) * residual_sq(A, vals, y);
}

inline SymbolSeq qmap_lagrangian_bruteforce(const SenseMatrix& A, std::span<const double> y, const WeightTable& w,
                                            const QuantAlphabet& alphabet, double lambda) {
  detail::check_qmap_inputs(A, y, w, alphabet);
  if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
  SymbolSeq best;
  double best_obj = kInf;
  enumerate_sequences(static_cast<std::size_t>(A.cols()), alphabet.size(), [&](std::span<const Symbol> u) {
    const double obj = qmap_lagrangian_objective(A, y, w, alphabet, u, lambda);
    if (std::isfinite(obj) && (best.empty() || obj < best_obj)) {
      best_obj = obj;
      best.assign(u.begin(), u.end());
    }
  });
  if (best.empty()) throw InfeasibleError("qmap_lagrangian_bruteforce: every sequence is forbidden", kInf);
  return best;
}

// gamma = b (dbar_k + delta), with dbar_k estimated as H([X_{k+1}]_b | [X^k]_b) / b.
inline double default_gamma(const QuantKernel& kernel, int k, double delta) {
  const int b = kernel.alphabet.bits();
  return conditional_entropy(kernel, k) + b * delta;
}

// Asymptotic presets: b_n = ceil(r log log n), lambda_n = (log n)^{2r}, logs base 2.
inline int preset_bits(std::size_t n, double r) {
  return static_cast<int>(std::ceil(r * std::log2(std::log2(static_cast<double>(n)))));
}
inline double preset_lambda(std::size_t n, double r) {
  return std::pow(std::log2(static_cast<double>(n)), 2.0 * r);
}

// Per-coordinate error floor of the unit-scale contraction bound:
// 2 (2 + sqrt(n/m))^2 2^-b + (sigma/2) sqrt(b (d + 3 delta) / m).
inline double contraction_floor_unit(std::size_t n, std::size_t m, int b, double sigma = 0.0,
                                     double dbar = 0.0, double delta = 0.0) {
  const double r = std::sqrt(static_cast<double>(n) / static_cast<double>(m));
  return 2.0 * (2.0 + r) * (2.0 + r) * std::ldexp(1.0, -b) +
         0.5 * sigma * std::sqrt(b * (dbar + 3.0 * delta) / static_cast<double>(m));
}

// Same floor under N(0, 1/n) entries and mu = n/m.
inline double contraction_floor_normalized(std::size_t n, std::size_t m, int b, double sigma = 0.0,
                                           double dbar = 0.0, double delta = 0.0) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double sm = std::sqrt(static_cast<double>(m));
  return 2.0 * (sn + 2.0 * sm) * (sn + 2.0 * sm) / static_cast<double>(m) * std::ldexp(1.0, -b) +
         0.5 * sigma * std::sqrt(static_cast<double>(n) * b * (dbar + 3.0 * delta) / static_cast<double>(m));
}

}  // namespace qmap
