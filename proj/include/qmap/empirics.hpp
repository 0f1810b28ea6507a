#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "quantize.hpp"
#include "sources.hpp"

namespace qmap {

// (k+1)-order empirical distribution of a symbol sequence: counts of the n-k
// overlapping windows u_{i-k}..u_i. Keys are big-endian tuple indices over an
// alphabet of `symbols` letters.
struct KType {
  int k = 0;
  std::size_t n = 0;
  std::size_t symbols = 0;
  std::map<std::uint64_t, std::size_t> counts;

  std::size_t windows() const noexcept { return n - static_cast<std::size_t>(k); }

  double prob(std::uint64_t tuple) const {
    const auto it = counts.find(tuple);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(windows());
  }

  // Counts of the leading k symbols of each window (same n-k windows).
  std::map<std::uint64_t, std::size_t> context_counts() const {
    std::map<std::uint64_t, std::size_t> out;
    for (const auto& [idx, c] : counts) out[idx / symbols] += c;
    return out;
  }
};

namespace detail {

inline std::size_t alphabet_extent(std::span<const Symbol> u) {
  Symbol m = 0;
  for (Symbol s : u) m = std::max(m, s);
  return static_cast<std::size_t>(m) + 1;
}

inline void check_length(std::span<const Symbol> u, int k, const char* who) {
  if (k < 0) throw InputError(std::string(who) + ": order must be >= 0");
  if (u.size() <= static_cast<std::size_t>(k)) {
    throw InputError(std::string(who) + ": sequence length " + std::to_string(u.size()) +
                     " must exceed k = " + std::to_string(k));
  }
}

}  // namespace detail

inline KType k_type(std::span<const Symbol> u, int k, std::size_t symbols = 0) {
  detail::check_length(u, k, "k_type");
  if (symbols == 0) symbols = detail::alphabet_extent(u);
  checked_pow(symbols, k + 1, std::size_t{1} << 62);
  KType t{k, u.size(), symbols, {}};
  const auto len = static_cast<std::size_t>(k) + 1;
  std::uint64_t modulus = 1;
  for (int j = 0; j < k; ++j) modulus *= symbols;
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] >= symbols) throw InputError("k_type: symbol exceeds alphabet size");
    // rolling window: drop the oldest symbol, append u[i]
    idx = (modulus == 1 ? 0 : idx % modulus) * symbols + u[i];
    if (i + 1 >= len) ++t.counts[idx];
  }
  return t;
}

// c_w(u) = sum_a w[a] p^(k+1)(a | u); +inf if any window is forbidden.
inline double complexity_cost(std::span<const Symbol> u, const WeightTable& w) {
  detail::check_length(u, w.k, "complexity_cost");
  const KType t = k_type(u, w.k, w.symbols());
  double total = 0.0;
  for (const auto& [idx, c] : t.counts) {
    const double wi = w.w[idx];
    if (std::isinf(wi)) return kInf;
    total += wi * static_cast<double>(c);
  }
  return total / static_cast<double>(t.windows());
}

// Hhat_k(u) = H(U_{k+1} | U^k) with U^{k+1} ~ p^(k+1)(. | u), the context
// marginal taken over the same windows.
inline double cond_empirical_entropy(std::span<const Symbol> u, int k) {
  detail::check_length(u, k, "cond_empirical_entropy");
  const KType t = k_type(u, k);
  const auto ctx = t.context_counts();
  const double N = static_cast<double>(t.windows());
  double h = 0.0;
  for (const auto& [idx, c] : t.counts) {
    const double joint = static_cast<double>(c);
    const double context = static_cast<double>(ctx.at(idx / t.symbols));
    h -= (joint / N) * std::log2(joint / context);
  }
  return std::max(h, 0.0);
}

// Sum over contexts of p^(k)(a^k) * D(p(. | a^k) || q(. | a^k)), in bits.
inline double context_weighted_kl(std::span<const Symbol> u, const QuantKernel& q) {
  detail::check_length(u, q.k, "context_weighted_kl");
  const KType t = k_type(u, q.k, q.symbols());
  const auto ctx = t.context_counts();
  const double N = static_cast<double>(t.windows());
  double d = 0.0;
  for (const auto& [idx, c] : t.counts) {
    const double qc = q.probs[idx];
    if (qc == 0.0) return kInf;
    const double cond = static_cast<double>(c) / static_cast<double>(ctx.at(idx / t.symbols));
    d += (static_cast<double>(c) / N) * std::log2(cond / qc);
  }
  return d;
}

inline std::size_t count_jumps(std::span<const Symbol> u) {
  if (u.size() < 2) throw InputError("count_jumps: length must be >= 2");
  std::size_t jumps = 0;
  for (std::size_t i = 1; i < u.size(); ++i) jumps += u[i] != u[i - 1];
  return jumps;
}

inline std::size_t l0_norm(std::span<const double> x) {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return v != 0.0; }));
}

inline double l1_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("l1_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return d;
}

// D(p || q) in bits; +inf when p is not absolutely continuous w.r.t. q.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return d;
}

// One LZ78 phrase: a pointer to a previous parse-tree node (0 = root) plus
// the appended symbol.
struct LzPhrase {
  std::size_t parent;
  Symbol symbol;
};

// Incremental parse into shortest new phrases. A trailing phrase that repeats
// an existing node is still emitted (as parent + last symbol).
inline std::vector<LzPhrase> lz78_parse(std::span<const Symbol> u) {
  std::map<std::pair<std::size_t, Symbol>, std::size_t> trie;
  std::vector<LzPhrase> phrases;
  std::size_t node = 0;
  std::size_t parent = 0;
  Symbol last = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto it = trie.find({node, u[i]});
    if (it != trie.end()) {
      parent = node;
      last = u[i];
      node = it->second;
      continue;
    }
    phrases.push_back({node, u[i]});
    trie.emplace(std::make_pair(node, u[i]), phrases.size());
    node = 0;
  }
  if (node != 0) phrases.push_back({parent, last});
  return phrases;
}

inline SymbolSeq lz78_decode(std::span<const LzPhrase> phrases) {
  std::vector<SymbolSeq> nodes{{}};
  SymbolSeq out;
  for (const auto& ph : phrases) {
    SymbolSeq s = nodes.at(ph.parent);
    s.push_back(ph.symbol);
    out.insert(out.end(), s.begin(), s.end());
    nodes.push_back(std::move(s));
  }
  return out;
}

inline std::uint64_t ceil_log2(std::uint64_t v) {
  std::uint64_t bits = 0;
  while ((std::uint64_t{1} << bits) < v) ++bits;
  return bits;
}

// Codelength in bits: phrase j costs ceil(log2 j) pointer bits plus
// ceil(log2 |U|) literal bits.
inline std::uint64_t lz78_length(std::span<const Symbol> u, std::size_t alphabet_size) {
  if (u.empty()) throw InputError("lz78_length: empty sequence");
  if (alphabet_size == 0) throw InputError("lz78_length: empty alphabet");
  const auto phrases = lz78_parse(u);
  const std::uint64_t literal = ceil_log2(alphabet_size);
  std::uint64_t bits = 0;
  for (std::size_t j = 1; j <= phrases.size(); ++j) bits += ceil_log2(j) + literal;
  return bits;
}

}  // namespace qmap
