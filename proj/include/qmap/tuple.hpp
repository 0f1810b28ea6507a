#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "quantize.hpp"

namespace qmap {

// base^exp, throwing SizeError once the result exceeds `limit`.
inline std::size_t checked_pow(std::size_t base, int exp, std::size_t limit) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > limit / base) {
      throw SizeError(std::to_string(base) + "^" + std::to_string(exp) + " exceeds " +
                      std::to_string(limit));
    }
    r *= base;
  }
  if (r > limit) throw SizeError("tuple space exceeds " + std::to_string(limit));
  return r;
}

inline constexpr std::size_t kMaxDenseTuples = std::size_t{1} << 26;

// Tuples a^{k+1} over an alphabet of size S are indexed big-endian:
// idx = sum_j a_j S^{k-j}. The first k symbols form the context, the last is
// the emitted symbol, so idx = context * S + symbol.
inline std::size_t tuple_index(std::span<const Symbol> tuple, std::size_t S) {
  std::size_t idx = 0;
  for (Symbol a : tuple) idx = idx * S + a;
  return idx;
}

inline SymbolSeq tuple_symbols(std::size_t idx, std::size_t S, int len) {
  SymbolSeq out(static_cast<std::size_t>(len));
  for (int j = len - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] = static_cast<Symbol>(idx % S);
    idx /= S;
  }
  return out;
}

}  // namespace qmap
