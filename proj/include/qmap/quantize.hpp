#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace qmap {

using Symbol = std::uint32_t;
using SymbolSeq = std::vector<Symbol>;

inline constexpr int kMaxBits = 40;

inline void check_bits(int b) {
  if (b < 1 || b > kMaxBits) {
    throw InputError("quantization bits must be in [1, " + std::to_string(kMaxBits) +
                     "], got " + std::to_string(b));
  }
}

// [x]_b: floor(x) plus the first b binary digits of x - floor(x). Always
// rounds toward -inf; grid points map to themselves.
inline double quantize_scalar(double x, int b) {
  check_bits(b);
  if (!std::isfinite(x)) throw InputError("quantize_scalar: non-finite input");
  const double whole = std::floor(x);
  const double frac = x - whole;  // exact in binary floating point
  const double scale = std::ldexp(1.0, b);
  return whole + std::floor(frac * scale) / scale;
}

// The grid X_b over [lo, hi): half-open cells [v, v + 2^-b), one symbol per
// cell. The right endpoint hi quantizes into the last cell.
class QuantAlphabet {
public:
  QuantAlphabet() = default;

  QuantAlphabet(double lo, double hi, int b) : b_(b), lo_(lo), hi_(hi) {
    check_bits(b);
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw InputError("alphabet bounds must satisfy lo < hi");
    }
    step_ = std::ldexp(1.0, -b);
    base_ = quantize_scalar(lo, b);
    const double cells = std::ceil((hi - base_) / step_);
    if (cells > double(1u << 30)) throw SizeError("alphabet has more than 2^30 symbols");
    const auto count = static_cast<std::size_t>(cells);
    values_.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
      const double v = base_ + static_cast<double>(j) * step_;
      if (v >= hi) break;
      values_.push_back(v);
    }
  }

  int bits() const noexcept { return b_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double value(Symbol s) const { return values_.at(s); }

  // Inverse of values(): the symbol whose grid value is exactly v.
  Symbol index_of(double v) const {
    const double j = (v - base_) / step_;
    if (!(j >= 0.0) || j != std::floor(j) || j >= static_cast<double>(values_.size())) {
      throw InputError("value is not a grid point of the alphabet");
    }
    return static_cast<Symbol>(j);
  }

  // Cell containing x (x in [lo, hi]).
  Symbol quantize(double x) const {
    if (!std::isfinite(x) || x < lo_ || x > hi_) {
      throw InputError("value outside alphabet range");
    }
    const double q = quantize_scalar(x, b_);
    const double j = (q - base_) / step_;
    const auto last = static_cast<double>(values_.size() - 1);
    return static_cast<Symbol>(j > last ? last : j);
  }

  // Grid point nearest to x (any real x); exact midpoints go to the lower value.
  Symbol nearest(double x) const {
    const double j = (x - base_) / step_;
    if (!(j > 0.0)) return 0;
    const auto last = static_cast<double>(values_.size() - 1);
    if (j >= last) return static_cast<Symbol>(last);
    const double lower = std::floor(j);
    const double d_lo = x - values_[static_cast<std::size_t>(lower)];
    const double d_hi = values_[static_cast<std::size_t>(lower) + 1] - x;
    return static_cast<Symbol>(d_hi < d_lo ? lower + 1 : lower);
  }

  bool contains_zero() const noexcept { return zero_index() >= 0; }

  // Symbol of the grid value 0, or -1 when 0 is not on the grid.
  long zero_index() const noexcept {
    if (values_.empty() || base_ > 0.0 || values_.back() < 0.0) return -1;
    const double j = -base_ / step_;
    return j == std::floor(j) ? static_cast<long>(j) : -1;
  }

  std::vector<double> to_values(std::span<const Symbol> u) const {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = value(u[i]);
    return out;
  }

private:
  int b_ = 1;
  double lo_ = 0.0;
  double hi_ = 1.0;
  double step_ = 0.5;
  double base_ = 0.0;
  std::vector<double> values_;
};

inline QuantAlphabet build_alphabet(double lo, double hi, int b) { return QuantAlphabet(lo, hi, b); }

// Elementwise [x_i]_b followed by symbol lookup.
inline SymbolSeq quantize_vector(std::span<const double> x, const QuantAlphabet& alphabet) {
  SymbolSeq out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < alphabet.lo() || x[i] > alphabet.hi()) {
      throw InputError("quantize_vector: coordinate " + std::to_string(i) + " = " +
                       std::to_string(x[i]) + " outside [" + std::to_string(alphabet.lo()) +
                       ", " + std::to_string(alphabet.hi()) + "]");
    }
    out[i] = alphabet.quantize(x[i]);
  }
  return out;
}

// [x^n]_b as reals.
inline std::vector<double> quantize_values(std::span<const double> x, int b) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = quantize_scalar(x[i], b);
  return out;
}

}  // namespace qmap
