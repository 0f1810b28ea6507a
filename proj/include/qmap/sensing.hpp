#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "rng.hpp"

namespace qmap {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// unit: N(0,1) entries; normalized: N(0,1/n); explicit: caller-supplied.
enum class Scale { unit, normalized, explicit_ };

inline std::string to_string(Scale s) {
  switch (s) {
    case Scale::unit: return "unit";
    case Scale::normalized: return "normalized";
    case Scale::explicit_: return "explicit";
  }
  return "?";
}

inline Scale parse_scale(const std::string& s) {
  if (s == "unit") return Scale::unit;
  if (s == "normalized") return Scale::normalized;
  if (s == "explicit") return Scale::explicit_;
  throw InputError("unknown matrix scale '" + s + "' (expected unit or normalized)");
}

struct SenseMatrix {
  Matrix a;
  Scale scale = Scale::unit;
  std::uint64_t seed = 0;

  Eigen::Index rows() const noexcept { return a.rows(); }
  Eigen::Index cols() const noexcept { return a.cols(); }

  static SenseMatrix from_matrix(Matrix m) {
    if (m.rows() < 1 || m.cols() < 1) throw InputError("sensing matrix must be non-empty");
    return SenseMatrix{std::move(m), Scale::explicit_, 0};
  }
};

// Row r is drawn from its own stream derive_seed(seed, r), entries left to
// right, so the matrix does not depend on how rows are scheduled.
inline SenseMatrix gen_gaussian(Eigen::Index m, Eigen::Index n, Scale scale, std::uint64_t seed) {
  if (m < 1 || n < 1) throw InputError("gen_gaussian: dimensions must be positive");
  if (scale == Scale::explicit_) throw InputError("gen_gaussian: scale must be unit or normalized");
  SenseMatrix s{Matrix(m, n), scale, seed};
  const double sd = scale == Scale::unit ? 1.0 : 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index r = 0; r < m; ++r) {
    Engine eng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(r)));
    for (Eigen::Index c = 0; c < n; ++c) s.a(r, c) = sd * standard_normal(eng);
  }
  return s;
}

inline Vector to_eigen(std::span<const double> x) {
  return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// y = A x + z, z ~ N(0, sigma^2) i.i.d.; sigma = 0 gives exactly A x.
inline Vector measure(const SenseMatrix& A, std::span<const double> x, double sigma, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(x.size()) != A.cols()) {
    throw InputError("measure: x has length " + std::to_string(x.size()) + ", matrix has " +
                     std::to_string(A.cols()) + " columns");
  }
  if (!(sigma >= 0.0)) throw InputError("measure: sigma must be >= 0");
  Vector y = A.a * to_eigen(x);
  if (sigma > 0.0) {
    Engine eng = make_engine(derive_seed(seed, 0x6e6f697365ULL));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sigma * standard_normal(eng);
  }
  return y;
}

// Largest singular value by power iteration on A^T A.
inline double sigma_max(const SenseMatrix& A, double rel_tol = 1e-8, int max_iter = 10000) {
  const Eigen::Index n = A.cols();
  Engine eng = make_engine(0x5eedULL);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * standard_normal(eng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = A.a.transpose() * (A.a * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      // one more Rayleigh quotient on the refreshed vector
      const double final_lambda = (A.a * v).squaredNorm();
      return std::sqrt(std::max(final_lambda, next));
    }
    lambda = next;
  }
  throw ConvergenceError("sigma_max: power iteration did not converge", to_std(v));
}

}  // namespace qmap
