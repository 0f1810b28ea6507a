#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qmap {

// Bad arguments: out-of-range coordinates, malformed kernels, mismatched sizes.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Exhaustive routines refuse instances whose search space is too large.
class SizeError : public std::length_error {
public:
  using std::length_error::length_error;
};

// No sequence satisfies the complexity budget (or every trellis path is forbidden).
class InfeasibleError : public std::runtime_error {
public:
  InfeasibleError(const std::string& what, double min_cost, int iteration = -1)
      : std::runtime_error(what), min_cost_(min_cost), iteration_(iteration) {}

  double min_cost() const noexcept { return min_cost_; }
  // PGD iteration at which the projector failed, -1 outside the solver.
  int iteration() const noexcept { return iteration_; }

private:
  double min_cost_;
  int iteration_;
};

class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_; }

private:
  std::vector<double> last_;
};

}  // namespace qmap
