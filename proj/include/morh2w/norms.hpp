#pragma once

#include <iosfwd>
#include <vector>

#include "morh2w/statespace.hpp"

namespace morh2w {

/// Both gramian trace formulas for ||G||_H2^2.
struct H2Traces {
  double controllability = 0.0;  // tr(C P C^T)
  double observability = 0.0;    // tr(B^T Q B)
};

/// Throws UnstableSystem or NonzeroFeedthrough (|D|_F > 1e-14). Throws
/// NoConvergence if the two trace formulas disagree beyond 1e-8 relative.
H2Traces h2_traces(const StateSpace& sys);
double h2_norm(const StateSpace& sys);

struct HinfResult {
  double value = 0.0;
  double omega = 0.0;  // +inf when the peak is the feedthrough
};

HinfResult hinf_norm(const StateSpace& sys, double rel_tol = 1e-6);

/// Frequency response through a Hessenberg reduction of A, so each point costs
/// O(n^2) instead of a fresh dense factorization.
class FrequencyEvaluator {
 public:
  explicit FrequencyEvaluator(const StateSpace& sys);

  CMatrix operator()(Complex s) const;
  Vector sigma(double omega) const;
  double sigma_max(double omega) const;

 private:
  Matrix h_, bh_, ch_, d_;
};

struct SigmaData {
  std::vector<double> frequencies;
  std::vector<Vector> singular_values;

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

SigmaData sigma_sweep(const StateSpace& sys, double omega_lo, double omega_hi, int n_points);
/// Reference loop for sigma_sweep, kept for tests and benchmarks.
SigmaData sigma_sweep_serial(const StateSpace& sys, double omega_lo, double omega_hi, int n_points);

void write_sigma_csv(std::ostream& out, const SigmaData& data);
SigmaData read_sigma_csv(std::istream& in);

/// Peak of a coarse grid scan, for benchmarking the two scan paths.
double hinf_grid_scan(const StateSpace& sys, int n_points, bool parallel);

}  // namespace morh2w
