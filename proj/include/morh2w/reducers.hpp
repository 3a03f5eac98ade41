#pragma once

#include <optional>
#include <string>
#include <vector>

#include "morh2w/optimality.hpp"
#include "morh2w/statespace.hpp"

namespace morh2w {

struct FwhmorOptions {
  int max_iters = 200;
  /// Relative pole change regarded as stagnation.
  double pole_tol = 1e-2;
  /// Number of consecutive stagnant iterations required before stopping.
  int stall_window = 3;
  /// Also stop once ||Xbar||_2 <= xbar_tol.
  bool use_xbar = false;
  double xbar_tol = 1e-8;
  /// Also stop once e1 and e2 stagnate (relative change <= pole_tol).
  bool use_error_traces = false;
  bool record_history = true;
  /// Solve the plant-sized Sylvester equations by factoring only the small
  /// coefficient and running shifted solves with A.
  bool shifted_solves = false;
};

struct IterationRecord {
  std::vector<Complex> poles;
  /// +inf on the first iteration.
  double pole_change = 0.0;
  /// e1, e2 and ||Xbar||_2 of the iterate that entered this iteration; NaN
  /// when that iterate was unstable.
  double e1 = 0.0, e2 = 0.0, xbar_norm = 0.0;
  bool stable = true;
  double seconds = 0.0;
};

struct ConvergenceHistory {
  std::vector<IterationRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct ReductionResult {
  std::string method;
  StateSpace rom;
  Matrix V, W;
  ConvergenceHistory history;
  bool converged = false;
  int iterations = 0;
  Matrix P_hat, Q_hat;
  /// Balanced-truncation singular values (FWBT / A-FWBT only).
  Vector hsv;
  std::vector<std::string> warnings;
  std::optional<InterpolationResiduals> interpolation;
};

/// Biorthogonal Gram-Schmidt: V spans P12, W spans Q12, W^T V = I.
/// Throws RankDeficient or PivotBreakdown.
std::pair<Matrix, Matrix> biorth_gs(const Matrix& p12, const Matrix& q12);

/// Greedy nearest-neighbour pairing of consecutive pole sets; returns
/// max |lambda_k - lambda_prev| / |lambda_prev|.
double relative_pole_change(const std::vector<Complex>& prev, const std::vector<Complex>& cur);

/// True once the last stall_window records are all stagnant in the poles
/// (or, when enabled, in e1/e2), or ||Xbar|| criterion holds.
bool check_convergence(const ConvergenceHistory& history, const FwhmorOptions& opts);

/// Fixed-point iteration on (A~, B~, C~) through the P12/Q12 Sylvester
/// equations and an oblique projection.
ReductionResult fwhmor(const WeightedProblem& prob, const StateSpace& init, const FwhmorOptions& opts = {});

struct FwitiaConfig {
  std::vector<Complex> points;  // sigma_i, right half-plane, closed under conjugation
  CMatrix right_dirs;           // m x r, column i is b_i
  CMatrix left_dirs;            // p x r, column i is c_i
};

/// Interpolation data taken from a ROM: mirrored poles and its residues
/// (SISO: unit directions).
FwitiaConfig fwitia_config_from(const StateSpace& rom);

enum class FwitiaMode { Robust, Faithful };

ReductionResult fwitia(const WeightedProblem& prob, const FwitiaConfig& cfg0, const FwhmorOptions& opts = {},
                       FwitiaMode mode = FwitiaMode::Robust);

/// Weighted balanced truncation with the exact weighted gramians.
ReductionResult fwbt(const WeightedProblem& prob, Eigen::Index r);

/// The same truncation driven by P_hat / Q_hat from an FWHMOR run.
ReductionResult afwbt(const WeightedProblem& prob, Eigen::Index r, const Matrix& p_hat, const Matrix& q_hat);

/// Galerkin projection onto the invariant subspace of the r slowest plant
/// poles.
StateSpace default_initial_rom(const StateSpace& plant, Eigen::Index r);

/// Weight gramians and cross terms that stay fixed across iterations.
struct WeightTerms {
  Matrix Pi, Qo, P13, Q14;
};
WeightTerms weight_terms(const WeightedProblem& prob);

}  // namespace morh2w
