#pragma once

#include <string>
#include <utility>

#include "morh2w/statespace.hpp"

namespace morh2w {

/// Blocks of the weighted-error gramians, ordered (plant, ROM, input weight,
/// output weight). Lower blocks are transposes of the stored upper ones.
struct GramianPartition {
  Matrix P, P12, P13, P14, Pt, P23, P24, Pi, P34, Po;
  Matrix Q, Q12, Q13, Q14, Qt, Q23, Q24, Qi, Q34, Qo;

  Matrix assemble_P() const;
  Matrix assemble_Q() const;
};

/// Reference route: two Lyapunov solves on the full weighted realization,
/// then slicing. Throws NotHurwitz naming the unstable block.
GramianPartition weighted_gramians(const WeightedProblem& prob, const StateSpace& hr);

/// Second route: the same blocks from the chain of small Sylvester/Lyapunov
/// equations, solved in dependency order without forming the big system.
GramianPartition weighted_gramians_blockwise(const WeightedProblem& prob, const StateSpace& hr);

struct OptimalityReport {
  Matrix Xbar, X, Ybar, Y, Zbar, Z;
  // spectral norms
  double dev_A = 0, dev_B = 0, dev_C = 0;
  double gal_P = 0, gal_Q = 0, fit_P = 0, fit_Q = 0;
  // Frobenius counterparts
  double dev_A_fro = 0, dev_B_fro = 0, dev_C_fro = 0;
  double J1 = 0, J2 = 0, J3 = 0, J4 = 0;
  double R1_norm = 0, R2_norm = 0;
  double h2_squared = 0;
};

/// The first-order optimality quantities for (Hr, V, W).
OptimalityReport deviation_report(const WeightedProblem& prob, const StateSpace& hr, const Matrix& v,
                                  const Matrix& w);
OptimalityReport deviation_report(const WeightedProblem& prob, const StateSpace& hr, const Matrix& v,
                                  const Matrix& w, const GramianPartition& g);

/// Gradients of ||E_w||^2 with respect to (A~, B~, C~): 2(Xbar+X),
/// 2(Ybar Di Di^T + Y), 2(Do^T Do Zbar + Z).
struct Gradient {
  Matrix dA, dB, dC;
};
Gradient analytic_gradient(const WeightedProblem& prob, const OptimalityReport& rep);

enum class RomParameter { A, B, C };
enum class Objective { Total, J1, J3 };

double objective_value(const WeightedProblem& prob, const StateSpace& hr, Objective obj);

/// Central differences of the chosen objective in each entry of the chosen
/// ROM matrix. h <= 0 selects 1e-5 (1 + |param|_F). Throws
/// PerturbationUnstable if a perturbed ROM leaves the stable region.
Matrix fd_gradient(const WeightedProblem& prob, const StateSpace& hr, RomParameter which, double h = 0.0,
                   Objective obj = Objective::Total);

/// (V Pt V^T, W Qt W^T).
std::pair<Matrix, Matrix> hat_gramians(const GramianPartition& g, const Matrix& v, const Matrix& w);

/// Mismatch in the tangential interpolation conditions at the mirrored ROM
/// poles: column i of F is (F[H] - F~[Hr])(-lambda_i) r_i, row i of G is
/// l_i^T (G[H] - G~[Hr])(-lambda_i).
struct InterpolationResiduals {
  CMatrix F;  // p x r
  CMatrix G;  // r x m
  double F_norm = 0, G_norm = 0;
};
InterpolationResiduals interpolation_residuals(const WeightedProblem& prob, const StateSpace& hr,
                                               const GramianPartition& g);

/// e1 = tr(2 C P12 C~^T - C~ Pt C~^T), e2 = tr(-2 B^T Q12 B~ - B~^T Qt B~).
std::pair<double, double> error_traces(const StateSpace& plant, const StateSpace& hr, const Matrix& p12,
                                       const Matrix& pt, const Matrix& q12, const Matrix& qt);

std::string report_csv_header();
std::string report_csv_row(const OptimalityReport& rep);

}  // namespace morh2w
