#pragma once

#include <string>
#include <utility>
#include <vector>

#include "morh2w/matdense.hpp"

namespace morh2w {

/// Real realization (A, B, C, D) of H(s) = C (sI - A)^{-1} B + D.
/// Zero states are allowed; that is how static gains and identity weights
/// are represented.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  static StateSpace gain(Matrix d);
  static StateSpace identity(Eigen::Index m);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& D() const { return d_; }

  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }
  Eigen::Index p() const { return c_.rows(); }

  /// Spectral abscissa below -margin. A 0-state system is stable.
  bool is_stable(double margin = 1e-10) const;

 private:
  Matrix a_, b_, c_, d_;
};

/// One weighted reduction task: plant H, input weight Wi (m x m),
/// output weight Wo (p x p) and target order r.
class WeightedProblem {
 public:
  /// r = n is accepted for exact-reduction sanity checks; iterative reducers
  /// insist on r < n themselves.
  WeightedProblem(StateSpace plant, StateSpace input_weight, StateSpace output_weight, Eigen::Index r);

  const StateSpace& plant() const { return plant_; }
  const StateSpace& input_weight() const { return wi_; }
  const StateSpace& output_weight() const { return wo_; }
  Eigen::Index order() const { return r_; }

  WeightedProblem with_order(Eigen::Index r) const { return {plant_, wi_, wo_, r}; }

 private:
  StateSpace plant_, wi_, wo_;
  Eigen::Index r_;
};

/// Diagonal (pole-residue) form H(s) = sum_i l_i r_i^T / (s - lambda_i) + D.
struct PoleResidue {
  std::vector<Complex> poles;
  CMatrix right;  // m x r, column i is r_i
  CMatrix left;   // p x r, column i is l_i
  CMatrix spectral_factor;  // R with A = R diag(poles) R^{-1}
  Matrix d;

  CMatrix evaluate(Complex s) const;
};

CMatrix eval_tf(const StateSpace& sys, Complex s);

/// H - Hr with block-diagonal A, D_e = 0. Both must share D.
StateSpace error_system(const StateSpace& h, const StateSpace& hr);

/// Wo (H - Hr) Wi with state order (plant, ROM, input weight, output weight).
StateSpace weighted_error_realization(const WeightedProblem& prob, const StateSpace& hr);

/// Block offsets of the weighted error realization: {0, n, n+r, n+r+ni, n+r+ni+no}.
std::vector<Eigen::Index> weighted_offsets(const WeightedProblem& prob, Eigen::Index r);

/// F[H] and G[H], the weight-augmented systems whose tangential interpolation
/// at the mirrored ROM poles drives the Ybar/Zbar conditions.
std::pair<StateSpace, StateSpace> augmented_F_G(const WeightedProblem& prob, const Matrix& pi,
                                                const Matrix& qo, const Matrix& p13, const Matrix& q14);

/// Same construction with a ROM in place of the plant: P23 takes the role of
/// P13 and -Q24 that of Q14.
std::pair<StateSpace, StateSpace> augmented_F_G_rom(const WeightedProblem& prob, const StateSpace& hr,
                                                    const Matrix& pi, const Matrix& qo,
                                                    const Matrix& p23, const Matrix& q24);

PoleResidue pole_residue(const StateSpace& sys);

/// (W^T A V, W^T B, C V, D).
StateSpace project(const StateSpace& plant, const Matrix& v, const Matrix& w);

/// g2 after g1: y = G2(G1 u).
StateSpace series(const StateSpace& g1, const StateSpace& g2);

/// Negative feedback: y = G1(u - G2 y). Throws SingularShift if I + D1 D2 is
/// singular.
StateSpace feedback(const StateSpace& g1, const StateSpace& g2);

}  // namespace morh2w
