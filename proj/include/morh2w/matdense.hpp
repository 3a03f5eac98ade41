#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace morh2w {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

}  // namespace morh2w

/// Dense kernels: Schur/eigen/SVD wrappers and Bartels-Stewart solvers for
/// continuous-time Sylvester and Lyapunov equations.
///
/// Equation conventions throughout:
///   Sylvester  A X + X B + C = 0
///   Lyapunov   A X + X A^T + Q = 0
namespace morh2w::dense {

/// Real Schur form A = Q T Q^T with T quasi-upper-triangular.
struct SchurForm {
  Matrix q;
  Matrix t;

  /// Eigenvalues read off the diagonal blocks of T, in block order.
  std::vector<Complex> eigenvalues() const;
};

/// Throws NoConvergence if the QR iteration needs more than 30 n sweeps.
SchurForm real_schur(const Matrix& a);

/// A square matrix together with its real Schur form, so that repeated
/// solves against the same coefficient pay for the factorization once.
class Factored {
 public:
  explicit Factored(Matrix a);

  const Matrix& matrix() const { return a_; }
  const SchurForm& schur() const { return schur_; }
  const std::vector<Complex>& eigenvalues() const { return eigs_; }
  Eigen::Index size() const { return a_.rows(); }
  double norm() const { return norm_; }

 private:
  Matrix a_;
  SchurForm schur_;
  std::vector<Complex> eigs_;
  double norm_ = 0.0;
};

/// A factored matrix used either as-is or transposed.
struct FactoredView {
  const Factored* factored = nullptr;
  bool transposed = false;

  Matrix dense() const;
};

inline FactoredView as_is(const Factored& f) { return {&f, false}; }
inline FactoredView transposed(const Factored& f) { return {&f, true}; }

struct SolveOptions {
  /// Spectra of A and -B must be separated by more than this times (|A|+|B|).
  double separation_tol = 1e-12;
  /// One step of iterative refinement is applied while the relative residual
  /// exceeds this.
  double refine_tol = 1e-10;
  int max_refinements = 2;
};

struct SolveReport {
  Matrix solution;
  double residual_norm = 0.0;
  /// residual_norm / ((|A| + |B|) |X| + |C|), Frobenius norms.
  double relative_residual = 0.0;
};

SolveReport solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c,
                            const SolveOptions& opts = {});
SolveReport solve_sylvester(FactoredView a, FactoredView b, const Matrix& c,
                            const SolveOptions& opts = {});

/// Sylvester solve for a large A and a small B: only B is Schur-factored and
/// each (block) column of the solution comes from a shifted linear system in
/// A. Intended for the plant-sized equations where A would be sparse.
SolveReport solve_sylvester_shifted(const Matrix& a, const Matrix& b, const Matrix& c,
                                    const SolveOptions& opts = {});

/// A X + X A^T + Q = 0 for Hurwitz A and symmetric Q. The solution is
/// symmetrized before it is returned.
SolveReport solve_lyapunov(const Matrix& a, const Matrix& q, const SolveOptions& opts = {});
SolveReport solve_lyapunov(FactoredView a, const Matrix& q, const SolveOptions& opts = {});

struct EigenDecomposition {
  CVector values;   // sorted by (real, |imag|, imag): conjugates are adjacent
  CMatrix vectors;  // unit-norm columns, A V = V diag(values)
};

EigenDecomposition eig(const Matrix& a);
std::vector<Complex> eigenvalues(const Matrix& a);

struct Svd {
  Matrix u;
  Vector s;  // nonincreasing
  Matrix v;
};

Svd svd(const Matrix& m);

/// Factor a symmetric PSD matrix as S = U U^T where U has k columns and k is
/// the numerical rank at threshold tol * lambda_max. Throws NotPSD if an
/// eigenvalue is below -tol * |S|.
Matrix psd_factor(const Matrix& s, double tol = 1e-12);

double norm2(const Matrix& m);
double norm2(const CMatrix& m);
double spectral_abscissa(const Matrix& a);
Matrix symmetrize(const Matrix& m);

/// Orthonormal basis of the column span (Householder QR, thin).
Matrix orth(const Matrix& m);

/// Largest principal angle between the column spans of X and Y (radians).
double subspace_angle(const Matrix& x, const Matrix& y);

}  // namespace morh2w::dense
