#include "morh2w/matdense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "morh2w/error.hpp"

namespace morh2w::dense {
namespace {

struct Block {
  Eigen::Index start;
  Eigen::Index size;
};

// Diagonal blocks of a quasi-upper-triangular matrix. A nonzero subdiagonal
// entry opens a 2x2 block.
std::vector<Block> diagonal_blocks(const Matrix& t) {
  std::vector<Block> blocks;
  const Eigen::Index n = t.rows();
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      blocks.push_back({i, 2});
      i += 2;
    } else {
      blocks.push_back({i, 1});
      i += 1;
    }
  }
  return blocks;
}

// Solves S Y + Y T = R for blocks of size at most 2x2 via the Kronecker form.
Matrix solve_small(const Matrix& s, const Matrix& t, const Matrix& r) {
  const Eigen::Index a = s.rows();
  const Eigen::Index b = t.rows();
  Matrix k = Matrix::Zero(a * b, a * b);
  for (Eigen::Index q = 0; q < b; ++q) {
    for (Eigen::Index p = 0; p < a; ++p) {
      const Eigen::Index row = q * a + p;
      for (Eigen::Index p2 = 0; p2 < a; ++p2) k(row, q * a + p2) += s(p, p2);
      for (Eigen::Index q2 = 0; q2 < b; ++q2) k(row, q2 * a + p) += t(q2, q);
    }
  }
  Eigen::FullPivLU<Matrix> lu(k);
  const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
  lu.setThreshold(1e-14);
  if (!lu.isInvertible() || std::abs(lu.matrixLU().diagonal().cwiseAbs().minCoeff()) < 1e-300 * scale) {
    fail(ErrorCode::SpectrumOverlap, "singular diagonal block in Sylvester back-substitution");
  }
  const Vector y = lu.solve(Eigen::Map<const Vector>(r.data(), r.size()));
  return Eigen::Map<const Matrix>(y.data(), a, b);
}

// Solves op(S) Y + Y op(T) + F = 0 where S, T are quasi-upper-triangular and
// op is identity or transpose.
Matrix solve_quasi_triangular(const Matrix& s_raw, bool s_trans, const Matrix& t_raw, bool t_trans,
                              const Matrix& f) {
  const Matrix s = s_trans ? Matrix(s_raw.transpose()) : s_raw;
  const Matrix t = t_trans ? Matrix(t_raw.transpose()) : t_raw;
  std::vector<Block> rows = diagonal_blocks(s_raw);
  std::vector<Block> cols = diagonal_blocks(t_raw);
  // Upper-triangular op(S) is resolved bottom-up; upper op(T) left-to-right.
  if (!s_trans) std::reverse(rows.begin(), rows.end());
  if (t_trans) std::reverse(cols.begin(), cols.end());

  const Eigen::Index n = s.rows();
  Matrix y = Matrix::Zero(n, t.rows());
  for (const Block& cb : cols) {
    // Unsolved columns of Y are still zero, so the full product only picks up
    // the already-resolved coupling terms.
    Matrix g = f.middleCols(cb.start, cb.size) + y * t.middleCols(cb.start, cb.size);
    for (const Block& rb : rows) {
      const Matrix rhs = g.middleRows(rb.start, rb.size) +
                         s.middleRows(rb.start, rb.size) * y.middleCols(cb.start, cb.size);
      y.block(rb.start, cb.start, rb.size, cb.size) =
          solve_small(s.block(rb.start, rb.start, rb.size, rb.size),
                      t.block(cb.start, cb.start, cb.size, cb.size), -rhs);
    }
  }
  return y;
}

void check_separation(const std::vector<Complex>& ea, const std::vector<Complex>& eb, double scale,
                      double tol) {
  double sep = std::numeric_limits<double>::infinity();
  for (const Complex& la : ea) {
    for (const Complex& lb : eb) sep = std::min(sep, std::abs(la + lb));
  }
  if (sep <= tol * scale) {
    fail(ErrorCode::SpectrumOverlap,
         "spectra of A and -B overlap (separation " + std::to_string(sep) + ")");
  }
}

void fill_residual(SolveReport& rep, const Matrix& a, const Matrix& b, const Matrix& c) {
  const Matrix r = a * rep.solution + rep.solution * b + c;
  rep.residual_norm = r.norm();
  const double denom = (a.norm() + b.norm()) * rep.solution.norm() + c.norm();
  rep.relative_residual = denom > 0.0 ? rep.residual_norm / denom : 0.0;
}

}  // namespace

std::vector<Complex> SchurForm::eigenvalues() const {
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(t.rows()));
  for (const Block& b : diagonal_blocks(t)) {
    if (b.size == 1) {
      out.emplace_back(t(b.start, b.start), 0.0);
      continue;
    }
    const double p = 0.5 * (t(b.start, b.start) + t(b.start + 1, b.start + 1));
    const double det = t(b.start, b.start) * t(b.start + 1, b.start + 1) -
                       t(b.start, b.start + 1) * t(b.start + 1, b.start);
    const double disc = p * p - det;
    if (disc >= 0.0) {
      out.emplace_back(p - std::sqrt(disc), 0.0);
      out.emplace_back(p + std::sqrt(disc), 0.0);
    } else {
      out.emplace_back(p, -std::sqrt(-disc));
      out.emplace_back(p, std::sqrt(-disc));
    }
  }
  return out;
}

SchurForm real_schur(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "real_schur: matrix is not square");
  if (!a.allFinite()) fail(ErrorCode::InvalidArgument, "real_schur: non-finite entries");
  const Eigen::Index n = a.rows();
  if (n == 0) return {Matrix(0, 0), Matrix(0, 0)};
  Eigen::RealSchur<Matrix> rs(n);
  rs.setMaxIterations(30 * n);
  rs.compute(a);
  if (rs.info() != Eigen::Success) {
    fail(ErrorCode::NoConvergence, "real_schur: QR iteration exceeded 30n sweeps");
  }
  return {rs.matrixU(), rs.matrixT()};
}

Factored::Factored(Matrix a) : a_(std::move(a)), schur_(real_schur(a_)) {
  eigs_ = schur_.eigenvalues();
  norm_ = a_.norm();
}

Matrix FactoredView::dense() const {
  return transposed ? Matrix(factored->matrix().transpose()) : factored->matrix();
}

SolveReport solve_sylvester(FactoredView a, FactoredView b, const Matrix& c, const SolveOptions& opts) {
  const Eigen::Index n = a.factored->size();
  const Eigen::Index k = b.factored->size();
  if (c.rows() != n || c.cols() != k) {
    fail(ErrorCode::DimensionMismatch, "solve_sylvester: C is " + std::to_string(c.rows()) + "x" +
                                           std::to_string(c.cols()) + ", expected " +
                                           std::to_string(n) + "x" + std::to_string(k));
  }
  SolveReport rep;
  if (n == 0 || k == 0) {
    rep.solution = Matrix::Zero(n, k);
    return rep;
  }
  check_separation(a.factored->eigenvalues(), b.factored->eigenvalues(),
                   a.factored->norm() + b.factored->norm(), opts.separation_tol);

  const SchurForm& sa = a.factored->schur();
  const SchurForm& sb = b.factored->schur();
  // op(A) = Ua op(Ta) Ua^T for either orientation, likewise for B.
  auto solve_transformed = [&](const Matrix& rhs) {
    const Matrix f = sa.q.transpose() * rhs * sb.q;
    const Matrix y = solve_quasi_triangular(sa.t, a.transposed, sb.t, b.transposed, f);
    return Matrix(sa.q * y * sb.q.transpose());
  };

  const Matrix ad = a.dense();
  const Matrix bd = b.dense();
  rep.solution = solve_transformed(c);
  fill_residual(rep, ad, bd, c);
  for (int it = 0; it < opts.max_refinements && rep.relative_residual > opts.refine_tol; ++it) {
    const Matrix r = ad * rep.solution + rep.solution * bd + c;
    rep.solution += solve_transformed(r);
    fill_residual(rep, ad, bd, c);
  }
  return rep;
}

SolveReport solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c, const SolveOptions& opts) {
  if (a.rows() != a.cols() || b.rows() != b.cols()) {
    fail(ErrorCode::DimensionMismatch, "solve_sylvester: coefficients must be square");
  }
  const Factored fa(a);
  const Factored fb(b);
  return solve_sylvester(as_is(fa), as_is(fb), c, opts);
}

SolveReport solve_sylvester_shifted(const Matrix& a, const Matrix& b, const Matrix& c,
                                    const SolveOptions& opts) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows()) {
    fail(ErrorCode::DimensionMismatch, "solve_sylvester_shifted: incompatible dimensions");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index k = b.rows();
  SolveReport rep;
  if (n == 0 || k == 0) {
    rep.solution = Matrix::Zero(n, k);
    return rep;
  }
  const SchurForm sb = real_schur(b);
  const Matrix f = c * sb.q;
  Matrix y = Matrix::Zero(n, k);
  const double scale = a.norm() + b.norm();
  for (const Block& blk : diagonal_blocks(sb.t)) {
    const Matrix g = f.middleCols(blk.start, blk.size) + y * sb.t.middleCols(blk.start, blk.size);
    Matrix shifted;
    if (blk.size == 1) {
      shifted = a + sb.t(blk.start, blk.start) * Matrix::Identity(n, n);
    } else {
      const Eigen::Index j = blk.start;
      const Matrix eye = Matrix::Identity(n, n);
      shifted.resize(2 * n, 2 * n);
      shifted << a + sb.t(j, j) * eye, sb.t(j + 1, j) * eye,
                 sb.t(j, j + 1) * eye, a + sb.t(j + 1, j + 1) * eye;
    }
    Eigen::PartialPivLU<Matrix> lu(shifted);
    if (lu.rcond() < opts.separation_tol * 1e-2 || !std::isfinite(lu.rcond())) {
      fail(ErrorCode::SpectrumOverlap,
           "solve_sylvester_shifted: shifted system is singular (scale " + std::to_string(scale) + ")");
    }
    const Vector rhs = -Eigen::Map<const Vector>(g.data(), g.size());
    const Vector sol = lu.solve(rhs);
    y.middleCols(blk.start, blk.size) = Eigen::Map<const Matrix>(sol.data(), n, blk.size);
  }
  rep.solution = y * sb.q.transpose();
  fill_residual(rep, a, b, c);
  return rep;
}

SolveReport solve_lyapunov(FactoredView a, const Matrix& q, const SolveOptions& opts) {
  if (q.rows() != a.factored->size() || q.cols() != a.factored->size()) {
    fail(ErrorCode::DimensionMismatch, "solve_lyapunov: Q has the wrong size");
  }
  const auto& ev = a.factored->eigenvalues();
  for (const Complex& l : ev) {
    if (!(l.real() < 0.0)) {
      fail(ErrorCode::NotHurwitz,
           "solve_lyapunov: coefficient has eigenvalue with real part " + std::to_string(l.real()));
    }
  }
  FactoredView b{a.factored, !a.transposed};
  SolveReport rep = solve_sylvester(a, b, q, opts);
  rep.solution = symmetrize(rep.solution);
  fill_residual(rep, a.dense(), b.dense(), q);
  return rep;
}

SolveReport solve_lyapunov(const Matrix& a, const Matrix& q, const SolveOptions& opts) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "solve_lyapunov: A is not square");
  const Factored fa(a);
  return solve_lyapunov(as_is(fa), q, opts);
}

EigenDecomposition eig(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "eig: matrix is not square");
  const Eigen::Index n = a.rows();
  EigenDecomposition out;
  if (n == 0) {
    out.values.resize(0);
    out.vectors.resize(0, 0);
    return out;
  }
  Eigen::EigenSolver<Matrix> es;
  es.setMaxIterations(30 * n);
  es.compute(a, true);
  if (es.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "eig: QR iteration did not converge");
  const CVector vals = es.eigenvalues();
  const CMatrix vecs = es.eigenvectors();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index i, Eigen::Index j) {
    const Complex a1 = vals(i), a2 = vals(j);
    if (a1.real() != a2.real()) return a1.real() < a2.real();
    if (std::abs(a1.imag()) != std::abs(a2.imag())) return std::abs(a1.imag()) < std::abs(a2.imag());
    return a1.imag() < a2.imag();
  });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = vals(idx[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = vecs.col(idx[static_cast<std::size_t>(k)]).normalized();
  }
  return out;
}

std::vector<Complex> eigenvalues(const Matrix& a) {
  const EigenDecomposition e = eig(a);
  return {e.values.data(), e.values.data() + e.values.size()};
}

Svd svd(const Matrix& m) {
  if (!m.allFinite()) fail(ErrorCode::InvalidArgument, "svd: non-finite entries");
  Eigen::JacobiSVD<Matrix> js(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (js.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "svd: Jacobi sweeps did not converge");
  return {js.matrixU(), js.singularValues(), js.matrixV()};
}

Matrix psd_factor(const Matrix& s, double tol) {
  if (s.rows() != s.cols()) fail(ErrorCode::DimensionMismatch, "psd_factor: matrix is not square");
  const Eigen::Index n = s.rows();
  if (n == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  if (es.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "psd_factor: eigensolver failed");
  const Vector& lam = es.eigenvalues();  // ascending
  const double scale = lam.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Matrix(n, 0);
  if (lam(0) < -tol * scale) {
    fail(ErrorCode::NotPSD, "psd_factor: eigenvalue " + std::to_string(lam(0)) + " below -tol*|S|");
  }
  const double lmax = lam(n - 1);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (lam(i) > tol * lmax) keep.push_back(i);
  }
  Matrix u(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    Vector col = es.eigenvectors().col(keep[j]) * std::sqrt(lam(keep[j]));
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0.0) col = -col;
    u.col(static_cast<Eigen::Index>(j)) = col;
  }
  return u;
}

double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double norm2(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
}

double spectral_abscissa(const Matrix& a) {
  if (a.rows() == 0) return -std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  for (const Complex& l : real_schur(a).eigenvalues()) best = std::max(best, l.real());
  return best;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix orth(const Matrix& m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  const Eigen::Index rank = qr.rank();
  const Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), rank);
  return q;
}

double subspace_angle(const Matrix& x, const Matrix& y) {
  const Matrix qx = orth(x);
  const Matrix qy = orth(y);
  if (qx.cols() != qy.cols()) return std::acos(-1.0) / 2.0;
  const double s = norm2(Matrix(qy - qx * (qx.transpose() * qy)));
  return std::asin(std::min(1.0, s));
}

}  // namespace morh2w::dense
