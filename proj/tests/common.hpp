#pragma once

#include <cmath>
#include <random>
#include <string>

#include "morh2w/harness.hpp"
#include "morh2w/matdense.hpp"
#include "morh2w/statespace.hpp"

namespace testutil {

using morh2w::CMatrix;
using morh2w::Complex;
using morh2w::Matrix;
using morh2w::StateSpace;
using morh2w::WeightedProblem;

inline std::string fixture(const std::string& name) { return std::string(MORH2W_FIXTURES) + "/" + name; }
inline std::string config(const std::string& name) { return std::string(MORH2W_CONFIGS) + "/" + name; }

inline Matrix randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = d(rng);
  }
  return m;
}

/// Random matrix shifted so every eigenvalue has real part <= -margin.
inline Matrix rand_hurwitz(Eigen::Index n, std::mt19937_64& rng, double margin = 0.5) {
  Matrix a = randn(n, n, rng);
  a -= (morh2w::dense::spectral_abscissa(a) + margin) * Matrix::Identity(n, n);
  return a;
}

inline StateSpace rand_stable(Eigen::Index n, Eigen::Index m, Eigen::Index p, std::mt19937_64& rng,
                              bool feedthrough = false) {
  return {rand_hurwitz(n, rng), randn(n, m, rng), randn(p, n, rng),
          feedthrough ? randn(p, m, rng) : Matrix::Zero(p, m)};
}

/// vec(AX + XB) = (I kron A + B^T kron I) vec(X); solved densely.
inline Matrix kron_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  const Eigen::Index n = a.rows(), m = b.rows();
  Matrix k = Matrix::Zero(n * m, n * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    k.block(j * n, j * n, n, n) += a;
    for (Eigen::Index i = 0; i < m; ++i) k.block(j * n, i * n, n, n) += b(i, j) * Matrix::Identity(n, n);
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
  const Eigen::VectorXd x = k.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), n, m);
}

/// C (sI - A)^{-1} B + D by a dense complex solve, independent of the library.
inline CMatrix tf(const StateSpace& s, Complex z) {
  const Eigen::Index n = s.n();
  if (n == 0) return s.D().cast<Complex>();
  CMatrix m = -s.A().cast<Complex>();
  m.diagonal().array() += z;
  return s.C().cast<Complex>() * m.fullPivLu().solve(s.B().cast<Complex>()) + s.D().cast<Complex>();
}

/// Largest relative difference of two transfer functions over log-spaced
/// frequencies.
inline double tf_gap(const StateSpace& a, const StateSpace& b, double lo = 1e-2, double hi = 1e2, int pts = 20) {
  double worst = 0.0;
  for (int k = 0; k < pts; ++k) {
    const double w = lo * std::pow(hi / lo, k / double(pts - 1));
    const CMatrix ga = tf(a, {0.0, w});
    const CMatrix gb = tf(b, {0.0, w});
    worst = std::max(worst, (ga - gb).norm() / std::max(ga.norm(), 1e-300));
  }
  return worst;
}

inline WeightedProblem illus_problem(Eigen::Index r = 2) {
  return {morh2w::load_statespace(fixture("illus6.json")), morh2w::load_statespace(fixture("wi.json")),
          morh2w::load_statespace(fixture("wo.json")), r};
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testutil
