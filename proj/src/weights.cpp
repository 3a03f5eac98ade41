#include <cmath>
#include <numbers>
#include <random>

#include "morh2w/error.hpp"
#include "morh2w/harness.hpp"

namespace morh2w {

StateSpace butterworth_bandpass(int half_order, double w1, double w2) {
  if (half_order < 1) fail(ErrorCode::InvalidBand, "half_order must be >= 1");
  if (!(std::isfinite(w1) && std::isfinite(w2)) || !(w1 > 0.0) || !(w1 < w2)) {
    fail(ErrorCode::InvalidBand, "need 0 < w1 < w2, got [" + std::to_string(w1) + ", " + std::to_string(w2) + "]");
  }
  const int n = half_order;

  // Low-pass prototype with unit cutoff as a cascade of sections
  // s^2 + 2 sin(theta_k) s + 1, plus s + 1 for odd orders.
  StateSpace lp = StateSpace::identity(1);
  for (int k = 1; k <= n / 2; ++k) {
    const double theta = std::numbers::pi * (2 * k - 1) / (2.0 * n);
    Matrix a(2, 2);
    a << 0.0, 1.0, -1.0, -2.0 * std::sin(theta);
    Matrix b(2, 1);
    b << 0.0, 1.0;
    Matrix c(1, 2);
    c << 1.0, 0.0;
    lp = series(lp, StateSpace(a, b, c, Matrix::Zero(1, 1)));
  }
  if (n % 2 == 1) {
    lp = series(lp, StateSpace(Matrix::Constant(1, 1, -1.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1)));
  }

  // s -> (s^2 + w0^2) / (s bw)
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;
  const Eigen::Index k = lp.n();
  Matrix a = Matrix::Zero(2 * k, 2 * k);
  a.topLeftCorner(k, k) = bw * lp.A();
  a.topRightCorner(k, k) = w0 * Matrix::Identity(k, k);
  a.bottomLeftCorner(k, k) = -w0 * Matrix::Identity(k, k);
  Matrix b = Matrix::Zero(2 * k, 1);
  b.topRows(k) = bw * lp.B();
  Matrix c = Matrix::Zero(1, 2 * k);
  c.leftCols(k) = lp.C();
  return {a, b, c, lp.D()};
}

std::pair<StateSpace, StateSpace> closed_loop_weights(const StateSpace& plant, const StateSpace& controller) {
  if (plant.m() != controller.p() || plant.p() != controller.m()) {
    fail(ErrorCode::DimensionMismatch, "plant and controller do not close a loop");
  }
  const StateSpace loop = series(controller, plant);  // P K
  StateSpace wi = feedback(StateSpace::identity(plant.p()), loop);
  StateSpace wo = feedback(plant, controller);  // (I + P K)^{-1} P
  return {std::move(wi), std::move(wo)};
}

StateSpace random_stable(Eigen::Index n, Eigen::Index m, Eigen::Index p, std::uint64_t seed) {
  if (n < 0 || m < 1 || p < 1) fail(ErrorCode::InvalidArgument, "random_stable needs n >= 0, m, p >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Matrix x(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = normal(rng);
    }
    return x;
  };
  Matrix a = draw(n, n);
  if (n > 0) {
    const double alpha = dense::spectral_abscissa(a);
    a -= (alpha + 0.5) * Matrix::Identity(n, n);
  }
  Matrix b = draw(n, m);
  Matrix c = draw(p, n);
  return {a, b, c, Matrix::Zero(p, m)};
}

}  // namespace morh2w
