#include <doctest.h>

#include <algorithm>

#include "common.hpp"
#include "morh2w/error.hpp"

using namespace morh2w;
using namespace testutil;

TEST_SUITE("matdense") {

TEST_CASE("sylvester agrees with the Kronecker system") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 8, m = 1 + (trial * 5) % 7;
    // keep spec(A) and spec(-B) apart by shifting both to the left half-plane
    const Matrix a = rand_hurwitz(n, rng, 0.3);
    const Matrix b = rand_hurwitz(m, rng, 0.3);
    const Matrix c = randn(n, m, rng);
    const auto rep = dense::solve_sylvester(a, b, c);
    const Matrix x = kron_sylvester(a, b, c);
    CHECK((rep.solution - x).norm() <= 1e-8 * x.norm());
    CHECK(rep.relative_residual <= 1e-9);
  }
}

TEST_CASE("sylvester with indefinite but separated spectra") {
  std::mt19937_64 rng(3);
  const Matrix a = randn(6, 6, rng) + 8.0 * Matrix::Identity(6, 6);
  const Matrix b = randn(3, 3, rng) + 8.0 * Matrix::Identity(3, 3);
  const Matrix c = randn(6, 3, rng);
  const auto rep = dense::solve_sylvester(a, b, c);
  CHECK((rep.solution - kron_sylvester(a, b, c)).norm() <= 1e-8 * rep.solution.norm());
}

TEST_CASE("lyapunov agrees with the Kronecker system and is symmetric") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    const Matrix a = rand_hurwitz(n, rng, 0.2);
    const Matrix g = randn(n, 2, rng);
    const Matrix q = g * g.transpose();
    const auto rep = dense::solve_lyapunov(a, q);
    const Matrix x = kron_sylvester(a, a.transpose(), q);
    CHECK((rep.solution - x).norm() <= 1e-8 * x.norm());
    CHECK(rep.relative_residual <= 1e-9);
    CHECK((rep.solution - rep.solution.transpose()).norm() == 0.0);
  }
}

TEST_CASE("factored views match the dense overloads") {
  std::mt19937_64 rng(8);
  const Matrix a = rand_hurwitz(5, rng);
  const Matrix b = rand_hurwitz(3, rng);
  const Matrix c = randn(5, 3, rng);
  const dense::Factored fa(a), fb(b);
  const Matrix x1 = dense::solve_sylvester(dense::as_is(fa), dense::as_is(fb), c).solution;
  CHECK((x1 - dense::solve_sylvester(a, b, c).solution).norm() <= 1e-12 * x1.norm());
  // A^T X + X B^T + C^T = 0
  const Matrix x2 = dense::solve_sylvester(dense::transposed(fb), dense::transposed(fa), c.transpose()).solution;
  CHECK((x2 - kron_sylvester(b.transpose(), a.transpose(), c.transpose())).norm() <= 1e-8 * x2.norm());
}

TEST_CASE("shifted sylvester matches Bartels-Stewart, including complex blocks") {
  std::mt19937_64 rng(21);
  const Matrix a = rand_hurwitz(9, rng);
  Matrix b(4, 4);
  b << -1, 3, 0, 0, -3, -1, 0, 0, 0, 0, -2, 0.5, 0, 0, 0, -4;
  const Matrix c = randn(9, 4, rng);
  const Matrix x = dense::solve_sylvester_shifted(a, b, c).solution;
  CHECK((x - kron_sylvester(a, b, c)).norm() <= 1e-8 * x.norm());
}

TEST_CASE("overlapping spectra are rejected") {
  const Matrix a = Matrix::Identity(2, 2);
  const Matrix b = -Matrix::Identity(2, 2);
  try {
    dense::solve_sylvester(a, b, Matrix::Ones(2, 2));
    FAIL("expected SpectrumOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpectrumOverlap);
  }
}

TEST_CASE("lyapunov needs a Hurwitz matrix") {
  Matrix a(2, 2);
  a << 0.1, 1, 0, -1;
  try {
    dense::solve_lyapunov(a, Matrix::Identity(2, 2));
    FAIL("expected NotHurwitz");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotHurwitz);
  }
}

TEST_CASE("real schur factors reconstruct and are quasi-triangular") {
  std::mt19937_64 rng(2);
  const Matrix a = randn(7, 7, rng);
  const auto s = dense::real_schur(a);
  CHECK((s.q * s.t * s.q.transpose() - a).norm() <= 1e-12 * a.norm());
  CHECK((s.q.transpose() * s.q - Matrix::Identity(7, 7)).norm() <= 1e-12);
  for (Eigen::Index i = 2; i < 7; ++i) {
    for (Eigen::Index j = 0; j + 1 < i; ++j) CHECK(s.t(i, j) == 0.0);
  }
  for (Eigen::Index i = 0; i + 2 < 7; ++i) CHECK((s.t(i + 1, i) == 0.0 || s.t(i + 2, i + 1) == 0.0));
}

TEST_CASE("companion matrix eigenvalues are the polynomial roots") {
  // (s - 1)(s + 2)(s^2 + 2s + 5), roots 1, -2, -1 +- 2i
  const std::vector<double> coeffs{1, 3, 5, 1, -10};  // s^4 + 3s^3 + 5s^2 + s - 10
  Matrix c = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) c(0, i) = -coeffs[static_cast<std::size_t>(i + 1)];
  for (int i = 1; i < 4; ++i) c(i, i - 1) = 1;
  const auto ev = dense::eig(c);
  const std::vector<Complex> want{{-2, 0}, {-1, -2}, {-1, 2}, {1, 0}};
  REQUIRE(ev.values.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(ev.values(i) - want[static_cast<std::size_t>(i)]) <= 1e-12);
  CHECK((c.cast<Complex>() * ev.vectors - ev.vectors * ev.values.asDiagonal()).norm() <= 1e-12);
}

TEST_CASE("svd, psd factor and orth") {
  std::mt19937_64 rng(4);
  const Matrix m = randn(6, 4, rng);
  const auto s = dense::svd(m);
  CHECK((s.u * s.s.asDiagonal() * s.v.transpose() - m).norm() <= 1e-12 * m.norm());
  CHECK(std::is_sorted(s.s.data(), s.s.data() + s.s.size(), std::greater<>()));

  const Matrix g = randn(6, 3, rng);
  const Matrix psd = g * g.transpose();
  const Matrix u = dense::psd_factor(psd);
  CHECK(u.cols() == 3);
  CHECK((u * u.transpose() - psd).norm() <= 1e-10 * psd.norm());
  CHECK(dense::psd_factor(Matrix::Zero(3, 3)).cols() == 0);

  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1;
  CHECK_THROWS_AS(dense::psd_factor(indefinite), Error);

  const Matrix q = dense::orth(g);
  CHECK((q.transpose() * q - Matrix::Identity(3, 3)).norm() <= 1e-12);
  CHECK(dense::subspace_angle(q, g) <= 1e-10);
}

TEST_CASE("subspace angle of two lines") {
  const double theta = 0.3;
  Matrix x(2, 1), y(2, 1);
  x << 1, 0;
  y << std::cos(theta), std::sin(theta);
  CHECK(dense::subspace_angle(x, y) == doctest::Approx(theta).epsilon(1e-12));
}

}  // TEST_SUITE
