#include <doctest.h>

#include "common.hpp"
#include "morh2w/error.hpp"

using namespace morh2w;
using namespace testutil;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

const std::vector<Complex> kPoints{{0.0, 0.3}, {0.5, 2.0}, {1.0, -0.7}, {0.0, 11.0}};

}  // namespace

TEST_SUITE("statespace") {

TEST_CASE("dimension checks") {
  CHECK(code_of([] { StateSpace(Matrix::Zero(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([] { StateSpace(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(2, 1)); }) ==
        ErrorCode::DimensionMismatch);
  Matrix bad = Matrix::Zero(1, 1);
  bad(0, 0) = std::nan("");
  CHECK(code_of([&] { StateSpace(bad, Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1)); }) ==
        ErrorCode::InvalidArgument);
  const StateSpace id = StateSpace::identity(3);
  CHECK(id.n() == 0);
  CHECK(id.m() == 3);
  CHECK(id.is_stable());
}

TEST_CASE("weighted problem validates weights") {
  std::mt19937_64 rng(1);
  const StateSpace h = rand_stable(4, 2, 1, rng);
  CHECK(code_of([&] { WeightedProblem(h, StateSpace::identity(1), StateSpace::identity(1), 2); }) ==
        ErrorCode::DimensionMismatch);
  StateSpace unstable(Matrix::Ones(1, 1), Matrix::Ones(1, 2), Matrix::Ones(2, 1), Matrix::Zero(2, 2));
  CHECK(code_of([&] { WeightedProblem(h, unstable, StateSpace::identity(1), 2); }) == ErrorCode::UnstableSystem);
  CHECK(code_of([&] { WeightedProblem(h, StateSpace::identity(2), StateSpace::identity(1), 0); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("eval_tf of a first-order lag") {
  const StateSpace s(Matrix::Constant(1, 1, -1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1));
  const Complex z(0.0, 2.0);
  CHECK(std::abs(eval_tf(s, z)(0, 0) - 1.0 / (z + 1.0)) <= 1e-15);
  CHECK_THROWS_AS(eval_tf(s, Complex(-1.0, 0.0)), Error);
}

TEST_CASE("series and feedback match pointwise products") {
  std::mt19937_64 rng(7);
  const StateSpace g1 = rand_stable(3, 2, 2, rng, true);
  const StateSpace g2 = rand_stable(4, 2, 2, rng, true);
  const StateSpace s = series(g1, g2);
  const StateSpace f = feedback(g1, g2);
  const CMatrix id = CMatrix::Identity(2, 2);
  for (const Complex& z : kPoints) {
    const CMatrix h1 = tf(g1, z), h2 = tf(g2, z);
    CHECK((tf(s, z) - h2 * h1).norm() <= 1e-10 * (h2 * h1).norm());
    const CMatrix want = h1 * (id + h2 * h1).inverse();
    CHECK((tf(f, z) - want).norm() <= 1e-10 * want.norm());
  }
}

TEST_CASE("error system and weighted error realization") {
  std::mt19937_64 rng(9);
  const StateSpace h = rand_stable(5, 2, 2, rng);
  const StateSpace hr = rand_stable(2, 2, 2, rng);
  const StateSpace wi = rand_stable(2, 2, 2, rng, true);
  const StateSpace wo = rand_stable(3, 2, 2, rng, true);
  const WeightedProblem prob(h, wi, wo, 2);
  const StateSpace e = error_system(h, hr);
  const StateSpace ew = weighted_error_realization(prob, hr);
  CHECK(ew.n() == 5 + 2 + 2 + 3);
  CHECK(ew.D().norm() == 0.0);
  for (const Complex& z : kPoints) {
    const CMatrix d = tf(h, z) - tf(hr, z);
    CHECK((tf(e, z) - d).norm() <= 1e-10 * d.norm());
    const CMatrix w = tf(wo, z) * d * tf(wi, z);
    CHECK((tf(ew, z) - w).norm() <= 1e-10 * w.norm());
  }
  const auto off = weighted_offsets(prob, 2);
  CHECK(off == std::vector<Eigen::Index>{0, 5, 7, 9, 12});
}

TEST_CASE("pole-residue form reproduces the transfer function") {
  std::mt19937_64 rng(10);
  const StateSpace s = rand_stable(5, 2, 3, rng, true);
  const PoleResidue pr = pole_residue(s);
  CHECK(pr.poles.size() == 5);
  for (const Complex& z : kPoints) {
    const CMatrix want = tf(s, z);
    CHECK((pr.evaluate(z) - want).norm() <= 1e-9 * want.norm());
  }
  Matrix jordan(2, 2);
  jordan << -1, 1, 0, -1;
  const StateSpace j(jordan, Matrix::Ones(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1));
  CHECK(code_of([&] { pole_residue(j); }) == ErrorCode::DefectiveMatrix);
}

TEST_CASE("projection with the identity basis is a no-op") {
  std::mt19937_64 rng(12);
  const StateSpace s = rand_stable(4, 1, 1, rng);
  const StateSpace p = project(s, Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  CHECK((p.A() - s.A()).norm() == 0.0);
  CHECK((p.B() - s.B()).norm() == 0.0);
}

TEST_CASE("augmented F and G have the expected shapes") {
  const WeightedProblem prob = illus_problem();
  const auto wt = weight_terms(prob);
  const auto [f, g] = augmented_F_G(prob, wt.Pi, wt.Qo, wt.P13, wt.Q14);
  CHECK(f.m() == prob.plant().m());
  CHECK(g.p() == prob.plant().p());
  CHECK(f.A().rows() >= prob.plant().n());
}

}  // TEST_SUITE
