#include "morh2w/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "morh2w/error.hpp"

namespace morh2w {
namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

Matrix blockdiag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

void require_same_io(const StateSpace& h, const StateSpace& hr, const char* who) {
  if (h.m() != hr.m() || h.p() != hr.p()) {
    fail(ErrorCode::DimensionMismatch, std::string(who) + ": plant is " + std::to_string(h.p()) + "x" +
                                           std::to_string(h.m()) + " but ROM is " + std::to_string(hr.p()) +
                                           "x" + std::to_string(hr.m()));
  }
}

}  // namespace

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const Eigen::Index n = a_.rows();
  if (a_.cols() != n) fail(ErrorCode::DimensionMismatch, "A is " + dims(a_) + ", must be square");
  if (b_.rows() != n) fail(ErrorCode::DimensionMismatch, "B is " + dims(b_) + ", expected " + std::to_string(n) + " rows");
  if (c_.cols() != n) fail(ErrorCode::DimensionMismatch, "C is " + dims(c_) + ", expected " + std::to_string(n) + " columns");
  if (d_.rows() != c_.rows() || d_.cols() != b_.cols()) {
    fail(ErrorCode::DimensionMismatch,
         "D is " + dims(d_) + ", expected " + std::to_string(c_.rows()) + "x" + std::to_string(b_.cols()));
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite() || !d_.allFinite()) {
    fail(ErrorCode::InvalidArgument, "realization has non-finite entries");
  }
}

StateSpace StateSpace::gain(Matrix d) {
  const Eigen::Index p = d.rows();
  const Eigen::Index m = d.cols();
  return {Matrix(0, 0), Matrix(0, m), Matrix(p, 0), std::move(d)};
}

StateSpace StateSpace::identity(Eigen::Index m) { return gain(Matrix::Identity(m, m)); }

bool StateSpace::is_stable(double margin) const {
  return n() == 0 || dense::spectral_abscissa(a_) < -margin;
}

WeightedProblem::WeightedProblem(StateSpace plant, StateSpace input_weight, StateSpace output_weight,
                                 Eigen::Index r)
    : plant_(std::move(plant)), wi_(std::move(input_weight)), wo_(std::move(output_weight)), r_(r) {
  if (wi_.m() != wi_.p() || wi_.p() != plant_.m()) {
    fail(ErrorCode::DimensionMismatch, "input weight must be " + std::to_string(plant_.m()) + "x" +
                                           std::to_string(plant_.m()) + ", got " + std::to_string(wi_.p()) +
                                           "x" + std::to_string(wi_.m()));
  }
  if (wo_.m() != wo_.p() || wo_.m() != plant_.p()) {
    fail(ErrorCode::DimensionMismatch, "output weight must be " + std::to_string(plant_.p()) + "x" +
                                           std::to_string(plant_.p()) + ", got " + std::to_string(wo_.p()) +
                                           "x" + std::to_string(wo_.m()));
  }
  if (r_ < 1 || r_ > plant_.n()) {
    fail(ErrorCode::InvalidArgument,
         "target order " + std::to_string(r_) + " outside [1, " + std::to_string(plant_.n()) + "]");
  }
  if (!plant_.is_stable()) fail(ErrorCode::UnstableSystem, "plant is not stable");
  if (!wi_.is_stable()) fail(ErrorCode::UnstableSystem, "input weight is not stable");
  if (!wo_.is_stable()) fail(ErrorCode::UnstableSystem, "output weight is not stable");
}

CMatrix PoleResidue::evaluate(Complex s) const {
  CMatrix out = d.cast<Complex>();
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += left.col(k) * right.col(k).transpose() / (s - poles[i]);
  }
  return out;
}

CMatrix eval_tf(const StateSpace& sys, Complex s) {
  const Eigen::Index n = sys.n();
  if (n == 0) return sys.D().cast<Complex>();
  CMatrix shifted = -sys.A().cast<Complex>();
  shifted.diagonal().array() += s;
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    fail(ErrorCode::SingularShift, "sI - A is numerically singular at s = (" + std::to_string(s.real()) +
                                       ", " + std::to_string(s.imag()) + ")");
  }
  return sys.C().cast<Complex>() * lu.solve(sys.B().cast<Complex>()) + sys.D().cast<Complex>();
}

StateSpace error_system(const StateSpace& h, const StateSpace& hr) {
  require_same_io(h, hr, "error_system");
  if ((h.D() - hr.D()).norm() > 1e-14 * (1.0 + h.D().norm())) {
    fail(ErrorCode::InvalidArgument, "error_system: ROM feedthrough differs from the plant's");
  }
  Matrix b(h.n() + hr.n(), h.m());
  b << h.B(), hr.B();
  Matrix c(h.p(), h.n() + hr.n());
  c << h.C(), -hr.C();
  return {blockdiag(h.A(), hr.A()), b, c, Matrix::Zero(h.p(), h.m())};
}

std::vector<Eigen::Index> weighted_offsets(const WeightedProblem& prob, Eigen::Index r) {
  const Eigen::Index n = prob.plant().n();
  const Eigen::Index ni = prob.input_weight().n();
  const Eigen::Index no = prob.output_weight().n();
  return {0, n, n + r, n + r + ni, n + r + ni + no};
}

StateSpace weighted_error_realization(const WeightedProblem& prob, const StateSpace& hr) {
  const StateSpace& h = prob.plant();
  const StateSpace& wi = prob.input_weight();
  const StateSpace& wo = prob.output_weight();
  require_same_io(h, hr, "weighted_error_realization");
  const auto o = weighted_offsets(prob, hr.n());
  const Eigen::Index n = h.n(), r = hr.n(), ni = wi.n(), no = wo.n();
  const Eigen::Index nw = o[4];

  Matrix a = Matrix::Zero(nw, nw);
  a.block(o[0], o[0], n, n) = h.A();
  a.block(o[0], o[2], n, ni) = h.B() * wi.C();
  a.block(o[1], o[1], r, r) = hr.A();
  a.block(o[1], o[2], r, ni) = hr.B() * wi.C();
  a.block(o[2], o[2], ni, ni) = wi.A();
  a.block(o[3], o[0], no, n) = wo.B() * h.C();
  a.block(o[3], o[1], no, r) = -wo.B() * hr.C();
  a.block(o[3], o[3], no, no) = wo.A();

  Matrix b = Matrix::Zero(nw, wi.m());
  b.middleRows(o[0], n) = h.B() * wi.D();
  b.middleRows(o[1], r) = hr.B() * wi.D();
  b.middleRows(o[2], ni) = wi.B();

  Matrix c = Matrix::Zero(wo.p(), nw);
  c.middleCols(o[0], n) = wo.D() * h.C();
  c.middleCols(o[1], r) = -wo.D() * hr.C();
  c.middleCols(o[3], no) = wo.C();

  return {a, b, c, Matrix::Zero(wo.p(), wi.m())};
}

namespace {

// Shared body of F/G assembly; `x13` is P13 (or P23) and `x14` is Q14 (or -Q24).
std::pair<StateSpace, StateSpace> build_F_G(const StateSpace& h, const StateSpace& wi, const StateSpace& wo,
                                            const Matrix& pi, const Matrix& qo, const Matrix& x13,
                                            const Matrix& x14) {
  const Eigen::Index n = h.n(), ni = wi.n(), no = wo.n(), m = h.m(), p = h.p();
  if (pi.rows() != ni || pi.cols() != ni) fail(ErrorCode::DimensionMismatch, "Pi is " + dims(pi));
  if (qo.rows() != no || qo.cols() != no) fail(ErrorCode::DimensionMismatch, "Qo is " + dims(qo));
  if (x13.rows() != n || x13.cols() != ni) fail(ErrorCode::DimensionMismatch, "P13 block is " + dims(x13));
  if (x14.rows() != n || x14.cols() != no) fail(ErrorCode::DimensionMismatch, "Q14 block is " + dims(x14));

  Matrix af = Matrix::Zero(n + ni, n + ni);
  af.topLeftCorner(n, n) = h.A();
  af.topRightCorner(n, ni) = h.B() * wi.C();
  af.bottomRightCorner(ni, ni) = wi.A();
  Matrix bf(n + ni, m);
  bf << x13 * wi.C().transpose() + h.B() * wi.D() * wi.D().transpose(),
        pi * wi.C().transpose() + wi.B() * wi.D().transpose();
  // The weight-state part of C_f is only well-formed for square plants; it
  // contributes identically to F[H] and F[Hr], so it is dropped otherwise.
  Matrix cf = Matrix::Zero(p, n + ni);
  cf.leftCols(n) = h.C();
  if (p == m) cf.rightCols(ni) = wi.D() * wi.C();

  Matrix ag = Matrix::Zero(n + no, n + no);
  ag.topLeftCorner(n, n) = h.A();
  ag.bottomLeftCorner(no, n) = wo.B() * h.C();
  ag.bottomRightCorner(no, no) = wo.A();
  Matrix bg(n + no, m);
  bg << h.B(), wo.B() * h.D();
  Matrix cgt(n + no, p);
  cgt << x14 * wo.B() + h.C().transpose() * wo.D().transpose() * wo.D(),
         qo * wo.B() + wo.C().transpose() * wo.D();

  return {StateSpace(af, bf, cf, Matrix::Zero(p, m)),
          StateSpace(ag, bg, cgt.transpose(), Matrix::Zero(p, m))};
}

}  // namespace

std::pair<StateSpace, StateSpace> augmented_F_G(const WeightedProblem& prob, const Matrix& pi, const Matrix& qo,
                                                const Matrix& p13, const Matrix& q14) {
  return build_F_G(prob.plant(), prob.input_weight(), prob.output_weight(), pi, qo, p13, q14);
}

std::pair<StateSpace, StateSpace> augmented_F_G_rom(const WeightedProblem& prob, const StateSpace& hr,
                                                    const Matrix& pi, const Matrix& qo, const Matrix& p23,
                                                    const Matrix& q24) {
  require_same_io(prob.plant(), hr, "augmented_F_G_rom");
  const StateSpace rom(hr.A(), hr.B(), hr.C(), prob.plant().D());
  return build_F_G(rom, prob.input_weight(), prob.output_weight(), pi, qo, p23, -q24);
}

PoleResidue pole_residue(const StateSpace& sys) {
  const dense::EigenDecomposition e = dense::eig(sys.A());
  const Eigen::Index n = sys.n();
  const double scale = std::max(sys.A().norm(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(e.values(i) - e.values(j)) <= 1e-10 * scale) {
        fail(ErrorCode::DefectiveMatrix, "eigenvalues " + std::to_string(i) + " and " + std::to_string(j) +
                                             " coincide; pole-residue form does not exist");
      }
    }
  }
  Eigen::PartialPivLU<CMatrix> lu(e.vectors);
  if (n > 0 && !(lu.rcond() > 1e-14)) {
    fail(ErrorCode::DefectiveMatrix, "eigenvector matrix is numerically singular");
  }
  PoleResidue pr;
  pr.poles.assign(e.values.data(), e.values.data() + n);
  pr.spectral_factor = e.vectors;
  pr.left = sys.C().cast<Complex>() * e.vectors;
  pr.right = n > 0 ? CMatrix(lu.solve(sys.B().cast<Complex>()).transpose()) : CMatrix(sys.m(), 0);
  pr.d = sys.D();
  return pr;
}

StateSpace project(const StateSpace& plant, const Matrix& v, const Matrix& w) {
  if (v.rows() != plant.n() || w.rows() != plant.n() || v.cols() != w.cols()) {
    fail(ErrorCode::DimensionMismatch, "project: V is " + dims(v) + ", W is " + dims(w));
  }
  return {w.transpose() * plant.A() * v, w.transpose() * plant.B(), plant.C() * v, plant.D()};
}

StateSpace series(const StateSpace& g1, const StateSpace& g2) {
  if (g2.m() != g1.p()) fail(ErrorCode::DimensionMismatch, "series: output/input sizes differ");
  const Eigen::Index n1 = g1.n(), n2 = g2.n();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.A();
  a.bottomLeftCorner(n2, n1) = g2.B() * g1.C();
  a.bottomRightCorner(n2, n2) = g2.A();
  Matrix b(n1 + n2, g1.m());
  b << g1.B(), g2.B() * g1.D();
  Matrix c(g2.p(), n1 + n2);
  c << g2.D() * g1.C(), g2.C();
  return {a, b, c, g2.D() * g1.D()};
}

StateSpace feedback(const StateSpace& g1, const StateSpace& g2) {
  if (g2.m() != g1.p() || g2.p() != g1.m()) fail(ErrorCode::DimensionMismatch, "feedback: loop sizes differ");
  const Eigen::Index n1 = g1.n(), n2 = g2.n(), p = g1.p(), m = g1.m();
  const Matrix loop = Matrix::Identity(p, p) + g1.D() * g2.D();
  Eigen::FullPivLU<Matrix> lu(loop);
  if (!lu.isInvertible()) fail(ErrorCode::SingularShift, "feedback: I + D1 D2 is singular");
  const Matrix e = lu.inverse();

  Matrix cx(p, n1 + n2);
  cx << g1.C(), -g1.D() * g2.C();
  const Matrix cy = e * cx;
  const Matrix dy = e * g1.D();
  Matrix cu(m, n1 + n2);
  cu << Matrix::Zero(m, n1), -g2.C();
  cu -= g2.D() * cy;
  const Matrix du = Matrix::Identity(m, m) - g2.D() * dy;

  Matrix a = blockdiag(g1.A(), g2.A());
  a.topRows(n1) += g1.B() * cu;
  a.bottomRows(n2) += g2.B() * cy;
  Matrix b(n1 + n2, m);
  b << g1.B() * du, g2.B() * dy;
  return {a, b, cy, dy};
}

}  // namespace morh2w
