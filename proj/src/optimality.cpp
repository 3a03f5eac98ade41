#include "morh2w/optimality.hpp"

#include <cmath>
#include <sstream>

#include "morh2w/error.hpp"

namespace morh2w {
namespace {

using dense::norm2;

Matrix sylv(const Matrix& a, const Matrix& b, const Matrix& c) {
  return dense::solve_sylvester(a, b, c).solution;
}

Matrix lyap(const Matrix& a, const Matrix& q) { return dense::solve_lyapunov(a, q).solution; }

void require_stable_blocks(const WeightedProblem& prob, const StateSpace& hr) {
  if (!prob.plant().is_stable(0.0)) fail(ErrorCode::NotHurwitz, "plant block of A_w is not Hurwitz");
  if (!hr.is_stable(0.0)) fail(ErrorCode::NotHurwitz, "reduced-model block of A_w is not Hurwitz");
  if (!prob.input_weight().is_stable(0.0)) fail(ErrorCode::NotHurwitz, "input-weight block of A_w is not Hurwitz");
  if (!prob.output_weight().is_stable(0.0)) fail(ErrorCode::NotHurwitz, "output-weight block of A_w is not Hurwitz");
}

}  // namespace

Matrix GramianPartition::assemble_P() const {
  const Eigen::Index n = P.rows(), r = Pt.rows(), ni = Pi.rows(), no = Po.rows();
  Matrix out(n + r + ni + no, n + r + ni + no);
  out << P, P12, P13, P14,
         P12.transpose(), Pt, P23, P24,
         P13.transpose(), P23.transpose(), Pi, P34,
         P14.transpose(), P24.transpose(), P34.transpose(), Po;
  return out;
}

Matrix GramianPartition::assemble_Q() const {
  const Eigen::Index n = Q.rows(), r = Qt.rows(), ni = Qi.rows(), no = Qo.rows();
  Matrix out(n + r + ni + no, n + r + ni + no);
  out << Q, Q12, Q13, Q14,
         Q12.transpose(), Qt, Q23, Q24,
         Q13.transpose(), Q23.transpose(), Qi, Q34,
         Q14.transpose(), Q24.transpose(), Q34.transpose(), Qo;
  return out;
}

GramianPartition weighted_gramians(const WeightedProblem& prob, const StateSpace& hr) {
  require_stable_blocks(prob, hr);
  const StateSpace ew = weighted_error_realization(prob, hr);
  const dense::Factored fa(ew.A());
  const Matrix pw = dense::solve_lyapunov(dense::as_is(fa), ew.B() * ew.B().transpose()).solution;
  const Matrix qw = dense::solve_lyapunov(dense::transposed(fa), ew.C().transpose() * ew.C()).solution;

  const auto o = weighted_offsets(prob, hr.n());
  auto blk = [&](const Matrix& m, int i, int j) {
    return Matrix(m.block(o[i], o[j], o[i + 1] - o[i], o[j + 1] - o[j]));
  };
  GramianPartition g;
  g.P = blk(pw, 0, 0); g.P12 = blk(pw, 0, 1); g.P13 = blk(pw, 0, 2); g.P14 = blk(pw, 0, 3);
  g.Pt = blk(pw, 1, 1); g.P23 = blk(pw, 1, 2); g.P24 = blk(pw, 1, 3);
  g.Pi = blk(pw, 2, 2); g.P34 = blk(pw, 2, 3); g.Po = blk(pw, 3, 3);
  g.Q = blk(qw, 0, 0); g.Q12 = blk(qw, 0, 1); g.Q13 = blk(qw, 0, 2); g.Q14 = blk(qw, 0, 3);
  g.Qt = blk(qw, 1, 1); g.Q23 = blk(qw, 1, 2); g.Q24 = blk(qw, 1, 3);
  g.Qi = blk(qw, 2, 2); g.Q34 = blk(qw, 2, 3); g.Qo = blk(qw, 3, 3);
  return g;
}

GramianPartition weighted_gramians_blockwise(const WeightedProblem& prob, const StateSpace& hr) {
  require_stable_blocks(prob, hr);
  const StateSpace& h = prob.plant();
  const StateSpace& wi = prob.input_weight();
  const StateSpace& wo = prob.output_weight();
  const Matrix &A = h.A(), &B = h.B(), &C = h.C();
  const Matrix &Ar = hr.A(), &Br = hr.B(), &Cr = hr.C();
  const Matrix &Ai = wi.A(), &Bi = wi.B(), &Ci = wi.C(), &Di = wi.D();
  const Matrix &Ao = wo.A(), &Bo = wo.B(), &Co = wo.C(), &Do = wo.D();
  const Matrix DDi = Di * Di.transpose();
  const Matrix DDo = Do.transpose() * Do;

  GramianPartition g;
  g.Pi = lyap(Ai, Bi * Bi.transpose());
  const Matrix feed_i = Ci * g.Pi + Di * Bi.transpose();
  g.P13 = sylv(A, Ai.transpose(), B * feed_i);
  g.P23 = sylv(Ar, Ai.transpose(), Br * feed_i);
  g.P = lyap(A, B * Ci * g.P13.transpose() + g.P13 * Ci.transpose() * B.transpose() + B * DDi * B.transpose());
  g.P12 = sylv(A, Ar.transpose(),
               B * Ci * g.P23.transpose() + g.P13 * Ci.transpose() * Br.transpose() + B * DDi * Br.transpose());
  g.Pt = lyap(Ar, Br * Ci * g.P23.transpose() + g.P23 * Ci.transpose() * Br.transpose() + Br * DDi * Br.transpose());
  g.P34 = sylv(Ai, Ao.transpose(), (g.P13.transpose() * C.transpose() - g.P23.transpose() * Cr.transpose()) * Bo.transpose());
  g.P14 = sylv(A, Ao.transpose(), B * Ci * g.P34 + (g.P * C.transpose() - g.P12 * Cr.transpose()) * Bo.transpose());
  g.P24 = sylv(Ar, Ao.transpose(),
               Br * Ci * g.P34 + (g.P12.transpose() * C.transpose() - g.Pt * Cr.transpose()) * Bo.transpose());
  {
    const Matrix t = Bo * (C * g.P14 - Cr * g.P24);
    g.Po = lyap(Ao, t + t.transpose());
  }

  g.Qo = lyap(Ao.transpose(), Co.transpose() * Co);
  const Matrix feed_o = Bo.transpose() * g.Qo + Do.transpose() * Co;
  g.Q14 = sylv(A.transpose(), Ao, C.transpose() * feed_o);
  g.Q24 = sylv(Ar.transpose(), Ao, -Cr.transpose() * feed_o);
  g.Q = lyap(A.transpose(),
             C.transpose() * Bo.transpose() * g.Q14.transpose() + g.Q14 * Bo * C + C.transpose() * DDo * C);
  g.Q12 = sylv(A.transpose(), Ar,
               C.transpose() * Bo.transpose() * g.Q24.transpose() - g.Q14 * Bo * Cr - C.transpose() * DDo * Cr);
  g.Qt = lyap(Ar.transpose(),
              -Cr.transpose() * Bo.transpose() * g.Q24.transpose() - g.Q24 * Bo * Cr + Cr.transpose() * DDo * Cr);
  g.Q34 = sylv(Ai.transpose(), Ao, Ci.transpose() * (B.transpose() * g.Q14 + Br.transpose() * g.Q24));
  g.Q13 = sylv(A.transpose(), Ai, C.transpose() * Bo.transpose() * g.Q34.transpose() + (g.Q * B + g.Q12 * Br) * Ci);
  g.Q23 = sylv(Ar.transpose(), Ai,
               -Cr.transpose() * Bo.transpose() * g.Q34.transpose() + (g.Q12.transpose() * B + g.Qt * Br) * Ci);
  {
    const Matrix t = Ci.transpose() * (B.transpose() * g.Q13 + Br.transpose() * g.Q23);
    g.Qi = lyap(Ai.transpose(), t + t.transpose());
  }
  return g;
}

OptimalityReport deviation_report(const WeightedProblem& prob, const StateSpace& hr, const Matrix& v,
                                  const Matrix& w) {
  return deviation_report(prob, hr, v, w, weighted_gramians(prob, hr));
}

OptimalityReport deviation_report(const WeightedProblem& prob, const StateSpace& hr, const Matrix& v,
                                  const Matrix& w, const GramianPartition& g) {
  const StateSpace& h = prob.plant();
  const Eigen::Index n = h.n(), r = hr.n();
  if (v.rows() != n || w.rows() != n || v.cols() != r || w.cols() != r) {
    fail(ErrorCode::DimensionMismatch, "deviation_report: V and W must be " + std::to_string(n) + "x" +
                                           std::to_string(r));
  }
  const Matrix &B = h.B(), &C = h.C();
  const Matrix &Br = hr.B(), &Cr = hr.C();
  const Matrix &Ci = prob.input_weight().C(), &Bi = prob.input_weight().B(), &Di = prob.input_weight().D();
  const Matrix &Bo = prob.output_weight().B(), &Co = prob.output_weight().C(), &Do = prob.output_weight().D();

  OptimalityReport rep;
  rep.Xbar = g.Q12.transpose() * g.P12 + g.Qt * g.Pt;
  rep.Ybar = g.Q12.transpose() * B + g.Qt * Br;
  rep.Zbar = C * g.P12 - Cr * g.Pt;
  rep.X = g.Q23 * g.P23.transpose() + g.Q24 * g.P24.transpose();
  rep.Y = (g.Q12.transpose() * g.P13 + g.Qt * g.P23 + g.Q23 * g.Pi + g.Q24 * g.P34.transpose()) * Ci.transpose() +
          g.Q23 * Bi * Di.transpose();
  // B_o term sign chosen so that dJ/dC~ = -2 (Do'Do Zbar + Z)
  rep.Z = Bo.transpose() * (g.Q14.transpose() * g.P12 + g.Q24.transpose() * g.Pt + g.Q34.transpose() * g.P23.transpose() +
                             g.Qo * g.P24.transpose()) +
          Do.transpose() * Co * g.P24.transpose();

  const Matrix ga = rep.Xbar + rep.X;
  const Matrix gb = rep.Ybar * Di * Di.transpose() + rep.Y;
  const Matrix gc = Do.transpose() * Do * rep.Zbar + rep.Z;
  rep.dev_A = norm2(ga);
  rep.dev_B = norm2(gb);
  rep.dev_C = norm2(gc);
  rep.dev_A_fro = ga.norm();
  rep.dev_B_fro = gb.norm();
  rep.dev_C_fro = gc.norm();
  rep.gal_P = norm2(Matrix(g.P13 - v * g.P23));
  rep.gal_Q = norm2(Matrix(g.Q14 + w * g.Q24));
  const auto [phat, qhat] = hat_gramians(g, v, w);
  rep.fit_P = norm2(Matrix(g.P - phat));
  rep.fit_Q = norm2(Matrix(g.Q - qhat));

  rep.J1 = (Do * (C * g.P * C.transpose() + Cr * g.Pt * Cr.transpose() - 2.0 * C * g.P12 * Cr.transpose()) *
            Do.transpose()).trace();
  rep.J2 = (Co * g.Po * Co.transpose() + 2.0 * Do * C * g.P14 * Co.transpose() -
            2.0 * Do * Cr * g.P24 * Co.transpose()).trace();
  rep.J3 = (Di.transpose() * (B.transpose() * g.Q * B + Br.transpose() * g.Qt * Br + 2.0 * B.transpose() * g.Q12 * Br) *
            Di).trace();
  rep.J4 = (Bi.transpose() * g.Qi * Bi + 2.0 * Di.transpose() * B.transpose() * g.Q13 * Bi +
            2.0 * Di.transpose() * Br.transpose() * g.Q23 * Bi).trace();
  rep.h2_squared = rep.J1 + rep.J2;

  const Matrix &A = h.A();
  const Matrix R1 = A * phat + phat * A.transpose() + B * Ci * g.P13.transpose() + g.P13 * Ci.transpose() * B.transpose() +
                    B * Di * Di.transpose() * B.transpose();
  const Matrix R2 = A.transpose() * qhat + qhat * A + C.transpose() * Bo.transpose() * g.Q14.transpose() +
                    g.Q14 * Bo * C + C.transpose() * Do.transpose() * Do * C;
  rep.R1_norm = norm2(R1);
  rep.R2_norm = norm2(R2);
  return rep;
}

Gradient analytic_gradient(const WeightedProblem& prob, const OptimalityReport& rep) {
  const Matrix& Di = prob.input_weight().D();
  const Matrix& Do = prob.output_weight().D();
  return {2.0 * (rep.Xbar + rep.X), 2.0 * (rep.Ybar * Di * Di.transpose() + rep.Y),
          -2.0 * (Do.transpose() * Do * rep.Zbar + rep.Z)};
}

double objective_value(const WeightedProblem& prob, const StateSpace& hr, Objective obj) {
  const GramianPartition g = weighted_gramians(prob, hr);
  const Matrix id = Matrix::Identity(prob.plant().n(), hr.n());
  // V, W only feed the projection diagnostics, which the objectives ignore.
  const OptimalityReport rep = deviation_report(prob, hr, id, id, g);
  switch (obj) {
    case Objective::J1: return rep.J1;
    case Objective::J3: return rep.J3;
    case Objective::Total: break;
  }
  return rep.J1 + rep.J2;
}

Matrix fd_gradient(const WeightedProblem& prob, const StateSpace& hr, RomParameter which, double h, Objective obj) {
  const Matrix& base = which == RomParameter::A ? hr.A() : which == RomParameter::B ? hr.B() : hr.C();
  if (h <= 0.0) h = 1e-5 * (1.0 + base.norm());
  auto eval = [&](const Matrix& param) {
    StateSpace pert = which == RomParameter::A   ? StateSpace(param, hr.B(), hr.C(), hr.D())
                      : which == RomParameter::B ? StateSpace(hr.A(), param, hr.C(), hr.D())
                                                 : StateSpace(hr.A(), hr.B(), param, hr.D());
    try {
      return objective_value(prob, pert, obj);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotHurwitz) {
        fail(ErrorCode::PerturbationUnstable, "perturbed reduced model is not stable (h = " + std::to_string(h) + ")");
      }
      throw;
    }
  };
  Matrix grad(base.rows(), base.cols());
  for (Eigen::Index j = 0; j < base.cols(); ++j) {
    for (Eigen::Index i = 0; i < base.rows(); ++i) {
      Matrix plus = base, minus = base;
      plus(i, j) += h;
      minus(i, j) -= h;
      grad(i, j) = (eval(plus) - eval(minus)) / (2.0 * h);
    }
  }
  return grad;
}

std::pair<Matrix, Matrix> hat_gramians(const GramianPartition& g, const Matrix& v, const Matrix& w) {
  return {dense::symmetrize(v * g.Pt * v.transpose()), dense::symmetrize(w * g.Qt * w.transpose())};
}

InterpolationResiduals interpolation_residuals(const WeightedProblem& prob, const StateSpace& hr,
                                               const GramianPartition& g) {
  const auto [f, gg] = augmented_F_G(prob, g.Pi, g.Qo, g.P13, g.Q14);
  const auto [fr, gr] = augmented_F_G_rom(prob, hr, g.Pi, g.Qo, g.P23, g.Q24);
  const PoleResidue pr = pole_residue(hr);
  const Eigen::Index r = hr.n();
  InterpolationResiduals out;
  out.F.resize(prob.plant().p(), r);
  out.G.resize(r, prob.plant().m());
  for (Eigen::Index i = 0; i < r; ++i) {
    const Complex s = -pr.poles[static_cast<std::size_t>(i)];
    out.F.col(i) = (eval_tf(f, s) - eval_tf(fr, s)) * pr.right.col(i);
    out.G.row(i) = pr.left.col(i).transpose() * (eval_tf(gg, s) - eval_tf(gr, s));
  }
  out.F_norm = norm2(out.F);
  out.G_norm = norm2(out.G);
  return out;
}

std::pair<double, double> error_traces(const StateSpace& plant, const StateSpace& hr, const Matrix& p12,
                                       const Matrix& pt, const Matrix& q12, const Matrix& qt) {
  const double e1 = (2.0 * plant.C() * p12 * hr.C().transpose() - hr.C() * pt * hr.C().transpose()).trace();
  const double e2 = (-2.0 * plant.B().transpose() * q12 * hr.B() - hr.B().transpose() * qt * hr.B()).trace();
  return {e1, e2};
}

std::string report_csv_header() {
  return "dev_A,dev_B,dev_C,gal_P,gal_Q,fit_P,fit_Q,dev_A_fro,dev_B_fro,dev_C_fro,J1,J2,J3,J4,R1_norm,R2_norm,h2";
}

std::string report_csv_row(const OptimalityReport& rep) {
  std::ostringstream s;
  s.precision(12);
  s << rep.dev_A << ',' << rep.dev_B << ',' << rep.dev_C << ',' << rep.gal_P << ',' << rep.gal_Q << ','
    << rep.fit_P << ',' << rep.fit_Q << ',' << rep.dev_A_fro << ',' << rep.dev_B_fro << ',' << rep.dev_C_fro << ','
    << rep.J1 << ',' << rep.J2 << ',' << rep.J3 << ',' << rep.J4 << ',' << rep.R1_norm << ',' << rep.R2_norm << ','
    << std::sqrt(std::max(0.0, rep.h2_squared));
  return s.str();
}

}  // namespace morh2w
