#include "morh2w/reducers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "morh2w/error.hpp"

namespace morh2w {
namespace {

using Clock = std::chrono::steady_clock;
using dense::as_is;
using dense::Factored;
using dense::transposed;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxUnstableRun = 5;

template <class F>
Matrix named_solve(const char* equation, F&& solve) {
  try {
    return solve();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SpectrumOverlap) fail(ErrorCode::SpectrumOverlap, std::string(equation) + ": " + e.what());
    throw;
  }
}

// Everything about the problem that does not change between iterations.
struct Context {
  const WeightedProblem& prob;
  WeightTerms wt;
  Factored fa, fai, fao;
  Matrix feed_i, feed_o, DDi, DDo;
  bool shifted = false;

  Context(const WeightedProblem& p, bool shifted_solves)
      : prob(p),
        wt(weight_terms(p)),
        fa(p.plant().A()),
        fai(p.input_weight().A()),
        fao(p.output_weight().A()),
        shifted(shifted_solves) {
    const StateSpace& wi = p.input_weight();
    const StateSpace& wo = p.output_weight();
    feed_i = wi.C() * wt.Pi + wi.D() * wi.B().transpose();
    feed_o = wo.B().transpose() * wt.Qo + wo.D().transpose() * wo.C();
    DDi = wi.D() * wi.D().transpose();
    DDo = wo.D().transpose() * wo.D();
  }

  struct Cross {
    Matrix P23, Q24, P12, Q12;
  };

  Cross cross_terms(const StateSpace& rom, const Factored& far) const {
    const StateSpace& h = prob.plant();
    const Matrix& Ci = prob.input_weight().C();
    const Matrix& Bo = prob.output_weight().B();
    Cross x;
    x.P23 = named_solve("P23 equation", [&] {
      return dense::solve_sylvester(as_is(far), transposed(fai), rom.B() * feed_i).solution;
    });
    x.Q24 = named_solve("Q24 equation", [&] {
      return dense::solve_sylvester(transposed(far), as_is(fao), -rom.C().transpose() * feed_o).solution;
    });
    const Matrix rhs_p = h.B() * Ci * x.P23.transpose() + wt.P13 * Ci.transpose() * rom.B().transpose() +
                         h.B() * DDi * rom.B().transpose();
    const Matrix rhs_q = h.C().transpose() * Bo.transpose() * x.Q24.transpose() - wt.Q14 * Bo * rom.C() -
                         h.C().transpose() * DDo * rom.C();
    x.P12 = named_solve("P12 equation", [&] {
      return shifted ? dense::solve_sylvester_shifted(h.A(), rom.A().transpose(), rhs_p).solution
                     : dense::solve_sylvester(as_is(fa), transposed(far), rhs_p).solution;
    });
    x.Q12 = named_solve("Q12 equation", [&] {
      return shifted ? dense::solve_sylvester_shifted(h.A().transpose(), rom.A(), rhs_q).solution
                     : dense::solve_sylvester(transposed(fa), as_is(far), rhs_q).solution;
    });
    return x;
  }

  // Pt and Qt of a stable ROM from its P23/Q24.
  std::pair<Matrix, Matrix> rom_gramians(const StateSpace& rom, const Factored& far, const Matrix& p23,
                                         const Matrix& q24) const {
    const Matrix& Ci = prob.input_weight().C();
    const Matrix& Bo = prob.output_weight().B();
    const Matrix& Br = rom.B();
    const Matrix& Cr = rom.C();
    const Matrix pt = dense::solve_lyapunov(
        as_is(far), Br * Ci * p23.transpose() + p23 * Ci.transpose() * Br.transpose() + Br * DDi * Br.transpose()).solution;
    const Matrix qt = dense::solve_lyapunov(
        transposed(far), -Cr.transpose() * Bo.transpose() * q24.transpose() - q24 * Bo * Cr + Cr.transpose() * DDo * Cr).solution;
    return {pt, qt};
  }

  void diagnostics(const StateSpace& rom, const Factored& far, const Cross& x, IterationRecord& rec) const {
    if (!rom.is_stable()) {
      rec.e1 = rec.e2 = rec.xbar_norm = kNaN;
      return;
    }
    const auto [pt, qt] = rom_gramians(rom, far, x.P23, x.Q24);
    const auto [e1, e2] = error_traces(prob.plant(), rom, x.P12, pt, x.Q12, qt);
    rec.e1 = e1;
    rec.e2 = e2;
    rec.xbar_norm = dense::norm2(Matrix(x.Q12.transpose() * x.P12 + qt * pt));
  }
};

void validate_options(const FwhmorOptions& opts) {
  if (!(opts.pole_tol > 0.0)) fail(ErrorCode::InvalidArgument, "pole_tol must be positive");
  if (opts.max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be at least 1");
  if (opts.stall_window < 1) fail(ErrorCode::InvalidArgument, "stall_window must be at least 1");
}

void check_order(const WeightedProblem& prob, Eigen::Index r) {
  if (r < 1 || r >= prob.plant().n()) {
    fail(ErrorCode::InvalidArgument, "iterative reduction needs 1 <= r < n (r = " + std::to_string(r) +
                                         ", n = " + std::to_string(prob.plant().n()) + ")");
  }
}

// Common bookkeeping after a projection step. Returns true when the loop
// should stop.
bool push_record(ReductionResult& res, IterationRecord rec, std::vector<Complex>& prev_poles, int it,
                 int& unstable_run, const FwhmorOptions& opts) {
  rec.poles = dense::eigenvalues(res.rom.A());
  rec.pole_change = it == 1 ? std::numeric_limits<double>::infinity() : relative_pole_change(prev_poles, rec.poles);
  rec.stable = res.rom.is_stable();
  prev_poles = rec.poles;
  res.history.records.push_back(std::move(rec));
  res.iterations = it;
  if (!res.history.records.back().stable) {
    if (++unstable_run >= kMaxUnstableRun) {
      fail(ErrorCode::UnstableIterate, std::to_string(kMaxUnstableRun) + " consecutive unstable iterates ending at iteration " +
                                           std::to_string(it));
    }
  } else {
    unstable_run = 0;
  }
  const bool done = check_convergence(res.history, opts);
  if (!opts.record_history) {
    const std::size_t keep = static_cast<std::size_t>(opts.stall_window) + 1;
    auto& r = res.history.records;
    if (r.size() > keep) r.erase(r.begin(), r.end() - static_cast<std::ptrdiff_t>(keep));
  }
  return done;
}

void finish(const Context& ctx, ReductionResult& res) {
  if (!res.rom.is_stable()) {
    res.warnings.push_back("final reduced model is unstable; P_hat/Q_hat not available");
    return;
  }
  const Factored far(res.rom.A());
  const Context::Cross x = ctx.cross_terms(res.rom, far);
  const auto [pt, qt] = ctx.rom_gramians(res.rom, far, x.P23, x.Q24);
  res.P_hat = dense::symmetrize(res.V * pt * res.V.transpose());
  res.Q_hat = dense::symmetrize(res.W * qt * res.W.transpose());
  try {
    res.interpolation = interpolation_residuals(ctx.prob, res.rom, weighted_gramians(ctx.prob, res.rom));
  } catch (const Error& e) {
    res.warnings.push_back(std::string("interpolation residuals skipped: ") + e.what());
  }
}

Matrix take_columns(const Matrix& m, Eigen::Index k) { return m.leftCols(k); }

ReductionResult balance_truncate(const WeightedProblem& prob, Eigen::Index r, const Matrix& p, const Matrix& q,
                                 const char* method) {
  const Eigen::Index n = prob.plant().n();
  if (r < 1 || r > n) fail(ErrorCode::InvalidArgument, "truncation order must lie in [1, n]");
  if (p.rows() != n || p.cols() != n || q.rows() != n || q.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "gramians must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  const Matrix u = dense::psd_factor(p);
  const Matrix l = dense::psd_factor(q);
  const dense::Svd s = dense::svd(Matrix(l.transpose() * u));
  const double smax = s.s.size() > 0 ? s.s(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.s.size() && s.s(rank) > 1e-12 * smax) ++rank;
  if (rank < r) {
    fail(ErrorCode::RankTooLow, "only " + std::to_string(rank) + " singular values above 1e-12 * sigma_max, need " +
                                    std::to_string(r));
  }
  ReductionResult res;
  res.method = method;
  res.hsv = s.s;
  if (r < s.s.size() && s.s(r - 1) - s.s(r) <= 1e-12 * smax) {
    res.warnings.push_back("tied singular values at the truncation index; keeping the first r");
  }
  const Vector scale = s.s.head(r).cwiseSqrt().cwiseInverse();
  res.V = u * take_columns(s.v, r) * scale.asDiagonal();
  res.W = l * take_columns(s.u, r) * scale.asDiagonal();
  res.rom = project(prob.plant(), res.V, res.W);
  res.converged = true;
  if (!res.rom.is_stable()) res.warnings.push_back("truncated model is unstable");
  return res;
}

}  // namespace

WeightTerms weight_terms(const WeightedProblem& prob) {
  const StateSpace& h = prob.plant();
  const StateSpace& wi = prob.input_weight();
  const StateSpace& wo = prob.output_weight();
  WeightTerms t;
  t.Pi = dense::solve_lyapunov(wi.A(), wi.B() * wi.B().transpose()).solution;
  t.Qo = dense::solve_lyapunov(Matrix(wo.A().transpose()), wo.C().transpose() * wo.C()).solution;
  t.P13 = named_solve("P13 equation", [&] {
    return dense::solve_sylvester(h.A(), Matrix(wi.A().transpose()),
                                  h.B() * (wi.C() * t.Pi + wi.D() * wi.B().transpose())).solution;
  });
  t.Q14 = named_solve("Q14 equation", [&] {
    return dense::solve_sylvester(Matrix(h.A().transpose()), wo.A(),
                                  h.C().transpose() * (wo.B().transpose() * t.Qo + wo.D().transpose() * wo.C())).solution;
  });
  return t;
}

std::pair<Matrix, Matrix> biorth_gs(const Matrix& p12, const Matrix& q12) {
  if (p12.rows() != q12.rows() || p12.cols() != q12.cols()) {
    fail(ErrorCode::DimensionMismatch, "biorth_gs: P12 and Q12 must have equal shapes");
  }
  const Eigen::Index n = p12.rows(), r = p12.cols();
  if (r > n) fail(ErrorCode::RankDeficient, "biorth_gs: more columns than rows");
  Matrix v = Matrix::Zero(n, r), w = Matrix::Zero(n, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    Vector vi = p12.col(i);
    Vector wi = -q12.col(i);
    const double v0 = vi.norm(), w0 = wi.norm();
    // Two sweeps: the second removes what cancellation left behind.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < i; ++k) {
        vi -= v.col(k) * w.col(k).dot(vi);
        wi -= w.col(k) * v.col(k).dot(wi);
      }
    }
    const double vn = vi.norm(), wn = wi.norm();
    if (!(vn > 1e-12 * v0) || !(wn > 1e-12 * w0) || v0 == 0.0 || w0 == 0.0) {
      fail(ErrorCode::RankDeficient, "biorth_gs: column " + std::to_string(i) + " is dependent on earlier ones");
    }
    vi /= vn;
    wi /= wn;
    const double pivot = wi.dot(vi);
    if (!(std::abs(pivot) > 1e-13)) {
      fail(ErrorCode::PivotBreakdown, "biorth_gs: |w^T v| = " + std::to_string(std::abs(pivot)) + " at column " +
                                          std::to_string(i));
    }
    v.col(i) = vi / pivot;
    w.col(i) = wi;
  }
  return {v, w};
}

double relative_pole_change(const std::vector<Complex>& prev, const std::vector<Complex>& cur) {
  if (prev.size() != cur.size()) fail(ErrorCode::DimensionMismatch, "pole sets differ in size");
  std::vector<bool> used(cur.size(), false);
  double worst = 0.0;
  for (const Complex& p : prev) {
    std::size_t best = cur.size();
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cur.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(cur[j] - p);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    used[best] = true;
    const double denom = std::abs(p);
    worst = std::max(worst, denom > 0.0 ? dist / denom : dist);
  }
  return worst;
}

bool check_convergence(const ConvergenceHistory& history, const FwhmorOptions& opts) {
  const auto& recs = history.records;
  if (recs.empty() || !recs.back().stable) return false;
  const std::size_t win = static_cast<std::size_t>(std::max(1, opts.stall_window));

  if (recs.size() >= win) {
    bool ok = true;
    for (std::size_t j = recs.size() - win; j < recs.size(); ++j) ok = ok && recs[j].pole_change <= opts.pole_tol;
    if (ok) return true;
  }
  if (opts.use_error_traces && recs.size() >= win + 1) {
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    bool ok = true;
    for (std::size_t j = recs.size() - win; j < recs.size(); ++j) {
      ok = ok && rel(recs[j].e1, recs[j - 1].e1) <= opts.pole_tol && rel(recs[j].e2, recs[j - 1].e2) <= opts.pole_tol;
    }
    if (ok) return true;
  }
  return opts.use_xbar && recs.back().xbar_norm <= opts.xbar_tol;
}

ReductionResult fwhmor(const WeightedProblem& prob, const StateSpace& init, const FwhmorOptions& opts) {
  validate_options(opts);
  const StateSpace& h = prob.plant();
  check_order(prob, init.n());
  if (init.m() != h.m() || init.p() != h.p()) fail(ErrorCode::DimensionMismatch, "initial ROM has the wrong I/O size");

  const Context ctx(prob, opts.shifted_solves);
  ReductionResult res;
  res.method = "FWHMOR";
  res.rom = StateSpace(init.A(), init.B(), init.C(), h.D());
  Context::Cross x = ctx.cross_terms(res.rom, Factored(res.rom.A()));
  std::vector<Complex> prev_poles;
  int unstable_run = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const auto t0 = Clock::now();
    std::tie(res.V, res.W) = biorth_gs(x.P12, x.Q12);
    res.rom = project(h, res.V, res.W);
    const Factored far(res.rom.A());
    // These cross terms feed both this record and the next projection.
    x = ctx.cross_terms(res.rom, far);
    IterationRecord rec;
    ctx.diagnostics(res.rom, far, x, rec);
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (push_record(res, std::move(rec), prev_poles, it, unstable_run, opts)) {
      res.converged = true;
      break;
    }
  }
  finish(ctx, res);
  return res;
}

FwitiaConfig fwitia_config_from(const StateSpace& rom) {
  const PoleResidue pr = pole_residue(rom);
  FwitiaConfig cfg;
  for (const Complex& l : pr.poles) cfg.points.push_back(-l);
  if (rom.m() == 1 && rom.p() == 1) {
    cfg.right_dirs = CMatrix::Ones(1, rom.n());
    cfg.left_dirs = CMatrix::Ones(1, rom.n());
  } else {
    cfg.right_dirs = pr.right;
    cfg.left_dirs = pr.left;
  }
  return cfg;
}

ReductionResult fwitia(const WeightedProblem& prob, const FwitiaConfig& cfg0, const FwhmorOptions& opts,
                       FwitiaMode mode) {
  validate_options(opts);
  const StateSpace& h = prob.plant();
  const Eigen::Index n = h.n();
  const Eigen::Index r = static_cast<Eigen::Index>(cfg0.points.size());
  check_order(prob, r);
  if (cfg0.right_dirs.rows() != h.m() || cfg0.right_dirs.cols() != r || cfg0.left_dirs.rows() != h.p() ||
      cfg0.left_dirs.cols() != r) {
    fail(ErrorCode::DimensionMismatch, "tangential directions do not match the interpolation points");
  }

  const Context ctx(prob, opts.shifted_solves);
  const auto [fsys, gsys] = augmented_F_G(prob, ctx.wt.Pi, ctx.wt.Qo, ctx.wt.P13, ctx.wt.Q14);
  const CMatrix af = fsys.A().cast<Complex>();
  const CMatrix bf = fsys.B().cast<Complex>();
  const CMatrix agt = gsys.A().transpose().cast<Complex>();
  const CMatrix cgt = gsys.C().transpose().cast<Complex>();

  auto shifted_solve = [](const CMatrix& a, Complex s, const CVector& rhs) {
    CMatrix m = -a;
    m.diagonal().array() += s;
    Eigen::PartialPivLU<CMatrix> lu(m);
    if (!(lu.rcond() > 1e-14)) fail(ErrorCode::SingularShift, "interpolation point hits a pole of the augmented system");
    return CVector(lu.solve(rhs));
  };

  FwitiaConfig cfg = cfg0;
  ReductionResult res;
  res.method = "FWITIA";
  std::vector<Complex> prev_poles;
  int unstable_run = 0;
  // Only the caller's points are checked; mirrored poles of an unstable
  // iterate leave the right half-plane and the solves still make sense.
  for (const Complex& s : cfg.points) {
    if (!(s.real() > 0.0)) fail(ErrorCode::InvalidArgument, "interpolation points must lie in the right half-plane");
  }
  for (int it = 1; it <= opts.max_iters; ++it) {
    const auto t0 = Clock::now();
    Matrix va(n, r), wa(n, r);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < r;) {
      const Complex s = cfg.points[static_cast<std::size_t>(i)];
      const CVector x = shifted_solve(af, s, bf * cfg.right_dirs.col(i)).head(n);
      const CVector y = shifted_solve(agt, s, cgt * cfg.left_dirs.col(i)).head(n);
      const bool complex_point = std::abs(s.imag()) > 1e-12 * std::abs(s);
      if (complex_point) {
        const bool paired = i + 1 < r && std::abs(cfg.points[static_cast<std::size_t>(i + 1)] - std::conj(s)) <=
                                             1e-10 * std::abs(s);
        if (!paired) fail(ErrorCode::InvalidArgument, "interpolation points are not closed under conjugation");
        // [v, conj(v)] and [Re v, Im v] span the same real subspace.
        va.col(col) = x.real();
        va.col(col + 1) = x.imag();
        wa.col(col) = y.real();
        wa.col(col + 1) = y.imag();
        col += 2;
        i += 2;
      } else {
        va.col(col) = x.real();
        wa.col(col) = y.real();
        col += 1;
        i += 1;
      }
    }

    if (mode == FwitiaMode::Robust) {
      std::tie(res.V, res.W) = biorth_gs(va, -wa);
    } else {
      const Matrix v = dense::orth(va);
      const Matrix w = dense::orth(wa);
      if (v.cols() != r || w.cols() != r) fail(ErrorCode::RankDeficient, "rational Krylov basis lost rank");
      const Matrix m = v.transpose() * w;
      Eigen::PartialPivLU<Matrix> lu(m);
      if (!(lu.rcond() > 1e-14)) fail(ErrorCode::SingularCorrection, "V^T W is singular; use the robust mode");
      res.V = v;
      res.W = w * lu.inverse();
    }
    res.rom = project(h, res.V, res.W);
    IterationRecord rec;
    {
      const Factored far(res.rom.A());
      ctx.diagnostics(res.rom, far, ctx.cross_terms(res.rom, far), rec);
    }
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool done = push_record(res, std::move(rec), prev_poles, it, unstable_run, opts);
    if (done) {
      res.converged = true;
      break;
    }
    const FwitiaConfig next = fwitia_config_from(res.rom);
    cfg.points = next.points;
    cfg.right_dirs = next.right_dirs;
    cfg.left_dirs = next.left_dirs;
  }
  finish(ctx, res);
  return res;
}

ReductionResult fwbt(const WeightedProblem& prob, Eigen::Index r) {
  const StateSpace& h = prob.plant();
  const WeightTerms wt = weight_terms(prob);
  const Matrix& Ci = prob.input_weight().C();
  const Matrix& Di = prob.input_weight().D();
  const Matrix& Bo = prob.output_weight().B();
  const Matrix& Do = prob.output_weight().D();
  const Factored fa(h.A());
  const Matrix p = dense::solve_lyapunov(as_is(fa), h.B() * Ci * wt.P13.transpose() +
                                                        wt.P13 * Ci.transpose() * h.B().transpose() +
                                                        h.B() * Di * Di.transpose() * h.B().transpose()).solution;
  const Matrix q = dense::solve_lyapunov(transposed(fa), h.C().transpose() * Bo.transpose() * wt.Q14.transpose() +
                                                             wt.Q14 * Bo * h.C() +
                                                             h.C().transpose() * Do.transpose() * Do * h.C()).solution;
  ReductionResult res = balance_truncate(prob, r, p, q, "FWBT");
  res.P_hat = p;
  res.Q_hat = q;
  return res;
}

ReductionResult afwbt(const WeightedProblem& prob, Eigen::Index r, const Matrix& p_hat, const Matrix& q_hat) {
  ReductionResult res = balance_truncate(prob, r, p_hat, q_hat, "A-FWBT");
  res.P_hat = p_hat;
  res.Q_hat = q_hat;
  return res;
}

StateSpace default_initial_rom(const StateSpace& plant, Eigen::Index r) {
  const Eigen::Index n = plant.n();
  if (r < 1 || r > n) fail(ErrorCode::InvalidArgument, "initial order must lie in [1, n]");
  const dense::EigenDecomposition e = dense::eig(plant.A());
  Matrix basis(n, r);
  Eigen::Index cols = 0;
  // eig() sorts by ascending real part with conjugates adjacent, so the
  // slowest poles sit at the end.
  for (Eigen::Index k = n - 1; k >= 0 && cols < r;) {
    const Complex lam = e.values(k);
    const CVector v = e.vectors.col(k);
    if (std::abs(lam.imag()) > 1e-12 * std::max(1.0, std::abs(lam))) {
      basis.col(cols++) = v.real();
      if (cols < r) basis.col(cols++) = v.imag();
      k -= 2;
    } else {
      basis.col(cols++) = v.real();
      k -= 1;
    }
  }
  const Matrix q = dense::orth(basis);
  if (q.cols() != r) fail(ErrorCode::RankDeficient, "slow invariant subspace has deficient rank");
  return project(plant, q, q);
}

}  // namespace morh2w
