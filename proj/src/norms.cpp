#include "morh2w/norms.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "morh2w/error.hpp"
#include "morh2w/parallel.hpp"

namespace morh2w {
namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / (n - 1);
  for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = std::exp(a + step * k);
  w.front() = lo;
  w.back() = hi;
  return w;
}

void check_sweep_args(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    fail(ErrorCode::InvalidArgument, "sigma_sweep: need 0 < omega_lo < omega_hi");
  }
  if (n < 2) fail(ErrorCode::InvalidArgument, "sigma_sweep: need at least 2 points");
}

double golden_max(const FrequencyEvaluator& f, double a, double b, double& best_w) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f.sigma_max(c);
  double fd = f.sigma_max(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1e-300, a + b); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f.sigma_max(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f.sigma_max(d);
    }
  }
  best_w = fc >= fd ? c : d;
  return std::max(fc, fd);
}

}  // namespace

H2Traces h2_traces(const StateSpace& sys) {
  if (sys.D().norm() > 1e-14) fail(ErrorCode::NonzeroFeedthrough, "H2 norm is infinite for D != 0");
  if (!sys.is_stable()) fail(ErrorCode::UnstableSystem, "H2 norm of an unstable system");
  H2Traces t;
  if (sys.n() == 0) return t;
  const dense::Factored fa(sys.A());
  const Matrix p = dense::solve_lyapunov(dense::as_is(fa), sys.B() * sys.B().transpose()).solution;
  const Matrix q = dense::solve_lyapunov(dense::transposed(fa), sys.C().transpose() * sys.C()).solution;
  t.controllability = (sys.C() * p * sys.C().transpose()).trace();
  t.observability = (sys.B().transpose() * q * sys.B()).trace();
  const double floor = 1e-12 * (sys.C().squaredNorm() * p.norm() + sys.B().squaredNorm() * q.norm());
  const double gap = std::abs(t.controllability - t.observability);
  if (gap > 1e-8 * std::max(std::abs(t.controllability), std::abs(t.observability)) + floor) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "trace formulas disagree: " << t.controllability << " vs " << t.observability;
    fail(ErrorCode::NoConvergence, msg.str());
  }
  return t;
}

double h2_norm(const StateSpace& sys) { return std::sqrt(std::max(0.0, h2_traces(sys).controllability)); }

FrequencyEvaluator::FrequencyEvaluator(const StateSpace& sys) : d_(sys.D()) {
  if (sys.n() == 0) {
    h_ = Matrix(0, 0);
    bh_ = Matrix(0, sys.m());
    ch_ = Matrix(sys.p(), 0);
    return;
  }
  Eigen::HessenbergDecomposition<Matrix> hd(sys.A());
  const Matrix q = hd.matrixQ();
  h_ = hd.matrixH();
  bh_ = q.transpose() * sys.B();
  ch_ = sys.C() * q;
}

CMatrix FrequencyEvaluator::operator()(Complex s) const {
  const Eigen::Index n = h_.rows();
  if (n == 0) return d_.cast<Complex>();
  CMatrix m = -h_.cast<Complex>();
  m.diagonal().array() += s;
  CMatrix x = bh_.cast<Complex>();
  // Gaussian elimination on an upper Hessenberg matrix: only one subdiagonal
  // entry per column, pivoting between adjacent rows.
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
      m.row(k).tail(n - k).swap(m.row(k + 1).tail(n - k));
      x.row(k).swap(x.row(k + 1));
    }
    if (m(k, k) == Complex(0.0)) continue;
    const Complex l = m(k + 1, k) / m(k, k);
    m.row(k + 1).tail(n - k) -= l * m.row(k).tail(n - k);
    x.row(k + 1) -= l * x.row(k);
  }
  const double dmax = m.diagonal().cwiseAbs().maxCoeff();
  const double dmin = m.diagonal().cwiseAbs().minCoeff();
  if (!(dmin > 1e-14 * dmax)) {
    fail(ErrorCode::SingularShift, "sI - A is numerically singular at omega = " + std::to_string(s.imag()));
  }
  m.triangularView<Eigen::Upper>().solveInPlace(x);
  return ch_.cast<Complex>() * x + d_.cast<Complex>();
}

Vector FrequencyEvaluator::sigma(double omega) const {
  const CMatrix g = (*this)(Complex(0.0, omega));
  if (g.size() == 0) return Vector(0);
  return Eigen::JacobiSVD<CMatrix>(g).singularValues();
}

double FrequencyEvaluator::sigma_max(double omega) const {
  const Vector s = sigma(omega);
  return s.size() > 0 ? s(0) : 0.0;
}

HinfResult hinf_norm(const StateSpace& sys, double rel_tol) {
  if (!sys.is_stable()) fail(ErrorCode::UnstableSystem, "H-infinity norm of an unstable system");
  const double dval = dense::norm2(sys.D());
  if (sys.n() == 0) return {dval, 0.0};

  const std::vector<Complex> poles = dense::real_schur(sys.A()).eigenvalues();
  double rho = 0.0;
  for (const Complex& l : poles) rho = std::max(rho, std::abs(l));
  if (rho == 0.0) rho = 1.0;

  // Lightly damped resonances are narrower than any affordable grid cell, so
  // the pole frequencies themselves are added as candidates.
  std::vector<double> w = log_grid(1e-4 * rho, 1e4 * rho, 256);
  w.push_back(0.0);
  for (const Complex& l : poles) {
    if (std::abs(l.imag()) > 0.0) w.push_back(std::abs(l.imag()));
    w.push_back(std::abs(l));
  }
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());

  const FrequencyEvaluator f(sys);
  std::vector<double> vals(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) vals[i] = f.sigma_max(w[i]);

  HinfResult best{dval, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool left_ok = i == 0 || vals[i] >= vals[i - 1];
    const bool right_ok = i + 1 == w.size() || vals[i] >= vals[i + 1];
    if (!left_ok || !right_ok) continue;
    if (vals[i] > best.value) best = {vals[i], w[i]};
    const double a = i == 0 ? w[0] : w[i - 1];
    const double b = i + 1 == w.size() ? 10.0 * w[i] : w[i + 1];
    double wpk = w[i];
    const double v = golden_max(f, a, b, wpk);
    if (v > best.value) best = {v, wpk};
  }
  (void)rel_tol;  // golden refinement runs to a tighter width than any sane rel_tol
  return best;
}

void SigmaData::validate() const {
  if (frequencies.size() != singular_values.size()) {
    fail(ErrorCode::InvalidArgument, "sigma data: frequency and value counts differ");
  }
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0)) fail(ErrorCode::InvalidArgument, "sigma data: non-positive frequency");
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
      fail(ErrorCode::InvalidArgument, "sigma data: frequencies not strictly ascending at row " + std::to_string(i));
    }
    const Vector& s = singular_values[i];
    if (i > 0 && s.size() != singular_values[0].size()) {
      fail(ErrorCode::InvalidArgument, "sigma data: ragged rows");
    }
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      if (!(s(k) >= 0.0) || (k > 0 && s(k) > s(k - 1))) {
        fail(ErrorCode::InvalidArgument, "sigma data: row " + std::to_string(i) + " is not nonincreasing");
      }
    }
  }
}

SigmaData sigma_sweep(const StateSpace& sys, double omega_lo, double omega_hi, int n_points) {
  check_sweep_args(omega_lo, omega_hi, n_points);
  const FrequencyEvaluator f(sys);
  SigmaData out;
  out.frequencies = log_grid(omega_lo, omega_hi, n_points);
  out.singular_values.resize(out.frequencies.size());
  // Exceptions must not escape an OpenMP region; capture the first one.
  std::exception_ptr err;
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (int k = 0; k < n_points; ++k) {
    try {
      out.singular_values[static_cast<std::size_t>(k)] = f.sigma(out.frequencies[static_cast<std::size_t>(k)]);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

SigmaData sigma_sweep_serial(const StateSpace& sys, double omega_lo, double omega_hi, int n_points) {
  check_sweep_args(omega_lo, omega_hi, n_points);
  const FrequencyEvaluator f(sys);
  SigmaData out;
  out.frequencies = log_grid(omega_lo, omega_hi, n_points);
  for (double w : out.frequencies) out.singular_values.push_back(f.sigma(w));
  return out;
}

void write_sigma_csv(std::ostream& out, const SigmaData& data) {
  const Eigen::Index k = data.singular_values.empty() ? 0 : data.singular_values.front().size();
  out << "omega";
  for (Eigen::Index i = 1; i <= k; ++i) out << ",sigma_" << i;
  out << '\n';
  out.precision(12);
  for (std::size_t r = 0; r < data.frequencies.size(); ++r) {
    out << data.frequencies[r];
    for (Eigen::Index i = 0; i < k; ++i) out << ',' << data.singular_values[r](i);
    out << '\n';
  }
}

SigmaData read_sigma_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "sigma csv: empty input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "omega") fail(ErrorCode::ParseError, "sigma csv: line 1: expected 'omega' column");
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] != "sigma_" + std::to_string(i)) {
      fail(ErrorCode::ParseError, "sigma csv: line 1: unexpected column '" + header[i] + "'");
    }
  }
  SigmaData data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "sigma csv: line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (vals.size() != header.size()) {
      fail(ErrorCode::ParseError, "sigma csv: line " + std::to_string(lineno) + ": wrong column count");
    }
    data.frequencies.push_back(vals[0]);
    data.singular_values.push_back(Eigen::Map<const Vector>(vals.data() + 1, static_cast<Eigen::Index>(vals.size() - 1)));
  }
  data.validate();
  return data;
}

double hinf_grid_scan(const StateSpace& sys, int n_points, bool parallel) {
  const FrequencyEvaluator f(sys);
  double rho = 1.0;
  if (sys.n() > 0) rho = std::max(1e-12, sys.A().cwiseAbs().rowwise().sum().maxCoeff());
  const std::vector<double> w = log_grid(1e-4 * rho, 1e4 * rho, n_points);
  double best = 0.0;
  if (parallel) {
#pragma omp parallel for num_threads(worker_threads()) reduction(max : best) schedule(static)
    for (int k = 0; k < n_points; ++k) best = std::max(best, f.sigma_max(w[static_cast<std::size_t>(k)]));
  } else {
    for (double x : w) best = std::max(best, f.sigma_max(x));
  }
  return best;
}

}  // namespace morh2w
