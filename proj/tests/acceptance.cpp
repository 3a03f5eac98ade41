// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "morh2w/cli.hpp"
#include "morh2w/error.hpp"
#include "morh2w/norms.hpp"
#include "morh2w/optimality.hpp"
#include "morh2w/reducers.hpp"

using namespace morh2w;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("morh2w_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig illus_config() {
  ExperimentConfig cfg = load_experiment_config(config("illus.json"));
  cfg.out.clear();
  return cfg;
}

// 1: weighted error norms of the illustrative example
Verdict illus_norms() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const ComparisonTable t = run_experiment(illus_config());
  const double elapsed = seconds_since(t0);
  const std::pair<Method, double> want[] = {
      {Method::FWBT, 0.0080}, {Method::FWITIA, 0.0061}, {Method::FWHMOR, 0.0061}, {Method::AFWBT, 0.0061}};
  for (const auto& [m, h2] : want) {
    const TableRow* row = t.find(m, 2);
    if (!row || !row->failure.empty()) {
      v.require(false, method_name(m) + " failed");
      continue;
    }
    v.require(std::abs(row->h2 - h2) <= 2e-4, method_name(m) + " h2=" + num(row->h2));
    v.require(std::abs(row->hinf - 0.0471) <= 2e-4, method_name(m) + " hinf=" + num(row->hinf));
    v.detail += (v.detail.empty() ? "" : ", ") + method_name(m) + " " + num(row->h2) + "/" + num(row->hinf);
  }
  for (const Method m : {Method::FWHMOR, Method::FWITIA}) {
    const TableRow* row = t.find(m, 2);
    v.require(row && row->converged && row->iters == 4,
              method_name(m) + " iterations=" + std::to_string(row ? row->iters : -1));
  }
  v.require(elapsed < 5.0, "runtime " + num(elapsed) + " s");
  v.detail += ", " + num(elapsed) + " s";
  return v;
}

// 2: FWHMOR optimality deviations
Verdict illus_deviations() {
  Verdict v;
  const WeightedProblem prob = illus_problem();
  const ReductionResult res = fwhmor(prob, load_statespace(fixture("init2.json")));
  const OptimalityReport rep = deviation_report(prob, res.rom, res.V, res.W);
  const std::pair<double, double> dev[] = {{rep.dev_A, 1.88e-4}, {rep.dev_B, 1.06e-4}, {rep.dev_C, 1.46e-5}};
  const char* dev_names[] = {"dev_A", "dev_B", "dev_C"};
  for (int i = 0; i < 3; ++i) {
    const double ratio = dev[i].first / dev[i].second;
    v.require(ratio >= 1.0 / 3.0 && ratio <= 3.0, std::string(dev_names[i]) + "=" + num(dev[i].first));
  }
  const std::pair<double, double> tight[] = {
      {rep.gal_P, 0.0946}, {rep.gal_Q, 0.1096}, {rep.fit_P, 0.0419}, {rep.fit_Q, 0.2247}};
  const char* tight_names[] = {"gal_P", "gal_Q", "fit_P", "fit_Q"};
  for (int i = 0; i < 4; ++i) {
    v.require(std::abs(tight[i].first - tight[i].second) <= 0.002,
              std::string(tight_names[i]) + "=" + num(tight[i].first));
  }
  if (v.pass) {
    v.detail = "dev " + num(rep.dev_A) + " " + num(rep.dev_B) + " " + num(rep.dev_C) + ", gal/fit " + num(rep.gal_P) +
               " " + num(rep.gal_Q) + " " + num(rep.fit_P) + " " + num(rep.fit_Q);
  }
  return v;
}

// 3: gradients against central differences
Verdict gradients() {
  Verdict v;
  std::mt19937_64 rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = 4 + k % 3, r = 1 + (k / 3) % 2;
    const Eigen::Index m = 1 + k % 2, p = 1 + (k / 2) % 2;
    const WeightedProblem prob(rand_stable(n, m, p, rng), rand_stable(2, m, m, rng, true),
                               rand_stable(2, p, p, rng, true), r);
    const StateSpace hr = rand_stable(r, m, p, rng);
    try {
      const OptimalityReport rep = deviation_report(prob, hr, Matrix::Zero(n, r), Matrix::Zero(n, r));
      const Gradient g = analytic_gradient(prob, rep);
      const std::pair<RomParameter, const Matrix*> cases[] = {
          {RomParameter::A, &g.dA}, {RomParameter::B, &g.dB}, {RomParameter::C, &g.dC}};
      for (const auto& [which, an] : cases) {
        const Matrix fd = fd_gradient(prob, hr, which);
        const double err = max_abs(fd - *an), tol = std::max(1e-5, 1e-4 * max_abs(*an));
        worst = std::max(worst, err / tol);
        v.require(err <= tol, "problem " + std::to_string(k) + " err " + num(err));
      }
    } catch (const Error& e) {
      v.require(false, "problem " + std::to_string(k) + ": " + e.what());
    }
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 60.0, "runtime " + num(elapsed) + " s");
  if (v.pass) v.detail = "worst err/tol " + num(worst) + ", " + num(elapsed) + " s";
  return v;
}

// 4: matrix equations against the Kronecker oracle
Verdict matrix_equations() {
  Verdict v;
  std::mt19937_64 rng(77);
  double worst_err = 0.0, worst_res = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index n = 1 + k % 8, m = 1 + (k * 3) % 8;
    const Matrix a = rand_hurwitz(n, rng, 0.1);
    const Matrix b = rand_hurwitz(m, rng, 0.1);
    const Matrix c = randn(n, m, rng);
    const auto syl = dense::solve_sylvester(a, b, c);
    const Matrix xs = kron_sylvester(a, b, c);
    const Matrix g = randn(n, n, rng);
    const Matrix q = g + g.transpose();
    const auto lyap = dense::solve_lyapunov(a, q);
    const Matrix xl = kron_sylvester(a, a.transpose(), q);
    const double e1 = (syl.solution - xs).norm() / xs.norm(), e2 = (lyap.solution - xl).norm() / xl.norm();
    worst_err = std::max({worst_err, e1, e2});
    worst_res = std::max({worst_res, syl.relative_residual, lyap.relative_residual});
  }
  v.require(worst_err <= 1e-8, "max relative error " + num(worst_err));
  v.require(worst_res <= 1e-9, "max relative residual " + num(worst_res));
  if (v.pass) v.detail = "max rel err " + num(worst_err) + ", max rel residual " + num(worst_res);
  return v;
}

// 5: FWITIA and FWHMOR from a shared start
Verdict equivalence() {
  Verdict v;
  std::vector<std::pair<WeightedProblem, StateSpace>> cases;
  cases.emplace_back(illus_problem(), load_statespace(fixture("init2.json")));
  std::mt19937_64 rng(555);
  for (int k = 0; k < 5; ++k) {
    WeightedProblem prob(rand_stable(6 + k % 3, 1, 1, rng), rand_stable(2, 1, 1, rng), rand_stable(2, 1, 1, rng), 2);
    StateSpace init = default_initial_rom(prob.plant(), 2);
    cases.emplace_back(std::move(prob), std::move(init));
  }
  double worst_tf = 0.0, worst_angle = 0.0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& [prob, init] = cases[k];
    try {
      const ReductionResult a = fwhmor(prob, init);
      const ReductionResult b = fwitia(prob, fwitia_config_from(init));
      const double gap = tf_gap(a.rom, b.rom);
      const double ang = std::max(dense::subspace_angle(a.V, b.V), dense::subspace_angle(a.W, b.W));
      worst_tf = std::max(worst_tf, gap);
      worst_angle = std::max(worst_angle, ang);
      v.require(gap <= 1e-4, "case " + std::to_string(k) + " tf gap " + num(gap));
      v.require(ang <= 1e-5, "case " + std::to_string(k) + " angle " + num(ang));
    } catch (const Error& e) {
      v.require(false, "case " + std::to_string(k) + ": " + e.what());
    }
  }
  if (v.pass) v.detail = "max tf gap " + num(worst_tf) + ", max angle " + num(worst_angle);
  return v;
}

// 6: identity weights reduce to unweighted H2 optimality
Verdict identity_weights() {
  Verdict v;
  std::mt19937_64 rng(666);
  double worst_interp = 0.0, worst_dev = 0.0;
  int clean = 0;
  for (int k = 0; k < 10; ++k) {
    const bool before = v.pass;
    v.pass = true;
    const StateSpace h = rand_stable(6 + k % 4, 1, 1, rng);
    const WeightedProblem prob(h, StateSpace::identity(1), StateSpace::identity(1), 2);
    FwhmorOptions opts;
    opts.pole_tol = 1e-10;
    opts.max_iters = 500;
    try {
      const ReductionResult res = fwhmor(prob, default_initial_rom(h, 2), opts);
      v.require(res.converged, "problem " + std::to_string(k) + " did not converge");
      for (const Complex& l : dense::eigenvalues(res.rom.A())) {
        const CMatrix a = tf(h, -l), b = tf(res.rom, -l);
        const double e = (a - b).norm() / a.norm();
        worst_interp = std::max(worst_interp, e);
        v.require(e <= 1e-6, "problem " + std::to_string(k) + " interpolation " + num(e));
      }
      const OptimalityReport rep = deviation_report(prob, res.rom, res.V, res.W);
      const double d = std::max({dense::norm2(rep.Ybar), dense::norm2(rep.Zbar), dense::norm2(Matrix(rep.Xbar + rep.X))});
      worst_dev = std::max(worst_dev, d);
      v.require(d <= 1e-6, "problem " + std::to_string(k) + " optimality " + num(d));
    } catch (const Error& e) {
      v.require(false, "problem " + std::to_string(k) + ": " + e.what());
    }
    if (v.pass) ++clean;
    v.pass = v.pass && before;
  }
  if (!v.pass) v.detail += "; " + std::to_string(clean) + "/10 problems clean";
  if (v.pass) v.detail = "max interpolation err " + num(worst_interp) + ", max deviation " + num(worst_dev);
  return v;
}

// 7: deviations decay with the order
Verdict order_sweep() {
  Verdict v;
  const WeightedProblem base = illus_problem();
  std::vector<OptimalityReport> reps;
  for (const int r : {2, 3, 4}) {
    const WeightedProblem prob = base.with_order(r);
    const StateSpace init = r == 2 ? load_statespace(fixture("init2.json")) : default_initial_rom(prob.plant(), r);
    try {
      const ReductionResult res = fwhmor(prob, init);
      if (!res.converged) {
        v.require(false, "r=" + std::to_string(r) + " did not converge in " + std::to_string(res.iterations));
        continue;
      }
      reps.push_back(deviation_report(prob, res.rom, res.V, res.W));
    } catch (const Error& e) {
      v.require(false, "r=" + std::to_string(r) + ": " + e.what());
    }
  }
  if (!v.pass) return v;
  for (std::size_t i = 1; i < reps.size(); ++i) {
    const OptimalityReport &a = reps[i - 1], &b = reps[i];
    const std::pair<const char*, std::pair<double, double>> q[] = {{"gal_P", {a.gal_P, b.gal_P}},
                                                                   {"gal_Q", {a.gal_Q, b.gal_Q}},
                                                                   {"dev_A", {a.dev_A, b.dev_A}},
                                                                   {"dev_B", {a.dev_B, b.dev_B}},
                                                                   {"dev_C", {a.dev_C, b.dev_C}}};
    for (const auto& [name, pr] : q) {
      v.require(pr.second <= 1.1 * pr.first,
                std::string(name) + " r=" + std::to_string(i + 1) + "->" + std::to_string(i + 2) + ": " +
                    num(pr.first) + " -> " + num(pr.second));
    }
  }
  return v;
}

// 8: benchmark templates
Verdict templates() {
  Verdict v;
  const char* names[] = {"clamped_beam.json", "artificial.json", "iss_controller.json"};
  int ran = 0;
  for (const char* name : names) {
    try {
      ExperimentConfig cfg = load_experiment_config(config(name));
      if (!std::getenv("MORH2W_BENCHMARK_DIR") || !fs::exists(cfg.plant)) continue;
      cfg.out = scratch(std::string("bench_") + name).string();
      const ComparisonTable t = run_experiment(cfg);
      for (const auto& msg : ordering_violations(t)) v.require(false, std::string(name) + " " + msg);
      ++ran;
    } catch (const Error& e) {
      v.require(false, std::string(name) + ": " + e.what());
    }
  }
  if (v.pass) {
    v.detail = ran ? std::to_string(ran) + " benchmark(s) ran, FWHMOR <= FWBT everywhere"
                   : "templates parse and validate; no benchmark data supplied";
  }
  return v;
}

// 9: compare twice, identical CSV bytes
Verdict determinism() {
  Verdict v;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream sink;
  for (const fs::path& out : {a, b}) {
    const std::string cfg = config("illus.json"), dir = out.string();
    const char* argv[] = {"morh2w", "compare", "--config", cfg.c_str(), "--seed", "7", "--out", dir.c_str()};
    const int code = run_cli(8, argv, sink, sink);
    v.require(code == 0, "compare exited " + std::to_string(code));
  }
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(e.path(), a);
    v.require(slurp(e.path()) == slurp(b / rel), rel.string() + " differs");
    ++files;
  }
  v.require(files > 0, "no CSV written");
  if (v.pass) v.detail = std::to_string(files) + " CSV files identical";
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"illustrative weighted errors and iteration counts", illus_norms},
      {"illustrative optimality deviations", illus_deviations},
      {"gradient oracle, 20 random problems", gradients},
      {"lyapunov/sylvester oracle, 50 instances", matrix_equations},
      {"FWITIA/FWHMOR equivalence", equivalence},
      {"identity-weight degeneration, 10 problems", identity_weights},
      {"order sweep r=2,3,4 decay", order_sweep},
      {"benchmark templates", templates},
      {"determinism of compare", determinism},
  };
  int failed = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = e.what();
    }
    if (!v.pass) ++failed;
    std::cout << "criterion " << k << " " << (v.pass ? "PASS" : "FAIL") << " " << name << ": " << v.detail << "\n";
  }
  std::cout << (9 - failed) << "/9 criteria pass\n";
  return failed;
}
