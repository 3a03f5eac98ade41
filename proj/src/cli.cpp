#include "morh2w/cli.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "morh2w/error.hpp"
#include "morh2w/harness.hpp"
#include "morh2w/norms.hpp"

namespace morh2w {
namespace {

struct Flags {
  std::string plant, wi = "identity", wo = "identity", out, init, rom, basis, config, band, mode = "robust";
  std::vector<int> orders;
  std::vector<std::string> methods;
  double tol = 1e-2;
  int max_iters = 200;
  std::uint64_t seed = 0;
  int points = 0;  // 0: subcommand default
  bool timings = false;
};

std::pair<double, double> parse_band(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) fail(ErrorCode::InvalidBand, "--band expects lo:hi, got '" + s + "'");
  double lo = 0, hi = 0;
  try {
    lo = std::stod(s.substr(0, colon));
    hi = std::stod(s.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidBand, "--band expects numbers, got '" + s + "'");
  }
  if (!(lo > 0.0) || !(lo < hi)) fail(ErrorCode::InvalidBand, "--band needs 0 < lo < hi");
  return {lo, hi};
}

FwitiaMode parse_mode(const std::string& s) {
  if (s == "robust") return FwitiaMode::Robust;
  if (s == "faithful") return FwitiaMode::Faithful;
  fail(ErrorCode::InvalidArgument, "--mode is robust or faithful");
}

void print_matrix(std::ostream& out, const char* name, const Matrix& m) {
  const Eigen::IOFormat f(8, 0, "  ", "\n", "  [", "]");
  out << name << " =\n";
  if (m.size() == 0) {
    out << "  [] (" << m.rows() << "x" << m.cols() << ")\n";
  } else {
    out << m.format(f) << "\n";
  }
}

WeightedProblem problem_from(const Flags& f, int order) {
  StateSpace plant = load_statespace(f.plant);
  auto weight = [&](const std::string& spec, Eigen::Index size) {
    const WeightSpec w = parse_weight_spec(spec);
    switch (w.kind) {
      case WeightSpec::Kind::Identity:
        return StateSpace::identity(size);
      case WeightSpec::Kind::File:
        return load_statespace(w.path);
      case WeightSpec::Kind::Bandpass:
        if (size != 1) fail(ErrorCode::InvalidArgument, "bandpass weights from the command line are SISO; use compare --config");
        return butterworth_bandpass(w.half_order, w.lo, w.hi);
      default:
        fail(ErrorCode::InvalidArgument, "loop weights need compare --config");
    }
  };
  StateSpace wi = weight(f.wi, plant.m());
  StateSpace wo = weight(f.wo, plant.p());
  return {std::move(plant), std::move(wi), std::move(wo), order};
}

FwhmorOptions options_from(const Flags& f) {
  FwhmorOptions o;
  o.pole_tol = f.tol;
  o.max_iters = f.max_iters;
  return o;
}

int cmd_reduce(const Flags& f, std::ostream& out) {
  if (f.orders.size() != 1) fail(ErrorCode::InvalidArgument, "reduce takes exactly one order");
  if (f.methods.size() > 1) fail(ErrorCode::InvalidArgument, "reduce takes one method");
  const Method method = f.methods.empty() ? Method::FWHMOR : parse_method(f.methods.front());
  const int r = f.orders.front();
  const WeightedProblem prob = problem_from(f, r);
  const FwhmorOptions opts = options_from(f);
  ExperimentConfig cfg;
  cfg.init = f.init;
  cfg.seed = f.seed;
  ReductionResult res;
  switch (method) {
    case Method::FWBT:
      res = fwbt(prob, r);
      break;
    case Method::FWHMOR:
      res = fwhmor(prob, initial_rom(cfg, prob.plant(), r), opts);
      break;
    case Method::FWITIA:
      res = fwitia(prob, fwitia_config_from(initial_rom(cfg, prob.plant(), r)), opts, parse_mode(f.mode));
      break;
    case Method::AFWBT: {
      const ReductionResult fw = fwhmor(prob, initial_rom(cfg, prob.plant(), r), opts);
      res = afwbt(prob, r, fw.P_hat, fw.Q_hat);
      break;
    }
  }
  out << "method=" << method_name(method) << " order=" << r << "\n";
  if (method == Method::FWHMOR || method == Method::FWITIA) {
    if (res.converged) {
      out << "converged in " << res.iterations << " iterations\n";
    } else {
      out << "not converged after " << res.iterations << " iterations\n";
    }
  }
  for (const auto& w : res.warnings) out << "warning: " << w << "\n";
  print_matrix(out, "A", res.rom.A());
  print_matrix(out, "B", res.rom.B());
  print_matrix(out, "C", res.rom.C());
  print_matrix(out, "D", res.rom.D());
  const StateSpace ew = weighted_error_realization(prob, res.rom);
  const HinfResult hinf = hinf_norm(ew);
  out << std::setprecision(6) << "h2=" << h2_norm(ew) << "\nhinf=" << hinf.value << " omega=" << hinf.omega << "\n";
  if (!f.out.empty()) {
    nlohmann::json meta = {{"method", method_name(method)}, {"order", r}, {"converged", res.converged},
                           {"iterations", res.iterations}, {"warnings", res.warnings}};
    save_result(f.out, prob, res, meta.dump(2) + "\n", f.timings);
  }
  return 0;
}

int cmd_compare(const Flags& f, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  if (!f.config.empty()) {
    cfg = load_experiment_config(f.config);
  } else {
    if (f.plant.empty()) fail(ErrorCode::InvalidArgument, "compare needs --plant or --config");
    cfg.plant = f.plant;
    cfg.input_weight = parse_weight_spec(f.wi);
    cfg.output_weight = parse_weight_spec(f.wo);
    cfg.orders = f.orders;
    if (!f.methods.empty()) {
      cfg.methods.clear();
      for (const auto& m : f.methods) cfg.methods.push_back(parse_method(m));
    }
    cfg.options = options_from(f);
    cfg.init = f.init;
    cfg.fwitia_mode = parse_mode(f.mode);
  }
  if (!f.out.empty()) cfg.out = f.out;
  if (f.seed != 0) cfg.seed = f.seed;
  if (!f.band.empty()) std::tie(cfg.sigma_lo, cfg.sigma_hi) = parse_band(f.band);
  if (f.points) cfg.sigma_points = f.points;
  cfg.timings = cfg.timings || f.timings;
  cfg.validate();
  const ComparisonTable table = run_experiment(cfg);
  write_table_csv(out, table, cfg.timings);
  int code = 0;
  for (const auto& row : table.rows) {
    if (!row.failure.empty()) code = 2;
  }
  if (cfg.assert_fwhmor_beats_fwbt) {
    for (const auto& v : ordering_violations(table)) {
      err << "ordering violated: " << v << "\n";
      code = 2;
    }
  }
  return code;
}

int cmd_norms(const Flags& f, std::ostream& out) {
  const StateSpace sys = load_statespace(f.plant);
  out << std::setprecision(6);
  try {
    out << "h2=" << h2_norm(sys) << "\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonzeroFeedthrough) throw;
    out << "h2=inf\n";
  }
  const HinfResult h = hinf_norm(sys);
  out << "hinf=" << h.value << " omega=" << h.omega << "\n";
  return 0;
}

int cmd_sigma(const Flags& f, std::ostream& out) {
  const StateSpace sys = load_statespace(f.plant);
  const auto [lo, hi] = f.band.empty() ? std::pair{1e-2, 1e2} : parse_band(f.band);
  const SigmaData data = sigma_sweep(sys, lo, hi, f.points ? f.points : 200);
  if (f.out.empty()) {
    write_sigma_csv(out, data);
  } else {
    std::ofstream file(f.out);
    if (!file) fail(ErrorCode::IoError, "cannot write " + f.out);
    write_sigma_csv(file, data);
  }
  return 0;
}

int cmd_report(const Flags& f, std::ostream& out) {
  if (f.rom.empty()) fail(ErrorCode::InvalidArgument, "report needs --rom");
  const StateSpace rom = load_statespace(f.rom);
  const WeightedProblem prob = problem_from(f, static_cast<int>(rom.n()));
  const GramianPartition g = weighted_gramians(prob, rom);
  Matrix v, w;
  if (!f.basis.empty()) {
    v = read_matrix_market(std::filesystem::path(f.basis) / "V.mtx");
    w = read_matrix_market(std::filesystem::path(f.basis) / "W.mtx");
  } else {
    // the projection FWHMOR would build next from this ROM
    std::tie(v, w) = biorth_gs(g.P12, g.Q12);
  }
  const OptimalityReport rep = deviation_report(prob, rom, v, w, g);
  out << report_csv_header() << "\n" << report_csv_row(rep) << "\n";
  const InterpolationResiduals ir = interpolation_residuals(prob, rom, g);
  out << std::setprecision(6) << "interp_F=" << ir.F_norm << " interp_G=" << ir.G_norm << "\n";
  return 0;
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidBand:
    case ErrorCode::InvalidArgument:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-weighted H2 model reduction", "morh2w"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub, bool weights) {
    sub->add_option("--plant", f.plant, "system file (JSON) or Matrix Market directory");
    if (weights) {
      sub->add_option("--wi", f.wi, "input weight: identity, bandpass:N:lo:hi, or a file");
      sub->add_option("--wo", f.wo, "output weight: identity, bandpass:N:lo:hi, or a file");
    }
  };
  auto iterative = [&](CLI::App* sub) {
    sub->add_option("-r,--order", f.orders, "reduced order(s)")->delimiter(',');
    sub->add_option("--method", f.methods, "fwbt, fwitia, fwhmor, afwbt")->delimiter(',');
    sub->add_option("--tol", f.tol, "relative pole-change tolerance");
    sub->add_option("--max-iters", f.max_iters, "iteration cap");
    sub->add_option("--init", f.init, "initial ROM file");
    sub->add_option("--mode", f.mode, "FWITIA mode: robust or faithful");
    sub->add_option("--seed", f.seed, "seed for random initial ROMs");
  };

  CLI::App* reduce = app.add_subcommand("reduce", "reduce one system with one method");
  common(reduce, true);
  iterative(reduce);
  reduce->add_option("--out", f.out, "result directory");
  reduce->add_flag("--timings", f.timings, "record wall times");

  CLI::App* compare = app.add_subcommand("compare", "run a method/order comparison");
  common(compare, true);
  iterative(compare);
  compare->add_option("--config", f.config, "experiment config (JSON)");
  compare->add_option("--out", f.out, "output directory");
  compare->add_option("--band", f.band, "sigma band lo:hi");
  compare->add_option("--points", f.points, "sigma points");
  compare->add_flag("--timings", f.timings, "record wall times in the table");

  CLI::App* norms = app.add_subcommand("norms", "H2 and Hinf norms of a system");
  common(norms, false);

  CLI::App* sigma = app.add_subcommand("sigma", "singular value sweep to CSV");
  common(sigma, false);
  sigma->add_option("--band", f.band, "frequency band lo:hi");
  sigma->add_option("--points", f.points, "number of log-spaced points");
  sigma->add_option("--out", f.out, "CSV file (default stdout)");

  CLI::App* report = app.add_subcommand("report", "optimality report for a plant/ROM pair");
  common(report, true);
  report->add_option("--rom", f.rom, "reduced model file");
  report->add_option("--basis", f.basis, "directory with V.mtx and W.mtx");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (f.plant.empty() && !(sub == compare && !f.config.empty())) {
      fail(ErrorCode::InvalidArgument, "--plant is required");
    }
    if ((sub == reduce || (sub == compare && f.config.empty())) && f.orders.empty()) {
      fail(ErrorCode::InvalidArgument, "--order is required");
    }
    if (f.points != 0 && f.points < 2) fail(ErrorCode::InvalidArgument, "--points must be >= 2");
    if (sub == reduce) return cmd_reduce(f, out);
    if (sub == compare) return cmd_compare(f, out, err);
    if (sub == norms) return cmd_norms(f, out);
    if (sub == sigma) return cmd_sigma(f, out);
    return cmd_report(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    const int code = exit_code(e.code());
    if (code == 1) err << "\n" << sub->help();
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace morh2w
