#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "morh2w/error.hpp"
#include "morh2w/harness.hpp"
#include "morh2w/norms.hpp"
#include "morh2w/parallel.hpp"

namespace morh2w {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string fmt(double x, int digits = 12) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, what + ": '" + s + "' is not a number");
  }
}

long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, what + ": '" + s + "' is not an integer");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// ${NAME} is replaced from the environment; unset names stay verbatim.
std::string expand_env(const std::string& s) {
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto open = s.find("${", pos);
    const auto close = open == std::string::npos ? std::string::npos : s.find('}', open);
    if (close == std::string::npos) {
      out += s.substr(pos);
      break;
    }
    out += s.substr(pos, open - pos);
    const std::string name = s.substr(open + 2, close - open - 2);
    const char* value = std::getenv(name.c_str());
    out += value ? std::string(value) : s.substr(open, close - open + 1);
    pos = close + 1;
  }
  return out;
}

std::string resolve(const fs::path& base, const std::string& raw) {
  if (raw.empty()) return raw;
  const std::string p = expand_env(raw);
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

struct Models {
  StateSpace plant, wi, wo;
};

StateSpace build_weight(const WeightSpec& w, Eigen::Index size, const StateSpace* loop_wi,
                        const StateSpace* loop_wo) {
  switch (w.kind) {
    case WeightSpec::Kind::Identity:
      return StateSpace::identity(size);
    case WeightSpec::Kind::File:
      return load_statespace(w.path);
    case WeightSpec::Kind::Bandpass: {
      // SISO filter repeated on every channel.
      const StateSpace f = butterworth_bandpass(w.half_order, w.lo, w.hi);
      const Eigen::Index k = f.n();
      Matrix a = Matrix::Zero(k * size, k * size), b = Matrix::Zero(k * size, size), c = Matrix::Zero(size, k * size);
      for (Eigen::Index i = 0; i < size; ++i) {
        a.block(i * k, i * k, k, k) = f.A();
        b.block(i * k, i, k, 1) = f.B();
        c.block(i, i * k, 1, k) = f.C();
      }
      return {a, b, c, f.D()(0, 0) * Matrix::Identity(size, size)};
    }
    case WeightSpec::Kind::LoopInput:
      if (!loop_wi) fail(ErrorCode::InvalidArgument, "loop weights need loop_plant");
      return *loop_wi;
    case WeightSpec::Kind::LoopOutput:
      if (!loop_wo) fail(ErrorCode::InvalidArgument, "loop weights need loop_plant");
      return *loop_wo;
  }
  fail(ErrorCode::InvalidArgument, "unknown weight kind");
}

Models load_models(const ExperimentConfig& cfg) {
  Models mdl;
  mdl.plant = load_statespace(cfg.plant);
  std::optional<std::pair<StateSpace, StateSpace>> loop;
  if (!cfg.loop_plant.empty()) loop = closed_loop_weights(load_statespace(cfg.loop_plant), mdl.plant);
  const StateSpace* lwi = loop ? &loop->first : nullptr;
  const StateSpace* lwo = loop ? &loop->second : nullptr;
  mdl.wi = build_weight(cfg.input_weight, mdl.plant.m(), lwi, lwo);
  mdl.wo = build_weight(cfg.output_weight, mdl.plant.p(), lwi, lwo);
  return mdl;
}

json options_json(const FwhmorOptions& o) {
  return {{"max_iters", o.max_iters},     {"pole_tol", o.pole_tol},       {"stall_window", o.stall_window},
          {"use_xbar", o.use_xbar},       {"xbar_tol", o.xbar_tol},       {"use_error_traces", o.use_error_traces},
          {"shifted_solves", o.shifted_solves}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

fs::path staging_dir(const fs::path& dir) {
  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  return tmp;
}

void commit_dir(const fs::path& tmp, const fs::path& dir) {
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

void write_result_files(const fs::path& dir, const WeightedProblem& prob, const ReductionResult& res,
                        const std::string& meta_json, bool timings) {
  save_statespace(dir / "rom.json", res.rom);
  {
    std::ostringstream h;
    write_history_csv(h, res.history, timings);
    write_text(dir / "history.csv", h.str());
  }
  std::string report = report_csv_header() + "\n";
  try {
    report += report_csv_row(deviation_report(prob, res.rom, res.V, res.W)) + "\n";
  } catch (const Error&) {
    // unstable ROM: no gramians, header only
  }
  write_text(dir / "report.csv", report);
  write_text(dir / "meta.json", meta_json);
  write_matrix_market(dir / "V.mtx", res.V);
  write_matrix_market(dir / "W.mtx", res.W);
}

std::string sigma_text(const StateSpace& sys, const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_sigma_csv(os, sigma_sweep(sys, cfg.sigma_lo, cfg.sigma_hi, cfg.sigma_points));
  return os.str();
}

const std::string kTableHeader = "method,order,h2,hinf,iters,converged,seconds";

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::FWBT:
      return "FWBT";
    case Method::FWITIA:
      return "FWITIA";
    case Method::FWHMOR:
      return "FWHMOR";
    case Method::AFWBT:
      return "A-FWBT";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  const std::string l = lower(s);
  if (l == "fwbt") return Method::FWBT;
  if (l == "fwitia") return Method::FWITIA;
  if (l == "fwhmor") return Method::FWHMOR;
  if (l == "afwbt" || l == "a-fwbt") return Method::AFWBT;
  fail(ErrorCode::InvalidArgument, "unknown method '" + s + "' (fwbt, fwitia, fwhmor, afwbt)");
}

WeightSpec parse_weight_spec(const std::string& s) {
  WeightSpec w;
  const std::string l = lower(s);
  if (l == "identity") return w;
  if (l == "loop-input") {
    w.kind = WeightSpec::Kind::LoopInput;
    return w;
  }
  if (l == "loop-output") {
    w.kind = WeightSpec::Kind::LoopOutput;
    return w;
  }
  if (l.rfind("bandpass:", 0) == 0) {
    const auto parts = split(s, ':');
    if (parts.size() != 4) fail(ErrorCode::InvalidBand, "expected bandpass:N:lo:hi, got '" + s + "'");
    w.kind = WeightSpec::Kind::Bandpass;
    w.half_order = static_cast<int>(parse_int(parts[1], "bandpass order"));
    w.lo = parse_double(parts[2], "bandpass lo");
    w.hi = parse_double(parts[3], "bandpass hi");
    return w;
  }
  w.kind = WeightSpec::Kind::File;
  w.path = s;
  return w;
}

void ExperimentConfig::validate() const {
  if (plant.empty()) fail(ErrorCode::InvalidArgument, "config: plant path is empty");
  if (methods.empty()) fail(ErrorCode::InvalidArgument, "config: at least one method is required");
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) {
    fail(ErrorCode::InvalidArgument, "config: methods repeat");
  }
  if (orders.empty()) fail(ErrorCode::InvalidArgument, "config: at least one order is required");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] < 1) fail(ErrorCode::InvalidArgument, "config: orders must be positive");
    if (i > 0 && orders[i] <= orders[i - 1]) fail(ErrorCode::InvalidArgument, "config: orders must be strictly ascending");
  }
  for (const WeightSpec* w : {&input_weight, &output_weight}) {
    if (w->kind == WeightSpec::Kind::Bandpass) {
      if (w->half_order < 1) fail(ErrorCode::InvalidBand, "config: bandpass half_order must be >= 1");
      if (!(w->lo > 0.0) || !(w->lo < w->hi)) fail(ErrorCode::InvalidBand, "config: bandpass needs 0 < lo < hi");
    }
    if (w->kind == WeightSpec::Kind::File && w->path.empty()) fail(ErrorCode::InvalidArgument, "config: empty weight path");
    if ((w->kind == WeightSpec::Kind::LoopInput || w->kind == WeightSpec::Kind::LoopOutput) && loop_plant.empty()) {
      fail(ErrorCode::InvalidArgument, "config: loop weights need loop_plant");
    }
  }
  if (init_mode != "slow" && init_mode != "random") fail(ErrorCode::InvalidArgument, "config: init_mode is slow or random");
  if (!(sigma_lo > 0.0) || !(sigma_lo < sigma_hi)) fail(ErrorCode::InvalidArgument, "config: need 0 < sigma_lo < sigma_hi");
  if (sigma_points < 2) fail(ErrorCode::InvalidArgument, "config: sigma_points must be >= 2");
  if (options.max_iters < 1 || !(options.pole_tol > 0.0) || options.stall_window < 1) {
    fail(ErrorCode::InvalidArgument, "config: bad iteration options");
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
  const fs::path base = path.parent_path();
  ExperimentConfig cfg;
  auto weight = [&](const json& j) {
    WeightSpec w;
    if (j.is_string()) {
      w = parse_weight_spec(j.get<std::string>());
    } else if (j.is_object() && j.contains("bandpass")) {
      const json& b = j["bandpass"];
      w.kind = WeightSpec::Kind::Bandpass;
      w.half_order = b.value("half_order", 2);
      w.lo = b.at("lo").get<double>();
      w.hi = b.at("hi").get<double>();
    } else {
      fail(ErrorCode::ParseError, path.string() + ": weight must be a string or {\"bandpass\": {...}}");
    }
    if (w.kind == WeightSpec::Kind::File) w.path = resolve(base, w.path);
    return w;
  };
  try {
    cfg.plant = resolve(base, doc.at("plant").get<std::string>());
    if (doc.contains("input_weight")) cfg.input_weight = weight(doc["input_weight"]);
    if (doc.contains("output_weight")) cfg.output_weight = weight(doc["output_weight"]);
    if (doc.contains("loop_plant")) cfg.loop_plant = resolve(base, doc["loop_plant"].get<std::string>());
    if (doc.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : doc["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    cfg.orders = doc.at("orders").get<std::vector<int>>();
    cfg.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("out")) cfg.out = resolve(base, doc["out"].get<std::string>());
    if (doc.contains("init")) cfg.init = resolve(base, doc["init"].get<std::string>());
    cfg.init_mode = doc.value("init_mode", cfg.init_mode);
    if (doc.contains("fwitia_mode")) {
      const std::string m = lower(doc["fwitia_mode"].get<std::string>());
      if (m == "robust") {
        cfg.fwitia_mode = FwitiaMode::Robust;
      } else if (m == "faithful") {
        cfg.fwitia_mode = FwitiaMode::Faithful;
      } else {
        fail(ErrorCode::InvalidArgument, path.string() + ": fwitia_mode is robust or faithful");
      }
    }
    if (doc.contains("options")) {
      const json& o = doc["options"];
      FwhmorOptions& op = cfg.options;
      op.max_iters = o.value("max_iters", op.max_iters);
      op.pole_tol = o.value("pole_tol", op.pole_tol);
      op.stall_window = o.value("stall_window", op.stall_window);
      op.use_xbar = o.value("use_xbar", op.use_xbar);
      op.xbar_tol = o.value("xbar_tol", op.xbar_tol);
      op.use_error_traces = o.value("use_error_traces", op.use_error_traces);
      op.shifted_solves = o.value("shifted_solves", op.shifted_solves);
    }
    if (doc.contains("sigma")) {
      const json& s = doc["sigma"];
      cfg.sigma_lo = s.value("lo", cfg.sigma_lo);
      cfg.sigma_hi = s.value("hi", cfg.sigma_hi);
      cfg.sigma_points = s.value("points", cfg.sigma_points);
    }
    cfg.timings = doc.value("timings", false);
    cfg.assert_fwhmor_beats_fwbt = doc.value("assert_fwhmor_beats_fwbt", false);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

WeightedProblem build_problem(const ExperimentConfig& cfg, int order) {
  Models mdl = load_models(cfg);
  return {std::move(mdl.plant), std::move(mdl.wi), std::move(mdl.wo), order};
}

StateSpace initial_rom(const ExperimentConfig& cfg, const StateSpace& plant, int order) {
  if (!cfg.init.empty()) {
    StateSpace init = load_statespace(cfg.init);
    if (init.n() == order) return init;
  }
  if (cfg.init_mode == "random") {
    const StateSpace r = random_stable(order, plant.m(), plant.p(), cfg.seed + static_cast<std::uint64_t>(order));
    return {r.A(), r.B(), r.C(), plant.D()};
  }
  return default_initial_rom(plant, order);
}

const TableRow* ComparisonTable::find(Method m, int order) const {
  for (const auto& row : rows) {
    if (row.method == m && row.order == order) return &row;
  }
  return nullptr;
}

ComparisonTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Models mdl = load_models(cfg);
  const fs::path out = cfg.out;
  if (!out.empty()) fs::create_directories(out / "runs");

  const int n_orders = static_cast<int>(cfg.orders.size());
  std::vector<std::vector<TableRow>> per_order(cfg.orders.size());
  const bool wants_fwhmor =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::FWHMOR) != cfg.methods.end() ||
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::AFWBT) != cfg.methods.end();

#pragma omp parallel for schedule(dynamic) num_threads(worker_threads())
  for (int k = 0; k < n_orders; ++k) {
    const int r = cfg.orders[static_cast<std::size_t>(k)];
    std::vector<TableRow>& rows = per_order[static_cast<std::size_t>(k)];
    std::optional<WeightedProblem> prob;
    std::optional<StateSpace> init;
    std::optional<ErrorCode> setup_failure;
    try {
      prob.emplace(mdl.plant, mdl.wi, mdl.wo, r);
      if (wants_fwhmor || std::find(cfg.methods.begin(), cfg.methods.end(), Method::FWITIA) != cfg.methods.end()) {
        init = initial_rom(cfg, mdl.plant, r);
      }
    } catch (const Error& e) {
      setup_failure = e.code();
    }
    // FWHMOR first: A-FWBT reuses its gramian estimates.
    std::optional<ReductionResult> fwhmor_res;
    std::optional<ErrorCode> fwhmor_failure;
    auto get_fwhmor = [&]() -> const ReductionResult& {
      if (!fwhmor_res) {
        if (fwhmor_failure) fail(*fwhmor_failure, "FWHMOR run failed");
        try {
          fwhmor_res = fwhmor(*prob, *init, cfg.options);
        } catch (const Error& e) {
          fwhmor_failure = e.code();
          throw;
        }
      }
      return *fwhmor_res;
    };

    for (const Method method : cfg.methods) {
      TableRow row;
      row.method = method;
      row.order = r;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (setup_failure) fail(*setup_failure, "problem setup failed");
        ReductionResult res;
        switch (method) {
          case Method::FWBT:
            res = fwbt(*prob, r);
            break;
          case Method::FWHMOR:
            res = get_fwhmor();
            break;
          case Method::FWITIA:
            res = fwitia(*prob, fwitia_config_from(*init), cfg.options, cfg.fwitia_mode);
            break;
          case Method::AFWBT: {
            const ReductionResult& fw = get_fwhmor();
            res = afwbt(*prob, r, fw.P_hat, fw.Q_hat);
            break;
          }
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const StateSpace ew = weighted_error_realization(*prob, res.rom);
        row.h2 = h2_norm(ew);
        row.hinf = hinf_norm(ew).value;
        row.iters = res.iterations;
        row.converged = res.converged;
        row.seconds = cfg.timings ? seconds : 0.0;
        if (!out.empty()) {
          std::string tag = method_name(method);
          tag.erase(std::remove(tag.begin(), tag.end(), '-'), tag.end());
          const fs::path dir = out / "runs" / (tag + "_r" + std::to_string(r));
          json meta = {{"method", method_name(method)},
                       {"order", r},
                       {"converged", res.converged},
                       {"iterations", res.iterations},
                       {"h2", row.h2},
                       {"hinf", row.hinf},
                       {"options", options_json(cfg.options)},
                       {"warnings", res.warnings},
                       {"seed", cfg.seed}};
          if (cfg.timings) meta["timings"] = {{"seconds", seconds}};
          if (res.hsv.size() > 0) meta["hsv"] = std::vector<double>(res.hsv.data(), res.hsv.data() + res.hsv.size());
          const fs::path tmp = staging_dir(dir);
          write_result_files(tmp, *prob, res, meta.dump(2) + "\n", cfg.timings);
          write_text(tmp / "sigma.csv", sigma_text(error_system(mdl.plant, res.rom), cfg));
          write_text(tmp / "sigma_weighted.csv", sigma_text(ew, cfg));
          commit_dir(tmp, dir);
        }
      } catch (const Error& e) {
        row.failure = std::string(e.name());
      } catch (const std::exception&) {
        row.failure = "IoError";
      }
      if (!row.failure.empty()) {
        row.h2 = row.hinf = std::nan("");
        row.iters = 0;
        row.converged = false;
        row.seconds = 0.0;
      }
      rows.push_back(row);
    }
  }

  ComparisonTable table;
  for (auto& rows : per_order) {
    for (auto& row : rows) table.rows.push_back(std::move(row));
  }
  if (!out.empty()) {
    std::ostringstream t, pretty;
    write_table_csv(t, table, cfg.timings);
    write_table_pretty_csv(pretty, table);
    // re-parse before publishing
    std::istringstream check(t.str());
    read_table_csv(check);
    write_text(out / "table.csv", t.str());
    write_text(out / "table_pretty.csv", pretty.str());
  }
  return table;
}

std::vector<std::string> ordering_violations(const ComparisonTable& t) {
  std::vector<std::string> out;
  for (const auto& row : t.rows) {
    if (row.method != Method::FWHMOR) continue;
    const TableRow* bt = t.find(Method::FWBT, row.order);
    if (!bt) continue;
    if (!row.failure.empty() || !bt->failure.empty()) {
      out.push_back("r=" + std::to_string(row.order) + ": a cell failed, ordering not checkable");
    } else if (row.h2 > bt->h2) {
      out.push_back("r=" + std::to_string(row.order) + ": FWHMOR h2 " + fmt(row.h2) + " > FWBT h2 " + fmt(bt->h2));
    }
  }
  return out;
}

void write_table_csv(std::ostream& out, const ComparisonTable& t, bool timings) {
  out << kTableHeader << '\n';
  for (const auto& row : t.rows) {
    out << method_name(row.method) << ',' << row.order << ',';
    if (row.failure.empty()) {
      out << fmt(row.h2) << ',' << fmt(row.hinf);
    } else {
      out << "FAILED:" << row.failure << ",FAILED:" << row.failure;
    }
    out << ',' << row.iters << ',' << (row.converged ? "true" : "false") << ',' << fmt(timings ? row.seconds : 0.0)
        << '\n';
  }
}

void write_table_pretty_csv(std::ostream& out, const ComparisonTable& t) {
  out << "method,order,h2_pretty,hinf_pretty,iters,converged\n";
  for (const auto& row : t.rows) {
    out << method_name(row.method) << ',' << row.order << ',';
    if (row.failure.empty()) {
      out << std::fixed << std::setprecision(4) << row.h2 << ',' << row.hinf << std::defaultfloat;
    } else {
      out << "FAILED:" << row.failure << ",FAILED:" << row.failure;
    }
    out << ',' << row.iters << ',' << (row.converged ? "true" : "false") << '\n';
  }
}

ComparisonTable read_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTableHeader) {
    fail(ErrorCode::ParseError, "table.csv:1: header must be '" + kTableHeader + "'");
  }
  ComparisonTable t;
  std::set<std::pair<int, int>> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string at = "table.csv:" + std::to_string(lineno);
    const auto f = split(line, ',');
    if (f.size() != 7) fail(ErrorCode::ParseError, at + ": expected 7 fields");
    TableRow row;
    row.method = parse_method(f[0]);
    row.order = static_cast<int>(parse_int(f[1], at + " order"));
    if (row.order < 1) fail(ErrorCode::ParseError, at + ": order must be positive");
    const bool failed = f[2].rfind("FAILED:", 0) == 0;
    if (failed) {
      if (f[3] != f[2] || f[2].size() == 7) fail(ErrorCode::ParseError, at + ": malformed FAILED marker");
      row.failure = f[2].substr(7);
      row.h2 = row.hinf = std::nan("");
    } else {
      row.h2 = parse_double(f[2], at + " h2");
      row.hinf = parse_double(f[3], at + " hinf");
      if (!std::isfinite(row.h2) || !std::isfinite(row.hinf) || row.h2 < 0 || row.hinf < 0) {
        fail(ErrorCode::ParseError, at + ": norms must be finite and non-negative");
      }
    }
    row.iters = static_cast<int>(parse_int(f[4], at + " iters"));
    if (row.iters < 0) fail(ErrorCode::ParseError, at + ": negative iteration count");
    if (f[5] != "true" && f[5] != "false") fail(ErrorCode::ParseError, at + ": converged must be true or false");
    row.converged = f[5] == "true";
    row.seconds = parse_double(f[6], at + " seconds");
    if (!std::isfinite(row.seconds) || row.seconds < 0) fail(ErrorCode::ParseError, at + ": bad seconds");
    if (!seen.insert({static_cast<int>(row.method), row.order}).second) {
      fail(ErrorCode::ParseError, at + ": duplicate (method, order)");
    }
    t.rows.push_back(row);
  }
  return t;
}

void write_history_csv(std::ostream& out, const ConvergenceHistory& h, bool timings) {
  out << "iteration,pole_change,e1,e2,xbar_norm,stable,seconds,poles\n";
  for (std::size_t i = 0; i < h.records.size(); ++i) {
    const IterationRecord& rec = h.records[i];
    out << i + 1 << ',' << fmt(rec.pole_change) << ',' << fmt(rec.e1) << ',' << fmt(rec.e2) << ',' << fmt(rec.xbar_norm)
        << ',' << (rec.stable ? "true" : "false") << ',' << fmt(timings ? rec.seconds : 0.0) << ',';
    for (std::size_t k = 0; k < rec.poles.size(); ++k) {
      if (k) out << ';';
      out << fmt(rec.poles[k].real()) << (rec.poles[k].imag() < 0 ? "" : "+") << fmt(rec.poles[k].imag()) << 'j';
    }
    out << '\n';
  }
}

void save_result(const fs::path& dir, const WeightedProblem& prob, const ReductionResult& res,
                 const std::string& meta_json, bool timings) {
  if (!dir.parent_path().empty()) fs::create_directories(dir.parent_path());
  const fs::path tmp = staging_dir(dir);
  write_result_files(tmp, prob, res, meta_json, timings);
  commit_dir(tmp, dir);
}

}  // namespace morh2w
