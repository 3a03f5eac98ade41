#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "morh2w/reducers.hpp"
#include "morh2w/statespace.hpp"

namespace morh2w {

// ---- model I/O --------------------------------------------------------------

/// Reads either a JSON document {"A": [[..]], "B": .., "C": .., "D": ..}
/// (row-major, D optional) or a directory holding A.mtx, B.mtx, C.mtx and
/// optionally D.mtx. An unstable model is accepted; a note is appended to
/// `warnings` when given.
StateSpace load_statespace(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// JSON with shortest round-trip decimal encoding (bit-exact on reload).
void save_statespace(const std::filesystem::path& path, const StateSpace& sys);
std::string statespace_to_json(const StateSpace& sys);

/// Matrix Market: coordinate or array, real or integer, general or symmetric.
Matrix read_matrix_market(const std::filesystem::path& path);
Matrix parse_matrix_market(std::istream& in, const std::string& name);
/// Writes array/real/general with 17 significant digits.
void write_matrix_market(const std::filesystem::path& path, const Matrix& m);
void save_statespace_mtx(const std::filesystem::path& dir, const StateSpace& sys);

// ---- weights -------------------------------------------------------------

/// Analog Butterworth band-pass of order 2 * half_order with half-power
/// edges w1 < w2 and unit gain at sqrt(w1 w2). Throws InvalidBand.
StateSpace butterworth_bandpass(int half_order, double w1, double w2);

/// Weights for closed-loop controller reduction with plant P and controller
/// K: Wi = (I + P K)^{-1}, Wo = (I + P K)^{-1} P, built at full order.
std::pair<StateSpace, StateSpace> closed_loop_weights(const StateSpace& plant, const StateSpace& controller);

/// Random stable realization with entries from a seeded normal generator.
StateSpace random_stable(Eigen::Index n, Eigen::Index m, Eigen::Index p, std::uint64_t seed);

// ---- experiments -----------------------------------------------------------

enum class Method { FWBT, FWITIA, FWHMOR, AFWBT };
std::string method_name(Method m);
Method parse_method(const std::string& s);

struct WeightSpec {
  enum class Kind { Identity, File, Bandpass, LoopInput, LoopOutput };
  Kind kind = Kind::Identity;
  std::string path;
  int half_order = 2;
  double lo = 0.0, hi = 0.0;
};

/// Parses "identity", "bandpass:N:lo:hi", or a model path.
WeightSpec parse_weight_spec(const std::string& s);

struct ExperimentConfig {
  std::string plant;
  WeightSpec input_weight, output_weight;
  /// Plant of the feedback loop when the reduced system is a controller.
  std::string loop_plant;
  std::vector<Method> methods{Method::FWBT, Method::FWITIA, Method::FWHMOR, Method::AFWBT};
  std::vector<int> orders;
  std::uint64_t seed = 0;
  std::string out;
  FwhmorOptions options;
  FwitiaMode fwitia_mode = FwitiaMode::Robust;
  /// Initial ROM file for FWHMOR/FWITIA; applies to orders it matches.
  std::string init;
  /// "slow" (slowest-pole Galerkin model) or "random" (seeded).
  std::string init_mode = "slow";
  double sigma_lo = 1e-2, sigma_hi = 1e2;
  int sigma_points = 200;
  bool timings = false;
  /// Reference orderings to assert, e.g. FWHMOR <= FWBT in H2 error.
  bool assert_fwhmor_beats_fwbt = false;

  /// Throws InvalidArgument naming the violated invariant.
  void validate() const;
};

/// Relative paths in the file are resolved against its directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct TableRow {
  Method method = Method::FWHMOR;
  int order = 0;
  double h2 = 0.0, hinf = 0.0;
  int iters = 0;
  bool converged = false;
  double seconds = 0.0;
  std::string failure;  // error name when the cell failed
};

struct ComparisonTable {
  std::vector<TableRow> rows;

  const TableRow* find(Method m, int order) const;
};

WeightedProblem build_problem(const ExperimentConfig& cfg, int order);

/// Initial ROM for the iterative methods at this order: the configured file
/// when its order matches, otherwise per init_mode.
StateSpace initial_rom(const ExperimentConfig& cfg, const StateSpace& plant, int order);

ComparisonTable run_experiment(const ExperimentConfig& cfg);

/// Orders at which FWHMOR's H2 error exceeds FWBT's, one message each.
std::vector<std::string> ordering_violations(const ComparisonTable& t);

void write_table_csv(std::ostream& out, const ComparisonTable& t, bool timings);
void write_table_pretty_csv(std::ostream& out, const ComparisonTable& t);
/// Parses table.csv back and checks its invariants.
ComparisonTable read_table_csv(std::istream& in);

/// history.csv: iteration,pole_change,e1,e2,xbar_norm,stable,seconds,poles
void write_history_csv(std::ostream& out, const ConvergenceHistory& h, bool timings);

/// Writes rom.json, history.csv, report.csv, meta.json, V.mtx, W.mtx into a
/// temporary sibling and renames it to `dir`.
void save_result(const std::filesystem::path& dir, const WeightedProblem& prob, const ReductionResult& res,
                 const std::string& meta_json, bool timings);

}  // namespace morh2w
