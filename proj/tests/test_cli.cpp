#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "morh2w/cli.hpp"
#include "morh2w/norms.hpp"

using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "morh2w");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = morh2w::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> illus_args(const std::string& cmd) {
  return {cmd, "--plant", fixture("illus6.json"), "--wi", fixture("wi.json"), "--wo", fixture("wo.json")};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("norms of the scalar lag") {
  const Run r = cli({"norms", "--plant", fixture("scalar1.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("h2=0.707107\n") != std::string::npos);
  CHECK(r.out.find("hinf=1 ") != std::string::npos);
}

TEST_CASE("reduce reports convergence") {
  auto args = illus_args("reduce");
  for (const char* a : {"-r", "2", "--method", "fwhmor", "--init"}) args.emplace_back(a);
  args.push_back(fixture("init2.json"));
  const Run r = cli(args);
  CHECK(r.code == 0);
  CHECK(r.out.find("converged in 4 iterations") != std::string::npos);
  CHECK(r.out.find("h2=0.0061") != std::string::npos);
}

TEST_CASE("compare writes the table") {
  const fs::path out = fs::temp_directory_path() / "morh2w_cli_compare";
  fs::remove_all(out);
  auto args = illus_args("compare");
  for (const char* a : {"-r", "2", "--out"}) args.emplace_back(a);
  args.push_back(out.string());
  const Run r = cli(args);
  CHECK(r.code == 0);
  std::ifstream in(out / "table.csv");
  const auto t = morh2w::read_table_csv(in);
  CHECK(t.rows.size() == 4);
  CHECK(std::abs(t.find(morh2w::Method::FWHMOR, 2)->h2 - 0.0061) <= 2e-4);
  CHECK(std::abs(t.find(morh2w::Method::FWBT, 2)->h2 - 0.0080) <= 2e-4);
}

TEST_CASE("sigma and report") {
  const Run s = cli({"sigma", "--plant", fixture("scalar1.json"), "--band", "0.1:10", "--points", "5"});
  CHECK(s.code == 0);
  std::istringstream in(s.out);
  CHECK(morh2w::read_sigma_csv(in).frequencies.size() == 5);

  auto args = illus_args("report");
  args.emplace_back("--rom");
  args.push_back(fixture("rom_fwhmor_printed.json"));
  const Run r = cli(args);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("dev_A,", 0) == 0);
}

TEST_CASE("exit codes") {
  const Run usage = cli({"frobnicate"});
  CHECK(usage.code == 1);
  CHECK(usage.err.find("Usage") != std::string::npos);
  CHECK(cli({"norms"}).code == 1);
  CHECK(cli({"norms", "--plant", "/nonexistent.json"}).code == 1);
  CHECK(cli({"sigma", "--plant", fixture("scalar1.json"), "--band", "10:1"}).code == 1);

  const fs::path dir = fs::temp_directory_path() / "morh2w_cli_unstable";
  fs::create_directories(dir);
  std::ofstream(dir / "u.json") << R"({"A": [[1]], "B": [[1]], "C": [[1]], "D": [[0]]})";
  const Run numerical = cli({"norms", "--plant", (dir / "u.json").string()});
  CHECK(numerical.code == 2);
  CHECK(numerical.err.find("UnstableSystem") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("the installed binary runs") {
  const std::string cmd = std::string(MORH2W_CLI) + " norms --plant " + fixture("scalar1.json") + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
}

}  // TEST_SUITE
