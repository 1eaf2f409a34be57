#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "qfield/cli.hpp"
#include "qfield/kernel.hpp"
#include "qfield/measure.hpp"
#include "qfield/qpoly.hpp"

using namespace qfield;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "qfield");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string& header) {
  std::istringstream in(text);
  std::getline(in, header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("qfield_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("params subcommand") {
  const Result r = call({"params", "--rho", "0.5", "--R", "2"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["q"].get<double>() == 1.0);
  CHECK(j["schema_version"] == 1);
  CHECK(j["support_halfwidth"].is_null());
  const ModelParams p = derive_params(0.5, 2.0);
  CHECK(j["A"].get<double>() == p.A);
  CHECK(j["B"].get<double>() == p.B);

  const Result z = call({"params", "--rho", "0", "--R", "1"});
  CHECK(z.code == 2);
  CHECK(z.err.find("rho != 0") != std::string::npos);
  const Result one = call({"params", "--rho", "1", "--R", "1"});
  CHECK(one.code == 2);
  CHECK(one.err.find("requires r_2+1-2|rho|>0") != std::string::npos);
  CHECK(call({"params", "--rho", "0.5"}).code == 2);
  CHECK(call({"params", "--rho", "0.5", "--R", "1", "--q", "0"}).code == 2);
  CHECK(call({"nonsense"}).code == 2);
  CHECK(call({"params", "--rho", "abc", "--R", "1"}).code == 2);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("poly output matches the library") {
  const Result r = call({"poly", "--q", "0.5", "--n-max", "4", "--x", "0.3", "-1.2"});
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, header);
  CHECK(header == "n,x,value");
  CHECK(rows.size() == 10);
  const PolyFamily f(0.5, Normalization::Monic);
  for (const auto& row : rows) CHECK(row[2] == f.eval(static_cast<std::size_t>(row[0]), row[1]));
  const Result o = call({"poly", "--q", "0.5", "--normalization", "orthonormal", "--grid", "5"});
  CHECK(o.code == 0);
  CHECK(call({"poly", "--q", "0.5", "--normalization", "weird"}).code == 2);
}

TEST_CASE("density and moments") {
  const Result r = call({"density", "--q", "0", "--grid", "5"});
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = parse_csv(r.out, header);
  CHECK(header == "x,f,F");
  REQUIRE(rows.size() == 5);
  const Measure m(0.0);
  CHECK(rows[2][0] == 0.0);
  CHECK(rows[2][1] == m.density(0.0));
  CHECK(rows[4][2] == 1.0);
  CHECK(call({"density", "--q", "-1"}).code == 2);

  const Result mo = call({"moments", "--q", "0", "--n-max", "8"});
  REQUIRE(mo.code == 0);
  const json j = json::parse(mo.out);
  const auto lib = moments(0.0, 8);
  REQUIRE(j.size() == 9);
  for (std::size_t n = 0; n <= 8; ++n) CHECK(j[n].get<double>() == lib[n]);
  const Result csv = call({"moments", "--q", "1", "--format", "csv"});
  CHECK(csv.out.rfind("n,moment\n", 0) == 0);
}

TEST_CASE("kernel subcommand") {
  const Result r = call({"kernel", "--q", "0.5", "--rho", "0.6", "--x", "0.3", "--y", "-0.7",
                         "--method", "crosscheck"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["method"] == "crosscheck");
  CHECK(j["value"].get<double>() == kernel_product(0.5, 0.6, 0.3, -0.7));
  CHECK(j["residual"].get<double>() < 1e-8);
  CHECK(j["truncation"].get<std::size_t>() > 0);
  for (const char* key : {"value", "method", "truncation", "residual"}) CHECK(j.contains(key));
  const Result viaR = call({"kernel", "--rho", "0.5", "--R", "0.9375", "--x", "0", "--y", "0"});
  CHECK(json::parse(viaR.out)["value"].get<double>() == kernel_product(params_from_q(0.5, 0.0).q, 0.5, 0, 0));
  CHECK(call({"kernel", "--q", "0.5", "--rho", "0.6", "--x", "0", "--y", "0", "--method", "x"}).code == 2);
  CHECK(call({"kernel", "--q", "0.5", "--rho", "0.6", "--x", "9", "--y", "0"}).code == 2);
}

TEST_CASE("simulate is reproducible and matches the library") {
  const Result a = call({"simulate", "--rho", "0.5", "--R", "0.9375", "--steps", "2000", "--seed", "42"});
  const Result b = call({"simulate", "--rho", "0.5", "--R", "0.9375", "--steps", "2000", "--seed", "42"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  std::string header;
  const auto rows = parse_csv(a.out, header);
  CHECK(header == "step,value");
  const ChainRun run = simulate_chain(derive_params(0.5, 0.9375), 2000, 42);
  REQUIRE(rows.size() == 2000);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i][0] == static_cast<double>(i));
    CHECK(rows[i][1] == run.values[i]);
  }
  // default seed is fixed
  CHECK(call({"simulate", "--rho", "0.5", "--R", "1", "--steps", "50"}).out ==
        call({"simulate", "--rho", "0.5", "--R", "1", "--steps", "50", "--seed",
              std::to_string(kDefaultSeed)}).out);
}

TEST_CASE("atomic file output and output directory override") {
  const fs::path dir = scratch_dir();
  const fs::path file = dir / "chain.csv";
  const Result r = call({"simulate", "--rho", "0.5", "--R", "2", "--steps", "100", "--out", file.string()});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  const std::string first = slurp(file);
  CHECK(first.rfind("step,value\n", 0) == 0);
  call({"simulate", "--rho", "0.5", "--R", "2", "--steps", "100", "--out", file.string()});
  CHECK(slurp(file) == first);
  for (const auto& e : fs::directory_iterator(dir)) {
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
  }

  ::setenv(cli::kOutputDirEnv, (dir / "sub").c_str(), 1);
  const Result rel = call({"params", "--rho", "0.5", "--R", "1", "--out", "p.json"});
  ::unsetenv(cli::kOutputDirEnv);
  CHECK(rel.code == 0);
  CHECK(fs::exists(dir / "sub" / "p.json"));
  CHECK(json::parse(slurp(dir / "sub" / "p.json"))["rho"] == 0.5);
  fs::remove_all(dir);
}

TEST_CASE("verify exit codes") {
  const Result ok = call({"verify", "--rho", "0.5", "--R", "0.9375", "--steps", "200000", "--seed", "42"});
  CHECK(ok.code == 0);
  const json j = json::parse(ok.out);
  CHECK(j["verdict"] == "pass");
  CHECK(j["schema_version"] == 1);
  CHECK(j["regression_residuals"].size() == 15);
  CHECK(j["ks"].contains("verdict_raw"));
  // too short to verify: a usage error, not a silent pass
  CHECK(call({"verify", "--rho", "0.5", "--R", "0.9375", "--steps", "1000"}).code == 2);
}

TEST_CASE("counterexample subcommand") {
  const Result r = call({"counterexample", "--rho", "0.6", "--a", "0.8", "--steps", "20000",
                         "--reps", "16", "--seed", "3"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["ks"]["family_rejected"] == true);
  CHECK(j["reps"] == 16);
  CHECK(call({"counterexample", "--rho", "0", "--a", "0.8"}).code == 2);
}

#ifdef QFIELD_CLI_PATH
TEST_CASE("installed binary behaves like the in-process entry point") {
  const fs::path dir = scratch_dir();
  const std::string exe = QFIELD_CLI_PATH;
  const std::string cmd = exe + " params --rho 0.5 --R 2 > " + (dir / "a.json").string();
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(slurp(dir / "a.json") == call({"params", "--rho", "0.5", "--R", "2"}).out);
  const std::string bad = exe + " params --rho 0 --R 1 2> " + (dir / "err.txt").string();
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(slurp(dir / "err.txt").find("rho != 0") != std::string::npos);
  fs::remove_all(dir);
}
#endif
