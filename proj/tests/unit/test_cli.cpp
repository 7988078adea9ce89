#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plsim/designs.hpp"
#include "plsim_cli/cli.hpp"

using namespace plsim;
using namespace plsim::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "plsim_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_sample_csv(const std::string& name, bool poison) {
  const SimSample s = gen_model42(120, 0.1, 0.3, 31);
  const fs::path path = scratch() / name;
  std::ofstream f(path);
  f.precision(17);
  f << "y,z1,z2,z3,x1\n";
  for (Index i = 0; i < s.data.n(); ++i) {
    f << s.data.y()(i);
    for (Index j = 0; j < 3; ++j) {
      f << ',';
      if (poison && i == 6 && j == 0) f << "NaN"; else f << s.data.z()(i, j);
    }
    f << ',' << s.data.x()(i, 0) << '\n';
  }
  return path.string();
}

struct Captured {
  int code;
  std::string out;
  std::string err;
};

Captured invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = main_entry(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("parse fit flags") {
  const auto r = parse_args({"fit", "--data", "d.csv", "--y", "y", "--z", "z1,z2", "--x", "x1", "--out", "f.json"});
  REQUIRE(r.config);
  CHECK_FALSE(r.exit_code);
  CHECK(r.config->command == "fit");
  CHECK(r.config->z == std::vector<std::string>{"z1", "z2"});
  CHECK(r.config->x == std::vector<std::string>{"x1"});
  CHECK(r.config->out == "f.json");
  CHECK(r.config->bandwidth == "cv");
}

TEST_CASE("usage errors exit with 2") {
  auto r = parse_args({"fit"});
  CHECK(r.exit_code == 2);
  CHECK(r.error["code"] == "MissingRequired");
  CHECK(r.error["flag"] == "--data");

  r = parse_args({"fit", "--data", "d.csv", "--z", "z1", "--nope"});
  CHECK(r.exit_code == 2);
  CHECK(r.error["code"] == "UnknownFlag");

  r = parse_args({"fit", "--data", "d.csv", "--z", "z1", "--bandwidth", "0.2", "--bandwidth-grid", "0.1,0.2"});
  CHECK(r.exit_code == 2);
  CHECK(r.error["code"] == "ConflictingFlags");

  r = parse_args({"fit", "--data", "d.csv", "--z", "z1", "--bandwidth", "wide"});
  CHECK(r.exit_code == 2);
  CHECK(r.error["code"] == "InvalidArgument");

  r = parse_args({"simulate", "--example", "1a", "--power-csv", "p.csv"});
  CHECK(r.exit_code == 2);

  CHECK(invoke({"test", "linear", "--data", "d.csv", "--z", "z1"}).code == 2);
}

TEST_CASE("simulate config is reproducible") {
  const auto a = parse_args({"simulate", "--example", "2i", "--seed", "7"});
  const auto b = parse_args({"simulate", "--example", "2i", "--seed", "7"});
  REQUIRE(a.config);
  REQUIRE(b.config);
  CHECK(*a.config == *b.config);
  CHECK(a.config->seed == 7);
  CHECK_FALSE(a.config->reps.has_value());
}

TEST_CASE("help and version") {
  auto c = invoke({"--version"});
  CHECK(c.code == 0);
  CHECK(c.out.find("0.1.0") != std::string::npos);
  CHECK(c.out.find("1.371649") != std::string::npos);
  c = invoke({"--help"});
  CHECK(c.code == 0);
  CHECK(c.out.find("simulate") != std::string::npos);
  c = invoke({"fit", "--help"});
  CHECK(c.code == 0);
  CHECK(c.out.find("--bandwidth-grid") != std::string::npos);
}

TEST_CASE("fit writes a parseable report atomically") {
  const std::string data = write_sample_csv("ok.csv", false);
  const fs::path out = scratch() / "fit.json";
  fs::remove(out);
  const auto c = invoke({"fit", "--data", data, "--z", "z1,z2,z3", "--x", "x1", "--out", out.string()});
  CHECK(c.code == 0);
  REQUIRE(fs::exists(out));
  const auto j = nlohmann::json::parse(std::ifstream(out));
  CHECK(j["converged"] == true);
  CHECK(j["beta"]["x1"].get<double>() == doctest::Approx(0.3).epsilon(0.2));
  for (const auto& e : fs::directory_iterator(scratch())) {
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
  }
}

TEST_CASE("non-finite data exits with 1 and a located error") {
  const std::string data = write_sample_csv("bad.csv", true);
  const auto c = invoke({"fit", "--data", data, "--z", "z1,z2,z3", "--x", "x1"});
  CHECK(c.code == 1);
  const auto j = nlohmann::json::parse(c.err);
  CHECK(j["code"] == "NonFiniteValue");
  CHECK(j["row"] == 7);
  CHECK(j["col"] == "z1");
}

TEST_CASE("partial fit is written on request") {
  const std::string data = write_sample_csv("ok2.csv", false);
  const fs::path out = scratch() / "partial.json";
  fs::remove(out);
  auto c = invoke({"fit", "--data", data, "--z", "z1,z2,z3", "--x", "x1", "--max-iter", "1", "--out", out.string()});
  CHECK(c.code == 1);
  CHECK_FALSE(fs::exists(out));
  CHECK(nlohmann::json::parse(c.err)["code"] == "NoConvergence");
  c = invoke({"fit", "--data", data, "--z", "z1,z2,z3", "--x", "x1", "--max-iter", "1", "--allow-partial", "--out",
              out.string()});
  CHECK(c.code == 1);
  REQUIRE(fs::exists(out));
  CHECK(nlohmann::json::parse(std::ifstream(out))["converged"] == false);
}

TEST_CASE("missing column and missing file") {
  const std::string data = write_sample_csv("ok3.csv", false);
  auto c = invoke({"fit", "--data", data, "--z", "z1,z9"});
  CHECK(c.code == 1);
  CHECK(nlohmann::json::parse(c.err)["code"] == "MissingColumn");
  c = invoke({"fit", "--data", (scratch() / "absent.csv").string(), "--z", "z1"});
  CHECK(c.code == 1);
  CHECK(nlohmann::json::parse(c.err)["code"] == "IoError");
}

TEST_CASE("linear test from files") {
  const std::string data = write_sample_csv("ok4.csv", false);
  const fs::path a = scratch() / "A.csv";
  const fs::path d = scratch() / "delta.csv";
  std::ofstream(a) << "a1,a2,a3,b1\n0,0,0,1\n";
  std::ofstream(d) << "0.3\n";
  auto c = invoke({"test", "linear", "--data", data, "--z", "z1,z2,z3", "--x", "x1", "--A", a.string(), "--delta",
                   d.string()});
  REQUIRE(c.code == 0);
  const auto j = nlohmann::json::parse(c.out);
  CHECK(j["method"] == "t1");
  CHECK(j["df"] == 1.0);
  CHECK(j["p_value"].get<double>() > 0.0);
  std::ofstream(d) << "0.3,0.1\n";
  c = invoke({"test", "linear", "--data", data, "--z", "z1,z2,z3", "--x", "x1", "--A", a.string(), "--delta",
              d.string()});
  CHECK(c.code == 1);
}

TEST_CASE("simulate writes report and power csv") {
  const fs::path out = scratch() / "sim.json";
  const fs::path csv = scratch() / "power.csv";
  const auto c = invoke({"simulate", "--example", "4", "--reps", "3", "--seed", "2", "--deterministic", "--out",
                         out.string(), "--power-csv", csv.string(), "--threads", "2"});
  REQUIRE(c.code == 0);
  const auto j = nlohmann::json::parse(std::ifstream(out));
  CHECK(j["kind"] == "power");
  CHECK(j["power"].size() == 5);
  CHECK_FALSE(j.contains("runtime_seconds"));
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  CHECK(header == "c,rejection");
}
