#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

using json = nlohmann::json;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run mde(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(MDE_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const std::string& name) { return std::string(MDE_FIXTURES) + "/" + name; }

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "mde_cli_tests";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_problem(const std::string& name, const json& j) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << j.dump();
  return p;
}

}  // namespace

TEST_CASE("solve writes exp coefficients", "[cli]") {
  const fs::path csv = scratch() / "y.csv";
  const fs::path side = scratch() / "y.json";
  const auto r = mde("solve --problem " + fixture("exp.json") + " --order 32 --out " + csv.string() + " --sidecar " + side.string());
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  CHECK(line == "degree,component,re,im");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::size_t p = 0, comp = 0;
    double re = 0.0, im = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf", &p, &comp, &re, &im) == 4);
    CHECK(p == rows);
    CHECK(comp == 1);
    CHECK_THAT(re, WithinRel(std::exp(-std::lgamma(static_cast<double>(p) + 1.0)), 1e-14));
    CHECK(im == 0.0);
    ++rows;
  }
  CHECK(rows == 33);
  const json s = json::parse(slurp(side));
  CHECK(s["path"] == "A");
  CHECK(s["residual_ok"] == true);
  CHECK(s["majorant_dominates"] == true);
}

TEST_CASE("transform sys2eq reproduces the 3x3 example", "[cli]") {
  const auto r = mde("transform sys2eq --problem " + fixture("companion3x3.json"));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  const double expect[3][2] = {{-432, -1296}, {36, 108}, {12, -6}};
  for (int k = 0; k < 3; ++k)
    for (int p = 0; p < 2; ++p) {
      CHECK_THAT(j["last_row"][k][p][0].get<double>(), WithinAbs(expect[k][p], 1e-8));
      CHECK_THAT(j["last_row"][k][p][1].get<double>(), WithinAbs(0.0, 1e-8));
    }
  const auto v = mde("transform sys2eq --problem " + fixture("companion3x3.json") + " --cyclic-vector 1,2,1");
  REQUIRE(v.code == 0);
  CHECK(json::parse(v.out)["v0"] == json::parse("[[1.0,0.0],[2.0,0.0],[1.0,0.0]]"));
}

TEST_CASE("the printed 9z + 8 matrix exits with a condition (ii) diagnostic", "[cli]") {
  const auto r = mde("transform sys2eq --problem " + fixture("companion3x3_9z.json"));
  CHECK(r.code == 3);
  const json j = json::parse(r.out);
  CHECK(j["kind"] == "condition_ii_violation");
  CHECK(j["p"] == 1);
  const auto c = mde("transform sys2eq --problem " + fixture("companion3x3.json") + " --cyclic-vector 1,0,0");
  CHECK(c.code == 3);
}

TEST_CASE("sequence-check on gamma_moment(1/2)", "[cli]") {
  const auto r = mde("sequence-check --spec " + fixture("gamma_half.json") + " --max-p 100");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["assumption_A"]["holds"] == false);
  CHECK(j["assumption_B"]["holds"] == true);
  CHECK(j["assumption_B"]["alpha"] == "1/2");
  CHECK(j["assumption_B"]["alpha_value"] == 0.5);
}

TEST_CASE("eq2sys output feeds solve", "[cli]") {
  const auto r = mde("transform eq2sys --problem " + fixture("eq2sys.json"));
  REQUIRE(r.code == 0);
  const fs::path sys = write_problem("sys.json", json::parse(r.out));
  const auto s = mde("solve --problem " + sys.string() + " --order 20");
  CHECK(s.code == 0);
  const auto back = mde("transform sys2eq --problem " + sys.string());
  REQUIRE(back.code == 0);
  const json a = json::parse(back.out)["a"];
  CHECK_THAT(a[0][0][0].get<double>(), WithinAbs(1.0, 1e-10));
  CHECK_THAT(a[0][1][0].get<double>(), WithinAbs(2.0, 1e-10));
  CHECK_THAT(a[1][2][0].get<double>(), WithinAbs(0.5, 1e-10));
}

TEST_CASE("const-solve and its two-word spelling", "[cli]") {
  const auto r = mde("const-solve --problem " + fixture("const_cosh.json"));
  REQUIRE(r.code == 0);
  const auto r2 = mde("const solve --problem " + fixture("const_cosh.json"));
  REQUIRE(r2.code == 0);
  CHECK(r.out == r2.out);
  const json j = json::parse(r.out);
  CHECK(j["roots"].size() == 2);
  CHECK(j["residual"].get<double>() <= 1e-9);
  CHECK(j["type_bound"]["consistent"] == true);
}

TEST_CASE("delta-e reports the ladder defect", "[cli]") {
  const fs::path csv = scratch() / "d.csv";
  const auto r = mde("delta-e --problem " + fixture("delta_e.json") + " --out " + csv.string());
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["ladder"]["max_relative"].get<double>() <= 1e-11);
  CHECK_THAT(j["order_type"]["sigma"].get<double>(), WithinAbs(2.0, 0.15));
  CHECK(fs::file_size(csv) > 0);
}

TEST_CASE("frac-verify and frac verify", "[cli]") {
  for (const char* spelling : {"frac-verify", "frac verify"}) {
    const auto r = mde(std::string(spelling) + " --alpha 1/2 --order 32 --grid 256");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["pass"] == true);
    CHECK(j["properties"].size() == 4);
  }
  CHECK(mde("frac-verify --alpha 3/2 --order 8").code == 2);
  CHECK(mde("frac-verify --alpha x --order 8").code == 2);
}

TEST_CASE("validation errors exit with 2 and name the field", "[cli]") {
  json bad = json::parse(slurp(fixture("exp.json")));
  bad["sequence"]["bogus"] = 1;
  auto r = mde("solve --problem " + write_problem("bad1.json", bad).string());
  CHECK(r.code == 2);
  CHECK(json::parse(r.out)["message"] == "$.sequence.bogus: unknown field");

  bad = json::parse(slurp(fixture("exp.json")));
  bad["A"][0][0][0] = "x";
  r = mde("solve --problem " + write_problem("bad2.json", bad).string());
  CHECK(r.code == 2);
  CHECK(json::parse(r.out)["message"].get<std::string>().rfind("$.A[0][0][0]", 0) == 0);

  bad = json::parse(slurp(fixture("exp.json")));
  bad.erase("y0");
  r = mde("solve --problem " + write_problem("bad3.json", bad).string());
  CHECK(r.code == 2);
  CHECK(json::parse(r.out)["message"] == "$.y0: required field is missing");

  CHECK(mde("solve --problem /nonexistent.json").code == 2);
  CHECK(mde("nonsense").code == 2);
  CHECK(mde("solve --problem " + fixture("exp.json"), "MDE_TOLERANCE_SCALE=abc").code == 2);
}

TEST_CASE("custom table exhaustion is a validation error", "[cli]") {
  json pb = json::parse(slurp(fixture("exp.json")));
  pb["sequence"] = {{"kind", "custom"}, {"values", {1, 1, 2}}};
  const auto r = mde("solve --problem " + write_problem("short.json", pb).string());
  CHECK(r.code == 2);
  CHECK(json::parse(r.out)["kind"] == "out_of_range");
}

TEST_CASE("outputs are byte-identical across runs", "[cli]") {
  const auto a = mde("transform sys2eq --problem " + fixture("companion3x3.json"));
  const auto b = mde("transform sys2eq --problem " + fixture("companion3x3.json"));
  CHECK(a.out == b.out);
  const auto c = mde("solve --problem " + fixture("geometric_alpha_half.json"));
  const auto d = mde("solve --problem " + fixture("geometric_alpha_half.json"));
  CHECK(c.out == d.out);
}

TEST_CASE("batch mode solves a directory concurrently", "[cli]") {
  const fs::path in = scratch() / "batch_in";
  const fs::path out = scratch() / "batch_out";
  fs::remove_all(in);
  fs::remove_all(out);
  fs::create_directories(in);
  for (const char* f : {"exp.json", "geometric_alpha1.json", "geometric_alpha_half.json", "companion3x3.json"})
    fs::copy_file(fixture(f), in / f);
  const auto r = mde("solve --batch " + in.string() + " --out-dir " + out.string());
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["problems"].size() == 4);
  CHECK(fs::exists(out / "geometric_alpha_half.csv"));
  const json side = json::parse(slurp(out / "geometric_alpha_half.json"));
  CHECK(side["path"] == "B");
  CHECK_THAT(side["radius_guaranteed"].get<double>(), WithinRel(0.61410758636986726, 1e-14));
}

TEST_CASE("every fixture passes schema validation", "[cli]") {
  for (const auto& e : fs::directory_iterator(MDE_FIXTURES)) {
    const std::string name = e.path().filename().string();
    INFO(name);
    Run r;
    if (name == "gamma_half.json") r = mde("sequence-check --spec " + e.path().string());
    else if (name == "const_cosh.json") r = mde("const-solve --problem " + e.path().string());
    else if (name == "delta_e.json") r = mde("delta-e --problem " + e.path().string());
    else if (name == "eq2sys.json") r = mde("transform eq2sys --problem " + e.path().string());
    else r = mde("transform sys2eq --problem " + e.path().string());
    CHECK(r.code != 2);
  }
}
