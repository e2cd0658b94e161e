#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "lattes_forge/lattes.hpp"
#include "lattes_forge/serialize.hpp"

namespace fs = std::filesystem;
using namespace lattes_forge;
using lattes_forge::cli::run_cli;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("LATTES_FORGE_TEST_TMP");
  fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "lattes_forge_cli";
  fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"verify-lemma3", "--case", "7"}).code == 1);
  CHECK(run({"construct", "--x0", "one third"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("verify-lemma1") {
  Run ok = run({"verify-lemma1"});
  CHECK(ok.code == 0);
  auto doc = nlohmann::json::parse(ok.out);
  CHECK(doc["grid"].size() == 25);
  CHECK(doc["max_lemma1_residual"].get<double>() < 1e-8);
  CHECK(doc["pass"].get<bool>());

  CHECK(run({"verify-lemma1", "--inject-fault"}).code == 2);
  Run bad = run({"verify-lemma1", "--grid", "0:1,1:2:3"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("grid") != std::string::npos);
  CHECK(run({"verify-lemma1", "--grid", "0:1:2,-1:2:3"}).code == 1);

  Run csv = run({"verify-lemma1", "--grid", "0:0:1,1:1:1", "--format", "csv"});
  CHECK(csv.code == 0);
  CHECK(csv.out.rfind("# lattes_forge lemma1 v1\n", 0) == 0);
}

TEST_CASE("verify-lemma3 reports the case constants") {
  Run all = run({"verify-lemma3"});
  REQUIRE(all.code == 0);
  auto doc = nlohmann::json::parse(all.out);
  REQUIRE(doc["cases"].size() == 3);
  CHECK(doc["cases"][0]["c_measured"][0].get<double>() == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(doc["cases"][1]["c_measured"][0].get<double>() == doctest::Approx(-1.125).epsilon(1e-6));
  CHECK(doc["cases"][2]["c_measured"][0].get<double>() == doctest::Approx(-0.9).epsilon(1e-6));
  Run one = run({"verify-lemma3", "--a", "3", "--case", "2", "--format", "csv"});
  CHECK(one.code == 0);
  CHECK(one.out.find("\n3,2,-1.125,") != std::string::npos);
}

TEST_CASE("construct, determinism and certify") {
  fs::path dir = scratch("construct");
  Run r = run({"construct", "--k-min", "3", "--k-max", "4", "--out", dir.string(), "--render", "24"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "construct_k03.json"));
  CHECK(fs::exists(dir / "construct_k04.json"));
  CHECK(fs::exists(dir / "convergence.csv"));
  CHECK(fs::exists(dir / "f_gamma0.ppm"));
  CHECK(fs::exists(dir / "g_k4.ppm"));
  std::string first = io::read_file(dir / "construct_k04.json");
  auto doc = nlohmann::json::parse(first);
  CHECK(doc["schema_version"] == "1");
  CHECK(doc["postcritical_count"].get<int>() > 4);

  fs::path again = scratch("construct_again");
  REQUIRE(run({"construct", "--k-min", "3", "--k-max", "4", "--out", again.string()}).code == 0);
  CHECK(io::read_file(again / "construct_k04.json") == first);
  CHECK(io::read_file(again / "convergence.csv") == io::read_file(dir / "convergence.csv"));

  // certify the g_k artifact
  io::write_atomic(dir / "g4.json", doc["g_k"].dump());
  Run cert = run({"certify", (dir / "g4.json").string()});
  CHECK(cert.code == 0);
  CHECK(nlohmann::json::parse(cert.out)["non_lattes_witness"].get<bool>());
}

TEST_CASE("construct beyond the precision ceiling exits 3") {
  fs::path dir = scratch("ceiling");
  Run r = run({"construct", "--a", "3", "--case", "2", "--x0", "1/5", "--k-min", "8", "--k-max", "20", "--out",
               dir.string()});
  CHECK(r.code == 3);
  CHECK(fs::exists(dir / "convergence.csv"));
  CHECK(run({"construct", "--a", "3", "--case", "2", "--x0", "1/3"}).code == 1);
}

TEST_CASE("certify Lattes maps, z^2 + 1 and broken files") {
  fs::path dir = scratch("certify");
  auto f = lattes::build_rational_map(
      lattes::LattesSpec(elliptic::TorusParameter(Complex(1.0 / 3.0, 1.0)), 2, lattes::CaseTag::EvenZero));
  io::write_atomic(dir / "f.json", io::map_to_json(f));
  Run lattes_run = run({"certify", (dir / "f.json").string(), "--out", dir.string()});
  REQUIRE(lattes_run.code == 0);
  auto doc = nlohmann::json::parse(lattes_run.out);
  CHECK(doc["postcritical_count"] == 4);
  CHECK(doc["lattes_witness"].get<bool>());
  CHECK(fs::exists(dir / "certificate.json"));

  io::write_atomic(dir / "quad.json", R"({"degree": 2, "num": [[1,0],[0,0],[1,0]], "den": [[1,0],[0,0],[0,0]]})");
  Run quad = run({"certify", (dir / "quad.json").string()});
  CHECK(quad.code == 2);
  CHECK(quad.err.find("NotPCF") != std::string::npos);

  io::write_atomic(dir / "bad.json", "{\"degree\": 2}");
  CHECK(run({"certify", (dir / "bad.json").string()}).code == 1);
  CHECK(run({"certify", (dir / "missing.json").string()}).code == 1);
}

TEST_CASE("render writes a P6 image") {
  fs::path dir = scratch("render");
  Run r = run({"render", "--size", "16", "--max-iter", "8", "--out", dir.string(), "--file", "f.ppm"});
  REQUIRE(r.code == 0);
  std::string ppm = io::read_file(dir / "f.ppm");
  CHECK(ppm.rfind("P6\n16 16\n255\n", 0) == 0);
  CHECK(ppm.size() == 13 + 16 * 16 * 3);
}
