#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "regkit/errors.hpp"
#include "regkit/reproduce.hpp"
#include "support.hpp"

using namespace regkit;

namespace {

std::string golden_path(const std::string& name) {
  return std::string(REGKIT_SOURCE_DIR) + "/tests/golden/" + name + ".json";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("canonical dump") {
  json j;
  j["b"] = 1;
  j["a"] = num(0.1);
  j["c"] = json::array({num(1.0 / 3.0), num(-0.0)});
  std::string s = canonical_dump(j);
  CHECK(s ==
        "{\n"
        "  \"a\": 0.10000000000000001,\n"
        "  \"b\": 1,\n"
        "  \"c\": [0.33333333333333331, -0]\n"
        "}\n");
  CHECK(canonical_dump(json::object()) == "{}\n");
  CHECK(canonical_dump(json::array()) == "[]\n");
}

TEST_CASE("non-finite numbers become strings") {
  CHECK(num(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(num(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(num(std::nan("")) == "nan");
  CHECK(num(2.5) == 2.5);
  CHECK(vec({1.0, std::numeric_limits<double>::infinity()}).dump() == "[1.0,\"inf\"]");
}

TEST_CASE("FNV-1a 64 reference vectors") {
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a64_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("run report layout") {
  RunReport r;
  r.command = "scan";
  r.seed = 7;
  r.input_digest = fnv1a64_hex("x");
  r.payload = json::object({{"k", 1}});
  r.wall_time = 0.5;
  json j = r.to_json();
  for (const char* key :
       {"tool", "version", "seed", "tolerances", "solver", "command", "input_digest", "payload", "wall_time_s"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["seed"] == 7);
  CHECK(j["version"] == kToolVersion);
  // Every tolerance is embedded.
  CHECK(j["tolerances"].size() == 17);
}

TEST_CASE("reproduce payloads match the golden files") {
  AnalysisConfig cfg;
  const bool update = std::getenv("REGKIT_UPDATE_GOLDEN") != nullptr;
  for (const std::string& name : reproducible_examples()) {
    ExampleRun run = reproduce_example(name, 42, cfg);
    std::string text = canonical_dump(run.payload);
    const std::string path = golden_path(name);
    if (update) {
      std::filesystem::create_directories(std::filesystem::path(path).parent_path());
      std::ofstream(path, std::ios::binary) << text;
      continue;
    }
    INFO(path);
    REQUIRE(std::filesystem::exists(path));
    CHECK(slurp(path) == text);
  }
}

TEST_CASE("payloads are identical across repeated runs and execution modes") {
  AnalysisConfig par, ser;
  ser.exec = Exec::serial;
  ExampleRun a = reproduce_example("ex32", 42, par);
  ExampleRun b = reproduce_example("ex32", 42, par);
  ExampleRun c = reproduce_example("ex32", 42, ser);
  CHECK(canonical_dump(a.payload) == canonical_dump(b.payload));
  CHECK(canonical_dump(a.payload) == canonical_dump(c.payload));
  ExampleRun d = reproduce_example("ex32", 43, par);
  CHECK(canonical_dump(a.payload) != canonical_dump(d.payload));
}

TEST_CASE("unknown example") {
  CHECK_THROWS_AS(reproduce_example("nope", 42, AnalysisConfig{}), PreconditionViolation);
}
