#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "bvc/cli.hpp"

using namespace bvc;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  int c = run_cli(args, o, e);
  return {c, o.str(), e.str()};
}

std::string job(const std::string& name) { return std::string(BVC_JOB_DIR) + name; }

bool has(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

nlohmann::json load(const std::string& path) {
  std::ifstream f(path);
  return nlohmann::json::parse(f);
}

std::string write_job(const std::string& name, const std::string& text) {
  std::ofstream(name) << text;
  return name;
}

}  // namespace

TEST_CASE("basis") {
  auto a2 = run({"basis", "--input", job("a2.json")});
  CHECK(a2.code == 0);
  CHECK(has(a2.out, "dimension: 2"));
  CHECK(has(a2.out, "[1]  ghost 0\n  [x]  ghost 0"));
  auto a3 = run({"basis", "--input", job("a3.json")});
  CHECK(a3.code == 0);
  CHECK(has(a3.out, "dimension: 3"));
  auto bad = run({"basis", "--input", job("nonisolated.json")});
  CHECK(bad.code == 2);
  CHECK(has(bad.err, "non-isolated singularity"));
}

TEST_CASE("solve A2: m^_2 is the Jacobian ring product") {
  auto r = run({"solve", "--input", job("a2.json"), "--json", "a2.out.json"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "m_2([1], [1]) = (1)*[1]\n"));
  CHECK(has(r.out, "m_2([1], [x]) = (1)*[x]\n"));
  CHECK(has(r.out, "m_2([x], [x]) = 0\n"));
  CHECK(has(r.out, "M identity l-term sign: -"));
  auto j = load("a2.out.json");
  CHECK(j["schema"] == 1);
  CHECK(j["pass"] == true);
  for (const auto& row : j["tables"]["mhat"])
    if (row["n"] == 2 && row["key"] == nlohmann::json::array({1, 1}))
      CHECK(row["value"] == nlohmann::json::parse("[[], []]"));
}

TEST_CASE("solve A3: hbar-degree column within n-2") {
  auto r = run({"solve", "--input", job("a3.json"), "--json", "a3.out.json"});
  CHECK(r.code == 0);
  CHECK_FALSE(has(r.out, "EXCEEDS"));
  auto j = load("a3.out.json");
  int rows = 0;
  for (const auto& row : j["tables"]["pi0"]) {
    CHECK(row["hbar_degree"].get<int>() <= row["bound"].get<int>());
    ++rows;
  }
  CHECK(rows == 6 + 10 + 15);
  // human and machine renderings carry the same text
  CHECK(has(r.out, j["tables"]["pi0"][0]["text"].get<std::string>()));
}

TEST_CASE("audit bundle") {
  auto r = run({"solve", "--input", job("a2.json"), "--audit", "--json", "audit.out.json"});
  CHECK(r.code == 0);
  auto j = load("audit.out.json");
  CHECK(j["tables"].contains("audit_omega0"));
  CHECK(j["tables"].contains("audit_L"));
  CHECK(j["tables"].contains("audit_M0"));
}

TEST_CASE("fault injection exits 3 with the failing identity") {
  auto r = run({"solve", "--input", job("fault.json")});
  CHECK(r.code == 3);
  CHECK(has(r.out, "FAIL level one"));
  CHECK(has(r.out, "result: FAIL"));
}

TEST_CASE("resource and input errors") {
  CHECK(run({"solve", "--input", job("arity_cap.json")}).code == 4);
  CHECK(run({"solve", "--input", "missing.json"}).code == 2);
  CHECK(run({"solve"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  auto unk = run({"basis", "--input", write_job("unknown.tmp.json",
                                              R"({"schema": 1, "potential": {"n_vars": 1,
                                                  "terms": [[[3], "1/3"]]}, "colour": 1})")});
  CHECK(unk.code == 2);
  CHECK(has(unk.err, "unknown field \"colour\""));
  auto iota = run({"solve", "--input", write_job("iota.tmp.json",
                                               R"({"schema": 1, "potential": {"n_vars": 1,
                                                   "terms": [[[3], "1/3"]]}, "iota": ["2", 0]})")});
  CHECK(iota.code == 2);
  auto len = run({"solve", "--input", write_job("iota2.tmp.json",
                                              R"({"schema": 1, "potential": {"n_vars": 1,
                                                  "terms": [[[3], "1/3"]]}, "iota": [1, 0, 0]})")});
  CHECK(len.code == 2);
  auto schema = run({"basis", "--input", write_job("schema.tmp.json",
                                                 R"({"schema": 2, "potential": {"n_vars": 1,
                                                     "terms": [[[3], "1/3"]]}})")});
  CHECK(schema.code == 2);
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("1/3") == Rational(1, 3));
  CHECK(parse_rational("-4/6") == Rational(-2, 3));
  CHECK(parse_rational("7") == 7);
  CHECK_THROWS_AS(parse_rational("1/0"), InputError);
  CHECK_THROWS_AS(parse_rational("x"), InputError);
  CHECK_THROWS_AS(parse_rational("0.5"), InputError);
}

TEST_CASE("fmanifold") {
  auto a2 = run({"fmanifold", "--input", job("a2.json")});
  CHECK(a2.code == 0);
  // unity row A_0b^g = delta at every t-order
  CHECK(has(a2.out, "A_00^0 = (1)\n  A_00^1 = 0\n  A_01^0 = 0\n  A_01^1 = (1)\n"));
  CHECK(has(a2.out, "flat-coordinate PDE sign: +"));
  auto a3 = run({"fmanifold", "--input", job("a3.json"), "--json", "a3f.out.json"});
  CHECK(a3.code == 0);
  CHECK(has(a3.out, "PASS WDVV"));
  auto j = load("a3f.out.json");
  CHECK(j["pde_sign"]["sign"] == 1);
  auto fermat = run({"fmanifold", "--input", job("fermat.json"), "--threads", "2"});
  CHECK(fermat.code == 0);
}

TEST_CASE("output is byte-stable") {
  auto a = run({"solve", "--input", job("a3.json"), "--threads", "3"});
  auto b = run({"solve", "--input", job("a3.json")});
  CHECK(a.out == b.out);
}
