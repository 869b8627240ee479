#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fkdet/cli.hpp"
#include "support/oracles.hpp"

using namespace fkdet;
using namespace fkdet::cli;
using Catch::Matchers::WithinAbs;

namespace {

const std::string kData = FKDET_DATA_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(const ExperimentSpec& s) {
  std::ostringstream out, err;
  const int code = execute(s, out, err);
  return {code, out.str(), err.str()};
}

ExperimentSpec spec(std::string sub) {
  ExperimentSpec s;
  s.subcommand = std::move(sub);
  return s;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cells.push_back(cur);
    rows.push_back(cells);
  }
  return rows;
}

/// Runs the installed binary; stdout captured, stderr discarded.
Run run_binary(const std::string& args) {
  const std::string tmp = "fkdet_cli_test_stdout.txt";
  const std::string cmd = std::string(FKDET_CLI_PATH) + " " + args + " > " + tmp + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(tmp);
  std::stringstream buf;
  buf << in.rdbuf();
  std::remove(tmp.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str(), {}};
}

}  // namespace

TEST_CASE("gre files parse to the expected elements", "[cli]") {
  auto s = spec("mahler");
  s.f_path = kData + "/z1_3uu.gre";
  const auto f = std::get<IntegerElement>(cli::detail::load_element(s));
  CHECK(f.coefficient(GroupElement{0}) == 3);
  CHECK(f.coefficient(GroupElement{1}) == 1);
  CHECK(f.coefficient(GroupElement{-1}) == 1);
  CHECK(f.support_size() == 3);

  s.f_path = kData + "/h3_laplacian5.gre";
  const auto h = std::get<IntegerElement>(cli::detail::load_element(s));
  CHECK(h.group() == GroupDescriptor::heisenberg());
  CHECK(h.coefficient(GroupElement{0, 0, 0}) == 5);
  CHECK(h.support_size() == 5);

  s.f_path.clear();
  s.group = "Z^1";
  s.f_terms = "3 0; 1 1; 1 -1";
  CHECK(std::get<IntegerElement>(cli::detail::load_element(s)) == f);
}

TEST_CASE("data files round-trip through the serializer", "[cli]") {
  for (const char* name : {"z1_3uu", "z1_2uu", "h3_laplacian5", "zmod3_2e_g", "zmod2_3e_g"}) {
    const auto f = read_ring_element_file(kData + "/" + name + ".gre");
    const auto text = serialize(f);
    CHECK(serialize(parse_ring_element(text)) == text);
    CHECK(parse_ring_element(text) == f);
  }
  CHECK_THROWS_AS(read_ring_element_file(kData + "/bad_line.gre"), ParseError);
  CHECK_THROWS(read_ring_element_file(kData + "/bad_group.gre"));
}

TEST_CASE("mahler subcommand", "[cli]") {
  auto s = spec("mahler");
  s.f_path = kData + "/z1_3uu.gre";
  auto r = run(s);
  REQUIRE(r.code == kOk);
  CHECK(r.out == "method,N,value,defects\nroots,,0.962423650119,0\n");
  s.method = "grid";
  s.grid_N = 64;
  r = run(s);
  REQUIRE(r.code == kOk);
  CHECK_THAT(std::stod(csv_rows(r.out)[1][2]), WithinAbs(oracle::mahler_3_plus_u_plus_uinv(), 1e-11));
  s.format = "json";
  r = run(s);
  REQUIRE(r.code == kOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["rows"][0]["method"] == "grid");
  CHECK(j["rows"][0]["N"] == 64);
}

TEST_CASE("fkdet sections converge toward the Mahler value", "[cli]") {
  auto s = spec("fkdet");
  s.group = "Z^1";
  s.f_path = kData + "/z1_3uu.gre";
  s.schedule = "10,100,1000";
  s.method = "sections";
  const auto r = run(s);
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"n", "window_size", "boundary_ratio", "value", "method"});
  const double m = oracle::mahler_3_plus_u_plus_uinv();
  double prev = 1.0;
  for (std::size_t i = 1; i <= 3; ++i) {
    const double err = std::abs(std::stod(rows[i][3]) - m);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-2);
  CHECK(r.err.find("certified invertible") != std::string::npos);
}

TEST_CASE("fkdet poly reports a bound that covers the Mahler value", "[cli]") {
  auto s = spec("fkdet");
  s.f_path = kData + "/z1_3uu.gre";
  s.method = "poly";
  s.interval_a = "1";
  s.interval_b = "25";
  const auto r = run(s);
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "40");
  CHECK(std::abs(std::stod(rows[1][4]) - oracle::mahler_3_plus_u_plus_uinv()) <= std::stod(rows[1][5]));
}

TEST_CASE("l1growth rows", "[cli]") {
  auto s = spec("l1growth");
  s.k = 4;
  const auto r = run(s);
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 6);
  std::int64_t p = 1;
  for (int k = 0; k <= 4; ++k, p *= 3) {
    CHECK(rows[k + 1][0] == std::to_string(k));
    CHECK(rows[k + 1][1] == std::to_string(p));
    CHECK(rows[k + 1][3] == std::to_string(p));
  }
}

TEST_CASE("snf subcommand", "[cli]") {
  auto s = spec("snf");
  s.matrix_path = kData + "/diag23.csv";
  const auto r = run(s);
  REQUIRE(r.code == kOk);
  CHECK(r.out == "divisors,order\n\"1,6\",6\n");
}

TEST_CASE("finite-group subcommands", "[cli]") {
  auto s = spec("entropy-finite");
  s.f_path = kData + "/zmod3_2e_g.gre";
  auto r = run(s);
  REQUIRE(r.code == kOk);
  auto rows = csv_rows(r.out);
  CHECK(rows[1][2] == "9");
  CHECK(rows[1][4] == "9");
  CHECK_THAT(std::stod(rows[1][1]), WithinAbs(std::log(9.0) / 3, 1e-11));

  s = spec("separated");
  s.f_path = kData + "/zmod3_2e_g.gre";
  r = run(s);
  REQUIRE(r.code == kOk);
  rows = csv_rows(r.out);
  CHECK(rows[1] == std::vector<std::string>{"separated", "inf", "1/24", "9", "9", "9"});
  s.mode = "spanning";
  s.p = "1";
  r = run(s);
  REQUIRE(r.code == kOk);
  CHECK(std::stoi(csv_rows(r.out)[1][3]) <= 9);
}

TEST_CASE("quasitile subcommand", "[cli]") {
  auto s = spec("quasitile");
  s.group = "Z^1";
  s.window = "0:99";
  s.tiles = "0:9";
  const auto r = run(s);
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 11);
  CHECK(rows[10] == std::vector<std::string>{"0", "90"});
  CHECK(r.err.find("coverage 1") == 0);
}

TEST_CASE("certify and perturb subcommands", "[cli]") {
  auto s = spec("certify");
  s.f_path = kData + "/h3_laplacian5.gre";
  s.method = "positive-gap";
  auto r = run(s);
  REQUIRE(r.code == kOk);
  auto rows = csv_rows(r.out);
  CHECK(rows[1][1] == "true");
  CHECK(rows[1][4] == "1");
  CHECK(rows[1][5] == "9");

  s = spec("perturb");
  s.f_path = kData + "/z1_3uu.gre";
  s.schedule = "200";
  s.seed = 7;
  r = run(s);
  REQUIRE(r.code == kOk);
  rows = csv_rows(r.out);
  REQUIRE(rows.size() == 2);
  CHECK_THAT(std::stod(rows[1][3]), WithinAbs(oracle::mahler_3_plus_u_plus_uinv(), 5e-2));
}

TEST_CASE("exit codes for malformed and uncertifiable inputs", "[cli]") {
  const auto expect = [](ExperimentSpec s, int code) {
    const auto r = run(s);
    CHECK(r.code == code);
    CHECK(r.out.empty());
    CHECK_FALSE(r.err.empty());
  };
  auto s = spec("mahler");
  s.f_path = kData + "/bad_line.gre";
  expect(s, kPrecondition);
  s.f_path = kData + "/bad_group.gre";
  expect(s, kPrecondition);
  s.f_path = kData + "/does_not_exist.gre";
  expect(s, kPrecondition);
  s.f_path.clear();
  expect(s, kPrecondition);
  s.f_path = kData + "/z1_3uu.gre";
  s.method = "bogus";
  expect(s, kPrecondition);
  s.method.clear();
  s.group = "Z^2";
  expect(s, kPrecondition);

  auto fk = spec("fkdet");
  fk.f_path = kData + "/z1_3uu.gre";
  fk.schedule = "10,5";
  expect(fk, kPrecondition);
  fk.schedule = "0:4";
  expect(fk, kPrecondition);
  fk.schedule = "10";
  fk.degree = 0;
  expect(fk, kPrecondition);
  fk.degree = 40;
  fk.format = "xml";
  expect(fk, kPrecondition);
  fk.format = "csv";
  fk.f_path = kData + "/z1_2uu.gre";
  expect(fk, kNotCertifiable);
  fk.assume_invertible = true;
  CHECK(run(fk).code == kOk);

  auto c = spec("certify");
  c.f_path = kData + "/z1_2uu.gre";
  const auto r = run(c);
  CHECK(r.code == kNotCertifiable);
  CHECK(csv_rows(r.out)[1][1] == "false");

  auto sep = spec("separated");
  sep.f_path = kData + "/zmod3_2e_g.gre";
  sep.p = "3";
  expect(sep, kPrecondition);
  sep.p = "inf";
  sep.epsilon = "-1/2";
  expect(sep, kPrecondition);
  sep.epsilon.clear();
  sep.f_path = kData + "/z1_3uu.gre";
  expect(sep, kPrecondition);

  auto pt = spec("perturb");
  pt.f_path = kData + "/z1_3uu.gre";
  pt.schedule = "10";
  pt.delta = 0.5;
  expect(pt, kPrecondition);

  auto q = spec("quasitile");
  q.group = "Z^1";
  q.window = "0:99";
  q.tiles = "0:9";
  q.epsilon = "0.5";
  expect(q, kPrecondition);
  q.epsilon.clear();
  q.window = "9:0";
  expect(q, kPrecondition);

  auto l1 = spec("l1growth");
  l1.k = 40;
  expect(l1, kPrecondition);

  expect(spec("bogus"), kPrecondition);
}

TEST_CASE("identical specs give byte-identical output", "[cli]") {
  auto s = spec("perturb");
  s.f_path = kData + "/z1_3uu.gre";
  s.schedule = "20,40,80";
  s.delta = 0.05;
  s.seed = 11;
  const auto a = run(s), b = run(s);
  REQUIRE(a.code == kOk);
  CHECK(a.out == b.out);
  s.seed = 12;
  CHECK(run(s).out != a.out);

  auto f = spec("fkdet");
  f.f_path = kData + "/h3_laplacian5.gre";
  f.schedule = "1:3";
  f.format = "json";
  CHECK(run(f).out == run(f).out);
}

TEST_CASE("binary honors the exit-code contract", "[cli][binary]") {
  const auto z = kData + "/z1_3uu.gre";
  auto r = run_binary("fkdet --group Z^1 --f " + z + " --schedule 10,100,1000 --method sections");
  CHECK(r.code == 0);
  CHECK(csv_rows(r.out).size() == 4);
  CHECK(run_binary("fkdet --group Z^1 --f " + z + " --schedule 10,100,1000 --method sections").out == r.out);

  r = run_binary("l1growth --k 4");
  CHECK(r.code == 0);
  CHECK(csv_rows(r.out)[5][1] == "81");

  r = run_binary("snf --matrix " + kData + "/diag23.csv");
  CHECK(r.code == 0);
  CHECK(r.out == "divisors,order\n\"1,6\",6\n");

  CHECK(run_binary("fkdet --f " + kData + "/z1_2uu.gre --schedule 10").code == 3);
  CHECK(run_binary("fkdet --f " + kData + "/bad_line.gre --schedule 10").code == 2);
  CHECK(run_binary("mahler --f " + z + " --nonsense 1").code == 2);
  CHECK(run_binary("").code == 2);
  CHECK(run_binary("snf").code == 2);
  CHECK(run_binary("quasitile --group Z^1 --window 0:9 --tiles 0:2 --format yaml").code == 2);
}
