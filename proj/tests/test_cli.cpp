#include <catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Run {
  int status = -1;
  std::string out;  // stdout and stderr
};

Run run(const std::string& args) {
  const std::string cmd = std::string(QCF_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

// Non-comment lines of a CSV document.
std::vector<std::string> table(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l[0] != '#') rows.push_back(l);
  }
  return rows;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("patch test on LJ passes and writes one row per point", "[cli]") {
  const Run r = run("patch-test --potential lj --F 0.9,1.0,1.1 --N-list 32 --K 8 --out -");
  CHECK(r.status == 0);
  const auto t = table(r.out);
  REQUIRE(t.size() == 4);
  CHECK(t[0] == "F,N,K,max_residual,scale,relative");
  CHECK(r.out.rfind("# command=patch-test", 0) == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("# seed=1"));
}

TEST_CASE("invalid K is reported", "[cli]") {
  const Run r = run("patch-test --potential lj --F 1.0 --N-list 32 --K 32 --out -");
  CHECK(r.status != 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("K out of range"));
}

TEST_CASE("missing output path prints usage", "[cli]") {
  const Run r = run("convergence");
  CHECK(r.status != 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("--out"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("Usage"));
}

TEST_CASE("convergence with the default configuration", "[cli]") {
  const Run r = run("convergence --out -");
  CHECK(r.status == 0);
  const auto t = table(r.out);
  REQUIRE(t.size() == 5);
  CHECK(t[0] == "N,K,M,eps,err_strain_inf,bound_rhs,trunc_star,trunc_bound");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto f = split(t[i]);
    REQUIRE(f.size() == 8);
    CHECK(std::stod(f[4]) <= std::stod(f[5]));
    CHECK(std::stod(f[6]) <= std::stod(f[7]));
  }
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("# slope_err_vs_eps=1.9"));
}

TEST_CASE("constant load is reproduced to rounding", "[cli]") {
  const Run r = run("convergence --load const:1 --format json --out -");
  CHECK(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const auto& row : j["rows"]) CHECK(row["err_strain_inf"].get<double>() <= 1e-10);
}

TEST_CASE("dump of E^qcf shows the 5 -2 1 interface row", "[cli]") {
  const Run r = run("dump-operator --operator Eqcf --N-list 8 --K 2 --phiF 1 --phi2F 1 --out -");
  CHECK(r.status == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("-3,-3,6\n-3,-2,-2\n-3,-1,1\n"));
}

TEST_CASE("dumped L^a rows sum to zero and E^a is symmetric", "[cli]") {
  const Run la = run("dump-operator --operator La --N-list 8 --K 2 --phi2F -0.3 --out -");
  REQUIRE(la.status == 0);
  std::map<int, double> rowsum;
  for (const auto& line : table(la.out)) {
    if (line == "row,col,value") continue;
    const auto f = split(line);
    rowsum[std::stoi(f[0])] += std::stod(f[2]);
  }
  CHECK(rowsum.size() == 15);
  for (const auto& [i, s] : rowsum) CHECK(std::abs(s) < 1e-10);

  const Run ea = run("dump-operator --operator Ea --N-list 8 --K 2 --phi2F -0.3 --out -");
  REQUIRE(ea.status == 0);
  std::map<std::pair<int, int>, std::string> entries;
  for (const auto& line : table(ea.out)) {
    if (line == "row,col,value") continue;
    const auto f = split(line);
    entries[{std::stoi(f[0]), std::stoi(f[1])}] = f[2];
  }
  for (const auto& [ij, v] : entries) CHECK(entries.at({ij.second, ij.first}) == v);
}

TEST_CASE("coercivity without next-nearest coupling", "[cli]") {
  const Run r = run("coercivity --phiF 1 --phi2F 0 --N-list 16,32 --out -");
  CHECK(r.status == 0);
  const auto t = table(r.out);
  REQUIRE(t.size() == 3);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto f = split(t[i]);
    CHECK(std::stod(f[2]) == Catch::Approx(1.0).epsilon(1e-10));
    CHECK(std::stod(f[3]) >= std::stod(f[2]) - 1e-9);
  }
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("# slope_abs_rayleigh_min=null"));
}

TEST_CASE("inf-sup lower bound column is 0.3", "[cli]") {
  const Run r = run("infsup --phiF 1 --phi2F -0.05 --N-list 16,32,64 --p-list 1,2 --out -");
  CHECK(r.status == 0);
  int lower = 0;
  for (const auto& line : table(r.out)) {
    const auto f = split(line);
    if (f.size() == 5 && f[3] == "lower_bound") {
      ++lower;
      CHECK(f[2] == "inf");
      CHECK(f[4] == "0.3");
    }
  }
  CHECK(lower == 3);
}

TEST_CASE("output does not depend on the worker count", "[cli]") {
  const Run a = run("convergence --N-list 16,32,64 --jobs 1 --out -");
  const Run b = run("convergence --N-list 16,32,64 --jobs 3 --out -");
  REQUIRE(a.status == 0);
  CHECK(table(a.out) == table(b.out));
}

TEST_CASE("config file with flag overrides and diagnostics", "[cli]") {
  {
    std::ofstream cfg("cli_test.cfg");
    cfg << "# comment\nphi2F=-0.1\nN-list=16,32\nK=4\n";
  }
  const Run r = run("convergence --config cli_test.cfg --N-list 64 --out -");
  CHECK(r.status == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("# phi2F=-0.1"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("# N-list=64\n"));
  CHECK(table(r.out).size() == 2);

  {
    std::ofstream cfg("cli_bad.cfg");
    cfg << "phiF=1\nbogus=3\n";
  }
  const Run bad = run("convergence --config cli_bad.cfg --out -");
  CHECK(bad.status != 0);
  CHECK_THAT(bad.out, Catch::Matchers::ContainsSubstring("cli_bad.cfg:2: unknown key 'bogus'"));
}

TEST_CASE("json output", "[cli]") {
  const Run r = run("infsup --N-list 16,32 --p-list 1 --format json --out -");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["command"] == "infsup");
  CHECK(j["rows"].size() == 6);
  CHECK(j["summary"]["pass"] == true);
}

TEST_CASE("eigenvalue scan is exploratory", "[cli]") {
  const Run r = run("eig-scan --phi2F -0.2 --N-list 16,32 --out -");
  CHECK(r.status == 0);
  CHECK(table(r.out).front() == "N,K,min_real,max_abs_imag");
}
