#include "doctest.h"
#include "icoding/harness.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace icoding;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("ICODING_CLI");
  return p ? p : "";
}

Result invoke(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + cli() + "\" " + args + " 2>/dev/null";
  Result r;
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  char buf[4096];
  size_t k;
  while ((k = fread(buf, 1, sizeof buf, f)) > 0) r.out.append(buf, k);
  const int st = pclose(f);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (auto s : {Scheme::NonAdaptive14, Scheme::Adaptive27, Scheme::OneSided13, Scheme::ListReduce, Scheme::Boost,
                 Scheme::Boost2})
    CHECK(parse_scheme(scheme_name(s)) == s);
  CHECK_THROWS_AS(parse_scheme("adaptive"), std::invalid_argument);
  CHECK(is_reduction(Scheme::ListReduce));
  CHECK_FALSE(is_reduction(Scheme::Boost2));
}

TEST_CASE("rate ranges are exact") {
  const auto r = parse_rate_range("0.20:0.40:0.02");
  REQUIRE(r.size() == 11);
  CHECK(r.front() == Rate(1, 5));
  CHECK(r[5] == Rate(3, 10));
  CHECK(r.back() == Rate(2, 5));
  CHECK(parse_rate_range("1/10:1/5:1/20").size() == 3);
  CHECK_THROWS_AS(parse_rate_range("0.1:0.2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rate_range("0.3:0.2:0.01"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rate_range("0.1:0.2:0"), std::invalid_argument);
}

TEST_CASE("guaranteed rates and regimes") {
  ExperimentConfig c;
  CHECK(c.guaranteed_rate() == Rate(1, 20));
  c.scheme = Scheme::Adaptive27;
  CHECK(c.guaranteed_rate() == Rate(3, 35));
  c.scheme = Scheme::OneSided13;
  CHECK(c.guaranteed_rate() == Rate(2, 15));
  c.scheme = Scheme::ListReduce;
  CHECK(c.guaranteed_rate() == Rate(3, 10));
  c.scheme = Scheme::Boost;
  c.n = 1024;
  CHECK(c.guaranteed_rate() == Rate(7, 20));
  c.rate = "0.36";
  CHECK_FALSE(run_trial(c, 0).guaranteed);
}

TEST_CASE("config validation reports the problem") {
  ExperimentConfig c;
  c.eps_inv = 5;
  CHECK_THROWS_WITH_AS(c.validate(), "eps must lie in (0, 1/8)", std::invalid_argument);
  c = ExperimentConfig{};
  c.inner = "rs";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // n = 64 exceeds the table code
  c.n = 16;
  CHECK_NOTHROW(c.validate());
  c.scheme = Scheme::Adaptive27;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.scheme = Scheme::Boost;
  c.adversary.kind = "antimajority";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.adversary.kind = "gremlin";
  CHECK_THROWS_AS(run_trial(c, 0), std::invalid_argument);
}

TEST_CASE("experiment rows and summary") {
  ExperimentConfig c;
  c.n = 16;
  c.trials = 4;
  c.seed = 40;
  std::ostringstream a, b;
  const auto s = run_experiment(c, a);
  run_experiment(c, b);
  CHECK(a.str() == b.str());
  const auto ls = lines(a.str());
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == csv_header(Scheme::NonAdaptive14));
  CHECK(fields(ls[0]).size() == fields(ls[1]).size());
  CHECK(fields(ls[3])[1] == "42");
  CHECK(s.trials == 4);
  CHECK(s.successes == 4);
  CHECK(s.guaranteed_failures == 0);
  CHECK(s.text(c).find("success 4/4") != std::string::npos);
}

TEST_CASE("seed override from the environment") {
  unsetenv("ICODING_SEED");
  CHECK(seed_from_env(5) == 5);
  setenv("ICODING_SEED", "123", 1);
  CHECK(seed_from_env(5) == 123);
  setenv("ICODING_SEED", "12x", 1);
  CHECK_THROWS_AS(seed_from_env(5), std::invalid_argument);
  unsetenv("ICODING_SEED");
}

TEST_CASE("cli run: guaranteed regime succeeds and output is reproducible") {
  if (cli().empty()) return;
  const std::string args = "run --scheme nonadaptive14 --eps 10 --n 32 --rate guaranteed --adv blockfront --trials 30";
  const auto r1 = invoke(args);
  const auto r2 = invoke(args);
  CHECK(r1.status == 0);
  CHECK(r1.out == r2.out);
  const auto ls = lines(r1.out);
  REQUIRE(ls.size() == 31);
  const auto head = fields(ls[0]);
  const auto row = fields(ls[1]);
  REQUIRE(head.size() == row.size());
  for (size_t i = 0; i < head.size(); ++i) {
    if (head[i] == "regime") CHECK(row[i] == "guaranteed");
    if (head[i] == "success") CHECK(row[i] == "1");
    if (head[i] == "budget_ok") CHECK(row[i] == "1");
  }
}

TEST_CASE("cli run: seed override and per-trial seeds") {
  if (cli().empty()) return;
  const auto r = invoke("run --n 16 --trials 3 --seed 4", "ICODING_SEED=100");
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 4);
  CHECK(fields(ls[1])[1] == "100");
  CHECK(fields(ls[3])[1] == "102");
}

TEST_CASE("cli run: stress failures do not fail the process, guaranteed ones do") {
  if (cli().empty()) return;
  const auto stress = invoke("run --scheme nonadaptive14 --n 32 --rate 0.30 --adv antimajority --trials 20");
  CHECK(stress.status == 0);
  CHECK(stress.out.find(",stress,antimajority,") != std::string::npos);
  CHECK(stress.out.find(",0,0,0,") != std::string::npos);  // correct_A, correct_B, success
  const auto bad = invoke("run --scheme boost --n 16 --p 0.999 --policy hostile --trials 2");
  CHECK(bad.status == 1);
}

TEST_CASE("cli: invalid configurations exit with status 2") {
  if (cli().empty()) return;
  CHECK(invoke("run --scheme nosuch").status == 2);
  CHECK(invoke("run --eps 4").status == 2);
  CHECK(invoke("run --rate 1/0").status == 2);
  CHECK(invoke("sweep --rates 0.1").status == 2);
  CHECK(invoke("bench --op sort").status == 2);
  CHECK(invoke("frobnicate").status != 0);
}

TEST_CASE("cli: config file with command-line precedence") {
  if (cli().empty()) return;
  const std::string path = "harness_test_config.txt";
  {
    std::ofstream f(path);
    f << "# comment\nscheme = adaptive27\nn=16\ntrials=5\nadv=burst\n";
  }
  const auto r = invoke("run --config " + path + " --trials 2");
  CHECK(r.status == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(fields(ls[1])[2] == "adaptive27");
  CHECK(fields(ls[1])[4] == "16");
  CHECK(fields(ls[1])[7] == "burst");
  std::remove(path.c_str());
}

TEST_CASE("cli sweep and bench") {
  if (cli().empty()) return;
  const auto s = invoke("sweep --scheme onesided13 --eps 10 --n 16 --rates 0.10:0.16:0.02 --trials 10");
  CHECK(s.status == 0);
  const auto ls = lines(s.out);
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "scheme,rate,regime,trials,successes,success_fraction,budget_violations");
  CHECK(ls[1] == "onesided13,1/10,guaranteed,10,10,1.000000,0");
  CHECK(fields(ls[4])[2] == "stress");

  const auto b = invoke("bench --op intersect --sizes 100,1000 --reps 2");
  CHECK(b.status == 0);
  const auto bl = lines(b.out);
  REQUIRE(bl.size() == 7);
  for (size_t i = 1; i < bl.size(); ++i) CHECK(fields(bl[i]).back() == "0");
}
