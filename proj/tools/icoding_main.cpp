#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "icoding/harness.hpp"

using namespace icoding;

namespace {

struct Flags {
  std::string scheme = "nonadaptive14";
  std::string policy = "random";
  std::string search = "simple";
  double adv_p = -1.0;
  std::string out;
};

void add_experiment_flags(CLI::App& cmd, ExperimentConfig& c, Flags& f) {
  cmd.add_option("--scheme", f.scheme, "nonadaptive14|adaptive27|onesided13|listreduce|boost|boost2");
  cmd.add_option("--n", c.n, "protocol depth");
  cmd.add_option("--eps", c.eps_inv, "integer k with eps = 1/k (boost: eps')");
  cmd.add_option("--adv", c.adversary.kind, "null|uniform|burst|blockfront|antimajority");
  cmd.add_option("--adv-p", f.adv_p, "uniform corruption probability (default: the rate)");
  cmd.add_option("--adv-from", c.adversary.from, "first round the adversary may corrupt");
  cmd.add_option("--target", c.adversary.target, "antimajority receiver: alice|bob|both");
  cmd.add_option("--trials", c.trials);
  cmd.add_option("--seed", c.seed, "base seed; trial i uses seed + i (ICODING_SEED overrides)");
  cmd.add_option("--s", c.s, "inner list size");
  cmd.add_option("--policy", f.policy, "garbage candidates of the oracle base: duplicate|random|hostile");
  cmd.add_option("--inner", c.inner, "reduction inner scheme: oracle|rs");
  cmd.add_option("--search", f.search, "boosting intersection search: simple|double");
  cmd.add_option("--rho", c.rho, "boosting base rate");
  cmd.add_option("--p", c.p, "boosting base failure probability");
  cmd.add_option("--depth", c.depth, "boost2 recursion depth");
  cmd.add_flag("!--no-audit", c.audit, "skip the brute-force audits of boosting runs");
  cmd.add_option("--out", f.out, "CSV destination (default stdout)");
  cmd.add_option("--config", "flat key=value file keyed by long option names; explicit flags win");
}

void finish_flags(ExperimentConfig& c, const Flags& f) {
  c.scheme = parse_scheme(f.scheme);
  c.policy = parse_policy(f.policy);
  c.search = parse_search_mode(f.search);
  if (f.adv_p >= 0.0) c.adversary.p = f.adv_p;
  c.seed = seed_from_env(c.seed);
}

// Expands "--config FILE" into flags placed right after the subcommand, so
// that flags given on the command line take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> from_file;
  for (size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<ptrdiff_t>(i), args.begin() + static_cast<ptrdiff_t>(i) + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<ptrdiff_t>(i));
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(no) + ": expected key=value");
      auto trim = [](std::string x) {
        const auto a = x.find_first_not_of(" \t\r");
        const auto b = x.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : x.substr(a, b - a + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "no-audit" || key == "audit") {
        const bool on = value == "1" || value == "true" || value == "yes";
        if ((key == "audit") != on) from_file.push_back("--no-audit");
        continue;
      }
      from_file.push_back("--" + key);
      from_file.push_back(value);
    }
    --i;
  }
  const size_t at = args.empty() ? 0 : 1;
  args.insert(args.begin() + static_cast<ptrdiff_t>(at), from_file.begin(), from_file.end());
  return args;
}

std::vector<uint64_t> parse_sizes(const std::string& s) {
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoull(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive coding simulator: reductions, boosting and tree intersection"};
  app.require_subcommand(1);

  ExperimentConfig run_cfg, sweep_cfg;
  Flags run_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "run trials of one configuration");

  auto* sweep = app.add_subcommand("sweep", "success fraction over a range of rates");
  std::string rates;
  sweep_cfg.trials = 100;

  BenchConfig bench_cfg;
  std::string sizes = "100,1000,10000";
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "instrumented counters of the intersection protocols");

  for (auto* cmd : {run, sweep, bench}) cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_experiment_flags(*run, run_cfg, run_flags);
  run->add_option("--rate", run_cfg.rate, "error rate (0.3, 3/10) or 'guaranteed'");
  add_experiment_flags(*sweep, sweep_cfg, sweep_flags);
  sweep->add_option("--rates", rates, "lo:hi:step")->required();
  bench->add_option("--op", bench_cfg.op, "intersect");
  bench->add_option("--sizes", sizes, "comma-separated edge counts M");
  bench->add_option("--depth", bench_cfg.depth, "tree depth");
  bench->add_option("--reps", bench_cfg.reps, "pairs per size");
  bench->add_option("--C", bench_cfg.C, "hash constant");
  bench->add_option("--seed", bench_cfg.seed);
  bench->add_option("--out", bench_out, "CSV destination (default stdout)");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  auto with_output = [](const std::string& path, auto&& body) {
    if (path.empty()) return body(std::cout);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return body(f);
  };

  try {
    if (*run) {
      finish_flags(run_cfg, run_flags);
      run_cfg.validate();
      const auto s = with_output(run_flags.out, [&](std::ostream& os) { return run_experiment(run_cfg, os); });
      std::cerr << s.text(run_cfg);
      return s.guaranteed_failures > 0 ? 1 : 0;
    }
    if (*sweep) {
      finish_flags(sweep_cfg, sweep_flags);
      const auto list = parse_rate_range(rates);
      const auto all = with_output(sweep_flags.out, [&](std::ostream& os) { return run_sweep(sweep_cfg, list, os); });
      uint64_t failed = 0;
      for (const auto& s : all) failed += s.guaranteed_failures;
      std::cerr << "sweep over " << list.size() << " rates, guaranteed-regime failures " << failed << '\n';
      return failed > 0 ? 1 : 0;
    }
    bench_cfg.sizes = parse_sizes(sizes);
    bench_cfg.seed = seed_from_env(bench_cfg.seed);
    with_output(bench_out, [&](std::ostream& os) {
      run_bench(bench_cfg, os);
      return 0;
    });
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
