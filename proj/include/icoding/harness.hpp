#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "icoding/base_decoders.hpp"
#include "icoding/boosting.hpp"
#include "icoding/common.hpp"
#include "icoding/reduction.hpp"

namespace icoding {

enum class Scheme { NonAdaptive14, Adaptive27, OneSided13, ListReduce, Boost, Boost2 };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);
bool is_reduction(Scheme s);

struct AdversarySpec {
  std::string kind = "uniform";  // null | uniform | burst | blockfront | antimajority
  std::optional<double> p;       // uniform corruption probability, defaults to the rate
  uint64_t from = 0;             // first round the strategy may touch
  std::string target = "alice";  // antimajority receiver(s)
};

struct ExperimentConfig {
  Scheme scheme = Scheme::NonAdaptive14;
  uint32_t n = 64;
  uint32_t eps_inv = 10;             // eps = 1 / eps_inv
  std::string rate = "guaranteed";   // a rate such as 0.3 or 3/10, or "guaranteed"
  AdversarySpec adversary;
  uint64_t trials = 1;
  uint64_t seed = 1;
  uint32_t s = 3;                    // inner (oracle) list size
  GarbagePolicy policy = GarbagePolicy::Random;
  std::string inner = "oracle";      // reductions: oracle | rs
  // Boosting only.
  SearchMode search = SearchMode::Simple;
  std::string rho = "0.45";          // base rate
  double p = 0.0;                    // base failure probability
  uint32_t depth = 2;                // boost2 recursion depth
  bool audit = true;

  Rate eps() const { return Rate(1, eps_inv); }
  // Throws std::invalid_argument with a description of the first problem.
  void validate() const;
  Rate guaranteed_rate() const;
  Rate resolved_rate() const;
};

struct TrialRow {
  uint64_t trial = 0;
  uint64_t seed = 0;
  bool guaranteed = false;
  bool correct[2] = {false, false};
  bool success = false;
  uint64_t spent = 0;
  uint64_t limit = 0;
  bool budget_ok = true;
  // Reductions.
  double c_prime[2] = {0, 0};
  double c_double_prime[2] = {0, 0};
  bool safe[2] = {false, false};
  size_t list_size[2] = {0, 0};
  // Boosting.
  uint64_t votes[2] = {0, 0};
  uint64_t vote_floor = 0;
  uint64_t dichotomy_violations = 0;
  uint64_t prefix_violations = 0;
  uint64_t base_failures = 0;
  uint64_t within_meta_rounds = 0;
  uint64_t meta_rounds = 0;
  uint64_t inner_missed_within = 0;
  size_t inner_max_list = 0;
};

TrialRow run_trial(const ExperimentConfig& config, uint64_t trial);

std::string csv_header(Scheme s);
std::string csv_row(const ExperimentConfig& config, const TrialRow& row);

struct ExperimentSummary {
  uint64_t trials = 0;
  uint64_t successes = 0;
  uint64_t guaranteed_trials = 0;
  uint64_t guaranteed_failures = 0;
  uint64_t budget_violations = 0;
  double mean_c_prime[2] = {0, 0};
  double mean_c_double_prime[2] = {0, 0};
  uint64_t min_votes = UINT64_MAX;
  uint64_t vote_floor = 0;
  uint64_t dichotomy_violations = 0;
  uint64_t spent = 0;

  double success_fraction() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
  std::string text(const ExperimentConfig& config) const;
};

// Per-trial CSV rows to |csv| (header first); trial i uses seed + i.
ExperimentSummary run_experiment(const ExperimentConfig& config, std::ostream& csv);

// "lo:hi:step" with decimal or fractional endpoints, inclusive of hi.
std::vector<Rate> parse_rate_range(const std::string& spec);

// One CSV row per rate: scheme, rate, regime, trials, successes,
// success_fraction, budget_violations. Returns the summaries in order.
std::vector<ExperimentSummary> run_sweep(const ExperimentConfig& base, const std::vector<Rate>& rates,
                                         std::ostream& csv);

struct BenchConfig {
  std::string op = "intersect";
  std::vector<uint64_t> sizes{100, 1000, 10000};
  uint32_t depth = 64;
  uint32_t reps = 5;
  uint32_t C = 4;
  uint64_t seed = 1;
};

// Counter table per (protocol, M), averaged over |reps| promise pairs.
void run_bench(const BenchConfig& config, std::ostream& csv);

// Environment override of a seed: ICODING_SEED when set and numeric.
uint64_t seed_from_env(uint64_t fallback);

}  // namespace icoding
