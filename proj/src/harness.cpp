#include "icoding/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "icoding/intersect.hpp"
#include "icoding/meta_protocol.hpp"

namespace icoding {

namespace {

using Tree = IncrementalSubtree;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

Rate scheme_rate(const ExperimentConfig& c) {
  switch (c.scheme) {
    case Scheme::NonAdaptive14: return ReductionConfig::make(Variant::NonAdaptive14, c.eps(), c.n, c.s).guaranteed_rate();
    case Scheme::Adaptive27: return ReductionConfig::make(Variant::Adaptive27, c.eps(), c.n, c.s).guaranteed_rate();
    case Scheme::OneSided13: return ReductionConfig::make(Variant::OneSided13, c.eps(), c.n, c.s).guaranteed_rate();
    case Scheme::ListReduce: return ReductionConfig::make(Variant::ListReduce, c.eps(), c.n, c.s).guaranteed_rate();
    case Scheme::Boost:
      return BoostConfig::make(c.n, c.eps(), Rate::parse(c.rho), c.s, c.p).guaranteed_rate();
    case Scheme::Boost2:
      return RecursiveBoostConfig::make(c.n, c.depth, c.eps(), Rate::parse(c.rho), c.s).guaranteed_rate();
  }
  return Rate(0, 1);
}

Variant variant_of(Scheme s) {
  switch (s) {
    case Scheme::NonAdaptive14: return Variant::NonAdaptive14;
    case Scheme::Adaptive27: return Variant::Adaptive27;
    case Scheme::OneSided13: return Variant::OneSided13;
    default: return Variant::ListReduce;
  }
}

std::unique_ptr<Adversary> make_adversary(const AdversarySpec& spec, Rate rate, uint64_t block_len, uint64_t seed,
                                          const ReductionConfig* rc, const ProtocolInstance& inst) {
  StrategyWindow w;
  w.from = spec.from;
  if (spec.kind == "null") return std::make_unique<NullAdversary>();
  if (spec.kind == "uniform") return std::make_unique<UniformAdversary>(spec.p.value_or(rate.value()), seed, w);
  if (spec.kind == "burst") return std::make_unique<BurstAdversary>(seed, w);
  if (spec.kind == "blockfront") return std::make_unique<BlockFrontAdversary>(block_len, seed, w);
  if (spec.kind == "antimajority") {
    if (!rc) throw std::invalid_argument("the antimajority adversary applies to reduction schemes only");
    return std::make_unique<AntiMajorityAdversary>(*rc, inst, parse_target(spec.target), seed);
  }
  throw std::invalid_argument("unknown adversary '" + spec.kind + "' (null|uniform|burst|blockfront|antimajority)");
}

TrialRow reduction_trial(const ExperimentConfig& c, Rate rate, uint64_t seed) {
  const auto rc = ReductionConfig::make(variant_of(c.scheme), c.eps(), c.n, c.s);
  const auto inst = ProtocolInstance::random(c.n, mix2(seed, 1));
  std::unique_ptr<InnerScheme> inner;
  if (c.inner == "rs") inner = std::make_unique<RsExchangeBlock>(inst, c.eps());
  else inner = std::make_unique<OracleScheme>(inst, ListDecodeGuarantee{rc.inner_rate(), c.s, 0.0, rc.block_rounds},
                                                 c.policy);
  auto adv = make_adversary(c.adversary, rate, rc.block_rounds, mix2(seed, 2), &rc, inst);
  const auto r = run_reduction(rc, inst, *inner, *adv, rate, mix2(seed, 3));
  TrialRow row;
  for (int i = 0; i < 2; ++i) {
    row.correct[i] = r.correct[i];
    row.c_prime[i] = r.conf(r.c_prime[i]);
    row.c_double_prime[i] = r.conf(r.c_double_prime[i]);
    row.safe[i] = r.safe[i];
    row.list_size[i] = r.lists[i].size();
  }
  row.success = c.scheme == Scheme::OneSided13 ? r.correct[0] : r.correct[0] && r.correct[1];
  row.spent = r.spent;
  row.limit = r.limit;
  return row;
}

void fill_boost(TrialRow& row, const BoostResult& r) {
  for (int i = 0; i < 2; ++i) {
    row.correct[i] = r.correct[i];
    row.votes[i] = r.truth_votes[i];
  }
  row.success = r.both_correct();
  row.vote_floor = r.config.vote_floor;
  row.dichotomy_violations = r.dichotomy_violations;
  row.prefix_violations = r.prefix_violations;
  row.base_failures = r.base_failures;
  row.within_meta_rounds = r.within_meta_rounds;
  row.meta_rounds = r.config.meta_rounds;
}

TrialRow boost_trial(const ExperimentConfig& c, Rate rate, uint64_t seed) {
  const auto inst = ProtocolInstance::random(c.n, mix2(seed, 1));
  BoostOptions o;
  o.search = c.search;
  o.audit = c.audit;
  TrialRow row;
  if (c.scheme == Scheme::Boost) {
    const auto cfg = BoostConfig::make(c.n, c.eps(), Rate::parse(c.rho), c.s, c.p);
    auto adv = make_adversary(c.adversary, rate, cfg.base.block_rounds, mix2(seed, 2), nullptr, inst);
    const auto run = run_boost_oracle(inst, cfg, c.policy, *adv, rate, mix2(seed, 3), o);
    fill_boost(row, run.result);
    row.spent = run.spent;
    row.limit = run.limit;
  } else {
    const auto rc = RecursiveBoostConfig::make(c.n, c.depth, c.eps(), Rate::parse(c.rho), c.s);
    auto adv = make_adversary(c.adversary, rate, rc.levels.back().base.block_rounds, mix2(seed, 2), nullptr, inst);
    const auto run = run_recursive_boost(inst, rc, c.policy, *adv, rate, mix2(seed, 3), o);
    fill_boost(row, run.top);
    row.spent = run.spent;
    row.limit = run.limit;
    for (const auto& a : run.audits) {
      row.inner_missed_within += a.missed_within;
      row.inner_max_list = std::max(row.inner_max_list, a.max_list);
      row.dichotomy_violations += a.inner_dichotomy_violations;
      row.prefix_violations += a.inner_prefix_violations;
    }
  }
  return row;
}

// Two edge sets with a common root path; every other edge lies in a region
// reserved for one of them.
std::pair<Tree, Tree> promise_pair(uint64_t m, uint32_t depth, std::mt19937_64& rng, Tree::Index index) {
  Tree t[2] = {Tree(depth, index), Tree(depth, index)};
  const uint32_t len = static_cast<uint32_t>(rng() % (depth / 2 + 1));
  std::vector<std::pair<int32_t, uint8_t>> grow[2];
  int32_t at[2] = {Tree::kRoot, Tree::kRoot};
  for (uint32_t d = 0; d < len; ++d) {
    const uint8_t bit = static_cast<uint8_t>(rng() & 1);
    const int owner = static_cast<int>(rng() % 3);
    if (owner < 2) grow[owner].emplace_back(at[owner], static_cast<uint8_t>(1u << (bit ^ 1)));
    for (int p = 0; p < 2; ++p) at[p] = t[p].add_edge(at[p], bit);
  }
  grow[0].emplace_back(at[0], 1);
  grow[1].emplace_back(at[1], 2);
  for (int p = 0; p < 2; ++p) {
    uint64_t attempts = 0;
    while (t[p].edge_count() < m && attempts++ < 40 * m) {
      const size_t k = grow[p].size();
      const size_t pick = (rng() & 1) ? k - 1 - rng() % std::min<size_t>(k, 8) : rng() % k;
      auto [node, mask] = grow[p][pick];
      const uint8_t bit = mask == 3 ? static_cast<uint8_t>(rng() & 1) : (mask == 1 ? 0 : 1);
      if (t[p].depth(node) >= depth || t[p].child(node, bit) != Tree::kNone) continue;
      grow[p].emplace_back(t[p].add_edge(node, bit), 3);
    }
  }
  return {std::move(t[0]), std::move(t[1])};
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "nonadaptive14") return Scheme::NonAdaptive14;
  if (name == "adaptive27") return Scheme::Adaptive27;
  if (name == "onesided13") return Scheme::OneSided13;
  if (name == "listreduce") return Scheme::ListReduce;
  if (name == "boost") return Scheme::Boost;
  if (name == "boost2") return Scheme::Boost2;
  throw std::invalid_argument("unknown scheme '" + name +
                              "' (nonadaptive14|adaptive27|onesided13|listreduce|boost|boost2)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::NonAdaptive14: return "nonadaptive14";
    case Scheme::Adaptive27: return "adaptive27";
    case Scheme::OneSided13: return "onesided13";
    case Scheme::ListReduce: return "listreduce";
    case Scheme::Boost: return "boost";
    case Scheme::Boost2: return "boost2";
  }
  return "?";
}

bool is_reduction(Scheme s) { return s != Scheme::Boost && s != Scheme::Boost2; }

void ExperimentConfig::validate() const {
  if (eps_inv == 0) throw std::invalid_argument("--eps must be a positive integer (eps = 1/value)");
  if (trials == 0) throw std::invalid_argument("--trials must be positive");
  if (s == 0) throw std::invalid_argument("--s must be positive");
  if (is_reduction(scheme)) {
    if (inner != "oracle" && inner != "rs") throw std::invalid_argument("--inner must be oracle or rs");
    if (inner == "rs" && scheme != Scheme::NonAdaptive14)
      throw std::invalid_argument("the rs inner scheme list-decodes only at 1/4 - eps, so it serves nonadaptive14 only");
    if (inner == "rs" && n > RsExchangeBlock::kMaxDepth)
      throw std::invalid_argument("the rs inner scheme supports n <= " + std::to_string(RsExchangeBlock::kMaxDepth));
  } else {
    if (adversary.kind == "antimajority")
      throw std::invalid_argument("the antimajority adversary applies to reduction schemes only");
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("--p must lie in [0, 1)");
  }
  if (adversary.p && (*adversary.p < 0.0 || *adversary.p > 1.0))
    throw std::invalid_argument("--adv-p must lie in [0, 1]");
  (void)guaranteed_rate();  // parameter errors of the scheme itself
  const Rate r = resolved_rate();
  if (Rate(1, 1) < r) throw std::invalid_argument("rate must not exceed 1");
}

Rate ExperimentConfig::guaranteed_rate() const { return scheme_rate(*this); }

Rate ExperimentConfig::resolved_rate() const { return rate == "guaranteed" ? guaranteed_rate() : Rate::parse(rate); }

TrialRow run_trial(const ExperimentConfig& config, uint64_t trial) {
  const Rate rate = config.resolved_rate();
  const uint64_t seed = config.seed + trial;
  TrialRow row = is_reduction(config.scheme) ? reduction_trial(config, rate, seed) : boost_trial(config, rate, seed);
  row.trial = trial;
  row.seed = seed;
  row.guaranteed = rate <= config.guaranteed_rate();
  row.budget_ok = row.spent <= row.limit;
  return row;
}

std::string csv_header(Scheme s) {
  const std::string common = "trial,seed,scheme,eps,n,rate,regime,adversary,";
  if (is_reduction(s)) {
    return common +
           "correct_A,correct_B,success,cprime_A,cprime_B,cdprime_A,cdprime_B,safe_A,safe_B,list_A,list_B,"
           "spent,limit,budget_ok";
  }
  return common +
         "policy,search,correct_A,correct_B,success,votes_A,votes_B,vote_floor,dichotomy_violations,"
         "prefix_violations,base_failures,within_meta_rounds,meta_rounds,inner_missed_within,inner_max_list,"
         "spent,limit,budget_ok";
}

std::string csv_row(const ExperimentConfig& c, const TrialRow& r) {
  std::ostringstream os;
  os << r.trial << ',' << r.seed << ',' << scheme_name(c.scheme) << ",1/" << c.eps_inv << ',' << c.n << ','
     << c.resolved_rate().str() << ',' << (r.guaranteed ? "guaranteed" : "stress") << ',' << c.adversary.kind << ',';
  if (is_reduction(c.scheme)) {
    os << r.correct[0] << ',' << r.correct[1] << ',' << r.success << ',' << fmt(r.c_prime[0]) << ','
       << fmt(r.c_prime[1]) << ',' << fmt(r.c_double_prime[0]) << ',' << fmt(r.c_double_prime[1]) << ','
       << r.safe[0] << ',' << r.safe[1] << ',' << r.list_size[0] << ',' << r.list_size[1] << ',';
  } else {
    os << policy_name(c.policy) << ',' << search_mode_name(c.search) << ',' << r.correct[0] << ',' << r.correct[1]
       << ',' << r.success << ',' << r.votes[0] << ',' << r.votes[1] << ',' << r.vote_floor << ','
       << r.dichotomy_violations << ',' << r.prefix_violations << ',' << r.base_failures << ','
       << r.within_meta_rounds << ',' << r.meta_rounds << ',' << r.inner_missed_within << ',' << r.inner_max_list
       << ',';
  }
  os << r.spent << ',' << r.limit << ',' << r.budget_ok;
  return os.str();
}

std::string ExperimentSummary::text(const ExperimentConfig& c) const {
  std::ostringstream os;
  os << "scheme " << scheme_name(c.scheme) << " n=" << c.n << " eps=1/" << c.eps_inv << " rate="
     << c.resolved_rate().str() << " (guaranteed " << c.guaranteed_rate().str() << ") adversary " << c.adversary.kind
     << '\n';
  os << "success " << successes << '/' << trials << " = " << fmt(success_fraction()) << '\n';
  os << "guaranteed-regime trials " << guaranteed_trials << ", failures " << guaranteed_failures << '\n';
  os << "budget violations " << budget_violations << ", corruptions spent " << spent << '\n';
  if (is_reduction(c.scheme)) {
    os << "mean C' A " << fmt(mean_c_prime[0]) << " B " << fmt(mean_c_prime[1]) << "; mean C'' A "
       << fmt(mean_c_double_prime[0]) << " B " << fmt(mean_c_double_prime[1]) << '\n';
  } else {
    os << "min truth votes " << (trials ? min_votes : 0) << " (floor " << vote_floor << "), dichotomy violations "
       << dichotomy_violations << '\n';
  }
  return os.str();
}

ExperimentSummary run_experiment(const ExperimentConfig& config, std::ostream& csv) {
  config.validate();
  ExperimentSummary s;
  csv << csv_header(config.scheme) << '\n';
  for (uint64_t i = 0; i < config.trials; ++i) {
    const TrialRow r = run_trial(config, i);
    csv << csv_row(config, r) << '\n';
    ++s.trials;
    if (r.success) ++s.successes;
    if (r.guaranteed) {
      ++s.guaranteed_trials;
      if (!r.success || !r.budget_ok) ++s.guaranteed_failures;
    }
    if (!r.budget_ok) ++s.budget_violations;
    for (int p = 0; p < 2; ++p) {
      s.mean_c_prime[p] += r.c_prime[p];
      s.mean_c_double_prime[p] += r.c_double_prime[p];
    }
    s.min_votes = std::min({s.min_votes, r.votes[0], r.votes[1]});
    s.vote_floor = r.vote_floor;
    s.dichotomy_violations += r.dichotomy_violations;
    s.spent += r.spent;
  }
  for (int p = 0; p < 2; ++p) {
    s.mean_c_prime[p] /= static_cast<double>(s.trials);
    s.mean_c_double_prime[p] /= static_cast<double>(s.trials);
  }
  return s;
}

std::vector<Rate> parse_rate_range(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? std::string::npos : spec.find(':', a + 1);
  if (b == std::string::npos) throw std::invalid_argument("rate range must look like lo:hi:step, got '" + spec + "'");
  const Rate lo = Rate::parse(spec.substr(0, a));
  const Rate hi = Rate::parse(spec.substr(a + 1, b - a - 1));
  const Rate step = Rate::parse(spec.substr(b + 1));
  if (!(Rate(0, 1) < step)) throw std::invalid_argument("rate step must be positive");
  if (hi < lo) throw std::invalid_argument("rate range is empty");
  std::vector<Rate> out;
  for (Rate r = lo; r <= hi; r = r + step) out.push_back(r);
  return out;
}

std::vector<ExperimentSummary> run_sweep(const ExperimentConfig& base, const std::vector<Rate>& rates,
                                         std::ostream& csv) {
  std::vector<ExperimentSummary> out;
  csv << "scheme,rate,regime,trials,successes,success_fraction,budget_violations\n";
  for (const Rate& r : rates) {
    ExperimentConfig c = base;
    c.rate = r.str();
    std::ostringstream sink;
    const auto s = run_experiment(c, sink);
    csv << scheme_name(c.scheme) << ',' << r.str() << ',' << (r <= c.guaranteed_rate() ? "guaranteed" : "stress")
        << ',' << s.trials << ',' << s.successes << ',' << fmt(s.success_fraction()) << ',' << s.budget_violations
        << '\n';
    out.push_back(s);
  }
  return out;
}

void run_bench(const BenchConfig& config, std::ostream& csv) {
  if (config.op != "intersect") throw std::invalid_argument("unknown bench op '" + config.op + "' (intersect)");
  if (config.reps == 0) throw std::invalid_argument("--reps must be positive");
  csv << "op,protocol,M,reps,comparisons,bits,alice_work,bob_work,max_comparison_work,log2M_sq,"
         "comparisons_per_log2M_sq,bob_work_per_M,rebuild_work,encode_work,mismatches\n";
  for (uint64_t m : config.sizes) {
    if (m == 0) throw std::invalid_argument("bench sizes must be positive");
    for (const std::string proto : {"simple", "double", "probabilistic"}) {
      std::mt19937_64 rng(mix2(config.seed, m));
      const auto index = proto == "double" ? Tree::Index::SearchTreeWithCodes : Tree::Index::None;
      double comparisons = 0, bits = 0, aw = 0, bw = 0, rebuild = 0, encode = 0;
      uint64_t max_cmp = 0, mismatches = 0;
      for (uint32_t r = 0; r < config.reps; ++r) {
        auto [a, b] = promise_pair(m, config.depth, rng, index);
        IntersectParams p;
        p.C = config.C;
        p.seed = rng();
        p.audit = false;
        IntersectResult res;
        if (proto == "simple") res = intersect_simple(a, b, p);
        else if (proto == "double") res = intersect_double(a, b, p);
        else res = intersect_probabilistic(a, b, p, 0.0);
        if (res.path != brute_force_intersection(a, b).path) ++mismatches;
        comparisons += static_cast<double>(res.stats.comparisons);
        bits += static_cast<double>(res.stats.bits);
        aw += static_cast<double>(res.stats.alice_work);
        bw += static_cast<double>(res.stats.bob_work);
        max_cmp = std::max(max_cmp, res.stats.max_comparison_work);
        rebuild += static_cast<double>(a.counters().rebuild_work + b.counters().rebuild_work);
        encode += static_cast<double>(a.counters().encode_work + b.counters().encode_work);
      }
      const double reps = config.reps;
      const double lg = std::log2(static_cast<double>(m));
      csv << config.op << ',' << proto << ',' << m << ',' << config.reps << ',' << fmt(comparisons / reps) << ','
          << fmt(bits / reps) << ',' << fmt(aw / reps) << ',' << fmt(bw / reps) << ',' << max_cmp << ','
          << fmt(lg * lg) << ',' << fmt(comparisons / reps / (lg * lg)) << ',' << fmt(bw / reps / m) << ','
          << fmt(rebuild / reps) << ',' << fmt(encode / reps) << ',' << mismatches << '\n';
    }
  }
}

uint64_t seed_from_env(uint64_t fallback) {
  const char* v = std::getenv("ICODING_SEED");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v, &end, 10);
  if (*end != '\0') throw std::invalid_argument(std::string("ICODING_SEED is not a number: ") + v);
  return x;
}

}  // namespace icoding
