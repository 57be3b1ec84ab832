#include "icoding/reduction.hpp"

#include <algorithm>
#include <map>

namespace icoding {

Variant parse_variant(const std::string& name) {
  if (name == "nonadaptive14") return Variant::NonAdaptive14;
  if (name == "adaptive27") return Variant::Adaptive27;
  if (name == "onesided13") return Variant::OneSided13;
  if (name == "listreduce") return Variant::ListReduce;
  throw std::invalid_argument("unknown reduction variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::NonAdaptive14: return "nonadaptive14";
    case Variant::Adaptive27: return "adaptive27";
    case Variant::OneSided13: return "onesided13";
    case Variant::ListReduce: return "listreduce";
  }
  return "?";
}

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

}  // namespace

ReductionConfig ReductionConfig::make(Variant v, Rate eps, uint32_t n, uint32_t s) {
  if (!(Rate(0, 1) < eps) || !(eps < Rate(1, 8))) throw std::invalid_argument("eps must lie in (0, 1/8)");
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("protocol depth must be even and at least 2");
  if (s == 0) throw std::invalid_argument("inner list size must be positive");
  ReductionConfig c;
  c.variant = v;
  c.eps = eps;
  c.n = n;
  c.s = s;
  const auto inv = static_cast<uint32_t>(ceil_div(eps.den, eps.num));
  switch (v) {
    case Variant::NonAdaptive14:
    case Variant::ListReduce:
      c.b1 = inv;
      c.b2 = 0;
      break;
    case Variant::Adaptive27:
      c.b1 = static_cast<uint32_t>(ceil_div(3 * eps.den, eps.num));
      c.b2 = inv;
      break;
    case Variant::OneSided13:
      c.b1 = inv;
      c.b2 = inv;
      break;
  }
  c.n_c = ecc_length_for(eps);
  c.block_rounds = 2ull * c.n_c;
  c.total_rounds = c.b1 * c.block_rounds + static_cast<uint64_t>(c.b2) * c.n_c;
  c.edge_bound = static_cast<size_t>(c.b1) * s * n;
  c.list_L = v == Variant::ListReduce ? inv : 0;
  return c;
}

Rate ReductionConfig::guaranteed_rate() const {
  Rate two_eps = Rate(2, 1) * eps;
  switch (variant) {
    case Variant::NonAdaptive14: return Rate(1, 4) - two_eps;
    case Variant::Adaptive27: return Rate(2, 7) - two_eps;
    case Variant::OneSided13: return Rate(1, 3) - two_eps;
    case Variant::ListReduce: return Rate(1, 2) - two_eps;
  }
  return Rate(0, 1);
}

Rate ReductionConfig::inner_rate() const {
  return variant == Variant::NonAdaptive14 ? Rate(1, 4) - eps : Rate(1, 2) - eps;
}

InterleavedRs ReductionConfig::make_code() const {
  return InterleavedRs(2, n_c, InterleavedRs::components_for(4 * edge_bound, 2), 0xE5E7C0DEull);
}

bool ReductionConfig::above_threshold(int64_t units) const {
  return static_cast<__int128>(units) * eps.num > static_cast<__int128>(n_c) * eps.den;
}

bool ReductionConfig::at_least_multiple(int64_t units, int64_t k) const {
  return static_cast<__int128>(units) * eps.num >= static_cast<__int128>(k) * n_c * eps.den;
}

int64_t ConfidenceLedger::total() const {
  int64_t t = 0;
  for (const auto& b : blocks_) t += b.c_units;
  return t;
}

int64_t ConfidenceLedger::of(const Bits& path) const {
  int64_t t = 0;
  for (const auto& b : blocks_)
    if (b.path == path) t += b.c_units;
  return t;
}

std::optional<Bits> ConfidenceLedger::tau_max() const {
  std::map<Bits, int64_t> sums;
  for (const auto& b : blocks_)
    if (!b.path.empty()) sums[b.path] += b.c_units;
  std::optional<Bits> best;
  int64_t best_c = 0;
  // std::map iterates in lexicographic order, so strict > keeps the first.
  for (const auto& [p, c] : sums) {
    if (!best || c > best_c) {
      best = p;
      best_c = c;
    }
  }
  return best;
}

int64_t ConfidenceLedger::c_prime() const {
  auto t = tau_max();
  int64_t ct = t ? of(*t) : 0;
  return ct - (total() - ct - of_empty());
}

int64_t ConfidenceLedger::c_double_prime() const {
  auto t = tau_max();
  int64_t ct = t ? of(*t) : 0;
  return 2 * (ct + of_empty()) - total();
}

BlockConfidence block_confidence(const std::vector<uint64_t>& word, const InterleavedRs& code, size_t edge_bound,
                                 uint32_t n) {
  BlockConfidence out;
  auto dec = code.unique_decode(word);
  if (!dec) return out;
  out.decoded = true;
  out.distance = dec->distance;
  out.c_units = confidence_units(dec->distance, code.n_c());
  Bits bits = code.message_bits(dec->message);
  bits.resize(4 * edge_bound);
  out.edges = subtree_decode(bits, n);
  return out;
}

Bits derive_path(const SubtreeEdgeSet* edges, const PartyInput& own) {
  if (!edges) return {};
  const uint32_t n = own.depth();
  Bits path;
  path.reserve(n);
  auto cur = own.root();
  int32_t node = SubtreeEdgeSet::kRoot;
  for (uint32_t d = 0; d < n; ++d) {
    uint8_t b;
    if (owner_of_depth(d) == own.party()) {
      b = cur->preferred();
    } else {
      if (node == SubtreeEdgeSet::kNone) return {};
      int32_t l = edges->child(node, 0), r = edges->child(node, 1);
      if ((l == SubtreeEdgeSet::kNone) == (r == SubtreeEdgeSet::kNone)) return {};
      b = l != SubtreeEdgeSet::kNone ? 0 : 1;
    }
    path.push_back(b);
    cur->descend(b);
    node = node == SubtreeEdgeSet::kNone ? node : edges->child(node, b);
  }
  return path;
}

bool respects_own_preferences(const SubtreeEdgeSet& set, const PartyInput& input) {
  std::vector<std::pair<int32_t, std::unique_ptr<PartyCursor>>> stack;
  stack.emplace_back(SubtreeEdgeSet::kRoot, input.root());
  while (!stack.empty()) {
    auto [id, cur] = std::move(stack.back());
    stack.pop_back();
    const bool own = owner_of_depth(cur->depth()) == input.party();
    for (uint8_t b = 0; b < 2; ++b) {
      int32_t c = set.child(id, b);
      if (c == SubtreeEdgeSet::kNone) continue;
      if (own && cur->preferred() != b) return false;
      auto next = cur->clone();
      next->descend(b);
      stack.emplace_back(c, std::move(next));
    }
  }
  return true;
}

RoundSlot layout(const ReductionConfig& c, uint64_t round) {
  RoundSlot s;
  const uint64_t joint = c.b1 * c.block_rounds;
  if (round < joint) {
    s.block = static_cast<uint32_t>(round / c.block_rounds);
    uint64_t pos = round % c.block_rounds;
    s.slot = static_cast<uint32_t>(pos / 2);
    s.joint_sender = pos % 2 == 0 ? Party::Alice : Party::Bob;
    s.block_start = s.block * c.block_rounds;
  } else {
    uint64_t e = round - joint;
    s.exclusive = true;
    s.block = static_cast<uint32_t>(e / c.n_c);
    s.slot = static_cast<uint32_t>(e % c.n_c);
    s.block_start = joint + static_cast<uint64_t>(s.block) * c.n_c;
  }
  return s;
}

namespace {

class ReductionParty final : public PartyProgram {
 public:
  ReductionParty(const ReductionConfig& cfg, Party me, const PartyInput& input, const InnerScheme& inner,
                 const InterleavedRs& code)
      : cfg_(cfg), me_(me), input_(input), inner_(inner), code_(code), ledger_(cfg.n_c) {
    rx_inner_.resize(cfg.n_c);
    rx_present_.assign(cfg.n_c, 0);
    refresh_codeword();
  }

  Action act(uint64_t round, Symbol& out) override {
    RoundSlot s = layout(cfg_, round);
    const bool send = s.exclusive ? exclusive_sender_ : s.joint_sender == me_;
    if (!send) return Action::Listen;
    const uint32_t m = code_.m();
    out.ecc.assign(codeword_.begin() + static_cast<ptrdiff_t>(s.slot) * m,
                   codeword_.begin() + static_cast<ptrdiff_t>(s.slot + 1) * m);
    if (!s.exclusive) inner_.fill(me_, s.slot, out.inner);
    return Action::Send;
  }

  void receive(uint64_t round, const Symbol* sym) override {
    if (!sym) return;
    RoundSlot s = layout(cfg_, round);
    const uint32_t m = code_.m();
    if (sym->ecc.size() == m) {
      std::copy(sym->ecc.begin(), sym->ecc.end(), word_.begin() + static_cast<ptrdiff_t>(s.slot) * m);
    }
    if (!s.exclusive) {
      rx_inner_[s.slot] = *sym;
      rx_present_[s.slot] = 1;
    }
  }

  void begin_block() {
    word_.assign(static_cast<size_t>(code_.n_c()) * code_.m(), ~uint64_t{0});
    std::fill(rx_present_.begin(), rx_present_.end(), 0);
    if (dirty_) refresh_codeword();
  }

  void end_joint_block(uint64_t corruptions, std::mt19937_64& rng) {
    decode_ecc_block();
    std::vector<const Symbol*> rx(cfg_.n_c, nullptr);
    for (uint32_t j = 0; j < cfg_.n_c; ++j)
      if (rx_present_[j]) rx[j] = &rx_inner_[j];
    for (const Bits& cand : inner_.decode(me_, rx, corruptions, rng)) {
      if (cand.size() != cfg_.n || !consistent_with(input_, cand)) continue;
      size_t before = eset_.size();
      eset_.add_path(cand);
      dirty_ |= eset_.size() != before;
    }
  }

  void end_exclusive_block() {
    if (!exclusive_sender_) decode_ecc_block();
  }

  void set_exclusive_sender(bool v) { exclusive_sender_ = v; }
  const ConfidenceLedger& ledger() const { return ledger_; }
  const SubtreeEdgeSet& eset() const { return eset_; }

  std::vector<Bits> list_output() const {
    std::vector<std::pair<uint32_t, Bits>> v;
    for (const auto& [p, d] : list_best_) v.emplace_back(d, p);
    std::sort(v.begin(), v.end());
    std::vector<Bits> out;
    for (auto& e : v) out.push_back(std::move(e.second));
    return out;
  }

 private:
  void refresh_codeword() {
    codeword_ = code_.encode_bits(subtree_encode(eset_, cfg_.edge_bound));
    dirty_ = false;
  }

  void decode_ecc_block() {
    if (cfg_.variant == Variant::ListReduce) {
      auto list = code_.list_decode(word_, cfg_.list_L);
      BlockRecord rec;
      bool first = true;
      for (const auto& d : list) {
        Bits bits = code_.message_bits(d.message);
        bits.resize(4 * cfg_.edge_bound);
        auto edges = subtree_decode(bits, cfg_.n);
        Bits path = edges ? derive_path(&*edges, input_) : Bits{};
        if (first) {
          // The nearest candidate feeds the confidence ledger for reporting.
          first = false;
          if (d.distance <= code_.radius()) {
            rec.decoded = true;
            rec.distance = d.distance;
            rec.c_units = confidence_units(d.distance, code_.n_c());
            rec.path = path;
          }
        }
        if (path.empty()) continue;
        auto it = list_best_.find(path);
        if (it == list_best_.end()) list_best_.emplace(path, d.distance);
        else it->second = std::min(it->second, d.distance);
      }
      ledger_.add(std::move(rec));
      return;
    }
    BlockConfidence bc = block_confidence(word_, code_, cfg_.edge_bound, cfg_.n);
    BlockRecord rec;
    rec.decoded = bc.decoded;
    rec.distance = bc.distance;
    rec.c_units = bc.c_units;
    if (bc.edges) rec.path = derive_path(&*bc.edges, input_);
    ledger_.add(std::move(rec));
  }

  const ReductionConfig& cfg_;
  Party me_;
  const PartyInput& input_;
  const InnerScheme& inner_;
  const InterleavedRs& code_;
  SubtreeEdgeSet eset_;
  bool dirty_ = true;
  bool exclusive_sender_ = false;
  std::vector<uint64_t> codeword_;
  std::vector<uint64_t> word_;
  std::vector<Symbol> rx_inner_;
  std::vector<uint8_t> rx_present_;
  ConfidenceLedger ledger_;
  std::map<Bits, uint32_t> list_best_;
};

}  // namespace

ReductionResult run_reduction(const ReductionConfig& cfg, const ProtocolInstance& instance, const InnerScheme& inner,
                              Adversary& adversary, Rate rate, uint64_t seed, TraceLevel level) {
  if (instance.depth() != cfg.n) throw std::invalid_argument("instance depth does not match the configuration");
  if (inner.block_rounds() != cfg.block_rounds) {
    throw std::invalid_argument("inner scheme block length must equal twice the ECC length");
  }
  if (inner.guarantee().s > cfg.s) throw std::invalid_argument("inner list size exceeds the configured s");
  const InterleavedRs code = cfg.make_code();
  auto in_a = instance.party(Party::Alice), in_b = instance.party(Party::Bob);
  ReductionParty pa(cfg, Party::Alice, *in_a, inner, code), pb(cfg, Party::Bob, *in_b, inner, code);
  ReductionParty* party[2] = {&pa, &pb};

  const ScheduleMode mode = cfg.variant == Variant::Adaptive27 ? ScheduleMode::Adaptive : ScheduleMode::NonAdaptive;
  Schedule schedule;
  if (mode == ScheduleMode::NonAdaptive) {
    schedule = [&cfg](uint64_t r) {
      RoundSlot s = layout(cfg, r);
      return s.exclusive ? Party::Bob : s.joint_sender;
    };
  }
  Session session(&pa, &pb, mode, schedule, ErrorBudget{cfg.total_rounds, rate}, &adversary, level);
  std::mt19937_64 decoder_rng(mix2(seed, 0xDEC0DE));

  ReductionResult res;
  res.config = cfg;
  res.truth = common_path(instance);
  for (uint32_t b = 0; b < cfg.b1; ++b) {
    pa.begin_block();
    pb.begin_block();
    const uint64_t before = session.budget().spent;
    session.run(cfg.block_rounds);
    const uint64_t corr = session.budget().spent - before;
    if (!inner.guarantee().rho.admits(corr, cfg.block_rounds)) ++res.guarantee_void_blocks;
    pa.end_joint_block(corr, decoder_rng);
    pb.end_joint_block(corr, decoder_rng);
  }
  for (int i = 0; i < 2; ++i) {
    res.c_double_prime[i] = party[i]->ledger().c_double_prime();
    res.safe[i] = cfg.above_threshold(res.c_double_prime[i]);
  }
  if (cfg.variant == Variant::Adaptive27) {
    pa.set_exclusive_sender(res.safe[0]);
    pb.set_exclusive_sender(res.safe[1]);
  } else if (cfg.variant == Variant::OneSided13) {
    pb.set_exclusive_sender(true);
  }
  for (uint32_t b = 0; b < cfg.b2; ++b) {
    pa.begin_block();
    pb.begin_block();
    session.run(cfg.n_c);
    pa.end_exclusive_block();
    pb.end_exclusive_block();
  }

  for (int i = 0; i < 2; ++i) {
    const ReductionParty& p = *party[i];
    res.ledger[i] = p.ledger();
    res.c_prime[i] = p.ledger().c_prime();
    res.eset_size[i] = p.eset().size();
    res.esets_respect_preferences &= respects_own_preferences(p.eset(), i == 0 ? *in_a : *in_b);
    if (cfg.variant == Variant::ListReduce) {
      res.lists[i] = p.list_output();
      res.correct[i] = std::find(res.lists[i].begin(), res.lists[i].end(), res.truth) != res.lists[i].end();
      if (!res.lists[i].empty()) res.output[i] = res.lists[i].front();
    } else {
      auto t = p.ledger().tau_max();
      if (t) res.output[i] = *t;
      res.correct[i] = res.output[i] == res.truth;
    }
  }
  res.spent = session.budget().spent;
  res.limit = session.budget().limit();
  res.rounds = session.round();
  res.trace = session.trace();
  return res;
}

AntiMajorityAdversary::Target parse_target(const std::string& s) {
  if (s == "A" || s == "alice") return AntiMajorityAdversary::Target::Alice;
  if (s == "B" || s == "bob") return AntiMajorityAdversary::Target::Bob;
  if (s == "both") return AntiMajorityAdversary::Target::Both;
  throw std::invalid_argument("anti-majority target must be A, B or both");
}

AntiMajorityAdversary::AntiMajorityAdversary(const ReductionConfig& config, const ProtocolInstance& instance,
                                             Target target, uint64_t seed)
    : config_(config), code_(config.make_code()), target_(target), rng_(seed) {
  for (int t = 0; t < 2; ++t) {
    const Party sender = other(static_cast<Party>(t));
    // The wrong path leaves the common path at the sender's first decision
    // and follows every preference afterwards.
    Bits fake;
    NodeKey key;
    for (uint32_t d = 0; d < config.n; ++d) {
      uint8_t b = instance.preferred(key);
      if (d == static_cast<uint32_t>(index_of(sender))) b ^= 1u;
      fake.push_back(b);
      key = key.child(b);
    }
    SubtreeEdgeSet set;
    set.add_path(fake);
    fake_[t] = fake;
    fake_word_[t] = code_.encode_bits(subtree_encode(set, config.edge_bound));
  }
  needed_ = code_.n_c() - code_.radius();
}

bool AntiMajorityAdversary::targets(Party receiver) const {
  if (target_ == Target::Both) return true;
  return (target_ == Target::Alice) == (receiver == Party::Alice);
}

void AntiMajorityAdversary::decide(const RoundView& v, AdversaryMove& move) {
  RoundSlot s = layout(config_, v.round);
  if (s.block_start != active_block_start_) {
    active_block_start_ = s.block_start;
    uint64_t free_budget = v.remaining;
    for (int t = 0; t < 2; ++t) {
      agree_[t] = 0;
      committed_[t] = targets(static_cast<Party>(t)) && free_budget >= needed_;
      if (committed_[t]) free_budget -= needed_;
    }
  }
  const uint32_t m = code_.m();
  auto fake_slice = [&](int t, Symbol& out) {
    out.ecc.assign(fake_word_[t].begin() + static_cast<ptrdiff_t>(s.slot) * m,
                   fake_word_[t].begin() + static_cast<ptrdiff_t>(s.slot + 1) * m);
  };
  const bool a = v.action[0] == Action::Send, b = v.action[1] == Action::Send;
  if (a != b) {
    const int sender = a ? 0 : 1;
    const int t = 1 - sender;
    if (!committed_[t] || agree_[t] >= needed_) return;
    const Symbol& sent = *v.sent[sender];
    fake_slice(t, move.replacement);
    if (sent.ecc == move.replacement.ecc) {
      ++agree_[t];
      return;
    }
    if (v.remaining == 0) return;
    move.replacement.inner = sent.inner;
    scramble(move.replacement, rng_);
    fake_slice(t, move.replacement);
    move.corrupt = true;
    ++agree_[t];
  } else if (!a) {
    for (int t = 0; t < 2; ++t) {
      if (!targets(static_cast<Party>(t))) continue;
      move.inject[t] = true;
      move.injected[t].inner.clear();
      fake_slice(t, move.injected[t]);
    }
  }
}

}  // namespace icoding
