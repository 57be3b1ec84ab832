#include "icoding/meta_protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace icoding {

using Tree = IncrementalSubtree;

struct MetaProtocol::Shared {
  MetaLayout layout;
  const Tree* tree[2];
  CursorSource source;
  uint64_t alice_seed;
  std::map<uint64_t, std::shared_ptr<const SimpleSearchBob>> tables;

  std::shared_ptr<const SimpleSearchBob> table(uint64_t seed) {
    auto& t = tables[seed];
    if (!t) t = std::make_shared<SimpleSearchBob>(*tree[1], layout.hash_bits, seed);
    return t;
  }
};

namespace {

enum class Phase { Seed, Hash, Answer, Final, Extension, Pad };

struct Position {
  Phase phase = Phase::Pad;
  uint32_t index = 0;  // bit index within the phase
};

Position locate(const MetaLayout& m, uint32_t t) {
  if (t < m.search_start()) return {Phase::Seed, t / 2};
  if (t < m.final_start()) {
    const uint32_t o = (t - m.search_start()) % (2 * (m.hash_bits + 1));
    if (o < 2 * m.hash_bits) return {Phase::Hash, o / 2};
    return {Phase::Answer, 0};
  }
  if (t < m.extension_start()) return {Phase::Final, (t - m.final_start()) / 2};
  if (t < m.used_length()) return {Phase::Extension, t - m.extension_start()};
  return {Phase::Pad, 0};
}

// Extension window of a party whose search ended at depth d.
struct Window {
  uint32_t offset = 0;
  uint32_t len = 0;
};

Window window_for(const MetaLayout& m, uint32_t d) { return {d % 2, std::min(m.beta, m.n - d)}; }

class MetaCursorBase : public PartyCursor {
 public:
  explicit MetaCursorBase(std::shared_ptr<MetaProtocol::Shared> s) : s_(std::move(s)) {}
  uint32_t depth() const override { return t_; }

  bool has_endpoint() const { return node_ != Tree::kNone; }
  Candidate candidate() const { return {node_, block_}; }

 protected:
  // Shared bookkeeping for the extension phase.
  void begin_extension(Party self, int32_t node) {
    node_ = node;
    if (node == Tree::kNone) return;
    win_ = window_for(s_->layout, s_->tree[index_of(self)]->depth(node));
    orig_ = s_->source(self, node);
  }
  bool in_window(uint32_t o) const { return orig_ && o >= win_.offset && o - win_.offset < win_.len; }
  void copy_base(const MetaCursorBase& o) {
    t_ = o.t_;
    seed_ = o.seed_;
    node_ = o.node_;
    win_ = o.win_;
    block_ = o.block_;
    orig_ = o.orig_ ? o.orig_->clone() : nullptr;
  }

  std::shared_ptr<MetaProtocol::Shared> s_;
  uint32_t t_ = 0;
  uint64_t seed_ = 0;
  int32_t node_ = Tree::kNone;
  Window win_;
  Bits block_;
  std::unique_ptr<PartyCursor> orig_;
};

class AliceCursor final : public MetaCursorBase {
 public:
  using MetaCursorBase::MetaCursorBase;

  uint8_t preferred() const override {
    const MetaLayout& m = s_->layout;
    if (t_ % 2 != 0) return 0;
    const Position pos = locate(m, t_);
    switch (pos.phase) {
      case Phase::Seed:
        return static_cast<uint8_t>((s_->alice_seed >> pos.index) & 1u);
      case Phase::Hash:
        if (!search_ || search_->current() == Tree::kNone) return 0;
        return bit_of(search_->current_key(), pos.index);
      case Phase::Final:
        return bit_of(final_key_, pos.index);
      case Phase::Extension:
        return in_window(pos.index) ? orig_->preferred() : 0;
      default:
        return 0;
    }
  }

  void descend(uint8_t bit) override {
    const MetaLayout& m = s_->layout;
    if (t_ >= m.length) throw std::logic_error("descended below a leaf of the inner protocol");
    const Position pos = locate(m, t_);
    if (pos.phase == Phase::Seed && t_ % 2 == 0) seed_ |= uint64_t{bit & 1u} << pos.index;
    if (pos.phase == Phase::Answer && t_ % 2 == 1 && search_) search_->answer(bit != 0);
    if (pos.phase == Phase::Extension && in_window(pos.index)) {
      orig_->descend(bit);
      block_.push_back(bit);
    }
    ++t_;
    if (t_ == m.search_start()) search_.emplace(*s_->tree[0], m.hash_bits, seed_);
    if (t_ == m.final_start()) final_key_ = search_->key_of(search_->result());
    if (t_ == m.extension_start()) begin_extension(Party::Alice, search_->result());
  }

  std::unique_ptr<PartyCursor> clone() const override {
    auto c = std::make_unique<AliceCursor>(s_);
    c->copy_base(*this);
    c->search_ = search_;
    c->final_key_ = final_key_;
    return c;
  }

 private:
  static uint8_t bit_of(const std::vector<uint64_t>& key, uint32_t i) {
    return static_cast<uint8_t>((key[i / 60] >> (i % 60)) & 1u);
  }

  std::optional<SimpleSearchAlice> search_;
  std::vector<uint64_t> final_key_;
};

class BobCursor final : public MetaCursorBase {
 public:
  using MetaCursorBase::MetaCursorBase;

  uint8_t preferred() const override {
    if (t_ % 2 != 1) return 0;
    const Position pos = locate(s_->layout, t_);
    if (pos.phase == Phase::Answer) return table_->lookup(key_from_bits(heard_)) != Tree::kNone ? 1 : 0;
    if (pos.phase == Phase::Extension && in_window(pos.index)) return orig_->preferred();
    return 0;
  }

  void descend(uint8_t bit) override {
    const MetaLayout& m = s_->layout;
    if (t_ >= m.length) throw std::logic_error("descended below a leaf of the inner protocol");
    const Position pos = locate(m, t_);
    const bool alice_slot = t_ % 2 == 0;
    if (pos.phase == Phase::Seed && alice_slot) seed_ |= uint64_t{bit & 1u} << pos.index;
    if ((pos.phase == Phase::Hash || pos.phase == Phase::Final) && alice_slot) heard_.push_back(bit);
    if (pos.phase == Phase::Answer && !alice_slot) heard_.clear();
    if (pos.phase == Phase::Extension && in_window(pos.index)) {
      orig_->descend(bit);
      block_.push_back(bit);
    }
    ++t_;
    if (t_ == m.search_start()) table_ = s_->table(seed_);
    if (t_ == m.extension_start()) {
      begin_extension(Party::Bob, table_->lookup(key_from_bits(heard_)));
      heard_.clear();
    }
  }

  std::unique_ptr<PartyCursor> clone() const override {
    auto c = std::make_unique<BobCursor>(s_);
    c->copy_base(*this);
    c->table_ = table_;
    c->heard_ = heard_;
    return c;
  }

 private:
  std::shared_ptr<const SimpleSearchBob> table_;
  Bits heard_;
};

class MetaInput final : public PartyInput {
 public:
  MetaInput(std::shared_ptr<MetaProtocol::Shared> s, Party p) : s_(std::move(s)), p_(p) {}
  Party party() const override { return p_; }
  uint32_t depth() const override { return s_->layout.length; }
  std::unique_ptr<PartyCursor> root() const override {
    if (p_ == Party::Alice) return std::make_unique<AliceCursor>(s_);
    return std::make_unique<BobCursor>(s_);
  }

 private:
  std::shared_ptr<MetaProtocol::Shared> s_;
  Party p_;
};

}  // namespace

MetaProtocol::MetaProtocol(const MetaLayout& layout, const Tree& alice_tree, const Tree& bob_tree,
                           CursorSource source, uint64_t alice_seed)
    : shared_(std::make_shared<Shared>()) {
  if (layout.seed_bits > 64) throw std::invalid_argument("seed wider than 64 bits");
  if (layout.length < layout.used_length()) throw std::invalid_argument("layout shorter than its phases");
  shared_->layout = layout;
  shared_->tree[0] = &alice_tree;
  shared_->tree[1] = &bob_tree;
  shared_->source = std::move(source);
  shared_->alice_seed = alice_seed;
}

const MetaLayout& MetaProtocol::layout() const { return shared_->layout; }

std::unique_ptr<PartyInput> MetaProtocol::party(Party p) const { return std::make_unique<MetaInput>(shared_, p); }

std::optional<Candidate> MetaProtocol::decode(Party receiver, const Bits& transcript) const {
  if (transcript.size() != shared_->layout.length) return std::nullopt;
  auto cur = MetaInput(shared_, receiver).root();
  for (uint8_t b : transcript) cur->descend(b);
  const auto& mc = static_cast<const MetaCursorBase&>(*cur);
  if (!mc.has_endpoint()) return std::nullopt;
  return mc.candidate();
}

size_t MetaProtocol::tables_built() const { return shared_->tables.size(); }

BoostedMetaBase::BoostedMetaBase(const BoostConfig& inner, MetaBase& inner_base, const BoostOptions& options)
    : inner_(inner), inner_base_(&inner_base), options_(options) {
  options_.keep_log = false;
}

ListDecodeGuarantee BoostedMetaBase::guarantee() const {
  ListDecodeGuarantee g;
  g.rho = inner_.guaranteed_rate();
  g.s = inner_.s_out;
  g.p = 0.0;
  g.block_rounds = inner_.total_rounds();
  return g;
}

MetaOutcome BoostedMetaBase::run(const MetaContext& ctx, std::mt19937_64& rng) {
  if (ctx.config->layout.length != inner_.n) throw std::logic_error("inner protocol length does not match the level");
  MetaProtocol pi(ctx.config->layout, *ctx.tree[0], *ctx.tree[1], ctx.cursor_at, ctx.search_seed);
  auto pa = pi.party(Party::Alice);
  auto pb = pi.party(Party::Bob);
  const BoostResult r = run_boost(*pa, *pb, inner_, *inner_base_, mix2(ctx.seed, rng()), options_);

  MetaOutcome out;
  out.rounds = r.rounds;
  out.corruptions = r.spent;
  out.within = guarantee().rho.admits(r.spent, r.rounds);
  ++audit_.calls;
  if (out.within) ++audit_.within;
  if (!r.both_correct()) ++(out.within ? audit_.missed_within : audit_.missed_outside);
  audit_.inner_dichotomy_violations += r.dichotomy_violations;
  audit_.inner_prefix_violations += r.prefix_violations;
  audit_.inner_vote_bound_violations += r.vote_bound_violations;
  for (Party p : {Party::Alice, Party::Bob}) {
    const int i = index_of(p);
    out.truth_offered[i] = r.correct[i];
    audit_.max_list = std::max(audit_.max_list, r.output[i].size());
    for (const Bits& leaf : r.output[i]) {
      if (auto c = pi.decode(p, leaf)) out.candidates[i].push_back(std::move(*c));
      else ++audit_.undecodable;
    }
  }
  return out;
}

RecursiveBoostConfig RecursiveBoostConfig::make(uint32_t n, uint32_t depth, Rate eps_prime, Rate rho0, uint32_t s0,
                                                uint32_t C) {
  if (depth == 0) throw std::invalid_argument("recursion depth must be at least 1");
  std::vector<uint32_t> s(depth);
  s[0] = s0;
  for (uint32_t k = 1; k < depth; ++k) {
    const auto num = static_cast<uint64_t>(eps_prime.num);
    const auto den = static_cast<uint64_t>(eps_prime.den);
    s[k] = static_cast<uint32_t>((4 * uint64_t{s[k - 1]} * den + num - 1) / num);
  }
  RecursiveBoostConfig rc;
  rc.levels.resize(depth);
  uint32_t nk = n;
  for (uint32_t k = depth; k-- > 0;) {
    Rate rho = rho0;
    for (uint32_t j = 0; j < k; ++j) rho = rho - eps_prime;
    rc.levels[k] = BoostConfig::make(nk, eps_prime, rho, s[k], 0.0, C, k > 0);
    nk = rc.levels[k].layout.length;
  }
  for (uint32_t k = 1; k < depth; ++k) {
    BoostConfig& c = rc.levels[k];
    c.base.block_rounds = rc.levels[k - 1].total_rounds();
    const uint64_t per = uint64_t{c.c_prime} * c.beta;
    c.R = static_cast<uint32_t>((c.base.block_rounds + per - 1) / per);
  }
  return rc;
}

RecursiveRun run_recursive_boost(const ProtocolInstance& instance, const RecursiveBoostConfig& config,
                                 GarbagePolicy policy, Adversary& adversary, Rate rate, uint64_t seed,
                                 const BoostOptions& options) {
  ErrorBudget budget{config.total_rounds(), rate, 0};
  Session session(nullptr, nullptr, ScheduleMode::NonAdaptive, alternating_sender, budget, &adversary,
                  TraceLevel::None);
  OracleMetaBase oracle(config.levels[0].base, policy, session);
  std::vector<std::unique_ptr<BoostedMetaBase>> chain;
  MetaBase* below = &oracle;
  for (size_t k = 1; k < config.levels.size(); ++k) {
    chain.push_back(std::make_unique<BoostedMetaBase>(config.levels[k - 1], *below, options));
    below = chain.back().get();
  }
  auto a = instance.party(Party::Alice);
  auto b = instance.party(Party::Bob);
  RecursiveRun run;
  run.top = run_boost(*a, *b, config.levels.back(), *below, seed, options);
  for (const auto& c : chain) run.audits.push_back(c->audit());
  run.limit = budget.limit();
  run.spent = session.budget().spent;
  return run;
}

}  // namespace icoding
