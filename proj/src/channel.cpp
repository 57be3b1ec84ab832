#include "icoding/channel.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "icoding/ecc.hpp"

namespace icoding {

uint64_t symbol_digest(const Symbol& s) {
  uint64_t h = mix64(s.inner.size() * 0x100000001ull + s.ecc.size());
  for (uint64_t w : s.inner) h = mix2(h, w);
  h = mix2(h, 0xECC);
  for (uint64_t w : s.ecc) h = mix2(h, w);
  return h;
}

uint64_t Adversary::bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t total_rounds) {
  Symbol placeholder;
  placeholder.inner.push_back(0);
  AdversaryMove move;
  uint64_t corrupted = 0;
  for (uint64_t r = start; r < start + count; ++r) {
    RoundView v;
    v.round = r;
    Party s = alternating_sender(r);
    v.action[index_of(s)] = Action::Send;
    v.sent[index_of(s)] = &placeholder;
    v.remaining = remaining - corrupted;
    v.total_rounds = total_rounds;
    move.reset();
    decide(v, move);
    if (move.corrupt && corrupted < remaining) ++corrupted;
  }
  return corrupted;
}

std::string ExecutionTrace::csv() const {
  std::ostringstream os;
  os << "round,actor_A,actor_B,sent,delivered_A,delivered_B,corrupted\n";
  char buf[32];
  auto hex = [&](bool present, uint64_t d) -> std::string {
    if (!present) return "-";
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
    return buf;
  };
  for (const TraceRow& r : rows) {
    os << r.round << ',' << (r.action[0] == Action::Send ? "send" : "listen") << ','
       << (r.action[1] == Action::Send ? "send" : "listen") << ',' << hex(r.has_sent, r.sent_digest) << ','
       << hex(r.delivered[0], r.delivered_digest[0]) << ',' << hex(r.delivered[1], r.delivered_digest[1]) << ','
       << (r.corrupted ? 1 : 0) << '\n';
  }
  return os.str();
}

Session::Session(PartyProgram* alice, PartyProgram* bob, ScheduleMode mode, Schedule schedule, ErrorBudget budget,
                 Adversary* adversary, TraceLevel level)
    : prog_{alice, bob}, mode_(mode), schedule_(std::move(schedule)), budget_(budget), adv_(adversary), level_(level) {
  if (mode_ == ScheduleMode::NonAdaptive && !schedule_) schedule_ = alternating_sender;
  trace_.limit = budget_.limit();
}

void Session::step() {
  if (round_ >= budget_.total_rounds) throw std::logic_error("execution ran past its configured length");
  RoundView v;
  v.round = round_;
  for (int i = 0; i < 2; ++i) {
    out_[i].inner.clear();
    out_[i].ecc.clear();
    v.action[i] = prog_[i]->act(round_, out_[i]);
    v.sent[i] = v.action[i] == Action::Send ? &out_[i] : nullptr;
  }
  if (mode_ == ScheduleMode::NonAdaptive) {
    int s = index_of(schedule_(round_));
    if (v.action[s] != Action::Send || v.action[1 - s] != Action::Listen) {
      throw std::logic_error("party deviated from the non-adaptive schedule in round " + std::to_string(round_));
    }
  }
  v.remaining = budget_.remaining();
  v.total_rounds = budget_.total_rounds;
  move_.reset();
  adv_->decide(v, move_);

  TraceRow row;
  row.round = round_;
  row.action[0] = v.action[0];
  row.action[1] = v.action[1];
  const bool a_sends = v.action[0] == Action::Send, b_sends = v.action[1] == Action::Send;
  if (a_sends != b_sends) {
    const int s = a_sends ? 0 : 1;
    const Symbol* delivered = &out_[s];
    if (move_.corrupt && !(move_.replacement == out_[s])) {
      if (budget_.remaining() > 0) {
        delivered = &move_.replacement;
        ++budget_.spent;
        row.corrupted = true;
      } else {
        ++trace_.clamped;
      }
    }
    if (level_ == TraceLevel::Full) {
      row.has_sent = true;
      row.sent_digest = symbol_digest(out_[s]);
      row.delivered[1 - s] = true;
      row.delivered_digest[1 - s] = symbol_digest(*delivered);
    }
    prog_[1 - s]->receive(round_, delivered);
  } else if (!a_sends) {
    for (int i = 0; i < 2; ++i) {
      const Symbol* d = move_.inject[i] ? &move_.injected[i] : nullptr;
      if (level_ == TraceLevel::Full && d) {
        row.delivered[i] = true;
        row.delivered_digest[i] = symbol_digest(*d);
      }
      prog_[i]->receive(round_, d);
    }
  }
  if (level_ != TraceLevel::None) trace_.rows.push_back(row);
  ++round_;
  trace_.rounds = round_;
  trace_.spent = budget_.spent;
}

void Session::run(uint64_t rounds) {
  for (uint64_t i = 0; i < rounds; ++i) step();
}

uint64_t Session::bulk(uint64_t count) {
  if (round_ + count > budget_.total_rounds) throw std::logic_error("bulk stretch runs past the execution");
  uint64_t c = adv_->bulk_count(round_, count, budget_.remaining(), budget_.total_rounds);
  c = std::min(c, budget_.remaining());
  budget_.spent += c;
  round_ += count;
  trace_.rounds = round_;
  trace_.spent = budget_.spent;
  return c;
}

ExecutionTrace execute(PartyProgram& alice, PartyProgram& bob, ScheduleMode mode, Schedule schedule,
                       ErrorBudget budget, Adversary& adversary, TraceLevel level) {
  Session s(&alice, &bob, mode, std::move(schedule), budget, &adversary, level);
  s.run(budget.total_rounds);
  return s.trace();
}

void scramble(Symbol& s, std::mt19937_64& rng) {
  for (uint64_t& w : s.inner) w ^= rng() | 1u;
  for (uint64_t& w : s.ecc) {
    if (w >= kMersenne61) w = rng() % kMersenne61;
    else w = (w + 1 + rng() % (kMersenne61 - 1)) % kMersenne61;
  }
}

bool StrategyWindow::eligible(uint64_t round, Party sender) const {
  if (round < from || round >= to) return false;
  if (direction == Direction::ToAlice) return sender == Party::Bob;
  if (direction == Direction::ToBob) return sender == Party::Alice;
  return true;
}

namespace {

int single_sender(const RoundView& v) {
  bool a = v.action[0] == Action::Send, b = v.action[1] == Action::Send;
  if (a == b) return -1;
  return a ? 0 : 1;
}

// Eligible rounds of an alternating stretch (even rounds: Alice sends).
uint64_t eligible_in(const StrategyWindow& w, uint64_t start, uint64_t count) {
  uint64_t lo = std::max(start, w.from);
  uint64_t hi = std::min(start + count, w.to);
  if (lo >= hi) return 0;
  uint64_t len = hi - lo;
  if (w.direction == Direction::Both) return len;
  // rounds of the given parity in [lo, hi)
  uint64_t parity = w.direction == Direction::ToBob ? 0 : 1;
  uint64_t first = lo % 2 == parity ? lo : lo + 1;
  if (first >= hi) return 0;
  return (hi - first + 1) / 2;
}

}  // namespace

UniformAdversary::UniformAdversary(double p, uint64_t seed, StrategyWindow window)
    : p_(p), rng_(seed), window_(window) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("uniform corruption probability must lie in [0, 1]");
}

void UniformAdversary::decide(const RoundView& v, AdversaryMove& move) {
  int s = single_sender(v);
  if (s < 0 || !window_.eligible(v.round, static_cast<Party>(s))) return;
  if (std::bernoulli_distribution(p_)(rng_) && v.remaining > 0) {
    move.corrupt = true;
    move.replacement = *v.sent[s];
    scramble(move.replacement, rng_);
  }
}

uint64_t UniformAdversary::bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t) {
  uint64_t e = eligible_in(window_, start, count);
  if (e == 0) return 0;
  uint64_t c = std::binomial_distribution<uint64_t>(e, p_)(rng_);
  return std::min(c, remaining);
}

BurstAdversary::BurstAdversary(uint64_t seed, StrategyWindow window) : rng_(seed), window_(window) {}

void BurstAdversary::decide(const RoundView& v, AdversaryMove& move) {
  int s = single_sender(v);
  if (s < 0 || !window_.eligible(v.round, static_cast<Party>(s)) || v.remaining == 0) return;
  move.corrupt = true;
  move.replacement = *v.sent[s];
  scramble(move.replacement, rng_);
}

uint64_t BurstAdversary::bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t) {
  return std::min(eligible_in(window_, start, count), remaining);
}

BlockFrontAdversary::BlockFrontAdversary(uint64_t block_len, uint64_t seed, StrategyWindow window)
    : block_len_(block_len), rng_(seed), window_(window) {
  if (block_len < 3) throw std::invalid_argument("block-front needs blocks of at least 3 rounds");
}

void BlockFrontAdversary::decide(const RoundView& v, AdversaryMove& move) {
  uint64_t block = v.round / block_len_;
  if (block != current_block_) {
    current_block_ = block;
    used_in_block_ = 0;
  }
  int s = single_sender(v);
  if (s < 0 || !window_.eligible(v.round, static_cast<Party>(s)) || v.remaining == 0) return;
  if (used_in_block_ >= per_block()) return;
  ++used_in_block_;
  move.corrupt = true;
  move.replacement = *v.sent[s];
  scramble(move.replacement, rng_);
}

uint64_t BlockFrontAdversary::bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t) {
  uint64_t corrupted = 0;
  uint64_t r = start;
  const uint64_t end = start + count;
  while (r < end && corrupted < remaining) {
    uint64_t block = r / block_len_;
    if (block != current_block_) {
      current_block_ = block;
      used_in_block_ = 0;
    }
    if (used_in_block_ >= per_block()) {
      r = (block + 1) * block_len_;
      continue;
    }
    if (window_.eligible(r, alternating_sender(r))) {
      ++used_in_block_;
      ++corrupted;
    }
    ++r;
  }
  return corrupted;
}

ScriptedAdversary::ScriptedAdversary(std::vector<ScriptEntry> script, uint64_t seed)
    : script_(std::move(script)), rng_(seed) {
  std::stable_sort(script_.begin(), script_.end(),
                   [](const ScriptEntry& a, const ScriptEntry& b) { return a.round < b.round; });
}

void ScriptedAdversary::decide(const RoundView& v, AdversaryMove& move) {
  while (next_ < script_.size() && script_[next_].round < v.round) ++next_;
  if (next_ >= script_.size() || script_[next_].round != v.round) return;
  const ScriptEntry& e = script_[next_];
  int s = single_sender(v);
  if (s >= 0) {
    move.corrupt = true;
    if (e.replacement) {
      move.replacement = *e.replacement;
    } else {
      move.replacement = *v.sent[s];
      scramble(move.replacement, rng_);
    }
  } else if (v.action[0] == Action::Listen && e.replacement) {
    for (int i = 0; i < 2; ++i) {
      move.inject[i] = true;
      move.injected[i] = *e.replacement;
    }
  }
}

bool audit_script(const std::vector<ScriptEntry>& script, Rate rate, uint64_t rounds) {
  std::vector<uint64_t> r;
  r.reserve(script.size());
  for (const auto& e : script) r.push_back(e.round);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r.size() <= rate.budget(rounds);
}

}  // namespace icoding
