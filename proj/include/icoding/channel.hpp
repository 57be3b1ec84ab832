#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "icoding/common.hpp"

namespace icoding {

// One channel symbol: an opaque inner-scheme component and an ECC component.
// A corruption may rewrite both at the cost of a single error.
struct Symbol {
  std::vector<uint64_t> inner;
  std::vector<uint64_t> ecc;
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

uint64_t symbol_digest(const Symbol& s);

enum class Action : uint8_t { Listen = 0, Send = 1 };

class PartyProgram {
 public:
  virtual ~PartyProgram() = default;
  // Fills |out| when the returned action is Send.
  virtual Action act(uint64_t round, Symbol& out) = 0;
  // |delivered| is null when nothing arrives.
  virtual void receive(uint64_t round, const Symbol* delivered) = 0;
};

enum class ScheduleMode { Adaptive, NonAdaptive };

// Fixed sender of each round for non-adaptive executions.
using Schedule = std::function<Party(uint64_t round)>;

inline Party alternating_sender(uint64_t round) { return round % 2 == 0 ? Party::Alice : Party::Bob; }

struct ErrorBudget {
  uint64_t total_rounds = 0;
  Rate rate;
  uint64_t spent = 0;

  uint64_t limit() const { return rate.budget(total_rounds); }
  uint64_t remaining() const { return limit() - spent; }
};

struct RoundView {
  uint64_t round = 0;
  Action action[2] = {Action::Listen, Action::Listen};
  const Symbol* sent[2] = {nullptr, nullptr};
  uint64_t remaining = 0;
  uint64_t total_rounds = 0;
};

struct AdversaryMove {
  // Single-sender rounds: substitute the symbol (costs one error).
  bool corrupt = false;
  Symbol replacement;
  // Both-listen rounds: free injections per receiving party.
  bool inject[2] = {false, false};
  Symbol injected[2];

  void reset() {
    corrupt = false;
    inject[0] = inject[1] = false;
  }
};

// Which transmissions a strategy may touch.
enum class Direction { Both, ToAlice, ToBob };

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual void decide(const RoundView& view, AdversaryMove& move) = 0;
  // Number of corrupted rounds over an opaque stretch [start, start+count)
  // whose senders alternate by round parity (even rounds: Alice). The
  // default replays decide() on placeholder symbols.
  virtual uint64_t bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t total_rounds);
  virtual std::string name() const = 0;
};

enum class TraceLevel { Full, Flags, None };

struct TraceRow {
  uint64_t round = 0;
  Action action[2] = {Action::Listen, Action::Listen};
  bool has_sent = false;
  uint64_t sent_digest = 0;
  bool delivered[2] = {false, false};
  uint64_t delivered_digest[2] = {0, 0};
  bool corrupted = false;
};

struct ExecutionTrace {
  std::vector<TraceRow> rows;
  uint64_t rounds = 0;
  uint64_t spent = 0;
  uint64_t clamped = 0;
  uint64_t limit = 0;

  std::string csv() const;
};

// Round-by-round executor; blocks of a coding scheme drive it step by step.
class Session {
 public:
  Session(PartyProgram* alice, PartyProgram* bob, ScheduleMode mode, Schedule schedule, ErrorBudget budget,
          Adversary* adversary, TraceLevel level = TraceLevel::Flags);

  void step();
  void run(uint64_t rounds);
  // Advances over rounds whose content is opaque to the engine (an oracle
  // block); only corruptions are counted. Returns the corruptions charged.
  uint64_t bulk(uint64_t count);

  uint64_t round() const { return round_; }
  const ErrorBudget& budget() const { return budget_; }
  const ExecutionTrace& trace() const { return trace_; }
  void set_programs(PartyProgram* alice, PartyProgram* bob) {
    prog_[0] = alice;
    prog_[1] = bob;
  }

 private:
  PartyProgram* prog_[2];
  ScheduleMode mode_;
  Schedule schedule_;
  ErrorBudget budget_;
  Adversary* adv_;
  TraceLevel level_;
  uint64_t round_ = 0;
  ExecutionTrace trace_;
  Symbol out_[2];
  AdversaryMove move_;
};

ExecutionTrace execute(PartyProgram& alice, PartyProgram& bob, ScheduleMode mode, Schedule schedule,
                       ErrorBudget budget, Adversary& adversary, TraceLevel level = TraceLevel::Full);

// Replaces every word of |s| by a different value (ECC words stay inside
// GF(2^61 - 1)).
void scramble(Symbol& s, std::mt19937_64& rng);

struct StrategyWindow {
  uint64_t from = 0;
  uint64_t to = UINT64_MAX;
  Direction direction = Direction::Both;

  bool eligible(uint64_t round, Party sender) const;
};

class NullAdversary final : public Adversary {
 public:
  void decide(const RoundView&, AdversaryMove&) override {}
  uint64_t bulk_count(uint64_t, uint64_t, uint64_t, uint64_t) override { return 0; }
  std::string name() const override { return "null"; }
};

// Each eligible transmission is corrupted independently with probability p.
class UniformAdversary final : public Adversary {
 public:
  UniformAdversary(double p, uint64_t seed, StrategyWindow window = {});
  void decide(const RoundView& view, AdversaryMove& move) override;
  uint64_t bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t total_rounds) override;
  std::string name() const override { return "uniform"; }

 private:
  double p_;
  std::mt19937_64 rng_;
  StrategyWindow window_;
};

// Corrupts every eligible transmission from window.from on until the budget
// is gone.
class BurstAdversary final : public Adversary {
 public:
  BurstAdversary(uint64_t seed, StrategyWindow window = {});
  void decide(const RoundView& view, AdversaryMove& move) override;
  uint64_t bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t total_rounds) override;
  std::string name() const override { return "burst"; }

 private:
  std::mt19937_64 rng_;
  StrategyWindow window_;
};

// Spends ceil(L/2) - 1 corruptions at the front of each L-round block, block
// after block, until the budget runs out.
class BlockFrontAdversary final : public Adversary {
 public:
  BlockFrontAdversary(uint64_t block_len, uint64_t seed, StrategyWindow window = {});
  void decide(const RoundView& view, AdversaryMove& move) override;
  uint64_t bulk_count(uint64_t start, uint64_t count, uint64_t remaining, uint64_t total_rounds) override;
  std::string name() const override { return "blockfront"; }
  uint64_t per_block() const { return (block_len_ + 1) / 2 - 1; }

 private:
  uint64_t block_len_;
  std::mt19937_64 rng_;
  StrategyWindow window_;
  uint64_t current_block_ = UINT64_MAX;
  uint64_t used_in_block_ = 0;
};

struct ScriptEntry {
  uint64_t round = 0;
  // Replacement symbol; when absent the transmitted symbol is scrambled.
  std::optional<Symbol> replacement;
};

class ScriptedAdversary final : public Adversary {
 public:
  ScriptedAdversary(std::vector<ScriptEntry> script, uint64_t seed);
  void decide(const RoundView& view, AdversaryMove& move) override;
  std::string name() const override { return "scripted"; }

 private:
  std::vector<ScriptEntry> script_;
  size_t next_ = 0;
  std::mt19937_64 rng_;
};

// True iff the script corrupts at most floor(rate * rounds) distinct rounds.
bool audit_script(const std::vector<ScriptEntry>& script, Rate rate, uint64_t rounds);

}  // namespace icoding
