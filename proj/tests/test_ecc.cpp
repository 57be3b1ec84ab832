#include <algorithm>
#include <random>

#include "doctest.h"
#include "icoding/ecc.hpp"

using namespace icoding;

namespace {

std::vector<uint64_t> naive_encode(const std::vector<uint64_t>& msg, uint64_t q, uint32_t n_c) {
  std::vector<uint64_t> out;
  for (uint64_t x = 0; x < n_c; ++x) {
    uint64_t acc = 0, xp = 1;
    for (uint64_t c : msg) {
      acc = (acc + c * xp) % q;
      xp = xp * x % q;
    }
    out.push_back(acc);
  }
  return out;
}

std::vector<std::vector<uint64_t>> all_messages(uint64_t q, uint32_t k) {
  std::vector<std::vector<uint64_t>> out{{}};
  for (uint32_t i = 0; i < k; ++i) {
    std::vector<std::vector<uint64_t>> next;
    for (const auto& m : out)
      for (uint64_t s = 0; s < q; ++s) {
        auto c = m;
        c.push_back(s);
        next.push_back(c);
      }
    out.swap(next);
  }
  return out;
}

uint32_t dist(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
  uint32_t d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

TEST_CASE("RS encode examples") {
  RsCode c5{5, 2, 5};
  CHECK(rs_encode({1, 1}, c5) == std::vector<uint64_t>{1, 2, 3, 4, 0});
  CHECK(rs_encode({0, 0}, c5) == std::vector<uint64_t>(5, 0));
  RsCode c7{7, 1, 7};
  CHECK(rs_encode({3}, c7) == std::vector<uint64_t>(7, 3));
  CHECK_THROWS(rs_encode({5, 0}, c5));
  CHECK_THROWS(rs_encode({1}, c5));
  CHECK_THROWS((RsCode{6, 2, 5}.validate()));
  CHECK_THROWS((RsCode{5, 2, 6}.validate()));
}

TEST_CASE("RS minimum distance audit") {
  for (auto [q, k] : std::vector<std::pair<uint64_t, uint32_t>>{{5, 2}, {7, 1}, {7, 2}, {7, 3}}) {
    RsCode code{q, k, static_cast<uint32_t>(q)};
    auto msgs = all_messages(q, k);
    uint32_t best = code.n_c;
    for (size_t i = 0; i < msgs.size(); ++i)
      for (size_t j = i + 1; j < msgs.size(); ++j)
        best = std::min(best, dist(rs_encode(msgs[i], code), rs_encode(msgs[j], code)));
    CHECK(best == code.n_c - k + 1);
  }
}

TEST_CASE("RS unique decode examples") {
  RsCode c5{5, 2, 5};
  auto ok = rs_unique_decode({1, 2, 3, 4, 0}, c5);
  REQUIRE(ok);
  CHECK(ok->message == std::vector<uint64_t>{1, 1});
  CHECK(ok->distance == 0);
  auto one = rs_unique_decode({4, 2, 3, 4, 0}, c5);
  REQUIRE(one);
  CHECK(one->message == std::vector<uint64_t>{1, 1});
  CHECK(one->distance == 1);
  // (0,0,1,1,0) is at distance >= 2 from all 25 codewords (brute force).
  CHECK_FALSE(rs_unique_decode({0, 0, 1, 1, 0}, c5));
}

TEST_CASE("RS unique decode matches brute force on every q=5 k=2 word") {
  RsCode code{5, 2, 5};
  auto msgs = all_messages(5, 2);
  size_t mismatches = 0;
  for (const auto& w : all_messages(5, 5)) {
    std::vector<std::vector<uint64_t>> within;
    for (const auto& m : msgs)
      if (dist(naive_encode(m, 5, 5), w) <= code.radius()) within.push_back(m);
    auto dec = rs_unique_decode(w, code);
    if (within.size() == 1) {
      if (!dec || dec->message != within[0]) ++mismatches;
    } else if (dec) {
      ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("RS unique decode inverts random corruptions") {
  std::mt19937_64 rng(11);
  RsCode code{13, 3, 13};
  size_t failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<uint64_t> msg(code.k);
    for (auto& s : msg) s = rng() % code.q;
    auto word = rs_encode(msg, code);
    uint32_t errors = static_cast<uint32_t>(rng() % (code.radius() + 1));
    std::vector<uint32_t> pos(code.n_c);
    for (uint32_t i = 0; i < code.n_c; ++i) pos[i] = i;
    std::shuffle(pos.begin(), pos.end(), rng);
    for (uint32_t e = 0; e < errors; ++e) word[pos[e]] = (word[pos[e]] + 1 + rng() % (code.q - 1)) % code.q;
    auto dec = rs_unique_decode(word, code);
    if (!dec || dec->message != msg || dec->distance != errors) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("RS nearest list") {
  RsCode code{5, 2, 5};
  std::vector<uint64_t> w{1, 2, 3, 4, 1};
  auto got = rs_nearest_list(w, code, 3);
  std::vector<std::pair<uint32_t, std::vector<uint64_t>>> oracle;
  for (const auto& m : all_messages(5, 2)) oracle.emplace_back(dist(naive_encode(m, 5, 5), w), m);
  std::sort(oracle.begin(), oracle.end());
  REQUIRE(got.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(got[i].distance == oracle[i].first);
    CHECK(got[i].message == oracle[i].second);
  }
  auto l1 = rs_nearest_list({4, 2, 3, 4, 0}, code, 1);
  CHECK(l1[0].message == rs_unique_decode({4, 2, 3, 4, 0}, code)->message);
  auto l2 = rs_nearest_list({1, 2, 3, 4, 0}, code, 2);
  CHECK(l2[0].message == std::vector<uint64_t>{1, 1});
  auto all = rs_nearest_list(w, code, 25);
  CHECK(all.size() == 25);
  CHECK(std::is_sorted(all.begin(), all.end(), [](auto& a, auto& b) { return a.distance < b.distance; }));
  CHECK_THROWS(rs_nearest_list(std::vector<uint64_t>(11, 0), RsCode{11, 6, 11}, 1));
}

TEST_CASE("interleaved RS unique decoding") {
  std::mt19937_64 rng(5);
  InterleavedRs code(2, 20, 7);
  for (int trial = 0; trial < 500; ++trial) {
    Bits payload(code.payload_bits());
    for (auto& b : payload) b = rng() & 1;
    auto cw = code.encode_bits(payload);
    auto word = cw;
    uint32_t errors = static_cast<uint32_t>(rng() % (code.radius() + 1));
    for (uint32_t e = 0; e < errors; ++e) {
      uint32_t pos = static_cast<uint32_t>(rng() % code.n_c());
      // corrupt a single component or mark the position missing
      if (rng() % 4 == 0) word[pos * code.m()] = ~uint64_t{0};
      else word[pos * code.m() + rng() % code.m()] ^= 1 + (rng() & 0xFF);
    }
    auto dec = code.unique_decode(word);
    REQUIRE(dec);
    CHECK(code.message_bits(dec->message) == payload);
  }
  // Errors spread one component per position across more than the radius.
  auto cw = code.encode_bits(Bits(code.payload_bits(), 1));
  for (uint32_t pos = 0; pos <= code.radius(); ++pos) cw[pos * code.m() + pos % code.m()] ^= 3;
  CHECK_FALSE(code.unique_decode(cw));
}

TEST_CASE("interleaved RS list decoding finds the transmitted codeword") {
  std::mt19937_64 rng(8);
  InterleavedRs code(2, 20, 4);
  for (int trial = 0; trial < 200; ++trial) {
    Bits payload(code.payload_bits());
    for (auto& b : payload) b = rng() & 1;
    auto word = code.encode_bits(payload);
    // keep 3 positions intact, scramble the rest
    for (uint32_t pos = 3; pos < code.n_c(); ++pos)
      for (uint32_t c = 0; c < code.m(); ++c) word[pos * code.m() + c] = rng() % kMersenne61;
    auto list = code.list_decode(word, 5);
    bool found = false;
    for (const auto& d : list) found |= code.message_bits(d.message) == payload;
    CHECK(found);
    CHECK(std::is_sorted(list.begin(), list.end(), [](auto& a, auto& b) { return a.distance < b.distance; }));
  }
}

TEST_CASE("bit packing round trip") {
  Bits b{1, 0, 1, 1, 0, 0, 1};
  CHECK(unpack_bits(pack_bits(b, 1), b.size()) == b);
  CHECK_THROWS(pack_bits(Bits(61, 1), 1));
}

TEST_CASE("hash determinism, boundary and collisions") {
  HashSpec spec{99, 32, 60};
  Bits x(64, 0);
  x[3] = 1;
  CHECK(hash_eval(spec, x) == hash_eval(spec, x));
  // Empty input evaluates to the constant term len + 1 = 1.
  CHECK(hash_words(HashSpec{1, 120, 60}, {}) == std::vector<uint64_t>{1, 1});
  Bits e = hash_eval(HashSpec{5, 8, 60}, {});
  CHECK(bits_to_string(e) == "10000000");

  Bits y = x;
  y[40] = 1;
  int collisions = 0;
  for (uint64_t s = 0; s < 100000; ++s) {
    HashSpec h{mix64(s), 32, 60};
    if (hash_eval(h, x) == hash_eval(h, y)) ++collisions;
  }
  CHECK(collisions <= 10);
}

TEST_CASE("path hasher agrees with bit-level hash") {
  PathHasher ph(1234, 100);
  Bits p{1, 0, 0, 1, 1};
  CHECK(ph.of(p) == hash_words(HashSpec{1234, 60, 1}, p)[0]);
  CHECK(ph.of({}) == 1);
}
