#include "icoding/ecc.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace icoding {

uint64_t PrimeField::pow(uint64_t a, uint64_t e) const {
  uint64_t r = 1 % p;
  a %= p;
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

uint64_t PrimeField::inv(uint64_t a) const {
  if (a % p == 0) throw std::domain_error("inverse of zero");
  return pow(a, p - 2);
}

bool is_prime(uint64_t q) {
  if (q < 2) return false;
  for (uint64_t d : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (q % d == 0) return q == d;
  }
  uint64_t d = q - 1;
  int s = 0;
  while (d % 2 == 0) { d /= 2; ++s; }
  PrimeField f{q};
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    uint64_t x = f.pow(a, d);
    if (x == 1 || x == q - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = f.mul(x, x);
      if (x == q - 1) { composite = false; break; }
    }
    if (composite) return false;
  }
  return true;
}

void RsCode::validate() const {
  if (!is_prime(q)) throw std::invalid_argument("RS field order must be prime");
  if (k == 0 || k > n_c) throw std::invalid_argument("RS message length must be in [1, N_c]");
  if (n_c > q) throw std::invalid_argument("RS codeword length exceeds field order");
}

uint64_t poly_eval(const PrimeField& f, const std::vector<uint64_t>& coeffs, uint64_t x) {
  uint64_t acc = 0;
  for (size_t i = coeffs.size(); i-- > 0;) acc = f.add(f.mul(acc, x), coeffs[i]);
  return acc;
}

std::vector<uint64_t> interpolate(const PrimeField& f, const std::vector<uint64_t>& xs,
                                  const std::vector<uint64_t>& ys) {
  const size_t k = xs.size();
  std::vector<uint64_t> result(k, 0);
  std::vector<uint64_t> basis;
  for (size_t i = 0; i < k; ++i) {
    // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
    basis.assign(1, 1);
    uint64_t denom = 1;
    for (size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      std::vector<uint64_t> next(basis.size() + 1, 0);
      for (size_t t = 0; t < basis.size(); ++t) {
        next[t + 1] = f.add(next[t + 1], basis[t]);
        next[t] = f.sub(next[t], f.mul(basis[t], xs[j]));
      }
      basis.swap(next);
      denom = f.mul(denom, f.sub(xs[i], xs[j]));
    }
    uint64_t scale = f.mul(ys[i] % f.p, f.inv(denom));
    for (size_t t = 0; t < k; ++t) result[t] = f.add(result[t], f.mul(basis[t], scale));
  }
  return result;
}

namespace {

void check_message(const std::vector<uint64_t>& message, const RsCode& code) {
  if (message.size() != code.k) throw std::invalid_argument("RS message length mismatch");
  for (uint64_t s : message)
    if (s >= code.q) throw std::invalid_argument("RS message symbol outside the field");
}

// Solves A x = b over the field. Columns without a pivot are set to zero.
std::optional<std::vector<uint64_t>> solve_linear(const PrimeField& f, std::vector<std::vector<uint64_t>> a,
                                                  size_t cols) {
  const size_t rows = a.size();
  std::vector<size_t> pivot_col;
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t sel = rows;
    for (size_t i = r; i < rows; ++i)
      if (a[i][c] != 0) { sel = i; break; }
    if (sel == rows) continue;
    std::swap(a[sel], a[r]);
    uint64_t iv = f.inv(a[r][c]);
    for (size_t t = c; t <= cols; ++t) a[r][t] = f.mul(a[r][t], iv);
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      uint64_t factor = a[i][c];
      for (size_t t = c; t <= cols; ++t) a[i][t] = f.sub(a[i][t], f.mul(factor, a[r][t]));
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (size_t i = r; i < rows; ++i)
    if (a[i][cols] != 0) return std::nullopt;
  std::vector<uint64_t> x(cols, 0);
  for (size_t i = 0; i < pivot_col.size(); ++i) x[pivot_col[i]] = a[i][cols];
  return x;
}

// Quotient of num / den when the division is exact; den is monic.
std::optional<std::vector<uint64_t>> divide_exact(const PrimeField& f, std::vector<uint64_t> num,
                                                  const std::vector<uint64_t>& den) {
  const size_t dd = den.size() - 1;
  if (num.size() < den.size()) {
    for (uint64_t c : num)
      if (c != 0) return std::nullopt;
    return std::vector<uint64_t>{};
  }
  std::vector<uint64_t> quot(num.size() - dd, 0);
  for (size_t i = num.size(); i-- > dd;) {
    uint64_t c = num[i];
    if (c == 0) continue;
    quot[i - dd] = c;
    for (size_t j = 0; j <= dd; ++j) num[i - dd + j] = f.sub(num[i - dd + j], f.mul(c, den[j]));
  }
  for (size_t i = 0; i < dd; ++i)
    if (num[i] != 0) return std::nullopt;
  return quot;
}

}  // namespace

std::vector<uint64_t> rs_encode(const std::vector<uint64_t>& message, const RsCode& code) {
  check_message(message, code);
  PrimeField f{code.q};
  std::vector<uint64_t> out(code.n_c);
  for (uint32_t i = 0; i < code.n_c; ++i) out[i] = poly_eval(f, message, i);
  return out;
}

uint32_t hamming(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming distance of unequal lengths");
  uint32_t d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::optional<RsDecoded> rs_unique_decode(const std::vector<uint64_t>& word, const RsCode& code) {
  if (word.size() != code.n_c) throw std::invalid_argument("RS word length mismatch");
  PrimeField f{code.q};
  const uint32_t t = code.radius();
  const uint32_t k = code.k;
  // Unknowns: e_0..e_{t-1} (E monic of degree t), then q_0..q_{t+k-1}.
  const size_t cols = 2 * static_cast<size_t>(t) + k;
  std::vector<std::vector<uint64_t>> a(code.n_c, std::vector<uint64_t>(cols + 1, 0));
  for (uint32_t i = 0; i < code.n_c; ++i) {
    uint64_t y = word[i] < code.q ? word[i] : 0;
    uint64_t xp = 1;
    for (uint32_t j = 0; j < t + k; ++j) {
      if (j < t) a[i][j] = f.sub(0, f.mul(y, xp));
      a[i][t + j] = xp;
      if (j == t) a[i][cols] = f.mul(y, xp);
      xp = f.mul(xp, i % code.q);
    }
  }
  auto sol = solve_linear(f, std::move(a), cols);
  if (!sol) return std::nullopt;
  std::vector<uint64_t> e(sol->begin(), sol->begin() + t);
  e.push_back(1);
  std::vector<uint64_t> qpoly(sol->begin() + t, sol->end());
  auto msg = divide_exact(f, qpoly, e);
  if (!msg) return std::nullopt;
  msg->resize(std::max<size_t>(msg->size(), k), 0);
  for (size_t i = k; i < msg->size(); ++i)
    if ((*msg)[i] != 0) return std::nullopt;
  msg->resize(k);
  auto cw = rs_encode(*msg, code);
  uint32_t dist = hamming(cw, word);
  if (dist > t) return std::nullopt;
  return RsDecoded{std::move(*msg), dist};
}

std::vector<RsDecoded> rs_nearest_list(const std::vector<uint64_t>& word, const RsCode& code, size_t L) {
  if (word.size() != code.n_c) throw std::invalid_argument("RS word length mismatch");
  unsigned __int128 total = 1;
  for (uint32_t i = 0; i < code.k; ++i) {
    total *= code.q;
    if (total > (1u << 20)) throw std::invalid_argument("brute-force list decoding needs q^k <= 2^20");
  }
  std::vector<RsDecoded> all;
  all.reserve(static_cast<size_t>(total));
  std::vector<uint64_t> msg(code.k, 0);
  for (uint64_t idx = 0; idx < static_cast<uint64_t>(total); ++idx) {
    // Lexicographic order with message[0] most significant.
    uint64_t v = idx;
    for (size_t i = code.k; i-- > 0;) {
      msg[i] = v % code.q;
      v /= code.q;
    }
    all.push_back(RsDecoded{msg, hamming(rs_encode(msg, code), word)});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const RsDecoded& x, const RsDecoded& y) { return x.distance < y.distance; });
  if (all.size() > L) all.resize(L);
  return all;
}

std::vector<uint64_t> pack_bits(const Bits& bits, size_t elements) {
  const size_t w = InterleavedRs::kBitsPerElement;
  if (bits.size() > elements * w) throw std::invalid_argument("payload does not fit the field elements");
  std::vector<uint64_t> out(elements, 0);
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / w] |= uint64_t{1} << (i % w);
  return out;
}

Bits unpack_bits(const std::vector<uint64_t>& elements, size_t bits) {
  const size_t w = InterleavedRs::kBitsPerElement;
  Bits out(bits, 0);
  for (size_t i = 0; i < bits && i / w < elements.size(); ++i)
    out[i] = static_cast<uint8_t>((elements[i / w] >> (i % w)) & 1u);
  return out;
}

InterleavedRs::InterleavedRs(uint32_t k, uint32_t n_c, uint32_t m, uint64_t combo_seed)
    : k_(k), n_c_(n_c), m_(m) {
  if (k == 0 || k > n_c || m == 0) throw std::invalid_argument("invalid interleaved RS parameters");
  combo_.resize(m);
  for (uint32_t j = 0; j < m; ++j) combo_[j] = mix2(combo_seed, j) % kMersenne61;
}

uint32_t InterleavedRs::components_for(size_t bits, uint32_t k) {
  const size_t per = static_cast<size_t>(k) * kBitsPerElement;
  return static_cast<uint32_t>(std::max<size_t>(1, (bits + per - 1) / per));
}

std::vector<uint64_t> InterleavedRs::encode(const std::vector<uint64_t>& message) const {
  if (message.size() != static_cast<size_t>(k_) * m_) throw std::invalid_argument("interleaved message size");
  std::vector<uint64_t> word(static_cast<size_t>(n_c_) * m_);
  std::vector<uint64_t> coeffs(k_);
  for (uint32_t c = 0; c < m_; ++c) {
    for (uint32_t j = 0; j < k_; ++j) coeffs[j] = message[c * k_ + j] % f_.p;
    for (uint32_t pos = 0; pos < n_c_; ++pos) word[pos * m_ + c] = poly_eval(f_, coeffs, pos);
  }
  return word;
}

std::vector<uint64_t> InterleavedRs::encode_bits(const Bits& payload) const {
  return encode(pack_bits(payload, static_cast<size_t>(k_) * m_));
}

Bits InterleavedRs::message_bits(const std::vector<uint64_t>& message) const {
  return unpack_bits(message, payload_bits());
}

uint32_t InterleavedRs::distance(const std::vector<uint64_t>& word, const std::vector<uint64_t>& codeword) const {
  uint32_t d = 0;
  for (uint32_t pos = 0; pos < n_c_; ++pos) {
    const uint64_t* a = &word[pos * m_];
    const uint64_t* b = &codeword[pos * m_];
    for (uint32_t c = 0; c < m_; ++c) {
      if (a[c] != b[c]) { ++d; break; }
    }
  }
  return d;
}

std::vector<uint64_t> InterleavedRs::combine(const std::vector<uint64_t>& word) const {
  std::vector<uint64_t> out(n_c_);
  for (uint32_t pos = 0; pos < n_c_; ++pos) {
    const uint64_t* s = &word[pos * m_];
    if (s[0] >= f_.p) {
      out[pos] = f_.p;
      continue;
    }
    uint64_t acc = 0;
    for (uint32_t c = 0; c < m_; ++c) acc = f_.add(acc, f_.mul(combo_[c], s[c] % f_.p));
    out[pos] = acc;
  }
  return out;
}

std::optional<std::vector<uint64_t>> InterleavedRs::reconstruct(const std::vector<uint64_t>& word,
                                                                const std::vector<uint64_t>& positions) const {
  std::vector<uint64_t> msg(static_cast<size_t>(k_) * m_);
  std::vector<uint64_t> ys(k_);
  for (uint32_t c = 0; c < m_; ++c) {
    for (uint32_t j = 0; j < k_; ++j) {
      uint64_t v = word[positions[j] * m_ + c];
      if (v >= f_.p) return std::nullopt;
      ys[j] = v;
    }
    auto coeffs = interpolate(f_, positions, ys);
    std::copy(coeffs.begin(), coeffs.end(), msg.begin() + c * k_);
  }
  return msg;
}

std::optional<RsDecoded> InterleavedRs::unique_decode(const std::vector<uint64_t>& word) const {
  if (word.size() != static_cast<size_t>(n_c_) * m_) throw std::invalid_argument("interleaved word size");
  const RsCode scalar{f_.p, k_, n_c_};
  const uint32_t t = radius();
  auto combined = combine(word);
  if (auto c = rs_unique_decode(combined, scalar)) {
    std::vector<uint64_t> clean;
    for (uint32_t pos = 0; pos < n_c_ && clean.size() < k_; ++pos) {
      if (combined[pos] < f_.p && poly_eval(f_, c->message, pos) == combined[pos]) clean.push_back(pos);
    }
    if (clean.size() == k_) {
      if (auto msg = reconstruct(word, clean)) {
        uint32_t d = distance(word, encode(*msg));
        if (d <= t) return RsDecoded{std::move(*msg), d};
      }
    }
  }
  // Component-wise fallback; any tuple codeword within the radius is within
  // the radius in every component, so this path is complete.
  std::vector<uint64_t> msg(static_cast<size_t>(k_) * m_);
  std::vector<uint64_t> comp(n_c_);
  for (uint32_t c = 0; c < m_; ++c) {
    for (uint32_t pos = 0; pos < n_c_; ++pos) {
      uint64_t v = word[pos * m_ + c];
      comp[pos] = word[pos * m_] >= f_.p ? f_.p : v;
    }
    auto dec = rs_unique_decode(comp, scalar);
    if (!dec) return std::nullopt;
    std::copy(dec->message.begin(), dec->message.end(), msg.begin() + c * k_);
  }
  uint32_t d = distance(word, encode(msg));
  if (d > t) return std::nullopt;
  return RsDecoded{std::move(msg), d};
}

std::vector<RsDecoded> InterleavedRs::list_decode(const std::vector<uint64_t>& word, size_t L) const {
  if (word.size() != static_cast<size_t>(n_c_) * m_) throw std::invalid_argument("interleaved word size");
  auto combined = combine(word);
  std::vector<uint64_t> present;
  for (uint32_t pos = 0; pos < n_c_; ++pos)
    if (combined[pos] < f_.p) present.push_back(pos);
  if (present.size() < k_ || L == 0) return {};

  struct Candidate {
    uint32_t combined_distance;
    std::vector<uint64_t> positions;
  };
  std::map<std::vector<uint64_t>, Candidate> seen;
  std::vector<size_t> idx(k_);
  for (uint32_t i = 0; i < k_; ++i) idx[i] = i;
  std::vector<uint64_t> xs(k_), ys(k_);
  uint64_t subsets = 0;
  while (true) {
    if (++subsets > 2'000'000) throw std::invalid_argument("interleaved list decoding subset bound exceeded");
    for (uint32_t i = 0; i < k_; ++i) {
      xs[i] = present[idx[i]];
      ys[i] = combined[xs[i]];
    }
    auto poly = interpolate(f_, xs, ys);
    if (!seen.count(poly)) {
      uint32_t d = 0;
      for (uint32_t pos = 0; pos < n_c_; ++pos) d += combined[pos] != poly_eval(f_, poly, pos);
      seen.emplace(std::move(poly), Candidate{d, xs});
    }
    // next k-subset in lexicographic order
    int i = static_cast<int>(k_) - 1;
    while (i >= 0 && idx[i] == present.size() - k_ + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (uint32_t j = i + 1; j < k_; ++j) idx[j] = idx[j - 1] + 1;
  }
  std::vector<const Candidate*> order;
  order.reserve(seen.size());
  for (const auto& kv : seen) order.push_back(&kv.second);
  std::stable_sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
    return a->combined_distance < b->combined_distance;
  });
  // The combined distance never exceeds the tuple distance and matches it
  // unless the random combination collides, so a slack of 2L candidates is
  // re-ranked exactly.
  std::vector<RsDecoded> out;
  const size_t take = std::min(order.size(), 2 * L + 4);
  for (size_t i = 0; i < take; ++i) {
    auto msg = reconstruct(word, order[i]->positions);
    if (!msg) continue;
    uint32_t d = distance(word, encode(*msg));
    out.push_back(RsDecoded{std::move(*msg), d});
  }
  std::sort(out.begin(), out.end(), [](const RsDecoded& a, const RsDecoded& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.message < b.message;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const RsDecoded& a, const RsDecoded& b) { return a.message == b.message; }),
            out.end());
  if (out.size() > L) out.resize(L);
  return out;
}

uint64_t hash_point(uint64_t seed, uint32_t t) {
  uint64_t r = mix2(seed, 0xA5A5A5A5ull + t) % kMersenne61;
  return r < 2 ? r + 2 : r;
}

std::vector<uint64_t> hash_words(const HashSpec& spec, const Bits& input) {
  if (spec.chunk_bits == 0 || spec.chunk_bits > 60) throw std::invalid_argument("hash chunk width must be 1..60");
  if (spec.output_len == 0) throw std::invalid_argument("hash output length must be positive");
  const PrimeField f{kMersenne61};
  const uint32_t evals = (spec.output_len + 59) / 60;
  const size_t chunks = (input.size() + spec.chunk_bits - 1) / spec.chunk_bits;
  std::vector<uint64_t> out(evals);
  for (uint32_t t = 0; t < evals; ++t) {
    const uint64_t r = hash_point(spec.seed, t);
    uint64_t acc = (input.size() + 1) % f.p;
    uint64_t pw = 1;
    for (size_t c = 0; c < chunks; ++c) {
      uint64_t v = 0;
      for (uint32_t b = 0; b < spec.chunk_bits; ++b) {
        size_t i = c * spec.chunk_bits + b;
        if (i < input.size() && input[i]) v |= uint64_t{1} << b;
      }
      pw = f.mul(pw, r);
      acc = f.add(acc, f.mul(v + 1, pw));
    }
    out[t] = acc;
  }
  return out;
}

Bits hash_eval(const HashSpec& spec, const Bits& input) {
  auto words = hash_words(spec, input);
  Bits out(spec.output_len);
  for (uint32_t i = 0; i < spec.output_len; ++i) out[i] = static_cast<uint8_t>((words[i / 60] >> (i % 60)) & 1u);
  return out;
}

PathHasher::PathHasher(uint64_t seed, uint32_t max_len) : r_(hash_point(seed, 0)) {
  powers_.resize(static_cast<size_t>(max_len) + 2);
  powers_[0] = 1;
  for (size_t i = 1; i < powers_.size(); ++i) powers_[i] = f_.mul(powers_[i - 1], r_);
}

std::shared_ptr<const PathHasher> PathHasher::cached(uint64_t seed, uint32_t max_len) {
  struct Slot {
    uint64_t seed = 0;
    uint32_t len = 0;
    std::shared_ptr<const PathHasher> h;
  };
  thread_local std::array<Slot, 8> slots;
  thread_local size_t next = 0;
  for (const Slot& sl : slots)
    if (sl.h && sl.seed == seed && sl.len == max_len) return sl.h;
  Slot& sl = slots[next];
  next = (next + 1) % slots.size();
  sl = {seed, max_len, std::make_shared<const PathHasher>(seed, max_len)};
  return sl.h;
}

uint64_t PathHasher::of(const Bits& path) const {
  uint64_t h = root();
  for (size_t d = 0; d < path.size(); ++d) h = child(h, static_cast<uint32_t>(d), path[d]);
  return h;
}

}  // namespace icoding
