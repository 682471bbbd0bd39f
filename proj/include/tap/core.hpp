#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tap {

using FactId = int;    // index into GroundTask::fact_names
using VarId = int;     // index into GroundTask::fluent_names
using ActionId = int;  // index into GroundTask::actions

// Pseudo-action ids used in reachability tables and causal links.
inline constexpr ActionId kStartAction = -1;  // supplies the initial state
inline constexpr ActionId kNoAction = -2;     // fact not reachable / no supporter
inline constexpr ActionId kSentinelAction = -3;  // forced-termination filler in relaxed plans
inline constexpr ActionId kEndAction = -4;    // consumes the goals

enum class ErrorKind { syntax, unsupported, undeclared, semantic, resource, io };

// Any problem with the user-supplied input (domain, problem, plan file, CLI
// arguments). The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  InputError(ErrorKind kind, const std::string& msg, int line = 0, int col = 0)
      : std::runtime_error(msg), kind(kind), line(line), col(col) {}
  ErrorKind kind;
  int line;
  int col;
};

// Fixed-size bitset sized at runtime. Word-parallel ops keep the hot loops
// (no-op propagation, mutex rows, state replay) branch-free.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(int n) : words_((n + 63) / 64, 0), n_(n) {}

  int size() const { return n_; }

  bool test(int i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(int i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(int i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void assign(int i, bool v) { v ? set(i) : reset(i); }

  void clear() {
    for (auto& w : words_) w = 0;
  }

  bool any() const {
    for (auto w : words_)
      if (w) return true;
    return false;
  }

  int count() const {
    int c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  bool operator==(const Bitset&) const = default;

  Bitset& operator|=(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  Bitset& operator&=(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  // this := this & ~o
  Bitset& and_not(const Bitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  bool intersects(const Bitset& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return true;
    return false;
  }

  bool is_subset_of(const Bitset& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }

  // Calls f(index) for every set bit, ascending.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        int b = std::countr_zero(w);
        f(static_cast<int>(wi * 64 + b));
        w &= w - 1;
      }
    }
  }

  std::vector<int> to_vector() const {
    std::vector<int> out;
    for_each([&](int i) { out.push_back(i); });
    return out;
  }

 private:
  std::vector<std::uint64_t> words_;
  int n_ = 0;
};

// Seeded RNG. Bounded draws avoid std::uniform_*_distribution so that the
// byte stream of decisions only depends on the seed, not on the standard
// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, n); n > 0.
  int below(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return static_cast<int>(x % bound);
  }

  // Uniform in [0, 1).
  double unit() { return (next() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
      std::swap(v[i], v[below(i + 1)]);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tap
