#pragma once

#include <gmpxx.h>

#include <climits>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bvc {

using Rational = mpq_class;

// Error taxonomy. The CLI maps these to exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class IdentityError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

// Raised by h_divide; `exponent` is the lowest offending power of hbar.
class NotDivisibleError : public Error {
 public:
  NotDivisibleError(int exponent, const std::string& what)
      : Error(what), exponent(exponent) {}
  int exponent;
};

struct Config {
  int n_hbar = 6;     // hbar truncation N
  int n_t = 4;        // t-order truncation
  int arity_cap = 7;  // largest n for which P(n) is enumerated
  int threads = 1;
};

Config& config();

// Restores the previous configuration on scope exit.
class ConfigScope {
 public:
  explicit ConfigScope(const Config& c) : saved_(config()) { config() = c; }
  ~ConfigScope() { config() = saved_; }
  ConfigScope(const ConfigScope&) = delete;
  ConfigScope& operator=(const ConfigScope&) = delete;

 private:
  Config saved_;
};

// Order value of a series that is known exactly (no truncation happened).
inline constexpr int kExact = INT_MAX / 4;

inline bool is_exact_order(int o) { return o >= kExact / 2; }
inline int add_order(int o, int k) {
  if (is_exact_order(o) || is_exact_order(k)) return kExact;
  return o + k;
}

// Truncated series in hbar.  `order()` is the largest exponent through which
// the stored coefficients are known; kExact means no truncation occurred.
// With Laurent = true negative exponents down to -config().n_t are allowed.
template <bool Laurent>
class BasicH {
 public:
  using Coeffs = std::map<int, Rational>;

  BasicH() = default;
  BasicH(const Rational& c) {  // NOLINT(google-explicit-constructor)
    if (c != 0) c_[0] = c;
  }
  BasicH(long c) : BasicH(Rational(c)) {}  // NOLINT(google-explicit-constructor)
  BasicH(int c) : BasicH(Rational(c)) {}   // NOLINT(google-explicit-constructor)

  static BasicH monomial(int e, const Rational& c) {
    BasicH r;
    if (c != 0) r.c_[e] = c;
    r.normalize();
    return r;
  }
  static BasicH hbar(int e = 1) { return monomial(e, 1); }
  // (-hbar)^e
  static BasicH minus_hbar(int e) { return monomial(e, (e % 2) ? -1 : 1); }
  static BasicH zero_with_order(int o) {
    BasicH r;
    r.ord_ = o;
    r.normalize();
    return r;
  }

  const Coeffs& coeffs() const { return c_; }
  int order() const { return ord_; }
  bool exact() const { return is_exact_order(ord_); }

  Rational coeff(int e) const {
    auto it = c_.find(e);
    return it == c_.end() ? Rational(0) : it->second;
  }
  bool is_zero() const { return c_.empty(); }
  int valuation() const { return c_.empty() ? kExact : c_.begin()->first; }
  int degree() const { return c_.empty() ? INT_MIN : c_.rbegin()->first; }

  BasicH& operator+=(const BasicH& o) {
    for (const auto& [e, v] : o.c_) c_[e] += v;
    ord_ = std::min(ord_, o.ord_);
    normalize();
    return *this;
  }
  BasicH& operator-=(const BasicH& o) {
    for (const auto& [e, v] : o.c_) c_[e] -= v;
    ord_ = std::min(ord_, o.ord_);
    normalize();
    return *this;
  }
  BasicH& operator*=(const Rational& s) {
    if (s == 0) {
      c_.clear();
    } else {
      for (auto& [e, v] : c_) v *= s;
    }
    return *this;
  }
  BasicH operator-() const {
    BasicH r = *this;
    for (auto& [e, v] : r.c_) v = -v;
    return r;
  }
  BasicH& operator*=(const BasicH& o) {
    *this = *this * o;
    return *this;
  }

  friend BasicH operator+(BasicH a, const BasicH& b) { return a += b; }
  friend BasicH operator-(BasicH a, const BasicH& b) { return a -= b; }
  friend BasicH operator*(BasicH a, const Rational& s) { return a *= s; }
  friend BasicH operator*(const Rational& s, BasicH a) { return a *= s; }
  friend BasicH operator*(const BasicH& a, const BasicH& b) {
    BasicH r;
    for (const auto& [ea, va] : a.c_)
      for (const auto& [eb, vb] : b.c_) r.c_[ea + eb] += va * vb;
    r.ord_ = std::min(add_order(a.ord_, b.valuation()),
                      add_order(b.ord_, a.valuation()));
    r.normalize();
    return r;
  }

  // Multiply by hbar^k.
  BasicH shifted(int k) const {
    BasicH r;
    for (const auto& [e, v] : c_) r.c_[e + k] = v;
    r.ord_ = add_order(ord_, k);
    r.normalize();
    return r;
  }
  BasicH with_order(int o) const {
    BasicH r = *this;
    r.ord_ = std::min(r.ord_, o);
    r.normalize();
    return r;
  }
  // Coefficient of hbar^0, regarded as an exact value.
  BasicH classical() const { return BasicH(coeff(0)); }
  // Coefficient of hbar^k as an exact constant.
  BasicH part(int k) const { return BasicH(coeff(k)); }

  // Equality up to the common precision of both operands.
  bool equals(const BasicH& o) const { return (*this - o).is_zero(); }

  std::string str() const {
    if (c_.empty()) return "0";
    std::string s;
    bool first = true;
    for (const auto& [e, v] : c_) {
      Rational a = abs(v);
      bool neg = v < 0;
      if (first) {
        if (neg) s += "-";
      } else {
        s += neg ? " - " : " + ";
      }
      first = false;
      if (e == 0) {
        s += a.get_str();
      } else {
        if (a != 1) s += a.get_str() + "*";
        s += "h";
        if (e != 1) s += "^" + std::to_string(e);
      }
    }
    return s;
  }

 private:
  void normalize() {
    const int cap = config().n_hbar;
    if (is_exact_order(ord_)) {
      if (!c_.empty() && c_.rbegin()->first > cap) ord_ = cap;
    } else if (ord_ > cap) {
      ord_ = cap;
    }
    for (auto it = c_.begin(); it != c_.end();) {
      if (it->second == 0 || it->first > ord_)
        it = c_.erase(it);
      else
        ++it;
    }
    if (!c_.empty()) {
      int lo = c_.begin()->first;
      if constexpr (Laurent) {
        if (lo < -config().n_t)
          throw ResourceError("Laurent exponent " + std::to_string(lo) +
                              " below the t-order bound");
      } else {
        if (lo < 0) throw std::logic_error("negative exponent in HPoly");
      }
    }
  }

  template <bool L>
  friend class BasicH;
  template <bool L>
  friend BasicH<L> h_divide_impl(const BasicH<L>&, int);

  Coeffs c_;
  int ord_ = kExact;
};

using HPoly = BasicH<false>;
using HLaurent = BasicH<true>;

// Divide by hbar^k.  Throws NotDivisibleError on a nonzero coefficient below
// hbar^k and ResourceError when the resulting order would be negative.
template <bool L>
BasicH<L> h_divide_impl(const BasicH<L>& p, int k) {
  if (k == 0) return p;
  for (const auto& [e, v] : p.c_)
    if (e < k)
      throw NotDivisibleError(e, "not divisible by hbar^" + std::to_string(k) +
                                     ": coefficient of hbar^" +
                                     std::to_string(e) + " is " + v.get_str());
  int o = add_order(p.ord_, -k);
  if (!is_exact_order(o) && o < 0 && !L)
    throw ResourceError("hbar precision exhausted: dividing by hbar^" +
                        std::to_string(k) + " leaves order " +
                        std::to_string(o));
  BasicH<L> r;
  for (const auto& [e, v] : p.c_) r.c_[e - k] = v;
  r.ord_ = o;
  r.normalize();
  return r;
}

inline HPoly h_divide(const HPoly& p, int k) { return h_divide_impl(p, k); }

inline HLaurent to_laurent(const HPoly& p) {
  HLaurent r = HLaurent::zero_with_order(p.order());
  for (const auto& [e, v] : p.coeffs()) r += HLaurent::monomial(e, v);
  return r;
}

// ---------------------------------------------------------------------------
// Set partitions.  Blocks hold 0-based positions, each block ascending,
// blocks ordered by their largest element.

struct Partition {
  std::vector<std::vector<int>> blocks;

  int size() const { return static_cast<int>(blocks.size()); }
  int n() const;
  std::string str() const;  // 1-based, e.g. {2}|{1,3}
};

// P(n) in the deterministic order obtained by inserting n into each
// partition of [n-1]: joining existing blocks first, then as a singleton.
// For n = 3 this gives {1,2,3}, {1,2}|{3}, {2}|{1,3}, {1}|{2,3}, {1}|{2}|{3}.
const std::vector<Partition>& enumerate_partitions(int n);

// Sign of reordering elements 0..n-1 into the concatenation of the blocks,
// with degrees[i] the Z/2 degree of element i.
int koszul_sign(const Partition& p, const std::vector<int>& degrees);

// Sign of the permutation bringing `seq` (items with degrees given by
// deg(item)) to sorted order; stable bubble sort, odd-odd swaps count.
template <class Seq, class DegFn>
int sort_sign(Seq& seq, DegFn deg) {
  int sign = 1;
  const size_t n = seq.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j + 1 < n - i; ++j)
      if (seq[j + 1] < seq[j]) {
        if ((deg(seq[j]) & 1) && (deg(seq[j + 1]) & 1)) sign = -sign;
        std::swap(seq[j], seq[j + 1]);
      }
  return sign;
}

// Blocks i at which a single non-singleton insertion is allowed, i.e. all
// other blocks are singletons (|B_i| = n - |p| + 1).
std::vector<int> insertion_blocks(const Partition& p);

// True when positions a and b lie in the same block.
bool same_block(const Partition& p, int a, int b);

// ---------------------------------------------------------------------------
// Graded basis bookkeeping.

struct GradedBasisElement {
  std::string label;
  int ghost = 0;
};

inline int parity(int ghost) { return ghost & 1; }
inline int j_sign(int ghost) { return parity(ghost) ? -1 : 1; }

using Key = std::vector<int>;

// Sorts a tuple of basis indices; returns the Koszul sign, or 0 when an odd
// index repeats (graded-symmetric functions vanish there).
int canonicalize(Key& tuple, const std::vector<int>& ghosts);

std::string key_str(const Key& k);

// All sorted multisets of size n from {0..dim-1}, omitting those that repeat
// an odd element.
std::vector<Key> symmetric_keys(int dim, int n, const std::vector<int>& ghosts);

Rational factorial(int n);

// Runs fn(0..n-1) on config().threads workers.  If any call throws, the
// exception from the lowest index is rethrown.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

// Named pass/fail outcome with a witness on failure.
struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct Report {
  std::vector<Check> checks;

  void add(std::string name, bool pass, std::string detail = {}) {
    checks.push_back(Check{std::move(name), pass, std::move(detail)});
  }
  void append(const Report& o) { checks.insert(checks.end(), o.checks.begin(), o.checks.end()); }
  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const Check* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }
};
int64_t bell_number(int n);

}  // namespace bvc
