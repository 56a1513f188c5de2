#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bvc/graded_core.hpp"
#include "bvc/poly_bv.hpp"

namespace bvc {

// Coordinates in a finite graded space.
using HVec = std::vector<HPoly>;

HVec hvec_zero(int dim);
HVec hvec_unit(int dim, int i);
void axpy(HVec& y, const HPoly& a, const HVec& x);
HVec hvec_scale(const HPoly& a, const HVec& x);
HVec hvec_add(const HVec& a, const HVec& b);
HVec hvec_sub(const HVec& a, const HVec& b);
bool hvec_is_zero(const HVec& v);
int hvec_order(const HVec& v);
std::string hvec_str(const HVec& v, const std::vector<std::string>& labels = {});

// One argument of a multilinear map: a linear combination of basis indices.
struct Slot {
  std::vector<std::pair<int, HPoly>> terms;
  static Slot basis(int i, int sign = 1);
  static Slot from_vec(const HVec& v);
};

// Graded-symmetric multilinear maps S^n V -> W for a finite graded V, stored
// on canonical (sorted) keys, one table per arity.
struct SymMaps {
  std::vector<int> src_ghosts;
  int tgt_dim = 0;
  std::vector<std::map<Key, HVec>> by_arity;  // index n; entry 0 unused

  int max_arity() const { return static_cast<int>(by_arity.size()) - 1; }
  void set(const Key& canonical, const HVec& value);
  HVec at(Key tuple) const;
  HVec at_slots(const std::vector<Slot>& slots) const;
};

struct SLInfStructure {
  SymMaps ops;                 // ops.by_arity[n] = l_n; tgt = src
  std::optional<int> unit;     // basis index of the unit, if any

  static SLInfStructure empty(const std::vector<int>& ghosts, int max_arity);
  int dim() const { return static_cast<int>(ops.src_ghosts.size()); }
  const std::vector<int>& ghosts() const { return ops.src_ghosts; }
};

struct SLInfMorphism {
  SymMaps maps;                 // maps.by_arity[n] = phi_n
  std::vector<int> tgt_ghosts;
};

struct RelationReport {
  bool pass = true;
  int first_failing_arity = 0;   // 0 when every checked arity passes
  std::vector<std::string> violations;
};

// Checks the sL-infinity relations on every basis tuple up to n_max, the
// ghost degree of each l_n, and the unit condition when a unit is given.
RelationReport verify_sl_infinity(const SLInfStructure& s, int n_max);

struct CoderivationReport {
  bool square_zero = true;
  int first_failing_length = 0;  // smallest word length with D^2 != 0
};

// Independent oracle: the coderivation on symmetric words, squared.
CoderivationReport coderivation_square(const SLInfStructure& s, int n_max);

RelationReport verify_morphism(const SLInfMorphism& phi, const SLInfStructure& src,
                               const SLInfStructure& tgt, int n_max);

SLInfMorphism compose_morphisms(const SLInfMorphism& second, const SLInfMorphism& first,
                                int n_max);

// Deformation retract of a finite complex (V, d) onto H.
struct LinearRetract {
  std::vector<int> h_ghosts;
  std::vector<HVec> f;  // f[a]: image of H basis element a, in V
  std::vector<HVec> h;  // h[v]: image of V basis element v, in H
  std::vector<HVec> s;  // s[v]: image of V basis element v, in V
};

struct MinimalModel {
  SLInfStructure lhat;
  SLInfMorphism phi;
};

// Transfers s to H, recursively up to arity n_max.  Checks the retract
// conditions first (InputError when they fail).
MinimalModel minimal_model(const SLInfStructure& s, const LinearRetract& r, int n_max);

// ---------------------------------------------------------------------------
// Descendants of pointed cochain maps out of C.

// Raised when psi_k fails to be divisible by (-hbar)^{k-1}.
class DescendantDivisibilityError : public NotDivisibleError {
 public:
  DescendantDivisibilityError(int arity, int exponent, const std::string& what)
      : NotDivisibleError(exponent, what), arity(arity) {}
  int arity;
};

template <class T>
struct TargetOps;

template <>
struct TargetOps<PolyElement> {
  static PolyElement mul(const PolyElement& a, const PolyElement& b) { return a * b; }
  static PolyElement scale(const HPoly& c, const PolyElement& a) { return c * a; }
  static PolyElement divide(const PolyElement& a, int k) { return a.h_divide(k); }
  static bool is_zero(const PolyElement& a) { return a.is_zero(); }
  static std::string str(const PolyElement& a) { return a.str(); }
};

template <>
struct TargetOps<HPoly> {
  static HPoly mul(const HPoly& a, const HPoly& b) { return a * b; }
  static HPoly scale(const HPoly& c, const HPoly& a) { return c * a; }
  static HPoly divide(const HPoly& a, int k) { return h_divide(a, k); }
  static bool is_zero(const HPoly& a) { return a.is_zero(); }
  static std::string str(const HPoly& a) { return a.str(); }
};

// psi_n from (-hbar)^{n-1} psi_n = F(x_1...x_n) - sum over |p| != 1 of
// (-hbar)^{n-|p|} eps psi(x_B1)...psi(x_B|p|).
template <class T>
class DescendantMorphism {
 public:
  using Map = std::function<T(const PolyElement&)>;
  explicit DescendantMorphism(Map f) : f_(std::move(f)) {}

  T operator()(const std::vector<PolyElement>& xs) const {
    using Ops = TargetOps<T>;
    const int n = static_cast<int>(xs.size());
    std::vector<int> deg(n);
    for (int i = 0; i < n; ++i) deg[i] = parity(xs[i].ghost_or(0));
    std::map<uint32_t, T> memo;
    auto eval = [&](auto&& self, uint32_t mask) -> T {
      auto it = memo.find(mask);
      if (it != memo.end()) return it->second;
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) idx.push_back(i);
      const int k = static_cast<int>(idx.size());
      PolyElement prod = xs[idx[0]];
      for (int j = 1; j < k; ++j) prod = prod * xs[idx[j]];
      T acc = f_(prod);
      if (k > 1) {
        std::vector<int> sd(k);
        for (int j = 0; j < k; ++j) sd[j] = deg[idx[j]];
        for (const Partition& p : enumerate_partitions(k)) {
          if (p.size() == 1) continue;
          int eps = koszul_sign(p, sd);
          T term;
          for (int j = 0; j < p.size(); ++j) {
            uint32_t sub = 0;
            for (int q : p.blocks[j]) sub |= 1u << idx[q];
            T v = self(self, sub);
            term = j == 0 ? v : Ops::mul(term, v);
          }
          acc = acc - Ops::scale(HPoly::minus_hbar(k - p.size()) * Rational(eps), term);
        }
        try {
          acc = Ops::divide(acc, k - 1);
        } catch (const DescendantDivisibilityError&) {
          throw;
        } catch (const NotDivisibleError& e) {
          throw DescendantDivisibilityError(k, e.exponent,
                                            "arity " + std::to_string(k) + ": " + e.what());
        }
        if ((k - 1) & 1) acc = Ops::scale(HPoly(-1), acc);
      }
      memo.emplace(mask, acc);
      return acc;
    };
    return eval(eval, (1u << n) - 1);
  }

  const Map& base() const { return f_; }

 private:
  Map f_;
};

struct DescendantProbe {
  bool ok = true;
  int failing_arity = 0;
  std::string residue;
};

// Evaluates psi_n on all multisets of `test` of size 2..n_max in increasing
// arity; reports the first arity where hbar-divisibility fails.
template <class T>
DescendantProbe probe_descendant(const DescendantMorphism<T>& psi,
                                 const std::vector<PolyElement>& test, int n_max) {
  DescendantProbe out;
  const int m = static_cast<int>(test.size());
  std::vector<int> ghosts(m);
  for (int i = 0; i < m; ++i) ghosts[i] = test[i].ghost_or(0);
  for (int n = 2; n <= n_max; ++n) {
    for (const Key& k : symmetric_keys(m, n, ghosts)) {
      std::vector<PolyElement> xs;
      for (int i : k) xs.push_back(test[i]);
      try {
        (void)psi(xs);
      } catch (const DescendantDivisibilityError& e) {
        out.ok = false;
        out.failing_arity = e.arity;
        out.residue = "tuple " + key_str(k) + ": " + e.what();
        return out;
      }
    }
  }
  return out;
}

// Pointed cochain map check on a spanning set: F(1) = 1' and
// F(K x) = K'(F x).
template <class T>
bool check_pointed_cochain(const std::function<T(const PolyElement&)>& F,
                           const std::function<T(const T&)>& Kprime, const T& one_prime,
                           const Potential& pot, const std::vector<Mono>& span,
                           std::string* witness = nullptr) {
  T u = F(PolyElement::one(pot.n_vars));
  if (!TargetOps<T>::is_zero(u - one_prime)) {
    if (witness) *witness = "F(1) = " + TargetOps<T>::str(u);
    return false;
  }
  for (const Mono& m : span) {
    PolyElement x = PolyElement::monomial(m);
    T d = F(quantum_K(pot, x)) - Kprime(F(x));
    if (!TargetOps<T>::is_zero(d)) {
      if (witness) *witness = "F K - K' F nonzero on " + x.str() + ": " + TargetOps<T>::str(d);
      return false;
    }
  }
  return true;
}

// Expectation map C -> k[[hbar]] together with a tag naming its rule.
struct Expectation {
  std::function<HPoly(const PolyElement&)> rule;
  std::string tag;
  HPoly operator()(const PolyElement& x) const { return rule(x); }
};

// Lookup of a graded-symmetric family H^n -> C at an arbitrary tuple.
using CFamilyLookup = std::function<PolyElement(const Key&)>;

// Pi_n(v) = sum_p (-hbar)^{n-|p|} eps phi(v_B1)...phi(v_B|p|).
PolyElement correlator(const CFamilyLookup& phi, const Key& v, const std::vector<int>& ghosts);

struct MomentCumulantReport {
  bool pass = true;
  bool descendant_ok = true;
  int incompatibility_arity = 0;
  std::string detail;
};

// mu = c o Pi^phi against the sum over partitions of the cumulants
// chi^V = chi . phi with chi the descendant of c.
MomentCumulantReport moments_cumulants_check(const Expectation& c, const CFamilyLookup& phi,
                                             const std::vector<int>& ghosts, int dim, int n_max);

}  // namespace bvc
