#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bvc/graded_core.hpp"

namespace bvc {

using Exps = std::vector<int>;

// Polynomial in x_1..x_n with rational coefficients.
using XPoly = std::map<Exps, Rational>;

XPoly xpoly_derivative(const XPoly& p, int i);
std::string xpoly_str(const XPoly& p);

// x^a eta^M.  Bit i of `eta` marks eta_{i+1}; odd variables are ordered by index.
struct Mono {
  Exps x;
  uint32_t eta = 0;

  int ghost() const { return -__builtin_popcount(eta); }
  auto operator<=>(const Mono&) const = default;
};

// Sign of eta^A * eta^B relative to eta^(A|B), 0 if they overlap.
int eta_product_sign(uint32_t a, uint32_t b);

// Element of k[[hbar]][x_1..x_n, eta_1..eta_n].  All coefficients share one
// truncation order.
class PolyElement {
 public:
  using Terms = std::map<Mono, HPoly>;

  PolyElement() = default;
  static PolyElement constant(int n_vars, const HPoly& c);
  static PolyElement one(int n_vars) { return constant(n_vars, HPoly(1)); }
  static PolyElement monomial(const Mono& m, const HPoly& c = HPoly(1));
  static PolyElement x(int n_vars, int i, int power = 1);
  static PolyElement eta(int n_vars, int i);
  static PolyElement from_xpoly(int n_vars, const XPoly& p);
  static PolyElement zero_with_order(int o);

  const Terms& terms() const { return t_; }
  int order() const { return ord_; }
  bool is_zero() const { return t_.empty(); }
  int valuation() const;
  int hbar_degree() const;  // largest hbar exponent present, -1 if zero

  // Ghost degree if homogeneous (zero counts as homogeneous of any degree).
  std::optional<int> ghost() const;
  int ghost_or(int fallback) const;

  PolyElement& add_term(const Mono& m, const HPoly& c);
  PolyElement& operator+=(const PolyElement& o);
  PolyElement& operator-=(const PolyElement& o);
  PolyElement operator-() const;
  friend PolyElement operator+(PolyElement a, const PolyElement& b) { return a += b; }
  friend PolyElement operator-(PolyElement a, const PolyElement& b) { return a -= b; }
  friend PolyElement operator*(const PolyElement& a, const PolyElement& b);
  friend PolyElement operator*(const HPoly& c, const PolyElement& a);
  friend PolyElement operator*(const Rational& c, const PolyElement& a);

  PolyElement shifted(int k) const;  // times hbar^k
  PolyElement with_order(int o) const;
  PolyElement h_divide(int k) const;
  PolyElement classical() const;  // hbar^0 part, exact
  PolyElement part(int k) const;  // hbar^k part, exact
  PolyElement J() const;          // (-1)^ghost on each term

  bool equals(const PolyElement& o) const { return (*this - o).is_zero(); }
  std::string str(int n_vars = 0) const;

 private:
  void normalize();
  Terms t_;
  int ord_ = kExact;
};

PolyElement product(const PolyElement& a, const PolyElement& b);
PolyElement product(const std::vector<PolyElement>& xs);

// Left partial derivative with respect to eta_i.
PolyElement d_eta(const PolyElement& a, int i);
PolyElement d_x(const PolyElement& a, int i);

// BV operator sum_i d/deta_i d/dx_i.
PolyElement delta_op(const PolyElement& a);

// Delta(ab) - Delta(a) b - (-1)^{|a|} a Delta(b); `a` must be homogeneous.
PolyElement bv_bracket(const PolyElement& a, const PolyElement& b);

struct Potential {
  int n_vars = 1;
  XPoly s;                        // classical potential S
  std::vector<PolyElement> dS;    // d_i S as elements

  static Potential make(int n_vars, const XPoly& s);
};

// K = sum_i (d_i S) d/deta_i
PolyElement classical_K(const Potential& pot, const PolyElement& a);
// bold K = K - hbar Delta
PolyElement quantum_K(const Potential& pot, const PolyElement& a);

// Descendant sL-infinity operation l_n of (C, bold K, product), evaluated by
// the defining recursion on the given (homogeneous) inputs.
PolyElement descendant_l(const Potential& pot, const std::vector<PolyElement>& args);

// Family l_1, l_2, ... evaluated on demand.
class DescendantFamily {
 public:
  explicit DescendantFamily(const Potential& pot) : pot_(&pot) {}
  PolyElement operator()(const std::vector<PolyElement>& args) const {
    return descendant_l(*pot_, args);
  }
  const Potential& potential() const { return *pot_; }

 private:
  const Potential* pot_;
};

// All monomials with total x-degree <= max_x_degree and at most max_eta odd
// generators, in a fixed order.
std::vector<Mono> spanning_monomials(int n_vars, int max_x_degree, int max_eta);

}  // namespace bvc
