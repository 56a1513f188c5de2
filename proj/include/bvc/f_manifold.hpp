#pragma once

#include <map>
#include <string>
#include <vector>

#include "bvc/master_solver.hpp"

namespace bvc {

// Formal power series in graded variables t^0..t^{dim-1}, truncated at total
// degree `order`.  Monomials are stored in ascending variable order; odd
// variables anticommute and square to zero.
template <class C>
class Series {
 public:
  Series() = default;
  Series(std::vector<int> parities, int order) : par_(std::move(parities)), order_(order) {}

  const std::vector<int>& parities() const { return par_; }
  int order() const { return order_; }
  int dim() const { return static_cast<int>(par_.size()); }
  const std::map<Exps, C>& terms() const { return t_; }

  void add(const Exps& e, const C& c);
  C coeff(const Exps& e) const;
  bool is_zero() const { return t_.empty(); }

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(const Rational& r, Series a) {
    for (auto& [e, c] : a.t_) c = r * c;
    a.prune();
    return a;
  }
  Series mul(const Series& o) const;
  // Left derivative d/dt^a.
  Series derivative(int a) const;
  // Terms of total degree <= d.
  Series truncated(int d) const;

  // Sign of t^a * t^b brought to ascending order; 0 when an odd variable repeats.
  int mul_sign(const Exps& a, const Exps& b) const;

 private:
  void prune();
  std::vector<int> par_;
  int order_ = 0;
  std::map<Exps, C> t_;
};

using TSeries = Series<HLaurent>;
using CSeries = Series<PolyElement>;

int exps_degree(const Exps& e);
std::string exps_str(const Exps& e);
std::string tseries_str(const TSeries& s);

// Exponent and sign of the ordered product t^{rho_n} ... t^{rho_1} for
// rho = (rho_1, ..., rho_n), kept literally in this reversed order.
std::pair<Exps, int> reversed_monomial(const Key& rho, const std::vector<int>& parities);

struct StructureConstants {
  int dim = 0;
  int n_t = 0;
  std::vector<int> t_parities;
  std::vector<TSeries> A;  // A[(alpha*dim + beta)*dim + gamma]
  const TSeries& at(int a, int b, int g) const { return A[(a * dim + b) * dim + g]; }
  TSeries& at(int a, int b, int g) { return A[(a * dim + b) * dim + g]; }
};

struct FlatCoords {
  int dim = 0;
  int n_t = 0;
  std::vector<int> t_parities;
  std::vector<TSeries> T;  // T[gamma]
};

// A^gamma_{alpha beta} from m^; the solver must hold level one to arity n_t + 2.
StructureConstants structure_constants(const MasterSolver& s, int n_t);

// Unity, graded symmetry, potentiality, associativity through t-order n_t.
Report wdvv_report(const StructureConstants& A);

// T^gamma from pi^0; the solver must hold level zero to arity n_t.
FlatCoords flat_coordinates(const MasterSolver& s, int n_t);

struct PdeSignReport {
  bool plus_holds = false;   // hbar d_a d_b T + A d T = 0
  bool minus_holds = false;  // hbar d_a d_b T - A d T = 0
  int sign = 0;
  std::string detail;
  Report report;  // d_0 equation and boundary conditions, plus the sign line
};

PdeSignReport verify_flat_coordinates(const FlatCoords& T, const StructureConstants& A);

struct GeneratingFunction {
  TSeries route_a;  // 1 + sum 1/(n!(-h)^n) t...t c(Pi^0_n)
  TSeries route_b;  // 1 - (1/h) T^gamma c(f^ e_gamma)
  Report report;
};

GeneratingFunction generating_function(const MasterSolver& s, const Expectation& c,
                                       const FlatCoords& T);

// K Theta + sum 1/n! l_n(Theta, ..., Theta) = 0 and d_0 Theta = 1 through
// t-order n_t.  H must sit in ghost 0.
Report theta_mc_check(const MasterSolver& s, int n_t);

}  // namespace bvc
