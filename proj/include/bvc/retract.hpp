#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bvc/graded_core.hpp"
#include "bvc/poly_bv.hpp"
#include "bvc/sl_infinity.hpp"

namespace bvc {

// Graded lexicographic order: total degree first, then lex with x1 > x2 > ...
bool grlex_less(const Exps& a, const Exps& b);
Exps leading_monomial(const XPoly& p);

XPoly xpoly_mul(const XPoly& a, const XPoly& b);
XPoly xpoly_add(const XPoly& a, const XPoly& b, const Rational& scale = 1);

// Reduced Groebner basis that remembers how each element is built from the
// original generators.
struct GroebnerBasis {
  int n_vars = 0;
  int n_gens = 0;
  std::vector<XPoly> g;                 // monic, reduced, sorted by leading monomial
  std::vector<std::vector<XPoly>> rep;  // g[k] = sum_i rep[k][i] * gens[i]

  // Full reduction in a fixed order.  When `witness` is given it receives q
  // with p - remainder = sum_i q[i] * gens[i].
  XPoly reduce(const XPoly& p, std::vector<XPoly>* witness = nullptr) const;
  bool is_standard(const Exps& e) const;
};

GroebnerBasis groebner(const std::vector<XPoly>& gens, int n_vars);

struct MilnorData {
  Potential pot;
  GroebnerBasis gb;
  std::vector<Exps> basis;  // standard monomials; basis[0] = 1
  int mu() const { return static_cast<int>(basis.size()); }
  std::vector<std::string> labels() const;
};

// Standard-monomial basis of the Jacobian ring, ordered by degree ascending
// then exponent vector descending.  InputError for non-isolated critical
// loci and for a trivial Jacobian ring.
MilnorData milnor_basis(const Potential& pot);

// Weights w_i with S quasi-homogeneous of weight 1, if they exist uniquely
// and are positive.
std::optional<std::vector<Rational>> quasi_homogeneous_weights(const Potential& pot);

// Classical retract (f, h, s) from C onto the Jacobian ring H.
class Retract {
 public:
  explicit Retract(MilnorData md);

  const MilnorData& milnor() const;
  const Potential& potential() const;
  int mu() const;
  int n_vars() const;

  PolyElement f(int a) const { return f_[a]; }
  PolyElement f(const HVec& v) const;
  HVec h(const PolyElement& x) const;
  PolyElement s(const PolyElement& x) const;

  // f' = f + K lambda, s' = s - lambda h, h' = h.  lambda[0] must vanish.
  Retract perturbed(const std::vector<PolyElement>& lambda) const;

 private:
  struct Engine;
  std::shared_ptr<Engine> engine_;
  std::vector<PolyElement> f_;
  std::vector<PolyElement> lambda_;
};

// Checks the retract identities and side conditions on all monomials with
// x-degree <= max_x_degree.
Report verify_retract(const Retract& r, int max_x_degree);

// Quantized retract (f^, h^, s^, kappa) through hbar order N.
class QuantizedRetract {
 public:
  QuantizedRetract(std::shared_ptr<const Retract> r, int order);

  const Retract& classical() const { return *r_; }
  std::shared_ptr<const Retract> classical_ptr() const { return r_; }
  int order() const { return order_; }
  int mu() const { return r_->mu(); }

  PolyElement f_n(int n, int a) const { return f_[n][a]; }
  const HVec& kappa_n(int n, int a) const { return kappa_[n][a]; }  // rational entries
  HVec h_n(int n, const PolyElement& x) const;
  PolyElement s_n(int n, const PolyElement& x) const;

  PolyElement fhat(int a) const;
  PolyElement fhat(const HVec& v) const;
  HVec hhat(const PolyElement& x) const;
  PolyElement shat(const PolyElement& x) const;
  HVec kappa(const HVec& v) const;
  bool anomaly_free() const { return anomaly_free_; }
  // Lowest n with kappa^(n) != 0, or 0.
  int leading_anomaly() const;

 private:
  HVec h_mono(int n, const Mono& m) const;
  PolyElement s_mono(int n, const Mono& m) const;

  std::shared_ptr<const Retract> r_;
  int order_;
  std::vector<std::vector<PolyElement>> f_;  // f_[n][a]
  std::vector<std::vector<HVec>> kappa_;     // kappa_[n][a]
  bool f_exact_ = false;
  bool anomaly_free_ = true;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, Mono>, HVec> h_cache_;
  mutable std::map<std::pair<int, Mono>, PolyElement> s_cache_;
};

Report verify_quantized(const QuantizedRetract& q, int max_x_degree);

// xi: H -> H and lambda: H -> C with f'^ = f^ xi + K lambda + lambda kappa'.
struct RetractComparison {
  std::vector<std::vector<HVec>> xi;             // xi[n][a]
  std::vector<std::vector<PolyElement>> lambda;  // lambda[n][a]
  Report report;
  HVec xi_hat(int a) const;
  PolyElement lambda_hat(int a) const;
};

RetractComparison compare_retracts(const QuantizedRetract& q, const QuantizedRetract& qp);

// One step of the inverse-hbar operator on a family indexed by keys:
// (-hbar) nabla Omega = Omega - f^ h Omega_cl - K_tw(s Omega_cl) - s K Omega_cl,
// where K_tw is supplied by the caller (bold K twisted by kappa insertions).
using CFamily = std::map<Key, PolyElement>;
using TwistFn = std::function<PolyElement(const CFamily& xi, const Key& key)>;

CFamily nabla_inv_h(const QuantizedRetract& q, const CFamily& omega, const TwistFn& k_tw);

}  // namespace bvc
