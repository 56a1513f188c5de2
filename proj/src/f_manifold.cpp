#include "bvc/f_manifold.hpp"

#include <sstream>

namespace bvc {

namespace {

bool coeff_zero(const HLaurent& c) { return c.is_zero(); }
bool coeff_zero(const PolyElement& c) { return c.is_zero(); }

Exps unit_exps(int dim, int a) {
  Exps e(dim, 0);
  e[a] = 1;
  return e;
}

}  // namespace

int exps_degree(const Exps& e) {
  int d = 0;
  for (int x : e) d += x;
  return d;
}

std::string exps_str(const Exps& e) {
  std::string s;
  for (size_t i = 0; i < e.size(); ++i) {
    if (!e[i]) continue;
    if (!s.empty()) s += "*";
    s += "t" + std::to_string(i);
    if (e[i] > 1) s += "^" + std::to_string(e[i]);
  }
  return s.empty() ? "1" : s;
}

std::string tseries_str(const TSeries& s) {
  if (s.is_zero()) return "0";
  std::string out;
  for (const auto& [e, c] : s.terms()) {
    if (!out.empty()) out += " + ";
    out += "(" + c.str() + ")";
    if (exps_degree(e)) out += "*" + exps_str(e);
  }
  return out;
}

template <class C>
void Series<C>::prune() {
  for (auto it = t_.begin(); it != t_.end();) {
    if (coeff_zero(it->second))
      it = t_.erase(it);
    else
      ++it;
  }
}

template <class C>
void Series<C>::add(const Exps& e, const C& c) {
  if (exps_degree(e) > order_ || coeff_zero(c)) return;
  auto it = t_.find(e);
  if (it == t_.end()) {
    t_.emplace(e, c);
    return;
  }
  it->second += c;
  if (coeff_zero(it->second)) t_.erase(it);
}

template <class C>
C Series<C>::coeff(const Exps& e) const {
  auto it = t_.find(e);
  return it == t_.end() ? C{} : it->second;
}

template <class C>
Series<C>& Series<C>::operator+=(const Series& o) {
  if (par_.empty()) par_ = o.par_;
  order_ = std::max(order_, o.order_);
  for (const auto& [e, c] : o.t_) add(e, c);
  return *this;
}

template <class C>
Series<C>& Series<C>::operator-=(const Series& o) {
  if (par_.empty()) par_ = o.par_;
  order_ = std::max(order_, o.order_);
  for (const auto& [e, c] : o.t_) add(e, Rational(-1) * c);
  return *this;
}

template <class C>
int Series<C>::mul_sign(const Exps& a, const Exps& b) const {
  int s = 1;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!par_[i]) continue;
    if (a[i] + b[i] > 1) return 0;
  }
  for (size_t j = 0; j < b.size(); ++j) {
    if (!par_[j] || !b[j]) continue;
    for (size_t i = j + 1; i < a.size(); ++i)
      if (par_[i] && a[i]) s = -s;
  }
  return s;
}

template <class C>
Series<C> Series<C>::mul(const Series& o) const {
  Series r(par_, std::min(order_, o.order_));
  for (const auto& [ea, ca] : t_)
    for (const auto& [eb, cb] : o.t_) {
      Exps e(ea.size());
      for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      if (exps_degree(e) > r.order_) continue;
      int s = mul_sign(ea, eb);
      if (s == 0) continue;
      r.add(e, Rational(s) * (ca * cb));
    }
  return r;
}

template <class C>
Series<C> Series<C>::derivative(int a) const {
  Series r(par_, order_ - 1);
  for (const auto& [e, c] : t_) {
    if (!e[a]) continue;
    int before = 0;
    for (int i = 0; i < a; ++i) before += e[i] * par_[i];
    int s = (par_[a] && (before & 1)) ? -1 : 1;
    Exps f = e;
    f[a] -= 1;
    r.add(f, Rational(s * e[a]) * c);
  }
  return r;
}

template <class C>
Series<C> Series<C>::truncated(int d) const {
  Series r(par_, std::min(order_, d));
  for (const auto& [e, c] : t_) r.add(e, c);
  return r;
}

template class Series<HLaurent>;
template class Series<PolyElement>;

std::pair<Exps, int> reversed_monomial(const Key& rho, const std::vector<int>& parities) {
  const int dim = static_cast<int>(parities.size());
  TSeries probe(parities, static_cast<int>(rho.size()));
  Exps cur(dim, 0);
  int sign = 1;
  for (int j = static_cast<int>(rho.size()) - 1; j >= 0; --j) {
    Exps u = unit_exps(dim, rho[j]);
    int s = probe.mul_sign(cur, u);
    if (s == 0) return {cur, 0};
    sign *= s;
    cur[rho[j]] += 1;
  }
  return {cur, sign};
}

namespace {

std::vector<int> t_parities_of(const MasterSolver& s) {
  std::vector<int> p;
  for (int g : s.ghosts()) p.push_back(parity(-g));
  return p;
}

void require_t_order(int n_t) {
  if (n_t < 1) throw InputError("t-order must be positive");
  if (n_t > config().n_t)
    throw ResourceError("t-order " + std::to_string(n_t) + " exceeds the configured bound " +
                        std::to_string(config().n_t));
}

// Calls fn(rho, exps, sign) for every ordered tuple of length n.
template <class Fn>
void for_ordered(int dim, int n, const std::vector<int>& par, Fn fn) {
  Key rho(n, 0);
  auto rec = [&](auto&& self, int j) -> void {
    if (j == n) {
      auto [e, s] = reversed_monomial(rho, par);
      if (s != 0) fn(rho, e, s);
      return;
    }
    for (int a = 0; a < dim; ++a) {
      rho[j] = a;
      self(self, j + 1);
    }
  };
  rec(rec, 0);
}

HVec mhat_sym(const MasterSolver& s, Key k) {
  const int sg = canonicalize(k, s.ghosts());
  if (sg == 0) return hvec_zero(s.dim());
  HVec v = s.level_one().mhat.at_flat(k);
  return sg > 0 ? v : hvec_scale(HPoly(-1), v);
}

TSeries constant(const std::vector<int>& par, int order, const HLaurent& c) {
  TSeries r(par, order);
  r.add(Exps(par.size(), 0), c);
  return r;
}

TSeries scale_coeffs(const TSeries& s, const HLaurent& c) {
  TSeries r(s.parities(), s.order());
  for (const auto& [e, v] : s.terms()) r.add(e, v * c);
  return r;
}

// first nonzero coefficient of a difference, as a witness string
std::string first_term(const TSeries& d) {
  auto it = d.terms().begin();
  return "coefficient of " + exps_str(it->first) + ": " + it->second.str();
}

}  // namespace

StructureConstants structure_constants(const MasterSolver& s, int n_t) {
  require_t_order(n_t);
  const auto& l1 = s.level_one();
  if (static_cast<int>(l1.mhat.by_arity.size()) <= n_t + 2 || l1.mhat.by_arity[n_t + 2].empty())
    throw InputError("structure constants to t-order " + std::to_string(n_t) +
                     " need m^ up to arity " + std::to_string(n_t + 2));
  const int mu = s.dim();
  StructureConstants A;
  A.dim = mu;
  A.n_t = n_t;
  A.t_parities = t_parities_of(s);
  A.A.assign(mu * mu * mu, TSeries(A.t_parities, n_t));
  const Exps zero(mu, 0);
  for (int a = 0; a < mu; ++a)
    for (int b = 0; b < mu; ++b) {
      HVec m2 = mhat_sym(s, {a, b});
      for (int g = 0; g < mu; ++g) A.at(a, b, g).add(zero, to_laurent(m2[g]));
      for (int n = 1; n <= n_t; ++n) {
        const Rational w = 1 / factorial(n);
        for_ordered(mu, n, A.t_parities, [&](const Key& rho, const Exps& e, int sg) {
          Key k{a, b};
          k.insert(k.end(), rho.begin(), rho.end());
          HVec m = mhat_sym(s, k);
          for (int g = 0; g < mu; ++g)
            if (!m[g].is_zero()) A.at(a, b, g).add(e, to_laurent(m[g]) * (w * sg));
        });
      }
    }
  return A;
}

Report wdvv_report(const StructureConstants& A) {
  Report rep;
  const int mu = A.dim;
  const auto& par = A.t_parities;
  const Exps zero(mu, 0);
  std::string wit;
  bool ok = true;
  auto fail = [&](const std::string& w) {
    if (ok) {
      ok = false;
      wit = w;
    }
  };
  auto idx = [](int a, int b, int g) {
    return "[" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(g) + "]";
  };
  for (int b = 0; b < mu; ++b)
    for (int g = 0; g < mu; ++g) {
      TSeries want = b == g ? constant(par, A.n_t, HLaurent(1)) : TSeries(par, A.n_t);
      TSeries d = A.at(0, b, g) - want;
      if (!d.is_zero()) fail("A" + idx(0, b, g) + " " + first_term(d));
    }
  rep.add("WDVV unity: A_0b^g = delta", ok, wit);
  ok = true;
  wit.clear();
  for (int a = 0; a < mu; ++a)
    for (int b = 0; b < mu; ++b)
      for (int g = 0; g < mu; ++g) {
        const int s = (par[a] && par[b]) ? -1 : 1;
        TSeries d = A.at(a, b, g) - Rational(s) * A.at(b, a, g);
        if (!d.is_zero()) fail("A" + idx(a, b, g) + " " + first_term(d));
      }
  rep.add("WDVV symmetry: A_ab^g = (-1)^{|a||b|} A_ba^g", ok, wit);
  ok = true;
  wit.clear();
  for (int a = 0; a < mu; ++a)
    for (int b = 0; b < mu; ++b)
      for (int g = 0; g < mu; ++g)
        for (int sg = 0; sg < mu; ++sg) {
          const int s = (par[a] && par[b]) ? -1 : 1;
          TSeries d = A.at(b, g, sg).derivative(a) - Rational(s) * A.at(a, g, sg).derivative(b);
          if (!d.is_zero())
            fail("d" + std::to_string(a) + " A" + idx(b, g, sg) + " " + first_term(d));
        }
  rep.add("WDVV potentiality: d_a A_bg^s = (-1)^{|a||b|} d_b A_ag^s", ok, wit);
  ok = true;
  wit.clear();
  for (int a = 0; a < mu; ++a)
    for (int b = 0; b < mu; ++b)
      for (int g = 0; g < mu; ++g)
        for (int sg = 0; sg < mu; ++sg) {
          TSeries lhs(par, A.n_t), rhs(par, A.n_t);
          for (int r = 0; r < mu; ++r) {
            lhs += A.at(a, b, r).mul(A.at(r, g, sg));
            rhs += A.at(b, g, r).mul(A.at(a, r, sg));
          }
          TSeries d = lhs - rhs;
          if (!d.is_zero())
            fail("a,b,g,s = " + std::to_string(a) + "," + std::to_string(b) + "," +
                 std::to_string(g) + "," + std::to_string(sg) + " " + first_term(d));
        }
  rep.add("WDVV associativity: A_ab^r A_rg^s = A_bg^r A_ar^s", ok, wit);
  return rep;
}

FlatCoords flat_coordinates(const MasterSolver& s, int n_t) {
  require_t_order(n_t);
  const auto& l0 = s.level_zero();
  if (static_cast<int>(l0.pi0.by_arity.size()) <= n_t || l0.pi0.by_arity[n_t].empty())
    throw InputError("flat coordinates to t-order " + std::to_string(n_t) +
                     " need pi^0 up to arity " + std::to_string(n_t));
  const int mu = s.dim();
  FlatCoords T;
  T.dim = mu;
  T.n_t = n_t;
  T.t_parities = t_parities_of(s);
  T.T.assign(mu, TSeries(T.t_parities, n_t));
  for (int g = 0; g < mu; ++g) T.T[g].add(unit_exps(mu, g), HLaurent(1));
  for (int n = 2; n <= n_t; ++n) {
    const HLaurent w = HLaurent::monomial(-(n - 1), ((n - 1) % 2 ? -1 : 1) / factorial(n));
    for_ordered(mu, n, T.t_parities, [&](const Key& rho, const Exps& e, int sg) {
      HVec p = l0.pi0.at(rho);
      for (int g = 0; g < mu; ++g)
        if (!p[g].is_zero()) T.T[g].add(e, to_laurent(p[g]) * w * Rational(sg));
    });
  }
  return T;
}

PdeSignReport verify_flat_coordinates(const FlatCoords& T, const StructureConstants& A) {
  PdeSignReport out;
  const int mu = T.dim;
  const auto& par = T.t_parities;
  const int n_t = std::min(T.n_t, A.n_t);
  bool plus = true, minus = true;
  std::string wp, wm;
  for (int a = 0; a < mu; ++a)
    for (int b = 0; b < mu; ++b)
      for (int g = 0; g < mu; ++g) {
        TSeries l = scale_coeffs(T.T[g].derivative(b).derivative(a), HLaurent::hbar(1))
                        .truncated(n_t - 2);
        TSeries r(par, n_t - 2);
        for (int rho = 0; rho < mu; ++rho) r += A.at(a, b, rho).mul(T.T[g].derivative(rho));
        r = r.truncated(n_t - 2);
        TSeries dp = l + r, dm = l - r;
        std::string where = "a,b,g = " + std::to_string(a) + "," + std::to_string(b) + "," +
                            std::to_string(g) + " ";
        if (plus && !dp.is_zero()) {
          plus = false;
          wp = where + first_term(dp);
        }
        if (minus && !dm.is_zero()) {
          minus = false;
          wm = where + first_term(dm);
        }
      }
  out.plus_holds = plus;
  out.minus_holds = minus;
  out.sign = plus && !minus ? 1 : minus && !plus ? -1 : plus ? 1 : 0;
  std::ostringstream os;
  os << "h d_a d_b T + A d T = 0 " << (plus ? "holds" : "fails (" + wp + ")")
     << "; h d_a d_b T - A d T = 0 " << (minus ? "holds" : "fails (" + wm + ")");
  out.detail = os.str();
  out.report.add("flat-coordinate PDE holds with one determinate sign", out.sign != 0 && plus != minus,
                 out.detail);

  bool ok = true;
  std::string wit;
  for (int g = 0; g < mu; ++g) {
    TSeries lhs = T.T[g].derivative(0).truncated(n_t - 1);
    TSeries rhs = (g == 0 ? constant(par, n_t - 1, HLaurent(1)) : TSeries(par, n_t - 1)) -
                  scale_coeffs(T.T[g], HLaurent::monomial(-1, 1)).truncated(n_t - 1);
    TSeries d = lhs - rhs;
    if (ok && !d.is_zero()) {
      ok = false;
      wit = "gamma " + std::to_string(g) + " " + first_term(d);
    }
  }
  out.report.add("d_0 T^g = delta_0^g - T^g / h", ok, wit);
  ok = true;
  wit.clear();
  for (int g = 0; g < mu; ++g) {
    if (!T.T[g].coeff(Exps(mu, 0)).is_zero()) ok = false;
    for (int b = 0; b < mu; ++b) {
      HLaurent c = T.T[g].coeff(unit_exps(mu, b));
      if (!(c - HLaurent(b == g ? 1 : 0)).is_zero() && ok) {
        ok = false;
        wit = "d_" + std::to_string(b) + " T^" + std::to_string(g) + " at 0 = " + c.str();
      }
    }
  }
  out.report.add("boundary: T|0 = 0, d_b T^g|0 = delta", ok, wit);
  return out;
}

GeneratingFunction generating_function(const MasterSolver& s, const Expectation& c,
                                       const FlatCoords& T) {
  GeneratingFunction z;
  const int mu = s.dim();
  const int n_t = T.n_t;
  const auto& par = T.t_parities;
  const Exps zero(mu, 0);
  z.route_a = constant(par, n_t, HLaurent(1));
  std::map<Key, HPoly> cache;
  for (int n = 1; n <= n_t; ++n) {
    const HLaurent w = HLaurent::monomial(-n, (n % 2 ? -1 : 1) / factorial(n));
    for_ordered(mu, n, par, [&](const Key& rho, const Exps& e, int sg) {
      Key k = rho;
      const int cs = canonicalize(k, s.ghosts());
      if (cs == 0) return;
      auto it = cache.find(k);
      if (it == cache.end()) it = cache.emplace(k, c(s.correlator0(k))).first;
      if (!it->second.is_zero()) z.route_a.add(e, to_laurent(it->second) * w * Rational(sg * cs));
    });
  }
  z.route_b = constant(par, n_t, HLaurent(1));
  for (int g = 0; g < mu; ++g) {
    HPoly cg = c(s.retract().fhat(g));
    if (cg.is_zero()) continue;
    z.route_b -= scale_coeffs(T.T[g], HLaurent::monomial(-1, 1) * to_laurent(cg));
  }
  TSeries d = z.route_a - z.route_b;
  z.report.add("Z: correlator route equals flat-coordinate route", d.is_zero(),
               d.is_zero() ? "" : first_term(d));
  TSeries lhs = scale_coeffs(z.route_a.derivative(0), HLaurent::minus_hbar(1)).truncated(n_t - 1);
  TSeries e = lhs - z.route_a.truncated(n_t - 1);
  z.report.add("Z: -h d_0 Z = Z", e.is_zero(), e.is_zero() ? "" : first_term(e));
  TSeries at0 = z.route_a.truncated(0) - constant(par, 0, HLaurent(1));
  z.report.add("Z: Z|0 = 1", at0.is_zero());
  return z;
}

Report theta_mc_check(const MasterSolver& s, int n_t) {
  require_t_order(n_t);
  Report rep;
  for (int g : s.ghosts())
    if (g != 0) throw InputError("theta check needs H in ghost 0");
  const auto& l0 = s.level_zero();
  if (static_cast<int>(l0.phi0.by_arity.size()) <= n_t)
    throw InputError("theta check to t-order " + std::to_string(n_t) + " needs phi^0 up to arity " +
                     std::to_string(n_t));
  const int mu = s.dim();
  const std::vector<int> par(mu, 0);
  const auto& pot = s.retract().classical().potential();
  CSeries theta(par, n_t);
  for (int n = 1; n <= n_t; ++n) {
    const Rational w = 1 / factorial(n);
    for_ordered(mu, n, par, [&](const Key& rho, const Exps& e, int sg) {
      PolyElement v = l0.phi0.at(rho);
      if (!v.is_zero()) theta.add(e, (w * sg) * v);
    });
  }
  CSeries res(par, n_t);
  for (const auto& [e, c] : theta.terms()) res.add(e, quantum_K(pot, c));
  std::vector<std::pair<Exps, PolyElement>> terms(theta.terms().begin(), theta.terms().end());
  for (int n = 2; n <= n_t; ++n) {
    const Rational w = 1 / factorial(n);
    std::vector<int> pick(n);
    auto rec = [&](auto&& self, int j, int deg) -> void {
      if (j == n) {
        Exps e(mu, 0);
        std::vector<PolyElement> args;
        for (int i : pick) {
          for (int a = 0; a < mu; ++a) e[a] += terms[i].first[a];
          args.push_back(terms[i].second);
        }
        PolyElement v = descendant_l(pot, args);
        if (!v.is_zero()) res.add(e, w * v);
        return;
      }
      for (size_t i = 0; i < terms.size(); ++i) {
        int d = exps_degree(terms[i].first);
        if (deg + d + (n - j - 1) > n_t) continue;
        pick[j] = static_cast<int>(i);
        self(self, j + 1, deg + d);
      }
    };
    rec(rec, 0, 0);
  }
  std::string wit;
  if (!res.is_zero()) {
    auto it = res.terms().begin();
    wit = "coefficient of " + exps_str(it->first) + ": " + it->second.str();
  }
  rep.add("Theta: K Theta + sum 1/n! l_n(Theta^n) = 0", res.is_zero(), wit);
  CSeries d0 = theta.derivative(0).truncated(n_t - 1);
  CSeries one(par, n_t - 1);
  one.add(Exps(mu, 0), PolyElement::one(s.retract().classical().n_vars()));
  CSeries diff = d0 - one;
  rep.add("Theta: d_0 Theta = 1", diff.is_zero(),
          diff.is_zero() ? "" : "coefficient of " + exps_str(diff.terms().begin()->first));
  return rep;
}

}  // namespace bvc
