#include "bvc/poly_bv.hpp"

#include <algorithm>
#include <sstream>

namespace bvc {

XPoly xpoly_derivative(const XPoly& p, int i) {
  XPoly r;
  for (const auto& [e, c] : p) {
    if (e[i] == 0) continue;
    Exps f = e;
    f[i] -= 1;
    r[f] += c * e[i];
  }
  for (auto it = r.begin(); it != r.end();) it = it->second == 0 ? r.erase(it) : std::next(it);
  return r;
}

std::string xpoly_str(const XPoly& p) {
  PolyElement e = PolyElement::from_xpoly(p.empty() ? 0 : static_cast<int>(p.begin()->first.size()), p);
  return e.str(p.empty() ? 0 : static_cast<int>(p.begin()->first.size()));
}

int eta_product_sign(uint32_t a, uint32_t b) {
  if (a & b) return 0;
  int swaps = 0;
  for (int j = 0; j < 32; ++j)
    if (b & (1u << j)) swaps += __builtin_popcount(a >> (j + 1));
  return (swaps & 1) ? -1 : 1;
}

PolyElement PolyElement::constant(int n_vars, const HPoly& c) {
  return monomial(Mono{Exps(n_vars, 0), 0}, c);
}

PolyElement PolyElement::monomial(const Mono& m, const HPoly& c) {
  PolyElement r;
  r.ord_ = c.order();
  if (!c.is_zero()) r.t_[m] = c;
  r.normalize();
  return r;
}

PolyElement PolyElement::x(int n_vars, int i, int power) {
  Mono m{Exps(n_vars, 0), 0};
  m.x[i] = power;
  return monomial(m);
}

PolyElement PolyElement::eta(int n_vars, int i) {
  return monomial(Mono{Exps(n_vars, 0), 1u << i});
}

PolyElement PolyElement::from_xpoly(int n_vars, const XPoly& p) {
  PolyElement r;
  for (const auto& [e, c] : p) {
    (void)n_vars;
    r.add_term(Mono{e, 0}, HPoly(c));
  }
  return r;
}

PolyElement PolyElement::zero_with_order(int o) {
  PolyElement r;
  r.ord_ = o;
  r.normalize();
  return r;
}

int PolyElement::valuation() const {
  int v = kExact;
  for (const auto& [m, c] : t_) v = std::min(v, c.valuation());
  return v;
}

int PolyElement::hbar_degree() const {
  int d = -1;
  for (const auto& [m, c] : t_) d = std::max(d, c.degree());
  return d;
}

std::optional<int> PolyElement::ghost() const {
  std::optional<int> g;
  for (const auto& [m, c] : t_) {
    if (!g) g = m.ghost();
    else if (*g != m.ghost()) return std::nullopt;
  }
  return g ? g : std::optional<int>(0);
}

int PolyElement::ghost_or(int fallback) const {
  if (t_.empty()) return fallback;
  auto g = ghost();
  if (!g) throw InputError("inhomogeneous element where a homogeneous one is required");
  return *g;
}

void PolyElement::normalize() {
  int o = ord_;
  for (const auto& [m, c] : t_) o = std::min(o, c.order());
  if (!is_exact_order(o) && o > config().n_hbar) o = config().n_hbar;
  ord_ = o;
  for (auto it = t_.begin(); it != t_.end();) {
    if (it->second.order() > o) it->second = it->second.with_order(o);
    if (it->second.is_zero())
      it = t_.erase(it);
    else
      ++it;
  }
}

PolyElement& PolyElement::add_term(const Mono& m, const HPoly& c) {
  auto it = t_.find(m);
  if (it == t_.end()) {
    if (!c.is_zero()) t_.emplace(m, c);
    ord_ = std::min(ord_, c.order());
  } else {
    it->second += c;
  }
  normalize();
  return *this;
}

PolyElement& PolyElement::operator+=(const PolyElement& o) {
  ord_ = std::min(ord_, o.ord_);
  for (const auto& [m, c] : o.t_) {
    auto it = t_.find(m);
    if (it == t_.end())
      t_.emplace(m, c);
    else
      it->second += c;
  }
  normalize();
  return *this;
}

PolyElement& PolyElement::operator-=(const PolyElement& o) {
  ord_ = std::min(ord_, o.ord_);
  for (const auto& [m, c] : o.t_) {
    auto it = t_.find(m);
    if (it == t_.end())
      t_.emplace(m, -c);
    else
      it->second -= c;
  }
  normalize();
  return *this;
}

PolyElement PolyElement::operator-() const {
  PolyElement r = *this;
  for (auto& [m, c] : r.t_) c = -c;
  return r;
}

PolyElement operator*(const PolyElement& a, const PolyElement& b) {
  PolyElement r;
  r.ord_ = std::min(add_order(a.ord_, b.valuation()), add_order(b.ord_, a.valuation()));
  for (const auto& [ma, ca] : a.t_)
    for (const auto& [mb, cb] : b.t_) {
      int s = eta_product_sign(ma.eta, mb.eta);
      if (s == 0) continue;
      Mono m{ma.x, ma.eta | mb.eta};
      for (size_t i = 0; i < m.x.size(); ++i) m.x[i] += mb.x[i];
      HPoly c = ca * cb;
      if (s < 0) c = -c;
      auto it = r.t_.find(m);
      if (it == r.t_.end())
        r.t_.emplace(m, c);
      else
        it->second += c;
    }
  r.normalize();
  return r;
}

PolyElement operator*(const HPoly& c, const PolyElement& a) {
  PolyElement r;
  r.ord_ = std::min(add_order(a.ord_, c.valuation()), add_order(c.order(), a.valuation()));
  for (const auto& [m, v] : a.t_) r.t_.emplace(m, c * v);
  r.normalize();
  return r;
}

PolyElement operator*(const Rational& c, const PolyElement& a) {
  if (c == 0) return PolyElement::zero_with_order(a.ord_);
  PolyElement r = a;
  for (auto& [m, v] : r.t_) v *= c;
  return r;
}

PolyElement PolyElement::shifted(int k) const {
  PolyElement r;
  r.ord_ = add_order(ord_, k);
  for (const auto& [m, c] : t_) r.t_.emplace(m, c.shifted(k));
  r.normalize();
  return r;
}

PolyElement PolyElement::with_order(int o) const {
  PolyElement r = *this;
  r.ord_ = std::min(ord_, o);
  r.normalize();
  return r;
}

PolyElement PolyElement::h_divide(int k) const {
  PolyElement r;
  r.ord_ = add_order(ord_, -k);
  if (!is_exact_order(r.ord_) && r.ord_ < 0)
    throw ResourceError("hbar precision exhausted: dividing by hbar^" + std::to_string(k) +
                        " leaves order " + std::to_string(r.ord_));
  int lowest = kExact;
  for (const auto& [m, c] : t_)
    if (!c.is_zero() && c.valuation() < k) lowest = std::min(lowest, c.valuation());
  if (lowest != kExact)
    throw NotDivisibleError(lowest, "element not divisible by hbar^" + std::to_string(k) +
                                        "; offending exponent " + std::to_string(lowest) +
                                        " in " + str());
  for (const auto& [m, c] : t_) r.t_.emplace(m, bvc::h_divide(c, k));
  r.normalize();
  return r;
}

PolyElement PolyElement::classical() const { return part(0); }

PolyElement PolyElement::part(int k) const {
  PolyElement r;
  for (const auto& [m, c] : t_) {
    Rational v = c.coeff(k);
    if (v != 0) r.t_.emplace(m, HPoly(v));
  }
  return r;
}

PolyElement PolyElement::J() const {
  PolyElement r = *this;
  for (auto& [m, c] : r.t_)
    if (parity(m.ghost())) c = -c;
  return r;
}

std::string PolyElement::str(int n_vars) const {
  if (t_.empty()) return "0";
  if (n_vars == 0) n_vars = static_cast<int>(t_.begin()->first.x.size());
  auto xname = [&](int i) { return n_vars == 1 ? std::string("x") : "x" + std::to_string(i + 1); };
  auto ename = [&](int i) { return n_vars == 1 ? std::string("eta") : "eta" + std::to_string(i + 1); };
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : t_) {
    std::string mono;
    for (size_t i = 0; i < m.x.size(); ++i) {
      if (m.x[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += xname(static_cast<int>(i));
      if (m.x[i] != 1) mono += "^" + std::to_string(m.x[i]);
    }
    for (int i = 0; i < 32; ++i)
      if (m.eta & (1u << i)) {
        if (!mono.empty()) mono += "*";
        mono += ename(i);
      }
    std::string cs = c.str();
    bool simple = c.coeffs().size() == 1 && c.coeffs().begin()->first == 0;
    if (!first) os << " + ";
    first = false;
    if (mono.empty()) {
      os << (simple ? cs : "(" + cs + ")");
    } else if (simple && c.coeff(0) == 1) {
      os << mono;
    } else if (simple && c.coeff(0) == -1) {
      os << "-" << mono;
    } else {
      os << (simple ? cs : "(" + cs + ")") << "*" << mono;
    }
  }
  return os.str();
}

PolyElement product(const PolyElement& a, const PolyElement& b) { return a * b; }

PolyElement product(const std::vector<PolyElement>& xs) {
  if (xs.empty()) throw std::logic_error("empty product needs n_vars");
  PolyElement r = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) r = r * xs[i];
  return r;
}

PolyElement d_eta(const PolyElement& a, int i) {
  PolyElement r = PolyElement::zero_with_order(a.order());
  const uint32_t bit = 1u << i;
  for (const auto& [m, c] : a.terms()) {
    if (!(m.eta & bit)) continue;
    int before = __builtin_popcount(m.eta & (bit - 1));
    Mono n{m.x, m.eta & ~bit};
    r.add_term(n, (before & 1) ? -c : c);
  }
  return r;
}

PolyElement d_x(const PolyElement& a, int i) {
  PolyElement r = PolyElement::zero_with_order(a.order());
  for (const auto& [m, c] : a.terms()) {
    if (m.x[i] == 0) continue;
    Mono n = m;
    n.x[i] -= 1;
    r.add_term(n, c * Rational(m.x[i]));
  }
  return r;
}

PolyElement delta_op(const PolyElement& a) {
  PolyElement r = PolyElement::zero_with_order(a.order());
  if (a.is_zero()) return r;
  const int n = static_cast<int>(a.terms().begin()->first.x.size());
  for (int i = 0; i < n; ++i) r += d_eta(d_x(a, i), i);
  return r;
}

PolyElement bv_bracket(const PolyElement& a, const PolyElement& b) {
  int ga = a.ghost_or(0);
  PolyElement r = delta_op(a * b) - delta_op(a) * b;
  PolyElement t = a * delta_op(b);
  if (parity(ga)) r += t;
  else r -= t;
  return r;
}

Potential Potential::make(int n_vars, const XPoly& s) {
  Potential p;
  p.n_vars = n_vars;
  p.s = s;
  for (const auto& [e, c] : s)
    if (static_cast<int>(e.size()) != n_vars)
      throw InputError("exponent vector length does not match n_vars");
  for (int i = 0; i < n_vars; ++i)
    p.dS.push_back(PolyElement::from_xpoly(n_vars, xpoly_derivative(s, i)));
  return p;
}

PolyElement classical_K(const Potential& pot, const PolyElement& a) {
  PolyElement r = PolyElement::zero_with_order(a.order());
  for (int i = 0; i < pot.n_vars; ++i) {
    PolyElement d = d_eta(a, i);
    if (!d.is_zero()) r += pot.dS[i] * d;
  }
  return r;
}

PolyElement quantum_K(const Potential& pot, const PolyElement& a) {
  return classical_K(pot, a) - delta_op(a).shifted(1);
}

PolyElement descendant_l(const Potential& pot, const std::vector<PolyElement>& args) {
  const int n = static_cast<int>(args.size());
  if (n == 0) throw InputError("descendant operation needs at least one argument");
  if (n > 30) throw ResourceError("arity too large");
  std::vector<int> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = parity(args[i].ghost_or(0));

  const uint32_t full = (1u << n) - 1;
  std::map<uint32_t, PolyElement> prod, L;
  auto product_of = [&](uint32_t mask) -> const PolyElement& {
    auto it = prod.find(mask);
    if (it != prod.end()) return it->second;
    PolyElement r;
    bool first = true;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        r = first ? args[i] : r * args[i];
        first = false;
      }
    return prod.emplace(mask, r).first->second;
  };

  auto eval = [&](auto&& self, uint32_t mask) -> PolyElement {
    auto it = L.find(mask);
    if (it != L.end()) return it->second;
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    PolyElement acc = quantum_K(pot, product_of(mask));
    if (k > 1) {
      std::vector<int> sub_deg(k);
      for (int j = 0; j < k; ++j) sub_deg[j] = deg[idx[j]];
      for (const Partition& p : enumerate_partitions(k)) {
        if (p.size() == 1) continue;
        int eps = koszul_sign(p, sub_deg);
        for (int bi : insertion_blocks(p)) {
          PolyElement term;
          bool first = true;
          for (int j = 0; j < p.size(); ++j) {
            PolyElement f;
            if (j == bi) {
              uint32_t sub = 0;
              for (int q : p.blocks[j]) sub |= 1u << idx[q];
              f = self(self, sub);
            } else {
              f = args[idx[p.blocks[j][0]]];
              if (j < bi) f = f.J();
            }
            term = first ? f : term * f;
            first = false;
          }
          HPoly coef = HPoly::minus_hbar(k - p.size()) * Rational(eps);
          acc -= coef * term;
        }
      }
      acc = acc.h_divide(k - 1);
      if ((k - 1) & 1) acc = -acc;
    }
    L.emplace(mask, acc);
    return acc;
  };
  return eval(eval, full);
}

std::vector<Mono> spanning_monomials(int n_vars, int max_x_degree, int max_eta) {
  std::vector<Exps> xs;
  Exps cur(n_vars, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == n_vars) {
      xs.push_back(cur);
      return;
    }
    for (int d = 0; d <= left; ++d) {
      cur[i] = d;
      self(self, i + 1, left - d);
    }
    cur[i] = 0;
  };
  rec(rec, 0, max_x_degree);
  std::sort(xs.begin(), xs.end(), [](const Exps& a, const Exps& b) {
    int da = 0, db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    if (da != db) return da < db;
    return a > b;
  });
  std::vector<Mono> out;
  for (uint32_t mask = 0; mask < (1u << n_vars); ++mask) {
    if (__builtin_popcount(mask) > max_eta) continue;
    for (const auto& e : xs) out.push_back(Mono{e, mask});
  }
  std::stable_sort(out.begin(), out.end(), [](const Mono& a, const Mono& b) {
    return __builtin_popcount(a.eta) < __builtin_popcount(b.eta);
  });
  return out;
}

}  // namespace bvc
