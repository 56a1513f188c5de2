#include "bvc/retract.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>

namespace bvc {

namespace {

int total_degree(const Exps& e) { return std::accumulate(e.begin(), e.end(), 0); }

bool divides(const Exps& a, const Exps& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

Exps exps_sub(const Exps& a, const Exps& b) {
  Exps r = a;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

Exps exps_lcm(const Exps& a, const Exps& b) {
  Exps r = a;
  for (size_t i = 0; i < r.size(); ++i) r[i] = std::max(a[i], b[i]);
  return r;
}

XPoly xpoly_term(const Exps& e, const Rational& c) { return c == 0 ? XPoly{} : XPoly{{e, c}}; }

void xpoly_clean(XPoly& p) {
  for (auto it = p.begin(); it != p.end();) it = it->second == 0 ? p.erase(it) : std::next(it);
}

XPoly xpoly_scale(const XPoly& p, const Rational& c) {
  XPoly r;
  if (c == 0) return r;
  for (const auto& [e, v] : p) r[e] = v * c;
  return r;
}

// Reduced row echelon solve of A x = b, free variables set to zero.
std::optional<std::vector<Rational>> solve_linear(std::vector<std::vector<Rational>> A,
                                                  std::vector<Rational> b) {
  const size_t rows = A.size();
  const size_t cols = rows ? A[0].size() : 0;
  std::vector<int> pivot_col;
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t p = r;
    while (p < rows && A[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(A[p], A[r]);
    std::swap(b[p], b[r]);
    Rational inv = 1 / A[r][c];
    for (size_t k = c; k < cols; ++k) A[r][k] *= inv;
    b[r] *= inv;
    for (size_t q = 0; q < rows; ++q) {
      if (q == r || A[q][c] == 0) continue;
      Rational f = A[q][c];
      for (size_t k = c; k < cols; ++k) A[q][k] -= f * A[r][k];
      b[q] -= f * b[r];
    }
    pivot_col.push_back(static_cast<int>(c));
    ++r;
  }
  for (size_t q = r; q < rows; ++q)
    if (b[q] != 0) return std::nullopt;
  std::vector<Rational> x(cols, Rational(0));
  for (size_t q = 0; q < r; ++q) x[pivot_col[q]] = b[q];
  return x;
}

}  // namespace

bool grlex_less(const Exps& a, const Exps& b) {
  int da = total_degree(a), db = total_degree(b);
  if (da != db) return da < db;
  return a < b;
}

Exps leading_monomial(const XPoly& p) {
  if (p.empty()) throw std::logic_error("leading monomial of zero");
  const Exps* best = nullptr;
  for (const auto& [e, c] : p)
    if (!best || grlex_less(*best, e)) best = &e;
  return *best;
}

XPoly xpoly_mul(const XPoly& a, const XPoly& b) {
  XPoly r;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      Exps e = ea;
      for (size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      r[e] += ca * cb;
    }
  xpoly_clean(r);
  return r;
}

XPoly xpoly_add(const XPoly& a, const XPoly& b, const Rational& scale) {
  XPoly r = a;
  for (const auto& [e, c] : b) r[e] += c * scale;
  xpoly_clean(r);
  return r;
}

XPoly GroebnerBasis::reduce(const XPoly& p, std::vector<XPoly>* witness) const {
  std::vector<XPoly> quot(g.size());
  XPoly cur = p, rem;
  xpoly_clean(cur);
  while (!cur.empty()) {
    Exps lt = leading_monomial(cur);
    Rational c = cur[lt];
    bool reduced = false;
    for (size_t k = 0; k < g.size(); ++k) {
      Exps lg = leading_monomial(g[k]);
      if (!divides(lg, lt)) continue;
      XPoly factor = xpoly_term(exps_sub(lt, lg), c / g[k].at(lg));
      cur = xpoly_add(cur, xpoly_mul(factor, g[k]), -1);
      quot[k] = xpoly_add(quot[k], factor);
      reduced = true;
      break;
    }
    if (!reduced) {
      rem[lt] = c;
      cur.erase(lt);
    }
  }
  if (witness) {
    witness->assign(n_gens, XPoly{});
    for (size_t k = 0; k < g.size(); ++k)
      for (int i = 0; i < n_gens; ++i)
        (*witness)[i] = xpoly_add((*witness)[i], xpoly_mul(quot[k], rep[k][i]));
  }
  return rem;
}

bool GroebnerBasis::is_standard(const Exps& e) const {
  for (const auto& gk : g)
    if (divides(leading_monomial(gk), e)) return false;
  return true;
}

GroebnerBasis groebner(const std::vector<XPoly>& gens, int n_vars) {
  GroebnerBasis gb;
  gb.n_vars = n_vars;
  gb.n_gens = static_cast<int>(gens.size());
  const Exps zero(n_vars, 0);

  auto make_monic = [&](XPoly& p, std::vector<XPoly>& rep) {
    Rational lc = p.at(leading_monomial(p));
    Rational inv = 1 / lc;
    p = xpoly_scale(p, inv);
    for (auto& r : rep) r = xpoly_scale(r, inv);
  };

  for (int i = 0; i < gb.n_gens; ++i) {
    XPoly p = gens[i];
    xpoly_clean(p);
    if (p.empty()) continue;
    std::vector<XPoly> rep(gb.n_gens);
    rep[i] = xpoly_term(zero, 1);
    make_monic(p, rep);
    gb.g.push_back(p);
    gb.rep.push_back(rep);
  }

  std::deque<std::pair<size_t, size_t>> pairs;
  for (size_t j = 0; j < gb.g.size(); ++j)
    for (size_t i = 0; i < j; ++i) pairs.emplace_back(i, j);

  while (!pairs.empty()) {
    auto [i, j] = pairs.front();
    pairs.pop_front();
    Exps li = leading_monomial(gb.g[i]), lj = leading_monomial(gb.g[j]);
    Exps l = exps_lcm(li, lj);
    bool coprime = true;
    for (int v = 0; v < n_vars; ++v)
      if (li[v] && lj[v]) coprime = false;
    if (coprime) continue;
    XPoly mi = xpoly_term(exps_sub(l, li), 1), mj = xpoly_term(exps_sub(l, lj), 1);
    XPoly sp = xpoly_add(xpoly_mul(mi, gb.g[i]), xpoly_mul(mj, gb.g[j]), -1);
    std::vector<XPoly> rep(gb.n_gens);
    for (int v = 0; v < gb.n_gens; ++v)
      rep[v] = xpoly_add(xpoly_mul(mi, gb.rep[i][v]), xpoly_mul(mj, gb.rep[j][v]), -1);
    // reduce against current basis, tracking quotients through `rep`
    std::vector<XPoly> quot(gb.g.size());
    XPoly cur = sp, rem;
    while (!cur.empty()) {
      Exps lt = leading_monomial(cur);
      Rational c = cur[lt];
      bool red = false;
      for (size_t k = 0; k < gb.g.size(); ++k) {
        Exps lg = leading_monomial(gb.g[k]);
        if (!divides(lg, lt)) continue;
        XPoly factor = xpoly_term(exps_sub(lt, lg), c);
        cur = xpoly_add(cur, xpoly_mul(factor, gb.g[k]), -1);
        quot[k] = xpoly_add(quot[k], factor);
        red = true;
        break;
      }
      if (!red) {
        rem[lt] = c;
        cur.erase(lt);
      }
    }
    if (rem.empty()) continue;
    for (size_t k = 0; k < gb.g.size(); ++k)
      for (int v = 0; v < gb.n_gens; ++v)
        rep[v] = xpoly_add(rep[v], xpoly_mul(quot[k], gb.rep[k][v]), -1);
    make_monic(rem, rep);
    size_t idx = gb.g.size();
    gb.g.push_back(rem);
    gb.rep.push_back(rep);
    for (size_t k = 0; k < idx; ++k) pairs.emplace_back(k, idx);
  }

  // minimal basis
  std::vector<bool> keep(gb.g.size(), true);
  for (size_t a = 0; a < gb.g.size(); ++a)
    for (size_t b = 0; b < gb.g.size(); ++b) {
      if (a == b || !keep[b]) continue;
      Exps la = leading_monomial(gb.g[a]), lb = leading_monomial(gb.g[b]);
      if (divides(lb, la) && (la != lb || b < a)) {
        keep[a] = false;
        break;
      }
    }
  GroebnerBasis out;
  out.n_vars = n_vars;
  out.n_gens = gb.n_gens;
  for (size_t a = 0; a < gb.g.size(); ++a)
    if (keep[a]) {
      out.g.push_back(gb.g[a]);
      out.rep.push_back(gb.rep[a]);
    }
  // inter-reduce tails
  for (size_t a = 0; a < out.g.size(); ++a) {
    GroebnerBasis others;
    others.n_vars = n_vars;
    others.n_gens = out.n_gens;
    for (size_t b = 0; b < out.g.size(); ++b)
      if (b != a) {
        others.g.push_back(out.g[b]);
        others.rep.push_back(out.rep[b]);
      }
    Exps la = leading_monomial(out.g[a]);
    XPoly tail = out.g[a];
    tail.erase(la);
    std::vector<XPoly> w;
    XPoly rt = others.reduce(tail, &w);
    rt[la] = 1;
    out.g[a] = rt;
    for (int v = 0; v < out.n_gens; ++v) out.rep[a][v] = xpoly_add(out.rep[a][v], w[v], -1);
  }
  // sort by leading monomial (grlex ascending)
  std::vector<size_t> order(out.g.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return grlex_less(leading_monomial(out.g[a]), leading_monomial(out.g[b]));
  });
  GroebnerBasis sorted = out;
  for (size_t k = 0; k < order.size(); ++k) {
    sorted.g[k] = out.g[order[k]];
    sorted.rep[k] = out.rep[order[k]];
  }
  return sorted;
}

std::vector<std::string> MilnorData::labels() const {
  std::vector<std::string> out;
  for (const auto& e : basis) {
    PolyElement m = PolyElement::monomial(Mono{e, 0});
    out.push_back("[" + m.str(pot.n_vars) + "]");
  }
  return out;
}

MilnorData milnor_basis(const Potential& pot) {
  MilnorData md;
  md.pot = pot;
  std::vector<XPoly> gens;
  for (int i = 0; i < pot.n_vars; ++i) gens.push_back(xpoly_derivative(pot.s, i));
  md.gb = groebner(gens, pot.n_vars);
  const Exps zero(pot.n_vars, 0);
  if (md.gb.g.empty())
    throw InputError("non-isolated singularity: the Jacobian ideal is zero");
  std::vector<int> bound(pot.n_vars, -1);
  for (const auto& g : md.gb.g) {
    Exps lm = leading_monomial(g);
    int nz = 0, which = -1;
    for (int i = 0; i < pot.n_vars; ++i)
      if (lm[i]) {
        ++nz;
        which = i;
      }
    if (nz == 0) throw InputError("trivial Jacobian ring: the critical locus is empty");
    if (nz == 1 && (bound[which] < 0 || lm[which] < bound[which])) bound[which] = lm[which];
  }
  for (int i = 0; i < pot.n_vars; ++i)
    if (bound[i] < 0)
      throw InputError("non-isolated singularity: the Jacobian ring is infinite-dimensional");
  Exps cur(pot.n_vars, 0);
  auto rec = [&](auto&& self, int i) -> void {
    if (i == pot.n_vars) {
      if (md.gb.is_standard(cur)) md.basis.push_back(cur);
      return;
    }
    for (int d = 0; d < bound[i]; ++d) {
      cur[i] = d;
      self(self, i + 1);
    }
    cur[i] = 0;
  };
  rec(rec, 0);
  std::sort(md.basis.begin(), md.basis.end(), [](const Exps& a, const Exps& b) {
    int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a > b;
  });
  return md;
}

std::optional<std::vector<Rational>> quasi_homogeneous_weights(const Potential& pot) {
  const int n = pot.n_vars;
  std::vector<std::vector<Rational>> A;
  std::vector<Rational> b;
  for (const auto& [e, c] : pot.s) {
    std::vector<Rational> row(n);
    for (int i = 0; i < n; ++i) row[i] = e[i];
    A.push_back(row);
    b.push_back(1);
  }
  auto sol = solve_linear(A, b);
  if (!sol) return std::nullopt;
  // uniqueness: rank must be n
  int rank = 0;
  {
    auto M = A;
    const size_t rows = M.size();
    size_t r = 0;
    for (int c = 0; c < n && r < rows; ++c) {
      size_t p = r;
      while (p < rows && M[p][c] == 0) ++p;
      if (p == rows) continue;
      std::swap(M[p], M[r]);
      for (size_t q = r + 1; q < rows; ++q) {
        Rational f = M[q][c] / M[r][c];
        for (int k = c; k < n; ++k) M[q][k] -= f * M[r][k];
      }
      ++r;
    }
    rank = static_cast<int>(r);
  }
  if (rank != n) return std::nullopt;
  for (const auto& w : *sol)
    if (w <= 0) return std::nullopt;
  return sol;
}

// ---------------------------------------------------------------------------

struct Retract::Engine {
  MilnorData md;
  std::map<Exps, int> basis_index;
  bool multi = false;
  std::vector<long> W;  // integer weights
  long D = 0;           // integer weight of S

  std::mutex mu;
  std::map<Exps, std::vector<Rational>> nf_cache;
  std::map<Exps, PolyElement> s0_cache;
  std::map<Mono, PolyElement> sneg_cache;

  explicit Engine(MilnorData m) : md(std::move(m)) {
    for (int a = 0; a < md.mu(); ++a) basis_index[md.basis[a]] = a;
    multi = md.pot.n_vars > 1;
    if (multi) {
      auto w = quasi_homogeneous_weights(md.pot);
      if (!w)
        throw InputError(
            "multivariable potential is not quasi-homogeneous with positive weights; "
            "retract construction unsupported");
      mpz_class l = 1;
      for (const auto& q : *w) l = lcm(l, mpz_class(q.get_den()));
      D = l.get_si();
      for (const auto& q : *w) {
        Rational s = q * Rational(l);
        W.push_back(mpz_class(s.get_num()).get_si());
      }
    }
  }

  std::vector<Rational> nf(const Exps& e) {
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = nf_cache.find(e);
      if (it != nf_cache.end()) return it->second;
    }
    XPoly rem = md.gb.reduce(XPoly{{e, Rational(1)}});
    std::vector<Rational> v(md.mu(), Rational(0));
    for (const auto& [m, c] : rem) v.at(basis_index.at(m)) = c;
    std::lock_guard<std::mutex> lock(mu);
    nf_cache.emplace(e, v);
    return v;
  }

  PolyElement s0(const Exps& e) {
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = s0_cache.find(e);
      if (it != s0_cache.end()) return it->second;
    }
    const int n = md.pot.n_vars;
    std::vector<XPoly> q;
    md.gb.reduce(XPoly{{e, Rational(1)}}, &q);
    PolyElement r;
    for (int i = 0; i < n; ++i)
      r += PolyElement::from_xpoly(n, q[i]) * PolyElement::eta(n, i);
    std::lock_guard<std::mutex> lock(mu);
    s0_cache.emplace(e, r);
    return r;
  }

  long weight(const Mono& m) const {
    long w = 0;
    for (size_t i = 0; i < m.x.size(); ++i) w += W[i] * m.x[i];
    for (size_t i = 0; i < m.x.size(); ++i)
      if (m.eta & (1u << i)) w += D - W[i];
    return w;
  }

  std::vector<Mono> weight_piece(int k, long w) const {
    const int n = md.pot.n_vars;
    std::vector<Mono> out;
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (__builtin_popcount(mask) != k) continue;
      long rest = w;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) rest -= D - W[i];
      if (rest < 0) continue;
      Exps cur(n, 0);
      auto rec = [&](auto&& self, int i, long left) -> void {
        if (i == n) {
          if (left == 0) out.push_back(Mono{cur, mask});
          return;
        }
        for (int d = 0; d * W[i] <= left; ++d) {
          cur[i] = d;
          self(self, i + 1, left - d * W[i]);
        }
        cur[i] = 0;
      };
      rec(rec, 0, rest);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  PolyElement s_element(const PolyElement& x) {
    PolyElement r = PolyElement::zero_with_order(x.order());
    for (const auto& [m, c] : x.terms()) r += c * s_mono(m);
    return r;
  }

  PolyElement s_mono(const Mono& m) {
    if (m.ghost() == 0) return s0(m.x);
    if (!multi) return PolyElement();
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = sneg_cache.find(m);
      if (it != sneg_cache.end()) return it->second;
    }
    const int k = -m.ghost();
    const int n = md.pot.n_vars;
    PolyElement om = PolyElement::monomial(m);
    PolyElement b = om - s_element(classical_K(md.pot, om));
    PolyElement result;
    if (!b.is_zero()) {
      if (k + 1 > n) throw std::logic_error("s: nonzero residue in top ghost degree");
      std::vector<Mono> dom = weight_piece(k + 1, weight(m));
      std::vector<PolyElement> images;
      std::map<Mono, int> rows;
      for (const Mono& d : dom) {
        images.push_back(classical_K(md.pot, PolyElement::monomial(d)));
        for (const auto& [mm, c] : images.back().terms()) rows.emplace(mm, 0);
      }
      for (const auto& [mm, c] : b.terms()) rows.emplace(mm, 0);
      int ri = 0;
      for (auto& [mm, idx] : rows) idx = ri++;
      std::vector<std::vector<Rational>> A(rows.size(), std::vector<Rational>(dom.size()));
      std::vector<Rational> rhs(rows.size());
      for (size_t j = 0; j < dom.size(); ++j)
        for (const auto& [mm, c] : images[j].terms()) A[rows[mm]][j] = c.coeff(0);
      for (const auto& [mm, c] : b.terms()) rhs[rows[mm]] = c.coeff(0);
      auto sol = solve_linear(A, rhs);
      if (!sol) throw std::logic_error("s: K beta = b has no solution");
      for (size_t j = 0; j < dom.size(); ++j)
        if ((*sol)[j] != 0) result.add_term(dom[j], HPoly((*sol)[j]));
    }
    std::lock_guard<std::mutex> lock(mu);
    sneg_cache.emplace(m, result);
    return result;
  }
};

const MilnorData& Retract::milnor() const { return engine_->md; }
const Potential& Retract::potential() const { return engine_->md.pot; }
int Retract::mu() const { return engine_->md.mu(); }
int Retract::n_vars() const { return engine_->md.pot.n_vars; }

Retract::Retract(MilnorData md) : engine_(std::make_shared<Engine>(std::move(md))) {
  const auto& m = engine_->md;
  for (const auto& e : m.basis) f_.push_back(PolyElement::monomial(Mono{e, 0}));
}

PolyElement Retract::f(const HVec& v) const {
  PolyElement r;
  for (size_t a = 0; a < v.size(); ++a)
    if (!v[a].is_zero() || !v[a].exact()) r += v[a] * f_[a];
  return r;
}

HVec Retract::h(const PolyElement& x) const {
  HVec r(mu(), HPoly::zero_with_order(x.order()));
  for (const auto& [m, c] : x.terms()) {
    if (m.ghost() != 0) continue;
    auto v = engine_->nf(m.x);
    for (int a = 0; a < mu(); ++a)
      if (v[a] != 0) r[a] += c * v[a];
  }
  return r;
}

PolyElement Retract::s(const PolyElement& x) const {
  PolyElement r = engine_->s_element(x);
  if (!lambda_.empty()) {
    HVec hv = h(x);
    for (int a = 0; a < mu(); ++a)
      if (!hv[a].is_zero()) r -= hv[a] * lambda_[a];
  }
  return r;
}

Retract Retract::perturbed(const std::vector<PolyElement>& lambda) const {
  if (static_cast<int>(lambda.size()) != mu()) throw InputError("perturbation has wrong size");
  if (!lambda[0].is_zero()) throw InputError("perturbation must vanish on the unit");
  for (const auto& l : lambda)
    if (l.ghost_or(-1) != -1) throw InputError("perturbation must have ghost -1");
  Retract r = *this;
  r.lambda_ = lambda;
  for (int a = 0; a < mu(); ++a) r.f_[a] = f_[a] + classical_K(potential(), lambda[a]);
  return r;
}

Report verify_retract(const Retract& r, int max_x_degree) {
  Report rep;
  const auto& pot = r.potential();
  const int mu = r.mu();
  auto K = [&](const PolyElement& x) { return classical_K(pot, x); };
  bool ok = true;
  std::string w;
  auto note = [&](bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      w = msg;
    }
  };
  note(r.f(0).equals(PolyElement::one(pot.n_vars)), "f(1) != 1");
  for (int a = 0; a < mu; ++a) {
    HVec hf = r.h(r.f(a));
    note(hvec_is_zero(hvec_sub(hf, hvec_unit(mu, a))), "h f != id at e" + std::to_string(a));
    note(r.s(r.f(a)).is_zero(), "s f != 0 at e" + std::to_string(a));
    note(K(r.f(a)).is_zero(), "K f != 0 at e" + std::to_string(a));
  }
  rep.add("retract: f(1)=1, hf=id, sf=0, Kf=0", ok, w);
  ok = true;
  w.clear();
  for (const Mono& m : spanning_monomials(pot.n_vars, max_x_degree, pot.n_vars)) {
    PolyElement x = PolyElement::monomial(m);
    PolyElement lhs = r.f(r.h(x));
    PolyElement rhs = x - K(r.s(x)) - r.s(K(x));
    note(lhs.equals(rhs), "fh != 1 - Ks - sK on " + x.str());
    note(r.s(r.s(x)).is_zero(), "ss != 0 on " + x.str());
    note(hvec_is_zero(r.h(r.s(x))), "hs != 0 on " + x.str());
    note(hvec_is_zero(r.h(K(x))), "hK != 0 on " + x.str());
    if (!ok) break;
  }
  note(r.s(PolyElement::one(pot.n_vars)).is_zero(), "s(1) != 0");
  rep.add("retract: fh = 1 - Ks - sK, ss = hs = 0 on spanning set", ok, w);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

PolyElement K1(const PolyElement& x) { return -delta_op(x); }

}  // namespace

QuantizedRetract::QuantizedRetract(std::shared_ptr<const Retract> r, int order)
    : r_(std::move(r)), order_(order) {
  const int mu = r_->mu();
  f_.assign(order_ + 1, std::vector<PolyElement>(mu));
  kappa_.assign(order_ + 1, std::vector<HVec>(mu, hvec_zero(mu)));
  for (int a = 0; a < mu; ++a) f_[0][a] = r_->f(a);
  auto f_apply = [&](int n, const HVec& v) {
    PolyElement out;
    for (int b = 0; b < mu; ++b)
      if (!v[b].is_zero()) out += v[b] * f_[n][b];
    return out;
  };
  for (int n = 1; n <= order_; ++n)
    for (int a = 0; a < mu; ++a) {
      PolyElement g = K1(f_[n - 1][a]);
      for (int j = 1; j <= n - 1; ++j) g -= f_apply(n - j, kappa_[j][a]);
      kappa_[n][a] = r_->h(g);
      f_[n][a] = -r_->s(g);
    }
  f_exact_ = true;
  anomaly_free_ = true;
  for (int a = 0; a < mu; ++a) {
    if (order_ >= 1 && (!f_[1][a].is_zero() || !hvec_is_zero(kappa_[1][a]))) f_exact_ = false;
    for (int n = 1; n <= order_; ++n)
      if (!hvec_is_zero(kappa_[n][a])) anomaly_free_ = false;
  }
}

int QuantizedRetract::leading_anomaly() const {
  for (int n = 1; n <= order_; ++n)
    for (int a = 0; a < mu(); ++a)
      if (!hvec_is_zero(kappa_[n][a])) return n;
  return 0;
}

HVec QuantizedRetract::h_mono(int n, const Mono& m) const {
  if (n == 0) return r_->h(PolyElement::monomial(m));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = h_cache_.find({n, m});
    if (it != h_cache_.end()) return it->second;
  }
  PolyElement y = r_->s(PolyElement::monomial(m));
  HVec u = h_n(n - 1, K1(y));
  for (int j = 1; j <= n - 1; ++j) {
    HVec hy = h_n(n - j, y);
    for (int b = 0; b < mu(); ++b)
      if (!hy[b].is_zero()) axpy(u, -hy[b], kappa_[j][b]);
  }
  HVec out = hvec_scale(HPoly(-1), u);
  std::lock_guard<std::mutex> lock(mu_);
  h_cache_.emplace(std::make_pair(n, m), out);
  return out;
}

HVec QuantizedRetract::h_n(int n, const PolyElement& x) const {
  HVec r(mu(), HPoly::zero_with_order(x.order()));
  for (const auto& [m, c] : x.terms()) {
    HVec v = h_mono(n, m);
    for (int a = 0; a < mu(); ++a)
      if (!v[a].is_zero()) r[a] += c * v[a];
  }
  return r;
}

PolyElement QuantizedRetract::s_mono(int n, const Mono& m) const {
  if (n == 0) return r_->s(PolyElement::monomial(m));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = s_cache_.find({n, m});
    if (it != s_cache_.end()) return it->second;
  }
  PolyElement out = r_->s(delta_op(s_mono(n - 1, m)));
  std::lock_guard<std::mutex> lock(mu_);
  s_cache_.emplace(std::make_pair(n, m), out);
  return out;
}

PolyElement QuantizedRetract::s_n(int n, const PolyElement& x) const {
  PolyElement r = PolyElement::zero_with_order(x.order());
  for (const auto& [m, c] : x.terms()) r += c * s_mono(n, m);
  return r;
}

PolyElement QuantizedRetract::fhat(int a) const {
  if (f_exact_) return f_[0][a];
  PolyElement r = PolyElement::zero_with_order(order_);
  for (int n = 0; n <= order_; ++n) r += f_[n][a].shifted(n);
  return r.with_order(order_);
}

PolyElement QuantizedRetract::fhat(const HVec& v) const {
  PolyElement r;
  for (int a = 0; a < mu(); ++a)
    if (!v[a].is_zero() || !v[a].exact()) r += v[a] * fhat(a);
  return r;
}

HVec QuantizedRetract::hhat(const PolyElement& x) const {
  HVec r(mu(), HPoly::zero_with_order(std::min(x.order(), order_)));
  for (int n = 0; n <= order_; ++n) {
    HVec hn = h_n(n, x);
    for (int a = 0; a < mu(); ++a) r[a] += hn[a].shifted(n);
  }
  return r;
}

PolyElement QuantizedRetract::shat(const PolyElement& x) const {
  PolyElement r = PolyElement::zero_with_order(std::min(x.order(), order_));
  for (int n = 0; n <= order_; ++n) r += s_n(n, x).shifted(n);
  return r;
}

HVec QuantizedRetract::kappa(const HVec& v) const {
  HVec r(mu(), f_exact_ ? HPoly() : HPoly::zero_with_order(order_));
  if (f_exact_) {
    for (int a = 0; a < mu(); ++a) r[a] = r[a].with_order(hvec_order(v));
    return r;
  }
  for (int n = 1; n <= order_; ++n)
    for (int b = 0; b < mu(); ++b)
      if (!v[b].is_zero()) axpy(r, v[b].shifted(n), kappa_[n][b]);
  return r;
}

Report verify_quantized(const QuantizedRetract& q, int max_x_degree) {
  Report rep;
  const auto& pot = q.classical().potential();
  const int mu = q.mu();
  auto K = [&](const PolyElement& x) { return quantum_K(pot, x); };
  bool ok = true;
  std::string w;
  auto note = [&](bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      w = msg;
    }
  };
  note(q.fhat(0).equals(PolyElement::one(pot.n_vars)), "f^(1) != 1");
  note(hvec_is_zero(q.kappa(hvec_unit(mu, 0))), "kappa(1) != 0");
  for (int a = 0; a < mu; ++a) {
    HVec e = hvec_unit(mu, a);
    note(hvec_is_zero(hvec_sub(q.hhat(q.fhat(a)), e)), "h^ f^ != id at e" + std::to_string(a));
    note(q.shat(q.fhat(a)).is_zero(), "s^ f^ != 0 at e" + std::to_string(a));
    note(K(q.fhat(a)).equals(q.fhat(q.kappa(e))), "K f^ != f^ kappa at e" + std::to_string(a));
    note(hvec_is_zero(q.kappa(q.kappa(e))), "kappa^2 != 0 at e" + std::to_string(a));
  }
  rep.add("quantized retract: unit, h^f^ = id, s^f^ = 0, K f^ = f^ kappa, kappa^2 = 0", ok, w);
  ok = true;
  w.clear();
  for (const Mono& m : spanning_monomials(pot.n_vars, max_x_degree, pot.n_vars)) {
    PolyElement x = PolyElement::monomial(m);
    PolyElement lhs = q.fhat(q.hhat(x));
    PolyElement rhs = x - K(q.shat(x)) - q.shat(K(x));
    note(lhs.equals(rhs), "f^h^ != 1 - K s^ - s^ K on " + x.str() + ": " + (lhs - rhs).str());
    note(q.shat(q.shat(x)).is_zero(), "s^s^ != 0 on " + x.str());
    note(hvec_is_zero(q.hhat(q.shat(x))), "h^s^ != 0 on " + x.str());
    note(hvec_is_zero(hvec_sub(q.hhat(K(x)), q.kappa(q.hhat(x)))), "h^K != kappa h^ on " + x.str());
    if (!ok) break;
  }
  rep.add("quantized retract: f^h^ = 1 - K s^ - s^ K, s^s^ = h^s^ = 0, h^K = kappa h^", ok, w);
  return rep;
}

// ---------------------------------------------------------------------------

HVec RetractComparison::xi_hat(int a) const {
  HVec r = hvec_zero(static_cast<int>(xi[0].size()));
  const int N = static_cast<int>(xi.size()) - 1;
  for (int n = 0; n <= N; ++n) axpy(r, HPoly::hbar(n), xi[n][a]);
  for (auto& c : r) c = c.with_order(N);
  return r;
}

PolyElement RetractComparison::lambda_hat(int a) const {
  const int N = static_cast<int>(lambda.size()) - 1;
  PolyElement r = PolyElement::zero_with_order(N);
  for (int n = 0; n <= N; ++n) r += lambda[n][a].shifted(n);
  return r;
}

RetractComparison compare_retracts(const QuantizedRetract& q, const QuantizedRetract& qp) {
  const int mu = q.mu();
  const int N = std::min(q.order(), qp.order());
  if (qp.mu() != mu) throw InputError("retracts have different H dimensions");
  const Retract& r = q.classical();
  RetractComparison out;
  out.xi.assign(N + 1, std::vector<HVec>(mu, hvec_zero(mu)));
  out.lambda.assign(N + 1, std::vector<PolyElement>(mu));
  for (int a = 0; a < mu; ++a) {
    out.xi[0][a] = hvec_unit(mu, a);
    out.lambda[0][a] = r.s(qp.f_n(0, a) - q.f_n(0, a));
  }
  auto f_apply = [&](const QuantizedRetract& qq, int n, const HVec& v) {
    PolyElement s;
    for (int b = 0; b < mu; ++b)
      if (!v[b].is_zero()) s += v[b] * qq.f_n(n, b);
    return s;
  };
  auto lambda_apply = [&](int n, const HVec& v) {
    PolyElement s;
    for (int b = 0; b < mu; ++b)
      if (!v[b].is_zero()) s += v[b] * out.lambda[n][b];
    return s;
  };
  for (int n = 1; n <= N; ++n)
    for (int a = 0; a < mu; ++a) {
      PolyElement w = qp.f_n(n, a) - q.f_n(n, a);
      for (int l = 1; l <= n - 1; ++l) w -= f_apply(q, n - l, out.xi[l][a]);
      // K^(1) = -Delta is the only nonzero correction of K
      w += delta_op(out.lambda[n - 1][a]);
      for (int l = 1; l <= n; ++l) w -= lambda_apply(n - l, qp.kappa_n(l, a));
      out.xi[n][a] = r.h(w);
      out.lambda[n][a] = r.s(w);
    }

  bool ok = true;
  std::string wit;
  for (int a = 0; a < mu && ok; ++a) {
    HVec xa = out.xi_hat(a);
    PolyElement lhs = qp.fhat(a);
    PolyElement rhs = q.fhat(xa) + quantum_K(r.potential(), out.lambda_hat(a));
    HVec kp = qp.kappa(hvec_unit(mu, a));
    for (int b = 0; b < mu; ++b)
      if (!kp[b].is_zero()) rhs += kp[b] * out.lambda_hat(b);
    if (!lhs.equals(rhs)) {
      ok = false;
      wit = "f'^ != f^ xi + K lambda + lambda kappa' at e" + std::to_string(a) + ": " +
            (lhs - rhs).str();
    }
  }
  out.report.add("comparison: f'^ = f^ xi + K lambda + lambda kappa'", ok, wit);

  ok = true;
  wit.clear();
  for (int a = 0; a < mu && ok; ++a) {
    HVec lhs = q.kappa(out.xi_hat(a));
    HVec kp = qp.kappa(hvec_unit(mu, a));
    HVec rhs = hvec_zero(mu);
    for (int b = 0; b < mu; ++b)
      if (!kp[b].is_zero()) axpy(rhs, kp[b], out.xi_hat(b));
    if (!hvec_is_zero(hvec_sub(lhs, rhs))) {
      ok = false;
      wit = "kappa xi != xi kappa' at e" + std::to_string(a);
    }
  }
  out.report.add("comparison: kappa' = xi^-1 kappa xi", ok, wit);

  int la = q.leading_anomaly(), lb = qp.leading_anomaly();
  ok = la == lb;
  if (ok && la > 0)
    for (int a = 0; a < mu; ++a)
      if (!hvec_is_zero(hvec_sub(q.kappa_n(la, a), qp.kappa_n(la, a)))) ok = false;
  out.report.add("comparison: leading anomaly invariant", ok,
                 ok ? "" : "leading anomalies at orders " + std::to_string(la) + " and " +
                               std::to_string(lb));
  return out;
}

CFamily nabla_inv_h(const QuantizedRetract& q, const CFamily& omega, const TwistFn& k_tw) {
  const Retract& r = q.classical();
  const auto& pot = r.potential();
  CFamily xi;
  for (const auto& [k, v] : omega) {
    PolyElement s = r.s(v.classical());
    if (!s.is_zero()) xi.emplace(k, s);
  }
  CFamily out;
  for (const auto& [k, v] : omega) {
    PolyElement cl = v.classical();
    PolyElement t = v - q.fhat(r.h(cl)) - k_tw(xi, k) - r.s(classical_K(pot, cl));
    PolyElement res = -t.h_divide(1);
    out.emplace(k, res);
  }
  return out;
}

}  // namespace bvc
