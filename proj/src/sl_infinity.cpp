#include "bvc/sl_infinity.hpp"

#include <sstream>

namespace bvc {

HVec hvec_zero(int dim) { return HVec(dim); }

HVec hvec_unit(int dim, int i) {
  HVec v(dim);
  v[i] = HPoly(1);
  return v;
}

void axpy(HVec& y, const HPoly& a, const HVec& x) {
  if (y.size() < x.size()) y.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    if (!x[i].is_zero() || !x[i].exact()) y[i] += a * x[i];
}

HVec hvec_scale(const HPoly& a, const HVec& x) {
  HVec r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = a * x[i];
  return r;
}

HVec hvec_add(const HVec& a, const HVec& b) {
  HVec r = a;
  axpy(r, HPoly(1), b);
  return r;
}

HVec hvec_sub(const HVec& a, const HVec& b) {
  HVec r = a;
  axpy(r, HPoly(-1), b);
  return r;
}

bool hvec_is_zero(const HVec& v) {
  for (const auto& c : v)
    if (!c.is_zero()) return false;
  return true;
}

int hvec_order(const HVec& v) {
  int o = kExact;
  for (const auto& c : v) o = std::min(o, c.order());
  return o;
}

std::string hvec_str(const HVec& v, const std::vector<std::string>& labels) {
  std::ostringstream os;
  bool first = true;
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i].is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    std::string name = i < labels.size() ? labels[i] : "e" + std::to_string(i);
    os << "(" << v[i].str() << ")*" << name;
  }
  return first ? "0" : os.str();
}

Slot Slot::basis(int i, int sign) {
  Slot s;
  s.terms.emplace_back(i, HPoly(sign));
  return s;
}

Slot Slot::from_vec(const HVec& v) {
  Slot s;
  for (size_t i = 0; i < v.size(); ++i)
    if (!v[i].is_zero()) s.terms.emplace_back(static_cast<int>(i), v[i]);
  return s;
}

void SymMaps::set(const Key& canonical, const HVec& value) {
  const int n = static_cast<int>(canonical.size());
  if (n > max_arity()) by_arity.resize(n + 1);
  by_arity[n][canonical] = value;
}

HVec SymMaps::at(Key tuple) const {
  const int n = static_cast<int>(tuple.size());
  if (n == 0 || n > max_arity()) return hvec_zero(tgt_dim);
  int s = canonicalize(tuple, src_ghosts);
  if (s == 0) return hvec_zero(tgt_dim);
  auto it = by_arity[n].find(tuple);
  if (it == by_arity[n].end()) return hvec_zero(tgt_dim);
  return s > 0 ? it->second : hvec_scale(HPoly(-1), it->second);
}

HVec SymMaps::at_slots(const std::vector<Slot>& slots) const {
  HVec out = hvec_zero(tgt_dim);
  const int n = static_cast<int>(slots.size());
  if (n == 0 || n > max_arity()) return out;
  Key tuple(n);
  auto rec = [&](auto&& self, int j, const HPoly& coef) -> void {
    if (j == n) {
      axpy(out, coef, at(tuple));
      return;
    }
    for (const auto& [i, c] : slots[j].terms) {
      tuple[j] = i;
      self(self, j + 1, coef * c);
    }
  };
  rec(rec, 0, HPoly(1));
  return out;
}

SLInfStructure SLInfStructure::empty(const std::vector<int>& ghosts, int max_arity) {
  SLInfStructure s;
  s.ops.src_ghosts = ghosts;
  s.ops.tgt_dim = static_cast<int>(ghosts.size());
  s.ops.by_arity.resize(max_arity + 1);
  return s;
}

namespace {

std::vector<int> parities_of(const Key& v, const std::vector<int>& ghosts) {
  std::vector<int> d(v.size());
  for (size_t i = 0; i < v.size(); ++i) d[i] = parity(ghosts[v[i]]);
  return d;
}

Key sub_key(const Key& v, const std::vector<int>& block) {
  Key k;
  for (int q : block) k.push_back(v[q]);
  return k;
}

// sum over (p,i) of eps * outer_{|p|}(J v_B1, ..., inner(v_Bi), v_B(i+1), ...)
// restricted by `keep(p)`.
template <class Inner, class Keep>
HVec insertion_sum(const SymMaps& outer, const Key& v, const std::vector<int>& ghosts,
                   Inner inner, Keep keep) {
  HVec acc = hvec_zero(outer.tgt_dim);
  const int n = static_cast<int>(v.size());
  auto deg = parities_of(v, ghosts);
  for (const Partition& p : enumerate_partitions(n)) {
    if (!keep(p)) continue;
    int eps = koszul_sign(p, deg);
    for (int bi : insertion_blocks(p)) {
      HVec in = inner(sub_key(v, p.blocks[bi]));
      if (hvec_is_zero(in)) continue;
      std::vector<Slot> slots;
      for (int j = 0; j < p.size(); ++j) {
        if (j == bi) {
          slots.push_back(Slot::from_vec(in));
        } else {
          int e = v[p.blocks[j][0]];
          slots.push_back(Slot::basis(e, j < bi ? j_sign(ghosts[e]) : 1));
        }
      }
      axpy(acc, HPoly(eps), outer.at_slots(slots));
    }
  }
  return acc;
}

// sum over p (filtered) of eps * outer_{|p|}(phi(v_B1), ..., phi(v_B|p|))
template <class Phi, class Keep>
HVec composition_sum(const SymMaps& outer, const Key& v, const std::vector<int>& ghosts,
                     Phi phi, Keep keep) {
  HVec acc = hvec_zero(outer.tgt_dim);
  const int n = static_cast<int>(v.size());
  auto deg = parities_of(v, ghosts);
  for (const Partition& p : enumerate_partitions(n)) {
    if (!keep(p)) continue;
    if (p.size() > outer.max_arity()) continue;
    int eps = koszul_sign(p, deg);
    std::vector<Slot> slots;
    bool zero = false;
    for (const auto& b : p.blocks) {
      HVec x = phi(sub_key(v, b));
      if (hvec_is_zero(x)) {
        zero = true;
        break;
      }
      slots.push_back(Slot::from_vec(x));
    }
    if (zero) continue;
    axpy(acc, HPoly(eps), outer.at_slots(slots));
  }
  return acc;
}

HVec apply_matrix(const std::vector<HVec>& cols, const HVec& x, int tgt_dim) {
  HVec r = hvec_zero(tgt_dim);
  for (size_t i = 0; i < x.size(); ++i)
    if (!x[i].is_zero()) axpy(r, x[i], cols[i]);
  return r;
}

std::string describe(const std::string& what, int n, const Key& v, const HVec& r) {
  return what + " arity " + std::to_string(n) + " at " + key_str(v) + ": " + hvec_str(r);
}

}  // namespace

RelationReport verify_sl_infinity(const SLInfStructure& s, int n_max) {
  RelationReport rep;
  const auto& gh = s.ghosts();
  const int dim = s.dim();
  auto fail = [&](int n, std::string msg) {
    if (rep.pass || n < rep.first_failing_arity) rep.first_failing_arity = n;
    rep.pass = false;
    if (rep.violations.size() < 20) rep.violations.push_back(std::move(msg));
  };
  // ghost degree of each operation
  for (int n = 1; n <= s.ops.max_arity(); ++n)
    for (const auto& [k, val] : s.ops.by_arity[n]) {
      int g = 1;
      for (int i : k) g += gh[i];
      for (int r = 0; r < dim; ++r)
        if (!val[r].is_zero() && gh[r] != g)
          fail(n, describe("ghost degree", n, k, val));
    }
  for (int n = 1; n <= n_max; ++n) {
    for (const Key& v : symmetric_keys(dim, n, gh)) {
      HVec r = insertion_sum(s.ops, v, gh, [&](const Key& b) { return s.ops.at(b); },
                             [](const Partition&) { return true; });
      if (!hvec_is_zero(r)) fail(n, describe("relation", n, v, r));
      if (s.unit) {
        Key w = v;
        w.push_back(*s.unit);
        if (static_cast<int>(w.size()) <= n_max) {
          HVec u = s.ops.at(w);
          if (!hvec_is_zero(u)) fail(n + 1, describe("unit", n + 1, w, u));
        }
      }
    }
  }
  return rep;
}

CoderivationReport coderivation_square(const SLInfStructure& s, int n_max) {
  using Word = std::map<Key, HPoly>;
  const auto& gh = s.ghosts();
  auto D = [&](const Word& in) {
    Word out;
    for (const auto& [w, c] : in) {
      const int n = static_cast<int>(w.size());
      auto deg = parities_of(w, gh);
      for (const Partition& p : enumerate_partitions(n)) {
        int eps = koszul_sign(p, deg);
        for (int bi : insertion_blocks(p)) {
          HVec val = s.ops.at(sub_key(w, p.blocks[bi]));
          for (int r = 0; r < s.dim(); ++r) {
            if (val[r].is_zero()) continue;
            Key seq;
            int sign = eps;
            for (int j = 0; j < p.size(); ++j) {
              if (j == bi) {
                seq.push_back(r);
              } else {
                int e = w[p.blocks[j][0]];
                if (j < bi) sign *= j_sign(gh[e]);
                seq.push_back(e);
              }
            }
            int cs = canonicalize(seq, gh);
            if (cs == 0) continue;
            HPoly add = c * val[r] * Rational(sign * cs);
            auto it = out.find(seq);
            if (it == out.end())
              out.emplace(seq, add);
            else
              it->second += add;
          }
        }
      }
    }
    for (auto it = out.begin(); it != out.end();)
      it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
  };
  CoderivationReport rep;
  for (int n = 1; n <= n_max; ++n)
    for (const Key& v : symmetric_keys(s.dim(), n, gh)) {
      Word w{{v, HPoly(1)}};
      if (!D(D(w)).empty()) {
        rep.square_zero = false;
        rep.first_failing_length = n;
        return rep;
      }
    }
  return rep;
}

RelationReport verify_morphism(const SLInfMorphism& phi, const SLInfStructure& src,
                               const SLInfStructure& tgt, int n_max) {
  RelationReport rep;
  const auto& gh = src.ghosts();
  for (int n = 1; n <= n_max; ++n)
    for (const Key& v : symmetric_keys(src.dim(), n, gh)) {
      HVec lhs = composition_sum(tgt.ops, v, gh, [&](const Key& b) { return phi.maps.at(b); },
                                 [](const Partition&) { return true; });
      HVec rhs = insertion_sum(phi.maps, v, gh, [&](const Key& b) { return src.ops.at(b); },
                               [](const Partition&) { return true; });
      HVec d = hvec_sub(lhs, rhs);
      if (!hvec_is_zero(d)) {
        if (rep.pass) rep.first_failing_arity = n;
        rep.pass = false;
        if (rep.violations.size() < 20) rep.violations.push_back(describe("morphism", n, v, d));
      }
    }
  return rep;
}

SLInfMorphism compose_morphisms(const SLInfMorphism& second, const SLInfMorphism& first,
                                int n_max) {
  SLInfMorphism out;
  out.maps.src_ghosts = first.maps.src_ghosts;
  out.maps.tgt_dim = second.maps.tgt_dim;
  out.tgt_ghosts = second.tgt_ghosts;
  out.maps.by_arity.resize(n_max + 1);
  const auto& gh = first.maps.src_ghosts;
  for (int n = 1; n <= n_max; ++n)
    for (const Key& v : symmetric_keys(static_cast<int>(gh.size()), n, gh)) {
      HVec val = composition_sum(second.maps, v, gh,
                                 [&](const Key& b) { return first.maps.at(b); },
                                 [](const Partition&) { return true; });
      if (!hvec_is_zero(val)) out.maps.set(v, val);
    }
  return out;
}

MinimalModel minimal_model(const SLInfStructure& s, const LinearRetract& r, int n_max) {
  const int dv = s.dim();
  const int dh = static_cast<int>(r.h_ghosts.size());
  const auto& vg = s.ghosts();
  const auto& hg = r.h_ghosts;
  if (static_cast<int>(r.f.size()) != dh || static_cast<int>(r.h.size()) != dv ||
      static_cast<int>(r.s.size()) != dv)
    throw InputError("retract data has inconsistent dimensions");

  // d = l_1 as columns
  std::vector<HVec> d(dv);
  for (int v = 0; v < dv; ++v) d[v] = s.ops.at(Key{v});
  auto D = [&](const HVec& x) { return apply_matrix(d, x, dv); };
  auto F = [&](const HVec& x) { return apply_matrix(r.f, x, dv); };
  auto Hm = [&](const HVec& x) { return apply_matrix(r.h, x, dh); };
  auto Sm = [&](const HVec& x) { return apply_matrix(r.s, x, dv); };

  for (int a = 0; a < dh; ++a)
    if (!hvec_is_zero(hvec_sub(Hm(F(hvec_unit(dh, a))), hvec_unit(dh, a))))
      throw InputError("retract: h f != id");
  for (int v = 0; v < dv; ++v) {
    HVec e = hvec_unit(dv, v);
    HVec lhs = F(Hm(e));
    HVec rhs = hvec_sub(hvec_sub(e, D(Sm(e))), Sm(D(e)));
    if (!hvec_is_zero(hvec_sub(lhs, rhs))) throw InputError("retract: f h != 1 - ds - sd");
    if (!hvec_is_zero(Sm(Sm(e)))) throw InputError("retract: s s != 0");
    if (!hvec_is_zero(Hm(Sm(e)))) throw InputError("retract: h s != 0");
  }
  for (int a = 0; a < dh; ++a)
    if (!hvec_is_zero(Sm(F(hvec_unit(dh, a))))) throw InputError("retract: s f != 0");

  MinimalModel mm;
  mm.lhat = SLInfStructure::empty(hg, n_max);
  mm.phi.maps.src_ghosts = hg;
  mm.phi.maps.tgt_dim = dv;
  mm.phi.maps.by_arity.resize(n_max + 1);
  mm.phi.tgt_ghosts = vg;
  for (int a = 0; a < dh; ++a) {
    HVec l1 = Hm(D(r.f[a]));
    if (!hvec_is_zero(l1)) mm.lhat.ops.set(Key{a}, l1);
    mm.phi.maps.set(Key{a}, r.f[a]);
  }
  for (int n = 2; n <= n_max; ++n) {
    for (const Key& v : symmetric_keys(dh, n, hg)) {
      HVec L = composition_sum(s.ops, v, hg, [&](const Key& b) { return mm.phi.maps.at(b); },
                               [](const Partition& p) { return p.size() != 1; });
      HVec corr = insertion_sum(
          mm.phi.maps, v, hg, [&](const Key& b) { return mm.lhat.ops.at(b); },
          [n](const Partition& p) { return p.size() != 1 && p.size() != n; });
      L = hvec_sub(L, corr);
      HVec lh = Hm(L);
      HVec ph = hvec_scale(HPoly(-1), Sm(L));
      if (!hvec_is_zero(lh)) mm.lhat.ops.set(v, lh);
      if (!hvec_is_zero(ph)) mm.phi.maps.set(v, ph);
    }
  }
  return mm;
}

PolyElement correlator(const CFamilyLookup& phi, const Key& v, const std::vector<int>& ghosts) {
  const int n = static_cast<int>(v.size());
  auto deg = parities_of(v, ghosts);
  PolyElement acc;
  for (const Partition& p : enumerate_partitions(n)) {
    int eps = koszul_sign(p, deg);
    PolyElement term;
    for (int j = 0; j < p.size(); ++j) {
      PolyElement f = phi(sub_key(v, p.blocks[j]));
      term = j == 0 ? f : term * f;
    }
    acc += (HPoly::minus_hbar(n - p.size()) * Rational(eps)) * term;
  }
  return acc;
}

MomentCumulantReport moments_cumulants_check(const Expectation& c, const CFamilyLookup& phi,
                                             const std::vector<int>& ghosts, int dim,
                                             int n_max) {
  MomentCumulantReport rep;
  DescendantMorphism<HPoly> chi(c.rule);
  std::map<Key, HPoly> chiV;
  auto chi_v = [&](const Key& u) -> HPoly {
    Key k = u;
    int sg = canonicalize(k, ghosts);
    if (sg == 0) return HPoly(0);
    auto it = chiV.find(k);
    if (it == chiV.end()) {
      const int m = static_cast<int>(k.size());
      auto deg = parities_of(k, ghosts);
      HPoly acc;
      for (const Partition& p : enumerate_partitions(m)) {
        int eps = koszul_sign(p, deg);
        std::vector<PolyElement> xs;
        bool zero = false;
        for (const auto& b : p.blocks) {
          xs.push_back(phi(sub_key(k, b)));
          if (xs.back().is_zero()) zero = true;
        }
        if (zero) continue;
        acc += HPoly(eps) * chi(xs);
      }
      it = chiV.emplace(k, acc).first;
    }
    return sg > 0 ? it->second : -it->second;
  };
  for (int n = 1; n <= n_max; ++n)
    for (const Key& v : symmetric_keys(dim, n, ghosts)) {
      HPoly mu = c(correlator(phi, v, ghosts));
      HPoly rhs;
      try {
        auto deg = parities_of(v, ghosts);
        for (const Partition& p : enumerate_partitions(n)) {
          int eps = koszul_sign(p, deg);
          HPoly term(1);
          for (const auto& b : p.blocks) term *= chi_v(sub_key(v, b));
          rhs += HPoly::minus_hbar(n - p.size()) * Rational(eps) * term;
        }
      } catch (const DescendantDivisibilityError& e) {
        rep.descendant_ok = false;
        rep.incompatibility_arity = e.arity;
        rep.detail = e.what();
        return rep;
      }
      if (!mu.equals(rhs)) {
        rep.pass = false;
        rep.detail = "arity " + std::to_string(n) + " at " + key_str(v) + ": mu = " +
                     mu.str() + ", cumulant side = " + rhs.str();
        return rep;
      }
    }
  return rep;
}

}  // namespace bvc
