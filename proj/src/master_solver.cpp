#include "bvc/master_solver.hpp"

#include <sstream>

namespace bvc {

namespace {

PolyElement scaled(const HPoly& c, const PolyElement& x) { return c * x; }
HVec scaled(const HPoly& c, const HVec& x) { return hvec_scale(c, x); }
void add_to(PolyElement& a, const PolyElement& b) { a += b; }
void add_to(HVec& a, const HVec& b) { axpy(a, HPoly(1), b); }
bool is_zero(const PolyElement& x) { return x.is_zero(); }
bool is_zero(const HVec& x) { return hvec_is_zero(x); }

Key sub_key(const Key& v, const std::vector<int>& block) {
  Key k;
  for (int q : block) k.push_back(v[q]);
  return k;
}

std::vector<int> parities_of(const Key& v, const std::vector<int>& ghosts) {
  std::vector<int> d(v.size());
  for (size_t i = 0; i < v.size(); ++i) d[i] = parity(ghosts[v[i]]);
  return d;
}

int j_sign_of(const Key& k, const std::vector<int>& ghosts) {
  int s = 1;
  for (int i : k) s *= j_sign(ghosts[i]);
  return s;
}

// Multilinear evaluation of `at(tuple)` over slots.
template <class V, class AtFn>
V multilinear(const std::vector<Slot>& slots, AtFn at, const V& zero) {
  V out = zero;
  const int n = static_cast<int>(slots.size());
  Key tuple(n);
  auto rec = [&](auto&& self, int j, const HPoly& coef) -> void {
    if (j == n) {
      V val = at(tuple);
      if (!is_zero(val)) add_to(out, scaled(coef, val));
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

// Splits a block of a flat tuple into (first |B|-2, last 2) for split families.
std::pair<Key, Key> split_block(const Key& v, const std::vector<int>& block) {
  Key first, last;
  const size_t k = block.size();
  for (size_t j = 0; j + 2 < k; ++j) first.push_back(v[block[j]]);
  last.push_back(v[block[k - 2]]);
  last.push_back(v[block[k - 1]]);
  return {first, last};
}

bool others_singletons_last(const Partition& p) {
  const int n = p.n();
  return static_cast<int>(p.blocks.back().size()) == n - p.size() + 1;
}

void record(Report& rep, const std::string& name, bool& ok, std::string& wit) {
  rep.add(name, ok, wit);
  ok = true;
  wit.clear();
}

}  // namespace

template <class V>
V SymFamily<V>::at(Key tuple) const {
  const int n = static_cast<int>(tuple.size());
  if (!has_arity(n)) return zero;
  int s = canonicalize(tuple, ghosts);
  if (s == 0) return zero;
  auto it = by_arity[n].find(tuple);
  if (it == by_arity[n].end()) return zero;
  return s > 0 ? it->second : scaled(HPoly(-1), it->second);
}

template <class V>
V SplitFamily<V>::at(const Key& first, const Key& last2) const {
  Key a = first, b = last2;
  const int n = static_cast<int>(a.size() + b.size());
  if (n >= static_cast<int>(by_arity.size())) return zero;
  int s = canonicalize(a, ghosts) * canonicalize(b, ghosts);
  if (s == 0) return zero;
  a.insert(a.end(), b.begin(), b.end());
  auto it = by_arity[n].find(a);
  if (it == by_arity[n].end()) return zero;
  return s > 0 ? it->second : scaled(HPoly(-1), it->second);
}

template <class V>
V SplitFamily<V>::at_flat(const Key& flat) const {
  const size_t n = flat.size();
  Key first(flat.begin(), flat.end() - 2), last(flat.end() - 2, flat.end());
  (void)n;
  return at(first, last);
}

template struct SymFamily<PolyElement>;
template struct SymFamily<HVec>;
template struct SplitFamily<PolyElement>;
template struct SplitFamily<HVec>;

std::vector<Key> split_keys(int dim, int n, const std::vector<int>& ghosts) {
  std::vector<Key> out;
  for (const Key& a : symmetric_keys(dim, n - 2, ghosts))
    for (const Key& b : symmetric_keys(dim, 2, ghosts)) {
      Key k = a;
      k.insert(k.end(), b.begin(), b.end());
      out.push_back(k);
    }
  return out;
}

MasterSolver::MasterSolver(const QuantizedRetract& q, int n_max) : q_(&q), n_max_(n_max) {
  if (n_max < 1) throw InputError("n_max must be at least 1");
  if (n_max > config().arity_cap)
    throw ResourceError("n_max " + std::to_string(n_max) + " exceeds the arity cap " +
                        std::to_string(config().arity_cap));
  const auto& md = q.classical().milnor();
  for (const auto& e : md.basis) {
    (void)e;
    ghosts_.push_back(0);
  }
  const int mu = q.mu();
  for (auto* f : {&l0_.phi0, &l0_.eta_m1, &l0_.omega0, &l0_.L}) {
    f->ghosts = ghosts_;
    f->ensure(n_max);
  }
  for (auto* f : {&l0_.pi0, &l0_.lhat, &l0_.varpi1}) {
    f->ghosts = ghosts_;
    f->zero = hvec_zero(mu);
    f->ensure(n_max);
  }
  for (auto* f : {&l1_.phi_m1, &l1_.eta_m2, &l1_.omega_m1}) {
    f->ghosts = ghosts_;
    f->ensure(n_max);
  }
  for (auto* f : {&l1_.pi_m1, &l1_.mhat, &l1_.varpi0}) {
    f->ghosts = ghosts_;
    f->zero = hvec_zero(mu);
    f->ensure(n_max);
  }
  l0_.n_max = l1_.n_max = n_max;
  l0_.ghosts = ghosts_;
}

PolyElement MasterSolver::descendant(const std::vector<PolyElement>& args) const {
  return descendant_l(q_->classical().potential(), args);
}

// bold K Xi(v) - (-1)^{|Xi|} sum_j Xi(Jv_1, ..., kappa v_j, ...)
PolyElement MasterSolver::k_hc(const CFamily& xi, const Key& key, int map_ghost,
                              bool split) const {
  const auto& pot = q_->classical().potential();
  PolyElement out;
  auto it = xi.find(key);
  if (it != xi.end()) out = quantum_K(pot, it->second);
  if (q_->anomaly_free()) return out;
  const int n = static_cast<int>(key.size());
  const int mu = q_->mu();
  PolyElement ins;
  for (int j = 0; j < n; ++j) {
    HVec kv = q_->kappa(hvec_unit(mu, key[j]));
    std::vector<Slot> slots;
    for (int i = 0; i < n; ++i) {
      if (i == j) slots.push_back(Slot::from_vec(kv));
      else slots.push_back(Slot::basis(key[i], i < j ? j_sign(ghosts_[key[i]]) : 1));
    }
    ins += multilinear(slots,
                       [&](const Key& t) {
                         Key c = t;
                         int s;
                         if (split) {
                           Key a(t.begin(), t.end() - 2), b(t.end() - 2, t.end());
                           s = canonicalize(a, ghosts_) * canonicalize(b, ghosts_);
                           c = a;
                           c.insert(c.end(), b.begin(), b.end());
                         } else {
                           s = canonicalize(c, ghosts_);
                         }
                         if (s == 0) return PolyElement();
                         auto f = xi.find(c);
                         if (f == xi.end()) return PolyElement();
                         return s > 0 ? f->second : -f->second;
                       },
                       PolyElement());
  }
  if (parity(map_ghost)) out += ins;
  else out -= ins;
  return out;
}

HVec MasterSolver::kappa_hh(const SymFamily<HVec>& fam, int n, const Key& key) const {
  const int mu = q_->mu();
  HVec out = q_->kappa(fam.at(key));
  if (q_->anomaly_free()) return out;
  for (int j = 0; j < n; ++j) {
    HVec kv = q_->kappa(hvec_unit(mu, key[j]));
    std::vector<Slot> slots;
    for (int i = 0; i < n; ++i) {
      if (i == j) slots.push_back(Slot::from_vec(kv));
      else slots.push_back(Slot::basis(key[i], i < j ? j_sign(ghosts_[key[i]]) : 1));
    }
    HVec ins = multilinear(slots, [&](const Key& t) { return fam.at(t); }, hvec_zero(mu));
    out = hvec_sub(out, ins);  // |pi| = 0
  }
  return out;
}

HVec MasterSolver::kappa_split(const SplitFamily<HVec>& fam, int n, const Key& key) const {
  const int mu = q_->mu();
  HVec out = q_->kappa(fam.at_flat(key));
  if (q_->anomaly_free()) return out;
  for (int j = 0; j < n; ++j) {
    HVec kv = q_->kappa(hvec_unit(mu, key[j]));
    std::vector<Slot> slots;
    for (int i = 0; i < n; ++i) {
      if (i == j) slots.push_back(Slot::from_vec(kv));
      else slots.push_back(Slot::basis(key[i], i < j ? j_sign(ghosts_[key[i]]) : 1));
    }
    HVec ins = multilinear(slots, [&](const Key& t) { return fam.at_flat(t); }, hvec_zero(mu));
    out = hvec_add(out, ins);  // |pi^{-1}| = -1
  }
  return out;
}

PolyElement MasterSolver::k_split(const SplitFamily<PolyElement>& fam, int n,
                                  const Key& key) const {
  const auto& pot = q_->classical().potential();
  PolyElement out = quantum_K(pot, fam.at_flat(key));
  if (q_->anomaly_free()) return out;
  const int mu = q_->mu();
  for (int j = 0; j < n; ++j) {
    HVec kv = q_->kappa(hvec_unit(mu, key[j]));
    std::vector<Slot> slots;
    for (int i = 0; i < n; ++i) {
      if (i == j) slots.push_back(Slot::from_vec(kv));
      else slots.push_back(Slot::basis(key[i], i < j ? j_sign(ghosts_[key[i]]) : 1));
    }
    out += multilinear(slots, [&](const Key& t) { return fam.at_flat(t); }, PolyElement());
  }
  return out;
}

const LevelZero& MasterSolver::solve_level_zero() {
  if (l0_done_) return l0_;
  const int mu = q_->mu();
  const Retract& r = q_->classical();
  const auto& gh = ghosts_;

  for (int a = 0; a < mu; ++a) {
    l0_.phi0.by_arity[1][Key{a}] = q_->fhat(a);
    l0_.pi0.by_arity[1][Key{a}] = hvec_unit(mu, a);
    HVec k = q_->kappa(hvec_unit(mu, a));
    if (!hvec_is_zero(k)) l0_.lhat.by_arity[1][Key{a}] = k;
  }

  auto twist = [&](const CFamily& xi, const Key& k) { return k_hc(xi, k, -1); };

  for (int n = 2; n <= n_max_; ++n) {
    const std::vector<Key> keys = symmetric_keys(mu, n, gh);
    std::vector<PolyElement> om(keys.size());
    std::vector<HVec> vp(keys.size());
    parallel_for(keys.size(), [&](size_t idx) {
      const Key& v = keys[idx];
      auto deg = parities_of(v, gh);
      PolyElement acc;
      HVec w = hvec_zero(mu);
      for (const Partition& p : enumerate_partitions(n)) {
        if (p.size() == 1) continue;
        const int eps = koszul_sign(p, deg);
        const HPoly c = HPoly::minus_hbar(n - p.size()) * Rational(eps);
        PolyElement prod;
        bool zero = false;
        for (int j = 0; j < p.size() && !zero; ++j) {
          PolyElement f = l0_.phi0.at(sub_key(v, p.blocks[j]));
          if (f.is_zero()) zero = true;
          prod = j == 0 ? f : prod * f;
        }
        if (!zero) acc += c * prod;
        if (p.size() == n) continue;
        for (int bi : insertion_blocks(p)) {
          HVec in = l0_.lhat.at(sub_key(v, p.blocks[bi]));
          if (hvec_is_zero(in)) continue;
          std::vector<Slot> slots;
          for (int j = 0; j < p.size(); ++j) {
            if (j == bi) {
              slots.push_back(Slot::from_vec(in));
            } else {
              int e = v[p.blocks[j][0]];
              slots.push_back(Slot::basis(e, j < bi ? j_sign(gh[e]) : 1));
            }
          }
          acc -= c * multilinear(slots, [&](const Key& t) { return l0_.eta_m1.at(t); },
                                 PolyElement());
          axpy(w, -c,
               multilinear(slots, [&](const Key& t) { return l0_.pi0.at(t); }, hvec_zero(mu)));
        }
      }
      om[idx] = acc;
      vp[idx] = w;
    });

    CFamily cur;
    std::map<Key, HVec> pi;
    std::map<Key, PolyElement> eta;
    for (size_t i = 0; i < keys.size(); ++i) {
      cur[keys[i]] = om[i];
      l0_.omega0.by_arity[n][keys[i]] = om[i];
      l0_.varpi1.by_arity[n][keys[i]] = vp[i];
      pi[keys[i]] = hvec_zero(mu);
    }
    auto& its = l0_.iterates[n];
    its.push_back(cur);
    for (int i = 0; i <= n - 2; ++i) {
      const HPoly c = HPoly::minus_hbar(i);
      for (const auto& [k, val] : cur) {
        PolyElement cl = val.classical();
        axpy(pi[k], c, r.h(cl));
        eta[k] += c * r.s(cl);
      }
      cur = nabla_inv_h(*q_, cur, twist);
      its.push_back(cur);
    }
    for (const Key& k : keys) {
      l0_.pi0.by_arity[n][k] = pi[k];
      l0_.eta_m1.by_arity[n][k] = eta[k];
      l0_.phi0.by_arity[n][k] = -cur.at(k);
    }
    for (size_t i = 0; i < keys.size(); ++i) {
      HVec num = hvec_add(vp[i], kappa_hh(l0_.pi0, n, keys[i]));
      HVec lh(mu);
      for (int a = 0; a < mu; ++a) {
        lh[a] = h_divide(num[a], n - 1);
        if ((n - 1) & 1) lh[a] = -lh[a];
      }
      if (!hvec_is_zero(lh)) l0_.lhat.by_arity[n][keys[i]] = lh;
    }
    // L_n
    std::vector<PolyElement> Ls(keys.size());
    parallel_for(keys.size(), [&](size_t idx) {
      const Key& v = keys[idx];
      auto deg = parities_of(v, gh);
      PolyElement acc;
      for (const Partition& p : enumerate_partitions(n)) {
        if (p.size() == 1) continue;
        const int eps = koszul_sign(p, deg);
        std::vector<PolyElement> args;
        bool zero = false;
        for (const auto& b : p.blocks) {
          args.push_back(l0_.phi0.at(sub_key(v, b)));
          if (args.back().is_zero()) zero = true;
        }
        if (!zero) acc += Rational(eps) * descendant(args);
        if (p.size() == n) continue;
        for (int bi : insertion_blocks(p)) {
          HVec in = l0_.lhat.at(sub_key(v, p.blocks[bi]));
          if (hvec_is_zero(in)) continue;
          std::vector<Slot> slots;
          for (int j = 0; j < p.size(); ++j) {
            if (j == bi) {
              slots.push_back(Slot::from_vec(in));
            } else {
              int e = v[p.blocks[j][0]];
              slots.push_back(Slot::basis(e, j < bi ? j_sign(gh[e]) : 1));
            }
          }
          acc -= Rational(eps) *
                 multilinear(slots, [&](const Key& t) { return l0_.phi0.at(t); }, PolyElement());
        }
      }
      Ls[idx] = acc;
    });
    for (size_t i = 0; i < keys.size(); ++i) l0_.L.by_arity[n][keys[i]] = Ls[i];
  }
  l0_done_ = true;
  return l0_;
}

const LevelOne& MasterSolver::solve_level_one() {
  if (l1_done_) return l1_;
  solve_level_zero();
  const int mu = q_->mu();
  const Retract& r = q_->classical();
  const auto& gh = ghosts_;

  if (n_max_ >= 2)
    for (const Key& k : split_keys(mu, 2, gh)) {
      l1_.mhat.by_arity[2][k] = l0_.pi0.at(k);
      l1_.phi_m1.by_arity[2][k] = l0_.eta_m1.at(k);
      l1_.pi_m1.by_arity[2][k] = hvec_zero(mu);
      l1_.eta_m2.by_arity[2][k] = PolyElement();
    }

  auto twist = [&](const CFamily& xi, const Key& k) { return k_hc(xi, k, -2, true); };

  for (int n = 3; n <= n_max_; ++n) {
    const std::vector<Key> keys = split_keys(mu, n, gh);
    std::vector<PolyElement> om(keys.size());
    std::vector<HVec> vp(keys.size());
    parallel_for(keys.size(), [&](size_t idx) {
      const Key& v = keys[idx];
      auto deg = parities_of(v, gh);
      PolyElement acc = l0_.eta_m1.at(v);
      HVec w = l0_.pi0.at(v);
      for (const Partition& p : enumerate_partitions(n)) {
        if (p.size() == 1 || !same_block(p, n - 2, n - 1)) continue;
        const int eps = koszul_sign(p, deg);
        const HPoly c = HPoly::minus_hbar(n - p.size() - 1) * Rational(eps);
        const auto& last = p.blocks.back();
        auto [f2, l2] = split_block(v, last);
        PolyElement prod;
        bool zero = false;
        for (int j = 0; j + 1 < p.size() && !zero; ++j) {
          Key b = sub_key(v, p.blocks[j]);
          PolyElement f = l0_.phi0.at(b);
          if (j_sign_of(b, gh) < 0) f = -f;
          if (f.is_zero()) zero = true;
          prod = j == 0 ? f : prod * f;
        }
        if (!zero) {
          PolyElement pm = l1_.phi_m1.at(f2, l2);
          acc -= c * (p.size() == 1 ? pm : prod * pm);
        }
        if (!others_singletons_last(p)) continue;
        HVec m = l1_.mhat.at(f2, l2);
        if (hvec_is_zero(m)) continue;
        std::vector<Slot> slots;
        for (int j = 0; j + 1 < p.size(); ++j) slots.push_back(Slot::basis(v[p.blocks[j][0]]));
        slots.push_back(Slot::from_vec(m));
        acc -= c * multilinear(slots, [&](const Key& t) { return l0_.eta_m1.at(t); },
                               PolyElement());
        axpy(w, -c,
             multilinear(slots, [&](const Key& t) { return l0_.pi0.at(t); }, hvec_zero(mu)));
      }
      om[idx] = acc;
      vp[idx] = w;
    });

    CFamily cur;
    std::map<Key, HVec> pi;
    std::map<Key, PolyElement> eta;
    for (size_t i = 0; i < keys.size(); ++i) {
      cur[keys[i]] = om[i];
      l1_.omega_m1.by_arity[n][keys[i]] = om[i];
      l1_.varpi0.by_arity[n][keys[i]] = vp[i];
      pi[keys[i]] = hvec_zero(mu);
    }
    auto& its = l1_.iterates[n];
    its.push_back(cur);
    for (int i = 0; i <= n - 3; ++i) {
      const HPoly c = HPoly::minus_hbar(i);
      for (const auto& [k, val] : cur) {
        PolyElement cl = val.classical();
        axpy(pi[k], c, r.h(cl));
        eta[k] += c * r.s(cl);
      }
      cur = nabla_inv_h(*q_, cur, twist);
      its.push_back(cur);
    }
    for (const Key& k : keys) {
      l1_.pi_m1.by_arity[n][k] = pi[k];
      l1_.eta_m2.by_arity[n][k] = eta[k];
      l1_.phi_m1.by_arity[n][k] = cur.at(k);
    }
    for (size_t i = 0; i < keys.size(); ++i) {
      HVec num = hvec_add(vp[i], kappa_split(l1_.pi_m1, n, keys[i]));
      HVec m(mu);
      for (int a = 0; a < mu; ++a) {
        m[a] = h_divide(num[a], n - 2);
        if ((n - 2) & 1) m[a] = -m[a];
      }
      l1_.mhat.by_arity[n][keys[i]] = m;
    }
  }
  l1_done_ = true;
  return l1_;
}

PolyElement MasterSolver::M0_base(int n, const Key& v) const {
  const auto& gh = ghosts_;
  auto deg = parities_of(v, gh);
  PolyElement acc = l0_.phi0.at(v).shifted(1);
  acc = -acc;
  for (const Partition& p : enumerate_partitions(n)) {
    const int eps = koszul_sign(p, deg);
    if (p.size() == 2 && !same_block(p, n - 2, n - 1)) {
      acc += Rational(eps) * (l0_.phi0.at(sub_key(v, p.blocks[0])) *
                              l0_.phi0.at(sub_key(v, p.blocks[1])));
    }
    if (p.size() != 1 && same_block(p, n - 2, n - 1) && others_singletons_last(p)) {
      auto [f2, l2] = split_block(v, p.blocks.back());
      HVec m = l1_.mhat.at(f2, l2);
      if (hvec_is_zero(m)) continue;
      std::vector<Slot> slots;
      for (int j = 0; j + 1 < p.size(); ++j) slots.push_back(Slot::basis(v[p.blocks[j][0]]));
      slots.push_back(Slot::from_vec(m));
      acc -= Rational(eps) *
             multilinear(slots, [&](const Key& t) { return l0_.phi0.at(t); }, PolyElement());
    }
  }
  return acc;
}

PolyElement MasterSolver::lterm(int n, const Key& v) const {
  const auto& gh = ghosts_;
  auto deg = parities_of(v, gh);
  PolyElement acc;
  for (const Partition& p : enumerate_partitions(n)) {
    if (p.size() == 1 || !same_block(p, n - 2, n - 1)) continue;
    const int eps = koszul_sign(p, deg);
    std::vector<PolyElement> args;
    bool zero = false;
    for (int j = 0; j + 1 < p.size(); ++j) {
      Key b = sub_key(v, p.blocks[j]);
      PolyElement f = l0_.phi0.at(b);
      if (j_sign_of(b, gh) < 0) f = -f;
      args.push_back(f);
      if (f.is_zero()) zero = true;
    }
    auto [f2, l2] = split_block(v, p.blocks.back());
    args.push_back(l1_.phi_m1.at(f2, l2));
    if (args.back().is_zero()) zero = true;
    if (!zero) acc += Rational(eps) * descendant(args);
  }
  return acc;
}

MSignResolution MasterSolver::resolve_M_sign() const {
  MSignResolution res;
  if (!l1_done_) throw std::logic_error("solve level one first");
  const int mu = q_->mu();
  bool plus = true, minus = true, lterm_nonzero = false;
  std::string wp, wm;
  for (int n = 2; n <= n_max_; ++n) {
    const auto keys = split_keys(mu, n, ghosts_);
    std::vector<PolyElement> dp(keys.size()), dm(keys.size()), lt(keys.size());
    parallel_for(keys.size(), [&](size_t i) {
      const Key& v = keys[i];
      PolyElement base = M0_base(n, v);
      lt[i] = lterm(n, v);
      PolyElement target =
          q_->fhat(l1_.mhat.at_flat(v)) + k_split(l1_.phi_m1, n, v);
      dp[i] = base + lt[i] - target;
      dm[i] = base - lt[i] - target;
    });
    for (size_t i = 0; i < keys.size(); ++i) {
      if (!lt[i].is_zero()) lterm_nonzero = true;
      if (plus && !dp[i].is_zero()) {
        plus = false;
        wp = "arity " + std::to_string(n) + " at " + key_str(keys[i]) + ": " + dp[i].str();
      }
      if (minus && !dm[i].is_zero()) {
        minus = false;
        wm = "arity " + std::to_string(n) + " at " + key_str(keys[i]) + ": " + dm[i].str();
      }
    }
  }
  res.plus_holds = plus;
  res.minus_holds = minus;
  if (plus && !minus) res.sign = 1;
  if (minus && !plus) res.sign = -1;
  if (plus && minus) res.sign = 1;
  std::ostringstream os;
  os << "plus sign " << (plus ? "holds" : "fails" + (wp.empty() ? "" : " (" + wp + ")"))
     << "; minus sign " << (minus ? "holds" : "fails" + (wm.empty() ? "" : " (" + wm + ")"));
  if (!lterm_nonzero) os << "; l-term vanishes identically, sign not determined by data";
  res.detail = os.str();
  return res;
}

SplitFamily<PolyElement> MasterSolver::M0_family(int sign) const {
  SplitFamily<PolyElement> m;
  m.ghosts = ghosts_;
  m.ensure(n_max_);
  for (int n = 2; n <= n_max_; ++n) {
    const auto keys = split_keys(q_->mu(), n, ghosts_);
    std::vector<PolyElement> vals(keys.size());
    parallel_for(keys.size(), [&](size_t i) {
      vals[i] = M0_base(n, keys[i]) + Rational(sign) * lterm(n, keys[i]);
    });
    for (size_t i = 0; i < keys.size(); ++i) m.by_arity[n][keys[i]] = vals[i];
  }
  return m;
}

Report MasterSolver::verify_M_identity(int sign) const {
  Report rep;
  const int mu = q_->mu();
  bool ok = true;
  std::string wit;
  for (int n = 2; n <= n_max_ && ok; ++n) {
    const auto keys = split_keys(mu, n, ghosts_);
    std::vector<PolyElement> d(keys.size());
    parallel_for(keys.size(), [&](size_t i) {
      const Key& v = keys[i];
      PolyElement M = M0_base(n, v) + Rational(sign) * lterm(n, v);
      d[i] = M - q_->fhat(l1_.mhat.at_flat(v)) - k_split(l1_.phi_m1, n, v);
    });
    for (size_t i = 0; i < keys.size() && ok; ++i)
      if (!d[i].is_zero()) {
        ok = false;
        wit = "arity " + std::to_string(n) + " at " + key_str(keys[i]) + ": " + d[i].str();
      }
  }
  rep.add("M identity: M^0 = f^ m^ + K phi^-1 (l-term sign " + std::string(sign > 0 ? "+" : "-") +
              ")",
          ok, wit);
  return rep;
}

Report MasterSolver::classical_mhat_route(int sign) const {
  Report rep;
  const int mu = q_->mu();
  const Retract& r = q_->classical();
  const auto& pot = r.potential();
  const auto& gh = ghosts_;
  SplitFamily<HVec> m;
  m.ghosts = gh;
  m.zero = hvec_zero(mu);
  m.ensure(n_max_);
  auto phi = [&](const Key& k) { return l0_.phi0.at(k).classical(); };
  auto phim = [&](const Key& a, const Key& b) { return l1_.phi_m1.at(a, b).classical(); };
  bool closed = true, agree = true;
  std::string wc, wa;
  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      auto deg = parities_of(v, gh);
      PolyElement M;
      for (const Partition& p : enumerate_partitions(n)) {
        const int eps = koszul_sign(p, deg);
        if (p.size() == 2 && !same_block(p, n - 2, n - 1))
          M += Rational(eps) * (phi(sub_key(v, p.blocks[0])) * phi(sub_key(v, p.blocks[1])));
        if (p.size() == 1 || !same_block(p, n - 2, n - 1)) continue;
        auto [f2, l2] = split_block(v, p.blocks.back());
        if (others_singletons_last(p)) {
          HVec mm = m.at(f2, l2);
          std::vector<Slot> slots;
          for (int j = 0; j + 1 < p.size(); ++j) slots.push_back(Slot::basis(v[p.blocks[j][0]]));
          slots.push_back(Slot::from_vec(mm));
          if (!hvec_is_zero(mm))
            M -= Rational(eps) * multilinear(slots, phi, PolyElement());
        }
        std::vector<PolyElement> args;
        bool zero = false;
        for (int j = 0; j + 1 < p.size(); ++j) {
          Key b = sub_key(v, p.blocks[j]);
          PolyElement f = phi(b);
          if (j_sign_of(b, gh) < 0) f = -f;
          args.push_back(f);
          if (f.is_zero()) zero = true;
        }
        args.push_back(phim(f2, l2));
        if (args.back().is_zero()) zero = true;
        if (!zero) M += Rational(eps * sign) * descendant_l(pot, args).classical();
      }
      if (!classical_K(pot, M).is_zero() && closed) {
        closed = false;
        wc = "K M_" + std::to_string(n) + " != 0 at " + key_str(v);
      }
      HVec hm = r.h(M);
      m.by_arity[n][v] = hm;
      HVec solver = l1_.mhat.at_flat(v);
      if (!hvec_is_zero(hvec_sub(hm, solver)) && agree) {
        agree = false;
        wa = "arity " + std::to_string(n) + " at " + key_str(v) + ": h M = " + hvec_str(hm) +
             ", solver m^ = " + hvec_str(solver);
      }
    }
  rep.add("classical route: K M_n = 0", closed, wc);
  rep.add("classical route: h M_n equals m^_n", agree, wa);
  return rep;
}

SymFamily<HVec> MasterSolver::reconstruct_pi() const {
  const int mu = q_->mu();
  const auto& gh = ghosts_;
  SymFamily<HVec> pi;
  pi.ghosts = gh;
  pi.zero = hvec_zero(mu);
  pi.ensure(n_max_);
  for (int a = 0; a < mu; ++a) pi.by_arity[1][Key{a}] = hvec_unit(mu, a);
  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      auto deg = parities_of(v, gh);
      HVec acc = hvec_zero(mu);
      for (const Partition& p : enumerate_partitions(n)) {
        if (!same_block(p, n - 2, n - 1) || !others_singletons_last(p)) continue;
        const int eps = koszul_sign(p, deg);
        auto [f2, l2] = split_block(v, p.blocks.back());
        HVec m = l1_.mhat.at(f2, l2);
        if (hvec_is_zero(m)) continue;
        std::vector<Slot> slots;
        for (int j = 0; j + 1 < p.size(); ++j) slots.push_back(Slot::basis(v[p.blocks[j][0]]));
        slots.push_back(Slot::from_vec(m));
        HVec t = multilinear(slots, [&](const Key& k) { return pi.at(k); }, hvec_zero(mu));
        axpy(acc, HPoly::minus_hbar(n - p.size() - 1) * Rational(eps), t);
      }
      pi.by_arity[n][v] = acc;
    }
  return pi;
}

PolyElement MasterSolver::correlator0(const Key& v) const {
  return correlator([&](const Key& k) { return l0_.phi0.at(k); }, v, ghosts_);
}

Report MasterSolver::verify_level_zero() const {
  Report rep;
  const int mu = q_->mu();
  const auto& pot = q_->classical().potential();
  const auto& gh = ghosts_;
  bool ok = true;
  std::string wit;
  auto fail = [&](const std::string& what) {
    if (ok) {
      ok = false;
      wit = what;
    }
  };
  auto at_str = [](int n, const Key& v) {
    return "arity " + std::to_string(n) + " at " + key_str(v);
  };

  // insertion sums over all (p, i) for a target family
  auto ins_sum = [&](auto const& fam, const auto& zero, int n, const Key& v, bool weight) {
    auto deg = parities_of(v, gh);
    auto acc = zero;
    for (const Partition& p : enumerate_partitions(n)) {
      const int eps = koszul_sign(p, deg);
      const HPoly c = weight ? HPoly::minus_hbar(n - p.size()) * Rational(eps) : HPoly(eps);
      for (int bi : insertion_blocks(p)) {
        HVec in = l0_.lhat.at(sub_key(v, p.blocks[bi]));
        if (hvec_is_zero(in)) continue;
        std::vector<Slot> slots;
        for (int j = 0; j < p.size(); ++j) {
          if (j == bi) {
            slots.push_back(Slot::from_vec(in));
          } else {
            int e = v[p.blocks[j][0]];
            slots.push_back(Slot::basis(e, j < bi ? j_sign(gh[e]) : 1));
          }
        }
        add_to(acc, scaled(c, multilinear(slots, [&](const Key& t) { return fam.at(t); }, zero)));
      }
    }
    return acc;
  };

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      PolyElement lhs = q_->fhat(l0_.pi0.at(v));
      PolyElement rhs = correlator0(v) - quantum_K(pot, l0_.eta_m1.at(v)) -
                        ins_sum(l0_.eta_m1, PolyElement(), n, v, true);
      if (!(lhs - rhs).is_zero()) fail(at_str(n, v) + ": " + (lhs - rhs).str());
    }
  record(rep, "level zero: f^ pi^0 = Pi^0 - K eta^-1 - eta^-1(l^)", ok, wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      HVec lhs = q_->kappa(l0_.pi0.at(v));
      HVec rhs = ins_sum(l0_.pi0, hvec_zero(mu), n, v, true);
      if (!hvec_is_zero(hvec_sub(lhs, rhs))) fail(at_str(n, v));
    }
  record(rep, "level zero: kappa pi^0 = pi^0(l^)", ok, wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      CFamily xi{{v, l0_.eta_m1.at(v)}};
      PolyElement lhs = k_hc(xi, v, -1) + q_->fhat(l0_.pi0.at(v)) - l0_.omega0.at(v);
      PolyElement rhs = l0_.phi0.at(v).shifted(n - 1);
      if (n % 2 == 0) rhs = -rhs;
      if (!(lhs - rhs).is_zero()) fail(at_str(n, v) + ": " + (lhs - rhs).str());
      HVec kl = hvec_add(kappa_hh(l0_.pi0, n, v), l0_.varpi1.at(v));
      HVec lh = hvec_scale(HPoly::minus_hbar(n - 1), l0_.lhat.at(v));
      if (!hvec_is_zero(hvec_sub(kl, lh))) fail(at_str(n, v) + " (l^ identity)");
    }
  record(rep, "level zero: K_HC eta + f pi - Omega = (-h)^{n-1} phi, kappa pi + varpi = (-h)^{n-1} l^",
         ok, wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      CFamily xi{{v, l0_.phi0.at(v)}};
      PolyElement lhs = k_hc(xi, v, 0) + l0_.L.at(v);
      PolyElement rhs = q_->fhat(l0_.lhat.at(v));
      if (!(lhs - rhs).is_zero()) fail(at_str(n, v) + ": " + (lhs - rhs).str());
    }
  record(rep, "level zero: K_HC phi^0 + L = f^ l^", ok, wit);

  for (int n = 2; n <= std::min(4, n_max_); ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      auto deg = parities_of(v, gh);
      PolyElement lhs;
      for (const Partition& p : enumerate_partitions(n)) {
        const int eps = koszul_sign(p, deg);
        std::vector<PolyElement> args;
        bool zero = false;
        for (const auto& b : p.blocks) {
          args.push_back(l0_.phi0.at(sub_key(v, b)));
          if (args.back().is_zero()) zero = true;
        }
        if (!zero) lhs += Rational(eps) * descendant_l(pot, args);
      }
      PolyElement rhs = ins_sum(l0_.phi0, PolyElement(), n, v, false);
      if (!(lhs - rhs).is_zero()) fail(at_str(n, v) + ": " + (lhs - rhs).str());
    }
  record(rep, "level zero: phi^0 is an sL-infinity morphism (n <= 4)", ok, wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      HVec p = l0_.pi0.at(v);
      for (const auto& c : p)
        if (c.degree() > n - 2) fail(at_str(n, v) + ": pi^0 has hbar degree " + std::to_string(c.degree()));
      PolyElement e = l0_.eta_m1.at(v);
      if (e.hbar_degree() > n - 2) fail(at_str(n, v) + ": eta^-1 hbar degree too large");
    }
  record(rep, "level zero: hbar degrees of pi^0_n, eta^-1_n at most n-2", ok, wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh)) {
      if (v[0] != 0) continue;
      Key w(v.begin() + 1, v.end());
      if (!hvec_is_zero(hvec_sub(l0_.pi0.at(v), l0_.pi0.at(w)))) fail(at_str(n, v) + ": pi^0 unit");
      if (n >= 3 && !(l0_.eta_m1.at(v) - l0_.eta_m1.at(w)).is_zero())
        fail(at_str(n, v) + ": eta^-1 unit");
      if (!l0_.phi0.at(v).is_zero()) fail(at_str(n, v) + ": phi^0 unit");
    }
  record(rep, "level zero: unit laws", ok, wit);

  if (q_->anomaly_free()) {
    for (int n = 1; n <= n_max_; ++n)
      for (const auto& [k, val] : l0_.lhat.by_arity[n])
        if (!hvec_is_zero(val)) fail(at_str(n, k));
    record(rep, "level zero: l^ vanishes for an anomaly-free retract", ok, wit);
    for (int n = 1; n <= n_max_; ++n)
      for (const Key& v : symmetric_keys(mu, n, gh))
        if (!quantum_K(pot, correlator0(v)).is_zero()) fail(at_str(n, v));
    record(rep, "correlators: K Pi^0_n = 0", ok, wit);
  }
  return rep;
}

Report MasterSolver::verify_level_one() const {
  Report rep;
  const int mu = q_->mu();
  const auto& gh = ghosts_;
  bool ok = true;
  std::string wit;
  auto fail = [&](const std::string& what) {
    if (ok) {
      ok = false;
      wit = what;
    }
  };
  auto at_str = [](int n, const Key& v) {
    return "arity " + std::to_string(n) + " at " + key_str(v);
  };

  for (int n = 3; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      auto deg = parities_of(v, gh);
      PolyElement rhs = l0_.eta_m1.at(v) - k_split(l1_.eta_m2, n, v);
      for (const Partition& p : enumerate_partitions(n)) {
        if (!same_block(p, n - 2, n - 1)) continue;
        const int eps = koszul_sign(p, deg);
        const HPoly c = HPoly::minus_hbar(n - p.size() - 1) * Rational(eps);
        auto [f2, l2] = split_block(v, p.blocks.back());
        PolyElement prod = l1_.phi_m1.at(f2, l2);
        for (int j = p.size() - 2; j >= 0; --j) {
          Key b = sub_key(v, p.blocks[j]);
          PolyElement f = l0_.phi0.at(b);
          if (j_sign_of(b, gh) < 0) f = -f;
          prod = f * prod;
        }
        rhs -= c * prod;
        if (p.size() == 1 || !others_singletons_last(p)) continue;
        HVec m = l1_.mhat.at(f2, l2);
        std::vector<Slot> slots;
        for (int j = 0; j + 1 < p.size(); ++j) slots.push_back(Slot::basis(v[p.blocks[j][0]]));
        slots.push_back(Slot::from_vec(m));
        rhs -= c * multilinear(slots, [&](const Key& t) { return l0_.eta_m1.at(t); }, PolyElement());
      }
      PolyElement d = q_->fhat(l1_.pi_m1.at_flat(v)) - rhs;
      if (!d.is_zero()) fail(at_str(n, v) + ": " + d.str());
    }
  record(rep, "level one: f^ pi^-1 = eta^-1 - K eta^-2 - phi^0...phi^-1 - eta^-1(m^)", ok, wit);

  for (int n = 3; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      auto deg = parities_of(v, gh);
      HVec rhs = hvec_scale(HPoly(-1), kappa_split(l1_.pi_m1, n, v));
      for (const Partition& p : enumerate_partitions(n)) {
        if (!same_block(p, n - 2, n - 1) || !others_singletons_last(p)) continue;
        const int eps = koszul_sign(p, deg);
        auto [f2, l2] = split_block(v, p.blocks.back());
        HVec m = l1_.mhat.at(f2, l2);
        std::vector<Slot> slots;
        for (int j = 0; j + 1 < p.size(); ++j) slots.push_back(Slot::basis(v[p.blocks[j][0]]));
        slots.push_back(Slot::from_vec(m));
        axpy(rhs, HPoly::minus_hbar(n - p.size() - 1) * Rational(eps),
             multilinear(slots, [&](const Key& t) { return l0_.pi0.at(t); }, hvec_zero(mu)));
      }
      if (!hvec_is_zero(hvec_sub(l0_.pi0.at(v), rhs))) fail(at_str(n, v));
    }
  record(rep, "level one: pi^0 = pi^0(m^) - kappa pi^-1", ok, wit);

  for (int n = 3; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      PolyElement lhs = l1_.phi_m1.at_flat(v).shifted(n - 2);
      if (n % 2 == 1) lhs = -lhs;
      PolyElement rhs = l1_.omega_m1.at_flat(v) - q_->fhat(l1_.pi_m1.at_flat(v)) -
                        k_split(l1_.eta_m2, n, v);
      if (!(lhs - rhs).is_zero()) fail(at_str(n, v) + ": " + (lhs - rhs).str());
    }
  record(rep, "level one: (-h)^{n-2} phi^-1 = Omega^-1 - f pi^-1 - K eta^-2", ok, wit);

  for (int n = 3; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      for (const auto& c : l1_.pi_m1.at_flat(v))
        if (c.degree() > n - 3) fail(at_str(n, v) + ": pi^-1 hbar degree");
      if (l1_.eta_m2.at_flat(v).hbar_degree() > n - 3) fail(at_str(n, v) + ": eta^-2 hbar degree");
      bool has_unit = false;
      for (int i : v) has_unit |= i == 0;
      if (has_unit) {
        if (!hvec_is_zero(l1_.pi_m1.at_flat(v))) fail(at_str(n, v) + ": pi^-1 unit");
        if (!l1_.eta_m2.at_flat(v).is_zero()) fail(at_str(n, v) + ": eta^-2 unit");
      }
    }
  record(rep, "level one: hbar degrees at most n-3 and vanishing on the unit", ok, wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      HVec m = l1_.mhat.at_flat(v);
      HVec pi = l0_.pi0.at(v);
      for (int a = 0; a < mu; ++a) {
        if (m[a].degree() > 0) fail(at_str(n, v) + ": m^ depends on hbar");
        Rational top = pi[a].coeff(n - 2);
        if ((n - 2) & 1) top = -top;
        if (m[a].coeff(0) != top) fail(at_str(n, v) + ": m^ != top hbar part of pi^0");
      }
    }
  record(rep, "level one: m^_n is hbar-independent and equals the hbar^{n-2} part of pi^0_n", ok,
         wit);

  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : split_keys(mu, n, gh)) {
      Key s = v;
      std::sort(s.begin(), s.end());
      Key f(s.begin(), s.end() - 2), l(s.end() - 2, s.end());
      if (!hvec_is_zero(hvec_sub(l1_.mhat.at_flat(v), l1_.mhat.at(f, l)))) fail(at_str(n, v));
    }
  record(rep, "level one: m^ is graded symmetric", ok, wit);

  SymFamily<HVec> rec = reconstruct_pi();
  for (int n = 1; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh))
      if (!hvec_is_zero(hvec_sub(rec.at(v), l0_.pi0.at(v)))) fail(at_str(n, v));
  record(rep, "reconstruction: pi^0 rebuilt from m^ matches the solver", ok, wit);
  return rep;
}

Report MasterSolver::factorization_check(const Expectation& c) const {
  Report rep;
  const int mu = q_->mu();
  bool ok = true;
  std::string wit;
  for (int n = 1; n <= n_max_ && ok; ++n)
    for (const Key& v : symmetric_keys(mu, n, ghosts_)) {
      HPoly a = c(correlator0(v));
      HPoly b = c(q_->fhat(l0_.pi0.at(v)));
      if (!a.equals(b)) {
        ok = false;
        wit = "arity " + std::to_string(n) + " at " + key_str(v) + ": " + a.str() + " vs " + b.str();
        break;
      }
    }
  rep.add("factorization: c Pi^0_n = c f^ pi^0_n", ok, wit);
  return rep;
}

Report MasterSolver::verify_mhat_algebra(int spectators) const {
  Report rep;
  const int mu = q_->mu();
  const auto& gh = ghosts_;
  auto mh = [&](const std::vector<Slot>& slots) {
    return multilinear(slots, [&](const Key& t) { return l1_.mhat.at_flat(t); }, hvec_zero(mu));
  };
  bool ok = true;
  std::string wit;
  for (int n = 2; n <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n - 1, gh)) {
      Key w = v;
      w.insert(w.begin(), 0);
      HVec got = l1_.mhat.at_flat(w);
      HVec want = n == 2 ? hvec_unit(mu, v[0]) : hvec_zero(mu);
      if (!hvec_is_zero(hvec_sub(got, want)) && ok) {
        ok = false;
        wit = "m^_" + std::to_string(n) + " at " + key_str(w);
      }
    }
  rep.add("m^ unity", ok, wit);
  ok = true;
  wit.clear();
  for (int n = 0; n <= spectators && n + 2 <= n_max_; ++n)
    for (const Key& v : symmetric_keys(mu, n, gh))
      for (int w1 = 0; w1 < mu; ++w1)
        for (int w2 = 0; w2 < mu; ++w2)
          for (int w3 = 0; w3 < mu; ++w3) {
            HVec lhs = hvec_zero(mu), rhs = hvec_zero(mu);
            for (uint32_t mask = 0; mask < (1u << n); ++mask) {
              std::vector<int> in, out;
              for (int i = 0; i < n; ++i) (mask & (1u << i) ? in : out).push_back(i);
              std::vector<int> perm = in;
              perm.insert(perm.end(), out.begin(), out.end());
              const int eps = sort_sign(perm, [&](int i) { return gh[v[i]]; });
              int gout = 0;
              for (int i : out) gout += gh[v[i]];
              std::vector<Slot> a;
              for (int i : out) a.push_back(Slot::basis(v[i]));
              a.push_back(Slot::basis(w1));
              a.push_back(Slot::basis(w2));
              std::vector<Slot> outer;
              for (int i : in) outer.push_back(Slot::basis(v[i]));
              outer.push_back(Slot::from_vec(mh(a)));
              outer.push_back(Slot::basis(w3));
              axpy(lhs, HPoly(eps), mh(outer));
              std::vector<Slot> b;
              for (int i : out) b.push_back(Slot::basis(v[i]));
              b.push_back(Slot::basis(w2));
              b.push_back(Slot::basis(w3));
              std::vector<Slot> outer2;
              for (int i : in) outer2.push_back(Slot::basis(v[i]));
              outer2.push_back(Slot::basis(w1));
              outer2.push_back(Slot::from_vec(mh(b)));
              const int sg = (parity(gout) && parity(gh[w1])) ? -eps : eps;
              axpy(rhs, HPoly(sg), mh(outer2));
            }
            if (!hvec_is_zero(hvec_sub(lhs, rhs)) && ok) {
              ok = false;
              wit = "v = " + key_str(v) + ", w = " + key_str({w1, w2, w3});
            }
          }
  rep.add("m^ generalized associativity (up to " + std::to_string(spectators) + " spectators)",
          ok, wit);
  return rep;
}

void MasterSolver::inject_fault(const std::string& what) {
  if (what == "mhat" && n_max_ >= 2) {
    auto& tab = l1_.mhat.by_arity[2];
    if (!tab.empty()) {
      HVec& v = tab.begin()->second;
      v[v.size() - 1] += HPoly(1);
    }
  } else if (what == "phi0" && n_max_ >= 2) {
    auto& tab = l0_.phi0.by_arity[2];
    if (!tab.empty()) tab.rbegin()->second += PolyElement::one(q_->classical().n_vars());
  } else {
    throw InputError("unknown fault injection target: " + what);
  }
}

Expectation make_expectation(const QuantizedRetract& q, const std::vector<Rational>& iota) {
  std::vector<Rational> io = iota;
  if (io.empty()) {
    io.assign(q.mu(), Rational(0));
    io[0] = 1;
  }
  if (static_cast<int>(io.size()) != q.mu()) throw InputError("iota has wrong length");
  Expectation e;
  e.rule = [&q, io](const PolyElement& x) {
    HVec h = q.hhat(x);
    HPoly r = HPoly::zero_with_order(hvec_order(h));
    for (size_t a = 0; a < io.size(); ++a)
      if (io[a] != 0) r += h[a] * io[a];
    return r;
  };
  std::ostringstream os;
  os << "iota o h^ with iota = (";
  for (size_t a = 0; a < io.size(); ++a) os << (a ? "," : "") << io[a].get_str();
  os << ")";
  e.tag = os.str();
  return e;
}

MomentCumulantReport moments_cumulants(const MasterSolver& s, const Expectation& c, int n_max) {
  const auto& l0 = s.level_zero();
  return moments_cumulants_check(c, [&](const Key& k) { return l0.phi0.at(k); }, s.ghosts(),
                                 s.dim(), std::min(n_max, s.n_max()));
}

}  // namespace bvc
