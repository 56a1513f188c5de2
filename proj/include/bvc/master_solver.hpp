#pragma once

#include <map>
#include <vector>

#include "bvc/graded_core.hpp"
#include "bvc/poly_bv.hpp"
#include "bvc/retract.hpp"
#include "bvc/sl_infinity.hpp"

namespace bvc {

// Graded-symmetric family of maps H^n -> V stored on sorted keys, one table
// per arity.  V is PolyElement (C-valued) or HVec (H-valued).
template <class V>
struct SymFamily {
  std::vector<int> ghosts;
  V zero{};
  std::vector<std::map<Key, V>> by_arity;

  void ensure(int n) {
    if (static_cast<int>(by_arity.size()) <= n) by_arity.resize(n + 1);
  }
  bool has_arity(int n) const { return n < static_cast<int>(by_arity.size()); }
  V at(Key tuple) const;
};

// Family on S^{n-2}H (x) S^2 H, keyed by the sorted first n-2 indices
// followed by the sorted last two.
template <class V>
struct SplitFamily {
  std::vector<int> ghosts;
  V zero{};
  std::vector<std::map<Key, V>> by_arity;

  void ensure(int n) {
    if (static_cast<int>(by_arity.size()) <= n) by_arity.resize(n + 1);
  }
  V at(const Key& first, const Key& last2) const;
  V at_flat(const Key& flat) const;  // last two entries form the S^2 part
};

// All split keys for arity n.
std::vector<Key> split_keys(int dim, int n, const std::vector<int>& ghosts);

struct LevelZero {
  int n_max = 0;
  std::vector<int> ghosts;
  SymFamily<PolyElement> phi0, eta_m1, omega0, L;
  SymFamily<HVec> pi0, lhat, varpi1;
  // audit trail: nabla iterates Omega^[i] per arity
  std::map<int, std::vector<CFamily>> iterates;
};

struct LevelOne {
  int n_max = 0;
  SplitFamily<PolyElement> phi_m1, eta_m2, omega_m1;
  SplitFamily<HVec> pi_m1, mhat, varpi0;
  std::map<int, std::vector<CFamily>> iterates;
};

// Sign of the l-term in M^0 that makes M^0 = f^ m^ + K phi^{-1} hold.
struct MSignResolution {
  int sign = 0;              // +1 or -1; 0 if neither holds
  bool plus_holds = false;
  bool minus_holds = false;
  std::string detail;
};

class MasterSolver {
 public:
  MasterSolver(const QuantizedRetract& q, int n_max);

  const QuantizedRetract& retract() const { return *q_; }
  int n_max() const { return n_max_; }
  int dim() const { return q_->mu(); }
  const std::vector<int>& ghosts() const { return ghosts_; }

  const LevelZero& solve_level_zero();
  const LevelOne& solve_level_one();
  const LevelZero& level_zero() const { return l0_; }
  const LevelOne& level_one() const { return l1_; }

  Report verify_level_zero() const;
  Report verify_level_one() const;
  MSignResolution resolve_M_sign() const;
  Report verify_M_identity(int sign) const;
  // M^0_n with the given l-term sign, for audit output.
  SplitFamily<PolyElement> M0_family(int sign) const;
  // Independent classical route: m^_n = h M_n with K M_n = 0, using the
  // l-term sign from resolve_M_sign.
  Report classical_mhat_route(int sign) const;
  Report factorization_check(const Expectation& c) const;
  // Unity and generalized associativity of m^ with up to `spectators`
  // v-arguments, on all basis tuples.
  Report verify_mhat_algebra(int spectators) const;

  // pi^0 rebuilt from m^ alone.
  SymFamily<HVec> reconstruct_pi() const;

  // Pi^0_n(v) from phi^0.
  PolyElement correlator0(const Key& v) const;

  // Test hook: perturbs a stored m^ entry.
  void inject_fault(const std::string& what);

 private:
  PolyElement k_hc(const CFamily& xi, const Key& key, int map_ghost, bool split = false) const;
  HVec kappa_hh(const SymFamily<HVec>& fam, int n, const Key& key) const;
  HVec kappa_split(const SplitFamily<HVec>& fam, int n, const Key& key) const;
  PolyElement k_split(const SplitFamily<PolyElement>& fam, int n, const Key& key) const;
  PolyElement lterm(int n, const Key& v) const;  // l-term of M^0 (without sign)
  PolyElement M0_base(int n, const Key& v) const;
  PolyElement descendant(const std::vector<PolyElement>& args) const;

  const QuantizedRetract* q_;
  int n_max_;
  std::vector<int> ghosts_;
  LevelZero l0_;
  LevelOne l1_;
  bool l0_done_ = false, l1_done_ = false;
};

// Expectation c = iota o h^ with iota a linear functional on H (default:
// coefficient of the unit).
Expectation make_expectation(const QuantizedRetract& q, const std::vector<Rational>& iota = {});

// The moment/cumulant identity for phi^0 and the expectation c.
MomentCumulantReport moments_cumulants(const MasterSolver& s, const Expectation& c, int n_max);

}  // namespace bvc
