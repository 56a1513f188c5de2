#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bvc/master_solver.hpp"

using namespace bvc;

namespace {

Potential one_var(int d) { return Potential::make(1, XPoly{{{d}, Rational(1, d)}}); }
PolyElement X(int p = 1) { return PolyElement::x(1, 0, p); }
PolyElement E() { return PolyElement::eta(1, 0); }

std::shared_ptr<const Retract> retract_of(const Potential& p) {
  return std::make_shared<Retract>(milnor_basis(p));
}

void require_pass(const Report& r) {
  for (const auto& c : r.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.pass);
  }
}

}  // namespace

TEST_CASE("A2 level zero") {
  QuantizedRetract q(retract_of(one_var(3)), 6);
  MasterSolver s(q, 4);
  const auto& l0 = s.solve_level_zero();
  CHECK(hvec_is_zero(l0.pi0.at({1, 1})));
  CHECK(l0.eta_m1.at({1, 1}).equals(E()));
  CHECK(l0.phi0.at({1, 1}).is_zero());
  require_pass(s.verify_level_zero());
}

TEST_CASE("A3 level zero and level one") {
  QuantizedRetract q(retract_of(one_var(4)), 8);
  MasterSolver s(q, 4);
  const auto& l0 = s.solve_level_zero();
  CHECK(l0.phi0.at({2, 2}).equals(PolyElement::one(1)));
  CHECK(hvec_is_zero(l0.pi0.at({2, 2})));
  PolyElement pi = s.correlator0({2, 2});
  CHECK(pi.equals(X(4) - PolyElement::constant(1, HPoly::hbar(1))));
  const auto& l1 = s.solve_level_one();
  CHECK(hvec_is_zero(hvec_sub(l1.mhat.at({}, {1, 1}), hvec_unit(3, 2))));
  CHECK(hvec_is_zero(l1.mhat.at({}, {1, 2})));
  require_pass(s.verify_level_zero());
  require_pass(s.verify_level_one());
  auto m = s.resolve_M_sign();
  INFO(m.detail);
  CHECK(m.sign != 0);
  require_pass(s.verify_M_identity(m.sign));
  require_pass(s.classical_mhat_route(m.sign));
  require_pass(s.factorization_check(make_expectation(q)));
  CHECK(moments_cumulants(s, make_expectation(q), 4).pass);
}

TEST_CASE("A4 and a two-variable potential") {
  {
    QuantizedRetract q(retract_of(one_var(5)), 8);
    MasterSolver s(q, 4);
    s.solve_level_one();
    require_pass(s.verify_level_zero());
    require_pass(s.verify_level_one());
    require_pass(s.verify_mhat_algebra(2));
    auto m = s.resolve_M_sign();
    INFO(m.detail);
    CHECK(m.minus_holds);
    CHECK_FALSE(m.plus_holds);
  }
  {
    auto p = Potential::make(2, XPoly{{{3, 0}, Rational(1, 3)}, {{0, 3}, Rational(1, 3)}});
    QuantizedRetract q(retract_of(p), 6);
    MasterSolver s(q, 3);
    s.solve_level_one();
    require_pass(s.verify_level_zero());
    require_pass(s.verify_level_one());
    require_pass(s.classical_mhat_route(s.resolve_M_sign().sign));
    require_pass(s.verify_mhat_algebra(1));
  }
}

TEST_CASE("fault injection is caught") {
  QuantizedRetract q(retract_of(one_var(4)), 8);
  MasterSolver s(q, 3);
  s.solve_level_one();
  s.inject_fault("mhat");
  CHECK_FALSE(s.verify_level_one().pass());
}

TEST_CASE("reconstruction examples in low arity") {
  QuantizedRetract q(retract_of(one_var(5)), 8);
  MasterSolver s(q, 4);
  s.solve_level_one();
  const auto& l0 = s.level_zero();
  const auto& l1 = s.level_one();
  // pi^0_3 = m2(v1, m2(v2, v3)) - hbar m3(v1, v2, v3)
  for (const Key& v : symmetric_keys(4, 3, s.ghosts())) {
    HVec inner = l1.mhat.at({}, {v[1], v[2]});
    HVec want = hvec_zero(4);
    for (int a = 0; a < 4; ++a)
      axpy(want, inner[a], l1.mhat.at({}, {v[0], a}));
    axpy(want, HPoly::hbar(1) * Rational(-1), l1.mhat.at({v[0]}, {v[1], v[2]}));
    CHECK(hvec_is_zero(hvec_sub(want, l0.pi0.at(v))));
  }
}

TEST_CASE("arity cap") {
  QuantizedRetract q(retract_of(one_var(3)), 4);
  CHECK_THROWS_AS(MasterSolver(q, 9), ResourceError);
}
