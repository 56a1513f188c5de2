#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bvc/sl_infinity.hpp"

using namespace bvc;

namespace {

HVec e(int dim, int i, int c = 1) { return hvec_scale(HPoly(c), hvec_unit(dim, i)); }

// sl2 with basis (e, f, h) placed in ghost -1.
SLInfStructure sl2(int hf) {
  SLInfStructure s = SLInfStructure::empty({-1, -1, -1}, 2);
  s.ops.set({0, 1}, e(3, 2));
  s.ops.set({0, 2}, e(3, 0, -2));
  s.ops.set({1, 2}, e(3, 1, hf));
  return s;
}

// a, u in ghost 0; v, w in ghost 1; d u = v, [a,a] = v, [a,u] = w.
SLInfStructure toy() {
  SLInfStructure s = SLInfStructure::empty({0, 0, 1, 1}, 2);
  s.ops.set({1}, e(4, 2));
  s.ops.set({0, 0}, e(4, 2));
  s.ops.set({0, 1}, e(4, 3));
  return s;
}

LinearRetract toy_retract() {
  LinearRetract r;
  r.h_ghosts = {0, 1};
  r.f = {e(4, 0), e(4, 3)};
  r.h = {e(2, 0), hvec_zero(2), hvec_zero(2), e(2, 1)};
  r.s = {hvec_zero(4), hvec_zero(4), e(4, 1), hvec_zero(4)};
  return r;
}

}  // namespace

TEST_CASE("Lie algebra relations and the coderivation oracle") {
  auto good = sl2(2);
  CHECK(verify_sl_infinity(good, 4).pass);
  CHECK(coderivation_square(good, 4).square_zero);

  auto bad = sl2(3);
  auto rep = verify_sl_infinity(bad, 4);
  CHECK_FALSE(rep.pass);
  CHECK(rep.first_failing_arity == 3);
  auto co = coderivation_square(bad, 4);
  CHECK_FALSE(co.square_zero);
  CHECK(co.first_failing_length == 3);
}

TEST_CASE("ghost degree of operations is checked") {
  auto s = SLInfStructure::empty({0, 0}, 2);
  s.ops.set({0, 0}, e(2, 1));  // ghost 0 output, should be 1
  CHECK_FALSE(verify_sl_infinity(s, 2).pass);
}

TEST_CASE("minimal model of the toy algebra") {
  auto s = toy();
  REQUIRE(verify_sl_infinity(s, 4).pass);
  MinimalModel mm = minimal_model(s, toy_retract(), 4);
  CHECK(verify_sl_infinity(mm.lhat, 4).pass);
  CHECK(hvec_is_zero(mm.lhat.ops.at({0, 0})));
  CHECK_FALSE(hvec_is_zero(mm.lhat.ops.at({0, 0, 0})));
  CHECK(verify_morphism(mm.phi, mm.lhat, s, 4).pass);
  // phi_2(a, a) = -s l_2(a, a) = -u
  CHECK(hvec_is_zero(hvec_sub(mm.phi.maps.at({0, 0}), e(4, 1, -1))));
}

TEST_CASE("minimal model rejects a broken retract") {
  auto r = toy_retract();
  r.s[2] = hvec_zero(4);
  CHECK_THROWS_AS(minimal_model(toy(), r, 3), InputError);
}

TEST_CASE("composition with the identity") {
  auto s = toy();
  MinimalModel mm = minimal_model(s, toy_retract(), 4);
  SLInfMorphism id;
  id.maps.src_ghosts = s.ghosts();
  id.maps.tgt_dim = 4;
  for (int i = 0; i < 4; ++i) id.maps.set({i}, e(4, i));
  id.tgt_ghosts = s.ghosts();
  SLInfMorphism c = compose_morphisms(id, mm.phi, 4);
  for (int n = 1; n <= 3; ++n)
    for (const Key& k : symmetric_keys(2, n, {0, 1}))
      CHECK(hvec_is_zero(hvec_sub(c.maps.at(k), mm.phi.maps.at(k))));
}
