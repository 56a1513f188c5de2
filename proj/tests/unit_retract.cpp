#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bvc/retract.hpp"

using namespace bvc;

namespace {

Potential one_var(int d) { return Potential::make(1, XPoly{{{d}, Rational(1, d)}}); }

PolyElement X(int p = 1) { return PolyElement::x(1, 0, p); }
PolyElement E() { return PolyElement::eta(1, 0); }

std::shared_ptr<const Retract> retract_of(const Potential& p) {
  return std::make_shared<Retract>(milnor_basis(p));
}

}  // namespace

TEST_CASE("Groebner basis with witnesses") {
  // ideal (x^2, y^2) from d(x^3/3 + y^3/3)
  GroebnerBasis gb = groebner({XPoly{{{2, 0}, 1}}, XPoly{{{0, 2}, 1}}}, 2);
  CHECK(gb.g.size() == 2);
  std::vector<XPoly> w;
  XPoly p{{{3, 1}, 2}, {{1, 1}, 1}, {{0, 3}, -1}};
  XPoly rem = gb.reduce(p, &w);
  CHECK(rem == XPoly{{{1, 1}, 1}});
  XPoly back = rem;
  back = xpoly_add(back, xpoly_mul(w[0], XPoly{{{2, 0}, 1}}));
  back = xpoly_add(back, xpoly_mul(w[1], XPoly{{{0, 2}, 1}}));
  CHECK(back == p);
}

TEST_CASE("Groebner basis of the D4 Jacobian ideal") {
  // S = x^2 y + y^3/3: dS = (2xy, x^2 + y^2)
  GroebnerBasis gb = groebner({XPoly{{{1, 1}, 2}}, XPoly{{{2, 0}, 1}, {{0, 2}, 1}}}, 2);
  for (size_t k = 0; k < gb.g.size(); ++k) {
    XPoly sum;
    sum = xpoly_add(sum, xpoly_mul(gb.rep[k][0], XPoly{{{1, 1}, 2}}));
    sum = xpoly_add(sum, xpoly_mul(gb.rep[k][1], XPoly{{{2, 0}, 1}, {{0, 2}, 1}}));
    CHECK(sum == gb.g[k]);
  }
  MilnorData md = milnor_basis(Potential::make(2, XPoly{{{2, 1}, 1}, {{0, 3}, Rational(1, 3)}}));
  CHECK(md.mu() == 4);
}

TEST_CASE("A2 basis and retract") {
  auto r = retract_of(one_var(3));
  REQUIRE(r->mu() == 2);
  CHECK(r->milnor().basis[0] == Exps{0});
  CHECK(r->milnor().basis[1] == Exps{1});
  CHECK(r->s(X(2)).equals(E()));
  CHECK(r->s(X(3)).equals(X() * E()));
  CHECK(r->s(X() * E()).is_zero());
  HVec h = r->h(X(2));
  CHECK(hvec_is_zero(h));
  CHECK(verify_retract(*r, 8).pass());
}

TEST_CASE("A3 basis") {
  auto r = retract_of(one_var(4));
  REQUIRE(r->mu() == 3);
  CHECK(r->milnor().basis[2] == Exps{2});
  CHECK(r->s(X(4)).equals(X() * E()));
  CHECK(verify_retract(*r, 10).pass());
}

TEST_CASE("multivariable retracts") {
  Potential fermat = Potential::make(2, XPoly{{{3, 0}, Rational(1, 3)}, {{0, 3}, Rational(1, 3)}});
  auto r = retract_of(fermat);
  CHECK(r->mu() == 4);
  auto rep = verify_retract(*r, 6);
  for (const auto& c : rep.checks) INFO(c.name << ": " << c.detail);
  CHECK(rep.pass());

  Potential d4 = Potential::make(2, XPoly{{{2, 1}, 1}, {{0, 3}, Rational(1, 3)}});
  auto r4 = retract_of(d4);
  CHECK(r4->mu() == 4);
  CHECK(verify_retract(*r4, 6).pass());

  Potential e6 = Potential::make(2, XPoly{{{3, 0}, Rational(1, 3)}, {{0, 4}, Rational(1, 4)}});
  CHECK(verify_retract(*retract_of(e6), 6).pass());
}

TEST_CASE("rejected potentials") {
  CHECK_THROWS_AS(milnor_basis(Potential::make(2, XPoly{{{2, 1}, 1}})), InputError);
  CHECK_THROWS_AS(milnor_basis(Potential::make(1, XPoly{{{1}, 1}})), InputError);
  CHECK_THROWS_AS(milnor_basis(Potential::make(1, XPoly{})), InputError);
  // isolated but not quasi-homogeneous
  Potential nq = Potential::make(2, XPoly{{{3, 0}, 1}, {{0, 3}, 1}, {{2, 2}, 1}});
  CHECK_NOTHROW(milnor_basis(nq));
  CHECK_THROWS_AS(Retract(milnor_basis(nq)), InputError);
}

TEST_CASE("quantized retract of A2") {
  auto r = retract_of(one_var(3));
  QuantizedRetract q(r, 6);
  CHECK(q.anomaly_free());
  CHECK(q.fhat(1).equals(X()));
  // h^(x^3) = e_0 hbar
  HVec hv = q.hhat(X(3));
  CHECK(hv[0].equals(HPoly::hbar()));
  CHECK(hv[1].is_zero());
  CHECK(verify_quantized(q, 8).pass());
}

TEST_CASE("quantized retracts of A3, A4 and a two-variable potential") {
  for (int d : {4, 5}) {
    QuantizedRetract q(retract_of(one_var(d)), 6);
    auto rep = verify_quantized(q, 2 * d);
    for (const auto& c : rep.checks) INFO(c.name << ": " << c.detail);
    CHECK(rep.pass());
  }
  Potential fermat = Potential::make(2, XPoly{{{3, 0}, Rational(1, 3)}, {{0, 3}, Rational(1, 3)}});
  QuantizedRetract q(retract_of(fermat), 4);
  CHECK(verify_quantized(q, 5).pass());
}

TEST_CASE("comparison of a perturbed retract") {
  auto r = retract_of(one_var(4));
  // lambda_0 = s(q) with q = x^5, x^6 on e1, e2
  std::vector<PolyElement> lam{PolyElement(), r->s(X(5)), r->s(X(6))};
  auto rp = std::make_shared<Retract>(r->perturbed(lam));
  CHECK(verify_retract(*rp, 10).pass());
  QuantizedRetract q(r, 6), qp(rp, 6);
  CHECK(verify_quantized(qp, 10).pass());
  RetractComparison cmp = compare_retracts(q, qp);
  for (const auto& c : cmp.report.checks) INFO(c.name << ": " << c.detail);
  CHECK(cmp.report.pass());
  // classical part of lambda equals s(f' - f) = s K lambda_0 = lambda_0
  for (int a = 0; a < 3; ++a) CHECK(cmp.lambda[0][a].equals(lam[a]));
  CHECK(hvec_is_zero(hvec_sub(cmp.xi[0][1], hvec_unit(3, 1))));
}

TEST_CASE("inverse-hbar step on the A3 example") {
  auto r = retract_of(one_var(4));
  QuantizedRetract q(r, 6);
  const Potential& pot = r->potential();
  CFamily om{{Key{2, 2}, X(4)}};
  auto tw = [&](const CFamily& xi, const Key& k) {
    auto it = xi.find(k);
    return it == xi.end() ? PolyElement() : quantum_K(pot, it->second);
  };
  CFamily out = nabla_inv_h(q, om, tw);
  CHECK(out.at(Key{2, 2}).equals(PolyElement::constant(1, HPoly(-1))));
}
