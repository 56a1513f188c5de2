#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bvc/master_solver.hpp"

using namespace bvc;

namespace {

PolyElement X(int p = 1) { return PolyElement::x(1, 0, p); }
PolyElement E() { return PolyElement::eta(1, 0); }

const Potential& free_pot() {
  static Potential p = Potential::make(1, XPoly{});
  return p;
}

// exp(hbar a d^2/dx^2), a cochain map for S = 0 since it commutes with Delta
PolyElement heat(const Rational& a, const PolyElement& p) {
  PolyElement out = p, term = p;
  for (int k = 1; !term.is_zero(); ++k) {
    term = d_x(d_x(term, 0), 0);
    term = (HPoly::hbar(1) * (a / k)) * term;
    out += term;
  }
  return out;
}

// x -> l x, eta -> eta / l
PolyElement scale(const Rational& l, const PolyElement& p) {
  PolyElement out;
  for (const auto& [m, c] : p.terms()) {
    Rational f = 1;
    for (int k = 0; k < m.x[0]; ++k) f *= l;
    if (m.eta) f /= l;
    out += (f * c) * PolyElement::monomial(m);
  }
  return out;
}

std::vector<PolyElement> test_set() { return {X(), X(2), X() * E(), E(), X(3) + X()}; }

// (second . first)_n on xs
PolyElement compose(const DescendantMorphism<PolyElement>& second,
                    const DescendantMorphism<PolyElement>& first,
                    const std::vector<PolyElement>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = parity(xs[i].ghost_or(0));
  PolyElement out;
  for (const Partition& p : enumerate_partitions(n)) {
    std::vector<PolyElement> args;
    for (const auto& b : p.blocks) {
      std::vector<PolyElement> sub;
      for (int q : b) sub.push_back(xs[q]);
      args.push_back(first(sub));
    }
    out += Rational(koszul_sign(p, deg)) * second(args);
  }
  return out;
}

void check_functor(const DescendantMorphism<PolyElement>::Map& f,
                   const DescendantMorphism<PolyElement>::Map& g) {
  DescendantMorphism<PolyElement> F(f), G(g);
  DescendantMorphism<PolyElement> FG([&](const PolyElement& p) { return f(g(p)); });
  auto ts = test_set();
  for (int n = 1; n <= 3; ++n)
    for (const Key& k : symmetric_keys(static_cast<int>(ts.size()), n, {0, 0, -1, -1, 0})) {
      std::vector<PolyElement> xs;
      for (int i : k) xs.push_back(ts[i]);
      PolyElement d = FG(xs) - compose(F, G, xs);
      INFO(key_str(k) << ": " << d.str());
      CHECK(d.is_zero());
    }
}

}  // namespace

TEST_CASE("identity has no higher descendants") {
  DescendantMorphism<PolyElement> id([](const PolyElement& p) { return p; });
  auto ts = test_set();
  CHECK(id({ts[0]}).equals(ts[0]));
  CHECK(id({ts[0], ts[1]}).is_zero());
  CHECK(id({ts[0], ts[2], ts[4]}).is_zero());
}

TEST_CASE("pointed cochain precondition") {
  auto span = spanning_monomials(1, 5, 1);
  std::function<PolyElement(const PolyElement&)> zero = [](const PolyElement&) {
    return PolyElement();
  };
  std::function<PolyElement(const PolyElement&)> kp = [](const PolyElement& p) {
    return quantum_K(free_pot(), p);
  };
  std::string w;
  CHECK_FALSE(check_pointed_cochain(zero, kp, PolyElement::one(1), free_pot(), span, &w));
  CHECK(w.find("F(1)") != std::string::npos);
  std::function<PolyElement(const PolyElement&)> h = [](const PolyElement& p) {
    return heat(Rational(1, 2), p);
  };
  CHECK(check_pointed_cochain(h, kp, PolyElement::one(1), free_pot(), span));
}

TEST_CASE("heat kernel descendants are hbar-divisible") {
  DescendantMorphism<PolyElement> F([](const PolyElement& p) { return heat(Rational(1, 3), p); });
  auto probe = probe_descendant(F, test_set(), 4);
  CHECK(probe.ok);
  // (-h) psi_2(x, x) = F(x^2) - F(x)^2 = 2 a h
  CHECK(F({X(), X()}).equals(PolyElement::constant(1, HPoly(Rational(-2, 3)))));
}

TEST_CASE("descendant functoriality") {
  check_functor([](const PolyElement& p) { return scale(2, p); },
                [](const PolyElement& p) { return scale(Rational(-1, 3), p); });
  check_functor([](const PolyElement& p) { return heat(Rational(1, 2), p); },
                [](const PolyElement& p) { return heat(Rational(-1, 5), p); });
  check_functor([](const PolyElement& p) { return heat(1, p); },
                [](const PolyElement& p) { return scale(3, p); });
}

TEST_CASE("expectation descendant on A2") {
  auto r = std::make_shared<Retract>(
      milnor_basis(Potential::make(1, XPoly{{{3}, Rational(1, 3)}})));
  QuantizedRetract q(r, 6);
  Expectation c = make_expectation(q);
  CHECK(c(PolyElement::one(1)).equals(HPoly(1)));
  for (const Mono& m : spanning_monomials(1, 8, 1))
    CHECK(c(quantum_K(q.classical().potential(), PolyElement::monomial(m))).is_zero());
  DescendantMorphism<HPoly> chi([&](const PolyElement& p) { return c(p); });
  // (-h) chi_2(x, x^2) = c(x^3) - c(x) c(x^2) = h
  CHECK(chi({X(), X(2)}).equals(HPoly(-1)));
  // c kills K-exact shifts of correlator values
  CHECK(c(X(3) + quantum_K(q.classical().potential(), X(4) * E())).equals(c(X(3))));
  MasterSolver s(q, 4);
  s.solve_level_zero();
  auto a = moments_cumulants(s, c, 4);
  auto b = moments_cumulants(s, c, 4);
  INFO(a.detail);
  CHECK(a.pass);
  CHECK(a.incompatibility_arity == b.incompatibility_arity);
  CHECK(a.detail == b.detail);
}
