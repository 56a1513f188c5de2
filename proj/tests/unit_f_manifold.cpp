#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bvc/f_manifold.hpp"

using namespace bvc;

namespace {

Potential one_var(int d) { return Potential::make(1, XPoly{{{d}, Rational(1, d)}}); }

std::shared_ptr<const Retract> retract_of(const Potential& p) {
  return std::make_shared<Retract>(milnor_basis(p));
}

void require_pass(const Report& r) {
  for (const auto& c : r.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.pass);
  }
}

struct Pipeline {
  QuantizedRetract q;
  MasterSolver s;
  Pipeline(int d, int n_t) : q(retract_of(one_var(d)), 6), s(q, n_t + 2) { s.solve_level_one(); }
};

}  // namespace

TEST_CASE("graded series signs") {
  TSeries a({1, 1}, 3), b({1, 1}, 3);
  a.add({1, 0}, HLaurent(1));
  b.add({0, 1}, HLaurent(1));
  TSeries ab = a.mul(b), ba = b.mul(a);
  CHECK((ab + ba).is_zero());
  CHECK(a.mul(a).is_zero());
  // d/dt0 (t0 t1) = t1, d/dt1 (t0 t1) = -t0
  CHECK(ab.derivative(0).coeff({0, 1}).equals(HLaurent(1)));
  CHECK(ab.derivative(1).coeff({1, 0}).equals(HLaurent(-1)));
  auto [e, s] = reversed_monomial({0, 1}, {1, 1});  // t1 t0
  CHECK(e == Exps{1, 1});
  CHECK(s == -1);
  CHECK(reversed_monomial({0, 0}, {1, 1}).second == 0);
}

TEST_CASE("A2 structure constants and flat coordinates") {
  Pipeline p(3, 4);
  auto A = structure_constants(p.s, 4);
  for (int g = 0; g < 2; ++g) CHECK(A.at(1, 1, g).coeff({0}).is_zero());
  for (int b = 0; b < 2; ++b)
    for (int g = 0; g < 2; ++g)
      CHECK(A.at(0, b, g).coeff({0, 0}).equals(HLaurent(b == g ? 1 : 0)));
  require_pass(wdvv_report(A));
  auto T = flat_coordinates(p.s, 4);
  auto pde = verify_flat_coordinates(T, A);
  INFO(pde.detail);
  require_pass(pde.report);
  auto z = generating_function(p.s, make_expectation(p.q), T);
  require_pass(z.report);
  // coefficient of t^1 in Z is -iota(e_1)/h = 0; of t^0 it is -1/h
  CHECK(z.route_a.coeff({1, 0}).equals(HLaurent::monomial(-1, -1)));
  CHECK(z.route_a.coeff({0, 1}).is_zero());
}

TEST_CASE("A3 F-manifold") {
  Pipeline p(4, 4);
  auto A = structure_constants(p.s, 4);
  CHECK(A.at(1, 1, 2).coeff({0, 0, 0}).equals(HLaurent(1)));
  require_pass(wdvv_report(A));
  auto T = flat_coordinates(p.s, 4);
  // t2 t2 coefficient of T^2 is pi^0_2(e2, e2)^2 / (2 (-h)) = 0; t1 t1 carries
  // m^_2(e1, e1) = e2, giving -1/(2h)
  CHECK(T.T[2].coeff({0, 0, 2}).is_zero());
  CHECK(T.T[2].coeff({0, 2, 0}).equals(HLaurent::monomial(-1, Rational(-1, 2))));
  auto pde = verify_flat_coordinates(T, A);
  INFO(pde.detail);
  require_pass(pde.report);
  CHECK(pde.sign == 1);
  require_pass(theta_mc_check(p.s, 3));
  require_pass(generating_function(p.s, make_expectation(p.q), T).report);
}

TEST_CASE("corrupted structure constants are located") {
  Pipeline p(4, 2);
  auto A = structure_constants(p.s, 2);
  A.at(1, 2, 2).add({0, 0, 0}, HLaurent(1));
  A.at(2, 1, 2).add({0, 0, 0}, HLaurent(1));
  Report r = wdvv_report(A);
  CHECK_FALSE(r.pass());
  CHECK(r.first_failure()->name.find("associativity") != std::string::npos);
}

TEST_CASE("insufficient arity") {
  QuantizedRetract q(retract_of(one_var(3)), 6);
  MasterSolver s(q, 3);
  s.solve_level_one();
  CHECK_THROWS_AS(structure_constants(s, 4), InputError);
}
