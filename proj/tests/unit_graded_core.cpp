#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bvc/graded_core.hpp"

using namespace bvc;

TEST_CASE("P(3) listing order") {
  const auto& ps = enumerate_partitions(3);
  REQUIRE(ps.size() == 5);
  CHECK(ps[0].str() == "{1,2,3}");
  CHECK(ps[1].str() == "{1,2}|{3}");
  CHECK(ps[2].str() == "{2}|{1,3}");
  CHECK(ps[3].str() == "{1}|{2,3}");
  CHECK(ps[4].str() == "{1}|{2}|{3}");
}

TEST_CASE("partition counts match Bell numbers") {
  for (int n = 0; n <= 7; ++n)
    CHECK(static_cast<int64_t>(enumerate_partitions(n).size()) == bell_number(n));
  CHECK(bell_number(4) == 15);
  CHECK(bell_number(7) == 877);
}

TEST_CASE("blocks are ascending and ordered by maximum") {
  for (int n = 1; n <= 6; ++n)
    for (const auto& p : enumerate_partitions(n)) {
      for (size_t i = 0; i < p.blocks.size(); ++i) {
        CHECK(std::is_sorted(p.blocks[i].begin(), p.blocks[i].end()));
        if (i) CHECK(p.blocks[i - 1].back() < p.blocks[i].back());
      }
      CHECK(p.blocks.back().back() == n - 1);
    }
}

TEST_CASE("arity cap") {
  CHECK_THROWS_AS(enumerate_partitions(8), ResourceError);
}

TEST_CASE("koszul sign") {
  const auto& ps = enumerate_partitions(3);
  // {2}|{1,3}: sequence 2,1,3
  CHECK(koszul_sign(ps[2], {1, 1, 0}) == -1);
  CHECK(koszul_sign(ps[2], {1, 0, 1}) == 1);
  CHECK(koszul_sign(ps[2], {0, 0, 0}) == 1);
  for (const auto& p : ps) CHECK(koszul_sign(p, {0, 0, 0}) == 1);
}

TEST_CASE("canonicalize graded tuples") {
  std::vector<int> gh{0, -1, -1};
  Key k{2, 1};
  CHECK(canonicalize(k, gh) == -1);
  CHECK(k == Key{1, 2});
  Key r{1, 1};
  CHECK(canonicalize(r, gh) == 0);
  Key e{0, 0, 2};
  CHECK(canonicalize(e, gh) == 1);
  CHECK(symmetric_keys(3, 2, gh).size() == 4);  // 00 01 02 12
}

TEST_CASE("hbar series arithmetic and orders") {
  HPoly a = HPoly(1) + HPoly::hbar(2) * Rational(3);
  CHECK(a.exact());
  HPoly b = HPoly::hbar(5) * a;
  CHECK(b.order() == 6);  // hbar^7 term dropped
  CHECK(b.coeff(5) == 1);
  CHECK(b.coeff(7) == 0);
  HPoly c = HPoly::minus_hbar(3);
  CHECK(c.coeff(3) == -1);
  CHECK((HPoly(2) * Rational(1, 2)).coeff(0) == 1);
}

TEST_CASE("h_divide") {
  // p * hbar^k divided by hbar^k is p truncated to N - k
  HPoly p = HPoly(1) + HPoly::hbar(1) * Rational(2) + HPoly::hbar(3);
  for (int k = 0; k <= 3; ++k) {
    HPoly q = h_divide(p.shifted(k), k);
    CHECK(q.equals(p.with_order(6 - k)));
    if (k + 3 <= 6) CHECK(q.exact());
  }
  HPoly bad = HPoly(1) + HPoly::hbar(2);
  try {
    (void)h_divide(bad, 1);
    FAIL("expected NotDivisibleError");
  } catch (const NotDivisibleError& e) {
    CHECK(e.exponent == 0);
  }
  HPoly trunc = HPoly::hbar(4).with_order(4);
  CHECK_THROWS_AS((void)h_divide(trunc, 5), NotDivisibleError);
  HPoly z = HPoly::zero_with_order(3);
  CHECK_THROWS_AS((void)h_divide(z, 4), ResourceError);
}

TEST_CASE("equality up to common precision") {
  HPoly a = (HPoly(1) + HPoly::hbar(3)).with_order(2);
  HPoly b = HPoly(1);
  CHECK(a.equals(b));
  CHECK(a.order() == 2);
}

TEST_CASE("Laurent lower bound") {
  ConfigScope scope(Config{6, 2, 7, 1});
  CHECK_NOTHROW(HLaurent::hbar(-2));
  CHECK_THROWS_AS(HLaurent::hbar(-3), ResourceError);
}
