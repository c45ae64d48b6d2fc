#include <stdexcept>
#include <set>

#include "coherence/torus.hpp"
#include "doctest.h"

using namespace coherence;

TEST_SUITE("torus") {
  TEST_CASE("shape construction") {
    const TorusShape s(2, 5);
    CHECK(s.dim() == 2);
    CHECK(s.side() == 5);
    CHECK(s.sites() == 25);
    CHECK_THROWS_AS(TorusShape(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(TorusShape(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(TorusShape(64, 3), std::invalid_argument);
    CHECK_NOTHROW(TorusShape(39, 3));
  }

  TEST_CASE("multi-index reduction and wrap-around") {
    const TorusShape s(2, 4);
    const MultiIndex a(s, {-1, 5});
    CHECK(a[0] == 3);
    CHECK(a[1] == 1);
    const auto sum = wrap_add(s, a, MultiIndex(s, {2, 3}));
    CHECK(sum == MultiIndex(s, {1, 0}));
    CHECK(wrap_negate(s, a) == MultiIndex(s, {1, 3}));
    CHECK(wrap_add(s, a, wrap_negate(s, a)).is_zero());
    CHECK_THROWS_AS(wrap_add(s, a, MultiIndex(TorusShape(1, 4), {1})), std::invalid_argument);
  }

  TEST_CASE("row-major enumeration, last coordinate fastest") {
    const TorusShape s(2, 3);
    const auto sites = enumerate_sites(s);
    REQUIRE(sites.size() == 9);
    CHECK(sites[1] == MultiIndex(s, {0, 1}));
    CHECK(sites[3] == MultiIndex(s, {1, 0}));
    for (std::int64_t i = 0; i < s.sites(); ++i) {
      CHECK(linear_index(s, sites[static_cast<std::size_t>(i)]) == i);
      CHECK(site_at(s, i) == sites[static_cast<std::size_t>(i)]);
    }
    CHECK_THROWS_AS(site_at(s, 9), std::out_of_range);
    std::set<MultiIndex> unique(sites.begin(), sites.end());
    CHECK(unique.size() == 9);
  }

  TEST_CASE("for_each_site matches enumerate_sites") {
    const TorusShape s(3, 4);
    const auto sites = enumerate_sites(s);
    std::int64_t visited = 0;
    for_each_site(s, [&](const int* c, std::int64_t lin) {
      const auto& ref = sites[static_cast<std::size_t>(lin)];
      for (int r = 0; r < 3; ++r) CHECK(c[r] == ref[static_cast<std::size_t>(r)]);
      ++visited;
    });
    CHECK(visited == 64);
  }

  TEST_CASE("coordinate parity and folded coordinates") {
    const TorusShape s(2, 6);
    CHECK(coordinate_sum_parity(MultiIndex(s, {1, 2})) == Parity::odd);
    CHECK(coordinate_sum_parity(MultiIndex(s, {3, 5})) == Parity::even);
    CHECK(signed_coord(4, 6) == -2);
    CHECK(signed_coord(3, 6) == 3);
    CHECK(folded_coord(5, 6) == 1);
    CHECK(folded_coord(3, 7) == 3);
    CHECK(folded_coord(4, 7) == 3);
  }
}
