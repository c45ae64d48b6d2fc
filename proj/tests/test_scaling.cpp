#include <cmath>
#include <stdexcept>

#include "coherence/error.hpp"
#include "coherence/scaling.hpp"
#include "coherence/spectral.hpp"
#include "doctest.h"

using namespace coherence;

namespace {

std::vector<double> generate(const std::vector<int>& sizes, auto&& fn) {
  std::vector<double> out;
  for (int n : sizes) out.push_back(fn(static_cast<double>(n)));
  return out;
}

}  // namespace

TEST_SUITE("scaling") {
  TEST_CASE("growth classification on synthetic data") {
    const std::vector<int> sizes{17, 33, 65, 129, 257};
    auto fit = classify_growth(sizes, generate(sizes, [](double n) { return 0.3 * n * n; }));
    CHECK(fit.cls == GrowthClass::power);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.constant == doctest::Approx(0.3).epsilon(1e-8));

    fit = classify_growth(sizes, generate(sizes, [](double n) { return 2.0 * std::log(n); }));
    CHECK(fit.cls == GrowthClass::logarithmic);
    CHECK(fit.log_r2 > 0.999);

    fit = classify_growth(sizes, generate(sizes, [](double n) { return 5.0 - 1.0 / n; }));
    CHECK(fit.cls == GrowthClass::bounded);

    fit = classify_growth(sizes, generate(sizes, [](double n) { return std::sqrt(n); }));
    CHECK(fit.cls == GrowthClass::power);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-10));

    // A near-linear power law over a short range still fits log N well.
    const std::vector<int> narrow{17, 19, 21};
    fit = classify_growth(narrow, generate(narrow, [](double n) { return n; }));
    CHECK(fit.cls == GrowthClass::power);

    fit = classify_growth({5, 9, 17, 33}, generate({5, 9, 17, 33}, [](double n) { return n; }));
    CHECK(fit.points == 2);
    CHECK_THROWS(classify_growth({5, 9, 17}, {1.0, 2.0, 3.0}));
    CHECK_THROWS(classify_growth({17, 33}, {1.0}));
  }

  TEST_CASE("expected growth matching") {
    GrowthFit fit{GrowthClass::power, 1.04, 0.01, 0.9, 1.0, 5};
    CHECK(ExpectedGrowth{GrowthClass::power, 1.0, 0.1}.matches(fit));
    CHECK_FALSE(ExpectedGrowth{GrowthClass::power, 2.0, 0.1}.matches(fit));
    CHECK_FALSE(ExpectedGrowth{GrowthClass::logarithmic}.matches(fit));
    CHECK(to_string(GrowthClass::bounded) == "bounded");
  }

  TEST_CASE("lattice sums") {
    CHECK(folded_lattice_sum(1, 3, 1) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(folded_lattice_sum(2, 2, 1) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(lattice_sum(1, 5, 1) == doctest::Approx(1.25).epsilon(1e-15));
    for (int d = 1; d <= 4; ++d)
      for (int p = 1; p <= 2; ++p)
        for (int nbar : {2, 3, 5, 8}) {
          CHECK(folded_lattice_sum(d, nbar, p) ==
                doctest::Approx(folded_lattice_sum_brute(d, nbar, p)).epsilon(1e-12));
          CHECK(folded_lattice_sum(d, nbar + 1, p) > folded_lattice_sum(d, nbar, p));
        }
    try {
      lattice_sum(2, 8, 1);
      FAIL("expected a parity error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parity);
    }
    CHECK(lattice_sum_reference(2, 1, 10.0) == doctest::Approx(std::log(10.0)));
    CHECK(lattice_sum_reference(3, 1, 10.0) == doctest::Approx(9.0));
    CHECK(lattice_sum_reference(1, 1, 10.0) == doctest::Approx(0.9));
  }

  TEST_CASE("lattice sum asymptotics") {
    const std::vector<int> sides{31, 63, 127, 255, 511};
    const struct {
      int d, p;
      GrowthClass cls;
      double exponent;
    } cases[] = {{1, 1, GrowthClass::bounded, 0.0},     {2, 1, GrowthClass::logarithmic, 0.0},
                 {3, 1, GrowthClass::power, 1.0},       {3, 2, GrowthClass::bounded, 0.0},
                 {4, 2, GrowthClass::logarithmic, 0.0}, {5, 2, GrowthClass::power, 1.0}};
    for (const auto& c : cases) {
      CAPTURE(c.d);
      CAPTURE(c.p);
      const auto r = verify_sum_asymptotics(c.d, c.p, sides);
      CHECK(r.detected == c.cls);
      if (c.cls == GrowthClass::power) CHECK(r.exponent == doctest::Approx(c.exponent).epsilon(0.15));
      CHECK(r.c_high / r.c_low <= 1.5);
      CHECK(r.matches);
    }
    CHECK_THROWS(verify_sum_asymptotics(2, 1, {31, 64, 127}));
  }

  TEST_CASE("table sweeps reproduce the expected growth") {
    for (const auto& plan : growth_table_plans()) {
      CAPTURE(plan.label);
      CAPTURE(plan.dim);
      const auto rep = sweep(plan, 4);
      CHECK(rep.points.size() == plan.sizes.size());
      CHECK(rep.verdict);
      if (plan.effort_target)
        for (const auto& p : rep.points) CHECK(p.effort == doctest::Approx(*plan.effort_target).epsilon(1e-9));
    }
  }

  TEST_CASE("parallel sweep equals the serial sweep") {
    const auto plans = growth_table_plans();
    const auto& plan = plans.front();
    const auto a = sweep(plan, 1);
    const auto b = sweep(plan, 3);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      CHECK(a.points[i].side == b.points[i].side);
      CHECK(a.points[i].per_site == b.points[i].per_site);
    }
    CHECK(a.fit.slope == b.fit.slope);
  }

  TEST_CASE("sweep errors propagate") {
    SweepPlan plan{.label = "odd lrd",
                   .dim = 1,
                   .sizes = {17, 33},
                   .spec_at = [](const TorusShape& s) {
                     return FeedbackSpec::consensus(standard_consensus_stencil(s, 1.0));
                   },
                   .measure = MeasureKind::long_range_deviation,
                   .effort_target = std::nullopt,
                   .expected = std::nullopt};
    try {
      sweep(plan, 2);
      FAIL("expected a parity error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parity);
    }
  }

  TEST_CASE("consensus lower bound") {
    for (int n : {9, 16, 33, 64}) {
      const TorusShape s(1, n);
      for (double beta : {1.0, static_cast<double>(n)}) {
        const auto p = lower_bound_check_consensus(FeedbackSpec::consensus(standard_consensus_stencil(s, beta)));
        CHECK(p.holds);
        CHECK(p.dav_total >= p.bound);
        CHECK(p.effort == doctest::Approx(beta));
      }
    }
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto spec = FeedbackSpec::consensus(random_local_consensus(TorusShape(2, 9), 2, seed));
      CHECK(lower_bound_check_consensus(spec).holds);
    }
    CHECK_THROWS_AS(lower_bound_check_consensus(standard_vehicular(TorusShape(1, 9), 1.0, 0.0, 0.0)), Error);
  }

  TEST_CASE("auxiliary inequalities") {
    const auto reps = auxiliary_inequality_suite(5000, 3);
    CHECK(reps.size() >= 3);
    for (const auto& r : reps) {
      CAPTURE(r.name);
      CHECK(r.samples >= 5000);
      CHECK(r.violations == 0);
      CHECK(r.worst_margin >= 0.0);
    }
  }

  TEST_CASE("random local stencils are valid and stable") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const int q = 1 + static_cast<int>(seed % 3);
      const auto st = random_local_consensus(TorusShape(2, 2 * q + 3), q, seed);
      const auto spec = FeedbackSpec::consensus(st);
      CHECK(validate_structure(spec).failures.empty());
      CHECK(stability_check(spec).stable);
      CHECK(st.radius() == q);
    }
    CHECK(random_local_consensus(TorusShape(1, 9), 2, 5).max_abs() ==
          random_local_consensus(TorusShape(1, 9), 2, 5).max_abs());
    CHECK_THROWS_AS(random_local_consensus(TorusShape(1, 4), 2, 1), std::invalid_argument);
  }

  TEST_CASE("least damped eigenvalue scaling") {
    const auto s1 = least_damped_scaling(1, {16, 32, 64, 128});
    CHECK(s1.expected == 2.0);
    CHECK(s1.exponent == doctest::Approx(2.0).epsilon(0.02));
    const auto s2 = least_damped_scaling(2, {8, 16, 32});
    CHECK(s2.expected == 1.0);
    CHECK(s2.exponent == doctest::Approx(1.0).epsilon(0.03));
    CHECK(s1.inverse_gap.front() == doctest::Approx(-1.0 / least_damped_eigenvalue(FeedbackSpec::consensus(
                                                                standard_consensus_stencil(TorusShape(1, 16), 1.0)))));
  }
}
