#include <stdexcept>
#include <random>

#include "coherence/spectral.hpp"
#include "coherence/stencil.hpp"
#include "doctest.h"

using namespace coherence;

namespace {

// (Gx)_k = sum_j G_j x_{k-j} evaluated straight from the definition.
Eigen::VectorXd dense_convolution(const Stencil& s, const Eigen::VectorXd& x) {
  const auto& shape = s.shape();
  const auto g = coefficient_array(s);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (std::int64_t k = 0; k < shape.sites(); ++k) {
    const auto ki = site_at(shape, k);
    for (std::int64_t j = 0; j < shape.sites(); ++j) {
      const auto src = wrap_add(shape, ki, wrap_negate(shape, site_at(shape, j)));
      out(k) += g(j) * x(linear_index(shape, src));
    }
  }
  return out;
}

Eigen::VectorXd random_vector(std::int64_t m, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n;
  Eigen::VectorXd v(m);
  for (auto& x : v) x = n(rng);
  return v;
}

}  // namespace

TEST_SUITE("stencil") {
  TEST_CASE("delta is the identity") {
    const TorusShape s(2, 5);
    const auto x = random_vector(s.sites(), 1);
    CHECK((apply_convolution(Stencil::delta(s), x) - x).norm() == 0.0);
  }

  TEST_CASE("standard consensus stencil read-off") {
    const TorusShape s(1, 4);
    const auto o = standard_consensus_stencil(s, 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x(0) = 1.0;
    const Eigen::VectorXd y = apply_convolution(o, x);
    CHECK(y(0) == -2.0);
    CHECK(y(1) == 1.0);
    CHECK(y(2) == 0.0);
    CHECK(y(3) == 1.0);
    CHECK(o.sum() == 0.0);
    CHECK(o.max_abs() == 2.0);
    CHECK(o.l1_norm() == 4.0);
    CHECK_THROWS_AS(standard_consensus_stencil(TorusShape(1, 2), 1.0), std::invalid_argument);
  }

  TEST_CASE("relative stencils annihilate constants") {
    const TorusShape s(2, 6);
    const auto o = standard_consensus_stencil(s, 0.7);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(s.sites(), 3.25);
    CHECK(apply_convolution(o, c).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("sparse application matches the dense definition") {
    const TorusShape s(2, 5);
    const Stencil g(s, 2, {{{0, 0}, -3.0}, {{1, 0}, 0.5}, {{-2, 1}, 0.25}, {{0, -1}, 1.5}, {{2, 2}, -0.75}});
    const auto x = random_vector(s.sites(), 2);
    CHECK((apply_convolution(g, x) - dense_convolution(g, x)).norm() < 1e-13);
  }

  TEST_CASE("convolution commutes with cyclic shifts") {
    const TorusShape s(2, 6);
    const Stencil g(s, 1, {{{0, 0}, -2.0}, {{1, 0}, 0.8}, {{0, -1}, 1.2}});
    const auto x = random_vector(s.sites(), 3);
    const Stencil shift(s, 3, {{{1, 2}, 1.0}});
    const auto lhs = apply_convolution(g, apply_convolution(shift, x));
    const auto rhs = apply_convolution(shift, apply_convolution(g, x));
    CHECK((lhs - rhs).norm() < 1e-13);
  }

  TEST_CASE("construction normalizes entries") {
    const TorusShape s(1, 7);
    const Stencil g(s, 2, {{{1}, 0.5}, {{-6}, 0.25}, {{2}, 0.0}, {{-1}, 1.0}});
    CHECK(g.nonzeros() == 2);
    CHECK(g.coefficient(MultiIndex(s, {1})) == 0.75);
    CHECK(g.coefficient(MultiIndex(s, {2})) == 0.0);
    CHECK_THROWS_AS(Stencil(s, 1, {{{2}, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Stencil(s, 1, {{{0, 0}, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Stencil(s, 1, {{{0}, std::nan("")}}), std::invalid_argument);
    CHECK_THROWS_AS(Stencil(s, -1, {}), std::invalid_argument);
  }

  TEST_CASE("resizing keeps signed offsets") {
    const TorusShape s(1, 5);
    const auto o = standard_consensus_stencil(s, 2.0);
    const auto big = o.resized(TorusShape(1, 11));
    CHECK(big.coefficient(MultiIndex(big.shape(), {10})) == 2.0);
    CHECK(big.coefficient(MultiIndex(big.shape(), {1})) == 2.0);
    CHECK(big.coefficient(MultiIndex(big.shape(), {0})) == -4.0);
    CHECK(o.scaled(0.5).coefficient(MultiIndex(s, {0})) == -2.0);
  }

  TEST_CASE("length mismatch is rejected") {
    const TorusShape s(1, 5);
    CHECK_THROWS_AS(apply_convolution(Stencil::delta(s), Eigen::VectorXd::Zero(4)), std::invalid_argument);
  }

  TEST_CASE("structural validation is a report") {
    const TorusShape s(1, 4);
    const auto good = FeedbackSpec::consensus(standard_consensus_stencil(s, 1.0));
    CHECK(validate_structure(good).ok());

    const Stencil skew(s, 1, {{{0}, -1.0}, {{1}, 1.0}});
    const auto r1 = validate_structure(FeedbackSpec::consensus(skew));
    CHECK_FALSE(r1.symmetric);
    CHECK(r1.sum_zero);

    const Stencil leaky(s, 1, {{{0}, -3.0}, {{1}, 1.0}, {{-1}, 1.0}});
    CHECK_FALSE(validate_structure(FeedbackSpec::consensus(leaky)).sum_zero);

    const Stencil wide(s, 2, {{{0}, -2.0}, {{2}, 1.0}, {{-2}, 1.0}});
    const auto r3 = validate_structure(FeedbackSpec::consensus(wide));
    CHECK_FALSE(r3.locality);
    CHECK_FALSE(r3.failures.empty());

    const auto positive = standard_vehicular(TorusShape(1, 5), 1.0, 0.5, -1.0);
    CHECK_FALSE(validate_structure(positive).signs);
    const auto friction = standard_vehicular(TorusShape(1, 5), 1.0, 0.0, 0.0, -0.1);
    CHECK_FALSE(validate_structure(friction).signs);
  }

  TEST_CASE("platoon gains") {
    const TorusShape s(1, 6);
    const auto spec = stencil_from_platoon_gains(s, 2.0, 1.0, 0.5, 0.5, -0.1, 0.0);
    CHECK(spec.g_rel().coefficient(MultiIndex(s, {1})) == 2.0);
    CHECK(spec.g_rel().coefficient(MultiIndex(s, {-1})) == 1.0);
    CHECK(spec.g_rel().coefficient(MultiIndex(s, {0})) == -3.0);
    CHECK(spec.g_o() == -0.1);
    CHECK(spec.position_array().coefficient(MultiIndex(s, {0})) == doctest::Approx(-3.1));
    CHECK_FALSE(validate_structure(spec).symmetric);
    CHECK_THROWS_AS(stencil_from_platoon_gains(TorusShape(2, 6), 1, 1, 1, 1, 0, 0), std::invalid_argument);
  }

  TEST_CASE("feedback spec accessors") {
    const TorusShape s(1, 5);
    const auto v = standard_vehicular(s, 1.0, -0.5, -0.25, 0.1);
    CHECK(v.kind() == FeedbackKind::vehicular);
    CHECK(v.velocity_array().coefficient(MultiIndex(s, {0})) == doctest::Approx(-2.35));
    CHECK_THROWS(v.a());
    const auto c = FeedbackSpec::consensus(standard_consensus_stencil(s, 1.0));
    CHECK_THROWS(c.g_rel());
    CHECK(c.resized(TorusShape(1, 9)).shape().side() == 9);
  }
}
