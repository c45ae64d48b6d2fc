#include <stdexcept>
#include <random>

#include "coherence/error.hpp"
#include "coherence/h2.hpp"
#include "coherence/spectral.hpp"
#include "doctest.h"

using namespace coherence;

namespace {

// O(M^2) transform straight from the definition, with exp() per term.
Eigen::VectorXcd dense_dft(const TorusShape& shape, const Eigen::VectorXcd& f) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(shape.sites());
  for (std::int64_t n = 0; n < shape.sites(); ++n) {
    const auto ni = site_at(shape, n);
    for (std::int64_t k = 0; k < shape.sites(); ++k) {
      const auto ki = site_at(shape, k);
      double dot = 0.0;
      for (std::size_t r = 0; r < ni.size(); ++r) dot += static_cast<double>(ni[r]) * ki[r];
      out(n) += f(k) * std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * dot / shape.side()));
    }
  }
  return out;
}

Stencil random_symmetric(const TorusShape& s, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<Tap> taps;
  double centre = 0.0;
  for (auto off : std::vector<std::vector<std::int64_t>>{{1, 0}, {0, 1}, {1, 1}, {2, -1}}) {
    const double w = u(rng);
    std::vector<std::int64_t> neg{-off[0], -off[1]};
    taps.push_back({off, w});
    taps.push_back({neg, w});
    centre -= 2.0 * w;
  }
  taps.push_back({{0, 0}, centre});
  return Stencil(s, 2, taps);
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("transform of delta and ones") {
    const TorusShape s(2, 5);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(s.sites());
    delta(0) = 1.0;
    const Eigen::VectorXcd d_hat = dft(s, delta);
    CHECK((d_hat - Eigen::VectorXcd::Ones(s.sites())).norm() < 1e-13);
    const Eigen::VectorXcd o_hat = dft(s, Eigen::VectorXd::Ones(s.sites()));
    CHECK(std::abs(o_hat(0) - std::complex<double>(25.0, 0.0)) < 1e-12);
    CHECK(o_hat.tail(s.sites() - 1).norm() < 1e-12);
  }

  TEST_CASE("round trip and dense agreement") {
    const TorusShape s(3, 4);
    std::mt19937 rng(5);
    std::normal_distribution<double> n;
    Eigen::VectorXcd x(s.sites());
    for (auto& v : x) v = {n(rng), n(rng)};
    CHECK((idft(s, dft(s, x)) - x).norm() < 1e-12 * x.norm());
    CHECK((dft(s, x) - dense_dft(s, x)).norm() < 1e-11 * x.norm());
    CHECK_THROWS_AS(dft(s, Eigen::VectorXd::Zero(5)), std::invalid_argument);
  }

  TEST_CASE("symbol of the standard stencil") {
    const TorusShape s(1, 4);
    const auto sym = symbol_of_stencil(standard_consensus_stencil(s, 1.0));
    const Eigen::VectorXcd oracle = dense_dft(s, coefficient_array(standard_consensus_stencil(s, 1.0)).cast<std::complex<double>>());
    const double expected[] = {0.0, -2.0, -4.0, -2.0};
    for (int i = 0; i < 4; ++i) {
      CHECK(sym.values(i).real() == doctest::Approx(expected[i]).epsilon(1e-14));
      CHECK(std::abs(sym.values(i) - oracle(i)) < 1e-13);
    }
    CHECK(sym.is_real());
  }

  TEST_CASE("sparse symbol equals dense transform of the coefficient array") {
    for (int n : {5, 6, 7}) {
      const TorusShape s(2, n);
      const auto g = random_symmetric(s, static_cast<unsigned>(n));
      const auto sym = symbol_of_stencil(g).values;
      const Eigen::VectorXcd oracle = dense_dft(s, coefficient_array(g).cast<std::complex<double>>());
      CHECK((sym - oracle).norm() < 1e-12 * oracle.norm());
      CHECK(symbol_of_stencil(g).imaginary_ratio() < 1e-12);
      CHECK(std::abs(sym(0)) < 1e-12);
    }
  }

  TEST_CASE("closed-form standard symbol") {
    CHECK(standard_symbol(TorusShape(1, 4), 1.0, MultiIndex(TorusShape(1, 4), {0})) == 0.0);
    CHECK(standard_symbol(TorusShape(1, 4), 1.0, MultiIndex(TorusShape(1, 4), {2})) == doctest::Approx(-4.0));
    CHECK(standard_symbol(TorusShape(2, 4), 1.0, MultiIndex(TorusShape(2, 4), {1, 1})) == doctest::Approx(-4.0));
    for (int d = 1; d <= 3; ++d) {
      const TorusShape s(d, 5);
      const auto sym = symbol_of_stencil(standard_consensus_stencil(s, 0.8)).values;
      for (std::int64_t i = 0; i < s.sites(); ++i)
        CHECK(std::abs(sym(i).real() - standard_symbol(s, 0.8, site_at(s, i))) < 1e-12);
    }
    CHECK_THROWS_AS(standard_symbol(TorusShape(2, 4), 1.0, MultiIndex(TorusShape(1, 4), {1})),
                    std::invalid_argument);
  }

  TEST_CASE("identity symbol is all ones") {
    const TorusShape s(2, 3);
    const auto sym = symbol_of_stencil(Stencil::delta(s)).values;
    CHECK((sym - Eigen::VectorXcd::Ones(9)).norm() < 1e-14);
  }

  TEST_CASE("trace of circulant") {
    const TorusShape s(1, 4);
    const auto o = standard_consensus_stencil(s, 1.0);
    CHECK(trace_of_circulant(o) == -8.0);
    CHECK(trace_of_circulant(Stencil::delta(s)) == 4.0);
    CHECK(trace_of_circulant(Stencil(s, 1, {{{1}, 1.0}, {{-1}, 1.0}})) == 0.0);
    const TorusShape s2(2, 6);
    const auto g = random_symmetric(s2, 9);
    CHECK(trace_of_circulant(g) == doctest::Approx(symbol_of_stencil(g).values.sum().real()).epsilon(1e-9));
  }

  TEST_CASE("asymmetric stencil has a complex symbol") {
    const TorusShape s(1, 6);
    const Stencil skew(s, 1, {{{0}, -1.0}, {{1}, 1.0}});
    const auto sym = symbol_of_stencil(skew);
    CHECK_FALSE(sym.is_real());
    CHECK_THROWS_AS(sym.real_values(), Error);
  }

  TEST_CASE("norm inequalities on random arrays") {
    const TorusShape s(2, 6);
    std::mt19937 rng(11);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd f(s.sites());
      for (auto& v : f) v = n(rng);
      const Eigen::VectorXcd fh = dft(s, f);
      CHECK(fh.cwiseAbs().maxCoeff() <= f.cwiseAbs().sum() * (1 + 1e-12));
      CHECK(f.cwiseAbs().maxCoeff() <= fh.cwiseAbs().sum() / s.sites() * (1 + 1e-12));
    }
  }

  TEST_CASE("least damped eigenvalue") {
    const auto spec = FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(1, 4), 1.0));
    CHECK(least_damped_eigenvalue(spec) == doctest::Approx(-2.0));
    // Vehicular d=1 N=4 rel-rel: n=1 gives g=f=-2, roots -1 +/- i.
    const auto veh = standard_vehicular(TorusShape(1, 4), 1.0, 0.0, 0.0);
    CHECK(least_damped_eigenvalue(veh) == doctest::Approx(-1.0));
    const auto bad = FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(1, 4), -1.0));
    CHECK_THROWS_AS(least_damped_eigenvalue(bad), Error);
  }

  TEST_CASE("modal energy spectrum") {
    const auto spec = FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(1, 4), 1.0));
    const auto m = modal_energy_spectrum(spec);
    CHECK(m.energy(0) == 0.0);
    CHECK(m.energy(1) == doctest::Approx(0.25));
    CHECK(m.energy(2) == doctest::Approx(0.125));
    CHECK(m.energy(3) == doctest::Approx(0.25));

    const auto big = FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(2, 9), 1.3));
    const auto e = modal_energy_spectrum(big).energy;
    const auto a = consensus_symbol(big);
    for (Eigen::Index i = 1; i < e.size(); ++i)
      for (Eigen::Index j = 1; j < e.size(); ++j)
        if (std::abs(a(i).real()) < std::abs(a(j).real()) - 1e-12) CHECK(e(i) >= e(j));
    CHECK(e.sum() == doctest::Approx(variance(big, MeasureKind::deviation_from_average).total).epsilon(1e-10));
    CHECK_THROWS_AS(modal_energy_spectrum(standard_vehicular(TorusShape(1, 4), 1.0, 0.0, 0.0)), Error);
  }
}
