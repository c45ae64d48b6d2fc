#include "coherence/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coherence/error.hpp"
#include "coherence/h2.hpp"

namespace coherence {

double FourierSymbol::imaginary_ratio() const {
  const double scale = values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return values.imag().cwiseAbs().maxCoeff() / scale;
}

Eigen::VectorXd FourierSymbol::real_values(double rel_tol) const {
  if (!is_real(rel_tol)) {
    throw Error(ErrorCode::config, "Fourier symbol is not real (relative imaginary part " +
                                       std::to_string(imaginary_ratio()) +
                                       "); the stencil is not reflection symmetric");
  }
  return values.real();
}

FourierSymbol symbol_of_stencil(const Stencil& s) {
  const auto& shape = s.shape();
  const int d = shape.dim();
  const int n = shape.side();
  const auto roots = unit_roots<double>(n);
  FourierSymbol out{shape, Eigen::VectorXcd::Zero(shape.sites())};
  for_each_site(shape, [&](const int* wave, std::int64_t lin) {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& e : s.entries()) {
      long phase = 0;
      for (int r = 0; r < d; ++r) phase += static_cast<long>(wave[r]) * e.offset[static_cast<std::size_t>(r)];
      acc += e.value * roots[static_cast<std::size_t>(phase % n)];
    }
    out.values(lin) = acc;
  });
  return out;
}

Eigen::VectorXd coefficient_array(const Stencil& s) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.shape().sites());
  for (const auto& e : s.entries()) out(linear_index(s.shape(), e.offset)) = e.value;
  return out;
}

double standard_symbol(const TorusShape& shape, double beta, const MultiIndex& n) {
  if (n.size() != static_cast<std::size_t>(shape.dim()))
    throw std::invalid_argument("wavenumber dimension does not match torus");
  double acc = 0.0;
  for (int c : n.coords())
    acc += 1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(c) / shape.side());
  return -2.0 * beta * acc;
}

double trace_of_circulant(const Stencil& s) {
  return static_cast<double>(s.shape().sites()) * s.coefficient(MultiIndex::zero(s.shape()));
}

Eigen::VectorXcd consensus_symbol(const FeedbackSpec& spec) {
  return symbol_of_stencil(spec.a()).values;
}

Eigen::VectorXd position_symbol(const FeedbackSpec& spec) {
  Eigen::VectorXd g = symbol_of_stencil(spec.g_rel()).real_values();
  return g.array() + spec.g_o();
}

Eigen::VectorXd velocity_symbol(const FeedbackSpec& spec) {
  Eigen::VectorXd f = symbol_of_stencil(spec.f_rel()).real_values();
  return f.array() + (spec.f_o() - spec.mu());
}

namespace {

// Largest real part among the roots of s^2 - f s - g = 0.
double block_abscissa(double g, double f) {
  const double disc = f * f + 4.0 * g;
  if (disc >= 0.0) return 0.5 * (f + std::sqrt(disc));
  return 0.5 * f;
}

}  // namespace

double least_damped_eigenvalue(const FeedbackSpec& spec) {
  require_stable(spec);
  double best = -std::numeric_limits<double>::infinity();
  if (spec.kind() == FeedbackKind::consensus) {
    const auto a = consensus_symbol(spec);
    for (Eigen::Index i = 1; i < a.size(); ++i) best = std::max(best, a(i).real());
  } else {
    const auto g = position_symbol(spec);
    const auto f = velocity_symbol(spec);
    for (Eigen::Index i = 1; i < g.size(); ++i) best = std::max(best, block_abscissa(g(i), f(i)));
  }
  return best;
}

ModalEnergy modal_energy_spectrum(const FeedbackSpec& spec) {
  if (spec.kind() != FeedbackKind::consensus)
    throw Error(ErrorCode::config, "modal energy spectrum is defined for consensus specs");
  require_stable(spec);
  const auto a = consensus_symbol(spec);
  ModalEnergy out{Eigen::VectorXd::Zero(a.size()), 0};
  for (Eigen::Index i = 1; i < a.size(); ++i) out.energy(i) = 1.0 / (2.0 * std::abs(a(i).real()));
  return out;
}

}  // namespace coherence
