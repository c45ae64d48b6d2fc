#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "coherence/stencil.hpp"
#include "coherence/torus.hpp"

namespace coherence {

/// e^{-2 pi i j / N} for j = 0..N-1. Phases are reduced as integers before
/// lookup so large n.k products keep full accuracy.
template <typename Real>
std::vector<std::complex<Real>> unit_roots(int side) {
  std::vector<std::complex<Real>> w(static_cast<std::size_t>(side));
  for (int j = 0; j < side; ++j) {
    const Real theta = -2 * std::numbers::pi_v<Real> * static_cast<Real>(j) / static_cast<Real>(side);
    w[static_cast<std::size_t>(j)] = {std::cos(theta), std::sin(theta)};
  }
  return w;
}

namespace detail {

// One-dimensional transforms along every axis of a row-major array.
template <typename Real>
void transform_axes(const TorusShape& shape, Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>& v,
                    bool inverse) {
  const int n = shape.side();
  auto roots = unit_roots<Real>(n);
  if (inverse)
    for (auto& r : roots) r = std::conj(r);
  std::vector<std::complex<Real>> line(static_cast<std::size_t>(n)), out(line.size());
  std::int64_t stride = 1;
  for (int axis = shape.dim() - 1; axis >= 0; --axis) {
    const std::int64_t block = stride * n;
    for (std::int64_t base = 0; base < shape.sites(); base += block) {
      for (std::int64_t off = 0; off < stride; ++off) {
        for (int k = 0; k < n; ++k) line[static_cast<std::size_t>(k)] = v(base + off + k * stride);
        for (int m = 0; m < n; ++m) {
          std::complex<Real> acc{0, 0};
          for (int k = 0; k < n; ++k)
            acc += line[static_cast<std::size_t>(k)] *
                   roots[static_cast<std::size_t>((static_cast<long>(m) * k) % n)];
          out[static_cast<std::size_t>(m)] = acc;
        }
        for (int m = 0; m < n; ++m) v(base + off + m * stride) = out[static_cast<std::size_t>(m)];
      }
    }
    stride = block;
  }
}

template <typename Derived>
void check_length(const TorusShape& shape, const Eigen::MatrixBase<Derived>& f) {
  if (f.size() != shape.sites())
    throw std::invalid_argument("array has " + std::to_string(f.size()) + " entries, torus has " +
                                std::to_string(shape.sites()) + " sites");
}

}  // namespace detail

/// Unnormalized forward transform f^_n = sum_k f_k exp(-2 pi i n.k / N).
template <typename Derived>
auto dft(const TorusShape& shape, const Eigen::MatrixBase<Derived>& f) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  detail::check_length(shape, f);
  Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1> v = f.template cast<std::complex<Real>>();
  detail::transform_axes(shape, v, false);
  return v;
}

/// Inverse transform, carrying the 1/M factor.
template <typename Derived>
auto idft(const TorusShape& shape, const Eigen::MatrixBase<Derived>& f) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  detail::check_length(shape, f);
  Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1> v = f.template cast<std::complex<Real>>();
  detail::transform_axes(shape, v, true);
  v /= static_cast<Real>(shape.sites());
  return v;
}

/// Eigenvalues of a circulant operator, one per wavenumber in row-major
/// order.
struct FourierSymbol {
  TorusShape shape;
  Eigen::VectorXcd values;

  /// Largest |Im| relative to the largest magnitude (0 for the zero symbol).
  double imaginary_ratio() const;
  bool is_real(double rel_tol = 1e-12) const { return imaginary_ratio() <= rel_tol; }
  /// Real parts, after checking is_real(); throws Error(config) otherwise.
  Eigen::VectorXd real_values(double rel_tol = 1e-12) const;
};

/// Direct evaluation from the sparse entries, O(M * nnz).
FourierSymbol symbol_of_stencil(const Stencil& s);

/// Dense coefficient array of a stencil in enumeration order.
Eigen::VectorXd coefficient_array(const Stencil& s);

/// Closed form -2 beta sum_r (1 - cos(2 pi n_r / N)) of the standard array.
double standard_symbol(const TorusShape& shape, double beta, const MultiIndex& n);

/// M times the zero-offset coefficient.
double trace_of_circulant(const Stencil& s);

/// Symbols entering the closed-loop formulas: the consensus symbol, or the
/// real position symbol g_o + g_rel^ and velocity symbol -mu + f_o + f_rel^.
Eigen::VectorXcd consensus_symbol(const FeedbackSpec& spec);
Eigen::VectorXd position_symbol(const FeedbackSpec& spec);
Eigen::VectorXd velocity_symbol(const FeedbackSpec& spec);

/// Largest real part of any closed-loop eigenvalue away from n = 0. Throws
/// Error(unstable) for an unstable spec.
double least_damped_eigenvalue(const FeedbackSpec& spec);

/// Per-mode stationary energy 1/(2|Re a^_n|) of a stable consensus spec.
/// The mean mode n = 0 is excluded and carries 0.
struct ModalEnergy {
  Eigen::VectorXd energy;
  std::int64_t excluded = 0;
};
ModalEnergy modal_energy_spectrum(const FeedbackSpec& spec);

}  // namespace coherence
