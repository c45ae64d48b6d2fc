#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "coherence/h2.hpp"
#include "coherence/stencil.hpp"

namespace coherence {

/// Dense x' = A x + B w, y = H x for one coordinate of the network. The
/// vehicular problem has `multiplicity` = d identical decoupled copies.
struct StateSpaceRealization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd H;
  /// Orthonormal basis of the mean subspace: the all-ones direction, per
  /// position/velocity block for vehicular systems.
  Eigen::MatrixXd mean_basis;
  TorusShape shape;
  FeedbackKind kind;
  MeasureKind measure;
  double multiplicity = 1.0;
};

inline constexpr std::int64_t kDefaultOracleCap = 4096;

/// Builds the dense matrices column by column from apply_convolution. Throws
/// Error(oracle_cap) when the state dimension exceeds `max_states`.
StateSpaceRealization realize(const FeedbackSpec& spec, MeasureKind kind,
                              std::int64_t max_states = kDefaultOracleCap);

/// Solves A^T X + X A = -Q by complex Schur reduction (Bartels-Stewart).
/// Throws Error(unstable) if A has eigenvalues with lambda_i + conj(lambda_j)
/// near 0.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Squared H2 norm on the complement of the mean subspace. The mean
/// subspace is invariant for every circulant system; each of its
/// eigenvectors must be either Hurwitz or unobservable (|H v| <= 1e-9), and
/// the subspace is excluded from the total either way.
double full_state_h2(const StateSpaceRealization& r);

/// Same quantity from the Gramian integral, trapezoid rule with Richardson
/// extrapolation, integrated until the integrand falls below 1e-12 of its
/// peak.
double gramian_quadrature_h2(const StateSpaceRealization& r, double step);

/// Contribution of one wavenumber n != 0 from its scalar (consensus) or
/// 2x2 (vehicular, times d) Lyapunov equation.
double per_wavenumber_lyapunov(const FeedbackSpec& spec, MeasureKind kind, const MultiIndex& n);

/// Sum of per_wavenumber_lyapunov over n != 0.
double per_wavenumber_total(const FeedbackSpec& spec, MeasureKind kind);

}  // namespace coherence
