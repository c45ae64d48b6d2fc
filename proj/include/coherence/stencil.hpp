#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coherence/torus.hpp"

namespace coherence {

/// One nonzero coefficient of a convolution array, at a signed offset.
struct Tap {
  std::vector<std::int64_t> offset;
  double value;
};

struct StencilEntry {
  MultiIndex offset;  // normalized to [0, N-1]
  double value;
};

/// Finite-support real convolution array on Z_N^d. Applying it computes
/// (Gx)_k = sum_l G_{k-l} x_l with index arithmetic on the torus.
class Stencil {
 public:
  /// Entries at the same normalized offset are summed and exact zeros are
  /// dropped. Throws std::invalid_argument if an offset lies outside the
  /// declared radius, has the wrong dimension, or a value is not finite.
  /// Whether 2q+1 <= N holds is left to validate_structure.
  Stencil(const TorusShape& shape, int radius, const std::vector<Tap>& taps);

  /// Kronecker delta: the identity operator.
  static Stencil delta(const TorusShape& shape);
  static Stencil zero(const TorusShape& shape);

  const TorusShape& shape() const { return shape_; }
  int radius() const { return radius_; }
  std::span<const StencilEntry> entries() const { return entries_; }
  std::size_t nonzeros() const { return entries_.size(); }

  double coefficient(const MultiIndex& offset) const;
  double sum() const;
  double max_abs() const;
  double l1_norm() const;

  /// Same signed offsets re-instantiated on another torus (used by sweeps).
  Stencil resized(const TorusShape& shape) const;
  /// Entries as signed offsets in (-N/2, N/2].
  std::vector<Tap> signed_taps() const;

  Stencil scaled(double factor) const;

 private:
  TorusShape shape_;
  int radius_;
  std::vector<StencilEntry> entries_;
};

enum class FeedbackKind { consensus, vehicular };

/// Closed-loop feedback for either the first-order consensus dynamics
/// (x' = T_a x + w) or the double-integrator vehicular dynamics with
/// relative stencils plus absolute gains and viscous friction.
class FeedbackSpec {
 public:
  static FeedbackSpec consensus(Stencil a);
  static FeedbackSpec vehicular(Stencil g_rel, Stencil f_rel, double g_o, double f_o,
                                double mu = 0.0);

  FeedbackKind kind() const { return kind_; }
  const TorusShape& shape() const;
  int radius() const;

  const Stencil& a() const;
  const Stencil& g_rel() const;
  const Stencil& f_rel() const;
  double g_o() const { return g_o_; }
  double f_o() const { return f_o_; }
  double mu() const { return mu_; }

  /// Full position / velocity arrays with the absolute terms (and -mu) folded
  /// into the zero offset.
  Stencil position_array() const;
  Stencil velocity_array() const;

  /// The same feedback law on a torus of another size.
  FeedbackSpec resized(const TorusShape& shape) const;

 private:
  FeedbackSpec() = default;

  FeedbackKind kind_ = FeedbackKind::consensus;
  std::optional<Stencil> a_, g_, f_;
  double g_o_ = 0.0, f_o_ = 0.0, mu_ = 0.0;
};

/// Coefficient -2d*beta at the origin and beta at each of the 2d unit
/// offsets. Throws std::invalid_argument for N < 3.
Stencil standard_consensus_stencil(const TorusShape& shape, double beta);

/// One-dimensional platoon law with look-ahead / look-behind gains. The
/// absolute terms stay separate from the relative stencils.
FeedbackSpec stencil_from_platoon_gains(const TorusShape& shape, double g_plus, double g_minus,
                                        double f_plus, double f_minus, double g_o, double f_o);

/// Standard relative position and velocity stencils (both the consensus
/// array O) plus absolute gains.
FeedbackSpec standard_vehicular(const TorusShape& shape, double beta, double g_o, double f_o,
                                double mu = 0.0);

struct StructureReport {
  bool sum_zero = true;
  bool locality = true;
  bool symmetric = true;
  bool signs = true;
  std::vector<std::string> failures;

  bool ok() const { return sum_zero && locality && symmetric && signs; }
};

StructureReport validate_structure(const FeedbackSpec& spec);

/// Precomputed source indices for repeated application of one stencil.
class ConvolutionPlan {
 public:
  explicit ConvolutionPlan(const Stencil& s);

  std::int64_t sites() const { return sites_; }

  /// out = s * x. `out` must not alias `x`.
  template <typename In, typename Out>
  void apply(const Eigen::MatrixBase<In>& x, Eigen::MatrixBase<Out>& out) const {
    out.setZero();
    for (std::size_t e = 0; e < values_.size(); ++e) {
      const auto w = values_[e];
      const auto* src = sources_[e].data();
      for (std::int64_t k = 0; k < sites_; ++k) out(k) += w * x(src[k]);
    }
  }

 private:
  std::int64_t sites_;
  std::vector<double> values_;
  std::vector<std::vector<std::int64_t>> sources_;  // sources_[e][k] = k - offset_e
};

/// Circular convolution of `x` (length N^d, row-major) with `s`. Throws
/// std::invalid_argument on a length mismatch.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_convolution(
    const Stencil& s, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != s.shape().sites()) {
    throw std::invalid_argument("convolution input has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(s.shape().sites()));
  }
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(x.size());
  ConvolutionPlan(s).apply(x, out);
  return out;
}

}  // namespace coherence
