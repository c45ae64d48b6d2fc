#include "coherence/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/MatrixFunctions>

#include "coherence/error.hpp"
#include "coherence/spectral.hpp"
#include "coherence/summation.hpp"

namespace coherence {

namespace {

Eigen::MatrixXd dense_operator(const Stencil& s) {
  const auto m = s.shape().sites();
  const ConvolutionPlan plan(s);
  Eigen::MatrixXd out(m, m);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd col(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    e(j) = 1.0;
    plan.apply(e, col);
    out.col(j) = col;
    e(j) = 0.0;
  }
  return out;
}

std::vector<std::int64_t> unit(const TorusShape& shape, int axis, std::int64_t value) {
  std::vector<std::int64_t> off(static_cast<std::size_t>(shape.dim()), 0);
  off[static_cast<std::size_t>(axis)] = value;
  return off;
}

Eigen::MatrixXd output_matrix(const TorusShape& shape, MeasureKind kind) {
  const auto m = shape.sites();
  const auto d = static_cast<std::size_t>(shape.dim());
  switch (kind) {
    case MeasureKind::local_error: {
      Eigen::MatrixXd h(m * shape.dim(), m);
      const double norm = 1.0 / std::sqrt(2.0 * shape.dim());
      for (int r = 0; r < shape.dim(); ++r) {
        const Stencil diff(shape, 1, {{std::vector<std::int64_t>(d, 0), 1.0}, {unit(shape, r, 1), -1.0}});
        h.middleRows(r * m, m) = norm * dense_operator(diff);
      }
      return h;
    }
    case MeasureKind::long_range_deviation: {
      if (shape.side() % 2 != 0)
        throw Error(ErrorCode::parity, "long range deviation needs even N");
      const Stencil far(shape, shape.side() / 2,
                        {{std::vector<std::int64_t>(d, 0), 1.0},
                         {std::vector<std::int64_t>(d, shape.side() / 2), -1.0}});
      return dense_operator(far);
    }
    case MeasureKind::deviation_from_average:
      return Eigen::MatrixXd::Identity(m, m) -
             Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
    case MeasureKind::control_effort:
      break;
  }
  throw std::logic_error("control effort output depends on the feedback");
}

}  // namespace

StateSpaceRealization realize(const FeedbackSpec& spec, MeasureKind kind, std::int64_t max_states) {
  const auto& shape = spec.shape();
  const auto m = shape.sites();
  const bool vehicular = spec.kind() == FeedbackKind::vehicular;
  const auto states = vehicular ? 2 * m : m;
  if (states > max_states) {
    throw Error(ErrorCode::oracle_cap, "oracle needs " + std::to_string(states) +
                                           " states, cap is " + std::to_string(max_states));
  }
  StateSpaceRealization r{{}, {}, {}, {}, shape, spec.kind(), kind, 1.0};
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  if (!vehicular) {
    r.A = dense_operator(spec.a());
    r.B = Eigen::MatrixXd::Identity(m, m);
    r.H = kind == MeasureKind::control_effort ? r.A : output_matrix(shape, kind);
    r.mean_basis = Eigen::MatrixXd::Constant(m, 1, inv_sqrt_m);
    return r;
  }
  const Eigen::MatrixXd g = dense_operator(spec.position_array());
  const Eigen::MatrixXd f = dense_operator(spec.velocity_array());
  r.A = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  r.A.topRightCorner(m, m).setIdentity();
  r.A.bottomLeftCorner(m, m) = g;
  r.A.bottomRightCorner(m, m) = f;
  r.B = Eigen::MatrixXd::Zero(2 * m, m);
  r.B.bottomRows(m).setIdentity();
  if (kind == MeasureKind::control_effort) {
    r.H.resize(m, 2 * m);
    r.H << g, f;
  } else {
    const auto c = output_matrix(shape, kind);
    r.H = Eigen::MatrixXd::Zero(c.rows(), 2 * m);
    r.H.leftCols(m) = c;
  }
  r.mean_basis = Eigen::MatrixXd::Zero(2 * m, 2);
  r.mean_basis.col(0).head(m).setConstant(inv_sqrt_m);
  r.mean_basis.col(1).tail(m).setConstant(inv_sqrt_m);
  r.multiplicity = shape.dim();
  return r;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols())
    throw std::invalid_argument("Lyapunov equation needs square A and Q of equal size");
  const Eigen::Index n = A.rows();
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw Error(ErrorCode::validation, "Schur decomposition failed");
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  // With A = U T U^*, the unknown Y = U^* X U solves T^* Y + Y T = -U^* Q U.
  const Eigen::MatrixXcd C = -(U.adjoint() * Q.cast<std::complex<double>>() * U);
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  const double scale = std::max(1.0, T.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      std::complex<double> rhs = C(i, j);
      for (Eigen::Index k = 0; k < i; ++k) rhs -= std::conj(T(k, i)) * Y(k, j);
      for (Eigen::Index k = 0; k < j; ++k) rhs -= Y(i, k) * T(k, j);
      const std::complex<double> denom = std::conj(T(i, i)) + T(j, j);
      if (std::abs(denom) < 1e-13 * scale)
        throw Error(ErrorCode::unstable, "Lyapunov equation is singular (eigenvalues mirror across the imaginary axis)");
      Y(i, j) = rhs / denom;
    }
  }
  Eigen::MatrixXd X = (U * Y * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

double full_state_h2(const StateSpaceRealization& r) {
  const Eigen::Index n = r.A.rows();
  const Eigen::Index k = r.mean_basis.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(r.mean_basis);
  const Eigen::MatrixXd full_q = qr.householderQ();
  const Eigen::MatrixXd q = full_q.rightCols(n - k);
  const Eigen::MatrixXd& u = r.mean_basis;

  const Eigen::MatrixXd mean_block = u.transpose() * r.A * u;
  const Eigen::EigenSolver<Eigen::MatrixXd> mean_es(mean_block);
  const double a_scale = std::max(1.0, r.A.cwiseAbs().maxCoeff());
  const Eigen::MatrixXcd hu = (r.H * u).cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (mean_es.eigenvalues()(i).real() < -1e-12 * a_scale) continue;
    const Eigen::VectorXcd v = mean_es.eigenvectors().col(i);
    const double leak = (hu * v).norm() / v.norm();
    if (leak > 1e-9)
      throw Error(ErrorCode::unstable, "neutral mean mode is observable (|H v| = " + std::to_string(leak) + ")");
  }

  const Eigen::MatrixXd ar = q.transpose() * r.A * q;
  const Eigen::MatrixXd br = q.transpose() * r.B;
  const Eigen::MatrixXd hr = r.H * q;
  if ((r.A * q - q * ar).norm() > 1e-9 * a_scale * std::sqrt(static_cast<double>(n)))
    throw Error(ErrorCode::validation, "complement of the mean subspace is not invariant");
  if (ar.rows() == 0) return 0.0;
  if (ar.eigenvalues().real().maxCoeff() >= 0.0)
    throw Error(ErrorCode::unstable, "closed loop has a non-Hurwitz mode off the mean subspace");

  const Eigen::MatrixXd p = solve_lyapunov(ar, hr.transpose() * hr);
  return r.multiplicity * (br.transpose() * p * br).trace();
}

double gramian_quadrature_h2(const StateSpaceRealization& r, double step) {
  const Eigen::Index n = r.A.rows();
  const Eigen::Index k = r.mean_basis.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(r.mean_basis);
  const Eigen::MatrixXd full_q = qr.householderQ();
  const Eigen::MatrixXd q = full_q.rightCols(n - k);
  const Eigen::MatrixXd ar = q.transpose() * r.A * q;
  const Eigen::MatrixXd br = q.transpose() * r.B;
  const Eigen::MatrixXd hr = r.H * q;

  auto trapezoid = [&](double h) {
    const Eigen::MatrixXd prop = (ar * h).exp();
    Eigen::MatrixXd phi = br;
    double peak = (hr * phi).squaredNorm();
    double prev = peak;
    CompensatedSum acc;
    for (long i = 1;; ++i) {
      phi = prop * phi;
      const double cur = (hr * phi).squaredNorm();
      acc += 0.5L * h * (prev + cur);
      peak = std::max(peak, cur);
      prev = cur;
      if (cur < 1e-12 * peak && i * h > 1.0) break;
      if (i > 50'000'000) throw Error(ErrorCode::validation, "Gramian integrand does not decay");
    }
    return acc.value();
  };
  const double coarse = trapezoid(step);
  const double fine = trapezoid(0.5 * step);
  return r.multiplicity * (4.0 * fine - coarse) / 3.0;
}

double per_wavenumber_lyapunov(const FeedbackSpec& spec, MeasureKind kind, const MultiIndex& n) {
  const auto& shape = spec.shape();
  if (n.size() != static_cast<std::size_t>(shape.dim()))
    throw std::invalid_argument("wavenumber dimension does not match torus");
  if (n.is_zero()) throw std::invalid_argument("the mean mode n = 0 has no Lyapunov contribution");
  const auto lin = linear_index(shape, n);

  if (spec.kind() == FeedbackKind::consensus) {
    const std::complex<double> a = consensus_symbol(spec)(lin);
    if (!(a.real() < 0.0)) throw Error(ErrorCode::unstable, "consensus symbol is not Hurwitz at this wavenumber");
    const double c2 = kind == MeasureKind::control_effort ? std::norm(a)
                                                          : output_symbol_squared(kind, shape)(lin);
    // conj(a) p + p a = -|c|^2
    return -c2 / (std::conj(a) + a).real();
  }

  const double g = position_symbol(spec)(lin);
  const double f = velocity_symbol(spec)(lin);
  if (!(g < 0.0 && f < 0.0)) throw Error(ErrorCode::unstable, "vehicular block is not Hurwitz at this wavenumber");
  Eigen::Matrix2d a;
  a << 0.0, 1.0, g, f;
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  if (kind == MeasureKind::control_effort) {
    const Eigen::RowVector2d h(g, f);
    q = h.transpose() * h;
  } else {
    q(0, 0) = output_symbol_squared(kind, shape)(lin);
  }
  const Eigen::MatrixXd p = solve_lyapunov(a, q);
  return shape.dim() * p(1, 1);
}

double per_wavenumber_total(const FeedbackSpec& spec, MeasureKind kind) {
  const auto& shape = spec.shape();
  CompensatedSum sum;
  for (std::int64_t lin = 1; lin < shape.sites(); ++lin)
    sum += per_wavenumber_lyapunov(spec, kind, site_at(shape, lin));
  return sum.value();
}

}  // namespace coherence
