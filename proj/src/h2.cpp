#include "coherence/h2.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "coherence/error.hpp"
#include "coherence/spectral.hpp"
#include "coherence/summation.hpp"

namespace coherence {

std::string_view to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::local_error: return "local";
    case MeasureKind::long_range_deviation: return "lrd";
    case MeasureKind::deviation_from_average: return "dav";
    case MeasureKind::control_effort: return "effort";
  }
  return "unknown";
}

MeasureKind parse_measure(std::string_view name) {
  if (name == "local") return MeasureKind::local_error;
  if (name == "lrd") return MeasureKind::long_range_deviation;
  if (name == "dav") return MeasureKind::deviation_from_average;
  if (name == "effort") return MeasureKind::control_effort;
  throw Error(ErrorCode::config, "unknown measure '" + std::string(name) + "'");
}

std::string StabilityReport::describe(std::size_t max_listed) const {
  if (stable) return "stable";
  std::ostringstream os;
  os << offending.size() << " non-Hurwitz wavenumber(s):";
  for (std::size_t i = 0; i < offending.size() && i < max_listed; ++i) {
    os << " (";
    for (std::size_t r = 0; r < offending[i].size(); ++r) os << (r ? "," : "") << offending[i][r];
    os << ")";
  }
  if (offending.size() > max_listed) os << " ...";
  return os.str();
}

namespace {

constexpr double kStabilityTol = 1e-12;

double scale_of(const Eigen::VectorXd& v) { return std::max(1.0, v.cwiseAbs().maxCoeff()); }

}  // namespace

StabilityReport stability_check(const FeedbackSpec& spec) {
  StabilityReport rep;
  const auto& shape = spec.shape();
  auto flag = [&](std::int64_t lin) {
    rep.stable = false;
    rep.offending.push_back(site_at(shape, lin));
  };
  if (spec.kind() == FeedbackKind::consensus) {
    const Eigen::VectorXd re = consensus_symbol(spec).real();
    const double tol = kStabilityTol * scale_of(re);
    if (re(0) > tol) flag(0);
    for (Eigen::Index i = 1; i < re.size(); ++i)
      if (!(re(i) < -tol)) flag(i);
    return rep;
  }
  const auto g = position_symbol(spec);
  const auto f = velocity_symbol(spec);
  const double tg = kStabilityTol * scale_of(g);
  const double tf = kStabilityTol * scale_of(f);
  for (Eigen::Index i = 1; i < g.size(); ++i)
    if (!(g(i) < -tg && f(i) < -tf)) flag(i);
  return rep;
}

void require_stable(const FeedbackSpec& spec) {
  const auto rep = stability_check(spec);
  if (!rep.stable) throw Error(ErrorCode::unstable, rep.describe());
}

Eigen::VectorXd output_symbol_squared(MeasureKind kind, const TorusShape& shape, double beta_ref) {
  const auto m = shape.sites();
  Eigen::VectorXd c2(m);
  switch (kind) {
    case MeasureKind::local_error: {
      if (!(beta_ref > 0.0)) throw Error(ErrorCode::config, "reference beta must be positive");
      const double norm = -1.0 / (2.0 * shape.dim() * beta_ref);
      for_each_site(shape, [&](const int* c, std::int64_t lin) {
        double acc = 0.0;
        for (int r = 0; r < shape.dim(); ++r)
          acc += 1.0 - std::cos(2.0 * std::numbers::pi * c[r] / shape.side());
        c2(lin) = norm * (-2.0 * beta_ref * acc);
      });
      break;
    }
    case MeasureKind::long_range_deviation: {
      if (shape.side() % 2 != 0)
        throw Error(ErrorCode::parity, "long range deviation needs even N, got N = " +
                                           std::to_string(shape.side()));
      for_each_site(shape, [&](const int* c, std::int64_t lin) {
        long s = 0;
        for (int r = 0; r < shape.dim(); ++r) s += c[r];
        c2(lin) = (s % 2 != 0) ? 4.0 : 0.0;
      });
      break;
    }
    case MeasureKind::deviation_from_average:
      c2.setOnes();
      c2(0) = 0.0;
      break;
    case MeasureKind::control_effort:
      throw Error(ErrorCode::config, "control effort has no output symbol");
  }
  return c2;
}

namespace {

VarianceReport make_report(const FeedbackSpec& spec, MeasureKind kind, double total,
                           std::string formula) {
  VarianceReport rep{kind,
                     total,
                     total / static_cast<double>(spec.shape().sites()),
                     spec.shape(),
                     spec_digest(spec),
                     std::move(formula),
                     ""};
  if (kind == MeasureKind::local_error)
    rep.convention = "C = (2d)^-1/2 [I - D_r]_r; |c_n|^2 = (1/d) sum_r (1 - cos(2 pi n_r / N))";
  return rep;
}

void require_kind(const FeedbackSpec& spec, FeedbackKind kind) {
  if (spec.kind() != kind) throw Error(ErrorCode::config, "spec kind does not match the requested formula");
}

}  // namespace

VarianceReport consensus_variance(const FeedbackSpec& spec, MeasureKind kind) {
  require_kind(spec, FeedbackKind::consensus);
  if (kind == MeasureKind::control_effort) return variance(spec, kind);
  const auto c2 = output_symbol_squared(kind, spec.shape());
  require_stable(spec);
  const Eigen::VectorXd re = consensus_symbol(spec).real();
  CompensatedSum sum;
  for (Eigen::Index i = 1; i < re.size(); ++i)
    if (c2(i) != 0.0) sum += -0.5L * c2(i) / re(i);
  return make_report(spec, kind, sum.value(), "consensus: -1/2 sum_{n!=0} |c_n|^2 / Re(a_n)");
}

VarianceReport vehicular_variance(const FeedbackSpec& spec, MeasureKind kind) {
  require_kind(spec, FeedbackKind::vehicular);
  if (kind == MeasureKind::control_effort) return variance(spec, kind);
  const auto c2 = output_symbol_squared(kind, spec.shape());
  require_stable(spec);
  const auto g = position_symbol(spec);
  const auto f = velocity_symbol(spec);
  const long double half_d = 0.5L * spec.shape().dim();
  CompensatedSum sum;
  for (Eigen::Index i = 1; i < g.size(); ++i)
    if (c2(i) != 0.0) sum += half_d * c2(i) / (static_cast<long double>(g(i)) * f(i));
  return make_report(spec, kind, sum.value(), "vehicular: d/2 sum_{n!=0} |c_n|^2 / (g_n f_n)");
}

VarianceReport variance(const FeedbackSpec& spec, MeasureKind kind) {
  if (kind == MeasureKind::control_effort) {
    const double e = control_effort(spec);
    return make_report(spec, kind, e * static_cast<double>(spec.shape().sites()),
                       spec.kind() == FeedbackKind::consensus
                           ? "effort: 1/2 sum_{n!=0} (-a_n)"
                           : "effort: d/2 sum_{n!=0} (|f_n| + |g_n|/|f_n|)");
  }
  return spec.kind() == FeedbackKind::consensus ? consensus_variance(spec, kind)
                                                : vehicular_variance(spec, kind);
}

double control_effort(const FeedbackSpec& spec) {
  require_stable(spec);
  const auto m = static_cast<long double>(spec.shape().sites());
  CompensatedSum sum;
  if (spec.kind() == FeedbackKind::consensus) {
    const Eigen::VectorXd re = consensus_symbol(spec).real();
    for (Eigen::Index i = 1; i < re.size(); ++i) sum += -re(i);
    return static_cast<double>(sum.value() / (2.0L * m));
  }
  const auto g = position_symbol(spec);
  const auto f = velocity_symbol(spec);
  for (Eigen::Index i = 1; i < g.size(); ++i) {
    if (f(i) == 0.0) throw Error(ErrorCode::unstable, "velocity symbol vanishes at a nonzero wavenumber");
    sum += std::abs(f(i));
    sum += std::abs(g(i)) / std::abs(static_cast<long double>(f(i)));
  }
  return static_cast<double>(spec.shape().dim() * sum.value() / (2.0L * m));
}

bool Lemma2Report::holds() const {
  for (const auto& c : checks)
    if (!c.holds) return false;
  return true;
}

namespace {

BoundCheck bound(std::string name, double lhs, double rhs) {
  return {std::move(name), lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-300};
}

}  // namespace

Lemma2Report lemma2_bound_check(const FeedbackSpec& spec) {
  Lemma2Report rep;
  rep.effort = control_effort(spec);
  if (spec.kind() == FeedbackKind::consensus) {
    rep.checks.push_back(bound("||a||_inf <= 2 E{u^2}", spec.a().max_abs(), 2.0 * rep.effort));
    return rep;
  }
  if (spec.g_o() != 0.0 || spec.f_o() != 0.0 || spec.mu() != 0.0) {
    rep.applicable = false;
    return rep;
  }
  const double d = spec.shape().dim();
  const double f_inf = spec.f_rel().max_abs();
  const double support = std::pow(2.0 * spec.f_rel().radius() + 1.0, d);
  rep.checks.push_back(bound("||f||_inf <= (2/d) E{u^2}", f_inf, 2.0 / d * rep.effort));
  rep.checks.push_back(bound("||g||_inf <= (2S/d) ||f||_inf E{u^2}", spec.g_rel().max_abs(),
                             2.0 * support / d * f_inf * rep.effort));
  return rep;
}

std::string spec_digest(const FeedbackSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  auto put = [&](const char* tag, const Stencil& s) {
    os << tag << ':' << s.radius() << ';';
    for (const auto& t : s.signed_taps()) {
      for (auto c : t.offset) os << c << ',';
      os << '=' << t.value << ';';
    }
  };
  os << spec.shape().dim() << 'x' << spec.shape().side() << '|';
  if (spec.kind() == FeedbackKind::consensus) {
    put("a", spec.a());
  } else {
    put("g", spec.g_rel());
    put("f", spec.f_rel());
    os << "go=" << spec.g_o() << ";fo=" << spec.f_o() << ";mu=" << spec.mu();
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace coherence
