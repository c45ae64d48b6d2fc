#include "coherence/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace coherence {

namespace {

constexpr double kRelTol = 1e-12;

}  // namespace

Stencil::Stencil(const TorusShape& shape, int radius, const std::vector<Tap>& taps)
    : shape_(shape), radius_(radius) {
  if (radius < 0) throw std::invalid_argument("stencil radius must be nonnegative");
  std::map<MultiIndex, double> acc;
  for (const auto& tap : taps) {
    if (!std::isfinite(tap.value)) throw std::invalid_argument("stencil coefficient is not finite");
    MultiIndex off(shape, tap.offset);
    for (std::size_t i = 0; i < off.size(); ++i) {
      if (folded_coord(off[i], shape.side()) > radius) {
        std::ostringstream msg;
        msg << "stencil offset coordinate " << tap.offset[i] << " exceeds radius " << radius;
        throw std::invalid_argument(msg.str());
      }
    }
    acc[off] += tap.value;
  }
  for (auto& [off, v] : acc)
    if (v != 0.0) entries_.push_back({off, v});
}

Stencil Stencil::delta(const TorusShape& shape) {
  return Stencil(shape, 0, {{std::vector<std::int64_t>(static_cast<std::size_t>(shape.dim()), 0), 1.0}});
}

Stencil Stencil::zero(const TorusShape& shape) { return Stencil(shape, 0, {}); }

double Stencil::coefficient(const MultiIndex& offset) const {
  for (const auto& e : entries_)
    if (e.offset == offset) return e.value;
  return 0.0;
}

double Stencil::sum() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value;
  return s;
}

double Stencil::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
  return m;
}

double Stencil::l1_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += std::abs(e.value);
  return s;
}

std::vector<Tap> Stencil::signed_taps() const {
  std::vector<Tap> taps;
  for (const auto& e : entries_) {
    Tap t{{}, e.value};
    for (int c : e.offset.coords()) t.offset.push_back(signed_coord(c, shape_.side()));
    taps.push_back(std::move(t));
  }
  return taps;
}

Stencil Stencil::resized(const TorusShape& shape) const {
  if (shape.dim() != shape_.dim()) throw std::invalid_argument("cannot resize stencil across dimensions");
  return Stencil(shape, radius_, signed_taps());
}

Stencil Stencil::scaled(double factor) const {
  auto taps = signed_taps();
  for (auto& t : taps) t.value *= factor;
  return Stencil(shape_, radius_, taps);
}

namespace {

Stencil with_center(const Stencil& s, double center) {
  auto taps = s.signed_taps();
  taps.push_back({std::vector<std::int64_t>(static_cast<std::size_t>(s.shape().dim()), 0), center});
  return Stencil(s.shape(), s.radius(), taps);
}

}  // namespace

FeedbackSpec FeedbackSpec::consensus(Stencil a) {
  FeedbackSpec spec;
  spec.kind_ = FeedbackKind::consensus;
  spec.a_ = std::move(a);
  return spec;
}

FeedbackSpec FeedbackSpec::vehicular(Stencil g_rel, Stencil f_rel, double g_o, double f_o,
                                     double mu) {
  if (!(g_rel.shape() == f_rel.shape()))
    throw std::invalid_argument("position and velocity stencils live on different tori");
  if (!std::isfinite(g_o) || !std::isfinite(f_o) || !std::isfinite(mu))
    throw std::invalid_argument("absolute gains and friction must be finite");
  FeedbackSpec spec;
  spec.kind_ = FeedbackKind::vehicular;
  spec.g_ = std::move(g_rel);
  spec.f_ = std::move(f_rel);
  spec.g_o_ = g_o;
  spec.f_o_ = f_o;
  spec.mu_ = mu;
  return spec;
}

const TorusShape& FeedbackSpec::shape() const {
  return kind_ == FeedbackKind::consensus ? a_->shape() : g_->shape();
}

int FeedbackSpec::radius() const {
  return kind_ == FeedbackKind::consensus ? a_->radius() : std::max(g_->radius(), f_->radius());
}

const Stencil& FeedbackSpec::a() const {
  if (kind_ != FeedbackKind::consensus) throw std::logic_error("vehicular spec has no consensus array");
  return *a_;
}

const Stencil& FeedbackSpec::g_rel() const {
  if (kind_ != FeedbackKind::vehicular) throw std::logic_error("consensus spec has no position stencil");
  return *g_;
}

const Stencil& FeedbackSpec::f_rel() const {
  if (kind_ != FeedbackKind::vehicular) throw std::logic_error("consensus spec has no velocity stencil");
  return *f_;
}

Stencil FeedbackSpec::position_array() const { return with_center(g_rel(), g_o_); }

Stencil FeedbackSpec::velocity_array() const { return with_center(f_rel(), f_o_ - mu_); }

FeedbackSpec FeedbackSpec::resized(const TorusShape& shape) const {
  if (kind_ == FeedbackKind::consensus) return consensus(a_->resized(shape));
  return vehicular(g_->resized(shape), f_->resized(shape), g_o_, f_o_, mu_);
}

Stencil standard_consensus_stencil(const TorusShape& shape, double beta) {
  if (shape.side() < 3) throw std::invalid_argument("standard stencil needs N >= 3");
  const auto d = static_cast<std::size_t>(shape.dim());
  std::vector<Tap> taps;
  taps.push_back({std::vector<std::int64_t>(d, 0), -2.0 * shape.dim() * beta});
  for (std::size_t r = 0; r < d; ++r) {
    for (int sign : {1, -1}) {
      std::vector<std::int64_t> off(d, 0);
      off[r] = sign;
      taps.push_back({off, beta});
    }
  }
  return Stencil(shape, 1, taps);
}

FeedbackSpec stencil_from_platoon_gains(const TorusShape& shape, double g_plus, double g_minus,
                                        double f_plus, double f_minus, double g_o, double f_o) {
  if (shape.dim() != 1) throw std::invalid_argument("platoon gains are defined for d = 1 only");
  if (shape.side() < 3) throw std::invalid_argument("platoon stencil needs N >= 3");
  auto rel = [&](double plus, double minus) {
    return Stencil(shape, 1, {{{0}, -(plus + minus)}, {{1}, plus}, {{-1}, minus}});
  };
  return FeedbackSpec::vehicular(rel(g_plus, g_minus), rel(f_plus, f_minus), g_o, f_o, 0.0);
}

FeedbackSpec standard_vehicular(const TorusShape& shape, double beta, double g_o, double f_o,
                                double mu) {
  auto o = standard_consensus_stencil(shape, beta);
  return FeedbackSpec::vehicular(o, o, g_o, f_o, mu);
}

namespace {

void check_stencil(const Stencil& s, const std::string& name, StructureReport& rep) {
  const auto& shape = s.shape();
  const double scale = std::max(1.0, s.l1_norm());
  if (std::abs(s.sum()) > kRelTol * scale) {
    rep.sum_zero = false;
    rep.failures.push_back(name + ": coefficients sum to " + std::to_string(s.sum()) +
                           ", relative feedback needs 0");
  }
  if (2 * s.radius() + 1 > shape.side()) {
    rep.locality = false;
    rep.failures.push_back(name + ": radius " + std::to_string(s.radius()) +
                           " is not local on N = " + std::to_string(shape.side()));
  }
  const double sym_tol = kRelTol * std::max(1.0, s.max_abs());
  for (const auto& e : s.entries()) {
    const auto mirror = wrap_negate(shape, e.offset);
    if (std::abs(s.coefficient(mirror) - e.value) > sym_tol) {
      rep.symmetric = false;
      rep.failures.push_back(name + ": coefficient at offset and its reflection differ");
      break;
    }
  }
}

}  // namespace

StructureReport validate_structure(const FeedbackSpec& spec) {
  StructureReport rep;
  if (spec.kind() == FeedbackKind::consensus) {
    check_stencil(spec.a(), "a", rep);
    return rep;
  }
  check_stencil(spec.g_rel(), "g_rel", rep);
  check_stencil(spec.f_rel(), "f_rel", rep);
  if (spec.g_o() > 0.0 || spec.f_o() > 0.0) {
    rep.signs = false;
    rep.failures.push_back("absolute gains must satisfy g_o <= 0 and f_o <= 0");
  }
  if (spec.mu() < 0.0) {
    rep.signs = false;
    rep.failures.push_back("friction coefficient must be nonnegative");
  }
  return rep;
}

ConvolutionPlan::ConvolutionPlan(const Stencil& s) : sites_(s.shape().sites()) {
  const auto& shape = s.shape();
  const int d = shape.dim();
  const int n = shape.side();
  for (const auto& e : s.entries()) {
    values_.push_back(e.value);
    std::vector<std::int64_t> src(static_cast<std::size_t>(sites_));
    for_each_site(shape, [&](const int* k, std::int64_t lin) {
      std::int64_t j = 0;
      for (int r = 0; r < d; ++r) j = j * n + (k[r] - e.offset[static_cast<std::size_t>(r)] + n) % n;
      src[static_cast<std::size_t>(lin)] = j;
    });
    sources_.push_back(std::move(src));
  }
}

}  // namespace coherence
