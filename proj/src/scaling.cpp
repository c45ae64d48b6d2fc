#include "coherence/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "coherence/error.hpp"
#include "coherence/spectral.hpp"
#include "coherence/summation.hpp"

namespace coherence {

std::string_view to_string(GrowthClass cls) {
  switch (cls) {
    case GrowthClass::power: return "power";
    case GrowthClass::logarithmic: return "logarithmic";
    case GrowthClass::bounded: return "bounded";
  }
  return "unknown";
}

namespace {

struct LineFit {
  double slope;
  double intercept;
  double slope_stderr;
  double r2;
  double rms;  // residual root mean square
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f{};
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.rms = std::sqrt(sse / n);
  f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

}  // namespace

GrowthFit classify_growth(const std::vector<int>& sizes, const std::vector<double>& values, int floor) {
  if (sizes.size() != values.size()) throw std::invalid_argument("sizes and values differ in length");
  std::vector<double> lx, ly, v;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < floor) continue;
    if (!(values[i] > 0.0)) throw std::invalid_argument("growth fit needs positive values");
    lx.push_back(std::log(static_cast<double>(sizes[i])));
    ly.push_back(std::log(values[i]));
    v.push_back(values[i]);
  }
  if (lx.size() < 2) throw std::invalid_argument("growth fit needs at least two sizes above the floor");

  const LineFit pw = fit_line(lx, ly);
  const LineFit lg = fit_line(lx, v);
  // Residual of the log model measured in log(value), comparable to pw.rms.
  double lg_rms = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double pred = lg.intercept + lg.slope * lx[i];
    const double r = pred > 0.0 ? std::log(pred) - ly[i] : std::numeric_limits<double>::infinity();
    lg_rms += r * r;
  }
  lg_rms = std::sqrt(lg_rms / static_cast<double>(lx.size()));

  GrowthFit fit{GrowthClass::power, pw.slope, pw.slope_stderr, lg.r2, std::exp(pw.intercept), lx.size()};
  if (std::abs(pw.slope) <= 0.1) {
    fit.cls = GrowthClass::bounded;
    double mean = 0.0;
    for (double x : v) mean += x;
    fit.constant = mean / static_cast<double>(v.size());
  } else if (lg.r2 > 0.99 && lg_rms < pw.rms) {
    fit.cls = GrowthClass::logarithmic;
    fit.constant = lg.slope;
  }
  return fit;
}

bool ExpectedGrowth::matches(const GrowthFit& fit) const {
  if (fit.cls != cls) return false;
  return cls != GrowthClass::power || std::abs(fit.slope - exponent) <= tolerance;
}

std::string ExpectedGrowth::describe() const {
  std::ostringstream os;
  os << to_string(cls);
  if (cls == GrowthClass::power) os << " N^" << exponent << " +/- " << tolerance;
  return os.str();
}

namespace {

SweepPoint evaluate(const SweepPlan& plan, int side) {
  const TorusShape shape(plan.dim, side);
  FeedbackSpec spec = plan.spec_at(shape);
  if (plan.effort_target) {
    if (spec.kind() != FeedbackKind::consensus)
      throw Error(ErrorCode::config, "effort targeting is defined for consensus specs");
    const double e = control_effort(spec);
    spec = FeedbackSpec::consensus(spec.a().scaled(*plan.effort_target / e));
  }
  const auto rep = variance(spec, plan.measure);
  return {side, rep.per_site, control_effort(spec)};
}

}  // namespace

ScalingReport sweep(const SweepPlan& plan, int workers) {
  if (plan.sizes.empty()) throw Error(ErrorCode::config, "sweep needs at least one size");
  if (!std::is_sorted(plan.sizes.begin(), plan.sizes.end()))
    throw Error(ErrorCode::config, "sweep sizes must be increasing");
  for (int n : plan.sizes)
    if (plan.measure == MeasureKind::long_range_deviation && n % 2 != 0)
      throw Error(ErrorCode::parity, "long range deviation sweep needs even sizes");

  std::vector<SweepPoint> points(plan.sizes.size());
  const auto count = plan.sizes.size();
  const auto nthreads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, count);
  std::vector<std::exception_ptr> errors(count);
  auto job = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += nthreads) {
      try {
        points[i] = evaluate(plan, plan.sizes[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (nthreads == 1) {
    job(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nthreads; ++w) pool.emplace_back(job, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> values;
  for (const auto& p : points) values.push_back(p.per_site);
  ScalingReport rep{plan.label, plan.dim, plan.measure, std::move(points),
                    classify_growth(plan.sizes, values, plan.fit_floor), plan.expected, true};
  if (rep.expected) rep.verdict = rep.expected->matches(rep.fit);
  return rep;
}

std::vector<SweepPlan> growth_table_plans() {
  const std::vector<int> s1{33, 65, 129, 257, 513};
  const std::vector<int> s2{17, 25, 33, 49, 65, 97, 129};
  const std::vector<int> s3{5, 9, 13, 17, 19, 21};
  const std::vector<int> s4{9, 13, 17, 19, 21, 23, 25};
  const std::vector<int> s5{9, 11, 13, 15, 17, 19};
  auto sizes = [&](int d) { return d == 1 ? s1 : d == 2 ? s2 : d == 3 ? s3 : d == 4 ? s4 : s5; };

  using Maker = std::function<FeedbackSpec(const TorusShape&)>;
  const Maker consensus = [](const TorusShape& s) {
    return FeedbackSpec::consensus(standard_consensus_stencil(s, 1.0));
  };
  auto vehicular = [](double g_o, double f_o) -> Maker {
    return [g_o, f_o](const TorusShape& s) {
      const auto zero = Stencil::zero(s);
      const auto o = standard_consensus_stencil(s, 1.0);
      return FeedbackSpec::vehicular(g_o == 0.0 ? o : zero, f_o == 0.0 ? o : zero, g_o, f_o);
    };
  };

  const ExpectedGrowth bounded{GrowthClass::bounded};
  const ExpectedGrowth logarithmic{GrowthClass::logarithmic};
  auto power = [](double e, double tol) { return ExpectedGrowth{GrowthClass::power, e, tol}; };
  // d = 1, 2, 3 profile M, log M, 1 expressed in powers of N.
  auto diffusive = [&](int d, double tol) {
    return d == 1 ? power(1.0, tol) : d == 2 ? logarithmic : bounded;
  };

  std::vector<SweepPlan> plans;
  auto add = [&](std::string label, int d, Maker m, MeasureKind k, ExpectedGrowth e) {
    plans.push_back({std::move(label), d, sizes(d), std::move(m), k, std::nullopt, e, 17});
  };
  const auto loc = MeasureKind::local_error;
  const auto dav = MeasureKind::deviation_from_average;

  for (int d = 1; d <= 3; ++d) add("consensus micro", d, consensus, loc, bounded);
  for (int d = 1; d <= 3; ++d) add("consensus macro", d, consensus, dav, diffusive(d, 0.1));
  for (int d = 1; d <= 2; ++d) add("abs-pos abs-vel micro", d, vehicular(-1.0, -1.0), loc, bounded);
  for (int d = 1; d <= 2; ++d) add("abs-pos abs-vel macro", d, vehicular(-1.0, -1.0), dav, bounded);
  for (int d = 1; d <= 2; ++d) add("rel-pos abs-vel micro", d, vehicular(0.0, -1.0), loc, bounded);
  for (int d = 1; d <= 3; ++d) add("rel-pos abs-vel macro", d, vehicular(0.0, -1.0), dav, diffusive(d, 0.1));
  for (int d = 1; d <= 2; ++d) add("abs-pos rel-vel micro", d, vehicular(-1.0, 0.0), loc, bounded);
  for (int d = 1; d <= 3; ++d) add("abs-pos rel-vel macro", d, vehicular(-1.0, 0.0), dav, diffusive(d, 0.1));
  for (int d = 1; d <= 3; ++d) add("rel-pos rel-vel micro", d, vehicular(0.0, 0.0), loc, diffusive(d, 0.15));
  add("rel-pos rel-vel macro", 1, vehicular(0.0, 0.0), dav, power(3.0, 0.2));
  add("rel-pos rel-vel macro", 2, vehicular(0.0, 0.0), dav, power(2.0, 0.2));
  add("rel-pos rel-vel macro", 3, vehicular(0.0, 0.0), dav, power(1.0, 0.2));
  add("rel-pos rel-vel macro", 4, vehicular(0.0, 0.0), dav, logarithmic);
  add("rel-pos rel-vel macro", 5, vehicular(0.0, 0.0), dav, bounded);
  return plans;
}

double folded_lattice_sum(int d, int nbar, int p) {
  if (d < 1 || nbar < 1 || p < 1) throw std::invalid_argument("lattice sum needs d, nbar, p >= 1");
  const std::int64_t top = static_cast<std::int64_t>(nbar - 1) * (nbar - 1);
  // counts[r] = number of points of {0..nbar-1}^k with squared radius r.
  std::vector<double> counts(1, 1.0);
  for (int k = 0; k < d; ++k) {
    std::vector<double> next(counts.size() + static_cast<std::size_t>(top), 0.0);
    for (std::int64_t j = 0; j < nbar; ++j) {
      const auto sq = static_cast<std::size_t>(j * j);
      for (std::size_t r = 0; r < counts.size(); ++r) next[r + sq] += counts[r];
    }
    counts = std::move(next);
  }
  CompensatedSum sum;
  for (std::size_t r = 1; r < counts.size(); ++r)
    if (counts[r] != 0.0) sum += counts[r] / std::pow(static_cast<long double>(r), p);
  return sum.value();
}

double folded_lattice_sum_brute(int d, int nbar, int p) {
  if (d < 1 || nbar < 1 || p < 1) throw std::invalid_argument("lattice sum needs d, nbar, p >= 1");
  CompensatedSum sum;
  for_each_site(TorusShape(d, std::max(nbar, 2)), [&](const int* c, std::int64_t lin) {
    if (lin == 0) return;
    long r = 0;
    for (int i = 0; i < d; ++i) {
      if (c[i] >= nbar) return;
      r += static_cast<long>(c[i]) * c[i];
    }
    sum += 1.0L / std::pow(static_cast<long double>(r), p);
  });
  return sum.value();
}

double lattice_sum(int d, int side, int p) {
  if (side < 3) throw std::invalid_argument("lattice sum needs N >= 3");
  if (side % 2 == 0) throw Error(ErrorCode::parity, "folded lattice sum needs odd N");
  return folded_lattice_sum(d, (side + 1) / 2, p);
}

double lattice_sum_reference(int d, int p, double nbar) {
  const int e = d - 2 * p;
  if (e == 0) return std::log(nbar);
  return (std::pow(nbar, e) - 1.0) / e;
}

SumAsymptotics verify_sum_asymptotics(int d, int p, const std::vector<int>& sides) {
  if (sides.size() < 3) throw std::invalid_argument("sum asymptotics needs at least three sizes");
  for (std::size_t i = 0; i < sides.size(); ++i) {
    if (sides[i] % 2 == 0) throw Error(ErrorCode::parity, "folded lattice sums need odd N");
    if (i > 0 && sides[i] <= sides[i - 1]) throw std::invalid_argument("sizes must be increasing");
  }
  SumAsymptotics out{d, p, sides, {}, 0.0, GrowthClass::bounded, 0.0, GrowthClass::bounded, 0.0, 0.0, 0.0, false};
  std::vector<double> nbar;
  for (int n : sides) {
    nbar.push_back((n + 1) / 2);
    out.sums.push_back(lattice_sum(d, n, p));
  }

  std::vector<double> lx, ly;
  const std::size_t incs = sides.size() - 1;
  for (std::size_t i = (incs - 1) / 2; i < incs; ++i) {
    const double inc = (out.sums[i + 1] - out.sums[i]) / (nbar[i + 1] - nbar[i]);
    lx.push_back(std::log(0.5 * (nbar[i] + nbar[i + 1])));
    ly.push_back(std::log(inc));
  }
  const double s = fit_line(lx, ly).slope;
  out.increment_slope = s;
  if (std::abs(s + 1.0) <= 0.15) {
    out.detected = GrowthClass::logarithmic;
  } else if (s > -0.85) {
    out.detected = GrowthClass::power;
    out.exponent = s + 1.0;
  } else {
    out.detected = GrowthClass::bounded;
  }

  const int e = d - 2 * p;
  out.expected = e == 0 ? GrowthClass::logarithmic : e > 0 ? GrowthClass::power : GrowthClass::bounded;
  out.expected_exponent = e > 0 ? e : 0.0;

  out.c_low = std::numeric_limits<double>::infinity();
  out.c_high = 0.0;
  for (std::size_t i = sides.size() / 2; i < sides.size(); ++i) {
    const double c = out.sums[i] / lattice_sum_reference(d, p, nbar[i]);
    out.c_low = std::min(out.c_low, c);
    out.c_high = std::max(out.c_high, c);
  }
  const bool class_ok = out.detected == out.expected &&
                        (out.expected != GrowthClass::power || std::abs(out.exponent - out.expected_exponent) <= 0.15);
  out.matches = class_ok && out.c_low > 0.0 && out.c_high / out.c_low <= 1.5;
  return out;
}

LowerBoundPoint lower_bound_check_consensus(const FeedbackSpec& spec) {
  if (spec.kind() != FeedbackKind::consensus) throw Error(ErrorCode::config, "lower bound check needs a consensus spec");
  const auto structure = validate_structure(spec);
  if (!structure.ok()) {
    std::string msg = "spec fails structural validation:";
    for (const auto& f : structure.failures) msg += " " + f + ";";
    throw Error(ErrorCode::config, msg);
  }
  const auto& shape = spec.shape();
  const int d = shape.dim();
  const int n = shape.side();
  const double q = spec.radius();
  const double w = control_effort(spec);
  const double support = std::pow(2.0 * q + 1.0, d) - 1.0;

  CompensatedSum lattice;
  for_each_site(shape, [&](const int* c, std::int64_t lin) {
    if (lin == 0) return;
    long s = 0;
    for (int r = 0; r < d; ++r) s += folded_coord(c[r], n);
    lattice += 1.0L / (static_cast<long double>(s) * s);
  });
  const double bound = static_cast<double>(n) * n /
                       (8.0 * std::numbers::pi * std::numbers::pi * q * q * support * w) * lattice.value();
  const double dav = variance(spec, MeasureKind::deviation_from_average).total;
  return {n, dav, bound, w, dav >= bound * (1.0 - 1e-12)};
}

std::vector<InequalityReport> auxiliary_inequality_suite(std::int64_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<InequalityReport> out;

  // Margins are rhs - lhs, relative to max(1, |rhs|); negative means violation.
  auto record = [](InequalityReport& rep, double lhs, double rhs) {
    const double margin = (rhs - lhs) / std::max(1.0, std::abs(rhs));
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -1e-15) ++rep.violations;
  };

  {
    InequalityReport rep{"1 - cos x <= x^2", samples, 0, std::numeric_limits<double>::infinity()};
    std::uniform_real_distribution<double> x(-20.0, 20.0);
    record(rep, 0.0, 0.0);
    for (std::int64_t i = 1; i < samples; ++i) {
      const double v = x(rng);
      record(rep, 1.0 - std::cos(v), v * v);
    }
    out.push_back(rep);
  }
  {
    InequalityReport rep{"1 - cos y >= (2/pi^2) y^2 on [-pi, pi]", samples, 0,
                         std::numeric_limits<double>::infinity()};
    const double pi = std::numbers::pi;
    std::uniform_real_distribution<double> y(-pi, pi);
    record(rep, 2.0 / (pi * pi) * pi * pi, 1.0 - std::cos(pi));
    for (std::int64_t i = 1; i < samples; ++i) {
      const double v = y(rng);
      record(rep, 2.0 / (pi * pi) * v * v, 1.0 - std::cos(v));
    }
    out.push_back(rep);
  }
  {
    InequalityReport rep{"(sum n_i)^2 <= (2d+1) sum n_i^2, d <= 6", samples, 0,
                         std::numeric_limits<double>::infinity()};
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_int_distribution<long> entry(-1000, 1000);
    for (std::int64_t i = 0; i < samples; ++i) {
      const int d = dim(rng);
      long s = 0, s2 = 0;
      for (int r = 0; r < d; ++r) {
        const long v = entry(rng);
        s += v;
        s2 += v * v;
      }
      record(rep, static_cast<double>(s * s), static_cast<double>((2 * d + 1) * s2));
    }
    out.push_back(rep);
  }
  return out;
}

Stencil random_local_consensus(const TorusShape& shape, int q, std::uint64_t seed) {
  if (q < 1) throw std::invalid_argument("random stencil needs q >= 1");
  if (2 * q + 1 > shape.side()) throw std::invalid_argument("random stencil radius does not fit the torus");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int d = shape.dim();
  std::vector<Tap> taps;
  double centre = 0.0;
  // Offsets in the box of radius q, one representative of each +/- pair.
  const TorusShape box(d, 2 * q + 1);
  for_each_site(box, [&](const int* c, std::int64_t) {
    std::vector<std::int64_t> off(static_cast<std::size_t>(d));
    int nonzero = 0;
    int first = 0;
    for (int r = 0; r < d; ++r) {
      off[static_cast<std::size_t>(r)] = c[r] - q;
      if (c[r] != q) {
        if (nonzero == 0) first = c[r] - q;
        nonzero++;
      }
    }
    if (nonzero == 0 || first < 0) return;
    const bool unit = nonzero == 1 && std::abs(first) == 1;
    if (!unit && coin(rng) < 0.5) return;
    const double w = weight(rng);
    std::vector<std::int64_t> neg(off);
    for (auto& v : neg) v = -v;
    taps.push_back({off, w});
    taps.push_back({neg, w});
    centre -= 2.0 * w;
  });
  taps.push_back({std::vector<std::int64_t>(static_cast<std::size_t>(d), 0), centre});
  return Stencil(shape, q, taps);
}

EigenScaling least_damped_scaling(int d, const std::vector<int>& sizes, double beta) {
  if (sizes.size() < 2) throw std::invalid_argument("eigenvalue scaling needs at least two sizes");
  EigenScaling out{d, sizes, {}, 0.0, 2.0 / d};
  std::vector<double> lx, ly;
  for (int n : sizes) {
    const TorusShape shape(d, n);
    const double lambda = least_damped_eigenvalue(FeedbackSpec::consensus(standard_consensus_stencil(shape, beta)));
    out.inverse_gap.push_back(1.0 / std::abs(lambda));
    lx.push_back(std::log(static_cast<double>(shape.sites())));
    ly.push_back(std::log(out.inverse_gap.back()));
  }
  out.exponent = fit_line(lx, ly).slope;
  return out;
}

}  // namespace coherence
