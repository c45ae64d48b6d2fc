#include "coherence/sde.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include "coherence/error.hpp"
#include "coherence/spectral.hpp"

namespace coherence {

namespace {

struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void merge(const Welford& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  double variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }
};

// Closed-loop eigenvalues of one wavenumber block.
std::vector<std::complex<double>> block_eigenvalues(const FeedbackSpec& spec, const Eigen::VectorXcd& a,
                                                    const Eigen::VectorXd& g, const Eigen::VectorXd& f,
                                                    Eigen::Index i) {
  if (spec.kind() == FeedbackKind::consensus) return {a(i)};
  const std::complex<double> disc = std::sqrt(std::complex<double>(f(i) * f(i) + 4.0 * g(i)));
  return {0.5 * (f(i) + disc), 0.5 * (f(i) - disc)};
}

int coordinates(const FeedbackSpec& spec) {
  return spec.kind() == FeedbackKind::vehicular ? spec.shape().dim() : 1;
}

std::vector<std::int64_t> shift_sources(const TorusShape& shape, const std::vector<int>& shift) {
  std::vector<std::int64_t> src(static_cast<std::size_t>(shape.sites()));
  std::vector<std::int64_t> c(static_cast<std::size_t>(shape.dim()));
  for_each_site(shape, [&](const int* k, std::int64_t lin) {
    for (int r = 0; r < shape.dim(); ++r) c[static_cast<std::size_t>(r)] = k[r] + shift[static_cast<std::size_t>(r)];
    src[static_cast<std::size_t>(lin)] = linear_index(shape, MultiIndex(shape, c));
  });
  return src;
}

// Output samples y for each measure, organized in groups whose variances
// add up to the per-site value.
class OutputSampler {
 public:
  OutputSampler(const SimConfig& cfg)
      : cfg_(cfg), shape_(cfg.spec.shape()), buf_(shape_.sites()), buf2_(shape_.sites()) {
    const int d = shape_.dim();
    for (int r = 0; r < d; ++r) {
      std::vector<int> back(static_cast<std::size_t>(d), 0);
      back[static_cast<std::size_t>(r)] = -1;
      behind_.push_back(shift_sources(shape_, back));
    }
    if (shape_.side() % 2 == 0)
      far_ = shift_sources(shape_, std::vector<int>(static_cast<std::size_t>(d), shape_.side() / 2));
    if (cfg.spec.kind() == FeedbackKind::consensus) {
      a_.emplace(cfg.spec.a());
    } else {
      g_.emplace(cfg.spec.position_array());
      f_.emplace(cfg.spec.velocity_array());
    }
  }

  int groups(MeasureKind kind) const {
    const int c = coordinates(cfg_.spec);
    return kind == MeasureKind::local_error ? c * shape_.dim() : c;
  }

  // x, v: M x c state; acc receives one Welford per group.
  void sample(MeasureKind kind, const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
              std::vector<Welford>& acc) {
    const auto m = shape_.sites();
    const int c = static_cast<int>(x.cols());
    for (int j = 0; j < c; ++j) {
      switch (kind) {
        case MeasureKind::local_error: {
          const double norm = 1.0 / std::sqrt(2.0 * shape_.dim());
          for (int r = 0; r < shape_.dim(); ++r) {
            auto& w = acc[static_cast<std::size_t>(j * shape_.dim() + r)];
            const auto& src = behind_[static_cast<std::size_t>(r)];
            for (std::int64_t k = 0; k < m; ++k) w.add(norm * (x(k, j) - x(src[static_cast<std::size_t>(k)], j)));
          }
          break;
        }
        case MeasureKind::long_range_deviation: {
          auto& w = acc[static_cast<std::size_t>(j)];
          for (std::int64_t k = 0; k < m; ++k) w.add(x(k, j) - x(far_[static_cast<std::size_t>(k)], j));
          break;
        }
        case MeasureKind::deviation_from_average: {
          auto& w = acc[static_cast<std::size_t>(j)];
          const double mean = x.col(j).mean();
          for (std::int64_t k = 0; k < m; ++k) w.add(x(k, j) - mean);
          break;
        }
        case MeasureKind::control_effort: {
          auto& w = acc[static_cast<std::size_t>(j)];
          if (a_) {
            a_->apply(x.col(j), buf_);
          } else {
            g_->apply(x.col(j), buf_);
            f_->apply(v.col(j), buf2_);
            buf_ += buf2_;
          }
          for (std::int64_t k = 0; k < m; ++k) w.add(buf_(k));
          break;
        }
      }
    }
  }

 private:
  const SimConfig& cfg_;
  TorusShape shape_;
  std::vector<std::vector<std::int64_t>> behind_;
  std::vector<std::int64_t> far_;
  std::optional<ConvolutionPlan> a_, g_, f_;
  Eigen::VectorXd buf_, buf2_;
};

struct ReplicaOutput {
  std::vector<std::vector<Welford>> stats;  // [measure][group]
  Eigen::VectorXd spectrum;
  std::int64_t spectrum_samples = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> frames;
};

ReplicaOutput run_replica(const SimConfig& cfg, int replica) {
  const auto& spec = cfg.spec;
  const auto& shape = spec.shape();
  const auto m = shape.sites();
  const int c = coordinates(spec);
  const bool vehicular = spec.kind() == FeedbackKind::vehicular;

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(replica)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, c);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(m, c);
  if (cfg.initial_positions.size() > 0) x.colwise() = cfg.initial_positions;

  std::optional<ConvolutionPlan> a_plan, g_plan, f_plan;
  if (vehicular) {
    g_plan.emplace(spec.position_array());
    f_plan.emplace(spec.velocity_array());
  } else {
    a_plan.emplace(spec.a());
  }

  std::vector<std::int64_t> noisy;
  for (std::int64_t k = 0; k < m; ++k)
    if (cfg.noise_mask.empty() || cfg.noise_mask[static_cast<std::size_t>(k)]) noisy.push_back(k);

  OutputSampler sampler(cfg);
  ReplicaOutput out;
  for (auto kind : cfg.measures) out.stats.emplace_back(static_cast<std::size_t>(sampler.groups(kind)));
  if (cfg.position_spectrum) out.spectrum = Eigen::VectorXd::Zero(m);
  const bool keep_frames = cfg.store_frames && replica == 0;

  const double sq = std::sqrt(cfg.dt);
  Eigen::VectorXd drift(m), drift2(m);
  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    for (int j = 0; j < c; ++j) {
      if (vehicular) {
        g_plan->apply(x.col(j), drift);
        f_plan->apply(v.col(j), drift2);
        x.col(j) += cfg.dt * v.col(j);
        v.col(j) += cfg.dt * (drift + drift2);
        for (auto k : noisy) v(k, j) += sq * normal(rng);
      } else {
        a_plan->apply(x.col(j), drift);
        x.col(j) += cfg.dt * drift;
        for (auto k : noisy) x(k, j) += sq * normal(rng);
      }
    }
    if (step <= cfg.burn_in || (step - cfg.burn_in) % cfg.record_stride != 0) continue;
    for (std::size_t i = 0; i < cfg.measures.size(); ++i) sampler.sample(cfg.measures[i], x, v, out.stats[i]);
    if (cfg.position_spectrum) {
      out.spectrum += dft(shape, x.col(0)).cwiseAbs2();
      ++out.spectrum_samples;
    }
    if (keep_frames) {
      out.times.push_back(static_cast<double>(step) * cfg.dt);
      out.frames.emplace_back(x.col(0));
    }
  }
  return out;
}

}  // namespace

void SimConfig::validate() const {
  const auto& shape = spec.shape();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::config, "dt must be positive");
  if (steps <= 0) throw Error(ErrorCode::config, "steps must be positive");
  if (burn_in < 0 || burn_in >= steps) throw Error(ErrorCode::config, "burn_in must lie in [0, steps)");
  if (replicas < 1) throw Error(ErrorCode::config, "replicas must be at least 1");
  if (record_stride < 1) throw Error(ErrorCode::config, "record_stride must be at least 1");
  if (workers < 1) throw Error(ErrorCode::config, "workers must be at least 1");
  if (!noise_mask.empty() && static_cast<std::int64_t>(noise_mask.size()) != shape.sites())
    throw Error(ErrorCode::config, "noise_mask must have one entry per site");
  if (initial_positions.size() != 0 && initial_positions.size() != shape.sites())
    throw Error(ErrorCode::config, "initial_positions must have one entry per site");
  for (auto kind : measures)
    if (kind == MeasureKind::long_range_deviation && shape.side() % 2 != 0)
      throw Error(ErrorCode::parity, "long range deviation needs even N");
  require_stable(spec);

  Eigen::VectorXcd a;
  Eigen::VectorXd g, f;
  if (spec.kind() == FeedbackKind::consensus) {
    a = consensus_symbol(spec);
  } else {
    g = position_symbol(spec);
    f = velocity_symbol(spec);
  }
  double rho = 0.0;
  bool euler_stable = true;
  for (Eigen::Index i = 0; i < shape.sites(); ++i) {
    for (auto lambda : block_eigenvalues(spec, a, g, f, i)) {
      rho = std::max(rho, std::abs(lambda.real()));
      if (lambda != 0.0 && std::abs(1.0 + dt * lambda) >= 1.0) euler_stable = false;
    }
  }
  if (dt * rho >= 0.5)
    throw Error(ErrorCode::config, "dt * rho = " + std::to_string(dt * rho) + " violates dt * rho < 0.5");
  if (!euler_stable)
    throw Error(ErrorCode::config, "dt leaves an oscillatory mode outside the Euler stability region");
}

const MeasureEstimate& SimResult::estimate(MeasureKind kind) const {
  for (const auto& e : estimates)
    if (e.kind == kind) return e;
  throw std::out_of_range("measure was not simulated: " + std::string(to_string(kind)));
}

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  std::vector<ReplicaOutput> outs(static_cast<std::size_t>(cfg.replicas));
  const int workers = std::min(cfg.workers, cfg.replicas);
  if (workers == 1) {
    for (int r = 0; r < cfg.replicas; ++r) outs[static_cast<std::size_t>(r)] = run_replica(cfg, r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int r = w; r < cfg.replicas; r += workers) outs[static_cast<std::size_t>(r)] = run_replica(cfg, r);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SimResult res{Trajectory{cfg.spec.shape(), cfg.spec.kind(), cfg.record_stride, {}, {}}, {}, {}};
  res.trajectory.times = std::move(outs.front().times);
  res.trajectory.frames = std::move(outs.front().frames);

  for (std::size_t i = 0; i < cfg.measures.size(); ++i) {
    MeasureEstimate est{cfg.measures[i], 0.0, 0, {}, 0.0};
    std::vector<Welford> pooled(outs.front().stats[i].size());
    for (const auto& o : outs) {
      double value = 0.0;
      for (std::size_t gi = 0; gi < pooled.size(); ++gi) {
        value += o.stats[i][gi].variance();
        pooled[gi].merge(o.stats[i][gi]);
      }
      est.replica_values.push_back(value);
    }
    for (const auto& w : pooled) est.per_site += w.variance();
    est.samples = pooled.empty() ? 0 : pooled.front().n;
    if (outs.size() > 1) {
      Welford spread;
      for (double v : est.replica_values) spread.add(v);
      const double r = static_cast<double>(outs.size());
      est.std_error = std::sqrt(spread.m2 / (r - 1.0) / r);
    }
    res.estimates.push_back(std::move(est));
  }

  if (cfg.position_spectrum) {
    res.position_spectrum = Eigen::VectorXd::Zero(cfg.spec.shape().sites());
    std::int64_t count = 0;
    for (const auto& o : outs) {
      res.position_spectrum += o.spectrum;
      count += o.spectrum_samples;
    }
    if (count > 0) res.position_spectrum /= static_cast<double>(count);
  }
  return res;
}

Eigen::VectorXd absolute_positions(const Trajectory& traj, std::size_t frame, double heading_velocity,
                                   double spacing) {
  if (traj.shape.dim() != 1) throw Error(ErrorCode::config, "absolute positions are defined for d = 1");
  if (frame >= traj.frames.size()) throw std::out_of_range("frame index out of range");
  Eigen::VectorXd x = traj.frames[frame];
  const double shift = heading_velocity * traj.times[frame];
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += shift + static_cast<double>(k) * spacing;
  return x;
}

AccordionSummary accordion_experiment(SimConfig cfg) {
  const auto& shape = cfg.spec.shape();
  if (shape.dim() != 1) throw Error(ErrorCode::config, "accordion experiment needs d = 1");
  if (shape.side() % 2 != 0) throw Error(ErrorCode::parity, "accordion experiment needs even N");
  if (cfg.spec.kind() != FeedbackKind::vehicular)
    throw Error(ErrorCode::config, "accordion experiment needs a vehicular spec");
  cfg.noise_mask.clear();
  cfg.position_spectrum = true;
  cfg.measures = {MeasureKind::local_error, MeasureKind::long_range_deviation,
                  MeasureKind::deviation_from_average};

  AccordionSummary out{simulate(cfg), 0.0, 0.0, false, 0.0, 0.0, 0.0, {}};
  const auto& e = out.sim.position_spectrum;
  const auto half = shape.side() / 2;
  out.empirical_ratio = e(1) / e(half);
  const auto g = position_symbol(cfg.spec);
  const auto f = velocity_symbol(cfg.spec);
  out.analytic_ratio = (g(half) * f(half)) / (g(1) * f(1));
  out.ratio_consistent =
      out.empirical_ratio >= out.analytic_ratio / 3.0 && out.empirical_ratio <= 3.0 * out.analytic_ratio;
  out.local_per_site = out.sim.estimate(MeasureKind::local_error).per_site;
  out.lrd_per_site = out.sim.estimate(MeasureKind::long_range_deviation).per_site;

  double asym = 0.0;
  for (Eigen::Index n = 1; n < e.size(); ++n) asym = std::max(asym, std::abs(e(n) - e(e.size() - n)));
  out.spectrum_asymmetry = asym / e.maxCoeff();

  for (std::size_t i = 0; i < out.sim.trajectory.frames.size(); ++i) {
    const auto xs = absolute_positions(out.sim.trajectory, i, cfg.heading_velocity, cfg.spacing);
    out.extent.push_back(xs.maxCoeff() - xs.minCoeff());
  }
  return out;
}

namespace {

int penetration_depth(const Eigen::VectorXd& amp) {
  const auto half = amp.size() / 2;
  for (Eigen::Index k = 1; k <= half; ++k)
    if (amp(k) <= 0.5 * amp(1)) return static_cast<int>(k);
  return static_cast<int>(half);
}

void require_platoon(const FeedbackSpec& spec) {
  if (spec.kind() != FeedbackKind::vehicular || spec.shape().dim() != 1)
    throw Error(ErrorCode::config, "string stability probe needs a d = 1 vehicular spec");
}

}  // namespace

std::vector<ProbeResponse> string_stability_experiment(const FeedbackSpec& spec,
                                                       const std::vector<double>& omegas,
                                                       const ProbeOptions& opts) {
  require_platoon(spec);
  require_stable(spec);
  if (!(opts.dt > 0.0) || opts.measure_periods < 1)
    throw Error(ErrorCode::config, "probe needs dt > 0 and at least one measured period");
  const auto m = spec.shape().sites();
  const double settle = opts.settle_time > 0.0 ? opts.settle_time : 10.0 / std::abs(least_damped_eigenvalue(spec));
  const ConvolutionPlan g_plan(spec.position_array());
  const ConvolutionPlan f_plan(spec.velocity_array());

  std::vector<ProbeResponse> out;
  for (double omega : omegas) {
    if (!(omega > 0.0)) throw Error(ErrorCode::config, "probe frequency must be positive");
    const double period = 2.0 * std::numbers::pi / omega;
    const auto per_period = static_cast<std::int64_t>(std::ceil(period / opts.dt));
    const double h = period / static_cast<double>(per_period);
    const auto settle_steps = static_cast<std::int64_t>(std::ceil(settle / period)) * per_period;
    const auto measure_steps = per_period * opts.measure_periods;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(m), v = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd kx[4], kv[4], gx(m), fv(m);
    auto deriv = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& vs, double t, Eigen::VectorXd& dx,
                     Eigen::VectorXd& dv) {
      g_plan.apply(xs, gx);
      f_plan.apply(vs, fv);
      dx = vs;
      dv = gx + fv;
      dv(0) += opts.amplitude * std::sin(omega * t);
    };
    Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(m);
    const auto total = settle_steps + measure_steps;
    for (std::int64_t step = 0; step < total; ++step) {
      const double t = static_cast<double>(step) * h;
      if (step >= settle_steps) {
        const std::complex<double> phase = std::polar(1.0, -omega * t);
        for (Eigen::Index k = 0; k < m; ++k) proj(k) += (x(k) - x((k - 1 + m) % m)) * phase;
      }
      deriv(x, v, t, kx[0], kv[0]);
      deriv(x + 0.5 * h * kx[0], v + 0.5 * h * kv[0], t + 0.5 * h, kx[1], kv[1]);
      deriv(x + 0.5 * h * kx[1], v + 0.5 * h * kv[1], t + 0.5 * h, kx[2], kv[2]);
      deriv(x + h * kx[2], v + h * kv[2], t + h, kx[3], kv[3]);
      x += h / 6.0 * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3]);
      v += h / 6.0 * (kv[0] + 2.0 * kv[1] + 2.0 * kv[2] + kv[3]);
    }
    ProbeResponse r{omega, (2.0 / static_cast<double>(measure_steps)) * proj.cwiseAbs(), 0};
    r.penetration_depth = penetration_depth(r.amplitude);
    out.push_back(std::move(r));
  }
  return out;
}

Eigen::VectorXd steady_state_spacing_amplitude(const FeedbackSpec& spec, double omega, double amplitude) {
  require_platoon(spec);
  require_stable(spec);
  if (!(omega > 0.0)) throw Error(ErrorCode::config, "probe frequency must be positive");
  const auto& shape = spec.shape();
  const auto m = shape.sites();
  const auto g = position_symbol(spec);
  const auto f = velocity_symbol(spec);
  Eigen::VectorXcd xhat(m);
  for (Eigen::Index n = 0; n < m; ++n)
    xhat(n) = amplitude / std::complex<double>(-omega * omega - g(n), -omega * f(n));
  const Eigen::VectorXcd x = idft(shape, xhat);
  Eigen::VectorXd amp(m);
  for (Eigen::Index k = 0; k < m; ++k) amp(k) = std::abs(x(k) - x((k - 1 + m) % m));
  return amp;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "time,site,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < traj.frames.size(); ++i)
    for (Eigen::Index k = 0; k < traj.frames[i].size(); ++k)
      out << traj.times[i] << ',' << k << ',' << traj.frames[i](k) << '\n';
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary trajectory layout assumes little endian");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(ErrorCode::config, "truncated trajectory stream");
  return v;
}

}  // namespace

void write_trajectory_binary(const Trajectory& traj, std::ostream& out) {
  put<std::int64_t>(out, traj.shape.dim());
  put<std::int64_t>(out, traj.shape.side());
  put<std::int64_t>(out, traj.stride);
  put<std::int64_t>(out, static_cast<std::int64_t>(traj.frames.size()));
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    put<double>(out, traj.times[i]);
    out.write(reinterpret_cast<const char*>(traj.frames[i].data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(traj.frames[i].size())));
  }
}

Trajectory read_trajectory_binary(std::istream& in, FeedbackKind kind) {
  const auto d = get<std::int64_t>(in);
  const auto n = get<std::int64_t>(in);
  const auto stride = get<std::int64_t>(in);
  const auto count = get<std::int64_t>(in);
  if (d < 1 || d > 64 || n < 2 || n > (1LL << 31) || stride < 1 || count < 0)
    throw Error(ErrorCode::config, "malformed trajectory header");
  Trajectory traj{TorusShape(static_cast<int>(d), static_cast<int>(n)), kind, stride, {}, {}};
  const auto m = traj.shape.sites();
  for (std::int64_t i = 0; i < count; ++i) {
    traj.times.push_back(get<double>(in));
    Eigen::VectorXd frame(m);
    for (std::int64_t k = 0; k < m; ++k) frame(k) = get<double>(in);
    traj.frames.push_back(std::move(frame));
  }
  return traj;
}

}  // namespace coherence
