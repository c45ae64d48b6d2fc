#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coherence/h2.hpp"
#include "coherence/stencil.hpp"

namespace coherence {

/// Monte Carlo run of the closed loop driven by unit-intensity white noise,
/// integrated with Euler-Maruyama in deviation coordinates.
struct SimConfig {
  FeedbackSpec spec;
  double dt = 0.01;
  std::int64_t steps = 1000;
  std::int64_t burn_in = 0;
  std::uint64_t seed = 0;
  /// Sites receiving disturbance; empty means every site.
  std::vector<bool> noise_mask = {};
  int replicas = 1;
  std::int64_t record_stride = 1;
  std::vector<MeasureKind> measures = {MeasureKind::deviation_from_average};
  /// Keep position frames of replica 0 in the trajectory.
  bool store_frames = true;
  /// Accumulate E|x^_n|^2 of the positions (first coordinate) per wavenumber.
  bool position_spectrum = false;
  /// Initial positions of every coordinate; empty means zero.
  Eigen::VectorXd initial_positions = {};
  int workers = 1;
  /// Display-only lattice data for reconstructing absolute positions.
  double heading_velocity = 0.0;
  double spacing = 1.0;

  /// Throws Error(config) on invalid fields, Error(unstable) for an unstable
  /// spec, and Error(config) when dt * rho >= 0.5 with rho the largest
  /// |Re lambda| of the closed loop.
  void validate() const;
};

struct Trajectory {
  TorusShape shape;
  FeedbackKind kind;
  std::int64_t stride;
  std::vector<double> times;
  /// Deviation positions of the first coordinate at each recorded time.
  std::vector<Eigen::VectorXd> frames;
};

struct MeasureEstimate {
  MeasureKind kind;
  /// Pooled over replicas, sites, and recorded samples.
  double per_site;
  std::int64_t samples;
  /// One estimate per replica, in replica order.
  std::vector<double> replica_values;
  /// Standard error across replicas (0 with a single replica).
  double std_error;
};

struct SimResult {
  Trajectory trajectory;
  std::vector<MeasureEstimate> estimates;
  /// E|x^_n|^2 per wavenumber when position_spectrum is set.
  Eigen::VectorXd position_spectrum;

  const MeasureEstimate& estimate(MeasureKind kind) const;
};

SimResult simulate(const SimConfig& cfg);

/// Absolute positions x~ + v t + k Delta for a d = 1 frame.
Eigen::VectorXd absolute_positions(const Trajectory& traj, std::size_t frame, double heading_velocity,
                                   double spacing);

struct AccordionSummary {
  SimResult sim;
  /// E|x^_1|^2 / E|x^_{N/2}|^2 measured and predicted by the symbols.
  double empirical_ratio;
  double analytic_ratio;
  /// empirical_ratio within a factor of 3 of analytic_ratio.
  bool ratio_consistent;
  double local_per_site;
  double lrd_per_site;
  /// max_n |E_n - E_{N-n}| / max_n E_n.
  double spectrum_asymmetry;
  /// Formation extent max_k x_k - min_k x_k for each recorded frame.
  std::vector<double> extent;
};

/// d = 1, even N, all sites disturbed. `cfg.spec` must be vehicular.
AccordionSummary accordion_experiment(SimConfig cfg);

struct ProbeResponse {
  double omega;
  /// Steady-state amplitude of the spacing error x_k - x_{k-1} per vehicle.
  Eigen::VectorXd amplitude;
  /// First k >= 1 with amplitude[k] <= amplitude[1] / 2 (N/2 if none).
  int penetration_depth;
};

struct ProbeOptions {
  double amplitude = 1.0;
  double dt = 0.02;
  /// Settling time before measuring; <= 0 picks 10 / |least damped eigenvalue|.
  double settle_time = -1.0;
  int measure_periods = 40;
};

/// Sinusoidal disturbance amplitude*sin(omega t) at vehicle 0 only,
/// integrated with classical RK4 from rest; amplitudes come from projecting
/// the spacing errors onto e^{i omega t} over whole periods.
std::vector<ProbeResponse> string_stability_experiment(const FeedbackSpec& spec,
                                                       const std::vector<double>& omegas,
                                                       const ProbeOptions& opts = {});

/// Exact steady-state spacing-error amplitudes from the frequency response
/// (-omega^2 - i omega f^_n - g^_n)^{-1} per wavenumber.
Eigen::VectorXd steady_state_spacing_amplitude(const FeedbackSpec& spec, double omega,
                                               double amplitude = 1.0);

/// CSV rows "time,site,value".
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
/// Little-endian header d, N, stride, count (int64 each), then one frame per
/// record: time followed by the N^d positions, all float64.
void write_trajectory_binary(const Trajectory& traj, std::ostream& out);
/// Inverse of write_trajectory_binary; throws Error(config) on a malformed stream.
Trajectory read_trajectory_binary(std::istream& in, FeedbackKind kind);

}  // namespace coherence
