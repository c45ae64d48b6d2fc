#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coherence/h2.hpp"
#include "coherence/stencil.hpp"

namespace coherence {

enum class GrowthClass { power, logarithmic, bounded };

std::string_view to_string(GrowthClass cls);

/// Finite-size growth classification of per-site values against N.
struct GrowthFit {
  GrowthClass cls;
  /// Least-squares slope of log(value) against log(N).
  double slope;
  double slope_stderr;
  /// R^2 of value against log(N).
  double log_r2;
  /// Prefactor c in value ~ c log N (logarithmic) or c N^slope (power).
  double constant;
  std::size_t points;
};

/// Thresholds: |slope| <= 0.1 is bounded. Otherwise the data are
/// logarithmic when the log(N) fit has R^2 > 0.99 and a smaller RMS residual
/// (in log value) than the power fit, else a power law. Only sizes >= floor
/// enter the fit; at least two must remain.
GrowthFit classify_growth(const std::vector<int>& sizes, const std::vector<double>& values, int floor = 17);

struct ExpectedGrowth {
  GrowthClass cls;
  /// Exponent of N for the power class.
  double exponent = 0.0;
  double tolerance = 0.0;

  bool matches(const GrowthFit& fit) const;
  std::string describe() const;
};

struct SweepPlan {
  std::string label;
  int dim;
  std::vector<int> sizes;
  std::function<FeedbackSpec(const TorusShape&)> spec_at;
  MeasureKind measure;
  /// Rescales each consensus spec so its per-site control effort equals W.
  std::optional<double> effort_target;
  std::optional<ExpectedGrowth> expected;
  int fit_floor = 17;
};

struct SweepPoint {
  int side;
  double per_site;
  double effort;
};

struct ScalingReport {
  std::string label;
  int dim;
  MeasureKind measure;
  std::vector<SweepPoint> points;
  GrowthFit fit;
  std::optional<ExpectedGrowth> expected;
  /// True when no expectation is attached or the fit matches it.
  bool verdict;
};

/// Evaluates every size (in parallel over `workers` threads) and fits the
/// growth class. Throws Error(unstable) or Error(parity) from any size.
ScalingReport sweep(const SweepPlan& plan, int workers = 1);

/// One plan per growth-table cell reachable at desk scale. Macroscopic cells use
/// the deviation from average.
std::vector<SweepPlan> growth_table_plans();

/// Sum of 1 / |n|^(2p) over n != 0 in the folded cube {0..nbar-1}^d.
double folded_lattice_sum(int d, int nbar, int p);
/// Same sum by direct enumeration (for small cubes).
double folded_lattice_sum_brute(int d, int nbar, int p);
/// folded_lattice_sum with nbar = (N+1)/2; throws Error(parity) for even N.
double lattice_sum(int d, int side, int p);

/// Reference growth g(N) for the sums: (N^(d-2p) - 1)/(d-2p), or log N when
/// d = 2p.
double lattice_sum_reference(int d, int p, double nbar);

struct SumAsymptotics {
  int d;
  int p;
  std::vector<int> sides;
  std::vector<double> sums;
  /// Log-log slope of the increments (f(N2) - f(N1)) / (N2 - N1) against
  /// the midpoint of nbar, fitted over the upper half of the sizes.
  double increment_slope;
  GrowthClass detected;
  /// Detected power of N for the power class.
  double exponent;
  GrowthClass expected;
  double expected_exponent;
  /// f / g over the upper half of the sizes.
  double c_low;
  double c_high;
  bool matches;
};

/// Increment slope s: |s + 1| <= 0.15 is logarithmic, s > -0.85 a power
/// N^(s+1), s < -1.15 bounded. Bracket constants must satisfy
/// c_high / c_low <= 1.5. `sides` must be odd and increasing.
SumAsymptotics verify_sum_asymptotics(int d, int p, const std::vector<int>& sides);

struct LowerBoundPoint {
  int side;
  double dav_total;
  double bound;
  double effort;
  bool holds;
};

/// V_dav >= N^2 / (8 pi^2 q^2 S W) sum_{n != 0} 1 / (sum_i |n_i|)^2 with W
/// the per-site control effort, S = (2q+1)^d - 1 the number of nonzero
/// offsets, and n in the symmetric range. Throws Error(config) if the spec
/// fails validate_structure or is not a consensus spec.
LowerBoundPoint lower_bound_check_consensus(const FeedbackSpec& spec);

struct InequalityReport {
  std::string name;
  std::int64_t samples;
  std::int64_t violations;
  double worst_margin;
};

/// 1 - cos x <= x^2, 1 - cos y >= (2/pi^2) y^2 on [-pi, pi], and
/// (sum n_i)^2 <= (2d+1) sum n_i^2 for d = 1..6.
std::vector<InequalityReport> auxiliary_inequality_suite(std::int64_t samples = 10000,
                                                         std::uint64_t seed = 1);

/// Symmetric relative consensus stencil of radius q with random positive
/// weights (unit offsets always present), stable by construction.
Stencil random_local_consensus(const TorusShape& shape, int q, std::uint64_t seed);

struct EigenScaling {
  int dim;
  std::vector<int> sizes;
  std::vector<double> inverse_gap;
  /// Slope of log(1/|lambda_2|) against log(M).
  double exponent;
  double expected;
};

/// 1/|lambda_2| of the standard consensus algorithm across sizes.
EigenScaling least_damped_scaling(int d, const std::vector<int>& sizes, double beta = 1.0);

}  // namespace coherence
