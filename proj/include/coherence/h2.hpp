#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coherence/stencil.hpp"
#include "coherence/torus.hpp"

namespace coherence {

enum class MeasureKind { local_error, long_range_deviation, deviation_from_average, control_effort };

/// Short names used in configs and reports: local, lrd, dav, effort.
std::string_view to_string(MeasureKind kind);
/// Throws Error(config) for an unknown name.
MeasureKind parse_measure(std::string_view name);

/// Steady-state output variance: `total` is the squared H2 norm over all
/// sites, `per_site` the individual output variance total / M.
struct VarianceReport {
  MeasureKind kind;
  double total;
  double per_site;
  TorusShape shape;
  std::string spec_digest;
  std::string formula;
  std::string convention;
};

struct StabilityReport {
  bool stable = true;
  std::vector<MultiIndex> offending;
  std::string describe(std::size_t max_listed = 8) const;
};

/// Consensus: Re a^_n < 0 for every n != 0 and Re a^_0 <= 0. Vehicular:
/// g^_n < 0 and f^_n < 0 for every n != 0. The mean mode n = 0 is exempt.
StabilityReport stability_check(const FeedbackSpec& spec);

/// Throws Error(unstable) with the offending wavenumbers.
void require_stable(const FeedbackSpec& spec);

/// |c^_n|^2 of the output operator for each wavenumber. Local error uses the
/// normalized difference operator, whose squared symbol equals -O^_n / (2 d
/// beta_ref) for any beta_ref > 0. Long range deviation needs even N
/// (Error(parity) otherwise).
Eigen::VectorXd output_symbol_squared(MeasureKind kind, const TorusShape& shape,
                                      double beta_ref = 1.0);

/// V_c = -(1/2) sum_{n != 0} |c^_n|^2 / Re a^_n.
VarianceReport consensus_variance(const FeedbackSpec& spec, MeasureKind kind);

/// V_v = (d/2) sum_{n != 0} |c^_n|^2 / (g^_n f^_n), friction folded into f^.
VarianceReport vehicular_variance(const FeedbackSpec& spec, MeasureKind kind);

/// Dispatches on the spec kind; control_effort yields the effort report.
VarianceReport variance(const FeedbackSpec& spec, MeasureKind kind);

/// Per-site control variance E{u_k^2}, summed over n != 0 only.
double control_effort(const FeedbackSpec& spec);

/// One inequality of the effort-to-array bound chain.
struct BoundCheck {
  std::string name;
  double lhs;
  double rhs;
  bool holds;
};

struct Lemma2Report {
  double effort = 0.0;
  bool applicable = true;
  std::vector<BoundCheck> checks;
  bool holds() const;
};

/// Consensus: ||a||_inf <= 2 E{u^2}. Vehicular (relative feedback only):
/// ||f||_inf <= (2/d) E{u^2} and ||g||_inf <= (2 S/d) ||f||_inf E{u^2} with S
/// the number of offsets within the locality radius.
Lemma2Report lemma2_bound_check(const FeedbackSpec& spec);

/// Stable 64-bit FNV-1a digest of the spec's canonical text form.
std::string spec_digest(const FeedbackSpec& spec);

}  // namespace coherence
