#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coherence/h2.hpp"
#include "coherence/sde.hpp"
#include "coherence/stencil.hpp"
#include "json.hpp"

namespace coherence {

using json = nlohmann::json;

/// {"shape": {"d", "N"}, "q", "entries": [{"offset": [signed...], "value"}]}
json stencil_to_json(const Stencil& s);
/// `shape` is used when the document has no "shape" member.
Stencil stencil_from_json(const json& j, const TorusShape* shape = nullptr);

TorusShape shape_from_json(const json& j);

/// Feedback document. Either
///   {"kind": "consensus", "shape": {...}, "standard": {"beta": b}} or
///   {"kind": "consensus", "a": <stencil>},
/// or for vehicular specs
///   {"kind": "vehicular", "shape": {...},
///    "standard": {"beta": b, "position": bool, "velocity": bool},
///    "g_o": x, "f_o": x, "mu": x}
/// with "g_rel"/"f_rel" stencils in place of "standard". Missing relative
/// stencils are zero. Throws Error(config) on any malformed field.
FeedbackSpec spec_from_json(const json& j);
json spec_to_json(const FeedbackSpec& spec);

/// Same spec with the torus side replaced, for sweeps.
json with_side(json spec_doc, int side);

std::vector<MeasureKind> measures_from_json(const json& j);

/// Simulation block: dt, steps, burn_in, seed, replicas, record_stride,
/// workers, noise_sites ("all" or a list of linear site indices),
/// initial_offset (constant added to every initial position), heading_velocity,
/// spacing.
SimConfig sim_config_from_json(const json& sim, const FeedbackSpec& spec,
                               const std::vector<MeasureKind>& measures);

json report_to_json(const VarianceReport& r);
/// Header "measure,total,per_site,d,N,spec_digest,formula".
std::string reports_to_csv(const std::vector<VarianceReport>& reports);

json read_json_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace coherence
