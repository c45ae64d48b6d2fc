#include "coherence/config.hpp"

#include <fstream>
#include <sstream>

#include "coherence/error.hpp"

namespace coherence {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::config, what); }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) fail(std::string(what) + " must be a JSON object");
}

}  // namespace

TorusShape shape_from_json(const json& j) {
  require_object(j, "shape");
  try {
    return TorusShape(field<int>(j, "d"), field<int>(j, "N"));
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

json stencil_to_json(const Stencil& s) {
  json entries = json::array();
  for (const auto& t : s.signed_taps()) entries.push_back({{"offset", t.offset}, {"value", t.value}});
  return {{"shape", {{"d", s.shape().dim()}, {"N", s.shape().side()}}}, {"q", s.radius()}, {"entries", entries}};
}

Stencil stencil_from_json(const json& j, const TorusShape* shape) {
  require_object(j, "stencil");
  const TorusShape sh = j.contains("shape") ? shape_from_json(j.at("shape"))
                        : shape               ? *shape
                                              : (fail("stencil has no shape"), TorusShape(1, 2));
  if (shape && !(sh == *shape)) fail("stencil shape differs from the spec shape");
  const auto& entries = j.contains("entries") ? j.at("entries") : json::array();
  if (!entries.is_array()) fail("stencil entries must be an array");
  std::vector<Tap> taps;
  for (const auto& e : entries) {
    require_object(e, "stencil entry");
    taps.push_back({field<std::vector<std::int64_t>>(e, "offset"), field<double>(e, "value")});
  }
  try {
    return Stencil(sh, field<int>(j, "q"), taps);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

FeedbackSpec spec_from_json(const json& j) {
  require_object(j, "spec");
  const auto kind = field<std::string>(j, "kind");
  std::optional<TorusShape> shape;
  if (j.contains("shape")) shape = shape_from_json(j.at("shape"));
  const TorusShape* sp = shape ? &*shape : nullptr;

  auto standard = [&](bool* pos, bool* vel) -> std::optional<Stencil> {
    if (!j.contains("standard")) return std::nullopt;
    const auto& s = j.at("standard");
    require_object(s, "standard");
    if (!shape) fail("standard algorithm needs a shape");
    if (pos) *pos = field_or<bool>(s, "position", true);
    if (vel) *vel = field_or<bool>(s, "velocity", true);
    try {
      return standard_consensus_stencil(*shape, field<double>(s, "beta"));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  };

  if (kind == "consensus") {
    if (auto o = standard(nullptr, nullptr)) return FeedbackSpec::consensus(*o);
    if (!j.contains("a")) fail("consensus spec needs 'standard' or 'a'");
    return FeedbackSpec::consensus(stencil_from_json(j.at("a"), sp));
  }
  if (kind != "vehicular") fail("spec kind must be 'consensus' or 'vehicular'");

  bool pos = true, vel = true;
  const auto o = standard(&pos, &vel);
  std::optional<Stencil> g, f;
  if (o) {
    if (pos) g = *o;
    if (vel) f = *o;
  }
  if (j.contains("g_rel")) g = stencil_from_json(j.at("g_rel"), sp);
  if (j.contains("f_rel")) f = stencil_from_json(j.at("f_rel"), sp);
  if (!g && !f && !shape) fail("vehicular spec needs a shape");
  const TorusShape base = shape ? *shape : g ? g->shape() : f->shape();
  if (!g) g = Stencil::zero(base);
  if (!f) f = Stencil::zero(base);
  if (!(g->shape() == f->shape())) fail("g_rel and f_rel live on different tori");
  return FeedbackSpec::vehicular(*g, *f, field_or<double>(j, "g_o", 0.0), field_or<double>(j, "f_o", 0.0),
                                 field_or<double>(j, "mu", 0.0));
}

json spec_to_json(const FeedbackSpec& spec) {
  const auto& s = spec.shape();
  json j{{"shape", {{"d", s.dim()}, {"N", s.side()}}}};
  if (spec.kind() == FeedbackKind::consensus) {
    j["kind"] = "consensus";
    j["a"] = stencil_to_json(spec.a());
  } else {
    j["kind"] = "vehicular";
    j["g_rel"] = stencil_to_json(spec.g_rel());
    j["f_rel"] = stencil_to_json(spec.f_rel());
    j["g_o"] = spec.g_o();
    j["f_o"] = spec.f_o();
    j["mu"] = spec.mu();
  }
  return j;
}

json with_side(json doc, int side) {
  require_object(doc, "spec");
  if (!doc.contains("shape")) fail("spec has no shape to resize");
  doc["shape"]["N"] = side;
  for (const char* key : {"a", "g_rel", "f_rel"})
    if (doc.contains(key) && doc[key].contains("shape")) doc[key]["shape"]["N"] = side;
  return doc;
}

std::vector<MeasureKind> measures_from_json(const json& j) {
  if (!j.is_array()) fail("measures must be an array of names");
  std::vector<MeasureKind> out;
  for (const auto& m : j) {
    if (!m.is_string()) fail("measure names must be strings");
    out.push_back(parse_measure(m.get<std::string>()));
  }
  return out;
}

SimConfig sim_config_from_json(const json& sim, const FeedbackSpec& spec,
                               const std::vector<MeasureKind>& measures) {
  require_object(sim, "simulation");
  SimConfig cfg{.spec = spec};
  cfg.dt = field_or<double>(sim, "dt", cfg.dt);
  cfg.steps = field_or<std::int64_t>(sim, "steps", cfg.steps);
  cfg.burn_in = field_or<std::int64_t>(sim, "burn_in", cfg.burn_in);
  cfg.seed = field_or<std::uint64_t>(sim, "seed", cfg.seed);
  cfg.replicas = field_or<int>(sim, "replicas", cfg.replicas);
  cfg.record_stride = field_or<std::int64_t>(sim, "record_stride", cfg.record_stride);
  cfg.workers = field_or<int>(sim, "workers", cfg.workers);
  cfg.heading_velocity = field_or<double>(sim, "heading_velocity", cfg.heading_velocity);
  cfg.spacing = field_or<double>(sim, "spacing", cfg.spacing);
  cfg.store_frames = field_or<bool>(sim, "store_frames", cfg.store_frames);
  if (!measures.empty()) cfg.measures = measures;
  const auto m = spec.shape().sites();
  if (sim.contains("noise_sites")) {
    const auto& ns = sim.at("noise_sites");
    if (!(ns.is_string() && ns.get<std::string>() == "all")) {
      if (!ns.is_array()) fail("noise_sites must be \"all\" or a list of site indices");
      cfg.noise_mask.assign(static_cast<std::size_t>(m), false);
      for (const auto& s : ns) {
        if (!s.is_number_integer()) fail("noise site indices must be integers");
        const auto k = s.get<std::int64_t>();
        if (k < 0 || k >= m) fail("noise site index out of range");
        cfg.noise_mask[static_cast<std::size_t>(k)] = true;
      }
    }
  }
  if (sim.contains("initial_offset"))
    cfg.initial_positions = Eigen::VectorXd::Constant(m, field<double>(sim, "initial_offset"));
  return cfg;
}

json report_to_json(const VarianceReport& r) {
  json j{{"measure", std::string(to_string(r.kind))},
         {"total", r.total},
         {"per_site", r.per_site},
         {"shape", {{"d", r.shape.dim()}, {"N", r.shape.side()}}},
         {"spec_digest", r.spec_digest},
         {"formula", r.formula}};
  if (!r.convention.empty()) j["convention"] = r.convention;
  return j;
}

std::string reports_to_csv(const std::vector<VarianceReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "measure,total,per_site,d,N,spec_digest,formula\n";
  for (const auto& r : reports)
    os << to_string(r.kind) << ',' << r.total << ',' << r.per_site << ',' << r.shape.dim() << ','
       << r.shape.side() << ',' << r.spec_digest << ",\"" << r.formula << "\"\n";
  return os.str();
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail("cannot rename into " + path.string() + ": " + ec.message());
  }
}

}  // namespace coherence
