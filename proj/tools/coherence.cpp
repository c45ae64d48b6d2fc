// Command-line front end: analyze, sweep, simulate, validate, sums.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coherence/config.hpp"
#include "coherence/error.hpp"
#include "coherence/h2.hpp"
#include "coherence/lyapunov.hpp"
#include "coherence/scaling.hpp"
#include "coherence/sde.hpp"
#include "coherence/spectral.hpp"

using namespace coherence;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::vector<std::string> measures;
  std::vector<int> sizes;

  // analyze
  std::string symbols;
  // sweep
  bool table = false;
  // simulate
  std::string trajectory;
  std::string trajectory_format = "csv";
  // validate
  bool corrupt_formula = false;
  std::int64_t oracle_cap = kDefaultOracleCap;
  // sums
  int dim = 2;
  int power = 1;
};

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_atomic(o.out, text);
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json load_config(const Options& o, bool required) {
  if (o.config.empty()) {
    if (required) throw Error(ErrorCode::config, "--config is required for this command");
    return json::object();
  }
  auto doc = read_json_file(o.config);
  if (!doc.is_object()) throw Error(ErrorCode::config, "config must be a JSON object");
  return doc;
}

FeedbackSpec load_spec(const json& doc) {
  if (!doc.contains("spec")) throw Error(ErrorCode::config, "config has no 'spec'");
  auto spec = spec_from_json(doc.at("spec"));
  const auto structure = validate_structure(spec);
  if (!structure.ok()) {
    std::string msg = "spec fails structural validation:";
    for (const auto& f : structure.failures) msg += " " + f + ";";
    throw Error(ErrorCode::config, msg);
  }
  return spec;
}

std::vector<MeasureKind> pick_measures(const Options& o, const json& doc,
                                       std::vector<MeasureKind> fallback) {
  if (!o.measures.empty()) {
    std::vector<MeasureKind> out;
    for (const auto& m : o.measures) out.push_back(parse_measure(m));
    return out;
  }
  if (doc.contains("measures")) return measures_from_json(doc.at("measures"));
  return fallback;
}

void check_format(const Options& o) {
  if (o.format != "json" && o.format != "csv") throw Error(ErrorCode::config, "--format must be json or csv");
}

int run_analyze(const Options& o) {
  check_format(o);
  const auto doc = load_config(o, true);
  const auto spec = load_spec(doc);
  const auto measures = pick_measures(o, doc, {MeasureKind::deviation_from_average});
  require_stable(spec);

  std::vector<VarianceReport> reports;
  for (auto m : measures) reports.push_back(variance(spec, m));
  const double effort = control_effort(spec);
  const double lambda = least_damped_eigenvalue(spec);

  if (!o.symbols.empty()) {
    std::ostringstream os;
    os.precision(17);
    const auto& shape = spec.shape();
    for (int r = 0; r < shape.dim(); ++r) os << "n" << r << ',';
    if (spec.kind() == FeedbackKind::consensus) {
      os << "re,im\n";
      const auto a = consensus_symbol(spec);
      for_each_site(shape, [&](const int* c, std::int64_t lin) {
        for (int r = 0; r < shape.dim(); ++r) os << c[r] << ',';
        os << a(lin).real() << ',' << a(lin).imag() << '\n';
      });
    } else {
      os << "g,f\n";
      const auto g = position_symbol(spec);
      const auto f = velocity_symbol(spec);
      for_each_site(shape, [&](const int* c, std::int64_t lin) {
        for (int r = 0; r < shape.dim(); ++r) os << c[r] << ',';
        os << g(lin) << ',' << f(lin) << '\n';
      });
    }
    write_atomic(o.symbols, os.str());
  }

  if (o.format == "csv") {
    std::string csv = reports_to_csv(reports);
    csv += "control_effort,," + format_double(effort) + ",,,,\n";
    csv += "least_damped_eigenvalue,," + format_double(lambda) + ",,,,\n";
    emit(o, csv);
    return 0;
  }
  json out{{"spec_digest", spec_digest(spec)},
           {"shape", {{"d", spec.shape().dim()}, {"N", spec.shape().side()}}},
           {"control_effort", effort},
           {"least_damped_eigenvalue", lambda},
           {"reports", json::array()}};
  for (const auto& r : reports) out["reports"].push_back(report_to_json(r));
  emit(o, out.dump(2));
  return 0;
}

std::string sweep_csv(const std::vector<ScalingReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "label,d,measure,N,per_site,effort,fitted_class,slope,expected,verdict\n";
  for (const auto& r : reports)
    for (const auto& p : r.points)
      os << r.label << ',' << r.dim << ',' << to_string(r.measure) << ',' << p.side << ',' << p.per_site << ','
         << p.effort << ',' << to_string(r.fit.cls) << ',' << r.fit.slope << ','
         << (r.expected ? r.expected->describe() : "") << ',' << (r.verdict ? "ok" : "mismatch") << '\n';
  return os.str();
}

json sweep_json(const ScalingReport& r) {
  json points = json::array();
  for (const auto& p : r.points) points.push_back({{"N", p.side}, {"per_site", p.per_site}, {"effort", p.effort}});
  json j{{"label", r.label},
         {"d", r.dim},
         {"measure", std::string(to_string(r.measure))},
         {"points", points},
         {"fit",
          {{"class", std::string(to_string(r.fit.cls))},
           {"slope", r.fit.slope},
           {"slope_stderr", r.fit.slope_stderr},
           {"log_r2", r.fit.log_r2},
           {"constant", r.fit.constant},
           {"points", r.fit.points}}},
         {"verdict", r.verdict}};
  if (r.expected) j["expected"] = r.expected->describe();
  return j;
}

std::string verdict_cell(const ScalingReport& r) {
  std::ostringstream os;
  os.precision(3);
  switch (r.fit.cls) {
    case GrowthClass::power: os << "N^" << r.fit.slope; break;
    case GrowthClass::logarithmic: os << "log N"; break;
    case GrowthClass::bounded: os << "1"; break;
  }
  os << (r.verdict ? "" : " (!)");
  return os.str();
}

std::string table_matrix(const std::vector<ScalingReport>& reports) {
  std::vector<std::string> rows;
  for (const auto& r : reports) {
    const auto base = r.label.substr(0, r.label.rfind(' '));
    if (std::find(rows.begin(), rows.end(), base) == rows.end()) rows.push_back(base);
  }
  std::ostringstream os;
  os << "Growth of per-site variance with N (fitted on N >= 17; (!) marks a mismatch)\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-6s %-40s %s\n", "feedback", "scale", "d = 1 | 2 | 3 | 4 | 5", "");
  os << line;
  for (const auto& row : rows) {
    for (const char* scale : {"micro", "macro"}) {
      std::string cells;
      for (int d = 1; d <= 5; ++d) {
        std::string cell = "-";
        for (const auto& r : reports)
          if (r.label == row + " " + scale && r.dim == d) cell = verdict_cell(r);
        cells += (d > 1 ? " | " : "") + cell;
      }
      std::snprintf(line, sizeof line, "%-18s %-6s %s\n", row.c_str(), scale, cells.c_str());
      os << line;
    }
  }
  return os.str();
}

int run_sweep(const Options& o) {
  check_format(o);
  std::vector<ScalingReport> reports;
  if (o.table) {
    for (const auto& plan : growth_table_plans()) reports.push_back(sweep(plan, o.workers));
    bool ok = true;
    for (const auto& r : reports) ok = ok && r.verdict;
    if (o.format == "csv") {
      emit(o, sweep_csv(reports));
    } else if (o.out.empty()) {
      emit(o, table_matrix(reports));
    } else {
      json out = json::array();
      for (const auto& r : reports) out.push_back(sweep_json(r));
      emit(o, out.dump(2));
    }
    return ok ? 0 : static_cast<int>(ErrorCode::validation);
  }

  const auto doc = load_config(o, true);
  load_spec(doc);
  const json spec_doc = doc.at("spec");
  const auto measures = pick_measures(o, doc, {MeasureKind::deviation_from_average});
  std::vector<int> sizes = o.sizes;
  if (sizes.empty() && doc.contains("sizes")) sizes = doc.at("sizes").get<std::vector<int>>();
  if (sizes.empty()) throw Error(ErrorCode::config, "sweep needs --sizes or a 'sizes' array");
  const int dim = spec_from_json(spec_doc).shape().dim();
  for (auto m : measures) {
    SweepPlan plan{"config " + std::string(to_string(m)), dim, sizes,
                   [spec_doc](const TorusShape& s) { return spec_from_json(with_side(spec_doc, s.side())); }, m,
                   std::nullopt, std::nullopt, doc.value("fit_floor", 17)};
    if (doc.contains("effort_target")) plan.effort_target = doc.at("effort_target").get<double>();
    reports.push_back(sweep(plan, o.workers));
  }
  if (o.format == "csv") {
    emit(o, sweep_csv(reports));
  } else {
    json out = json::array();
    for (const auto& r : reports) out.push_back(sweep_json(r));
    emit(o, out.dump(2));
  }
  return 0;
}

json estimates_json(const SimResult& res) {
  json out = json::array();
  for (const auto& e : res.estimates)
    out.push_back({{"measure", std::string(to_string(e.kind))},
                   {"per_site", e.per_site},
                   {"std_error", e.std_error},
                   {"samples", e.samples},
                   {"replica_values", e.replica_values}});
  return out;
}

void write_trajectory(const Options& o, const Trajectory& traj) {
  if (o.trajectory.empty()) return;
  std::ostringstream os;
  if (o.trajectory_format == "binary")
    write_trajectory_binary(traj, os);
  else if (o.trajectory_format == "csv")
    write_trajectory_csv(traj, os);
  else
    throw Error(ErrorCode::config, "--trajectory-format must be csv or binary");
  write_atomic(o.trajectory, os.str());
}

int run_simulate(const Options& o) {
  check_format(o);
  const auto doc = load_config(o, true);
  const auto spec = load_spec(doc);
  const json sim = doc.value("simulation", json::object());
  auto cfg = sim_config_from_json(sim, spec, pick_measures(o, doc, {}));
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers > 1) cfg.workers = o.workers;
  const std::string experiment = sim.value("experiment", "plain");

  json out{{"spec_digest", spec_digest(spec)}, {"experiment", experiment}, {"seed", cfg.seed}};
  std::ostringstream csv;
  csv.precision(17);
  if (experiment == "plain") {
    const auto res = simulate(cfg);
    write_trajectory(o, res.trajectory);
    out["estimates"] = estimates_json(res);
    json analytic = json::object();
    for (auto m : cfg.measures) analytic[std::string(to_string(m))] = variance(spec, m).per_site;
    out["analytic_per_site"] = analytic;
    csv << "measure,per_site,std_error,samples,analytic\n";
    for (const auto& e : res.estimates)
      csv << to_string(e.kind) << ',' << e.per_site << ',' << e.std_error << ',' << e.samples << ','
          << variance(spec, e.kind).per_site << '\n';
  } else if (experiment == "accordion") {
    const auto acc = accordion_experiment(cfg);
    write_trajectory(o, acc.sim.trajectory);
    out["estimates"] = estimates_json(acc.sim);
    out["empirical_ratio"] = acc.empirical_ratio;
    out["analytic_ratio"] = acc.analytic_ratio;
    out["ratio_consistent"] = acc.ratio_consistent;
    out["local_per_site"] = acc.local_per_site;
    out["lrd_per_site"] = acc.lrd_per_site;
    out["spectrum_asymmetry"] = acc.spectrum_asymmetry;
    out["position_spectrum"] = std::vector<double>(acc.sim.position_spectrum.data(),
                                                   acc.sim.position_spectrum.data() + acc.sim.position_spectrum.size());
    out["extent"] = acc.extent;
    csv << "n,energy\n";
    for (Eigen::Index n = 0; n < acc.sim.position_spectrum.size(); ++n)
      csv << n << ',' << acc.sim.position_spectrum(n) << '\n';
  } else if (experiment == "string_stability") {
    const auto omegas = sim.value("omegas", std::vector<double>{3.0, 0.3});
    ProbeOptions popts;
    popts.amplitude = sim.value("amplitude", popts.amplitude);
    popts.dt = sim.value("probe_dt", popts.dt);
    popts.settle_time = sim.value("settle_time", popts.settle_time);
    popts.measure_periods = sim.value("measure_periods", popts.measure_periods);
    const auto probes = string_stability_experiment(spec, omegas, popts);
    out["probes"] = json::array();
    csv << "omega,vehicle,amplitude,steady_state\n";
    for (const auto& p : probes) {
      const auto exact = steady_state_spacing_amplitude(spec, p.omega, popts.amplitude);
      out["probes"].push_back({{"omega", p.omega},
                               {"penetration_depth", p.penetration_depth},
                               {"amplitude", std::vector<double>(p.amplitude.data(), p.amplitude.data() + p.amplitude.size())},
                               {"steady_state", std::vector<double>(exact.data(), exact.data() + exact.size())}});
      for (Eigen::Index k = 0; k < p.amplitude.size(); ++k)
        csv << p.omega << ',' << k << ',' << p.amplitude(k) << ',' << exact(k) << '\n';
    }
  } else {
    throw Error(ErrorCode::config, "simulation experiment must be plain, accordion or string_stability");
  }
  emit(o, o.format == "csv" ? csv.str() : out.dump(2));
  return 0;
}

struct ValidationRow {
  std::string label;
  int d, n;
  MeasureKind measure;
  double closed, wave, full, deviation;
};

std::vector<FeedbackSpec> default_specs(const TorusShape& shape) {
  std::vector<FeedbackSpec> specs{FeedbackSpec::consensus(standard_consensus_stencil(shape, 1.0))};
  const auto o = standard_consensus_stencil(shape, 1.0);
  const auto zero = Stencil::zero(shape);
  specs.push_back(FeedbackSpec::vehicular(o, o, 0.0, 0.0));
  specs.push_back(FeedbackSpec::vehicular(o, zero, 0.0, -1.0));
  specs.push_back(FeedbackSpec::vehicular(zero, o, -1.0, 0.0));
  specs.push_back(FeedbackSpec::vehicular(zero, zero, -1.0, -1.0));
  return specs;
}

std::string scenario_label(const FeedbackSpec& s) {
  if (s.kind() == FeedbackKind::consensus) return "consensus";
  return std::string(s.g_o() == 0.0 ? "rel" : "abs") + "-pos " + (s.f_o() == 0.0 ? "rel" : "abs") + "-vel";
}

int run_validate(const Options& o) {
  check_format(o);
  const auto doc = load_config(o, false);
  std::vector<FeedbackSpec> specs;
  if (doc.contains("spec")) {
    specs.push_back(load_spec(doc));
  } else {
    for (int d = 1; d <= 2; ++d)
      for (int n = 3; n <= 8; ++n)
        for (auto& s : default_specs(TorusShape(d, n))) specs.push_back(s);
  }
  const double corrupt = o.corrupt_formula ? 1.0 + 1e-6 : 1.0;

  std::vector<ValidationRow> rows;
  double worst = 0.0;
  for (const auto& spec : specs) {
    require_stable(spec);
    std::vector<MeasureKind> measures = pick_measures(o, doc, {});
    if (measures.empty()) {
      measures = {MeasureKind::local_error, MeasureKind::deviation_from_average};
      if (spec.shape().side() % 2 == 0) measures.push_back(MeasureKind::long_range_deviation);
    }
    for (auto m : measures) {
      ValidationRow r{scenario_label(spec), spec.shape().dim(), spec.shape().side(), m, 0, 0, 0, 0};
      r.closed = corrupt * variance(spec, m).total;
      r.wave = per_wavenumber_total(spec, m);
      r.full = full_state_h2(realize(spec, m, o.oracle_cap));
      const double scale = std::max(std::abs(r.full), 1e-300);
      r.deviation = std::max(std::abs(r.closed - r.full), std::abs(r.wave - r.full)) / scale;
      worst = std::max(worst, r.deviation);
      rows.push_back(r);
    }
  }

  if (o.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "scenario,d,N,measure,closed_form,per_wavenumber,full_state,max_rel_deviation\n";
    for (const auto& r : rows)
      os << r.label << ',' << r.d << ',' << r.n << ',' << to_string(r.measure) << ',' << r.closed << ',' << r.wave
         << ',' << r.full << ',' << r.deviation << '\n';
    emit(o, os.str());
  } else {
    json out{{"max_rel_deviation", worst}, {"tolerance", 1e-8}, {"rows", json::array()}};
    for (const auto& r : rows)
      out["rows"].push_back({{"scenario", r.label},
                             {"d", r.d},
                             {"N", r.n},
                             {"measure", std::string(to_string(r.measure))},
                             {"closed_form", r.closed},
                             {"per_wavenumber", r.wave},
                             {"full_state", r.full},
                             {"max_rel_deviation", r.deviation}});
    emit(o, out.dump(2));
  }
  if (worst > 1e-8) {
    std::cerr << "error: VALIDATION: max relative deviation " << worst << " exceeds 1e-8\n";
    return static_cast<int>(ErrorCode::validation);
  }
  return 0;
}

int run_sums(const Options& o) {
  check_format(o);
  std::vector<int> sides = o.sizes.empty() ? std::vector<int>{31, 63, 127, 255, 511} : o.sizes;
  const auto r = verify_sum_asymptotics(o.dim, o.power, sides);
  if (o.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "d,p,N,nbar,sum,detected,expected\n";
    for (std::size_t i = 0; i < r.sides.size(); ++i)
      os << r.d << ',' << r.p << ',' << r.sides[i] << ',' << (r.sides[i] + 1) / 2 << ',' << r.sums[i] << ','
         << to_string(r.detected) << ',' << to_string(r.expected) << '\n';
    emit(o, os.str());
  } else {
    json out{{"d", r.d},
             {"p", r.p},
             {"sizes", r.sides},
             {"sums", r.sums},
             {"increment_slope", r.increment_slope},
             {"detected", std::string(to_string(r.detected))},
             {"expected", std::string(to_string(r.expected))},
             {"c_low", r.c_low},
             {"c_high", r.c_high},
             {"matches", r.matches}};
    if (r.detected == GrowthClass::power) out["exponent"] = r.exponent;
    emit(o, out.dump(2));
  }
  return r.matches ? 0 : static_cast<int>(ErrorCode::validation);
}

void common_flags(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON configuration file");
  sub->add_option("--out", o.out, "Output file (written atomically); stdout if omitted");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--seed", o.seed, "Seed override");
  sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--measure", o.measures, "Measure: local, lrd, dav, effort (repeatable)");
  sub->add_option("--sizes", o.sizes, "Comma-separated list of N")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherence measures for consensus and vehicular formations on tori"};
  app.require_subcommand(1);
  Options o;

  auto* analyze = app.add_subcommand("analyze", "Closed-form measures, effort and least damped eigenvalue");
  common_flags(analyze, o);
  analyze->add_option("--symbols", o.symbols, "Write the Fourier symbols as CSV");

  auto* sweep_cmd = app.add_subcommand("sweep", "Size sweep with growth classification");
  common_flags(sweep_cmd, o);
  sweep_cmd->add_flag("--table", o.table, "Run every growth-class cell and print the verdict matrix");

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo and probe experiments");
  common_flags(simulate_cmd, o);
  simulate_cmd->add_option("--trajectory", o.trajectory, "Trajectory output file");
  simulate_cmd->add_option("--trajectory-format", o.trajectory_format, "csv or binary")
      ->check(CLI::IsMember({"csv", "binary"}));

  auto* validate_cmd = app.add_subcommand("validate", "Closed form vs per-wavenumber vs full-state Lyapunov");
  common_flags(validate_cmd, o);
  validate_cmd->add_option("--oracle-cap", o.oracle_cap, "Maximum oracle state dimension");
  validate_cmd->add_flag("--corrupt-formula", o.corrupt_formula, "Perturb the closed form (negative test)")
      ->group("");

  auto* sums_cmd = app.add_subcommand("sums", "Lattice-sum asymptotics");
  common_flags(sums_cmd, o);
  sums_cmd->add_option("--dim", o.dim, "Dimension d")->check(CLI::Range(1, 8));
  sums_cmd->add_option("--power", o.power, "Exponent p")->check(CLI::Range(1, 4));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCode::config);
  }

  try {
    if (analyze->parsed()) return run_analyze(o);
    if (sweep_cmd->parsed()) return run_sweep(o);
    if (simulate_cmd->parsed()) return run_simulate(o);
    if (validate_cmd->parsed()) return run_validate(o);
    if (sums_cmd->parsed()) return run_sums(o);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error: CONFIG: " << e.what() << '\n';
    return static_cast<int>(ErrorCode::config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: CONFIG: " << e.what() << '\n';
    return static_cast<int>(ErrorCode::config);
  }
  return 0;
}
