#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "coherence/config.hpp"
#include "coherence/error.hpp"
#include "doctest.h"

using namespace coherence;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::validation;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("stencil round trip") {
    const auto st = standard_consensus_stencil(TorusShape(2, 5), 1.5);
    const auto back = stencil_from_json(stencil_to_json(st));
    CHECK(back.shape() == st.shape());
    CHECK(back.radius() == st.radius());
    REQUIRE(back.nonzeros() == st.nonzeros());
    for (const auto& t : st.signed_taps())
      CHECK(back.coefficient(MultiIndex(st.shape(), t.offset)) == t.value);
  }

  TEST_CASE("spec round trip") {
    const TorusShape s(1, 6);
    for (auto spec : {FeedbackSpec::consensus(standard_consensus_stencil(s, 2.0)),
                      standard_vehicular(s, 1.0, -0.5, -0.25, 0.1)}) {
      const auto back = spec_from_json(spec_to_json(spec));
      CHECK(spec_digest(back) == spec_digest(spec));
    }
  }

  TEST_CASE("standard documents") {
    const auto c = spec_from_json(json::parse(R"({"kind":"consensus","shape":{"d":1,"N":4},"standard":{"beta":1}})"));
    CHECK(variance(c, MeasureKind::deviation_from_average).total == doctest::Approx(0.625));

    const auto v = spec_from_json(json::parse(
        R"({"kind":"vehicular","shape":{"d":1,"N":6},"standard":{"beta":1,"velocity":false},"f_o":-1})"));
    CHECK(v.f_rel().max_abs() == 0.0);
    CHECK(v.g_rel().max_abs() == 2.0);
    CHECK(v.f_o() == -1.0);

    const auto explicit_a = spec_from_json(json::parse(R"({"kind":"consensus","a":{"shape":{"d":1,"N":5},"q":1,
        "entries":[{"offset":[0],"value":-2},{"offset":[1],"value":1},{"offset":[-1],"value":1}]}})"));
    CHECK(spec_digest(explicit_a) ==
          spec_digest(FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(1, 5), 1.0))));
  }

  TEST_CASE("malformed documents are config errors") {
    const char* bad[] = {
        R"([])",
        R"({"shape":{"d":1,"N":4},"standard":{"beta":1}})",
        R"({"kind":"swarm","shape":{"d":1,"N":4},"standard":{"beta":1}})",
        R"({"kind":"consensus","shape":{"d":0,"N":4},"standard":{"beta":1}})",
        R"({"kind":"consensus","shape":{"d":1,"N":4},"standard":{"beta":"one"}})",
        R"({"kind":"consensus","shape":{"d":1,"N":4}})",
        R"({"kind":"consensus","standard":{"beta":1}})",
        R"({"kind":"consensus","shape":{"d":1,"N":4},"a":{"shape":{"d":1,"N":5},"q":1,"entries":[]}})",
        R"({"kind":"consensus","a":{"shape":{"d":1,"N":5},"q":1,"entries":[{"offset":[3],"value":1}]}})",
        R"({"kind":"vehicular"})",
    };
    for (const char* doc : bad) {
      CAPTURE(doc);
      CHECK(code_of([&] { spec_from_json(json::parse(doc)); }) == ErrorCode::config);
    }
  }

  TEST_CASE("resizing a spec document") {
    const auto doc = json::parse(R"({"kind":"consensus","shape":{"d":2,"N":4},"standard":{"beta":1}})");
    CHECK(spec_from_json(with_side(doc, 9)).shape() == TorusShape(2, 9));
  }

  TEST_CASE("measures") {
    const auto m = measures_from_json(json::parse(R"(["local","dav","lrd","effort"])"));
    CHECK(m.size() == 4);
    CHECK(m[1] == MeasureKind::deviation_from_average);
    CHECK(code_of([] { measures_from_json(json::parse(R"(["dav", 3])")); }) == ErrorCode::config);
    CHECK(code_of([] { measures_from_json(json::parse(R"("dav")")); }) == ErrorCode::config);
  }

  TEST_CASE("simulation block") {
    const auto spec = FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(1, 6), 1.0));
    auto cfg = sim_config_from_json(
        json::parse(R"({"dt":0.05,"steps":300,"burn_in":10,"seed":9,"replicas":2,"noise_sites":[0,3],
                        "initial_offset":2.5})"),
        spec, {MeasureKind::local_error});
    CHECK(cfg.dt == 0.05);
    CHECK(cfg.steps == 300);
    CHECK(cfg.burn_in == 10);
    CHECK(cfg.seed == 9);
    CHECK(cfg.replicas == 2);
    CHECK(cfg.noise_mask == std::vector<bool>{true, false, false, true, false, false});
    CHECK(cfg.initial_positions.size() == 6);
    CHECK(cfg.initial_positions(5) == 2.5);
    CHECK(cfg.measures == std::vector<MeasureKind>{MeasureKind::local_error});

    cfg = sim_config_from_json(json::parse(R"({"noise_sites":"all"})"), spec, {});
    CHECK(cfg.noise_mask.empty());
    CHECK(cfg.measures == std::vector<MeasureKind>{MeasureKind::deviation_from_average});
    CHECK(code_of([&] { sim_config_from_json(json::parse(R"({"noise_sites":[6]})"), spec, {}); }) ==
          ErrorCode::config);
    CHECK(code_of([&] { sim_config_from_json(json::parse(R"({"noise_sites":"some"})"), spec, {}); }) ==
          ErrorCode::config);
    CHECK(code_of([&] { sim_config_from_json(json::parse(R"({"dt":"fast"})"), spec, {}); }) == ErrorCode::config);
  }

  TEST_CASE("reports") {
    const auto spec = FeedbackSpec::consensus(standard_consensus_stencil(TorusShape(1, 4), 1.0));
    const auto rep = variance(spec, MeasureKind::deviation_from_average);
    const auto j = report_to_json(rep);
    CHECK(j.at("measure") == "dav");
    CHECK(j.at("total").get<double>() == doctest::Approx(0.625));
    CHECK(j.at("spec_digest") == rep.spec_digest);
    const auto csv = reports_to_csv({rep});
    CHECK(csv.rfind("measure,total,per_site,d,N,spec_digest,formula\n", 0) == 0);
    CHECK(csv.find("dav,0.625,0.15625,1,4,") != std::string::npos);
  }

  TEST_CASE("atomic writes and file reading") {
    const auto dir = std::filesystem::temp_directory_path() / "coherence_config_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.json";
    write_atomic(path, R"({"x": 1})");
    CHECK_FALSE(std::filesystem::exists(dir / "out.json.tmp"));
    CHECK(read_json_file(path).at("x") == 1);
    write_atomic(path, "not json");
    CHECK(code_of([&] { read_json_file(path); }) == ErrorCode::config);
    CHECK(code_of([&] { read_json_file(dir / "missing.json"); }) == ErrorCode::config);
    CHECK(code_of([&] { write_atomic(dir / "no_such_dir" / "x.json", "{}"); }) == ErrorCode::config);
    std::filesystem::remove_all(dir);
  }
}
