#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <gradelab/workbench.hpp>

using namespace gradelab;

namespace {

RunConfig config(std::string command, std::size_t L, std::vector<int> region = {}) {
  RunConfig cfg;
  cfg.command = std::move(command);
  cfg.lattice_size = L;
  cfg.region = std::move(region);
  cfg.model.chemical_potential = 0.3;
  return cfg;
}

bool has_check(const RunOutcome& out, const std::string& name) {
  return std::any_of(out.records.begin(), out.records.end(), [&](const auto& r) { return r.check == name; });
}

}  // namespace

TEST_CASE("region parsing", "[workbench]") {
  CHECK(parse_region("2,3") == std::vector<int>{2, 3});
  CHECK(parse_region(" 4 , 1 ") == std::vector<int>{4, 1});
  CHECK(parse_region("{0,5}") == std::vector<int>{0, 5});
  CHECK(parse_region("").empty());
  CHECK_THROWS_AS(parse_region("2;3"), UsageError);
  CHECK_THROWS_AS(parse_region("a"), UsageError);
  CHECK_THROWS_AS(parse_region("1.5"), UsageError);
}

TEST_CASE("configuration guards", "[workbench]") {
  CHECK_NOTHROW(validate_config(config("prop4", 12, {2, 3})));
  CHECK_THROWS_AS(validate_config(config("frobnicate", 4)), UsageError);
  CHECK_THROWS_AS(validate_config(config("validate", 13)), UsageError);
  CHECK_THROWS_AS(validate_config(config("validate", 0)), UsageError);
  CHECK_THROWS_AS(validate_config(config("prop4", 6, {2, 6})), UsageError);
  CHECK_THROWS_AS(validate_config(config("prop4", 6, {2, 2})), UsageError);
  RunConfig bad_beta = config("gibbs", 4);
  bad_beta.beta = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate_config(bad_beta), UsageError);
  RunConfig bad_model = config("gibbs", 4);
  bad_model.model.name = "ising";
  CHECK_THROWS_AS(validate_config(bad_model), UsageError);

  CHECK_THROWS_AS(run_command(config("prop4", 6)), UsageError);
  CHECK_THROWS_AS(run_command(config("prop4", 4, {0, 1, 2, 3})), UsageError);
}

TEST_CASE("report layout", "[workbench]") {
  RunConfig cfg = config("validate", 4, {1, 2});
  cfg.seed = 42;
  cfg.beta = 0.5;
  CHECK(emit_report({}, cfg).empty());
  const std::string text = emit_report({{"pi-d", 0.25, 1e-12, false}, {"pi-a", 0.0, 1e-12, true}}, cfg);
  CHECK(text ==
        "{\"check\":\"pi-d\",\"region\":[1,2],\"beta\":0.5,\"value\":0.25,\"tolerance\":1e-12,\"pass\":false,"
        "\"seed\":42}\n"
        "{\"check\":\"pi-a\",\"region\":[1,2],\"beta\":0.5,\"value\":0.0,\"tolerance\":1e-12,\"pass\":true,"
        "\"seed\":42}\n");

  const auto dir = std::filesystem::temp_directory_path() / "gradelab_workbench_test";
  std::filesystem::create_directories(dir);
  write_report((dir / "empty.jsonl").string(), emit_report({}, cfg));
  CHECK(std::filesystem::file_size(dir / "empty.jsonl") == 0);
  CHECK_THROWS_AS(write_report((dir / "no" / "such" / "dir.jsonl").string(), "x"), UsageError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("exit status follows the pass flags", "[workbench]") {
  const RunOutcome standard = run_command(config("validate", 4));
  CHECK(standard.exit_code == 0);
  CHECK(standard.records.size() == 5);

  RunConfig raw = config("validate", 4);
  raw.model.raw = true;
  const RunOutcome failing = run_command(raw);
  CHECK(failing.exit_code == 1);
  const auto pid = std::find_if(failing.records.begin(), failing.records.end(),
                                [](const auto& r) { return r.check == "pi-d"; });
  REQUIRE(pid != failing.records.end());
  CHECK_FALSE(pid->pass);
  // tau(-mu n) = -mu / 2 on the single-site terms
  CHECK(pid->value == Catch::Approx(0.15).margin(1e-15));

  // a nonstandard potential cannot be perturbed; reported as a failed record
  RunConfig raw_perturb = config("perturb", 4, {1});
  raw_perturb.model.raw = true;
  const RunOutcome diag = run_command(raw_perturb);
  CHECK(diag.exit_code == 1);
  CHECK(has_check(diag, "precondition_error"));
}

TEST_CASE("every verb runs and reruns identically", "[workbench]") {
  const std::vector<RunConfig> runs{config("validate", 4),          config("gibbs", 4),
                                    config("perturb", 5, {2}),      config("entropy", 5, {1, 2}),
                                    config("lts", 4, {1, 2}),       config("prop4", 6, {2, 3}),
                                    config("ssb-probe", 4, {1}),    config("remark2", 4)};
  for (RunConfig cfg : runs) {
    cfg.seed = 5;
    cfg.samples = 30;
    INFO(cfg.command);
    const RunOutcome a = run_command(cfg);
    const RunOutcome b = run_command(cfg);
    CHECK(a.exit_code == 0);
    CHECK_FALSE(a.records.empty());
    CHECK(emit_report(a.records, cfg) == emit_report(b.records, cfg));
  }
}

TEST_CASE("prop4 report names the pipeline checks", "[workbench]") {
  const RunOutcome out = run_command(config("prop4", 6, {2, 3}));
  CHECK(out.exit_code == 0);
  for (const char* name : {"RESTIc", "HIzero", "ScIvpHI", "ScImin", "violate"}) CHECK(has_check(out, name));
  CHECK_FALSE(out.notes.empty());
}

TEST_CASE("model files round trip through the runner", "[workbench]") {
  const auto path = std::filesystem::temp_directory_path() / "gradelab_model_test.json";
  {
    std::ofstream f(path);
    f << model_to_json(interacting_model(4, 1.0, 0.2, 0.7));
  }
  RunConfig from_file = config("gibbs", 4);
  from_file.model.name = "file";
  from_file.model.file = path.string();
  RunConfig preset = config("gibbs", 4);
  preset.model.name = "interacting";
  preset.model.chemical_potential = 0.2;
  preset.model.interaction = 0.7;
  CHECK(emit_report(run_command(from_file).records, from_file) == emit_report(run_command(preset).records, preset));

  from_file.lattice_size = 5;
  CHECK_THROWS_AS(run_command(from_file), UsageError);
  from_file.model.file = (path.string() + ".missing");
  CHECK_THROWS_AS(run_command(from_file), UsageError);
  std::filesystem::remove(path);
}
