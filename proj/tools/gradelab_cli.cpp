#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <gradelab/workbench.hpp>

namespace {

constexpr int kUsage = 2;

std::string verb_list() {
  std::string out;
  for (const auto& v : gradelab::workbench_commands()) out += (out.empty() ? "" : ", ") + v;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  gradelab::RunConfig cfg;
  std::string region_text;
  double lambda = 0.0;

  CLI::App app{"gradelab workbench: graded fermion lattice checks"};
  app.set_config("--config", "", "INI-style file of key = value defaults; flags on the command line win");
  app.add_option("command", cfg.command, "one of: " + verb_list())->required();
  app.add_option("-L,--length", cfg.lattice_size, "number of sites")->capture_default_str();
  app.add_option("--beta", cfg.beta, "inverse temperature")->capture_default_str();
  app.add_option("--region", region_text, "comma separated sites of I, e.g. 2,3");
  app.add_option("--seed", cfg.seed, "seed for sampled panels")->capture_default_str();
  app.add_option("--out", cfg.output_path, "write JSON lines here instead of stdout");
  app.add_option("--model", cfg.model.name, "hopping, interacting or file")->capture_default_str();
  app.add_option("--model-file", cfg.model.file, "JSON model description for --model file");
  app.add_option("--hopping", cfg.model.hopping, "hopping amplitude t")->capture_default_str();
  app.add_option("--mu", cfg.model.chemical_potential, "chemical potential")->capture_default_str();
  app.add_option("--interaction", cfg.model.interaction, "nearest-neighbour density coupling V")
      ->capture_default_str();
  app.add_flag("--raw", cfg.model.raw, "use the model terms as given, without standardising");
  auto* lambda_opt = app.add_option("--lambda", lambda, "strength of the odd perturbation");
  app.add_option("--samples", cfg.samples, "feasible or random states to draw")->capture_default_str();
  app.add_option("--mode", cfg.mode, "lts or lts-prime")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (lambda_opt->count() > 0) cfg.lambda = lambda;

  try {
    cfg.region = gradelab::parse_region(region_text);
    const gradelab::RunOutcome outcome = gradelab::run_command(cfg);
    const std::string report = gradelab::emit_report(outcome.records, cfg);
    if (cfg.output_path.empty()) {
      std::cout << report << std::flush;
    } else {
      gradelab::write_report(cfg.output_path, report);
    }
    for (const auto& note : outcome.notes) std::cerr << "note: " << note << '\n';
    std::size_t passed = 0;
    for (const auto& r : outcome.records) passed += r.pass ? 1 : 0;
    std::cerr << cfg.command << ": " << passed << "/" << outcome.records.size() << " checks passed\n";
    return outcome.exit_code;
  } catch (const gradelab::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
