#pragma once

// Command layer behind the gradelab CLI: run configuration, the verbs and
// JSON-lines report emission. Needs vendor/json.hpp on the include path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradelab/entropy.hpp"
#include "gradelab/interaction.hpp"
#include "gradelab/serialization.hpp"
#include "gradelab/stability.hpp"
#include "gradelab/state.hpp"
#include "gradelab/symmetry.hpp"

namespace gradelab {

inline constexpr std::size_t kMaxWorkbenchLattice = 12;

/// Bad command line or configuration; maps to exit status 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& workbench_commands() {
  static const std::vector<std::string> verbs{"validate", "gibbs",    "perturb",   "entropy",
                                              "lts",      "prop4",    "ssb-probe", "remark2"};
  return verbs;
}

struct ModelConfig {
  std::string name = "hopping";  // hopping | interacting | file
  double hopping = 1.0;
  double chemical_potential = 0.0;
  double interaction = 1.0;
  std::string file;  // JSON model description when name == "file"
  bool raw = false;  // skip standardisation
};

struct RunConfig {
  std::string command;
  std::size_t lattice_size = 4;
  ModelConfig model;
  double beta = 1.0;
  std::vector<int> region;
  std::uint64_t seed = 0;
  std::string output_path;  // empty: standard output
  std::size_t samples = 100;
  std::optional<double> lambda;
  std::string mode = "lts";  // lts | lts-prime
};

inline std::vector<int> parse_region(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t{}");
    const auto last = token.find_last_not_of(" \t{}");
    if (first == std::string::npos) continue;
    token = token.substr(first, last - first + 1);
    std::size_t used = 0;
    int site = 0;
    try {
      site = std::stoi(token, &used);
    } catch (const std::exception&) {
      throw UsageError("invalid site '" + token + "' in region");
    }
    if (used != token.size()) throw UsageError("invalid site '" + token + "' in region");
    out.push_back(site);
  }
  return out;
}

inline void validate_config(const RunConfig& cfg) {
  const auto& verbs = workbench_commands();
  if (std::find(verbs.begin(), verbs.end(), cfg.command) == verbs.end()) {
    throw UsageError("unknown command '" + cfg.command + "'");
  }
  if (cfg.lattice_size == 0 || cfg.lattice_size > kMaxWorkbenchLattice) {
    throw UsageError("lattice size must be between 1 and " + std::to_string(kMaxWorkbenchLattice));
  }
  if (!std::isfinite(cfg.beta)) throw UsageError("beta must be finite");
  try {
    (void)Region(cfg.lattice_size, cfg.region);
  } catch (const PreconditionError& e) {
    throw UsageError(std::string("invalid region: ") + e.what());
  }
  if (cfg.model.name != "hopping" && cfg.model.name != "interacting" && cfg.model.name != "file") {
    throw UsageError("unknown model '" + cfg.model.name + "'");
  }
  if (cfg.mode != "lts" && cfg.mode != "lts-prime") throw UsageError("mode must be lts or lts-prime");
  if (cfg.samples == 0) throw UsageError("samples must be positive");
}

inline ModelSpec model_spec(const RunConfig& cfg) {
  const auto& m = cfg.model;
  if (m.name == "hopping") return hopping_model(cfg.lattice_size, m.hopping, m.chemical_potential);
  if (m.name == "interacting") {
    return interacting_model(cfg.lattice_size, m.hopping, m.chemical_potential, m.interaction);
  }
  std::ifstream in(m.file);
  if (!in) throw UsageError("cannot read model file '" + m.file + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ModelSpec spec;
  try {
    spec = model_from_json(buf.str());
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  if (spec.lattice_size != cfg.lattice_size) {
    throw UsageError("model file describes " + std::to_string(spec.lattice_size) + " sites, run uses " +
                     std::to_string(cfg.lattice_size));
  }
  return spec;
}

struct RunOutcome {
  int exit_code = 0;
  std::vector<CheckRecord> records;
  std::vector<std::string> notes;
};

/// One JSON object per record, keys in the order
/// check, region, beta, value, tolerance, pass, seed.
inline std::string emit_report(const std::vector<CheckRecord>& records, const RunConfig& cfg) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["check"] = r.check;
    j["region"] = cfg.region;
    j["beta"] = cfg.beta;
    j["value"] = r.value;
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["seed"] = cfg.seed;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace detail {

inline Matrix seeded_matrix(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) m(i, j) = Complex(normal(rng), normal(rng));
  return m / m.norm();
}

inline double kms_panel(const DensityState& omega, const Matrix& h, double beta, std::uint64_t seed, int pairs = 8) {
  std::mt19937_64 rng(seed);
  const Index d = h.rows();
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Matrix a = seeded_matrix(d, rng);
    const Matrix b = seeded_matrix(d, rng);
    worst = std::max(worst, kms_residual(omega, h, beta, a, b));
  }
  return worst;
}

inline Region require_region(const RunConfig& cfg, bool proper = true) {
  const Region r(cfg.lattice_size, cfg.region);
  if (r.is_empty()) throw UsageError("command '" + cfg.command + "' needs a nonempty --region");
  if (proper && r.is_full()) throw UsageError("command '" + cfg.command + "' needs a proper subregion");
  return r;
}

inline void run_validate(const Potential& phi, RunOutcome& out) {
  for (const auto& c : validate_potential(phi).conditions) {
    out.records.push_back({c.name, c.residual, kPotentialTolerance, c.pass});
  }
}

inline void run_gibbs(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const Matrix h = total_hamiltonian(phi).matrix();
  const DensityState g = gibbs_state(h, cfg.beta);
  out.records.push_back(at_most("trace", std::abs(g.density().trace().real() - 1.0), 1e-12));
  out.records.push_back(exceeds("min_eigenvalue", g.min_eigenvalue(), 0.0));
  out.records.push_back(at_most("odd_defect", g.odd_defect(), 1e-12));
  out.records.push_back(at_most("kms", kms_panel(g, h, cfg.beta, cfg.seed), 1e-10));
}

inline void run_perturb(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const Region region = require_region(cfg);
  const DensityState p = perturbed_state(phi, cfg.beta, region);
  const Matrix h_full = total_hamiltonian(phi).matrix();
  const Matrix h_local = local_hamiltonian(phi, region).matrix.matrix();
  const Matrix h_pruned = total_hamiltonian(prune(phi, region)).matrix();
  out.records.push_back(at_most("vpHIprod", product_check(p, region), 1e-9));
  out.records.push_back(at_most("Gibbs2", fixes_subalgebra_residual(h_full - h_local, region), 1e-12));
  out.records.push_back(at_most("kms_perturbed", kms_panel(p, h_pruned, cfg.beta, cfg.seed), 1e-10));
}

inline void run_entropy(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const Region region = require_region(cfg);
  const PerturbationBounds b = perturbation_entropy_bounds(phi, cfg.beta, region);
  out.records.push_back(at_most("RELZENTAI_forward", b.forward, b.bound));
  out.records.push_back(at_most("RELZENTAI_backward", b.backward, b.bound));
  out.records.push_back(at_most("RELIc_forward", b.restricted_forward, b.forward + 1e-10));
  out.records.push_back(at_most("RELIc_backward", b.restricted_backward, b.backward + 1e-10));
  const DensityState p = perturbed_state(phi, cfg.beta, region);
  out.records.push_back(at_most("ScIvpHI", std::abs(conditional_entropy(p, region)), 1e-10));
  const DensityState g = gibbs_state(total_hamiltonian(phi), cfg.beta);
  out.records.push_back(at_most("ScI_gibbs", conditional_entropy(g, region), 1e-12));
}

inline void run_lts(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const Region region = require_region(cfg);
  const OutsideSystem mode = cfg.mode == "lts" ? OutsideSystem::complement : OutsideSystem::commutant;
  const DensityState g = gibbs_state(total_hamiltonian(phi), cfg.beta, "gibbs");
  const FeasibleFamily fam = feasible_sampler(g, region, mode, cfg.samples, cfg.seed);
  const StabilityReport rep = lts_check(g, phi, region, cfg.beta, fam);
  for (const auto& r : rep.residuals) out.records.push_back(r);
  if (mode == OutsideSystem::complement) {
    const MaximizerResult res = lts_maximizer(restrict(g, region.complement()), phi, region, cfg.beta);
    const double f_gibbs = rep.free_energies.at("gibbs");
    out.records.push_back(at_least_minus("maximizer_margin", f_gibbs - res.free_energy, kLtsTolerance));
    out.records.push_back(at_most("maximizer_certificate", res.certificate, 1e-8));
  }
}

inline void run_prop4(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const Region region = require_region(cfg);
  const StabilityReport rep = prop4_pipeline(phi, cfg.beta, region, cfg.lambda, cfg.seed);
  for (const auto& r : rep.residuals) out.records.push_back(r);
  for (const auto& n : rep.notes) out.notes.push_back(n);
}

inline void run_ssb_probe(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const Region region = require_region(cfg);
  const std::size_t L = cfg.lattice_size;
  const Region outside = region.complement();
  const DensityState g = gibbs_state(total_hamiltonian(phi), cfg.beta);
  const DensityState psi = noneven_perturbation(perturbed_state(phi, cfg.beta, region), region, std::nullopt, cfg.lambda);
  out.records.push_back(at_most("asymmetry_gibbs", grading_asymmetry(g, Region::full(L)).quantity, 1e-12));
  out.records.push_back(at_most("asymmetry_psi_outside", grading_asymmetry(psi, outside).quantity, 1e-12));
  out.records.push_back(exceeds("asymmetry_psi_region", grading_asymmetry(psi, region).quantity, 1e-9));

  const int i0 = region.sites().front();
  const int j0 = outside.sites().back();
  const AlgebraElement a = annihilator(i0, L) + creator(i0, L);
  const AlgebraElement b = annihilator(j0, L) + creator(j0, L);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = hilbert_dimension(L);
  std::vector<DensityState> states{g, psi, aligned_state(a, b)};
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    Eigen::VectorXcd v(d);
    for (Index i = 0; i < d; ++i) v(i) = Complex(normal(rng), normal(rng));
    v /= v.norm();
    states.emplace_back(v * v.adjoint(), "pure");
  }
  const IncompatibilityScan scan = incompatibility_scan(a, b, states);
  out.records.push_back(at_most("skew_product", scan.max_real_part, 1e-12));
  out.records.push_back(at_most("yabure_violations", static_cast<double>(scan.violations), 0.0));
  out.records.push_back(exceeds("aligned_cluster", scan.min_aligned_cluster, 0.999 * 0.999 / 2.0));
}

inline void run_remark2(const RunConfig& cfg, const Potential& phi, RunOutcome& out) {
  const std::size_t L = cfg.lattice_size;
  if (L < 2) throw UsageError("remark2 needs at least two sites");
  Region region = cfg.region.empty() ? Region::site(L, static_cast<int>(L) - 1) : Region(L, cfg.region);
  if (region.contains(0)) throw UsageError("remark2 region must avoid site 0");
  const DensityState outer = noneven_perturbation(perturbed_state(phi, cfg.beta, region), region, std::nullopt, cfg.lambda);
  const Remark2Result res = remark2_construct(outer);
  out.records.push_back(exceeds("outer_asymmetry", res.outer_asymmetry, 0.0));
  out.records.push_back(at_most("restriction", res.restriction_residual, 1e-10));
  out.records.push_back(at_most("u_expectation", std::abs(res.u_expectation - 1.0), 1e-12));
  out.records.push_back(
      at_most("asymmetry_site0", std::abs(grading_asymmetry(res.vector_state, Region::site(L, 0)).quantity - 1.0), 1e-10));
}

}  // namespace detail

/// Runs one verb. UsageError escapes (exit 2); construction and numerical
/// failures become a failing diagnostic record (exit 1).
inline RunOutcome run_command(const RunConfig& cfg) {
  validate_config(cfg);
  RunOutcome out;
  const ModelSpec spec = model_spec(cfg);
  Potential phi(cfg.lattice_size);
  try {
    phi = build_potential(spec, !cfg.model.raw);
  } catch (const PreconditionError& e) {
    throw UsageError(std::string("invalid model: ") + e.what());
  }

  try {
    if (cfg.command == "validate") detail::run_validate(phi, out);
    else if (cfg.command == "gibbs") detail::run_gibbs(cfg, phi, out);
    else if (cfg.command == "perturb") detail::run_perturb(cfg, phi, out);
    else if (cfg.command == "entropy") detail::run_entropy(cfg, phi, out);
    else if (cfg.command == "lts") detail::run_lts(cfg, phi, out);
    else if (cfg.command == "prop4") detail::run_prop4(cfg, phi, out);
    else if (cfg.command == "ssb-probe") detail::run_ssb_probe(cfg, phi, out);
    else detail::run_remark2(cfg, phi, out);
  } catch (const NumericalError& e) {
    out.records.push_back({"numerical_error", std::nan(""), 0.0, false});
    out.notes.push_back(e.what());
  } catch (const PreconditionError& e) {
    out.records.push_back({"precondition_error", std::nan(""), 0.0, false});
    out.notes.push_back(e.what());
  }

  out.exit_code = std::all_of(out.records.begin(), out.records.end(), [](const auto& r) { return r.pass; }) ? 0 : 1;
  return out;
}

/// Writes the report; throws UsageError if the path cannot be written.
inline void write_report(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw UsageError("cannot write report to '" + path + "'");
  file << text;
  file.flush();
  if (!file) throw UsageError("cannot write report to '" + path + "'");
}

}  // namespace gradelab
