#pragma once

// experiment orchestration: one command per process invocation. reduce and
// solve leave their artifacts under the output directory; verify prints one
// line per invariant and writes the same report as JSON.

#include <iostream>

#include "paradiff/verify.hpp"

namespace paradiff {

inline json error_to_json(const error& e) {
  json j;
  std::string type = "error";
  if (dynamic_cast<const config_error*>(&e)) type = "config_error";
  else if (dynamic_cast<const capability_error*>(&e)) type = "capability_error";
  else if (auto* c = dynamic_cast<const convergence_error*>(&e)) {
    type = "convergence_error";
    j["error"]["residual"] = c->residual;
  } else if (auto* m = dynamic_cast<const margin_error*>(&e)) {
    type = "margin_error";
    j["error"]["margin"] = m->margin;
    j["error"]["location"] = m->location;
  } else if (dynamic_cast<const structure_error*>(&e)) type = "structure_error";
  else if (dynamic_cast<const parameter_error*>(&e)) type = "parameter_error";
  else if (auto* p = dynamic_cast<const precondition_error*>(&e)) {
    type = "precondition_error";
    j["error"]["value"] = p->value;
  } else if (dynamic_cast<const size_error*>(&e)) type = "size_error";
  j["error"]["type"] = type;
  j["error"]["message"] = e.what();
  return j;
}

inline int run_reduce(const ExperimentConfig& cfg, std::ostream& log) {
  auto state = initial_state(cfg);
  auto chi = make_cutoff(cfg.solver.delta);
  auto sys = paralinearize(cfg.spec, cfg.potential, chi, state);
  auto bundle = reduce_full(sys, state, cfg.solver.reduce);

  std::vector<int> probes;
  for (int k = 8; k <= cfg.solver.n / 4; k *= 2) probes.push_back(k);
  if (probes.empty() && cfg.solver.n / 4 >= 2)
    probes.push_back(cfg.solver.n / 4);
  auto table = conjugation_residual(sys, bundle, probes);

  write_text_file(cfg.out_dir, "bundle.json",
                  bundle_to_json(cfg, bundle, table).dump(2) + "\n");
  write_text_file(cfg.out_dir, "residuals.csv", residuals_to_csv(table));
  log << "reduce: m2 = " << format17(bundle.reduced_m2) << ", m1 = ("
      << format17(bundle.reduced_m1.real()) << ", "
      << format17(bundle.reduced_m1.imag()) << "), roundtrip = "
      << format17(bundle.diagnostics.roundtrip) << "\n"
      << "wrote " << cfg.out_dir << "/bundle.json, " << cfg.out_dir
      << "/residuals.csv\n";
  return 0;
}

inline int run_solve(const ExperimentConfig& cfg, std::ostream& log) {
  auto u0 = initial_state(cfg);
  auto res = iterate_quasilinear(cfg.spec, cfg.potential, u0, cfg.solver);

  write_text_file(cfg.out_dir, "trajectory.csv",
                  trajectory_to_csv(res.trajectory));
  write_text_file(cfg.out_dir, "convergence.csv",
                  convergence_to_csv(res.report));
  log << "solve: " << (res.report.converged ? "converged" : "NOT converged")
      << " after " << res.report.iterations << " corrections, T_effective = "
      << format17(res.report.T_effective) << ", final H^s norm = "
      << format17(res.trajectory.samples.back().hs_norm) << "\n"
      << "wrote " << cfg.out_dir << "/trajectory.csv, " << cfg.out_dir
      << "/convergence.csv\n";
  return res.report.converged ? 0 : 1;
}

inline int run_verify(const ExperimentConfig& cfg, std::ostream& log) {
  auto suite = run_invariant_suite(cfg.solver.n, cfg.seed);
  int failures = 0;
  for (const auto& c : suite) {
    log << (c.pass ? "PASS" : "FAIL") << "  " << c.name;
    for (std::size_t pad = c.name.size(); pad < 34; ++pad) log << ' ';
    log << " measured = " << format17(c.measured)
        << "  bound = " << format17(c.bound);
    if (!c.note.empty()) log << "  (" << c.note << ")";
    log << "\n";
    if (!c.pass) ++failures;
  }
  log << (suite.size() - failures) << "/" << suite.size()
      << " invariants hold\n";
  write_text_file(cfg.out_dir, "verify.json",
                  suite_to_json(suite).dump(2) + "\n");
  return failures == 0 ? 0 : 1;
}

inline int run_experiment(const ExperimentConfig& cfg,
                          std::ostream& log = std::cout) {
  if (cfg.command == "reduce") return run_reduce(cfg, log);
  if (cfg.command == "solve") return run_solve(cfg, log);
  if (cfg.command == "verify") return run_verify(cfg, log);
  throw config_error("unknown command: " + cfg.command);
}

}  // namespace paradiff
