#pragma once

// configuration loading and artifact emission. JSON for config and
// structured outputs, CSV for time series; all floats printed with 17
// significant digits so artifacts reparse bit-exactly.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "paradiff/reduce.hpp"
#include "paradiff/solve.hpp"

namespace paradiff {

using json = nlohmann::json;

inline std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// field and symbol dumps

// {"n": int, "coeffs": [[re, im], ...]} ordered j = -n/2 .. n/2-1
inline json field_to_json(const SpectralField& f) {
  json coeffs = json::array();
  const PeriodicGrid& g = f.grid;
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j)
    coeffs.push_back({f.at(j).real(), f.at(j).imag()});
  return {{"n", g.n}, {"coeffs", std::move(coeffs)}};
}

inline SpectralField field_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("coeffs"))
    throw config_error("field: expected {\"n\": .., \"coeffs\": [[re, im]..]}");
  PeriodicGrid g(j.at("n").get<int>());
  const json& coeffs = j.at("coeffs");
  if ((int)coeffs.size() != g.n)
    throw size_error("field: coefficient count does not match n");
  auto f = SpectralField::zero(g);
  for (int i = 0; i < g.n; ++i) {
    int mode = g.mode_lo() + i;
    f.at(mode) = cd(coeffs[i][0].get<double>(), coeffs[i][1].get<double>());
  }
  return f;
}

inline json profile_to_json(const XiProfile& p) {
  if (p.kind == XiProfile::Kind::monomial)
    return {{"kind", "monomial"}, {"k", p.k}};
  json values = json::array();
  for (cd v : p.values) values.push_back({v.real(), v.imag()});
  return {{"kind", "table"}, {"xi_max", p.xi_max},
          {"values", std::move(values)}};
}

inline json symbol_to_json(const DiscreteSymbol& sym) {
  json terms = json::array();
  for (const auto& t : sym.terms)
    terms.push_back({{"coeff", field_to_json(t.coeff)},
                     {"profile", profile_to_json(t.profile)}});
  return {{"order", sym.order}, {"terms", std::move(terms)}};
}

// ---------------------------------------------------------------------------
// experiment configuration

struct ExperimentConfig {
  std::string command = "verify";
  std::string preset = "zero";
  bool custom = false;
  NonlinearitySpec spec = preset_nonlinearity("zero");
  PotentialSpec potential;
  double amp = 0.1;
  int mode = 1;
  // explicit plus-component modes [j, re, im]; uhat+(j) = (re+i im) sqrt(2pi)
  std::vector<std::array<double, 3>> coefficients;
  SolverConfig solver;
  std::string out_dir = ".";
  unsigned seed = 17;
};

namespace cfgdetail {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> k = {
      "preset",     "custom",    "potential",       "symmetric_potential",
      "amp",        "mode",      "coefficients",    "n",
      "s",          "t_final",   "dt",              "duhamel_step",
      "tolerance",  "max_outer", "max_fixed_point", "max_halvings",
      "delta",      "rho",       "out"};
  return k;
}

inline double need_number(const json& j, const std::string& path) {
  if (!j.is_number())
    throw config_error(path + ": expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

inline int need_int(const json& j, const std::string& path) {
  if (!j.is_number_integer())
    throw config_error(path + ": expected an integer, got " + std::string(j.type_name()));
  return j.get<int>();
}

inline std::string need_string(const json& j, const std::string& path) {
  if (!j.is_string())
    throw config_error(path + ": expected a string, got " + std::string(j.type_name()));
  return j.get<std::string>();
}

inline MonomialList parse_monomials(const json& j, const std::string& path) {
  if (!j.is_array()) throw config_error(path + ": expected an array");
  MonomialList out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& m = j[i];
    std::string p = path + "/" + std::to_string(i);
    if (!m.is_array() || m.size() != 3)
      throw config_error(p + ": expected [re, im, [6 exponents]]");
    Monomial mono;
    mono.coeff = cd(need_number(m[0], p + "/0"), need_number(m[1], p + "/1"));
    if (!m[2].is_array() || m[2].size() != 6)
      throw config_error(p + "/2: expected 6 exponents");
    for (int e = 0; e < 6; ++e)
      mono.exp[e] = need_int(m[2][e], p + "/2/" + std::to_string(e));
    out.push_back(mono);
  }
  return out;
}

inline NonlinearitySpec parse_custom(const json& j) {
  if (!j.is_object()) throw config_error("/custom: expected an object");
  NonlinearitySpec s;
  for (const auto& [key, val] : j.items()) {
    if (key == "name") {
      s.name = need_string(val, "/custom/name");
    } else if (key == "monomials") {
      s.monomials = parse_monomials(val, "/custom/monomials");
    } else if (key == "energy") {
      s.energy = parse_monomials(val, "/custom/energy");
      s.has_energy = true;
    } else if (key == "has_energy") {
      if (!val.is_boolean())
        throw config_error("/custom/has_energy: expected a boolean");
      s.has_energy = val.get<bool>();
    } else if (key == "claim") {
      std::string c = need_string(val, "/custom/claim");
      if (c == "none")
        s.claim = StructureClaim::none;
      else if (c == "hamiltonian")
        s.claim = StructureClaim::hamiltonian;
      else if (c == "parity")
        s.claim = StructureClaim::parity;
      else
        throw config_error("/custom/claim: expected none|hamiltonian|parity");
    } else if (key == "conjugate_dynamics") {
      if (!val.is_boolean())
        throw config_error("/custom/conjugate_dynamics: expected a boolean");
      s.conjugate_dynamics = val.get<bool>();
    } else {
      throw config_error("/custom/" + key + ": unknown field");
    }
  }
  return s;
}

inline void apply_fields(ExperimentConfig& cfg, const json& src,
                         const std::string& prefix, bool& amp_set,
                         bool& coeffs_set, bool& preset_set, bool& custom_set,
                         bool& symflag_set) {
  if (!src.is_object())
    throw config_error(prefix + ": expected a JSON object");
  for (const auto& [key, val] : src.items()) {
    std::string path = prefix + "/" + key;
    if (key == "preset") {
      cfg.preset = need_string(val, path);
      preset_set = true;
    } else if (key == "custom") {
      cfg.spec = parse_custom(val);
      cfg.custom = true;
      custom_set = true;
    } else if (key == "potential") {
      if (!val.is_array()) throw config_error(path + ": expected [[j, value], ...]");
      cfg.potential.coeffs.clear();
      for (std::size_t i = 0; i < val.size(); ++i) {
        const auto& pr = val[i];
        std::string p = path + "/" + std::to_string(i);
        if (!pr.is_array() || pr.size() != 2)
          throw config_error(p + ": expected [j, value]");
        cfg.potential.coeffs[need_int(pr[0], p + "/0")] =
            need_number(pr[1], p + "/1");
      }
    } else if (key == "symmetric_potential") {
      if (!val.is_boolean()) throw config_error(path + ": expected a boolean");
      cfg.potential.symmetric_flag = val.get<bool>();
      symflag_set = true;
    } else if (key == "amp") {
      cfg.amp = need_number(val, path);
      amp_set = true;
    } else if (key == "mode") {
      cfg.mode = need_int(val, path);
      amp_set = true;
    } else if (key == "coefficients") {
      if (!val.is_array())
        throw config_error(path + ": expected [[j, re, im], ...]");
      cfg.coefficients.clear();
      for (std::size_t i = 0; i < val.size(); ++i) {
        const auto& c = val[i];
        std::string p = path + "/" + std::to_string(i);
        if (!c.is_array() || c.size() != 3)
          throw config_error(p + ": expected [j, re, im]");
        cfg.coefficients.push_back({(double)need_int(c[0], p + "/0"),
                                    need_number(c[1], p + "/1"),
                                    need_number(c[2], p + "/2")});
      }
      coeffs_set = true;
    } else if (key == "n") {
      cfg.solver.n = need_int(val, path);
    } else if (key == "s") {
      cfg.solver.s = need_number(val, path);
    } else if (key == "t_final") {
      cfg.solver.T = need_number(val, path);
    } else if (key == "dt") {
      cfg.solver.dt = need_number(val, path);
    } else if (key == "duhamel_step") {
      cfg.solver.duhamel_step = need_number(val, path);
    } else if (key == "tolerance") {
      cfg.solver.tolerance = need_number(val, path);
    } else if (key == "max_outer") {
      cfg.solver.max_outer = need_int(val, path);
    } else if (key == "max_fixed_point") {
      cfg.solver.max_fixed_point = need_int(val, path);
    } else if (key == "max_halvings") {
      cfg.solver.max_halvings = need_int(val, path);
    } else if (key == "delta") {
      cfg.solver.delta = need_number(val, path);
    } else if (key == "rho") {
      cfg.solver.rho = need_int(val, path);
    } else if (key == "out") {
      cfg.out_dir = need_string(val, path);
    } else {
      std::string known;
      for (const auto& k : known_keys()) known += (known.empty() ? "" : ", ") + k;
      throw config_error(path + ": unknown field (known: " + known + ")");
    }
  }
}

}  // namespace cfgdetail

// merges defaults <- file <- flag overrides; either json may be empty.
inline ExperimentConfig load_config(const std::string& command,
                                    const json& file,
                                    const json& overrides = json::object()) {
  ExperimentConfig cfg;
  cfg.command = command;
  cfg.potential.symmetric_flag = true;  // the empty potential is symmetric
  if (command == "verify") cfg.solver.n = 128;

  bool amp_file = false, coeffs_file = false, preset_file = false,
       custom_file = false, symflag_file = false;
  cfgdetail::apply_fields(cfg, file, "", amp_file, coeffs_file, preset_file,
                          custom_file, symflag_file);
  bool amp_flag = false, coeffs_flag = false, preset_flag = false,
       custom_flag = false, symflag_flag = false;
  cfgdetail::apply_fields(cfg, overrides, "(flags)", amp_flag, coeffs_flag,
                          preset_flag, custom_flag, symflag_flag);

  if (custom_file && (preset_file || preset_flag))
    throw config_error("/preset: contradicts /custom (pick one nonlinearity)");
  if (coeffs_file && amp_flag)
    throw config_error(
        "(flags)/amp: contradicts /coefficients in the config file");
  if (amp_file && coeffs_file)
    throw config_error("/amp: contradicts /coefficients (pick one)");
  (void)coeffs_flag;

  if (!cfg.custom) {
    try {
      cfg.spec = preset_nonlinearity(cfg.preset);
    } catch (const error&) {
      throw config_error("/preset: unknown preset \"" + cfg.preset +
                         "\" (valid: zero, manuela, manuela1, manuela2, "
                         "christ<p> for p >= 2)");
    }
  }
  validate_nonlinearity(cfg.spec);

  // an unstated flag follows the data: symmetric iff the table is
  if (!symflag_file && !symflag_flag) {
    bool sym = true;
    for (const auto& [j, v] : cfg.potential.coeffs) {
      auto it = cfg.potential.coeffs.find(-j);
      if (it == cfg.potential.coeffs.end() || it->second != v) sym = false;
    }
    cfg.potential.symmetric_flag = sym;
  }
  cfg.potential.validate();

  validate_config(cfg.solver);
  if (cfg.solver.rho < 1 || cfg.solver.rho > 3)
    throw config_error("/rho: must be 1, 2 or 3");
  make_cutoff(cfg.solver.delta);  // range check
  if (std::abs(cfg.mode) > cfg.solver.n / 2 - 1)
    throw config_error("/mode: outside the grid, |mode| <= n/2 - 1");
  for (const auto& c : cfg.coefficients)
    if (std::abs((int)c[0]) > cfg.solver.n / 2 - 1)
      throw config_error("/coefficients: mode " +
                         std::to_string((int)c[0]) + " outside the grid");
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& command,
                                         const std::string& path,
                                         const json& overrides) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json file;
  try {
    file = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("config file " + path + ": " + e.what());
  }
  return load_config(command, file, overrides);
}

// initial data: explicit modes win; otherwise amp * cos(mode x), the
// conjugate-paired state amp (e^{i mode x} + e^{-i mode x}) / 2
inline DoubledState initial_state(const ExperimentConfig& cfg) {
  PeriodicGrid g(cfg.solver.n);
  auto u = SpectralField::zero(g);
  if (!cfg.coefficients.empty()) {
    for (const auto& c : cfg.coefficients)
      u.at((int)c[0]) += cd(c[1], c[2]) * sqrt_two_pi;
  } else {
    u.at(cfg.mode) += cd(0.5 * cfg.amp) * sqrt_two_pi;
    u.at(g.reflect(cfg.mode)) += cd(0.5 * cfg.amp) * sqrt_two_pi;
  }
  DoubledState s{u, u};
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j)
    s.minus.at(j) = std::conj(u.at(g.reflect(j)));
  return s;
}

// ---------------------------------------------------------------------------
// artifact serialization (keys sorted by nlohmann::json, hence stable)

inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["preset"] = cfg.custom ? "custom:" + cfg.spec.name : cfg.preset;
  j["n"] = cfg.solver.n;
  j["s"] = cfg.solver.s;
  j["amp"] = cfg.amp;
  j["mode"] = cfg.mode;
  j["t_final"] = cfg.solver.T;
  j["dt"] = cfg.solver.dt;
  j["tolerance"] = cfg.solver.tolerance;
  j["delta"] = cfg.solver.delta;
  j["rho"] = cfg.solver.rho;
  return j;
}

inline json bundle_to_json(const ExperimentConfig& cfg,
                           const ReductionBundle& b,
                           const std::vector<std::pair<int, double>>& table) {
  json j;
  j["schema"] = "paradiff.bundle.v1";
  j["config"] = config_to_json(cfg);
  j["reduced"]["m2"] = b.reduced_m2;
  j["reduced"]["m1"] = {b.reduced_m1.real(), b.reduced_m1.imag()};
  j["margins"]["constraint1"] = b.diagnostics.margin1;
  j["margins"]["constraint2"] = b.diagnostics.margin2;
  j["margins"]["where1"] = b.diagnostics.where1;
  j["margins"]["where2"] = b.diagnostics.where2;
  j["diagnostics"]["diag_residual"] = b.diagnostics.diag_residual;
  j["diagnostics"]["completion_defect"] = b.diagnostics.completion_defect;
  j["diagnostics"]["cancel_residual"] = b.diagnostics.cancel_residual;
  j["diagnostics"]["chain_residual"] = b.diagnostics.chain_residual;
  j["diagnostics"]["newton_residual"] = b.diagnostics.newton_residual;
  j["diagnostics"]["tau_steps"] = b.diagnostics.tau_steps;
  j["diagnostics"]["roundtrip"] = b.diagnostics.roundtrip;
  j["residual_table"] = json::array();
  for (const auto& [k, v] : table)
    j["residual_table"].push_back({json(k), json(v)});
  return j;
}

inline std::string residuals_to_csv(
    const std::vector<std::pair<int, double>>& table) {
  std::string out = "k,residual\n";
  for (const auto& [k, v] : table)
    out += std::to_string(k) + "," + format17(v) + "\n";
  return out;
}

inline std::string trajectory_to_csv(const Trajectory& t) {
  std::string out =
      "t,hs_norm,hs2_norm,energy,reality_violation,parity_violation\n";
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    const auto& d = t.samples.at(i);
    out += format17(t.times[i]) + "," + format17(d.hs_norm) + "," +
           format17(d.hs2_norm) + ",";
    if (!std::isnan(d.energy)) out += format17(d.energy);
    out += "," + format17(d.reality_violation) + "," +
           format17(d.parity_violation) + "\n";
  }
  return out;
}

inline std::string convergence_to_csv(const ConvergenceReport& r) {
  std::string out = "iteration,sup_diff,ratio\n";
  for (std::size_t i = 0; i < r.sup_diffs.size(); ++i) {
    out += std::to_string(i + 1) + "," + format17(r.sup_diffs[i]) + ",";
    if (i > 0 && i - 1 < r.ratios.size()) out += format17(r.ratios[i - 1]);
    out += "\n";
  }
  return out;
}

inline void write_text_file(const std::string& dir, const std::string& name,
                            const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::path p = fs::path(dir) / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw config_error("cannot write " + p.string());
  out << content;
  if (!out) throw config_error("write failed: " + p.string());
}

}  // namespace paradiff
