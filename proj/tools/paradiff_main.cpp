#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "paradiff/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spectral toolkit for paradifferential reduction of "
               "quasilinear Schrodinger equations on the circle"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  int n = 0, mode = 0, rho = 0;
  double amp = 0.0, t_final = 0.0, dt = 0.0, s = 0.0, delta = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--preset", preset,
                    "nonlinearity preset (zero, manuela, manuela1, manuela2, "
                    "christ<p>)");
    sub->add_option("--n", n, "grid size");
    sub->add_option("--amp", amp, "initial data amplitude");
    sub->add_option("--mode", mode, "initial data mode");
    sub->add_option("--t-final", t_final, "final time");
    sub->add_option("--dt", dt, "time step");
    sub->add_option("--s", s, "Sobolev index");
    sub->add_option("--delta", delta, "paradifferential cutoff parameter");
    sub->add_option("--rho", rho, "sharp product expansion order");
    sub->add_option("--out", out_dir, "output directory");
  };
  add_common(app.add_subcommand("reduce",
                                "build the constant-coefficient reduction "
                                "bundle at the given state"));
  add_common(app.add_subcommand("solve",
                                "run the iterated frozen-coefficient solver"));
  add_common(app.add_subcommand("verify",
                                "run the module invariant suite"));

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  paradiff::json overrides = paradiff::json::object();
  if (sub->count("--preset")) overrides["preset"] = preset;
  if (sub->count("--n")) overrides["n"] = n;
  if (sub->count("--amp")) overrides["amp"] = amp;
  if (sub->count("--mode")) overrides["mode"] = mode;
  if (sub->count("--t-final")) overrides["t_final"] = t_final;
  if (sub->count("--dt")) overrides["dt"] = dt;
  if (sub->count("--s")) overrides["s"] = s;
  if (sub->count("--delta")) overrides["delta"] = delta;
  if (sub->count("--rho")) overrides["rho"] = rho;
  if (sub->count("--out")) overrides["out"] = out_dir;

  try {
    paradiff::ExperimentConfig cfg =
        config_path.empty()
            ? paradiff::load_config(sub->get_name(), paradiff::json::object(),
                                    overrides)
            : paradiff::load_config_file(sub->get_name(), config_path,
                                         overrides);
    if (const char* env = std::getenv("PARADIFF_SEED")) {
      try {
        cfg.seed = (unsigned)std::stoul(env);
      } catch (const std::exception&) {
        throw paradiff::config_error(
            "PARADIFF_SEED: expected an unsigned integer");
      }
    }
    return paradiff::run_experiment(cfg);
  } catch (const paradiff::error& e) {
    std::cerr << paradiff::error_to_json(e).dump(2) << std::endl;
    return 2;
  } catch (const std::exception& e) {
    paradiff::json j;
    j["error"]["type"] = "internal";
    j["error"]["message"] = e.what();
    std::cerr << j.dump(2) << std::endl;
    return 3;
  }
}
