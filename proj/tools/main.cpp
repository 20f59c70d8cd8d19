#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "bikecross/csv.hpp"
#include "bikecross/errors.hpp"
#include "bikecross/residual.hpp"
#include "bikecross/scenario.hpp"
#include "bikecross/sim.hpp"
#include "bikecross/supervisor.hpp"

namespace {

using namespace bikecross;

int cmd_run(const std::string& path, const std::string& out_dir,
            bool no_impulse, bool no_residual, bool seed_set,
            std::uint64_t seed) {
  Scenario sc = Scenario::load(path);
  if (no_impulse) sc.impulse_enabled = false;
  if (no_residual) sc.residual_enabled = false;
  if (seed_set) sc.seed = seed;

  const RunResult r = run_scenario(sc);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_outputs(r, sc, out_dir);
  }
  std::cout << "verdict=" << to_string(r.verdict)
            << " final_mode=" << to_string(r.final_mode)
            << " max_abs_varphi_b_deg=" << format_double(rad2deg(r.max_abs_varphi_b))
            << " cross_track_rms=" << format_double(r.cross_track_rms)
            << " impacts=" << r.impacts.size()
            << " impulses=" << r.impulses.size() << "\n";
  if (!r.fail_reason.empty())
    std::cout << "fail_reason=" << r.fail_reason << "\n";
  return r.verdict == Verdict::Balanced ? 0 : 2;
}

int cmd_roa(const std::string& path, const std::string& out_file) {
  Scenario sc = Scenario::load(path);
  const RoaGrid grid =
      estimate_roa(sc.params, sc.limits, sc.gains, sc.eic, sc.roa);
  write_text_file(out_file, roa_to_csv(grid));
  std::size_t members = 0;
  for (std::uint8_t m : grid.member) members += m != 0;
  std::cout << "cells=" << grid.member.size() << " members=" << members
            << " out=" << out_file << "\n";
  return 0;
}

int cmd_train(const std::string& path, const std::string& out_model) {
  Scenario sc = Scenario::load(path);
  std::cout << "generating " << sc.residual.num_examples
            << " synthetic impact examples...\n";
  const ResidualDataset data = generate_synthetic_dataset(
      sc.residual, sc.params, sc.limits, sc.gains, sc.eic, sc.restitution,
      sc.seed);
  Rng rng(sc.seed ^ 0x5deece66dULL);
  std::cout << "training (hidden=" << sc.residual.hidden
            << ", window=" << sc.residual.window << ")...\n";
  const TrainResult res = train_residual(data, sc.residual, rng);
  res.model.save(out_model);
  const double ratio =
      res.nominal_rmse > 0 ? res.val_rmse / res.nominal_rmse : 0.0;
  std::cout << "examples=" << data.size() << " epochs=" << res.epochs_run
            << " nominal_rmse=" << format_double(res.nominal_rmse)
            << " val_rmse=" << format_double(res.val_rmse)
            << " ratio=" << format_double(ratio) << " model=" << out_model
            << "\n";
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& spec,
              const std::string& out_file) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw ValidationError("--param must look like name=lo:hi:n");
  const std::string name = spec.substr(0, eq);
  double lo = 0, hi = 0;
  int n = 0;
  {
    std::string rest = spec.substr(eq + 1);
    std::replace(rest.begin(), rest.end(), ':', ' ');
    std::istringstream is(rest);
    if (!(is >> lo >> hi >> n) || n < 1)
      throw ValidationError("--param must look like name=lo:hi:n with n >= 1");
  }
  const Scenario base = Scenario::load(path);
  CsvBuilder csv({"value", "verdict", "impacts", "impulses",
                  "max_abs_delta_tau_x", "max_abs_varphi_b_deg",
                  "cross_track_rms"});
  for (int i = 0; i < n; ++i) {
    const double value =
        n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    Scenario sc = base;
    sc.set_param(name, value);
    const RunResult r = run_scenario(sc);
    double max_tau = 0.0;
    for (const ImpulseRecord& imp : r.impulses)
      max_tau = std::max(max_tau, std::abs(imp.delta_tau_x));
    csv.row({format_double(value), to_string(r.verdict),
             std::to_string(r.impacts.size()), std::to_string(r.impulses.size()),
             format_double(max_tau), format_double(rad2deg(r.max_abs_varphi_b)),
             format_double(r.cross_track_rms)});
  }
  std::cout << csv.str();
  if (!out_file.empty()) write_text_file(out_file, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bikecross: bikebot obstacle-crossing simulation and control"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, out_file, model_path, param_spec;
  bool no_impulse = false, no_residual = false;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "Simulate one scenario");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory for CSV/JSON artifacts");
  run->add_flag("--no-impulse", no_impulse, "disable leg impulses");
  run->add_flag("--no-residual", no_residual, "disable the residual model");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the scenario seed");

  CLI::App* roa = app.add_subcommand(
      "roa", "Estimate the balance region of attraction");
  roa->add_option("scenario", scenario_path, "scenario file")->required();
  roa->add_option("--out", out_file, "CSV output path")->required();

  CLI::App* train = app.add_subcommand(
      "train-residual", "Train the impact residual model");
  train->add_option("config", scenario_path, "scenario/config file")->required();
  train->add_option("--out", model_path, "model output path")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "Run a scalar parameter sweep");
  sweep->add_option("scenario", scenario_path, "scenario file")->required();
  sweep->add_option("--param", param_spec, "sweep spec name=lo:hi:n")->required();
  sweep->add_option("--out", out_file, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, out_dir, no_impulse, no_residual,
                     seed_opt->count() > 0, seed);
    if (roa->parsed()) return cmd_roa(scenario_path, out_file);
    if (train->parsed()) return cmd_train(scenario_path, model_path);
    if (sweep->parsed()) return cmd_sweep(scenario_path, param_spec, out_file);
  } catch (const bikecross::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
