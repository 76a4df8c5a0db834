// delm: incentive mechanism design for distributed bagging ensembles.
//
// Subcommands cover the full pipeline: simulate an accuracy surface, fit the
// parametric model, optimize rewards/data sizes, and sweep parameters. Every
// run echoes its effective configuration and seed into the output directory
// and is byte-reproducible from those.

#include <cstdio>
#include <exception>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delm/experiment.hpp"
#include "delm/rng.hpp"
#include "delm/util.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string model_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_model) {
  cmd->add_option("--config", args.config_path, "configuration file (section.key = value)");
  cmd->add_option("--seed", args.seed, "override sim.seed and server.seed");
  cmd->add_option("--out", args.out_dir, "output directory (overrides output.dir)");
  if (with_model) {
    cmd->add_option("--model", args.model_path, "fitted accuracy model file")->required();
  }
}

delm::ExperimentConfig load_config(const CommonArgs& args) {
  delm::ExperimentConfig config;
  if (!args.config_path.empty()) config = delm::parse_config(args.config_path);
  if (args.seed) {
    config.sim.seed = *args.seed;
    config.server.seed = *args.seed;
  }
  if (!args.out_dir.empty()) config.output_dir = args.out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incentive mechanism design for distributed bagging ensembles"};
  app.require_subcommand(1);

  CommonArgs sweep_args, fit_args, opt_args, conv_args, gamma_args, oracle_args;
  std::string fit_input, fit_column = "true_accuracy";

  CLI::App* sweep = app.add_subcommand(
      "accuracy-sweep", "simulate the (learners x data) accuracy grid and fit both models");
  add_common(sweep, sweep_args, false);

  CLI::App* fit = app.add_subcommand("fit", "refit a model from an accuracy-sweep CSV");
  add_common(fit, fit_args, false);
  fit->add_option("--in", fit_input, "accuracy_sweep.csv from a previous run")->required();
  fit->add_option("--column", fit_column, "surrogate_f or true_accuracy")
      ->check(CLI::IsMember({"surrogate_f", "true_accuracy"}));

  CLI::App* optimize = app.add_subcommand("optimize", "run the alternating optimizer once");
  add_common(optimize, opt_args, true);
  bool randomize_order = false;
  optimize->add_flag("--randomize-order", randomize_order,
                     "process learners in random order instead of sorted by cost");

  CLI::App* convergence =
      app.add_subcommand("convergence", "iteration counts across seeds and gamma values");
  add_common(convergence, conv_args, true);

  CLI::App* gamma = app.add_subcommand("gamma-sweep", "optimize and evaluate across gamma");
  add_common(gamma, gamma_args, true);

  CLI::App* oracle =
      app.add_subcommand("oracle-compare", "alternating optimizer vs brute-force enumeration");
  add_common(oracle, oracle_args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      const auto config = load_config(sweep_args);
      const auto result = delm::run_accuracy_sweep(config);
      delm::write_accuracy_sweep(config.output_dir, config, result);
      std::printf("accuracy-sweep: %zu cells -> %s\n", result.cells.size(),
                  config.output_dir.c_str());
      std::printf("fit_status = %s\n", result.fit_status.c_str());
      if (result.pearson_surrogate_true) {
        std::printf("pearson_surrogate_true = %.4f\n", *result.pearson_surrogate_true);
      }
    } else if (fit->parsed()) {
      const auto config = load_config(fit_args);
      const std::string text = delm::read_text_file(fit_input);
      std::vector<delm::FitSample> samples;
      std::istringstream in(text);
      std::string line;
      std::getline(in, line);  // header
      std::vector<std::string> cols;
      {
        std::stringstream hs(line);
        std::string c;
        while (std::getline(hs, c, ',')) cols.push_back(c);
      }
      const auto col_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          if (cols[i] == name) return static_cast<int>(i);
        }
        throw std::runtime_error("column not found in " + fit_input + ": " + name);
      };
      const int n_col = col_index("n_participants");
      const int s_col = col_index("total_data");
      const int y_col = col_index(fit_column);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        samples.push_back({std::stoi(cells[n_col]), std::stod(cells[s_col]),
                           std::stod(cells[y_col])});
      }
      delm::FitOptions options;
      options.seed = config.server.seed;
      const auto model = delm::fit_accuracy_model(samples, options);
      delm::ensure_directory(config.output_dir);
      const std::string path = config.output_dir + "/fitted_" + fit_column + ".model";
      model.save(path);
      std::printf("fit: %zu samples, rmse = %.6g -> %s\n", samples.size(), model.rmse,
                  path.c_str());
    } else if (optimize->parsed()) {
      const auto config = load_config(opt_args);
      const auto model = delm::FittedAccuracyModel::load(opt_args.model_path);
      const auto profiles = delm::draw_population(
          config.population, delm::derive_seed(config.server.seed, 0x706f70756cULL, 0));
      delm::AlternateOptions options;
      options.randomize_order = randomize_order;
      options.order_seed = config.server.seed;
      const auto report = delm::alternate_optimize(model, profiles, config.server, options);
      delm::write_optimize_report(config.output_dir, config, profiles, report);
      std::printf("optimize: payoff = %.6g, participants = %d, iterations = %d (%s), %.3fs\n",
                  report.server_payoff, report.n_participants, report.iterations_used,
                  report.converged ? "converged" : "not converged", report.wall_time);
    } else if (convergence->parsed()) {
      const auto config = load_config(conv_args);
      const auto model = delm::FittedAccuracyModel::load(conv_args.model_path);
      auto result = delm::run_convergence_study(config, model);
      delm::write_convergence_study(config.output_dir, config, result);
      std::printf("convergence: %zu runs, mean iterations = %.2f, converged = %.0f%%\n",
                  result.runs.size(), result.mean_iterations,
                  100.0 * result.converged_fraction);
    } else if (gamma->parsed()) {
      const auto config = load_config(gamma_args);
      const auto model = delm::FittedAccuracyModel::load(gamma_args.model_path);
      const auto points = delm::run_gamma_sweep(config, model);
      delm::write_gamma_sweep(config.output_dir, config, points);
      std::printf("gamma-sweep: %zu points -> %s\n", points.size(), config.output_dir.c_str());
    } else if (oracle->parsed()) {
      const auto config = load_config(oracle_args);
      const auto model = delm::FittedAccuracyModel::load(oracle_args.model_path);
      const auto instances = delm::run_oracle_compare(config, model);
      delm::write_oracle_compare(config.output_dir, config, instances);
      std::printf("oracle-compare: %zu instances -> %s\n", instances.size(),
                  config.output_dir.c_str());
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
