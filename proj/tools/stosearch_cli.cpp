// Command-line harness: data fitting plus the Monte Carlo verification
// experiments. Writes one JSON report per run (stdout, or --output <path>)
// and plot-ready CSV side tables named <output>.<table>.csv.
//
// Exit codes: 0 success / all checks passed, 2 an asserted check failed,
// 1 input or usage error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "stosearch/experiments.hpp"

namespace {

using stosearch::CmdResult;
using stosearch::CsvTable;
using stosearch::SimConfig;

void write_table_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t j = 0; j < table.header.size(); ++j)
    out << (j ? "," : "") << table.header[j];
  out << "\n";
  out.precision(17);
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
}

int emit(const SimConfig& cfg, const CmdResult& result) {
  const std::string text = result.report.dump(2);
  if (cfg.output.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(cfg.output);
    if (!out) throw std::runtime_error("cannot write " + cfg.output);
    out << text << "\n";
    for (const auto& table : result.tables)
      write_table_csv(cfg.output + "." + table.name + ".csv", table);
  }
  return result.exit_code();
}

void add_common_options(CLI::App* cmd, SimConfig& cfg) {
  cmd->add_option("--n", cfg.n, "sample size");
  cmd->add_option("--q", cfg.q, "parameter dimension");
  cmd->add_option("--B", cfg.B, "replicate / candidate count");
  cmd->add_option("--reps", cfg.reps, "Monte Carlo repetitions");
  cmd->add_option("--c", cfg.c, "weight tuning constant");
  cmd->add_option("--scheme", cfg.scheme, "weight scheme")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, stosearch::WeightScheme>{
              {"multinomial", stosearch::WeightScheme::multinomial},
              {"subsample", stosearch::WeightScheme::subsample}}));
  cmd->add_option("--seed", cfg.seed, "RNG seed");
  cmd->add_option("--error-model", cfg.error_model, "error model")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, stosearch::ErrorModel>{
              {"normal", stosearch::ErrorModel::normal},
              {"centered_exponential",
               stosearch::ErrorModel::centered_exponential},
              {"centered_gumbel", stosearch::ErrorModel::centered_gumbel},
              {"heteroscedastic_normal",
               stosearch::ErrorModel::heteroscedastic_normal}}));
  cmd->add_option("--tol", cfg.tol, "log-concave solver tolerance");
  cmd->add_option("--input", cfg.input, "input CSV path");
  cmd->add_option("--response", cfg.response, "response column name");
  cmd->add_flag("--add-intercept", cfg.add_intercept,
                "append an all-ones intercept column");
  cmd->add_flag("--dump-weights", cfg.dump_weights,
                "also dump drawn weight vectors (debug)");
  cmd->add_option("--output", cfg.output, "JSON report path");
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "stochastic-search regression with log-concave errors and its "
      "Monte Carlo verification experiments"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
    SimConfig defaults;
  };
  SimConfig base;
  std::vector<SubSpec> specs;
  {
    SimConfig d = base;
    d.B = 200;
    specs.push_back({"fit", "stochastic-search estimate on a CSV dataset", d});
  }
  {
    SimConfig d = base;
    d.B = 20000;
    d.reps = 500;
    specs.push_back({"sim-weibull",
                     "scaled nearest-neighbor distances vs the Weibull limit",
                     d});
  }
  {
    SimConfig d = base;
    d.B = 20000;
    d.reps = 2000;
    specs.push_back({"sim-corollary",
                     "scaled-minimum law vs its closed-form limit sampler",
                     d});
  }
  {
    SimConfig d = base;
    d.n = 2000;
    d.reps = 2000;
    d.error_model = stosearch::ErrorModel::heteroscedastic_normal;
    specs.push_back({"sim-joint",
                     "joint Gaussian limit of OLS and weighted LS candidates",
                     d});
  }
  {
    SimConfig d = base;
    d.B = 1000;
    d.n = 1000;
    specs.push_back(
        {"sim-mindist", "nearest candidate distance over a grid in B", d});
  }
  {
    SimConfig d = base;
    d.n = 2000;
    d.B = 500;
    specs.push_back({"sim-bootstrap",
                     "conditional law of the weighted LS perturbation", d});
  }
  {
    SimConfig d = base;
    d.n = 800;
    d.B = 50;
    d.reps = 100;
    specs.push_back({"sim-consistency",
                     "density and parameter consistency across n", d});
  }
  {
    SimConfig d = base;
    d.n = 10000;
    d.reps = 100;
    specs.push_back(
        {"check-conditions", "regularity-condition diagnostics", d});
  }

  std::vector<SimConfig> configs(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    configs[i] = specs[i].defaults;
    configs[i].experiment = specs[i].name;
    add_common_options(app.add_subcommand(specs[i].name, specs[i].help),
                       configs[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (app.get_subcommand(specs[i].name)->parsed())
        return emit(configs[i], stosearch::run_command(configs[i]));
    }
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
