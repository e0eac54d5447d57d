#include <iostream>

#include "CLI11.hpp"

#include "dmbpp/cli.hpp"

namespace cli = dmbpp::cli;

int main(int argc, char** argv) {
  CLI::App app{"Bayesian density estimation on products of simplices and the unit hypercube"};
  app.set_version_flag("--version", cli::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON configuration file");
    sub->add_option("-s,--set", overrides, "Override a configuration key, e.g. sampler.chain_length=500");
    sub->add_option("-o,--output-dir", output_dir, "Output directory (overrides output_dir)");
  };
  auto* fit = app.add_subcommand("fit", "Fit the model to a CSV dataset and store posterior draws");
  auto* predict = app.add_subcommand("predict", "Posterior predictive joint, marginal and conditional densities");
  auto* simulate = app.add_subcommand("simulate", "Simulate datasets from a benchmark scenario");
  auto* report = app.add_subcommand("report", "MPEL1 tables for a benchmark scenario");
  for (auto* sub : {fit, predict, simulate, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cli::Json config = cli::load_config(config_path);
    for (const auto& o : overrides) cli::apply_override(config, o);
    if (!output_dir.empty()) config["output_dir"] = output_dir;
    std::vector<std::string> outputs;
    if (fit->parsed()) outputs = cli::cmd_fit(config);
    if (predict->parsed()) outputs = cli::cmd_predict(config);
    if (simulate->parsed()) outputs = cli::cmd_simulate(config);
    if (report->parsed()) outputs = cli::cmd_report(config);
    for (const auto& p : outputs) std::cout << p << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code(e);
  }
}
