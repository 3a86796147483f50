// sflpon: run, compare and sweep federated-learning experiments over a
// simulated PON. See README.md for the flags and output files.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sflpon/cli.hpp"

namespace {

void add_common(CLI::App* cmd, sflpon::cli::Options& opts, bool with_mode, bool with_clients) {
  cmd->add_option("--config", opts.config_path, "JSON experiment config (defaults used when omitted)");
  cmd->add_option("--out", opts.out_dir, "output directory (default: $SFLPON_OUT_DIR or ./out)");
  cmd->add_option("--seed", opts.seed, "root RNG seed");
  cmd->add_option("--rounds", opts.rounds, "number of rounds");
  cmd->add_option("--jobs", opts.workers, "worker threads for local training");
  if (with_clients) cmd->add_option("--clients", opts.clients, "clients selected per round (N)");
  if (with_mode) {
    const std::map<std::string, sflpon::Mode> modes{{"classical", sflpon::Mode::Classical},
                                                    {"sfl", sflpon::Mode::Sfl}};
    cmd->add_option("--mode", opts.mode, "aggregation mode")->transform(CLI::CheckedTransformer(modes));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning over a passive optical network: classical vs. two-step aggregation"};
  app.require_subcommand(1);

  sflpon::cli::Options opts;
  std::vector<int> n_values;

  auto* run = app.add_subcommand("run", "run one experiment; writes records.csv and summary.json");
  add_common(run, opts, true, true);
  auto* compare = app.add_subcommand("compare", "run both modes with the same seed; writes paired CSVs and comparison.json");
  add_common(compare, opts, false, true);
  auto* sweep = app.add_subcommand("sweep", "compare both modes for several N; writes sweep.csv");
  add_common(sweep, opts, false, false);
  sweep->add_option("--n-values", n_values, "comma-separated list of N")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sflpon::cli::kExitConfig;
  }

  if (run->parsed()) return sflpon::cli::cmd_run(opts, std::cerr);
  if (compare->parsed()) return sflpon::cli::cmd_compare(opts, std::cerr);
  return sflpon::cli::cmd_sweep(opts, n_values, std::cerr);
}
