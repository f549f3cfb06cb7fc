// Command-line front end. Talks to the library through the C interface only.
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include <batchlr.h>

int main(int argc, char** argv) {
  CLI::App app{"List-decodable linear regression from batches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", blr_version());

  std::string config;
  std::string out_dir = ".";
  uint64_t seed = 0;
  int trials = 0;
  bool deterministic_filter = false;

  CLI::Option* config_opt =
      app.add_option("--config", config, "Experiment config (JSON)")
          ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (created if missing)");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "Override the config's root seed");
  CLI::Option* trials_opt =
      app.add_option("--trials", trials, "Override the config's trial count")
          ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic-filter", deterministic_filter,
               "Deterministic point removal inside the mean decoder");

  app.add_subcommand("generate",
                     "Sample one dataset with provenance and write it as JSON");
  app.add_subcommand("run", "Run seeded decoding trials on one problem cell");
  app.add_subcommand("sweep",
                     "Run trials over the config's parameter grid, one CSV row "
                     "per trial");
  app.add_subcommand("reduce",
                     "Run trials with singleton batches regrouped into larger "
                     "ones");
  app.add_subcommand("mz-check",
                     "Exhaustive and Monte Carlo moment-inequality checks");
  app.add_subcommand("cert-check",
                     "Randomized soundness checks for the moment certifier");
  app.add_subcommand("prune-check",
                     "Seeded survival and separation checks for list pruning");
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  blr_options opt{};
  opt.config_path = config_opt->count() ? config.c_str() : nullptr;
  opt.out_dir = out_dir.c_str();
  if (seed_opt->count()) opt.seed = &seed;
  if (trials_opt->count()) opt.trials = &trials;
  opt.deterministic_filter = deterministic_filter ? 1 : 0;

  const std::string name = app.get_subcommands()[0]->get_name();
  const int code = blr_cmd(name.c_str(), &opt);
  if (code != 0) std::fprintf(stderr, "error: %s\n", blr_last_error());
  return code;
}
