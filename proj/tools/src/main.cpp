#include <iostream>

#include "CLI11.hpp"
#include "pairgrpo/version.hpp"
#include "pairgrpo_cli/commands.hpp"
#include "pairgrpo_cli/suites.hpp"

namespace cli = pairgrpo::cli;

namespace {

void add_common(CLI::App* cmd, cli::CommandOptions& o) {
  cmd->add_option("--config", o.config_path, "Flat 'section.key = value' config file");
  cmd->add_option("--seed", o.seed, "Training seed (train.seed)");
  cmd->add_option("--epochs", o.epochs, "Epochs per run (train.epochs)");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Worker threads for independent runs (run.jobs)");
  cmd->add_flag("--fixed-delta", o.fixed_delta, "Hard-Pair: disable the step-size decay");
  cmd->add_flag("--literal-clip", o.literal_clip, "Clip the product ratio*advantage");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pair-GRPO desk-scale trainer and property checker"};
  app.set_version_flag("--version", pairgrpo::kVersion);
  app.require_subcommand(1);

  cli::CommandOptions o;
  std::string method;
  std::string manifest;

  auto* verify = app.add_subcommand("verify", "Run property suites");
  add_common(verify, o);
  std::string suite_help = "'all' (default set), 'everything', or a comma list of:";
  for (const auto& name : cli::known_suites()) suite_help += " " + name;
  verify->add_option("--suite", o.suite, suite_help)->capture_default_str();

  auto* train = app.add_subcommand("train", "Train one method and write epochs.csv");
  add_common(train, o);
  train->add_option("--method", method, "grpo | soft_pair | hard_pair");

  auto* compare = app.add_subcommand("compare", "Train all three methods over several seeds");
  add_common(compare, o);

  auto* ablate = app.add_subcommand("ablate", "Hard-Pair step-size ablation");
  add_common(ablate, o);

  auto* rerun = app.add_subcommand("rerun", "Re-execute the command recorded in a manifest");
  rerun->add_option("manifest", manifest, "Path to manifest.txt")->required();
  rerun->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  rerun->add_option("--jobs", o.jobs, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }
  if (!method.empty()) o.method = method;

  return cli::guarded(
      [&]() -> int {
        if (rerun->parsed()) {
          return cli::run_from_manifest(manifest, o.out_dir, o.jobs, std::cout, std::cerr);
        }
        const pairgrpo::RunConfig config = cli::resolve_config(o);
        if (verify->parsed()) return cli::run_verify(config, o.suite, o.out_dir, std::cout, std::cerr);
        if (train->parsed()) return cli::run_train(config, o.out_dir, std::cout, std::cerr);
        if (compare->parsed()) return cli::run_compare(config, o.out_dir, std::cout, std::cerr);
        return cli::run_ablate(config, o.out_dir, std::cout, std::cerr);
      },
      std::cerr);
}
