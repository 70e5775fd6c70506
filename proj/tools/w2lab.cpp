// w2lab: run the W2 central-limit checks and write verdicts, tables and plot data.

#include <iostream>

#include "CLI11.hpp"
#include "w2lab/errors.hpp"
#include "w2lab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"W2 central limit theorem checks and experiments"};
  app.require_subcommand(1);
  w2lab::RunOptions opts;
  std::string config;

  for (const char* name : {"check", "rate", "lower", "ci", "all"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the '") + name + "' suite");
    sub->add_option("--config", config, "INI config file");
    sub->add_option("--seed", opts.seed, "root seed")->capture_default_str();
    sub->add_option("--workers", opts.workers, "worker threads")->capture_default_str();
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--only", opts.only, "restrict to these checker ids")->delimiter(',');
    sub->add_flag("--verbose,-v", opts.verbose, "progress on stderr");
  }
  app.add_subcommand("list", "list registered checkers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->get_name() == "list") {
    std::cout << w2lab::list_checks();
    return 0;
  }
  opts.subcommand = chosen->get_name();
  if (!config.empty()) opts.config = config;
  return w2lab::run(opts, std::cout, std::cerr);
}
