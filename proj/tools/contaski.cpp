#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "contaski/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = contaski::cli;
  CLI::App app{"contaski: similarity clustering and quorum task allocation simulator"};
  app.require_subcommand(1);

  cli::RunOptions run_opt;
  std::uint64_t seed = 0;
  std::string run_out;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("--config", run_opt.config, "scenario JSON")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", run_out, "output directory (default $CONTASKI_OUT or ./contaski-out)");

  cli::ExperimentOptions exp_opt;
  std::string exp_out;
  auto* exp = app.add_subcommand("experiment", "run a sweep plan with replications");
  exp->add_option("--plan", exp_opt.plan, "plan JSON")->required();
  exp->add_option("--jobs", exp_opt.jobs, "parallel replications")->check(CLI::PositiveNumber);
  exp->add_option("--out", exp_out, "output directory (default $CONTASKI_OUT or ./contaski-out)");

  cli::TraceOptions tr_opt;
  std::string kind;
  std::uint32_t node = 0;
  double from = 0, to = 0;
  auto* tr = app.add_subcommand("trace", "filter or audit a trace.jsonl file");
  tr->add_option("path", tr_opt.path, "trace file")->required();
  auto* kind_opt = tr->add_option("--kind", kind, "event kind");
  auto* node_opt = tr->add_option("--node", node, "node id");
  auto* from_opt = tr->add_option("--from", from, "start time [s]");
  auto* to_opt = tr->add_option("--to", to, "end time [s]");
  tr->add_flag("--audit", tr_opt.audit, "replay protocol invariants and report violations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kInvalidInput;
  }

  if (*run) {
    if (*seed_opt) run_opt.seed = seed;
    if (!run_out.empty()) run_opt.out = run_out;
    return cli::cmd_run(run_opt, std::cout, std::cerr);
  }
  if (*exp) {
    if (!exp_out.empty()) exp_opt.out = exp_out;
    return cli::cmd_experiment(exp_opt, std::cout, std::cerr);
  }
  if (*kind_opt) tr_opt.kind = kind;
  if (*node_opt) tr_opt.node = node;
  if (*from_opt) tr_opt.from_s = from;
  if (*to_opt) tr_opt.to_s = to;
  return cli::cmd_trace(tr_opt, std::cout, std::cerr);
}
