// alto: convert, inspect, benchmark and decompose sparse tensors in the
// ALTO linearized format. Every subcommand prints one JSON document on
// stdout; errors go to stderr as {"error": {...}}.

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using namespace alto::cli;

void add_dims(CLI::App* cmd, std::optional<std::vector<std::uint64_t>>& dims) {
  cmd->add_option("--dims", dims,
                  "Dimensions for .tns input, comma separated (default: max index per mode)")
      ->delimiter(',');
}

void add_workers(CLI::App* cmd, std::optional<unsigned>& workers) {
  cmd->add_option("--workers", workers,
                  std::string("Worker threads (default: $") + kWorkersEnv +
                      ", else hardware threads)")
      ->check(CLI::PositiveNumber);
}

const std::vector<std::string> kStrategies = {"auto", "atomic", "buffered"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ALTO sparse tensor toolkit"};
  app.require_subcommand(1);

  std::function<CommandResult()> run;

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Convert .tns text to a binary .alto container");
  c->add_option("input", convert.input, "Input .tns file")->required();
  c->add_option("output", convert.output, "Output .alto file")->required();
  add_dims(c, convert.dims);
  c->callback([&] { run = [&] { return cmd_convert(convert); }; });

  StatsArgs stats;
  auto* s = app.add_subcommand("stats", "Layout, storage and fiber-reuse statistics");
  s->add_option("input", stats.input, "Input .tns or .alto file")->required();
  add_dims(s, stats.dims);
  s->add_option("--word-bits", stats.word_bits, "Addressable word size for storage ratios")
      ->check(CLI::IsMember({8u, 16u, 32u, 64u}));
  s->callback([&] { run = [&] { return cmd_stats(stats); }; });

  MttkrpArgs mttkrp;
  auto* m = app.add_subcommand("mttkrp", "Benchmark the parallel MTTKRP kernel");
  m->add_option("input", mttkrp.input, "Input .tns or .alto file")->required();
  add_dims(m, mttkrp.dims);
  m->add_option("--mode", mttkrp.mode, "Target mode (one-based)");
  m->add_option("--rank", mttkrp.rank, "Decomposition rank")->check(CLI::PositiveNumber);
  m->add_option("--iters", mttkrp.iters, "Timed iterations")->check(CLI::PositiveNumber);
  m->add_option("--warmup", mttkrp.warmup, "Untimed warmup iterations");
  add_workers(m, mttkrp.workers);
  m->add_option("--partitions", mttkrp.partitions, "Line segments (default: one per worker)");
  m->add_option("--strategy", mttkrp.strategy, "Conflict resolution")
      ->check(CLI::IsMember(kStrategies));
  m->add_option("--seed", mttkrp.seed, "Factor matrix seed");
  m->add_flag("--check", mttkrp.check, "Verify the result against the COO oracle");
  m->callback([&] { run = [&] { return cmd_mttkrp(mttkrp); }; });

  CpdArgs cpd;
  auto* d = app.add_subcommand("cpd", "CP decomposition by alternating least squares");
  d->add_option("input", cpd.input, "Input .tns or .alto file")->required();
  add_dims(d, cpd.dims);
  d->add_option("--rank", cpd.rank, "Decomposition rank")->check(CLI::PositiveNumber);
  d->add_option("--max-iters", cpd.max_iters, "Iteration limit");
  d->add_option("--tol", cpd.tol, "Stop when the fit changes by less than this");
  d->add_option("--seed", cpd.seed, "Initialization seed");
  d->add_option("--out-dir", cpd.out_dir, "Write factor_<n>.csv and lambda.csv here");
  add_workers(d, cpd.workers);
  d->add_option("--partitions", cpd.partitions, "Line segments (default: one per worker)");
  d->add_option("--backend", cpd.backend, "MTTKRP implementation")
      ->check(CLI::IsMember({"oracle", "seq", "parallel"}));
  d->add_option("--strategy", cpd.strategy, "Conflict resolution")
      ->check(CLI::IsMember(kStrategies));
  d->callback([&] { run = [&] { return cmd_cpd(cpd); }; });

  CheckArgs check;
  auto* k = app.add_subcommand("check", "Compare parallel MTTKRP against the COO oracle");
  k->add_option("input", check.input, "Input .tns or .alto file")->required();
  add_dims(k, check.dims);
  k->add_option("--mode", check.mode, "Target mode (one-based, default: all)");
  k->add_option("--rank", check.rank, "Decomposition rank")->check(CLI::PositiveNumber);
  k->add_option("--seed", check.seed, "Factor matrix seed");
  add_workers(k, check.workers);
  k->add_option("--partitions", check.partitions, "Line segments (default: one per worker)");
  k->add_option("--strategy", check.strategy, "Conflict resolution")
      ->check(CLI::IsMember(kStrategies));
  k->callback([&] { run = [&] { return cmd_check(check); }; });

  GenerateArgs generate;
  auto* g = app.add_subcommand("generate", "Write a uniformly random .tns tensor");
  g->add_option("output", generate.output, "Output .tns file")->required();
  g->add_option("--dims", generate.dims, "Dimensions, comma separated")
      ->required()
      ->delimiter(',');
  g->add_option("--nnz", generate.nnz, "Nonzeros to draw before coalescing")->required();
  g->add_option("--seed", generate.seed, "Random seed");
  g->callback([&] { run = [&] { return cmd_generate(generate); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kSuccess : kUsageError;
  }

  CommandResult result;
  try {
    result = run();
  } catch (const std::exception& e) {
    result = error_result(e);
    std::cerr << result.report.dump() << '\n';
    return result.exit_code;
  }
  std::cout << result.report.dump(2) << '\n';
  return result.exit_code;
}
