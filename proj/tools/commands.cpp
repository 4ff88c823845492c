#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "alto/coo_tensor.hpp"
#include "alto/cpd.hpp"
#include "alto/layout.hpp"
#include "alto/mttkrp.hpp"

namespace alto::cli {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<Strategy> parse_strategy(const std::string& s) {
  if (s == "auto") return std::nullopt;
  if (s == "atomic") return Strategy::Atomic;
  if (s == "buffered") return Strategy::Buffered;
  throw UsageError("unknown strategy '" + s + "' (expected auto, atomic or buffered)");
}

MttkrpBackend parse_backend(const std::string& s) {
  if (s == "oracle") return MttkrpBackend::Oracle;
  if (s == "seq") return MttkrpBackend::Sequential;
  if (s == "parallel") return MttkrpBackend::Parallel;
  throw UsageError("unknown backend '" + s + "' (expected oracle, seq or parallel)");
}

std::size_t zero_based_mode(std::size_t mode, std::size_t order) {
  if (mode < 1 || mode > order) {
    throw UsageError("mode " + std::to_string(mode) + " out of range [1, " +
                     std::to_string(order) + "]");
  }
  return mode - 1;
}

std::vector<FactorMatrix> seeded_factors(const AltoLayout& layout, std::size_t rank,
                                         std::uint64_t seed) {
  if (rank < 1) throw UsageError("rank must be at least 1");
  std::vector<FactorMatrix> factors;
  for (std::size_t n = 0; n < layout.order(); ++n) {
    factors.push_back(random_matrix(layout.dims[n], rank, seed + n));
  }
  return factors;
}

json tensor_json(const AltoLayout& layout, std::size_t nnz) {
  return {{"dims", layout.dims}, {"nnz", nnz}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

unsigned resolve_workers(std::optional<unsigned> flag) {
  if (flag) {
    if (*flag < 1) throw UsageError("--workers must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
      throw UsageError(std::string(kWorkersEnv) + " must be a positive integer");
    }
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

AnyAltoTensor load_tensor(const std::string& path,
                          const std::optional<std::vector<std::uint64_t>>& dims) {
  std::string bytes = read_file(path);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "ALTO") == 0) {
    return deserialize({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  }
  return build_alto(parse_tns(bytes, dims));
}

CommandResult cmd_convert(const ConvertArgs& args) {
  std::string text = read_file(args.input);
  CooTensor coo = parse_tns(text, args.dims);

  auto start = Clock::now();
  AnyAltoTensor a = build_alto(coo);
  const double generation = seconds_since(start);

  std::ofstream out(args.output, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + args.output + "' for writing");
  write_alto(out, a);

  const auto& layout = layout_of(a);
  json report = {
      {"input", args.input},
      {"output", args.output},
      {"tensor", tensor_json(layout, nnz_of(a))},
      {"width", layout.width},
      {"total_bits", layout.total_bits},
      {"generation_seconds", generation},
  };
  return {report, kSuccess};
}

json stats_report(std::span<const std::uint64_t> dims, std::uint64_t nnz,
                  unsigned word_bits) {
  const AltoLayout layout = build_masks(dims);
  const ReuseReport reuse = fiber_reuse(dims, nnz);
  const StorageStats storage = storage_stats(dims, nnz, word_bits);

  long double volume = 1.0L;
  for (auto d : dims) volume *= static_cast<long double>(d);

  json modes = json::array();
  for (std::size_t n = 0; n < dims.size(); ++n) {
    modes.push_back({{"mode", n + 1},
                     {"length", dims[n]},
                     {"bits", layout.bits[n]},
                     {"mask", to_hex(layout.masks[n])},
                     {"reuse", reuse.reuse[n]},
                     {"reuse_class", to_string(reuse.classes[n])}});
  }
  return {
      {"dims", std::vector<std::uint64_t>(dims.begin(), dims.end())},
      {"nnz", nnz},
      {"density", static_cast<double>(static_cast<long double>(nnz) / volume)},
      {"modes", modes},
      {"reuse_class", to_string(reuse.overall)},
      {"total_bits", layout.total_bits},
      {"width", layout.width},
      {"storage",
       {{"word_bits", storage.word_bits},
        {"coo_bits", storage.coo_bits},
        {"alto_bits", storage.alto_bits},
        {"alto_packed_bits", storage.alto_packed_bits},
        {"alto_stored_bits", storage.alto_stored_bits},
        {"sfc_bits", storage.sfc_bits},
        {"coo_over_alto", storage.coo_over_alto}}},
  };
}

CommandResult cmd_stats(const StatsArgs& args) {
  AnyAltoTensor a = load_tensor(args.input, args.dims);
  const auto& layout = layout_of(a);
  return {stats_report(layout.dims, nnz_of(a), args.word_bits), kSuccess};
}

CommandResult cmd_mttkrp(const AnyAltoTensor& any, const MttkrpArgs& args) {
  const auto& layout = layout_of(any);
  const std::size_t mode = zero_based_mode(args.mode, layout.order());
  const auto strategy = parse_strategy(args.strategy);
  const unsigned workers = resolve_workers(args.workers);
  if (args.iters < 1) throw UsageError("--iters must be at least 1");

  return std::visit(
      [&](const auto& a) -> CommandResult {
        using Index = typename std::decay_t<decltype(a.indices)>::value_type;
        const auto factors = seeded_factors(layout, args.rank, args.seed);
        MttkrpEngine<Index> engine(a, workers, args.partitions, strategy);

        for (std::size_t w = 0; w < args.warmup; ++w) (void)engine(factors, mode);
        std::vector<double> times;
        FactorMatrix result;
        for (std::size_t it = 0; it < args.iters; ++it) {
          auto start = Clock::now();
          result = engine(factors, mode);
          times.push_back(seconds_since(start));
        }
        const double mean = std::accumulate(times.begin(), times.end(), 0.0) /
                            static_cast<double>(times.size());
        const double fastest = *std::min_element(times.begin(), times.end());

        const bool parallel = a.nnz() > 0;
        json report = {
            {"tensor", tensor_json(layout, a.nnz())},
            {"mode", args.mode},
            {"rank", args.rank},
            {"strategy", parallel ? to_string(engine.plan(mode).strategy) : "Sequential"},
            {"workers", workers},
            {"partitions", engine.partitions().count()},
            {"warmup", args.warmup},
            {"iterations", args.iters},
            {"times_s", times},
            {"mean_s", mean},
            {"min_s", fastest},
            {"throughput", mean > 0.0 ? static_cast<double>(a.nnz() * args.rank) / mean
                                      : 0.0},
        };
        if (parallel) report["flagged"] = engine.tensor().flags[mode].has_value();

        int code = kSuccess;
        if (args.check) {
          const auto reference = mttkrp_oracle(to_coo(a), factors, mode);
          const double err = relative_difference(result, reference);
          report["check"] = {{"max_rel_error", err},
                             {"tolerance", kCheckTolerance},
                             {"passed", err <= kCheckTolerance}};
          if (!(err <= kCheckTolerance)) code = kVerificationFailed;
        }
        return {report, code};
      },
      any);
}

CommandResult cmd_mttkrp(const MttkrpArgs& args) {
  return cmd_mttkrp(load_tensor(args.input, args.dims), args);
}

CommandResult cmd_cpd(const CpdArgs& args) {
  AnyAltoTensor a = load_tensor(args.input, args.dims);
  const auto& layout = layout_of(a);
  if (args.rank < 1) throw UsageError("--rank must be at least 1");

  CpdOptions options;
  options.rank = args.rank;
  options.max_iters = args.max_iters;
  options.tol = args.tol;
  options.seed = args.seed;
  options.backend = parse_backend(args.backend);
  options.workers = resolve_workers(args.workers);
  options.partitions = args.partitions;
  options.strategy = parse_strategy(args.strategy);

  auto start = Clock::now();
  CpModel model = cpd_als(a, options);
  const double elapsed = seconds_since(start);

  json report = {
      {"tensor", tensor_json(layout, nnz_of(a))},
      {"rank", args.rank},
      {"backend", to_string(options.backend)},
      {"workers", options.workers},
      {"iterations", model.iterations},
      {"fit_history", model.fit_history},
      {"final_fit", model.fit_history.back()},
      {"lambda", model.lambda},
      {"seconds", elapsed},
  };

  if (args.out_dir) {
    std::filesystem::create_directories(*args.out_dir);
    json files = json::array();
    for (std::size_t n = 0; n < model.factors.size(); ++n) {
      auto path = std::filesystem::path(*args.out_dir) /
                  ("factor_" + std::to_string(n + 1) + ".csv");
      std::ofstream out(path);
      if (!out) throw FormatError("cannot write '" + path.string() + "'");
      write_csv(out, model.factors[n]);
      files.push_back(path.string());
    }
    auto path = std::filesystem::path(*args.out_dir) / "lambda.csv";
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
    Matrix lambda(1, model.rank());
    std::copy(model.lambda.begin(), model.lambda.end(), lambda.data().begin());
    write_csv(out, lambda);
    files.push_back(path.string());
    report["files"] = files;
  }
  return {report, kSuccess};
}

CommandResult cmd_check(const CheckArgs& args) {
  AnyAltoTensor any = load_tensor(args.input, args.dims);
  const auto& layout = layout_of(any);
  std::vector<std::size_t> modes;
  if (args.mode) {
    modes.push_back(zero_based_mode(*args.mode, layout.order()));
  } else {
    modes.resize(layout.order());
    std::iota(modes.begin(), modes.end(), std::size_t{0});
  }
  const auto strategy = parse_strategy(args.strategy);
  const unsigned workers = resolve_workers(args.workers);

  return std::visit(
      [&](const auto& a) -> CommandResult {
        using Index = typename std::decay_t<decltype(a.indices)>::value_type;
        const auto factors = seeded_factors(layout, args.rank, args.seed);
        const CooTensor coo = to_coo(a);
        MttkrpEngine<Index> engine(a, workers, args.partitions, strategy);

        double worst = 0.0;
        json per_mode = json::array();
        for (auto mode : modes) {
          const double err =
              relative_difference(engine(factors, mode), mttkrp_oracle(coo, factors, mode));
          worst = std::max(worst, err);
          json entry = {{"mode", mode + 1}, {"rel_error", err}};
          if (a.nnz() > 0) entry["strategy"] = to_string(engine.plan(mode).strategy);
          per_mode.push_back(entry);
        }
        const bool passed = worst <= kCheckTolerance;
        json report = {
            {"tensor", tensor_json(layout, a.nnz())},
            {"rank", args.rank},
            {"workers", workers},
            {"modes", per_mode},
            {"max_rel_error", worst},
            {"tolerance", kCheckTolerance},
            {"passed", passed},
        };
        return {report, passed ? kSuccess : kVerificationFailed};
      },
      any);
}

CommandResult cmd_generate(const GenerateArgs& args) {
  CooTensor t = random_tensor(args.dims, args.nnz, args.seed);
  std::ofstream out(args.output);
  if (!out) throw FormatError("cannot open '" + args.output + "' for writing");
  write_tns(out, t);
  if (!out) throw FormatError("write failure on '" + args.output + "'");
  return {{{"output", args.output}, {"dims", t.dims}, {"nnz", t.nnz()}, {"seed", args.seed}},
          kSuccess};
}

CommandResult error_result(const std::exception& e) {
  std::string kind = "internal";
  int code = kIoError;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ShapeError*>(&e)) {
    kind = "usage";
    code = kUsageError;
  } else if (dynamic_cast<const ParseError*>(&e)) {
    kind = "parse";
  } else if (dynamic_cast<const FormatError*>(&e)) {
    kind = "format";
  } else if (dynamic_cast<const WidthError*>(&e)) {
    kind = "width";
  } else if (dynamic_cast<const SolveError*>(&e)) {
    kind = "solve";
    code = kVerificationFailed;
  } else if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) {
    kind = "io";
  }
  return {{{"error", {{"kind", kind}, {"message", e.what()}}}}, code};
}

}  // namespace alto::cli
