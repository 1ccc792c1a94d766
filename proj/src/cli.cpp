#include "bandsvd/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "bandsvd/accuracy.hpp"
#include "bandsvd/bench.hpp"
#include "bandsvd/matrix_io.hpp"
#include "bandsvd/svdvals.hpp"

namespace bandsvd {
namespace {

PrecisionKind parse_precision(const std::string& s) {
  if (s == "fp64") return PrecisionKind::fp64;
  if (s == "fp32") return PrecisionKind::fp32;
  if (s == "fp16") return PrecisionKind::fp16;
  throw ConfigError("unknown precision '" + s + "' (expected fp64, fp32 or fp16)");
}

struct Globals {
  std::string precision = "fp64";
  CLI::Option* precision_opt = nullptr;
  KernelConfig cfg;
  std::string backend = "parallel";
  std::size_t workers = exec::default_worker_count();
  std::uint64_t seed = 1;
  std::string output;

  std::unique_ptr<exec::Backend> make_backend() const {
    const exec::BackendKind kind = exec::parse_backend(backend);
    if (kind == exec::BackendKind::parallel) return std::make_unique<exec::ParallelBackend>(workers);
    return std::make_unique<exec::ReferenceBackend>();
  }

  std::size_t reported_workers() const {
    return exec::parse_backend(backend) == exec::BackendKind::parallel ? workers : 1;
  }
};

// Writes to --output when given, else to the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw FormatError("cannot open " + path + " for writing");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

struct BenchFlags {
  int batch = 20;
  double min_time = 2.0;
  int warmup = 2;

  BenchProtocol protocol() const { return {batch, min_time, warmup}; }
};

void add_bench_flags(CLI::App* cmd, BenchFlags& f) {
  cmd->add_option("--batch", f.batch, "Runs per timed batch")->check(CLI::PositiveNumber);
  cmd->add_option("--min-time", f.min_time, "Minimum measured seconds")->check(CLI::NonNegativeNumber);
  cmd->add_option("--warmup", f.warmup, "Discarded warmup batches")->check(CLI::NonNegativeNumber);
}

int cmd_svdvals(const Globals& g, const std::string& input, std::ostream& out) {
  AnyMatrix m = read_matrix(input);
  PrecisionKind kind = precision_of(m);
  if (g.precision_opt->count() > 0) {
    kind = parse_precision(g.precision);
    m = convert(m, kind);
  }
  auto backend = g.make_backend();
  std::vector<double> values = std::visit(
      [&](const auto& a) {
        const auto v = svdvals(a, g.cfg, *backend);
        return std::vector<double>(v.begin(), v.end());
      },
      m);
  Sink sink(g.output, out);
  write_values_csv<double>(values, kind, sink.get());
  return kExitOk;
}

int cmd_accuracy(const Globals& g, const std::vector<Index>& sizes,
                 const std::vector<std::string>& precisions, int count, std::ostream& out) {
  std::vector<PrecisionKind> kinds;
  if (!precisions.empty()) {
    for (const auto& p : precisions) kinds.push_back(parse_precision(p));
  } else {
    kinds.push_back(parse_precision(g.precision));
  }
  auto backend = g.make_backend();
  std::vector<AccuracyCell> cells;
  for (Index n : sizes) {
    for (PrecisionKind k : kinds) cells.push_back(accuracy_cell(n, k, count, g.seed, g.cfg, *backend));
  }
  Sink sink(g.output, out);
  write_accuracy_csv(sink.get(), cells);
  for (const auto& c : cells) {
    if (!c.ok) return kExitNumeric;
  }
  return kExitOk;
}

BenchCase base_case(const Globals& g) {
  BenchCase c;
  c.precision = parse_precision(g.precision);
  c.cfg = g.cfg;
  c.backend = exec::parse_backend(g.backend);
  c.workers = g.reported_workers();
  c.seed = g.seed;
  return c;
}

int cmd_bench(const Globals& g, const std::vector<Index>& sizes, const BenchFlags& flags,
              bool breakdown, std::ostream& out) {
  g.cfg.validate();
  if (exec::parse_backend(g.backend) == exec::BackendKind::parallel && g.workers == 0) {
    throw ConfigError("worker count must be positive");
  }
  Sink sink(g.output, out);
  write_bench_header(sink.get(), breakdown);
  for (Index n : sizes) {
    BenchCase c = base_case(g);
    c.n = n;
    write_bench_row(sink.get(), bench_svdvals(c, flags.protocol(), breakdown), breakdown);
    sink.get().flush();
  }
  return kExitOk;
}

int cmd_tune(const Globals& g, TuneGrid grid, const BenchFlags& flags, const std::string& deltas,
             std::ostream& out) {
  grid.precision = parse_precision(g.precision);
  if (exec::parse_backend(g.backend) == exec::BackendKind::parallel && g.workers == 0) {
    throw ConfigError("worker count must be positive");
  }
  const TuneResult result = tune(grid, base_case(g), flags.protocol());
  {
    Sink sink(g.output, out);
    write_tune_csv(sink.get(), result.rows);
  }
  std::string delta_path = deltas;
  if (delta_path.empty() && !g.output.empty()) delta_path = g.output + ".deltas.csv";
  if (delta_path.empty()) {
    out << '\n';
    write_delta_csv(out, result.deltas);
  } else {
    Sink sink(delta_path, out);
    write_delta_csv(sink.get(), result.deltas);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Singular values of dense square matrices via tiled band reduction", "bandsvd"};
  app.require_subcommand(1);

  Globals g;
  g.precision_opt = app.add_option("--precision", g.precision, "fp64, fp32 or fp16")
                        ->check(CLI::IsMember({"fp64", "fp32", "fp16"}));
  app.add_option("--tilesize", g.cfg.tilesize, "Tile edge TS");
  app.add_option("--colperblock", g.cfg.colperblock, "Columns per update workgroup");
  app.add_option("--splitk", g.cfg.splitk, "Work-items per panel column");
  app.add_option("--backend", g.backend, "reference or parallel")
      ->check(CLI::IsMember({"reference", "parallel"}));
  app.add_option("--workers", g.workers, "Parallel worker threads (default: BANDSVD_WORKERS)");
  app.add_option("--seed", g.seed, "Seed for generated matrices");
  app.add_flag("--fused,!--no-fused", g.cfg.fused, "Fuse the tsqrt/tsmqr chains");
  app.add_option("--output", g.output, "Write results here instead of stdout");

  CLI::App* svd = app.add_subcommand("svdvals", "Singular values of a matrix file, as CSV");
  svd->fallthrough();
  std::string input;
  svd->add_option("input", input, "Binary matrix file")->required();

  CLI::App* acc = app.add_subcommand("accuracy", "Max relative error on constructed matrices");
  acc->fallthrough();
  std::vector<Index> acc_sizes{64, 256};
  std::vector<std::string> acc_precisions;
  int acc_count = 10;
  acc->add_option("--sizes", acc_sizes, "Matrix sizes")->delimiter(',');
  acc->add_option("--precisions", acc_precisions, "Precisions (default: --precision)")
      ->delimiter(',')
      ->check(CLI::IsMember({"fp64", "fp32", "fp16"}));
  acc->add_option("--count", acc_count, "Matrices per spectrum")->check(CLI::PositiveNumber);

  CLI::App* bench = app.add_subcommand("bench", "Time the full pipeline");
  bench->fallthrough();
  std::vector<Index> bench_sizes{256};
  BenchFlags bench_flags;
  bool breakdown = false;
  bench->add_option("--sizes", bench_sizes, "Matrix sizes")->delimiter(',');
  add_bench_flags(bench, bench_flags);
  bench->add_flag("--breakdown", breakdown, "Also report per-phase times");

  CLI::App* tn = app.add_subcommand("tune", "Benchmark every admissible configuration");
  tn->fallthrough();
  TuneGrid grid;
  BenchFlags tune_flags;
  std::string deltas;
  tn->add_option("--sizes", grid.sizes, "Matrix sizes")->delimiter(',');
  tn->add_option("--tilesizes", grid.tilesizes, "TS values")->delimiter(',');
  tn->add_option("--colperblocks", grid.colperblocks, "CPB values (default: divisors of TS)")
      ->delimiter(',');
  tn->add_option("--splitks", grid.splitks, "K values (default: all admissible)")->delimiter(',');
  tn->add_option("--deltas", deltas, "Delta table CSV (default: <output>.deltas.csv)");
  add_bench_flags(tn, tune_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*svd) return cmd_svdvals(g, input, out);
    if (*acc) return cmd_accuracy(g, acc_sizes, acc_precisions, acc_count, out);
    if (*bench) return cmd_bench(g, bench_sizes, bench_flags, breakdown, out);
    if (*tn) return cmd_tune(g, grid, tune_flags, deltas, out);
  } catch (const ConvergenceError& e) {
    err << "bandsvd: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "bandsvd: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "bandsvd: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace bandsvd
