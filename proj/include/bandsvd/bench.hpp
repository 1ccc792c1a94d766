#ifndef BANDSVD_BENCH_HPP
#define BANDSVD_BENCH_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bandsvd/band_reduce.hpp"
#include "bandsvd/exec.hpp"
#include "bandsvd/kernels.hpp"
#include "bandsvd/precision.hpp"

namespace bandsvd {

// Runs are grouped in batches timed end to end. Warmup batches are thrown
// away, then batches repeat until the measured time reaches min_total; the
// result is the median over batches of the per-run mean.
struct BenchProtocol {
  int batch = 20;
  double min_total = 2.0;  // seconds
  int warmup = 2;
};

struct Timing {
  double median_seconds = 0;
  std::size_t runs = 0;  // measured runs, warmup excluded
};

Timing measure(const std::function<void()>& run, const BenchProtocol& protocol);

struct BenchCase {
  Index n = 256;
  PrecisionKind precision = PrecisionKind::fp64;
  KernelConfig cfg;
  exec::BackendKind backend = exec::BackendKind::parallel;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
};

struct BenchRow {
  BenchCase c;
  Timing timing;
  std::optional<PhaseTimes> breakdown;  // mean per run
};

/// Times the full pipeline on a seeded Gaussian matrix.
BenchRow bench_svdvals(const BenchCase& c, const BenchProtocol& protocol, bool breakdown = false);

void write_bench_header(std::ostream& out, bool breakdown);
void write_bench_row(std::ostream& out, const BenchRow& row, bool breakdown);

struct TuneGrid {
  std::vector<Index> tilesizes{4, 8, 16, 32, 64, 128};
  std::vector<Index> colperblocks;  // empty: every divisor of TS
  std::vector<Index> splitks;       // empty: 1 .. min(TS, 1024/TS)
  std::vector<Index> sizes{256};
  PrecisionKind precision = PrecisionKind::fp64;
};

/// Every admissible (TS, CPB, K) of the grid, in grid order.
std::vector<KernelConfig> admissible_configs(const TuneGrid& grid, bool fused = true);

struct TuneRow {
  BenchRow bench;
  bool argmin = false;
};

struct DeltaRow {
  std::string change;  // e.g. "TILESIZE 32 to 64"
  Index size = 0;
  PrecisionKind precision = PrecisionKind::fp64;
  double percent = 0;  // (t_ref / t_variant - 1) * 100, positive when faster
};

struct TuneResult {
  std::vector<TuneRow> rows;
  std::vector<DeltaRow> deltas;
};

/// The reference point of the delta table.
inline KernelConfig tune_reference() { return KernelConfig{32, 32, 8, true}; }

TuneResult tune(const TuneGrid& grid, const BenchCase& base, const BenchProtocol& protocol);

/// Deltas of every row that differs from the reference in exactly one tunable.
std::vector<DeltaRow> tune_deltas(std::span<const TuneRow> rows);

void write_tune_csv(std::ostream& out, std::span<const TuneRow> rows);
void write_delta_csv(std::ostream& out, std::span<const DeltaRow> deltas);

}  // namespace bandsvd

#endif  // BANDSVD_BENCH_HPP
