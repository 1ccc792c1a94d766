#include "bandsvd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "bandsvd/svdvals.hpp"
#include "bandsvd/testgen.hpp"

namespace bandsvd {
namespace {

std::string num(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

Timing measure(const std::function<void()>& run, const BenchProtocol& protocol) {
  if (protocol.batch < 1 || protocol.warmup < 0 || !(protocol.min_total >= 0)) {
    throw ConfigError("bench protocol needs batch >= 1, warmup >= 0, min_total >= 0");
  }
  using clock = std::chrono::steady_clock;
  auto run_batch = [&] {
    const auto t0 = clock::now();
    for (int i = 0; i < protocol.batch; ++i) run();
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  for (int i = 0; i < protocol.warmup; ++i) run_batch();

  std::vector<double> means;
  double total = 0;
  do {
    const double t = run_batch();
    total += t;
    means.push_back(t / protocol.batch);
  } while (total < protocol.min_total);

  std::sort(means.begin(), means.end());
  const std::size_t m = means.size();
  const double median = m % 2 ? means[m / 2] : 0.5 * (means[m / 2 - 1] + means[m / 2]);
  return {median, m * static_cast<std::size_t>(protocol.batch)};
}

BenchRow bench_svdvals(const BenchCase& c, const BenchProtocol& protocol, bool breakdown) {
  c.cfg.validate();
  auto backend = exec::make_backend(c.backend, c.workers);
  SeededRng rng(c.seed);
  const DenseMatrix<double> g = random_gaussian(c.n, rng);

  PhaseTimes sum;
  std::size_t calls = 0;
  const Timing timing = dispatch_precision(c.precision, [&](auto tag) {
    using S = decltype(tag);
    const DenseMatrix<S> a = g.template cast<S>();
    return measure(
        [&] {
          auto v = svdvals(a, c.cfg, *backend, breakdown ? &sum : nullptr);
          ++calls;
          if (v.empty() && c.n > 0) throw Error("empty result");
        },
        protocol);
  });

  BenchRow row{c, timing, std::nullopt};
  if (breakdown && calls > 0) {
    const double k = static_cast<double>(calls);
    row.breakdown = PhaseTimes{sum.panel / k, sum.update / k, sum.bidiagonal / k, sum.diagonal / k};
  }
  return row;
}

void write_bench_header(std::ostream& out, bool breakdown) {
  out << "size,precision,TS,CPB,K,backend,workers,median_seconds,runs";
  if (breakdown) out << ",panel_seconds,update_seconds,bidiagonal_seconds,diagonal_seconds";
  out << '\n';
}

void write_bench_row(std::ostream& out, const BenchRow& row, bool breakdown) {
  const BenchCase& c = row.c;
  out << c.n << ',' << to_string(c.precision) << ',' << c.cfg.tilesize << ','
      << c.cfg.colperblock << ',' << c.cfg.splitk << ',' << exec::to_string(c.backend) << ','
      << c.workers << ',' << num(row.timing.median_seconds) << ',' << row.timing.runs;
  if (breakdown) {
    const PhaseTimes p = row.breakdown.value_or(PhaseTimes{});
    out << ',' << num(p.panel) << ',' << num(p.update) << ',' << num(p.bidiagonal) << ','
        << num(p.diagonal);
  }
  out << '\n';
}

std::vector<KernelConfig> admissible_configs(const TuneGrid& grid, bool fused) {
  std::vector<KernelConfig> out;
  for (Index ts : grid.tilesizes) {
    std::vector<Index> cpbs = grid.colperblocks;
    if (cpbs.empty()) {
      for (Index d = 1; d <= ts; ++d) {
        if (ts % d == 0) cpbs.push_back(d);
      }
    }
    std::vector<Index> ks = grid.splitks;
    if (ks.empty()) {
      for (Index k = 1; k <= KernelConfig::max_splitk(ts); ++k) ks.push_back(k);
    }
    for (Index cpb : cpbs) {
      for (Index k : ks) {
        KernelConfig cfg{ts, cpb, k, fused};
        try {
          cfg.validate();
        } catch (const ConfigError&) {
          continue;
        }
        out.push_back(cfg);
      }
    }
  }
  return out;
}

std::vector<DeltaRow> tune_deltas(std::span<const TuneRow> rows) {
  const KernelConfig ref = tune_reference();
  std::map<std::pair<Index, PrecisionKind>, double> reference;
  for (const auto& r : rows) {
    const auto& c = r.bench.c;
    if (c.cfg.tilesize == ref.tilesize && c.cfg.colperblock == ref.colperblock &&
        c.cfg.splitk == ref.splitk) {
      reference[{c.n, c.precision}] = r.bench.timing.median_seconds;
    }
  }
  std::vector<DeltaRow> out;
  for (const auto& r : rows) {
    const auto& c = r.bench.c;
    const auto it = reference.find({c.n, c.precision});
    if (it == reference.end()) continue;
    const int changed = (c.cfg.tilesize != ref.tilesize) + (c.cfg.colperblock != ref.colperblock) +
                        (c.cfg.splitk != ref.splitk);
    if (changed != 1) continue;
    std::string change;
    if (c.cfg.tilesize != ref.tilesize) {
      change = "TILESIZE 32 to " + std::to_string(c.cfg.tilesize);
    } else if (c.cfg.colperblock != ref.colperblock) {
      change = "COLPERBLOCK 32 to " + std::to_string(c.cfg.colperblock);
    } else {
      change = "SPLITK 8 to " + std::to_string(c.cfg.splitk);
    }
    out.push_back({change, c.n, c.precision,
                   (it->second / r.bench.timing.median_seconds - 1.0) * 100.0});
  }
  std::stable_sort(out.begin(), out.end(), [](const DeltaRow& a, const DeltaRow& b) {
    return std::tie(a.change, a.size) < std::tie(b.change, b.size);
  });
  return out;
}

TuneResult tune(const TuneGrid& grid, const BenchCase& base, const BenchProtocol& protocol) {
  const std::vector<KernelConfig> configs = admissible_configs(grid, base.cfg.fused);
  if (configs.empty() || grid.sizes.empty()) throw ConfigError("tuning grid has no admissible configuration");
  TuneResult result;
  for (Index n : grid.sizes) {
    const std::size_t first = result.rows.size();
    for (const KernelConfig& cfg : configs) {
      BenchCase c = base;
      c.n = n;
      c.cfg = cfg;
      c.precision = grid.precision;
      result.rows.push_back({bench_svdvals(c, protocol), false});
    }
    auto best = std::min_element(result.rows.begin() + static_cast<std::ptrdiff_t>(first),
                                 result.rows.end(), [](const TuneRow& a, const TuneRow& b) {
                                   return a.bench.timing.median_seconds <
                                          b.bench.timing.median_seconds;
                                 });
    best->argmin = true;
  }
  result.deltas = tune_deltas(result.rows);
  return result;
}

void write_tune_csv(std::ostream& out, std::span<const TuneRow> rows) {
  out << "size,precision,TS,CPB,K,backend,workers,median_seconds,runs,argmin\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    write_bench_row(line, r.bench, false);
    std::string s = line.str();
    s.pop_back();
    out << s << ',' << (r.argmin ? 1 : 0) << '\n';
  }
}

void write_delta_csv(std::ostream& out, std::span<const DeltaRow> deltas) {
  out << "change,size,precision,percent\n";
  for (const auto& d : deltas) {
    out << d.change << ',' << d.size << ',' << to_string(d.precision) << ',' << num(d.percent)
        << '\n';
  }
}

}  // namespace bandsvd
