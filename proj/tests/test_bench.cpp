#include <doctest.h>

#include <sstream>

#include "bandsvd/accuracy.hpp"
#include "bandsvd/bench.hpp"

using namespace bandsvd;

TEST_CASE("measure repeats whole batches and discards warmup") {
  int calls = 0;
  const Timing t = measure([&] { ++calls; }, {5, 0.0, 2});
  CHECK(calls == 15);
  CHECK(t.runs == 5);
  CHECK(t.median_seconds >= 0);

  calls = 0;
  const Timing slow = measure(
      [&] {
        ++calls;
        const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(2);
        while (std::chrono::steady_clock::now() < until) {
        }
      },
      {3, 0.02, 0});
  CHECK(slow.runs % 3 == 0);
  CHECK(slow.runs >= 3);
  CHECK(static_cast<std::size_t>(calls) == slow.runs);
  CHECK(slow.median_seconds >= 0.002);

  CHECK_THROWS_AS(measure([] {}, {0, 0.0, 0}), ConfigError);
  CHECK_THROWS_AS(measure([] {}, {1, -1.0, 0}), ConfigError);
}

TEST_CASE("admissible grid follows the config constraints") {
  TuneGrid grid;
  const std::vector<KernelConfig> all = admissible_configs(grid);
  for (const auto& c : all) {
    CHECK_NOTHROW(c.validate());
    CHECK(c.tilesize % c.colperblock == 0);
    CHECK(c.splitk <= std::min<Index>(c.tilesize, 1024 / c.tilesize));
  }
  // TS 4: 3 divisors x 4 K; TS 128: 8 divisors x 8 K
  CHECK(std::count_if(all.begin(), all.end(), [](const KernelConfig& c) { return c.tilesize == 4; }) == 12);
  CHECK(std::count_if(all.begin(), all.end(), [](const KernelConfig& c) { return c.tilesize == 128; }) == 64);

  grid.tilesizes = {16};
  grid.colperblocks = {32, 16};
  grid.splitks = {32, 2};
  const std::vector<KernelConfig> some = admissible_configs(grid, false);
  REQUIRE(some.size() == 1);
  CHECK(some[0] == KernelConfig{16, 16, 2, false});
}

TEST_CASE("delta rows compare against the reference config") {
  auto row = [](Index ts, Index cpb, Index k, double t) {
    TuneRow r;
    r.bench.c.n = 512;
    r.bench.c.cfg = KernelConfig{ts, cpb, k, true};
    r.bench.timing.median_seconds = t;
    return r;
  };
  const std::vector<TuneRow> rows{row(32, 32, 8, 1.0), row(64, 32, 8, 0.5), row(32, 16, 8, 2.0),
                                  row(32, 32, 4, 1.0), row(64, 16, 8, 0.1)};
  const std::vector<DeltaRow> d = tune_deltas(rows);
  REQUIRE(d.size() == 3);
  CHECK(d[0].change == "COLPERBLOCK 32 to 16");
  CHECK(d[0].percent == doctest::Approx(-50));
  CHECK(d[1].change == "SPLITK 8 to 4");
  CHECK(d[1].percent == doctest::Approx(0));
  CHECK(d[2].change == "TILESIZE 32 to 64");
  CHECK(d[2].percent == doctest::Approx(100));

  std::ostringstream out;
  write_delta_csv(out, d);
  CHECK(out.str() ==
        "change,size,precision,percent\nCOLPERBLOCK 32 to 16,512,fp64,-50\nSPLITK 8 to 4,512,fp64,0\n"
        "TILESIZE 32 to 64,512,fp64,100\n");

  // no reference row, no deltas
  CHECK(tune_deltas(std::vector<TuneRow>{row(64, 32, 8, 1.0)}).empty());
}

TEST_CASE("accuracy cells") {
  exec::ReferenceBackend be;
  KernelConfig cfg{8, 8, 2, true};
  const AccuracyCell c = accuracy_cell(24, PrecisionKind::fp64, 2, 11, cfg, be);
  CHECK(c.ok);
  CHECK(c.matrices == 6);
  CHECK(c.max_error <= 1e-14);
  CHECK(c.max_error == *std::max_element(c.per_spectrum.begin(), c.per_spectrum.end()));
  const AccuracyCell again = accuracy_cell(24, PrecisionKind::fp64, 2, 11, cfg, be);
  CHECK(again.max_error == c.max_error);

  CHECK(accuracy_seed(1, 64, Spectrum::arithmetic, 0) != accuracy_seed(1, 64, Spectrum::arithmetic, 1));
  CHECK(accuracy_seed(1, 64, Spectrum::arithmetic, 0) != accuracy_seed(1, 64, Spectrum::logarithmic, 0));
  CHECK(accuracy_seed(1, 64, Spectrum::arithmetic, 0) != accuracy_seed(1, 128, Spectrum::arithmetic, 0));

  const AccuracyCell bad = accuracy_cell(24, PrecisionKind::fp64, 1, 11, KernelConfig{3, 1, 1, true}, be);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.error.empty());

  std::ostringstream out;
  const AccuracyCell cells[] = {c, bad};
  write_accuracy_csv(out, cells);
  const std::string s = out.str();
  CHECK(s.rfind("size,precision,arithmetic,logarithmic,quarter_circle,max_error,matrices,status\n24,fp64,", 0) == 0);
  CHECK(s.find(",ok\n") != std::string::npos);
  CHECK(s.find("failed") != std::string::npos);
}
