#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "bandsvd/cli.hpp"
#include "bandsvd/matrix_io.hpp"
#include "bandsvd/svdvals.hpp"
#include "support.hpp"

using namespace bandsvd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "bandsvd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("bandsvd_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("svdvals of a diagonal file") {
  TempDir dir;
  DenseMatrix<double> d(3, 3);
  d(0, 0) = 3;
  d(1, 1) = 1;
  d(2, 2) = 2;
  write_matrix(d, fs::path(dir.file("diag.bin")));
  const Run r = run({"svdvals", dir.file("diag.bin")});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "3\n2\n1\n");
  CHECK(r.err.empty());

  const Run f = run({"--precision", "fp32", "svdvals", dir.file("diag.bin")});
  CHECK(f.code == kExitOk);
  CHECK(f.out == "3\n2\n1\n");
}

TEST_CASE("svdvals reports shape and format problems with exit 2") {
  TempDir dir;
  write_matrix(DenseMatrix<double>(3, 5), fs::path(dir.file("wide.bin")));
  const Run r = run({"svdvals", dir.file("wide.bin")});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("3x5") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  std::ofstream(dir.file("junk.bin")) << "not a matrix";
  const Run j = run({"svdvals", dir.file("junk.bin")});
  CHECK(j.code == kExitUsage);
  CHECK(j.err.find("magic") != std::string::npos);

  CHECK(run({"svdvals", dir.file("missing.bin")}).code == kExitUsage);
  CHECK(run({"svdvals"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
}

TEST_CASE("configuration errors exit 2") {
  TempDir dir;
  write_matrix(test::gaussian(8, 8, 600), fs::path(dir.file("a.bin")));
  CHECK(run({"--tilesize", "3", "svdvals", dir.file("a.bin")}).code == kExitUsage);
  CHECK(run({"--tilesize", "32", "--colperblock", "5", "svdvals", dir.file("a.bin")}).code ==
        kExitUsage);
  CHECK(run({"--workers", "0", "svdvals", dir.file("a.bin")}).code == kExitUsage);
  CHECK(run({"--backend", "gpu", "svdvals", dir.file("a.bin")}).code == kExitUsage);
  CHECK(run({"--precision", "fp8", "svdvals", dir.file("a.bin")}).code == kExitUsage);
  CHECK(run({"--workers", "0", "bench", "--sizes", "8"}).code == kExitUsage);
  CHECK(run({"tune", "--sizes", "8", "--tilesizes", "3"}).code == kExitUsage);
}

TEST_CASE("reference and parallel backends write identical CSV") {
  TempDir dir;
  write_matrix(test::gaussian(70, 70, 610), fs::path(dir.file("a.bin")));
  for (const char* prec : {"fp64", "fp32", "fp16"}) {
    const Run ref = run({"--precision", prec, "--tilesize", "16", "--colperblock", "8",
                         "--backend", "reference", "svdvals", dir.file("a.bin")});
    const Run par = run({"--precision", prec, "--tilesize", "16", "--colperblock", "8",
                         "--backend", "parallel", "--workers", "3", "svdvals", dir.file("a.bin")});
    CHECK(ref.code == kExitOk);
    CHECK(par.code == kExitOk);
    CHECK(ref.out == par.out);
    CHECK(lines(ref.out).size() == 70);
  }
}

TEST_CASE("svdvals CSV round-trips and honors --output") {
  TempDir dir;
  const DenseMatrix<double> a = test::gaussian(20, 20, 620);
  write_matrix(a, fs::path(dir.file("a.bin")));
  const Run r = run({"--output", dir.file("v.csv"), "svdvals", dir.file("a.bin")});
  CHECK(r.code == kExitOk);
  CHECK(r.out.empty());
  std::ifstream in(dir.file("v.csv"));
  const std::vector<double> parsed = read_values_csv(in);
  exec::ReferenceBackend be;
  CHECK(test::bitwise_equal(parsed, svdvals(a, KernelConfig{}, be)));

  // fp16 file keeps its precision unless --precision overrides it
  write_matrix(a.cast<half>(), fs::path(dir.file("h.bin")));
  const Run h = run({"svdvals", dir.file("h.bin")});
  std::istringstream hin(h.out);
  const std::vector<double> hv = read_values_csv(hin);
  const std::vector<float> expect = svdvals(a.cast<half>(), KernelConfig{}, be);
  CHECK(test::bitwise_equal(std::vector<float>(hv.begin(), hv.end()), expect));
}

TEST_CASE("accuracy table") {
  const Run r = run({"accuracy", "--sizes", "16,32", "--precisions", "fp64,fp32", "--count", "2",
                     "--seed", "5"});
  CHECK(r.code == kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "size,precision,arithmetic,logarithmic,quarter_circle,max_error,matrices,status");
  CHECK(ls[1].rfind("16,fp64,", 0) == 0);
  CHECK(ls[2].rfind("16,fp32,", 0) == 0);
  CHECK(ls[4].find(",6,ok") != std::string::npos);
  // seeded output is reproducible
  CHECK(run({"accuracy", "--sizes", "16,32", "--precisions", "fp64,fp32", "--count", "2", "--seed",
             "5", "--backend", "reference"})
            .out == r.out);
}

TEST_CASE("bench rows") {
  const Run r = run({"bench", "--sizes", "16,32", "--batch", "1", "--min-time", "0", "--warmup",
                     "0", "--breakdown"});
  CHECK(r.code == kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] ==
        "size,precision,TS,CPB,K,backend,workers,median_seconds,runs,panel_seconds,"
        "update_seconds,bidiagonal_seconds,diagonal_seconds");
  CHECK(ls[1].rfind("16,fp64,32,32,8,parallel,", 0) == 0);
  std::istringstream row(ls[2]);
  std::vector<std::string> cells;
  for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 13);
  CHECK(std::stod(cells[7]) > 0);
  CHECK(cells[8] == "1");
}

TEST_CASE("tune grid, argmin and deltas") {
  TempDir dir;
  const Run single = run({"tune", "--sizes", "32", "--tilesizes", "16", "--colperblocks", "16",
                          "--splitks", "4", "--batch", "1", "--min-time", "0", "--warmup", "0",
                          "--output", dir.file("t.csv")});
  CHECK(single.code == kExitOk);
  const auto rows = lines(slurp(dir.file("t.csv")));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "size,precision,TS,CPB,K,backend,workers,median_seconds,runs,argmin");
  CHECK(rows[1].rfind("32,fp64,16,16,4,", 0) == 0);
  CHECK(rows[1].back() == '1');
  CHECK(lines(slurp(dir.file("t.csv.deltas.csv"))) ==
        std::vector<std::string>{"change,size,precision,percent"});

  const Run grid = run({"tune", "--sizes", "64", "--tilesizes", "16,32,64", "--colperblocks",
                        "16,32", "--splitks", "4,8", "--batch", "1", "--min-time", "0",
                        "--warmup", "0"});
  CHECK(grid.code == kExitOk);
  const auto out = lines(grid.out);
  const auto blank = std::find(out.begin(), out.end(), std::string());
  REQUIRE(blank != out.end());
  const std::vector<std::string> table(out.begin() + 1, blank);
  const std::vector<std::string> deltas(blank + 1, out.end());
  // TS 16: CPB 16 (K 4, 8); TS 32: CPB 16, 32 x K 4, 8; TS 64: CPB 16, 32 x K 4, 8
  CHECK(table.size() == 10);
  CHECK(std::count_if(table.begin(), table.end(), [](const std::string& s) { return s.back() == '1'; }) == 1);
  // TS 16 has no CPB 32 variant, so only three single-parameter changes exist
  REQUIRE(deltas.size() == 4);
  CHECK(deltas[0] == "change,size,precision,percent");
  CHECK(deltas[1].rfind("COLPERBLOCK 32 to 16,64,fp64,", 0) == 0);
  CHECK(deltas[2].rfind("SPLITK 8 to 4,64,fp64,", 0) == 0);
  CHECK(deltas[3].rfind("TILESIZE 32 to 64,64,fp64,", 0) == 0);
}

TEST_CASE("help exits cleanly") {
  const Run r = run({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("svdvals") != std::string::npos);
  CHECK(r.out.find("tune") != std::string::npos);
}
