#include <doctest.h>

#include <set>

#include <Eigen/LU>

#include "bandsvd/testgen.hpp"
#include "support.hpp"

using namespace bandsvd;

TEST_CASE("rng streams are pure functions of seed and position") {
  SeededRng a(7);
  SeededRng b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(SeededRng::at(7, 5) == [] {
    SeededRng r(7);
    for (int i = 0; i < 5; ++i) r.next();
    return r.next();
  }());
  CHECK(SeededRng(7).next() != SeededRng(8).next());
  // SplitMix64 reference output for seed 0
  CHECK(SeededRng(0).next() == 0xe220a8397b1dcdafull);

  SeededRng u(9);
  double lo = 1;
  double hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo >= 0);
  CHECK(hi < 1);

  SeededRng g(10);
  double sum = 0;
  double sq = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double x = g.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / count) < 0.01);
  CHECK(std::abs(sq / count - 1) < 0.02);
}

TEST_CASE("spectrum formulas") {
  SeededRng rng(1);
  CHECK(spectrum_values({Spectrum::arithmetic, 4}, rng) == std::vector<double>{1.0, 0.75, 0.5, 0.25});
  const std::vector<double> lg = spectrum_values({Spectrum::logarithmic, 3}, rng);
  REQUIRE(lg.size() == 3);
  CHECK(lg[0] == 1.0);
  CHECK(lg[1] == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(lg[2] == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK(spectrum_values({Spectrum::logarithmic, 1}, rng) == std::vector<double>{1.0});

  const std::vector<double> qc = spectrum_values({Spectrum::quarter_circle, 20000}, rng);
  CHECK(std::is_sorted(qc.rbegin(), qc.rend()));
  CHECK(qc.front() <= 1.0);
  CHECK(qc.back() >= 0.0);
  // E[x] = 4 / (3 pi) under (4/pi) sqrt(1 - x^2)
  double mean = 0;
  for (double x : qc) mean += x;
  mean /= static_cast<double>(qc.size());
  CHECK(std::abs(mean - 4.0 / (3.0 * M_PI)) < 0.01);

  CHECK_THROWS_AS(spectrum_values({Spectrum::arithmetic, 0}, rng), ShapeError);
  for (Spectrum s : {Spectrum::arithmetic, Spectrum::logarithmic, Spectrum::quarter_circle}) {
    CHECK(parse_spectrum(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_spectrum("semi_circle"), ConfigError);
}

TEST_CASE("random orthogonal matrices") {
  const double eps = std::numeric_limits<double>::epsilon();
  SeededRng one(3);
  const DenseMatrix<double> q1 = random_orthogonal(1, one);
  CHECK(std::abs(q1(0, 0)) == 1.0);

  SeededRng rng(4);
  const DenseMatrix<double> q = random_orthogonal(64, rng);
  CHECK((q.eigen().transpose() * q.eigen() - Eigen::MatrixXd::Identity(64, 64)).norm() <=
        16 * 64 * eps);

  SeededRng a(5);
  SeededRng b(5);
  CHECK(test::bitwise_equal(random_orthogonal(32, a), random_orthogonal(32, b)));

  std::set<int> signs;
  for (std::uint64_t s = 0; s < 40; ++s) {
    SeededRng r(1000 + s);
    signs.insert(random_orthogonal(5, r).eigen().determinant() > 0 ? 1 : -1);
  }
  CHECK(signs.size() == 2);
  CHECK_THROWS_AS([] {
    SeededRng r(0);
    random_orthogonal(0, r);
  }(), ShapeError);
}

TEST_CASE("constructed matrices carry their spectrum") {
  for (Spectrum s : {Spectrum::arithmetic, Spectrum::logarithmic, Spectrum::quarter_circle}) {
    for (Index n : {1, 32, 100}) {
      SeededRng rng(500 + n);
      const TestMatrix<double> t = make_test_matrix<double>({s, n}, rng);
      CHECK(static_cast<Index>(t.values.size()) == n);
      CHECK(max_relative_error(oracle_svdvals(t.a), t.values) <= 1e-13);
    }
  }
  SeededRng a(9);
  SeededRng b(9);
  const TestMatrix<half> h = make_test_matrix<half>({Spectrum::arithmetic, 8}, a);
  const TestMatrix<double> d = make_test_matrix<double>({Spectrum::arithmetic, 8}, b);
  CHECK(h.values == d.values);
  for (Index i = 0; i < 64; ++i) CHECK(h.a.data()[i] == static_cast<half>(d.a.data()[i]));
}

TEST_CASE("jacobi oracle examples") {
  DenseMatrix<double> d(3, 3);
  d(0, 0) = 1;
  d(1, 1) = 3;
  d(2, 2) = 2;
  CHECK(oracle_svdvals(d) == std::vector<double>{3, 2, 1});
  DenseMatrix<double> g(2, 2);
  g(0, 0) = 1;
  g(0, 1) = 1;
  g(1, 1) = 1;
  const std::vector<double> v = oracle_svdvals(g);
  CHECK(v[0] == doctest::Approx(1.6180339887).epsilon(1e-10));
  CHECK(v[1] == doctest::Approx(0.6180339887).epsilon(1e-10));
  CHECK_THROWS_AS(oracle_svdvals(DenseMatrix<double>(2, 3)), ShapeError);
  CHECK(oracle_svdvals(DenseMatrix<double>(4, 4)) == std::vector<double>(4, 0.0));
}

TEST_CASE("relative error metric") {
  const std::vector<double> ref{1, 0.5};
  CHECK(max_relative_error(ref, ref) == 0.0);
  const std::vector<double> got{1, 0.5 * (1 + 1e-8)};
  CHECK(max_relative_error(got, ref) == doctest::Approx(4.472e-9).epsilon(1e-3));
  CHECK(max_relative_error(got, ref) == doctest::Approx(0.5e-8 / std::sqrt(1.25)).epsilon(1e-7));
  CHECK_THROWS_AS(max_relative_error(got, std::vector<double>{1}), ShapeError);
  CHECK_THROWS_AS(max_relative_error(got, std::vector<double>{0, 0}), DegenerateInputError);
}
