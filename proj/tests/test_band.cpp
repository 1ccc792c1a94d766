#include <doctest.h>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "bandsvd/band_reduce.hpp"
#include "support.hpp"

using namespace bandsvd;

namespace {

KernelConfig config(Index ts, bool fused = true, Index k = 2) {
  KernelConfig c;
  c.tilesize = ts;
  c.colperblock = std::max<Index>(1, ts / 2);
  c.splitk = std::min(k, KernelConfig::max_splitk(ts));
  c.fused = fused;
  return c;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

}  // namespace

TEST_CASE("single tile sweep is a plain geqrt") {
  exec::ReferenceBackend be;
  const DenseMatrix<double> a0 = test::gaussian(8, 8, 200);
  DenseMatrix<double> a = a0;
  TauStore<double> tau(8, 1);
  getsmqrt<double>(view(a), tau, 0, Side::rq, config(8), be);
  CHECK(be.stats().launches == 1);

  DenseMatrix<double> b = a0;
  std::vector<double> t(8);
  exec::ReferenceBackend be2;
  geqrt<double>(view(b), t, config(8), be2);
  CHECK(test::bitwise_equal(a, b));

  // LQ on a single tile has no diagonal tile to factor
  DenseMatrix<double> c = a0;
  getsmqrt<double>(view(c).transpose(), tau, 0, Side::lq, config(8), be);
  CHECK(test::bitwise_equal(c, a0));
}

TEST_CASE("first RQ sweep matches a dense QR of the leading columns") {
  const double eps = std::numeric_limits<double>::epsilon();
  const Index ts = 8;
  const Index n = 3 * ts;
  const DenseMatrix<double> a0 = test::gaussian(n, n, 210);
  DenseMatrix<double> a = a0;
  TauStore<double> tau(ts, 3);
  exec::ReferenceBackend be;
  getsmqrt<double>(view(a), tau, 0, Side::rq, config(ts), be);

  const Eigen::MatrixXd dense = Eigen::HouseholderQR<Eigen::MatrixXd>(a0.eigen()).matrixQR();
  const double tol = 100 * n * eps * a0.eigen().norm();
  for (Index r = 0; r < ts; ++r) {
    const double sign = (a(r, r) < 0) == (dense(r, r) < 0) ? 1.0 : -1.0;
    for (Index c = r; c < n; ++c) CHECK(std::abs(a(r, c) - sign * dense(r, c)) <= tol);
  }
  // Rows below the first tile row are Q^T A restricted to them: the
  // trailing block keeps the spectrum of [R; rest] once the vectors are cleared.
  Eigen::MatrixXd cleared = a.eigen();
  cleared.block(0, 0, n, ts) = cleared.block(0, 0, n, ts).triangularView<Eigen::Upper>().toDenseMatrix();
  const Eigen::VectorXd s0 = singular_values(a0.eigen());
  CHECK((singular_values(cleared) - s0).cwiseAbs().maxCoeff() <= 100 * n * eps * s0(0));
}

TEST_CASE("LQ sweep clears the tile row right of the superdiagonal tile") {
  const double eps = std::numeric_limits<double>::epsilon();
  const Index ts = 4;
  const Index nb = 4;
  const Index n = nb * ts;
  const DenseMatrix<double> a0 = test::gaussian(n, n, 220);
  DenseMatrix<double> a = a0;
  TauStore<double> tau(ts, nb);
  exec::ReferenceBackend be;
  MatrixView<double> v = view(a);
  getsmqrt<double>(v, tau, 0, Side::rq, config(ts), be);
  getsmqrt<double>(v.transpose(), tau, 0, Side::lq, config(ts), be);

  // Logical clear: vectors below the diagonal of tile column 0 and right of
  // the lower triangle of tile (0, 1) plus tiles (0, 2..).
  Eigen::MatrixXd m = a.eigen();
  for (Index r = 1; r < n; ++r) m(r, 0) = 0;
  for (Index c = 1; c < ts; ++c)
    for (Index r = c + 1; r < n; ++r) m(r, c) = 0;
  for (Index c = ts; c < n; ++c)
    for (Index r = 0; r < ts; ++r)
      if (c > r + ts) m(r, c) = 0;
  const double tol = 8 * eps * a0.eigen().norm();
  const Eigen::VectorXd s0 = singular_values(a0.eigen());
  CHECK((singular_values(m) - s0).cwiseAbs().maxCoeff() <= 100 * n * eps * s0(0));
  CHECK(m.block(ts, 0, n - ts, ts).cwiseAbs().maxCoeff() <= tol);
}

TEST_CASE("getsmqrt argument checks") {
  exec::ReferenceBackend be;
  DenseMatrix<double> a(16, 16);
  TauStore<double> tau(8, 2);
  CHECK_THROWS_AS(getsmqrt<double>(view(a), tau, 2, Side::rq, config(8), be), RangeError);
  CHECK_THROWS_AS(getsmqrt<double>(view(a), tau, -1, Side::rq, config(8), be), RangeError);
  TauStore<double> wrong(8, 3);
  CHECK_THROWS_AS(getsmqrt<double>(view(a), wrong, 0, Side::rq, config(8), be), ShapeError);
  DenseMatrix<double> odd(12, 12);
  CHECK_THROWS_AS(banddiag<double>(odd, config(8), be), ShapeError);
  CHECK_THROWS_AS(banddiag<double>(DenseMatrix<double>(16, 8), config(8), be), ShapeError);
}

TEST_CASE("diagonal input keeps its magnitudes") {
  const double eps = std::numeric_limits<double>::epsilon();
  const Index n = 32;
  DenseMatrix<double> a(n, n);
  for (Index i = 0; i < n; ++i) a(i, i) = 1.0 + 0.37 * i;
  exec::ReferenceBackend be;
  const BandForm<double> band = banddiag<double>(a, config(8), be);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      if (r == c) {
        CHECK(std::abs(std::abs(band.matrix(r, c)) - a(r, c)) <= 4 * eps * a(r, c));
      } else {
        CHECK(band.matrix(r, c) == 0.0);
      }
    }
  }
}

TEST_CASE("single tile banddiag is a QR factorization") {
  const double eps = std::numeric_limits<double>::epsilon();
  const DenseMatrix<double> a0 = test::gaussian(16, 16, 230);
  exec::ReferenceBackend be;
  const BandForm<double> band = banddiag<double>(a0, config(16), be);
  CHECK(band.nbtiles == 1);
  CHECK(band.bandwidth == 16);
  const Eigen::MatrixXd r = band.matrix.eigen();
  CHECK(r.isUpperTriangular(0));
  const Eigen::MatrixXd dense = Eigen::HouseholderQR<Eigen::MatrixXd>(a0.eigen()).matrixQR();
  for (Index i = 0; i < 16; ++i) {
    CHECK(std::abs(std::abs(r(i, i)) - std::abs(dense(i, i))) <= 100 * eps * a0.eigen().norm());
  }
}

TEST_CASE("band form preserves the spectrum and structure") {
  const double eps = std::numeric_limits<double>::epsilon();
  for (Index ts : {4, 8, 16}) {
    for (bool fused : {true, false}) {
      const Index n = 4 * ts;
      const DenseMatrix<double> a0 = test::gaussian(n, n, 240 + ts);
      exec::ReferenceBackend be;
      const BandForm<double> band = banddiag<double>(a0, config(ts, fused), be);
      for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
          if (c < r || c > r + ts) CHECK(band.matrix(r, c) == 0.0);
        }
      }
      const Eigen::VectorXd s0 = singular_values(a0.eigen());
      const Eigen::VectorXd s1 = singular_values(band.matrix.eigen());
      CHECK((s1 - s0).cwiseAbs().maxCoeff() <= 100 * n * eps * s0(0));
    }
  }
}

TEST_CASE("launch counts follow the closed forms") {
  CHECK(banddiag_launches(1, true) == 1);
  CHECK(banddiag_launches(1, false) == 1);
  CHECK(banddiag_launches(2, true) == 7);
  CHECK(banddiag_launches(2, false) == 7);
  CHECK(banddiag_launches(8, true) == 55);
  CHECK(banddiag_launches(8, false) == 127);
  CHECK(chain_launches(8, 0, Side::rq, true) == 2);
  CHECK(chain_launches(8, 0, Side::rq, false) == 14);
  CHECK(chain_launches(8, 7, Side::rq, false) == 0);

  for (Index nb : {1, 2, 3, 4, 8}) {
    for (bool fused : {true, false}) {
      const Index ts = 4;
      exec::ReferenceBackend be;
      banddiag<double>(test::gaussian(nb * ts, nb * ts, 250), config(ts, fused), be);
      CHECK(be.stats().launches == banddiag_launches(nb, fused));
    }
  }
}

TEST_CASE("fused and unfused stage one agree bitwise") {
  for (Index ts : {4, 8}) {
    for (Index nb : {2, 3, 5}) {
      const DenseMatrix<double> a0 = test::gaussian(nb * ts, nb * ts, 260 + nb);
      exec::ReferenceBackend be;
      const BandForm<double> f = banddiag<double>(a0, config(ts, true), be);
      const BandForm<double> u = banddiag<double>(a0, config(ts, false), be);
      CHECK(test::bitwise_equal(f.matrix, u.matrix));
      CHECK(f.tau.values() == u.tau.values());

      const DenseMatrix<float> a32 = a0.cast<float>();
      const BandForm<float> f32 = banddiag<float>(a32, config(ts, true), be);
      const BandForm<float> u32 = banddiag<float>(a32, config(ts, false), be);
      CHECK(test::bitwise_equal(f32.matrix, u32.matrix));
    }
  }
}

TEST_CASE("stage one is deterministic and backend independent") {
  const DenseMatrix<double> a0 = test::gaussian(48, 48, 270);
  exec::ReferenceBackend ref;
  exec::ParallelBackend par(3);
  const BandForm<double> a = banddiag<double>(a0, config(8), ref);
  const BandForm<double> b = banddiag<double>(a0, config(8), ref);
  const BandForm<double> c = banddiag<double>(a0, config(8), par);
  CHECK(test::bitwise_equal(a.matrix, b.matrix));
  CHECK(test::bitwise_equal(a.matrix, c.matrix));
}

TEST_CASE("phase timers accumulate") {
  PhaseTimes t;
  exec::ReferenceBackend be;
  banddiag<double>(test::gaussian(32, 32, 280), config(8), be, &t);
  CHECK(t.panel > 0);
  CHECK(t.update > 0);
  CHECK(t.bidiagonal == 0);
  CHECK(t.total() == t.panel + t.update);
}

TEST_CASE("fp16 fused chain rounds less often than the unfused one") {
  const DenseMatrix<double> a0 = test::gaussian(64, 64, 290);
  const DenseMatrix<half> a = a0.cast<half>();
  exec::ReferenceBackend be;
  const BandForm<half> f = banddiag<half>(a, config(16, true), be);
  const BandForm<half> u = banddiag<half>(a, config(16, false), be);
  // Fused keeps the top row in float across tile rows; unfused stores it as
  // half between launches.
  CHECK_FALSE(test::bitwise_equal(f.matrix, u.matrix));
  const Eigen::VectorXd s0 = singular_values(a.to_double());
  const Eigen::VectorXd sf = singular_values(f.matrix.to_double());
  const Eigen::VectorXd su = singular_values(u.matrix.to_double());
  CHECK((sf - s0).norm() / s0.norm() <= 1e-2);
  CHECK((su - s0).norm() / s0.norm() <= 1e-2);
}
