#ifndef BANDSVD_SECOND_STAGE_HPP
#define BANDSVD_SECOND_STAGE_HPP

// Stage two and three: upper band -> upper bidiagonal by Givens bulge
// chasing, then bidiagonal -> singular values by implicit QR sweeps.

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "bandsvd/band_reduce.hpp"
#include "bandsvd/errors.hpp"
#include "bandsvd/precision.hpp"

namespace bandsvd {

template <typename T>
struct BidiagonalMatrix {
  std::vector<T> d;  // main diagonal, n
  std::vector<T> e;  // superdiagonal, n - 1

  Index size() const { return static_cast<Index>(d.size()); }
};

/// Plane rotation in (i, j): [c s; -s c] applied so that the j component of
/// (a, b) vanishes.
template <typename T>
struct GivensRotation {
  T c = T(1);
  T s = T(0);
  Index i = 0;
  Index j = 0;

  /// c*a + s*b = r and -s*a + c*b = 0 with r = hypot(a, b) >= 0.
  static GivensRotation make(T a, T b, Index i, Index j, T* r = nullptr) {
    GivensRotation g{T(1), T(0), i, j};
    T h = std::hypot(a, b);
    if (h != T(0)) {
      g.c = a / h;
      g.s = b / h;
    } else {
      h = T(0);
    }
    if (r) *r = h;
    return g;
  }
};

/// Bulge-chasing reduction of an upper band matrix (entries with
/// r <= c <= r + bandwidth). Falls back to dense Householder
/// bidiagonalization when bandwidth >= n.
template <typename T>
BidiagonalMatrix<T> band_to_bidiagonal(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& band,
                                       Index bandwidth);

/// Singular values of (d, e), nonnegative and in descending order.
template <typename T>
std::vector<T> bidiagonal_values(BidiagonalMatrix<T> b);

template <typename S>
BidiagonalMatrix<compute_t<S>> band_to_bidiagonal(const BandForm<S>& band) {
  using T = compute_t<S>;
  const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> m =
      band.matrix.eigen().template cast<T>();
  return band_to_bidiagonal<T>(m, band.bandwidth);
}

extern template BidiagonalMatrix<double> band_to_bidiagonal(const Eigen::MatrixXd&, Index);
extern template BidiagonalMatrix<float> band_to_bidiagonal(const Eigen::MatrixXf&, Index);
extern template std::vector<double> bidiagonal_values(BidiagonalMatrix<double>);
extern template std::vector<float> bidiagonal_values(BidiagonalMatrix<float>);

}  // namespace bandsvd

#endif  // BANDSVD_SECOND_STAGE_HPP
