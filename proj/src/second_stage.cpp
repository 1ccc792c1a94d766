#include "bandsvd/second_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Householder>

namespace bandsvd {
namespace {

// Row-major band with one extra column each side for the bulges:
// row r holds columns r-1 .. r+b+1.
template <typename T>
class BandBuffer {
 public:
  BandBuffer(Index n, Index b) : n_(n), b_(b), w_(b + 3), data_(static_cast<std::size_t>(n * (b + 3)), T(0)) {}

  T& operator()(Index r, Index c) { return data_[static_cast<std::size_t>(r * w_ + (c - r + 1))]; }

  Index first(Index r) const { return std::max<Index>(0, r - 1); }
  Index last(Index r) const { return std::min<Index>(n_ - 1, r + b_ + 1); }

 private:
  Index n_;
  Index b_;
  Index w_;
  std::vector<T> data_;
};

template <typename T>
BidiagonalMatrix<T> dense_bidiagonal(Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> a) {
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  const Index n = a.rows();
  Vec work(n);
  for (Index k = 0; k < n; ++k) {
    if (k + 1 < n) {
      Vec ess(n - k - 1);
      T tau;
      T beta;
      a.col(k).tail(n - k).makeHouseholder(ess, tau, beta);
      a.bottomRightCorner(n - k, n - k - 1).applyHouseholderOnTheLeft(ess, tau, work.data());
      a(k, k) = beta;
      a.col(k).tail(n - k - 1).setZero();
    }
    if (k + 2 < n) {
      Vec ess(n - k - 2);
      T tau;
      T beta;
      Vec row = a.row(k).tail(n - k - 1).transpose();
      row.makeHouseholder(ess, tau, beta);
      a.bottomRightCorner(n - k - 1, n - k - 1).applyHouseholderOnTheRight(ess, tau, work.data());
      a(k, k + 1) = beta;
      a.row(k).tail(n - k - 2).setZero();
    }
  }
  BidiagonalMatrix<T> out;
  out.d.resize(static_cast<std::size_t>(n));
  out.e.resize(static_cast<std::size_t>(std::max<Index>(n - 1, 0)));
  for (Index i = 0; i < n; ++i) out.d[i] = a(i, i);
  for (Index i = 0; i + 1 < n; ++i) out.e[i] = a(i, i + 1);
  return out;
}

// Column rotation on (j, j+1) over rows [lo, hi], zeroing column j+1 in `row`.
template <typename T>
void rotate_columns(BandBuffer<T>& a, Index j, Index row, Index lo, Index hi) {
  T r;
  const auto g = GivensRotation<T>::make(a(row, j), a(row, j + 1), j, j + 1, &r);
  if (g.s == T(0) && g.c == T(1)) return;
  for (Index i = lo; i <= hi; ++i) {
    if (j < a.first(i) || j + 1 > a.last(i)) continue;
    const T x = a(i, j);
    const T y = a(i, j + 1);
    a(i, j) = g.c * x + g.s * y;
    a(i, j + 1) = -g.s * x + g.c * y;
  }
  a(row, j) = r;
  a(row, j + 1) = T(0);
}

// Row rotation on (j, j+1) over columns [lo, hi], zeroing (j+1, j).
template <typename T>
void rotate_rows(BandBuffer<T>& a, Index j, Index lo, Index hi) {
  T r;
  const auto g = GivensRotation<T>::make(a(j, j), a(j + 1, j), j, j + 1, &r);
  if (g.s == T(0) && g.c == T(1)) return;
  for (Index c = lo; c <= hi; ++c) {
    if (c < a.first(j + 1) || c > a.last(j)) continue;
    const T x = a(j, c);
    const T y = a(j + 1, c);
    a(j, c) = g.c * x + g.s * y;
    a(j + 1, c) = -g.s * x + g.c * y;
  }
  a(j, j) = r;
  a(j + 1, j) = T(0);
}

// Singular values of [[f, g], [0, h]] (LAPACK's las2 formulas).
template <typename T>
void las2(T f, T g, T h, T& ssmin, T& ssmax) {
  const T fa = std::abs(f);
  const T ga = std::abs(g);
  const T ha = std::abs(h);
  const T fhmn = std::min(fa, ha);
  const T fhmx = std::max(fa, ha);
  if (fhmn == T(0)) {
    ssmin = T(0);
    if (fhmx == T(0)) {
      ssmax = ga;
    } else {
      const T mx = std::max(fhmx, ga);
      const T mn = std::min(fhmx, ga);
      ssmax = mx * std::sqrt(T(1) + (mn / mx) * (mn / mx));
    }
  } else if (ga < fhmx) {
    const T as = T(1) + fhmn / fhmx;
    const T at = (fhmx - fhmn) / fhmx;
    const T au = (ga / fhmx) * (ga / fhmx);
    const T c = T(2) / (std::sqrt(as * as + au) + std::sqrt(at * at + au));
    ssmin = fhmn * c;
    ssmax = fhmx / c;
  } else {
    const T au = fhmx / ga;
    if (au == T(0)) {
      ssmin = (fhmn * fhmx) / ga;
      ssmax = ga;
    } else {
      const T as = T(1) + fhmn / fhmx;
      const T at = (fhmx - fhmn) / fhmx;
      const T c = T(1) / (std::sqrt(T(1) + (as * au) * (as * au)) +
                          std::sqrt(T(1) + (at * au) * (at * au)));
      ssmin = (fhmn * c) * au;
      ssmin = ssmin + ssmin;
      ssmax = ga / (c + c);
    }
  }
}

// f, g -> (cs, sn, r) with cs*f + sn*g = r, -sn*f + cs*g = 0.
template <typename T>
void lartg(T f, T g, T& cs, T& sn, T& r) {
  if (g == T(0)) {
    cs = T(1);
    sn = T(0);
    r = f;
  } else if (f == T(0)) {
    cs = T(0);
    sn = T(1);
    r = g;
  } else {
    r = std::hypot(f, g);
    cs = f / r;
    sn = g / r;
  }
}

}  // namespace

template <typename T>
BidiagonalMatrix<T> band_to_bidiagonal(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& band,
                                       Index bandwidth) {
  if (band.rows() != band.cols()) {
    throw ShapeError("band matrix must be square, got " + std::to_string(band.rows()) + "x" +
                     std::to_string(band.cols()));
  }
  if (bandwidth < 0) throw ShapeError("negative bandwidth");
  const Index n = band.rows();
  if (n == 0) return {};
  if (bandwidth >= n) return dense_bidiagonal<T>(band);

  const Index b = std::max<Index>(bandwidth, 1);
  BandBuffer<T> a(n, b);
  for (Index r = 0; r < n; ++r) {
    for (Index c = r; c <= std::min(n - 1, r + b); ++c) a(r, c) = band(r, c);
  }

  for (Index i = 0; i + 2 < n; ++i) {
    for (Index c = std::min(i + b, n - 1); c >= i + 2; --c) {
      if (a(i, c) == T(0)) continue;
      // Annihilate (i, c) against (i, c-1); the fill lands at (c, c-1).
      rotate_columns(a, c - 1, i, i, c);
      Index p = c - 1;
      for (;;) {
        // Clear the subdiagonal bulge; the fill lands at (p, p+b+1).
        rotate_rows(a, p, p, std::min(n - 1, p + b + 1));
        if (p + b + 1 >= n) break;
        const Index q = p + b + 1;
        if (a(p, q) == T(0)) break;
        rotate_columns(a, q - 1, p, p, q);
        p = q - 1;
      }
    }
  }

  BidiagonalMatrix<T> out;
  out.d.resize(static_cast<std::size_t>(n));
  out.e.resize(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) out.d[i] = a(i, i);
  for (Index i = 0; i + 1 < n; ++i) out.e[i] = a(i, i + 1);
  return out;
}

template <typename T>
std::vector<T> bidiagonal_values(BidiagonalMatrix<T> bd) {
  const Index n = bd.size();
  if (n == 0) return {};
  if (static_cast<Index>(bd.e.size()) != n - 1) {
    throw ShapeError("bidiagonal needs " + std::to_string(n - 1) + " superdiagonal entries, got " +
                     std::to_string(bd.e.size()));
  }
  auto& d = bd.d;
  auto& e = bd.e;
  const T eps = std::numeric_limits<T>::epsilon();

  T scale = T(0);
  for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(d[i]));
  for (Index i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(e[i]));
  // Diagonal entries this small are treated as exact zeros.
  const T dzero = eps * scale * T(1e-3);

  const double max_sweeps = 30.0 * static_cast<double>(n) * static_cast<double>(n);
  double sweeps = 0;
  Index hi = n - 1;
  while (hi > 0) {
    for (Index i = 0; i < hi; ++i) {
      if (std::abs(e[i]) <= eps * (std::abs(d[i]) + std::abs(d[i + 1]))) e[i] = T(0);
    }
    if (e[hi - 1] == T(0)) {
      --hi;
      continue;
    }
    Index lo = hi - 1;
    while (lo > 0 && e[lo - 1] != T(0)) --lo;

    if (sweeps >= max_sweeps) {
      T mass = T(0);
      for (Index i = 0; i + 1 < n; ++i) mass += e[i] * e[i];
      throw ConvergenceError("bidiagonal iteration did not converge after " +
                             std::to_string(static_cast<long long>(sweeps)) +
                             " sweeps; residual superdiagonal norm " +
                             std::to_string(static_cast<double>(std::sqrt(mass))));
    }

    // A zero on the diagonal splits the block once its row or column is cleared.
    Index zero = -1;
    for (Index k = lo; k <= hi; ++k) {
      if (std::abs(d[k]) <= dzero) {
        zero = k;
        break;
      }
    }
    if (zero >= 0) {
      d[zero] = T(0);
      if (zero < hi) {
        T x = e[zero];
        e[zero] = T(0);
        for (Index j = zero + 1; j <= hi && x != T(0); ++j) {
          T r;
          const auto g = GivensRotation<T>::make(d[j], x, zero, j, &r);
          d[j] = r;
          if (j < hi) {
            x = -g.s * e[j];
            e[j] = g.c * e[j];
          }
        }
      } else {
        T x = e[hi - 1];
        e[hi - 1] = T(0);
        for (Index j = hi - 1; j >= lo && x != T(0); --j) {
          T r;
          const auto g = GivensRotation<T>::make(d[j], x, j, hi, &r);
          d[j] = r;
          if (j > lo) {
            x = -g.s * e[j - 1];
            e[j - 1] = g.c * e[j - 1];
          }
        }
      }
      sweeps += 1;
      continue;
    }

    if (hi - lo == 1) {
      T smin;
      T smax;
      las2(d[lo], e[lo], d[hi], smin, smax);
      d[lo] = smax;
      d[hi] = smin;
      e[lo] = T(0);
      --hi;
      continue;
    }

    T shift;
    T unused;
    las2(d[hi - 1], e[hi - 1], d[hi], shift, unused);
    const T sll = std::abs(d[lo]);
    if ((shift / sll) * (shift / sll) < eps) shift = T(0);
    sweeps += 1;

    if (shift == T(0)) {
      // Demmel-Kahan zero-shift sweep.
      T cs = T(1);
      T oldcs = T(1);
      T sn = T(0);
      T oldsn = T(0);
      T r = T(0);
      for (Index i = lo; i < hi; ++i) {
        lartg(d[i] * cs, e[i], cs, sn, r);
        if (i > lo) e[i - 1] = oldsn * r;
        lartg(oldcs * r, d[i + 1] * sn, oldcs, oldsn, d[i]);
      }
      const T h = d[hi] * cs;
      d[hi] = h * oldcs;
      e[hi - 1] = h * oldsn;
    } else {
      T f = (sll - shift) * (std::copysign(T(1), d[lo]) + shift / d[lo]);
      T g = e[lo];
      T cs;
      T sn;
      T r;
      for (Index i = lo; i < hi; ++i) {
        lartg(f, g, cs, sn, r);
        if (i > lo) e[i - 1] = r;
        f = cs * d[i] + sn * e[i];
        e[i] = cs * e[i] - sn * d[i];
        g = sn * d[i + 1];
        d[i + 1] = cs * d[i + 1];
        lartg(f, g, cs, sn, r);
        d[i] = r;
        f = cs * e[i] + sn * d[i + 1];
        d[i + 1] = cs * d[i + 1] - sn * e[i];
        if (i + 1 < hi) {
          g = sn * e[i + 1];
          e[i + 1] = cs * e[i + 1];
        }
      }
      e[hi - 1] = f;
    }
  }

  std::vector<T> values(d.begin(), d.end());
  for (auto& v : values) v = std::abs(v);
  std::sort(values.begin(), values.end(), [](T x, T y) { return x > y; });
  return values;
}

template BidiagonalMatrix<double> band_to_bidiagonal(const Eigen::MatrixXd&, Index);
template BidiagonalMatrix<float> band_to_bidiagonal(const Eigen::MatrixXf&, Index);
template std::vector<double> bidiagonal_values(BidiagonalMatrix<double>);
template std::vector<float> bidiagonal_values(BidiagonalMatrix<float>);

}  // namespace bandsvd
