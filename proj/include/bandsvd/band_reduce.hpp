#ifndef BANDSVD_BAND_REDUCE_HPP
#define BANDSVD_BAND_REDUCE_HPP

// Stage one: dense -> upper band of width TS by alternating tile QR sweeps on
// the matrix (RQ, clears a tile column below the diagonal) and on its lazy
// transpose (LQ, clears a tile row right of the first superdiagonal tile).

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "bandsvd/exec.hpp"
#include "bandsvd/kernels.hpp"
#include "bandsvd/matrix.hpp"

namespace bandsvd {

/// Wall-clock split of one pipeline run.
struct PhaseTimes {
  double panel = 0;       // geqrt + tsqrt
  double update = 0;      // unmqr + tsmqr
  double bidiagonal = 0;  // band -> bidiagonal
  double diagonal = 0;    // bidiagonal -> values

  double total() const { return panel + update + bidiagonal + diagonal; }
};

namespace detail {

class PhaseClock {
 public:
  explicit PhaseClock(double* sink) : sink_(sink) {
    if (sink_) start_ = std::chrono::steady_clock::now();
  }
  ~PhaseClock() {
    if (sink_) {
      *sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
  }
  PhaseClock(const PhaseClock&) = delete;
  PhaseClock& operator=(const PhaseClock&) = delete;

 private:
  double* sink_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

template <typename S>
struct BandForm {
  DenseMatrix<S> matrix;
  Index bandwidth = 0;
  Index nbtiles = 0;
  TauStore<S> tau;
};

/// One sweep k (zero-based). For Side::rq, `a` is the matrix; for Side::lq it
/// must be the transposed view, and the diagonal tile is (k + 1, k).
template <typename S>
void getsmqrt(MatrixView<S> a, TauStore<S>& tau, Index k, Side side, const KernelConfig& cfg,
              exec::Backend& backend, PhaseTimes* times = nullptr) {
  const Index ts = cfg.tilesize;
  if (a.rows() != a.cols() || ts <= 0 || a.rows() % ts != 0) {
    throw ShapeError("getsmqrt needs a square view with a whole number of tiles");
  }
  const Index nb = a.rows() / ts;
  if (k < 0 || k >= nb) {
    throw RangeError("sweep " + std::to_string(k) + " outside " + std::to_string(nb) + " tiles");
  }
  if (tau.nbtiles() != nb || tau.tilesize() != ts) {
    throw ShapeError("tau store does not match the tile grid");
  }
  const Index p = k + (side == Side::lq ? 1 : 0);
  if (p >= nb) return;

  MatrixView<S> diag = tile_view(a, p, k, ts);
  const Index right = (nb - k - 1) * ts;
  {
    detail::PhaseClock clock(times ? &times->panel : nullptr);
    geqrt<S>(diag, tau.column(k, p, side), cfg, backend);
  }
  if (right > 0) {
    detail::PhaseClock clock(times ? &times->update : nullptr);
    unmqr<S>(diag, tau.column(k, p, side), a.block(p * ts, (k + 1) * ts, ts, right), cfg,
             backend);
  }
  if (p + 1 >= nb) return;

  std::vector<MatrixView<S>> below;
  std::vector<MatrixView<S>> rows;
  std::vector<std::span<S>> taus;
  for (Index l = p + 1; l < nb; ++l) {
    below.push_back(tile_view(a, l, k, ts));
    if (right > 0) rows.push_back(a.block(l * ts, (k + 1) * ts, ts, right));
    taus.push_back(tau.column(k, l, side));
  }
  MatrixView<S> top = right > 0 ? a.block(p * ts, (k + 1) * ts, ts, right) : MatrixView<S>();

  if (cfg.fused) {
    {
      detail::PhaseClock clock(times ? &times->panel : nullptr);
      tsqrt_fused<S>(diag, below, taus, cfg, backend);
    }
    if (right > 0) {
      detail::PhaseClock clock(times ? &times->update : nullptr);
      tsmqr_fused<S>(top, rows, below, taus, cfg, backend);
    }
  } else {
    {
      detail::PhaseClock clock(times ? &times->panel : nullptr);
      for (std::size_t i = 0; i < below.size(); ++i) {
        tsqrt<S>(diag, below[i], taus[i], cfg, backend);
      }
    }
    if (right > 0) {
      detail::PhaseClock clock(times ? &times->update : nullptr);
      for (std::size_t i = 0; i < below.size(); ++i) {
        tsmqr<S>(top, rows[i], below[i], taus[i], cfg, backend);
      }
    }
  }
}

/// Zeroes everything outside the upper band c in [r, r + bandwidth].
template <typename S>
void clear_outside_band(DenseMatrix<S>& m, Index bandwidth) {
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) {
      if (c < r || c > r + bandwidth) m(r, c) = S(0);
    }
  }
}

/// Reduces a padded square matrix to upper band form in place.
template <typename S>
BandForm<S> banddiag(DenseMatrix<S> a, const KernelConfig& cfg, exec::Backend& backend,
                     PhaseTimes* times = nullptr) {
  cfg.validate();
  const Index ts = cfg.tilesize;
  if (!a.is_square() || a.rows() == 0 || a.rows() % ts != 0) {
    throw ShapeError("banddiag needs a square matrix with a multiple of " + std::to_string(ts) +
                     " rows, got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  const Index nb = a.rows() / ts;
  BandForm<S> out{std::move(a), ts, nb, TauStore<S>(ts, nb)};
  MatrixView<S> v = view(out.matrix);
  for (Index k = 0; k + 1 < nb; ++k) {
    getsmqrt<S>(v, out.tau, k, Side::rq, cfg, backend, times);
    getsmqrt<S>(v.transpose(), out.tau, k, Side::lq, cfg, backend, times);
  }
  getsmqrt<S>(v, out.tau, nb - 1, Side::rq, cfg, backend, times);
  clear_outside_band(out.matrix, ts);
  return out;
}

/// Launches issued by banddiag for nb tiles.
inline std::uint64_t banddiag_launches(Index nb, bool fused) {
  if (nb <= 1) return 1;
  const auto n = static_cast<std::uint64_t>(nb);
  return fused ? 8 * n - 9 : 2 * n * n - 1;
}

/// Launches issued by the tsqrt/tsmqr chains of one sweep side.
inline std::uint64_t chain_launches(Index nb, Index k, Side side, bool fused) {
  const Index p = k + (side == Side::lq ? 1 : 0);
  const Index m = nb - 1 - p;
  if (m <= 0) return 0;
  const bool update = k + 1 < nb;
  if (fused) return update ? 2 : 1;
  return static_cast<std::uint64_t>(m) * (update ? 2 : 1);
}

}  // namespace bandsvd

#endif  // BANDSVD_BAND_REDUCE_HPP
