#ifndef BANDSVD_SVDVALS_HPP
#define BANDSVD_SVDVALS_HPP

#include <string>
#include <vector>

#include "bandsvd/band_reduce.hpp"
#include "bandsvd/exec.hpp"
#include "bandsvd/kernels.hpp"
#include "bandsvd/matrix.hpp"
#include "bandsvd/second_stage.hpp"

namespace bandsvd {

/// All singular values of a square matrix, descending, in the compute
/// precision of S: pad -> band -> bidiagonal -> values.
template <typename S>
std::vector<compute_t<S>> svdvals(const DenseMatrix<S>& a, const KernelConfig& cfg,
                                  exec::Backend& backend, PhaseTimes* times = nullptr) {
  if (!a.is_square()) {
    throw ShapeError("matrix must be square, got " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()));
  }
  if (!all_finite(a)) throw InputError("matrix contains NaN or Inf entries");
  cfg.validate();
  const Index n = a.rows();
  if (n == 0) return {};

  BandForm<S> band = banddiag(pad_to_tiles(a, cfg.tilesize), cfg, backend, times);
  BidiagonalMatrix<compute_t<S>> bd;
  {
    detail::PhaseClock clock(times ? &times->bidiagonal : nullptr);
    bd = band_to_bidiagonal(band);
  }
  std::vector<compute_t<S>> values;
  {
    detail::PhaseClock clock(times ? &times->diagonal : nullptr);
    // Float QR sweeps drift by several ulps over thousands of sweeps, so the
    // last stage always iterates in double; its input is exact either way.
    BidiagonalMatrix<double> wide{{bd.d.begin(), bd.d.end()}, {bd.e.begin(), bd.e.end()}};
    const std::vector<double> v = bidiagonal_values(std::move(wide));
    values.assign(v.begin(), v.end());
  }
  values.resize(static_cast<std::size_t>(n));
  return values;
}

}  // namespace bandsvd

#endif  // BANDSVD_SVDVALS_HPP
