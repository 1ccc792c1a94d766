#ifndef BANDSVD_KERNELS_HPP
#define BANDSVD_KERNELS_HPP

// Tile kernels for the tiled Householder QR sweeps:
//
//   geqrt  QR of one TS x TS tile, one workgroup of SPLITK * TS work-items
//   tsqrt  QR of an upper-triangular tile stacked on a square tile; the fused
//          form factors a whole chain of square tiles against the same
//          triangle in one launch
//   unmqr  applies geqrt reflectors to a tile row, COLPERBLOCK columns per group
//   tsmqr  applies tsqrt reflectors to a (top row, lower row) pair; the fused
//          form keeps the top row in private memory across every lower row
//
// Reflectors are H = I - tau * v * v^T with v's pivot entry implicitly 1.
// Vectors are stored in place below the diagonal (geqrt) or in the lower
// tile (tsqrt), already divided by the pivot x.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bandsvd/exec.hpp"
#include "bandsvd/matrix.hpp"

namespace bandsvd {

struct KernelConfig {
  Index tilesize = 32;
  Index colperblock = 32;
  Index splitk = 8;
  bool fused = true;

  static constexpr Index kMinTile = 4;
  static constexpr Index kMaxTile = 128;

  static Index max_splitk(Index tilesize) {
    return std::min<Index>(tilesize, static_cast<Index>(exec::kMaxGroupSize) / tilesize);
  }

  /// Throws ConfigError naming the first violated constraint.
  void validate() const {
    if (tilesize < kMinTile || tilesize > kMaxTile) {
      throw ConfigError("TILESIZE " + std::to_string(tilesize) + " outside [4, 128]");
    }
    if (splitk < 1 || splitk > max_splitk(tilesize)) {
      throw ConfigError("SPLITK " + std::to_string(splitk) + " outside [1, " +
                        std::to_string(max_splitk(tilesize)) + "] for TILESIZE " +
                        std::to_string(tilesize));
    }
    if (colperblock < 1 || colperblock > tilesize || tilesize % colperblock != 0) {
      throw ConfigError("COLPERBLOCK " + std::to_string(colperblock) +
                        " must divide TILESIZE " + std::to_string(tilesize));
    }
  }

  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

namespace detail {

template <typename T>
struct Pivot {
  T x;
  T tau;
  bool degenerate;
};

// x = a +/- sqrt(a^2 + |b|^2) with the sign of a, tau = 2x^2 / (x^2 + |b|^2).
// A pivot smaller than 10 eps is replaced by 10 eps with tau = 2.
template <typename T>
inline Pivot<T> make_pivot(T a, T norm2, T eps) {
  using std::abs;
  using std::sqrt;
  T x;
  if (a < T(0)) {
    x = a - sqrt(a * a + norm2);
  } else {
    x = a + sqrt(a * a + norm2);
  }
  const T tiny = T(10) * eps;
  if (abs(x) < tiny) return {tiny, T(2), true};
  return {x, T(2) * x * x / (x * x + norm2), false};
}

// tau * v^T a_i for v = [1; b / x], given a_i's pivot entry and rho = b^T a_i[tail].
template <typename T>
inline T project(const Pivot<T>& p, T pivot_entry, T rho) {
  if (p.degenerate) return T(2) * (pivot_entry + rho / p.x);
  return (p.tau / p.x) * (pivot_entry * p.x + rho);
}

inline void check_tile(Index rows, Index cols, Index ts, const char* what) {
  if (rows != ts || cols != ts) {
    throw ShapeError(std::string(what) + " must be " + std::to_string(ts) + "x" +
                     std::to_string(ts) + ", got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

inline void check_tau(std::size_t size, Index ts, const char* what) {
  if (static_cast<Index>(size) != ts) {
    throw ShapeError(std::string(what) + " needs " + std::to_string(ts) + " coefficients, got " +
                     std::to_string(size));
  }
}

// Row range [begin, end) owned by split-K segment `seg`.
struct Segment {
  Index begin;
  Index end;
  Index length;
};

inline Segment segment(Index seg, Index ts, Index splitk) {
  const Index len = (ts + splitk - 1) / splitk;
  const Index b = std::min(seg * len, ts);
  return {b, std::min(b + len, ts), len};
}

// Pairwise tree over the split-K partial sums of one column, ascending index.
// Must be awaited by every work-item of the group.
#define BANDSVD_SPLITK_REDUCE(ctx, partial, col, seg, splitk, active)            \
  for (Index stride = 1; stride < (splitk); stride *= 2) {                       \
    if ((active) && (seg) % (2 * stride) == 0 && (seg) + stride < (splitk)) {    \
      const auto base = static_cast<std::size_t>((col) * (splitk));              \
      (partial).store(base + (seg), (partial).load(base + (seg)) +               \
                                        (partial).load(base + (seg) + stride));  \
    }                                                                            \
    co_await (ctx).barrier();                                                    \
  }

template <typename S>
exec::ItemTask geqrt_item(exec::KernelContext& ctx, MatrixView<S> tile, std::span<S> tau,
                          Index ts, Index splitk) {
  using T = compute_t<S>;
  const T eps = compute_epsilon<S>();
  const Index id = static_cast<Index>(ctx.local_id());
  const Index col = id % ts;
  const Index seg = id / ts;
  const Segment rows = segment(seg, ts, splitk);

  auto colk = ctx.local<T>(ts);
  auto partial = ctx.local<T>(ts * splitk);
  auto pivots = ctx.local<T>(ts);
  auto mine = ctx.private_array<T>(rows.length);

  for (Index r = rows.begin; r < rows.end; ++r) mine[r - rows.begin] = to_compute(tile(r, col));
  T my_tau = T(0);

  for (Index k = 0; k + 1 < ts; ++k) {
    if (col == k) {
      for (Index r = rows.begin; r < rows.end; ++r) colk.store(r, mine[r - rows.begin]);
    }
    co_await ctx.barrier();

    const bool active = col >= k;
    if (active) {
      T part = T(0);
      const Index from = std::max(rows.begin, k + 1);
      if (from < rows.end) {
        auto shared = colk.read(from, rows.end - from);
        for (Index r = from; r < rows.end; ++r) part += mine[r - rows.begin] * shared[r - from];
      }
      partial.store(col * splitk + seg, part);
      if (k >= rows.begin && k < rows.end) pivots.store(col, mine[k - rows.begin]);
    }
    co_await ctx.barrier();

    BANDSVD_SPLITK_REDUCE(ctx, partial, col, seg, splitk, active)

    if (active) {
      const T norm2 = partial.load(k * splitk);
      const Pivot<T> p = make_pivot(colk.load(k), norm2, eps);
      const T rho = partial.load(col * splitk);
      const T rho_p = project(p, pivots.load(col), rho);
      if (k >= rows.begin && k < rows.end) mine[k - rows.begin] -= rho_p;
      const Index from = std::max(rows.begin, k + 1);
      if (from < rows.end) {
        auto shared = colk.read(from, rows.end - from);
        if (col > k) {
          for (Index r = from; r < rows.end; ++r) {
            mine[r - rows.begin] -= rho_p * (shared[r - from] / p.x);
          }
        } else {
          for (Index r = from; r < rows.end; ++r) mine[r - rows.begin] /= p.x;
        }
      }
      if (col == k) my_tau = p.tau;
    }
    co_await ctx.barrier();
  }

  for (Index r = rows.begin; r < rows.end; ++r) tile(r, col) = to_storage<S>(mine[r - rows.begin]);
  if (seg == 0) tau[col] = to_storage<S>(my_tau);
}

// Factors [R; B_0], then [R'; B_1], ... against the same triangle R, which
// stays in private memory of the segment-0 work-items throughout.
template <typename S>
exec::ItemTask tsqrt_item(exec::KernelContext& ctx, MatrixView<S> r_tile,
                          std::span<const MatrixView<S>> b_tiles, std::span<const std::span<S>> taus,
                          Index ts, Index splitk) {
  using T = compute_t<S>;
  const T eps = compute_epsilon<S>();
  const Index id = static_cast<Index>(ctx.local_id());
  const Index col = id % ts;
  const Index seg = id / ts;
  const Segment rows = segment(seg, ts, splitk);

  auto colk = ctx.local<T>(ts);
  auto partial = ctx.local<T>(ts * splitk);
  auto pivots = ctx.local<T>(ts);
  auto rcol = ctx.private_array<T>(ts);
  auto mine = ctx.private_array<T>(rows.length);

  if (seg == 0) {
    for (Index r = 0; r <= col; ++r) rcol[r] = to_compute(r_tile(r, col));
  }

  for (std::size_t l = 0; l < b_tiles.size(); ++l) {
    const MatrixView<S>& b = b_tiles[l];
    for (Index r = rows.begin; r < rows.end; ++r) mine[r - rows.begin] = to_compute(b(r, col));
    T my_tau = T(0);

    for (Index k = 0; k < ts; ++k) {
      if (col == k) {
        for (Index r = rows.begin; r < rows.end; ++r) colk.store(r, mine[r - rows.begin]);
      }
      co_await ctx.barrier();

      const bool active = col >= k;
      if (active) {
        T part = T(0);
        if (rows.begin < rows.end) {
          auto shared = colk.read(rows.begin, rows.end - rows.begin);
          for (Index r = rows.begin; r < rows.end; ++r) {
            part += mine[r - rows.begin] * shared[r - rows.begin];
          }
        }
        partial.store(col * splitk + seg, part);
        if (seg == 0) pivots.store(col, rcol[k]);
      }
      co_await ctx.barrier();

      BANDSVD_SPLITK_REDUCE(ctx, partial, col, seg, splitk, active)

      if (active) {
        const T norm2 = partial.load(k * splitk);
        const Pivot<T> p = make_pivot(pivots.load(k), norm2, eps);
        const T rho = partial.load(col * splitk);
        const T rho_p = project(p, pivots.load(col), rho);
        if (seg == 0) rcol[k] -= rho_p;
        if (rows.begin < rows.end) {
          auto shared = colk.read(rows.begin, rows.end - rows.begin);
          if (col > k) {
            for (Index r = rows.begin; r < rows.end; ++r) {
              mine[r - rows.begin] -= rho_p * (shared[r - rows.begin] / p.x);
            }
          } else {
            for (Index r = rows.begin; r < rows.end; ++r) mine[r - rows.begin] /= p.x;
          }
        }
        if (col == k) my_tau = p.tau;
      }
      co_await ctx.barrier();
    }

    for (Index r = rows.begin; r < rows.end; ++r) b(r, col) = to_storage<S>(mine[r - rows.begin]);
    if (seg == 0) taus[l][col] = to_storage<S>(my_tau);
  }

  if (seg == 0) {
    for (Index r = 0; r <= col; ++r) r_tile(r, col) = to_storage<S>(rcol[r]);
  }
}

template <typename S>
exec::ItemTask unmqr_item(exec::KernelContext& ctx, MatrixView<S> panel, std::span<S> tau,
                          MatrixView<S> x, Index ts, Index cpb) {
  using T = compute_t<S>;
  const Index i = static_cast<Index>(ctx.local_id());
  const Index column = static_cast<Index>(ctx.group_id()) * cpb + i;

  auto ak = ctx.local<T>(ts);
  auto tk = ctx.local<T>(ts);
  auto xi = ctx.private_array<T>(ts);

  for (Index j = 0; j < ts / cpb; ++j) tk.store(j * cpb + i, to_compute(tau[j * cpb + i]));
  for (Index r = 0; r < ts; ++r) xi[r] = to_compute(x(r, column));

  for (Index k = 0; k + 1 < ts; ++k) {
    for (Index j = 0; j < ts / cpb; ++j) ak.store(j * cpb + i, to_compute(panel(j * cpb + i, k)));
    co_await ctx.barrier();

    auto v = ak.read(k + 1, ts - k - 1);
    T dot = T(0);
    for (Index r = k + 1; r < ts; ++r) dot += xi[r] * v[r - k - 1];
    const T rho = tk.load(k) * (xi[k] + dot);
    xi[k] -= rho;
    for (Index r = k + 1; r < ts; ++r) xi[r] -= rho * v[r - k - 1];
    co_await ctx.barrier();
  }

  for (Index r = 0; r < ts; ++r) x(r, column) = to_storage<S>(xi[r]);
}

template <typename S>
exec::ItemTask tsmqr_item(exec::KernelContext& ctx, MatrixView<S> top,
                          std::span<const MatrixView<S>> rows,
                          std::span<const MatrixView<S>> v_tiles,
                          std::span<const std::span<S>> taus, Index ts, Index cpb) {
  using T = compute_t<S>;
  const Index i = static_cast<Index>(ctx.local_id());
  const Index column = static_cast<Index>(ctx.group_id()) * cpb + i;

  auto ak = ctx.local<T>(ts);
  auto tk = ctx.local<T>(ts);
  auto xi = ctx.private_array<T>(ts);
  auto yi = ctx.private_array<T>(ts);

  for (Index j = 0; j < ts; ++j) yi[j] = to_compute(top(j, column));

  for (std::size_t l = 0; l < rows.size(); ++l) {
    const MatrixView<S>& x = rows[l];
    const MatrixView<S>& v = v_tiles[l];
    for (Index j = 0; j < ts; ++j) xi[j] = to_compute(x(j, column));
    for (Index j = 0; j < ts / cpb; ++j) tk.store(j * cpb + i, to_compute(taus[l][j * cpb + i]));

    for (Index k = 0; k < ts; ++k) {
      for (Index j = 0; j < ts / cpb; ++j) ak.store(j * cpb + i, to_compute(v(j * cpb + i, k)));
      co_await ctx.barrier();

      auto a = ak.read(0, ts);
      T xik = T(0);
      for (Index j = 0; j < ts; ++j) xik += a[j] * xi[j];
      xik = (xik + yi[k]) * tk.load(k);
      yi[k] -= xik;
      for (Index j = 0; j < ts; ++j) xi[j] -= xik * a[j];
      co_await ctx.barrier();
    }

    for (Index j = 0; j < ts; ++j) x(j, column) = to_storage<S>(xi[j]);
  }

  for (Index j = 0; j < ts; ++j) top(j, column) = to_storage<S>(yi[j]);
}

#undef BANDSVD_SPLITK_REDUCE

inline std::size_t panel_shared_bytes(Index ts, Index splitk, std::size_t scalar) {
  return static_cast<std::size_t>(ts + ts * splitk + ts) * scalar + 2 * 16;
}

}  // namespace detail

/// In-place QR of one tile. Upper triangle receives R, the strict lower part
/// the scaled reflectors; tau_out[k] gets tau for k < ts-1 and 0 for the last
/// column.
template <typename S>
void geqrt(MatrixView<S> tile, std::span<S> tau_out, const KernelConfig& cfg,
           exec::Backend& backend) {
  using T = compute_t<S>;
  cfg.validate();
  const Index ts = cfg.tilesize;
  detail::check_tile(tile.rows(), tile.cols(), ts, "geqrt tile");
  detail::check_tau(tau_out.size(), ts, "geqrt");
  const Index k = cfg.splitk;
  exec::LaunchSpec spec{"geqrt", 1, static_cast<std::size_t>(k * ts),
                        detail::panel_shared_bytes(ts, k, sizeof(T)),
                        static_cast<std::size_t>(detail::segment(0, ts, k).length) * sizeof(T)};
  backend.launch(spec, [=](exec::KernelContext& ctx) {
    return detail::geqrt_item<S>(ctx, tile, tau_out, ts, k);
  });
}

/// Structured QR of the stacks [R; B_l] for every tile in b_tiles, in order,
/// in a single launch. R must be upper triangular.
template <typename S>
void tsqrt_fused(MatrixView<S> r_tile, std::span<const MatrixView<S>> b_tiles,
                 std::span<const std::span<S>> taus, const KernelConfig& cfg,
                 exec::Backend& backend) {
  using T = compute_t<S>;
  cfg.validate();
  const Index ts = cfg.tilesize;
  detail::check_tile(r_tile.rows(), r_tile.cols(), ts, "tsqrt triangle");
  if (b_tiles.size() != taus.size()) {
    throw ShapeError("tsqrt: " + std::to_string(b_tiles.size()) + " tiles but " +
                     std::to_string(taus.size()) + " tau columns");
  }
  for (const auto& b : b_tiles) detail::check_tile(b.rows(), b.cols(), ts, "tsqrt tile");
  for (const auto& t : taus) detail::check_tau(t.size(), ts, "tsqrt");
  if (b_tiles.empty()) return;
  const Index k = cfg.splitk;
  exec::LaunchSpec spec{
      b_tiles.size() > 1 ? "ftsqrt" : "tsqrt", 1, static_cast<std::size_t>(k * ts),
      detail::panel_shared_bytes(ts, k, sizeof(T)),
      static_cast<std::size_t>(ts + detail::segment(0, ts, k).length) * sizeof(T) + 16};
  backend.launch(spec, [=](exec::KernelContext& ctx) {
    return detail::tsqrt_item<S>(ctx, r_tile, b_tiles, taus, ts, k);
  });
}

template <typename S>
void tsqrt(MatrixView<S> r_tile, MatrixView<S> b_tile, std::span<S> tau_out,
           const KernelConfig& cfg, exec::Backend& backend) {
  const MatrixView<S> tiles[1] = {b_tile};
  const std::span<S> taus[1] = {tau_out};
  tsqrt_fused<S>(r_tile, tiles, taus, cfg, backend);
}

/// Applies the geqrt reflectors stored in `panel` to x (ts rows, any multiple
/// of COLPERBLOCK columns).
template <typename S>
void unmqr(MatrixView<S> panel, std::span<S> tau, MatrixView<S> x, const KernelConfig& cfg,
           exec::Backend& backend) {
  using T = compute_t<S>;
  cfg.validate();
  const Index ts = cfg.tilesize;
  const Index cpb = cfg.colperblock;
  detail::check_tile(panel.rows(), panel.cols(), ts, "unmqr panel");
  detail::check_tau(tau.size(), ts, "unmqr");
  if (x.rows() != ts || x.cols() % cpb != 0) {
    throw ShapeError("unmqr target must have " + std::to_string(ts) +
                     " rows and a multiple of " + std::to_string(cpb) + " columns, got " +
                     std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  if (x.cols() == 0) return;
  exec::LaunchSpec spec{"unmqr", static_cast<std::size_t>(x.cols() / cpb),
                        static_cast<std::size_t>(cpb), 2 * ts * sizeof(T) + 16,
                        ts * sizeof(T)};
  backend.launch(spec, [=](exec::KernelContext& ctx) {
    return detail::unmqr_item<S>(ctx, panel, tau, x, ts, cpb);
  });
}

/// Applies the reflectors of every tsqrt in the chain to the rows below the
/// top row, in order, in one launch. The top row is read and written once.
template <typename S>
void tsmqr_fused(MatrixView<S> top, std::span<const MatrixView<S>> rows,
                 std::span<const MatrixView<S>> v_tiles, std::span<const std::span<S>> taus,
                 const KernelConfig& cfg, exec::Backend& backend) {
  using T = compute_t<S>;
  cfg.validate();
  const Index ts = cfg.tilesize;
  const Index cpb = cfg.colperblock;
  if (rows.size() != v_tiles.size() || rows.size() != taus.size()) {
    throw ShapeError("tsmqr: " + std::to_string(rows.size()) + " rows, " +
                     std::to_string(v_tiles.size()) + " reflector tiles and " +
                     std::to_string(taus.size()) + " tau columns");
  }
  if (top.rows() != ts || top.cols() % cpb != 0) {
    throw ShapeError("tsmqr top row must have " + std::to_string(ts) +
                     " rows and a multiple of " + std::to_string(cpb) + " columns");
  }
  for (const auto& x : rows) {
    if (x.rows() != ts || x.cols() != top.cols()) {
      throw ShapeError("tsmqr row extents differ from the top row");
    }
  }
  for (const auto& v : v_tiles) detail::check_tile(v.rows(), v.cols(), ts, "tsmqr reflectors");
  for (const auto& t : taus) detail::check_tau(t.size(), ts, "tsmqr");
  if (rows.empty() || top.cols() == 0) return;
  exec::LaunchSpec spec{rows.size() > 1 ? "ftsmqr" : "tsmqr",
                        static_cast<std::size_t>(top.cols() / cpb),
                        static_cast<std::size_t>(cpb), 2 * ts * sizeof(T) + 16,
                        2 * ts * sizeof(T)};
  backend.launch(spec, [=](exec::KernelContext& ctx) {
    return detail::tsmqr_item<S>(ctx, top, rows, v_tiles, taus, ts, cpb);
  });
}

template <typename S>
void tsmqr(MatrixView<S> top, MatrixView<S> row, MatrixView<S> v_tile, std::span<S> tau,
           const KernelConfig& cfg, exec::Backend& backend) {
  const MatrixView<S> rows[1] = {row};
  const MatrixView<S> vs[1] = {v_tile};
  const std::span<S> taus[1] = {tau};
  tsmqr_fused<S>(top, rows, vs, taus, cfg, backend);
}

}  // namespace bandsvd

#endif  // BANDSVD_KERNELS_HPP
