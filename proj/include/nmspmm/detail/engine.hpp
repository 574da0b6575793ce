#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <omp.h>

#include "nmspmm/common.hpp"
#include "nmspmm/planner.hpp"

// Block engine shared by the non-packed, packed and dense kernels.
//
// For every m_s x n_s output block (one worker each) the engine walks the
// compressed rows in panels of w_s. A loader fills the fast-memory copy of A
// (stored transposed, one A column per row, m_pad wide) and a prefetched row
// table: rows[u * q_stride + g] is the A_s row feeding compressed row u of
// column group g. The B panel is copied next to it and register tiles of
// m_t x n_t accumulate outer products into a column-major C block in ascending u. Each output element
// therefore sees exactly the summation order of the naive kernel.

namespace nmspmm::detail {

template <typename Scalar>
struct Workspace {
  std::vector<Scalar> a_s;
  std::vector<Scalar> b_s;
  std::vector<Scalar> c_s;
  std::vector<std::int32_t> rows;
};

template <typename Scalar>
struct TileArgs {
  const Scalar* a_s;  // points at column ti of the transposed A block
  Index lda;
  const std::int32_t* rows;  // row table
  Index rows_stride;
  Index tile_col;  // tj, column of the tile inside the block
  Index group_len;
  const Scalar* b;  // points at column tj of row 0 of the B panel
  Index ldb;
  Scalar* c;  // points at (ti, tj) of the column-major C block
  Index ldc;
  Index depth;  // compressed rows in this panel
};

template <typename Scalar>
using TileKernel = void (*)(const TileArgs<Scalar>&);

// Accumulators run down the rows of each tile column, so one A_s load feeds
// every column of a group. CW columns share a group; CW == NT is one group.
template <typename Scalar, int MT, int NT, int CW>
void tile_grouped(const TileArgs<Scalar>& t) {
  typedef Scalar Vec __attribute__((vector_size(sizeof(Scalar) * MT)));
  constexpr int G = NT / CW;
  Vec acc[NT];
  for (int j = 0; j < NT; ++j) __builtin_memcpy(&acc[j], t.c + j * t.ldc, sizeof(Vec));
  const std::int32_t* rows = t.rows + t.tile_col / t.group_len;
  for (Index p = 0; p < t.depth; ++p) {
    const Scalar* b = t.b + p * t.ldb;
    const std::int32_t* r = rows + p * t.rows_stride;
    for (int g = 0; g < G; ++g) {
      Vec a;
      __builtin_memcpy(&a, t.a_s + r[g] * t.lda, sizeof(Vec));
      for (int j = g * CW; j < (g + 1) * CW; ++j) acc[j] += a * b[j];
    }
  }
  for (int j = 0; j < NT; ++j) __builtin_memcpy(t.c + j * t.ldc, &acc[j], sizeof(Vec));
}

// Column groups that do not line up with the tile: every column looks up its own row.
template <typename Scalar, int MT, int NT>
void tile_columns(const TileArgs<Scalar>& t) {
  typedef Scalar Vec __attribute__((vector_size(sizeof(Scalar) * MT)));
  Vec acc[NT];
  Index group[NT];
  for (int j = 0; j < NT; ++j) {
    group[j] = (t.tile_col + j) / t.group_len;
    __builtin_memcpy(&acc[j], t.c + j * t.ldc, sizeof(Vec));
  }
  for (Index p = 0; p < t.depth; ++p) {
    const std::int32_t* rows = t.rows + p * t.rows_stride;
    const Scalar* b = t.b + p * t.ldb;
    for (int j = 0; j < NT; ++j) {
      Vec a;
      __builtin_memcpy(&a, t.a_s + rows[group[j]] * t.lda, sizeof(Vec));
      acc[j] += a * b[j];
    }
  }
  for (int j = 0; j < NT; ++j) __builtin_memcpy(t.c + j * t.ldc, &acc[j], sizeof(Vec));
}

// Any tile shape within the register budget.
template <typename Scalar>
void tile_generic(const TileArgs<Scalar>& t, Index mt, Index nt) {
  Scalar acc[kRegisterBudget];
  for (Index j = 0; j < nt; ++j)
    for (Index i = 0; i < mt; ++i) acc[j * mt + i] = t.c[j * t.ldc + i];
  for (Index p = 0; p < t.depth; ++p) {
    const std::int32_t* rows = t.rows + p * t.rows_stride;
    const Scalar* b = t.b + p * t.ldb;
    for (Index j = 0; j < nt; ++j) {
      const Scalar* a = t.a_s + rows[(t.tile_col + j) / t.group_len] * t.lda;
      for (Index i = 0; i < mt; ++i) acc[j * mt + i] += a[i] * b[j];
    }
  }
  for (Index j = 0; j < nt; ++j)
    for (Index i = 0; i < mt; ++i) t.c[j * t.ldc + i] = acc[j * mt + i];
}

template <typename Scalar, int MT, int NT>
TileKernel<Scalar> pick_for_width(Index group_len) {
  if (group_len % NT == 0) return &tile_grouped<Scalar, MT, NT, NT>;
  if constexpr (NT % 8 == 0 && NT > 8) {
    if (group_len == 8) return &tile_grouped<Scalar, MT, NT, 8>;
  }
  if constexpr (NT % 4 == 0 && NT > 4) {
    if (group_len == 4) return &tile_grouped<Scalar, MT, NT, 4>;
  }
  if constexpr (NT % 2 == 0) {
    if (group_len == 2) return &tile_grouped<Scalar, MT, NT, 2>;
  }
  if (group_len == 1) return &tile_grouped<Scalar, MT, NT, 1>;
  return &tile_columns<Scalar, MT, NT>;
}

template <typename Scalar, int MT>
TileKernel<Scalar> pick_for_rows(Index nt, Index group_len) {
  switch (nt) {
    case 4: return pick_for_width<Scalar, MT, 4>(group_len);
    case 8: return pick_for_width<Scalar, MT, 8>(group_len);
    case 16: return pick_for_width<Scalar, MT, 16>(group_len);
    default: return nullptr;
  }
}

/// Specialized register-tile kernel, or nullptr when only the generic one applies.
template <typename Scalar>
TileKernel<Scalar> pick_tile_kernel(Index mt, Index nt, Index group_len) {
  switch (mt) {
    case 4: return pick_for_rows<Scalar, 4>(nt, group_len);
    case 8: return pick_for_rows<Scalar, 8>(nt, group_len);
    case 16: return pick_for_rows<Scalar, 16>(nt, group_len);
    default: return nullptr;
  }
}

/// A^T, built once per product so panel loads are contiguous copies.
template <typename Scalar>
DenseMatrix<Scalar> transpose_for_loads(const DenseMatrix<Scalar>& a, int workers) {
  constexpr Index kTile = 32;
  DenseMatrix<Scalar> at(a.cols(), a.rows());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for num_threads(threads) schedule(static)
  for (Index r0 = 0; r0 < a.rows(); r0 += kTile) {
    const Index r1 = std::min(r0 + kTile, a.rows());
    for (Index c0 = 0; c0 < a.cols(); c0 += kTile) {
      const Index c1 = std::min(c0 + kTile, a.cols());
      for (Index c = c0; c < c1; ++c)
        for (Index r = r0; r < r1; ++r) at(c, r) = a(r, c);
    }
  }
  return at;
}

/// Copies A(i0 .. i0 + mb, cols) into the transposed block, zero rows past mb.
/// `at` is A^T; `col_of(r)` gives the A column stored at block row r.
template <typename Scalar, typename ColOf>
void load_a_transposed(const DenseMatrix<Scalar>& at, Index i0, Index mb, Index m_pad, Index rows,
                       ColOf col_of, std::vector<Scalar>& a_s) {
  a_s.resize(static_cast<std::size_t>(rows * m_pad));
  for (Index r = 0; r < rows; ++r) {
    const Scalar* src = at.data() + col_of(r) * at.cols() + i0;
    Scalar* dst = a_s.data() + r * m_pad;
    std::copy(src, src + mb, dst);
    std::fill(dst + mb, dst + m_pad, Scalar(0));
  }
}

struct BlockGeometry {
  Index panel;   // index of the w_s panel
  Index i0, mb;  // block rows
  Index j0, nb;  // block columns
  Index m_pad;   // mb rounded up to m_t
  Index q_stride;
};

struct EngineShape {
  Index m, n, w;     // output rows, output columns, compressed rows
  Index group_len;   // columns sharing one row-table entry
};

/// Runs the block loop. `loader(geom, ws)` must fill ws.a_s and ws.rows for
/// the panel and return the number of compressed rows in it.
template <typename Scalar, typename Loader>
void run_blocks(const Loader& loader, const Scalar* b_vals, Index ldb, const EngineShape& shape,
                const BlockPlan& plan, Scalar scale, bool apply_scale, Scalar* c, Index ldc,
                int workers) {
  const Index blocks_m = ceil_div(shape.m, plan.m_s);
  const Index blocks_n = ceil_div(shape.n, plan.n_s);
  const Index blocks = blocks_m * blocks_n;
  const Index panels = ceil_div(shape.w, plan.w_s);
  const TileKernel<Scalar> kernel = pick_tile_kernel<Scalar>(plan.m_t, plan.n_t, shape.group_len);
  const int threads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel num_threads(threads)
  {
    Workspace<Scalar> ws;
#pragma omp for schedule(dynamic, 1)
    for (Index blk = 0; blk < blocks; ++blk) {
      BlockGeometry geom{};
      geom.i0 = blk / blocks_n * plan.m_s;
      geom.j0 = blk % blocks_n * plan.n_s;
      geom.mb = std::min(plan.m_s, shape.m - geom.i0);
      geom.nb = std::min(plan.n_s, shape.n - geom.j0);
      geom.m_pad = round_up(geom.mb, plan.m_t);
      const Index n_pad = round_up(geom.nb, plan.n_t);
      geom.q_stride = ceil_div(n_pad, shape.group_len);
      ws.c_s.assign(static_cast<std::size_t>(geom.m_pad * n_pad), Scalar(0));
      ws.b_s.resize(static_cast<std::size_t>(plan.w_s * n_pad));

      for (Index panel = 0; panel < panels; ++panel) {
        geom.panel = panel;
        const Index depth = loader(geom, ws);
        const Index u0 = panel * plan.w_s;
        for (Index u = 0; u < depth; ++u) {
          const Scalar* src = b_vals + (u0 + u) * ldb + geom.j0;
          Scalar* dst = ws.b_s.data() + u * n_pad;
          std::copy(src, src + geom.nb, dst);
          std::fill(dst + geom.nb, dst + n_pad, Scalar(0));
        }

        TileArgs<Scalar> args{};
        args.lda = geom.m_pad;
        args.rows = ws.rows.data();
        args.rows_stride = geom.q_stride;
        args.group_len = shape.group_len;
        args.ldb = n_pad;
        args.ldc = geom.m_pad;
        args.depth = depth;
        for (Index mr = 0; mr < geom.m_pad; mr += plan.m_r) {
          for (Index nr = 0; nr < n_pad; nr += plan.n_r) {
            const Index ti_end = std::min(mr + plan.m_r, geom.m_pad);
            const Index tj_end = std::min(nr + plan.n_r, n_pad);
            for (Index ti = mr; ti < ti_end; ti += plan.m_t) {
              for (Index tj = nr; tj < tj_end; tj += plan.n_t) {
                args.a_s = ws.a_s.data() + ti;
                args.tile_col = tj;
                args.b = ws.b_s.data() + tj;
                args.c = ws.c_s.data() + tj * geom.m_pad + ti;
                if (kernel) {
                  kernel(args);
                } else {
                  tile_generic(args, plan.m_t, plan.n_t);
                }
              }
            }
          }
        }
      }

      for (Index i = 0; i < geom.mb; ++i) {
        const Scalar* src = ws.c_s.data() + i;
        Scalar* dst = c + (geom.i0 + i) * ldc + geom.j0;
        if (apply_scale) {
          for (Index j = 0; j < geom.nb; ++j) dst[j] = scale * src[j * geom.m_pad];
        } else {
          for (Index j = 0; j < geom.nb; ++j) dst[j] = src[j * geom.m_pad];
        }
      }
    }
  }
}

}  // namespace nmspmm::detail
