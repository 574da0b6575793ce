#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "nmspmm/common.hpp"
#include "nmspmm/detail/engine.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/planner.hpp"
#include "nmspmm/spmm.hpp"

namespace nmspmm {

/// Position of an entry inside col_info. Two bytes, since a panel can be
/// wider than 256 columns.
using RemapMatrix = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Offline preprocessing for one (panel, block column) pair.
struct PackBlock {
  /// Sorted, unique A columns referenced by the block (absolute indices).
  std::vector<std::uint32_t> col_info;
  /// Same shape as the block of D; col_info[remapped(u, g)] = window_base(u) + D(u, g).
  RemapMatrix remapped;

  Index width() const { return static_cast<Index>(col_info.size()); }
};

/// Preprocessing for the packed kernel, laid out panel-major:
/// blocks[panel * block_cols + block_col].
struct PackPlan {
  NmConfig config{1, 1, 1};
  Index k_orig = 0;
  Index n_cols = 0;
  Index k_s = 0, w_s = 0, n_s = 0, q_s = 0;
  Index panels = 0;
  Index block_cols = 0;
  std::vector<PackBlock> blocks;

  const PackBlock& block(Index panel, Index block_col) const {
    return blocks[static_cast<std::size_t>(panel * block_cols + block_col)];
  }
  PackBlock& block(Index panel, Index block_col) {
    return blocks[static_cast<std::size_t>(panel * block_cols + block_col)];
  }

  /// Compressed rows [first, last) covered by a panel.
  Index panel_rows_begin(Index panel) const { return panel * w_s; }
  Index panel_rows_end(Index panel) const {
    return std::min((panel + 1) * w_s, k_orig / config.m_window() * config.n_keep());
  }
  Index group_begin(Index block_col) const { return block_col * q_s; }
  Index group_end(Index block_col) const {
    return std::min((block_col + 1) * q_s, n_cols / config.vector_len());
  }
};

enum class LoadPath { non_packed, packed };

inline const char* to_string(LoadPath path) {
  return path == LoadPath::packed ? "packed" : "non_packed";
}

inline constexpr double kDefaultPackThreshold = 0.70;

/// Packed loads pay off once sparsity reaches the threshold (ties pack).
inline LoadPath choose_path(const NmConfig& config, double threshold = kDefaultPackThreshold) {
  // (M - N) / M >= t, compared without forming 1 - N/M.
  const double dropped = static_cast<double>(config.m_window() - config.n_keep());
  const double limit = threshold * static_cast<double>(config.m_window());
  return dropped >= limit - 1e-9 ? LoadPath::packed : LoadPath::non_packed;
}

namespace detail {

template <typename Scalar>
void check_pack_geometry(const NmCompressed<Scalar>& bc, const BlockPlan& plan) {
  check_plan(plan, bc.config);
  if (plan.k_s > 65536) throw Error(ErrorCode::InvalidPlan, "k_s too wide for 16-bit remapping");
}

}  // namespace detail

/// Collects, for every (panel, block column), the A columns the block touches.
template <typename Scalar>
PackPlan query_col_info(const NmCompressed<Scalar>& bc, const BlockPlan& plan) {
  detail::check_pack_geometry(bc, plan);
  PackPlan pack;
  pack.config = bc.config;
  pack.k_orig = bc.k_orig;
  pack.n_cols = bc.n_cols;
  pack.k_s = plan.k_s;
  pack.w_s = plan.w_s;
  pack.n_s = plan.n_s;
  pack.q_s = plan.q_s;
  pack.panels = ceil_div(bc.w(), plan.w_s);
  pack.block_cols = ceil_div(bc.n_cols, plan.n_s);
  pack.blocks.resize(static_cast<std::size_t>(pack.panels * pack.block_cols));

  const Index nk = bc.config.n_keep(), mw = bc.config.m_window();
  const auto total = static_cast<Index>(pack.blocks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (Index b = 0; b < total; ++b) {
    const Index panel = b / pack.block_cols, bj = b % pack.block_cols;
    const Index k0 = panel * plan.k_s;
    std::vector<bool> seen(static_cast<std::size_t>(plan.k_s), false);
    for (Index u = pack.panel_rows_begin(panel); u < pack.panel_rows_end(panel); ++u) {
      const Index base = u / nk * mw;
      for (Index g = pack.group_begin(bj); g < pack.group_end(bj); ++g) {
        seen[static_cast<std::size_t>(base + bc.indices(u, g) - k0)] = true;
      }
    }
    auto& col_info = pack.blocks[static_cast<std::size_t>(b)].col_info;
    for (Index r = 0; r < plan.k_s; ++r) {
      if (seen[static_cast<std::size_t>(r)]) col_info.push_back(static_cast<std::uint32_t>(k0 + r));
    }
  }
  return pack;
}

/// Rewrites each block of D as positions into its col_info. `bc` is untouched.
template <typename Scalar>
PackPlan reorder_indices(const NmCompressed<Scalar>& bc, PackPlan pack) {
  const Index nk = bc.config.n_keep(), mw = bc.config.m_window();
  const auto total = static_cast<Index>(pack.blocks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (Index b = 0; b < total; ++b) {
    const Index panel = b / pack.block_cols, bj = b % pack.block_cols;
    const Index k0 = panel * pack.k_s;
    auto& blk = pack.blocks[static_cast<std::size_t>(b)];
    std::vector<std::uint16_t> position(static_cast<std::size_t>(pack.k_s), 0);
    for (std::size_t t = 0; t < blk.col_info.size(); ++t) {
      position[blk.col_info[t] - static_cast<std::size_t>(k0)] = static_cast<std::uint16_t>(t);
    }
    const Index u0 = pack.panel_rows_begin(panel), u1 = pack.panel_rows_end(panel);
    const Index g0 = pack.group_begin(bj), g1 = pack.group_end(bj);
    blk.remapped.resize(u1 - u0, g1 - g0);
    for (Index u = u0; u < u1; ++u) {
      const Index base = u / nk * mw;
      for (Index g = g0; g < g1; ++g) {
        blk.remapped(u - u0, g - g0) = position[static_cast<std::size_t>(base + bc.indices(u, g) - k0)];
      }
    }
  }
  return pack;
}

/// Full offline preprocessing: col_info, then remapped indices.
template <typename Scalar>
PackPlan build_pack_plan(const NmCompressed<Scalar>& bc, const BlockPlan& plan) {
  return reorder_indices(bc, query_col_info(bc, plan));
}

/// Gathers A(row0 .. row0 + rows, col_info) for one (panel, block column).
template <typename Scalar>
DenseMatrix<Scalar> pack_a_block(const DenseMatrix<Scalar>& a, const PackPlan& pack, Index panel,
                                 Index block_col, Index row0, Index rows) {
  if (panel < 0 || panel >= pack.panels || block_col < 0 || block_col >= pack.block_cols ||
      row0 < 0 || row0 + rows > a.rows()) {
    throw Error(ErrorCode::InvalidArgument, "pack_a_block out of range");
  }
  const auto& col_info = pack.block(panel, block_col).col_info;
  DenseMatrix<Scalar> out(rows, static_cast<Index>(col_info.size()));
  for (Index i = 0; i < rows; ++i) {
    for (Index t = 0; t < out.cols(); ++t) out(i, t) = a(row0 + i, col_info[t]);
  }
  return out;
}

namespace detail {

/// Packed load: only the col_info columns of A, rows from the remapped indices.
template <typename Scalar>
struct PackedLoader {
  const DenseMatrix<Scalar>& at;
  const PackPlan& pack;
  const BlockPlan& plan;

  Index operator()(const BlockGeometry& geom, Workspace<Scalar>& ws) const {
    const PackBlock& blk = pack.block(geom.panel, geom.j0 / plan.n_s);
    const auto* cols = blk.col_info.data();
    load_a_transposed(at, geom.i0, geom.mb, geom.m_pad, blk.width(),
                      [cols](Index r) { return static_cast<Index>(cols[r]); }, ws.a_s);
    const Index depth = blk.remapped.rows();
    const Index groups = blk.remapped.cols();
    ws.rows.assign(static_cast<std::size_t>(depth * geom.q_stride), 0);
    for (Index u = 0; u < depth; ++u) {
      for (Index g = 0; g < groups; ++g) ws.rows[u * geom.q_stride + g] = blk.remapped(u, g);
    }
    return depth;
  }
};

inline void check_pack_matches(const PackPlan& pack, const BlockPlan& plan, const NmConfig& config,
                               Index k, Index n) {
  if (!(pack.config == config) || pack.k_orig != k || pack.n_cols != n || pack.k_s != plan.k_s ||
      pack.w_s != plan.w_s || pack.n_s != plan.n_s || pack.q_s != plan.q_s ||
      static_cast<Index>(pack.blocks.size()) != pack.panels * pack.block_cols) {
    throw Error(ErrorCode::InvalidPlan, "pack plan was built for a different matrix or plan");
  }
}

}  // namespace detail

/// Block-wise product that loads A through col_info instead of whole panels.
template <typename Scalar>
DenseMatrix<Scalar> spmm_packed(const DenseMatrix<Scalar>& a, const NmCompressed<Scalar>& bc,
                                const PackPlan& pack, const BlockPlan& plan,
                                const SpmmOptions& opts = {}) {
  detail::check_operands(a, bc);
  check_plan(plan, bc.config);
  detail::check_pack_matches(pack, plan, bc.config, bc.k_orig, bc.n_cols);
  DenseMatrix<Scalar> c(a.rows(), bc.n_cols);
  if (c.size() == 0) return c;
  const DenseMatrix<Scalar> at = detail::transpose_for_loads(a, opts.workers);
  const detail::PackedLoader<Scalar> loader{at, pack, plan};
  detail::run_blocks(loader, bc.values.data(), bc.n_cols,
                     detail::EngineShape{a.rows(), bc.n_cols, bc.w(), bc.config.vector_len()},
                     plan, detail::scale_factor<Scalar>(bc.config), opts.apply_scale, c.data(),
                     bc.n_cols, opts.workers);
  return c;
}

/// Exhaustive check of the col_info / remap invariants; returns a description
/// of the first failure, empty when consistent.
template <typename Scalar>
std::string check_pack_plan(const NmCompressed<Scalar>& bc, const PackPlan& pack) {
  const Index nk = bc.config.n_keep(), mw = bc.config.m_window();
  for (Index panel = 0; panel < pack.panels; ++panel) {
    const Index k0 = panel * pack.k_s;
    for (Index bj = 0; bj < pack.block_cols; ++bj) {
      const auto& blk = pack.block(panel, bj);
      const auto& ci = blk.col_info;
      for (std::size_t t = 0; t < ci.size(); ++t) {
        if (ci[t] < k0 || ci[t] >= k0 + pack.k_s) return "col_info entry outside its panel";
        if (t > 0 && ci[t] <= ci[t - 1]) return "col_info not strictly increasing";
      }
      const Index u0 = pack.panel_rows_begin(panel), g0 = pack.group_begin(bj);
      if (blk.remapped.rows() != pack.panel_rows_end(panel) - u0 ||
          blk.remapped.cols() != pack.group_end(bj) - g0) {
        return "remapped block has the wrong shape";
      }
      for (Index u = 0; u < blk.remapped.rows(); ++u) {
        for (Index g = 0; g < blk.remapped.cols(); ++g) {
          const Index pos = blk.remapped(u, g);
          const Index want = (u0 + u) / nk * mw + bc.indices(u0 + u, g0 + g);
          if (pos >= blk.width() || static_cast<Index>(ci[pos]) != want) {
            return "remapped index does not resolve to the original column";
          }
        }
      }
    }
  }
  return {};
}

}  // namespace nmspmm
