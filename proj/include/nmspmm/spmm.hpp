#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nmspmm/common.hpp"
#include "nmspmm/detail/engine.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/planner.hpp"

namespace nmspmm {

struct SpmmOptions {
  /// Multiply the result by M / N.
  bool apply_scale = false;
  /// Worker threads for the blocked kernels; 0 uses the OpenMP default.
  int workers = 0;
};

namespace detail {

inline std::string shape_str(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <typename Scalar>
void check_operands(const DenseMatrix<Scalar>& a, const NmCompressed<Scalar>& bc) {
  if (a.cols() != bc.k_orig) {
    throw Error(ErrorCode::DimensionMismatch, "A is " + shape_str(a.rows(), a.cols()) +
                                                  " but compressed B has k = " +
                                                  std::to_string(bc.k_orig));
  }
  if (bc.values.rows() != bc.w() || bc.values.cols() != bc.n_cols ||
      bc.indices.rows() != bc.w() || bc.indices.cols() != bc.q()) {
    throw Error(ErrorCode::DimensionMismatch, "compressed B storage does not match its header");
  }
}

template <typename Scalar>
Scalar scale_factor(const NmConfig& config) {
  return static_cast<Scalar>(config.m_window()) / static_cast<Scalar>(config.n_keep());
}

}  // namespace detail

/// Dense oracle: C(i, j) = sum_p A(i, p) * B(p, j), ascending p, Scalar accumulator.
template <typename Scalar>
DenseMatrix<Scalar> gemm_reference(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, detail::shape_str(a.rows(), a.cols()) + " * " +
                                                  detail::shape_str(b.rows(), b.cols()));
  }
  const Index m = a.rows(), k = a.cols(), n = b.cols();
  DenseMatrix<Scalar> c = DenseMatrix<Scalar>::Zero(m, n);
  // i-p-j order keeps each element's sum in ascending p.
  for (Index i = 0; i < m; ++i) {
    Scalar* crow = c.data() + i * n;
    for (Index p = 0; p < k; ++p) {
      const Scalar aip = a(i, p);
      const Scalar* brow = b.data() + p * n;
      for (Index j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

/// Direct evaluation of the compressed product, ascending in compressed row u.
template <typename Scalar>
DenseMatrix<Scalar> spmm_naive(const DenseMatrix<Scalar>& a, const NmCompressed<Scalar>& bc,
                               const SpmmOptions& opts = {}) {
  detail::check_operands(a, bc);
  const Index m = a.rows(), n = bc.n_cols, w = bc.w(), len = bc.config.vector_len();
  DenseMatrix<Scalar> c = DenseMatrix<Scalar>::Zero(m, n);
  for (Index i = 0; i < m; ++i) {
    Scalar* crow = c.data() + i * n;
    for (Index u = 0; u < w; ++u) {
      const Scalar* brow = bc.values.data() + u * n;
      for (Index g = 0; g < bc.q(); ++g) {
        const Scalar aval = a(i, bc.source_row(u, g));
        for (Index j = g * len; j < (g + 1) * len; ++j) crow[j] += aval * brow[j];
      }
    }
  }
  if (opts.apply_scale) c *= detail::scale_factor<Scalar>(bc.config);
  return c;
}

namespace detail {

/// Non-packed load: the whole k_s-wide A panel, rows from window offsets.
template <typename Scalar>
struct WindowLoader {
  const DenseMatrix<Scalar>& at;
  const NmCompressed<Scalar>& bc;
  const BlockPlan& plan;

  Index operator()(const BlockGeometry& geom, Workspace<Scalar>& ws) const {
    const Index nk = bc.config.n_keep(), mw = bc.config.m_window(), len = bc.config.vector_len();
    const Index k0 = geom.panel * plan.k_s;
    const Index kp = std::min(plan.k_s, bc.k_orig - k0);
    const Index u0 = geom.panel * plan.w_s;
    const Index depth = kp / mw * nk;
    load_a_transposed(at, geom.i0, geom.mb, geom.m_pad, kp,
                      [k0](Index r) { return k0 + r; }, ws.a_s);
    const Index g0 = geom.j0 / len;
    const Index groups = geom.nb / len;
    ws.rows.assign(static_cast<std::size_t>(depth * geom.q_stride), 0);
    for (Index u = 0; u < depth; ++u) {
      const Index base = u / nk * mw;
      for (Index g = 0; g < groups; ++g) {
        ws.rows[u * geom.q_stride + g] = static_cast<std::int32_t>(base + bc.indices(u0 + u, g0 + g));
      }
    }
    return depth;
  }
};

/// Dense load: compressed row u is A column u.
template <typename Scalar>
struct DenseLoader {
  const DenseMatrix<Scalar>& at;
  const BlockPlan& plan;

  Index operator()(const BlockGeometry& geom, Workspace<Scalar>& ws) const {
    const Index u0 = geom.panel * plan.w_s;
    const Index depth = std::min(plan.w_s, at.rows() - u0);
    load_a_transposed(at, geom.i0, geom.mb, geom.m_pad, depth,
                      [u0](Index r) { return u0 + r; }, ws.a_s);
    ws.rows.resize(static_cast<std::size_t>(depth * geom.q_stride));
    for (Index u = 0; u < depth; ++u) {
      for (Index g = 0; g < geom.q_stride; ++g) {
        ws.rows[u * geom.q_stride + g] = static_cast<std::int32_t>(u);
      }
    }
    return depth;
  }
};

}  // namespace detail

/// Block-wise evaluation of the compressed product under `plan`.
///
/// Output blocks are independent; each worker owns whole m_s x n_s blocks and
/// walks the compressed rows in w_s panels, so the result is identical for
/// every worker count.
template <typename Scalar>
DenseMatrix<Scalar> spmm_blocked(const DenseMatrix<Scalar>& a, const NmCompressed<Scalar>& bc,
                                 const BlockPlan& plan, const SpmmOptions& opts = {}) {
  detail::check_operands(a, bc);
  check_plan(plan, bc.config);
  DenseMatrix<Scalar> c(a.rows(), bc.n_cols);
  if (c.size() == 0) return c;
  const DenseMatrix<Scalar> at = detail::transpose_for_loads(a, opts.workers);
  const detail::WindowLoader<Scalar> loader{at, bc, plan};
  detail::run_blocks(loader, bc.values.data(), bc.n_cols,
                     detail::EngineShape{a.rows(), bc.n_cols, bc.w(), bc.config.vector_len()},
                     plan, detail::scale_factor<Scalar>(bc.config), opts.apply_scale, c.data(),
                     bc.n_cols, opts.workers);
  return c;
}

/// Dense blocked GEMM on the same engine; the benchmark baseline.
template <typename Scalar>
DenseMatrix<Scalar> gemm_blocked(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b,
                                 const BlockPlan& plan, int workers = 0) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, detail::shape_str(a.rows(), a.cols()) + " * " +
                                                  detail::shape_str(b.rows(), b.cols()));
  }
  check_plan(plan, NmConfig(1, 1, 1));
  DenseMatrix<Scalar> c(a.rows(), b.cols());
  if (c.size() == 0) return c;
  const DenseMatrix<Scalar> at = detail::transpose_for_loads(a, workers);
  const detail::DenseLoader<Scalar> loader{at, plan};
  detail::run_blocks(loader, b.data(), b.cols(),
                     detail::EngineShape{a.rows(), b.cols(), a.cols(), plan.n_s}, plan,
                     Scalar(1), false, c.data(), b.cols(), workers);
  return c;
}

/// Plan for `gemm_blocked`: the dense (1:1) case of `select_plan`.
inline BlockPlan select_dense_plan(Index m, Index n, Index k,
                                   Index fast_memory_bytes = kDefaultFastMemoryBytes) {
  return select_plan(m, n, k, NmConfig(1, 1, 1), fast_memory_bytes);
}

template <typename Scalar>
struct ConfusionStats {
  /// |C' - C| / (m * n), elementwise.
  DenseMatrix<Scalar> per_element;
  double mean_abs_err = 0.0;
  double max_abs_err = 0.0;
};

template <typename Scalar>
ConfusionStats<Scalar> confusion(const DenseMatrix<Scalar>& approx,
                                 const DenseMatrix<Scalar>& exact) {
  if (approx.rows() != exact.rows() || approx.cols() != exact.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                detail::shape_str(approx.rows(), approx.cols()) + " vs " +
                    detail::shape_str(exact.rows(), exact.cols()));
  }
  ConfusionStats<Scalar> out;
  const DenseMatrix<Scalar> diff = (approx - exact).cwiseAbs();
  const auto count = static_cast<Scalar>(approx.rows() * approx.cols());
  out.per_element = diff / count;
  if (diff.size() > 0) {
    out.mean_abs_err = diff.template cast<double>().mean();
    out.max_abs_err = static_cast<double>(diff.maxCoeff());
  }
  return out;
}

/// Largest |x - ref| / (1 + |ref|) over all elements.
template <typename Scalar>
double max_relative_error(const DenseMatrix<Scalar>& x, const DenseMatrix<Scalar>& ref) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "max_relative_error shape mismatch");
  }
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double r = static_cast<double>(ref.data()[i]);
    const double e = std::abs(static_cast<double>(x.data()[i]) - r) / (1.0 + std::abs(r));
    worst = std::max(worst, std::isnan(e) ? INFINITY : e);
  }
  return worst;
}

/// The elementwise agreement rule used across the kernels.
inline constexpr double kKernelTolerance = 1e-4;

template <typename Scalar>
bool within_tolerance(const DenseMatrix<Scalar>& x, const DenseMatrix<Scalar>& ref,
                      double tol = kKernelTolerance) {
  return max_relative_error(x, ref) <= tol;
}

}  // namespace nmspmm
