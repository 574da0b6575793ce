#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "nmspmm/common.hpp"
#include "nmspmm/rng.hpp"

namespace nmspmm {

/// Compressed N:M weights.
///
/// `values` is w x n_cols with w = k_orig * N / M; row u holds the u-th
/// retained vector of its window for every column group. `indices` is
/// w x q with q = n_cols / L; indices(u, g) is the offset of that vector
/// inside its window, so the original row is (u / N) * M + indices(u, g).
template <typename Scalar>
struct NmCompressed {
  NmConfig config;
  Index k_orig = 0;
  Index n_cols = 0;
  DenseMatrix<Scalar> values;
  IndexMatrix indices;

  Index w() const { return k_orig / config.m_window() * config.n_keep(); }
  Index q() const { return n_cols / config.vector_len(); }

  /// Row of the dense operand referenced by compressed row u in column group g.
  Index source_row(Index u, Index g) const {
    return (u / config.n_keep()) * config.m_window() + indices(u, g);
  }
};

using NmCompressedF = NmCompressed<float>;

struct PaddedDims {
  Index k_pad;
  Index n_pad;
  friend bool operator==(const PaddedDims&, const PaddedDims&) = default;
};

inline PaddedDims pad_dims(Index k, Index n, const NmConfig& config) {
  if (k < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "dimensions must be >= 1");
  return {round_up(k, config.m_window()), round_up(n, config.vector_len())};
}

template <typename Derived>
DenseMatrix<typename Derived::Scalar> zero_pad(const Eigen::MatrixBase<Derived>& x, Index rows,
                                               Index cols) {
  DenseMatrix<typename Derived::Scalar> out =
      DenseMatrix<typename Derived::Scalar>::Zero(rows, cols);
  out.topLeftCorner(x.rows(), x.cols()) = x;
  return out;
}

namespace detail {

/// Squared L2 norm of the vector at (row, col0 .. col0 + len), in double.
template <typename Scalar>
double vector_norm2(const DenseMatrix<Scalar>& x, Index row, Index col0, Index len) {
  double s = 0.0;
  for (Index c = 0; c < len; ++c) {
    const double v = static_cast<double>(x(row, col0 + c));
    s += v * v;
  }
  return s;
}

template <typename Scalar>
bool vector_is_zero(const DenseMatrix<Scalar>& x, Index row, Index col0, Index len) {
  for (Index c = 0; c < len; ++c) {
    if (x(row, col0 + c) != Scalar(0)) return false;
  }
  return true;
}

template <typename Scalar>
void zero_vector(DenseMatrix<Scalar>& x, Index row, Index col0, Index len) {
  x.row(row).segment(col0, len).setZero();
}

}  // namespace detail

/// Offsets (ascending) kept by magnitude pruning for one window: the n_keep
/// largest squared norms, ties going to the smaller offset.
inline std::vector<Index> top_offsets_by_norm(const std::vector<double>& norms, Index n_keep) {
  std::vector<Index> order(norms.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return norms[a] > norms[b]; });
  order.resize(static_cast<std::size_t>(n_keep));
  std::sort(order.begin(), order.end());
  return order;
}

/// Zero-pads `b` to multiples of (M, L) and keeps, in every window, the
/// n_keep vectors with the largest L2 norm.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> prune_magnitude(const Eigen::MatrixBase<Derived>& b,
                                                      const NmConfig& config) {
  using Scalar = typename Derived::Scalar;
  const auto [k_pad, n_pad] = pad_dims(b.rows(), b.cols(), config);
  DenseMatrix<Scalar> out = zero_pad(b, k_pad, n_pad);
  const Index m = config.m_window();
  const Index len = config.vector_len();
  std::vector<double> norms(static_cast<std::size_t>(m));
  for (Index w0 = 0; w0 < k_pad; w0 += m) {
    for (Index c0 = 0; c0 < n_pad; c0 += len) {
      for (Index o = 0; o < m; ++o) norms[o] = detail::vector_norm2(out, w0 + o, c0, len);
      const auto keep = top_offsets_by_norm(norms, config.n_keep());
      std::size_t next = 0;
      for (Index o = 0; o < m; ++o) {
        if (next < keep.size() && keep[next] == o) {
          ++next;
        } else {
          detail::zero_vector(out, w0 + o, c0, len);
        }
      }
    }
  }
  return out;
}

/// Zero-pads `b` and keeps n_keep uniformly drawn distinct offsets per window.
/// Each window consumes exactly n_keep draws (partial Fisher-Yates).
template <typename Derived>
DenseMatrix<typename Derived::Scalar> prune_random(const Eigen::MatrixBase<Derived>& b,
                                                   const NmConfig& config, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  const auto [k_pad, n_pad] = pad_dims(b.rows(), b.cols(), config);
  DenseMatrix<Scalar> out = zero_pad(b, k_pad, n_pad);
  const Index m = config.m_window();
  const Index len = config.vector_len();
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::vector<bool> kept(static_cast<std::size_t>(m));
  for (Index w0 = 0; w0 < k_pad; w0 += m) {
    for (Index c0 = 0; c0 < n_pad; c0 += len) {
      std::iota(perm.begin(), perm.end(), Index{0});
      std::fill(kept.begin(), kept.end(), false);
      for (Index t = 0; t < config.n_keep(); ++t) {
        const auto pick = t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - t)));
        std::swap(perm[t], perm[pick]);
        kept[perm[t]] = true;
      }
      for (Index o = 0; o < m; ++o) {
        if (!kept[o]) detail::zero_vector(out, w0 + o, c0, len);
      }
    }
  }
  return out;
}

/// Packs a pruned matrix into values + window offsets.
///
/// Windows holding fewer than n_keep nonzero vectors are filled with zero
/// vectors at the smallest unused offsets, so w is always k * N / M.
template <typename Derived>
NmCompressed<typename Derived::Scalar> compress(const Eigen::MatrixBase<Derived>& pruned,
                                                const NmConfig& config) {
  using Scalar = typename Derived::Scalar;
  const Index k = pruned.rows();
  const Index n = pruned.cols();
  const Index m = config.m_window();
  const Index nk = config.n_keep();
  const Index len = config.vector_len();
  if (k == 0 || n == 0 || k % m != 0 || n % len != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "compress needs dims divisible by (M, L); got " + std::to_string(k) + "x" +
                    std::to_string(n) + " for " + config.label());
  }
  const DenseMatrix<Scalar> x = pruned;
  NmCompressed<Scalar> out{config, k, n, DenseMatrix<Scalar>(k / m * nk, n),
                           IndexMatrix(k / m * nk, n / len)};
  std::vector<Index> offsets;
  std::vector<bool> used(static_cast<std::size_t>(m));
  for (Index win = 0; win < k / m; ++win) {
    const Index w0 = win * m;
    for (Index g = 0; g < n / len; ++g) {
      const Index c0 = g * len;
      offsets.clear();
      std::fill(used.begin(), used.end(), false);
      for (Index o = 0; o < m; ++o) {
        if (!detail::vector_is_zero(x, w0 + o, c0, len)) {
          offsets.push_back(o);
          used[o] = true;
        }
      }
      if (static_cast<Index>(offsets.size()) > nk) {
        throw Error(ErrorCode::TooManyNonzeroVectors,
                    "window (row " + std::to_string(w0) + ", col " + std::to_string(c0) +
                        ") has " + std::to_string(offsets.size()) + " nonzero vectors, limit " +
                        std::to_string(nk));
      }
      for (Index o = 0; o < m && static_cast<Index>(offsets.size()) < nk; ++o) {
        if (!used[o]) offsets.push_back(o);
      }
      std::sort(offsets.begin(), offsets.end());
      for (Index t = 0; t < nk; ++t) {
        const Index u = win * nk + t;
        out.values.row(u).segment(c0, len) = x.row(w0 + offsets[t]).segment(c0, len);
        out.indices(u, g) = static_cast<std::uint8_t>(offsets[t]);
      }
    }
  }
  return out;
}

template <typename Scalar>
DenseMatrix<Scalar> decompress(const NmCompressed<Scalar>& bc) {
  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(bc.k_orig, bc.n_cols);
  const Index len = bc.config.vector_len();
  for (Index u = 0; u < bc.values.rows(); ++u) {
    for (Index g = 0; g < bc.indices.cols(); ++g) {
      out.row(bc.source_row(u, g)).segment(g * len, len) = bc.values.row(u).segment(g * len, len);
    }
  }
  return out;
}

enum class ViolationKind { ShapeMismatch, OutOfRange, NotStrictlyIncreasing };

struct Violation {
  ViolationKind kind;
  Index window = -1;  // window row index (row / M), -1 for shape problems
  Index group = -1;   // column group (col / L)
  std::string detail;
};

inline const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::ShapeMismatch: return "ShapeMismatch";
    case ViolationKind::OutOfRange: return "OutOfRange";
    case ViolationKind::NotStrictlyIncreasing: return "NotStrictlyIncreasing";
  }
  return "Unknown";
}

/// Lists every broken invariant of a compressed matrix; empty means valid.
template <typename Scalar>
std::vector<Violation> validate(const NmCompressed<Scalar>& bc) {
  std::vector<Violation> out;
  const Index m = bc.config.m_window();
  const Index nk = bc.config.n_keep();
  const Index len = bc.config.vector_len();
  auto shape = [&](std::string what) {
    out.push_back({ViolationKind::ShapeMismatch, -1, -1, std::move(what)});
  };
  if (bc.k_orig < 1 || bc.k_orig % m != 0) shape("k_orig not a positive multiple of M");
  if (bc.n_cols < 1 || bc.n_cols % len != 0) shape("n_cols not a positive multiple of L");
  if (!out.empty()) return out;
  if (bc.values.rows() != bc.w() || bc.values.cols() != bc.n_cols) shape("values shape != w x n");
  if (bc.indices.rows() != bc.w() || bc.indices.cols() != bc.q()) shape("indices shape != w x q");
  if (!out.empty()) return out;

  for (Index win = 0; win < bc.w() / nk; ++win) {
    for (Index g = 0; g < bc.q(); ++g) {
      bool range_ok = true;
      for (Index t = 0; t < nk; ++t) {
        const Index idx = bc.indices(win * nk + t, g);
        if (idx >= m) {
          range_ok = false;
          out.push_back({ViolationKind::OutOfRange, win, g,
                         "index " + std::to_string(idx) + " >= M=" + std::to_string(m)});
        }
      }
      if (!range_ok) continue;
      for (Index t = 1; t < nk; ++t) {
        if (bc.indices(win * nk + t, g) <= bc.indices(win * nk + t - 1, g)) {
          out.push_back({ViolationKind::NotStrictlyIncreasing, win, g,
                         "indices not strictly increasing at slot " + std::to_string(t)});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace nmspmm
