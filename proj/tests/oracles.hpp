#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's kernels or planners.

#include <cstdint>
#include <vector>

#include "nmspmm/common.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/rng.hpp"

namespace oracle {

using nmspmm::DenseMatrixF;
using nmspmm::Index;

/// Entries in {-3..3}: squared norms are small integers, so sums of them are exact.
inline DenseMatrixF small_int_matrix(Index rows, Index cols, nmspmm::Rng& rng) {
  DenseMatrixF x(rows, cols);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.below(7)) - 3.0f;
  return x;
}

/// Rows holding any nonzero, ascending.
inline std::vector<Index> kept_rows(const DenseMatrixF& x) {
  std::vector<Index> out;
  for (Index r = 0; r < x.rows(); ++r)
    if (!x.row(r).isZero()) out.push_back(r);
  return out;
}

/// Enumerates every n_keep-subset of the window's rows (in lexicographic
/// order) and returns the nonzero rows of the first subset with the largest
/// total squared norm.
inline std::vector<Index> brute_force_keep(const DenseMatrixF& window, Index n_keep) {
  const Index m = window.rows();
  std::vector<std::int64_t> norm(static_cast<std::size_t>(m));
  for (Index r = 0; r < m; ++r) {
    std::int64_t s = 0;
    for (Index c = 0; c < window.cols(); ++c) {
      const auto v = static_cast<std::int64_t>(window(r, c));
      s += v * v;
    }
    norm[r] = s;
  }
  std::vector<Index> best, cur;
  std::int64_t best_sum = -1;
  // Lexicographic enumeration of combinations.
  auto rec = [&](auto&& self, Index start, std::int64_t sum) -> void {
    if (static_cast<Index>(cur.size()) == n_keep) {
      if (sum > best_sum) {
        best_sum = sum;
        best = cur;
      }
      return;
    }
    for (Index r = start; r < m; ++r) {
      cur.push_back(r);
      self(self, r + 1, sum + norm[r]);
      cur.pop_back();
    }
  };
  rec(rec, 0, 0);
  std::vector<Index> out;
  for (Index r : best)
    if (norm[r] > 0) out.push_back(r);
  return out;
}

/// Textbook triple loop, ascending p, float accumulator.
inline DenseMatrixF triple_loop(const DenseMatrixF& a, const DenseMatrixF& b) {
  DenseMatrixF c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      float acc = 0.0f;
      for (Index p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
      c(i, j) = acc;
    }
  }
  return c;
}

/// Element formula: C[i][j] = sum_u A[i][(u / N) * M + D[u][j / L]] * B'[u][j].
inline DenseMatrixF compressed_formula(const DenseMatrixF& a, const nmspmm::NmCompressedF& bc) {
  const Index nk = bc.config.n_keep(), mw = bc.config.m_window(), len = bc.config.vector_len();
  DenseMatrixF c(a.rows(), bc.n_cols);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < bc.n_cols; ++j) {
      float acc = 0.0f;
      for (Index u = 0; u < bc.values.rows(); ++u) {
        acc += a(i, (u / nk) * mw + bc.indices(u, j / len)) * bc.values(u, j);
      }
      c(i, j) = acc;
    }
  }
  return c;
}

/// Largest multiple of M not above k that satisfies
/// 8 * k_s * (m_s + N * n_s / M) <= capacity, found by scanning downwards.
inline Index scan_max_ks(Index m_s, Index n_s, Index n_keep, Index m_window, Index capacity, Index k) {
  for (Index ks = k / m_window * m_window; ks >= m_window; ks -= m_window) {
    // Multiply through by M to stay integral.
    if (8 * ks * (m_window * m_s + n_keep * n_s) <= capacity * m_window) return ks;
  }
  return 0;
}

}  // namespace oracle
