#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nmspmm/bench.hpp"
#include "nmspmm/common.hpp"

namespace nmspmm {

struct GridCase {
  Index n_keep, m_window, vector_len;
  Shape shape;
  MaskMode mask;
  std::uint64_t seed;
};

struct GridCaseResult {
  GridCase grid;
  bool naive_exact = false;   // spmm_naive == gemm_reference(A, decompress(B)) bitwise
  double blocked_err = 0;     // max |x - ref| / (1 + |ref|)
  double packed_err = 0;
  bool passed = false;
};

/// Patterns {2:4, 3:8, 2:8, 1:8, 16:32} x L {1, 4, 8} x shapes
/// {64^3, (128, 256, 128), 512^3} x both masks x seeds {1, 2, 3}.
std::vector<GridCase> oracle_grid();

/// Runs one case against the dense oracle.
GridCaseResult run_grid_case(const GridCase& c, int workers = 0);

/// Runs every case, reporting each through `on_result` when given.
std::vector<GridCaseResult> run_oracle_grid(
    const std::vector<GridCase>& cases, int workers = 0,
    const std::function<void(const GridCaseResult&)>& on_result = {});

}  // namespace nmspmm
