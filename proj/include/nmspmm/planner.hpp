#pragma once

#include <string>
#include <vector>

#include "nmspmm/common.hpp"

namespace nmspmm {

/// Default fast-memory budget in bytes (192 KiB combined L1/shared per SM).
inline constexpr Index kDefaultFastMemoryBytes = 196608;

/// Per-thread register budget shared by the accumulator and operand tiles.
inline constexpr Index kRegisterBudget = 255;

/// Blocking parameters for one multiply.
///
/// (m_s, n_s, k_s) is the fast-memory block of A/C, w_s = k_s * N / M the
/// matching compressed rows and q_s = n_s / L the index columns. Each block
/// is split into m_r x n_r micro-panels, each of which is covered by
/// m_t x n_t register tiles.
struct BlockPlan {
  Index m_s = 0, n_s = 0, k_s = 0, w_s = 0, q_s = 0;
  Index m_t = 0, n_t = 0;
  Index m_r = 0, n_r = 0;
  Index alpha = 1;

  friend bool operator==(const BlockPlan&, const BlockPlan&) = default;
};

enum class SizeClass { small = 0, medium = 1, large = 2 };

const char* to_string(SizeClass cls);

struct TileParams {
  Index m_s, n_s, m_r, n_r, m_t, n_t;
  friend bool operator==(const TileParams&, const TileParams&) = default;
};

SizeClass classify_size(Index m, Index n, Index k);

TileParams table_params(SizeClass cls);

/// Largest multiple of M, at most `k`, with 8 * k_s * (m_s + N * n_s / M) <= capacity.
/// Throws CapacityTooSmall when not even k_s = M fits.
Index max_ks(Index m_s, Index n_s, const NmConfig& config, Index fast_memory_bytes, Index k);

/// Bytes the fast-memory block occupies under the capacity rule, times M to
/// stay integral: 8 * k_s * (M * m_s + N * n_s).
Index capacity_bytes_times_m(const BlockPlan& plan, const NmConfig& config);

bool fits_capacity(const BlockPlan& plan, const NmConfig& config, Index fast_memory_bytes);

BlockPlan select_plan(Index m, Index n, Index k, const NmConfig& config,
                      Index fast_memory_bytes = kDefaultFastMemoryBytes);

/// Structural problems with a plan for the given pattern (capacity excluded).
std::vector<std::string> plan_violations(const BlockPlan& plan, const NmConfig& config);

/// Throws InvalidPlan listing every structural violation.
void check_plan(const BlockPlan& plan, const NmConfig& config);

/// Compute-to-memory-access ratio of an m_t x n_t register tile.
Rational cmar(Index m_t, Index n_t, Index alpha);

std::string plan_to_json(const BlockPlan& plan);
BlockPlan plan_from_json(const std::string& text);

}  // namespace nmspmm
