#pragma once

#include <string>
#include <vector>

#include "nmspmm/common.hpp"
#include "nmspmm/planner.hpp"

namespace nmspmm {

struct HardwareProfile {
  std::string name;
  double peak_flops = 0;     // FP32 FLOP/s
  double mem_bandwidth = 0;  // bytes/s
  Index fast_memory_bytes = 0;
  Index element_bytes = 4;

  /// FLOP per byte at which compute and bandwidth limits meet.
  double machine_balance() const { return peak_flops / mem_bandwidth; }
};

/// Built-in profiles: "a100", "a100-locked", "rtx3090", "rtx4090".
std::vector<HardwareProfile> hardware_presets();

/// Looks up a built-in profile by name; throws UnknownPreset.
HardwareProfile hardware_preset(const std::string& name);

/// Throws InvalidArgument unless every numeric field is positive.
void check_profile(const HardwareProfile& hw);

enum class Regime { compute_bound, memory_bound };

const char* to_string(Regime regime);

struct RooflinePoint {
  double ai_per_element = 0;
  double ai_per_byte = 0;
  double attainable_flops = 0;
  Regime regime = Regime::compute_bound;
};

/// Block-level FLOPs per element moved:
/// 2 m_s n_s w_s / (m_s k_s + w_s n_s + 2 m_s n_s). Index traffic is not counted.
Rational arithmetic_intensity(const BlockPlan& plan);

/// Roofline placement; a tie with the machine balance counts as compute bound.
RooflinePoint roofline_classify(const BlockPlan& plan, const HardwareProfile& hw);

/// Compute-reduction bound M / N.
Rational ideal_speedup(const NmConfig& config);

/// Bytes touched by one block iteration. The A term is m_s * c when packed
/// (c = packed width) and m_s * k_s otherwise; index bytes w_s * q_s are added.
Index footprint(const BlockPlan& plan, bool packed, Index packed_width, Index element_bytes = 4);

}  // namespace nmspmm
