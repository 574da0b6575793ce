#include "nmspmm/perf_model.hpp"

#include <algorithm>

namespace nmspmm {

std::vector<HardwareProfile> hardware_presets() {
  return {
      {"a100", 19.5e12, 1935e9, 196608, 4},
      // Peak under profiler clock locking.
      {"a100-locked", 14.7e12, 1935e9, 196608, 4},
      {"rtx3090", 35.6e12, 936e9, 131072, 4},
      {"rtx4090", 82.6e12, 1008e9, 131072, 4},
  };
}

HardwareProfile hardware_preset(const std::string& name) {
  for (auto& hw : hardware_presets()) {
    if (hw.name == name) return hw;
  }
  throw Error(ErrorCode::UnknownPreset, "no hardware profile named '" + name + "'");
}

void check_profile(const HardwareProfile& hw) {
  if (!(hw.peak_flops > 0) || !(hw.mem_bandwidth > 0) || hw.fast_memory_bytes <= 0 ||
      hw.element_bytes <= 0) {
    throw Error(ErrorCode::InvalidArgument, "hardware profile fields must be positive");
  }
}

const char* to_string(Regime regime) {
  return regime == Regime::compute_bound ? "compute_bound" : "memory_bound";
}

Rational arithmetic_intensity(const BlockPlan& p) {
  const Index flops = 2 * p.m_s * p.n_s * p.w_s;
  const Index moved = p.m_s * p.k_s + p.w_s * p.n_s + 2 * p.m_s * p.n_s;
  if (moved <= 0) throw Error(ErrorCode::InvalidArgument, "plan moves no data");
  return {flops, moved};
}

RooflinePoint roofline_classify(const BlockPlan& plan, const HardwareProfile& hw) {
  check_profile(hw);
  const Rational ai = arithmetic_intensity(plan);
  RooflinePoint pt;
  pt.ai_per_element = ai.value();
  pt.ai_per_byte = pt.ai_per_element / static_cast<double>(hw.element_bytes);
  // ai / element_bytes >= peak / bandwidth, cross-multiplied.
  const long double lhs = static_cast<long double>(ai.num) * hw.mem_bandwidth;
  const long double rhs =
      static_cast<long double>(hw.peak_flops) * static_cast<long double>(ai.den * hw.element_bytes);
  pt.regime = lhs >= rhs ? Regime::compute_bound : Regime::memory_bound;
  pt.attainable_flops = pt.regime == Regime::compute_bound
                            ? hw.peak_flops
                            : std::min(hw.peak_flops, pt.ai_per_byte * hw.mem_bandwidth);
  return pt;
}

Rational ideal_speedup(const NmConfig& config) {
  return {config.m_window(), config.n_keep()};
}

Index footprint(const BlockPlan& p, bool packed, Index packed_width, Index element_bytes) {
  if (packed && (packed_width < 0 || packed_width > p.k_s)) {
    throw Error(ErrorCode::InvalidArgument, "packed width must lie in [0, k_s]");
  }
  const Index a_cols = packed ? packed_width : p.k_s;
  return element_bytes * (p.m_s * a_cols + p.w_s * p.n_s + 2 * p.m_s * p.n_s) + p.w_s * p.q_s;
}

}  // namespace nmspmm
