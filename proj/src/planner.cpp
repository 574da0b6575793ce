#include "nmspmm/planner.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace nmspmm {

const char* to_string(SizeClass cls) {
  switch (cls) {
    case SizeClass::small: return "small";
    case SizeClass::medium: return "medium";
    case SizeClass::large: return "large";
  }
  return "unknown";
}

SizeClass classify_size(Index m, Index n, Index k) {
  if (m < 1 || n < 1 || k < 1) throw Error(ErrorCode::InvalidArgument, "dimensions must be >= 1");
  if (m <= 512 && n <= 1024) return SizeClass::small;
  if (m >= 2048 || n >= 4096) return SizeClass::large;
  return SizeClass::medium;
}

TileParams table_params(SizeClass cls) {
  switch (cls) {
    case SizeClass::small: return {32, 32, 16, 32, 4, 4};
    case SizeClass::medium: return {32, 64, 32, 32, 8, 4};
    case SizeClass::large: return {64, 128, 64, 32, 8, 8};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown size class");
}

Index max_ks(Index m_s, Index n_s, const NmConfig& config, Index fast_memory_bytes, Index k) {
  if (m_s < 1 || n_s < 1) throw Error(ErrorCode::InvalidArgument, "m_s and n_s must be >= 1");
  const Index m = config.m_window();
  const Index per_row = 8 * (m * m_s + config.n_keep() * n_s);
  const Index bound = fast_memory_bytes * m / per_row;
  const Index ks = std::min(bound, k) / m * m;
  if (ks < m) {
    throw Error(ErrorCode::CapacityTooSmall,
                std::to_string(fast_memory_bytes) + " bytes cannot hold k_s = M = " +
                    std::to_string(m) + " for m_s=" + std::to_string(m_s) +
                    ", n_s=" + std::to_string(n_s));
  }
  return ks;
}

Index capacity_bytes_times_m(const BlockPlan& plan, const NmConfig& config) {
  return 8 * plan.k_s * (config.m_window() * plan.m_s + config.n_keep() * plan.n_s);
}

bool fits_capacity(const BlockPlan& plan, const NmConfig& config, Index fast_memory_bytes) {
  return capacity_bytes_times_m(plan, config) <= fast_memory_bytes * config.m_window();
}

BlockPlan select_plan(Index m, Index n, Index k, const NmConfig& config,
                      Index fast_memory_bytes) {
  if (k % config.m_window() != 0 || n % config.vector_len() != 0) {
    throw Error(ErrorCode::InvalidArgument, "select_plan expects padded dimensions");
  }
  const TileParams t = table_params(classify_size(m, n, k));
  BlockPlan plan;
  plan.m_s = t.m_s;
  // n_s must hold whole column groups; widen to a common multiple when L does not divide it.
  plan.n_s = std::lcm(t.n_s, config.vector_len());
  plan.m_r = t.m_r;
  plan.n_r = t.n_r;
  plan.m_t = t.m_t;
  plan.n_t = t.n_t;
  plan.k_s = max_ks(plan.m_s, plan.n_s, config, fast_memory_bytes, k);
  plan.w_s = plan.k_s / config.m_window() * config.n_keep();
  plan.q_s = plan.n_s / config.vector_len();
  plan.alpha = 1;
  return plan;
}

std::vector<std::string> plan_violations(const BlockPlan& p, const NmConfig& config) {
  std::vector<std::string> out;
  if (p.m_s < 1 || p.n_s < 1 || p.k_s < 1 || p.m_t < 1 || p.n_t < 1 || p.m_r < 1 || p.n_r < 1 ||
      p.alpha < 1) {
    out.emplace_back("all plan parameters must be >= 1");
    return out;
  }
  const Index m = config.m_window();
  if (p.k_s % m != 0) out.emplace_back("k_s is not a multiple of M");
  if (p.w_s * m != p.k_s * config.n_keep()) out.emplace_back("w_s != k_s * N / M");
  if (p.n_s % config.vector_len() != 0 || p.q_s * config.vector_len() != p.n_s) {
    out.emplace_back("q_s != n_s / L");
  }
  if (p.m_s % 32 != 0) out.emplace_back("m_s is not a multiple of 32");
  if (p.n_s % 32 != 0) out.emplace_back("n_s is not a multiple of 32");
  if (p.m_t + p.n_t + p.m_t * p.n_t > kRegisterBudget) {
    out.emplace_back("m_t + n_t + m_t * n_t exceeds the register budget");
  }
  if (p.m_s % p.m_r != 0 || p.m_r % p.m_t != 0) {
    out.emplace_back("m_s must be divisible by m_r and m_r by m_t");
  }
  if (p.n_s % p.n_r != 0 || p.n_r % p.n_t != 0) {
    out.emplace_back("n_s must be divisible by n_r and n_r by n_t");
  }
  return out;
}

void check_plan(const BlockPlan& plan, const NmConfig& config) {
  const auto problems = plan_violations(plan, config);
  if (problems.empty()) return;
  std::string msg;
  for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
  throw Error(ErrorCode::InvalidPlan, msg);
}

Rational cmar(Index m_t, Index n_t, Index alpha) {
  if (m_t < 1 || n_t < 1 || alpha < 1) throw Error(ErrorCode::InvalidArgument, "cmar needs >= 1");
  return {m_t * n_t, alpha * (m_t + n_t)};
}

std::string plan_to_json(const BlockPlan& p) {
  nlohmann::ordered_json j;
  j["m_s"] = p.m_s;
  j["n_s"] = p.n_s;
  j["k_s"] = p.k_s;
  j["w_s"] = p.w_s;
  j["q_s"] = p.q_s;
  j["m_t"] = p.m_t;
  j["n_t"] = p.n_t;
  j["m_r"] = p.m_r;
  j["n_r"] = p.n_r;
  j["alpha"] = p.alpha;
  return j.dump(2);
}

BlockPlan plan_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BlockPlan p;
    p.m_s = j.at("m_s").get<Index>();
    p.n_s = j.at("n_s").get<Index>();
    p.k_s = j.at("k_s").get<Index>();
    p.w_s = j.at("w_s").get<Index>();
    p.q_s = j.at("q_s").get<Index>();
    p.m_t = j.at("m_t").get<Index>();
    p.n_t = j.at("n_t").get<Index>();
    p.m_r = j.at("m_r").get<Index>();
    p.n_r = j.at("n_r").get<Index>();
    p.alpha = j.value("alpha", Index{1});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("plan json: ") + e.what());
  }
}

}  // namespace nmspmm
