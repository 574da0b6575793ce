#include "nmspmm/verify.hpp"

#include <cstring>

#include "nmspmm/packing.hpp"
#include "nmspmm/spmm.hpp"

namespace nmspmm {

std::vector<GridCase> oracle_grid() {
  const std::pair<Index, Index> patterns[] = {{2, 4}, {3, 8}, {2, 8}, {1, 8}, {16, 32}};
  const Index lengths[] = {1, 4, 8};
  const Shape shapes[] = {{64, 64, 64}, {128, 256, 128}, {512, 512, 512}};
  std::vector<GridCase> out;
  for (auto [nk, mw] : patterns)
    for (Index len : lengths)
      for (const Shape& s : shapes)
        for (MaskMode mask : {MaskMode::magnitude, MaskMode::random})
          for (std::uint64_t seed : {1u, 2u, 3u}) out.push_back({nk, mw, len, s, mask, seed});
  return out;
}

GridCaseResult run_grid_case(const GridCase& c, int workers) {
  const Workload w{"grid", c.shape.m, c.shape.n, c.shape.k,
                   NmConfig(c.n_keep, c.m_window, c.vector_len), c.seed, c.mask};
  const WorkloadData data = materialize(w);
  const DenseMatrixF oracle = gemm_reference(data.a, decompress(data.b));
  const DenseMatrixF naive = spmm_naive(data.a, data.b);

  const BlockPlan plan = select_plan(w.m, data.b.n_cols, data.b.k_orig, w.config);
  const SpmmOptions opts{false, workers};
  const DenseMatrixF blocked = spmm_blocked(data.a, data.b, plan, opts);
  const DenseMatrixF packed = spmm_packed(data.a, data.b, build_pack_plan(data.b, plan), plan, opts);

  GridCaseResult r{c};
  r.naive_exact = oracle.size() == naive.size() &&
                  std::memcmp(oracle.data(), naive.data(), sizeof(float) * oracle.size()) == 0;
  r.blocked_err = max_relative_error(blocked, oracle);
  r.packed_err = max_relative_error(packed, oracle);
  r.passed = r.naive_exact && r.blocked_err <= kKernelTolerance && r.packed_err <= kKernelTolerance;
  return r;
}

std::vector<GridCaseResult> run_oracle_grid(
    const std::vector<GridCase>& cases, int workers,
    const std::function<void(const GridCaseResult&)>& on_result) {
  std::vector<GridCaseResult> out;
  out.reserve(cases.size());
  for (const auto& c : cases) {
    out.push_back(run_grid_case(c, workers));
    if (on_result) on_result(out.back());
  }
  return out;
}

}  // namespace nmspmm
