// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nmspmm/bench.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/io.hpp"
#include "nmspmm/packing.hpp"
#include "nmspmm/perf_model.hpp"
#include "nmspmm/planner.hpp"
#include "nmspmm/rng.hpp"
#include "nmspmm/spmm.hpp"
#include "nmspmm/verify.hpp"
#include "oracles.hpp"

using namespace nmspmm;

namespace {

// Pinned limits.
constexpr double kGridSecondsLimit = 120.0;
constexpr double kBenchSecondsLimit = 300.0;
constexpr double kMinSpeedupAtHighestSparsity = 1.5;
constexpr int kBenchWorkers = 4;
constexpr int kBenchRepeats = 7;
constexpr Index kBenchDim = 2048;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool bit_equal(const DenseMatrixF& x, const DenseMatrixF& y) {
  return x.rows() == y.rows() && x.cols() == y.cols() &&
         std::memcmp(x.data(), y.data(), sizeof(float) * static_cast<std::size_t>(x.size())) == 0;
}

Outcome oracle_grid_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = oracle_grid();
  std::size_t failed = 0;
  double worst = 0;
  std::string first;
  run_oracle_grid(cases, 0, [&](const GridCaseResult& r) {
    worst = std::max({worst, r.blocked_err, r.packed_err});
    if (!r.passed && failed++ == 0) {
      first = std::to_string(r.grid.n_keep) + ":" + std::to_string(r.grid.m_window) + " L=" +
              std::to_string(r.grid.vector_len);
    }
  });
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && cases.size() == 270 && secs < kGridSecondsLimit;
  std::ostringstream d;
  d << cases.size() - failed << "/" << cases.size() << " cases, worst blocked/packed err " << worst
    << ", " << secs << " s (limit " << kGridSecondsLimit << ")";
  if (failed) d << ", first failure " << first;
  o.detail = d.str();
  return o;
}

Outcome format_roundtrip() {
  Rng rng(2024);
  const std::pair<Index, Index> patterns[] = {{1, 2}, {2, 4}, {3, 8}, {2, 8}, {1, 8},
                                              {16, 32}, {4, 4}, {5, 7}};
  int identity_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto [nk, mw] = patterns[rng.below(std::size(patterns))];
    const Index len = 1 + static_cast<Index>(rng.below(8));
    const NmConfig config(nk, mw, len);
    const Index k = mw * (1 + static_cast<Index>(rng.below(6)));
    const Index n = len * (1 + static_cast<Index>(rng.below(6)));
    DenseMatrixF b = random_matrix<float>(k, n, rng);
    const DenseMatrixF x = trial % 2 ? prune_magnitude(b, config) : prune_random(b, config, rng);
    identity_ok += decompress(compress(x, config)) == x;
  }

  bool files_ok = true;
  {
    const DenseMatrixF d = random_matrix<float>(33, 17, rng);
    std::stringstream s;
    write_dense(s, d);
    files_ok &= bit_equal(read_dense(s), d);
  }
  const NmConfig config(1, 8, 4);
  const NmCompressedF bc =
      compress(prune_random(random_matrix<float>(8 * 64, 4 * 48, rng), config, rng), config);
  std::string nms_bytes;
  {
    std::stringstream s;
    write_compressed(s, bc);
    nms_bytes = s.str();
    const NmCompressedF back = read_compressed(s);
    files_ok &= back.indices == bc.indices && bit_equal(back.values, bc.values);
    std::stringstream again;
    write_compressed(again, back);
    files_ok &= again.str() == nms_bytes;
  }
  {
    const PackPlan pack = build_pack_plan(bc, select_plan(64, bc.n_cols, bc.k_orig, config, 32768));
    std::stringstream s;
    write_pack_plan(s, pack);
    const std::string bytes = s.str();
    const PackPlan back = read_pack_plan(s);
    std::stringstream again;
    write_pack_plan(again, back);
    files_ok &= again.str() == bytes;
  }
  Outcome o;
  o.pass = identity_ok == 1000 && files_ok;
  o.detail = std::to_string(identity_ok) + "/1000 roundtrips exact; .nmdm/.nms/.nmp files " +
             (files_ok ? "bit-exact" : "MISMATCH");
  return o;
}

Outcome pruning_oracle() {
  Rng rng(77);
  int agree = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Index mw = 1 + static_cast<Index>(rng.below(8));
    const Index nk = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(mw)));
    const Index len = 1 + static_cast<Index>(rng.below(4));
    const DenseMatrixF win = oracle::small_int_matrix(mw, len, rng);
    agree += oracle::kept_rows(prune_magnitude(win, NmConfig(nk, mw, len))) ==
             oracle::brute_force_keep(win, nk);
  }
  return {agree == 500, std::to_string(agree) + "/500 windows match exhaustive enumeration"};
}

Outcome planner_fidelity() {
  const TileParams expect[] = {{32, 32, 16, 32, 4, 4}, {32, 64, 32, 32, 8, 4}, {64, 128, 64, 32, 8, 8}};
  int values_ok = 0;
  const SizeClass classes[] = {SizeClass::small, SizeClass::medium, SizeClass::large};
  for (int c = 0; c < 3; ++c) {
    const TileParams t = table_params(classes[c]);
    const Index got[] = {t.m_s, t.n_s, t.m_r, t.n_r, t.m_t, t.n_t};
    const Index want[] = {expect[c].m_s, expect[c].n_s, expect[c].m_r,
                          expect[c].n_r, expect[c].m_t, expect[c].n_t};
    for (int i = 0; i < 6; ++i) values_ok += got[i] == want[i];
  }
  int plans = 0, plans_ok = 0;
  const std::pair<Index, Index> patterns[] = {{2, 4}, {3, 8}, {1, 4}, {1, 8}, {2, 8}, {16, 32}};
  for (auto [nk, mw] : patterns) {
    for (Index len : {1, 4, 8}) {
      for (Index m : {256, 512, 1024, 2048, 4096}) {
        for (Index n : {512, 1024, 2048, 4096, 11008}) {
          for (Index k : {512, 4096, 13824}) {
            for (Index cap : {65536, 131072, 196608}) {
              const auto [k_pad, n_pad] = pad_dims(k, n, NmConfig(nk, mw, len));
              const BlockPlan p = select_plan(m, n_pad, k_pad, NmConfig(nk, mw, len), cap);
              ++plans;
              // Capacity rule by substitution, scaled by M: 8 k_s (M m_s + N n_s) <= cap * M.
              plans_ok += 8 * p.k_s * (mw * p.m_s + nk * p.n_s) <= cap * mw &&
                          p.m_t + p.n_t + p.m_t * p.n_t <= 255 && p.k_s % mw == 0 && p.k_s >= mw;
            }
          }
        }
      }
    }
  }
  const Index ks = max_ks(64, 128, NmConfig(1, 4, 4), 196608, 4096);
  Outcome o;
  o.pass = values_ok == 18 && plans_ok == plans && ks == 256;
  o.detail = std::to_string(values_ok) + "/18 table values, " + std::to_string(plans_ok) + "/" +
             std::to_string(plans) + " plans within capacity and register budget, max_ks = " +
             std::to_string(ks);
  return o;
}

BlockPlan large(Index k_s, Index w_s) { return {64, 128, k_s, w_s, 32, 8, 8, 64, 32, 1}; }

Outcome ai_model() {
  const Rational half = arithmetic_intensity(large(192, 96));
  const Rational quarter = arithmetic_intensity(large(256, 64));
  const bool exact = half == Rational(192, 5) && quarter == Rational(128, 5);
  // Fixed (m_s, n_s, k_s) = (64, 128, 256); w_s for 50, 62.5, 75, 87.5 %.
  const Index ws[] = {128, 96, 64, 32};
  bool decreasing = true;
  std::string seq;
  for (int i = 0; i < 4; ++i) {
    const Rational ai = arithmetic_intensity(large(256, ws[i]));
    seq += (i ? " > " : "") + std::to_string(ai.num) + "/" + std::to_string(ai.den);
    if (i > 0) decreasing &= arithmetic_intensity(large(256, ws[i - 1])) > ai;
  }
  Outcome o;
  o.pass = exact && decreasing;
  o.detail = "AI(50%) = " + std::to_string(half.num) + "/" + std::to_string(half.den) +
             ", AI(75%) = " + std::to_string(quarter.num) + "/" + std::to_string(quarter.den) +
             "; sweep " + seq;
  return o;
}

Outcome regime_transition() {
  const HardwareProfile hw = hardware_preset("a100-locked");
  const NmConfig configs[] = {NmConfig(2, 4, 4), NmConfig(3, 8, 4), NmConfig(1, 4, 4), NmConfig(1, 8, 4)};
  const Regime expect[] = {Regime::compute_bound, Regime::compute_bound, Regime::memory_bound,
                           Regime::memory_bound};
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 4; ++i) {
    const BlockPlan p = select_plan(4096, 4096, 4096, configs[i], hw.fast_memory_bytes);
    const RooflinePoint pt = roofline_classify(p, hw);
    ok &= pt.regime == expect[i] && p.m_s == 64 && p.n_s == 128;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%lld:%lld AI %.2f %s", i ? ", " : "",
                  static_cast<long long>(configs[i].n_keep()),
                  static_cast<long long>(configs[i].m_window()), pt.ai_per_element, to_string(pt.regime));
    detail += buf;
  }
  return {ok, detail};
}

Outcome packing_properties() {
  Rng rng(31337);
  const std::pair<Index, Index> patterns[] = {{2, 4}, {3, 8}, {1, 4}, {1, 8}, {2, 8}, {16, 32}};
  int blocks = 0, mapping_ok = 0, footprint_ok = 0, shared_ok = 0, shared_total = 0;
  while (blocks < 200) {
    const auto [nk, mw] = patterns[rng.below(std::size(patterns))];
    const Index len = Index{1} << rng.below(4);
    const NmConfig config(nk, mw, len);
    const bool shared = rng.below(2) == 0;
    const Index k = mw * (8 + static_cast<Index>(rng.below(40)));
    const Index n = len * (4 + static_cast<Index>(rng.below(40)));
    const BlockPlan plan = select_plan(64, n, k, config, 16384 + 16384 * static_cast<Index>(rng.below(8)));
    NmCompressedF bc = compress(prune_random(random_matrix<float>(k, n, rng), config, rng), config);
    if (shared) {
      // Every column group of a window repeats the pattern of group 0.
      for (Index u = 0; u < bc.w(); ++u)
        for (Index g = 1; g < bc.q(); ++g) bc.indices(u, g) = bc.indices(u, 0);
    }
    const PackPlan pack = build_pack_plan(bc, plan);
    for (Index panel = 0; panel < pack.panels; ++panel) {
      for (Index bj = 0; bj < pack.block_cols; ++bj) {
        const PackBlock& blk = pack.block(panel, bj);
        bool ok = true;
        for (std::size_t t = 1; t < blk.col_info.size(); ++t) ok &= blk.col_info[t] > blk.col_info[t - 1];
        const Index u0 = pack.panel_rows_begin(panel), g0 = pack.group_begin(bj);
        for (Index u = u0; u < pack.panel_rows_end(panel); ++u) {
          for (Index g = g0; g < pack.group_end(bj); ++g) {
            const Index r = blk.remapped(u - u0, g - g0);
            ok &= r < blk.width() &&
                  static_cast<Index>(blk.col_info[static_cast<std::size_t>(r)]) ==
                      u / nk * mw + bc.indices(u, g);
          }
        }
        mapping_ok += ok;
        footprint_ok += footprint(plan, true, blk.width()) <= footprint(plan, false, 0);
        if (shared) {
          ++shared_total;
          shared_ok += blk.width() == pack.panel_rows_end(panel) - u0;
        }
        ++blocks;
      }
    }
  }
  Outcome o;
  o.pass = mapping_ok == blocks && footprint_ok == blocks && shared_ok == shared_total && shared_total > 0;
  o.detail = std::to_string(mapping_ok) + "/" + std::to_string(blocks) + " blocks map exactly, " +
             std::to_string(footprint_ok) + "/" + std::to_string(blocks) + " footprint packed <= unpacked, " +
             std::to_string(shared_ok) + "/" + std::to_string(shared_total) + " shared-pattern blocks at c = w_s";
  return o;
}

Outcome benchmark_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const NmConfig configs[] = {NmConfig(2, 4, 4), NmConfig(3, 8, 4), NmConfig(1, 4, 4), NmConfig(1, 8, 4)};
  BenchOptions opts;
  opts.repeats = kBenchRepeats;
  opts.workers = kBenchWorkers;
  std::vector<double> speedups;
  std::string detail;
  for (const auto& config : configs) {
    const KernelKind kernel =
        choose_path(config) == LoadPath::packed ? KernelKind::packed : KernelKind::blocked;
    const auto w = generate_workloads(WorkloadPreset::custom, {config}, 1, MaskMode::random,
                                      Shape{kBenchDim, kBenchDim, kBenchDim});
    const auto records = run_bench(w, {kernel}, opts);
    speedups.push_back(records.front().speedup_vs_dense);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%.3g %s %.3fx", detail.empty() ? "" : ", ", config.sparsity(),
                  to_string(kernel), speedups.back());
    detail += buf;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < speedups.size(); ++i) monotone &= speedups[i] >= speedups[i - 1];
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = monotone && speedups.back() >= kMinSpeedupAtHighestSparsity && secs < kBenchSecondsLimit;
  char tail[128];
  std::snprintf(tail, sizeof tail, "; %s, %d workers, %.0f s (limit %.0f)",
                monotone ? "monotone" : "NOT monotone", kBenchWorkers, secs, kBenchSecondsLimit);
  o.detail = detail + tail;
  return o;
}

Outcome determinism() {
  const auto workloads = generate_workloads(WorkloadPreset::custom,
                                            {NmConfig(2, 4, 4), NmConfig(3, 8, 4), NmConfig(1, 8, 8)},
                                            42, MaskMode::random, Shape{160, 192, 256});
  BenchOptions opts;
  opts.check = true;
  const auto kernels = std::vector<KernelKind>{KernelKind::blocked, KernelKind::packed};
  const auto first = run_bench(workloads, kernels, opts);
  const auto second = run_bench(workloads, kernels, opts);
  bool same_runs = first.size() == second.size();
  for (std::size_t i = 0; same_runs && i < first.size(); ++i) {
    same_runs = first[i].data_digest == second[i].data_digest && first[i].verified == second[i].verified &&
                first[i].max_rel_err == second[i].max_rel_err;
  }

  bool same_bits = true;
  for (const auto& w : workloads) {
    const WorkloadData d = materialize(w);
    const BlockPlan plan = select_plan(w.m, d.b.n_cols, d.b.k_orig, w.config);
    const PackPlan pack = build_pack_plan(d.b, plan);
    const DenseMatrixF b1 = spmm_blocked(d.a, d.b, plan, SpmmOptions{false, 1});
    const DenseMatrixF p1 = spmm_packed(d.a, d.b, pack, plan, SpmmOptions{false, 1});
    for (int workers : {2, 4}) {
      same_bits &= bit_equal(spmm_blocked(d.a, d.b, plan, SpmmOptions{false, workers}), b1);
      same_bits &= bit_equal(spmm_packed(d.a, d.b, pack, plan, SpmmOptions{false, workers}), p1);
    }
  }
  Outcome o;
  o.pass = same_runs && same_bits;
  o.detail = std::string("two bench runs ") + (same_runs ? "identical" : "DIFFER") +
             " in data digests and verification; blocked/packed " +
             (same_bits ? "bit-identical" : "DIFFER") + " across 1, 2, 4 workers";
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"oracle equivalence grid", oracle_grid_equivalence},
      {"format roundtrip", format_roundtrip},
      {"pruning oracle", pruning_oracle},
      {"planner fidelity", planner_fidelity},
      {"arithmetic intensity model", ai_model},
      {"regime transition", regime_transition},
      {"packing properties", packing_properties},
      {"benchmark trend", benchmark_trend},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
