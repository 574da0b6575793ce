#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmspmm/common.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/perf_model.hpp"
#include "nmspmm/planner.hpp"

namespace nmspmm {

enum class MaskMode { magnitude, random };
enum class WorkloadPreset { llama_grid, table_af, custom };
enum class KernelKind { dense_ref, naive, blocked, packed };

const char* to_string(MaskMode mode);
const char* to_string(WorkloadPreset preset);
const char* to_string(KernelKind kernel);

MaskMode parse_mask_mode(const std::string& text);
/// Throws UnknownPreset.
WorkloadPreset parse_preset(const std::string& text);
KernelKind parse_kernel(const std::string& text);

/// "N:M" or a sparsity fraction; fractions map to the smallest window from
/// {4, 8, 16, ..., 256} (then any M) that represents them exactly.
NmConfig parse_config(const std::string& text, Index vector_len);

struct Shape {
  Index m, n, k;
};

/// The twenty (n, k) pairs of the llama grid: projection shapes of four
/// Llama model widths. Representative shapes, not a published list.
const std::vector<std::pair<Index, Index>>& llama_nk_tuples();

/// The six labeled evaluation shapes A..F.
const std::vector<std::pair<std::string, Shape>>& table_af_shapes();

struct Workload {
  std::string id;
  Index m = 0, n = 0, k = 0;
  NmConfig config{1, 1, 1};
  std::uint64_t seed = 0;
  MaskMode mask_mode = MaskMode::random;
};

/// One workload per (shape, config). `custom` uses `custom_shape`.
std::vector<Workload> generate_workloads(WorkloadPreset preset, const std::vector<NmConfig>& configs,
                                         std::uint64_t seed, MaskMode mask_mode = MaskMode::random,
                                         std::optional<Shape> custom_shape = std::nullopt);

/// Deterministic operands of a workload: A is m x k_pad (zero columns past k),
/// B is pruned to the workload's pattern and compressed.
struct WorkloadData {
  DenseMatrixF a;
  NmCompressedF b;
};

WorkloadData materialize(const Workload& w);

/// FNV-1a over the operand bytes, for reproducibility checks.
std::uint64_t digest(const WorkloadData& data);

struct BenchOptions {
  int repeats = 3;
  int workers = 0;
  bool check = false;
  Index fast_memory_bytes = kDefaultFastMemoryBytes;
};

struct BenchRecord {
  std::string workload_id;
  Index m = 0, n = 0, k = 0;
  NmConfig config{1, 1, 1};
  KernelKind kernel = KernelKind::dense_ref;
  double wall_time_s = 0;
  double gflops = 0;
  double speedup_vs_dense = 0;
  std::optional<double> max_rel_err;
  bool verified = true;
  std::uint64_t data_digest = 0;
};

/// Times each kernel on each workload: one warm-up, then the median of
/// `repeats` runs. The dense blocked baseline is always timed for speedups.
/// Sparse kernels count 2*m*n*w FLOPs, the dense baseline 2*m*n*k.
std::vector<BenchRecord> run_bench(const std::vector<Workload>& workloads,
                                   const std::vector<KernelKind>& kernels,
                                   const BenchOptions& opts);

/// Largest check error across records, or nullopt if none were checked.
std::optional<double> worst_error(const std::vector<BenchRecord>& records);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(const std::string& text);

inline constexpr const char* kCsvHeader =
    "workload_id,m,n,k,N,M,L,sparsity,kernel,wall_time_s,gflops,speedup_vs_dense,max_rel_err";

std::string format_report(const std::vector<BenchRecord>& records, ReportFormat format);

/// Writes the report; throws InvalidArgument for no records and IoError on failure.
void emit_report(const std::vector<BenchRecord>& records, ReportFormat format,
                 const std::string& path);

}  // namespace nmspmm
