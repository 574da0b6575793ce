#include "nmspmm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nmspmm/packing.hpp"
#include "nmspmm/rng.hpp"
#include "nmspmm/spmm.hpp"

namespace nmspmm {

const char* to_string(MaskMode mode) { return mode == MaskMode::random ? "random" : "magnitude"; }

const char* to_string(WorkloadPreset preset) {
  switch (preset) {
    case WorkloadPreset::llama_grid: return "llama_grid";
    case WorkloadPreset::table_af: return "table_af";
    case WorkloadPreset::custom: return "custom";
  }
  return "unknown";
}

const char* to_string(KernelKind kernel) {
  switch (kernel) {
    case KernelKind::dense_ref: return "dense_ref";
    case KernelKind::naive: return "naive";
    case KernelKind::blocked: return "blocked";
    case KernelKind::packed: return "packed";
  }
  return "unknown";
}

MaskMode parse_mask_mode(const std::string& text) {
  if (text == "random") return MaskMode::random;
  if (text == "magnitude") return MaskMode::magnitude;
  throw Error(ErrorCode::InvalidArgument, "unknown mask mode '" + text + "'");
}

WorkloadPreset parse_preset(const std::string& text) {
  if (text == "llama_grid") return WorkloadPreset::llama_grid;
  if (text == "table_af") return WorkloadPreset::table_af;
  if (text == "custom") return WorkloadPreset::custom;
  throw Error(ErrorCode::UnknownPreset, "unknown preset '" + text + "'");
}

KernelKind parse_kernel(const std::string& text) {
  if (text == "dense_ref") return KernelKind::dense_ref;
  if (text == "naive") return KernelKind::naive;
  if (text == "blocked") return KernelKind::blocked;
  if (text == "packed") return KernelKind::packed;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + text + "'");
}

NmConfig parse_config(const std::string& text, Index vector_len) {
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    try {
      return NmConfig(std::stoll(text.substr(0, colon)), std::stoll(text.substr(colon + 1)),
                      vector_len);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidArgument, "bad N:M '" + text + "'");
    }
  }
  double s = 0;
  try {
    std::size_t used = 0;
    s = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "bad sparsity '" + text + "'");
  }
  if (!(s >= 0.0 && s < 1.0)) throw Error(ErrorCode::InvalidArgument, "sparsity must be in [0, 1)");
  std::vector<Index> windows = {4, 8, 16, 32, 64, 128, 256};
  for (Index m = 1; m <= NmConfig::kMaxWindow; ++m) windows.push_back(m);
  for (Index m : windows) {
    const double keep = (1.0 - s) * static_cast<double>(m);
    const auto n = static_cast<Index>(std::llround(keep));
    if (n >= 1 && std::abs(keep - static_cast<double>(n)) < 1e-9) return NmConfig(n, m, vector_len);
  }
  throw Error(ErrorCode::InvalidArgument, "no N:M with M <= 256 gives sparsity " + text);
}

const std::vector<std::pair<Index, Index>>& llama_nk_tuples() {
  // For each hidden size h and MLP width f: qkv/o (h,h), gate/up (f,h),
  // down (h,f), fused qkv (3h,h), fused gate+up (2f,h).
  static const std::vector<std::pair<Index, Index>> tuples = [] {
    std::vector<std::pair<Index, Index>> out;
    const std::pair<Index, Index> widths[] = {{4096, 11008}, {5120, 13824}, {6656, 17920},
                                              {8192, 22016}};
    for (auto [h, f] : widths) {
      out.emplace_back(h, h);
      out.emplace_back(f, h);
      out.emplace_back(h, f);
      out.emplace_back(3 * h, h);
      out.emplace_back(2 * f, h);
    }
    return out;
  }();
  return tuples;
}

const std::vector<std::pair<std::string, Shape>>& table_af_shapes() {
  static const std::vector<std::pair<std::string, Shape>> shapes = {
      {"A", {512, 512, 512}},    {"B", {512, 1024, 1024}},  {"C", {512, 2048, 2048}},
      {"D", {1024, 2048, 2048}}, {"E", {2048, 4096, 4096}}, {"F", {4096, 4096, 4096}},
  };
  return shapes;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<Workload> generate_workloads(WorkloadPreset preset, const std::vector<NmConfig>& configs,
                                         std::uint64_t seed, MaskMode mask_mode,
                                         std::optional<Shape> custom_shape) {
  std::vector<std::pair<std::string, Shape>> shapes;
  switch (preset) {
    case WorkloadPreset::llama_grid:
      for (Index m : {256, 512, 1024, 2048, 4096}) {
        for (auto [n, k] : llama_nk_tuples()) {
          shapes.push_back({"llama-m" + std::to_string(m) + "-n" + std::to_string(n) + "-k" +
                                std::to_string(k),
                            {m, n, k}});
        }
      }
      break;
    case WorkloadPreset::table_af:
      shapes = table_af_shapes();
      break;
    case WorkloadPreset::custom:
      if (!custom_shape) throw Error(ErrorCode::InvalidArgument, "custom preset needs m, n, k");
      if (custom_shape->m < 1 || custom_shape->n < 1 || custom_shape->k < 1) {
        throw Error(ErrorCode::InvalidArgument, "dimensions must be >= 1");
      }
      shapes.push_back({"custom-m" + std::to_string(custom_shape->m) + "-n" +
                            std::to_string(custom_shape->n) + "-k" + std::to_string(custom_shape->k),
                        *custom_shape});
      break;
  }
  std::vector<Workload> out;
  for (const auto& config : configs) {
    for (std::size_t s = 0; s < shapes.size(); ++s) {
      const auto& [id, shape] = shapes[s];
      out.push_back({id, shape.m, shape.n, shape.k, config, mix(seed ^ mix(s)), mask_mode});
    }
  }
  return out;
}

WorkloadData materialize(const Workload& w) {
  const auto [k_pad, n_pad] = pad_dims(w.k, w.n, w.config);
  Rng rng(w.seed);
  DenseMatrixF a = zero_pad(random_matrix<float>(w.m, w.k, rng), w.m, k_pad);
  const DenseMatrixF b = random_matrix<float>(w.k, w.n, rng);
  DenseMatrixF pruned;
  if (w.mask_mode == MaskMode::magnitude) {
    pruned = prune_magnitude(b, w.config);
  } else {
    const auto cfg = static_cast<std::uint64_t>(w.config.n_keep() << 20 |
                                                w.config.m_window() << 8 | w.config.vector_len());
    Rng mask_rng(mix(w.seed ^ mix(cfg)));
    pruned = prune_random(b, w.config, mask_rng);
  }
  return {std::move(a), compress(pruned, w.config)};
}

std::uint64_t digest(const WorkloadData& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(data.a.data(), sizeof(float) * static_cast<std::size_t>(data.a.size()));
  feed(data.b.values.data(), sizeof(float) * static_cast<std::size_t>(data.b.values.size()));
  feed(data.b.indices.data(), static_cast<std::size_t>(data.b.indices.size()));
  return h;
}

namespace {

double median(std::vector<double> times) {
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

}  // namespace

std::vector<BenchRecord> run_bench(const std::vector<Workload>& workloads,
                                   const std::vector<KernelKind>& kernels,
                                   const BenchOptions& opts) {
  if (opts.repeats < 3) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 3");
  if (kernels.empty()) throw Error(ErrorCode::InvalidArgument, "no kernels selected");
  std::vector<BenchRecord> records;
  for (const auto& w : workloads) {
    const WorkloadData data = materialize(w);
    const Index k_pad = data.b.k_orig, n_pad = data.b.n_cols;
    const BlockPlan plan = select_plan(w.m, n_pad, k_pad, w.config, opts.fast_memory_bytes);
    const BlockPlan dense_plan = select_dense_plan(w.m, n_pad, k_pad, opts.fast_memory_bytes);
    const DenseMatrixF b_dense = decompress(data.b);
    std::optional<PackPlan> pack;
    if (std::find(kernels.begin(), kernels.end(), KernelKind::packed) != kernels.end()) {
      pack = build_pack_plan(data.b, plan);
    }
    std::optional<DenseMatrixF> reference;
    if (opts.check) reference = spmm_naive(data.a, data.b);
    const SpmmOptions spmm_opts{false, opts.workers};
    const std::uint64_t data_digest = digest(data);

    auto run = [&](KernelKind kind) -> DenseMatrixF {
      switch (kind) {
        case KernelKind::dense_ref: return gemm_blocked(data.a, b_dense, dense_plan, opts.workers);
        case KernelKind::naive: return spmm_naive(data.a, data.b, spmm_opts);
        case KernelKind::blocked: return spmm_blocked(data.a, data.b, plan, spmm_opts);
        case KernelKind::packed: return spmm_packed(data.a, data.b, *pack, plan, spmm_opts);
      }
      throw Error(ErrorCode::InvalidArgument, "unknown kernel");
    };

    // One warm-up each, then repeats round-robin over the kernels so slow
    // drifts in machine speed hit every kernel alike.
    std::vector<KernelKind> timed{KernelKind::dense_ref};
    for (KernelKind kind : kernels)
      if (kind != KernelKind::dense_ref) timed.push_back(kind);
    std::vector<DenseMatrixF> outputs;
    for (KernelKind kind : timed) outputs.push_back(run(kind));
    std::vector<std::vector<double>> times(timed.size());
    for (int r = 0; r < opts.repeats; ++r) {
      for (std::size_t i = 0; i < timed.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        outputs[i] = run(timed[i]);
        const auto t1 = std::chrono::steady_clock::now();
        times[i].push_back(std::chrono::duration<double>(t1 - t0).count());
      }
    }
    const double dense_time = median(times[0]);
    for (KernelKind kind : kernels) {
      const std::size_t slot =
          static_cast<std::size_t>(std::find(timed.begin(), timed.end(), kind) - timed.begin());
      const double t = median(times[slot]);
      const DenseMatrixF& out = outputs[slot];
      BenchRecord rec;
      rec.workload_id = w.id;
      rec.m = w.m;
      rec.n = w.n;
      rec.k = w.k;
      rec.config = w.config;
      rec.kernel = kind;
      rec.wall_time_s = t;
      const double inner = kind == KernelKind::dense_ref ? static_cast<double>(k_pad)
                                                         : static_cast<double>(data.b.w());
      rec.gflops = 2.0 * static_cast<double>(w.m) * static_cast<double>(n_pad) * inner / t / 1e9;
      rec.speedup_vs_dense = dense_time / t;
      rec.data_digest = data_digest;
      if (reference) {
        rec.max_rel_err = max_relative_error(out, *reference);
        rec.verified = *rec.max_rel_err <= kKernelTolerance;
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::optional<double> worst_error(const std::vector<BenchRecord>& records) {
  std::optional<double> worst;
  for (const auto& r : records) {
    if (r.max_rel_err) worst = std::max(worst.value_or(0.0), *r.max_rel_err);
  }
  return worst;
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + text + "'");
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string format_report(const std::vector<BenchRecord>& records, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : records) {
      out += r.workload_id + "," + std::to_string(r.m) + "," + std::to_string(r.n) + "," +
             std::to_string(r.k) + "," + std::to_string(r.config.n_keep()) + "," +
             std::to_string(r.config.m_window()) + "," + std::to_string(r.config.vector_len()) +
             "," + num(r.config.sparsity()) + "," + to_string(r.kernel) + "," +
             num(r.wall_time_s) + "," + num(r.gflops) + "," + num(r.speedup_vs_dense) + "," +
             (r.max_rel_err ? num(*r.max_rel_err) : "") + "\n";
    }
    return out;
  }
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["workload_id"] = r.workload_id;
    j["m"] = r.m;
    j["n"] = r.n;
    j["k"] = r.k;
    j["N"] = r.config.n_keep();
    j["M"] = r.config.m_window();
    j["L"] = r.config.vector_len();
    j["sparsity"] = r.config.sparsity();
    j["kernel"] = to_string(r.kernel);
    j["wall_time_s"] = r.wall_time_s;
    j["gflops"] = r.gflops;
    j["speedup_vs_dense"] = r.speedup_vs_dense;
    j["max_rel_err"] = r.max_rel_err ? nlohmann::ordered_json(*r.max_rel_err) : nullptr;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void emit_report(const std::vector<BenchRecord>& records, ReportFormat format,
                 const std::string& path) {
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "no records to report");
  const std::string text = format_report(records, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

}  // namespace nmspmm
