// nmspmm: prune, compress, multiply, benchmark and model N:M sparse matrix products.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmspmm/bench.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/io.hpp"
#include "nmspmm/packing.hpp"
#include "nmspmm/perf_model.hpp"
#include "nmspmm/planner.hpp"
#include "nmspmm/rng.hpp"
#include "nmspmm/spmm.hpp"
#include "nmspmm/verify.hpp"

namespace {

using namespace nmspmm;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << text;
}

BlockPlan plan_for(const std::string& plan_path, Index m, Index n, Index k, const NmConfig& config,
                   Index fast_memory) {
  if (!plan_path.empty()) {
    BlockPlan plan = plan_from_json(read_text(plan_path));
    check_plan(plan, config);
    return plan;
  }
  return select_plan(m, n, k, config, fast_memory);
}

struct GenArgs {
  Index rows = 0, cols = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen(const GenArgs& a) {
  Rng rng(a.seed);
  save_dense(a.out, random_matrix<float>(a.rows, a.cols, rng));
  return 0;
}

struct PruneArgs {
  std::string in, out;
  Index n = 2, m = 4, vlen = 4;
  std::string criterion = "magnitude";
  std::uint64_t seed = 1;
};

int run_prune(const PruneArgs& a) {
  const NmConfig config(a.n, a.m, a.vlen);
  const DenseMatrixF b = load_dense(a.in);
  DenseMatrixF pruned;
  if (parse_mask_mode(a.criterion) == MaskMode::magnitude) {
    pruned = prune_magnitude(b, config);
  } else {
    Rng rng(a.seed);
    pruned = prune_random(b, config, rng);
  }
  const NmCompressedF bc = compress(pruned, config);
  save_compressed(a.out, bc);
  std::cerr << "pruned " << b.rows() << "x" << b.cols() << " to " << config.label() << ": w="
            << bc.w() << ", q=" << bc.q() << "\n";
  return 0;
}

struct PackArgs {
  std::string b, out, plan;
  Index rows = 4096;
  Index fast_memory = kDefaultFastMemoryBytes;
};

int run_pack(const PackArgs& a) {
  const NmCompressedF bc = load_compressed(a.b);
  const BlockPlan plan = plan_for(a.plan, a.rows, bc.n_cols, bc.k_orig, bc.config, a.fast_memory);
  save_pack_plan(a.out, build_pack_plan(bc, plan));
  return 0;
}

struct SpmmArgs {
  std::string a, b, out, plan, pack;
  std::string kernel = "blocked";
  bool scale = false;
  int threads = 0;
  Index fast_memory = kDefaultFastMemoryBytes;
};

int run_spmm(const SpmmArgs& args) {
  DenseMatrixF a = load_dense(args.a);
  const NmCompressedF bc = load_compressed(args.b);
  if (a.cols() < bc.k_orig) {
    a = zero_pad(a, a.rows(), bc.k_orig);  // A was not padded along k
  }
  const SpmmOptions opts{args.scale, args.threads};
  const KernelKind kind = parse_kernel(args.kernel);
  DenseMatrixF c;
  if (kind == KernelKind::naive) {
    c = spmm_naive(a, bc, opts);
  } else if (kind == KernelKind::dense_ref) {
    c = gemm_reference(a, decompress(bc));
    if (args.scale) c *= static_cast<float>(bc.config.m_window()) / bc.config.n_keep();
  } else {
    const BlockPlan plan =
        plan_for(args.plan, a.rows(), bc.n_cols, bc.k_orig, bc.config, args.fast_memory);
    if (kind == KernelKind::blocked) {
      c = spmm_blocked(a, bc, plan, opts);
    } else {
      const PackPlan pack = args.pack.empty() ? build_pack_plan(bc, plan) : load_pack_plan(args.pack);
      c = spmm_packed(a, bc, pack, plan, opts);
    }
  }
  save_dense(args.out, c);
  return 0;
}

struct BenchArgs {
  std::string preset = "table_af";
  Index m = 0, n = 0, k = 0;
  std::string sparsity = "0.5,0.625,0.75,0.875";
  std::string kernels = "dense_ref,blocked,packed";
  Index vlen = 4;
  int repeats = 3;
  int threads = 0;
  bool check = false;
  std::string output = "-";
  std::string format = "csv";
  std::string mask = "random";
  std::uint64_t seed = 1;
  Index fast_memory = kDefaultFastMemoryBytes;
};

int run_bench_cmd(const BenchArgs& a) {
  const WorkloadPreset preset = parse_preset(a.preset);
  std::vector<NmConfig> configs;
  for (const auto& s : split_list(a.sparsity)) configs.push_back(parse_config(s, a.vlen));
  std::vector<KernelKind> kernels;
  for (const auto& s : split_list(a.kernels)) kernels.push_back(parse_kernel(s));
  const ReportFormat format = parse_report_format(a.format);
  std::optional<Shape> custom;
  if (preset == WorkloadPreset::custom) custom = Shape{a.m, a.n, a.k};
  const auto workloads = generate_workloads(preset, configs, a.seed, parse_mask_mode(a.mask), custom);

  BenchOptions opts;
  opts.repeats = a.repeats;
  opts.workers = a.threads;
  opts.check = a.check;
  opts.fast_memory_bytes = a.fast_memory;
  const auto records = run_bench(workloads, kernels, opts);
  if (a.output.empty() || a.output == "-") {
    std::cout << format_report(records, format);
  } else {
    emit_report(records, format, a.output);
  }
  for (const auto& r : records) {
    if (!r.verified) {
      std::cerr << "verification failed: " << r.workload_id << " " << r.config.label() << " "
                << to_string(r.kernel) << " max_rel_err=" << *r.max_rel_err << "\n";
      return kExitVerifyFailed;
    }
  }
  return 0;
}

struct AnalyzeArgs {
  std::string profile = "a100";
  std::string configs = "2:4,3:8,1:4,1:8";
  Index m = 4096, n = 4096, k = 4096;
  Index vlen = 4;
  double peak_flops = 0, bandwidth = 0;
  Index fast_memory = 0;
  std::string format = "csv";
  std::string output = "-";
};

int run_analyze(const AnalyzeArgs& a) {
  std::vector<HardwareProfile> profiles;
  for (const auto& name : split_list(a.profile)) {
    if (name == "all") {
      for (auto& hw : hardware_presets()) profiles.push_back(hw);
    } else if (name == "custom") {
      HardwareProfile hw{"custom", a.peak_flops, a.bandwidth, a.fast_memory, 4};
      check_profile(hw);
      profiles.push_back(hw);
    } else {
      HardwareProfile hw = hardware_preset(name);
      if (a.fast_memory > 0) hw.fast_memory_bytes = a.fast_memory;
      profiles.push_back(hw);
    }
  }
  const ReportFormat format = parse_report_format(a.format);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "profile,N,M,L,sparsity,m_s,n_s,k_s,w_s,q_s,ai_element,ai_byte,regime,attainable_flops,"
         "ideal_speedup,footprint_packed,footprint_unpacked\n";
  for (const auto& hw : profiles) {
    for (const auto& token : split_list(a.configs)) {
      const NmConfig config = parse_config(token, a.vlen);
      const auto [k_pad, n_pad] = pad_dims(a.k, a.n, config);
      const BlockPlan plan = select_plan(a.m, n_pad, k_pad, config, hw.fast_memory_bytes);
      const RooflinePoint pt = roofline_classify(plan, hw);
      // Packed width at its lower bound w_s: one shared pattern per panel.
      const Index fp_packed = footprint(plan, true, plan.w_s, hw.element_bytes);
      const Index fp_unpacked = footprint(plan, false, 0, hw.element_bytes);
      const double speedup = ideal_speedup(config).value();
      nlohmann::ordered_json j;
      j["profile"] = hw.name;
      j["N"] = config.n_keep();
      j["M"] = config.m_window();
      j["L"] = config.vector_len();
      j["sparsity"] = config.sparsity();
      j["m_s"] = plan.m_s;
      j["n_s"] = plan.n_s;
      j["k_s"] = plan.k_s;
      j["w_s"] = plan.w_s;
      j["q_s"] = plan.q_s;
      j["ai_element"] = pt.ai_per_element;
      j["ai_byte"] = pt.ai_per_byte;
      j["regime"] = to_string(pt.regime);
      j["attainable_flops"] = pt.attainable_flops;
      j["ideal_speedup"] = speedup;
      j["footprint_packed"] = fp_packed;
      j["footprint_unpacked"] = fp_unpacked;
      bool first = true;
      for (auto& [key, value] : j.items()) {
        csv << (first ? "" : ",") << (value.is_string() ? value.get<std::string>() : value.dump());
        first = false;
      }
      csv << "\n";
      rows.push_back(std::move(j));
    }
  }
  write_text(a.output, format == ReportFormat::csv ? csv.str() : rows.dump(2) + "\n");
  return 0;
}

struct VerifyArgs {
  int threads = 0;
  bool quiet = false;
};

int run_verify(const VerifyArgs& a) {
  const auto cases = oracle_grid();
  std::size_t failed = 0;
  run_oracle_grid(cases, a.threads, [&](const GridCaseResult& r) {
    if (!r.passed) ++failed;
    if (!a.quiet || !r.passed) {
      const auto& c = r.grid;
      std::printf("%s %lld:%lld L=%lld %lldx%lldx%lld %s seed=%llu naive_exact=%d blocked=%.3g packed=%.3g\n",
                  r.passed ? "PASS" : "FAIL", static_cast<long long>(c.n_keep),
                  static_cast<long long>(c.m_window), static_cast<long long>(c.vector_len),
                  static_cast<long long>(c.shape.m), static_cast<long long>(c.shape.n),
                  static_cast<long long>(c.shape.k), to_string(c.mask),
                  static_cast<unsigned long long>(c.seed), r.naive_exact ? 1 : 0, r.blocked_err,
                  r.packed_err);
    }
  });
  std::printf("%zu/%zu cases passed\n", cases.size() - failed, cases.size());
  return failed == 0 ? 0 : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N:M structured sparse matrix multiplication toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a random dense matrix (uniform in [-1, 1))");
  gen_cmd->add_option("--rows", gen.rows, "Rows")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--cols", gen.cols, "Columns")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output .nmdm")->required();

  PruneArgs prune;
  auto* prune_cmd = app.add_subcommand("prune", "Prune a dense matrix and write it compressed");
  prune_cmd->add_option("--in", prune.in, "Dense input (.nmdm)")->required();
  prune_cmd->add_option("--out", prune.out, "Compressed output (.nms)")->required();
  prune_cmd->add_option("--n", prune.n, "Vectors kept per window");
  prune_cmd->add_option("--m", prune.m, "Window length");
  prune_cmd->add_option("--vlen", prune.vlen, "Vector length L");
  prune_cmd->add_option("--criterion", prune.criterion, "magnitude or random")
      ->check(CLI::IsMember({"magnitude", "random"}));
  prune_cmd->add_option("--seed", prune.seed, "Seed for the random criterion");

  PackArgs pack;
  auto* pack_cmd = app.add_subcommand("pack", "Precompute col_info and remapped indices (.nmp)");
  pack_cmd->add_option("--b", pack.b, "Compressed matrix (.nms)")->required();
  pack_cmd->add_option("--out", pack.out, "Output .nmp")->required();
  pack_cmd->add_option("--rows", pack.rows, "Rows of A the plan is sized for");
  pack_cmd->add_option("--plan", pack.plan, "BlockPlan JSON override");
  pack_cmd->add_option("--fast-memory", pack.fast_memory, "Fast-memory budget in bytes");

  SpmmArgs spmm;
  auto* spmm_cmd = app.add_subcommand("spmm", "Multiply a dense matrix by a compressed one");
  spmm_cmd->add_option("--a", spmm.a, "Dense A (.nmdm)")->required();
  spmm_cmd->add_option("--b", spmm.b, "Compressed B (.nms)")->required();
  spmm_cmd->add_option("--out", spmm.out, "Output C (.nmdm)")->required();
  spmm_cmd->add_option("--kernel", spmm.kernel, "naive, blocked, packed or dense_ref")
      ->check(CLI::IsMember({"naive", "blocked", "packed", "dense_ref"}));
  spmm_cmd->add_flag("--scale", spmm.scale, "Multiply the result by M/N");
  spmm_cmd->add_option("--threads", spmm.threads, "Worker threads (0: all)");
  spmm_cmd->add_option("--plan", spmm.plan, "BlockPlan JSON override");
  spmm_cmd->add_option("--pack", spmm.pack, "Precomputed .nmp for the packed kernel");
  spmm_cmd->add_option("--fast-memory", spmm.fast_memory, "Fast-memory budget in bytes");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time kernels over a workload preset");
  bench_cmd->add_option("--preset", bench.preset, "llama_grid, table_af or custom");
  bench_cmd->add_option("--m", bench.m, "Custom m");
  bench_cmd->add_option("--n", bench.n, "Custom n");
  bench_cmd->add_option("--k", bench.k, "Custom k");
  bench_cmd->add_option("--sparsity-list", bench.sparsity, "Comma list of sparsities or N:M");
  bench_cmd->add_option("--kernels", bench.kernels, "Comma list: dense_ref,naive,blocked,packed");
  bench_cmd->add_option("--vlen", bench.vlen, "Vector length L");
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats (>= 3)");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0: all)");
  bench_cmd->add_flag("--check", bench.check, "Verify every kernel against the naive product");
  bench_cmd->add_option("--output", bench.output, "Report path ('-' for stdout)");
  bench_cmd->add_option("--format", bench.format, "csv or json");
  bench_cmd->add_option("--mask", bench.mask, "random or magnitude");
  bench_cmd->add_option("--seed", bench.seed, "Workload seed");
  bench_cmd->add_option("--fast-memory", bench.fast_memory, "Fast-memory budget in bytes");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Arithmetic-intensity and roofline report");
  analyze_cmd->add_option("--profile", analyze.profile,
                          "a100, a100-locked, rtx3090, rtx4090, custom, all (comma list)");
  analyze_cmd->add_option("--config", analyze.configs, "Comma list of N:M or sparsities");
  analyze_cmd->add_option("--m", analyze.m, "Rows of A");
  analyze_cmd->add_option("--n", analyze.n, "Columns of B");
  analyze_cmd->add_option("--k", analyze.k, "Inner dimension");
  analyze_cmd->add_option("--vlen", analyze.vlen, "Vector length L");
  analyze_cmd->add_option("--peak-flops", analyze.peak_flops, "Custom peak FLOP/s");
  analyze_cmd->add_option("--bandwidth", analyze.bandwidth, "Custom bandwidth in bytes/s");
  analyze_cmd->add_option("--fast-memory", analyze.fast_memory, "Fast-memory bytes override");
  analyze_cmd->add_option("--format", analyze.format, "csv or json");
  analyze_cmd->add_option("--output", analyze.output, "Report path ('-' for stdout)");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the full oracle-equivalence grid");
  verify_cmd->add_option("--threads", verify.threads, "Worker threads (0: all)");
  verify_cmd->add_flag("--quiet", verify.quiet, "Only print failures and the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*prune_cmd) return run_prune(prune);
    if (*pack_cmd) return run_pack(pack);
    if (*spmm_cmd) return run_spmm(spmm);
    if (*bench_cmd) return run_bench_cmd(bench);
    if (*analyze_cmd) return run_analyze(analyze);
    if (*verify_cmd) return run_verify(verify);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
