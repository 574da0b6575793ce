#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nmspmm/bench.hpp"

using namespace nmspmm;

namespace {

std::vector<BenchRecord> small_run(bool check) {
  const auto workloads = generate_workloads(WorkloadPreset::custom, {NmConfig(2, 4, 4), NmConfig(1, 8, 4)},
                                            7, MaskMode::random, Shape{48, 40, 72});
  BenchOptions opts;
  opts.check = check;
  return run_bench(workloads, {KernelKind::dense_ref, KernelKind::naive, KernelKind::blocked, KernelKind::packed},
                   opts);
}

}  // namespace

TEST(ParseConfig, SparsitiesAndRatios) {
  EXPECT_EQ(parse_config("0.5", 4), NmConfig(2, 4, 4));
  EXPECT_EQ(parse_config("0.625", 4), NmConfig(3, 8, 4));
  EXPECT_EQ(parse_config("0.75", 1), NmConfig(1, 4, 1));
  EXPECT_EQ(parse_config("0.875", 8), NmConfig(1, 8, 8));
  EXPECT_EQ(parse_config("16:32", 4), NmConfig(16, 32, 4));
  EXPECT_THROW(parse_config("1.5", 4), Error);
  EXPECT_THROW(parse_config("abc", 4), Error);
  EXPECT_THROW(parse_config("5:4", 4), Error);
}

TEST(Workloads, TableAF) {
  const auto w = generate_workloads(WorkloadPreset::table_af, {NmConfig(2, 4, 4)}, 1);
  ASSERT_EQ(w.size(), 6u);
  bool has_a = false, has_f = false;
  for (const auto& x : w) {
    has_a |= x.m == 512 && x.n == 512 && x.k == 512;
    has_f |= x.m == 4096 && x.n == 4096 && x.k == 4096;
  }
  EXPECT_TRUE(has_a);
  EXPECT_TRUE(has_f);
  const auto& shapes = table_af_shapes();
  const SizeClass expect[] = {SizeClass::small, SizeClass::small, SizeClass::medium,
                              SizeClass::medium, SizeClass::large, SizeClass::large};
  for (std::size_t i = 0; i < 6; ++i) {
    const Shape& s = shapes[i].second;
    EXPECT_EQ(classify_size(s.m, s.n, s.k), expect[i]) << shapes[i].first;
  }
}

TEST(Workloads, LlamaGridHasOneHundredPerConfig) {
  const auto w = generate_workloads(WorkloadPreset::llama_grid, {NmConfig(2, 4, 4), NmConfig(1, 4, 4)}, 1);
  EXPECT_EQ(w.size(), 200u);
  std::set<std::tuple<Index, Index, Index>> shapes;
  for (std::size_t i = 0; i < 100; ++i) shapes.insert({w[i].m, w[i].n, w[i].k});
  EXPECT_EQ(shapes.size(), 100u);
  EXPECT_TRUE(shapes.count({256, 4096, 4096}));
  EXPECT_TRUE(shapes.count({4096, 11008, 4096}));
  EXPECT_TRUE(shapes.count({1024, 4096, 11008}));
}

TEST(Workloads, CustomIsSingleton) {
  const auto w = generate_workloads(WorkloadPreset::custom, {NmConfig(2, 4, 4)}, 1, MaskMode::random,
                                    Shape{3, 5, 7});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].m, 3);
  EXPECT_THROW(generate_workloads(WorkloadPreset::custom, {NmConfig(2, 4, 4)}, 1), Error);
  EXPECT_THROW(parse_preset("imagenet"), Error);
}

TEST(Workloads, MaterializeIsDeterministicAndPadded) {
  const auto w = generate_workloads(WorkloadPreset::custom, {NmConfig(3, 8, 4)}, 9, MaskMode::random,
                                    Shape{10, 13, 21})[0];
  const WorkloadData d1 = materialize(w), d2 = materialize(w);
  EXPECT_EQ(digest(d1), digest(d2));
  EXPECT_EQ(d1.a.cols(), 24);
  EXPECT_EQ(d1.b.n_cols, 16);
  EXPECT_TRUE(d1.a.rightCols(3).isZero());
  const auto other = generate_workloads(WorkloadPreset::custom, {NmConfig(3, 8, 4)}, 10, MaskMode::random,
                                        Shape{10, 13, 21})[0];
  EXPECT_NE(digest(materialize(other)), digest(d1));
}

TEST(RunBench, CheckedRecords) {
  const auto records = small_run(true);
  ASSERT_EQ(records.size(), 8u);
  for (const auto& r : records) {
    ASSERT_TRUE(r.max_rel_err.has_value());
    EXPECT_LE(*r.max_rel_err, 1e-4);
    EXPECT_TRUE(r.verified);
    EXPECT_GT(r.wall_time_s, 0.0);
    EXPECT_GT(r.gflops, 0.0);
  }
  EXPECT_DOUBLE_EQ(records[0].speedup_vs_dense, 1.0);
  ASSERT_TRUE(worst_error(records).has_value());
}

TEST(RunBench, SparseFlopAccounting) {
  const auto records = small_run(false);
  for (const auto& r : records) {
    EXPECT_FALSE(r.max_rel_err.has_value());
    const double inner = r.kernel == KernelKind::dense_ref ? 72.0 : 72.0 * r.config.n_keep() / r.config.m_window();
    EXPECT_NEAR(r.gflops, 2.0 * 48 * 40 * inner / r.wall_time_s / 1e9, 1e-9 * r.gflops);
  }
}

TEST(RunBench, RejectsFewRepeats) {
  const auto w = generate_workloads(WorkloadPreset::custom, {NmConfig(2, 4, 4)}, 1, MaskMode::random,
                                    Shape{8, 8, 8});
  BenchOptions opts;
  opts.repeats = 2;
  EXPECT_THROW(run_bench(w, {KernelKind::blocked}, opts), Error);
}

TEST(Report, CsvHeaderAndRows) {
  auto records = small_run(false);
  records.resize(1);
  const std::string csv = format_report(records, ReportFormat::csv);
  std::istringstream in(csv);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "workload_id,m,n,k,N,M,L,sparsity,kernel,wall_time_s,gflops,speedup_vs_dense,max_rel_err");
  EXPECT_EQ(row.rfind("custom-m48-n40-k72,48,40,72,2,4,4,0.5,dense_ref,", 0), 0u);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(csv.back(), '\n');
}

TEST(Report, JsonMirrorsFields) {
  const auto records = small_run(true);
  const auto j = nlohmann::json::parse(format_report(records, ReportFormat::json));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), records.size());
  for (const char* key : {"workload_id", "m", "n", "k", "N", "M", "L", "sparsity", "kernel",
                          "wall_time_s", "gflops", "speedup_vs_dense", "max_rel_err"}) {
    EXPECT_TRUE(j[0].contains(key)) << key;
  }
  EXPECT_EQ(j[1]["kernel"], "naive");
}

TEST(Report, EmptyRecordsWriteNothing) {
  const auto path = std::filesystem::temp_directory_path() / "nmspmm_empty_report.csv";
  std::filesystem::remove(path);
  EXPECT_THROW(emit_report({}, ReportFormat::csv, path.string()), Error);
  EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Report, WritesFile) {
  auto records = small_run(false);
  const auto path = std::filesystem::temp_directory_path() / "nmspmm_report.json";
  emit_report(records, ReportFormat::json, path.string());
  std::ifstream in(path);
  EXPECT_EQ(nlohmann::json::parse(in).size(), records.size());
  std::filesystem::remove(path);
  EXPECT_THROW(emit_report(records, ReportFormat::csv, "/nonexistent/dir/r.csv"), Error);
}
