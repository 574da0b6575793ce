#include "nmspmm/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace nmspmm {

namespace {

constexpr std::array<char, 4> kDenseMagic{'N', 'M', 'D', 'M'};
constexpr std::array<char, 4> kCompressedMagic{'N', 'M', 'S', 'P'};
constexpr std::array<char, 4> kPackMagic{'N', 'M', 'P', 'K'};

// Refuse headers describing absurd allocations (corrupt files).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(const std::array<char, 4>& m) { out_.write(m.data(), 4); }

  void u32(std::uint64_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::InvalidArgument, "value does not fit in 32 bits");
    }
    const auto x = static_cast<std::uint32_t>(v);
    const char b[4] = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff),
                       static_cast<char>((x >> 16) & 0xff), static_cast<char>((x >> 24) & 0xff)};
    out_.write(b, 4);
  }

  void u16(std::uint16_t x) {
    const char b[2] = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff)};
    out_.write(b, 2);
  }

  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }

  void bytes(const std::uint8_t* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  }

  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoError, "write failed");
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void expect_header(const std::array<char, 4>& m, const char* what) {
    std::array<char, 4> got{};
    raw(got.data(), 4);
    if (got != m) throw Error(ErrorCode::FormatError, std::string("bad magic for ") + what);
    const auto version = u32();
    if (version != kFormatVersion) {
      throw Error(ErrorCode::FormatError,
                  std::string("unsupported ") + what + " version " + std::to_string(version));
    }
  }

  std::uint32_t u32() {
    unsigned char b[4];
    raw(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint16_t u16() {
    unsigned char b[2];
    raw(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void bytes(std::uint8_t* p, std::size_t n) { raw(reinterpret_cast<char*>(p), n); }

 private:
  void raw(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::FormatError, "unexpected end of file");
    }
  }

  std::istream& in_;
};

void check_size(std::uint64_t rows, std::uint64_t cols) {
  if (rows * cols > kMaxElements) throw Error(ErrorCode::FormatError, "matrix too large");
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  fn(out);
}

template <typename Fn>
auto with_input(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return fn(in);
}

NmConfig read_config(Reader& r) {
  const auto n = r.u32(), m = r.u32(), l = r.u32();
  try {
    return NmConfig(n, m, l);
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
}

}  // namespace

void write_dense(std::ostream& out, const DenseMatrixF& m) {
  Writer w(out);
  w.magic(kDenseMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint64_t>(m.rows()));
  w.u32(static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  w.finish();
}

DenseMatrixF read_dense(std::istream& in) {
  Reader r(in);
  r.expect_header(kDenseMagic, "dense matrix");
  const auto rows = r.u32(), cols = r.u32();
  check_size(rows, cols);
  DenseMatrixF m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
  return m;
}

void save_dense(const std::string& path, const DenseMatrixF& m) {
  with_output(path, [&](std::ostream& out) { write_dense(out, m); });
}

DenseMatrixF load_dense(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_dense(in); });
}

void write_compressed(std::ostream& out, const NmCompressedF& bc) {
  if (!validate(bc).empty()) throw Error(ErrorCode::InvalidArgument, "refusing to write invalid N:M data");
  Writer w(out);
  w.magic(kCompressedMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint64_t>(bc.k_orig));
  w.u32(static_cast<std::uint64_t>(bc.n_cols));
  w.u32(static_cast<std::uint64_t>(bc.config.n_keep()));
  w.u32(static_cast<std::uint64_t>(bc.config.m_window()));
  w.u32(static_cast<std::uint64_t>(bc.config.vector_len()));
  for (Index i = 0; i < bc.values.size(); ++i) w.f32(bc.values.data()[i]);
  w.bytes(bc.indices.data(), static_cast<std::size_t>(bc.indices.size()));
  w.finish();
}

NmCompressedF read_compressed(std::istream& in) {
  Reader r(in);
  r.expect_header(kCompressedMagic, "compressed matrix");
  const auto k = r.u32(), n = r.u32();
  const NmConfig config = read_config(r);
  if (k == 0 || n == 0 || k % config.m_window() != 0 || n % config.vector_len() != 0) {
    throw Error(ErrorCode::FormatError, "dimensions not divisible by (M, L)");
  }
  NmCompressedF bc{config, k, n, {}, {}};
  check_size(static_cast<std::uint64_t>(bc.w()), n);
  bc.values.resize(bc.w(), n);
  for (Index i = 0; i < bc.values.size(); ++i) bc.values.data()[i] = r.f32();
  bc.indices.resize(bc.w(), bc.q());
  r.bytes(bc.indices.data(), static_cast<std::size_t>(bc.indices.size()));
  const auto problems = validate(bc);
  if (!problems.empty()) {
    throw Error(ErrorCode::FormatError, std::string("invalid index data: ") +
                                            to_string(problems.front().kind) + " " +
                                            problems.front().detail);
  }
  return bc;
}

void save_compressed(const std::string& path, const NmCompressedF& bc) {
  with_output(path, [&](std::ostream& out) { write_compressed(out, bc); });
}

NmCompressedF load_compressed(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_compressed(in); });
}

void write_pack_plan(std::ostream& out, const PackPlan& pack) {
  Writer w(out);
  w.magic(kPackMagic);
  w.u32(kFormatVersion);
  for (Index v : {pack.k_orig, pack.n_cols, pack.config.n_keep(), pack.config.m_window(),
                  pack.config.vector_len(), pack.k_s, pack.w_s, pack.n_s, pack.q_s, pack.panels,
                  pack.block_cols}) {
    w.u32(static_cast<std::uint64_t>(v));
  }
  for (const auto& blk : pack.blocks) {
    w.u32(blk.col_info.size());
    for (auto c : blk.col_info) w.u32(c);
    for (Index i = 0; i < blk.remapped.size(); ++i) w.u16(blk.remapped.data()[i]);
  }
  w.finish();
}

PackPlan read_pack_plan(std::istream& in) {
  Reader r(in);
  r.expect_header(kPackMagic, "pack plan");
  PackPlan pack;
  pack.k_orig = r.u32();
  pack.n_cols = r.u32();
  pack.config = read_config(r);
  pack.k_s = r.u32();
  pack.w_s = r.u32();
  pack.n_s = r.u32();
  pack.q_s = r.u32();
  pack.panels = r.u32();
  pack.block_cols = r.u32();
  const Index mw = pack.config.m_window(), nk = pack.config.n_keep(), len = pack.config.vector_len();
  if (pack.k_s < mw || pack.k_s % mw != 0 || pack.w_s != pack.k_s / mw * nk || pack.n_s < 1 ||
      pack.q_s * len != pack.n_s || pack.k_orig % mw != 0 || pack.n_cols % len != 0 ||
      pack.panels != ceil_div(pack.k_orig / mw * nk, pack.w_s) ||
      pack.block_cols != ceil_div(pack.n_cols, pack.n_s)) {
    throw Error(ErrorCode::FormatError, "inconsistent pack plan header");
  }
  pack.blocks.resize(static_cast<std::size_t>(pack.panels * pack.block_cols));
  for (Index panel = 0; panel < pack.panels; ++panel) {
    for (Index bj = 0; bj < pack.block_cols; ++bj) {
      auto& blk = pack.block(panel, bj);
      const auto c = r.u32();
      if (c > pack.k_s) throw Error(ErrorCode::FormatError, "col_info longer than k_s");
      blk.col_info.resize(c);
      const Index k0 = panel * pack.k_s;
      for (auto& v : blk.col_info) {
        v = r.u32();
        if (v < k0 || v >= std::min(k0 + pack.k_s, pack.k_orig)) {
          throw Error(ErrorCode::FormatError, "col_info entry outside its panel");
        }
      }
      blk.remapped.resize(pack.panel_rows_end(panel) - pack.panel_rows_begin(panel),
                          pack.group_end(bj) - pack.group_begin(bj));
      for (Index i = 0; i < blk.remapped.size(); ++i) {
        blk.remapped.data()[i] = r.u16();
        if (blk.remapped.data()[i] >= c) throw Error(ErrorCode::FormatError, "remapped index out of range");
      }
    }
  }
  return pack;
}

void save_pack_plan(const std::string& path, const PackPlan& pack) {
  with_output(path, [&](std::ostream& out) { write_pack_plan(out, pack); });
}

PackPlan load_pack_plan(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_pack_plan(in); });
}

}  // namespace nmspmm
