#pragma once

#include <iosfwd>
#include <string>

#include "nmspmm/common.hpp"
#include "nmspmm/format.hpp"
#include "nmspmm/packing.hpp"

namespace nmspmm {

// Binary formats, all integers unsigned 32-bit little-endian, floats IEEE-754
// binary32 little-endian:
//
//   .nmdm  "NMDM" version rows cols | rows*cols floats
//   .nms   "NMSP" version k_orig n_cols N M L | w*n_cols floats | w*q index bytes
//   .nmp   "NMPK" version k_orig n_cols N M L k_s w_s n_s q_s panels block_cols
//          | per block (panel-major): c, c col_info entries, then the block's
//            remapped indices row-major as unsigned 16-bit little-endian
//
// Readers reject unknown magic or version with FormatError.

inline constexpr std::uint32_t kFormatVersion = 1;

void write_dense(std::ostream& out, const DenseMatrixF& m);
DenseMatrixF read_dense(std::istream& in);
void save_dense(const std::string& path, const DenseMatrixF& m);
DenseMatrixF load_dense(const std::string& path);

void write_compressed(std::ostream& out, const NmCompressedF& bc);
NmCompressedF read_compressed(std::istream& in);
void save_compressed(const std::string& path, const NmCompressedF& bc);
NmCompressedF load_compressed(const std::string& path);

void write_pack_plan(std::ostream& out, const PackPlan& pack);
PackPlan read_pack_plan(std::istream& in);
void save_pack_plan(const std::string& path, const PackPlan& pack);
PackPlan load_pack_plan(const std::string& path);

}  // namespace nmspmm
