#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nmspmm {

using Index = Eigen::Index;

/// Row-major dense matrix. All kernels and file formats assume row-major storage.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using DenseMatrixF = DenseMatrix<float>;

/// Window offsets of retained vectors, one byte per entry.
using IndexMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  TooManyNonzeroVectors,
  InvalidPlan,
  CapacityTooSmall,
  UnknownPreset,
  IoError,
  FormatError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooManyNonzeroVectors: return "TooManyNonzeroVectors";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::CapacityTooSmall: return "CapacityTooSmall";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

/// Vector-wise N:M pattern: keep `n_keep` of every `m_window` consecutive
/// row vectors, each vector `vector_len` columns wide.
class NmConfig {
 public:
  static constexpr Index kMaxWindow = 256;

  NmConfig(Index n_keep, Index m_window, Index vector_len)
      : n_keep_(n_keep), m_window_(m_window), vector_len_(vector_len) {
    if (n_keep < 1 || n_keep > m_window || m_window > kMaxWindow) {
      throw Error(ErrorCode::InvalidArgument,
                  "N:M requires 1 <= N <= M <= 256, got " + std::to_string(n_keep) + ":" +
                      std::to_string(m_window));
    }
    if (vector_len < 1) {
      throw Error(ErrorCode::InvalidArgument, "vector length must be >= 1");
    }
  }

  Index n_keep() const noexcept { return n_keep_; }
  Index m_window() const noexcept { return m_window_; }
  Index vector_len() const noexcept { return vector_len_; }

  double sparsity() const noexcept {
    return 1.0 - static_cast<double>(n_keep_) / static_cast<double>(m_window_);
  }

  std::string label() const {
    return std::to_string(n_keep_) + ":" + std::to_string(m_window_) + "/L" +
           std::to_string(vector_len_);
  }

  friend bool operator==(const NmConfig&, const NmConfig&) = default;

 private:
  Index n_keep_;
  Index m_window_;
  Index vector_len_;
};

/// Exact non-negative rational used by the analytical models.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }
};

inline Index round_up(Index value, Index multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

inline Index ceil_div(Index value, Index divisor) { return (value + divisor - 1) / divisor; }

}  // namespace nmspmm
