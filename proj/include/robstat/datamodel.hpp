#pragma once

// Core containers shared by every estimator: the data matrix, location/scatter
// estimates, h-subsets and 0/1 weight vectors, plus the library error type.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace robstat {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Errc {
  NonFinite,
  EmptyData,
  RaggedRows,
  TooFewRows,
  EmptyVector,
  SubsetTooSmall,
  BadProb,
  InvalidArgument,
  SingularScatter,
  DegenerateData,
  TooFewInliers,
  TooLarge,
  RankDeficient,
  SingularXScatter,
  SingularErrorScatter,
  GroupTooSmall,
  SingularGroupScatter,
  ZeroEigenvalue,
  AllDirectionsDegenerate,
  RankTooLow,
  LengthMismatch,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::EmptyData: return "EmptyData";
    case Errc::RaggedRows: return "RaggedRows";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::EmptyVector: return "EmptyVector";
    case Errc::SubsetTooSmall: return "SubsetTooSmall";
    case Errc::BadProb: return "BadProb";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SingularScatter: return "SingularScatter";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::TooFewInliers: return "TooFewInliers";
    case Errc::TooLarge: return "TooLarge";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::SingularXScatter: return "SingularXScatter";
    case Errc::SingularErrorScatter: return "SingularErrorScatter";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::SingularGroupScatter: return "SingularGroupScatter";
    case Errc::ZeroEigenvalue: return "ZeroEigenvalue";
    case Errc::AllDirectionsDegenerate: return "AllDirectionsDegenerate";
    case Errc::RankTooLow: return "RankTooLow";
    case Errc::LengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

/// Exception thrown by every robstat routine. `code()` identifies the violated
/// precondition; `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Validated n x p matrix of finite values with optional column names.
class Dataset {
 public:
  /// Throws EmptyData for a 0-row or 0-column matrix and NonFinite for the
  /// first NaN/Inf entry in row-major order (1-based row and column in the message).
  explicit Dataset(Matrix values, std::vector<std::string> names = {})
      : values_(std::move(values)), names_(std::move(names)) {
    if (values_.rows() == 0 || values_.cols() == 0) {
      throw Error(Errc::EmptyData, "dataset needs at least one row and one column");
    }
    for (Index i = 0; i < values_.rows(); ++i) {
      for (Index j = 0; j < values_.cols(); ++j) {
        if (!std::isfinite(values_(i, j))) {
          throw Error(Errc::NonFinite, "non-finite value at row " + std::to_string(i + 1) +
                                           ", column " + std::to_string(j + 1));
        }
      }
    }
    if (!names_.empty() && static_cast<Index>(names_.size()) != values_.cols()) {
      throw Error(Errc::InvalidArgument, "expected " + std::to_string(values_.cols()) +
                                             " column names, got " +
                                             std::to_string(names_.size()));
    }
  }

  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Index n() const noexcept { return values_.rows(); }
  Index p() const noexcept { return values_.cols(); }
  auto row(Index i) const { return values_.row(i); }

 private:
  Matrix values_;
  std::vector<std::string> names_;
};

/// Builds a Dataset from nested rows. Errors: EmptyData, RaggedRows, NonFinite.
inline Dataset validate(const std::vector<std::vector<double>>& rows,
                        std::vector<std::string> names = {}) {
  if (rows.empty() || rows.front().empty()) {
    throw Error(Errc::EmptyData, "no rows to validate");
  }
  const auto p = rows.front().size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) {
      throw Error(Errc::RaggedRows, "row " + std::to_string(i + 1) + " has " +
                                        std::to_string(rows[i].size()) + " values, expected " +
                                        std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return Dataset(std::move(m), std::move(names));
}

enum class EstimateKind { Raw, Reweighted };

inline const char* to_string(EstimateKind k) {
  return k == EstimateKind::Raw ? "raw" : "reweighted";
}

struct LocationScatter {
  Vector center;
  Matrix scatter;
  double det = 0.0;
  Index h = 0;
  EstimateKind kind = EstimateKind::Raw;
  double consistency = 1.0;
};

/// Sorted set of distinct row indices.
class HSubset {
 public:
  HSubset() = default;
  explicit HSubset(std::vector<Index> idx) : idx_(std::move(idx)) {
    std::sort(idx_.begin(), idx_.end());
    if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end()) {
      throw Error(Errc::InvalidArgument, "h-subset indices must be distinct");
    }
  }

  const std::vector<Index>& indices() const noexcept { return idx_; }
  Index size() const noexcept { return static_cast<Index>(idx_.size()); }
  bool contains(Index i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }

  friend bool operator==(const HSubset&, const HSubset&) = default;
  friend auto operator<=>(const HSubset&, const HSubset&) = default;

 private:
  std::vector<Index> idx_;
};

/// 0/1 observation weights.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(Index n, bool value = true) : w_(static_cast<std::size_t>(n), value ? 1 : 0) {}
  explicit WeightVector(std::vector<std::uint8_t> w) : w_(std::move(w)) {
    for (auto& v : w_) v = v ? 1 : 0;
  }

  Index size() const noexcept { return static_cast<Index>(w_.size()); }
  bool operator[](Index i) const { return w_[static_cast<std::size_t>(i)] != 0; }
  void set(Index i, bool v) { w_[static_cast<std::size_t>(i)] = v ? 1 : 0; }
  Index count() const {
    return static_cast<Index>(std::count(w_.begin(), w_.end(), std::uint8_t{1}));
  }
  std::vector<Index> selected() const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i]) out.push_back(static_cast<Index>(i));
    return out;
  }
  Vector as_vector() const {
    Vector v(size());
    for (Index i = 0; i < size(); ++i) v(i) = (*this)[i] ? 1.0 : 0.0;
    return v;
  }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<std::uint8_t> w_;
};

/// Subset size: floor(alpha*n) clamped to [floor((n+p+1)/2), n].
/// alpha = 0.5 therefore gives the maximal-breakdown choice.
inline Index default_h(Index n, Index p, double alpha = 0.75) {
  if (n <= p) {
    throw Error(Errc::TooFewRows, "need n > p (n=" + std::to_string(n) +
                                      ", p=" + std::to_string(p) + ")");
  }
  if (!(alpha >= 0.5 && alpha <= 1.0)) {
    throw Error(Errc::InvalidArgument, "alpha must lie in [0.5, 1]");
  }
  // The small offset keeps products such as 0.29 * 100 from flooring to 28.
  const auto floored = static_cast<Index>(std::floor(alpha * static_cast<double>(n) + 1e-9));
  const Index lower = (n + p + 1) / 2;
  return std::clamp(floored, lower, n);
}

/// Rows of `m` listed in `idx`.
template <typename Derived>
Matrix select_rows(const Eigen::MatrixBase<Derived>& m, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = m.row(idx[r]);
  return out;
}

}  // namespace robstat
