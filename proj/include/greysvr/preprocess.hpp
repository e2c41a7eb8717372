#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace greysvr {

/// Range-normalization parameters of one column.
struct NormParams {
  double min_x = 0.0;
  double max_x = 0.0;

  [[nodiscard]] bool constant() const noexcept { return max_x == min_x; }
};

/// MAD winsorization parameters of one column: clamp band is md +/- k*mad.
struct MadParams {
  double md = 0.0;
  double mad = 0.0;
  double k = 5.0;

  [[nodiscard]] double lower() const noexcept { return md - k * mad; }
  [[nodiscard]] double upper() const noexcept { return md + k * mad; }
};

template <typename T>
struct Transformed {
  std::vector<double> values;
  T params;
};

double median(std::vector<double> x);

/// Fits md/MAD on `x` and clamps every value into [md - k*mad, md + k*mad].
Transformed<MadParams> mad_clamp(std::span<const double> x, double k = 5.0);

/// Clamps with previously fitted parameters. Idempotent.
std::vector<double> apply_mad_clamp(std::span<const double> x, const MadParams& p);

/// x' = 2 (x - min) / (max - min) - 1. Throws DataError("constant-column")
/// when max == min and std::invalid_argument for fewer than two values.
Transformed<NormParams> range_normalize(std::span<const double> x);

/// Applies fitted parameters to new data; results may leave [-1, 1].
std::vector<double> apply_normalize(std::span<const double> x, const NormParams& p);
double apply_normalize(double x, const NormParams& p);

/// Inverse of range_normalize. Throws DataError on constant parameters.
std::vector<double> denormalize(std::span<const double> x_norm, const NormParams& p);
double denormalize(double x_norm, const NormParams& p);

/// Column-wise parameters for a sample x feature matrix.
struct ColumnTransform {
  std::vector<MadParams> mad;   // empty when clamping is disabled
  std::vector<NormParams> norm;

  /// Fits clamp (if k > 0) then normalization on `fit_rows`.
  static ColumnTransform fit(const Eigen::MatrixXd& fit_rows, double mad_k);
  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

}  // namespace greysvr
