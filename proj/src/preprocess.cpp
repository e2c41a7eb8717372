#include "greysvr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "greysvr/error.hpp"

namespace greysvr {

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of empty vector");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  const double hi = x[mid];
  if (x.size() % 2 == 1) return hi;
  const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

Transformed<MadParams> mad_clamp(std::span<const double> x, double k) {
  if (x.empty()) throw std::invalid_argument("mad_clamp: empty input");
  if (!(k > 0.0)) throw std::invalid_argument("mad_clamp: k must be positive");
  MadParams p;
  p.k = k;
  p.md = median(std::vector<double>(x.begin(), x.end()));
  std::vector<double> dev(x.size());
  std::transform(x.begin(), x.end(), dev.begin(), [&](double v) { return std::abs(v - p.md); });
  p.mad = median(std::move(dev));
  return {apply_mad_clamp(x, p), p};
}

std::vector<double> apply_mad_clamp(std::span<const double> x, const MadParams& p) {
  std::vector<double> out(x.begin(), x.end());
  const double lo = p.lower();
  const double hi = p.upper();
  for (double& v : out) {
    if (v > hi) {
      v = hi;
    } else if (v < lo) {
      v = lo;
    }
  }
  return out;
}

Transformed<NormParams> range_normalize(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("range_normalize: need at least 2 values");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  NormParams p{*mn, *mx};
  if (p.constant()) throw DataError("constant-column");
  return {apply_normalize(x, p), p};
}

double apply_normalize(double x, const NormParams& p) {
  if (p.constant()) throw DataError("constant-column");
  return 2.0 * (x - p.min_x) / (p.max_x - p.min_x) - 1.0;
}

std::vector<double> apply_normalize(std::span<const double> x, const NormParams& p) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return apply_normalize(v, p); });
  return out;
}

double denormalize(double x_norm, const NormParams& p) {
  if (p.constant()) throw DataError("constant-column");
  return (x_norm + 1.0) * 0.5 * (p.max_x - p.min_x) + p.min_x;
}

std::vector<double> denormalize(std::span<const double> x_norm, const NormParams& p) {
  std::vector<double> out(x_norm.size());
  std::transform(x_norm.begin(), x_norm.end(), out.begin(), [&](double v) { return denormalize(v, p); });
  return out;
}

ColumnTransform ColumnTransform::fit(const Eigen::MatrixXd& fit_rows, double mad_k) {
  ColumnTransform t;
  for (Eigen::Index c = 0; c < fit_rows.cols(); ++c) {
    std::vector<double> col(fit_rows.rows());
    Eigen::VectorXd::Map(col.data(), fit_rows.rows()) = fit_rows.col(c);
    if (mad_k > 0.0) {
      auto clamped = mad_clamp(col, mad_k);
      t.mad.push_back(clamped.params);
      col = std::move(clamped.values);
    }
    t.norm.push_back(range_normalize(col).params);
  }
  return t;
}

Eigen::MatrixXd ColumnTransform::apply(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != norm.size()) {
    throw std::invalid_argument("ColumnTransform: column count mismatch");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      double v = x(r, c);
      if (!mad.empty()) v = std::clamp(v, mad[cu].lower(), mad[cu].upper());
      out(r, c) = apply_normalize(v, norm[cu]);
    }
  }
  return out;
}

}  // namespace greysvr
