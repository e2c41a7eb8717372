#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace greysvr {

enum class InitialOperator { None, InitialValue, Mean };

InitialOperator parse_initial_operator(std::string_view name);

/// Reference sequence X0 and factor sequences X1..Xm, all of length n.
struct GreySeriesSet {
  std::vector<double> reference;
  std::vector<std::vector<double>> factors;
  double tau = 0.5;
};

/// Grey relational degrees and the feature weights derived from them.
struct GreyWeights {
  std::vector<double> degrees;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
  /// All weights 1/m, degrees all 1.
  static GreyWeights uniform(std::size_t m);
};

/// none: identity; initial-value: s(k)/s(1); mean: s(k)/mean(s).
std::vector<double> apply_initial_operator(std::span<const double> s, InitialOperator mode);

/// Pointwise grey relational coefficients gamma_i(k) for every factor.
std::vector<std::vector<double>> grey_relational_coefficients(const GreySeriesSet& set);

/// delta_i = mean_k gamma_i(k). When every factor equals the reference
/// (maximum deviation zero) all degrees are 1.
std::vector<double> grey_relational_degrees(const GreySeriesSet& set);

/// w_i = delta_i / sum(delta).
GreyWeights normalize_weights(std::span<const double> degrees);

/// Convenience: operator, degrees and weights in one call.
GreyWeights grey_weights(const GreySeriesSet& set, InitialOperator op = InitialOperator::None);

}  // namespace greysvr
