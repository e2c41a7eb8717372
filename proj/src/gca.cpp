#include "greysvr/gca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "greysvr/error.hpp"

namespace greysvr {

InitialOperator parse_initial_operator(std::string_view name) {
  if (name == "none") return InitialOperator::None;
  if (name == "initial-value") return InitialOperator::InitialValue;
  if (name == "mean") return InitialOperator::Mean;
  throw ConfigError("unknown GCA initial operator '" + std::string(name) + "'");
}

GreyWeights GreyWeights::uniform(std::size_t m) {
  return {std::vector<double>(m, 1.0), std::vector<double>(m, 1.0 / static_cast<double>(m))};
}

std::vector<double> apply_initial_operator(std::span<const double> s, InitialOperator mode) {
  std::vector<double> out(s.begin(), s.end());
  if (mode == InitialOperator::None || s.empty()) return out;
  const double divisor = mode == InitialOperator::InitialValue
                             ? s.front()
                             : std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  if (divisor == 0.0) throw DataError("initial operator: zero divisor");
  for (double& v : out) v /= divisor;
  return out;
}

namespace {

void validate(const GreySeriesSet& set) {
  const std::size_t n = set.reference.size();
  if (n == 0) throw std::invalid_argument("grey analysis: empty reference sequence");
  if (set.factors.empty()) throw std::invalid_argument("grey analysis: no factor sequences");
  for (const auto& f : set.factors) {
    if (f.size() != n) throw std::invalid_argument("grey analysis: factor length differs from reference");
  }
  if (!(set.tau > 0.0 && set.tau < 1.0)) throw std::invalid_argument("grey analysis: tau must lie in (0, 1)");
}

}  // namespace

std::vector<std::vector<double>> grey_relational_coefficients(const GreySeriesSet& set) {
  validate(set);
  const std::size_t n = set.reference.size();

  std::vector<std::vector<double>> delta(set.factors.size(), std::vector<double>(n));
  double big = 0.0;
  double small = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.factors.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double d = std::abs(set.reference[k] - set.factors[i][k]);
      delta[i][k] = d;
      big = std::max(big, d);
      small = std::min(small, d);
    }
  }

  for (auto& row : delta) {
    for (double& d : row) d = big == 0.0 ? 1.0 : (small + set.tau * big) / (d + set.tau * big);
  }
  return delta;
}

std::vector<double> grey_relational_degrees(const GreySeriesSet& set) {
  const auto gamma = grey_relational_coefficients(set);
  std::vector<double> degrees;
  degrees.reserve(gamma.size());
  for (const auto& row : gamma) {
    degrees.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
  }
  return degrees;
}

GreyWeights normalize_weights(std::span<const double> degrees) {
  if (degrees.empty()) throw std::invalid_argument("normalize_weights: no degrees");
  for (double d : degrees) {
    if (!(d > 0.0)) throw std::invalid_argument("normalize_weights: degrees must be positive");
  }
  const double total = std::accumulate(degrees.begin(), degrees.end(), 0.0);
  GreyWeights w;
  w.degrees.assign(degrees.begin(), degrees.end());
  w.weights.reserve(degrees.size());
  for (double d : degrees) w.weights.push_back(d / total);
  return w;
}

GreyWeights grey_weights(const GreySeriesSet& set, InitialOperator op) {
  GreySeriesSet prepared;
  prepared.tau = set.tau;
  prepared.reference = apply_initial_operator(set.reference, op);
  for (const auto& f : set.factors) prepared.factors.push_back(apply_initial_operator(f, op));
  return normalize_weights(grey_relational_degrees(prepared));
}

}  // namespace greysvr
