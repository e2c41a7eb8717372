#include "greysvr/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace greysvr {

namespace {

void check(std::span<const double> o, std::span<const double> p, std::size_t min_len) {
  if (o.size() != p.size()) throw std::invalid_argument("metric: length mismatch");
  if (o.size() < min_len) {
    throw std::invalid_argument("metric: need at least " + std::to_string(min_len) + " points");
  }
}

double relative(double better_minus_worse, double base) {
  return base == 0.0 ? 0.0 : 100.0 * better_minus_worse / base;
}

}  // namespace

double mse(std::span<const double> observed, std::span<const double> predicted) {
  check(observed, predicted, 1);
  double s = 0.0;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    const double d = observed[t] - predicted[t];
    s += d * d;
  }
  return s / static_cast<double>(observed.size());
}

double mae(std::span<const double> observed, std::span<const double> predicted) {
  check(observed, predicted, 1);
  double s = 0.0;
  for (std::size_t t = 0; t < observed.size(); ++t) s += std::abs(predicted[t] - observed[t]);
  return s / static_cast<double>(observed.size());
}

double ds(std::span<const double> observed, std::span<const double> predicted) {
  check(observed, predicted, 2);
  std::size_t hits = 0;
  for (std::size_t t = 1; t < observed.size(); ++t) {
    if ((observed[t] - observed[t - 1]) * (predicted[t] - predicted[t - 1]) >= 0.0) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(observed.size() - 1);
}

std::optional<double> scc(std::span<const double> observed, std::span<const double> predicted) {
  check(observed, predicted, 2);
  // Centered sums: algebraically the same ratio as the raw-sum form but
  // without its cancellation.
  const auto n = static_cast<double>(observed.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    mx += observed[t];
    my += predicted[t];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    const double dx = observed[t] - mx;
    const double dy = predicted[t] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::min(1.0, (sxy * sxy) / (sxx * syy));
}

EvalReport evaluate(std::span<const double> observed, std::span<const double> predicted) {
  return {mse(observed, predicted), mae(observed, predicted), ds(observed, predicted), scc(observed, predicted)};
}

ComparisonSummary compare(std::span<const EvalReport> a, std::span<const EvalReport> b) {
  if (a.size() != b.size()) throw std::invalid_argument("compare: report lists differ in length");
  ComparisonSummary s;
  s.n_stocks = a.size();
  double scc_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].mse < b[i].mse) ++s.wins.mse;
    if (a[i].mae < b[i].mae) ++s.wins.mae;
    if (a[i].ds > b[i].ds) ++s.wins.ds;
    s.improvement_pct.mse += relative(b[i].mse - a[i].mse, b[i].mse);
    s.improvement_pct.mae += relative(b[i].mae - a[i].mae, b[i].mae);
    s.improvement_pct.ds += relative(a[i].ds - b[i].ds, b[i].ds);
    if (a[i].scc && b[i].scc) {
      ++s.scc_pairs;
      if (*a[i].scc > *b[i].scc) ++s.wins.scc;
      scc_sum += relative(*a[i].scc - *b[i].scc, *b[i].scc);
    }
  }
  if (s.n_stocks > 0) {
    const auto n = static_cast<double>(s.n_stocks);
    s.improvement_pct.mse /= n;
    s.improvement_pct.mae /= n;
    s.improvement_pct.ds /= n;
  }
  if (s.scc_pairs > 0) s.improvement_pct.scc = scc_sum / static_cast<double>(s.scc_pairs);
  return s;
}

}  // namespace greysvr
