#pragma once

// Reference computations used only by the tests. Each is written independently
// of the library code path it checks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) d2 += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      k(i, j) = std::exp(-gamma * d2);
    }
  }
  return k;
}

/// sum y_i b_i - eps sum |b_i| - 1/2 b' K b
inline double beta_objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double eps,
                             const Eigen::VectorXd& beta) {
  return y.dot(beta) - eps * beta.cwiseAbs().sum() - 0.5 * beta.dot(k * beta);
}

/// Euclidean projection onto {0 <= a <= C, s'a = 0} with s = (+1..., -1...),
/// found exactly from the breakpoints of the piecewise-linear multiplier
/// equation.
inline Eigen::VectorXd project(const Eigen::VectorXd& z, const Eigen::VectorXd& s, double c) {
  const auto clip = [c](double v) { return std::clamp(v, 0.0, c); };
  const auto h = [&](double lam) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < z.size(); ++t) acc += s(t) * clip(z(t) - lam * s(t));
    return acc;
  };
  std::vector<double> bp;
  for (Eigen::Index t = 0; t < z.size(); ++t) {
    bp.push_back(s(t) * z(t));
    bp.push_back(s(t) * (z(t) - c));
  }
  std::sort(bp.begin(), bp.end());
  // h is non-increasing; find adjacent breakpoints bracketing the root.
  double lam = bp.front();
  if (h(bp.front()) <= 0.0) {
    lam = bp.front();
  } else if (h(bp.back()) >= 0.0) {
    lam = bp.back();
  } else {
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
      const double h0 = h(bp[i]);
      const double h1 = h(bp[i + 1]);
      if (h0 >= 0.0 && h1 <= 0.0) {
        lam = h0 == h1 ? bp[i] : bp[i] + (bp[i + 1] - bp[i]) * h0 / (h0 - h1);
        break;
      }
    }
  }
  Eigen::VectorXd out(z.size());
  for (Eigen::Index t = 0; t < z.size(); ++t) out(t) = clip(z(t) - lam * s(t));
  return out;
}

struct PgResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  double stationarity = 0.0;
  long iterations = 0;
};

/// Accelerated projected gradient (with restart) on the 2n-variable dual,
/// run until the projected-gradient mapping falls below `tol`.
inline PgResult projected_gradient_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c,
                                        double eps, double gamma, double tol = 1e-10,
                                        long max_iter = 5'000'000) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd k = rbf_gram(x, gamma);
  Eigen::MatrixXd q(2 * n, 2 * n);
  q << k, -k, -k, k;
  Eigen::VectorXd p(2 * n);
  p << (eps - y.array()).matrix(), (eps + y.array()).matrix();
  Eigen::VectorXd s(2 * n);
  s << Eigen::VectorXd::Ones(n), -Eigen::VectorXd::Ones(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
  const double lip = std::max(eig.eigenvalues().maxCoeff(), 1e-12);

  const auto f = [&](const Eigen::VectorXd& a) { return 0.5 * a.dot(q * a) + p.dot(a); };
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd v = a;
  double theta = 1.0;
  PgResult r;
  for (long it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd a_next = project(v - (q * v + p) / lip, s, c);
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    if (theta > 1.0 && f(a_next) > f(a)) {
      // Restart momentum.
      v = a;
      theta = 1.0;
      continue;
    }
    v = a_next + ((theta - 1.0) / theta_next) * (a_next - a);
    a = a_next;
    theta = theta_next;
    r.iterations = it + 1;

    if (it % 50 == 0) {
      const Eigen::VectorXd g = q * a + p;
      const double stat = (a - project(a - g / lip, s, c)).cwiseAbs().maxCoeff() * lip;
      if (stat <= tol) {
        r.stationarity = stat;
        break;
      }
      r.stationarity = stat;
    }
  }
  r.beta = a.head(n) - a.tail(n);
  r.objective = -f(a);
  return r;
}

/// Normal equations solve (X'X) b = X'y by Cholesky.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).llt().solve(x.transpose() * y);
}

/// Neumaier-compensated sum.
template <typename Range>
double compensated_sum(const Range& values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

}  // namespace oracle
