#include "greysvr/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "greysvr/error.hpp"

namespace greysvr {

void Hyperparams::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw std::invalid_argument("C must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
}

double EpsilonLoss::operator()(double y, double f) const noexcept {
  return std::max(0.0, std::abs(y - f) - epsilon);
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double gamma) {
  if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
  return std::exp(-gamma * (a - b).squaredNorm());
}

Eigen::VectorXd weighted_embed(const Eigen::VectorXd& x, const GreyWeights& w) {
  if (static_cast<std::size_t>(x.size()) != w.size()) {
    throw std::invalid_argument("weighted_embed: dimension mismatch");
  }
  Eigen::VectorXd out(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) out(k) = std::sqrt(w.weights[static_cast<std::size_t>(k)]) * x(k);
  return out;
}

Eigen::MatrixXd weighted_embed(const Eigen::MatrixXd& x, const GreyWeights& w) {
  if (static_cast<std::size_t>(x.cols()) != w.size()) {
    throw std::invalid_argument("weighted_embed: dimension mismatch");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    out.col(k) = std::sqrt(w.weights[static_cast<std::size_t>(k)]) * x.col(k);
  }
  return out;
}

namespace {

constexpr double kTau = 1e-12;

/// Kernel rows K(i, .) over the training set. The whole matrix is kept for
/// small problems; larger ones recompute rows through a bounded LRU cache.
class KernelRows {
 public:
  KernelRows(const Eigen::MatrixXd& x, double gamma, std::size_t cache_limit)
      : x_(x), gamma_(gamma), n_(static_cast<std::size_t>(x.rows())) {
    if (n_ <= cache_limit) {
      full_.resize(x.rows(), x.rows());
      for (Eigen::Index j = 0; j < x.rows(); ++j) {
        full_(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < x.rows(); ++i) full_(i, j) = full_(j, i) = entry(i, j);
      }
    } else {
      constexpr std::size_t kBudgetBytes = std::size_t{256} << 20;
      capacity_ = std::max<std::size_t>(2, kBudgetBytes / (sizeof(double) * n_));
    }
  }

  [[nodiscard]] const double* row(std::size_t i) {
    if (full_.size() > 0) return full_.data() + i * n_;  // symmetric, column i == row i
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second.data();
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      r[j] = i == j ? 1.0 : entry(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    lru_.emplace_front(i, std::move(r));
    index_[i] = lru_.begin();
    return lru_.front().second.data();
  }

 private:
  [[nodiscard]] double entry(Eigen::Index i, Eigen::Index j) const {
    return std::exp(-gamma_ * (x_.row(i) - x_.row(j)).squaredNorm());
  }

  const Eigen::MatrixXd& x_;
  double gamma_;
  std::size_t n_;
  Eigen::MatrixXd full_;
  std::size_t capacity_ = 0;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

/// Bias from the free coefficients, else the midpoint of the interval allowed
/// by the KKT conditions of the bounded and zero coefficients.
double compute_bias(const Eigen::VectorXd& y, const Eigen::VectorXd& beta, const Eigen::VectorXd& g,
                    const Hyperparams& hyper) {
  const double bound_tol = 1e-12 * hyper.C;
  double sum = 0.0;
  std::size_t free = 0;
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double b = beta(i);
    const double a = std::abs(b);
    const double base = y(i) - g(i);
    if (a > bound_tol && a < hyper.C - bound_tol) {
      sum += base - (b > 0.0 ? hyper.epsilon : -hyper.epsilon);
      ++free;
    } else if (a <= bound_tol) {
      lb = std::max(lb, base - hyper.epsilon);
      ub = std::min(ub, base + hyper.epsilon);
    } else if (b > 0.0) {
      ub = std::min(ub, base - hyper.epsilon);
    } else {
      lb = std::max(lb, base + hyper.epsilon);
    }
  }
  if (free > 0) return sum / static_cast<double>(free);
  if (std::isinf(lb)) return ub;
  if (std::isinf(ub)) return lb;
  return 0.5 * (lb + ub);
}

}  // namespace

DualSolution solve_svr_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                            const SolverOptions& options) {
  hyper.validate();
  if (x.rows() == 0) throw std::invalid_argument("train_svr: no samples");
  if (x.rows() != y.size()) throw std::invalid_argument("train_svr: row count mismatch");
  if (!x.allFinite() || !y.allFinite()) throw DataError("train_svr: non-finite input");

  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t l2 = 2 * n;
  const double c = hyper.C;

  // Variables t < n are alpha_t (sign +1), t >= n are alpha*_{t-n} (sign -1).
  // Minimize 1/2 a'Qa + p'a with Q_ts = s_t s_u K, sum s_t a_t = 0, 0 <= a <= C.
  std::vector<double> alpha(l2, 0.0);
  std::vector<double> grad(l2);
  std::vector<signed char> sign(l2);
  for (std::size_t t = 0; t < n; ++t) {
    sign[t] = 1;
    sign[t + n] = -1;
    grad[t] = hyper.epsilon - y(static_cast<Eigen::Index>(t));
    grad[t + n] = hyper.epsilon + y(static_cast<Eigen::Index>(t));
  }

  KernelRows kernel(x, hyper.gamma, options.cache_limit);
  const auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  DualSolution sol;
  std::uint64_t iter = 0;
  double violation = std::numeric_limits<double>::infinity();
  while (true) {
    // Working set: i maximizes the KKT violation; j maximizes the second order
    // decrease among violating partners. Ties go to the lowest index.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = l2;
    for (std::size_t t = 0; t < n; ++t) {
      if (!upper(t) && -grad[t] > gmax) {
        gmax = -grad[t];
        i = t;
      }
    }
    for (std::size_t t = n; t < l2; ++t) {
      if (!lower(t) && grad[t] > gmax) {
        gmax = grad[t];
        i = t;
      }
    }

    // With an RBF kernel Q_tt = 1, so the curvature along (i, t) is
    // 2 - 2 K(i, t) whichever halves i and t come from.
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j = l2;
    double best = std::numeric_limits<double>::infinity();
    const double* ki = i < l2 ? kernel.row(i % n) : nullptr;
    const auto consider = [&](std::size_t t, double diff, double k) {
      if (diff <= 0.0) return;
      double quad = 2.0 - 2.0 * k;
      if (quad <= 0.0) quad = kTau;
      const double obj = -(diff * diff) / quad;
      if (obj < best) {
        best = obj;
        j = t;
      }
    };
    if (ki != nullptr) {
      for (std::size_t t = 0; t < n; ++t) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, grad[t]);
        consider(t, gmax + grad[t], ki[t]);
      }
      for (std::size_t t = n; t < l2; ++t) {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -grad[t]);
        consider(t, gmax - grad[t], ki[t - n]);
      }
    }

    violation = (i == l2) ? 0.0 : std::max(0.0, gmax + gmax2);
    if (i == l2 || j == l2 || violation < options.tolerance) break;
    if (iter >= options.max_iterations) {
      throw ConvergenceError("SVR solver did not converge within " + std::to_string(options.max_iterations) +
                                 " iterations (KKT violation " + std::to_string(violation) + ")",
                             violation);
    }
    ++iter;

    ki = kernel.row(i % n);
    const double* kj = kernel.row(j % n);
    const double qij = sign[i] * sign[j] * ki[j % n];
    const double old_i = alpha[i];
    const double old_j = alpha[j];

    if (sign[i] != sign[j]) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    const double si = sign[i] * di;
    const double sj = sign[j] * dj;
    for (std::size_t r = 0; r < n; ++r) {
      const double u = si * ki[r] + sj * kj[r];
      grad[r] += u;
      grad[r + n] -= u;
    }
  }

  sol.iterations = iter;
  sol.violation = violation;
  sol.beta.resize(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) sol.beta(static_cast<Eigen::Index>(t)) = alpha[t] - alpha[t + n];

  // g_i = sum_j beta_j K_ij, recovered from the gradient of alpha_i:
  // grad_i = eps - y_i + g_i.
  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    g(static_cast<Eigen::Index>(t)) = grad[t] - hyper.epsilon + y(static_cast<Eigen::Index>(t));
  }
  sol.bias = compute_bias(y, sol.beta, g, hyper);
  return sol;
}

double dual_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                      const Eigen::VectorXd& beta) {
  hyper.validate();
  if (x.rows() != y.size() || beta.size() != y.size()) {
    throw std::invalid_argument("dual_objective: size mismatch");
  }
  const double scale = std::max(1.0, hyper.C * static_cast<double>(beta.size()));
  if (std::abs(beta.sum()) > 1e-8 * scale) throw std::invalid_argument("dual_objective: sum(beta) != 0");
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (std::abs(beta(i)) > hyper.C * (1.0 + 1e-12)) {
      throw std::invalid_argument("dual_objective: coefficient outside [-C, C]");
    }
  }
  double quad = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (beta(i) == 0.0) continue;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      if (beta(j) == 0.0) continue;
      quad += beta(i) * beta(j) * std::exp(-hyper.gamma * (x.row(i) - x.row(j)).squaredNorm());
    }
  }
  return y.dot(beta) - hyper.epsilon * beta.cwiseAbs().sum() - 0.5 * quad;
}

SvrModel train_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                   const std::optional<GreyWeights>& weights, const SolverOptions& options) {
  const Eigen::MatrixXd embedded = weights ? weighted_embed(x, *weights) : x;
  const DualSolution sol = solve_svr_dual(embedded, y, hyper, options);

  SvrModel m;
  m.hyper = hyper;
  m.feature_weights = weights;
  m.bias = sol.bias;
  m.iterations = sol.iterations;
  m.violation = sol.violation;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < sol.beta.size(); ++i) {
    if (sol.beta(i) != 0.0) sv.push_back(i);
  }
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.dual_coeffs.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    m.support_vectors.row(r) = embedded.row(sv[k]);
    m.dual_coeffs(r) = sol.beta(sv[k]);
  }
  return m;
}

Eigen::VectorXd predict(const SvrModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.dimension()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  if (model.feature_weights && static_cast<std::size_t>(x.cols()) != model.feature_weights->size()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  const Eigen::MatrixXd q = model.feature_weights ? weighted_embed(x, *model.feature_weights) : x;
  Eigen::VectorXd out(q.rows());
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    double f = model.bias;
    for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s) {
      f += model.dual_coeffs(s) *
           std::exp(-model.hyper.gamma * (model.support_vectors.row(s) - q.row(r)).squaredNorm());
    }
    out(r) = f;
  }
  return out;
}

}  // namespace greysvr
