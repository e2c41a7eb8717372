#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greysvr/gca.hpp"
#include "greysvr/preprocess.hpp"

namespace greysvr {

struct Hyperparams {
  double C = 1.0;        ///< penalty on tube violations (unscaled sum convention)
  double epsilon = 0.1;  ///< half-width of the insensitive tube
  double gamma = 1.0;    ///< RBF width: K(a, b) = exp(-gamma |a - b|^2)

  /// Throws std::invalid_argument unless C > 0, epsilon >= 0, gamma > 0.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct SolverOptions {
  double tolerance = 1e-5;                   ///< maximal KKT violation at exit
  std::uint64_t max_iterations = 10'000'000;  ///< pair updates before giving up
  std::size_t cache_limit = 4000;            ///< full kernel matrix up to this many samples
};

/// Epsilon-insensitive loss max(0, |y - f| - epsilon).
struct EpsilonLoss {
  double epsilon = 0.0;
  [[nodiscard]] double operator()(double y, double f) const noexcept;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);
double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double gamma);

/// x'_k = sqrt(w_k) x_k, so squared Euclidean distance between embedded rows
/// equals the weighted distance sum_k w_k (x_ik - x_jk)^2.
Eigen::VectorXd weighted_embed(const Eigen::VectorXd& x, const GreyWeights& w);
Eigen::MatrixXd weighted_embed(const Eigen::MatrixXd& x, const GreyWeights& w);

/// Full solution of the epsilon-SVR dual: one coefficient per training row.
struct DualSolution {
  Eigen::VectorXd beta;  ///< alpha_i - alpha*_i, each in [-C, C], summing to zero
  double bias = 0.0;
  std::uint64_t iterations = 0;
  double violation = 0.0;  ///< maximal KKT violation at exit
};

/// Two-variable coordinate ascent on the dual. Rows of `x` are used as given
/// (no embedding). Throws ConvergenceError if the iteration cap is reached.
DualSolution solve_svr_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                            const SolverOptions& options = {});

/// Dual objective sum(y_i b_i) - eps sum|b_i| - 1/2 b' K b (maximized by the
/// solver). Throws std::invalid_argument if `beta` is infeasible.
double dual_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                      const Eigen::VectorXd& beta);

/// A trained regressor. Support vectors are stored already embedded with the
/// feature weights; `predict` embeds query rows the same way.
struct SvrModel {
  Eigen::MatrixXd support_vectors;  ///< rows are embedded, normalized samples
  Eigen::VectorXd dual_coeffs;
  double bias = 0.0;
  Hyperparams hyper;
  std::optional<GreyWeights> feature_weights;  ///< empty for the classical model

  // Filled by the pipeline so a saved model can score raw data on its own.
  std::vector<std::string> feature_names;
  std::vector<NormParams> feature_norm;
  std::vector<MadParams> feature_clamp;
  std::optional<NormParams> target_norm;

  std::uint64_t iterations = 0;
  double violation = 0.0;

  [[nodiscard]] std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(support_vectors.cols());
  }
  [[nodiscard]] std::size_t support_count() const noexcept {
    return static_cast<std::size_t>(dual_coeffs.size());
  }
};

/// Trains on normalized features. When `weights` is given every row is
/// embedded first (feature-weighted SVR); otherwise the classical model.
SvrModel train_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                   const std::optional<GreyWeights>& weights = std::nullopt,
                   const SolverOptions& options = {});

/// f(x) = sum_i beta_i K(sv_i, x) + b, in normalized target units.
Eigen::VectorXd predict(const SvrModel& model, const Eigen::MatrixXd& x);

/// Versioned flat text format; reals written with 17 significant digits.
void write_model(std::ostream& out, const SvrModel& model);
SvrModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const SvrModel& model);
SvrModel load_model(const std::filesystem::path& path);

}  // namespace greysvr
