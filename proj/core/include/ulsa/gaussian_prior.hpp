#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ulsa/tensor.hpp"

namespace ulsa {

/// Squared-exponential kernel over stack coordinates, separable per axis.
/// Length scales are in pixels (frames for the temporal axis).
struct SeKernel {
  double temporal = 1.0;
  double axial = 4.0;
  double lateral = 2.0;
  double elevation = 2.0;  // polar3d only
  double variance = 0.25;
};

inline constexpr double kMinEigenvalue = 1e-8;

/// N(μ, Σ) over a stack-shaped tensor.
///
/// Σ is stored by its eigendecomposition. It is either a Kronecker product of
/// per-axis factors (kernel priors) or a single dense factor over the
/// flattened tensor (explicit matrices, d ≤ 256). Eigenvalues are lifted so
/// that the smallest is at least 1e-8.
class GaussianPrior {
 public:
  GaussianPrior() = default;

  /// Explicit covariance. Throws InvalidInput if d > 256, if Σ is not
  /// symmetric, or if it has a clearly negative eigenvalue.
  static GaussianPrior dense(Tensor mean, const Eigen::MatrixXd& cov);

  /// Kernel prior for a stack [W, n_ax, n_lat] or [W, n_ax, n_el, n_lat].
  static GaussianPrior squared_exponential(Tensor mean, const SeKernel& kernel);

  const Tensor& mean() const noexcept { return mean_; }
  const Shape& shape() const noexcept { return mean_.shape(); }
  std::size_t dim() const noexcept { return mean_.size(); }

  /// Eigenvalues of Σ in the internal (Kronecker) index order, after jitter.
  const std::vector<double>& eigenvalues() const noexcept { return lambda_; }
  double min_eigenvalue() const;

  /// Q diag(gain) Qᵀ x, gain indexed like eigenvalues().
  Tensor apply_spectral(const Tensor& x, std::span<const double> gain) const;

  /// Σ as a dense d×d matrix (after jitter). Intended for d up to a few
  /// thousand.
  Eigen::MatrixXd covariance() const;

 private:
  struct Factor {
    Eigen::MatrixXd q;  // columns are eigenvectors
    Eigen::VectorXd lambda;
  };

  void finalize(double variance);
  /// In place: apply q (or qᵀ) of every factor along its axis.
  void transform(std::vector<double>& v, bool transpose) const;

  Tensor mean_;
  std::vector<std::size_t> axes_;  // factor sizes, product = dim
  std::vector<Factor> factors_;
  std::vector<double> lambda_;
};

/// Dense SE kernel matrix exp(−(i−j)²/(2ℓ²)) over n points.
Eigen::MatrixXd se_kernel_matrix(std::size_t n, double length_scale);

}  // namespace ulsa
