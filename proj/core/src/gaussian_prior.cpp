#include "ulsa/gaussian_prior.hpp"

#include <algorithm>
#include <cmath>

#include "ulsa/errors.hpp"

namespace ulsa {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd se_kernel_matrix(std::size_t n, double length_scale) {
  ULSA_REQUIRE(length_scale > 0.0, "se kernel: length scale must be > 0");
  Eigen::MatrixXd k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      k(i, j) = std::exp(-d * d / (2.0 * length_scale * length_scale));
    }
  }
  return k;
}

GaussianPrior GaussianPrior::dense(Tensor mean, const Eigen::MatrixXd& cov) {
  const auto d = static_cast<Eigen::Index>(mean.size());
  ULSA_REQUIRE(d >= 1 && d <= 256, "gaussian prior: dense covariance needs 1 <= d <= 256");
  ULSA_REQUIRE(cov.rows() == d && cov.cols() == d,
               "gaussian prior: covariance is " + std::to_string(cov.rows()) + "x" +
                   std::to_string(cov.cols()) + ", mean has d = " + std::to_string(d));
  ULSA_REQUIRE(cov.allFinite(), "gaussian prior: covariance has non-finite entries");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  ULSA_REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
               "gaussian prior: covariance is not symmetric");
  GaussianPrior p;
  p.mean_ = std::move(mean);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  p.axes_ = {static_cast<std::size_t>(d)};
  p.factors_.push_back({es.eigenvectors(), es.eigenvalues()});
  p.finalize(1.0);
  return p;
}

GaussianPrior GaussianPrior::squared_exponential(Tensor mean, const SeKernel& k) {
  const Shape shape = mean.shape();
  ULSA_REQUIRE(shape.size() == 3 || shape.size() == 4,
               "gaussian prior: kernel prior needs a [W, ax, (el,) lat] mean, got " +
                   shape_string(shape));
  ULSA_REQUIRE(k.variance > 0.0, "gaussian prior: variance must be > 0");
  std::vector<double> scales{k.temporal, k.axial};
  if (shape.size() == 4) scales.push_back(k.elevation);
  scales.push_back(k.lateral);

  GaussianPrior p;
  p.mean_ = std::move(mean);
  p.axes_ = shape;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(se_kernel_matrix(shape[a], scales[a]));
    p.factors_.push_back({es.eigenvectors(), es.eigenvalues()});
  }
  p.finalize(k.variance);
  return p;
}

void GaussianPrior::finalize(double variance) {
  lambda_.assign(1, variance);
  for (const auto& f : factors_) {
    std::vector<double> next;
    next.reserve(lambda_.size() * static_cast<std::size_t>(f.lambda.size()));
    for (double l : lambda_) {
      for (Eigen::Index i = 0; i < f.lambda.size(); ++i) next.push_back(l * f.lambda(i));
    }
    lambda_ = std::move(next);
  }
  const auto [lo, hi] = std::minmax_element(lambda_.begin(), lambda_.end());
  ULSA_REQUIRE(*lo >= -1e-8 * std::max(1.0, *hi),
               "gaussian prior: covariance is not positive definite (min eigenvalue " +
                   std::to_string(*lo) + ")");
  const double lift = std::max(0.0, kMinEigenvalue - *lo);
  for (double& l : lambda_) l += lift;
}

double GaussianPrior::min_eigenvalue() const {
  return *std::min_element(lambda_.begin(), lambda_.end());
}

void GaussianPrior::transform(std::vector<double>& v, bool transpose) const {
  std::vector<double> out(v.size());
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const std::size_t n = axes_[a];
    const std::size_t inner = v.size() / (outer * n);
    const auto& q = factors_[a].q;
    for (std::size_t o = 0; o < outer; ++o) {
      const auto off = static_cast<std::ptrdiff_t>(o * n * inner);
      Eigen::Map<const RowMat> x(v.data() + off, static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(inner));
      Eigen::Map<RowMat> y(out.data() + off, static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(inner));
      if (transpose) {
        y.noalias() = q.transpose() * x;
      } else {
        y.noalias() = q * x;
      }
    }
    v.swap(out);
    outer *= n;
  }
}

Tensor GaussianPrior::apply_spectral(const Tensor& x, std::span<const double> gain) const {
  ULSA_REQUIRE(x.size() == dim(), "gaussian prior: dimension mismatch (" +
                                      std::to_string(x.size()) + " vs " +
                                      std::to_string(dim()) + ")");
  ULSA_REQUIRE(gain.size() == dim(), "gaussian prior: gain size mismatch");
  std::vector<double> v(x.values().begin(), x.values().end());
  transform(v, true);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= gain[i];
  transform(v, false);
  return Tensor(x.shape(), std::move(v));
}

Eigen::MatrixXd GaussianPrior::covariance() const {
  const std::size_t d = dim();
  Eigen::MatrixXd cov(d, d);
  Tensor e(Shape{d}, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    e[j] = 1.0;
    const Tensor col = apply_spectral(e, lambda_);
    for (std::size_t i = 0; i < d; ++i) cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    e[j] = 0.0;
  }
  return cov;
}

}  // namespace ulsa
