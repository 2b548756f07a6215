#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace suspvisc {

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double compensated_sum(std::span<const double> values);

/// Sample mean and standard error of the mean of i.i.d. samples. With a
/// single sample the standard error is reported as zero.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_and_stderr(std::span<const double> samples);

/// Weighted least squares y ~ X beta with weights w_i = 1/sigma_i^2.
/// `covariance` is (X^T W X)^{-1}; when `scale_by_residual` is set it is
/// multiplied by the reduced chi-square (for data with unknown scale).
struct LinearFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverage;
  double chi_square = 0.0;
  int dof = 0;
};

LinearFit weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& sigma, bool scale_by_residual);

/// Fit |y| ~ C x^{-exponent} by least squares in log-log coordinates.
struct PowerLawFit {
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  double prefactor = 0.0;
  std::size_t points = 0;
};

PowerLawFit fit_decay_exponent(std::span<const double> x, std::span<const double> y);

}  // namespace suspvisc
