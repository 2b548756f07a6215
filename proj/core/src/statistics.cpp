#include "suspvisc/statistics.hpp"

#include <cmath>

#include "suspvisc/errors.hpp"

namespace suspvisc {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> values) {
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value();
}

MeanEstimate mean_and_stderr(std::span<const double> samples) {
  MeanEstimate out;
  out.count = samples.size();
  if (samples.empty()) return out;
  out.mean = compensated_sum(samples) / static_cast<double>(samples.size());
  if (samples.size() < 2) return out;
  CompensatedSum ss;
  for (double v : samples) ss.add((v - out.mean) * (v - out.mean));
  const double n = static_cast<double>(samples.size());
  out.stderr_ = std::sqrt(ss.value() / (n - 1.0) / n);
  return out;
}

LinearFit weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& sigma, bool scale_by_residual) {
  const auto rows = design.rows();
  const auto cols = design.cols();
  if (rows != y.size() || rows != sigma.size()) {
    throw ValidationError("least squares: inconsistent sizes");
  }
  if (rows < cols) throw ValidationError("least squares: fewer points than parameters");
  Eigen::VectorXd w(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw ValidationError("least squares: non-positive uncertainty");
    }
    w[i] = 1.0 / sigma[i];
  }
  const Eigen::MatrixXd a = w.asDiagonal() * design;
  const Eigen::VectorXd b = w.asDiagonal() * y;
  const Eigen::MatrixXd normal = a.transpose() * a;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
    throw ValidationError("least squares: singular design");
  }
  LinearFit fit;
  fit.coefficients = ldlt.solve(a.transpose() * b);
  fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(cols, cols));
  fit.residuals = y - design * fit.coefficients;
  fit.chi_square = (w.asDiagonal() * fit.residuals).squaredNorm();
  fit.dof = static_cast<int>(rows - cols);
  fit.leverage.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    fit.leverage[i] = a.row(i) * fit.covariance * a.row(i).transpose();
  }
  if (scale_by_residual && fit.dof > 0) {
    fit.covariance *= fit.chi_square / fit.dof;
  }
  return fit;
}

PowerLawFit fit_decay_exponent(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("power-law fit: inconsistent sizes");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && std::abs(y[i]) > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(std::abs(y[i])));
    }
  }
  PowerLawFit out;
  out.points = lx.size();
  if (lx.size() < 2) throw ValidationError("power-law fit needs at least two positive points");
  Eigen::MatrixXd design(lx.size(), 2);
  Eigen::VectorXd rhs(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = lx[i];
    rhs[i] = ly[i];
  }
  const auto fit = weighted_least_squares(design, rhs, Eigen::VectorXd::Ones(lx.size()), true);
  out.exponent = -fit.coefficients[1];
  out.prefactor = std::exp(fit.coefficients[0]);
  out.exponent_stderr = fit.dof > 0 ? std::sqrt(std::max(0.0, fit.covariance(1, 1))) : 0.0;
  return out;
}

}  // namespace suspvisc
