#include "suspvisc/sphere_quadrature.hpp"

#include <cmath>
#include <numbers>

namespace suspvisc {

GaussRule gauss_legendre(int order) {
  if (order < 1) throw ValidationError("Gauss rule order must be >= 1");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return rule;
}

SurfaceRule sphere_rule(int dim, int order) {
  check_dimension(dim);
  if (order < 1) throw ValidationError("sphere rule order must be >= 1");
  SurfaceRule rule;
  rule.dim = dim;
  const int nphi = 2 * order;
  const double dphi = 2.0 * std::numbers::pi / nphi;
  if (dim == 2) {
    for (int j = 0; j < nphi; ++j) {
      const double phi = (j + 0.5) * dphi;
      rule.nodes.emplace_back(std::cos(phi), std::sin(phi), 0.0);
      rule.weights.push_back(dphi);
    }
    return rule;
  }
  const GaussRule g = gauss_legendre(order);
  for (int i = 0; i < order; ++i) {
    const double z = g.nodes[static_cast<std::size_t>(i)];
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int j = 0; j < nphi; ++j) {
      const double phi = (j + 0.5) * dphi;
      rule.nodes.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
      rule.weights.push_back(g.weights[static_cast<std::size_t>(i)] * dphi);
    }
  }
  return rule;
}

SurfaceIntegral integrate_sphere(int dim, const std::function<Eigen::VectorXd(const Point&)>& f,
                                 double rel_tol, double abs_tol, int start_order, int max_order) {
  auto apply = [&](int order) {
    const SurfaceRule rule = sphere_rule(dim, order);
    Eigen::VectorXd sum;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const Eigen::VectorXd v = f(rule.nodes[i]);
      if (sum.size() == 0) sum = Eigen::VectorXd::Zero(v.size());
      sum += rule.weights[i] * v;
    }
    return sum;
  };
  SurfaceIntegral out;
  out.order = start_order;
  out.value = apply(out.order);
  while (out.order < max_order) {
    const int next = 2 * out.order;
    Eigen::VectorXd v = apply(next);
    out.change = (v - out.value).cwiseAbs().maxCoeff();
    out.value = std::move(v);
    out.order = next;
    if (out.change <= rel_tol * out.value.cwiseAbs().maxCoeff() + abs_tol) return out;
  }
  throw ConvergenceError("sphere quadrature did not converge", out.change, out.order);
}

}  // namespace suspvisc
