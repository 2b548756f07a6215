#include "suspvisc/analytic_sphere.hpp"

#include <cmath>
#include <sstream>

#include "suspvisc/log.hpp"
#include "suspvisc/sphere_quadrature.hpp"

namespace suspvisc {

namespace {

double frob2(const Matrix& e) { return (e.array() * e.array()).sum(); }

void check_strain(const Matrix& e, int dim) {
  check_dimension(dim);
  if (!e.allFinite() || !is_trace_free_symmetric(e, dim, 1e-12)) {
    throw ValidationError("strain must be a trace-free symmetric matrix");
  }
}

double cubic_scale(double outer) { return std::isfinite(outer) ? outer * outer : 1.0; }

}  // namespace

const char* to_string(CellKind kind) {
  switch (kind) {
    case CellKind::whole_space:
      return "whole-space";
    case CellKind::clamped:
      return "clamped";
    case CellKind::traction_free:
      return "traction-free";
  }
  return "unknown";
}

RadialAnsatz::RadialAnsatz(int dim, CellKind kind, double outer_radius, const Matrix& strain,
                           const std::array<double, 4>& coefficients)
    : dim_(dim), kind_(kind), outer_(outer_radius), strain_(strain), coef_(coefficients) {
  check_dimension(dim);
}

std::vector<std::pair<double, double>> RadialAnsatz::p_terms() const {
  const double a = dim_ + 2.0;
  const double rs = cubic_scale(outer_);
  std::vector<std::pair<double, double>> out;
  if (coef_[0] != 0.0) out.emplace_back(0.0, coef_[0]);
  if (coef_[1] != 0.0) out.emplace_back(2.0, coef_[1] * a / rs);
  if (coef_[2] != 0.0) out.emplace_back(-a, 2.0 * coef_[2]);
  return out;
}

std::vector<std::pair<double, double>> RadialAnsatz::q_terms() const {
  const double a = dim_ + 2.0;
  const double rs = cubic_scale(outer_);
  std::vector<std::pair<double, double>> out;
  if (coef_[1] != 0.0) out.emplace_back(0.0, -2.0 * coef_[1] / rs);
  if (coef_[2] != 0.0) out.emplace_back(-a - 2.0, -a * coef_[2]);
  if (coef_[3] != 0.0) out.emplace_back(-a, coef_[3]);
  return out;
}

RadialProfile RadialAnsatz::profile(double r) const {
  const double d = dim_;
  const double a = d + 2.0;
  const double rs = cubic_scale(outer_);
  RadialProfile f;
  f.p = coef_[0];

  const double c1 = coef_[1] / rs;
  f.p += c1 * a * r * r;
  f.dp += c1 * 2.0 * a * r;
  f.d2p += c1 * 2.0 * a;
  f.q += -2.0 * c1;
  f.s += c1 * (d * d + 4.0 * d);

  const double c2 = coef_[2];
  const double ra = std::pow(r, -a);
  f.p += c2 * 2.0 * ra;
  f.dp += c2 * (-2.0 * a) * ra / r;
  f.d2p += c2 * 2.0 * a * (a + 1.0) * ra / (r * r);
  f.q += c2 * (-a) * ra / (r * r);
  f.dq += c2 * a * (a + 2.0) * ra / (r * r * r);
  f.d2q += c2 * (-a) * (a + 2.0) * (a + 3.0) * ra / (r * r * r * r);

  const double c3 = coef_[3];
  f.q += c3 * ra;
  f.dq += c3 * (-a) * ra / r;
  f.d2q += c3 * a * (a + 1.0) * ra / (r * r);
  f.s += c3 * 2.0 * ra;
  f.ds += c3 * (-2.0 * a) * ra / r;
  return f;
}

Point RadialAnsatz::velocity(const Point& x) const {
  const RadialProfile f = profile(x.norm());
  const Point ex = strain_ * x;
  return f.p * ex + f.q * x.dot(ex) * x;
}

Matrix RadialAnsatz::gradient(const Point& x) const {
  const double r = x.norm();
  const RadialProfile f = profile(r);
  const Point ex = strain_ * x;
  const double qq = x.dot(ex);
  Matrix g = f.p * strain_ + (f.dp / r) * ex * x.transpose() +
             f.q * (2.0 * x * ex.transpose() + qq * Matrix::Identity()) +
             (f.dq / r) * qq * x * x.transpose();
  for (int i = dim_; i < 3; ++i) {
    g.row(i).setZero();
    g.col(i).setZero();
  }
  return g;
}

double RadialAnsatz::pressure(const Point& x) const {
  return profile(x.norm()).s * x.dot(strain_ * x);
}

Matrix RadialAnsatz::stress(const Point& x) const {
  const Matrix g = gradient(x);
  Matrix s = g + g.transpose();
  const double pi = pressure(x);
  for (int i = 0; i < dim_; ++i) s(i, i) -= pi;
  return s;
}

Point RadialAnsatz::traction(const Point& x) const { return stress(x) * (x / x.norm()); }

double RadialAnsatz::residual(double r) const {
  const double d = dim_;
  const RadialProfile f = profile(r);
  auto rel = [](double value, double scale) { return scale > 0.0 ? std::abs(value) / scale : 0.0; };
  const double re = -f.d2p - (d + 1.0) * f.dp / r - 4.0 * f.q + 2.0 * f.s;
  const double se = std::abs(f.d2p) + (d + 1.0) * std::abs(f.dp / r) + 4.0 * std::abs(f.q) +
                    2.0 * std::abs(f.s);
  const double rq = -f.d2q - (d + 5.0) * f.dq / r + f.ds / r;
  const double sq = std::abs(f.d2q) + (d + 5.0) * std::abs(f.dq / r) + std::abs(f.ds / r);
  const double dv = f.dp / r + r * f.dq + (d + 2.0) * f.q;
  const double sd = std::abs(f.dp / r) + std::abs(r * f.dq) + (d + 2.0) * std::abs(f.q);
  return std::max({rel(re, se), rel(rq, sq), rel(dv, sd)});
}

double RadialAnsatz::energy() const {
  const double d = dim_;
  const double vb = unit_ball_volume(dim_);
  const double e2 = frob2(strain_);
  const RadialProfile f = profile(1.0);
  const double te = 2.0 * f.p + f.dp + 2.0 * f.q;
  const double tq = 4.0 * f.q + 2.0 * f.dq + f.dp - f.s;
  return vb * e2 + 0.5 * (te * vb * e2 + tq * 2.0 * vb * e2 / (d + 2.0));
}

RadialAnsatz single_sphere_solution(int dim, const Matrix& strain) {
  check_strain(strain, dim);
  const double a = dim + 2.0;
  return RadialAnsatz(dim, CellKind::whole_space, std::numeric_limits<double>::infinity(), strain,
                      {0.0, 0.0, -0.5, -0.5 * a});
}

RadialAnsatz cell_model(int dim, double radius, CellKind kind, const Matrix& strain) {
  check_strain(strain, dim);
  if (!(radius > 1.0) || !std::isfinite(radius)) throw ValidationError("cell radius must exceed 1");
  if (kind == CellKind::whole_space) return single_sphere_solution(dim, strain);

  Eigen::Matrix4d sys;
  for (int b = 0; b < 4; ++b) {
    std::array<double, 4> unit{};
    unit[static_cast<std::size_t>(b)] = 1.0;
    const RadialAnsatz basis(dim, kind, radius, strain, unit);
    const RadialProfile in = basis.profile(1.0);
    const RadialProfile out = basis.profile(radius);
    sys(0, b) = in.p;
    sys(1, b) = in.q;
    if (kind == CellKind::clamped) {
      sys(2, b) = out.p;
      sys(3, b) = out.q;
    } else {
      const double r = radius;
      sys(2, b) = 2.0 * out.p + r * out.dp + 2.0 * r * r * out.q;
      sys(3, b) = 4.0 * out.q + 2.0 * r * out.dq + out.dp / r - out.s;
    }
  }
  const Eigen::Vector4d rhs(-1.0, 0.0, 0.0, 0.0);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(sys);
  const auto sv = svd.singularValues();
  if (sv(3) == 0.0) throw Error("cell model system is singular");
  const double cond = sv(0) / sv(3);
  if (cond > 1e12) {
    std::ostringstream os;
    os << "cell model at R = " << radius << " is ill-conditioned (condition " << cond << ")";
    log_warning(os.str());
  }
  const Eigen::Vector4d c = sys.fullPivLu().solve(rhs);
  return RadialAnsatz(dim, kind, radius, strain, {c(0), c(1), c(2), c(3)});
}

double whole_space_energy(int dim, const Matrix& strain) {
  check_strain(strain, dim);
  return 0.5 * (dim + 2.0) * unit_ball_volume(dim) * frob2(strain);
}

KernelValue bg_far_kernel(int dim, const Point& y, const Matrix& strain) {
  check_strain(strain, dim);
  for (int k = dim; k < 3; ++k) {
    if (y[k] != 0.0) throw ValidationError("offset has components outside the dimension");
  }
  if (!(y.norm() > 2.0)) throw ValidationError("offset must exceed 2 (disjoint spheres)");
  const RadialAnsatz single = single_sphere_solution(dim, strain);
  auto integrand = [&](const Point& nu) {
    const Point total_traction = single.traction(nu) + 2.0 * (strain * nu);
    Eigen::VectorXd v(1);
    v(0) = single.velocity(nu - y).dot(total_traction);
    return v;
  };
  const SurfaceIntegral s = integrate_sphere(dim, integrand, 1e-10, 1e-16);
  return {s.value(0), s.order, s.change};
}

Point single_sphere_net_force(int dim, const Matrix& strain) {
  const RadialAnsatz single = single_sphere_solution(dim, strain);
  auto integrand = [&](const Point& nu) {
    const Point t = single.traction(nu) + 2.0 * (strain * nu);
    return Eigen::VectorXd(t);
  };
  const SurfaceIntegral s = integrate_sphere(dim, integrand, 1e-12, 1e-15);
  return Point(s.value(0), s.value(1), s.value(2));
}

}  // namespace suspvisc
