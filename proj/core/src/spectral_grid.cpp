#include "suspvisc/spectral_grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace suspvisc {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr double kHourglassTol = 1e-12;

}  // namespace

SpectralGrid::SpectralGrid(int dim, int n, double box) : dim_(dim), n_(n), box_(box) {
  check_dimension(dim);
  if (n < 16 || n % 2 != 0) throw ValidationError("grid resolution must be even and >= 16");
  if (!(box > 0.0) || !std::isfinite(box)) throw ValidationError("box side must be positive");
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::size_t half = nn / 2 + 1;
  real_size_ = dim == 2 ? nn * nn : nn * nn * nn;
  spectral_size_ = dim == 2 ? nn * half : nn * nn * half;

  const double h = spacing();
  modes_.resize(spectral_size_);
  for (std::size_t k = 0; k < spectral_size_; ++k) {
    const auto m = wave_numbers(k);
    std::array<cplx, 3> shift{};
    std::array<cplx, 3> avg{};
    std::array<double, 3> s{};
    std::array<double, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double kh = a < dim ? 2.0 * std::numbers::pi * m[a] / n : 0.0;
      shift[a] = (std::polar(1.0, kh) - 1.0) / h;
      avg[a] = 0.5 * (1.0 + std::polar(1.0, kh));
      s[a] = std::sin(0.5 * kh);
      c[a] = std::cos(0.5 * kh);
    }
    Mode& md = modes_[k];
    std::array<double, 3> kappa{};
    for (int a = 0; a < dim; ++a) {
      cplx x = shift[a];
      double kp = s[a];
      for (int b = 0; b < dim; ++b) {
        if (b == a) continue;
        x *= avg[b];
        kp *= c[b];
      }
      md.xi[a] = x;
      kappa[a] = kp;
    }
    const double kn = std::sqrt(kappa[0] * kappa[0] + kappa[1] * kappa[1] + kappa[2] * kappa[2]);
    if (kn > kHourglassTol) {
      for (int a = 0; a < dim; ++a) md.dir[a] = kappa[a] / kn;
      md.xi2 = std::norm(md.xi[0]) + std::norm(md.xi[1]) + std::norm(md.xi[2]);
    } else {
      md.xi = {};
      md.xi2 = 0.0;
    }
    const int last = static_cast<int>(k % half);
    md.weight = (last == 0 || last == n / 2) ? 1.0 : 2.0;
  }

  std::lock_guard lock(planner_mutex());
  auto* rbuf = fftw_alloc_real(real_size_);
  auto* cbuf = fftw_alloc_complex(spectral_size_);
  if (dim == 2) {
    plan_forward_ = fftw_plan_dft_r2c_2d(n, n, rbuf, cbuf, FFTW_ESTIMATE);
    plan_inverse_ = fftw_plan_dft_c2r_2d(n, n, cbuf, rbuf, FFTW_ESTIMATE);
  } else {
    plan_forward_ = fftw_plan_dft_r2c_3d(n, n, n, rbuf, cbuf, FFTW_ESTIMATE);
    plan_inverse_ = fftw_plan_dft_c2r_3d(n, n, n, cbuf, rbuf, FFTW_ESTIMATE);
  }
  fftw_free(rbuf);
  fftw_free(cbuf);
  if (plan_forward_ == nullptr || plan_inverse_ == nullptr) throw Error("FFT planning failed");
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard lock(planner_mutex());
  if (plan_forward_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  if (plan_inverse_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
}

double SpectralGrid::cell_volume() const { return std::pow(spacing(), dim_); }

std::array<int, 3> SpectralGrid::wave_numbers(std::size_t k) const {
  const std::size_t nn = static_cast<std::size_t>(n_);
  const std::size_t half = nn / 2 + 1;
  std::array<int, 3> m{};
  const int last = static_cast<int>(k % half);
  const std::size_t rest = k / half;
  auto wrap = [&](std::size_t i) {
    const int v = static_cast<int>(i);
    return v >= n_ / 2 ? v - n_ : v;
  };
  if (dim_ == 2) {
    m[0] = wrap(rest);
    m[1] = last;
  } else {
    m[0] = wrap(rest / nn);
    m[1] = wrap(rest % nn);
    m[2] = last;
  }
  return m;
}

std::array<int, 3> SpectralGrid::real_indices(std::size_t idx) const {
  const std::size_t nn = static_cast<std::size_t>(n_);
  if (dim_ == 2) return {static_cast<int>(idx / nn), static_cast<int>(idx % nn), 0};
  return {static_cast<int>(idx / (nn * nn)), static_cast<int>((idx / nn) % nn),
          static_cast<int>(idx % nn)};
}

std::size_t SpectralGrid::real_index(int i0, int i1, int i2) const {
  auto w = [&](int i) { return static_cast<std::size_t>(((i % n_) + n_) % n_); };
  const std::size_t nn = static_cast<std::size_t>(n_);
  if (dim_ == 2) return w(i0) * nn + w(i1);
  return (w(i0) * nn + w(i1)) * nn + w(i2);
}

Point SpectralGrid::node(std::size_t idx) const {
  const auto i = real_indices(idx);
  Point p = Point::Zero();
  for (int a = 0; a < dim_; ++a) p[a] = i[a] * spacing();
  return p;
}

Point SpectralGrid::cell_center(std::size_t idx) const {
  const auto i = real_indices(idx);
  Point p = Point::Zero();
  for (int a = 0; a < dim_; ++a) p[a] = (i[a] + 0.5) * spacing();
  return p;
}

void SpectralGrid::forward(const double* in, cplx* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_forward_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void SpectralGrid::inverse(cplx* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inverse_), reinterpret_cast<fftw_complex*>(in),
                       out);
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) out[i] *= scale;
}

double SpectralGrid::inner(const cplx* a, const cplx* b) const {
  double s = 0.0;
  for (std::size_t k = 0; k < spectral_size_; ++k) {
    s += modes_[k].weight * (a[k].real() * b[k].real() + a[k].imag() * b[k].imag());
  }
  return s;
}

std::shared_ptr<const SpectralGrid> cached_grid(int dim, int n, double box) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double>, std::weak_ptr<const SpectralGrid>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{dim, n, box}];
  if (auto g = slot.lock()) return g;
  auto g = std::make_shared<const SpectralGrid>(dim, n, box);
  slot = g;
  return g;
}

}  // namespace suspvisc
