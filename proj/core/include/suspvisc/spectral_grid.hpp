#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>

#include "suspvisc/aligned.hpp"
#include "suspvisc/geometry.hpp"

namespace suspvisc {

using cplx = std::complex<double>;

/// Per-mode data of the discrete gradient. Velocities live on grid nodes
/// i*h, strains on cell centres (i+1/2)*h; the symbol of the node-to-centre
/// gradient is xi_a = (e^{i k_a h} - 1)/h * prod_{b != a} (1 + e^{i k_b h})/2.
/// All components share one complex phase, so xi = c * |xi| * dir with `dir`
/// a real unit vector (zero where xi vanishes).
struct Mode {
  std::array<cplx, 3> xi{};
  std::array<double, 3> dir{};
  double xi2 = 0.0;
  /// Multiplicity of the mode in the half spectrum (1 or 2).
  double weight = 0.0;
};

/// Uniform periodic grid with n points per axis and its real-to-complex FFT.
/// Real index (i0*n + i1)*n + i2; spectral index (k0*n + k1)*(n/2+1) + k2
/// (two-dimensional grids drop the middle factor).
class SpectralGrid {
 public:
  SpectralGrid(int dim, int n, double box);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  double box() const { return box_; }
  double spacing() const { return box_ / n_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t spectral_size() const { return spectral_size_; }
  /// Volume of one voxel, h^d.
  double cell_volume() const;

  const Mode& mode(std::size_t k) const { return modes_[k]; }
  const std::vector<Mode>& modes() const { return modes_; }

  /// Integer wave numbers of spectral index k in [-n/2, n/2).
  std::array<int, 3> wave_numbers(std::size_t k) const;
  std::array<int, 3> real_indices(std::size_t idx) const;
  std::size_t real_index(int i0, int i1, int i2) const;
  Point node(std::size_t idx) const;
  Point cell_center(std::size_t idx) const;

  RealBuffer make_real() const { return RealBuffer(real_size_, 0.0); }
  ComplexBuffer make_spectral() const { return ComplexBuffer(spectral_size_, cplx(0.0)); }

  /// Unnormalized forward transform (kernel e^{-ikx}); `in` is preserved.
  void forward(const double* in, cplx* out) const;
  /// Normalized inverse transform; overwrites `in`.
  void inverse(cplx* in, double* out) const;

  /// Real inner product on the half spectrum that equals the full-spectrum
  /// sum Re sum_k conj(a_k) b_k.
  double inner(const cplx* a, const cplx* b) const;

 private:
  int dim_;
  int n_;
  double box_;
  std::size_t real_size_;
  std::size_t spectral_size_;
  std::vector<Mode> modes_;
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
};

/// Shared, lazily created grid. Grids are immutable after construction and
/// may be used from several threads.
std::shared_ptr<const SpectralGrid> cached_grid(int dim, int n, double box);

}  // namespace suspvisc
