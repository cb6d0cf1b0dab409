#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace gpc {

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class GridMismatch : public std::invalid_argument {
 public:
  explicit GridMismatch(const std::string& what)
      : std::invalid_argument("grid mismatch: " + what) {}
};

/// Periodic grid on [-L, L) with N nodes and the matching DFT wavenumbers.
///
/// Wavenumbers use the standard DFT layout 0, 1, ..., N/2, -(N/2-1), ..., -1
/// (times pi/L), so the Nyquist mode carries the positive frequency.
template <typename Scalar = double>
class SpatialGrid {
 public:
  SpatialGrid(Scalar half_width, Eigen::Index points)
      : half_width_(half_width), points_(points) {
    if (!(half_width > Scalar(0)) || !std::isfinite(half_width))
      throw std::invalid_argument("SpatialGrid: half width must be positive and finite");
    if (points < 2 || points % 2 != 0)
      throw std::invalid_argument("SpatialGrid: number of points must be even and >= 2");
    spacing_ = Scalar(2) * half_width_ / Scalar(points_);
    nodes_.resize(points_);
    wavenumbers_.resize(points_);
    const Scalar base = std::numbers::pi_v<Scalar> / half_width_;
    for (Eigen::Index j = 0; j < points_; ++j) {
      nodes_[j] = -half_width_ + Scalar(j) * spacing_;
      const Eigen::Index m = j <= points_ / 2 ? j : j - points_;
      wavenumbers_[j] = base * Scalar(m);
    }
  }

  Scalar half_width() const { return half_width_; }
  Eigen::Index size() const { return points_; }
  Scalar spacing() const { return spacing_; }
  const RealVector<Scalar>& nodes() const { return nodes_; }
  const RealVector<Scalar>& wavenumbers() const { return wavenumbers_; }

  bool operator==(const SpatialGrid& other) const {
    return half_width_ == other.half_width_ && points_ == other.points_;
  }

 private:
  Scalar half_width_;
  Eigen::Index points_;
  Scalar spacing_;
  RealVector<Scalar> nodes_;
  RealVector<Scalar> wavenumbers_;
};

template <typename Scalar>
using GridPtr = std::shared_ptr<const SpatialGrid<Scalar>>;

template <typename Scalar = double>
GridPtr<Scalar> make_grid(Scalar half_width, Eigen::Index points) {
  return std::make_shared<const SpatialGrid<Scalar>>(half_width, points);
}

/// Complex field sampled on the nodes of a grid.
template <typename Scalar = double>
struct WaveField {
  GridPtr<Scalar> grid;
  ComplexVector<Scalar> values;

  WaveField() = default;
  explicit WaveField(GridPtr<Scalar> g)
      : grid(std::move(g)), values(ComplexVector<Scalar>::Zero(grid->size())) {}
  WaveField(GridPtr<Scalar> g, ComplexVector<Scalar> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw GridMismatch("field length differs from grid size");
  }

  Eigen::Index size() const { return values.size(); }
};

template <typename Scalar>
void require_same_grid(const SpatialGrid<Scalar>& a, const SpatialGrid<Scalar>& b) {
  if (!(a == b)) throw GridMismatch("fields live on different grids");
}

template <typename Scalar>
void require_same_grid(const WaveField<Scalar>& a, const WaveField<Scalar>& b) {
  if (!a.grid || !b.grid) throw GridMismatch("field without grid");
  require_same_grid(*a.grid, *b.grid);
  if (a.values.size() != b.values.size()) throw GridMismatch("field lengths differ");
}

/// Real L2 inner product dx * Re sum xi conj(psi) on raw samples.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar inner(const SpatialGrid<Scalar>& grid, const Eigen::MatrixBase<DerivedA>& xi,
             const Eigen::MatrixBase<DerivedB>& psi) {
  if (xi.size() != grid.size() || psi.size() != grid.size())
    throw GridMismatch("sample vector length differs from grid size");
  // Re(xi conj(psi)) = Re xi Re psi + Im xi Im psi
  return grid.spacing() *
         (xi.real().dot(psi.real()) + xi.imag().dot(psi.imag()));
}

template <typename Scalar>
Scalar inner(const WaveField<Scalar>& xi, const WaveField<Scalar>& psi) {
  require_same_grid(xi, psi);
  return inner(*xi.grid, xi.values, psi.values);
}

template <typename Scalar, typename Derived>
Scalar mass(const SpatialGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& psi) {
  return grid.spacing() * psi.squaredNorm();
}

template <typename Scalar>
Scalar mass(const WaveField<Scalar>& psi) {
  return mass(*psi.grid, psi.values);
}

/// Fourier symbol exp(-i k^2 tau / 2) of the free flow over a duration tau.
template <typename Scalar>
ComplexVector<Scalar> kinetic_multiplier(const SpatialGrid<Scalar>& grid, Scalar tau) {
  if (!std::isfinite(tau)) throw std::invalid_argument("kinetic_multiplier: non-finite duration");
  const auto& k = grid.wavenumbers();
  ComplexVector<Scalar> out(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    out[j] = std::polar(Scalar(1), -Scalar(0.5) * k[j] * k[j] * tau);
  return out;
}

/// Unnormalised forward DFT, inverse scaled by 1/N.
///
/// Holds its own plan cache, so every solver owns one; instances are not
/// meant to be shared across threads.
template <typename Scalar = double>
class SpectralTransform {
 public:
  explicit SpectralTransform(Eigen::Index points) : buffer_(points) {}

  void forward(const ComplexVector<Scalar>& in, ComplexVector<Scalar>& out) {
    fft_.fwd(out, in);
  }
  void inverse(const ComplexVector<Scalar>& in, ComplexVector<Scalar>& out) {
    fft_.inv(out, in);
  }

  /// In-place application of a diagonal Fourier multiplier.
  template <typename Derived>
  void apply_multiplier(ComplexVector<Scalar>& values, const Eigen::MatrixBase<Derived>& symbol) {
    fft_.fwd(buffer_, values);
    buffer_.array() *= symbol.array();
    fft_.inv(values, buffer_);
  }

 private:
  Eigen::FFT<Scalar> fft_;
  ComplexVector<Scalar> buffer_;
};

/// ||d_x psi||^2 evaluated with spectral differentiation.
template <typename Scalar>
Scalar spectral_gradient_norm_sq(const SpatialGrid<Scalar>& grid, const ComplexVector<Scalar>& psi,
                                 SpectralTransform<Scalar>& transform) {
  if (psi.size() != grid.size()) throw GridMismatch("field length differs from grid size");
  ComplexVector<Scalar> hat(grid.size());
  transform.forward(psi, hat);
  const auto& k = grid.wavenumbers();
  Scalar acc = 0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) acc += k[j] * k[j] * std::norm(hat[j]);
  return grid.spacing() * acc / Scalar(grid.size());
}

template <typename Scalar>
Scalar spectral_gradient_norm_sq(const WaveField<Scalar>& psi) {
  SpectralTransform<Scalar> transform(psi.grid->size());
  return spectral_gradient_norm_sq(*psi.grid, psi.values, transform);
}

}  // namespace gpc
