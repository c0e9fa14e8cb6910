#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <fftw3.h>

#include "nlsmix/errors.hpp"
#include "nlsmix/fiber.hpp"
#include "nlsmix/params.hpp"
#include "nlsmix/radial.hpp"

namespace nlsmix {

using cplx = std::complex<double>;

enum class Geometry { periodic, radial };

/// Spatial discretisation for the time-dependent problem.
///  periodic: x_j = -L + j * 2L / n on [-L, L), N = 1 only;
///  radial:   cell centres r_j = (j + 1/2) h, h = R / n, N = 2 or 3, reflective
///            origin and homogeneous Dirichlet condition at r = R.
struct WaveGrid {
  Geometry geometry = Geometry::periodic;
  int dim = 1;
  double extent = 40.0;  ///< L or R
  std::size_t points = 4096;

  [[nodiscard]] double step() const {
    return geometry == Geometry::periodic ? 2.0 * extent / static_cast<double>(points) : extent / static_cast<double>(points);
  }
  [[nodiscard]] double coord(std::size_t j) const {
    const double h = step();
    return geometry == Geometry::periodic ? -extent + static_cast<double>(j) * h : (static_cast<double>(j) + 0.5) * h;
  }
  /// Largest resolved wavenumber.
  [[nodiscard]] double k_max() const { return std::numbers::pi / step(); }

  void validate() const {
    if (geometry == Geometry::periodic && dim != 1) fail(ErrorCategory::validation, "periodic geometry is one-dimensional");
    if (geometry == Geometry::radial && (dim < 2 || dim > 3)) fail(ErrorCategory::validation, "radial geometry needs N = 2 or 3");
    if (points < 16) fail(ErrorCategory::validation, "wave grid needs at least 16 points");
    if (geometry == Geometry::periodic && (points & (points - 1)) != 0)
      fail(ErrorCategory::validation, "periodic grid size must be a power of two");
    if (!(extent > 0.0) || !std::isfinite(extent)) fail(ErrorCategory::validation, "wave grid extent must be positive");
  }
};

inline WaveGrid default_wave_grid(int dim) {
  if (dim == 1) return {Geometry::periodic, 1, 40.0, 4096};
  return {Geometry::radial, dim, 40.0, 8192};
}

struct WaveField {
  WaveGrid grid;
  std::vector<cplx> values;
};

/// Serialises FFTW planning, which is not thread safe; execution on new
/// arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place complex FFT pair of fixed size with its own aligned buffer.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  ~Fft() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(bwd_);
    }
    fftw_free(buf_);
  }

  [[nodiscard]] std::size_t size() const { return n_; }
  cplx* data() { return reinterpret_cast<cplx*>(buf_); }

  void forward() { fftw_execute(fwd_); }
  /// Unnormalised inverse.
  void backward() { fftw_execute(bwd_); }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Angular wavenumbers in FFTW ordering for a periodic grid.
inline std::vector<double> wavenumbers(const WaveGrid& grid) {
  const std::size_t n = grid.points;
  std::vector<double> k(n);
  const double dk = std::numbers::pi / grid.extent;
  for (std::size_t j = 0; j < n; ++j) {
    const auto m = static_cast<double>(j <= n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n));
    k[j] = m * dk;
  }
  return k;
}

/// Radial finite-volume geometry: cell volumes V_j and face coefficients
/// F_{j+1/2} = r_{j+1/2}^{N-1} / h (the sphere area factor is applied to
/// integrals only). The last face carries the Dirichlet ghost value -psi_{n-1}.
struct RadialCells {
  std::vector<double> volume;
  std::vector<double> face;  ///< face[j] couples cells j and j+1; face[n-1] is the outer boundary

  explicit RadialCells(const WaveGrid& grid) {
    const std::size_t n = grid.points;
    const double h = grid.step();
    const int N = grid.dim;
    volume.resize(n);
    face.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = static_cast<double>(j) * h, hi = static_cast<double>(j + 1) * h;
      volume[j] = (std::pow(hi, N) - std::pow(lo, N)) / N;
      face[j] = std::pow(hi, N - 1) / h;
    }
  }
};

/// Measures on a wave field; owns FFT scratch for the periodic case.
class FieldMeasures {
 public:
  explicit FieldMeasures(const WaveGrid& grid) : grid_(grid) {
    grid.validate();
    if (grid.geometry == Geometry::periodic) {
      fft_ = std::make_unique<Fft>(grid.points);
      k_ = wavenumbers(grid);
    } else {
      cells_ = std::make_unique<RadialCells>(grid);
    }
  }

  [[nodiscard]] const WaveGrid& grid() const { return grid_; }

  /// Integral over R^N of a radial or 1D density sampled at the nodes.
  [[nodiscard]] double integrate(const std::vector<double>& f) const {
    double s = 0;
    if (grid_.geometry == Geometry::periodic) {
      for (double v : f) s += v;
      return s * grid_.step();
    }
    for (std::size_t j = 0; j < f.size(); ++j) s += cells_->volume[j] * f[j];
    return s * sphere_area(grid_.dim);
  }

  [[nodiscard]] double mass2(const std::vector<cplx>& psi) const {
    std::vector<double> f(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) f[j] = std::norm(psi[j]);
    return integrate(f);
  }

  [[nodiscard]] double power(const std::vector<cplx>& psi, double s) const {
    std::vector<double> f(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) f[j] = std::pow(std::abs(psi[j]), s);
    return integrate(f);
  }

  /// |grad psi|_2^2: spectral for periodic grids, the finite-volume form
  /// matching the Crank-Nicolson Laplacian for radial grids.
  [[nodiscard]] double grad2(const std::vector<cplx>& psi) {
    const std::size_t n = psi.size();
    if (grid_.geometry == Geometry::periodic) {
      std::copy(psi.begin(), psi.end(), fft_->data());
      fft_->forward();
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += k_[j] * k_[j] * std::norm(fft_->data()[j]);
      return s * grid_.step() / static_cast<double>(n);
    }
    double s = 0;
    for (std::size_t j = 0; j + 1 < n; ++j) s += cells_->face[j] * std::norm(psi[j + 1] - psi[j]);
    s += 2.0 * cells_->face[n - 1] * std::norm(psi[n - 1]);  // Dirichlet ghost -psi_{n-1}
    return s * sphere_area(grid_.dim);
  }

  /// Second moment int |x|^2 |psi|^2.
  [[nodiscard]] double virial(const std::vector<cplx>& psi) const {
    std::vector<double> f(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) {
      const double x = grid_.coord(j);
      f[j] = x * x * std::norm(psi[j]);
    }
    return integrate(f);
  }

  [[nodiscard]] FiberTriple triple(const std::vector<cplx>& psi, const ModelParams& params) {
    return {grad2(psi), power(psi, params.q), power(psi, params.p), mass2(psi)};
  }

  /// Fraction of the spectral mass above 2/3 of the Nyquist wavenumber
  /// (periodic), or of the mass in the two innermost cells relative to a
  /// smooth profile's share (radial); a proxy for lost resolution.
  [[nodiscard]] double resolution_tail(const std::vector<cplx>& psi) {
    const std::size_t n = psi.size();
    if (grid_.geometry == Geometry::periodic) {
      std::copy(psi.begin(), psi.end(), fft_->data());
      fft_->forward();
      const double kc = 2.0 / 3.0 * grid_.k_max();
      double hi = 0, all = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double w = std::norm(fft_->data()[j]);
        all += w;
        if (std::abs(k_[j]) > kc) hi += w;
      }
      return all > 0 ? hi / all : 0.0;
    }
    // second difference at the origin relative to the value there
    const double a0 = std::abs(psi[0]), a1 = std::abs(psi[1]), a2 = std::abs(psi[2]);
    return a0 > 0 ? std::abs(a0 - 2.0 * a1 + a2) / a0 : 0.0;
  }

  std::vector<cplx>& spectrum(const std::vector<cplx>& psi) {
    std::copy(psi.begin(), psi.end(), fft_->data());
    fft_->forward();
    spec_.assign(fft_->data(), fft_->data() + psi.size());
    return spec_;
  }

  [[nodiscard]] const std::vector<double>& k() const { return k_; }
  [[nodiscard]] const RadialCells& cells() const { return *cells_; }
  Fft& fft() { return *fft_; }

 private:
  WaveGrid grid_;
  std::unique_ptr<Fft> fft_;
  std::unique_ptr<RadialCells> cells_;
  std::vector<double> k_;
  std::vector<cplx> spec_;
};

inline FiberTriple triple_of(const WaveField& field, const ModelParams& params) {
  FieldMeasures m(field.grid);
  return m.triple(field.values, params);
}

/// Samples a radial profile on a wave grid (periodic: u(|x|)).
inline WaveField wave_from_radial(const RadialField& u, const WaveGrid& grid) {
  grid.validate();
  if (grid.dim != u.grid.dim) fail(ErrorCategory::validation, "wave grid and profile dimensions differ");
  RadialInterpolant interp(u);
  WaveField w;
  w.grid = grid;
  w.values.resize(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) w.values[j] = interp(std::abs(grid.coord(j)));
  if (grid.geometry == Geometry::radial) w.values.back() *= 0.0;
  return w;
}

inline void normalize_mass(WaveField& f, double a) {
  FieldMeasures m(f.grid);
  const double m2 = m.mass2(f.values);
  if (!(m2 > 0.0)) fail(ErrorCategory::validation, "cannot normalize a zero field");
  const double k = a / std::sqrt(m2);
  for (auto& v : f.values) v *= k;
}

/// s * psi on the same grid, by interpolation of the real and imaginary parts.
inline WaveField dilate(const WaveField& f, double s) {
  const auto& g = f.grid;
  const double k = std::exp(0.5 * g.dim * s), e = std::exp(s);
  const std::size_t n = g.points;
  WaveField out;
  out.grid = g;
  out.values.assign(n, 0.0);
  std::vector<double> re(n), im(n);
  for (std::size_t j = 0; j < n; ++j) {
    re[j] = f.values[j].real();
    im[j] = f.values[j].imag();
  }
  const double h = g.step();
  boost::math::interpolators::cardinal_cubic_b_spline<double> sr(re.begin(), re.end(), g.coord(0), h);
  boost::math::interpolators::cardinal_cubic_b_spline<double> si(im.begin(), im.end(), g.coord(0), h);
  const double lo = g.coord(0), hi = g.coord(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    double x = e * g.coord(j);
    if (g.geometry == Geometry::radial && x < lo) x = lo;  // even extension near the origin cell
    if (x < lo || x > hi) continue;
    out.values[j] = k * cplx(sr(x), si(x));
  }
  return out;
}

/// Preset initial data.
inline WaveField gaussian_wave(const WaveGrid& grid, double amp, double width, double center = 0.0) {
  WaveField w;
  w.grid = grid;
  w.values.resize(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) {
    const double x = (grid.coord(j) - center) / width;
    w.values[j] = amp * std::exp(-0.5 * x * x);
  }
  return w;
}

inline WaveField sech_wave(const WaveGrid& grid, double amp, double width) {
  WaveField w;
  w.grid = grid;
  w.values.resize(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) w.values[j] = amp / std::cosh(grid.coord(j) / width);
  return w;
}

}  // namespace nlsmix
