#pragma once

// Grids, quadrature, interpolation, differentiation and the zero-padded
// Fourier evaluation shared by the spectral and interferogram code.

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "homsim/errors.hpp"
#include "homsim/units.hpp"

namespace homsim {

using complex = std::complex<double>;

/// Uniform grid of odd size, symmetric about zero, so the origin is a sample
/// and grid[i] == -grid[size()-1-i] holds exactly.
class UniformGrid {
 public:
  UniformGrid() = default;

  UniformGrid(double step, std::size_t points) : step_(step), points_(points) {
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw ParameterError("grid step must be positive and finite");
    }
    if (points < 3 || points % 2 == 0) {
      throw ParameterError("grid point count must be odd and at least 3, got " +
                           std::to_string(points));
    }
  }

  static UniformGrid spanning(double half_width, std::size_t points) {
    if (points < 3 || points % 2 == 0) {
      throw ParameterError("grid point count must be odd and at least 3, got " +
                           std::to_string(points));
    }
    return UniformGrid(2.0 * half_width / static_cast<double>(points - 1), points);
  }

  std::size_t size() const { return points_; }
  double step() const { return step_; }
  std::size_t center_index() const { return points_ / 2; }
  std::size_t mirror(std::size_t i) const { return points_ - 1 - i; }
  double half_width() const { return step_ * static_cast<double>(points_ / 2); }

  double operator[](std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(points_ / 2)) * step_;
  }

  std::vector<double> values() const {
    std::vector<double> out(points_);
    for (std::size_t i = 0; i < points_; ++i) out[i] = (*this)[i];
    return out;
  }

  bool same_as(const UniformGrid& other, double rel_tol = 1e-12) const {
    return points_ == other.points_ &&
           std::abs(step_ - other.step_) <= rel_tol * std::max(step_, other.step_);
  }

 private:
  double step_ = 1.0;
  std::size_t points_ = 3;
};

inline double trapezoid(std::span<const double> y, double step) {
  if (y.size() < 2) return 0.0;
  double sum = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) sum += y[i];
  return sum * step;
}

inline double trapezoid_weight(std::size_t i, std::size_t n) {
  return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
}

/// Linear interpolation of samples on a UniformGrid; zero outside the grid.
inline double interpolate_on_grid(const UniformGrid& grid, std::span<const double> y, double x) {
  const double t = x / grid.step() + static_cast<double>(grid.center_index());
  if (t < 0.0 || t > static_cast<double>(grid.size() - 1)) return 0.0;
  const auto i = std::min(static_cast<std::size_t>(t), grid.size() - 2);
  const double u = t - static_cast<double>(i);
  return y[i] + u * (y[i + 1] - y[i]);
}

/// Linear interpolation on a strictly increasing abscissa; zero outside it.
inline double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  const auto lo = hi - 1;
  const double u = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + u * (ys[hi] - ys[lo]);
}

// ---------------------------------------------------------------------------
// Differentiation

struct DerivativeEstimate {
  double value = 0.0;
  double step = 0.0;      // finest step used
  int halvings = 0;
  double last_change = 0.0;
  bool converged = false;
};

namespace detail {

inline long double binomial(int n, int k) {
  long double r = 1.0L;
  for (int j = 1; j <= k; ++j) r = r * static_cast<long double>(n - k + j) / j;
  return r;
}

/// Second-order accurate central difference of the given order. Odd orders
/// use the half-step stencil x + (k/2 - j) h.
template <class F>
long double central_difference(F& f, long double x, int order, long double h) {
  long double sum = 0.0L;
  for (int j = 0; j <= order; ++j) {
    const long double offset = (static_cast<long double>(order) / 2.0L - j) * h;
    const long double term = binomial(order, j) * f(x + offset);
    sum += (j % 2 == 0) ? term : -term;
  }
  return sum / std::pow(h, static_cast<long double>(order));
}

}  // namespace detail

/// Order-th derivative of f at x by central differences with one Richardson
/// step, halving h until two successive extrapolated estimates agree to
/// rel_tol (plus abs_tol). f is evaluated in long double to keep high orders above roundoff.
template <class F>
DerivativeEstimate richardson_derivative(F&& f, double x, int order, double initial_step,
                                         double rel_tol = 1e-4, int max_halvings = 10,
                                         double abs_tol = 0.0) {
  if (order < 1) throw ParameterError("derivative order must be at least 1");
  DerivativeEstimate est;
  long double h = initial_step;
  long double previous = 0.0L;
  for (int i = 0; i <= max_halvings; ++i) {
    const long double coarse = detail::central_difference(f, x, order, h);
    const long double fine = detail::central_difference(f, x, order, h / 2.0L);
    const long double extrapolated = (4.0L * fine - coarse) / 3.0L;
    est.value = static_cast<double>(extrapolated);
    est.step = static_cast<double>(h / 2.0L);
    est.halvings = i;
    if (i > 0) {
      est.last_change = static_cast<double>(std::abs(extrapolated - previous));
      if (est.last_change <= rel_tol * std::abs(est.value) + abs_tol) {
        est.converged = true;
        return est;
      }
    }
    previous = extrapolated;
    h /= 2.0L;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Fourier evaluation

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place forward complex transform (kernel e^{-2 pi i jk/N}) owning an
/// FFTW-aligned buffer. Planning is serialized; execution is reentrant.
class ForwardFft {
 public:
  explicit ForwardFft(std::size_t n) : n_(n) {
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buffer_ == nullptr) throw NumericalError("FFT buffer allocation failed");
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ForwardFft(const ForwardFft&) = delete;
  ForwardFft& operator=(const ForwardFft&) = delete;
  ~ForwardFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(buffer_);
  }

  std::span<complex> data() { return {reinterpret_cast<complex*>(buffer_), n_}; }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// G(s) = sum_k a_k exp(-i Omega_k s) for coefficients on a symmetric grid,
/// tabulated once by a zero-padded FFT on the conjugate grid s_j = j ds and
/// read back at arbitrary s by cubic Lagrange interpolation. The sum is
/// periodic in s with period 2 pi / dOmega.
class ConjugateTransform {
 public:
  ConjugateTransform(const UniformGrid& grid, std::span<const complex> coefficients,
                     std::size_t padding) {
    if (coefficients.size() != grid.size()) {
      throw InputError("coefficient count does not match the frequency grid");
    }
    if (padding < 1) throw ParameterError("FFT padding must be at least 1");
    const std::size_t n = std::bit_ceil(padding * grid.size());
    detail::ForwardFft fft(n);
    auto data = fft.data();
    std::fill(data.begin(), data.end(), complex{});
    const auto m = static_cast<long>(grid.center_index());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const long shifted = static_cast<long>(k) - m;
      data[static_cast<std::size_t>(shifted < 0 ? shifted + static_cast<long>(n) : shifted)] =
          coefficients[k];
    }
    fft.execute();
    values_.assign(data.begin(), data.end());
    spacing_ = kTwoPi / (static_cast<double>(n) * grid.step());
    period_ = kTwoPi / grid.step();
  }

  std::size_t size() const { return values_.size(); }
  double spacing() const { return spacing_; }
  double period() const { return period_; }

  complex at_index(long j) const {
    const auto n = static_cast<long>(values_.size());
    j %= n;
    if (j < 0) j += n;
    return values_[static_cast<std::size_t>(j)];
  }

  complex operator()(double s) const {
    const double t = s / spacing_;
    const double base = std::floor(t);
    const double u = t - base;
    const auto i = static_cast<long>(base);
    const double wm1 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    const double w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    const double w1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    const double w2 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return wm1 * at_index(i - 1) + w0 * at_index(i) + w1 * at_index(i + 1) + w2 * at_index(i + 2);
  }

 private:
  std::vector<complex> values_;
  double spacing_ = 1.0;
  double period_ = 1.0;
};

/// Direct O(n) evaluation of the same sum at one point.
inline complex direct_fourier_sum(const UniformGrid& grid, std::span<const complex> coefficients,
                                  double s) {
  complex sum{};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    sum += coefficients[k] * std::polar(1.0, -grid[k] * s);
  }
  return sum;
}

}  // namespace homsim
