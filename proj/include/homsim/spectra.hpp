#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "homsim/errors.hpp"
#include "homsim/numerics.hpp"
#include "homsim/units.hpp"

namespace homsim {

/// Frequency-grid layout for the analytic spectrum families: the grid spans
/// +-span_factor times the family's width parameter with `points` samples.
struct GridSpec {
  double span_factor = 4.0;
  std::size_t points = 4097;
};

inline constexpr double kNormalizationTolerance = 1e-6;

/// Real, non-negative spectral amplitude f(Omega) sampled on a symmetric
/// detuning grid around center_frequency, normalized so that the trapezoidal
/// integral of |f|^2 is one.
class SpectralAmplitude {
 public:
  SpectralAmplitude(double center_frequency, UniformGrid grid, std::vector<double> amplitude)
      : center_(center_frequency), grid_(grid), amplitude_(std::move(amplitude)) {
    if (!(center_ > 0.0)) throw ParameterError("center frequency must be positive");
    if (amplitude_.size() != grid_.size()) {
      throw InputError("amplitude sample count does not match the grid");
    }
    double peak = 0.0;
    for (double a : amplitude_) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        throw InputError("spectral amplitude must be finite and non-negative");
      }
      peak = std::max(peak, a);
    }
    const double norm = trapezoid(density(), grid_.step());
    if (std::abs(norm - 1.0) > kNormalizationTolerance) {
      throw InputError("spectral density is not normalized (integral " + std::to_string(norm) +
                       ")");
    }
    const double edge = std::max(amplitude_.front(), amplitude_.back());
    if (edge * edge > 1e-6 * peak * peak) {
      throw InputError("spectral support is not contained in the frequency grid");
    }
  }

  /// Builds a normalized amplitude from an unnormalized density.
  static SpectralAmplitude from_density(double center_frequency, UniformGrid grid,
                                        std::vector<double> density) {
    if (density.size() != grid.size()) throw InputError("density sample count does not match the grid");
    for (double d : density) {
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw InputError("spectral density must be finite and non-negative");
      }
    }
    const double norm = trapezoid(density, grid.step());
    if (!(norm > 0.0)) throw InputError("spectral density has zero norm");
    for (double& d : density) d = std::sqrt(d / norm);
    return SpectralAmplitude(center_frequency, grid, std::move(density));
  }

  double center_frequency() const { return center_; }
  const UniformGrid& grid() const { return grid_; }
  std::span<const double> amplitude() const { return amplitude_; }

  std::vector<double> density() const {
    std::vector<double> out(amplitude_.size());
    std::transform(amplitude_.begin(), amplitude_.end(), out.begin(),
                   [](double a) { return a * a; });
    return out;
  }

  /// |f|^2 at an arbitrary detuning (linear interpolation, zero off-grid).
  double density_at(double detuning) const {
    const double a = interpolate_on_grid(grid_, amplitude_, detuning);
    return a * a;
  }

 private:
  double center_;
  UniformGrid grid_;
  std::vector<double> amplitude_;
};

namespace detail {

inline void check_grid_spec(const GridSpec& spec) {
  if (spec.points < 257 || spec.points % 2 == 0) {
    throw ParameterError("spectral grid needs an odd point count of at least 257, got " +
                         std::to_string(spec.points));
  }
  if (!(spec.span_factor >= 4.0)) {
    throw ParameterError("grid span factor must be at least 4");
  }
}

/// Antiderivative of the unit-height isosceles trapezoid with plateau
/// half-width p and base half-width q (odd in x).
inline double trapezoid_antiderivative(double x, double p, double q) {
  const double a = std::abs(x);
  double value;
  if (a <= p) {
    value = a;
  } else if (a < q) {
    const double t = a - p;
    value = p + t - t * t / (2.0 * (q - p));
  } else {
    value = p + 0.5 * (q - p);
  }
  return x < 0.0 ? -value : value;
}

}  // namespace detail

inline SpectralAmplitude gaussian_spectrum(double center_frequency, double fwhm,
                                           const GridSpec& grid_spec = {}) {
  if (!(fwhm > 0.0)) throw ParameterError("Gaussian spectral FWHM must be positive");
  detail::check_grid_spec(grid_spec);
  const auto grid = UniformGrid::spanning(grid_spec.span_factor * fwhm, grid_spec.points);
  std::vector<double> density(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i] / fwhm;
    density[i] = std::exp(-4.0 * kLn2 * x * x);
  }
  return SpectralAmplitude::from_density(center_frequency, grid, std::move(density));
}

/// Isosceles-trapezoid power spectrum. Samples are cell averages of the
/// continuous shape, so edges falling between samples keep the exact area.
inline SpectralAmplitude trapezoidal_spectrum(double center_frequency, double plateau_width,
                                              double base_width, const GridSpec& grid_spec = {}) {
  if (!(plateau_width > 0.0)) throw ParameterError("trapezoid plateau width must be positive");
  if (!(plateau_width <= base_width)) {
    throw ParameterError("trapezoid plateau width exceeds its base width");
  }
  detail::check_grid_spec(grid_spec);
  const auto grid = UniformGrid::spanning(grid_spec.span_factor * base_width, grid_spec.points);
  const double p = 0.5 * plateau_width;
  const double q = 0.5 * base_width;
  const double h = grid.step();
  std::vector<double> density(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lo = grid[i] - 0.5 * h;
    const double hi = grid[i] + 0.5 * h;
    density[i] = (detail::trapezoid_antiderivative(hi, p, q) -
                  detail::trapezoid_antiderivative(lo, p, q)) / h;
  }
  return SpectralAmplitude::from_density(center_frequency, grid, std::move(density));
}

inline SpectralAmplitude rectangular_spectrum(double center_frequency, double full_width,
                                              const GridSpec& grid_spec = {}) {
  if (!(full_width > 0.0)) throw ParameterError("rectangular spectral width must be positive");
  return trapezoidal_spectrum(center_frequency, full_width, full_width, grid_spec);
}

struct SpectrumSample {
  double detuning;  // rad/fs
  double density;
};

/// Resamples a measured (detuning, density) table onto a symmetric uniform
/// grid covering it, then renormalizes.
inline SpectralAmplitude tabulated_spectrum(double center_frequency,
                                            std::span<const SpectrumSample> samples,
                                            std::size_t points = 4097) {
  if (samples.size() < 8) {
    throw InputError("tabulated spectrum needs at least 8 samples, got " +
                     std::to_string(samples.size()));
  }
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.detuning) || !std::isfinite(s.density)) {
      throw InputError("tabulated spectrum contains a non-finite value");
    }
    if (s.density < 0.0) {
      throw InputError("tabulated spectrum has a negative density at sample " + std::to_string(i));
    }
    if (i > 0 && !(s.detuning > xs.back())) {
      throw InputError("tabulated spectrum detunings must be strictly increasing (sample " +
                       std::to_string(i) + ")");
    }
    xs.push_back(s.detuning);
    ys.push_back(s.density);
  }
  if (points < 3 || points % 2 == 0) {
    throw ParameterError("spectral grid needs an odd point count");
  }
  const double half_width = std::max(std::abs(xs.front()), std::abs(xs.back()));
  const auto grid = UniformGrid::spanning(half_width, points);
  std::vector<double> density(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) density[i] = interpolate_linear(xs, ys, grid[i]);
  return SpectralAmplitude::from_density(center_frequency, grid, std::move(density));
}

/// Reads `omega_rad_per_fs,density` CSV rows (header required).
inline std::vector<SpectrumSample> read_spectrum_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("spectrum CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "omega_rad_per_fs,density") {
    throw InputError("spectrum CSV header must be 'omega_rad_per_fs,density', got '" + line + "'");
  }
  std::vector<SpectrumSample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw InputError("spectrum CSV row " + std::to_string(row) + " must have two columns");
    }
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      const double x = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      const double y = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
      out.push_back({x, y});
    } catch (const std::logic_error&) {
      throw InputError("spectrum CSV row " + std::to_string(row) + " is not numeric: '" + line +
                       "'");
    }
  }
  return out;
}

inline std::vector<SpectrumSample> read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spectrum CSV '" + path + "'");
  return read_spectrum_csv(in);
}

// ---------------------------------------------------------------------------
// Biphoton spectra

/// |f_q(Omega)|^2 = |f_s(Omega)|^2 |f_i(-Omega)|^2 for a monochromatic pump;
/// Omega is the signal detuning from the degenerate frequency.
struct DegenerateBiphoton {
  double center_frequency = 0.0;
  UniformGrid grid;
  std::vector<double> density;
};

/// Separable finite-pump biphoton: pump density |xi_p|^2 over the sum-frequency
/// detuning, and single-photon densities over their own detunings.
struct JointBiphoton {
  UniformGrid pump_grid;
  std::vector<double> pump_density;
  SpectralAmplitude signal;
  SpectralAmplitude idler;
};

using BiphotonSpectrum = std::variant<DegenerateBiphoton, JointBiphoton>;

inline DegenerateBiphoton biphoton_degenerate(const SpectralAmplitude& signal,
                                              const SpectralAmplitude& idler) {
  if (!signal.grid().same_as(idler.grid())) {
    throw InputError("signal and idler spectra must share one frequency grid");
  }
  const auto& grid = signal.grid();
  const auto fs = signal.amplitude();
  const auto fi = idler.amplitude();
  std::vector<double> density(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double a = fs[k] * fi[grid.mirror(k)];
    density[k] = a * a;
  }
  const double norm = trapezoid(density, grid.step());
  if (!(norm > 0.0)) {
    throw InputError("signal and idler spectra do not overlap: biphoton density has zero norm");
  }
  for (double& d : density) d /= norm;
  return DegenerateBiphoton{signal.center_frequency(), grid, std::move(density)};
}

/// Gaussian |xi_p|^2 of the given FWHM sampled uniformly over +-span_sigmas
/// standard deviations, normalized to unit integral.
inline JointBiphoton biphoton_joint(const SpectralAmplitude& signal, const SpectralAmplitude& idler,
                                    double pump_fwhm, std::size_t pump_samples,
                                    double span_sigmas = 6.0) {
  if (!signal.grid().same_as(idler.grid())) {
    throw InputError("signal and idler spectra must share one frequency grid");
  }
  if (!(pump_fwhm > 0.0)) throw ParameterError("pump linewidth must be positive");
  if (pump_samples < 33 || pump_samples % 2 == 0) {
    throw ParameterError("pump sampling needs an odd count of at least 33, got " +
                         std::to_string(pump_samples));
  }
  const double sigma = pump_fwhm / (2.0 * std::sqrt(2.0 * kLn2));
  const auto grid = UniformGrid::spanning(span_sigmas * sigma, pump_samples);
  std::vector<double> density(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid[j] / sigma;
    density[j] = std::exp(-0.5 * x * x);
  }
  const double norm = trapezoid(density, grid.step());
  for (double& d : density) d /= norm;
  return JointBiphoton{grid, std::move(density), signal, idler};
}

// ---------------------------------------------------------------------------
// Fourier width

namespace detail {

inline double fourier_magnitude(const UniformGrid& grid, std::span<const double> density, double t) {
  complex sum{};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (density[k] != 0.0) {
      sum += trapezoid_weight(k, grid.size()) * density[k] * std::polar(1.0, -grid[k] * t);
    }
  }
  return std::abs(sum);
}

}  // namespace detail

/// FWHM (fs) of |FT{density}(tau)|, FT kernel e^{-i Omega tau}. The crossing
/// is bracketed on a zero-padded FFT grid and then refined by bisection on
/// the direct Fourier sum.
inline double fourier_fwhm(const UniformGrid& grid, std::span<const double> density,
                           std::size_t padding = 16) {
  if (density.size() != grid.size()) throw InputError("density sample count does not match the grid");
  const auto nonzero = std::count_if(density.begin(), density.end(), [](double d) { return d > 0.0; });
  if (nonzero < 3) throw InputError("density needs at least 3 nonzero samples for a Fourier width");
  if (padding < 16) throw ParameterError("Fourier width needs at least 16x zero padding");

  std::vector<complex> coeffs(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    coeffs[k] = trapezoid_weight(k, grid.size()) * density[k];
  }
  const ConjugateTransform transform(grid, coeffs, padding);
  const double peak = std::abs(transform.at_index(0));
  const double half = 0.5 * peak;
  const long limit = static_cast<long>(transform.size() / 2);
  long j = 1;
  while (j < limit && std::abs(transform.at_index(j)) > half) ++j;
  if (j >= limit) throw NumericalError("Fourier transform never falls to half maximum");

  double lo = static_cast<double>(j - 1) * transform.spacing();
  double hi = static_cast<double>(j) * transform.spacing();
  for (int it = 0; it < 80 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::fourier_magnitude(grid, density, mid) > half) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + hi;  // 2 * midpoint; |FT| of a real density is even in tau
}

inline double fourier_fwhm(const SpectralAmplitude& spectrum, std::size_t padding = 16) {
  const auto d = spectrum.density();
  return fourier_fwhm(spectrum.grid(), d, padding);
}

}  // namespace homsim
