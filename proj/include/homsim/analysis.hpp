#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "homsim/engine.hpp"
#include "homsim/errors.hpp"
#include "homsim/spectra.hpp"
#include "homsim/units.hpp"

namespace homsim {

enum class WidthMethod { gaussian_fit, half_max };

inline const char* to_string(WidthMethod m) {
  return m == WidthMethod::gaussian_fit ? "gaussian_fit" : "half_max";
}

struct ResolutionReport {
  double fwhm = 0.0;  // um
  WidthMethod method = WidthMethod::half_max;
  std::optional<double> fit_residual_rms;
  double dip_or_peak_center = 0.0;  // um
  double visibility = 0.0;
  double asymmetry = 0.0;
};

inline nlohmann::json to_json(const ResolutionReport& r) {
  nlohmann::json j;
  j["fwhm"] = r.fwhm;
  j["method"] = to_string(r.method);
  j["fit_residual_rms"] = r.fit_residual_rms ? nlohmann::json(*r.fit_residual_rms) : nlohmann::json();
  j["dip_or_peak_center"] = r.dip_or_peak_center;
  j["visibility"] = r.visibility;
  j["asymmetry"] = r.asymmetry;
  return j;
}

namespace detail {

/// Sign that turns the feature into a positive bump: TPI dips point down,
/// LCI envelope peaks point up.
inline double feature_sign(const Interferogram& ig) { return ig.kind == InterferogramKind::tpi ? -1.0 : 1.0; }

/// Baseline is the theoretical 1 when both ends sit within 1% of it,
/// otherwise the mean of the outer 10% of samples.
inline double estimate_baseline(const Interferogram& ig, bool* fixed = nullptr) {
  const auto& y = ig.values;
  if (std::abs(y.front() - 1.0) <= 0.01 && std::abs(y.back() - 1.0) <= 0.01) {
    if (fixed) *fixed = true;
    return 1.0;
  }
  if (fixed) *fixed = false;
  const std::size_t m = std::max<std::size_t>(1, y.size() / 20);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += y[i] + y[y.size() - 1 - i];
  return sum / static_cast<double>(2 * m);
}

struct Feature {
  double baseline = 1.0;
  bool baseline_fixed = true;
  double depth = 0.0;  // positive height of the bump above/below baseline
  double center = 0.0;
  double left = 0.0;   // half-depth crossing positions
  double right = 0.0;
  std::size_t peak_index = 0;
  std::size_t left_index = 0;   // last sample above half on the left
  std::size_t right_index = 0;  // last sample above half on the right
};

inline void check_interferogram(const Interferogram& ig) {
  if (ig.values.size() != ig.delay_um.size() || ig.values.size() < 5) {
    throw InputError("interferogram needs at least 5 samples with matching delay axis");
  }
  if (ig.kind == InterferogramKind::lci && ig.carrier == Carrier::with_fringes) {
    throw ShapeError("width analysis needs the LCI envelope, not the fringed signal");
  }
}

inline Feature locate_feature(const Interferogram& ig) {
  check_interferogram(ig);
  const auto& x = ig.delay_um;
  const auto& y = ig.values;
  const double sign = feature_sign(ig);
  Feature f;
  f.baseline = estimate_baseline(ig, &f.baseline_fixed);
  std::vector<double> h(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) h[i] = sign * (y[i] - f.baseline);
  const auto peak = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
  f.peak_index = peak;
  double top = h[peak];
  f.center = x[peak];
  if (peak > 0 && peak + 1 < h.size()) {
    const double a = h[peak - 1], b = h[peak], c = h[peak + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) {
      const double u = 0.5 * (a - c) / denom;
      const double step = x[peak + 1] - x[peak];
      f.center = x[peak] + u * step;
      top = b - 0.25 * (a - c) * u;
    }
  }
  if (!(top > 0.0)) throw ShapeError("interferogram has no feature distinguishable from its baseline");
  f.depth = top;
  const double half = 0.5 * top;

  std::size_t i = peak;
  while (i > 0 && h[i - 1] >= half) --i;
  if (i == 0) throw ShapeError("no half-depth crossing left of the extremum");
  f.left_index = i;
  f.left = x[i - 1] + (half - h[i - 1]) / (h[i] - h[i - 1]) * (x[i] - x[i - 1]);

  std::size_t j = peak;
  while (j + 1 < h.size() && h[j + 1] >= half) ++j;
  if (j + 1 == h.size()) throw ShapeError("no half-depth crossing right of the extremum");
  f.right_index = j;
  f.right = x[j] + (h[j] - half) / (h[j] - h[j + 1]) * (x[j + 1] - x[j]);
  return f;
}

inline double relative_visibility(const Feature& f) { return f.baseline != 0.0 ? f.depth / f.baseline : 0.0; }

}  // namespace detail

/// FWHM from the two half-depth crossings nearest the extremum.
inline ResolutionReport fwhm_halfmax(const Interferogram& ig) {
  const auto f = detail::locate_feature(ig);
  ResolutionReport r;
  r.method = WidthMethod::half_max;
  r.fwhm = f.right - f.left;
  r.dip_or_peak_center = f.center;
  r.visibility = detail::relative_visibility(f);
  const double left = f.center - f.left;
  const double right = f.right - f.center;
  r.asymmetry = (right - left) / (right + left);
  return r;
}

/// Levenberg-Marquardt fit of b + a exp(-4 ln2 (x - x0)^2 / w^2). The
/// baseline is held at 1 when the grid reaches the flat wings.
inline ResolutionReport fwhm_gaussian_fit(const Interferogram& ig, int max_iterations = 200) {
  const auto f = detail::locate_feature(ig);
  const double visibility = detail::relative_visibility(f);
  if (visibility < 0.05) {
    throw FitError("feature visibility " + std::to_string(visibility) + " is below 0.05; nothing to fit");
  }
  const auto& x = ig.delay_um;
  const auto& y = ig.values;
  const double step = x[1] - x[0];
  const double guess_w = f.right - f.left;
  if (guess_w / step < 15.0) {
    throw InputError("delay grid resolves the feature with only " +
                     std::to_string(static_cast<int>(guess_w / step)) +
                     " samples across its FWHM; at least 15 are needed");
  }

  const double k = 4.0 * kLn2;
  const bool fit_baseline = !f.baseline_fixed;
  const int np = fit_baseline ? 4 : 3;
  const auto n = static_cast<Eigen::Index>(y.size());
  // Parameters: amplitude, center, width[, baseline]
  Eigen::VectorXd p(np);
  p(0) = detail::feature_sign(ig) * f.depth;
  p(1) = f.center;
  p(2) = guess_w;
  if (fit_baseline) p(3) = f.baseline;

  auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double b = fit_baseline ? q(3) : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (x[static_cast<std::size_t>(i)] - q(1)) / q(2);
      const double g = std::exp(-k * u * u);
      r(i) = b + q(0) * g - y[static_cast<std::size_t>(i)];
      if (jac) {
        (*jac)(i, 0) = g;
        (*jac)(i, 1) = q(0) * g * 2.0 * k * u / q(2);
        (*jac)(i, 2) = q(0) * g * 2.0 * k * u * u / q(2);
        if (fit_baseline) (*jac)(i, 3) = 1.0;
      }
    }
  };

  Eigen::VectorXd r(n), r_trial(n);
  Eigen::MatrixXd jac(n, np);
  residuals(p, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  for (int it = 0; it < max_iterations && !converged; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    while (!improved && lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      for (int d = 0; d < np; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-300);
      const Eigen::VectorXd delta = a.ldlt().solve(-jtr);
      Eigen::VectorXd trial = p + delta;
      if (!(trial(2) > 0.0)) trial(2) = 0.5 * p(2);
      residuals(trial, r_trial, nullptr);
      const double trial_cost = r_trial.squaredNorm();
      if (trial_cost <= cost) {
        const double rel_step = (delta.cwiseAbs().array() /
                                 (p.cwiseAbs().array() + 1e-12 * guess_w)).maxCoeff();
        const double rel_cost = (cost - trial_cost) / std::max(cost, 1e-300);
        p = trial;
        cost = trial_cost;
        residuals(p, r, &jac);
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel_step < 1e-12 || (rel_cost < 1e-14 && rel_step < 1e-8) || cost < 1e-28) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) converged = true;  // no descent direction left: at the minimum
  }
  if (!converged) throw NumericalError("Gaussian fit did not converge in " + std::to_string(max_iterations) + " iterations");

  ResolutionReport rep;
  rep.method = WidthMethod::gaussian_fit;
  rep.fwhm = std::abs(p(2));
  rep.fit_residual_rms = std::sqrt(cost / static_cast<double>(n));
  rep.dip_or_peak_center = p(1);
  const double baseline = fit_baseline ? p(3) : 1.0;
  rep.visibility = std::abs(p(0)) / baseline;
  const double left = f.center - f.left;
  const double right = f.right - f.center;
  rep.asymmetry = (right - left) / (right + left);
  return rep;
}

inline ResolutionReport measure(const Interferogram& ig, WidthMethod method) {
  return method == WidthMethod::gaussian_fit ? fwhm_gaussian_fit(ig) : fwhm_halfmax(ig);
}

/// Dip visibility for TPI, envelope contrast for LCI envelopes, and fringe
/// contrast over the central fringe region for fringed LCI.
inline double visibility(const Interferogram& ig) {
  if (ig.values.size() < 10 || ig.values.size() != ig.delay_um.size()) {
    throw InputError("visibility needs at least 10 samples");
  }
  const auto& y = ig.values;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*hi - *lo < 1e-12) throw ShapeError("interferogram is flat; visibility undefined");
  if (ig.kind == InterferogramKind::lci && ig.carrier == Carrier::with_fringes) {
    // central region: samples whose local fringe excursion exceeds 90% of the largest
    const auto peak = static_cast<std::size_t>(
        std::max_element(y.begin(), y.end(), [](double a, double b) { return std::abs(a - 1.0) < std::abs(b - 1.0); }) -
        y.begin());
    const double dx = ig.delay_um[1] - ig.delay_um[0];
    const double fringe = kSpeedOfLightUmPerFs * std::numbers::pi / 2.3;  // generous fringe period bound
    const auto reach = static_cast<std::size_t>(std::ceil(fringe / dx)) + 1;
    const std::size_t a = peak > reach ? peak - reach : 0;
    const std::size_t b = std::min(y.size() - 1, peak + reach);
    const auto [mn, mx] = std::minmax_element(y.begin() + static_cast<long>(a), y.begin() + static_cast<long>(b) + 1);
    return (*mx - *mn) / (*mx + *mn);
  }
  const double baseline = detail::estimate_baseline(ig);
  if (ig.kind == InterferogramKind::tpi) return (baseline - *lo) / baseline;
  return (*hi - baseline) / baseline;
}

/// Local extrema of the residual beyond each half-depth crossing whose
/// excursion from the baseline exceeds `threshold` times the feature depth.
struct OscillationSides {
  int left = 0;
  int right = 0;
  int sides() const { return (left > 0 ? 1 : 0) + (right > 0 ? 1 : 0); }
};

inline OscillationSides oscillation_sides(const Interferogram& ig, double threshold = 0.01) {
  const auto f = detail::locate_feature(ig);
  const double sign = detail::feature_sign(ig);
  const auto& y = ig.values;
  std::vector<double> h(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) h[i] = sign * (y[i] - f.baseline);
  const double limit = threshold * f.depth;
  auto is_extremum = [&](std::size_t i) {
    return (h[i] > h[i - 1] && h[i] >= h[i + 1]) || (h[i] < h[i - 1] && h[i] <= h[i + 1]);
  };
  OscillationSides s;
  for (std::size_t i = 1; i + 1 < f.left_index; ++i) {
    if (is_extremum(i) && std::abs(h[i]) > limit) ++s.left;
  }
  for (std::size_t i = f.right_index + 1; i + 1 < h.size(); ++i) {
    if (is_extremum(i) && std::abs(h[i]) > limit) ++s.right;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Enhancement factors

inline double enhancement_factor(double lci_fwhm_um, double tpi_fwhm_um) {
  if (!(lci_fwhm_um > 0.0) || !(tpi_fwhm_um > 0.0)) throw ParameterError("widths must be positive");
  return lci_fwhm_um / tpi_fwhm_um;
}

/// 2 W(FT|f_o|^2) / W(FT |f_s|^2 |f_i|^2) for widths W of the Fourier magnitudes.
inline double theoretical_enhancement(const SpectralAmplitude& fo, const SpectralAmplitude& fs,
                                      const SpectralAmplitude& fi) {
  if (!fs.grid().same_as(fi.grid())) throw InputError("signal and idler spectra must share one grid");
  const auto ds = fs.density();
  const auto di = fi.density();
  std::vector<double> product(ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) product[k] = ds[k] * di[k];
  const double norm = trapezoid(product, fs.grid().step());
  if (!(norm > 0.0)) throw InputError("signal and idler spectra do not overlap");
  for (double& p : product) p /= norm;
  return 2.0 * fourier_fwhm(fo) / fourier_fwhm(fs.grid(), product);
}

/// Empty-stack LCI envelope FWHM in optical delay, from the spectrum alone.
inline double lci_fwhm_um(const SpectralAmplitude& spectrum) {
  return 0.5 * kSpeedOfLightUmPerFs * fourier_fwhm(spectrum);
}

// ---------------------------------------------------------------------------
// Closed forms

/// GVD-broadened LCI width for a Gaussian spectrum of undispersed width dl.
inline double lci_degraded_closed_form(double dl_um, double gdd_fs2) {
  if (!(dl_um > 0.0) || !(gdd_fs2 >= 0.0)) throw ParameterError("need width > 0 and GDD >= 0");
  const double t = 2.0 * std::sqrt(kLn2) * kSpeedOfLightUmPerFs * std::sqrt(gdd_fs2) / dl_um;
  return dl_um * std::sqrt(1.0 + t * t * t * t);
}

/// Smallest reachable dispersed LCI width for a given GDD.
inline double lci_threshold(double gdd_fs2) {
  if (!(gdd_fs2 >= 0.0)) throw ParameterError("GDD must be non-negative");
  return 2.0 * std::sqrt(2.0 * kLn2) * kSpeedOfLightUmPerFs * std::sqrt(gdd_fs2);
}

inline double tpi_pump_degradation_factor(double signal_fwhm, double pump_fwhm, double gdd_fs2) {
  const double a = signal_fwhm * pump_fwhm * gdd_fs2 / (8.0 * std::sqrt(2.0) * kLn2);
  return std::sqrt(1.0 + a * a);
}

/// TPI width under a finite pump linewidth and uncancelled GVD.
inline double tpi_pump_degradation_closed_form(double dl_um, double signal_fwhm, double pump_fwhm,
                                               double gdd_fs2) {
  if (!(dl_um > 0.0) || !(signal_fwhm > 0.0) || !(pump_fwhm >= 0.0) || !(gdd_fs2 >= 0.0)) {
    throw ParameterError("closed form needs positive widths and non-negative GDD");
  }
  return dl_um * tpi_pump_degradation_factor(signal_fwhm, pump_fwhm, gdd_fs2);
}

/// Pump FWHM at which the closed form predicts the given degradation factor.
inline double pump_linewidth_for_degradation(double factor, double signal_fwhm, double gdd_fs2) {
  if (!(factor >= 1.0) || !(signal_fwhm > 0.0) || !(gdd_fs2 > 0.0)) {
    throw ParameterError("need factor >= 1, positive signal width and positive GDD");
  }
  return 8.0 * std::sqrt(2.0) * kLn2 * std::sqrt(factor * factor - 1.0) / (signal_fwhm * gdd_fs2);
}

// ---------------------------------------------------------------------------
// Spectrum tuning

/// Gaussian FWHM (rad/fs) whose empty-stack LCI envelope is lci_um wide.
inline double gaussian_fwhm_for_lci(double lci_um) {
  if (!(lci_um > 0.0)) throw ParameterError("target width must be positive");
  return 4.0 * kLn2 * kSpeedOfLightUmPerFs / lci_um;
}

/// Width parameter for any shape family whose Fourier width scales inversely
/// with it: builds the family at unit width and rescales.
inline double width_for_lci(const std::function<SpectralAmplitude(double)>& family, double lci_um) {
  if (!(lci_um > 0.0)) throw ParameterError("target width must be positive");
  return lci_fwhm_um(family(1.0)) / lci_um;
}

/// Theoretical enhancement of identical trapezoids with plateau/base ratio r.
inline double trapezoid_enhancement(double ratio, const GridSpec& spec = {}) {
  const auto t = trapezoidal_spectrum(2.0, ratio, 1.0, spec);
  return theoretical_enhancement(t, t, t);
}

/// Plateau/base ratio of identical trapezoids reaching the target
/// enhancement, by bisection between the triangle and the rectangle.
inline double find_trapezoid_ratio(double target, const GridSpec& spec = {}) {
  double lo = 1e-3, hi = 1.0;
  const double at_lo = trapezoid_enhancement(lo, spec);
  const double at_hi = trapezoid_enhancement(hi, spec);
  if (!(target > at_lo && target < at_hi)) {
    throw ParameterError("target enhancement " + std::to_string(target) + " lies outside [" +
                         std::to_string(at_lo) + ", " + std::to_string(at_hi) + "]");
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (trapezoid_enhancement(mid, spec) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace homsim
