#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "homsim/dispersion.hpp"
#include "homsim/errors.hpp"
#include "homsim/numerics.hpp"
#include "homsim/spectra.hpp"
#include "homsim/units.hpp"

namespace homsim {

enum class InterferogramKind { lci, tpi };
enum class Carrier { envelope_only, with_fringes };

/// absolute: delays are measured from equal vacuum path lengths.
/// group_delay: delays are measured from the stack's group delay at the
/// reference frequency, which centers the feature near zero.
enum class DelayReference { absolute, group_delay };

struct MonochromaticPump {
  double frequency = 0.0;
};

struct GaussianPump {
  double frequency = 0.0;
  double fwhm = 0.0;  // of |xi_p|^2 over the sum frequency, rad/fs
  std::size_t samples = 65;
};

using PumpModel = std::variant<MonochromaticPump, GaussianPump>;

struct EngineOptions {
  /// Multiplier on the media phase: 2 for a double pass (media in front of a
  /// mirror), 1 for a single pass.
  double pass_factor = 2.0;
  std::size_t padding = 32;
  DelayReference delay_reference = DelayReference::absolute;
  /// Scale of the interference term; 1 for indistinguishable photons.
  double interference_scale = 1.0;
  double pump_span_sigmas = 6.0;
  /// Spectral samples below this fraction of the peak density are dropped.
  double negligible_density = 1e-10;
  double pump_convergence_tolerance = 1e-3;
};

/// Sampled I(tau) or C(tau) on a uniform optical-delay axis c*tau/2 in um.
struct Interferogram {
  InterferogramKind kind = InterferogramKind::tpi;
  Carrier carrier = Carrier::envelope_only;
  std::vector<double> delay_um;
  std::vector<double> values;
  nlohmann::json metadata = nlohmann::json::object();
};

inline const char* to_string(InterferogramKind k) { return k == InterferogramKind::lci ? "lci" : "tpi"; }
inline const char* to_string(Carrier c) {
  return c == Carrier::envelope_only ? "envelope_only" : "with_fringes";
}
inline const char* to_string(DelayReference r) {
  return r == DelayReference::absolute ? "absolute" : "group_delay";
}

/// `points` uniformly spaced delays over [center - span/2, center + span/2].
inline std::vector<double> delay_grid(double center_um, double span_um, std::size_t points) {
  if (points < 2) throw ParameterError("delay grid needs at least 2 points");
  if (!(span_um > 0.0)) throw ParameterError("delay grid span must be positive");
  std::vector<double> out(points);
  const double step = span_um / static_cast<double>(points - 1);
  const double start = center_um - 0.5 * span_um;
  for (std::size_t i = 0; i < points; ++i) out[i] = start + step * static_cast<double>(i);
  return out;
}

namespace detail {

inline double check_delay_grid(std::span<const double> delays) {
  if (delays.size() < 2) throw InputError("delay grid needs at least 2 points");
  const double step = (delays.back() - delays.front()) / static_cast<double>(delays.size() - 1);
  if (!(step > 0.0)) throw InputError("delay grid must be strictly increasing");
  for (std::size_t i = 1; i < delays.size(); ++i) {
    if (std::abs((delays[i] - delays[i - 1]) - step) > 1e-6 * step) {
      throw InputError("delay grid must be uniform");
    }
  }
  return step;
}

inline void check_options(const EngineOptions& opt) {
  if (!(opt.pass_factor > 0.0)) throw ParameterError("pass factor must be positive");
  if (opt.padding < 16) throw ParameterError("FFT padding must be at least 16x");
  if (!(opt.interference_scale >= 0.0 && opt.interference_scale <= 1.0)) {
    throw ParameterError("interference scale must lie in [0, 1]");
  }
}

/// Density with negligible samples zeroed and renormalized on the grid.
inline std::vector<double> working_density(std::span<const double> density, double step,
                                           double negligible) {
  const double peak = *std::max_element(density.begin(), density.end());
  std::vector<double> out(density.begin(), density.end());
  for (double& d : out) {
    if (d < negligible * peak) d = 0.0;
  }
  const double norm = trapezoid(out, step);
  if (!(norm > 0.0)) throw InputError("spectral density has zero norm");
  for (double& d : out) d /= norm;
  return out;
}

/// The residual media phase must change by less than pi/2 between adjacent
/// samples carrying non-negligible weight, or the sampled integrand aliases.
inline void check_phase_resolution(std::span<const double> phase, std::span<const double> weight) {
  const double peak = *std::max_element(weight.begin(), weight.end());
  for (std::size_t k = 1; k < phase.size(); ++k) {
    if (weight[k] > 1e-6 * peak && weight[k - 1] > 1e-6 * peak &&
        std::abs(phase[k] - phase[k - 1]) > 0.5 * kTwoPi / 2.0) {
      throw ParameterError(
          "media phase is under-resolved by the spectral grid; increase the spectral point count");
    }
  }
}

inline void check_alias_window(const ConjugateTransform& t, double s) {
  if (std::abs(s) > 0.5 * t.period()) {
    throw ParameterError(
        "delay lies outside the alias-free window of the spectral grid; increase the spectral "
        "point count or narrow the delay span");
  }
}

inline void warn_degenerate_pump(nlohmann::json& metadata, double pump_frequency, double center) {
  if (std::abs(0.5 * pump_frequency - center) > 0.01 * center) {
    metadata["warnings"].push_back("pump frequency deviates from twice the photon center frequency by more than 1%");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Low-coherence interferogram
///   I(tau) = 1 + Re{ e^{-i w0 tau} int |f(W)|^2 e^{-i W tau + i p phase(W)} dW }
/// with p = pass_factor. One FFT of the dispersed density serves all delays.
inline Interferogram lci(const SpectralAmplitude& spectrum, const MediumStack& stack,
                         std::span<const double> delays_um, Carrier carrier = Carrier::envelope_only,
                         const EngineOptions& opt = {}) {
  detail::check_options(opt);
  const double delay_step = detail::check_delay_grid(delays_um);
  const double omega0 = spectrum.center_frequency();
  if (carrier == Carrier::with_fringes &&
      !(delay_step < std::numbers::pi * kSpeedOfLightUmPerFs / (2.0 * omega0))) {
    throw ParameterError("delay spacing too coarse to resolve LCI fringes (must be below " +
                         std::to_string(std::numbers::pi * kSpeedOfLightUmPerFs / (2.0 * omega0)) +
                         " um)");
  }

  const auto& grid = spectrum.grid();
  const auto rho = detail::working_density(spectrum.density(), grid.step(), opt.negligible_density);
  const double phase0 = stack.empty() ? 0.0 : opt.pass_factor * stack.phase(0.0, omega0);
  const double group_delay = stack.empty() ? 0.0 : opt.pass_factor * stack.group_delay(omega0);

  std::vector<double> residual(grid.size(), 0.0);
  std::vector<complex> coeffs(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (rho[k] == 0.0) continue;
    if (!stack.empty()) {
      residual[k] = opt.pass_factor * stack.phase(grid[k], omega0) - phase0 - group_delay * grid[k];
    }
    coeffs[k] = trapezoid_weight(k, grid.size()) * rho[k] * grid.step() * std::polar(1.0, residual[k]);
  }
  detail::check_phase_resolution(residual, rho);
  const ConjugateTransform transform(grid, coeffs, opt.padding);

  const bool absolute = opt.delay_reference == DelayReference::absolute;
  const double carrier_offset = absolute ? std::fmod(phase0, kTwoPi)
                                         : std::fmod(phase0 - omega0 * group_delay, kTwoPi);
  Interferogram ig;
  ig.kind = InterferogramKind::lci;
  ig.carrier = carrier;
  ig.delay_um.assign(delays_um.begin(), delays_um.end());
  ig.values.reserve(delays_um.size());
  for (double x : delays_um) {
    const double tau = tau_from_delay_um(x);
    const double s = absolute ? tau - group_delay : tau;
    detail::check_alias_window(transform, s);
    const complex g = transform(s);
    if (carrier == Carrier::envelope_only) {
      ig.values.push_back(1.0 + opt.interference_scale * std::abs(g));
    } else {
      const complex c = std::polar(1.0, carrier_offset - omega0 * tau);
      ig.values.push_back(1.0 + opt.interference_scale * (c * g).real());
    }
  }
  ig.metadata = {{"engine", "lci"},
                 {"carrier", to_string(carrier)},
                 {"center_frequency_rad_per_fs", omega0},
                 {"pass_factor", opt.pass_factor},
                 {"group_delay_fs", group_delay},
                 {"delay_reference", to_string(opt.delay_reference)},
                 {"spectral_points", grid.size()},
                 {"fft_size", transform.size()}};
  return ig;
}

/// Monochromatic-pump HOM interferogram
///   C(tau) = 1 - Re int |f_q(W)|^2 e^{-2 i W tau + i eta(W)} dW,
///   eta(W) = p [phase(W) - phase(-W)] about w_p/2.
/// Even orders of the media phase cancel in eta identically.
inline Interferogram tpi_mono(const DegenerateBiphoton& biphoton, const MediumStack& stack,
                              double pump_frequency, std::span<const double> delays_um,
                              const EngineOptions& opt = {}) {
  detail::check_options(opt);
  detail::check_delay_grid(delays_um);
  const auto& grid = biphoton.grid;
  if (biphoton.density.size() != grid.size()) {
    throw InputError("biphoton density is not sampled on a symmetric grid of matching size");
  }
  if (!(pump_frequency > 0.0)) throw ParameterError("pump frequency must be positive");
  const double reference = 0.5 * pump_frequency;
  const auto rho = detail::working_density(biphoton.density, grid.step(), opt.negligible_density);
  const double slope = stack.empty() ? 0.0 : 2.0 * opt.pass_factor * stack.group_delay(reference);

  std::vector<double> residual(grid.size(), 0.0);
  std::vector<complex> coeffs(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (rho[k] == 0.0) continue;
    if (!stack.empty()) {
      const double eta = opt.pass_factor * (stack.phase(grid[k], reference) -
                                            stack.phase(grid[grid.mirror(k)], reference));
      residual[k] = eta - slope * grid[k];
    }
    coeffs[k] = trapezoid_weight(k, grid.size()) * rho[k] * grid.step() * std::polar(1.0, residual[k]);
  }
  detail::check_phase_resolution(residual, rho);
  const ConjugateTransform transform(grid, coeffs, opt.padding);

  const bool absolute = opt.delay_reference == DelayReference::absolute;
  Interferogram ig;
  ig.kind = InterferogramKind::tpi;
  ig.delay_um.assign(delays_um.begin(), delays_um.end());
  ig.values.reserve(delays_um.size());
  for (double x : delays_um) {
    const double s = 2.0 * tau_from_delay_um(x) - (absolute ? slope : 0.0);
    detail::check_alias_window(transform, s);
    ig.values.push_back(1.0 - opt.interference_scale * transform(s).real());
  }
  ig.metadata = {{"engine", "tpi_mono"},
                 {"pump_frequency_rad_per_fs", pump_frequency},
                 {"pass_factor", opt.pass_factor},
                 {"group_delay_fs", 0.5 * slope},
                 {"delay_reference", to_string(opt.delay_reference)},
                 {"spectral_points", grid.size()},
                 {"fft_size", transform.size()}};
  detail::warn_degenerate_pump(ig.metadata, pump_frequency, biphoton.center_frequency);
  return ig;
}

/// Finite-linewidth pump:
///   C(tau) = 1 - Re iint |xi_p(w_s + w_i)|^2 |f_s(w_s)|^2 |f_i(w_i)|^2
///            e^{-i (w_s - w_i) tau + i p [phase(w_s) - phase(w_i)]} / norm.
/// In sum/difference detunings only the difference couples to tau, so the
/// pump-weighted difference-frequency coefficients are accumulated over the
/// sum-frequency quadrature first and transformed once. The quadrature is
/// checked against a grid with twice the density.
inline Interferogram tpi_finite_pump(const SpectralAmplitude& signal, const SpectralAmplitude& idler,
                                     const GaussianPump& pump, const MediumStack& stack,
                                     std::span<const double> delays_um,
                                     const EngineOptions& opt = {}) {
  detail::check_options(opt);
  detail::check_delay_grid(delays_um);
  if (!(pump.frequency > 0.0)) throw ParameterError("pump frequency must be positive");
  const auto coarse = biphoton_joint(signal, idler, pump.fwhm, pump.samples, opt.pump_span_sigmas);
  const auto fine = biphoton_joint(signal, idler, pump.fwhm, 2 * pump.samples - 1, opt.pump_span_sigmas);

  const double reference = 0.5 * pump.frequency;
  const double signal_offset = reference - signal.center_frequency();
  const double idler_offset = reference - idler.center_frequency();
  const auto& grid = signal.grid();
  const std::size_t n = grid.size();
  const auto& pgrid = fine.pump_grid;

  // Joint density at (sum detuning p, difference detuning 2W).
  auto joint = [&](double p, std::size_t k) {
    return signal.density_at(0.5 * p + grid[k] + signal_offset) *
           idler.density_at(0.5 * p - grid[k] + idler_offset);
  };
  double peak = 0.0;
  for (std::size_t j = 0; j < pgrid.size(); ++j) {
    for (std::size_t k = 0; k < n; ++k) peak = std::max(peak, joint(pgrid[j], k));
  }
  if (!(peak > 0.0)) throw InputError("signal and idler spectra do not overlap");

  const double slope = stack.empty() ? 0.0 : 2.0 * opt.pass_factor * stack.group_delay(reference);
  std::vector<complex> coeffs(n);
  complex coarse_zero{}, fine_zero{};
  double coarse_norm = 0.0, fine_norm = 0.0;
  for (std::size_t j = 0; j < pgrid.size(); ++j) {
    const double p = pgrid[j];
    const double w_fine =
        trapezoid_weight(j, pgrid.size()) * fine.pump_density[j] * pgrid.step();
    const bool on_coarse = j % 2 == 0;
    const double w_coarse =
        on_coarse ? trapezoid_weight(j / 2, coarse.pump_grid.size()) * coarse.pump_density[j / 2] *
                        coarse.pump_grid.step()
                  : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = joint(p, k);
      if (a < opt.negligible_density * peak) continue;
      double residual = 0.0;
      if (!stack.empty()) {
        residual = opt.pass_factor * (stack.phase(0.5 * p + grid[k], reference) -
                                      stack.phase(0.5 * p - grid[k], reference)) -
                   slope * grid[k];
      }
      const double weight = trapezoid_weight(k, n) * a * grid.step();
      const complex term = weight * std::polar(1.0, residual);
      fine_zero += w_fine * term;
      fine_norm += w_fine * weight;
      if (on_coarse) {
        coeffs[k] += w_coarse * term;
        coarse_zero += w_coarse * term;
        coarse_norm += w_coarse * weight;
      }
    }
  }
  const double c0_coarse = 1.0 - coarse_zero.real() / coarse_norm;
  const double c0_fine = 1.0 - fine_zero.real() / fine_norm;
  if (std::abs(c0_coarse - c0_fine) > opt.pump_convergence_tolerance) {
    std::ostringstream msg;
    msg << "pump quadrature not converged: C(0) = " << c0_coarse << " with " << pump.samples
        << " samples vs " << c0_fine << " with " << pgrid.size() << "; increase pump samples";
    throw NumericalError(msg.str());
  }
  for (auto& c : coeffs) c /= coarse_norm;
  const ConjugateTransform transform(grid, coeffs, opt.padding);

  const bool absolute = opt.delay_reference == DelayReference::absolute;
  Interferogram ig;
  ig.kind = InterferogramKind::tpi;
  ig.delay_um.assign(delays_um.begin(), delays_um.end());
  ig.values.reserve(delays_um.size());
  for (double x : delays_um) {
    const double s = 2.0 * tau_from_delay_um(x) - (absolute ? slope : 0.0);
    detail::check_alias_window(transform, s);
    ig.values.push_back(1.0 - opt.interference_scale * transform(s).real());
  }
  ig.metadata = {{"engine", "tpi_finite_pump"},
                 {"pump_frequency_rad_per_fs", pump.frequency},
                 {"pump_fwhm_rad_per_fs", pump.fwhm},
                 {"pump_samples", pump.samples},
                 {"pump_convergence_delta", std::abs(c0_coarse - c0_fine)},
                 {"pass_factor", opt.pass_factor},
                 {"group_delay_fs", 0.5 * slope},
                 {"delay_reference", to_string(opt.delay_reference)},
                 {"spectral_points", n},
                 {"fft_size", transform.size()}};
  detail::warn_degenerate_pump(ig.metadata, pump.frequency, signal.center_frequency());
  return ig;
}

/// TPI for either pump model; signal and idler share one spectrum shape
/// description each.
inline Interferogram tpi(const SpectralAmplitude& signal, const SpectralAmplitude& idler,
                         const PumpModel& pump, const MediumStack& stack,
                         std::span<const double> delays_um, const EngineOptions& opt = {}) {
  if (const auto* mono = std::get_if<MonochromaticPump>(&pump)) {
    return tpi_mono(biphoton_degenerate(signal, idler), stack, mono->frequency, delays_um, opt);
  }
  return tpi_finite_pump(signal, idler, std::get<GaussianPump>(pump), stack, delays_um, opt);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// `#`-prefixed metadata block, then `delay_um,value` rows at full precision.
inline void write_csv(std::ostream& out, const Interferogram& ig) {
  std::istringstream meta(ig.metadata.dump(2));
  for (std::string line; std::getline(meta, line);) out << "# " << line << '\n';
  out << "delay_um,value\n";
  for (std::size_t i = 0; i < ig.values.size(); ++i) {
    out << format_double(ig.delay_um[i]) << ',' << format_double(ig.values[i]) << '\n';
  }
}

/// Reads back a file written by write_csv (kind and carrier from metadata).
inline Interferogram read_csv(std::istream& in) {
  Interferogram ig;
  std::string line, meta;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      meta += line.substr(2) + '\n';
      continue;
    }
    if (!header_seen) {
      if (line != "delay_um,value") throw InputError("interferogram CSV header missing");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("interferogram CSV row without comma");
    ig.delay_um.push_back(std::stod(line.substr(0, comma)));
    ig.values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (!meta.empty()) ig.metadata = nlohmann::json::parse(meta);
  const auto engine = ig.metadata.value("engine", std::string("tpi_mono"));
  ig.kind = engine == "lci" ? InterferogramKind::lci : InterferogramKind::tpi;
  ig.carrier = ig.metadata.value("carrier", std::string("envelope_only")) == "with_fringes"
                   ? Carrier::with_fringes
                   : Carrier::envelope_only;
  return ig;
}

}  // namespace homsim
