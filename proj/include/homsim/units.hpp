#pragma once

// Project-wide units: angular frequency in rad/fs, time in fs, optical delay
// (c*tau/2) in um, thickness in mm, dispersion coefficients in fs^n/mm.

#include <cmath>
#include <numbers>

namespace homsim {

inline constexpr double kSpeedOfLightNmPerFs = 299.792458;
inline constexpr double kSpeedOfLightUmPerFs = 0.299792458;
inline constexpr double kSpeedOfLightMmPerFs = 2.99792458e-4;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kLn2 = std::numbers::ln2;

/// Round-trip time delay tau (fs) to delay-mirror displacement c*tau/2 (um).
inline constexpr double delay_um_from_tau(double tau_fs) {
  return 0.5 * kSpeedOfLightUmPerFs * tau_fs;
}

inline constexpr double tau_from_delay_um(double delay_um) {
  return 2.0 * delay_um / kSpeedOfLightUmPerFs;
}

inline constexpr double angular_frequency_from_wavelength_nm(double wavelength_nm) {
  return kTwoPi * kSpeedOfLightNmPerFs / wavelength_nm;
}

inline constexpr double wavelength_nm_from_angular_frequency(double omega) {
  return kTwoPi * kSpeedOfLightNmPerFs / omega;
}

/// Angular bandwidth of a spectrum given as a wavelength width around lambda.
inline constexpr double angular_bandwidth_from_nm(double width_nm, double wavelength_nm) {
  return kTwoPi * kSpeedOfLightNmPerFs * width_nm / (wavelength_nm * wavelength_nm);
}

/// Ordinary frequency in THz for an angular frequency in rad/fs.
inline constexpr double thz_from_angular(double omega) { return omega / kTwoPi * 1.0e3; }

}  // namespace homsim
