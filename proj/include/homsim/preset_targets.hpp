#pragma once

#include <array>
#include <limits>
#include <string_view>

namespace homsim {

// Reference values for the reproduction presets. Changing a bound here
// changes the pass/fail verdict of `homsim reproduce`; bump the version
// whenever a row is edited.
inline constexpr int kTargetsVersion = 1;

struct TargetRow {
  std::string_view id;
  std::string_view quantity;
  std::string_view unit;
  double target;
  double lower;
  double upper;
  bool width;  // an interferogram width, subject to the refinement check
  std::string_view source;
};

inline constexpr double kNoBound = std::numeric_limits<double>::infinity();

inline constexpr std::array kPresetTargets{
    // Gaussian and trapezoid spectra, empty stack
    TargetRow{"fig2.gaussian.lci_fwhm", "Gaussian LCI envelope FWHM", "um", 4.2, 4.1, 4.3, true,
              "measured LCI width, Gaussian spectrum"},
    TargetRow{"fig2.gaussian.tpi_fwhm", "Gaussian TPI dip FWHM", "um", 3.0, 2.9, 3.1, true,
              "measured TPI width, Gaussian spectrum"},
    TargetRow{"fig2.gaussian.enhancement", "Gaussian enhancement R_e", "", 1.4, 1.3, 1.5, false,
              "measured enhancement, Gaussian spectrum (theory sqrt 2)"},
    TargetRow{"fig2.trapezoid.enhancement_theory", "trapezoid theoretical R_e", "", 1.69, 1.67, 1.71,
              false, "theoretical enhancement of the trapezoidal spectrum"},
    TargetRow{"fig2.trapezoid.lci_fwhm", "trapezoid LCI envelope FWHM", "um", 3.9, 3.8, 4.0, true,
              "measured LCI width, trapezoidal spectrum"},
    TargetRow{"fig2.trapezoid.tpi_fwhm", "trapezoid TPI dip FWHM", "um", 2.3, 2.2, 2.4, true,
              "measured TPI width, trapezoidal spectrum"},
    TargetRow{"fig2.trapezoid.enhancement", "trapezoid enhancement R_e", "", 1.7, 1.6, 1.8, false,
              "measured enhancement, trapezoidal spectrum"},

    // 25 mm water
    TargetRow{"fig3.lci_empty", "LCI FWHM, no sample", "um", 4.2, 4.1, 4.3, true,
              "measured LCI width without sample"},
    TargetRow{"fig3.lci_water", "LCI FWHM, 25 mm water", "um", 37.0, 36.0, 38.0, true,
              "expected LCI broadening by 25 mm water"},
    TargetRow{"fig3.tpi_empty", "TPI FWHM, no sample", "um", 3.0, 2.9, 3.1, true,
              "measured TPI width without sample"},
    TargetRow{"fig3.tpi_water", "TPI FWHM, 25 mm water", "um", 3.0, 2.9, 3.1, true,
              "measured TPI width through water, unchanged"},
    TargetRow{"fig3.tpi_water_change", "relative TPI width change, water", "", 0.0, -0.005, 0.005,
              false, "TPI width unchanged by water"},

    // water + BK7 with a finite pump linewidth
    TargetRow{"fig3_2.gdd_budget", "GDD of 25 mm water + 22 mm BK7", "fs^2", 1700.0, 1450.0, 1750.0,
              false, "total GDD of water, BK7 plate and windows"},
    TargetRow{"fig3_2.tpi_mono", "TPI FWHM, monochromatic pump", "um", 3.0, 2.9, 3.1, true,
              "TPI width with cancelled GVD"},
    TargetRow{"fig3_2.tpi_finite", "TPI FWHM, broadband pump", "um", 3.5, 3.3, 3.7, true,
              "TPI width degraded by the pump linewidth"},
    TargetRow{"fig3_2.degradation", "pump-linewidth degradation factor", "", 1.17, 1.14, 1.20, false,
              "theoretical degradation factor"},

    // 5 mm ZnSe
    TargetRow{"fig4.tpi_fwhm", "TPI half-max FWHM, 5 mm ZnSe", "um", 3.5, 3.2, 3.8, true,
              "measured TPI width through ZnSe"},
    TargetRow{"fig4.asymmetry_magnitude", "|asymmetry|, 5 mm ZnSe", "", 0.1, 0.01, kNoBound, false,
              "asymmetric dip from third-order dispersion"},
    TargetRow{"fig4.asymmetry_flip", "asymmetry sign flips with beta3", "", 1.0, 1.0, 1.0, false,
              "asymmetry sign set by third-order dispersion"},
    TargetRow{"fig4.oscillation_sides", "sides with secondary oscillations", "", 1.0, 1.0, 1.0, false,
              "oscillations on one side of the dip"},
    TargetRow{"fig4.lci_closed_form", "LCI FWHM from 3.0 um at 5000 fs^2", "um", 415.0, 410.0, 420.0,
              false, "expected LCI degradation by ZnSe"},
    TargetRow{"fig4.improvement", "LCI/TPI width ratio", "", 120.0, 115.0, kNoBound, false,
              "improvement over LCI"},
};

inline constexpr const TargetRow* find_target(std::string_view id) {
  for (const auto& row : kPresetTargets) {
    if (row.id == id) return &row;
  }
  return nullptr;
}

}  // namespace homsim
