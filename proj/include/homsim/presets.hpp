#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "homsim/analysis.hpp"
#include "homsim/dispersion.hpp"
#include "homsim/preset_targets.hpp"
#include "homsim/scenario.hpp"

namespace homsim {

/// Multipliers applied to every scenario of a preset, used to check that
/// the reported widths are converged in the numerical parameters.
struct Refinement {
  std::size_t grid = 1;
  std::size_t padding = 1;
  std::size_t pump = 1;
};

struct PresetRow {
  const TargetRow* target = nullptr;
  double value = 0.0;
  bool pass() const { return value >= target->lower && value <= target->upper; }
};

struct PresetResult {
  std::string name;
  std::vector<PresetRow> rows;
  std::vector<std::pair<std::string, Interferogram>> interferograms;

  bool passed() const {
    for (const auto& r : rows) {
      if (!r.pass()) return false;
    }
    return true;
  }

  const PresetRow& row(std::string_view id) const {
    for (const auto& r : rows) {
      if (r.target->id == id) return r;
    }
    throw InputError("preset '" + name + "' has no row '" + std::string(id) + "'");
  }
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3", "fig3_2", "fig4"};
  return names;
}

namespace detail {

inline constexpr double kOperatingLciUm = 4.2;
inline constexpr double kWavelengthNm = 808.0;

class PresetRunner {
 public:
  PresetRunner(std::string name, Refinement refine) : refine_(refine) { result_.name = std::move(name); }

  nlohmann::json scenario(const std::string& label, const std::string& mode, nlohmann::json spectrum,
                          nlohmann::json stack, double pass_factor, const std::string& method) const {
    spectrum["grid"] = {{"points", (4097 - 1) * refine_.grid + 1}, {"span_factor", 4.0}};
    nlohmann::json cfg{{"schema_version", kSchemaVersion},
                       {"label", result_.name + "_" + label},
                       {"mode", mode},
                       {"spectrum", spectrum},
                       {"stack", stack},
                       {"pass_factor", pass_factor},
                       {"delay_reference", "group_delay"},
                       {"engine", {{"padding", 32 * refine_.padding}}},
                       {"analysis", {{"method", method}}}};
    return cfg;
  }

  void gaussian_pump(nlohmann::json& cfg, double fwhm) const {
    cfg["pump"] = {{"model", "gaussian"}, {"fwhm_rad_per_fs", fwhm}, {"samples", (65 - 1) * refine_.pump + 1}};
  }

  RunResult run(const std::string& name, const nlohmann::json& cfg) {
    const auto sc = parse_scenario(cfg);
    auto res = run_scenario(sc);
    result_.interferograms.emplace_back(name, res.interferogram);
    return res;
  }

  Scenario parse(const nlohmann::json& cfg) const { return parse_scenario(cfg); }

  void record(std::string_view id, double value) {
    const auto* target = find_target(id);
    if (target == nullptr) throw InputError("no target row '" + std::string(id) + "'");
    result_.rows.push_back({target, value});
  }

  PresetResult take() { return std::move(result_); }

 private:
  Refinement refine_;
  PresetResult result_;
};

inline nlohmann::json operating_gaussian() { return {{"family", "gaussian"}, {"lci_fwhm_um", kOperatingLciUm}}; }

inline nlohmann::json material(const std::string& name, double thickness_mm) {
  return {{"material", name}, {"thickness_mm", thickness_mm}};
}

inline nlohmann::json pure_gdd(double gdd_fs2) {
  return {{"name", "gdd"},
          {"thickness_mm", 1.0},
          {"taylor", {{"reference_wavelength_nm", kWavelengthNm}, {"beta", {0.0, 0.0, gdd_fs2}}}}};
}

// Single-photon arm passes the sample once in the two-photon setup; the
// reference arm of the low-coherence setup passes it twice.
inline constexpr double kTpiPass = 1.0;
inline constexpr double kLciPass = 2.0;

inline PresetResult preset_fig2(Refinement refine) {
  PresetRunner p("fig2", refine);
  const auto empty = nlohmann::json::array();

  const auto g_lci = p.run("gaussian_lci", p.scenario("gaussian_lci", "lci", operating_gaussian(), empty, kLciPass, "gaussian_fit"));
  const auto g_tpi = p.run("gaussian_tpi", p.scenario("gaussian_tpi", "tpi", operating_gaussian(), empty, kTpiPass, "gaussian_fit"));
  p.record("fig2.gaussian.lci_fwhm", g_lci.report.fwhm);
  p.record("fig2.gaussian.tpi_fwhm", g_tpi.report.fwhm);
  p.record("fig2.gaussian.enhancement", enhancement_factor(g_lci.report.fwhm, g_tpi.report.fwhm));

  const nlohmann::json trapezoid{{"family", "trapezoidal"}, {"target_enhancement", 1.69}, {"lci_fwhm_um", 3.9}};
  const auto t_cfg = p.scenario("trapezoid_lci", "lci", trapezoid, empty, kLciPass, "half_max");
  const auto t_sc = p.parse(t_cfg);
  p.record("fig2.trapezoid.enhancement_theory", theoretical_enhancement(t_sc.signal, t_sc.signal, t_sc.signal));
  const auto t_lci = p.run("trapezoid_lci", t_cfg);
  const auto t_tpi = p.run("trapezoid_tpi", p.scenario("trapezoid_tpi", "tpi", trapezoid, empty, kTpiPass, "half_max"));
  p.record("fig2.trapezoid.lci_fwhm", t_lci.report.fwhm);
  p.record("fig2.trapezoid.tpi_fwhm", t_tpi.report.fwhm);
  p.record("fig2.trapezoid.enhancement", enhancement_factor(t_lci.report.fwhm, t_tpi.report.fwhm));
  return p.take();
}

inline PresetResult preset_fig3(Refinement refine) {
  PresetRunner p("fig3", refine);
  const auto empty = nlohmann::json::array();
  const nlohmann::json water{material("water", 25.0)};

  const auto lci0 = p.run("lci_empty", p.scenario("lci_empty", "lci", operating_gaussian(), empty, kLciPass, "gaussian_fit"));
  const auto lci1 = p.run("lci_water", p.scenario("lci_water", "lci", operating_gaussian(), water, kLciPass, "gaussian_fit"));
  const auto tpi0 = p.run("tpi_empty", p.scenario("tpi_empty", "tpi", operating_gaussian(), empty, kTpiPass, "gaussian_fit"));
  const auto tpi1 = p.run("tpi_water", p.scenario("tpi_water", "tpi", operating_gaussian(), water, kTpiPass, "gaussian_fit"));
  p.record("fig3.lci_empty", lci0.report.fwhm);
  p.record("fig3.lci_water", lci1.report.fwhm);
  p.record("fig3.tpi_empty", tpi0.report.fwhm);
  p.record("fig3.tpi_water", tpi1.report.fwhm);
  p.record("fig3.tpi_water_change", tpi1.report.fwhm / tpi0.report.fwhm - 1.0);
  return p.take();
}

/// Pump linewidth at which the closed form predicts the reference
/// degradation factor for the operating-point photons and GDD.
inline double fig3_2_pump_fwhm() {
  return pump_linewidth_for_degradation(1.17, gaussian_fwhm_for_lci(kOperatingLciUm), 1700.0);
}

inline PresetResult preset_fig3_2(Refinement refine) {
  PresetRunner p("fig3_2", refine);
  MediumStack real;
  real.media = {MaterialLibrary::builtin().make("water", 25.0), MaterialLibrary::builtin().make("bk7", 22.0)};
  p.record("fig3_2.gdd_budget", gvd_budget(real, kWavelengthNm).gdd_fs2);

  const nlohmann::json stack{pure_gdd(1700.0)};
  const auto mono = p.run("tpi_mono", p.scenario("tpi_mono", "tpi", operating_gaussian(), stack, kTpiPass, "gaussian_fit"));
  auto cfg = p.scenario("tpi_finite", "tpi", operating_gaussian(), stack, kTpiPass, "gaussian_fit");
  p.gaussian_pump(cfg, fig3_2_pump_fwhm());
  const auto finite = p.run("tpi_finite", cfg);
  p.record("fig3_2.tpi_mono", mono.report.fwhm);
  p.record("fig3_2.tpi_finite", finite.report.fwhm);
  p.record("fig3_2.degradation", finite.report.fwhm / mono.report.fwhm);
  return p.take();
}

inline PresetResult preset_fig4(Refinement refine) {
  PresetRunner p("fig4", refine);
  const nlohmann::json znse{material("znse", 5.0)};
  const auto tpi = p.run("tpi_znse", p.scenario("tpi_znse", "tpi", operating_gaussian(), znse, kTpiPass, "half_max"));

  // Same plate as a Taylor series with the third-order term negated.
  const auto expanded = taylor_from_sellmeier(MaterialLibrary::builtin().make("znse", 5.0), kWavelengthNm);
  auto beta = std::get<TaylorModel>(expanded.model()).beta;
  beta[3] = -beta[3];
  const nlohmann::json flipped{{{"name", "znse_negated_beta3"},
                                {"thickness_mm", 5.0},
                                {"taylor", {{"reference_wavelength_nm", kWavelengthNm}, {"beta", beta}}}}};
  const auto neg = p.run("tpi_znse_negated_beta3",
                         p.scenario("tpi_znse_negated_beta3", "tpi", operating_gaussian(), flipped, kTpiPass, "half_max"));

  const double lci_closed = lci_degraded_closed_form(3.0, 5000.0);
  p.record("fig4.tpi_fwhm", tpi.report.fwhm);
  p.record("fig4.asymmetry_magnitude", std::abs(tpi.report.asymmetry));
  p.record("fig4.asymmetry_flip", tpi.report.asymmetry * neg.report.asymmetry < 0.0 ? 1.0 : 0.0);
  p.record("fig4.oscillation_sides", oscillation_sides(tpi.interferogram).sides());
  p.record("fig4.lci_closed_form", lci_closed);
  p.record("fig4.improvement", lci_closed / tpi.report.fwhm);
  return p.take();
}

}  // namespace detail

inline PresetResult run_preset(const std::string& name, Refinement refine = {}) {
  if (name == "fig2") return detail::preset_fig2(refine);
  if (name == "fig3") return detail::preset_fig3(refine);
  if (name == "fig3_2") return detail::preset_fig3_2(refine);
  if (name == "fig4") return detail::preset_fig4(refine);
  throw ValidationError("unknown preset '" + name + "'; expected fig2, fig3, fig3_2 or fig4");
}

inline std::string format_bound(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// Plain-text comparison of computed values with their reference ranges.
inline std::string summary_table(const PresetResult& result) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof line, "%-36s %12s %10s %22s  %-6s %s\n", "quantity", "value", "target", "accepted",
                "result", "reference");
  out += line;
  for (const auto& r : result.rows) {
    const auto& t = *r.target;
    const std::string range = "[" + format_bound(t.lower) + ", " + format_bound(t.upper) + "]";
    std::snprintf(line, sizeof line, "%-36s %12.5g %10.4g %22s  %-6s %s\n", std::string(t.quantity).c_str(), r.value,
                  t.target, range.c_str(), r.pass() ? "PASS" : "FAIL", std::string(t.source).c_str());
    out += line;
  }
  out += std::string("targets table version ") + std::to_string(kTargetsVersion) + "; " + result.name + ": " +
         (result.passed() ? "all rows pass" : "some rows fail") + "\n";
  return out;
}

inline nlohmann::json summary_json(const PresetResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    const auto& t = *r.target;
    rows.push_back({{"id", t.id},
                    {"quantity", t.quantity},
                    {"unit", t.unit},
                    {"value", r.value},
                    {"target", t.target},
                    {"lower", std::isinf(t.lower) ? nlohmann::json() : nlohmann::json(t.lower)},
                    {"upper", std::isinf(t.upper) ? nlohmann::json() : nlohmann::json(t.upper)},
                    {"pass", r.pass()},
                    {"reference", t.source}});
  }
  return {{"preset", result.name}, {"targets_version", kTargetsVersion}, {"passed", result.passed()}, {"rows", rows}};
}

inline void write_preset_outputs(const PresetResult& result, const std::filesystem::path& out_dir) {
  for (const auto& [name, ig] : result.interferograms) {
    write_interferogram(out_dir / (result.name + "_" + name + ".csv"), ig);
  }
  write_text_file(out_dir / (result.name + "_summary.json"), summary_json(result).dump(2) + "\n");
}

}  // namespace homsim
