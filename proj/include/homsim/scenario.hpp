#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "homsim/analysis.hpp"
#include "homsim/dispersion.hpp"
#include "homsim/engine.hpp"
#include "homsim/errors.hpp"
#include "homsim/spectra.hpp"
#include "homsim/units.hpp"

namespace homsim {

inline constexpr int kSchemaVersion = 1;

enum class Mode { lci, tpi };

/// A validated scenario with every physical object already constructed.
struct Scenario {
  std::string label;
  Mode mode = Mode::tpi;
  SpectralAmplitude signal;
  SpectralAmplitude idler;
  MediumStack stack;
  PumpModel pump;
  Carrier carrier = Carrier::envelope_only;
  EngineOptions options;
  std::vector<double> delays_um;
  WidthMethod method = WidthMethod::gaussian_fit;
  std::filesystem::path csv_path;
  std::filesystem::path report_path;
  nlohmann::json config;
};

namespace detail {

/// Strict reader over one JSON object: every key must be consumed, and all
/// messages carry the dotted path of the offending field.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("field '" + display() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ValidationError("missing required field '" + path(key) + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ValidationError("field '" + path(key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError("field '" + path(key) + "' must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key) {
    const double d = number(key);
    if (!(d > 0.0)) throw ValidationError("field '" + path(key) + "' must be positive");
    return d;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  std::size_t count(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ValidationError("field '" + path(key) + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }

  std::string text(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ValidationError("field '" + path(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     const std::string& fallback) {
    const auto v = text(key, fallback);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ValidationError("field '" + path(key) + "' has value '" + v + "'; expected one of " + list);
    }
    return v;
  }

  /// Exactly one of the keys must be present; returns its name.
  std::string one_of(const std::vector<std::string>& keys) {
    std::string found;
    for (const auto& k : keys) {
      if (!has(k)) continue;
      if (!found.empty()) {
        throw ValidationError("fields '" + path(found) + "' and '" + path(k) + "' are mutually exclusive");
      }
      found = k;
    }
    if (found.empty()) {
      std::string list;
      for (const auto& k : keys) list += (list.empty() ? "" : ", ") + path(k);
      throw ValidationError("one of " + list + " is required");
    }
    return found;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown field '" + path(key) + "'");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}


inline GridSpec parse_grid(const nlohmann::json& j, const std::string& path) {
  Fields g(j, path);
  GridSpec grid;
  grid.points = g.count("points", grid.points);
  grid.span_factor = g.positive("span_factor", grid.span_factor);
  g.finish();
  return grid;
}

inline SpectralAmplitude parse_spectrum(const nlohmann::json& j, const std::string& path,
                                        const std::filesystem::path& base_dir) {
  Fields s(j, path);
  const auto family = s.choice("family", {"gaussian", "rectangular", "trapezoidal", "tabulated"}, "");
  const double lambda0 = s.positive("center_wavelength_nm", 808.0);
  const double omega0 = angular_frequency_from_wavelength_nm(lambda0);
  const GridSpec grid = s.has("grid") ? parse_grid(s.raw("grid"), s.path("grid")) : GridSpec{};

  // Width parameter of a family given directly in rad/fs or nm, or through
  // the empty-stack LCI width it should produce.
  auto width = [&](const std::string& stem, const std::function<SpectralAmplitude(double)>& make) {
    const auto key = s.one_of({stem + "_rad_per_fs", stem + "_nm", "lci_fwhm_um"});
    if (key == "lci_fwhm_um") return width_for_lci(make, s.positive(key));
    if (key == stem + "_nm") return angular_bandwidth_from_nm(s.positive(key), lambda0);
    return s.positive(key);
  };

  std::optional<SpectralAmplitude> out;
  if (family == "gaussian") {
    const double fwhm = width("fwhm", [&](double v) { return gaussian_spectrum(omega0, v, grid); });
    out = gaussian_spectrum(omega0, fwhm, grid);
  } else if (family == "rectangular") {
    const double w = width("width", [&](double v) { return rectangular_spectrum(omega0, v, grid); });
    out = rectangular_spectrum(omega0, w, grid);
  } else if (family == "trapezoidal") {
    const auto key = s.one_of({"plateau_ratio", "target_enhancement"});
    double ratio;
    if (key == "plateau_ratio") {
      ratio = s.positive(key);
      if (ratio > 1.0) throw ValidationError("field '" + s.path(key) + "' must not exceed 1");
    } else {
      ratio = find_trapezoid_ratio(s.positive(key), grid);
    }
    const double base =
        width("base", [&](double v) { return trapezoidal_spectrum(omega0, ratio * v, v, grid); });
    out = trapezoidal_spectrum(omega0, ratio * base, base, grid);
  } else {
    const auto file = resolve(base_dir, s.text("csv"));
    const auto points = s.count("points", 4097);
    out = tabulated_spectrum(omega0, read_spectrum_csv(file.string()), points);
  }
  s.finish();
  return *out;
}

inline DispersiveMedium parse_medium(const nlohmann::json& j, const std::string& path,
                                     const MaterialLibrary& library) {
  Fields m(j, path);
  const double thickness = m.number("thickness_mm");
  if (thickness < 0.0) throw ValidationError("field '" + m.path("thickness_mm") + "' must be non-negative");
  if (m.has("taylor")) {
    const auto name = m.text("name", "taylor");
    Fields t(m.raw("taylor"), m.path("taylor"));
    const double ref = angular_frequency_from_wavelength_nm(t.positive("reference_wavelength_nm", 808.0));
    const auto& beta = t.raw("beta");
    if (!beta.is_array() || beta.empty() || beta.size() > kMaxTaylorOrder + 1) {
      throw ValidationError("field '" + t.path("beta") + "' must be an array of 1 to " +
                            std::to_string(kMaxTaylorOrder + 1) + " numbers");
    }
    std::vector<double> coeffs;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (!beta[i].is_number()) {
        throw ValidationError("field '" + t.path("beta") + "." + std::to_string(i) + "' must be a number");
      }
      coeffs.push_back(beta[i].get<double>());
    }
    t.finish();
    m.finish();
    return DispersiveMedium::taylor(name, thickness, TaylorModel{ref, coeffs});
  }
  const auto material = m.text("material");
  if (!library.contains(material)) {
    throw ValidationError("field '" + m.path("material") + "': unknown material '" + material + "'");
  }
  m.finish();
  return library.make(material, thickness);
}

inline PumpModel parse_pump(const nlohmann::json& j, double default_frequency) {
  Fields p(j, "pump");
  const auto model = p.choice("model", {"monochromatic", "gaussian"}, "monochromatic");
  const double frequency = p.has("wavelength_nm")
                               ? angular_frequency_from_wavelength_nm(p.positive("wavelength_nm"))
                               : default_frequency;
  PumpModel out = MonochromaticPump{frequency};
  if (model == "gaussian") {
    const auto key = p.one_of({"fwhm_rad_per_fs", "fwhm_thz"});
    const double fwhm = key == "fwhm_thz" ? kTwoPi * 1e-3 * p.positive(key) : p.positive(key);
    out = GaussianPump{frequency, fwhm, p.count("samples", 65)};
  }
  p.finish();
  return out;
}

inline EngineOptions parse_engine(const nlohmann::json& j, EngineOptions opt) {
  Fields e(j, "engine");
  opt.padding = e.count("padding", opt.padding);
  opt.pump_span_sigmas = e.positive("pump_span_sigmas", opt.pump_span_sigmas);
  opt.pump_convergence_tolerance = e.positive("pump_convergence_tolerance", opt.pump_convergence_tolerance);
  e.finish();
  return opt;
}

inline std::vector<double> default_delays(Mode mode, const SpectralAmplitude& spectrum,
                                          const MediumStack& stack, double pass_factor) {
  if (mode == Mode::tpi) return delay_grid(0.0, 40.0, 1025);
  // LCI: ten widths of the dispersion-broadened envelope, >= 30 samples per empty width
  const double empty = lci_fwhm_um(spectrum);
  double gdd = 0.0;
  if (!stack.empty()) {
    const double lambda0 = wavelength_nm_from_angular_frequency(spectrum.center_frequency());
    gdd = std::abs(0.5 * pass_factor * gvd_budget(stack, lambda0).gdd_fs2);
  }
  const double span = std::max(300.0, 10.0 * lci_degraded_closed_form(empty, gdd));
  const auto needed = static_cast<std::size_t>(std::ceil(30.0 * span / empty));
  return delay_grid(0.0, span, std::max<std::size_t>(2049, needed | 1));
}

inline std::string file_stem(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out.empty() ? "scenario" : out;
}

/// Re-throws the active homsim error with the scenario label prepended,
/// keeping its type.
[[noreturn]] inline void rethrow_with_label(const std::string& label) {
  const std::string prefix = "scenario '" + label + "': ";
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(prefix + e.what());
  } catch (const InputError& e) {
    throw InputError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const FitError& e) {
    throw FitError(prefix + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(prefix + e.what());
  }
}

}  // namespace detail

/// Validates a scenario configuration and builds its spectra, stack, pump
/// and delay grid. Relative input files resolve against base_dir, relative
/// output paths against out_dir.
inline Scenario parse_scenario(const nlohmann::json& config, const std::filesystem::path& base_dir = ".",
                               const std::filesystem::path& out_dir = ".") {
  detail::Fields root(config, "");
  const auto version = root.count("schema_version");
  if (version != static_cast<std::size_t>(kSchemaVersion)) {
    throw ValidationError("field 'schema_version' is " + std::to_string(version) + "; expected " +
                          std::to_string(kSchemaVersion));
  }
  const auto label = root.text("label");
  try {
    const Mode mode = root.choice("mode", {"lci", "tpi"}, "") == "lci" ? Mode::lci : Mode::tpi;

    MaterialLibrary library = MaterialLibrary::builtin();
    if (root.has("materials")) {
      const auto& files = root.raw("materials");
      if (!files.is_array()) throw ValidationError("field 'materials' must be an array of file paths");
      for (std::size_t i = 0; i < files.size(); ++i) {
        if (!files[i].is_string()) {
          throw ValidationError("field 'materials." + std::to_string(i) + "' must be a string");
        }
        library.load_file(detail::resolve(base_dir, files[i].get<std::string>()).string());
      }
    }

    auto signal = detail::parse_spectrum(root.raw("spectrum"), "spectrum", base_dir);
    auto idler = root.has("idler") ? detail::parse_spectrum(root.raw("idler"), "idler", base_dir) : signal;

    MediumStack stack;
    if (root.has("stack")) {
      const auto& items = root.raw("stack");
      if (!items.is_array()) throw ValidationError("field 'stack' must be an array");
      for (std::size_t i = 0; i < items.size(); ++i) {
        stack.media.push_back(detail::parse_medium(items[i], "stack." + std::to_string(i), library));
      }
    }

    const double pump_default = 2.0 * signal.center_frequency();
    const PumpModel pump = root.has("pump") ? detail::parse_pump(root.raw("pump"), pump_default)
                                            : PumpModel{MonochromaticPump{pump_default}};
    if (mode == Mode::lci && std::holds_alternative<GaussianPump>(pump)) {
      throw ValidationError("field 'pump' must be monochromatic or absent in lci mode");
    }

    const Carrier carrier = root.choice("carrier", {"envelope_only", "with_fringes"}, "envelope_only") ==
                                    "with_fringes"
                                ? Carrier::with_fringes
                                : Carrier::envelope_only;
    if (mode == Mode::tpi && carrier == Carrier::with_fringes) {
      throw ValidationError("field 'carrier' applies to lci mode only");
    }

    EngineOptions options;
    options.pass_factor = root.positive("pass_factor", 2.0);
    options.delay_reference = root.choice("delay_reference", {"absolute", "group_delay"}, "group_delay") ==
                                      "absolute"
                                  ? DelayReference::absolute
                                  : DelayReference::group_delay;
    options.interference_scale = root.number("interference_scale", 1.0);
    if (!(options.interference_scale >= 0.0 && options.interference_scale <= 1.0)) {
      throw ValidationError("field 'interference_scale' must lie in [0, 1]");
    }
    if (root.has("engine")) options = detail::parse_engine(root.raw("engine"), options);

    std::vector<double> delays;
    if (root.has("delay_grid")) {
      detail::Fields g(root.raw("delay_grid"), "delay_grid");
      const double center = g.number("center_um", 0.0);
      const double span = g.positive("span_um");
      const auto points = g.count("points");
      if (points < 64) {
        throw ValidationError("field 'delay_grid.points' is " + std::to_string(points) + "; at least 64 are required");
      }
      g.finish();
      delays = delay_grid(center, span, points);
    } else {
      delays = detail::default_delays(mode, signal, stack, options.pass_factor);
    }

    WidthMethod method = WidthMethod::gaussian_fit;
    if (root.has("analysis")) {
      detail::Fields a(root.raw("analysis"), "analysis");
      method = a.choice("method", {"gaussian_fit", "half_max"}, "gaussian_fit") == "half_max"
                   ? WidthMethod::half_max
                   : WidthMethod::gaussian_fit;
      a.finish();
    }

    const auto stem = detail::file_stem(label);
    std::filesystem::path csv = out_dir / (stem + ".csv");
    std::filesystem::path report = out_dir / (stem + ".report.json");
    if (root.has("output")) {
      detail::Fields o(root.raw("output"), "output");
      if (o.has("csv")) csv = detail::resolve(out_dir, o.text("csv"));
      if (o.has("report")) report = detail::resolve(out_dir, o.text("report"));
      o.finish();
    }
    root.finish();

    return Scenario{.label = label,
                    .mode = mode,
                    .signal = std::move(signal),
                    .idler = std::move(idler),
                    .stack = std::move(stack),
                    .pump = pump,
                    .carrier = carrier,
                    .options = options,
                    .delays_um = std::move(delays),
                    .method = method,
                    .csv_path = csv,
                    .report_path = report,
                    .config = config};
  } catch (const Error&) {
    detail::rethrow_with_label(label);
  } catch (const nlohmann::json::exception&) {
    detail::rethrow_with_label(label);
  }
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  Interferogram interferogram;
  ResolutionReport report;
};

inline Interferogram evaluate(const Scenario& sc, Carrier carrier) {
  if (sc.mode == Mode::lci) return lci(sc.signal, sc.stack, sc.delays_um, carrier, sc.options);
  return tpi(sc.signal, sc.idler, sc.pump, sc.stack, sc.delays_um, sc.options);
}

/// Evaluates the interferogram and measures its width. Fringed LCI runs are
/// measured on the envelope of the same scenario.
inline RunResult run_scenario(const Scenario& sc) {
  try {
    RunResult out;
    out.interferogram = evaluate(sc, sc.carrier);
    const auto warnings = out.interferogram.metadata.contains("warnings")
                              ? out.interferogram.metadata["warnings"]
                              : nlohmann::json::array();
    out.interferogram.metadata["label"] = sc.label;
    out.interferogram.metadata["warnings"] = warnings;
    out.interferogram.metadata["scenario"] = sc.config;
    if (sc.carrier == Carrier::with_fringes) {
      out.report = measure(evaluate(sc, Carrier::envelope_only), sc.method);
      out.report.visibility = visibility(out.interferogram);
    } else {
      out.report = measure(out.interferogram, sc.method);
    }
    return out;
  } catch (const Error&) {
    detail::rethrow_with_label(sc.label);
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_interferogram(const std::filesystem::path& path, const Interferogram& ig) {
  std::ostringstream csv;
  write_csv(csv, ig);
  write_text_file(path, csv.str());
}

inline void write_outputs(const Scenario& sc, const RunResult& result) {
  write_interferogram(sc.csv_path, result.interferogram);
  write_text_file(sc.report_path, to_json(result.report).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double param_value = 0.0;
  double fwhm_um = 0.0;
  double visibility = 0.0;
  double asymmetry = 0.0;
};

namespace detail {

inline nlohmann::json::json_pointer sweep_pointer(const nlohmann::json& config, const std::string& param) {
  if (param.empty()) throw ValidationError("sweep parameter name is empty");
  std::string pointer;
  std::stringstream parts(param);
  for (std::string part; std::getline(parts, part, '.');) {
    if (part.empty()) throw ValidationError("sweep parameter '" + param + "' has an empty path segment");
    pointer += "/" + part;
  }
  const nlohmann::json::json_pointer ptr(pointer);
  if (config.contains(ptr)) {
    if (!config.at(ptr).is_number()) {
      throw ValidationError("sweep parameter '" + param + "' does not name a numeric field");
    }
  } else if (!config.contains(ptr.parent_pointer()) || !config.at(ptr.parent_pointer()).is_object()) {
    throw ValidationError("sweep parameter '" + param + "' does not name a field of the scenario");
  }
  return ptr;
}

}  // namespace detail

inline std::vector<double> sweep_values(double min, double max, std::size_t steps) {
  if (steps < 1) throw ValidationError("sweep needs at least one step");
  if (!std::isfinite(min) || !std::isfinite(max) || max < min) {
    throw ValidationError("sweep range must be finite with min <= max");
  }
  if (steps == 1) return {min};
  std::vector<double> v(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    v[i] = min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return v;
}

/// Runs the scenario once per axis value. Runs execute concurrently; rows
/// come back in axis order.
inline std::vector<SweepRow> sweep(const nlohmann::json& config, const std::string& param, double min, double max,
                                   std::size_t steps, const std::filesystem::path& base_dir = ".",
                                   unsigned threads = std::thread::hardware_concurrency()) {
  const auto ptr = detail::sweep_pointer(config, param);
  const auto values = sweep_values(min, max, steps);
  std::vector<SweepRow> rows(values.size());
  auto one = [&](std::size_t i) {
    auto cfg = config;
    cfg[ptr] = values[i];
    const auto sc = parse_scenario(cfg, base_dir);
    const auto res = run_scenario(sc);
    rows[i] = {values[i], res.report.fwhm, res.report.visibility, res.report.asymmetry};
  };
  const std::size_t batch = std::max(1u, threads);
  for (std::size_t start = 0; start < values.size(); start += batch) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = start; i < std::min(values.size(), start + batch); ++i) {
      jobs.push_back(std::async(std::launch::async, one, i));
    }
    for (auto& j : jobs) j.get();
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "param_value,fwhm_um,visibility,asymmetry\n";
  for (const auto& r : rows) {
    out += format_double(r.param_value) + "," + format_double(r.fwhm_um) + "," + format_double(r.visibility) +
           "," + format_double(r.asymmetry) + "\n";
  }
  return out;
}

}  // namespace homsim
