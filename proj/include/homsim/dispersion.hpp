#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "homsim/errors.hpp"
#include "homsim/numerics.hpp"
#include "homsim/units.hpp"

namespace homsim {

/// n^2(lambda) = 1 + sum_k B_k lambda^2 / (lambda^2 - C_k), lambda in um.
struct SellmeierModel {
  std::vector<double> b;
  std::vector<double> c_um2;
  double min_wavelength_nm = 0.0;
  double max_wavelength_nm = 0.0;
  std::string source;

  long double index_squared(long double wavelength_um) const {
    const long double l2 = wavelength_um * wavelength_um;
    long double n2 = 1.0L;
    for (std::size_t k = 0; k < b.size(); ++k) {
      n2 += static_cast<long double>(b[k]) * l2 / (l2 - static_cast<long double>(c_um2[k]));
    }
    return n2;
  }

  double refractive_index(double wavelength_nm) const {
    return static_cast<double>(std::sqrt(index_squared(wavelength_nm * 1e-3L)));
  }

  bool covers(double wavelength_nm) const {
    return wavelength_nm >= min_wavelength_nm && wavelength_nm <= max_wavelength_nm;
  }

  void validate(const std::string& name) const {
    if (b.empty() || b.size() != c_um2.size()) {
      throw InputError("material '" + name + "': Sellmeier B and C lists must be non-empty and equal length");
    }
    if (!(min_wavelength_nm > 0.0) || !(max_wavelength_nm > min_wavelength_nm)) {
      throw InputError("material '" + name + "': invalid Sellmeier wavelength range");
    }
    constexpr int kProbes = 512;
    for (int i = 0; i <= kProbes; ++i) {
      const double nm = min_wavelength_nm + (max_wavelength_nm - min_wavelength_nm) * i / kProbes;
      const long double n2 = index_squared(nm * 1e-3L);
      if (!(n2 > 1.0L) || !std::isfinite(static_cast<double>(n2))) {
        throw InputError("material '" + name + "': refractive index is not real and > 1 at " +
                         std::to_string(nm) + " nm");
      }
    }
  }
};

/// beta(omega) = sum_n beta[n] (omega - reference_frequency)^n / n!,
/// coefficients in fs^n/mm.
struct TaylorModel {
  double reference_frequency = 0.0;
  std::vector<double> beta;
};

inline constexpr std::size_t kMaxTaylorOrder = 5;

class DispersiveMedium {
 public:
  using Model = std::variant<TaylorModel, SellmeierModel>;

  static DispersiveMedium taylor(std::string name, double thickness_mm, TaylorModel model) {
    if (model.beta.empty() || model.beta.size() > kMaxTaylorOrder + 1) {
      throw ParameterError("medium '" + name + "': Taylor expansion needs 1 to " +
                           std::to_string(kMaxTaylorOrder + 1) + " coefficients");
    }
    if (!(model.reference_frequency > 0.0)) {
      throw ParameterError("medium '" + name + "': Taylor reference frequency must be positive");
    }
    return DispersiveMedium(std::move(name), thickness_mm, std::move(model));
  }

  static DispersiveMedium sellmeier(std::string name, double thickness_mm, SellmeierModel model) {
    model.validate(name);
    return DispersiveMedium(std::move(name), thickness_mm, std::move(model));
  }

  const std::string& name() const { return name_; }
  double thickness() const { return thickness_; }
  const Model& model() const { return model_; }
  bool is_taylor() const { return std::holds_alternative<TaylorModel>(model_); }

  DispersiveMedium with_thickness(double thickness_mm) const {
    return DispersiveMedium(name_, thickness_mm, model_);
  }

  /// beta(omega) in rad/mm.
  long double wavevector(long double omega) const {
    if (const auto* t = std::get_if<TaylorModel>(&model_)) {
      return taylor_value(*t, omega - static_cast<long double>(t->reference_frequency));
    }
    const auto& s = std::get<SellmeierModel>(model_);
    check_domain(s, static_cast<double>(omega));
    const long double lambda_um = static_cast<long double>(kTwoPi) *
                                  static_cast<long double>(kSpeedOfLightUmPerFs) / omega;
    return std::sqrt(s.index_squared(lambda_um)) * omega /
           static_cast<long double>(kSpeedOfLightMmPerFs);
  }

  /// d * beta(reference + detuning). For a Taylor medium whose expansion
  /// point equals the reference the polynomial is evaluated in the detuning
  /// directly, so parity of the coefficients is preserved exactly.
  double phase(double reference_frequency, double detuning) const {
    if (const auto* t = std::get_if<TaylorModel>(&model_)) {
      const double x = (reference_frequency - t->reference_frequency) + detuning;
      return thickness_ * static_cast<double>(taylor_value(*t, x));
    }
    return static_cast<double>(static_cast<long double>(thickness_) *
                               wavevector(static_cast<long double>(reference_frequency) + detuning));
  }

  /// d * dbeta/domega at the given frequency, fs.
  double group_delay(double frequency) const {
    if (const auto* t = std::get_if<TaylorModel>(&model_)) {
      return thickness_ * static_cast<double>(
                              taylor_derivative(*t, 1, frequency - t->reference_frequency));
    }
    auto f = [this](long double w) { return wavevector(w); };
    const auto est = richardson_derivative(f, frequency, 1, 0.02, 1e-12, 8);
    return thickness_ * est.value;
  }

  /// n-th derivative of beta about (reference + offset) for a Taylor model.
  static long double taylor_derivative(const TaylorModel& t, std::size_t order, long double offset) {
    long double sum = 0.0L;
    long double factor = 1.0L;  // offset^(k-order)/(k-order)!
    for (std::size_t k = order; k < t.beta.size(); ++k) {
      sum += static_cast<long double>(t.beta[k]) * factor;
      factor *= offset / static_cast<long double>(k - order + 1);
    }
    return sum;
  }

 private:
  DispersiveMedium(std::string name, double thickness_mm, Model model)
      : name_(std::move(name)), thickness_(thickness_mm), model_(std::move(model)) {
    if (!(thickness_ >= 0.0) || !std::isfinite(thickness_)) {
      throw ParameterError("medium '" + name_ + "': thickness must be finite and non-negative");
    }
  }

  // Horner on beta[n]/n!.
  static long double taylor_value(const TaylorModel& t, long double x) {
    const std::size_t n = t.beta.size();
    long double inv_factorial = 1.0L;
    for (std::size_t k = 2; k < n; ++k) inv_factorial /= static_cast<long double>(k);
    long double acc = 0.0L;
    for (std::size_t k = n; k-- > 0;) {
      acc = acc * x + static_cast<long double>(t.beta[k]) * inv_factorial;
      if (k > 1) inv_factorial *= static_cast<long double>(k);
    }
    return acc;
  }

  void check_domain(const SellmeierModel& s, double omega) const {
    const double nm = wavelength_nm_from_angular_frequency(omega);
    if (!s.covers(nm)) {
      std::ostringstream msg;
      msg << "medium '" << name_ << "': wavelength " << nm << " nm outside the Sellmeier range ["
          << s.min_wavelength_nm << ", " << s.max_wavelength_nm << "] nm";
      throw DomainError(msg.str());
    }
  }

  std::string name_;
  double thickness_;
  Model model_;
};

/// Ordered media traversed in one pass; phases add.
struct MediumStack {
  std::vector<DispersiveMedium> media;

  bool empty() const { return media.empty(); }

  double phase(double detuning, double reference_frequency) const {
    double sum = 0.0;
    for (const auto& m : media) sum += m.phase(reference_frequency, detuning);
    return sum;
  }

  double group_delay(double frequency) const {
    double sum = 0.0;
    for (const auto& m : media) sum += m.group_delay(frequency);
    return sum;
  }
};

inline double phase(const MediumStack& stack, double detuning, double reference_frequency) {
  return stack.phase(detuning, reference_frequency);
}

// ---------------------------------------------------------------------------

/// Taylor coefficients beta^(0..max_order) of a Sellmeier medium at
/// lambda0, from Richardson-extrapolated central differences.
inline DispersiveMedium taylor_from_sellmeier(const DispersiveMedium& medium, double wavelength_nm,
                                              std::size_t max_order = kMaxTaylorOrder) {
  const auto* s = std::get_if<SellmeierModel>(&medium.model());
  if (s == nullptr) throw InputError("medium '" + medium.name() + "' is not a Sellmeier model");
  if (max_order > kMaxTaylorOrder) {
    throw ParameterError("Taylor order is limited to " + std::to_string(kMaxTaylorOrder));
  }
  if (!s->covers(wavelength_nm)) {
    std::ostringstream msg;
    msg << "medium '" << medium.name() << "': expansion wavelength " << wavelength_nm
        << " nm outside the Sellmeier range";
    throw DomainError(msg.str());
  }
  const double omega0 = angular_frequency_from_wavelength_nm(wavelength_nm);
  const double omega_lo = angular_frequency_from_wavelength_nm(s->max_wavelength_nm);
  const double omega_hi = angular_frequency_from_wavelength_nm(s->min_wavelength_nm);
  const double margin = std::min(omega0 - omega_lo, omega_hi - omega0);

  auto beta = [&medium](long double w) { return medium.wavevector(w); };
  TaylorModel out{omega0, {static_cast<double>(medium.wavevector(omega0))}};
  for (std::size_t order = 1; order <= max_order; ++order) {
    const double reach = 0.5 * static_cast<double>(order);
    const double step = std::min(0.2, 0.9 * margin / reach);
    const double scale = std::abs(out.beta[0]) * std::pow(omega0, -static_cast<double>(order));
    const auto est = richardson_derivative(beta, omega0, static_cast<int>(order), step, 1e-4, 12,
                                           1e-12 * scale);
    if (!est.converged) {
      std::ostringstream msg;
      msg << "medium '" << medium.name() << "': derivative of order " << order
          << " did not converge at " << wavelength_nm << " nm (last estimate " << est.value
          << ", last change " << est.last_change << ", finest step " << est.step << " rad/fs)";
      throw NumericalError(msg.str());
    }
    out.beta.push_back(est.value);
  }
  return DispersiveMedium::taylor(medium.name(), medium.thickness(), std::move(out));
}

struct GvdBudget {
  double gdd_fs2 = 0.0;  // sum d * beta2
  double tod_fs3 = 0.0;  // sum d * beta3
};

inline GvdBudget gvd_budget(const MediumStack& stack, double wavelength_nm) {
  const double omega0 = angular_frequency_from_wavelength_nm(wavelength_nm);
  GvdBudget budget;
  for (const auto& m : stack.media) {
    TaylorModel t;
    if (const auto* tm = std::get_if<TaylorModel>(&m.model())) {
      t = *tm;
    } else {
      t = std::get<TaylorModel>(taylor_from_sellmeier(m, wavelength_nm, 3).model());
    }
    const long double offset = static_cast<long double>(omega0) - t.reference_frequency;
    budget.gdd_fs2 += m.thickness() * static_cast<double>(DispersiveMedium::taylor_derivative(t, 2, offset));
    budget.tod_fs3 += m.thickness() * static_cast<double>(DispersiveMedium::taylor_derivative(t, 3, offset));
  }
  return budget;
}

// ---------------------------------------------------------------------------
// Material data

/// Water at 20 C (Daimon & Masumura 2007 four-term fit).
inline SellmeierModel water_sellmeier() {
  return {{5.684027565e-1, 1.726177391e-1, 2.086189578e-2, 1.130748688e-1},
          {5.101829712e-3, 1.821153936e-2, 2.620722293e-2, 1.069792721e1},
          182.0,
          1129.0,
          "Daimon & Masumura 2007, water 20 C"};
}

inline SellmeierModel bk7_sellmeier() {
  return {{1.03961212, 0.231792344, 1.01046945},
          {0.00600069867, 0.0200179144, 103.560653},
          300.0,
          2500.0,
          "SCHOTT N-BK7 catalog"};
}

/// ZnSe (Tatian 1984 three-term fit).
inline SellmeierModel znse_sellmeier() {
  const double c1 = 0.200859853, c2 = 0.391371166, c3 = 47.1362108;
  return {{4.45813734, 0.467216334, 2.89566290},
          {c1 * c1, c2 * c2, c3 * c3},
          540.0,
          18200.0,
          "Tatian 1984, ZnSe"};
}

/// Parses `{ "name": ..., "sellmeier": { "B": [...], "C_um2": [...],
/// "range_nm": [a, b] } }` with an optional top-level "source" label.
inline std::pair<std::string, SellmeierModel> parse_material_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("material definition must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "name" && key != "sellmeier" && key != "source") {
      throw InputError("material definition has unknown field '" + key + "'");
    }
  }
  if (!j.contains("name") || !j["name"].is_string()) {
    throw InputError("material definition needs a string 'name'");
  }
  const std::string name = j["name"].get<std::string>();
  if (!j.contains("sellmeier") || !j["sellmeier"].is_object()) {
    throw InputError("material '" + name + "' needs a 'sellmeier' object");
  }
  const auto& s = j["sellmeier"];
  for (const auto& [key, _] : s.items()) {
    if (key != "B" && key != "C_um2" && key != "range_nm") {
      throw InputError("material '" + name + "': unknown sellmeier field '" + key + "'");
    }
  }
  auto numbers = [&](const char* key) {
    if (!s.contains(key) || !s[key].is_array()) {
      throw InputError("material '" + name + "': sellmeier." + key + " must be an array");
    }
    std::vector<double> out;
    for (const auto& v : s[key]) {
      if (!v.is_number()) throw InputError("material '" + name + "': sellmeier." + key + " must be numeric");
      out.push_back(v.get<double>());
    }
    return out;
  };
  SellmeierModel model;
  model.b = numbers("B");
  model.c_um2 = numbers("C_um2");
  const auto range = numbers("range_nm");
  if (range.size() != 2) throw InputError("material '" + name + "': range_nm must have two entries");
  model.min_wavelength_nm = range[0];
  model.max_wavelength_nm = range[1];
  model.source = j.value("source", "custom material file");
  model.validate(name);
  return {name, std::move(model)};
}

/// Name -> Sellmeier model registry, case-insensitive, seeded with water,
/// bk7 and znse.
class MaterialLibrary {
 public:
  static MaterialLibrary builtin() {
    MaterialLibrary lib;
    lib.add("water", water_sellmeier());
    lib.add("bk7", bk7_sellmeier());
    lib.add("znse", znse_sellmeier());
    return lib;
  }

  void add(const std::string& name, SellmeierModel model) {
    model.validate(name);
    models_[lower(name)] = std::move(model);
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open material file '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("material file '" + path + "' is not valid JSON: " + e.what());
    }
    auto [name, model] = parse_material_json(j);
    add(name, std::move(model));
  }

  bool contains(const std::string& name) const { return models_.count(lower(name)) > 0; }

  const SellmeierModel& get(const std::string& name) const {
    auto it = models_.find(lower(name));
    if (it == models_.end()) throw InputError("unknown material '" + name + "'");
    return it->second;
  }

  DispersiveMedium make(const std::string& name, double thickness_mm) const {
    return DispersiveMedium::sellmeier(name, thickness_mm, get(name));
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : models_) out.push_back(k);
    return out;
  }

 private:
  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }

  std::map<std::string, SellmeierModel> models_;
};

}  // namespace homsim
