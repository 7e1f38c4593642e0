#include <catch_amalgamated.hpp>

#include <sstream>

#include "homsim/analysis.hpp"
#include "homsim/engine.hpp"
#include "oracles.hpp"

using namespace homsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kOmega0 = angular_frequency_from_wavelength_nm(808.0);
constexpr double kDw = 0.2164;

DispersiveMedium taylor(std::vector<double> beta, double d = 1.0) {
  return DispersiveMedium::taylor("t", d, TaylorModel{kOmega0, std::move(beta)});
}

EngineOptions absolute(double pass = 2.0) {
  EngineOptions o;
  o.pass_factor = pass;
  o.delay_reference = DelayReference::absolute;
  return o;
}

EngineOptions centered(double pass = 2.0) {
  EngineOptions o = absolute(pass);
  o.delay_reference = DelayReference::group_delay;
  return o;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

Interferogram mono(const SpectralAmplitude& s, const MediumStack& stack, const std::vector<double>& x,
                   const EngineOptions& o) {
  return tpi_mono(biphoton_degenerate(s, s), stack, 2.0 * s.center_frequency(), x, o);
}

}  // namespace

TEST_CASE("Delay grid helper") {
  const auto x = delay_grid(1.0, 10.0, 11);
  REQUIRE(x.size() == 11);
  CHECK(x.front() == -4.0);
  CHECK(x.back() == 6.0);
  CHECK_THROWS_AS(delay_grid(0.0, 0.0, 11), ParameterError);
  CHECK_THROWS_AS(delay_grid(0.0, 1.0, 1), ParameterError);
}

TEST_CASE("LCI envelope of a Gaussian matches the analytic width") {
  const auto s = gaussian_spectrum(kOmega0, kDw);
  const auto ig = lci(s, {}, delay_grid(0.0, 40.0, 2001));
  CHECK_THAT(fwhm_halfmax(ig).fwhm, WithinRel(oracle::gaussian_lci_fwhm_um(kDw), 1e-4));
  CHECK_THAT(oracle::gaussian_lci_fwhm_um(kDw), WithinAbs(3.84, 0.01));
  CHECK_THAT(ig.values[1000], WithinAbs(2.0, 1e-12));
  for (double v : ig.values) REQUIRE(v <= 2.0 + 1e-9);
}

TEST_CASE("LCI through a Taylor medium matches direct quadrature") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const auto m = taylor({3.7, 50.0, 300.0, 100.0}, 1.0);
  const MediumStack stack{{m}};
  const auto rho = oracle::gaussian_density(0.2);
  auto phase2 = [&](double w) { return 2.0 * m.phase(kOmega0, w); };
  const double center = delay_um_from_tau(2.0 * 50.0);
  const auto x = delay_grid(center, 60.0, 601);

  const auto env = lci(s, stack, x, Carrier::envelope_only, absolute());
  const auto fr = lci(s, stack, x, Carrier::with_fringes, absolute());
  for (std::size_t i = 0; i < x.size(); i += 25) {
    const double tau = tau_from_delay_um(x[i]);
    const auto g = oracle::coherence(rho, phase2, tau, 0.8);
    REQUIRE_THAT(env.values[i], WithinAbs(1.0 + std::abs(g), 1e-7));
    REQUIRE_THAT(fr.values[i], WithinAbs(1.0 + (std::polar(1.0, -kOmega0 * tau) * g).real(), 1e-7));
  }
}

TEST_CASE("Centered LCI is the absolute LCI shifted by the group delay") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const MediumStack stack{{taylor({3.7, 50.0, 300.0, 100.0})}};
  const double shift = delay_um_from_tau(2.0 * 50.0);
  const auto x = delay_grid(0.0, 40.0, 801);
  std::vector<double> shifted(x);
  for (double& v : shifted) v += shift;
  for (auto carrier : {Carrier::envelope_only, Carrier::with_fringes}) {
    const auto a = lci(s, stack, shifted, carrier, absolute());
    const auto c = lci(s, stack, x, carrier, centered());
    CHECK(max_abs_diff(a.values, c.values) < 1e-8);
  }
}

TEST_CASE("Fringed LCI needs a fine delay grid") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const double limit = std::numbers::pi * kSpeedOfLightUmPerFs / (2.0 * kOmega0);
  CHECK_THROWS_AS(lci(s, {}, delay_grid(0.0, 200.0 * limit, 201), Carrier::with_fringes), ParameterError);
  CHECK_NOTHROW(lci(s, {}, delay_grid(0.0, 100.0 * limit, 201), Carrier::with_fringes));
  CHECK_NOTHROW(lci(s, {}, delay_grid(0.0, 200.0 * limit, 201), Carrier::envelope_only));
}

TEST_CASE("LCI broadening by pure GVD at the tuned operating point") {
  const auto s = gaussian_spectrum(kOmega0, gaussian_fwhm_for_lci(4.2));
  const MediumStack stack{{taylor({0.0, 0.0, 620.0})}};
  const auto ig = lci(s, stack, delay_grid(0.0, 400.0, 4001), Carrier::envelope_only, centered());
  CHECK_THAT(fwhm_gaussian_fit(ig).fwhm, WithinAbs(37.0, 0.5));
}

TEST_CASE("TPI dip of a Gaussian biphoton") {
  const auto s = gaussian_spectrum(kOmega0, kDw);
  const auto ig = mono(s, {}, delay_grid(0.0, 40.0, 2001), absolute());
  CHECK_THAT(fwhm_halfmax(ig).fwhm, WithinRel(oracle::gaussian_tpi_fwhm_um(kDw), 1e-4));
  CHECK_THAT(oracle::gaussian_tpi_fwhm_um(kDw), WithinAbs(2.72, 0.01));
  CHECK_THAT(ig.values[1000], WithinAbs(0.0, 1e-12));
}

TEST_CASE("Even-order media leave the TPI unchanged sample by sample") {
  const auto s = gaussian_spectrum(kOmega0, kDw);
  const auto x = delay_grid(0.0, 40.0, 1025);
  const auto ref = mono(s, {}, x, absolute());
  const std::vector<double> beta = GENERATE(std::vector<double>{0.0, 0.0, 5000.0},
                                            std::vector<double>{1234.5, 0.0, 5000.0, 0.0, 40000.0},
                                            std::vector<double>{-7.0, 0.0, -800.0});
  const auto out = mono(s, MediumStack{{taylor(beta)}}, x, absolute());
  CHECK(max_abs_diff(ref.values, out.values) <= 1e-10);
}

TEST_CASE("A pure group delay translates the dip") {
  const auto s = gaussian_spectrum(kOmega0, kDw);
  const double beta1 = 3.0 / kSpeedOfLightUmPerFs;  // c d beta1 = 3 um for d = 1 mm
  const auto x = delay_grid(0.0, 40.0, 801);
  std::vector<double> shifted(x);
  for (double& v : shifted) v += 3.0;
  const auto ref = mono(s, {}, x, absolute());
  const auto moved = mono(s, MediumStack{{taylor({0.0, beta1})}}, shifted, absolute());
  CHECK(max_abs_diff(ref.values, moved.values) <= 1e-6);

  const auto dip = mono(s, MediumStack{{taylor({0.0, beta1})}}, delay_grid(0.0, 40.0, 2001), absolute());
  CHECK_THAT(fwhm_halfmax(dip).dip_or_peak_center, WithinAbs(3.0, 1e-4));
}

TEST_CASE("TPI symmetry under even and odd media") {
  const auto s = gaussian_spectrum(kOmega0, gaussian_fwhm_for_lci(4.2));
  const auto x = delay_grid(0.0, 40.0, 1025);
  const auto even = mono(s, MediumStack{{taylor({0.0, 0.0, 3000.0, 0.0, 500.0})}}, x, absolute());
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE_THAT(even.values[i], WithinAbs(even.values[x.size() - 1 - i], 1e-12));

  const auto plus = mono(s, MediumStack{{taylor({0.0, 0.0, 0.0, 4300.0})}}, x, centered(1.0));
  const auto minus = mono(s, MediumStack{{taylor({0.0, 0.0, 0.0, -4300.0})}}, x, centered(1.0));
  CHECK(max_abs_diff(plus.values, std::vector<double>(plus.values.rbegin(), plus.values.rend())) > 1e-3);
  const auto sp = oscillation_sides(plus);
  const auto sm = oscillation_sides(minus);
  CHECK(sp.sides() == 1);
  CHECK(sm.sides() == 1);
  CHECK((sp.left > 0) == (sm.right > 0));
  CHECK(fwhm_halfmax(plus).asymmetry * fwhm_halfmax(minus).asymmetry < 0.0);
}

TEST_CASE("TPI stays within physical bounds") {
  const auto s = gaussian_spectrum(kOmega0, gaussian_fwhm_for_lci(4.2));
  const auto lib = MaterialLibrary::builtin();
  const MediumStack stack{{lib.make("znse", 5.0)}};
  const auto ig = mono(s, stack, delay_grid(0.0, 40.0, 1025), centered(1.0));
  for (double v : ig.values) {
    REQUIRE(v >= -1e-9);
    REQUIRE(v <= 2.0 + 1e-9);
  }
  CHECK_THAT(ig.values.front(), WithinAbs(1.0, 1e-2));
  CHECK_THAT(ig.values.back(), WithinAbs(1.0, 1e-2));
}

TEST_CASE("TPI through full Sellmeier ZnSe matches direct quadrature") {
  const double dw = gaussian_fwhm_for_lci(4.2);
  const auto s = gaussian_spectrum(kOmega0, dw);
  const auto m = MaterialLibrary::builtin().make("znse", 5.0);
  const MediumStack stack{{m}};
  const auto rho_q = oracle::gaussian_density(dw / std::sqrt(2.0));
  auto eta = [&](double w) { return m.phase(kOmega0, w) - m.phase(kOmega0, -w); };
  const double center = delay_um_from_tau(m.group_delay(kOmega0));
  const auto x = delay_grid(center, 30.0, 301);
  const auto ig = mono(s, stack, x, absolute(1.0));
  for (std::size_t i = 0; i < x.size(); i += 10) {
    REQUIRE_THAT(ig.values[i], WithinAbs(oracle::coincidence(rho_q, eta, tau_from_delay_um(x[i]), 0.6), 1e-7));
  }
}

TEST_CASE("Pass factor scales the media phase") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const auto x = delay_grid(0.0, 30.0, 301);
  const auto one = mono(s, MediumStack{{taylor({0.0, 20.0, 100.0, 2000.0}, 2.0)}}, x, absolute(1.0));
  const auto two = mono(s, MediumStack{{taylor({0.0, 20.0, 100.0, 2000.0}, 1.0)}}, x, absolute(2.0));
  CHECK(max_abs_diff(one.values, two.values) < 1e-9);
}

TEST_CASE("Interference scale multiplies the dip depth") {
  const auto s = gaussian_spectrum(kOmega0, kDw);
  EngineOptions o = absolute();
  o.interference_scale = 0.5;
  const auto ig = mono(s, {}, delay_grid(0.0, 40.0, 1025), o);
  CHECK_THAT(visibility(ig), WithinAbs(0.5, 1e-2));
}

TEST_CASE("Finite pump reduces to the monochromatic engine for a narrow pump") {
  const double dw = gaussian_fwhm_for_lci(4.2);
  const auto s = gaussian_spectrum(kOmega0, dw);
  const MediumStack stack{{taylor({0.0, 0.0, 1700.0, 300.0})}};
  const auto x = delay_grid(0.0, 40.0, 1025);
  const auto ref = mono(s, stack, x, centered(1.0));
  const auto fin = tpi_finite_pump(s, s, GaussianPump{2.0 * kOmega0, 1e-6, 65}, stack, x, centered(1.0));
  CHECK(max_abs_diff(ref.values, fin.values) <= 1e-4);
}

TEST_CASE("Without media the pump width does not matter") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const auto x = delay_grid(0.0, 40.0, 1025);
  const auto ref = mono(s, {}, x, centered());
  const double width = GENERATE(0.005, 0.02, 0.05);
  const auto fin = tpi_finite_pump(s, s, GaussianPump{2.0 * kOmega0, width, 65}, {}, x, centered());
  CHECK(max_abs_diff(ref.values, fin.values) <= 1e-4);
}

TEST_CASE("Finite pump matches a brute-force double integral") {
  const double dw = gaussian_fwhm_for_lci(4.2);
  const double dp = 0.0142;
  const auto s = gaussian_spectrum(kOmega0, dw);
  const auto m = taylor({0.0, 0.0, 1700.0});
  const MediumStack stack{{m}};
  const auto rho = oracle::gaussian_density(dw);
  const auto pump = oracle::gaussian_density(dp);
  auto phase = [&](double w) { return m.phase(kOmega0, w); };
  const auto x = delay_grid(-0.5, 5.0, 6);
  const auto ig = tpi_finite_pump(s, s, GaussianPump{2.0 * kOmega0, dp, 65}, stack, x, absolute(1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double expected = oracle::coincidence_joint(rho, rho, pump, phase, tau_from_delay_um(x[i]), 0.5, 2000);
    REQUIRE_THAT(ig.values[i], WithinAbs(expected, 1e-4));
  }
}

TEST_CASE("Finite pump convergence failure is reported") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  EngineOptions o = centered(1.0);
  o.pump_convergence_tolerance = 1e-15;
  const MediumStack stack{{taylor({0.0, 0.0, 20000.0})}};
  CHECK_THROWS_AS(
      tpi_finite_pump(s, s, GaussianPump{2.0 * kOmega0, 0.1, 33}, stack, delay_grid(0.0, 40.0, 101), o),
      NumericalError);
  CHECK_THROWS_AS(tpi_finite_pump(s, s, GaussianPump{2.0 * kOmega0, 0.01, 32}, {}, delay_grid(0.0, 40.0, 101)),
                  ParameterError);
}

TEST_CASE("Under-resolved media phase and aliased delays are rejected") {
  const auto s = gaussian_spectrum(kOmega0, 0.2, {4.0, 257});
  CHECK_THROWS_AS(lci(s, MediumStack{{taylor({0.0, 0.0, 20000.0})}}, delay_grid(0.0, 100.0, 101)), ParameterError);
  const double period_um = delay_um_from_tau(kTwoPi / s.grid().step());
  CHECK_THROWS_AS(lci(s, {}, delay_grid(period_um, 10.0, 101)), ParameterError);
}

TEST_CASE("Non-uniform delay grids are rejected") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  std::vector<double> x = delay_grid(0.0, 10.0, 101);
  x[50] += 0.03;
  CHECK_THROWS_AS(lci(s, {}, x), InputError);
  CHECK_THROWS_AS(mono(s, {}, x, {}), InputError);
}

TEST_CASE("Off-degenerate pump raises a warning") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const auto bp = biphoton_degenerate(s, s);
  const auto x = delay_grid(0.0, 20.0, 101);
  CHECK(tpi_mono(bp, {}, 2.0 * kOmega0, x).metadata["warnings"].empty());
  CHECK(tpi_mono(bp, {}, 2.05 * kOmega0, x).metadata["warnings"].size() == 1);
}

TEST_CASE("Interferogram CSV round trip is exact") {
  const auto s = gaussian_spectrum(kOmega0, 0.2);
  const auto ig = mono(s, MediumStack{{taylor({0.0, 0.0, 0.0, 900.0})}}, delay_grid(0.0, 20.0, 257), centered());
  std::ostringstream a, b;
  write_csv(a, ig);
  write_csv(b, mono(s, MediumStack{{taylor({0.0, 0.0, 0.0, 900.0})}}, delay_grid(0.0, 20.0, 257), centered()));
  CHECK(a.str() == b.str());
  CHECK(a.str().find('\r') == std::string::npos);
  std::istringstream in(a.str());
  const auto back = read_csv(in);
  CHECK(back.values == ig.values);
  CHECK(back.delay_um == ig.delay_um);
  CHECK(back.kind == InterferogramKind::tpi);
}

TEST_CASE("Doubling the spectral grid or padding leaves widths unchanged") {
  const double dw = gaussian_fwhm_for_lci(4.2);
  const MediumStack stack{{MaterialLibrary::builtin().make("znse", 5.0)}};
  const auto x = delay_grid(0.0, 40.0, 1025);
  const auto base = fwhm_halfmax(mono(gaussian_spectrum(kOmega0, dw), stack, x, centered(1.0))).fwhm;
  const auto fine = fwhm_halfmax(mono(gaussian_spectrum(kOmega0, dw, {4.0, 8193}), stack, x, centered(1.0))).fwhm;
  EngineOptions padded = centered(1.0);
  padded.padding = 64;
  const auto pad = fwhm_halfmax(mono(gaussian_spectrum(kOmega0, dw), stack, x, padded)).fwhm;
  CHECK_THAT(fine, WithinRel(base, 2e-3));
  CHECK_THAT(pad, WithinRel(base, 2e-3));
}
