#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "wallcross/sections.hpp"

using namespace wallcross;

namespace {

Lattice a2() { return Lattice::with_pairing(2, {{0, 1}, {-1, 0}}); }

CentralCharge side_a() {
  return CentralCharge::from_complex({{-0.5, 1.0}, {0.5, 1.0}});
}

Spectrum two_charge() {
  return Spectrum::from_entries({{charge_unit(0), 1}, {charge_unit(1), 1}}, true);
}

constexpr std::complex<double> kI{0.0, 1.0};
const std::complex<double> kInv2PiI = 1.0 / (2.0 * std::numbers::pi * kI);

}  // namespace

TEST_CASE("order-zero section is the identity with a diagonal connection") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  FlatSectionEngine fse(&l, sp, side_a(), 2.0, 0);
  CHECK(fse.terms().empty());
  std::complex<double> z = std::polar(0.3, 0.2);
  DMap y = fse.section(z);
  CHECK(y.is_identity());
  DMap a = fse.connection_form(z);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(a.im[i].terms.size() == 1);
    std::complex<double> c = a.im[i].coeff(Mono::pure_charge(charge_unit(i)));
    std::complex<double> expect = fse.model_coefficient(charge_unit(i), z);
    CHECK(std::abs(c - expect) < 1e-14);
  }
  LaurentData ld = fse.laurent();
  CHECK(ld.z2_residual < 1e-12);
  for (int i = 0; i < 2; ++i) CHECK(ld.q.im[i].max_abs_coeff() < 1e-12);
}

TEST_CASE("first-order connection matches the explicit one-vertex formula") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  CentralCharge zc = side_a();
  const double lambda = 2.0;
  FlatSectionEngine fse(&l, sp, zc, lambda, 1);
  CHECK(fse.terms().size() == 4);
  std::complex<double> z = std::polar(0.3, 0.3);
  DMap a = fse.connection_form(z);
  RayIntegralEngine& eng = fse.integrals();

  for (int i = 0; i < 2; ++i) {
    Charge gi = charge_unit(i);
    for (Charge beta : {charge_unit(1 - i), -charge_unit(1 - i)}) {
      DecoratedTree t = DecoratedTree::leaf(beta);
      std::complex<double> h = eng.value(t, -z);
      std::complex<double> hp = -eng.dz(t, -z);
      std::complex<double> d =
          -zc.eval(beta) / (z * z) + lambda * lambda * std::conj(zc.eval(beta));
      double pr = static_cast<double>(l.pairing(gi, beta));
      double sgn = std::fabs(std::fmod(pr, 2.0)) > 0.5 ? -1.0 : 1.0;
      std::complex<double> expect = sgn * pr * (hp - h * d);
      std::array<int32_t, kMaxRank> sd{};
      for (int r = 0; r < kMaxRank; ++r) sd[r] = std::abs(beta[r]);
      std::complex<double> got = a.im[i].coeff(Mono::make(gi + beta, sd));
      CHECK(std::abs(got - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("residue deformation matches the Bessel closed form at first order") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  CentralCharge zc = side_a();
  const double lambda = 2.0;
  FlatSectionEngine fse(&l, sp, zc, lambda, 1);
  LaurentData ld = fse.laurent();
  CHECK(ld.z2_residual < 1e-10);
  CHECK(ld.constancy < 1e-8);

  for (int i = 0; i < 2; ++i) {
    Charge gi = charge_unit(i);
    for (Charge beta : {charge_unit(1 - i), -charge_unit(1 - i)}) {
      double x = 2.0 * lambda * std::abs(zc.eval(beta));
      double pr = static_cast<double>(l.pairing(gi, beta));
      double sgn = std::fabs(std::fmod(pr, 2.0)) > 0.5 ? -1.0 : 1.0;
      std::complex<double> expect = -sgn * pr * x * std::cyl_bessel_k(1, x) * kInv2PiI;
      std::complex<double> expect0 = sgn * pr * lambda * lambda *
                                     std::conj(zc.eval(beta)) * 2.0 *
                                     std::cyl_bessel_k(0, x) * kInv2PiI;
      std::array<int32_t, kMaxRank> sd{};
      for (int r = 0; r < kMaxRank; ++r) sd[r] = std::abs(beta[r]);
      std::complex<double> got = ld.q.im[i].coeff(Mono::make(gi + beta, sd));
      CHECK(std::abs(got - expect) <= 1e-8 * std::max(1.0, std::abs(expect)));
      std::complex<double> got0 = ld.coeff_0.im[i].coeff(Mono::make(gi + beta, sd));
      CHECK(std::abs(got0 - expect0) <= 1e-8 * std::max(1.0, std::abs(expect0)));
    }
  }
}

TEST_CASE("section derivative agrees with the connection (flatness)") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  FlatSectionEngine fse(&l, sp, side_a(), 2.0, 2);
  for (std::complex<double> z : fse.sector_points(3, 0.35))
    CHECK(fse.flatness_residual(z) < 1e-6);
}

TEST_CASE("the connection form is single-valued across an active ray") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  CentralCharge zc = side_a();
  FlatSectionEngine fse(&l, sp, zc, 2.0, 2);
  LaurentData ld = fse.laurent();
  double ray = std::arg(zc.eval(charge_unit(1)));
  std::complex<double> zp = std::polar(0.25, ray + 5e-3);
  std::complex<double> zm = std::polar(0.25, ray - 5e-3);
  DMap yp = fse.section(zp), ym = fse.section(zm);
  CHECK(yp.distance(ym) > 1e-5);  // the section itself jumps across the cut

  // The connection form does not jump: on both sides it agrees with its own
  // three-term Laurent expansion, which is blind to the cut.
  for (std::complex<double> z : {zp, zm}) {
    DMap a = fse.connection_form(z);
    double num = 0.0, den = 1.0;
    for (int i = 0; i < 2; ++i) {
      DSeries expect = ld.coeff_m2.im[i];
      expect.scale(1.0 / (z * z));
      DSeries t = ld.q.im[i];
      t.scale(1.0 / z);
      expect += t;
      expect += ld.coeff_0.im[i];
      num = std::max(num, (a.im[i] - expect).max_abs_coeff());
      den = std::max(den, expect.max_abs_coeff());
    }
    CHECK(num / den < 1e-9);
  }
}

TEST_CASE("low-order coefficients are stable under raising the order") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  CentralCharge zc = side_a();
  FlatSectionEngine f1(&l, sp, zc, 2.0, 1);
  FlatSectionEngine f2(&l, sp, zc, 2.0, 2);
  LaurentData a = f1.laurent(), b = f2.laurent();
  for (int i = 0; i < 2; ++i)
    for (const auto& [m, c] : a.q.im[i].terms)
      CHECK(std::abs(c - b.q.im[i].coeff(m)) < 1e-10);
}

TEST_CASE("adic and residue-formula inverses agree on a section") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  FlatSectionEngine fse(&l, sp, side_a(), 2.0, 3);
  DMap y = fse.section(std::polar(0.4, 0.25));
  DMap adic = y.inverse_adic();
  CHECK(y.compose(adic).distance(DMap::identity(&l, 3)) < 1e-13);
  LagrangeReport rep = invert_lagrange(y);
  CHECK(rep.convention == 0);
  CHECK(rep.adic_distance <= 1e-10);
  CHECK(rep.alt_distance > 1e-8);
  CHECK(y.compose(rep.inverse).distance(DMap::identity(&l, 3)) < 1e-10);
}

TEST_CASE("residue-formula inversion reproduces the one-variable series") {
  Lattice l = a2();
  const int n = 4;
  const double a = 0.37;
  DMap y = DMap::identity(&l, n);
  DSeries e = DSeries::monomial(&l, n, Mono::decorated(charge_unit(0)), a);
  y.im[0] = DSeries::monomial(&l, n, Mono::pure_charge(charge_unit(0))) * e.exp_star();
  LagrangeReport rep = invert_lagrange(y);
  CHECK(rep.convention == 0);
  CHECK(rep.adic_distance < 1e-13);
  Charge g = charge_unit(0);
  auto coeff = [&](int k) {
    std::array<int32_t, kMaxRank> sd{};
    sd[0] = k - 1;
    return rep.inverse.im[0].coeff(Mono::make(k * g, sd));
  };
  CHECK(std::abs(coeff(2) - (-a)) < 1e-14);
  CHECK(std::abs(coeff(3) - 1.5 * a * a) < 1e-14);
  CHECK(std::abs(coeff(4) - (-8.0 / 3.0 * a * a * a)) < 1e-13);
}

TEST_CASE("generator extraction inverts the inner derivation") {
  Lattice l = a2();
  const int n = 3;
  DSeries f = DSeries::zero(&l, n);
  f.add_term(Mono::decorated(charge_unit(0)), {0.3, 0.0});
  f.add_term(Mono::decorated(charge_unit(1)), {0.1, 0.2});
  f.add_term(Mono::decorated(charge_unit(0) + charge_unit(1)), {0.05, -0.01});
  f.add_term(Mono::decorated(-charge_unit(0)), {0.07, 0.02});
  DMap v = DMap::ad(f);
  double spread = 1.0;
  DSeries g = extract_ad_generator(v, &spread);
  CHECK(spread < 1e-14);
  CHECK((f - g).max_abs_coeff() < 1e-14);
}

TEST_CASE("zero-coupling limit recovers the rational invariants at first order") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  CentralCharge zc = side_a();
  JoyceReport rep =
      joyce_limit(&l, sp, zc, {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}, 1);
  CHECK(rep.monotone);
  CHECK(rep.extraction_spread < 1e-8);
  // Every invariant is 1 here; the limit value of each component is the
  // residue constant 1/(2 pi i), independent of the decoration.
  std::complex<double> expect = kInv2PiI;
  for (Charge beta :
       {charge_unit(0), -charge_unit(0), charge_unit(1), -charge_unit(1)}) {
    std::complex<double> got = rep.f.coeff(Mono::decorated(beta));
    CHECK(std::abs(got - expect) < 1e-6);
  }
  // The constant coefficient of the connection fades with the coupling.
  REQUIRE(rep.c0_norms.size() == 7);
  CHECK(rep.c0_norms.back() < rep.c0_norms.front());
}

TEST_CASE("structural residuals of the limit data are small") {
  Lattice l = a2();
  Spectrum sp = two_charge();
  CentralCharge zc = side_a();
  FrobeniusReport rep = frobenius_residuals(
      &l, sp, zc, {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}, 2, 1e-3);
  CHECK(rep.higgs_torsion < 1e-12);
  CHECK(rep.g_skew < 1e-6);
  CHECK(rep.covariant_v < 1e-4);
  CHECK(rep.flatness < 1e-4);
  CHECK(rep.quadratic_pde < 1e-4);
}
