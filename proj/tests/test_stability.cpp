#include "doctest.h"
#include "wallcross/stability.hpp"

#include <random>

using namespace wallcross;

namespace {

Lattice a2_lattice() { return Lattice::with_pairing(2, {{0, 1}, {-1, 0}}); }

Spectrum a2_two_charge() {
  return Spectrum::from_entries({{charge_unit(0), 1}, {charge_unit(1), 1}}, true);
}
Spectrum a2_three_charge() {
  return Spectrum::from_entries(
      {{charge_unit(0), 1}, {charge_unit(1), 1}, {charge_unit(0) + charge_unit(1), 1}}, true);
}

}  // namespace

TEST_CASE("dt/omega transforms on multiples") {
  Charge g = charge_unit(0);
  QTable om;
  om[g] = 1;
  om[2 * g] = 0;
  om[3 * g] = 0;
  QTable dt = dt_from_omega(om);
  CHECK(dt[g] == 1);
  CHECK(dt[2 * g] == mpq_class(1, 4));
  CHECK(dt[3 * g] == mpq_class(1, 9));
  QTable back = omega_from_dt(dt);
  CHECK(back == om);
}

TEST_CASE("moebius function values") {
  CHECK(moebius_mu(1) == 1);
  CHECK(moebius_mu(2) == -1);
  CHECK(moebius_mu(4) == 0);
  CHECK(moebius_mu(6) == 1);
  CHECK(moebius_mu(12) == 0);
  CHECK(moebius_mu(30) == -1);
}

TEST_CASE("moebius roundtrip on random tables is exact") {
  std::mt19937 rng(20260814);
  std::uniform_int_distribution<int> coord(-2, 2);
  std::uniform_int_distribution<int> numer(-9, 9);
  std::uniform_int_distribution<int> denom(1, 7);
  auto rnd_q = [&] {
    mpq_class q(numer(rng), denom(rng));
    q.canonicalize();
    return q;
  };
  for (int trial = 0; trial < 25; ++trial) {
    QTable om;
    for (int e = 0; e < 6; ++e) {
      Charge a{};
      for (int i = 0; i < 3; ++i) a[i] = coord(rng);
      if (is_zero(a)) continue;
      om[a] = rnd_q();
      // close under the divisors so the transforms see full data
      int g = charge_content(a);
      for (int k = 2; k <= g; ++k)
        if (g % k == 0) {
          Charge q{};
          for (int i = 0; i < kMaxRank; ++i) q[i] = a[i] / k;
          om.emplace(q, rnd_q());
        }
    }
    QTable dt = dt_from_omega(om);
    CHECK(omega_from_dt(dt) == om);
  }
}

TEST_CASE("wall operator frozen values") {
  Lattice l = a2_lattice();
  const int N = 4;
  Charge g1 = charge_unit(0), g2 = charge_unit(1);
  QMap t1 = wall_op<RatComplex, mpq_class>(&l, N, g1, 1);
  // x_{g1} is fixed; x_{g2} picks up one factor.
  CHECK((t1.im[0] - TruncSeries<RatComplex>::monomial(&l, N, Mono::pure_charge(g1))).is_zero());
  QSeries img2 = t1.im[1];
  CHECK(img2.coeff(Mono::pure_charge(g2)) == RatComplex(1));
  // x_{g2} * (-s1 x_{g1}): sign (-1)^{<g2,g1>} = -1 flips the -1.
  CHECK(img2.coeff(Mono::make(g1 + g2, {1, 0})) == RatComplex(1));
  CHECK(img2.terms.size() == 2);
  // Exponent <g1, g2> * omega = +1: expansion exact, no higher terms.
}

TEST_CASE("wall operators with opposite strength invert each other, adic inverse agrees") {
  Lattice l = a2_lattice();
  const int N = 5;
  Charge g1 = charge_unit(0);
  QMap t = wall_op<RatComplex, mpq_class>(&l, N, g1, mpq_class(3, 2));
  QMap tinv = wall_op<RatComplex, mpq_class>(&l, N, g1, mpq_class(-3, 2));
  CHECK(t.compose(tinv).is_identity());
  CHECK(tinv.compose(t).is_identity());
  QMap adic = t.inverse_adic();
  CHECK(adic.equals(tinv));
}

TEST_CASE("pentagon identity in the truncated algebra (exact)") {
  Lattice l = a2_lattice();
  const int N = 6;
  Charge g1 = charge_unit(0), g2 = charge_unit(1);
  QMap t1 = wall_op<RatComplex, mpq_class>(&l, N, g1, 1);
  QMap t2 = wall_op<RatComplex, mpq_class>(&l, N, g2, 1);
  QMap t12 = wall_op<RatComplex, mpq_class>(&l, N, g1 + g2, 1);
  QMap lhs = t1.compose(t2);
  QMap rhs = t2.compose(t12).compose(t1);
  CHECK(lhs.equals(rhs));
}

TEST_CASE("continuity across the two-wall example is exactly zero") {
  Lattice l = a2_lattice();
  auto z_a = CentralCharge::from_rational(
      {{mpq_class(-1, 2), mpq_class(1)}, {mpq_class(1, 2), mpq_class(1)}});
  auto z_b = CentralCharge::from_rational(
      {{mpq_class(1, 2), mpq_class(1)}, {mpq_class(-1, 2), mpq_class(1)}});
  ContinuityReport rep =
      continuity_check(&l, 6, a2_two_charge(), z_a, a2_three_charge(), z_b);
  CHECK(rep.exact_zero);
  CHECK(rep.max_residual == 0.0);
  // Sanity: breaking one table must break continuity.
  Spectrum wrong = Spectrum::from_entries(
      {{charge_unit(0), 1}, {charge_unit(1), mpq_class(2)}}, true);
  ContinuityReport bad = continuity_check(&l, 6, wrong, z_a, a2_three_charge(), z_b);
  CHECK_FALSE(bad.exact_zero);
  CHECK(bad.max_residual > 0.1);
}

TEST_CASE("growth report accumulates degree shells") {
  auto zc = CentralCharge::from_complex({{-0.5, 1.0}, {0.5, 1.0}});
  GrowthReport rep = growth_report(a2_three_charge(), zc, 2.0, 4);
  REQUIRE(rep.partial_sums.size() == 4);
  // Degree 1: the four unit charges; degree 2 adds ±(g1+g2); nothing above.
  double r1 = std::abs(zc.eval(charge_unit(0)));
  double d1 = 4 * std::exp(-2.0 * r1);
  CHECK(rep.partial_sums[0] == doctest::Approx(d1).epsilon(1e-12));
  double d2 = d1 + 2 * std::exp(-2.0 * std::abs(zc.eval(charge_unit(0) + charge_unit(1))));
  CHECK(rep.partial_sums[1] == doctest::Approx(d2).epsilon(1e-12));
  CHECK(rep.partial_sums[3] == doctest::Approx(d2).epsilon(1e-12));
  CHECK(rep.total == doctest::Approx(d2).epsilon(1e-12));
  CHECK(rep.stabilized);
}
