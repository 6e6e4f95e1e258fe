#include "doctest.h"
#include "wallcross/charges.hpp"

#include <complex>

using namespace wallcross;

namespace {

Lattice a2_lattice() { return Lattice::with_pairing(2, {{0, 1}, {-1, 0}}); }

}  // namespace

TEST_CASE("pairing is skew and bilinear") {
  Lattice l = a2_lattice();
  Charge g1 = charge_unit(0), g2 = charge_unit(1);
  CHECK(l.pairing(g1, g2) == 1);
  CHECK(l.pairing(g2, g1) == -1);
  CHECK(l.pairing(g1, g1) == 0);
  CHECK(l.pairing(g1 + g2, g2) == 1);
  CHECK(l.pairing(2 * g1 - g2, g1 + 3 * g2) == 2 * 3 + (-1) * (-1) * 0 + 1);
  CHECK_THROWS(Lattice::with_pairing(2, {{0, 1}, {1, 0}}));
}

TEST_CASE("split parts and degree") {
  Charge a = charge_from({3, -2, 0});
  SplitParts sp = split_parts(a);
  CHECK(sp.pos[0] == 3);
  CHECK(sp.pos[1] == 0);
  CHECK(sp.neg[1] == 2);
  CHECK(charge_deg(a) == 5);
  CHECK(charge_content(charge_from({4, -6})) == 2);
  CHECK(charge_content(charge_zero()) == 0);
}

TEST_CASE("support bound reports the worst ratio") {
  auto zc = CentralCharge::from_complex({{0.0, 1.0}, {3.0, 4.0}});
  std::vector<Charge> supp = {charge_unit(0), charge_unit(1)};
  SupportReport rep = check_support(zc, supp, 0.5);
  CHECK(rep.ok);
  CHECK(rep.min_ratio == doctest::Approx(1.0));
  CHECK(rep.worst == charge_unit(0));
  CHECK_FALSE(check_support(zc, supp, 1.5).ok);
}

TEST_CASE("strong genericity distinguishes accidental ray collisions") {
  // Z(g1) and Z(g2) parallel but the charges are not collinear: not generic.
  auto bad = CentralCharge::from_complex({{1.0, 1.0}, {2.0, 2.0}});
  std::vector<Charge> supp = {charge_unit(0), charge_unit(1)};
  CHECK_FALSE(is_strongly_generic(bad, supp));
  // A multiple of a charge on the same ray is fine.
  auto ok = CentralCharge::from_complex({{1.0, 1.0}, {-1.0, 1.0}});
  std::vector<Charge> supp2 = {charge_unit(0), 2 * charge_unit(0), charge_unit(1)};
  CHECK(is_strongly_generic(ok, supp2));
  // Exact data: collision detected exactly.
  auto bad_exact = CentralCharge::from_rational(
      {{mpq_class(1), mpq_class(1)}, {mpq_class(2), mpq_class(2)}});
  CHECK_FALSE(is_strongly_generic(bad_exact, supp));
}

TEST_CASE("clockwise ray order starts at the counterclockwise boundary") {
  // arg: g1 -> 3pi/4, g2 -> pi/2, g1+g2 -> atan(3) ~ 1.249, g2-g1 ~ 2.356... pick clean data
  auto zc = CentralCharge::from_complex({{-1.0, 1.0}, {1.0, 2.0}});
  Charge g1 = charge_unit(0), g2 = charge_unit(1);
  std::vector<Charge> supp = {g1, g2, g1 + g2, -g1, 2 * g2};
  RayDiagram d = clockwise_ray_order(zc, supp);
  // -g1 has Im < 0: excluded. g2 and 2*g2 share a ray.
  REQUIRE(d.rays.size() == 3);
  CHECK(std::arg(d.rays[0].dir) > std::arg(d.rays[1].dir));
  CHECK(std::arg(d.rays[1].dir) > std::arg(d.rays[2].dir));
  CHECK(d.rays[0].charges == std::vector<Charge>{g1});           // arg 3pi/4
  CHECK(d.rays[1].charges == std::vector<Charge>{g1 + g2});      // arg pi/2
  CHECK(d.rays[2].charges == std::vector<Charge>{g2, 2 * g2});   // arg ~1.107
  CHECK(std::arg(zc.eval(g1)) > std::arg(zc.eval(g2)));
}

TEST_CASE("clockwise ray order with exact rational data") {
  auto zc = CentralCharge::from_rational({{mpq_class(-1, 2), mpq_class(1)},
                                          {mpq_class(1, 2), mpq_class(1)}});
  Charge g1 = charge_unit(0), g2 = charge_unit(1);
  RayDiagram d = clockwise_ray_order(zc, {g2, g1 + g2, g1});
  REQUIRE(d.rays.size() == 3);
  CHECK(d.rays[0].charges == std::vector<Charge>{g1});
  CHECK(d.rays[1].charges == std::vector<Charge>{g1 + g2});
  CHECK(d.rays[2].charges == std::vector<Charge>{g2});
  CHECK(zc.is_positive());
}
