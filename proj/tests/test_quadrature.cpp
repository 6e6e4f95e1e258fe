#include <cmath>
#include <complex>
#include <functional>

#include "doctest.h"
#include "wallcross/quadrature.hpp"

using namespace wallcross;
using cplx = std::complex<double>;

namespace {

Lattice a2() { return Lattice::with_pairing(2, {{0, 1}, {-1, 0}}); }

const cplx kI{0.0, 1.0};

CentralCharge side_a() {
  return CentralCharge::from_complex({cplx(-0.5, 1.0), cplx(0.5, 1.0)});
}

// Recursive adaptive Simpson rule; deliberately a different quadrature family
// from the engine's trapezoid grids.
cplx simpson_step(const std::function<cplx(double)>& f, double a, double b, cplx fa,
                  cplx fm, cplx fb, cplx whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  cplx fl = f(0.5 * (a + m)), fr = f(0.5 * (m + b));
  cplx left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
  cplx right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_step(f, a, m, fa, fl, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, fr, fb, right, 0.5 * tol, depth - 1);
}

cplx adaptive(const std::function<cplx(double)>& f, double a, double b, double tol) {
  cplx fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 40);
}

// One-vertex integral by the oracle rule; `coord` picks the e^u (rather than
// e^u / scale) node parametrization.
cplx oracle_single(cplx zdec, double scale, const std::function<cplx(cplx)>& kern,
                   bool coord) {
  cplx dir = zdec / std::abs(zdec);
  double sigma = scale * std::abs(zdec);
  auto f = [&](double u) {
    cplx w = dir * std::exp(u) * (coord ? 1.0 : 1.0 / scale);
    return kern(w) * std::exp(-2.0 * sigma * std::cosh(u));
  };
  double umax = std::acosh(1.0 + 80.0 / (2.0 * sigma));
  return adaptive(f, -umax, umax, 1e-13) / (2.0 * M_PI * kI);
}

}  // namespace

TEST_CASE("one-vertex z-expansion matches the Bessel closed form") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  double lambda = 2.0;
  DecoratedTree t = DecoratedTree::leaf(charge_from({1, 0}));
  RayIntegralEngine eng(&lat, zc, lambda);
  auto hk = eng.z_coefficients(t, 4);
  cplx zdec = zc.eval(t.dec);
  cplx dir = zdec / std::abs(zdec);
  double x = 2.0 * lambda * std::abs(zdec);
  for (int k = 1; k <= 4; ++k) {
    cplx expect = std::pow(lambda / dir, k) * (2.0 * std::cyl_bessel_k(k, x)) /
                  (2.0 * M_PI * kI);
    CHECK(std::abs(hk[k - 1] - expect) <= 1e-9 * std::abs(expect));
  }
  CHECK(eng.last_converged());
}

TEST_CASE("one-vertex value matches an independent adaptive quadrature") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  double lambda = 1.5;
  DecoratedTree t = DecoratedTree::leaf(charge_from({0, 1}));
  RayIntegralEngine eng(&lat, zc, lambda);
  for (cplx z : {cplx(0.05, -0.11), cplx(-0.3, -0.02), cplx(0.02, 0.01)}) {
    cplx got = eng.value(t, z);
    cplx want = oracle_single(zc.eval(t.dec), lambda,
                              [&](cplx w) { return z / (w - z); }, false);
    CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("two-vertex chain matches a nested adaptive quadrature") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  double lambda = 1.0;
  DecoratedTree t = DecoratedTree::make(charge_from({1, 0}),
                                        {DecoratedTree::leaf(charge_from({0, 1}))});
  RayIntegralEngine eng(&lat, zc, lambda);
  cplx z(0.07, -0.19);
  cplx got = eng.value(t, z);

  cplx z1 = zc.eval(charge_from({1, 0})), z2 = zc.eval(charge_from({0, 1}));
  cplx d1 = z1 / std::abs(z1), d2 = z2 / std::abs(z2);
  double s1 = lambda * std::abs(z1), s2 = lambda * std::abs(z2);
  double u1 = std::acosh(1.0 + 80.0 / (2.0 * s1));
  double u2 = std::acosh(1.0 + 80.0 / (2.0 * s2));
  auto inner = [&](cplx wp) {
    auto f = [&](double u) {
      cplx w = d2 * std::exp(u) / lambda;
      return (wp / (w - wp)) * std::exp(-2.0 * s2 * std::cosh(u));
    };
    return adaptive(f, -u2, u2, 1e-11) / (2.0 * M_PI * kI);
  };
  auto outer = [&](double u) {
    cplx w = d1 * std::exp(u) / lambda;
    return (z / (w - z)) * std::exp(-2.0 * s1 * std::cosh(u)) * inner(w);
  };
  cplx want = adaptive(outer, -u1, u1, 1e-10) / (2.0 * M_PI * kI);
  CHECK(std::abs(got - want) <= 1e-7 * std::max(1.0, std::abs(want)));
}

TEST_CASE("value agrees with its z-expansion near the origin") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  double lambda = 2.0;
  DecoratedTree t = DecoratedTree::make(charge_from({1, 0}),
                                        {DecoratedTree::leaf(charge_from({0, 1}))});
  RayIntegralEngine eng(&lat, zc, lambda);
  auto hk = eng.z_coefficients(t, 12);
  cplx z = 0.01 / lambda * std::exp(cplx(0.0, -1.1));
  cplx series = 0, zp = z;
  for (int k = 0; k < 12; ++k) {
    series += hk[k] * zp;
    zp *= z;
  }
  cplx direct = eng.value(t, z);
  CHECK(std::abs(direct - series) <= 1e-10 * std::max(1.0, std::abs(direct)));

  // Leading behaviour is linear: value/z tends to the first coefficient.
  cplx tiny = 1e-6 * std::exp(cplx(0.0, -0.4));
  CHECK(std::abs(eng.value(t, tiny) / tiny - hk[0]) <= 1e-4 * std::abs(hk[0]));
}

TEST_CASE("dz matches finite differences of value") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  RayIntegralEngine eng(&lat, zc, 1.5);
  DecoratedTree t = DecoratedTree::make(charge_from({0, 1}),
                                        {DecoratedTree::leaf(charge_from({1, 0}))});
  cplx z(0.12, -0.08);
  cplx got = eng.dz(t, z);
  double d = 1e-5;
  cplx fd_re = (eng.value(t, z + d) - eng.value(t, z - d)) / (2.0 * d);
  cplx fd_im = (eng.value(t, z + d * kI) - eng.value(t, z - d * kI)) / (2.0 * d * kI);
  CHECK(std::abs(got - fd_re) <= 1e-6 * std::max(1.0, std::abs(got)));
  CHECK(std::abs(got - fd_im) <= 1e-6 * std::max(1.0, std::abs(got)));
}

TEST_CASE("coordinate-family kernel matches the oracle and its far limit") {
  Lattice lat = a2();
  CentralCharge zc = CentralCharge::from_complex({kI, cplx(0.3, 0.9)});
  double big_r = 2.0;
  DecoratedTree t = DecoratedTree::leaf(charge_from({1, 0}));
  RayIntegralEngine eng(&lat, zc, big_r, RayIntegralEngine::Family::coord);
  cplx zeta = std::exp(cplx(0.0, -M_PI / 4.0));
  cplx got = eng.value(t, zeta);
  cplx want = oracle_single(zc.eval(t.dec), big_r,
                            [&](cplx w) { return (w + zeta) / (w - zeta); }, true);
  CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));

  // As the evaluation point goes to infinity the kernel tends to -1, so the
  // value tends to -K0(2 R |Z|)/(pi i).
  cplx far = eng.value(t, cplx(1e8, -3e7));
  cplx limit = -std::cyl_bessel_k(0, 2.0 * big_r * 1.0) / (M_PI * kI);
  CHECK(std::abs(far - limit) <= 1e-6 * std::abs(limit));
}

TEST_CASE("scaling the charges is the same as scaling lambda") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  double c = 2.75, lambda = 1.3;
  DecoratedTree t = DecoratedTree::make(charge_from({1, 1}),
                                        {DecoratedTree::leaf(charge_from({1, 0}))});
  RayIntegralEngine scaled_z(&lat, zc.scaled(c), lambda);
  RayIntegralEngine scaled_l(&lat, zc, c * lambda);
  auto ha = scaled_z.z_coefficients(t, 4);
  auto hb = scaled_l.z_coefficients(t, 4);
  double ck = c;
  for (int k = 1; k <= 4; ++k) {
    CHECK(std::abs(ha[k - 1] - hb[k - 1] / ck) <= 1e-12 * std::abs(ha[k - 1]));
    ck *= c;
  }
}

TEST_CASE("contour tilt gives sector-consistent values near a ray") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  DecoratedTree t = DecoratedTree::leaf(charge_from({1, 0}));
  cplx dir = zc.eval(t.dec) / std::abs(zc.eval(t.dec));
  cplx z = 0.4 * dir * std::exp(cplx(0.0, 5e-4));  // inside the tilt window

  QuadSpec narrow;
  narrow.tilt = 1e-3;
  QuadSpec wide;
  wide.tilt = 2e-3;
  RayIntegralEngine e1(&lat, zc, 1.5, RayIntegralEngine::Family::flat, narrow);
  RayIntegralEngine e2(&lat, zc, 1.5, RayIntegralEngine::Family::flat, wide);
  cplx v1 = e1.value(t, z), v2 = e2.value(t, z);
  CHECK(std::abs(v1 - v2) <= 1e-9 * std::max(1.0, std::abs(v1)));
}

TEST_CASE("principal-value split reproduces the two side limits and the jump") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  double lambda = 1.2;
  DecoratedTree child = DecoratedTree::leaf(charge_from({0, 1}));
  QuadSpec spec;
  spec.tilt = 0.05;  // wide deformation so near-ray evaluations stay resolved
  RayIntegralEngine eng(&lat, zc, lambda, RayIntegralEngine::Family::flat, spec);
  cplx zdec = zc.eval(child.dec);
  cplx dir = zdec / std::abs(zdec);
  cplx wv = dir * std::exp(0.3) / lambda;
  PvSplit split = eng.pv_split(child, wv);

  // Jump equals the exponential factor at the node (no grandchildren here).
  double sigma = lambda * std::abs(zdec);
  cplx expect_jump = std::exp(-2.0 * sigma * std::cosh(0.3));
  CHECK(std::abs(split.jump - expect_jump) <= 1e-10 * std::abs(expect_jump));
  CHECK(std::abs((split.above - split.below) - split.jump) <= 1e-14);

  // Side limits match extrapolated off-ray evaluations (the tilt logic pushes
  // the contour away from the evaluation point, selecting the proper side).
  auto side = [&](double delta) { return eng.value(child, wv * std::exp(kI * delta)); };
  cplx above = 2.0 * side(1e-4) - side(2e-4);
  cplx below = 2.0 * side(-1e-4) - side(-2e-4);
  CHECK(std::abs(above - split.above) <= 1e-7 * std::max(1.0, std::abs(split.above)));
  CHECK(std::abs(below - split.below) <= 1e-7 * std::max(1.0, std::abs(split.below)));
}

TEST_CASE("aligned grids give the symmetric principal value for stacked rays") {
  Lattice lat = a2();
  // Two charges mapped to the same direction: the nested chain hits the
  // child contour exactly on the parent nodes.
  CentralCharge zc = CentralCharge::from_complex({kI, 2.0 * kI});
  double lambda = 1.0;
  DecoratedTree t = DecoratedTree::make(charge_from({1, 0}),
                                        {DecoratedTree::leaf(charge_from({0, 1}))});
  RayIntegralEngine eng(&lat, zc, lambda);
  cplx z(0.1, -0.2);
  cplx pv_val = eng.value(t, z);

  // Oracle: rotate the child ray by +/-eps and average; the symmetric mean of
  // the two side readings converges to the principal value quadratically.
  auto rotated = [&](double eps) {
    CentralCharge zr = CentralCharge::from_complex({kI, 2.0 * kI * std::exp(kI * eps)});
    RayIntegralEngine er(&lat, zr, lambda);
    return er.value(t, z);
  };
  cplx avg1 = 0.5 * (rotated(2e-3) + rotated(-2e-3));
  cplx avg2 = 0.5 * (rotated(1e-3) + rotated(-1e-3));
  cplx extrap = (4.0 * avg2 - avg1) / 3.0;
  CHECK(std::abs(pv_val - extrap) <= 1e-6 * std::max(1.0, std::abs(pv_val)));
}

TEST_CASE("exponential-bound fit reports the expected decay rate") {
  Lattice lat = a2();
  CentralCharge zc = side_a();
  std::vector<DecoratedTree> trees = {DecoratedTree::leaf(charge_from({1, 0})),
                                      DecoratedTree::leaf(charge_from({0, 1}))};
  std::vector<double> lambdas = {5.0, 7.5, 10.0, 12.5, 15.0};
  cplx z_star = 0.25 * std::exp(cplx(0.0, -M_PI / 3.0));
  EstimateReport rep = estimate_check(&lat, trees, zc, lambdas, z_star, QuadSpec{});
  CHECK(rep.all_converged);
  CHECK(rep.c1 > 0.0);
  CHECK(rep.min_margin >= 0.0);
  CHECK(rep.c2 == doctest::Approx(2.0).epsilon(0.05));
  for (const EstimateSample& s : rep.samples) CHECK(s.n_vertices == 1);
}
