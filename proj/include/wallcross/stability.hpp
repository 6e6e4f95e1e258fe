#pragma once

#include <map>
#include <optional>
#include <vector>

#include "wallcross/algebra_maps.hpp"
#include "wallcross/charges.hpp"

namespace wallcross {

// Rational-valued table over nonzero charges with finite support.
// Values of the integer-type invariant (omega) or its multiple-summed
// companion (dt) both live in tables of this shape.
template <class R>
using ChargeTable = std::map<Charge, R>;

using QTable = ChargeTable<mpq_class>;
using DTable = ChargeTable<double>;

// Spectrum: the omega table plus convenience helpers. `doubled` records that
// the table was closed under negation on construction.
struct Spectrum {
  QTable omega;
  bool doubled = false;

  static Spectrum from_entries(const std::vector<std::pair<Charge, mpq_class>>& entries,
                               bool close_under_negation);
  mpq_class omega_of(const Charge& a) const {
    auto it = omega.find(a);
    return it == omega.end() ? mpq_class(0) : it->second;
  }
  std::vector<Charge> support() const;
};

// Möbius function on positive integers (trial division; arguments are small).
int moebius_mu(int k);

// dt(a) = sum_{k | a} omega(a/k) / k^2.
QTable dt_from_omega(const QTable& omega);
// omega(a) = sum_{k | a} mu(k) dt(a/k) / k^2 (exact inverse of the above).
QTable omega_from_dt(const QTable& dt);

template <class R>
ChargeTable<R> table_cast(const QTable& t) {
  ChargeTable<R> r;
  for (const auto& [a, v] : t) r[a] = static_cast<R>(v.get_d());
  return r;
}
template <>
inline QTable table_cast<mpq_class>(const QTable& t) {
  return t;
}

// Wall automorphism for a single charge beta with invariant strength `omega`:
// x_g -> x_g * (1 - s^{[beta]} x_beta)^{<beta, g> * omega}.
template <class C, class E>
AlgebraMap<C> wall_op(const Lattice* lat, int order, const Charge& beta, const E& omega) {
  AlgebraMap<C> f;
  f.lat = lat;
  f.order = order;
  f.im.reserve(lat->rank);
  TruncSeries<C> t = TruncSeries<C>::monomial(lat, order, Mono::decorated(beta));
  for (int i = 0; i < lat->rank; ++i) {
    long long p = lat->pairing(beta, charge_unit(i));
    TruncSeries<C> img =
        TruncSeries<C>::monomial(lat, order, Mono::pure_charge(charge_unit(i)));
    if (p != 0) {
      E expo = E(static_cast<int>(p)) * omega;
      img *= binom_one_minus(t, expo);
    }
    f.im.push_back(std::move(img));
  }
  return f;
}

// Composite automorphism of one ray: the (commuting) wall operators of every
// supported charge on the ray, most divisible last (order is immaterial).
template <class C, class E>
AlgebraMap<C> ray_factor(const Lattice* lat, int order, const Ray& ray,
                         const ChargeTable<E>& omega) {
  AlgebraMap<C> f = AlgebraMap<C>::identity(lat, order);
  for (const Charge& b : ray.charges) {
    auto it = omega.find(b);
    if (it == omega.end()) continue;
    f = f.compose(wall_op<C, E>(lat, order, b, it->second));
  }
  return f;
}

// Ordered product over all rays of the diagram, leftmost (counterclockwise
// boundary) factor applied last: P = T_{r1} ∘ T_{r2} ∘ ... ∘ T_{rk}.
template <class C, class E>
AlgebraMap<C> ray_product(const Lattice* lat, int order, const ChargeTable<E>& omega,
                          const CentralCharge& zc, int max_deg = -1) {
  std::vector<Charge> supp;
  for (const auto& [a, v] : omega) {
    if (v == E(0)) continue;
    if (max_deg >= 0 && charge_deg(a) > max_deg) continue;
    supp.push_back(a);
  }
  RayDiagram diag = clockwise_ray_order(zc, supp);
  AlgebraMap<C> prod = AlgebraMap<C>::identity(lat, order);
  for (const Ray& r : diag.rays) prod = prod.compose(ray_factor<C, E>(lat, order, r, omega));
  return prod;
}

// Continuity across a wall: the ordered products computed on the two sides
// (each with its own table and central charge) must agree.
struct ContinuityReport {
  bool exact_zero = false;
  double max_residual = 0.0;
  int first_failing_sdeg = -1;  // least total s-degree with a residual; -1 if none
};

ContinuityReport continuity_check(const Lattice* lat, int order, const Spectrum& left,
                                  const CentralCharge& z_left, const Spectrum& right,
                                  const CentralCharge& z_right);

// Weighted support sums: partial sums of |omega(a)| e^{-lambda |Z(a)|} by
// degree shells, used to report growth/decay of the spectrum data.
struct GrowthReport {
  std::vector<double> partial_sums;  // cumulative, indexed by degree shell 1..D
  double total = 0.0;
  bool stabilized = false;  // last increment below 1e-12 of total
};
GrowthReport growth_report(const Spectrum& sp, const CentralCharge& zc, double lambda,
                           int max_deg);

}  // namespace wallcross
