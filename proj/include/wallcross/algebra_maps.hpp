#pragma once

#include <vector>

#include "wallcross/series.hpp"

namespace wallcross {

enum class MapKind { automorphism, derivation };

// A continuous algebra endomorphism (or derivation), stored through its
// values on the generators x_{gamma_1..gamma_n}. Automorphisms extend
// multiplicatively with the normal-ordering sign; derivations extend by the
// Leibniz rule. Values on x_{-gamma_i} follow from x_g x_{-g} = 1.
template <class C>
struct AlgebraMap {
  MapKind kind = MapKind::automorphism;
  const Lattice* lat = nullptr;
  int order = 0;
  std::vector<TruncSeries<C>> im;  // image of x_{gamma_i}, i = 0..rank-1

  static AlgebraMap identity(const Lattice* l, int n) {
    AlgebraMap f;
    f.lat = l;
    f.order = n;
    f.im.reserve(l->rank);
    for (int i = 0; i < l->rank; ++i)
      f.im.push_back(TruncSeries<C>::monomial(l, n, Mono::pure_charge(charge_unit(i))));
    return f;
  }
  static AlgebraMap zero_derivation(const Lattice* l, int n) {
    AlgebraMap f;
    f.kind = MapKind::derivation;
    f.lat = l;
    f.order = n;
    f.im.assign(l->rank, TruncSeries<C>::zero(l, n));
    return f;
  }

  bool is_identity() const {
    if (kind != MapKind::automorphism) return false;
    for (int i = 0; i < lat->rank; ++i) {
      TruncSeries<C> d = im[i];
      d.add_term(Mono::pure_charge(charge_unit(i)), C(-1));
      if (!d.is_zero()) return false;
    }
    return true;
  }

  // Image of the basis monomial x_q (s-degree zero part handled by caller).
  TruncSeries<C> image_of_charge(const Charge& q) const {
    if (kind != MapKind::automorphism)
      throw std::logic_error("image_of_charge requires an automorphism");
    auto it = charge_cache_.find(q);
    if (it != charge_cache_.end()) return it->second;
    TruncSeries<C> r = TruncSeries<C>::one(lat, order);
    for (int i = 0; i < lat->rank; ++i) {
      if (q[i] > 0)
        r *= im[i].pow(q[i]);
      else if (q[i] < 0)
        r *= inv_image(i).pow(-q[i]);
    }
    if (lat->normal_order_sign(q) < 0) r = -r;
    charge_cache_.emplace(q, r);
    return r;
  }

  // Derivation on the basis monomial: D(x_q) = x_q * sum_i q_i x_{-g_i} D(x_{g_i}).
  TruncSeries<C> derivation_of_charge(const Charge& q) const {
    if (kind != MapKind::derivation)
      throw std::logic_error("derivation_of_charge requires a derivation");
    TruncSeries<C> s = TruncSeries<C>::zero(lat, order);
    for (int i = 0; i < lat->rank; ++i) {
      if (q[i] == 0) continue;
      TruncSeries<C> t =
          TruncSeries<C>::monomial(lat, order, Mono::pure_charge(-charge_unit(i))) * im[i];
      t.scale(C(q[i]));
      s += t;
    }
    return TruncSeries<C>::monomial(lat, order, Mono::pure_charge(q)) * s;
  }

  TruncSeries<C> apply(const TruncSeries<C>& a) const {
    TruncSeries<C> r(lat, order);
    for (const auto& [m, c] : a.terms) {
      TruncSeries<C> img = kind == MapKind::automorphism
                               ? image_of_charge(m.charge_vec())
                               : derivation_of_charge(m.charge_vec());
      std::array<int32_t, kMaxRank> sdeg{};
      for (int i = 0; i < kMaxRank; ++i) sdeg[i] = m.sdeg[i];
      // Multiply by c * s^{sdeg}: shift every term of img.
      for (const auto& [mi, ci] : img.terms) {
        std::array<int32_t, kMaxRank> ms{};
        for (int i = 0; i < kMaxRank; ++i) ms[i] = mi.sdeg[i] + sdeg[i];
        Charge qc = mi.charge_vec();
        int tot = 0;
        for (int i = 0; i < kMaxRank; ++i) tot += ms[i];
        if (tot > order) continue;
        r.add_term(Mono::make(qc, ms), c * ci);
      }
    }
    return r;
  }

  // this ∘ other (apply `other` first).
  AlgebraMap compose(const AlgebraMap& other) const {
    if (kind != MapKind::automorphism || other.kind != MapKind::automorphism)
      throw std::logic_error("compose requires automorphisms");
    AlgebraMap r;
    r.lat = lat;
    r.order = order;
    r.im.reserve(lat->rank);
    for (int i = 0; i < lat->rank; ++i) r.im.push_back(apply(other.im[i]));
    return r;
  }

  // Inverse of an automorphism that is the identity modulo positive s-degree,
  // by the adic fixpoint u <- r - (phi(u) - u); each pass gains one s-degree.
  AlgebraMap inverse_adic() const {
    if (kind != MapKind::automorphism)
      throw std::logic_error("inverse_adic requires an automorphism");
    AlgebraMap inv;
    inv.lat = lat;
    inv.order = order;
    inv.im.reserve(lat->rank);
    for (int i = 0; i < lat->rank; ++i) {
      const Mono xg = Mono::pure_charge(charge_unit(i));
      TruncSeries<C> r0 =
          TruncSeries<C>::monomial(lat, order, xg) * im[i].inverse();  // x_g phi(x_g)^{-1}
      r0.add_term(Mono{}, C(-1));
      if (r0.min_sdeg() < 1)
        throw std::domain_error("inverse_adic: map is not unipotent in the s-filtration");
      TruncSeries<C> u = TruncSeries<C>::zero(lat, order);
      for (int pass = 0; pass <= order; ++pass) {
        TruncSeries<C> next = r0 - (apply(u) - u);
        if ((next - u).is_zero()) {
          u = next;
          break;
        }
        u = next;
      }
      TruncSeries<C> one_plus_u = u;
      one_plus_u.add_term(Mono{}, C(1));
      inv.im.push_back(TruncSeries<C>::monomial(lat, order, xg) * one_plus_u);
    }
    return inv;
  }

  // Exponential of a derivation that raises s-degree: an automorphism.
  static AlgebraMap exp_derivation(const AlgebraMap& d) {
    if (d.kind != MapKind::derivation)
      throw std::logic_error("exp_derivation requires a derivation");
    for (const auto& v : d.im)
      if (v.min_sdeg() < 1)
        throw std::domain_error("exp_derivation: derivation must raise s-degree");
    AlgebraMap r;
    r.lat = d.lat;
    r.order = d.order;
    r.im.reserve(d.lat->rank);
    for (int i = 0; i < d.lat->rank; ++i) {
      TruncSeries<C> acc =
          TruncSeries<C>::monomial(d.lat, d.order, Mono::pure_charge(charge_unit(i)));
      TruncSeries<C> p = acc;
      C fact(1);
      for (int k = 1; k <= d.order; ++k) {
        p = d.apply(p);
        if (p.is_zero()) break;
        fact *= C(k);
        TruncSeries<C> t = p;
        t.scale(C(1) / fact);
        acc += t;
      }
      r.im.push_back(std::move(acc));
    }
    return r;
  }

  // Inner derivation ad(u) = {u, -}.
  static AlgebraMap ad(const TruncSeries<C>& u) {
    AlgebraMap r;
    r.kind = MapKind::derivation;
    r.lat = u.lat;
    r.order = u.order;
    r.im.reserve(u.lat->rank);
    for (int i = 0; i < u.lat->rank; ++i)
      r.im.push_back(poisson_bracket(
          u, TruncSeries<C>::monomial(u.lat, u.order, Mono::pure_charge(charge_unit(i)))));
    return r;
  }

  // Largest coefficient magnitude over the generator images of (this - other).
  double distance(const AlgebraMap& other) const {
    double d = 0;
    for (int i = 0; i < lat->rank; ++i) d = std::max(d, (im[i] - other.im[i]).max_abs_coeff());
    return d;
  }
  bool equals(const AlgebraMap& other) const {
    for (int i = 0; i < lat->rank; ++i)
      if (!(im[i] - other.im[i]).is_zero()) return false;
    return true;
  }

 private:
  mutable std::map<Charge, TruncSeries<C>> charge_cache_;
  mutable std::map<int, TruncSeries<C>> inv_cache_;

  const TruncSeries<C>& inv_image(int i) const {
    auto it = inv_cache_.find(i);
    if (it == inv_cache_.end()) it = inv_cache_.emplace(i, im[i].inverse()).first;
    return it->second;
  }
};

using DMap = AlgebraMap<std::complex<double>>;
using QMap = AlgebraMap<RatComplex>;

}  // namespace wallcross
