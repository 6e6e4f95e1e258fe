#pragma once

#include <cassert>
#include <map>
#include <stdexcept>

#include "wallcross/charges.hpp"
#include "wallcross/rational.hpp"

namespace wallcross {

// Monomial key: an x-monomial labelled by a lattice charge together with a
// formal multidegree in the deformation variables s_1..s_n. The two are
// tracked independently; formulas attach s^{[a]} decorations explicitly.
struct Mono {
  std::array<int8_t, kMaxRank> charge{};
  std::array<uint8_t, kMaxRank> sdeg{};

  friend bool operator<(const Mono& a, const Mono& b) {
    if (a.sdeg != b.sdeg) return a.sdeg < b.sdeg;
    return a.charge < b.charge;
  }
  friend bool operator==(const Mono& a, const Mono& b) {
    return a.charge == b.charge && a.sdeg == b.sdeg;
  }

  Charge charge_vec() const {
    Charge c{};
    for (int i = 0; i < kMaxRank; ++i) c[i] = charge[i];
    return c;
  }
  int total_sdeg() const {
    int d = 0;
    for (int i = 0; i < kMaxRank; ++i) d += sdeg[i];
    return d;
  }
  static Mono make(const Charge& c, const std::array<int32_t, kMaxRank>& m) {
    Mono k;
    for (int i = 0; i < kMaxRank; ++i) {
      if (c[i] < -127 || c[i] > 127 || m[i] > 255)
        throw std::overflow_error("monomial key out of range");
      k.charge[i] = static_cast<int8_t>(c[i]);
      k.sdeg[i] = static_cast<uint8_t>(m[i]);
    }
    return k;
  }
  static Mono pure_charge(const Charge& c) { return make(c, {}); }
  // The standard decorated generator monomial s^{[a]} x_a.
  static Mono decorated(const Charge& c) {
    SplitParts sp = split_parts(c);
    std::array<int32_t, kMaxRank> m{};
    for (int i = 0; i < kMaxRank; ++i) m[i] = sp.pos[i] + sp.neg[i];
    return make(c, m);
  }
};

// Element of the twisted group algebra of the lattice with formal s-variables,
// truncated at total s-degree `order`. Multiplication carries the sign
// (-1)^{<a,b>}; the algebra is commutative since the pairing is skew.
template <class C>
struct TruncSeries {
  const Lattice* lat = nullptr;
  int order = 0;
  std::map<Mono, C> terms;

  TruncSeries() = default;
  TruncSeries(const Lattice* l, int n) : lat(l), order(n) {}

  static TruncSeries zero(const Lattice* l, int n) { return TruncSeries(l, n); }
  static TruncSeries one(const Lattice* l, int n) {
    TruncSeries s(l, n);
    s.terms[Mono{}] = C(1);
    return s;
  }
  static TruncSeries monomial(const Lattice* l, int n, const Mono& m, C c = C(1)) {
    TruncSeries s(l, n);
    if (m.total_sdeg() <= n && !coeff_traits<C>::is_zero(c)) s.terms[m] = c;
    return s;
  }

  bool is_zero() const { return terms.empty(); }
  C coeff(const Mono& m) const {
    auto it = terms.find(m);
    return it == terms.end() ? C(0) : it->second;
  }
  void add_term(const Mono& m, const C& c) {
    if (m.total_sdeg() > order) return;
    auto [it, fresh] = terms.emplace(m, c);
    if (!fresh) {
      it->second += c;
      if (coeff_traits<C>::is_zero(it->second)) terms.erase(it);
    } else if (coeff_traits<C>::is_zero(c)) {
      terms.erase(it);
    }
  }

  // Lowest total s-degree present (order+1 when zero).
  int min_sdeg() const {
    int d = order + 1;
    for (const auto& [m, c] : terms) d = std::min(d, m.total_sdeg());
    return d;
  }

  TruncSeries& operator+=(const TruncSeries& o) {
    for (const auto& [m, c] : o.terms) add_term(m, c);
    return *this;
  }
  TruncSeries& operator-=(const TruncSeries& o) {
    for (const auto& [m, c] : o.terms) add_term(m, -c);
    return *this;
  }
  friend TruncSeries operator+(TruncSeries a, const TruncSeries& b) { return a += b; }
  friend TruncSeries operator-(TruncSeries a, const TruncSeries& b) { return a -= b; }
  TruncSeries operator-() const {
    TruncSeries r(lat, order);
    for (const auto& [m, c] : terms) r.terms[m] = -c;
    return r;
  }
  TruncSeries& scale(const C& c) {
    if (coeff_traits<C>::is_zero(c)) {
      terms.clear();
      return *this;
    }
    for (auto& [m, v] : terms) v *= c;
    return *this;
  }
  friend TruncSeries operator*(const C& c, TruncSeries s) { return s.scale(c); }

  friend TruncSeries operator*(const TruncSeries& a, const TruncSeries& b) {
    assert(a.lat == b.lat && a.order == b.order);
    TruncSeries r(a.lat, a.order);
    for (const auto& [ma, ca] : a.terms) {
      const int da = ma.total_sdeg();
      const Charge qa = ma.charge_vec();
      for (const auto& [mb, cb] : b.terms) {
        if (da + mb.total_sdeg() > a.order) continue;
        Mono m;
        bool ok = true;
        for (int i = 0; i < kMaxRank; ++i) {
          const int q = ma.charge[i] + mb.charge[i];
          const int s = ma.sdeg[i] + mb.sdeg[i];
          if (q < -127 || q > 127 || s > 255) {
            ok = false;
            break;
          }
          m.charge[i] = static_cast<int8_t>(q);
          m.sdeg[i] = static_cast<uint8_t>(s);
        }
        if (!ok) throw std::overflow_error("series product key overflow");
        C c = ca * cb;
        if (a.lat->mul_sign(qa, mb.charge_vec()) < 0) c = -c;
        r.add_term(m, c);
      }
    }
    return r;
  }
  TruncSeries& operator*=(const TruncSeries& o) { return *this = *this * o; }

  // Integer power; negative exponents go through the unit inverse.
  TruncSeries pow(int k) const {
    if (k < 0) return inverse().pow(-k);
    TruncSeries r = one(lat, order);
    TruncSeries base = *this;
    for (int e = k; e > 0; e >>= 1) {
      if (e & 1) r *= base;
      if (e > 1) base *= base;
    }
    return r;
  }

  // Inverse of a unit of the form c0 * x_q * (1 + u) with u of positive
  // s-degree: geometric series in u around the inverted leading monomial.
  TruncSeries inverse() const {
    // Identify the unique minimal-s-degree term.
    const Mono* lead = nullptr;
    for (const auto& [m, c] : terms) {
      if (m.total_sdeg() == 0) {
        if (lead) throw std::domain_error("series inverse: leading term not unique");
        lead = &m;
      }
    }
    if (!lead) throw std::domain_error("series inverse: no unit part");
    const C c0 = terms.at(*lead);
    const Charge q0 = lead->charge_vec();
    Mono inv_lead = Mono::pure_charge(-q0);
    // (c0 x_{q0})^{-1} = c0^{-1} x_{-q0}; x_q x_{-q} = 1 exactly (skew pairing).
    TruncSeries lead_inv = monomial(lat, order, inv_lead, C(1) / c0);
    TruncSeries u = lead_inv * (*this);
    u.add_term(Mono{}, C(-1));  // u = lead^{-1} * this - 1, s-degree >= 1
    TruncSeries acc = one(lat, order);
    TruncSeries up = one(lat, order);
    for (int k = 1; k <= order; ++k) {
      up *= u;
      if (up.is_zero()) break;
      acc += (k % 2 == 0) ? up : -up;
    }
    return lead_inv * acc;
  }

  // exp_* of an element of positive s-degree.
  TruncSeries exp_star() const {
    if (min_sdeg() < 1) throw std::domain_error("exp_star: argument must have s-degree >= 1");
    TruncSeries r = one(lat, order);
    TruncSeries p = one(lat, order);
    C fact(1);
    for (int k = 1; k <= order; ++k) {
      p *= *this;
      if (p.is_zero()) break;
      fact *= C(k);
      TruncSeries t = p;
      t.scale(C(1) / fact);
      r += t;
    }
    return r;
  }

  double max_abs_coeff() const {
    double v = 0;
    for (const auto& [m, c] : terms) v = std::max(v, coeff_traits<C>::abs_value(c));
    return v;
  }
};

// Scalar embedding helpers for binom_one_minus.
template <class C>
C coeff_scalar(const mpq_class& q) {
  return coeff_traits<C>::from_rational(q);
}
template <class C>
C coeff_scalar(const double& d) {
  return C(d);
}

// Generalized binomial (1 - t)^e for a scalar exponent e (rational in exact
// mode, real in floating mode) and t of positive s-degree.
template <class C, class E>
TruncSeries<C> binom_one_minus(const TruncSeries<C>& t, const E& e) {
  if (t.min_sdeg() < 1)
    throw std::domain_error("binom_one_minus: t must have s-degree >= 1");
  TruncSeries<C> r = TruncSeries<C>::one(t.lat, t.order);
  TruncSeries<C> tp = TruncSeries<C>::one(t.lat, t.order);
  E binom(1);  // C(e, k) built incrementally
  for (int k = 1; k <= t.order; ++k) {
    tp *= t;
    if (tp.is_zero()) break;
    binom = E(binom * (e - E(k - 1)) / E(k));
    TruncSeries<C> term = tp;
    term.scale(coeff_scalar<C>(binom));
    if (k % 2 == 1) term = -term;
    r += term;
  }
  return r;
}

// Poisson bracket induced by the pairing: bilinear extension of
// {x_a, x_b} = (-1)^{<a,b>} <a,b> x_{a+b} (s-degrees add).
template <class C>
TruncSeries<C> poisson_bracket(const TruncSeries<C>& a, const TruncSeries<C>& b) {
  assert(a.lat == b.lat && a.order == b.order);
  TruncSeries<C> r(a.lat, a.order);
  for (const auto& [ma, ca] : a.terms) {
    const Charge qa = ma.charge_vec();
    for (const auto& [mb, cb] : b.terms) {
      if (ma.total_sdeg() + mb.total_sdeg() > a.order) continue;
      const Charge qb = mb.charge_vec();
      const long long p = a.lat->pairing(qa, qb);
      if (p == 0) continue;
      std::array<int32_t, kMaxRank> m{};
      for (int i = 0; i < kMaxRank; ++i) m[i] = ma.sdeg[i] + mb.sdeg[i];
      C c = ca * cb * C(static_cast<int>(p));
      if (p & 1) c = -c;
      r.add_term(Mono::make(qa + qb, m), c);
    }
  }
  return r;
}

// Metric pairing: the charge-zero slice of g0 * a * b, returned as an
// s-series supported on charge 0.
template <class C>
TruncSeries<C> metric_pair(const TruncSeries<C>& a, const TruncSeries<C>& b, const C& g0) {
  // Diagonal pairing: generators of equal charge overlap, deformation degrees add.
  TruncSeries<C> r(a.lat, a.order);
  for (const auto& [ma, ca] : a.terms)
    for (const auto& [mb, cb] : b.terms) {
      if (ma.charge_vec() != mb.charge_vec()) continue;
      int total = 0;
      Mono m{};
      for (int i = 0; i < kMaxRank; ++i) {
        m.charge[i] = 0;
        int d = int(ma.sdeg[i]) + int(mb.sdeg[i]);
        m.sdeg[i] = static_cast<std::uint8_t>(d);
        total += d;
      }
      if (total > a.order) continue;
      r.add_term(m, g0 * ca * cb);
    }
  return r;
}

using DSeries = TruncSeries<std::complex<double>>;
using QSeries = TruncSeries<RatComplex>;

}  // namespace wallcross
