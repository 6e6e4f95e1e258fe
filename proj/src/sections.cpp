#include "wallcross/sections.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace wallcross {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

// Largest coefficient magnitude over terms with nonzero charge (charge-zero
// terms act trivially under the bracket and are invisible to derivations).
double nonzero_charge_max(const DSeries& s) {
  double m = 0;
  for (const auto& [mo, c] : s.terms)
    if (!is_zero(mo.charge_vec())) m = std::max(m, std::abs(c));
  return m;
}

double series_max(const DSeries& s) {
  double m = 0;
  for (const auto& [mo, c] : s.terms) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

FlatSectionEngine::FlatSectionEngine(const Lattice* lat, const Spectrum& spectrum,
                                     const CentralCharge& zc, double lambda, int order,
                                     QuadSpec spec)
    : lat_(lat),
      zc_(zc),
      lambda_(lambda),
      order_(order),
      engine_(lat, zc, lambda, RayIntegralEngine::Family::flat, spec) {
  if (order_ < 0) throw std::invalid_argument("section order must be nonnegative");
  if (!(lambda_ > 0)) throw std::invalid_argument("coupling must be positive");
  if (!zc_.is_positive())
    throw std::invalid_argument("central charge must map generators to the upper half-plane");

  // Divisor-closed invariant table restricted to the working degree.
  QTable closed;
  for (const auto& [a, v] : spectrum.omega) {
    if (v == 0) continue;
    int d = charge_deg(a);
    if (d == 0) continue;
    for (int k = 1; k * d <= order_; ++k) closed.emplace(k * a, spectrum.omega_of(k * a));
  }
  QTable rational = dt_from_omega(closed);
  for (const auto& [a, v] : rational) {
    if (v == 0) continue;
    dt_[a] = v.get_d();
    decorations_.push_back(a);
  }

  // Cap contour deformations at half the least gap between distinct rays.
  double clearance = engine_.tilt_clearance;
  for (std::size_t i = 0; i < decorations_.size(); ++i)
    for (std::size_t j = i + 1; j < decorations_.size(); ++j) {
      double g = angular_distance(std::arg(zc_.eval(decorations_[i])),
                                  std::arg(zc_.eval(decorations_[j])));
      if (g > 1e-9) clearance = std::min(clearance, g / 2);
    }
  engine_.tilt_clearance = clearance;

  for (const DecoratedTree& t : enumerate_trees(*lat_, decorations_, order_)) {
    TreeWeight<double> w = tree_weight<double>(*lat_, dt_, t);
    if (w.scalar == 0.0) continue;
    SectionTerm st;
    st.tree = t;
    bool any = false;
    for (int i = 0; i < lat_->rank; ++i) {
      st.pair_coeff[i] =
          w.scalar * static_cast<double>(lat_->pairing(charge_unit(i), w.root));
      any = any || st.pair_coeff[i] != 0.0;
    }
    if (!any) continue;
    DSeries u = DSeries::one(lat_, order_);
    auto visit = [&](auto&& self, const DecoratedTree& v) -> void {
      u *= DSeries::monomial(lat_, order_, Mono::decorated(v.dec));
      for (const DecoratedTree& c : v.children) self(self, c);
    };
    visit(visit, t);
    if (u.terms.size() != 1)
      throw std::logic_error("vertex monomial product must be a single term");
    st.mono = u.terms.begin()->first;
    st.mono_sign = u.terms.begin()->second.real();
    terms_.push_back(std::move(st));
  }
}

std::vector<DSeries> FlatSectionEngine::tree_sums(std::complex<double> z, bool derivative) {
  // The section samples the ray integrals at the antipodal point: this is the
  // unique choice for which the connection form collapses to a second-order
  // pole, a residue, and a constant, with no higher Taylor tail.
  std::vector<DSeries> e(lat_->rank, DSeries::zero(lat_, order_));
  for (const SectionTerm& st : terms_) {
    std::complex<double> h =
        derivative ? -engine_.dz(st.tree, -z) : engine_.value(st.tree, -z);
    std::complex<double> base = st.mono_sign * h;
    for (int i = 0; i < lat_->rank; ++i)
      if (st.pair_coeff[i] != 0.0) e[i].add_term(st.mono, st.pair_coeff[i] * base);
  }
  return e;
}

DMap FlatSectionEngine::section_from_sums(const std::vector<DSeries>& e) const {
  DMap y;
  y.lat = lat_;
  y.order = order_;
  y.im.reserve(lat_->rank);
  for (int i = 0; i < lat_->rank; ++i)
    y.im.push_back(
        DSeries::monomial(lat_, order_, Mono::pure_charge(charge_unit(i))) * e[i].exp_star());
  return y;
}

DMap FlatSectionEngine::section(std::complex<double> z) {
  return section_from_sums(tree_sums(z, false));
}

std::complex<double> FlatSectionEngine::model_coefficient(const Charge& q,
                                                          std::complex<double> z) const {
  std::complex<double> s = 0;
  for (int i = 0; i < lat_->rank; ++i)
    if (q[i] != 0)
      s += static_cast<double>(q[i]) *
           (-zc_.z[i] / (z * z) + lambda_ * lambda_ * std::conj(zc_.z[i]));
  return s;
}

DSeries FlatSectionEngine::apply_model(const DSeries& a, std::complex<double> z) const {
  DSeries r(lat_, order_);
  for (const auto& [m, c] : a.terms) r.add_term(m, c * model_coefficient(m.charge_vec(), z));
  return r;
}

DMap FlatSectionEngine::connection_from(const DMap& y, const DMap& yinv,
                                        const std::vector<DSeries>& eprime,
                                        std::complex<double> z) const {
  DMap a = DMap::zero_derivation(lat_, order_);
  for (int i = 0; i < lat_->rank; ++i) {
    const DSeries& s = yinv.im[i];
    DSeries dy = DSeries::zero(lat_, order_);
    for (const auto& [m, c] : s.terms) {
      Charge q = m.charge_vec();
      DSeries ep = DSeries::zero(lat_, order_);
      for (int j = 0; j < lat_->rank; ++j)
        if (q[j] != 0) {
          DSeries t = eprime[j];
          t.scale(std::complex<double>(static_cast<double>(q[j])));
          ep += t;
        }
      if (ep.is_zero()) continue;
      std::array<int32_t, kMaxRank> sdeg{};
      for (int k = 0; k < kMaxRank; ++k) sdeg[k] = m.sdeg[k];
      dy += DSeries::monomial(lat_, order_, Mono::make(Charge{}, sdeg), c) *
            (y.image_of_charge(q) * ep);
    }
    a.im[i] = dy + y.apply(apply_model(s, z));
  }
  return a;
}

DMap FlatSectionEngine::connection_form(std::complex<double> z) {
  std::vector<DSeries> e = tree_sums(z, false);
  DMap y = section_from_sums(e);
  DMap yinv = y.inverse_adic();
  std::vector<DSeries> ep = tree_sums(z, true);
  return connection_from(y, yinv, ep, z);
}

double FlatSectionEngine::flatness_residual(std::complex<double> z, double step) {
  DMap yp = section(z + step);
  DMap ym = section(z - step);
  DMap y = section(z);
  DMap a = connection_form(z);
  double denom = 1.0, num = 0.0;
  for (int i = 0; i < lat_->rank; ++i) {
    DSeries rhs = a.apply(y.im[i]);
    DSeries t = y.im[i];
    t.scale(model_coefficient(charge_unit(i), z));
    rhs -= t;
    DSeries fd = yp.im[i] - ym.im[i];
    fd.scale(std::complex<double>(1.0 / (2.0 * step)));
    num = std::max(num, series_max(fd - rhs));
    denom = std::max(denom, series_max(rhs));
  }
  return num / denom;
}

std::vector<double> FlatSectionEngine::ray_args() const {
  std::vector<double> args;
  for (const Charge& a : decorations_) {
    double t = std::arg(-zc_.eval(a));
    bool dup = false;
    for (double u : args)
      if (angular_distance(t, u) < 1e-9) dup = true;
    if (!dup) args.push_back(t);
  }
  std::sort(args.begin(), args.end());
  return args;
}

std::vector<std::complex<double>> FlatSectionEngine::sector_points(int count,
                                                                   double radius) const {
  std::vector<double> args = ray_args();
  std::vector<std::complex<double>> pts;
  pts.reserve(count);
  if (args.empty()) {
    for (int k = 0; k < count; ++k)
      pts.push_back(std::polar(radius, kTwoPi * (k + 0.5) / count));
    return pts;
  }
  const int nsec = static_cast<int>(args.size());
  for (int k = 0; k < count; ++k) {
    int s = k % nsec;
    double lo = args[s];
    double hi = s + 1 < nsec ? args[s + 1] : args[0] + kTwoPi;
    double width = hi - lo;
    double t = std::fmod(0.618033988749894 * (k + 1), 1.0);
    pts.push_back(std::polar(radius, lo + width * (0.25 + 0.5 * t)));
  }
  return pts;
}

LaurentData FlatSectionEngine::laurent(int points) {
  if (points < 8) throw std::invalid_argument("laurent: need at least 8 circle points");
  const double rho = 0.01 / lambda_;
  const std::vector<double> args = ray_args();

  // Rotate the sampling circle to keep every point clear of the rays.
  double offset = 0.0, best = -1.0;
  const double cell = kTwoPi / points;
  for (int j = 0; j < 64; ++j) {
    double o = cell * j / 64.0;
    double mingap = kTwoPi;
    for (int k = 0; k < points; ++k)
      for (double r : args) mingap = std::min(mingap, angular_distance(o + cell * k, r));
    if (mingap > best) {
      best = mingap;
      offset = o;
    }
  }

  DMap c2 = DMap::zero_derivation(lat_, order_);
  DMap c1 = DMap::zero_derivation(lat_, order_);
  DMap c0 = DMap::zero_derivation(lat_, order_);
  std::vector<DMap> maps;
  std::vector<std::complex<double>> zs;
  maps.reserve(points);
  zs.reserve(points);
  for (int k = 0; k < points; ++k) {
    std::complex<double> z = std::polar(rho, offset + cell * k);
    DMap a = connection_form(z);
    for (int i = 0; i < lat_->rank; ++i) {
      DSeries t = a.im[i];
      t.scale(z * z);
      c2.im[i] += t;
      t = a.im[i];
      t.scale(z);
      c1.im[i] += t;
      c0.im[i] += a.im[i];
    }
    maps.push_back(std::move(a));
    zs.push_back(z);
  }
  const std::complex<double> invm(1.0 / points);
  for (int i = 0; i < lat_->rank; ++i) {
    c2.im[i].scale(invm);
    c1.im[i].scale(invm);
    c0.im[i].scale(invm);
  }

  LaurentData ld;
  ld.radius = rho;
  ld.offset = offset;
  ld.points = points;

  double zmax = 1.0, zres = 0.0;
  for (int i = 0; i < lat_->rank; ++i) {
    DSeries expect = DSeries::monomial(lat_, order_, Mono::pure_charge(charge_unit(i)), -zc_.z[i]);
    zres = std::max(zres, series_max(c2.im[i] - expect));
    zmax = std::max(zmax, std::abs(zc_.z[i]));
  }
  ld.z2_residual = zres / zmax;
  if (ld.z2_residual > 1e-8)
    throw std::runtime_error(
        "laurent: second-order pole fails to reproduce the central charge diagonal");

  // Residual z-dependence of A + Z/z^2 - q/z.
  std::vector<DMap> combs;
  combs.reserve(points);
  DMap mean = DMap::zero_derivation(lat_, order_);
  for (int k = 0; k < points; ++k) {
    DMap comb = maps[k];
    std::complex<double> z = zs[k];
    for (int i = 0; i < lat_->rank; ++i) {
      comb.im[i].add_term(Mono::pure_charge(charge_unit(i)), zc_.z[i] / (z * z));
      DSeries t = c1.im[i];
      t.scale(-1.0 / z);
      comb.im[i] += t;
      mean.im[i] += comb.im[i];
    }
    combs.push_back(std::move(comb));
  }
  for (int i = 0; i < lat_->rank; ++i) mean.im[i].scale(invm);
  double denom = 1.0, num = 0.0;
  for (int i = 0; i < lat_->rank; ++i) denom = std::max(denom, series_max(mean.im[i]));
  for (const DMap& comb : combs)
    for (int i = 0; i < lat_->rank; ++i)
      num = std::max(num, series_max(comb.im[i] - mean.im[i]));
  ld.constancy = num / denom;

  ld.coeff_m2 = std::move(c2);
  ld.q = std::move(c1);
  ld.coeff_0 = std::move(c0);
  return ld;
}

// ---------------------------------------------------------------------------
// Inversion through the residue formula in 2n commuting variables.

namespace {

using XKey = std::array<std::uint8_t, 2 * kMaxRank>;

int xdeg(const XKey& k) {
  int d = 0;
  for (std::uint8_t v : k) d += v;
  return d;
}

// Truncated polynomial in the auxiliary variables (total degree <= cap).
struct XPoly {
  int cap = 0;
  std::map<XKey, std::complex<double>> t;

  static XPoly zero(int cap) { return XPoly{cap, {}}; }
  static XPoly constant(int cap, std::complex<double> c) {
    XPoly p{cap, {}};
    if (c != 0.0) p.t[XKey{}] = c;
    return p;
  }
  void add(const XKey& k, std::complex<double> c) {
    if (xdeg(k) > cap || c == 0.0) return;
    auto [it, fresh] = t.emplace(k, c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0.0) t.erase(it);
    }
  }
  XPoly& operator+=(const XPoly& o) {
    for (const auto& [k, c] : o.t) add(k, c);
    return *this;
  }
  XPoly& scale(std::complex<double> c) {
    if (c == 0.0) {
      t.clear();
      return *this;
    }
    for (auto& [k, v] : t) v *= c;
    return *this;
  }
  friend XPoly operator*(const XPoly& a, const XPoly& b) {
    XPoly r{a.cap, {}};
    for (const auto& [ka, ca] : a.t) {
      int da = xdeg(ka);
      for (const auto& [kb, cb] : b.t) {
        if (da + xdeg(kb) > a.cap) continue;
        XKey k;
        for (std::size_t i = 0; i < k.size(); ++i)
          k[i] = static_cast<std::uint8_t>(ka[i] + kb[i]);
        r.add(k, ca * cb);
      }
    }
    return r;
  }
  int min_deg() const {
    int d = cap + 1;
    for (const auto& [k, c] : t) {
      (void)c;
      d = std::min(d, xdeg(k));
    }
    return d;
  }
  // exp of a polynomial with no constant term.
  XPoly exp() const {
    if (min_deg() < 1) throw std::domain_error("xpoly exp: constant term present");
    XPoly r = constant(cap, 1.0);
    XPoly p = constant(cap, 1.0);
    double fact = 1.0;
    for (int k = 1; k <= cap; ++k) {
      p = p * *this;
      if (p.t.empty()) break;
      fact *= k;
      XPoly q = p;
      q.scale(1.0 / fact);
      r += q;
    }
    return r;
  }
  // Inverse of a polynomial with unit-like constant term.
  XPoly inverse() const {
    auto it = t.find(XKey{});
    if (it == t.end() || it->second == 0.0)
      throw std::domain_error("xpoly inverse: zero constant term");
    std::complex<double> c0 = it->second;
    XPoly u = *this;
    u.t.erase(XKey{});
    u.scale(-1.0 / c0);
    XPoly r = constant(cap, 1.0);
    XPoly p = constant(cap, 1.0);
    for (int k = 1; k <= cap; ++k) {
      p = p * u;
      if (p.t.empty()) break;
      r += p;
    }
    r.scale(1.0 / c0);
    return r;
  }
  // The operator w_q d/dw_q (diagonal on monomials).
  XPoly degree_weight(int q) const {
    XPoly r{cap, {}};
    for (const auto& [k, c] : t)
      if (k[q] != 0) r.add(k, c * static_cast<double>(k[q]));
    return r;
  }
  std::complex<double> coeff(const XKey& k) const {
    auto it = t.find(k);
    return it == t.end() ? std::complex<double>(0.0) : it->second;
  }
};

// Single coefficient of a product without forming it.
std::complex<double> product_coeff(const XPoly& a, const XPoly& b, const XKey& target) {
  std::complex<double> s = 0;
  for (const auto& [ka, ca] : a.t) {
    XKey kb;
    bool ok = true;
    for (std::size_t i = 0; i < kb.size(); ++i) {
      int d = static_cast<int>(target[i]) - static_cast<int>(ka[i]);
      if (d < 0) {
        ok = false;
        break;
      }
      kb[i] = static_cast<std::uint8_t>(d);
    }
    if (!ok) continue;
    s += ca * b.coeff(kb);
  }
  return s;
}

// Decode the monomial in the auxiliary variables as an algebra element:
// the ordered product of the corresponding decorated generators.
struct Decoder {
  const Lattice* lat;
  int nord;
  std::map<XKey, std::pair<Mono, double>> cache;

  std::pair<Mono, double> decode(const XKey& k) {
    auto it = cache.find(k);
    if (it != cache.end()) return it->second;
    DSeries p = DSeries::one(lat, nord);
    for (int i = 0; i < lat->rank; ++i) {
      for (int r = 0; r < k[i]; ++r)
        p *= DSeries::monomial(lat, nord, Mono::decorated(charge_unit(i)));
      for (int r = 0; r < k[kMaxRank + i]; ++r)
        p *= DSeries::monomial(lat, nord, Mono::decorated(-charge_unit(i)));
    }
    if (p.terms.size() != 1) throw std::logic_error("decode: expected one term");
    auto res = std::make_pair(p.terms.begin()->first, p.terms.begin()->second.real());
    cache.emplace(k, res);
    return res;
  }
};

XPoly encode(const DSeries& s, int cap, Decoder& dec) {
  XPoly p = XPoly::zero(cap);
  for (const auto& [m, c] : s.terms) {
    XKey k{};
    Charge q = m.charge_vec();
    for (int i = 0; i < kMaxRank; ++i) {
      int a = q[i], d = m.sdeg[i];
      if ((d + a) % 2 != 0 || d < std::abs(a))
        throw std::domain_error("encode: term outside the variable cone");
      k[i] = static_cast<std::uint8_t>((d + a) / 2);
      k[kMaxRank + i] = static_cast<std::uint8_t>((d - a) / 2);
    }
    double sign = dec.decode(k).second;
    p.add(k, c / sign);
  }
  return p;
}

// Determinant by elimination with unit pivots (entries are unipotent).
XPoly xdet(std::vector<std::vector<XPoly>> m) {
  const int sz = static_cast<int>(m.size());
  XPoly det = XPoly::constant(m[0][0].cap, 1.0);
  for (int k = 0; k < sz; ++k) {
    XPoly inv = m[k][k].inverse();
    det = det * m[k][k];
    for (int r = k + 1; r < sz; ++r) {
      if (m[r][k].t.empty()) continue;
      XPoly f = m[r][k] * inv;
      for (int c = k; c < sz; ++c) {
        XPoly sub = f * m[k][c];
        sub.scale(-1.0);
        m[r][c] += sub;
      }
    }
  }
  return det;
}

void enumerate_keys(int nvars, int cap, XKey& k, int pos, int used,
                    const std::function<void(const XKey&)>& fn) {
  if (pos == nvars) {
    fn(k);
    return;
  }
  for (int v = 0; v + used <= cap; ++v) {
    k[pos] = static_cast<std::uint8_t>(v);
    enumerate_keys(nvars, cap, k, pos + 1, used + v, fn);
  }
  k[pos] = 0;
}

}  // namespace

LagrangeReport invert_lagrange(const DMap& y) {
  if (y.kind != MapKind::automorphism)
    throw std::logic_error("invert_lagrange requires an automorphism");
  const Lattice* lat = y.lat;
  const int n = lat->rank;
  const int order = y.order;
  const int cap = order + 1;
  Decoder dec{lat, cap, {}};

  // Exponents of the generator images: y(x_i) = x_i exp(E_i).
  std::vector<XPoly> ep;  // E_p for p = 0..2n-1 (negative generators second)
  ep.reserve(2 * n);
  std::vector<XPoly> epos(n, XPoly::zero(cap));
  for (int i = 0; i < n; ++i) {
    DSeries u =
        y.im[i] * DSeries::monomial(lat, order, Mono::pure_charge(-charge_unit(i)));
    u.add_term(Mono{}, std::complex<double>(-1.0));
    if (!u.is_zero() && u.min_sdeg() < 1)
      throw std::domain_error("invert_lagrange: map is not unipotent");
    DSeries e = DSeries::zero(lat, order);
    DSeries p = DSeries::one(lat, order);
    for (int k = 1; k <= order; ++k) {
      p *= u;
      if (p.is_zero()) break;
      DSeries t = p;
      t.scale(std::complex<double>((k % 2 ? 1.0 : -1.0) / k));
      e += t;
    }
    epos[i] = encode(e, cap, dec);
  }
  for (int i = 0; i < n; ++i) ep.push_back(epos[i]);
  for (int i = 0; i < n; ++i) {
    XPoly m = epos[i];
    m.scale(-1.0);
    ep.push_back(m);
  }

  DMap adic = y.inverse_adic();
  LagrangeReport rep;
  double dist[2] = {0, 0};
  DMap cand[2];

  for (int conv = 0; conv < 2; ++conv) {
    const double es = conv == 0 ? -1.0 : 1.0;  // sign on the exponent
    // Determinant matrix delta_pq - es * w_q dE_p/dw_q.
    std::vector<std::vector<XPoly>> m(2 * n, std::vector<XPoly>(2 * n, XPoly::zero(cap)));
    for (int p = 0; p < 2 * n; ++p) {
      for (int q = 0; q < 2 * n; ++q) {
        int var = q < n ? q : kMaxRank + (q - n);
        XPoly d = ep[p].degree_weight(var);
        d.scale(-es);
        m[p][q] = d;
      }
      m[p][p] += XPoly::constant(cap, 1.0);
    }
    XPoly det = xdet(std::move(m));

    DMap inv;
    inv.lat = lat;
    inv.order = order;
    inv.im.assign(n, DSeries::zero(lat, order));
    XKey k{};
    enumerate_keys(2 * n, cap, k, 0, 0, [&](const XKey& kk) {
      if (xdeg(kk) == 0) return;
      // Map the packed index (positives then negatives) onto variable slots.
      XKey key{};
      for (int i = 0; i < n; ++i) {
        key[i] = kk[i];
        key[kMaxRank + i] = kk[n + i];
      }
      // Exponent sum(k_p E_p) with the convention sign.
      XPoly combo = XPoly::zero(cap);
      for (int p = 0; p < 2 * n; ++p) {
        if (kk[p] == 0) continue;
        XPoly t = ep[p];
        t.scale(es * static_cast<double>(kk[p]));
        combo += t;
      }
      XPoly ex = combo.exp();
      auto [mono, sign] = dec.decode(key);
      for (int i = 0; i < n; ++i) {
        if (key[i] == 0) continue;  // needs at least one positive factor
        XKey target = key;
        target[i] = static_cast<std::uint8_t>(target[i] - 1);
        std::complex<double> c = product_coeff(ex, det, target);
        if (c == 0.0) continue;
        // Decoded term, divided by one deformation power of slot i.
        std::array<int32_t, kMaxRank> sd{};
        for (int r = 0; r < kMaxRank; ++r) sd[r] = mono.sdeg[r];
        if (sd[i] < 1) throw std::logic_error("invert_lagrange: degree bookkeeping");
        sd[i] -= 1;
        int tot = 0;
        for (int r = 0; r < kMaxRank; ++r) tot += sd[r];
        if (tot > order) continue;
        inv.im[i].add_term(Mono::make(mono.charge_vec(), sd), sign * c);
      }
    });
    cand[conv] = std::move(inv);
    dist[conv] = adic.distance(cand[conv]);
  }

  const int pick = dist[0] <= dist[1] ? 0 : 1;
  rep.inverse = std::move(cand[pick]);
  rep.convention = pick;
  rep.adic_distance = dist[pick];
  rep.alt_distance = dist[1 - pick];
  return rep;
}

// ---------------------------------------------------------------------------

DSeries extract_ad_generator(const DMap& v, double* spread) {
  const Lattice* lat = v.lat;
  DSeries f = DSeries::zero(lat, v.order);
  double sp = 0.0;
  std::map<Mono, std::complex<double>> first;
  for (int j = 0; j < lat->rank; ++j) {
    const Charge gj = charge_unit(j);
    for (const auto& [m, c] : v.im[j].terms) {
      Charge alpha = m.charge_vec() - gj;
      if (is_zero(alpha)) {
        sp = std::max(sp, std::abs(c));
        continue;
      }
      long long pr = lat->pairing(alpha, gj);
      if (pr == 0) continue;
      double sign = pr % 2 == 0 ? 1.0 : -1.0;
      std::array<int32_t, kMaxRank> sd{};
      for (int r = 0; r < kMaxRank; ++r) sd[r] = m.sdeg[r];
      Mono key = Mono::make(alpha, sd);
      std::complex<double> val = c / (sign * static_cast<double>(pr));
      auto [it, fresh] = first.emplace(key, val);
      if (fresh)
        f.add_term(key, val);
      else
        sp = std::max(sp, std::abs(val - it->second));
    }
  }
  if (spread) *spread = sp;
  return f;
}

JoyceReport joyce_limit(const Lattice* lat, const Spectrum& spectrum, const CentralCharge& zc,
                        const std::vector<double>& lambdas, int order, QuadSpec spec) {
  if (lambdas.size() < 2)
    throw std::invalid_argument("joyce_limit: need at least two couplings");
  std::vector<double> ls = lambdas;
  std::sort(ls.begin(), ls.end(), std::greater<>());

  JoyceReport rep;
  rep.lambdas = ls;
  std::vector<DMap> qs;
  qs.reserve(ls.size());
  for (double l : ls) {
    FlatSectionEngine fse(lat, spectrum, zc, l, order, spec);
    rep.last = fse.laurent();
    qs.push_back(rep.last.q);
    double c0 = 0;
    for (int i = 0; i < lat->rank; ++i) c0 = std::max(c0, series_max(rep.last.coeff_0.im[i]));
    rep.c0_norms.push_back(c0);
  }

  const std::size_t m = qs.size();
  // Extrapolate to zero coupling. The small-coupling expansion of the
  // residue family runs over {l^2, l^2 log l, l^4, l^4 log l, ...}; the
  // weights below annihilate as many of those as the node count allows.
  const int nb = static_cast<int>(std::min<std::size_t>(m, 7));
  std::vector<double> node(ls.end() - nb, ls.end());
  auto basis = [](int k, double l) {
    const double l2 = l * l, lg = std::log(l);
    switch (k) {
      case 0: return 1.0;
      case 1: return l2;
      case 2: return l2 * lg;
      case 3: return l2 * l2;
      case 4: return l2 * l2 * lg;
      case 5: return l2 * l2 * lg * lg;
      default: return l2 * l2 * l2;
    }
  };
  std::vector<double> mat(nb * nb), rhsv(nb, 0.0);
  rhsv[0] = 1.0;
  for (int k = 0; k < nb; ++k)
    for (int i = 0; i < nb; ++i) mat[k * nb + i] = basis(k, node[i]);
  for (int k = 0; k < nb; ++k) {  // Gaussian elimination with partial pivoting
    int piv = k;
    for (int r = k + 1; r < nb; ++r)
      if (std::abs(mat[r * nb + k]) > std::abs(mat[piv * nb + k])) piv = r;
    for (int c = 0; c < nb; ++c) std::swap(mat[k * nb + c], mat[piv * nb + c]);
    std::swap(rhsv[k], rhsv[piv]);
    for (int r = k + 1; r < nb; ++r) {
      double fct = mat[r * nb + k] / mat[k * nb + k];
      for (int c = k; c < nb; ++c) mat[r * nb + c] -= fct * mat[k * nb + c];
      rhsv[r] -= fct * rhsv[k];
    }
  }
  std::vector<double> wts(nb);
  for (int k = nb - 1; k >= 0; --k) {
    double s = rhsv[k];
    for (int c = k + 1; c < nb; ++c) s -= mat[k * nb + c] * wts[c];
    wts[k] = s / mat[k * nb + k];
  }
  rep.v = DMap::zero_derivation(lat, order);
  for (int i = 0; i < nb; ++i) {
    const DMap& qi = qs[m - nb + i];
    for (int g = 0; g < lat->rank; ++g) {
      DSeries t = qi.im[g];
      t.scale(std::complex<double>(wts[i]));
      rep.v.im[g] += t;
    }
  }
  rep.distances.reserve(m);
  for (const DMap& q : qs) rep.distances.push_back(q.distance(rep.v));
  rep.monotone = true;
  for (std::size_t i = 1; i < m; ++i)
    if (!(rep.distances[i] < rep.distances[i - 1])) rep.monotone = false;
  rep.f = extract_ad_generator(rep.v, &rep.extraction_spread);
  return rep;
}

namespace {

// The bracket-weighted generator of the residue connection component j.
DSeries direction_weight(const DSeries& f, const CentralCharge& zc, int j) {
  DSeries r(f.lat, f.order);
  for (const auto& [m, c] : f.terms) {
    Charge a = m.charge_vec();
    if (is_zero(a) || a[j] == 0) continue;
    r.add_term(m, c * static_cast<double>(a[j]) / zc.eval(a));
  }
  return r;
}

CentralCharge shifted(const CentralCharge& zc, int j, double h) {
  std::vector<std::complex<double>> v(zc.z.begin(), zc.z.begin() + zc.rank);
  v[j] += h;
  return CentralCharge::from_complex(v);
}

}  // namespace

FrobeniusReport frobenius_residuals(const Lattice* lat, const Spectrum& spectrum,
                                    const CentralCharge& zc, const std::vector<double>& lambdas,
                                    int order, double step, QuadSpec spec) {
  const int n = lat->rank;
  FrobeniusReport rep;
  rep.step = step;

  DSeries fc = joyce_limit(lat, spectrum, zc, lambdas, order, spec).f;
  std::vector<DSeries> fp, fm;
  std::vector<CentralCharge> zp, zm;
  for (int j = 0; j < n; ++j) {
    zp.push_back(shifted(zc, j, step));
    zm.push_back(shifted(zc, j, -step));
    fp.push_back(joyce_limit(lat, spectrum, zp.back(), lambdas, order, spec).f);
    fm.push_back(joyce_limit(lat, spectrum, zm.back(), lambdas, order, spec).f);
  }

  std::vector<DSeries> aj;
  aj.reserve(n);
  for (int j = 0; j < n; ++j) aj.push_back(direction_weight(fc, zc, j));

  // Curvature: d_j A_k - d_k A_j + {A_j, A_k} must vanish.
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      DSeries djak = direction_weight(fp[j], zp[j], k) - direction_weight(fm[j], zm[j], k);
      djak.scale(std::complex<double>(1.0 / (2.0 * step)));
      DSeries dkaj = direction_weight(fp[k], zp[k], j) - direction_weight(fm[k], zm[k], j);
      dkaj.scale(std::complex<double>(1.0 / (2.0 * step)));
      DSeries kappa = djak - dkaj + poisson_bracket(aj[j], aj[k]);
      rep.flatness = std::max(rep.flatness, nonzero_charge_max(kappa));
    }

  // Covariant constancy of the limit derivation.
  for (int j = 0; j < n; ++j) {
    DSeries dfj = fp[j] - fm[j];
    dfj.scale(std::complex<double>(1.0 / (2.0 * step)));
    DSeries resid = dfj + poisson_bracket(aj[j], fc);
    rep.covariant_v = std::max(rep.covariant_v, nonzero_charge_max(resid));
  }

  // Test charges for the endomorphism identities.
  std::vector<Charge> test;
  for (int i = 0; i < n; ++i) {
    test.push_back(charge_unit(i));
    test.push_back(-charge_unit(i));
    for (int k = i + 1; k < n; ++k) {
      test.push_back(charge_unit(i) + charge_unit(k));
      test.push_back(charge_unit(i) - charge_unit(k));
      test.push_back(-charge_unit(i) - charge_unit(k));
      test.push_back(charge_unit(k) - charge_unit(i));
    }
  }

  // Torsion identity: [A_j, U] = [C_j, V] on test elements.
  for (int j = 0; j < n; ++j) {
    for (const Charge& b : test) {
      DSeries xb = DSeries::monomial(lat, order, Mono::pure_charge(b));
      DSeries ab = poisson_bracket(aj[j], xb);
      // [A_j, U](x_b): A_j(Z(b) x_b) - U(A_j x_b).
      DSeries t1 = xb;
      t1.scale(zc.eval(b));
      t1 = poisson_bracket(aj[j], t1);
      for (const auto& [m, c] : ab.terms) t1.add_term(m, -c * zc.eval(m.charge_vec()));
      // [C_j, V](x_b): C_j(V x_b) - V(C_j x_b).
      DSeries vb = poisson_bracket(fc, xb);
      DSeries t2(lat, order);
      for (const auto& [m, c] : vb.terms)
        t2.add_term(m, c * static_cast<double>(-(m.charge_vec()[j]) + b[j]));
      rep.higgs_torsion = std::max(rep.higgs_torsion, series_max(t1 - t2));
    }
  }

  // Skew-symmetry against the diagonal pairing.
  for (const Charge& a : test)
    for (const Charge& b : test) {
      DSeries xa = DSeries::monomial(lat, order, Mono::pure_charge(a));
      DSeries xb = DSeries::monomial(lat, order, Mono::pure_charge(b));
      DSeries r = metric_pair(poisson_bracket(fc, xa), xb, std::complex<double>(1.0)) +
                  metric_pair(xa, poisson_bracket(fc, xb), std::complex<double>(1.0));
      rep.g_skew = std::max(rep.g_skew, series_max(r));
    }

  // Quadratic differential equation for f.
  for (int j = 0; j < n; ++j) {
    DSeries fd = fp[j] - fm[j];
    fd.scale(std::complex<double>(1.0 / (2.0 * step)));
    DSeries rhs(lat, order);
    for (const auto& [mb, cb] : fc.terms) {
      Charge beta = mb.charge_vec();
      for (const auto& [mg, cg] : fc.terms) {
        Charge gamma = mg.charge_vec();
        if (gamma[j] == 0) continue;
        long long pr = lat->pairing(beta, gamma);
        if (pr == 0) continue;
        int tot = 0;
        std::array<int32_t, kMaxRank> sd{};
        for (int r = 0; r < kMaxRank; ++r) {
          sd[r] = int(mb.sdeg[r]) + int(mg.sdeg[r]);
          tot += sd[r];
        }
        if (tot > order) continue;
        double sign = pr % 2 == 0 ? 1.0 : -1.0;
        std::complex<double> w = cb * cg * sign * static_cast<double>(pr) *
                                 static_cast<double>(gamma[j]) / zc.eval(gamma);
        rhs.add_term(Mono::make(beta + gamma, sd), w);
      }
    }
    rep.quadratic_pde = std::max(rep.quadratic_pde, series_max(fd - rhs));
  }

  return rep;
}

}  // namespace wallcross
