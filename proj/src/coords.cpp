#include "wallcross/coords.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wallcross/trees.hpp"

namespace wallcross {

namespace {

double wrap_angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

Charge primitive_base(const Charge& a) {
  Charge r{};
  int g = charge_content(a);
  if (g == 0) return r;
  for (int i = 0; i < kMaxRank; ++i) r[i] = a[i] / g;
  return r;
}

Charge tree_total(const DecoratedTree& t) {
  Charge s = t.dec;
  for (const DecoratedTree& c : t.children) s = s + tree_total(c);
  return s;
}

TailReport tail_from_shells(const std::map<int, double>& shells) {
  TailReport rep;
  double prev = 0.0;
  for (const auto& [d, s] : shells) {
    ShellStats st;
    st.shell = d;
    st.abs_sum = s;
    if (!rep.shells.empty() && prev > 0.0) {
      st.ratio = s / prev;
      rep.worst_ratio = std::max(rep.worst_ratio, st.ratio);
      if (st.ratio >= 1.0) rep.converging = false;
    }
    prev = s;
    rep.shells.push_back(st);
  }
  return rep;
}

// Shared core: the DT table closed under positive multiples within the cap,
// the tree list, the per-tree kernel values, and the shell bookkeeping. When
// `filter` is set only trees totalling that charge are evaluated.
CoordSeries coord_core(const Lattice& lat, const Spectrum& spectrum,
                       const CentralCharge& zc, double radius,
                       std::complex<double> zeta, int cap,
                       const QuadSpec& spec, const Charge* filter) {
  CoordSeries cs;
  cs.radius = radius;
  cs.zeta = zeta;
  cs.cap = cap;

  QTable closed;
  for (const Charge& a : spectrum.support()) {
    Charge base = primitive_base(a);
    int d = charge_deg(base);
    if (d == 0) continue;
    for (int k = 1; k * d <= cap; ++k) closed.emplace(k * base, spectrum.omega_of(k * base));
  }
  QTable rational = dt_from_omega(closed);
  DTable dt;
  std::vector<Charge> decorations;
  for (const auto& [a, v] : rational) {
    if (v == 0) continue;
    dt[a] = v.get_d();
    decorations.push_back(a);
  }

  RayIntegralEngine eng(&lat, zc, radius, RayIntegralEngine::Family::coord, spec);
  eng.strict = false;
  double clearance = eng.tilt_clearance;
  for (std::size_t i = 0; i < decorations.size(); ++i)
    for (std::size_t j = i + 1; j < decorations.size(); ++j) {
      double g = wrap_angle_gap(std::arg(zc.eval(decorations[i])),
                                std::arg(zc.eval(decorations[j])));
      if (g > 1e-9) clearance = std::min(clearance, g / 2);
    }
  eng.tilt_clearance = clearance;

  // Saddle-proximity diagnostic for the twistor point.
  double ray_gap = 1e300;
  for (const Charge& a : decorations)
    ray_gap = std::min(ray_gap, wrap_angle_gap(std::arg(zeta), std::arg(zc.eval(a))));
  cs.zeta_flagged = std::abs(std::abs(zeta) - 1.0) < 0.05 && ray_gap < 0.05;

  // Accumulate per (total charge, decoration-degree shell), then reduce in
  // shell order so the summation order is the documented one.
  std::map<Charge, std::map<int, ChargeVector>> acc;
  std::map<Charge, std::map<int, double>> acc_abs;
  std::map<int, double> global_abs;
  for (const DecoratedTree& t : enumerate_trees(lat, decorations, cap)) {
    Charge total = tree_total(t);
    if (filter && !(total == *filter)) continue;
    TreeWeight<double> w = tree_weight<double>(lat, dt, t);
    if (w.scalar == 0.0) continue;
    std::complex<double> g = eng.value(t, zeta);
    cs.all_converged = cs.all_converged && eng.last_converged();
    std::complex<double> sc = w.scalar * g;
    ChargeVector& vec = acc[total][t.total_deg];
    for (int i = 0; i < lat.rank; ++i) vec[i] += sc * static_cast<double>(t.dec[i]);
    double m = std::abs(sc) * charge_deg(t.dec);
    acc_abs[total][t.total_deg] += m;
    global_abs[t.total_deg] += m;
  }
  for (const auto& [total, shells] : acc) {
    ChargeVector& vec = cs.table[total];
    for (const auto& [d, part] : shells)
      for (int i = 0; i < lat.rank; ++i) vec[i] += part[i];
    cs.tails[total] = tail_from_shells(acc_abs[total]);
  }
  cs.global = tail_from_shells(global_abs);
  return cs;
}

}  // namespace

std::complex<double> pair_vector(const Lattice& lat, const Charge& beta,
                                 const ChargeVector& v) {
  std::complex<double> s = 0.0;
  for (int j = 0; j < lat.rank; ++j)
    s += static_cast<double>(lat.pairing(beta, charge_unit(j))) * v[j];
  return s;
}

CoordSeries coord_series(const Lattice& lat, const Spectrum& spectrum,
                         const CentralCharge& zc, double radius,
                         std::complex<double> zeta, int cap,
                         const QuadSpec& spec) {
  return coord_core(lat, spectrum, zc, radius, zeta, cap, spec, nullptr);
}

CoordAlpha coord_alpha(const Lattice& lat, const Spectrum& spectrum,
                       const CentralCharge& zc, const Charge& alpha,
                       double radius, std::complex<double> zeta, int cap,
                       const QuadSpec& spec) {
  CoordSeries cs = coord_core(lat, spectrum, zc, radius, zeta, cap, spec, &alpha);
  CoordAlpha out;
  out.converged = cs.all_converged;
  auto it = cs.table.find(alpha);
  if (it != cs.table.end()) {
    out.value = it->second;
    out.tail = cs.tails[alpha];
  }
  return out;
}

DarbouxReport darboux_pair(const Lattice& lat, const CoordSeries& cs,
                           const Charge& beta,
                           const std::array<double, kMaxRank>& theta) {
  DarbouxReport rep;
  std::map<int, std::complex<double>> by_shell;
  for (const auto& [a, vec] : cs.table) {
    std::complex<double> p = pair_vector(lat, beta, vec);
    double mag = std::abs(p);
    if (mag > rep.uniform_bound) {
      rep.uniform_bound = mag;
      rep.bound_argmax = a;
      rep.bound_deg = charge_deg(a);
    }
    double phase = 0.0;
    for (int i = 0; i < lat.rank; ++i) phase += a[i] * theta[i];
    by_shell[charge_deg(a)] += p * std::exp(std::complex<double>(0.0, phase));
  }
  std::complex<double> run = 0.0;
  for (const auto& [d, s] : by_shell) {
    (void)d;
    run += s;
    rep.partials.push_back(run);
  }
  rep.value = run;
  return rep;
}

std::string coord_csv(const Lattice& lat, const CoordSeries& cs,
                      const Charge& beta) {
  std::string out = "alpha,re_pair,im_pair,shell,tail_ratio\n";
  char buf[200];
  for (const auto& [a, vec] : cs.table) {
    std::string col;
    for (int i = 0; i < lat.rank; ++i) {
      if (i) col += ' ';
      col += std::to_string(a[i]);
    }
    std::complex<double> p = pair_vector(lat, beta, vec);
    double ratio = 0.0;
    auto it = cs.tails.find(a);
    if (it != cs.tails.end()) ratio = it->second.worst_ratio;
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%d,%.17g\n", col.c_str(),
                  p.real(), p.imag(), charge_deg(a), ratio);
    out += buf;
  }
  return out;
}

}  // namespace wallcross
