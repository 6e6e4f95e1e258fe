#include "wallcross/stability.hpp"

#include <cmath>

namespace wallcross {

Spectrum Spectrum::from_entries(const std::vector<std::pair<Charge, mpq_class>>& entries,
                                bool close_under_negation) {
  Spectrum sp;
  for (const auto& [a, v] : entries) {
    if (is_zero(a)) throw std::invalid_argument("spectrum entry at charge zero");
    sp.omega[a] = v;
  }
  if (close_under_negation) {
    QTable closed = sp.omega;
    for (const auto& [a, v] : sp.omega) {
      auto it = closed.find(-a);
      if (it == closed.end())
        closed[-a] = v;
      else if (it->second != v)
        throw std::invalid_argument("negation closure conflicts with explicit entry");
    }
    sp.omega = std::move(closed);
    sp.doubled = true;
  }
  return sp;
}

std::vector<Charge> Spectrum::support() const {
  std::vector<Charge> s;
  for (const auto& [a, v] : omega)
    if (v != 0) s.push_back(a);
  return s;
}

int moebius_mu(int k) {
  if (k <= 0) throw std::invalid_argument("moebius_mu: positive argument required");
  int mu = 1;
  for (int p = 2; p * p <= k; ++p) {
    if (k % p == 0) {
      k /= p;
      if (k % p == 0) return 0;
      mu = -mu;
    }
  }
  if (k > 1) mu = -mu;
  return mu;
}

namespace {

// Divide a by k componentwise (caller guarantees divisibility).
Charge charge_div(const Charge& a, int k) {
  Charge r{};
  for (int i = 0; i < kMaxRank; ++i) r[i] = a[i] / k;
  return r;
}

}  // namespace

QTable dt_from_omega(const QTable& omega) {
  QTable dt;
  // Evaluated on the keys of the input table; divisor quotients that are not
  // listed contribute zero, so callers wanting the full divisor closure
  // should close the table first.
  for (const auto& [a, v] : omega) {
    (void)v;
    mpq_class s = 0;
    int g = charge_content(a);
    for (int k = 1; k <= g; ++k) {
      if (g % k != 0) continue;
      auto it = omega.find(charge_div(a, k));
      if (it != omega.end()) s += it->second / (k * k);
    }
    dt[a] = s;
  }
  return dt;
}

QTable omega_from_dt(const QTable& dt) {
  QTable om;
  for (const auto& [a, v] : dt) {
    (void)v;
    mpq_class s = 0;
    int g = charge_content(a);
    for (int k = 1; k <= g; ++k) {
      if (g % k != 0) continue;
      auto it = dt.find(charge_div(a, k));
      if (it != dt.end()) s += mpq_class(moebius_mu(k)) * it->second / (k * k);
    }
    om[a] = s;
  }
  return om;
}

ContinuityReport continuity_check(const Lattice* lat, int order, const Spectrum& left,
                                  const CentralCharge& z_left, const Spectrum& right,
                                  const CentralCharge& z_right) {
  QMap pl = ray_product<RatComplex, mpq_class>(lat, order, left.omega, z_left);
  QMap pr = ray_product<RatComplex, mpq_class>(lat, order, right.omega, z_right);
  ContinuityReport rep;
  rep.exact_zero = pl.equals(pr);
  rep.max_residual = pl.distance(pr);
  if (!rep.exact_zero) {
    for (int i = 0; i < lat->rank; ++i) {
      for (const auto& [m, c] : (pl.im[i] - pr.im[i]).terms) {
        if (coeff_traits<RatComplex>::is_zero(c)) continue;
        int d = 0;
        for (int k = 0; k < kMaxRank; ++k) d += m.sdeg[k];
        if (rep.first_failing_sdeg < 0 || d < rep.first_failing_sdeg)
          rep.first_failing_sdeg = d;
      }
    }
  }
  return rep;
}

GrowthReport growth_report(const Spectrum& sp, const CentralCharge& zc, double lambda,
                           int max_deg) {
  GrowthReport rep;
  rep.partial_sums.assign(max_deg, 0.0);
  double acc = 0.0;
  for (int d = 1; d <= max_deg; ++d) {
    for (const auto& [a, v] : sp.omega) {
      if (charge_deg(a) != d || v == 0) continue;
      acc += std::abs(v.get_d()) * std::exp(-lambda * std::abs(zc.eval(a)));
    }
    rep.partial_sums[d - 1] = acc;
  }
  rep.total = acc;
  if (max_deg >= 2) {
    double incr = rep.partial_sums[max_deg - 1] - rep.partial_sums[max_deg - 2];
    rep.stabilized = incr <= 1e-12 * std::max(1.0, rep.total);
  }
  return rep;
}

}  // namespace wallcross
