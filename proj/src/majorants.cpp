#include "wallcross/majorants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace wallcross {

Mono deformation_monomial(const Charge& d) {
  SplitParts sp = split_parts(d);
  std::array<int32_t, kMaxRank> m{};
  for (int i = 0; i < kMaxRank; ++i) m[i] = sp.pos[i] + sp.neg[i];
  return Mono::make(Charge{}, m);
}

template <class R>
TruncSeries<R> ComparisonFamily<R>::query(const Charge& b) const {
  TruncSeries<R> e(lat, order);
  for (std::size_t j = 0; j < support.size(); ++j) {
    long long p = lat->pairing(b, support[j]);
    if (p == 0) continue;
    R w = R(weight[j] * R(static_cast<long>(p < 0 ? -p : p)));
    TruncSeries<R> t =
        TruncSeries<R>::monomial(lat, order, deformation_monomial(support[j]), w);
    e += t * series[j];
  }
  return e.exp_star();
}

template <class R>
double ComparisonFamily<R>::distance(const ComparisonFamily& o) const {
  double d = 0.0;
  for (std::size_t j = 0; j < series.size(); ++j) {
    TruncSeries<R> diff = series[j] - o.series[j];
    d = std::max(d, diff.max_abs_coeff());
  }
  return d;
}

template <class R>
bool ComparisonFamily<R>::dominates(const ComparisonFamily& o) const {
  for (std::size_t j = 0; j < series.size(); ++j)
    for (const auto& [m, c] : o.series[j].terms)
      if (series[j].coeff(m) < c) return false;
  return true;
}

template <class R>
ComparisonFamily<R> comparison_family(const Lattice* lat, const QTable& omega, int order,
                                      const R& c1,
                                      const std::function<R(const Charge&)>& damping) {
  ComparisonFamily<R> f;
  f.lat = lat;
  f.order = order;
  ChargeTable<R> nu = abs_moebius_table<R>(omega, c1, order);
  for (const auto& [d, v] : nu) {
    R w = R(v * damping(d));
    if (w < R(0)) throw std::invalid_argument("comparison_family: negative weight");
    f.support.push_back(d);
    f.weight.push_back(w);
    f.series.push_back(TruncSeries<R>::one(lat, order));
  }
  return f;
}

DComparison comparison_family(const Lattice* lat, const Spectrum& sp, const CentralCharge& zc,
                              const ComparisonParams& par) {
  std::function<double(const Charge&)> damping = [&zc, par](const Charge& d) {
    return std::exp(-par.c2 * std::abs(zc.eval(d)) * par.lambda);
  };
  return comparison_family<double>(lat, sp.omega, par.order, par.c1, damping);
}

template <class R>
ComparisonFamily<R> comparison_step(const ComparisonFamily<R>& f) {
  ComparisonFamily<R> next = f;
  for (std::size_t j = 0; j < f.support.size(); ++j) {
    next.series[j] = f.query(f.support[j]);
    for (const auto& [m, c] : next.series[j].terms)
      if (c < R(0))
        throw std::logic_error("comparison_step: negative coefficient produced");
  }
  return next;
}

template <class R>
ComparisonFamily<R> iterate_comparison(ComparisonFamily<R> f, int count,
                                       IterationTrace* trace) {
  if (trace) *trace = IterationTrace{};
  for (int i = 0; i < count; ++i) {
    ComparisonFamily<R> next = comparison_step(f);
    if (trace) {
      trace->deltas.push_back(next.distance(f));
      trace->nondecreasing = trace->nondecreasing && next.dominates(f);
    }
    f = std::move(next);
  }
  return f;
}

namespace {

struct ScalarSystem {
  const Lattice* lat = nullptr;
  std::vector<Charge> support;
  std::vector<double> strength;  // |omega(a)|
  std::vector<double> q;         // exp(-c2 |Z(a)| lambda) rho^{deg a}
  double c1 = 0.0;

  // exp( sum_a |<b,a>| |omega(a)| * (-log(1 - c1 q_a sigma_a)) ), or NaN when
  // a log argument leaves the convergence domain.
  double apply(const Charge& b, const std::vector<double>& sigma) const {
    double e = 0.0;
    for (std::size_t j = 0; j < support.size(); ++j) {
      long long p = lat->pairing(b, support[j]);
      if (p == 0) continue;
      double arg = c1 * q[j] * sigma[j];
      if (arg >= 1.0) return std::numeric_limits<double>::quiet_NaN();
      e += static_cast<double>(p < 0 ? -p : p) * strength[j] * (-std::log1p(-arg));
    }
    return std::exp(e);
  }
};

}  // namespace

TailBound comparison_value(const Lattice* lat, const Spectrum& sp, const CentralCharge& zc,
                           const Charge& beta, double c1, double c2, double lambda,
                           double rho) {
  ScalarSystem sys;
  sys.lat = lat;
  sys.c1 = c1;
  for (const auto& [a, v] : sp.omega) {
    if (v == 0) continue;
    sys.support.push_back(a);
    sys.strength.push_back(std::abs(v.get_d()));
    sys.q.push_back(std::exp(-c2 * std::abs(zc.eval(a)) * lambda) *
                    std::pow(rho, charge_deg(a)));
  }
  TailBound out;
  out.radius = rho;
  out.lambda = lambda;
  std::vector<double> sigma(sys.support.size(), 1.0);
  const int kMaxIter = 10000;
  for (int it = 1; it <= kMaxIter; ++it) {
    std::vector<double> next(sigma.size());
    double delta = 0.0, peak = 0.0;
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      next[j] = sys.apply(sys.support[j], sigma);
      if (!std::isfinite(next[j]) || next[j] > 1e9) {
        out.iterations = it;
        return out;  // diverged
      }
      delta = std::max(delta, std::abs(next[j] - sigma[j]));
      peak = std::max(peak, next[j]);
    }
    sigma = std::move(next);
    if (delta <= 1e-13 * (1.0 + peak)) {
      out.iterations = it;
      out.converged = true;
      break;
    }
    if (it == kMaxIter) {
      out.iterations = it;
      return out;  // no fixpoint within budget
    }
  }
  double v = sys.apply(beta, sigma);
  if (!std::isfinite(v)) {
    out.converged = false;
    return out;
  }
  out.value = v;
  return out;
}

std::vector<BoundRow> comparison_report(const Lattice* lat, const Spectrum& sp,
                                        const CentralCharge& zc,
                                        const std::vector<Charge>& alphas,
                                        const std::vector<Charge>& betas, double c1, double c2,
                                        double lambda, double rho) {
  std::vector<BoundRow> rows;
  for (const Charge& b : betas) {
    TailBound t = comparison_value(lat, sp, zc, b, c1, c2, lambda, rho);
    for (const Charge& a : alphas) {
      BoundRow r;
      r.alpha = a;
      r.beta = b;
      r.bound = t.value;
      r.radius = t.radius;
      r.lambda = t.lambda;
      r.iterations = t.iterations;
      r.converged = t.converged;
      rows.push_back(r);
    }
  }
  return rows;
}

DominationReport domination_check(const DSeries& actual, const TruncSeries<double>& majorant,
                                  double dust) {
  DominationReport rep;
  std::map<std::array<uint8_t, kMaxRank>, double> grouped;
  for (const auto& [m, c] : actual.terms) grouped[m.sdeg] += std::abs(c);
  const std::array<uint8_t, kMaxRank> unit_key{};
  for (const auto& [sdeg, sum] : grouped) {
    if (sdeg == unit_key) continue;  // the unit term matches identically
    Mono key{};
    key.sdeg = sdeg;
    double m = majorant.coeff(key);
    ++rep.checked;
    if (m <= 0.0) {
      if (sum > dust) {
        rep.dominated = false;
        rep.worst_ratio = std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double ratio = sum / m;
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > 1.0) rep.dominated = false;
  }
  return rep;
}

template struct ComparisonFamily<double>;
template struct ComparisonFamily<mpq_class>;
template ComparisonFamily<double> comparison_family<double>(
    const Lattice*, const QTable&, int, const double&,
    const std::function<double(const Charge&)>&);
template ComparisonFamily<mpq_class> comparison_family<mpq_class>(
    const Lattice*, const QTable&, int, const mpq_class&,
    const std::function<mpq_class(const Charge&)>&);
template ComparisonFamily<double> comparison_step<double>(const ComparisonFamily<double>&);
template ComparisonFamily<mpq_class> comparison_step<mpq_class>(
    const ComparisonFamily<mpq_class>&);
template ComparisonFamily<double> iterate_comparison<double>(ComparisonFamily<double>, int,
                                                             IterationTrace*);
template ComparisonFamily<mpq_class> iterate_comparison<mpq_class>(ComparisonFamily<mpq_class>,
                                                                   int, IterationTrace*);

}  // namespace wallcross
