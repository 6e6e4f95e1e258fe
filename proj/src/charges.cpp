#include "wallcross/charges.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace wallcross {

Lattice Lattice::with_pairing(int rank, const std::vector<std::vector<int>>& m) {
  if (rank < 1 || rank > kMaxRank) throw std::invalid_argument("lattice rank out of range");
  Lattice l;
  l.rank = rank;
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) l.pairing_matrix[i][j] = m.at(i).at(j);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j)
      if (l.pairing_matrix[i][j] != -l.pairing_matrix[j][i])
        throw std::invalid_argument("pairing matrix is not skew-symmetric");
  return l;
}

CentralCharge CentralCharge::from_complex(const std::vector<std::complex<double>>& v) {
  CentralCharge zc;
  zc.rank = static_cast<int>(v.size());
  if (zc.rank > kMaxRank) throw std::invalid_argument("central charge rank out of range");
  for (int i = 0; i < zc.rank; ++i) zc.z[i] = v[i];
  return zc;
}

CentralCharge CentralCharge::from_rational(
    const std::vector<std::pair<mpq_class, mpq_class>>& v) {
  CentralCharge zc;
  zc.rank = static_cast<int>(v.size());
  if (zc.rank > kMaxRank) throw std::invalid_argument("central charge rank out of range");
  zc.exact = true;
  for (int i = 0; i < zc.rank; ++i) {
    zc.re_q[i] = v[i].first;
    zc.im_q[i] = v[i].second;
    zc.z[i] = {v[i].first.get_d(), v[i].second.get_d()};
  }
  return zc;
}

std::pair<mpq_class, mpq_class> CentralCharge::eval_exact(const Charge& a) const {
  if (!exact) throw std::logic_error("central charge has no exact data");
  mpq_class re = 0, im = 0;
  for (int i = 0; i < rank; ++i) {
    if (a[i] == 0) continue;
    re += a[i] * re_q[i];
    im += a[i] * im_q[i];
  }
  return {re, im};
}

bool CentralCharge::is_positive() const {
  for (int i = 0; i < rank; ++i) {
    if (exact) {
      if (im_q[i] <= 0) return false;
    } else if (!(z[i].imag() > 0.0)) {
      return false;
    }
  }
  return true;
}

CentralCharge CentralCharge::scaled(std::complex<double> c) const {
  CentralCharge r;
  r.rank = rank;
  r.exact = false;  // scaling by an arbitrary complex number leaves the exact field
  for (int i = 0; i < rank; ++i) r.z[i] = c * z[i];
  return r;
}

SupportReport check_support(const CentralCharge& zc, const std::vector<Charge>& support,
                            double c) {
  SupportReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const Charge& a : support) {
    if (is_zero(a)) continue;
    double n2 = 0;
    for (int i = 0; i < kMaxRank; ++i) n2 += static_cast<double>(a[i]) * a[i];
    double ratio = std::abs(zc.eval(a)) / std::sqrt(n2);
    if (ratio < rep.min_ratio) {
      rep.min_ratio = ratio;
      rep.worst = a;
    }
  }
  if (support.empty()) rep.min_ratio = 0.0;
  rep.ok = rep.min_ratio > c;
  return rep;
}

namespace {

// True when Z(a) and Z(b) lie on a common ray (positive proportional).
bool same_ray(const CentralCharge& zc, const Charge& a, const Charge& b) {
  if (zc.exact) {
    auto [ra, ia] = zc.eval_exact(a);
    auto [rb, ib] = zc.eval_exact(b);
    if (ra * ib != rb * ia) return false;           // not collinear
    return ra * rb + ia * ib > 0;                   // and pointing the same way
  }
  std::complex<double> za = zc.eval(a), zb = zc.eval(b);
  double na = std::abs(za), nb = std::abs(zb);
  if (na == 0.0 || nb == 0.0) return false;
  double cross = za.real() * zb.imag() - za.imag() * zb.real();
  double dot = za.real() * zb.real() + za.imag() * zb.imag();
  return std::abs(cross) <= kRayAngleTol * na * nb && dot > 0;
}

bool lattice_collinear(const Charge& a, const Charge& b) {
  for (int i = 0; i < kMaxRank; ++i)
    for (int j = i + 1; j < kMaxRank; ++j)
      if (static_cast<long long>(a[i]) * b[j] != static_cast<long long>(a[j]) * b[i])
        return false;
  return true;
}

bool in_upper_half(const CentralCharge& zc, const Charge& a) {
  if (zc.exact) {
    auto [re, im] = zc.eval_exact(a);
    (void)re;
    return im > 0;
  }
  return zc.eval(a).imag() > 0.0;
}

}  // namespace

bool is_strongly_generic(const CentralCharge& zc, const std::vector<Charge>& support) {
  for (std::size_t i = 0; i < support.size(); ++i)
    for (std::size_t j = i + 1; j < support.size(); ++j) {
      if (is_zero(support[i]) || is_zero(support[j])) continue;
      if (same_ray(zc, support[i], support[j]) &&
          !lattice_collinear(support[i], support[j]))
        return false;
    }
  return true;
}

RayDiagram clockwise_ray_order(const CentralCharge& zc, const std::vector<Charge>& support) {
  std::vector<std::vector<Charge>> groups;
  for (const Charge& a : support) {
    if (is_zero(a) || !in_upper_half(zc, a)) continue;
    bool placed = false;
    for (auto& g : groups)
      if (same_ray(zc, g.front(), a)) {
        g.push_back(a);
        placed = true;
        break;
      }
    if (!placed) groups.push_back({a});
  }
  RayDiagram diag;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    Ray r;
    std::complex<double> zv = zc.eval(g.front());
    r.dir = zv / std::abs(zv);
    r.charges = std::move(g);
    diag.rays.push_back(std::move(r));
  }
  // Clockwise: descending argument. Within the open upper half-plane the
  // counterclockwise-from relation is a strict order given by the cross
  // product, evaluated exactly when rational data is available.
  auto before = [&](const Ray& r1, const Ray& r2) {
    if (zc.exact) {
      auto [xa, ya] = zc.eval_exact(r1.charges.front());
      auto [xb, yb] = zc.eval_exact(r2.charges.front());
      return xb * ya - yb * xa > 0;  // r1 strictly counterclockwise of r2
    }
    return std::arg(r1.dir) > std::arg(r2.dir);
  };
  std::sort(diag.rays.begin(), diag.rays.end(), before);
  return diag;
}

}  // namespace wallcross
