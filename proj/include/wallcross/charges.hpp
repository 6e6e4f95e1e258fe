#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "wallcross/rational.hpp"

namespace wallcross {

inline constexpr int kMaxRank = 8;

// Lattice point in generator coordinates. Fixed-size storage (rank is carried
// by the Lattice); entries beyond the rank stay zero, so lexicographic
// comparison and arithmetic work uniformly.
using Charge = std::array<int32_t, kMaxRank>;

inline Charge charge_zero() { return Charge{}; }

inline Charge charge_unit(int i) {
  Charge c{};
  c[i] = 1;
  return c;
}

inline Charge charge_from(const std::vector<int>& v) {
  Charge c{};
  for (std::size_t i = 0; i < v.size() && i < kMaxRank; ++i) c[i] = v[i];
  return c;
}

inline Charge operator+(const Charge& a, const Charge& b) {
  Charge r{};
  for (int i = 0; i < kMaxRank; ++i) r[i] = a[i] + b[i];
  return r;
}
inline Charge operator-(const Charge& a, const Charge& b) {
  Charge r{};
  for (int i = 0; i < kMaxRank; ++i) r[i] = a[i] - b[i];
  return r;
}
inline Charge operator-(const Charge& a) {
  Charge r{};
  for (int i = 0; i < kMaxRank; ++i) r[i] = -a[i];
  return r;
}
inline Charge operator*(int k, const Charge& a) {
  Charge r{};
  for (int i = 0; i < kMaxRank; ++i) r[i] = k * a[i];
  return r;
}
inline bool is_zero(const Charge& a) {
  for (int v : a)
    if (v != 0) return false;
  return true;
}

// L1 norm: the decoration degree used by all truncation bookkeeping.
inline int charge_deg(const Charge& a) {
  int d = 0;
  for (int v : a) d += v < 0 ? -v : v;
  return d;
}

// Componentwise positive/negative parts ([a]_+ , [a]_-), both nonnegative.
struct SplitParts {
  std::array<int32_t, kMaxRank> pos{};
  std::array<int32_t, kMaxRank> neg{};
};
inline SplitParts split_parts(const Charge& a) {
  SplitParts s;
  for (int i = 0; i < kMaxRank; ++i) {
    s.pos[i] = a[i] > 0 ? a[i] : 0;
    s.neg[i] = a[i] < 0 ? -a[i] : 0;
  }
  return s;
}

// Largest k with a = k * a' for integral a' (0 for the zero charge).
inline int charge_content(const Charge& a) {
  int g = 0;
  for (int v : a) g = std::gcd(g, v < 0 ? -v : v);
  return g;
}

// Skew-symmetric integer pairing on the charge lattice.
struct Lattice {
  int rank = 0;
  std::array<std::array<int32_t, kMaxRank>, kMaxRank> pairing_matrix{};

  static Lattice with_pairing(int rank, const std::vector<std::vector<int>>& m);

  long long pairing(const Charge& a, const Charge& b) const {
    long long s = 0;
    for (int i = 0; i < rank; ++i) {
      if (a[i] == 0) continue;
      for (int j = 0; j < rank; ++j)
        s += static_cast<long long>(a[i]) * pairing_matrix[i][j] * b[j];
    }
    return s;
  }

  // Sign relating the x-monomial of a+b to the ordered product: parity of
  // the pairing, from the multiplication rule of the twisted algebra.
  int mul_sign(const Charge& a, const Charge& b) const {
    return (pairing(a, b) & 1) ? -1 : 1;
  }

  // Sign sigma(a) with x_a = sigma(a) * prod_i x_{gamma_i}^{a_i}:
  // parity of sum_{i<j} a_i a_j <gamma_i, gamma_j>.
  int normal_order_sign(const Charge& a) const {
    long long s = 0;
    for (int i = 0; i < rank; ++i)
      for (int j = i + 1; j < rank; ++j)
        s += static_cast<long long>(a[i]) * a[j] * pairing_matrix[i][j];
    return (s & 1) ? -1 : 1;
  }
};

// Central charge: a complex-linear functional on the lattice, stored on the
// generators. Optionally carries exact rational data (model files use exact
// values so chamber combinatorics can be decided without tolerances).
struct CentralCharge {
  int rank = 0;
  std::array<std::complex<double>, kMaxRank> z{};
  bool exact = false;
  std::array<mpq_class, kMaxRank> re_q{};
  std::array<mpq_class, kMaxRank> im_q{};

  static CentralCharge from_complex(const std::vector<std::complex<double>>& v);
  static CentralCharge from_rational(const std::vector<std::pair<mpq_class, mpq_class>>& v);

  std::complex<double> eval(const Charge& a) const {
    std::complex<double> s = 0;
    for (int i = 0; i < rank; ++i)
      if (a[i] != 0) s += static_cast<double>(a[i]) * z[i];
    return s;
  }
  // Exact real/imaginary parts of Z(a); only valid when exact.
  std::pair<mpq_class, mpq_class> eval_exact(const Charge& a) const;

  // Positivity: every generator maps into the upper half-plane.
  bool is_positive() const;

  CentralCharge scaled(std::complex<double> c) const;
};

// A ray of the diagram: a direction in the upper half-plane together with the
// supported charges mapped onto it, most divisible first.
struct Ray {
  std::complex<double> dir;  // unit vector
  std::vector<Charge> charges;
};

struct RayDiagram {
  std::vector<Ray> rays;  // clockwise order: descending argument in (0, pi)
};

// Support condition |Z(a)| > c * ||a||_2 over the given charges; returns the
// worst ratio |Z(a)| / ||a|| so callers can report margins.
struct SupportReport {
  bool ok = true;
  double min_ratio = 0.0;
  Charge worst{};
};
SupportReport check_support(const CentralCharge& zc, const std::vector<Charge>& support,
                            double c);

// Strong genericity: charges mapped to a common ray must be lattice-collinear.
// Uses exact arithmetic when the central charge carries rational data.
bool is_strongly_generic(const CentralCharge& zc, const std::vector<Charge>& support);

// Group the supported charges by ray in the upper half-plane and order the
// rays clockwise (argument descending from pi toward 0). Charges with
// Z(a) outside the open upper half-plane are ignored.
RayDiagram clockwise_ray_order(const CentralCharge& zc, const std::vector<Charge>& support);

// Angular tolerance for float-mode ray grouping.
inline constexpr double kRayAngleTol = 1e-9;

}  // namespace wallcross
