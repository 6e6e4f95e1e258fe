#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "wallcross/quadrature.hpp"
#include "wallcross/stability.hpp"

namespace wallcross {

// Element of the complexified charge lattice, components in the charge basis.
using ChargeVector = std::array<std::complex<double>, kMaxRank>;

// <beta, v> extended complex-linearly in the second slot.
std::complex<double> pair_vector(const Lattice& lat, const Charge& beta,
                                 const ChargeVector& v);

// Absolute shell sums of a tree series, graded by total decoration degree.
// Each populated shell reports its ratio against the previous populated one;
// the series is deemed converging when every such ratio is below one.
struct ShellStats {
  int shell = 0;
  double abs_sum = 0.0;
  double ratio = 0.0;  // zero on the first populated shell
};

struct TailReport {
  std::vector<ShellStats> shells;
  double worst_ratio = 0.0;
  bool converging = true;
};

// Instanton-coordinate series at radius R and twistor point zeta: for every
// lattice vector `a` reachable as a total of tree decorations, the
// coefficient
//   c_a = sum over decorated trees T with total decoration a of
//         (1/|Aut T|) root(T) G_T(zeta) prod_{edges v->w} <dec v, dec w>
//         prod_v DT(dec v),
// where G_T is the nested coordinate-kernel ray integral at scale R and the
// DT table is the divisor-closed transform of the spectrum. Trees are
// truncated by total decoration degree <= cap and reduced shell by shell in
// degree order; the recorded tail metric of a contribution is the l1 charge
// norm |scalar * G_T| * deg(root T). The twistor point is flagged when it
// approaches the saddle circle |w| = 1 near an active ray, where the
// coordinate kernel degrades the quadrature (the contour tilt still
// applies; the flag is diagnostic).
struct CoordSeries {
  double radius = 0.0;
  std::complex<double> zeta{};
  int cap = 0;
  bool zeta_flagged = false;
  bool all_converged = true;
  std::map<Charge, ChargeVector> table;
  std::map<Charge, TailReport> tails;
  TailReport global;
};

CoordSeries coord_series(const Lattice& lat, const Spectrum& spectrum,
                         const CentralCharge& zc, double radius,
                         std::complex<double> zeta, int cap,
                         const QuadSpec& spec = {});

// Single-coefficient variant: only trees whose decorations total `alpha`.
struct CoordAlpha {
  ChargeVector value{};
  TailReport tail;
  bool converged = true;
};

CoordAlpha coord_alpha(const Lattice& lat, const Spectrum& spectrum,
                       const CentralCharge& zc, const Charge& alpha,
                       double radius, std::complex<double> zeta, int cap,
                       const QuadSpec& spec = {});

// Torus pairing of the coordinate series against a fixed beta: partial sums
// of <beta, c_a> e^{i theta_a} accumulated over shells of deg(a), with the
// fibre angle of `a` fixed as theta_a = sum_i a_i theta_i. Also reports the
// uniform bound max_a |<beta, c_a>| together with the vector attaining it.
struct DarbouxReport {
  std::vector<std::complex<double>> partials;  // cumulative, one per shell
  std::complex<double> value{};                // final partial sum
  double uniform_bound = 0.0;
  Charge bound_argmax{};
  int bound_deg = 0;
};

DarbouxReport darboux_pair(const Lattice& lat, const CoordSeries& cs,
                           const Charge& beta,
                           const std::array<double, kMaxRank>& theta);

// CSV rows "alpha,re_pair,im_pair,shell,tail_ratio" for the pairing against
// beta; the charge column is space-separated in the lattice basis, floats
// carry 17 significant digits.
std::string coord_csv(const Lattice& lat, const CoordSeries& cs,
                      const Charge& beta);

}  // namespace wallcross
