#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "wallcross/trees.hpp"

namespace wallcross {

// Discretization policy for the ray integrals after the saddle substitution
// w = dir * e^u / scale: trapezoid grid in u with step h, refined by halving
// until successive levels agree to tol. The half-width is derived from the
// weight e^{-2*sigma*cosh u} so the dropped tail is below tail_rel of the
// peak (this implements the "extend U" half of the refinement policy).
struct QuadSpec {
  double h = 0.05;
  double u_max = 6.0;
  double tol = 1e-10;
  double tilt = 1e-3;       // contour tilt (radians) for near-singular kernels
  int max_refine = 8;
  double tail_rel = 1e-30;  // relative weight below which nodes are dropped
};

struct PvSplit {
  std::complex<double> pv;     // symmetric-grid principal value
  std::complex<double> above;  // limit from the counterclockwise side
  std::complex<double> below;  // limit from the clockwise side
  std::complex<double> jump;   // above - below = residue factor
};

// Evaluator for the nested ray integrals attached to decorated trees.
//
// Family `flat` (scale = lambda): value(T, z) =
//   (1/2pi i) Int_{ray(dec)} (dw/w) (z/(w-z)) e^{-Z(dec)/w - lambda^2 conj(Z)(dec) w} Prod_j child_j(w)
// Family `coord` (scale = R): kernel (w+z)/(w-z), exponent -R Z(dec)/w - R conj(Z)(dec) w.
// Empty product over children; the empty tree is represented by value 1 and
// never enters (callers sum over nonempty trees).
class RayIntegralEngine {
 public:
  enum class Family { flat, coord };

  RayIntegralEngine(const Lattice* lat, const CentralCharge& zc, double scale,
                    Family family = Family::flat, QuadSpec spec = {});

  // Top-level integral at a point off the rays (automatic contour tilt when
  // z is angularly closer than spec.tilt to the root ray).
  std::complex<double> value(const DecoratedTree& t, std::complex<double> z);
  std::vector<std::complex<double>> values(const DecoratedTree& t,
                                           const std::vector<std::complex<double>>& zs);

  // z-expansion coefficients h_1..h_kmax (kernel w^{-k}).
  std::vector<std::complex<double>> z_coefficients(const DecoratedTree& t, int kmax);

  // d/dz of the top-level integral (kernel w/(w-z)^2).
  std::complex<double> dz(const DecoratedTree& t, std::complex<double> z);

  // Principal-value handling of a child integral evaluated at a parent node
  // sitting exactly on the child's ray.
  PvSplit pv_split(const DecoratedTree& child, std::complex<double> parent_node);

  // When false, non-convergent refinements return the last level instead of
  // throwing (used by diagnostic sweeps far outside the estimate hypothesis).
  bool strict = true;
  // Largest angle the contour may be rotated without crossing a neighbouring
  // ray of the model; callers that know the ray geometry should lower it.
  double tilt_clearance = 0.25;
  bool last_converged() const { return last_converged_; }
  int last_level() const { return last_level_; }

  const QuadSpec& spec() const { return spec_; }
  const CentralCharge& central_charge() const { return zc_; }
  double scale() const { return scale_; }

 private:
  struct NodeData {
    double h = 0;
    std::vector<double> u;
    std::vector<std::complex<double>> w;
    std::vector<std::complex<double>> pw;  // (h/2pi i) e^{-2 sigma cosh u} Prod child(w)
  };

  const Lattice* lat_;
  CentralCharge zc_;
  double scale_;
  Family family_;
  QuadSpec spec_;
  bool last_converged_ = false;
  int last_level_ = 0;
  std::map<std::string, NodeData> cache_;  // key: tree key + level + tilt code

  const NodeData& node_data(const DecoratedTree& t, int level, int tilt_steps);
  std::complex<double> child_at(const NodeData& nd, std::complex<double> z,
                                bool same_ray_pv, double u_pole) const;
  std::complex<double> pv_correction(const NodeData& nd, double u_pole) const;
  std::complex<double> top_sum(const NodeData& nd, std::complex<double> z) const;
  template <class F>
  std::vector<std::complex<double>> refine(const DecoratedTree& t, int tilt_steps, F&& eval);
  int tilt_steps_for(const DecoratedTree& t, std::complex<double> z) const;
};

// Empirical verification of the exponential tree-integral bound
// |H_T| <= C1^{n_T} exp(-C2 * sum_v |Z(dec v)| * lambda).
struct EstimateSample {
  std::string tree_key;
  int n_vertices = 0;
  double z_sum = 0;     // sum over vertices of |Z(dec)|
  double lambda = 0;
  double log_abs_h = 0;
  bool converged = true;
};

struct EstimateReport {
  double c1 = 0;
  double c2 = 0;
  double min_margin = 0;          // over samples, of n log C1 - C2 S lambda - log|H|
  bool monotone_margins = false;  // per-lambda worst margins nondecreasing
  bool all_converged = true;
  std::vector<EstimateSample> samples;
  std::vector<std::pair<double, double>> lambda_margins;  // (lambda, worst margin)
};

EstimateReport estimate_check(const Lattice* lat, const std::vector<DecoratedTree>& trees,
                              const CentralCharge& zc, const std::vector<double>& lambdas,
                              std::complex<double> z_star, const QuadSpec& spec);

}  // namespace wallcross
