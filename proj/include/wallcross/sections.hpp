#pragma once

#include <complex>
#include <vector>

#include "wallcross/algebra_maps.hpp"
#include "wallcross/quadrature.hpp"
#include "wallcross/stability.hpp"
#include "wallcross/trees.hpp"

namespace wallcross {

// One decorated tree contributing to the section sum, with its weight data
// pre-evaluated: the pairing of each generator with the tree weight, and the
// product of the decorated vertex monomials (a single signed monomial).
struct SectionTerm {
  DecoratedTree tree;
  std::array<double, kMaxRank> pair_coeff{};  // <gamma_i, weight of the tree>
  Mono mono{};
  double mono_sign = 1.0;
};

// Laurent data of the connection form around z = 0: the three inner
// coefficients extracted on a small circle, plus consistency diagnostics.
struct LaurentData {
  DMap coeff_m2;  // coefficient of z^{-2}; must equal the -Z diagonal
  DMap q;         // coefficient of z^{-1}: the residue deformation
  DMap coeff_0;   // constant coefficient
  double z2_residual = 0.0;  // relative defect of coeff_m2 against -Z
  double constancy = 0.0;    // relative z-dependence of A + Z/z^2 - q/z
  double radius = 0.0;
  double offset = 0.0;  // angular offset of the sampling circle
  int points = 0;
};

// Flat sections of the family of connections attached to a stability datum:
// Y(x_b) = x_b exp(sum over decorated trees of <b, weight> H(z) u_T), the
// associated connection form A = (dY/dz + Y D) Y^{-1} with the diagonal model
// derivation D(x_d) = (-Z(d)/z^2 - lambda^2 conj(Z(d))) x_d, and the Laurent
// extraction of the inner coefficients on a small circle.
class FlatSectionEngine {
 public:
  FlatSectionEngine(const Lattice* lat, const Spectrum& spectrum, const CentralCharge& zc,
                    double lambda, int order, QuadSpec spec = {});

  // The automorphism Y at z (must lie off every active ray).
  DMap section(std::complex<double> z);
  // The derivation A at z.
  DMap connection_form(std::complex<double> z);
  // Relative defect of the finite-difference derivative of Y against
  // A Y - Y D at z (central difference with the given step).
  double flatness_residual(std::complex<double> z, double step = 1e-5);

  LaurentData laurent(int points = 64);

  // Diagonal scalar of the model derivation on a charge, at z.
  std::complex<double> model_coefficient(const Charge& q, std::complex<double> z) const;

  // Points spread over distinct angular sectors between consecutive active
  // rays (deterministic; sector index advances round-robin).
  std::vector<std::complex<double>> sector_points(int count, double radius) const;

  const std::vector<SectionTerm>& terms() const { return terms_; }
  const std::vector<Charge>& decorations() const { return decorations_; }
  std::vector<double> ray_args() const;
  RayIntegralEngine& integrals() { return engine_; }
  int order() const { return order_; }
  double coupling() const { return lambda_; }
  const CentralCharge& central_charge() const { return zc_; }

 private:
  const Lattice* lat_;
  CentralCharge zc_;
  double lambda_;
  int order_;
  DTable dt_;
  std::vector<Charge> decorations_;
  std::vector<SectionTerm> terms_;
  RayIntegralEngine engine_;

  // Generator tree sums E_i (and their z-derivatives E_i') at z.
  std::vector<DSeries> tree_sums(std::complex<double> z, bool derivative);
  DMap section_from_sums(const std::vector<DSeries>& e) const;
  DSeries apply_model(const DSeries& a, std::complex<double> z) const;
  DMap connection_from(const DMap& y, const DMap& yinv, const std::vector<DSeries>& eprime,
                       std::complex<double> z) const;
};

// Inverse of a unipotent automorphism through the multivariate residue
// formula in 2n auxiliary variables, with both sign conventions evaluated;
// the one matching the adic inverse is selected and recorded.
struct LagrangeReport {
  DMap inverse;
  int convention = 0;      // 0: exponent -sum k E, determinant 1 + w dE
  double adic_distance = 0.0;
  double alt_distance = 0.0;  // distance of the rejected convention
};
LagrangeReport invert_lagrange(const DMap& y);

// Richardson limit of the residue deformation as the coupling is lowered.
struct JoyceReport {
  DMap v;                         // extrapolated limit of q
  DSeries f;                      // generator: v = ad(f)
  std::vector<double> lambdas;    // descending
  std::vector<double> distances;  // ||q(lambda) - v|| per lambda
  std::vector<double> c0_norms;   // lambda^2-weighted constant coefficient
  bool monotone = false;          // distances strictly decreasing
  double extraction_spread = 0.0;  // cross-generator disagreement in f
  LaurentData last;                // Laurent data at the smallest lambda
};
JoyceReport joyce_limit(const Lattice* lat, const Spectrum& spectrum, const CentralCharge& zc,
                        const std::vector<double>& lambdas, int order, QuadSpec spec = {});

// Residuals of the structural identities satisfied by the limit data on a
// grid of stability parameters (central differences with the given step):
// curvature of the residue connection, covariant constancy of v, the Higgs
// torsion identity, skew-symmetry against the diagonal pairing, and the
// quadratic differential equation for f.
struct FrobeniusReport {
  double flatness = 0.0;
  double covariant_v = 0.0;
  double higgs_torsion = 0.0;
  double g_skew = 0.0;
  double quadratic_pde = 0.0;
  double step = 0.0;
};
FrobeniusReport frobenius_residuals(const Lattice* lat, const Spectrum& spectrum,
                                    const CentralCharge& zc, const std::vector<double>& lambdas,
                                    int order, double step, QuadSpec spec = {});

// Extract f with v = ad(f) from a derivation, reading each charge component
// off the lexicographically first generator with nonvanishing pairing;
// `spread` (if given) receives the worst cross-generator disagreement.
DSeries extract_ad_generator(const DMap& v, double* spread = nullptr);

}  // namespace wallcross
