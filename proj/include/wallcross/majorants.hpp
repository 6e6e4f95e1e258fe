#pragma once

#include <functional>
#include <vector>

#include "wallcross/stability.hpp"
#include "wallcross/trees.hpp"

namespace wallcross {

// Deformation monomial of a charge with the charge itself dropped: the
// comparison series live in the commutative ring of s-variables only.
Mono deformation_monomial(const Charge& d);

// Parameters of the comparison operator: per-vertex constant, exponential
// damping rate, coupling, and the truncation order of the s-variables.
struct ComparisonParams {
  double c1 = 1.0;
  double c2 = 1.0;
  double lambda = 1.0;
  int order = 4;
};

// Family of truncated commutative power series with nonnegative coefficients,
// one per charge of the divisor-closed, degree-bounded support. The weight of
// a support charge is nu_{c1}(d) * damping(d), where nu is the multiple-summed
// absolute invariant table (abs_moebius_table) and damping is exp(-c2|Z(d)|L)
// in floating runs or a caller-supplied surrogate in exact runs.
template <class R>
struct ComparisonFamily {
  const Lattice* lat = nullptr;
  int order = 0;
  std::vector<Charge> support;
  std::vector<R> weight;
  std::vector<TruncSeries<R>> series;

  // One application of the product operator to an arbitrary query charge:
  //   F[S]_b = prod_a (1 - c1 E(a) s^{[a]} S_a)^{-|<b,a>| |omega(a)|},
  // computed as exp of the fully log-expanded form, which regroups the k-th
  // powers into the weight table of the k-fold multiples.
  TruncSeries<R> query(const Charge& b) const;

  // Max absolute coefficient difference against another family over the
  // shared support (families must be aligned).
  double distance(const ComparisonFamily& o) const;

  // True when every coefficient of every member is >= the matching
  // coefficient of `o` (used to certify monotone growth of the iterates).
  bool dominates(const ComparisonFamily& o) const;
};

using DComparison = ComparisonFamily<double>;
using QComparison = ComparisonFamily<mpq_class>;

// Initial family (all members 1) over the divisor-closed support of the
// table, with per-charge damping supplied by the caller.
template <class R>
ComparisonFamily<R> comparison_family(const Lattice* lat, const QTable& omega, int order,
                                      const R& c1,
                                      const std::function<R(const Charge&)>& damping);

// Floating-point convenience: damping exp(-c2 |Z(d)| lambda).
DComparison comparison_family(const Lattice* lat, const Spectrum& sp, const CentralCharge& zc,
                              const ComparisonParams& par);

// One operator application to every member of the family. Throws logic_error
// if any produced coefficient is negative (the series must stay majorants).
template <class R>
ComparisonFamily<R> comparison_step(const ComparisonFamily<R>& f);

// Fixpoint trace: per-step max coefficient movement plus the monotone flag.
struct IterationTrace {
  std::vector<double> deltas;
  bool nondecreasing = true;
};

template <class R>
ComparisonFamily<R> iterate_comparison(ComparisonFamily<R> f, int count,
                                       IterationTrace* trace = nullptr);

// Value of the untruncated comparison series at the polydisc corner
// s_1 = ... = s_n = rho, computed through the scalar fixpoint
//   sigma_b = prod_a (1 - c1 q_a sigma_a)^{-|<b,a>| |omega(a)|},
//   q_a = exp(-c2 |Z(a)| lambda) rho^{deg a},
// over the spectrum support. Divergence of the monotone iteration (or a log
// argument reaching 1) is reported through `converged = false`.
struct TailBound {
  double value = 0.0;
  double radius = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

TailBound comparison_value(const Lattice* lat, const Spectrum& sp, const CentralCharge& zc,
                           const Charge& beta, double c1, double c2, double lambda,
                           double rho);

// Per-(alpha, beta) report rows: the certified bound is uniform in alpha (the
// corner value dominates every charge-graded matrix element of the expansion
// against x_beta); rows are emitted per queried pair for the report format.
struct BoundRow {
  Charge alpha{};
  Charge beta{};
  double bound = 0.0;
  double radius = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

std::vector<BoundRow> comparison_report(const Lattice* lat, const Spectrum& sp,
                                        const CentralCharge& zc,
                                        const std::vector<Charge>& alphas,
                                        const std::vector<Charge>& betas, double c1, double c2,
                                        double lambda, double rho);

// Termwise domination of a charge-graded series by a comparison series: for
// every nonzero s-multidegree, the sum of |coefficients| over charges at that
// multidegree must not exceed the comparison coefficient (the trivial unit
// term is skipped; both sides carry it identically). `worst_ratio` is the
// largest actual/majorant ratio encountered (0 when nothing to check).
struct DominationReport {
  double worst_ratio = 0.0;
  int checked = 0;
  bool dominated = true;
};

DominationReport domination_check(const DSeries& actual, const TruncSeries<double>& majorant,
                                  double dust = 1e-13);

}  // namespace wallcross
