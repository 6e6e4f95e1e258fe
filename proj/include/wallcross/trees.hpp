#pragma once

#include <string>
#include <vector>

#include "wallcross/stability.hpp"

namespace wallcross {

// Rooted tree with charge decorations, kept in canonical form: children are
// sorted by their canonical keys, so equal keys mean isomorphic decorated
// trees. `aut` is the order of the decoration-preserving automorphism group.
struct DecoratedTree {
  Charge dec{};
  std::vector<DecoratedTree> children;
  std::string key;
  int vertex_count = 1;
  int total_deg = 0;
  int depth = 0;  // edge count of the longest root-to-leaf path
  long long aut = 1;

  static DecoratedTree make(const Charge& dec, std::vector<DecoratedTree> children);
  static DecoratedTree leaf(const Charge& dec) { return make(dec, {}); }
};

// A multiset of trees (disconnected configuration). `aut` includes the
// permutations of identical components.
struct Forest {
  std::vector<DecoratedTree> components;  // sorted by key
  std::string key;
  int vertex_count = 0;
  int total_deg = 0;
  int depth = 0;
  long long aut = 1;

  static Forest make(std::vector<DecoratedTree> components);
};

struct TreeEnumOptions {
  int max_vertices = -1;   // unlimited when negative
  int max_depth = -1;      // unlimited when negative
  bool allow_zero_pairing_edges = false;
};

// All canonical decorated trees with decorations drawn from `decorations`,
// total decoration degree <= budget. Edges whose endpoint decorations pair to
// zero are skipped by default (their weights vanish identically).
std::vector<DecoratedTree> enumerate_trees(const Lattice& lat,
                                           const std::vector<Charge>& decorations,
                                           int budget, const TreeEnumOptions& opts = {});

// All forests (including the empty one) assembled from the given trees.
std::vector<Forest> enumerate_forests(const std::vector<DecoratedTree>& trees, int budget,
                                      int max_depth = -1);

long long aut_order(const DecoratedTree& t);

// Signed weight: scalar * (root decoration), with
// scalar = dt(root)/|Aut| * prod_{edges v->w} <dec v, dec w> dt(dec w).
template <class R>
struct TreeWeight {
  R scalar{};
  Charge root{};
};

namespace detail {
template <class R>
R edge_factor(const Lattice& lat, const ChargeTable<R>& dt, const DecoratedTree& t) {
  R prod(1);
  for (const DecoratedTree& c : t.children) {
    auto it = dt.find(c.dec);
    if (it == dt.end()) return R(0);
    prod = R(prod * R(static_cast<int>(lat.pairing(t.dec, c.dec))) * it->second *
             edge_factor(lat, dt, c));
  }
  return prod;
}
}  // namespace detail

template <class R>
TreeWeight<R> tree_weight(const Lattice& lat, const ChargeTable<R>& dt,
                          const DecoratedTree& t) {
  TreeWeight<R> w;
  w.root = t.dec;
  auto it = dt.find(t.dec);
  if (it == dt.end()) return w;
  w.scalar = R(it->second * detail::edge_factor(lat, dt, t) / R(static_cast<int>(t.aut)));
  return w;
}

// Unsigned comparison weight: per-vertex multiple-summed |omega| weights with
// a deformation parameter attached per cover degree,
// nu_{c}(delta) = sum_{k | delta} c^k / k^2 * |omega(delta/k)|,
// and absolute pairings on edges.
template <class R>
ChargeTable<R> abs_moebius_table(const QTable& omega, const R& c, int max_deg);

template <class R>
TreeWeight<R> tree_weight_abs(const Lattice& lat, const ChargeTable<R>& nu,
                              const DecoratedTree& t);

// Tree-sum coefficients of ordered exponential expansions: sum over labelled
// trees on k vertices, edges oriented by the chosen convention, of
// prod_{i->j} (-1)^{<a_i,a_j>} <a_i, a_j>, divided by 2^{k-1}.
enum class EdgeOrientation { away_from_first, lower_to_higher };

mpq_class c_coefficient(const Lattice& lat, const std::vector<Charge>& args,
                        EdgeOrientation orientation);

// Labelled trees on k vertices as edge lists (Prüfer enumeration, k <= 8).
std::vector<std::vector<std::pair<int, int>>> labelled_trees(int k);

}  // namespace wallcross
