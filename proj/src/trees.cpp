#include "wallcross/trees.hpp"

#include <algorithm>
#include <map>

namespace wallcross {

namespace {

// Fixed-width binary encoding of a charge (one byte per coordinate, biased).
void append_charge(std::string& s, const Charge& c) {
  for (int i = 0; i < kMaxRank; ++i)
    s.push_back(static_cast<char>(static_cast<unsigned char>(c[i] + 128)));
}

}  // namespace

DecoratedTree DecoratedTree::make(const Charge& dec, std::vector<DecoratedTree> children) {
  DecoratedTree t;
  t.dec = dec;
  std::sort(children.begin(), children.end(),
            [](const DecoratedTree& a, const DecoratedTree& b) { return a.key < b.key; });
  t.children = std::move(children);
  t.total_deg = charge_deg(dec);
  t.vertex_count = 1;
  t.depth = 0;
  t.key.clear();
  append_charge(t.key, dec);
  t.key.push_back('(');
  long long aut = 1;
  std::size_t i = 0;
  while (i < t.children.size()) {
    std::size_t j = i;
    while (j < t.children.size() && t.children[j].key == t.children[i].key) ++j;
    long long m = static_cast<long long>(j - i);
    for (long long f = 2; f <= m; ++f) aut *= f;
    for (std::size_t u = i; u < j; ++u) aut *= t.children[u].aut;
    i = j;
  }
  for (const DecoratedTree& c : t.children) {
    t.key += c.key;
    t.vertex_count += c.vertex_count;
    t.total_deg += c.total_deg;
    t.depth = std::max(t.depth, c.depth + 1);
  }
  t.key.push_back(')');
  t.aut = aut;
  return t;
}

Forest Forest::make(std::vector<DecoratedTree> components) {
  Forest f;
  std::sort(components.begin(), components.end(),
            [](const DecoratedTree& a, const DecoratedTree& b) { return a.key < b.key; });
  f.components = std::move(components);
  long long aut = 1;
  std::size_t i = 0;
  while (i < f.components.size()) {
    std::size_t j = i;
    while (j < f.components.size() && f.components[j].key == f.components[i].key) ++j;
    long long m = static_cast<long long>(j - i);
    for (long long fk = 2; fk <= m; ++fk) aut *= fk;
    for (std::size_t u = i; u < j; ++u) aut *= f.components[u].aut;
    i = j;
  }
  f.aut = aut;
  f.key.push_back('[');
  for (const DecoratedTree& c : f.components) {
    f.key += c.key;
    f.vertex_count += c.vertex_count;
    f.total_deg += c.total_deg;
    f.depth = std::max(f.depth, c.depth);
  }
  f.key.push_back(']');
  return f;
}

long long aut_order(const DecoratedTree& t) { return t.aut; }

namespace {

struct TreeEnumerator {
  const Lattice& lat;
  const std::vector<Charge>& decorations;
  TreeEnumOptions opts;
  std::map<int, std::vector<DecoratedTree>> memo;

  const std::vector<DecoratedTree>& trees_up_to(int budget) {
    auto it = memo.find(budget);
    if (it != memo.end()) return it->second;
    std::vector<DecoratedTree> out;
    for (const Charge& d : decorations) {
      int dd = charge_deg(d);
      if (dd < 1 || dd > budget) continue;
      const std::vector<DecoratedTree>& pool = trees_up_to(budget - dd);
      std::vector<DecoratedTree> chosen;
      pick_children(d, pool, 0, budget - dd, chosen, out);
    }
    std::sort(out.begin(), out.end(),
              [](const DecoratedTree& a, const DecoratedTree& b) { return a.key < b.key; });
    return memo.emplace(budget, std::move(out)).first->second;
  }

  void pick_children(const Charge& root, const std::vector<DecoratedTree>& pool,
                     std::size_t idx, int remaining, std::vector<DecoratedTree>& chosen,
                     std::vector<DecoratedTree>& out) {
    DecoratedTree t = DecoratedTree::make(root, chosen);
    if ((opts.max_vertices < 0 || t.vertex_count <= opts.max_vertices) &&
        (opts.max_depth < 0 || t.depth <= opts.max_depth))
      out.push_back(std::move(t));
    for (std::size_t j = idx; j < pool.size(); ++j) {
      const DecoratedTree& c = pool[j];
      if (c.total_deg > remaining) continue;
      if (!opts.allow_zero_pairing_edges && lat.pairing(root, c.dec) == 0) continue;
      if (opts.max_vertices > 0) {
        int used = 1 + c.vertex_count;
        for (const DecoratedTree& x : chosen) used += x.vertex_count;
        if (used > opts.max_vertices) continue;
      }
      chosen.push_back(c);
      pick_children(root, pool, j, remaining - c.total_deg, chosen, out);
      chosen.pop_back();
    }
  }
};

}  // namespace

std::vector<DecoratedTree> enumerate_trees(const Lattice& lat,
                                           const std::vector<Charge>& decorations,
                                           int budget, const TreeEnumOptions& opts) {
  TreeEnumerator e{lat, decorations, opts, {}};
  std::vector<DecoratedTree> out = e.trees_up_to(budget);
  // Deduplicate: different construction orders can produce the same canonical
  // tree only if the decoration list has duplicates; guard anyway.
  out.erase(std::unique(out.begin(), out.end(),
                        [](const DecoratedTree& a, const DecoratedTree& b) {
                          return a.key == b.key;
                        }),
            out.end());
  return out;
}

std::vector<Forest> enumerate_forests(const std::vector<DecoratedTree>& trees, int budget,
                                      int max_depth) {
  std::vector<DecoratedTree> pool;
  for (const DecoratedTree& t : trees)
    if (t.total_deg <= budget && (max_depth < 0 || t.depth <= max_depth)) pool.push_back(t);
  std::sort(pool.begin(), pool.end(),
            [](const DecoratedTree& a, const DecoratedTree& b) { return a.key < b.key; });
  std::vector<Forest> out;
  std::vector<DecoratedTree> chosen;
  struct Rec {
    const std::vector<DecoratedTree>& pool;
    std::vector<Forest>& out;
    void operator()(std::size_t idx, int remaining, std::vector<DecoratedTree>& chosen) {
      out.push_back(Forest::make(chosen));
      for (std::size_t j = idx; j < pool.size(); ++j) {
        if (pool[j].total_deg > remaining) continue;
        chosen.push_back(pool[j]);
        (*this)(j, remaining - pool[j].total_deg, chosen);
        chosen.pop_back();
      }
    }
  } rec{pool, out};
  rec(0, budget, chosen);
  return out;
}

template <class R>
ChargeTable<R> abs_moebius_table(const QTable& omega, const R& c, int max_deg) {
  // Support: all multiples k*a of listed charges with degree within bound.
  ChargeTable<R> nu;
  std::map<Charge, bool> targets;
  for (const auto& [a, v] : omega) {
    if (v == 0) continue;
    for (int k = 1; k * charge_deg(a) <= max_deg; ++k) targets[k * a] = true;
  }
  for (const auto& [d, flag] : targets) {
    (void)flag;
    R s(0);
    int g = charge_content(d);
    R ck = c;
    for (int k = 1; k <= g; ++k, ck = R(ck * c)) {
      if (g % k != 0) continue;
      Charge q{};
      for (int i = 0; i < kMaxRank; ++i) q[i] = d[i] / k;
      auto it = omega.find(q);
      if (it == omega.end() || it->second == 0) continue;
      mpq_class a = abs(it->second);
      s = R(s + ck * rat_to<R>(a) / R(k * k));
    }
    if (!(s == R(0))) nu[d] = s;
  }
  return nu;
}

namespace {
template <class R>
R edge_abs_factor(const Lattice& lat, const ChargeTable<R>& nu, const DecoratedTree& t) {
  R prod(1);
  for (const DecoratedTree& c : t.children) {
    auto it = nu.find(c.dec);
    if (it == nu.end()) return R(0);
    long long p = lat.pairing(t.dec, c.dec);
    if (p < 0) p = -p;
    prod = R(prod * R(static_cast<int>(p)) * it->second * edge_abs_factor(lat, nu, c));
  }
  return prod;
}
}  // namespace

template <class R>
TreeWeight<R> tree_weight_abs(const Lattice& lat, const ChargeTable<R>& nu,
                              const DecoratedTree& t) {
  TreeWeight<R> w;
  w.root = t.dec;
  auto it = nu.find(t.dec);
  if (it == nu.end()) return w;
  w.scalar = R(it->second * edge_abs_factor(lat, nu, t) / R(static_cast<int>(t.aut)));
  return w;
}

template ChargeTable<double> abs_moebius_table<double>(const QTable&, const double&, int);
template ChargeTable<mpq_class> abs_moebius_table<mpq_class>(const QTable&, const mpq_class&,
                                                             int);
template TreeWeight<double> tree_weight_abs<double>(const Lattice&,
                                                    const ChargeTable<double>&,
                                                    const DecoratedTree&);
template TreeWeight<mpq_class> tree_weight_abs<mpq_class>(const Lattice&,
                                                          const ChargeTable<mpq_class>&,
                                                          const DecoratedTree&);

std::vector<std::vector<std::pair<int, int>>> labelled_trees(int k) {
  std::vector<std::vector<std::pair<int, int>>> out;
  if (k <= 0 || k > 8) throw std::invalid_argument("labelled_trees: k out of range");
  if (k == 1) {
    out.push_back({});
    return out;
  }
  // Decode every Prüfer sequence of length k-2 over {0..k-1}.
  std::vector<int> seq(std::max(0, k - 2), 0);
  auto decode = [&]() {
    std::vector<int> deg(k, 1);
    for (int v : seq) ++deg[v];
    std::vector<std::pair<int, int>> edges;
    std::vector<bool> used(k, false);
    for (int v : seq) {
      for (int u = 0; u < k; ++u)
        if (deg[u] == 1 && !used[u]) {
          edges.emplace_back(u, v);
          used[u] = true;
          --deg[v];
          break;
        }
    }
    std::vector<int> last;
    for (int u = 0; u < k; ++u)
      if (!used[u] && deg[u] == 1) last.push_back(u);
    edges.emplace_back(last[0], last[1]);
    return edges;
  };
  // Iterate all k^{k-2} sequences.
  while (true) {
    out.push_back(decode());
    int i = static_cast<int>(seq.size()) - 1;
    while (i >= 0 && seq[i] == k - 1) seq[i--] = 0;
    if (i < 0) break;
    ++seq[i];
  }
  return out;
}

mpq_class c_coefficient(const Lattice& lat, const std::vector<Charge>& args,
                        EdgeOrientation orientation) {
  const int k = static_cast<int>(args.size());
  if (k == 0) throw std::invalid_argument("c_coefficient: empty argument list");
  if (k == 1) return 1;
  mpq_class total = 0;
  for (const auto& edges : labelled_trees(k)) {
    // Orient the edges.
    std::vector<std::pair<int, int>> directed;
    if (orientation == EdgeOrientation::lower_to_higher) {
      for (auto [u, v] : edges) directed.emplace_back(std::min(u, v), std::max(u, v));
    } else {
      // BFS from vertex 0, direct away from it.
      std::vector<std::vector<int>> adj(k);
      for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
      }
      std::vector<int> order{0};
      std::vector<bool> seen(k, false);
      seen[0] = true;
      for (std::size_t h = 0; h < order.size(); ++h) {
        int u = order[h];
        for (int v : adj[u])
          if (!seen[v]) {
            seen[v] = true;
            directed.emplace_back(u, v);
            order.push_back(v);
          }
      }
    }
    mpq_class prod = 1;
    for (auto [u, v] : directed) {
      long long p = lat.pairing(args[u], args[v]);
      mpq_class f = static_cast<long>(p);
      if (p & 1) f = -f;
      prod *= f;
      if (prod == 0) break;
    }
    total += prod;
  }
  mpq_class denom = 1;
  for (int i = 1; i < k; ++i) denom *= 2;
  return total / denom;
}

}  // namespace wallcross
