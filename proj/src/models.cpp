#include "wallcross/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wallcross/coords.hpp"
#include "wallcross/majorants.hpp"
#include "wallcross/sections.hpp"
#include "wallcross/trees.hpp"

namespace wallcross {

namespace {

using njson = nlohmann::ordered_json;

std::string fmt(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string jbool(bool b) { return b ? "true" : "false"; }

std::string charge_text(const Charge& a, int rank) {
  std::string s;
  for (int i = 0; i < rank; ++i) {
    if (i) s += ' ';
    s += std::to_string(a[i]);
  }
  return s;
}

void expect_keys(const njson& j, const std::set<std::string>& allowed,
                 const std::string& path) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!allowed.count(k)) throw ModelError("unknown field \"" + k + "\"", path);
  }
}

mpq_class parse_rational(const njson& j, const std::string& path) {
  if (!j.is_string()) throw ModelError("expected a rational \"p/q\" string", path);
  try {
    mpq_class q(j.get<std::string>());
    q.canonicalize();
    return q;
  } catch (const std::exception&) {
    throw ModelError("malformed rational", path);
  }
}

double parse_double(const njson& j, const std::string& path) {
  if (!j.is_number()) throw ModelError("expected a number", path);
  return j.get<double>();
}

int parse_int(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) throw ModelError("expected an integer", path);
  return j.get<int>();
}

std::complex<double> parse_point(const njson& j, const std::string& path) {
  if (!j.is_object()) throw ModelError("expected an object {re, im}", path);
  expect_keys(j, {"re", "im"}, path);
  if (!j.contains("re") || !j.contains("im"))
    throw ModelError("expected both re and im", path);
  return {parse_double(j["re"], path + ".re"), parse_double(j["im"], path + ".im")};
}

Charge parse_charge(const njson& j, int rank, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != rank)
    throw ModelError("charge needs exactly rank integer entries", path);
  Charge c{};
  for (int i = 0; i < rank; ++i)
    c[i] = parse_int(j[i], path + "[" + std::to_string(i) + "]");
  if (is_zero(c)) throw ModelError("charge must be nonzero", path);
  return c;
}

njson point_json(std::complex<double> z) {
  njson j;
  j["re"] = z.real();
  j["im"] = z.imag();
  return j;
}

// Shared resolution of the working chamber, spectrum, central charge, and
// flag overrides.
struct Working {
  const ChamberSpec* chamber = nullptr;
  Spectrum spectrum;
  CentralCharge zc;
  int order = 0;
  std::vector<double> lambdas;
};

Working resolve(const ModelFile& m, const CommandOptions& opt, std::size_t index = 0) {
  if (index >= m.chambers.size())
    throw ModelError("model needs at least " + std::to_string(index + 1) + " chamber(s)",
                     "chambers");
  Working w;
  w.chamber = &m.chambers[index];
  w.spectrum = w.chamber->spectrum();
  w.zc = m.central(w.chamber->central).eval();
  w.order = opt.order >= 0 ? opt.order : m.parameters.order;
  w.lambdas = opt.lambdas.empty() ? m.parameters.lambdas : opt.lambdas;
  if (w.lambdas.empty()) throw ModelError("no coupling values given", "parameters.lambda");
  for (double l : w.lambdas)
    if (!(l > 0.0)) throw ModelError("couplings must be positive", "parameters.lambda");
  return w;
}

// Decorations of the tree sums: the divisor-closed DT support within the
// degree budget.
std::vector<Charge> dt_decorations(const Lattice& lat, const Spectrum& sp, int budget) {
  (void)lat;
  QTable closed;
  for (const Charge& a : sp.support()) {
    int g = charge_content(a);
    Charge base{};
    for (int i = 0; i < kMaxRank; ++i) base[i] = a[i] / g;
    int d = charge_deg(base);
    if (d == 0) continue;
    for (int k = 1; k * d <= budget; ++k) closed.emplace(k * base, sp.omega_of(k * base));
  }
  std::vector<Charge> dec;
  for (const auto& [a, v] : dt_from_omega(closed))
    if (v != 0) dec.push_back(a);
  return dec;
}

std::string map_csv(const Lattice& lat, const DMap& map) {
  std::string out = "generator,charge,sdeg,re,im\n";
  char buf[256];
  for (int i = 0; i < lat.rank; ++i) {
    for (const auto& [mo, c] : map.im[i].terms) {
      std::string ch, sd;
      for (int k = 0; k < lat.rank; ++k) {
        if (k) {
          ch += ' ';
          sd += ' ';
        }
        ch += std::to_string(mo.charge[k]);
        sd += std::to_string(mo.sdeg[k]);
      }
      std::snprintf(buf, sizeof buf, "%d,%s,%s,%.17g,%.17g\n", i, ch.c_str(), sd.c_str(),
                    c.real(), c.imag());
      out += buf;
    }
  }
  return out;
}

std::string series_csv(const Lattice& lat, const DSeries& s) {
  std::string out = "charge,sdeg,re,im\n";
  char buf[256];
  for (const auto& [mo, c] : s.terms) {
    std::string ch, sd;
    for (int k = 0; k < lat.rank; ++k) {
      if (k) {
        ch += ' ';
        sd += ' ';
      }
      ch += std::to_string(mo.charge[k]);
      sd += std::to_string(mo.sdeg[k]);
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g\n", ch.c_str(), sd.c_str(), c.real(),
                  c.imag());
    out += buf;
  }
  return out;
}

std::vector<double> descending_grid(const std::vector<double>& lambdas) {
  std::vector<double> grid = lambdas;
  if (grid.size() == 1) grid = {grid[0], grid[0] / 2, grid[0] / 4, grid[0] / 8};
  std::sort(grid.begin(), grid.end(), std::greater<double>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Tree keys are compact binary canonical forms; reports need printable ids.
std::string hex_key(const std::string& key) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * key.size());
  for (unsigned char c : key) {
    out += digits[c >> 4];
    out += digits[c & 0xf];
  }
  return out;
}

std::vector<double> ascending_grid(const std::vector<double>& lambdas) {
  std::vector<double> grid = lambdas;
  if (grid.size() == 1) grid = {grid[0], 2 * grid[0], 4 * grid[0]};
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

Spectrum ChamberSpec::spectrum() const { return Spectrum::from_entries(omega, doubled); }

CentralCharge CentralChargeSpec::eval() const { return CentralCharge::from_rational(z); }

const ChamberSpec& ModelFile::chamber(const std::string& name) const {
  for (const ChamberSpec& c : chambers)
    if (c.name == name) return c;
  throw ModelError("unknown chamber \"" + name + "\"", "chambers");
}

const CentralChargeSpec& ModelFile::central(const std::string& name) const {
  for (const CentralChargeSpec& c : charges)
    if (c.name == name) return c;
  throw ModelError("unknown central charge \"" + name + "\"", "central_charges");
}

ModelFile parse_model(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("json parse failure: ") + e.what(), "$");
  }
  expect_keys(j, {"lattice", "chambers", "central_charges", "parameters"}, "$");

  ModelFile m;
  if (!j.contains("lattice")) throw ModelError("missing lattice", "lattice");
  const njson& jl = j["lattice"];
  expect_keys(jl, {"rank", "pairing"}, "lattice");
  if (!jl.contains("rank")) throw ModelError("missing rank", "lattice.rank");
  int rank = parse_int(jl["rank"], "lattice.rank");
  if (rank < 1 || rank > kMaxRank)
    throw ModelError("rank out of range 1.." + std::to_string(kMaxRank), "lattice.rank");
  if (!jl.contains("pairing") || !jl["pairing"].is_array() ||
      static_cast<int>(jl["pairing"].size()) != rank)
    throw ModelError("pairing must be a rank x rank integer matrix", "lattice.pairing");
  std::vector<std::vector<int>> mat(rank, std::vector<int>(rank, 0));
  for (int i = 0; i < rank; ++i) {
    const njson& row = jl["pairing"][i];
    std::string rp = "lattice.pairing[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != rank)
      throw ModelError("pairing must be a rank x rank integer matrix", rp);
    for (int k = 0; k < rank; ++k)
      mat[i][k] = parse_int(row[k], rp + "[" + std::to_string(k) + "]");
  }
  for (int i = 0; i < rank; ++i)
    for (int k = 0; k < rank; ++k)
      if (mat[i][k] != -mat[k][i])
        throw ModelError("pairing must be skew-symmetric", "lattice.pairing");
  m.lattice = Lattice::with_pairing(rank, mat);

  if (!j.contains("central_charges") || !j["central_charges"].is_array() ||
      j["central_charges"].empty())
    throw ModelError("at least one central charge required", "central_charges");
  std::set<std::string> charge_names;
  for (std::size_t k = 0; k < j["central_charges"].size(); ++k) {
    const njson& jc = j["central_charges"][k];
    std::string path = "central_charges[" + std::to_string(k) + "]";
    expect_keys(jc, {"name", "positive", "z"}, path);
    CentralChargeSpec spec;
    if (!jc.contains("name") || !jc["name"].is_string() || jc["name"].empty())
      throw ModelError("central charge needs a name", path + ".name");
    spec.name = jc["name"].get<std::string>();
    if (!charge_names.insert(spec.name).second)
      throw ModelError("duplicate central charge name", path + ".name");
    if (jc.contains("positive")) {
      if (!jc["positive"].is_boolean())
        throw ModelError("positive must be boolean", path + ".positive");
      spec.positive = jc["positive"].get<bool>();
    }
    if (!jc.contains("z") || !jc["z"].is_array() ||
        static_cast<int>(jc["z"].size()) != rank)
      throw ModelError("z needs exactly rank entries", path + ".z");
    for (int i = 0; i < rank; ++i) {
      const njson& je = jc["z"][i];
      std::string pe = path + ".z[" + std::to_string(i) + "]";
      expect_keys(je, {"re", "im"}, pe);
      if (!je.contains("re") || !je.contains("im"))
        throw ModelError("expected both re and im", pe);
      mpq_class re = parse_rational(je["re"], pe + ".re");
      mpq_class im = parse_rational(je["im"], pe + ".im");
      if (spec.positive && im <= 0)
        throw ModelError("positive central charge needs im > 0", pe + ".im");
      spec.z.emplace_back(std::move(re), std::move(im));
    }
    m.charges.push_back(std::move(spec));
  }

  if (!j.contains("chambers") || !j["chambers"].is_array() || j["chambers"].empty())
    throw ModelError("at least one chamber required", "chambers");
  std::set<std::string> chamber_names;
  for (std::size_t k = 0; k < j["chambers"].size(); ++k) {
    const njson& jc = j["chambers"][k];
    std::string path = "chambers[" + std::to_string(k) + "]";
    expect_keys(jc, {"name", "central", "doubled", "omega"}, path);
    ChamberSpec spec;
    if (!jc.contains("name") || !jc["name"].is_string() || jc["name"].empty())
      throw ModelError("chamber needs a name", path + ".name");
    spec.name = jc["name"].get<std::string>();
    if (!chamber_names.insert(spec.name).second)
      throw ModelError("duplicate chamber name", path + ".name");
    if (!jc.contains("central") || !jc["central"].is_string())
      throw ModelError("chamber needs a central charge name", path + ".central");
    spec.central = jc["central"].get<std::string>();
    if (!charge_names.count(spec.central))
      throw ModelError("chamber references unknown central charge \"" + spec.central + "\"",
                       path + ".central");
    if (jc.contains("doubled")) {
      if (!jc["doubled"].is_boolean())
        throw ModelError("doubled must be boolean", path + ".doubled");
      spec.doubled = jc["doubled"].get<bool>();
    }
    if (!jc.contains("omega") || !jc["omega"].is_array())
      throw ModelError("chamber needs an omega array", path + ".omega");
    for (std::size_t e = 0; e < jc["omega"].size(); ++e) {
      const njson& jo = jc["omega"][e];
      std::string po = path + ".omega[" + std::to_string(e) + "]";
      expect_keys(jo, {"charge", "value"}, po);
      if (!jo.contains("charge") || !jo.contains("value"))
        throw ModelError("omega entry needs charge and value", po);
      Charge a = parse_charge(jo["charge"], rank, po + ".charge");
      spec.omega.emplace_back(a, parse_rational(jo["value"], po + ".value"));
    }
    m.chambers.push_back(std::move(spec));
  }

  if (j.contains("parameters")) {
    const njson& jp = j["parameters"];
    expect_keys(jp,
                {"order", "lambda", "big_r", "zeta", "z_star", "g0", "rho_bar", "coord_cap",
                 "validation_tol", "c1", "c2", "quad"},
                "parameters");
    ModelParameters& p = m.parameters;
    if (jp.contains("order")) {
      p.order = parse_int(jp["order"], "parameters.order");
      if (p.order < 0) throw ModelError("order must be nonnegative", "parameters.order");
    }
    if (jp.contains("lambda")) {
      if (!jp["lambda"].is_array() || jp["lambda"].empty())
        throw ModelError("lambda must be a nonempty array", "parameters.lambda");
      p.lambdas.clear();
      for (std::size_t i = 0; i < jp["lambda"].size(); ++i) {
        double l = parse_double(jp["lambda"][i],
                                "parameters.lambda[" + std::to_string(i) + "]");
        if (!(l > 0))
          throw ModelError("couplings must be positive",
                           "parameters.lambda[" + std::to_string(i) + "]");
        p.lambdas.push_back(l);
      }
    }
    if (jp.contains("big_r")) {
      p.big_r = parse_double(jp["big_r"], "parameters.big_r");
      if (!(p.big_r > 0)) throw ModelError("big_r must be positive", "parameters.big_r");
    }
    if (jp.contains("zeta")) {
      p.zeta = parse_point(jp["zeta"], "parameters.zeta");
      if (p.zeta == std::complex<double>(0.0, 0.0))
        throw ModelError("zeta must be nonzero", "parameters.zeta");
    }
    if (jp.contains("z_star")) p.z_star = parse_point(jp["z_star"], "parameters.z_star");
    if (jp.contains("g0")) {
      p.g0 = parse_double(jp["g0"], "parameters.g0");
      if (p.g0 == 0.0) throw ModelError("g0 must be nonzero", "parameters.g0");
    }
    if (jp.contains("rho_bar")) {
      p.rho_bar = parse_double(jp["rho_bar"], "parameters.rho_bar");
      if (!(p.rho_bar > 0))
        throw ModelError("rho_bar must be positive", "parameters.rho_bar");
    }
    if (jp.contains("coord_cap")) {
      p.coord_cap = parse_int(jp["coord_cap"], "parameters.coord_cap");
      if (p.coord_cap < 1)
        throw ModelError("coord_cap must be at least 1", "parameters.coord_cap");
    }
    if (jp.contains("validation_tol")) {
      p.validation_tol = parse_double(jp["validation_tol"], "parameters.validation_tol");
      if (!(p.validation_tol > 0))
        throw ModelError("validation_tol must be positive", "parameters.validation_tol");
    }
    if (jp.contains("c1")) p.c1 = parse_double(jp["c1"], "parameters.c1");
    if (jp.contains("c2")) p.c2 = parse_double(jp["c2"], "parameters.c2");
    if (p.c1 < 0 || p.c2 < 0)
      throw ModelError("bound constants must be nonnegative", "parameters.c1");
    if (jp.contains("quad")) {
      const njson& jq = jp["quad"];
      expect_keys(jq, {"h", "u_max", "tol", "tilt", "max_refine", "tail_rel"},
                  "parameters.quad");
      QuadSpec& q = p.quad;
      if (jq.contains("h")) q.h = parse_double(jq["h"], "parameters.quad.h");
      if (jq.contains("u_max")) q.u_max = parse_double(jq["u_max"], "parameters.quad.u_max");
      if (jq.contains("tol")) q.tol = parse_double(jq["tol"], "parameters.quad.tol");
      if (jq.contains("tilt")) q.tilt = parse_double(jq["tilt"], "parameters.quad.tilt");
      if (jq.contains("max_refine"))
        q.max_refine = parse_int(jq["max_refine"], "parameters.quad.max_refine");
      if (jq.contains("tail_rel"))
        q.tail_rel = parse_double(jq["tail_rel"], "parameters.quad.tail_rel");
      if (!(q.h > 0) || !(q.u_max > 0) || !(q.tol > 0) || q.max_refine < 0 ||
          !(q.tail_rel >= 0))
        throw ModelError("invalid quadrature overrides", "parameters.quad");
    }
  }
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string serialize_model(const ModelFile& m) {
  njson j;
  j["lattice"]["rank"] = m.lattice.rank;
  njson rows = njson::array();
  for (int i = 0; i < m.lattice.rank; ++i) {
    njson row = njson::array();
    for (int k = 0; k < m.lattice.rank; ++k)
      row.push_back(static_cast<int>(m.lattice.pairing_matrix[i][k]));
    rows.push_back(std::move(row));
  }
  j["lattice"]["pairing"] = std::move(rows);

  j["chambers"] = njson::array();
  for (const ChamberSpec& c : m.chambers) {
    njson jc;
    jc["name"] = c.name;
    jc["central"] = c.central;
    jc["doubled"] = c.doubled;
    jc["omega"] = njson::array();
    for (const auto& [a, v] : c.omega) {
      njson jo;
      njson arr = njson::array();
      for (int i = 0; i < m.lattice.rank; ++i) arr.push_back(static_cast<int>(a[i]));
      jo["charge"] = std::move(arr);
      jo["value"] = v.get_str();
      jc["omega"].push_back(std::move(jo));
    }
    j["chambers"].push_back(std::move(jc));
  }

  j["central_charges"] = njson::array();
  for (const CentralChargeSpec& c : m.charges) {
    njson jc;
    jc["name"] = c.name;
    jc["positive"] = c.positive;
    jc["z"] = njson::array();
    for (const auto& [re, im] : c.z) {
      njson je;
      je["re"] = re.get_str();
      je["im"] = im.get_str();
      jc["z"].push_back(std::move(je));
    }
    j["central_charges"].push_back(std::move(jc));
  }

  const ModelParameters& p = m.parameters;
  njson jp;
  jp["order"] = p.order;
  jp["lambda"] = p.lambdas;
  jp["big_r"] = p.big_r;
  jp["zeta"] = point_json(p.zeta);
  jp["z_star"] = point_json(p.z_star);
  jp["g0"] = p.g0;
  jp["rho_bar"] = p.rho_bar;
  jp["coord_cap"] = p.coord_cap;
  jp["validation_tol"] = p.validation_tol;
  jp["c1"] = p.c1;
  jp["c2"] = p.c2;
  njson jq;
  jq["h"] = p.quad.h;
  jq["u_max"] = p.quad.u_max;
  jq["tol"] = p.quad.tol;
  jq["tilt"] = p.quad.tilt;
  jq["max_refine"] = p.quad.max_refine;
  jq["tail_rel"] = p.quad.tail_rel;
  jp["quad"] = std::move(jq);
  j["parameters"] = std::move(jp);
  return j.dump(2) + "\n";
}

ModelFile a2_model() {
  ModelFile m;
  m.lattice = Lattice::with_pairing(2, {{0, 1}, {-1, 0}});
  Charge g1 = charge_unit(0), g2 = charge_unit(1);

  ChamberSpec side;
  side.name = "side";
  side.central = "side_a";
  side.doubled = true;
  side.omega = {{g1, 1}, {g2, 1}};
  m.chambers.push_back(side);

  ChamberSpec full;
  full.name = "full";
  full.central = "side_b";
  full.doubled = true;
  full.omega = {{g1, 1}, {g1 + g2, 1}, {g2, 1}};
  m.chambers.push_back(full);

  CentralChargeSpec za;
  za.name = "side_a";
  za.positive = true;
  za.z = {{mpq_class(-1, 2), mpq_class(1)}, {mpq_class(1, 2), mpq_class(1)}};
  m.charges.push_back(za);

  CentralChargeSpec zb;
  zb.name = "side_b";
  zb.positive = true;
  zb.z = {{mpq_class(1, 2), mpq_class(1)}, {mpq_class(-1, 2), mpq_class(1)}};
  m.charges.push_back(zb);

  m.parameters.order = 3;
  m.parameters.lambdas = {2.0};
  m.parameters.big_r = 5.0;
  m.parameters.zeta = {0.6, 0.3};
  m.parameters.z_star = {0.3, 0.4};
  m.parameters.g0 = 1.0;
  m.parameters.rho_bar = 1.5;
  m.parameters.coord_cap = 4;
  m.parameters.validation_tol = 1e-6;
  return m;
}

CommandResult cmd_check_continuity(const ModelFile& m, const CommandOptions& opt) {
  if (m.chambers.size() < 2)
    throw ModelError("continuity needs two chambers", "chambers");
  Working left = resolve(m, opt, 0);
  Working right = resolve(m, opt, 1);
  ContinuityReport rep = continuity_check(&m.lattice, left.order, left.spectrum, left.zc,
                                          right.spectrum, right.zc);
  CommandResult r;
  std::string body = "{\n  \"command\": \"check-continuity\",\n";
  body += "  \"order\": " + std::to_string(left.order) + ",\n";
  body += "  \"left\": \"" + left.chamber->name + "\",\n";
  body += "  \"right\": \"" + right.chamber->name + "\",\n";
  body += "  \"exact_zero\": " + jbool(rep.exact_zero) + ",\n";
  body += "  \"max_residual\": " + fmt(rep.max_residual) + ",\n";
  body += "  \"first_failing_sdeg\": " + std::to_string(rep.first_failing_sdeg) + "\n}\n";
  r.files["continuity.json"] = body;
  if (rep.exact_zero) {
    r.summary = "continuity " + left.chamber->name + " vs " + right.chamber->name +
                " at order " + std::to_string(left.order) + ": exact zero";
    r.exit_code = 0;
  } else {
    r.summary = "continuity " + left.chamber->name + " vs " + right.chamber->name +
                " at order " + std::to_string(left.order) + ": FAILED, residual " +
                fmt(rep.max_residual) + " at s-degree " +
                std::to_string(rep.first_failing_sdeg);
    r.exit_code = 1;
  }
  return r;
}

CommandResult cmd_compute_q(const ModelFile& m, const CommandOptions& opt) {
  Working w = resolve(m, opt);
  const double lambda = w.lambdas.front();
  CommandResult r;
  FlatSectionEngine eng(&m.lattice, w.spectrum, w.zc, lambda, w.order, m.parameters.quad);
  LaurentData ld;
  try {
    ld = eng.laurent();
  } catch (const std::runtime_error&) {
    r.exit_code = 3;
    r.summary = "compute-q: quadrature did not converge";
    r.files["FAILED"] = "quadrature did not converge\n";
    return r;
  }
  r.files["q_elements.csv"] = map_csv(m.lattice, ld.q);

  const double tol = m.parameters.validation_tol;
  bool ok = ld.z2_residual <= tol && ld.constancy <= tol;
  std::string body = "{\n  \"command\": \"compute-q\",\n";
  body += "  \"order\": " + std::to_string(w.order) + ",\n";
  body += "  \"lambda\": " + fmt(lambda) + ",\n";
  body += "  \"z2_residual\": " + fmt(ld.z2_residual) + ",\n";
  body += "  \"constancy\": " + fmt(ld.constancy) + ",\n";
  body += "  \"radius\": " + fmt(ld.radius) + ",\n";
  body += "  \"points\": " + std::to_string(ld.points) + ",\n";

  if (w.lambdas.size() > 1) {
    std::vector<double> grid = descending_grid(w.lambdas);
    JoyceReport jr = joyce_limit(&m.lattice, w.spectrum, w.zc, grid, w.order,
                                 m.parameters.quad);
    r.files["v_elements.csv"] = map_csv(m.lattice, jr.v);
    body += "  \"limit_distances\": [";
    for (std::size_t i = 0; i < jr.distances.size(); ++i) {
      if (i) body += ", ";
      body += fmt(jr.distances[i]);
    }
    body += "],\n  \"limit_monotone\": " + jbool(jr.monotone) + ",\n";
  }
  body += "  \"status\": \"" + std::string(ok ? "ok" : "FAILED") + "\"\n}\n";
  r.files["report.json"] = body;
  if (!ok) {
    r.files["FAILED"] = "validation failed: z2_residual " + fmt(ld.z2_residual) +
                        ", constancy " + fmt(ld.constancy) + ", tolerance " + fmt(tol) + "\n";
    r.exit_code = 1;
    r.summary = "compute-q: validation FAILED (z2 " + fmt(ld.z2_residual) + ", constancy " +
                fmt(ld.constancy) + ")";
    return r;
  }
  r.summary = "compute-q: order " + std::to_string(w.order) + ", lambda " + fmt(lambda) +
              ", z2 " + fmt(ld.z2_residual) + ", constancy " + fmt(ld.constancy) + ", ok";
  return r;
}

CommandResult cmd_joyce(const ModelFile& m, const CommandOptions& opt) {
  Working w = resolve(m, opt);
  std::vector<double> grid = descending_grid(w.lambdas);
  CommandResult r;
  JoyceReport jr;
  try {
    jr = joyce_limit(&m.lattice, w.spectrum, w.zc, grid, w.order, m.parameters.quad);
  } catch (const std::runtime_error&) {
    r.exit_code = 3;
    r.summary = "joyce: quadrature did not converge";
    return r;
  }
  r.files["v_elements.csv"] = map_csv(m.lattice, jr.v);
  r.files["f_elements.csv"] = series_csv(m.lattice, jr.f);
  std::string body = "{\n  \"command\": \"joyce\",\n  \"order\": " +
                     std::to_string(w.order) + ",\n  \"lambdas\": [";
  for (std::size_t i = 0; i < jr.lambdas.size(); ++i) {
    if (i) body += ", ";
    body += fmt(jr.lambdas[i]);
  }
  body += "],\n  \"distances\": [";
  for (std::size_t i = 0; i < jr.distances.size(); ++i) {
    if (i) body += ", ";
    body += fmt(jr.distances[i]);
  }
  body += "],\n  \"monotone\": " + jbool(jr.monotone) + ",\n";
  body += "  \"extraction_spread\": " + fmt(jr.extraction_spread) + "\n}\n";
  r.files["joyce.json"] = body;
  bool ok = jr.monotone && jr.extraction_spread <= m.parameters.validation_tol;
  r.exit_code = ok ? 0 : 1;
  r.summary = std::string("joyce: ") + (ok ? "ok" : "FAILED") + ", monotone " +
              jbool(jr.monotone) + ", spread " + fmt(jr.extraction_spread);
  return r;
}

CommandResult cmd_estimate(const ModelFile& m, const CommandOptions& opt) {
  Working w = resolve(m, opt);
  std::vector<Charge> dec = dt_decorations(m.lattice, w.spectrum, w.order);
  std::vector<DecoratedTree> trees = enumerate_trees(m.lattice, dec, w.order);
  std::vector<double> grid = ascending_grid(w.lambdas);
  EstimateReport est = estimate_check(&m.lattice, trees, w.zc, grid, m.parameters.z_star,
                                      m.parameters.quad);
  CommandResult r;
  std::string csv = "tree,n_vertices,z_sum,lambda,log_abs_h,converged\n";
  char buf[256];
  for (const EstimateSample& s : est.samples) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%d\n",
                  hex_key(s.tree_key).c_str(), s.n_vertices, s.z_sum, s.lambda, s.log_abs_h,
                  s.converged ? 1 : 0);
    csv += buf;
  }
  r.files["estimate.csv"] = csv;
  std::string body = "{\n  \"command\": \"estimate\",\n";
  body += "  \"order\": " + std::to_string(w.order) + ",\n";
  body += "  \"trees\": " + std::to_string(trees.size()) + ",\n";
  body += "  \"c1\": " + fmt(est.c1) + ",\n";
  body += "  \"c2\": " + fmt(est.c2) + ",\n";
  body += "  \"min_margin\": " + fmt(est.min_margin) + ",\n";
  body += "  \"monotone_margins\": " + jbool(est.monotone_margins) + ",\n";
  body += "  \"all_converged\": " + jbool(est.all_converged) + "\n}\n";
  r.files["estimate.json"] = body;
  if (!est.all_converged) {
    r.exit_code = 3;
    r.summary = "estimate: quadrature did not converge on every sample";
  } else if (est.min_margin > 0.0 && est.c2 > 0.0) {
    r.exit_code = 0;
    r.summary = "estimate: c1 " + fmt(est.c1) + ", c2 " + fmt(est.c2) + ", min margin " +
                fmt(est.min_margin);
  } else {
    r.exit_code = 1;
    r.summary = "estimate: FAILED, nonpositive margin or decay constant (c1 " + fmt(est.c1) +
                ", c2 " + fmt(est.c2) + ", min margin " + fmt(est.min_margin) + ")";
  }
  return r;
}

CommandResult cmd_converge(const ModelFile& m, const CommandOptions& opt) {
  Working w = resolve(m, opt);
  double c1 = m.parameters.c1, c2 = m.parameters.c2;
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    std::vector<Charge> dec = dt_decorations(m.lattice, w.spectrum, w.order);
    std::vector<DecoratedTree> trees = enumerate_trees(m.lattice, dec, w.order);
    EstimateReport est = estimate_check(&m.lattice, trees, w.zc, ascending_grid(w.lambdas),
                                        m.parameters.z_star, m.parameters.quad);
    c1 = est.c1;
    c2 = est.c2;
  }
  std::vector<Charge> gens;
  for (int i = 0; i < m.lattice.rank; ++i) gens.push_back(charge_unit(i));
  CommandResult r;
  std::string body = "{\n  \"command\": \"converge\",\n";
  body += "  \"c1\": " + fmt(c1) + ",\n  \"c2\": " + fmt(c2) + ",\n";
  body += "  \"rho_bar\": " + fmt(m.parameters.rho_bar) + ",\n  \"rows\": [";
  bool all_ok = true;
  bool first = true;
  for (double lambda : w.lambdas) {
    std::vector<BoundRow> rows = comparison_report(&m.lattice, w.spectrum, w.zc, gens, gens,
                                                   c1, c2, lambda, m.parameters.rho_bar);
    for (const BoundRow& row : rows) {
      all_ok = all_ok && row.converged;
      if (!first) body += ",";
      first = false;
      body += "\n    {\"alpha\": \"" + charge_text(row.alpha, m.lattice.rank) + "\", ";
      body += "\"beta\": \"" + charge_text(row.beta, m.lattice.rank) + "\", ";
      body += "\"bound\": " + fmt(row.bound) + ", ";
      body += "\"radius\": " + fmt(row.radius) + ", ";
      body += "\"lambda\": " + fmt(row.lambda) + ", ";
      body += "\"iterations\": " + std::to_string(row.iterations) + ", ";
      body += std::string("\"status\": \"") + (row.converged ? "converged" : "diverged") +
              "\"}";
    }
  }
  body += "\n  ]\n}\n";
  r.files["converge.json"] = body;
  r.exit_code = all_ok ? 0 : 3;
  r.summary = std::string("converge: ") + (all_ok ? "all pairs converged" : "DIVERGED") +
              " at radius " + fmt(m.parameters.rho_bar) + " (c1 " + fmt(c1) + ", c2 " +
              fmt(c2) + ")";
  return r;
}

CommandResult cmd_gmn(const ModelFile& m, const CommandOptions& opt) {
  Working w = resolve(m, opt);
  CoordSeries cs = coord_series(m.lattice, w.spectrum, w.zc, m.parameters.big_r,
                                m.parameters.zeta, m.parameters.coord_cap,
                                m.parameters.quad);
  const Charge beta = charge_unit(0);
  std::array<double, kMaxRank> zero_angles{};
  DarbouxReport dar = darboux_pair(m.lattice, cs, beta, zero_angles);
  CommandResult r;
  r.files["gmn.csv"] = coord_csv(m.lattice, cs, beta);
  std::string body = "{\n  \"command\": \"gmn\",\n";
  body += "  \"radius\": " + fmt(m.parameters.big_r) + ",\n";
  body += "  \"zeta\": [" + fmt(m.parameters.zeta.real()) + ", " +
          fmt(m.parameters.zeta.imag()) + "],\n";
  body += "  \"cap\": " + std::to_string(m.parameters.coord_cap) + ",\n";
  body += "  \"tail_ratio\": " + fmt(cs.global.worst_ratio) + ",\n";
  body += "  \"converging\": " + jbool(cs.global.converging) + ",\n";
  body += "  \"zeta_flagged\": " + jbool(cs.zeta_flagged) + ",\n";
  body += "  \"all_converged\": " + jbool(cs.all_converged) + ",\n";
  body += "  \"uniform_bound\": " + fmt(dar.uniform_bound) + ",\n";
  body += "  \"bound_argmax\": \"" + charge_text(dar.bound_argmax, m.lattice.rank) + "\",\n";
  body += "  \"bound_deg\": " + std::to_string(dar.bound_deg) + ",\n";
  body += "  \"shells\": [";
  for (std::size_t i = 0; i < cs.global.shells.size(); ++i) {
    const ShellStats& s = cs.global.shells[i];
    if (i) body += ",";
    body += "\n    {\"shell\": " + std::to_string(s.shell) + ", \"abs_sum\": " +
            fmt(s.abs_sum) + ", \"ratio\": " + fmt(s.ratio) + "}";
  }
  body += "\n  ]\n}\n";
  r.files["gmn.json"] = body;
  bool bad = !cs.global.converging || !cs.all_converged;
  if (bad && opt.strict) {
    r.exit_code = 3;
    r.summary = "gmn: DIVERGENT tail (ratio " + fmt(cs.global.worst_ratio) + ") at radius " +
                fmt(m.parameters.big_r);
  } else {
    r.exit_code = 0;
    r.summary = "gmn: radius " + fmt(m.parameters.big_r) + ", tail ratio " +
                fmt(cs.global.worst_ratio) + (cs.global.converging ? "" : " (DIVERGENT)") +
                (cs.zeta_flagged ? " (zeta near saddle)" : "") + ", bound " +
                fmt(dar.uniform_bound);
  }
  return r;
}

}  // namespace wallcross
