#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wallcross/quadrature.hpp"
#include "wallcross/stability.hpp"

namespace wallcross {

// One chamber of the model: a named invariant table tied to a named central
// charge. File order of the entries is preserved for exact round trips.
struct ChamberSpec {
  std::string name;
  std::string central;
  bool doubled = true;
  std::vector<std::pair<Charge, mpq_class>> omega;

  Spectrum spectrum() const;
};

// Named central charge with exact rational components; `positive` promises
// every listed entry lies in the open upper half plane (checked on load).
struct CentralChargeSpec {
  std::string name;
  bool positive = false;
  std::vector<std::pair<mpq_class, mpq_class>> z;  // re, im per generator

  CentralCharge eval() const;
};

struct ModelParameters {
  int order = 3;
  std::vector<double> lambdas{2.0};
  double big_r = 5.0;
  std::complex<double> zeta{0.6, 0.3};
  std::complex<double> z_star{0.3, 0.4};
  double g0 = 1.0;
  double rho_bar = 1.5;
  int coord_cap = 4;
  double validation_tol = 1e-6;
  double c1 = 0.0;  // 0: fit the bound constants instead of overriding them
  double c2 = 0.0;
  QuadSpec quad;
};

// The one model file every command reads: lattice, chambers, central
// charges, and numeric parameters with their overrides.
struct ModelFile {
  Lattice lattice;
  std::vector<ChamberSpec> chambers;
  std::vector<CentralChargeSpec> charges;
  ModelParameters parameters;

  const ChamberSpec& chamber(const std::string& name) const;
  const CentralChargeSpec& central(const std::string& name) const;
};

// Parse/validation failures carry the JSON path of the offending field.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& message, std::string path)
      : std::runtime_error(message + " (at " + path + ")"), json_path(std::move(path)) {}
  std::string json_path;
};

ModelFile parse_model(const std::string& text);
ModelFile load_model(const std::string& path);
// Serialization is an exact inverse of parsing: rationals as "p/q" strings,
// floats in shortest round-trip form, field order fixed.
std::string serialize_model(const ModelFile& m);

// Bundled two-chamber preset on the rank-2 lattice (the shipped a2.json).
ModelFile a2_model();

// Command layer: each command consumes the model plus flag overrides and
// produces an exit code (0 pass, 1 check failed, 3 numerical
// non-convergence; input errors throw), a human summary, and deterministic
// report files keyed by relative name (floats at 17 significant digits).
struct CommandOptions {
  int order = -1;               // negative: model default
  std::vector<double> lambdas;  // empty: model default
  bool strict = false;
  int jobs = 1;
};

struct CommandResult {
  int exit_code = 0;
  std::string summary;
  std::map<std::string, std::string> files;
};

CommandResult cmd_check_continuity(const ModelFile& m, const CommandOptions& opt);
CommandResult cmd_compute_q(const ModelFile& m, const CommandOptions& opt);
CommandResult cmd_joyce(const ModelFile& m, const CommandOptions& opt);
CommandResult cmd_estimate(const ModelFile& m, const CommandOptions& opt);
CommandResult cmd_converge(const ModelFile& m, const CommandOptions& opt);
CommandResult cmd_gmn(const ModelFile& m, const CommandOptions& opt);

}  // namespace wallcross
