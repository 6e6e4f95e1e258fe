// Model files and the command layer: parsing, serialization round trips,
// diagnostics with json paths, and command exit semantics.

#include <complex>
#include <cstdio>
#include <sstream>
#include <string>

#include "doctest.h"
#include "wallcross/models.hpp"

using namespace wallcross;

namespace {

std::string path_of(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ModelError& e) {
    return e.json_path;
  }
  return "<no error>";
}

ModelFile quick_a2() {
  ModelFile m = a2_model();
  m.parameters.quad = QuadSpec{0.08, 5.5, 1e-8, 1e-3, 8, 1e-30};
  return m;
}

}  // namespace

TEST_CASE("serialization round trip is the identity") {
  ModelFile m0 = a2_model();
  std::string s0 = serialize_model(m0);
  ModelFile m1 = parse_model(s0);
  std::string s1 = serialize_model(m1);
  CHECK(s0 == s1);

  CHECK(m1.lattice.rank == 2);
  CHECK(m1.lattice.pairing(charge_unit(0), charge_unit(1)) == 1);
  REQUIRE(m1.chambers.size() == 2);
  CHECK(m1.chambers[0].name == "side");
  CHECK(m1.chambers[1].name == "full");
  CHECK(m1.chambers[1].omega.size() == 3);
  CHECK(m1.chambers[1].omega[1].second == mpq_class(1));
  REQUIRE(m1.charges.size() == 2);
  CHECK(m1.charges[0].z[0].first == mpq_class(-1, 2));
  CHECK(m1.charges[0].positive);
  CHECK(m1.parameters.order == 3);
  CHECK(m1.parameters.lambdas == std::vector<double>{2.0});
  CHECK(m1.parameters.zeta == std::complex<double>(0.6, 0.3));
  CHECK(m1.parameters.quad.tol == 1e-10);
}

TEST_CASE("load from disk matches in-memory parse") {
  ModelFile m0 = a2_model();
  std::string s0 = serialize_model(m0);
  std::string path = "roundtrip_model.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(s0.data(), 1, s0.size(), f);
    std::fclose(f);
  }
  ModelFile m1 = load_model(path);
  CHECK(serialize_model(m1) == s0);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_model("no_such_model_file.json"), ModelError);
}

TEST_CASE("malformed models report json paths") {
  std::string good = serialize_model(a2_model());

  SUBCASE("invalid json text") {
    CHECK(path_of("{ not json") == "$");
  }
  SUBCASE("unknown top-level field") {
    std::string s = good;
    s.insert(s.find("\"lattice\""), "\"extra\": 1,\n  ");
    CHECK(path_of(s) == "$");
  }
  SUBCASE("pairing must be skew") {
    std::string s = good;
    auto pos = s.find("-1");
    REQUIRE(pos != std::string::npos);
    s.replace(pos, 2, "1");
    CHECK(path_of(s) == "lattice.pairing");
  }
  SUBCASE("positive central charge needs im > 0") {
    std::string s = good;
    auto pos = s.find("\"im\": \"1\"");
    REQUIRE(pos != std::string::npos);
    s.replace(pos, 9, "\"im\": \"-1\"");
    CHECK(path_of(s) == "central_charges[0].z[0].im");
  }
  SUBCASE("malformed rational") {
    std::string s = good;
    auto pos = s.find("\"value\": \"1\"");
    REQUIRE(pos != std::string::npos);
    s.replace(pos, 12, "\"value\": \"x/y\"");
    CHECK(path_of(s) == "chambers[0].omega[0].value");
  }
  SUBCASE("charge arrays carry exactly rank entries") {
    std::string s = good;
    auto pos = s.find("\"charge\": [\n            1,\n            0\n          ]");
    REQUIRE(pos != std::string::npos);
    s.replace(pos, 52, "\"charge\": [1, 0, 0]");
    CHECK(path_of(s) == "chambers[0].omega[0].charge");
  }
  SUBCASE("chamber must reference a known central charge") {
    std::string s = good;
    auto pos = s.find("\"central\": \"side_a\"");
    REQUIRE(pos != std::string::npos);
    s.replace(pos, 19, "\"central\": \"nowhere\"");
    CHECK(path_of(s) == "chambers[0].central");
  }
  SUBCASE("what() appends the path") {
    try {
      parse_model("[]");
      CHECK(false);
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find("(at ") != std::string::npos);
    }
  }
}

TEST_CASE("check-continuity passes on the preset and flags a perturbed table") {
  ModelFile m = a2_model();
  CommandOptions opt;
  opt.order = 4;

  CommandResult ok = cmd_check_continuity(m, opt);
  CHECK(ok.exit_code == 0);
  CHECK(ok.summary.find("exact zero") != std::string::npos);
  CHECK(ok.files.count("continuity.json") == 1);
  CHECK(ok.files.at("continuity.json").find("\"exact_zero\": true") != std::string::npos);

  ModelFile bad = a2_model();
  bad.chambers[1].omega[1].second = mpq_class(2);
  CommandResult fail = cmd_check_continuity(bad, opt);
  CHECK(fail.exit_code == 1);
  CHECK(fail.summary.find("s-degree") != std::string::npos);
  const std::string& body = fail.files.at("continuity.json");
  CHECK(body.find("\"exact_zero\": false") != std::string::npos);
  auto pos = body.find("\"first_failing_sdeg\": ");
  REQUIRE(pos != std::string::npos);
  int sdeg = std::stoi(body.substr(pos + 22));
  CHECK(sdeg >= 1);
}

TEST_CASE("check-continuity on a rank-one model is trivially exact") {
  ModelFile m;
  m.lattice = Lattice::with_pairing(1, {{0}});
  CentralChargeSpec z;
  z.name = "only";
  z.positive = true;
  z.z = {{mpq_class(0), mpq_class(1)}};
  m.charges.push_back(z);
  ChamberSpec a;
  a.name = "a";
  a.central = "only";
  a.omega = {{charge_unit(0), 1}};
  ChamberSpec b = a;
  b.name = "b";
  m.chambers = {a, b};

  CommandOptions opt;
  opt.order = 5;
  CommandResult r = cmd_check_continuity(m, opt);
  CHECK(r.exit_code == 0);
  CHECK(r.summary.find("exact zero") != std::string::npos);
}

TEST_CASE("compute-q validates and emits deterministic files") {
  ModelFile m = quick_a2();
  CommandOptions opt;
  opt.order = 2;
  opt.lambdas = {2.0};

  CommandResult r1 = cmd_compute_q(m, opt);
  CHECK(r1.exit_code == 0);
  CHECK(r1.summary.find("ok") != std::string::npos);
  REQUIRE(r1.files.count("q_elements.csv") == 1);
  REQUIRE(r1.files.count("report.json") == 1);
  CHECK(r1.files.at("q_elements.csv").rfind("generator,charge,sdeg,re,im\n", 0) == 0);
  CHECK(r1.files.at("report.json").find("\"status\": \"ok\"") != std::string::npos);

  CommandResult r2 = cmd_compute_q(m, opt);
  CHECK(r1.files == r2.files);
  CHECK(r1.summary == r2.summary);
}

TEST_CASE("compute-q at order zero emits a vanishing correction") {
  ModelFile m = quick_a2();
  CommandOptions opt;
  opt.order = 0;
  CommandResult r = cmd_compute_q(m, opt);
  CHECK(r.exit_code == 0);

  std::istringstream rows(r.files.at("q_elements.csv"));
  std::string line;
  std::getline(rows, line);  // header
  while (std::getline(rows, line)) {
    auto c1 = line.rfind(',');
    auto c2 = line.rfind(',', c1 - 1);
    double im = std::stod(line.substr(c1 + 1));
    double re = std::stod(line.substr(c2 + 1, c1 - c2 - 1));
    CHECK(std::abs(re) <= 1e-10);
    CHECK(std::abs(im) <= 1e-10);
  }
}

TEST_CASE("compute-q with a coupling list adds the limit comparison") {
  ModelFile m = quick_a2();
  CommandOptions opt;
  opt.order = 2;
  opt.lambdas = {2.0, 1.0, 0.5};
  CommandResult r = cmd_compute_q(m, opt);
  CHECK(r.exit_code == 0);
  REQUIRE(r.files.count("v_elements.csv") == 1);
  CHECK(r.files.at("report.json").find("\"limit_monotone\": true") != std::string::npos);
}

TEST_CASE("joyce command reports a monotone limit") {
  ModelFile m = quick_a2();
  CommandOptions opt;
  opt.order = 2;
  CommandResult r = cmd_joyce(m, opt);
  CHECK(r.exit_code == 0);
  REQUIRE(r.files.count("joyce.json") == 1);
  CHECK(r.files.at("joyce.json").find("\"monotone\": true") != std::string::npos);
  CHECK(r.files.count("v_elements.csv") == 1);
  CHECK(r.files.count("f_elements.csv") == 1);
}

TEST_CASE("estimate command fits positive constants with positive margin") {
  ModelFile m = quick_a2();
  CommandOptions opt;
  opt.order = 3;
  CommandResult r = cmd_estimate(m, opt);
  CHECK(r.exit_code == 0);
  const std::string& body = r.files.at("estimate.json");
  CHECK(body.find("\"all_converged\": true") != std::string::npos);
  CHECK(r.files.at("estimate.csv").rfind("tree,n_vertices,z_sum,lambda,log_abs_h,converged\n",
                                         0) == 0);
}

TEST_CASE("converge command certifies the preset radius") {
  ModelFile m = quick_a2();
  CommandOptions opt;
  opt.order = 3;
  opt.lambdas = {20.0};
  CommandResult r = cmd_converge(m, opt);
  CHECK(r.exit_code == 0);
  CHECK(r.files.at("converge.json").find("\"status\": \"diverged\"") == std::string::npos);
}

TEST_CASE("gmn command flags a divergent small-radius tail") {
  ModelFile m = quick_a2();
  CommandOptions opt;

  CommandResult good = cmd_gmn(m, opt);
  CHECK(good.exit_code == 0);
  CHECK(good.files.at("gmn.json").find("\"converging\": true") != std::string::npos);
  CHECK(good.files.at("gmn.csv").rfind("alpha,re_pair,im_pair,shell,tail_ratio\n", 0) == 0);

  ModelFile small = quick_a2();
  small.parameters.big_r = 0.01;
  small.parameters.quad.max_refine = 2;
  CommandResult flagged = cmd_gmn(small, opt);
  CHECK(flagged.exit_code == 0);
  bool tail_bad =
      flagged.files.at("gmn.json").find("\"converging\": false") != std::string::npos;
  bool quad_bad =
      flagged.files.at("gmn.json").find("\"all_converged\": false") != std::string::npos;
  CHECK((tail_bad || quad_bad));

  CommandOptions strict = opt;
  strict.strict = true;
  CommandResult hard = cmd_gmn(small, strict);
  CHECK(hard.exit_code == 3);
}

TEST_CASE("gmn command with an empty spectrum emits an all-zero table") {
  ModelFile m = quick_a2();
  m.chambers[0].omega.clear();
  CommandOptions opt;
  CommandResult r = cmd_gmn(m, opt);
  CHECK(r.exit_code == 0);
  CHECK(r.files.at("gmn.csv") == "alpha,re_pair,im_pair,shell,tail_ratio\n");
}
