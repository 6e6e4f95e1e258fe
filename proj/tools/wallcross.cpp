// wallcross: command-line front end for the wall-crossing toolkit.
//
// Subcommands: check-continuity, compute-q, joyce, estimate, converge, gmn.
// Exit codes: 0 pass, 1 check failed, 2 input error, 3 numerical
// non-convergence.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wallcross/models.hpp"

namespace {

int run(const std::string& cmd, const wallcross::ModelFile& model,
        const wallcross::CommandOptions& opt, const std::string& out_dir) {
  using namespace wallcross;
  CommandResult result;
  if (cmd == "check-continuity")
    result = cmd_check_continuity(model, opt);
  else if (cmd == "compute-q")
    result = cmd_compute_q(model, opt);
  else if (cmd == "joyce")
    result = cmd_joyce(model, opt);
  else if (cmd == "estimate")
    result = cmd_estimate(model, opt);
  else if (cmd == "converge")
    result = cmd_converge(model, opt);
  else if (cmd == "gmn")
    result = cmd_gmn(model, opt);
  else
    throw ModelError("unknown command \"" + cmd + "\"", "");

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, content] : result.files) {
      std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
      if (!f) throw ModelError("cannot write output file", name);
      f << content;
    }
  }
  std::cout << result.summary << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wall-crossing structures: spectra, flat sections, bounds"};
  app.require_subcommand(1);

  std::string model_path;
  std::string out_dir;
  int order = -1;
  std::vector<double> lambdas;
  bool strict = false;
  int jobs = 1;

  const char* names[] = {"check-continuity", "compute-q", "joyce",
                         "estimate",         "converge",  "gmn"};
  const char* blurbs[] = {
      "compare wall operator products across two chambers",
      "flat section, connection form, and Laurent extraction",
      "small-coupling limit of the extracted generator",
      "fit and verify exponential tree-sum bounds",
      "fixed-point certificate for the comparison series",
      "twistor coordinate series and tail diagnostics"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--model", model_path, "model description (json)")
        ->required();
    sub->add_option("--order", order, "truncation order override");
    sub->add_option("--lambda", lambdas, "coupling override (repeatable)");
    sub->add_option("--out", out_dir, "directory for report files");
    sub->add_option("--jobs", jobs, "worker cap (reserved; runs serially)");
    sub->add_flag("--strict", strict, "treat diagnostics as failures");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    wallcross::ModelFile model = wallcross::load_model(model_path);
    wallcross::CommandOptions opt;
    opt.order = order;
    opt.lambdas = lambdas;
    opt.strict = strict;
    opt.jobs = std::max(1, jobs);
    return run(app.get_subcommands().front()->get_name(), model, opt, out_dir);
  } catch (const wallcross::ModelError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
