// fracgs: command-line driver. Exit status 0 ok, 1 solver failure
// (non-finite state, no convergence), 2 configuration or usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fracgs/cli_io.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fracgs::io;

  CLI::App app{"Stochastic fractional Gray-Scott spectral simulator"};
  app.set_version_flag("--version", std::string(FRACGS_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  const char* env_out = std::getenv("FRACGS_OUT");
  std::string out = env_out && *env_out ? env_out : "fracgs_out";
  std::vector<std::string> overrides;
  std::string sweep_x, sweep_y;
  bool print_config = false;

  app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides noise.seed)");
  auto* paths_opt = app.add_option("--paths", paths, "ensemble size (overrides run.paths)");
  app.add_option("--out", out, "output directory (default $FRACGS_OUT or ./fracgs_out)");
  app.add_option("--override", overrides, "section.key=value, repeatable");
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  for (const char* name : {"check-params", "simulate", "glue", "fixed-point", "estimate", "convergence"})
    app.add_subcommand(name);
  auto* check = app.get_subcommand("check-params");
  check->add_option("--sweep-x", sweep_x, "name:lo:hi:n");
  check->add_option("--sweep-y", sweep_y, "name:lo:hi:n");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunRequest req;
  try {
    req.command = subcommand_from_string(app.get_subcommands().front()->get_name());
    std::string text = config_path.empty() ? std::string{} : read_file(config_path);
    if (*seed_opt) overrides.push_back("noise.seed=" + std::to_string(seed));
    if (*paths_opt) overrides.push_back("run.paths=" + std::to_string(paths));
    if (!overrides.empty()) text = apply_overrides(text, overrides);
    req.config = parse_config(text);
    if (!sweep_x.empty()) req.sweep_x = parse_sweep_axis(sweep_x);
    if (!sweep_y.empty()) {
      if (!req.sweep_x) throw std::invalid_argument("--sweep-y needs --sweep-x");
      req.sweep_y = parse_sweep_axis(sweep_y);
    }
    req.out = out;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  if (print_config) {
    std::cout << dump_config(req.config);
    return 0;
  }

  try {
    return run(req, std::cout);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
