#pragma once

// Run configuration (JSON), orchestration of the subcommands and the on-disk
// formats: per-path norm series CSV, binary field dumps and the run manifest.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fracgs/integrator.hpp"

namespace fracgs::io {

/// u0 = u0_mean + u0_amplitude * phi_{u0_mode}, same for v0.
struct InitialData {
  double u0_mean = 1.0;
  double u0_amplitude = 0.0;
  int u0_mode = 1;
  double v0_mean = 0.5;
  double v0_amplitude = 0.0;
  int v0_mode = 1;

  friend bool operator==(const InitialData&, const InitialData&) = default;
};

struct RunOptions {
  double T = 1.0;
  double dt = 1e-3;
  std::size_t paths = 1;
  double kappa = 1e6;
  std::vector<double> kappa_schedule{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool linear_fallback = true;
  std::size_t snapshot_every = 0;
  bool dump_fields = false;
  unsigned threads = 0;
  // fixed-point
  double tol = 1e-8;
  int max_iter = 20;
  double C_T = 1.0;
  double C_kappa = 1.0;
  double C2 = 1.0;
  // estimate
  double m_power = 1.0;
  // convergence: dt = T / 2^level
  int level_min = 6;
  int level_max = 10;
  int reference_level = 14;

  friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

struct RunConfig {
  sde::Problem problem;
  InitialData initial;
  RunOptions run;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.problem.model == b.problem.model && a.problem.space == b.problem.space &&
           a.problem.noise == b.problem.noise && a.problem.scheme == b.problem.scheme &&
           a.initial == b.initial && a.run == b.run;
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Applies `section.key=value` assignments to a JSON document. Values are read
/// as JSON when possible (numbers, booleans, arrays) and as strings otherwise.
std::string apply_overrides(std::string_view text, const std::vector<std::string>& overrides);

/// Parses and validates. An empty document yields the defaults. The grid size
/// 0 is resolved to the dealiased size for the configured q.
RunConfig parse_config(std::string_view text);

/// Normalised JSON with every effective value.
std::string dump_config(const RunConfig& config);

/// Initial fields on the configured space.
std::pair<spectral::Field, spectral::Field> initial_fields(const RunConfig& config);

enum class Subcommand { check_params, simulate, glue, fixed_point, estimate, convergence };
std::string to_string(Subcommand s);
Subcommand subcommand_from_string(const std::string& s);

/// `name:lo:hi:n` over a gate input (q, aleph, alpha, rho, p_star, gamma1, gamma2).
struct SweepAxis {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
};
SweepAxis parse_sweep_axis(const std::string& spec);

struct RunRequest {
  Subcommand command = Subcommand::simulate;
  RunConfig config;
  std::filesystem::path out;
  std::optional<SweepAxis> sweep_x;
  std::optional<SweepAxis> sweep_y;
};

/// Runs one subcommand, writes its artifacts and the manifest (last), and
/// returns the exit status: 0 ok, 1 non-finite state or no convergence.
int run(const RunRequest& request, std::ostream& log);

/// Header t,u_L2,u_Lpstar,v_Halpha,v_Halpha_aleph,h,phi then one row per time point.
void write_norm_series(const std::filesystem::path& file, const sde::PathRecord& record);

/// 64-byte text header (d, boundary, N, field name, time), then the
/// coefficients as little-endian float64.
void write_field_dump(const std::filesystem::path& file, const spectral::Field& field,
                      const std::string& name, double t);

struct FieldDump {
  std::string header;
  std::vector<double> coeffs;
};
FieldDump read_field_dump(const std::filesystem::path& file);

}  // namespace fracgs::io
