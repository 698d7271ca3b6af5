#include "fracgs/cli_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <concepts>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fracgs/estimators.hpp"
#include "fracgs/fixed_point.hpp"
#include "fracgs/parallel.hpp"

#ifndef FRACGS_VERSION
#define FRACGS_VERSION "unknown"
#endif

namespace fracgs::io {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using sde::PathRecord;
using spectral::Field;

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(what), line_(line), column_(column) {}

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

namespace {

json parse_json(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("config parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + e.what(),
                     line, column);
  }
}

/// Reads one section, recording type errors and unknown keys.
class SectionReader {
 public:
  SectionReader(const json& root, std::string name, std::vector<std::string>& errors)
      : name_(std::move(name)), errors_(errors) {
    if (!root.contains(name_)) return;
    const auto& s = root.at(name_);
    if (!s.is_object()) {
      errors_.push_back(name_ + " must be an object");
      return;
    }
    section_ = &s;
  }

  ~SectionReader() {
    if (!section_) return;
    for (const auto& [key, value] : section_->items()) {
      if (!seen_.contains(key)) errors_.push_back("unknown key " + name_ + "." + key);
    }
  }

  SectionReader(const SectionReader&) = delete;
  SectionReader& operator=(const SectionReader&) = delete;

  void read(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else type_error(key, "a number");
    }
  }

  void read(const char* key, int& out) {
    if (const auto* v = find(key)) {
      if (v->is_number_integer()) out = v->get<int>();
      else type_error(key, "an integer");
    }
  }

  template <std::unsigned_integral U>
  void read(const char* key, U& out) {
    if (const auto* v = find(key)) {
      if (v->is_number_unsigned() && v->get<std::uint64_t>() <= std::numeric_limits<U>::max())
        out = v->get<U>();
      else type_error(key, "a non-negative integer");
    }
  }

  void read(const char* key, bool& out) {
    if (const auto* v = find(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else type_error(key, "a boolean");
    }
  }

  void read(const char* key, std::vector<double>& out) {
    if (const auto* v = find(key)) {
      const bool ok = v->is_array() &&
                      std::all_of(v->begin(), v->end(), [](const json& x) { return x.is_number(); });
      if (ok) out = v->get<std::vector<double>>();
      else type_error(key, "an array of numbers");
    }
  }

  template <class Enum, class Convert>
  void read_enum(const char* key, Enum& out, Convert convert) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) {
        type_error(key, "a string");
        return;
      }
      try {
        out = convert(v->get<std::string>());
      } catch (const std::invalid_argument& e) {
        errors_.push_back(name_ + "." + key + ": " + e.what());
      }
    }
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!section_) return nullptr;
    const auto it = section_->find(key);
    return it == section_->end() ? nullptr : &*it;
  }

  void type_error(const char* key, const char* expected) {
    errors_.push_back(name_ + "." + key + " must be " + expected);
  }

  std::string name_;
  std::vector<std::string>& errors_;
  const json* section_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections{"space", "model", "noise", "scheme", "initial", "run"};

void validate_run(const RunConfig& c, std::vector<std::string>& errors) {
  const auto& r = c.run;
  auto require = [&](bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  };
  require(r.T > 0.0 && std::isfinite(r.T), "run.T must be > 0");
  require(r.dt > 0.0 && std::isfinite(r.dt), "run.dt must be > 0");
  if (r.T > 0.0 && r.dt > 0.0) {
    try {
      (void)sde::TimeGrid{r.T, r.dt}.steps();
    } catch (const std::exception&) {
      errors.push_back("run.T must be an integer multiple of run.dt");
    }
  }
  require(r.paths >= 1, "run.paths must be >= 1");
  require(r.kappa > 0.0, "run.kappa must be > 0");
  require(!r.kappa_schedule.empty(), "run.kappa_schedule must not be empty");
  bool increasing = true;
  for (std::size_t i = 0; i < r.kappa_schedule.size(); ++i) {
    if (!(r.kappa_schedule[i] > 0.0) || (i > 0 && r.kappa_schedule[i] <= r.kappa_schedule[i - 1]))
      increasing = false;
  }
  require(increasing, "run.kappa_schedule must be positive and strictly increasing");
  require(r.tol > 0.0, "run.tol must be > 0");
  require(r.max_iter >= 1, "run.max_iter must be >= 1");
  require(r.C_T >= 0.0 && r.C_kappa >= 0.0 && r.C2 >= 0.0, "run.C_T, run.C_kappa, run.C2 must be >= 0");
  require(r.m_power > 0.0, "run.m_power must be > 0");
  require(r.level_min >= 0 && r.level_min < r.level_max, "run.level_min must be >= 0 and < run.level_max");
  require(r.reference_level > r.level_max && r.reference_level <= 24,
          "run.reference_level must exceed run.level_max and be <= 24");

  const auto& s = c.problem.space;
  if ((s.dim == 1 || s.dim == 2) && s.modes >= 2) {
    const int total = s.dim == 1 ? s.modes : s.modes * s.modes;
    require(c.initial.u0_mode >= 0 && c.initial.u0_mode < total, "initial.u0_mode must lie in [0, modes^dim)");
    require(c.initial.v0_mode >= 0 && c.initial.v0_mode < total, "initial.v0_mode must lie in [0, modes^dim)");
  }
}

}  // namespace

std::string apply_overrides(std::string_view text, const std::vector<std::string>& overrides) {
  json root = parse_json(text);
  std::vector<std::string> errors;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
      errors.push_back("override '" + o + "' must look like section.key=value");
      continue;
    }
    const std::string section = o.substr(0, dot);
    const std::string key = o.substr(dot + 1, eq - dot - 1);
    const std::string raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    if (!root.is_object()) root = json::object();
    if (!root.contains(section) || !root[section].is_object()) root[section] = json::object();
    root[section][key] = std::move(value);
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return root.dump(2);
}

RunConfig parse_config(std::string_view text) {
  const json root = parse_json(text);
  std::vector<std::string> errors;
  if (!root.is_object()) throw ValidationError({"config must be a JSON object"});
  for (const auto& [key, value] : root.items()) {
    if (!kSections.contains(key)) errors.push_back("unknown section " + key);
  }

  RunConfig c;
  auto& space = c.problem.space;
  space.grid = 0;
  {
    SectionReader s(root, "space", errors);
    s.read("dim", space.dim);
    s.read_enum("boundary", space.boundary, spectral::boundary_from_string);
    s.read("modes", space.modes);
    s.read("grid", space.grid);
  }
  auto& m = c.problem.model;
  {
    SectionReader s(root, "model", errors);
    s.read("r1", m.r1);
    s.read("r2", m.r2);
    s.read("a1", m.a1);
    s.read("a2", m.a2);
    s.read("b1", m.b1);
    s.read("b2", m.b2);
    s.read("c1", m.c1);
    s.read("c2", m.c2);
    s.read("sigma1", m.sigma1);
    s.read("sigma2", m.sigma2);
    s.read("q", m.q);
    s.read("aleph", m.aleph);
    s.read("rho", m.rho);
    s.read("alpha", m.alpha);
    s.read("p_star", m.p_star);
    s.read("lambda", m.lambda);
  }
  auto& n = c.problem.noise;
  {
    SectionReader s(root, "noise", errors);
    s.read("gamma1", n.gamma1);
    s.read("gamma2", n.gamma2);
    s.read("modes", n.modes);
    s.read_enum("interpretation", n.interpretation, noise::interpretation_from_string);
    s.read("stratonovich_correction", n.stratonovich_correction);
    s.read_enum("zero_mode", n.zero_mode, spectral::zero_mode_policy_from_string);
    s.read("seed", n.seed);
  }
  auto& sc = c.problem.scheme;
  {
    SectionReader s(root, "scheme", errors);
    s.read_enum("variant", sc.variant, sde::scheme_variant_from_string);
    s.read_enum("power", sc.power, sde::power_policy_from_string);
    s.read_enum("fallback", sc.fallback, sde::linear_fallback_from_string);
  }
  auto& in = c.initial;
  {
    SectionReader s(root, "initial", errors);
    s.read("u0_mean", in.u0_mean);
    s.read("u0_amplitude", in.u0_amplitude);
    s.read("u0_mode", in.u0_mode);
    s.read("v0_mean", in.v0_mean);
    s.read("v0_amplitude", in.v0_amplitude);
    s.read("v0_mode", in.v0_mode);
  }
  auto& r = c.run;
  {
    SectionReader s(root, "run", errors);
    s.read("T", r.T);
    s.read("dt", r.dt);
    s.read("paths", r.paths);
    s.read("kappa", r.kappa);
    s.read("kappa_schedule", r.kappa_schedule);
    s.read("linear_fallback", r.linear_fallback);
    s.read("snapshot_every", r.snapshot_every);
    s.read("dump_fields", r.dump_fields);
    s.read("threads", r.threads);
    s.read("tol", r.tol);
    s.read("max_iter", r.max_iter);
    s.read("C_T", r.C_T);
    s.read("C_kappa", r.C_kappa);
    s.read("C2", r.C2);
    s.read("m_power", r.m_power);
    s.read("level_min", r.level_min);
    s.read("level_max", r.level_max);
    s.read("reference_level", r.reference_level);
  }

  if (space.grid == 0 && space.modes >= 2)
    space.grid = spectral::dealiased_grid_points(space.boundary, space.modes, m.q);
  for (auto& e : spectral::validate(space)) errors.push_back(std::move(e));
  for (auto& e : sde::validate(m)) errors.push_back(std::move(e));
  if (spectral::validate(space).empty()) {
    for (auto& e : noise::validate(n, space)) errors.push_back(std::move(e));
  }
  validate_run(c, errors);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

namespace {

ordered_json config_json(const RunConfig& c) {
  const auto& s = c.problem.space;
  const auto& m = c.problem.model;
  const auto& n = c.problem.noise;
  const auto& sc = c.problem.scheme;
  const auto& in = c.initial;
  const auto& r = c.run;
  ordered_json j;
  j["space"] = {{"dim", s.dim},
                {"boundary", spectral::to_string(s.boundary)},
                {"modes", s.modes},
                {"grid", s.grid}};
  j["model"] = {{"r1", m.r1},         {"r2", m.r2},         {"a1", m.a1},     {"a2", m.a2},
                {"b1", m.b1},         {"b2", m.b2},         {"c1", m.c1},     {"c2", m.c2},
                {"sigma1", m.sigma1}, {"sigma2", m.sigma2}, {"q", m.q},       {"aleph", m.aleph},
                {"rho", m.rho},       {"alpha", m.alpha},   {"p_star", m.p_star},
                {"lambda", m.lambda}};
  j["noise"] = {{"gamma1", n.gamma1},
                {"gamma2", n.gamma2},
                {"modes", n.modes},
                {"interpretation", noise::to_string(n.interpretation)},
                {"stratonovich_correction", n.stratonovich_correction},
                {"zero_mode", spectral::to_string(n.zero_mode)},
                {"seed", n.seed}};
  j["scheme"] = {{"variant", sde::to_string(sc.variant)},
                 {"power", sde::to_string(sc.power)},
                 {"fallback", sde::to_string(sc.fallback)}};
  j["initial"] = {{"u0_mean", in.u0_mean}, {"u0_amplitude", in.u0_amplitude},
                  {"u0_mode", in.u0_mode}, {"v0_mean", in.v0_mean},
                  {"v0_amplitude", in.v0_amplitude}, {"v0_mode", in.v0_mode}};
  j["run"] = {{"T", r.T},
              {"dt", r.dt},
              {"paths", r.paths},
              {"kappa", r.kappa},
              {"kappa_schedule", r.kappa_schedule},
              {"linear_fallback", r.linear_fallback},
              {"snapshot_every", r.snapshot_every},
              {"dump_fields", r.dump_fields},
              {"threads", r.threads},
              {"tol", r.tol},
              {"max_iter", r.max_iter},
              {"C_T", r.C_T},
              {"C_kappa", r.C_kappa},
              {"C2", r.C2},
              {"m_power", r.m_power},
              {"level_min", r.level_min},
              {"level_max", r.level_max},
              {"reference_level", r.reference_level}};
  return j;
}

}  // namespace

std::string dump_config(const RunConfig& config) { return config_json(config).dump(2) + "\n"; }

std::pair<Field, Field> initial_fields(const RunConfig& config) {
  const auto basis = spectral::Basis::get(config.problem.space);
  const auto& in = config.initial;
  Field u = Field::constant(basis, in.u0_mean);
  u += Field::mode(basis, static_cast<std::size_t>(in.u0_mode), in.u0_amplitude);
  Field v = Field::constant(basis, in.v0_mean);
  v += Field::mode(basis, static_cast<std::size_t>(in.v0_mode), in.v0_amplitude);
  return {std::move(u), std::move(v)};
}

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::check_params: return "check-params";
    case Subcommand::simulate: return "simulate";
    case Subcommand::glue: return "glue";
    case Subcommand::fixed_point: return "fixed-point";
    case Subcommand::estimate: return "estimate";
    case Subcommand::convergence: return "convergence";
  }
  return "?";
}

Subcommand subcommand_from_string(const std::string& s) {
  for (auto c : {Subcommand::check_params, Subcommand::simulate, Subcommand::glue,
                 Subcommand::fixed_point, Subcommand::estimate, Subcommand::convergence}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown subcommand '" + s + "'");
}

namespace {

double gate::GateInputs::*sweep_member(const std::string& name) {
  static const std::map<std::string, double gate::GateInputs::*> members{
      {"q", &gate::GateInputs::q},           {"aleph", &gate::GateInputs::aleph},
      {"alpha", &gate::GateInputs::alpha},   {"rho", &gate::GateInputs::rho},
      {"p_star", &gate::GateInputs::p_star}, {"gamma1", &gate::GateInputs::gamma1},
      {"gamma2", &gate::GateInputs::gamma2}};
  const auto it = members.find(name);
  if (it == members.end()) throw std::invalid_argument("unknown sweep parameter '" + name + "'");
  return it->second;
}

}  // namespace

SweepAxis parse_sweep_axis(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 4) throw std::invalid_argument("sweep axis must be name:lo:hi:n, got '" + spec + "'");
  SweepAxis axis;
  axis.name = parts[0];
  (void)sweep_member(axis.name);
  try {
    axis.lo = std::stod(parts[1]);
    axis.hi = std::stod(parts[2]);
    axis.n = std::stoi(parts[3]);
  } catch (const std::exception&) {
    throw std::invalid_argument("sweep axis must be name:lo:hi:n, got '" + spec + "'");
  }
  if (axis.n < 1) throw std::invalid_argument("sweep axis needs n >= 1");
  return axis;
}

// ---------------------------------------------------------------- writers

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& file, std::ios::openmode mode = std::ios::out) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream os(file, mode | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  return os;
}

void write_text(const fs::path& file, const std::string& text) {
  auto os = open_out(file);
  os << text;
}

}  // namespace

void write_norm_series(const fs::path& file, const PathRecord& record) {
  auto os = open_out(file);
  os << "t,u_L2,u_Lpstar,v_Halpha,v_Halpha_aleph,h,phi\n";
  const auto& s = record.series;
  for (std::size_t n = 0; n < s.size(); ++n) {
    os << format_double(s.t[n]) << ',' << format_double(s.u_l2[n]) << ','
       << format_double(s.u_lp[n]) << ',' << format_double(s.v_halpha[n]) << ','
       << format_double(s.v_halpha_diss[n]) << ',' << format_double(s.h[n]) << ','
       << format_double(s.phi[n]) << '\n';
  }
}

void write_field_dump(const fs::path& file, const Field& field, const std::string& name, double t) {
  const auto& space = field.basis().space();
  char header[64];
  std::memset(header, ' ', sizeof header);
  char text[80];
  const int len = std::snprintf(text, sizeof text, "fracgs d=%d boundary=%s N=%d field=%.8s t=%.17g",
                                space.dim, spectral::to_string(space.boundary).c_str(), space.modes,
                                name.c_str(), t);
  if (len < 0 || len > 63) throw std::invalid_argument("field dump header too long");
  std::memcpy(header, text, static_cast<std::size_t>(len));
  header[63] = '\n';
  auto os = open_out(file, std::ios::out | std::ios::binary);
  os.write(header, sizeof header);
  for (double c : field.coeffs()) {
    auto bits = std::bit_cast<std::uint64_t>(c);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    os.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

FieldDump read_field_dump(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + file.string());
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (data.size() < 64 || (data.size() - 64) % 8 != 0)
    throw std::runtime_error("malformed field dump " + file.string());
  FieldDump dump;
  dump.header = data.substr(0, 64);
  dump.header.erase(dump.header.find_last_not_of(" \n") + 1);
  for (std::size_t i = 64; i < data.size(); i += 8) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[i + b])) << (8 * b);
    dump.coeffs.push_back(std::bit_cast<double>(bits));
  }
  return dump;
}

// ---------------------------------------------------------------- run

namespace {

enum class Status { ok, non_finite, no_convergence, schedule_exhausted };

const char* status_name(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::non_finite: return "non_finite";
    case Status::no_convergence: return "no_convergence";
    case Status::schedule_exhausted: return "schedule_exhausted";
  }
  return "?";
}

/// Collects outputs, warnings and per-path failures from concurrent workers.
class RunState {
 public:
  explicit RunState(fs::path out) : out_(std::move(out)) {}

  const fs::path& out() const { return out_; }

  fs::path file(const std::string& relative) {
    const std::lock_guard lock(mutex_);
    outputs_.insert(relative);
    return out_ / relative;
  }

  void warn(const std::vector<std::string>& warnings) {
    const std::lock_guard lock(mutex_);
    warnings_.insert(warnings.begin(), warnings.end());
  }

  void fail(std::size_t path, Status status, const std::string& what) {
    const std::lock_guard lock(mutex_);
    failures_[path] = {status, what};
  }

  Status status() const {
    return failures_.empty() ? Status::ok : failures_.begin()->second.first;
  }

  ordered_json failures_json() const {
    ordered_json arr = ordered_json::array();
    for (const auto& [path, f] : failures_)
      arr.push_back({{"path", path}, {"status", status_name(f.first)}, {"error", f.second}});
    return arr;
  }

  std::vector<std::string> outputs() const { return {outputs_.begin(), outputs_.end()}; }
  std::vector<std::string> warnings() const { return {warnings_.begin(), warnings_.end()}; }

 private:
  fs::path out_;
  std::mutex mutex_;
  std::set<std::string> outputs_;
  std::set<std::string> warnings_;
  std::map<std::size_t, std::pair<Status, std::string>> failures_;
};

std::string path_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%05zu", i);
  return buf;
}

void write_record(RunState& state, std::size_t i, const PathRecord& record, bool dump_fields) {
  write_norm_series(state.file("paths/" + path_name(i) + ".csv"), record);
  state.warn(record.warnings);
  if (!dump_fields) return;
  for (std::size_t s = 0; s < record.snapshot_times.size(); ++s) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%05zu", s);
    const std::string stem = "fields/" + path_name(i) + suffix;
    write_field_dump(state.file(stem + "_u.bin"), record.u_snapshots[s], "u", record.snapshot_times[s]);
    write_field_dump(state.file(stem + "_v.bin"), record.v_snapshots[s], "v", record.snapshot_times[s]);
  }
}

/// Runs `body(i)` per path, mapping solver failures to statuses.
template <class Body>
void for_each_path(RunState& state, std::size_t paths, unsigned threads, Body body) {
  parallel_for(paths, threads, [&](std::size_t i) {
    try {
      body(i);
    } catch (const sde::NonFiniteError& e) {
      state.fail(i, Status::non_finite, e.what());
    } catch (const fixed_point::NoConvergence& e) {
      state.fail(i, Status::no_convergence, e.what());
    } catch (const sde::ScheduleExhausted& e) {
      state.fail(i, Status::schedule_exhausted, e.what());
    }
  });
}

std::vector<double> axis_values(const SweepAxis& a) {
  std::vector<double> v(static_cast<std::size_t>(a.n));
  for (int i = 0; i < a.n; ++i)
    v[static_cast<std::size_t>(i)] = a.n == 1 ? a.lo : a.lo + (a.hi - a.lo) * i / (a.n - 1);
  return v;
}

void run_check_params(const RunRequest& req, RunState& state, std::ostream& log) {
  const auto base = sde::gate_inputs(req.config.problem);
  const auto report = gate::evaluate(base);
  const std::string text = gate::format_report(report);
  log << text;
  write_text(state.file("report.txt"), text);
  if (!req.sweep_x) return;

  const SweepAxis y = req.sweep_y.value_or(SweepAxis{"", 0.0, 0.0, 1});
  const auto xs = axis_values(*req.sweep_x);
  const auto ys = axis_values(y);
  std::ostringstream csv;
  csv << req.sweep_x->name << ',' << (y.name.empty() ? "y" : y.name)
      << ",admissible,special_case_d2q2,min_margin,failed\n";
  for (double yv : ys) {
    for (double xv : xs) {
      auto in = base;
      in.*sweep_member(req.sweep_x->name) = xv;
      if (!y.name.empty()) in.*sweep_member(y.name) = yv;
      const auto r = gate::evaluate(in);
      double min_margin = std::numeric_limits<double>::infinity();
      std::string failed;
      for (const auto& c : r.conditions) {
        min_margin = std::min(min_margin, c.margin);
        if (!c.satisfied) failed += (failed.empty() ? "" : ";") + c.name;
      }
      csv << format_double(xv) << ',' << (y.name.empty() ? "" : format_double(yv)) << ','
          << (r.overall() ? 1 : 0) << ',' << (r.special_case_d2q2 ? 1 : 0) << ','
          << format_double(min_margin) << ',' << failed << '\n';
    }
  }
  write_text(state.file("sweep.csv"), csv.str());
}

sde::RecordOptions record_options(const RunOptions& r) {
  sde::RecordOptions o;
  o.snapshot_every = r.snapshot_every;
  return o;
}

void run_simulate(const RunRequest& req, RunState& state, bool glued) {
  const auto& c = req.config;
  const auto [u0, v0] = initial_fields(c);
  const sde::TimeGrid grid{c.run.T, c.run.dt};
  std::vector<std::vector<sde::GlueEvent>> events(c.run.paths);
  for_each_path(state, c.run.paths, c.run.threads, [&](std::size_t i) {
    const auto id = static_cast<std::uint32_t>(i);
    PathRecord rec;
    if (glued) {
      sde::GlueOptions g;
      g.linear_fallback = c.run.linear_fallback;
      g.record = record_options(c.run);
      rec = sde::simulate_glued(c.problem, u0, v0, c.run.kappa_schedule, grid, id, g);
    } else {
      rec = sde::simulate_path(c.problem, u0, v0, c.run.kappa, grid, id, record_options(c.run));
    }
    events[i] = rec.glue_events;
    write_record(state, i, rec, c.run.dump_fields);
  });
  if (!glued) return;
  std::ostringstream csv;
  csv << "path,kappa,time,step\n";
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (const auto& e : events[i])
      csv << i << ',' << format_double(e.kappa) << ',' << format_double(e.time) << ',' << e.step << '\n';
  }
  write_text(state.file("glue_events.csv"), csv.str());
}

void run_fixed_point(const RunRequest& req, RunState& state) {
  const auto& c = req.config;
  const auto& m = c.problem.model;
  const auto [u0, v0] = initial_fields(c);
  const sde::TimeGrid grid{c.run.T, c.run.dt};

  fixed_point::KSetInputs kin;
  kin.u0_l2_sq = u0.l2_norm() * u0.l2_norm();
  kin.u0_lp_pow = std::pow(spectral::lp_norm(u0, m.p_star), m.p_star);
  kin.v0_hrho_sq = spectral::sobolev_norm_squared(v0, m.rho);
  kin.kappa = c.run.kappa;
  kin.T = c.run.T;
  kin.lambda = m.lambda;
  kin.C_T = c.run.C_T;
  kin.C_kappa = c.run.C_kappa;
  kin.C2 = c.run.C2;
  kin.p_star = m.p_star;
  const auto constants = fixed_point::compute_kset_constants(kin);

  const std::size_t M = c.run.paths;
  std::vector<std::vector<double>> residuals(M);
  std::vector<std::optional<fixed_point::KSetVerdict>> verdicts(M);
  for_each_path(state, M, c.run.threads, [&](std::size_t i) {
    const auto id = static_cast<std::uint32_t>(i);
    try {
      const auto r = fixed_point::picard_solve(c.problem, u0, v0, c.run.kappa, grid, id, c.run.tol,
                                               c.run.max_iter);
      residuals[i] = r.residuals;
      verdicts[i] = fixed_point::kset_check(r.fixed_point, constants, m.rho, m.aleph, m.p_star, m.lambda);
      const auto rec = sde::make_record(c.problem, c.run.dt, r.fixed_point.eta, r.fixed_point.xi,
                                        c.run.kappa);
      write_record(state, i, rec, false);
    } catch (const fixed_point::NoConvergence& e) {
      residuals[i] = e.residuals();
      throw;
    }
  });

  std::ostringstream res;
  res << "path,iteration,residual\n";
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t k = 0; k < residuals[i].size(); ++k)
      res << i << ',' << k + 1 << ',' << format_double(residuals[i][k]) << '\n';
  }
  write_text(state.file("residuals.csv"), res.str());

  std::ostringstream ks;
  ks << "path,in_set,K1,K2,K3,eta_h02_sq,eta_lp_sup,xi_hrho_sq,margin1,margin2,margin3\n";
  for (std::size_t i = 0; i < M; ++i) {
    if (!verdicts[i]) continue;
    const auto& v = *verdicts[i];
    ks << i << ',' << (v.in_set ? 1 : 0) << ',' << format_double(constants.K1) << ','
       << format_double(constants.K2) << ',' << format_double(constants.K3) << ','
       << format_double(v.values.eta_h02_sq) << ',' << format_double(v.values.eta_lp_sup) << ','
       << format_double(v.values.xi_hrho_sq) << ',' << format_double(v.margins[0]) << ','
       << format_double(v.margins[1]) << ',' << format_double(v.margins[2]) << '\n';
  }
  write_text(state.file("kset.csv"), ks.str());

  std::array<std::vector<double>, 3> values;
  std::array<std::size_t, 3> violations{};
  for (const auto& v : verdicts) {
    if (!v) continue;
    values[0].push_back(v->values.eta_h02_sq);
    values[1].push_back(v->values.eta_lp_sup);
    values[2].push_back(v->values.xi_hrho_sq);
    for (std::size_t j = 0; j < 3; ++j) violations[j] += v->margins[j] < 0.0;
  }
  const std::array<double, 3> bounds{constants.K1, constants.K2, constants.K3};
  const char* names[] = {"eta_h02_sq", "eta_lp_sup", "xi_hrho_sq"};
  std::ostringstream rep;
  char line[200];
  std::snprintf(line, sizeof line, "%-12s %6s %16s %16s %16s %8s %10s\n", "functional", "M", "mean",
                "ci_half_width", "K", "mean_ok", "pathwise");
  rep << line;
  for (std::size_t j = 0; j < 3; ++j) {
    const std::size_t n = values[j].size();
    double mean = 0.0, hw = 0.0;
    if (n >= 2) {
      const auto r = estimators::summarize(names[j], values[j], false);
      mean = r.estimate;
      hw = r.ci_half_width;
    } else if (n == 1) {
      mean = values[j][0];
    }
    const double fraction = n ? static_cast<double>(violations[j]) / static_cast<double>(n) : 0.0;
    std::snprintf(line, sizeof line, "%-12s %6zu %16.8g %16.8g %16.8g %8s %10.4f\n", names[j], n, mean, hw,
                  bounds[j], n && mean <= bounds[j] ? "yes" : "no", fraction);
    rep << line;
  }
  write_text(state.file("report.txt"), rep.str());
}

void moment_row(std::ostream& os, const estimators::MomentReport& r) {
  os << r.name << ',' << r.M << ',' << format_double(r.estimate) << ','
     << format_double(r.ci_half_width) << '\n';
}

void run_estimate(const RunRequest& req, RunState& state) {
  const auto& c = req.config;
  if (c.run.paths < 2) throw ValidationError({"estimate needs run.paths >= 2"});
  const auto [u0, v0] = initial_fields(c);
  const sde::TimeGrid grid{c.run.T, c.run.dt};
  std::vector<std::optional<PathRecord>> slots(c.run.paths);
  for_each_path(state, c.run.paths, c.run.threads, [&](std::size_t i) {
    auto rec = sde::simulate_path(c.problem, u0, v0, c.run.kappa, grid, static_cast<std::uint32_t>(i),
                                  record_options(c.run));
    write_record(state, i, rec, c.run.dump_fields);
    slots[i] = std::move(rec);
  });
  if (state.status() != Status::ok) return;
  std::vector<PathRecord> records;
  records.reserve(slots.size());
  for (auto& s : slots) records.push_back(std::move(*s));

  const auto& m = c.problem.model;
  const auto est = estimators::moment_bounds(records, u0, v0);
  const auto coupling = estimators::estimate_coupling(records, m.p_star, m.q, c.run.m_power);
  const std::vector<const estimators::MomentReport*> rows{
      &est.u_l2, &est.u_pstar.sup, &est.u_pstar.gradient, &est.v_halpha.sup, &est.v_halpha.dissipation, &coupling};
  std::ostringstream csv;
  csv << "name,M,estimate,ci_half_width\n";
  for (const auto* r : rows) moment_row(csv, *r);
  write_text(state.file("moments.csv"), csv.str());

  std::ostringstream rep;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %8s %16s %16s\n", "quantity", "M", "estimate", "ci_half_width");
  rep << line;
  for (const auto* r : rows) {
    std::snprintf(line, sizeof line, "%-24s %8zu %16.8g %16.8g\n", r->name.c_str(), r->M, r->estimate,
                  r->ci_half_width);
    rep << line;
  }
  rep << '\n';
  for (const auto& [name, value] : {std::pair{"lhs_est1", est.lhs_est1}, {"lhs_est33", est.lhs_est33},
                                    {"lhs_est2", est.lhs_est2}, {"C_est1", est.C_est1},
                                    {"C_est33", est.C_est33}, {"C1_est2", est.C1_est2}}) {
    std::snprintf(line, sizeof line, "%-24s %16.8g\n", name, value);
    rep << line;
  }
  write_text(state.file("report.txt"), rep.str());
}

void run_convergence(const RunRequest& req, RunState& state) {
  const auto& c = req.config;
  const auto [u0, v0] = initial_fields(c);
  std::vector<int> levels;
  for (int l = c.run.level_min; l <= c.run.level_max; ++l) levels.push_back(l);
  try {
    const auto study = estimators::strong_convergence(c.problem, u0, v0, c.run.kappa, c.run.T, levels,
                                                      c.run.reference_level, c.run.paths, 0,
                                                      c.run.threads);
    std::ostringstream csv;
    csv << "level,dt,error\n";
    for (std::size_t i = 0; i < study.levels.size(); ++i)
      csv << study.levels[i] << ',' << format_double(study.dt[i]) << ','
          << format_double(study.error[i]) << '\n';
    write_text(state.file("convergence.csv"), csv.str());
    write_text(state.file("report.txt"), "reference_level " + std::to_string(study.reference_level) +
                                             "\norder " + format_double(study.order) + "\n");
  } catch (const sde::NonFiniteError& e) {
    state.fail(0, Status::non_finite, e.what());
  }
}

}  // namespace

int run(const RunRequest& req, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(req.out);
  RunState state(req.out);

  switch (req.command) {
    case Subcommand::check_params: run_check_params(req, state, log); break;
    case Subcommand::simulate: run_simulate(req, state, false); break;
    case Subcommand::glue: run_simulate(req, state, true); break;
    case Subcommand::fixed_point: run_fixed_point(req, state); break;
    case Subcommand::estimate: run_estimate(req, state); break;
    case Subcommand::convergence: run_convergence(req, state); break;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Status status = state.status();
  ordered_json manifest;
  manifest["version"] = FRACGS_VERSION;
  manifest["subcommand"] = to_string(req.command);
  manifest["seed"] = req.config.problem.noise.seed;
  manifest["config"] = config_json(req.config);
  manifest["wall_time_s"] = wall;
  manifest["status"] = status_name(status);
  manifest["partial"] = status != Status::ok;
  manifest["failures"] = state.failures_json();
  manifest["outputs"] = state.outputs();
  manifest["warnings"] = state.warnings();
  write_text(req.out / "manifest.json", manifest.dump(2) + "\n");

  log << to_string(req.command) << ": " << status_name(status) << ", " << state.outputs().size()
      << " files in " << req.out.string() << '\n';
  for (const auto& w : state.warnings()) log << "warning: " << w << '\n';
  return status == Status::ok ? 0 : 1;
}

}  // namespace fracgs::io
