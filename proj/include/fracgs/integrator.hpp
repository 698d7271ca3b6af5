#pragma once

// Exponential-Euler time stepping of the (cut-off) activator-inhibitor system
//
//   du = [r1 Lap u + a1 u + b1 - c1 phi u v^q] dt + sigma1 g_{gamma1}(u) dW1
//   dv = [r2 A v   + a2 v + b2 + c2 phi u v^q] dt + sigma2 g_{gamma2}(v) dW2
//
// with A = -(-Lap)^{aleph/2} and phi = psi(h / kappa) driven by the running
// path norm h of v. The linear parts are integrated exactly in the eigenbasis,
// the reaction and noise terms explicitly.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracgs/noise.hpp"
#include "fracgs/param_gate.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs::sde {

using noise::IncrementSource;
using noise::NoiseConfig;
using noise::WienerIncrement;
using spectral::Basis;
using spectral::Field;
using spectral::SpaceConfig;

struct ModelParams {
  double r1 = 1.0;
  double r2 = 1.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double q = 2.0;
  double aleph = 2.0;
  double rho = 0.0;    ///< path-space smoothness index of the cut-off norm
  double alpha = 0.0;  ///< smoothness index of the uniform v bound, alpha >= rho
  double p_star = 8.0;
  double lambda = 0.0;  ///< exponential weight of the p*-functional

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

std::vector<std::string> validate(const ModelParams& params);

enum class SchemeVariant {
  explicit_euler,  ///< reaction term fully explicit
  semi_implicit,   ///< c1 phi v^q u treated as a linear decay on u
};

enum class PowerPolicy {
  clipped,   ///< max(v, 0)^q
  absolute,  ///< |v|^q
};

enum class LinearFallback {
  as_written,  ///< after the last stop: r1 Lap u, r2 Lap v and the noise only
  full,        ///< after the last stop: the full linear part, reaction removed
};

struct SchemeOptions {
  SchemeVariant variant = SchemeVariant::explicit_euler;
  PowerPolicy power = PowerPolicy::clipped;
  LinearFallback fallback = LinearFallback::as_written;

  friend bool operator==(const SchemeOptions&, const SchemeOptions&) = default;
};

std::string to_string(SchemeVariant v);
std::string to_string(PowerPolicy p);
std::string to_string(LinearFallback f);
SchemeVariant scheme_variant_from_string(const std::string& s);
PowerPolicy power_policy_from_string(const std::string& s);
LinearFallback linear_fallback_from_string(const std::string& s);

struct Problem {
  ModelParams model;
  SpaceConfig space;
  NoiseConfig noise;
  SchemeOptions scheme;
};

gate::GateInputs gate_inputs(const Problem& problem);

struct TimeGrid {
  double T = 1.0;
  double dt = 1e-3;
  /// round(T / dt); throws if T is not an integer multiple of dt.
  std::size_t steps() const;
  double time(std::size_t n) const { return static_cast<double>(n) * dt; }
};

class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(std::size_t step)
      : std::runtime_error("non-finite state at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class ScheduleExhausted : public std::runtime_error {
 public:
  explicit ScheduleExhausted(double t)
      : std::runtime_error("cut-off schedule exhausted at t = " + std::to_string(t)) {}
};

/// Smooth cut-off: 1 on |x| <= 1, 0 on |x| >= 2, C-infinity in between.
double cutoff_psi(double x);

/// Running path norm h(t) = sup_{s<=t} |v(s)|_{H^rho} + (int_0^t |v|^2_{H^{rho+aleph/2}})^{1/2}
/// (trapezoid in time) and phi = psi(h / kappa).
struct CutoffState {
  double kappa = 1.0;
  double running_sup = 0.0;
  double running_int = 0.0;
  double last_dissipation = 0.0;  ///< |v|^2_{H^{rho+aleph/2}} at the latest time
  double h_value = 0.0;
  double phi_value = 1.0;

  static CutoffState start(double kappa, double v_rho_norm, double v_dissipation_sq);
  void advance(double v_rho_norm, double v_dissipation_sq, double dt);
};

CutoffState start_cutoff(const Field& v, const ModelParams& params, double kappa);

/// One exponential-Euler step for fixed operators. Shared by the direct
/// integrator and the fixed-point operator so both realise the same scheme.
class MildStepper {
 public:
  MildStepper(const Problem& problem, double dt);

  /// Linear continuation used after the last stopping time.
  static MildStepper linear_fallback(const Problem& problem, double dt);

  const Basis& basis() const { return *basis_; }
  std::size_t noise_modes() const { return noise_modes_; }
  double dt() const { return dt_; }

  /// v^q under the configured power policy.
  double power(double v) const;

  /// Advance (u, v) by one step. `rate` holds phi * |xi|^q on the grid and
  /// `eta` the grid values multiplying it (eta = u for the coupled system).
  void advance(const Field& u, const Field& v, std::span<const double> u_grid,
               std::span<const double> v_grid, std::span<const double> rate,
               std::span<const double> eta, std::span<const double> dw1,
               std::span<const double> dw2, Field& u_out, Field& v_out) const;

 private:
  MildStepper(const Problem& problem, double dt, bool linear);

  std::shared_ptr<const Basis> basis_;
  ModelParams model_;
  SchemeOptions scheme_;
  double dt_;
  std::size_t noise_modes_;
  std::vector<double> e1_;
  std::vector<double> e2_;
  noise::NoiseOperator g1_;
  noise::NoiseOperator g2_;
  std::vector<double> strat1_;  // (sigma1^2 / 2) * profile, empty when off
  std::vector<double> strat2_;
};

struct StepResult {
  Field u;
  Field v;
  CutoffState cutoff;
};

/// One exponential-Euler step of the cut-off system.
StepResult step_mild(const Field& u, const Field& v, const Problem& problem,
                     const CutoffState& cutoff, const WienerIncrement& inc1,
                     const WienerIncrement& inc2, double dt);

/// Per-time-point norms. Columns t .. phi are the exported norm series.
struct NormSeries {
  std::vector<double> t;
  std::vector<double> u_l2;            ///< |u|_{L2}
  std::vector<double> u_lp;            ///< |u|_{L^{p*}}
  std::vector<double> v_halpha;        ///< |v|_{H^alpha}
  std::vector<double> v_halpha_diss;   ///< |v|_{H^{alpha+aleph/2}}
  std::vector<double> h;
  std::vector<double> phi;
  std::vector<double> v_hrho;          ///< |v|_{H^rho}
  std::vector<double> v_hrho_diss_sq;  ///< |v|^2_{H^{rho+aleph/2}}
  std::vector<double> u_gradient;      ///< | |u|^{p*/2-1} grad u |^2_{L2}
  std::vector<double> coupling;        ///< int u_+^{p*} v_+^q dx
  std::vector<double> u_min;           ///< grid minimum of u
  std::vector<double> v_min;           ///< grid minimum of v

  std::size_t size() const { return t.size(); }
};

struct GlueEvent {
  double kappa = 0.0;
  double time = 0.0;
  std::size_t step = 0;
};

struct PathRecord {
  ModelParams params;
  SpaceConfig space;
  double dt = 0.0;
  double kappa = 0.0;
  std::uint32_t path_id = 0;
  NormSeries series;
  std::vector<double> snapshot_times;
  std::vector<Field> u_snapshots;
  std::vector<Field> v_snapshots;
  std::optional<double> stop_time;
  std::optional<std::size_t> stop_step;
  std::vector<GlueEvent> glue_events;
  std::vector<std::string> warnings;
  bool gate_admissible = true;
};

struct RecordOptions {
  /// Store fields every `snapshot_every` steps (0: initial and final only).
  std::size_t snapshot_every = 0;
};

/// Norms of one (u, v) state as stored in the series (phi and h excluded).
void append_norms(NormSeries& series, double t, const Field& u, const Field& v,
                  std::span<const double> u_grid, std::span<const double> v_grid,
                  const ModelParams& params, PowerPolicy power);

/// Builds a record from a given trajectory (e.g. a frozen field), with the
/// cut-off evaluated at `kappa`.
PathRecord make_record(const Problem& problem, double dt, const std::vector<Field>& u_path,
                       const std::vector<Field>& v_path, double kappa);

PathRecord simulate_path(const Problem& problem, const Field& u0, const Field& v0, double kappa,
                         const TimeGrid& grid, std::uint32_t path_id,
                         const RecordOptions& options = {});

/// Same with an explicit increment source (e.g. a Brownian tree).
PathRecord simulate_path(const Problem& problem, const Field& u0, const Field& v0, double kappa,
                         const TimeGrid& grid, const IncrementSource& source,
                         std::uint32_t path_id, const RecordOptions& options = {});

struct GlueOptions {
  bool linear_fallback = true;
  RecordOptions record;
};

/// Concatenates cut-off solutions: the kappa_i system runs until its path norm
/// reaches kappa_i, then restarts from the stopped state with kappa_{i+1} on a
/// fresh noise segment; after the last level the linear system takes over.
PathRecord simulate_glued(const Problem& problem, const Field& u0, const Field& v0,
                          const std::vector<double>& kappa_schedule, const TimeGrid& grid,
                          std::uint32_t path_id, const GlueOptions& options = {});

/// Paths first_path .. first_path + paths - 1 on `threads` workers (0: hardware
/// concurrency). Output order follows the path index, whatever the scheduling.
std::vector<PathRecord> simulate_ensemble(const Problem& problem, const Field& u0, const Field& v0,
                                          double kappa, const TimeGrid& grid, std::size_t paths,
                                          std::uint32_t first_path = 0, unsigned threads = 0,
                                          const RecordOptions& options = {});

/// sup_{s<=t} |v|_{H^rho} + (trapezoid int_0^t |v|^2_{H^{rho+aleph/2}})^{1/2}.
/// Uses the stored series when (rho, aleph) match the record, otherwise the
/// snapshots, which must then be stored at every step.
double pathspace_norm(const PathRecord& record, double rho, double aleph, double t);

}  // namespace fracgs::sde
