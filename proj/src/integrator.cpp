#include "fracgs/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracgs/parallel.hpp"

namespace fracgs::sde {

using spectral::Generator;
using spectral::OperatorKind;

std::vector<std::string> validate(const ModelParams& p) {
  std::vector<std::string> errors;
  auto require = [&](bool ok, const char* message) {
    if (!ok) errors.emplace_back(message);
  };
  require(p.r1 > 0.0, "model.r1 must be > 0");
  require(p.r2 > 0.0, "model.r2 must be > 0");
  require(p.b1 >= 0.0, "model.b1 must be >= 0");
  require(p.b2 >= 0.0, "model.b2 must be >= 0");
  require(p.c1 >= 0.0, "model.c1 must be >= 0");
  require(p.c2 >= 0.0, "model.c2 must be >= 0");
  require(p.sigma1 >= 0.0, "model.sigma1 must be >= 0");
  require(p.sigma2 >= 0.0, "model.sigma2 must be >= 0");
  require(p.q >= 1.0, "model.q must be >= 1");
  require(p.aleph > 1.0 && p.aleph <= 2.0, "model.aleph must lie in (1, 2]");
  require(p.alpha >= p.rho, "model.alpha must be >= model.rho");
  require(p.p_star >= 2.0, "model.p_star must be >= 2");
  require(p.lambda >= 0.0, "model.lambda must be >= 0");
  for (double x : {p.r1, p.r2, p.a1, p.a2, p.b1, p.b2, p.c1, p.c2, p.sigma1, p.sigma2, p.q, p.aleph,
                   p.rho, p.alpha, p.p_star, p.lambda}) {
    if (!std::isfinite(x)) {
      errors.emplace_back("model parameters must be finite");
      break;
    }
  }
  return errors;
}

std::string to_string(SchemeVariant v) {
  return v == SchemeVariant::explicit_euler ? "explicit" : "semi_implicit";
}
std::string to_string(PowerPolicy p) { return p == PowerPolicy::clipped ? "clipped" : "absolute"; }
std::string to_string(LinearFallback f) { return f == LinearFallback::as_written ? "as_written" : "full"; }

SchemeVariant scheme_variant_from_string(const std::string& s) {
  if (s == "explicit") return SchemeVariant::explicit_euler;
  if (s == "semi_implicit") return SchemeVariant::semi_implicit;
  throw std::invalid_argument("unknown scheme variant '" + s + "' (expected explicit|semi_implicit)");
}
PowerPolicy power_policy_from_string(const std::string& s) {
  if (s == "clipped") return PowerPolicy::clipped;
  if (s == "absolute") return PowerPolicy::absolute;
  throw std::invalid_argument("unknown power policy '" + s + "' (expected clipped|absolute)");
}
LinearFallback linear_fallback_from_string(const std::string& s) {
  if (s == "as_written") return LinearFallback::as_written;
  if (s == "full") return LinearFallback::full;
  throw std::invalid_argument("unknown linear fallback '" + s + "' (expected as_written|full)");
}

gate::GateInputs gate_inputs(const Problem& problem) {
  const auto& m = problem.model;
  return {problem.space.dim, m.q,      m.aleph,
          m.alpha,           m.rho,    m.p_star,
          problem.noise.gamma1, problem.noise.gamma2};
}

std::size_t TimeGrid::steps() const {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("time grid needs T > 0 and dt > 0");
  const double ratio = T / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
    throw std::invalid_argument("T must be an integer multiple of dt");
  return n;
}

double cutoff_psi(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return 1.0;
  if (ax >= 2.0) return 0.0;
  const auto bump = [](double s) { return std::exp(-1.0 / s); };
  const double up = bump(2.0 - ax);
  return up / (up + bump(ax - 1.0));
}

CutoffState CutoffState::start(double kappa, double v_rho_norm, double v_dissipation_sq) {
  CutoffState s;
  s.kappa = kappa;
  s.running_sup = v_rho_norm;
  s.running_int = 0.0;
  s.last_dissipation = v_dissipation_sq;
  s.h_value = v_rho_norm;
  s.phi_value = cutoff_psi(s.h_value / kappa);
  return s;
}

void CutoffState::advance(double v_rho_norm, double v_dissipation_sq, double dt) {
  running_sup = std::max(running_sup, v_rho_norm);
  running_int += 0.5 * dt * (last_dissipation + v_dissipation_sq);
  last_dissipation = v_dissipation_sq;
  h_value = running_sup + std::sqrt(running_int);
  phi_value = cutoff_psi(h_value / kappa);
}

CutoffState start_cutoff(const Field& v, const ModelParams& params, double kappa) {
  return CutoffState::start(kappa, spectral::sobolev_norm(v, params.rho),
                            spectral::sobolev_norm_squared(v, params.rho + params.aleph / 2.0));
}

// ---------------------------------------------------------------------------

MildStepper::MildStepper(const Problem& problem, double dt) : MildStepper(problem, dt, false) {}

MildStepper MildStepper::linear_fallback(const Problem& problem, double dt) {
  return MildStepper(problem, dt, true);
}

MildStepper::MildStepper(const Problem& problem, double dt, bool linear)
    : basis_(Basis::get(problem.space)),
      model_(problem.model),
      scheme_(problem.scheme),
      dt_(dt),
      noise_modes_(noise::noise_mode_count(problem.noise, *basis_)),
      g1_(basis_, problem.noise.gamma1, noise_modes_, problem.noise.zero_mode),
      g2_(basis_, problem.noise.gamma2, noise_modes_, problem.noise.zero_mode) {
  if (!(dt > 0.0)) throw std::invalid_argument("MildStepper: dt must be > 0");
  Generator gen1{OperatorKind::laplace, model_.r1, model_.a1, model_.aleph};
  Generator gen2{OperatorKind::fractional, model_.r2, model_.a2, model_.aleph};
  bool correction = problem.noise.interpretation == noise::Interpretation::stratonovich &&
                    problem.noise.stratonovich_correction;
  if (linear) {
    model_.c1 = model_.c2 = 0.0;
    if (scheme_.fallback == LinearFallback::as_written) {
      gen1 = {OperatorKind::laplace, model_.r1, 0.0, model_.aleph};
      gen2 = {OperatorKind::laplace, model_.r2, 0.0, model_.aleph};
      model_.b1 = model_.b2 = 0.0;
      correction = false;
    }
    scheme_.variant = SchemeVariant::explicit_euler;
  }
  e1_ = spectral::semigroup_factors(*basis_, gen1, dt);
  e2_ = spectral::semigroup_factors(*basis_, gen2, dt);
  if (correction && model_.sigma1 != 0.0) {
    const auto profile = g1_.correction_profile();
    strat1_.assign(profile.begin(), profile.end());
    for (auto& s : strat1_) s *= 0.5 * model_.sigma1 * model_.sigma1;
  }
  if (correction && model_.sigma2 != 0.0) {
    const auto profile = g2_.correction_profile();
    strat2_.assign(profile.begin(), profile.end());
    for (auto& s : strat2_) s *= 0.5 * model_.sigma2 * model_.sigma2;
  }
}

double MildStepper::power(double v) const {
  const double base = scheme_.power == PowerPolicy::clipped ? std::max(v, 0.0) : std::abs(v);
  return model_.q == 2.0 ? base * base : std::pow(base, model_.q);
}

void MildStepper::advance(const Field& u, const Field& v, std::span<const double> u_grid,
                          std::span<const double> v_grid, std::span<const double> rate,
                          std::span<const double> eta, std::span<const double> dw1,
                          std::span<const double> dw2, Field& u_out, Field& v_out) const {
  const std::size_t grid = basis_->grid_size();
  const std::size_t modes = basis_->size();
  thread_local std::vector<double> noise1, noise2, work, coeffs;
  noise1.assign(grid, 0.0);
  noise2.assign(grid, 0.0);
  work.resize(grid);
  coeffs.resize(modes);
  if (model_.sigma1 != 0.0) g1_.colored_grid(dw1, noise1);
  if (model_.sigma2 != 0.0) g2_.colored_grid(dw2, noise2);
  const double dt = dt_;
  const double c1 = model_.c1, c2 = model_.c2;
  const double s1 = model_.sigma1, s2 = model_.sigma2;

  // activator
  if (scheme_.variant == SchemeVariant::explicit_euler) {
    for (std::size_t i = 0; i < grid; ++i) {
      double w = -dt * c1 * rate[i] * eta[i];
      if (!strat1_.empty()) w += dt * strat1_[i] * u_grid[i];
      w += s1 * u_grid[i] * noise1[i];
      work[i] = w;
    }
    basis_->analyze(work, coeffs);
    for (std::size_t k = 0; k < modes; ++k) {
      const double source = k == 0 ? dt * model_.b1 : 0.0;
      u_out[k] = e1_[k] * (u[k] + coeffs[k] + source);
    }
  } else {
    for (std::size_t i = 0; i < grid; ++i) {
      double w = u_grid[i] + dt * model_.b1;
      if (!strat1_.empty()) w += dt * strat1_[i] * u_grid[i];
      w += s1 * u_grid[i] * noise1[i];
      work[i] = w / (1.0 + dt * c1 * rate[i]);
    }
    basis_->analyze(work, coeffs);
    for (std::size_t k = 0; k < modes; ++k) u_out[k] = e1_[k] * coeffs[k];
  }

  // inhibitor
  for (std::size_t i = 0; i < grid; ++i) {
    double w = dt * c2 * rate[i] * eta[i];
    if (!strat2_.empty()) w += dt * strat2_[i] * v_grid[i];
    w += s2 * v_grid[i] * noise2[i];
    work[i] = w;
  }
  basis_->analyze(work, coeffs);
  for (std::size_t k = 0; k < modes; ++k) {
    const double source = k == 0 ? dt * model_.b2 : 0.0;
    v_out[k] = e2_[k] * (v[k] + coeffs[k] + source);
  }
}

StepResult step_mild(const Field& u, const Field& v, const Problem& problem,
                     const CutoffState& cutoff, const WienerIncrement& inc1,
                     const WienerIncrement& inc2, double dt) {
  const MildStepper stepper(problem, dt);
  const auto u_grid = u.grid_values();
  const auto v_grid = v.grid_values();
  std::vector<double> rate(v_grid.size());
  for (std::size_t i = 0; i < rate.size(); ++i) rate[i] = cutoff.phi_value * stepper.power(v_grid[i]);
  StepResult out{Field(u.basis_ptr()), Field(v.basis_ptr()), cutoff};
  stepper.advance(u, v, u_grid, v_grid, rate, u_grid, inc1.dW, inc2.dW, out.u, out.v);
  if (!out.u.all_finite() || !out.v.all_finite()) throw NonFiniteError(1);
  out.cutoff.advance(spectral::sobolev_norm(out.v, problem.model.rho),
                     spectral::sobolev_norm_squared(out.v, problem.model.rho + problem.model.aleph / 2.0),
                     dt);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> sobolev_weights(const Basis& basis, double s) {
  std::vector<double> w(basis.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::pow(1.0 + basis.eigenvalue(k), s);
  return w;
}

double weighted_sum(std::span<const double> weights, const Field& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += weights[k] * f[k] * f[k];
  return s;
}

// Norm evaluation with the Sobolev weights cached for one parameter set.
class NormEvaluator {
 public:
  NormEvaluator(const Basis& basis, const ModelParams& params, PowerPolicy power)
      : basis_(basis),
        params_(params),
        power_(power),
        w_alpha_(sobolev_weights(basis, params.alpha)),
        w_alpha_diss_(sobolev_weights(basis, params.alpha + params.aleph / 2.0)),
        w_rho_(sobolev_weights(basis, params.rho)),
        w_rho_diss_(sobolev_weights(basis, params.rho + params.aleph / 2.0)) {}

  void append(NormSeries& s, double t, const Field& u, const Field& v,
              std::span<const double> u_grid, std::span<const double> v_grid) const {
    const double p = params_.p_star;
    const double wq = basis_.quadrature_weight();
    s.t.push_back(t);
    s.u_l2.push_back(u.l2_norm());
    s.u_lp.push_back(spectral::grid_lp_norm(basis_, u_grid, p));
    s.v_halpha.push_back(std::sqrt(weighted_sum(w_alpha_, v)));
    s.v_halpha_diss.push_back(std::sqrt(weighted_sum(w_alpha_diss_, v)));
    s.v_hrho.push_back(std::sqrt(weighted_sum(w_rho_, v)));
    s.v_hrho_diss_sq.push_back(weighted_sum(w_rho_diss_, v));
    s.h.push_back(0.0);
    s.phi.push_back(0.0);

    thread_local std::vector<double> grad_sq, deriv;
    grad_sq.assign(u_grid.size(), 0.0);
    deriv.resize(u_grid.size());
    for (int axis = 0; axis < basis_.dim(); ++axis) {
      basis_.synthesize_derivative(u.coeffs(), axis, deriv);
      for (std::size_t i = 0; i < deriv.size(); ++i) grad_sq[i] += deriv[i] * deriv[i];
    }
    double gradient = 0.0, coupling = 0.0;
    double u_min = std::numeric_limits<double>::infinity();
    double v_min = u_min;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
      const double au = std::abs(u_grid[i]);
      const double weight = p == 2.0 ? 1.0 : std::pow(au, p - 2.0);
      gradient += weight * grad_sq[i];
      const double up = std::max(u_grid[i], 0.0);
      const double vp = std::max(v_grid[i], 0.0);
      if (up > 0.0 && vp > 0.0) coupling += std::pow(up, p) * std::pow(vp, params_.q);
      u_min = std::min(u_min, u_grid[i]);
      v_min = std::min(v_min, v_grid[i]);
    }
    s.u_gradient.push_back(gradient * wq);
    s.coupling.push_back(coupling * wq);
    s.u_min.push_back(u_min);
    s.v_min.push_back(v_min);
    (void)power_;
  }

 private:
  const Basis& basis_;
  ModelParams params_;
  PowerPolicy power_;
  std::vector<double> w_alpha_, w_alpha_diss_, w_rho_, w_rho_diss_;
};

// Mutable state of one trajectory plus its record.
class PathBuilder {
 public:
  PathBuilder(const Problem& problem, const Field& u0, const Field& v0, const TimeGrid& grid,
              std::uint32_t path_id, double kappa, const RecordOptions& options)
      : basis_(Basis::get(problem.space)),
        norms_(*basis_, problem.model, problem.scheme.power),
        grid_(grid),
        steps_(grid.steps()),
        options_(options),
        u(u0),
        v(v0),
        u_next(basis_),
        v_next(basis_) {
    if (u0.size() != basis_->size() || v0.size() != basis_->size())
      throw std::invalid_argument("initial data do not live on the configured space");
    record.params = problem.model;
    record.space = problem.space;
    record.dt = grid.dt;
    record.kappa = kappa;
    record.path_id = path_id;

    const auto gate = gate::evaluate(gate_inputs(problem));
    record.gate_admissible = gate.overall();
    if (!record.gate_admissible) record.warnings.emplace_back("parameter gate: not admissible");

    u_grid.resize(basis_->grid_size());
    v_grid.resize(basis_->grid_size());
    rate.resize(basis_->grid_size());
    refresh_grids();
    if (*std::min_element(u_grid.begin(), u_grid.end()) < 0.0 ||
        *std::min_element(v_grid.begin(), v_grid.end()) < 0.0)
      record.warnings.emplace_back("initial data are negative somewhere on the grid");
  }

  std::size_t steps() const { return steps_; }
  double dt() const { return grid_.dt; }
  double time(std::size_t n) const { return grid_.time(n); }

  void refresh_grids() {
    basis_->synthesize(u.coeffs(), u_grid);
    basis_->synthesize(v.coeffs(), v_grid);
  }

  /// Appends the norms of the current state as time point n.
  void record_point(std::size_t n) {
    norms_.append(record.series, time(n), u, v, u_grid, v_grid);
    const bool keep = n == 0 || n == steps_ ||
                      (options_.snapshot_every > 0 && n % options_.snapshot_every == 0);
    if (keep) {
      record.snapshot_times.push_back(time(n));
      record.u_snapshots.push_back(u);
      record.v_snapshots.push_back(v);
    }
  }

  void set_cutoff(const CutoffState& c, double phi) {
    record.series.h.back() = c.h_value;
    record.series.phi.back() = phi;
  }

  double last_rho_norm() const { return record.series.v_hrho.back(); }
  double last_rho_dissipation() const { return record.series.v_hrho_diss_sq.back(); }

  CutoffState start_cutoff_here(double kappa) const {
    return CutoffState::start(kappa, last_rho_norm(), last_rho_dissipation());
  }

  /// Advances from time point n to n + 1.
  void step(const MildStepper& stepper, double phi, const IncrementSource& source,
            std::uint32_t segment, std::uint64_t local_step, std::size_t n) {
    thread_local std::vector<double> dw1, dw2;
    dw1.resize(source.modes());
    dw2.resize(source.modes());
    source.increments(segment, local_step, dw1, dw2);
    for (std::size_t i = 0; i < rate.size(); ++i)
      rate[i] = phi == 0.0 ? 0.0 : phi * stepper.power(v_grid[i]);
    stepper.advance(u, v, u_grid, v_grid, rate, u_grid, dw1, dw2, u_next, v_next);
    if (!u_next.all_finite() || !v_next.all_finite()) throw NonFiniteError(n + 1);
    std::swap(u, u_next);
    std::swap(v, v_next);
    refresh_grids();
  }

  PathRecord record;

 private:
  std::shared_ptr<const Basis> basis_;
  NormEvaluator norms_;
  TimeGrid grid_;
  std::size_t steps_;
  RecordOptions options_;

 public:
  Field u, v, u_next, v_next;
  std::vector<double> u_grid, v_grid, rate;
};

void check_problem(const Problem& problem) {
  std::vector<std::string> errors = spectral::validate(problem.space);
  for (auto& e : validate(problem.model)) errors.push_back(std::move(e));
  for (auto& e : noise::validate(problem.noise, problem.space)) errors.push_back(std::move(e));
  if (!errors.empty()) throw std::invalid_argument(errors.front());
}

}  // namespace

void append_norms(NormSeries& series, double t, const Field& u, const Field& v,
                  std::span<const double> u_grid, std::span<const double> v_grid,
                  const ModelParams& params, PowerPolicy power) {
  NormEvaluator(u.basis(), params, power).append(series, t, u, v, u_grid, v_grid);
}

PathRecord make_record(const Problem& problem, double dt, const std::vector<Field>& u_path,
                       const std::vector<Field>& v_path, double kappa) {
  if (u_path.empty() || u_path.size() != v_path.size())
    throw std::invalid_argument("make_record: paths must be non-empty and of equal length");
  const auto basis = Basis::get(problem.space);
  const NormEvaluator norms(*basis, problem.model, problem.scheme.power);
  PathRecord record;
  record.params = problem.model;
  record.space = problem.space;
  record.dt = dt;
  record.kappa = kappa;
  CutoffState cutoff;
  for (std::size_t n = 0; n < u_path.size(); ++n) {
    const auto u_grid = u_path[n].grid_values();
    const auto v_grid = v_path[n].grid_values();
    norms.append(record.series, static_cast<double>(n) * dt, u_path[n], v_path[n], u_grid, v_grid);
    const double rho_norm = record.series.v_hrho.back();
    const double diss = record.series.v_hrho_diss_sq.back();
    if (n == 0)
      cutoff = CutoffState::start(kappa, rho_norm, diss);
    else
      cutoff.advance(rho_norm, diss, dt);
    record.series.h.back() = cutoff.h_value;
    record.series.phi.back() = cutoff.phi_value;
    if (!record.stop_step && cutoff.h_value >= kappa) {
      record.stop_step = n;
      record.stop_time = static_cast<double>(n) * dt;
    }
    record.snapshot_times.push_back(static_cast<double>(n) * dt);
    record.u_snapshots.push_back(u_path[n]);
    record.v_snapshots.push_back(v_path[n]);
  }
  return record;
}

PathRecord simulate_path(const Problem& problem, const Field& u0, const Field& v0, double kappa,
                         const TimeGrid& grid, const IncrementSource& source,
                         std::uint32_t path_id, const RecordOptions& options) {
  check_problem(problem);
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  const MildStepper stepper(problem, grid.dt);
  if (source.modes() != stepper.noise_modes())
    throw std::invalid_argument("increment source has the wrong number of noise modes");
  PathBuilder path(problem, u0, v0, grid, path_id, kappa, options);

  path.record_point(0);
  CutoffState cutoff = path.start_cutoff_here(kappa);
  path.set_cutoff(cutoff, cutoff.phi_value);
  auto note_stop = [&](std::size_t n) {
    if (!path.record.stop_step && cutoff.h_value >= kappa) {
      path.record.stop_step = n;
      path.record.stop_time = path.time(n);
    }
  };
  note_stop(0);

  for (std::size_t n = 0; n < path.steps(); ++n) {
    path.step(stepper, cutoff.phi_value, source, 0, n, n);
    path.record_point(n + 1);
    cutoff.advance(path.last_rho_norm(), path.last_rho_dissipation(), grid.dt);
    path.set_cutoff(cutoff, cutoff.phi_value);
    note_stop(n + 1);
  }
  return std::move(path.record);
}

PathRecord simulate_path(const Problem& problem, const Field& u0, const Field& v0, double kappa,
                         const TimeGrid& grid, std::uint32_t path_id,
                         const RecordOptions& options) {
  const auto basis = Basis::get(problem.space);
  const noise::CounterIncrements source(problem.noise, noise::noise_mode_count(problem.noise, *basis),
                                        grid.dt, path_id);
  return simulate_path(problem, u0, v0, kappa, grid, source, path_id, options);
}

PathRecord simulate_glued(const Problem& problem, const Field& u0, const Field& v0,
                          const std::vector<double>& kappa_schedule, const TimeGrid& grid,
                          std::uint32_t path_id, const GlueOptions& options) {
  check_problem(problem);
  if (kappa_schedule.empty()) throw std::invalid_argument("kappa schedule is empty");
  for (std::size_t i = 0; i < kappa_schedule.size(); ++i) {
    if (!(kappa_schedule[i] > 0.0) || (i > 0 && !(kappa_schedule[i] > kappa_schedule[i - 1])))
      throw std::invalid_argument("kappa schedule must be positive and strictly increasing");
  }
  const MildStepper cutoff_stepper(problem, grid.dt);
  const MildStepper linear_stepper = MildStepper::linear_fallback(problem, grid.dt);
  const noise::CounterIncrements source(problem.noise, cutoff_stepper.noise_modes(), grid.dt, path_id);
  PathBuilder path(problem, u0, v0, grid, path_id, kappa_schedule.front(), options.record);

  std::size_t level = 0;
  std::uint32_t segment = 0;
  std::uint64_t local = 0;
  bool linear = false;

  path.record_point(0);
  CutoffState cutoff = path.start_cutoff_here(kappa_schedule.front());
  path.set_cutoff(cutoff, cutoff.phi_value);

  for (std::size_t n = 0;; ++n) {
    // Stopping at time point n: move to the next level from the stopped state.
    while (!linear && cutoff.h_value >= cutoff.kappa) {
      path.record.glue_events.push_back({cutoff.kappa, path.time(n), n});
      if (!path.record.stop_step) {
        path.record.stop_step = n;
        path.record.stop_time = path.time(n);
      }
      ++level;
      ++segment;
      local = 0;
      if (level == kappa_schedule.size()) {
        if (!options.linear_fallback && n < path.steps()) throw ScheduleExhausted(path.time(n));
        linear = true;
        cutoff = path.start_cutoff_here(std::numeric_limits<double>::infinity());
        break;
      }
      cutoff = path.start_cutoff_here(kappa_schedule[level]);
    }
    if (n == path.steps()) break;

    const double phi = linear ? 0.0 : cutoff.phi_value;
    path.step(linear ? linear_stepper : cutoff_stepper, phi, source, segment, local, n);
    ++local;
    path.record_point(n + 1);
    cutoff.advance(path.last_rho_norm(), path.last_rho_dissipation(), grid.dt);
    path.set_cutoff(cutoff, linear ? 0.0 : cutoff.phi_value);
  }
  return std::move(path.record);
}

std::vector<PathRecord> simulate_ensemble(const Problem& problem, const Field& u0, const Field& v0,
                                          double kappa, const TimeGrid& grid, std::size_t paths,
                                          std::uint32_t first_path, unsigned threads,
                                          const RecordOptions& options) {
  std::vector<PathRecord> records(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    records[i] = simulate_path(problem, u0, v0, kappa, grid,
                               first_path + static_cast<std::uint32_t>(i), options);
  });
  return records;
}

double pathspace_norm(const PathRecord& record, double rho, double aleph, double t) {
  const auto& s = record.series;
  if (s.size() == 0) throw std::invalid_argument("pathspace_norm: empty record");
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  std::size_t last = 0;
  while (last + 1 < s.size() && s.t[last + 1] <= t + tol) ++last;

  std::vector<double> norm, diss;
  if (rho == record.params.rho && aleph == record.params.aleph) {
    norm.assign(s.v_hrho.begin(), s.v_hrho.begin() + static_cast<std::ptrdiff_t>(last + 1));
    diss.assign(s.v_hrho_diss_sq.begin(), s.v_hrho_diss_sq.begin() + static_cast<std::ptrdiff_t>(last + 1));
  } else {
    if (record.v_snapshots.size() != s.size())
      throw std::invalid_argument(
          "pathspace_norm: other (rho, aleph) need snapshots at every time point");
    for (std::size_t n = 0; n <= last; ++n) {
      norm.push_back(spectral::sobolev_norm(record.v_snapshots[n], rho));
      diss.push_back(spectral::sobolev_norm_squared(record.v_snapshots[n], rho + aleph / 2.0));
    }
  }
  double sup = 0.0, integral = 0.0;
  for (std::size_t n = 0; n <= last; ++n) {
    sup = std::max(sup, norm[n]);
    if (n > 0) integral += 0.5 * (s.t[n] - s.t[n - 1]) * (diss[n - 1] + diss[n]);
  }
  return sup + std::sqrt(integral);
}

}  // namespace fracgs::sde
