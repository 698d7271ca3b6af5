#include "fracgs/fixed_point.hpp"

#include <algorithm>
#include <cmath>

namespace fracgs::fixed_point {

ControlPair ControlPair::constant(const Field& eta0, const Field& xi0, const TimeGrid& grid) {
  const std::size_t points = grid.steps() + 1;
  return {std::vector<Field>(points, eta0), std::vector<Field>(points, xi0), grid.dt};
}

ControlPair apply_V(const ControlPair& control, const Problem& problem, const Field& u0,
                    const Field& v0, double kappa, std::uint32_t path_id) {
  if (control.size() < 2 || control.xi.size() != control.size())
    throw std::invalid_argument("apply_V: control needs matching eta/xi paths with >= 2 points");
  const double dt = control.dt;
  const sde::MildStepper stepper(problem, dt);
  const noise::CounterIncrements source(problem.noise, stepper.noise_modes(), dt, path_id);
  // Same norm and cut-off bookkeeping as the direct integrator.
  const auto phi = sde::make_record(problem, dt, control.eta, control.xi, kappa).series.phi;

  const auto& basis = stepper.basis();
  const std::size_t grid = basis.grid_size();
  std::vector<double> u_grid(grid), v_grid(grid), eta_grid(grid), xi_grid(grid), rate(grid);
  std::vector<double> dw1(stepper.noise_modes()), dw2(stepper.noise_modes());

  ControlPair out;
  out.dt = dt;
  out.eta.reserve(control.size());
  out.xi.reserve(control.size());
  out.eta.push_back(u0);
  out.xi.push_back(v0);
  for (std::size_t n = 0; n + 1 < control.size(); ++n) {
    const Field& u = out.eta.back();
    const Field& v = out.xi.back();
    basis.synthesize(u.coeffs(), u_grid);
    basis.synthesize(v.coeffs(), v_grid);
    basis.synthesize(control.eta[n].coeffs(), eta_grid);
    basis.synthesize(control.xi[n].coeffs(), xi_grid);
    for (std::size_t i = 0; i < grid; ++i)
      rate[i] = phi[n] == 0.0 ? 0.0 : phi[n] * stepper.power(xi_grid[i]);
    source.increments(0, n, dw1, dw2);
    Field u_next(u.basis_ptr()), v_next(v.basis_ptr());
    stepper.advance(u, v, u_grid, v_grid, rate, eta_grid, dw1, dw2, u_next, v_next);
    if (!u_next.all_finite() || !v_next.all_finite()) throw sde::NonFiniteError(n + 1);
    out.eta.push_back(std::move(u_next));
    out.xi.push_back(std::move(v_next));
  }
  return out;
}

double m_norm_distance(const ControlPair& a, const ControlPair& b, double rho, double aleph) {
  if (a.size() != b.size() || a.size() == 0)
    throw std::invalid_argument("m_norm_distance: controls on different grids");
  double eta_int = 0.0, xi_int = 0.0, xi_sup = 0.0;
  double prev_eta = 0.0, prev_xi = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    Field de = a.eta[n];
    de -= b.eta[n];
    Field dx = a.xi[n];
    dx -= b.xi[n];
    const double e2 = de.l2_norm() * de.l2_norm();
    const double x2 = spectral::sobolev_norm_squared(dx, rho + aleph / 2.0);
    xi_sup = std::max(xi_sup, spectral::sobolev_norm(dx, rho));
    if (n > 0) {
      eta_int += 0.5 * a.dt * (prev_eta + e2);
      xi_int += 0.5 * a.dt * (prev_xi + x2);
    }
    prev_eta = e2;
    prev_xi = x2;
  }
  return std::sqrt(eta_int) + xi_sup + std::sqrt(xi_int);
}

NoConvergence::NoConvergence(int iterations, std::vector<double> residuals)
    : std::runtime_error("Picard iteration did not converge in " + std::to_string(iterations) +
                         " iterations (last residual " +
                         (residuals.empty() ? std::string("n/a") : std::to_string(residuals.back())) +
                         ")"),
      residuals_(std::move(residuals)) {}

PicardResult picard_solve(const Problem& problem, const Field& u0, const Field& v0, double kappa,
                          const TimeGrid& grid, std::uint32_t path_id, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("picard_solve: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("picard_solve: max_iter must be >= 1");
  PicardResult result;
  ControlPair current = ControlPair::constant(u0, v0, grid);
  for (int it = 1; it <= max_iter; ++it) {
    ControlPair next = apply_V(current, problem, u0, v0, kappa, path_id);
    const double r = m_norm_distance(next, current, problem.model.rho, problem.model.aleph);
    result.residuals.push_back(r);
    current = std::move(next);
    if (r < tol) {
      result.iterations = it;
      result.fixed_point = std::move(current);
      return result;
    }
  }
  throw NoConvergence(max_iter, std::move(result.residuals));
}

ControlPair control_from_record(const sde::PathRecord& record) {
  if (record.u_snapshots.size() != record.series.size())
    throw std::invalid_argument("control_from_record: record needs snapshots at every step");
  return {record.u_snapshots, record.v_snapshots, record.dt};
}

KSetConstants compute_kset_constants(const KSetInputs& in) {
  if (!(in.p_star > 0.0)) throw std::invalid_argument("compute_kset_constants: p_star must be > 0");
  KSetConstants k;
  k.lambda = in.lambda;
  k.K2 = 2.0 * (1.0 + std::exp(in.C2 * in.T)) * in.u0_lp_pow;
  const double shared =
      in.C_kappa * std::pow(k.K2, 2.0 / in.p_star) * std::exp(2.0 * in.lambda * in.T / in.p_star);
  k.K1 = in.C_T * (in.u0_l2_sq + shared);
  k.K3 = in.C_T * (in.v0_hrho_sq + shared);
  return k;
}

KFunctionals k_functionals(const ControlPair& control, double rho, double aleph, double p_star,
                           double lambda) {
  KFunctionals f;
  double eta_sup = 0.0, eta_int = 0.0, xi_sup = 0.0, xi_int = 0.0;
  double prev_eta = 0.0, prev_xi = 0.0;
  for (std::size_t n = 0; n < control.size(); ++n) {
    const double t = static_cast<double>(n) * control.dt;
    eta_sup = std::max(eta_sup, control.eta[n].l2_norm());
    const double e2 = spectral::sobolev_norm_squared(control.eta[n], aleph / 2.0);
    const double lp = spectral::lp_norm(control.eta[n], p_star);
    f.eta_lp_sup = std::max(f.eta_lp_sup, std::exp(-lambda * t) * std::pow(lp, p_star));
    xi_sup = std::max(xi_sup, spectral::sobolev_norm(control.xi[n], rho));
    const double x2 = spectral::sobolev_norm_squared(control.xi[n], rho + aleph / 2.0);
    if (n > 0) {
      eta_int += 0.5 * control.dt * (prev_eta + e2);
      xi_int += 0.5 * control.dt * (prev_xi + x2);
    }
    prev_eta = e2;
    prev_xi = x2;
  }
  f.eta_h02_sq = std::pow(eta_sup + std::sqrt(eta_int), 2);
  f.xi_hrho_sq = std::pow(xi_sup + std::sqrt(xi_int), 2);
  return f;
}

KSetVerdict kset_check(const ControlPair& control, const KSetConstants& constants, double rho,
                       double aleph, double p_star, double lambda) {
  KSetVerdict verdict;
  verdict.values = k_functionals(control, rho, aleph, p_star, lambda);
  verdict.margins = {constants.K1 - verdict.values.eta_h02_sq,
                     constants.K2 - verdict.values.eta_lp_sup,
                     constants.K3 - verdict.values.xi_hrho_sq};
  verdict.in_set = std::all_of(verdict.margins.begin(), verdict.margins.end(),
                               [](double m) { return m >= 0.0; });
  return verdict;
}

}  // namespace fracgs::fixed_point
