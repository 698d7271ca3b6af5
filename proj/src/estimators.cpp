#include "fracgs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fracgs/noise.hpp"
#include "fracgs/parallel.hpp"
#include "fracgs/param_gate.hpp"

namespace fracgs::estimators {

namespace {

double pairwise(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise(v.first(half)) + pairwise(v.subspan(half));
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t n = 1; n < y.size(); ++n) s += 0.5 * (t[n] - t[n - 1]) * (y[n - 1] + y[n]);
  return s;
}

void require_records(std::span<const PathRecord> records) {
  if (records.size() < 2) throw std::invalid_argument("estimators need at least two paths");
  for (const auto& r : records)
    if (r.series.size() == 0) throw std::invalid_argument("estimators: empty path record");
}

void require_match(double requested, double recorded, const char* what) {
  if (std::abs(requested - recorded) > 1e-12 * std::max(1.0, std::abs(recorded)))
    throw std::invalid_argument(std::string("estimator ") + what +
                                " differs from the value the records were produced with");
}

std::vector<double> grid_gradient_squared(const Field& f) {
  const auto& basis = f.basis();
  std::vector<double> out(basis.grid_size(), 0.0), deriv(basis.grid_size());
  for (int axis = 0; axis < basis.dim(); ++axis) {
    basis.synthesize_derivative(f.coeffs(), axis, deriv);
    for (std::size_t i = 0; i < deriv.size(); ++i) out[i] += deriv[i] * deriv[i];
  }
  return out;
}

// |x - y| on the box, or on the torus for periodic boundaries.
double axis_distance(double a, double b, bool periodic) {
  double d = std::abs(a - b);
  if (periodic) d = std::min(d, 1.0 - d);
  return d;
}

}  // namespace

double stable_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return pairwise(sorted);
}

MomentReport summarize(std::string name, std::vector<double> values, bool keep_raw) {
  if (values.size() < 2) throw std::invalid_argument("summarize: need at least two values");
  const auto M = static_cast<double>(values.size());
  const double mean = stable_sum(values) / M;
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - mean) * (values[i] - mean);
  const double var = stable_sum(dev) / (M - 1.0);
  MomentReport r;
  r.name = std::move(name);
  r.M = values.size();
  r.estimate = mean;
  r.ci_half_width = 1.96 * std::sqrt(var) / std::sqrt(M);
  if (keep_raw) r.raw = std::move(values);
  return r;
}

MomentReport estimate_u_L2(std::span<const PathRecord> records) {
  require_records(records);
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) {
    const double sup = *std::max_element(r.series.u_l2.begin(), r.series.u_l2.end());
    values.push_back(sup * sup);
  }
  return summarize("sup_u_L2_sq", std::move(values));
}

PstarReport estimate_u_pstar(std::span<const PathRecord> records, double p_star, double lambda) {
  require_records(records);
  if (p_star < 2.0) throw std::invalid_argument("estimate_u_pstar: p_star must be >= 2");
  std::vector<double> sup, grad;
  for (const auto& r : records) {
    require_match(p_star, r.params.p_star, "p_star");
    const auto& s = r.series;
    double m = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n)
      m = std::max(m, std::exp(-lambda * s.t[n]) * std::pow(s.u_lp[n], p_star));
    sup.push_back(m);
    grad.push_back(trapezoid(s.t, s.u_gradient));
  }
  return {summarize("sup_u_Lpstar_pow", std::move(sup)),
          summarize("int_u_pstar_gradient", std::move(grad))};
}

HalphaReport estimate_v_Halpha(std::span<const PathRecord> records, double alpha, double aleph) {
  require_records(records);
  std::vector<double> sup, diss;
  for (const auto& r : records) {
    require_match(alpha, r.params.alpha, "alpha");
    require_match(aleph, r.params.aleph, "aleph");
    const auto& s = r.series;
    const double m = *std::max_element(s.v_halpha.begin(), s.v_halpha.end());
    sup.push_back(m * m);
    std::vector<double> sq(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) sq[n] = s.v_halpha_diss[n] * s.v_halpha_diss[n];
    diss.push_back(2.0 * trapezoid(s.t, sq));
  }
  return {summarize("sup_v_Halpha_sq", std::move(sup)),
          summarize("int_v_Halpha_aleph_sq", std::move(diss))};
}

MomentReport estimate_coupling(std::span<const PathRecord> records, double p_star, double q,
                               double m) {
  require_records(records);
  if (!(m > 0.0)) throw std::invalid_argument("estimate_coupling: m must be > 0");
  std::vector<double> values;
  for (const auto& r : records) {
    require_match(p_star, r.params.p_star, "p_star");
    require_match(q, r.params.q, "q");
    values.push_back(std::pow(trapezoid(r.series.t, r.series.coupling), m));
  }
  return summarize("coupling_pow_m", std::move(values));
}

SvResult stroock_varopoulos_check(std::span<const Field> path, double dt, double gamma,
                                  double theta) {
  if (path.empty()) throw std::invalid_argument("stroock_varopoulos_check: empty path");
  if (!(gamma > 1.0)) throw std::invalid_argument("stroock_varopoulos_check: gamma must be > 1");
  if (!(theta > 0.0 && theta < 1.0 / gamma))
    throw std::invalid_argument("stroock_varopoulos_check: theta must lie in (0, 1/gamma)");
  const auto& basis = path.front().basis();
  const int d = basis.dim();
  const bool periodic = basis.space().boundary == spectral::Boundary::periodic;
  const std::size_t M = static_cast<std::size_t>(basis.grid_per_axis());
  const auto x = basis.axis_points();
  const double w = basis.quadrature_weight();
  const double p = 2.0 * gamma;
  const double exponent = d + theta * p;

  // Kernel |x - y|^{-(d + theta p)} for all grid pairs, diagonal excluded.
  const std::size_t G = basis.grid_size();
  std::vector<double> kernel(G * G, 0.0);
  for (std::size_t i = 0; i < G; ++i) {
    for (std::size_t j = 0; j < G; ++j) {
      if (i == j) continue;
      double r2 = 0.0;
      if (d == 1) {
        const double dx = axis_distance(x[i], x[j], periodic);
        r2 = dx * dx;
      } else {
        const double dx = axis_distance(x[i / M], x[j / M], periodic);
        const double dy = axis_distance(x[i % M], x[j % M], periodic);
        r2 = dx * dx + dy * dy;
      }
      kernel[i * G + j] = std::pow(r2, -exponent / 2.0);
    }
  }

  std::vector<double> lhs_t(path.size()), rhs_t(path.size()), t(path.size());
  for (std::size_t n = 0; n < path.size(); ++n) {
    t[n] = static_cast<double>(n) * dt;
    const auto values = path[n].grid_values();
    double lp = 0.0, gag = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      lp += std::pow(std::abs(values[i]), p);
      for (std::size_t j = 0; j < G; ++j)
        if (i != j) gag += std::pow(std::abs(values[i] - values[j]), p) * kernel[i * G + j];
    }
    lhs_t[n] = lp * w + gag * w * w;
    const auto grad = grid_gradient_squared(path[n]);
    double r = 0.0;
    for (std::size_t i = 0; i < G; ++i) r += std::pow(std::abs(values[i]), 2.0 * (gamma - 1.0)) * grad[i];
    rhs_t[n] = r * w;
  }
  SvResult out;
  if (path.size() == 1) {
    out.lhs = lhs_t[0];
    out.rhs = rhs_t[0];
  } else {
    out.lhs = trapezoid(t, lhs_t);
    out.rhs = trapezoid(t, rhs_t);
  }
  out.degenerate = !(out.rhs > 0.0);
  out.ratio = out.degenerate ? std::numeric_limits<double>::infinity() : out.lhs / out.rhs;
  return out;
}

double trace_diagnostic(const Field& u, double gamma, double p, std::size_t noise_modes,
                        spectral::ZeroModePolicy policy) {
  if (p < 2.0) throw std::invalid_argument("trace_diagnostic: p must be >= 2");
  const std::size_t modes = noise_modes == 0 ? u.size() : noise_modes;
  const noise::NoiseOperator op(u.basis_ptr(), gamma, modes, policy);
  const auto values = u.grid_values();
  const auto profile = op.correction_profile();
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += std::pow(std::abs(values[i]), p) * profile[i];
  return p * (p - 1.0) * s * u.basis().quadrature_weight();
}

InitialMoments initial_moments(const Field& u0, const Field& v0, double p_star, double p_star_1,
                               double alpha) {
  InitialMoments m;
  m.u0_l2_sq = u0.l2_norm() * u0.l2_norm();
  m.u0_lp_pow = std::pow(spectral::lp_norm(u0, p_star), p_star);
  m.u0_lp1_pow2 = std::pow(spectral::lp_norm(u0, p_star_1), 2.0 * p_star_1);
  m.v0_halpha_sq = spectral::sobolev_norm_squared(v0, alpha);
  return m;
}

MomentBounds moment_bounds(std::span<const PathRecord> records, const Field& u0,
                                   const Field& v0, std::optional<double> p_star_1) {
  require_records(records);
  const auto& params = records.front().params;
  const double p = params.p_star;
  if (!p_star_1) {
    const auto report = gate::check_spaces(params.q, params.aleph, params.alpha,
                                           records.front().space.dim, p);
    p_star_1 = report.p_star_1.value_or(p / 2.0);
  }
  p_star_1 = std::max(*p_star_1, 1.0);
  MomentBounds e;
  e.u_l2 = estimate_u_L2(records);
  e.u_pstar = estimate_u_pstar(records, p, params.lambda);
  e.v_halpha = estimate_v_Halpha(records, params.alpha, params.aleph);
  e.lhs_est1 = e.u_l2.estimate;
  e.lhs_est33 = e.u_pstar.sup.estimate + p * (p - 1.0) * e.u_pstar.gradient.estimate;
  e.lhs_est2 = e.v_halpha.sup.estimate + e.v_halpha.dissipation.estimate;
  const auto m = initial_moments(u0, v0, p, *p_star_1, params.alpha);
  e.C_est1 = e.lhs_est1 / (1.0 + m.u0_l2_sq);
  e.C_est33 = e.lhs_est33 / (1.0 + m.u0_lp_pow);
  e.C1_est2 = e.lhs_est2 / (m.v0_halpha_sq + m.u0_lp1_pow2 + 1.0);
  return e;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy strong_convergence(const sde::Problem& problem, const Field& u0, const Field& v0,
                                    double kappa, double T, std::span<const int> levels,
                                    int reference_level, std::size_t paths,
                                    std::uint32_t first_path, unsigned threads) {
  if (levels.empty() || paths == 0) throw std::invalid_argument("strong_convergence: nothing to do");
  for (int l : levels)
    if (l < 0 || l >= reference_level)
      throw std::invalid_argument("strong_convergence: levels must lie below the reference level");
  const auto basis = spectral::Basis::get(problem.space);
  const std::size_t modes = noise::noise_mode_count(problem.noise, *basis);

  auto final_state = [&](int level, std::uint32_t path) {
    const noise::BridgeIncrements tree(problem.noise, modes, T, 1, level, path);
    const sde::TimeGrid grid{T, tree.dt()};
    auto rec = sde::simulate_path(problem, u0, v0, kappa, grid, tree, path);
    return std::pair{std::move(rec.u_snapshots.back()), std::move(rec.v_snapshots.back())};
  };

  // squared[p * L + i]: squared error of path p at levels[i]
  const std::size_t L = levels.size();
  std::vector<double> squared(paths * L);
  parallel_for(paths, threads, [&](std::size_t p) {
    const auto path = first_path + static_cast<std::uint32_t>(p);
    const auto [u_ref, v_ref] = final_state(reference_level, path);
    for (std::size_t i = 0; i < L; ++i) {
      auto [u, v] = final_state(levels[i], path);
      u -= u_ref;
      v -= v_ref;
      squared[p * L + i] = u.l2_norm() * u.l2_norm() + v.l2_norm() * v.l2_norm();
    }
  });

  ConvergenceStudy study;
  study.reference_level = reference_level;
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<double> column(paths);
    for (std::size_t p = 0; p < paths; ++p) column[p] = squared[p * L + i];
    study.levels.push_back(levels[i]);
    study.dt.push_back(std::ldexp(T, -levels[i]));
    study.error.push_back(std::sqrt(stable_sum(column) / static_cast<double>(paths)));
  }
  study.order = L >= 2 ? loglog_slope(study.dt, study.error) : 0.0;
  return study;
}

}  // namespace fracgs::estimators
