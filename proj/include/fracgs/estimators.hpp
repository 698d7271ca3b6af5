#pragma once

// Ensemble estimates of the moment functionals with normal-approximation
// confidence intervals, and a few discrete-norm diagnostics.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracgs/integrator.hpp"

namespace fracgs::estimators {

using sde::PathRecord;
using spectral::Field;

struct MomentReport {
  std::string name;
  std::size_t M = 0;
  double estimate = 0.0;
  double ci_half_width = 0.0;  ///< 1.96 * sample std / sqrt(M)
  std::vector<double> raw;     ///< per-path values, in input order
};

/// Sum of the values in ascending order, pairwise. Independent of input order.
double stable_sum(std::span<const double> values);

/// Mean and 95% half-width of per-path values. Needs at least two values.
MomentReport summarize(std::string name, std::vector<double> values, bool keep_raw = true);

/// E sup_t |u|^2_{L2}.
MomentReport estimate_u_L2(std::span<const PathRecord> records);

struct PstarReport {
  MomentReport sup;       ///< E sup_t e^{-lambda t} |u|^{p*}_{L^{p*}}
  MomentReport gradient;  ///< E int_0^T | |u|^{p*/2-1} grad u |^2_{L2} dt
};

/// `p_star` must equal the value the records were produced with.
PstarReport estimate_u_pstar(std::span<const PathRecord> records, double p_star, double lambda);

struct HalphaReport {
  MomentReport sup;          ///< E sup_t |v|^2_{H^alpha}
  MomentReport dissipation;  ///< 2 E int_0^T |v|^2_{H^{alpha+aleph/2}} dt
};

HalphaReport estimate_v_Halpha(std::span<const PathRecord> records, double alpha, double aleph);

/// E (int_0^T int u_+^{p*} v_+^q dx dt)^m.
MomentReport estimate_coupling(std::span<const PathRecord> records, double p_star, double q,
                               double m = 1.0);

struct SvResult {
  double lhs = 0.0;    ///< int_0^T |eta|^{2 gamma}_{W^{theta, 2 gamma}} dt
  double rhs = 0.0;    ///< int_0^T | |eta|^{gamma-1} grad eta |^2_{L2} dt
  double ratio = 0.0;  ///< lhs / rhs, +inf when rhs = 0
  bool degenerate = false;
};

/// Discrete check of |eta|^{2g}_{L^{2g}(H^theta_{2g})} <= C int | eta^{[g-1]} grad eta |^2.
/// The fractional norm is the L^p norm plus a Gagliardo double sum over the
/// grid, O(grid^2) per time point.
SvResult stroock_varopoulos_check(std::span<const Field> path, double dt, double gamma,
                                  double theta);

/// p (p-1) sum_k lambda_k^{-gamma} int |u|^{p-2} u^2 phi_k^2 over the first
/// `noise_modes` modes (0: all).
double trace_diagnostic(const Field& u, double gamma, double p, std::size_t noise_modes = 0,
                        spectral::ZeroModePolicy policy = spectral::ZeroModePolicy::drop);

/// Right-hand-side inputs of the moment bounds, for deterministic initial data.
struct InitialMoments {
  double u0_l2_sq = 0.0;     ///< |u0|^2_{L2}
  double u0_lp_pow = 0.0;    ///< |u0|^{p*}_{L^{p*}}
  double u0_lp1_pow2 = 0.0;  ///< |u0|^{2 p1}_{L^{p1}}
  double v0_halpha_sq = 0.0; ///< |v0|^2_{H^alpha}
};

InitialMoments initial_moments(const Field& u0, const Field& v0, double p_star, double p_star_1,
                               double alpha);

struct MomentBounds {
  MomentReport u_l2;
  PstarReport u_pstar;
  HalphaReport v_halpha;
  double lhs_est1 = 0.0;   ///< E sup |u|^2
  double lhs_est33 = 0.0;  ///< sup term + p*(p*-1) * gradient term
  double lhs_est2 = 0.0;   ///< sup term + dissipation term
  double C_est1 = 0.0;     ///< lhs_est1 / (1 + |u0|^2)
  double C_est33 = 0.0;    ///< lhs_est33 / (1 + |u0|^{p*}_{p*})
  double C1_est2 = 0.0;    ///< lhs_est2 / (|v0|^2_{H^alpha} + |u0|^{2 p1}_{p1} + 1)
};

/// All three bounds for one ensemble. `p_star_1` defaults to the gate's value,
/// or p*/2 where the gate leaves it undefined.
MomentBounds moment_bounds(std::span<const PathRecord> records, const Field& u0,
                                   const Field& v0, std::optional<double> p_star_1 = {});

struct ConvergenceStudy {
  std::vector<int> levels;
  std::vector<double> dt;
  std::vector<double> error;  ///< (E |u_l(T) - u_ref(T)|^2 + |v_l(T) - v_ref(T)|^2)^{1/2}
  int reference_level = 0;
  double order = 0.0;  ///< least-squares slope of log error against log dt
};

/// Strong errors at time T on one Brownian tree per path: level l uses dt = T / 2^l
/// and the reference level shares every increment through the tree.
ConvergenceStudy strong_convergence(const sde::Problem& problem, const Field& u0, const Field& v0,
                                    double kappa, double T, std::span<const int> levels,
                                    int reference_level, std::size_t paths,
                                    std::uint32_t first_path = 0, unsigned threads = 0);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace fracgs::estimators
