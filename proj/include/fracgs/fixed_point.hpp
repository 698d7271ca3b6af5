#pragma once

// Frozen-control operator V: given control paths (eta, xi), solve the linear
// decoupled system with forcing eta * |xi|^q and cut-off driven by xi, under a
// fixed noise realisation. Picard iteration on V, and K-set diagnostics.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fracgs/integrator.hpp"

namespace fracgs::fixed_point {

using sde::Problem;
using sde::TimeGrid;
using spectral::Field;

/// Time-indexed controls on the integrator grid, steps + 1 entries each.
struct ControlPair {
  std::vector<Field> eta;
  std::vector<Field> xi;
  double dt = 0.0;

  std::size_t size() const { return eta.size(); }
  static ControlPair constant(const Field& eta0, const Field& xi0, const TimeGrid& grid);
};

/// One application of V. Noise comes from segment 0 of `path_id`.
ControlPair apply_V(const ControlPair& control, const Problem& problem, const Field& u0,
                    const Field& v0, double kappa, std::uint32_t path_id);

/// |||a - b||| = |eta_a - eta_b|_{L2(0,T;L2)} + |xi_a - xi_b|_{H_{rho,aleph}},
/// trapezoid in time.
double m_norm_distance(const ControlPair& a, const ControlPair& b, double rho, double aleph);

struct PicardResult {
  ControlPair fixed_point;
  int iterations = 0;
  std::vector<double> residuals;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(int iterations, std::vector<double> residuals);
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Iterates from the constant-in-time control (u0, v0) until the residual
/// drops below `tol`. Throws NoConvergence after `max_iter` applications.
PicardResult picard_solve(const Problem& problem, const Field& u0, const Field& v0, double kappa,
                          const TimeGrid& grid, std::uint32_t path_id, double tol, int max_iter);

/// Converts a simulated record (snapshots at every step) into a control pair.
ControlPair control_from_record(const sde::PathRecord& record);

struct KSetConstants {
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
  double lambda = 0.0;
};

struct KSetInputs {
  double u0_l2_sq = 0.0;    ///< E|u0|^2_{L2}
  double u0_lp_pow = 0.0;   ///< E|u0|^{p*}_{L^{p*}}
  double v0_hrho_sq = 0.0;  ///< E|v0|^2_{H^rho}
  double kappa = 1.0;
  double T = 1.0;
  double lambda = 0.0;
  double C_T = 1.0;
  double C_kappa = 1.0;
  double C2 = 1.0;
  double p_star = 8.0;
};

/// K2 first, then K1 and K3, which both depend on it.
KSetConstants compute_kset_constants(const KSetInputs& in);

/// The three single-path functionals bounded by K1, K2, K3.
struct KFunctionals {
  double eta_h02_sq = 0.0;   ///< |eta|^2 in L^inf(L2) cap L2(H^{aleph/2})
  double eta_lp_sup = 0.0;   ///< sup_t e^{-lambda t} |eta(t)|^{p*}_{L^{p*}}
  double xi_hrho_sq = 0.0;   ///< |xi|^2_{H_{rho,aleph}}
};

KFunctionals k_functionals(const ControlPair& control, double rho, double aleph, double p_star,
                           double lambda);

struct KSetVerdict {
  bool in_set = false;
  std::array<double, 3> margins{};  ///< K_i - functional_i
  KFunctionals values;
};

KSetVerdict kset_check(const ControlPair& control, const KSetConstants& constants, double rho,
                       double aleph, double p_star, double lambda);

}  // namespace fracgs::fixed_point
