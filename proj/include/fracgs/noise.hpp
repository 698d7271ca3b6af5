#pragma once

// Cylindrical Wiener noise expanded in the Laplace eigenbasis and the linear
// multiplication operator g_gamma(u)[h] = u * (-Delta)^{-gamma/2} h.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracgs/spectral.hpp"

namespace fracgs::noise {

using spectral::Basis;
using spectral::Field;
using spectral::SpaceConfig;
using spectral::ZeroModePolicy;

enum class Interpretation { ito, stratonovich };

std::string to_string(Interpretation i);
Interpretation interpretation_from_string(const std::string& s);

struct NoiseConfig {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  /// Number of retained noise modes K_noise (flat indices [0, K_noise)); 0 means all.
  int modes = 0;
  Interpretation interpretation = Interpretation::stratonovich;
  /// Only meaningful for the Stratonovich interpretation; false drops the
  /// Ito correction drift.
  bool stratonovich_correction = true;
  ZeroModePolicy zero_mode = ZeroModePolicy::drop;
  std::uint64_t seed = 0;

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

std::vector<std::string> validate(const NoiseConfig& noise, const SpaceConfig& space);
/// Effective K_noise for a basis.
std::size_t noise_mode_count(const NoiseConfig& noise, const Basis& basis);

struct WienerIncrement {
  std::vector<double> dW;
  double t = 0.0;
  double dt = 0.0;
};

/// Address of one RNG sub-stream. `segment` separates glued restarts and
/// `level` the dyadic refinement levels of a Brownian tree.
struct StreamAddress {
  std::uint64_t seed = 0;
  std::uint32_t path = 0;
  std::uint32_t segment = 0;
  std::uint32_t level = 0;
};

/// Standard normals for (address, process j in {1,2}, step), one per mode.
void standard_normals(const StreamAddress& address, int process, std::uint64_t step,
                      std::span<double> out);

/// Increments of W_1 and W_2 over [t, t + dt]; the step index is round(t / dt).
std::pair<WienerIncrement, WienerIncrement> sample_increments(const NoiseConfig& config,
                                                              std::size_t noise_modes, double t,
                                                              double dt, std::uint32_t path_id,
                                                              std::uint32_t segment = 0);

/// Supplies per-step increments to the integrators.
class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  virtual double dt() const = 0;
  virtual std::size_t modes() const = 0;
  virtual void increments(std::uint32_t segment, std::uint64_t step, std::span<double> dw1,
                          std::span<double> dw2) const = 0;
};

/// Plain counter-keyed increments, N(0, dt) per mode.
class CounterIncrements final : public IncrementSource {
 public:
  CounterIncrements(const NoiseConfig& config, std::size_t noise_modes, double dt,
                    std::uint32_t path_id);
  double dt() const override { return dt_; }
  std::size_t modes() const override { return modes_; }
  void increments(std::uint32_t segment, std::uint64_t step, std::span<double> dw1,
                  std::span<double> dw2) const override;

 private:
  std::uint64_t seed_;
  std::size_t modes_;
  double dt_;
  std::uint32_t path_;
};

/// Brownian-bridge refinement tree: level-L increments are obtained by
/// splitting level-(L-1) increments, so summing sibling pairs gives back the
/// coarse increment. Used to compare step sizes on one noise realisation.
/// Only segment 0 is available.
class BridgeIncrements final : public IncrementSource {
 public:
  BridgeIncrements(const NoiseConfig& config, std::size_t noise_modes, double base_dt,
                   std::uint64_t base_steps, int level, std::uint32_t path_id);
  double dt() const override { return dt_; }
  std::size_t modes() const override { return modes_; }
  std::uint64_t steps() const { return steps_; }
  void increments(std::uint32_t segment, std::uint64_t step, std::span<double> dw1,
                  std::span<double> dw2) const override;

 private:
  std::size_t modes_;
  double dt_;
  std::uint64_t steps_;
  std::vector<double> w1_;
  std::vector<double> w2_;
};

/// Precomputed coloring weights lambda_k^{-gamma/2} for one gamma and the grid
/// profile sum_k lambda_k^{-gamma} phi_k^2 used by the Stratonovich correction.
class NoiseOperator {
 public:
  NoiseOperator(std::shared_ptr<const Basis> basis, double gamma, std::size_t noise_modes,
                ZeroModePolicy policy);

  const Basis& basis() const { return *basis_; }
  std::size_t modes() const { return modes_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> correction_profile() const { return profile_; }

  /// Grid values of (-Delta)^{-gamma/2} h = sum_k w_k h_k phi_k.
  void colored_grid(std::span<const double> h, std::span<double> out) const;
  /// g_gamma(u)[h] on the grid, given grid values of u.
  void apply_grid(std::span<const double> u_grid, std::span<const double> h,
                  std::span<double> out) const;

 private:
  std::shared_ptr<const Basis> basis_;
  std::size_t modes_;
  ZeroModePolicy policy_;
  std::vector<double> weights_;
  std::vector<double> profile_;
};

/// g_gamma(u)[h], projected back onto the basis. h holds one entry per noise mode.
Field apply_g(const Field& u, std::span<const double> h, double gamma,
              ZeroModePolicy policy = ZeroModePolicy::drop);

/// sigma * g_gamma(u)[dW]
Field noise_term(const Field& u, const WienerIncrement& inc, double gamma, double sigma,
                 ZeroModePolicy policy = ZeroModePolicy::drop);

/// (sigma^2 / 2) sum_k lambda_k^{-gamma} u phi_k^2 for the Stratonovich
/// interpretation, zero for Ito.
Field stratonovich_correction(const Field& u, double gamma, double sigma,
                              Interpretation interpretation, std::size_t noise_modes,
                              ZeroModePolicy policy = ZeroModePolicy::drop);

struct TailSum {
  double value = 0.0;
  bool converged = false;
  /// log2 of the ratio of the last two complete dyadic block sums.
  double block_log_ratio = 0.0;
};

/// Partial sum of k^{(2/d)(delta2 - gamma)} for k = 1..N^d with a divergence
/// verdict read off consecutive dyadic blocks.
TailSum hs_tail_sum(double gamma, double delta2, const SpaceConfig& space);
/// Same with an explicit number of terms.
TailSum hs_tail_sum(double gamma, double delta2, int dim, std::size_t terms);

/// Explicit Hilbert-Schmidt norm sum_k lambda_k^{-gamma} |u phi_k|_{L2}^2 over
/// the noise modes.
double hilbert_schmidt_norm_squared(const Field& u, const NoiseOperator& op);

}  // namespace fracgs::noise
