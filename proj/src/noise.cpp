#include "fracgs/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracgs/rng.hpp"

namespace fracgs::noise {

std::string to_string(Interpretation i) {
  return i == Interpretation::ito ? "ito" : "stratonovich";
}

Interpretation interpretation_from_string(const std::string& s) {
  if (s == "ito") return Interpretation::ito;
  if (s == "stratonovich") return Interpretation::stratonovich;
  throw std::invalid_argument("unknown noise interpretation '" + s + "' (expected ito|stratonovich)");
}

std::vector<std::string> validate(const NoiseConfig& noise, const SpaceConfig& space) {
  std::vector<std::string> errors;
  if (!(noise.gamma1 > 0.0)) errors.push_back("noise.gamma1 must be > 0");
  if (!(noise.gamma2 > 0.0)) errors.push_back("noise.gamma2 must be > 0");
  const long total = space.dim == 2 ? static_cast<long>(space.modes) * space.modes : space.modes;
  if (noise.modes < 0 || noise.modes > total)
    errors.push_back("noise.modes must lie in [0, modes^dim] (0 = all)");
  if (noise.zero_mode == ZeroModePolicy::reject)
    errors.push_back("noise.zero_mode 'reject' is not usable for sampled noise (use drop|shift)");
  return errors;
}

std::size_t noise_mode_count(const NoiseConfig& noise, const Basis& basis) {
  return noise.modes == 0 ? basis.size() : static_cast<std::size_t>(noise.modes);
}

void standard_normals(const StreamAddress& address, int process, std::uint64_t step,
                      std::span<double> out) {
  const rng::Key key = rng::key_from_seed(address.seed);
  const std::uint32_t tag = (address.segment << 8) | ((address.level & 0x3F) << 2) |
                            static_cast<std::uint32_t>(process & 0x3);
  for (std::size_t k = 0; k < out.size(); k += 2) {
    const rng::Counter counter = {static_cast<std::uint32_t>(k / 2),
                                  static_cast<std::uint32_t>(step), address.path, tag};
    const auto [z0, z1] = rng::normal_pair(counter, key);
    out[k] = z0;
    if (k + 1 < out.size()) out[k + 1] = z1;
  }
}

std::pair<WienerIncrement, WienerIncrement> sample_increments(const NoiseConfig& config,
                                                              std::size_t noise_modes, double t,
                                                              double dt, std::uint32_t path_id,
                                                              std::uint32_t segment) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increments: dt must be > 0");
  const auto step = static_cast<std::uint64_t>(std::llround(t / dt));
  WienerIncrement w1{std::vector<double>(noise_modes), t, dt};
  WienerIncrement w2{std::vector<double>(noise_modes), t, dt};
  CounterIncrements(config, noise_modes, dt, path_id).increments(segment, step, w1.dW, w2.dW);
  return {std::move(w1), std::move(w2)};
}

CounterIncrements::CounterIncrements(const NoiseConfig& config, std::size_t noise_modes,
                                     double dt, std::uint32_t path_id)
    : seed_(config.seed), modes_(noise_modes), dt_(dt), path_(path_id) {}

void CounterIncrements::increments(std::uint32_t segment, std::uint64_t step,
                                   std::span<double> dw1, std::span<double> dw2) const {
  const StreamAddress address{seed_, path_, segment, 0};
  standard_normals(address, 1, step, dw1);
  standard_normals(address, 2, step, dw2);
  const double scale = std::sqrt(dt_);
  for (auto& w : dw1) w *= scale;
  for (auto& w : dw2) w *= scale;
}

BridgeIncrements::BridgeIncrements(const NoiseConfig& config, std::size_t noise_modes,
                                   double base_dt, std::uint64_t base_steps, int level,
                                   std::uint32_t path_id)
    : modes_(noise_modes),
      dt_(std::ldexp(base_dt, -level)),
      steps_(base_steps << level) {
  if (level < 0 || level > 40) throw std::invalid_argument("BridgeIncrements: bad level");
  std::vector<double> z(modes_);
  auto build = [&](int process, std::vector<double>& w) {
    StreamAddress address{config.seed, path_id, 0, 0};
    w.assign(base_steps * modes_, 0.0);
    const double root = std::sqrt(base_dt);
    for (std::uint64_t i = 0; i < base_steps; ++i) {
      standard_normals(address, process, i, z);
      for (std::size_t k = 0; k < modes_; ++k) w[i * modes_ + k] = root * z[k];
    }
    double length = base_dt;
    std::uint64_t count = base_steps;
    std::vector<double> finer;
    for (int l = 1; l <= level; ++l) {
      address.level = static_cast<std::uint32_t>(l);
      const double spread = 0.5 * std::sqrt(length);
      finer.assign(2 * count * modes_, 0.0);
      for (std::uint64_t i = 0; i < count; ++i) {
        standard_normals(address, process, i, z);
        for (std::size_t k = 0; k < modes_; ++k) {
          const double parent = w[i * modes_ + k];
          const double left = 0.5 * parent + spread * z[k];
          finer[(2 * i) * modes_ + k] = left;
          finer[(2 * i + 1) * modes_ + k] = parent - left;
        }
      }
      w.swap(finer);
      count *= 2;
      length *= 0.5;
    }
  };
  build(1, w1_);
  build(2, w2_);
}

void BridgeIncrements::increments(std::uint32_t segment, std::uint64_t step,
                                  std::span<double> dw1, std::span<double> dw2) const {
  if (segment != 0) throw std::logic_error("BridgeIncrements: only segment 0 is available");
  if (step >= steps_) throw std::out_of_range("BridgeIncrements: step beyond the tree");
  std::copy_n(w1_.begin() + static_cast<std::ptrdiff_t>(step * modes_), modes_, dw1.begin());
  std::copy_n(w2_.begin() + static_cast<std::ptrdiff_t>(step * modes_), modes_, dw2.begin());
}

// ---------------------------------------------------------------------------

NoiseOperator::NoiseOperator(std::shared_ptr<const Basis> basis, double gamma,
                             std::size_t noise_modes, ZeroModePolicy policy)
    : basis_(std::move(basis)), modes_(noise_modes), policy_(policy) {
  if (modes_ > basis_->size()) throw std::invalid_argument("NoiseOperator: too many noise modes");
  weights_.assign(basis_->size(), 0.0);
  for (std::size_t k = 0; k < modes_; ++k) {
    const double lambda = basis_->eigenvalue(k);
    if (lambda == 0.0) {
      weights_[k] = policy == ZeroModePolicy::shift ? 1.0 : 0.0;
      continue;
    }
    weights_[k] = std::pow(lambda, -gamma / 2.0);
  }

  // sum_k w_k^2 phi_k(x)^2 on the grid
  profile_.assign(basis_->grid_size(), 0.0);
  std::vector<double> unit(basis_->size(), 0.0);
  std::vector<double> phi(basis_->grid_size());
  for (std::size_t k = 0; k < modes_; ++k) {
    if (weights_[k] == 0.0) continue;
    unit[k] = 1.0;
    basis_->synthesize(unit, phi);
    unit[k] = 0.0;
    const double w2 = weights_[k] * weights_[k];
    for (std::size_t i = 0; i < phi.size(); ++i) profile_[i] += w2 * phi[i] * phi[i];
  }
}

void NoiseOperator::colored_grid(std::span<const double> h, std::span<double> out) const {
  if (h.size() > modes_) throw std::invalid_argument("colored_grid: more coefficients than noise modes");
  if (policy_ == ZeroModePolicy::reject && !h.empty() && basis_->eigenvalue(0) == 0.0 && h[0] != 0.0)
    throw spectral::NegativePowerOnZeroMode();
  thread_local std::vector<double> coeffs;
  coeffs.assign(basis_->size(), 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) coeffs[k] = weights_[k] * h[k];
  basis_->synthesize(coeffs, out);
}

void NoiseOperator::apply_grid(std::span<const double> u_grid, std::span<const double> h,
                               std::span<double> out) const {
  colored_grid(h, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= u_grid[i];
}

Field apply_g(const Field& u, std::span<const double> h, double gamma, ZeroModePolicy policy) {
  const NoiseOperator op(u.basis_ptr(), gamma, h.size(), policy);
  const auto u_grid = u.grid_values();
  std::vector<double> product(u_grid.size());
  op.apply_grid(u_grid, h, product);
  return Field::from_grid(u.basis_ptr(), product);
}

Field noise_term(const Field& u, const WienerIncrement& inc, double gamma, double sigma,
                 ZeroModePolicy policy) {
  if (sigma == 0.0) return Field::zero(u.basis_ptr());
  Field out = apply_g(u, inc.dW, gamma, policy);
  out *= sigma;
  return out;
}

Field stratonovich_correction(const Field& u, double gamma, double sigma,
                              Interpretation interpretation, std::size_t noise_modes,
                              ZeroModePolicy policy) {
  if (interpretation == Interpretation::ito || sigma == 0.0) return Field::zero(u.basis_ptr());
  const NoiseOperator op(u.basis_ptr(), gamma, noise_modes, policy);
  auto grid = u.grid_values();
  const auto profile = op.correction_profile();
  const double scale = 0.5 * sigma * sigma;
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] *= scale * profile[i];
  return Field::from_grid(u.basis_ptr(), grid);
}

TailSum hs_tail_sum(double gamma, double delta2, int dim, std::size_t terms) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("hs_tail_sum: dim must be 1 or 2");
  const double exponent = (2.0 / dim) * (delta2 - gamma);
  auto term = [&](std::size_t k) { return std::pow(static_cast<double>(k), exponent); };

  TailSum out;
  // Smallest terms first.
  for (std::size_t k = terms; k >= 1; --k) out.value += term(k);

  // Last two complete dyadic blocks [2^b, 2^{b+1}) inside [1, max(terms, 3)]
  // are b = j - 1 and b = j - 2.
  const std::size_t span_end = std::max<std::size_t>(terms, 3);
  std::size_t j = 1;
  while ((std::size_t{1} << (j + 1)) - 1 <= span_end) ++j;
  auto block = [&](std::size_t b) {
    double s = 0.0;
    for (std::size_t k = (std::size_t{2} << b) - 1; k >= (std::size_t{1} << b); --k) s += term(k);
    return s;
  };
  const double last = block(j - 1);
  const double previous = block(j - 2);
  out.block_log_ratio = std::log2(last / previous);
  // Exactly at the boundary (harmonic blocks) the ratio tends to 1 from below
  // at rate 2^{-j}; the threshold keeps that case on the divergent side.
  out.converged = out.block_log_ratio < -1e-3;
  return out;
}

TailSum hs_tail_sum(double gamma, double delta2, const SpaceConfig& space) {
  const std::size_t terms =
      space.dim == 2 ? static_cast<std::size_t>(space.modes) * space.modes : space.modes;
  return hs_tail_sum(gamma, delta2, space.dim, terms);
}

double hilbert_schmidt_norm_squared(const Field& u, const NoiseOperator& op) {
  const auto grid = u.grid_values();
  const auto profile = op.correction_profile();
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += grid[i] * grid[i] * profile[i];
  return s * u.basis().quadrature_weight();
}

}  // namespace fracgs::noise
