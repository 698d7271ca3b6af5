#pragma once

// Real Laplace eigenbasis on the unit box [0,1]^d (Neumann) or the unit torus
// (periodic), d in {1, 2}, with grid synthesis/analysis, fractional powers,
// exact semigroups and spectral Sobolev norms.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracgs::spectral {

enum class Boundary { periodic, neumann };

/// How negative powers of the Laplacian treat the constant mode (lambda_0 = 0).
enum class ZeroModePolicy {
  drop,    ///< the zero mode is mapped to 0
  shift,   ///< lambda_0 is replaced by 1
  reject,  ///< throw if the zero-mode coefficient is non-zero
};

std::string to_string(Boundary b);
std::string to_string(ZeroModePolicy p);
Boundary boundary_from_string(const std::string& s);
ZeroModePolicy zero_mode_policy_from_string(const std::string& s);

struct SpaceConfig {
  int dim = 1;
  Boundary boundary = Boundary::neumann;
  int modes = 32;  ///< modes per axis, N
  int grid = 64;   ///< grid points per axis, M

  friend bool operator==(const SpaceConfig&, const SpaceConfig&) = default;
};

/// Every violated constraint, empty when valid.
std::vector<std::string> validate(const SpaceConfig& space);

/// Smallest grid size per axis for which the Galerkin projection of a
/// product of (q + 2) band-limited factors is alias free (integer q).
int dealiased_grid_points(Boundary boundary, int modes, double q);

class NegativePowerOnZeroMode : public std::domain_error {
 public:
  NegativePowerOnZeroMode()
      : std::domain_error("negative power applied to a non-zero constant mode") {}
};

/// Eigenpairs of -Laplace sorted by eigenvalue, plus the quadrature grid and
/// the transform tables. Immutable once built; shared between fields.
class Basis {
 public:
  explicit Basis(const SpaceConfig& space);

  /// Cached, thread-safe lookup. Every field on the same space shares the
  /// returned instance.
  static std::shared_ptr<const Basis> get(const SpaceConfig& space);

  const SpaceConfig& space() const { return space_; }
  int dim() const { return space_.dim; }
  std::size_t size() const { return eigenvalues_.size(); }
  std::size_t grid_size() const { return grid_size_; }
  int grid_per_axis() const { return space_.grid; }
  /// Volume element of the equal-weight quadrature, 1 / M^d.
  double quadrature_weight() const { return weight_; }

  std::span<const double> eigenvalues() const { return eigenvalues_; }
  double eigenvalue(std::size_t k) const { return eigenvalues_[k]; }
  /// Per-axis 1-D mode indices of flat mode k (second entry 0 for d = 1).
  std::array<int, 2> multi_index(std::size_t k) const { return multi_[k]; }
  std::size_t flat_index(std::array<int, 2> multi) const;

  /// Grid coordinates along one axis.
  std::span<const double> axis_points() const { return axis_; }
  /// Analytic value of eigenfunction k at a point.
  double eigenfunction(std::size_t k, std::span<const double> x) const;

  /// Coefficients -> grid values (size grid_size()).
  void synthesize(std::span<const double> coeffs, std::span<double> values) const;
  /// Coefficients -> grid values of the partial derivative along `axis`.
  void synthesize_derivative(std::span<const double> coeffs, int axis,
                             std::span<double> values) const;
  /// Grid values -> coefficients by quadrature (exact for band-limited input).
  void analyze(std::span<const double> values, std::span<double> coeffs) const;

 private:
  double axis_function(int a, double x) const;
  double axis_derivative(int a, double x) const;
  double axis_eigenvalue(int a) const;
  void synthesize_impl(std::span<const double> coeffs, const std::vector<double>& first,
                       const std::vector<double>& second, std::span<double> values) const;

  SpaceConfig space_;
  std::size_t grid_size_ = 0;
  double weight_ = 0.0;
  std::vector<double> axis_;
  std::vector<double> table_;       // M x N, table_[i * N + a] = phi_a(x_i)
  std::vector<double> derivative_;  // M x N, phi_a'(x_i)
  std::vector<double> eigenvalues_;
  std::vector<std::array<int, 2>> multi_;
  std::vector<std::size_t> flat_of_multi_;  // a * N + b -> k
};

/// One scalar field stored by its eigenbasis coefficients.
class Field {
 public:
  Field() = default;
  explicit Field(std::shared_ptr<const Basis> basis);
  Field(std::shared_ptr<const Basis> basis, std::vector<double> coeffs);

  static Field zero(std::shared_ptr<const Basis> basis) { return Field(std::move(basis)); }
  static Field constant(std::shared_ptr<const Basis> basis, double value);
  static Field mode(std::shared_ptr<const Basis> basis, std::size_t k, double amplitude = 1.0);
  static Field from_grid(std::shared_ptr<const Basis> basis, std::span<const double> values);

  const Basis& basis() const { return *basis_; }
  const std::shared_ptr<const Basis>& basis_ptr() const { return basis_; }
  std::size_t size() const { return coeffs_.size(); }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double operator[](std::size_t k) const { return coeffs_[k]; }
  double& operator[](std::size_t k) { return coeffs_[k]; }

  std::vector<double> grid_values() const;
  /// Spectral L2 norm (Parseval).
  double l2_norm() const;
  bool all_finite() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }

 private:
  std::shared_ptr<const Basis> basis_;
  std::vector<double> coeffs_;
};

/// coeffs_k -> lambda_k^s coeffs_k, constant mode handled by `policy` when s < 0.
Field apply_fractional_laplacian(const Field& f, double s,
                                 ZeroModePolicy policy = ZeroModePolicy::drop);

enum class OperatorKind { laplace, fractional };

/// Linear generator r * L + a with L = Delta (laplace) or
/// L = -(-Delta)^{aleph/2} (fractional).
struct Generator {
  OperatorKind kind = OperatorKind::laplace;
  double r = 1.0;
  double a = 0.0;
  double aleph = 2.0;
};

/// Per-mode factors exp((-r lambda_k^power + a) t).
std::vector<double> semigroup_factors(const Basis& basis, const Generator& gen, double t);
Field semigroup_step(const Field& f, const Generator& gen, double t);

/// (sum_k (1 + lambda_k)^s c_k^2)^{1/2}
double sobolev_norm(const Field& f, double s);
/// Squared Sobolev norm, avoids a sqrt/square round trip in time integrals.
double sobolev_norm_squared(const Field& f, double s);

/// Quadrature L^p norm on the synthesis grid.
double lp_norm(const Field& f, double p);
/// Same quadrature applied to precomputed grid values.
double grid_lp_norm(const Basis& basis, std::span<const double> values, double p);
/// Quadrature integral of grid values over the domain.
double grid_integral(const Basis& basis, std::span<const double> values);

/// max_{k >= 1} sup_grid |phi_k| / lambda_k^{(d-1)/2}
double eigenfunction_sup_constant(const Basis& basis);

}  // namespace fracgs::spectral
