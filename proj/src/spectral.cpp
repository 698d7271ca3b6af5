#include "fracgs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <tuple>

namespace fracgs::spectral {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

// Frequency m of 1-D periodic index a: 0 | cos m=1 | sin m=1 | cos m=2 | ...
int periodic_frequency(int a) { return (a + 1) / 2; }

}  // namespace

std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "neumann"; }

std::string to_string(ZeroModePolicy p) {
  switch (p) {
    case ZeroModePolicy::drop:
      return "drop";
    case ZeroModePolicy::shift:
      return "shift";
    case ZeroModePolicy::reject:
      return "reject";
  }
  return "drop";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "neumann") return Boundary::neumann;
  throw std::invalid_argument("unknown boundary '" + s + "' (expected periodic|neumann)");
}

ZeroModePolicy zero_mode_policy_from_string(const std::string& s) {
  if (s == "drop") return ZeroModePolicy::drop;
  if (s == "shift") return ZeroModePolicy::shift;
  if (s == "reject") return ZeroModePolicy::reject;
  throw std::invalid_argument("unknown zero-mode policy '" + s + "' (expected drop|shift|reject)");
}

std::vector<std::string> validate(const SpaceConfig& space) {
  std::vector<std::string> errors;
  if (space.dim != 1 && space.dim != 2) errors.push_back("space.dim must be 1 or 2");
  if (space.modes < 2) errors.push_back("space.modes must be >= 2");
  if (space.grid < space.modes) errors.push_back("space.grid must be >= space.modes");
  if (space.boundary == Boundary::periodic && space.modes % 2 == 0 && space.grid <= space.modes)
    errors.push_back("space.grid must exceed space.modes for periodic spaces with even mode count");
  return errors;
}

int dealiased_grid_points(Boundary boundary, int modes, double q) {
  const int factors = static_cast<int>(std::ceil(q)) + 2;
  const int exact = boundary == Boundary::neumann ? factors * (modes - 1) / 2 + 1
                                                  : factors * (modes / 2) + 1;
  const int floor_rule = static_cast<int>(std::ceil((q + 1.0) / 2.0)) * modes;
  return std::max(exact, floor_rule);
}

Basis::Basis(const SpaceConfig& space) : space_(space) {
  if (auto errors = validate(space); !errors.empty()) throw std::invalid_argument(errors.front());

  const int n = space.modes;
  const int m = space.grid;
  axis_.resize(m);
  for (int i = 0; i < m; ++i) {
    axis_[i] = space.boundary == Boundary::neumann ? (i + 0.5) / m : static_cast<double>(i) / m;
  }
  table_.resize(static_cast<std::size_t>(m) * n);
  derivative_.resize(table_.size());
  for (int i = 0; i < m; ++i) {
    for (int a = 0; a < n; ++a) {
      table_[i * n + a] = axis_function(a, axis_[i]);
      derivative_[i * n + a] = axis_derivative(a, axis_[i]);
    }
  }

  grid_size_ = space.dim == 1 ? m : static_cast<std::size_t>(m) * m;
  weight_ = 1.0 / static_cast<double>(grid_size_);

  // Integer sort key proportional to the eigenvalue so ties are exact.
  auto key1 = [&](int a) {
    const int f = space.boundary == Boundary::neumann ? a : periodic_frequency(a);
    return f * f;
  };
  if (space.dim == 1) {
    for (int a = 0; a < n; ++a) multi_.push_back({a, 0});
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) multi_.push_back({a, b});
    std::stable_sort(multi_.begin(), multi_.end(), [&](const auto& x, const auto& y) {
      return key1(x[0]) + key1(x[1]) < key1(y[0]) + key1(y[1]);
    });
  }
  flat_of_multi_.assign(static_cast<std::size_t>(space.dim == 1 ? n : n * n), 0);
  eigenvalues_.resize(multi_.size());
  for (std::size_t k = 0; k < multi_.size(); ++k) {
    const auto [a, b] = multi_[k];
    flat_of_multi_[space.dim == 1 ? a : a * n + b] = k;
    eigenvalues_[k] = axis_eigenvalue(a) + (space.dim == 2 ? axis_eigenvalue(b) : 0.0);
  }
}

std::shared_ptr<const Basis> Basis::get(const SpaceConfig& space) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int, int>, std::shared_ptr<const Basis>> cache;
  const auto key =
      std::make_tuple(space.dim, static_cast<int>(space.boundary), space.modes, space.grid);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_shared<const Basis>(space)).first;
  return it->second;
}

double Basis::axis_function(int a, double x) const {
  if (a == 0) return 1.0;
  if (space_.boundary == Boundary::neumann) return kSqrt2 * std::cos(kPi * a * x);
  const int f = periodic_frequency(a);
  return a % 2 == 1 ? kSqrt2 * std::cos(2.0 * kPi * f * x) : kSqrt2 * std::sin(2.0 * kPi * f * x);
}

double Basis::axis_derivative(int a, double x) const {
  if (a == 0) return 0.0;
  if (space_.boundary == Boundary::neumann) return -kSqrt2 * kPi * a * std::sin(kPi * a * x);
  const int f = periodic_frequency(a);
  const double w = 2.0 * kPi * f;
  return a % 2 == 1 ? -kSqrt2 * w * std::sin(w * x) : kSqrt2 * w * std::cos(w * x);
}

double Basis::axis_eigenvalue(int a) const {
  if (space_.boundary == Boundary::neumann) return kPi * kPi * a * a;
  const int f = periodic_frequency(a);
  return 4.0 * kPi * kPi * f * f;
}

std::size_t Basis::flat_index(std::array<int, 2> multi) const {
  const int n = space_.modes;
  if (multi[0] < 0 || multi[0] >= n || multi[1] < 0 || multi[1] >= n ||
      (space_.dim == 1 && multi[1] != 0))
    throw std::out_of_range("multi-index outside the basis");
  return flat_of_multi_[space_.dim == 1 ? multi[0] : multi[0] * n + multi[1]];
}

double Basis::eigenfunction(std::size_t k, std::span<const double> x) const {
  const auto [a, b] = multi_.at(k);
  double value = axis_function(a, x[0]);
  if (space_.dim == 2) value *= axis_function(b, x[1]);
  return value;
}

void Basis::synthesize_impl(std::span<const double> coeffs, const std::vector<double>& first,
                            const std::vector<double>& second, std::span<double> values) const {
  const int n = space_.modes;
  const int m = space_.grid;
  if (coeffs.size() != size() || values.size() != grid_size_)
    throw std::invalid_argument("synthesize: size mismatch");

  if (space_.dim == 1) {
    for (int i = 0; i < m; ++i) {
      const double* row = &first[static_cast<std::size_t>(i) * n];
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += row[a] * coeffs[a];
      values[i] = s;
    }
    return;
  }

  thread_local std::vector<double> dense;
  thread_local std::vector<double> tmp;
  dense.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t k = 0; k < multi_.size(); ++k) dense[multi_[k][0] * n + multi_[k][1]] = coeffs[k];

  tmp.assign(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    double* out = &tmp[static_cast<std::size_t>(i) * n];
    for (int a = 0; a < n; ++a) {
      const double f = first[static_cast<std::size_t>(i) * n + a];
      if (f == 0.0) continue;
      const double* c = &dense[static_cast<std::size_t>(a) * n];
      for (int b = 0; b < n; ++b) out[b] += f * c[b];
    }
  }
  for (int i = 0; i < m; ++i) {
    const double* t = &tmp[static_cast<std::size_t>(i) * n];
    for (int j = 0; j < m; ++j) {
      const double* s2 = &second[static_cast<std::size_t>(j) * n];
      double s = 0.0;
      for (int b = 0; b < n; ++b) s += t[b] * s2[b];
      values[static_cast<std::size_t>(i) * m + j] = s;
    }
  }
}

void Basis::synthesize(std::span<const double> coeffs, std::span<double> values) const {
  synthesize_impl(coeffs, table_, table_, values);
}

void Basis::synthesize_derivative(std::span<const double> coeffs, int axis,
                                  std::span<double> values) const {
  if (axis < 0 || axis >= space_.dim) throw std::out_of_range("derivative axis");
  if (axis == 0)
    synthesize_impl(coeffs, derivative_, table_, values);
  else
    synthesize_impl(coeffs, table_, derivative_, values);
}

void Basis::analyze(std::span<const double> values, std::span<double> coeffs) const {
  const int n = space_.modes;
  const int m = space_.grid;
  if (coeffs.size() != size() || values.size() != grid_size_)
    throw std::invalid_argument("analyze: size mismatch");

  if (space_.dim == 1) {
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    for (int i = 0; i < m; ++i) {
      const double* row = &table_[static_cast<std::size_t>(i) * n];
      const double v = values[i];
      for (int a = 0; a < n; ++a) coeffs[a] += row[a] * v;
    }
    for (auto& c : coeffs) c *= weight_;
    return;
  }

  thread_local std::vector<double> tmp;
  thread_local std::vector<double> dense;
  tmp.assign(static_cast<std::size_t>(n) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* v = &values[static_cast<std::size_t>(i) * m];
    for (int a = 0; a < n; ++a) {
      const double f = table_[static_cast<std::size_t>(i) * n + a];
      double* out = &tmp[static_cast<std::size_t>(a) * m];
      for (int j = 0; j < m; ++j) out[j] += f * v[j];
    }
  }
  dense.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a) {
    const double* t = &tmp[static_cast<std::size_t>(a) * m];
    double* out = &dense[static_cast<std::size_t>(a) * n];
    for (int j = 0; j < m; ++j) {
      const double* row = &table_[static_cast<std::size_t>(j) * n];
      const double tj = t[j];
      for (int b = 0; b < n; ++b) out[b] += tj * row[b];
    }
  }
  for (std::size_t k = 0; k < multi_.size(); ++k)
    coeffs[k] = dense[multi_[k][0] * n + multi_[k][1]] * weight_;
}

// ---------------------------------------------------------------------------

Field::Field(std::shared_ptr<const Basis> basis)
    : basis_(std::move(basis)), coeffs_(basis_ ? basis_->size() : 0, 0.0) {}

Field::Field(std::shared_ptr<const Basis> basis, std::vector<double> coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_ || coeffs_.size() != basis_->size())
    throw std::invalid_argument("Field: coefficient count does not match basis");
}

Field Field::constant(std::shared_ptr<const Basis> basis, double value) {
  Field f(std::move(basis));
  f.coeffs_[0] = value;
  return f;
}

Field Field::mode(std::shared_ptr<const Basis> basis, std::size_t k, double amplitude) {
  Field f(std::move(basis));
  f.coeffs_.at(k) = amplitude;
  return f;
}

Field Field::from_grid(std::shared_ptr<const Basis> basis, std::span<const double> values) {
  Field f(std::move(basis));
  f.basis_->analyze(values, f.coeffs_);
  return f;
}

std::vector<double> Field::grid_values() const {
  std::vector<double> values(basis_->grid_size());
  basis_->synthesize(coeffs_, values);
  return values;
}

double Field::l2_norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

bool Field::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

Field& Field::operator+=(const Field& other) {
  if (other.coeffs_.size() != coeffs_.size()) throw std::invalid_argument("Field size mismatch");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  if (other.coeffs_.size() != coeffs_.size()) throw std::invalid_argument("Field size mismatch");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= other.coeffs_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

// ---------------------------------------------------------------------------

Field apply_fractional_laplacian(const Field& f, double s, ZeroModePolicy policy) {
  Field out = f;
  const auto lambda = f.basis().eigenvalues();
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (lambda[k] == 0.0 && s < 0.0) {
      switch (policy) {
        case ZeroModePolicy::drop:
          out[k] = 0.0;
          break;
        case ZeroModePolicy::shift:
          break;  // 1^s = 1
        case ZeroModePolicy::reject:
          if (f[k] != 0.0) throw NegativePowerOnZeroMode();
          break;
      }
      continue;
    }
    out[k] *= std::pow(lambda[k], s);
  }
  return out;
}

std::vector<double> semigroup_factors(const Basis& basis, const Generator& gen, double t) {
  const auto lambda = basis.eigenvalues();
  std::vector<double> factors(lambda.size());
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double power =
        gen.kind == OperatorKind::laplace ? lambda[k] : std::pow(lambda[k], gen.aleph / 2.0);
    factors[k] = std::exp((-gen.r * power + gen.a) * t);
  }
  return factors;
}

Field semigroup_step(const Field& f, const Generator& gen, double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup_step: negative time");
  Field out = f;
  const auto factors = semigroup_factors(f.basis(), gen, t);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= factors[k];
  return out;
}

double sobolev_norm_squared(const Field& f, double s) {
  const auto lambda = f.basis().eigenvalues();
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) sum += std::pow(1.0 + lambda[k], s) * f[k] * f[k];
  return sum;
}

double sobolev_norm(const Field& f, double s) { return std::sqrt(sobolev_norm_squared(f, s)); }

double grid_integral(const Basis& basis, std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * basis.quadrature_weight();
}

double grid_lp_norm(const Basis& basis, std::span<const double> values, double p) {
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0.0;
  if (p == 2.0) {
    for (double v : values) s += v * v;
    return std::sqrt(s * basis.quadrature_weight());
  }
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s * basis.quadrature_weight(), 1.0 / p);
}

double lp_norm(const Field& f, double p) {
  const auto values = f.grid_values();
  return grid_lp_norm(f.basis(), values, p);
}

double eigenfunction_sup_constant(const Basis& basis) {
  const int n = basis.space().modes;
  const auto x = basis.axis_points();
  std::vector<double> axis_sup(n, 0.0);
  for (int a = 0; a < n; ++a) {
    for (double xi : x) {
      const double point[2] = {xi, 0.0};
      axis_sup[a] = std::max(axis_sup[a], std::abs(basis.eigenfunction(basis.flat_index({a, 0}), point)));
    }
  }
  double c0 = 0.0;
  for (std::size_t k = 1; k < basis.size(); ++k) {
    const auto [a, b] = basis.multi_index(k);
    const double sup = axis_sup[a] * (basis.dim() == 2 ? axis_sup[b] : 1.0);
    c0 = std::max(c0, sup / std::pow(basis.eigenvalue(k), (basis.dim() - 1) / 2.0));
  }
  return c0;
}

}  // namespace fracgs::spectral
