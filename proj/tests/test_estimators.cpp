#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "fracgs/estimators.hpp"
#include "fracgs/param_gate.hpp"

using namespace fracgs;
using namespace fracgs::estimators;
using spectral::Boundary;
using std::numbers::pi;

namespace {

sde::Problem base_problem() {
  sde::Problem p;
  p.space = {1, Boundary::neumann, 8, spectral::dealiased_grid_points(Boundary::neumann, 8, 2.0)};
  p.noise.gamma1 = p.noise.gamma2 = 1.5;
  return p;
}

Field smooth(const sde::Problem& p, double mean, double amp) {
  const auto b = spectral::Basis::get(p.space);
  Field f = Field::constant(b, mean);
  f += Field::mode(b, 1, amp);
  return f;
}

std::vector<PathRecord> frozen(const sde::Problem& p, const Field& u, const Field& v, double T,
                               double dt, std::size_t copies) {
  const std::size_t n = static_cast<std::size_t>(std::llround(T / dt)) + 1;
  std::vector<Field> us(n, u), vs(n, v);
  return std::vector<PathRecord>(copies, sde::make_record(p, dt, us, vs, 1e9));
}

}  // namespace

TEST_CASE("summary statistics") {
  const auto r = summarize("x", {1.0, 2.0, 3.0, 4.0});
  CHECK(r.estimate == doctest::Approx(2.5));
  CHECK(r.ci_half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(r.raw.size() == 4);
  CHECK_THROWS(summarize("x", {1.0}));

  std::vector<double> v(1000);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1e8, 1e8);
  for (auto& x : v) x = u(gen);
  const double a = stable_sum(v);
  std::shuffle(v.begin(), v.end(), gen);
  CHECK(stable_sum(v) == a);
}

TEST_CASE("deterministic ensembles have zero spread") {
  sde::Problem p = base_problem();
  p.model.c1 = p.model.c2 = 1.0;
  const auto recs = sde::simulate_ensemble(p, smooth(p, 1, 0.2), smooth(p, 1, 0.2), 1e9, {0.1, 0.01}, 4);
  const auto r = estimate_u_L2(recs);
  CHECK(r.ci_half_width == 0.0);
  CHECK(r.M == 4);
}

TEST_CASE("zero solution") {
  sde::Problem p = base_problem();
  p.model.sigma1 = 0.5;
  const auto b = spectral::Basis::get(p.space);
  const auto recs = sde::simulate_ensemble(p, Field::zero(b), Field::zero(b), 1e9, {0.1, 0.01}, 3);
  CHECK(estimate_u_L2(recs).estimate == 0.0);
  CHECK(estimate_coupling(recs, p.model.p_star, p.model.q).estimate == 0.0);
  const auto v = estimate_v_Halpha(recs, 0.0, 2.0);
  CHECK(v.sup.estimate == 0.0);
  CHECK(v.dissipation.estimate == 0.0);
}

TEST_CASE("p* functional") {
  sde::Problem p = base_problem();
  p.model.p_star = 2.0;
  const double eps = 0.3, T = 0.5;
  const auto recs = frozen(p, smooth(p, 0.0, eps), smooth(p, 0, 0), T, 0.01, 2);
  const auto r = estimate_u_pstar(recs, 2.0, 0.0);
  CHECK(r.gradient.estimate == doctest::Approx(T * eps * eps * pi * pi).epsilon(1e-10));
  CHECK(r.sup.estimate == doctest::Approx(estimate_u_L2(recs).estimate).epsilon(1e-10));

  const auto flat = frozen(p, smooth(p, 2.0, 0.0), smooth(p, 0, 0), T, 0.01, 2);
  CHECK(estimate_u_pstar(flat, 2.0, 0.0).gradient.estimate == doctest::Approx(0.0));
  CHECK_THROWS(estimate_u_pstar(flat, 4.0, 0.0));
}

TEST_CASE("H^alpha functional on a frozen mode") {
  sde::Problem p = base_problem();
  p.model.alpha = 0.3;
  p.model.aleph = 1.5;
  const auto b = spectral::Basis::get(p.space);
  const double T = 0.4;
  const auto recs = frozen(p, Field::zero(b), Field::mode(b, 1), T, 0.01, 2);
  const auto r = estimate_v_Halpha(recs, 0.3, 1.5);
  const double lam = pi * pi;
  CHECK(r.sup.estimate == doctest::Approx(std::pow(1 + lam, 0.3)));
  CHECK(r.dissipation.estimate == doctest::Approx(2 * T * std::pow(1 + lam, 0.3 + 0.75)));
}

TEST_CASE("coupling power averages per-path values") {
  sde::Problem p = base_problem();
  p.model.c1 = p.model.c2 = 1.0;
  p.model.sigma1 = p.model.sigma2 = 0.5;
  p.model.b2 = 0.5;
  const auto recs = sde::simulate_ensemble(p, smooth(p, 1, 0.2), smooth(p, 1, 0.2), 1e9, {0.2, 0.01}, 40);
  const auto m1 = estimate_coupling(recs, p.model.p_star, p.model.q, 1.0);
  const auto m2 = estimate_coupling(recs, p.model.p_star, p.model.q, 2.0);
  double mean_sq = 0;
  for (double x : m1.raw) mean_sq += x * x;
  mean_sq /= static_cast<double>(m1.raw.size());
  CHECK(m2.estimate == doctest::Approx(mean_sq).epsilon(1e-12));
  CHECK(m2.estimate > m1.estimate * m1.estimate);
}

TEST_CASE("estimators ignore ensemble order") {
  sde::Problem p = base_problem();
  p.model.sigma1 = p.model.sigma2 = 0.5;
  auto recs = sde::simulate_ensemble(p, smooth(p, 1, 0.2), smooth(p, 1, 0.2), 1e9, {0.1, 0.01}, 12);
  const auto a = estimate_u_L2(recs);
  std::reverse(recs.begin(), recs.end());
  const auto b = estimate_u_L2(recs);
  CHECK(a.estimate == b.estimate);
  CHECK(a.ci_half_width == b.ci_half_width);
}

TEST_CASE("Stroock-Varopoulos check") {
  auto make = [](int grid) {
    const auto b = spectral::Basis::get({1, Boundary::neumann, 8, grid});
    Field f = Field::constant(b, 1.0);
    f += Field::mode(b, 1, 0.5);
    return f;
  };
  const Field f32 = make(32), f64 = make(64);
  const std::vector<Field> p32(3, f32), p64(3, f64);
  const auto a = stroock_varopoulos_check(p32, 0.1, 2.0, 0.25);
  const auto b = stroock_varopoulos_check(p64, 0.1, 2.0, 0.25);
  CHECK(std::isfinite(a.ratio));
  CHECK(std::abs(a.ratio / b.ratio - 1.0) < 0.1);

  Field scaled = f32;
  scaled *= 3.0;
  const auto c = stroock_varopoulos_check(std::vector<Field>(3, scaled), 0.1, 2.0, 0.25);
  CHECK(c.lhs == doctest::Approx(std::pow(3.0, 4) * a.lhs).epsilon(1e-12));
  CHECK(c.ratio == doctest::Approx(a.ratio).epsilon(1e-12));

  const auto flat = Field::constant(f32.basis_ptr(), 2.0);
  const auto d = stroock_varopoulos_check(std::vector<Field>(3, flat), 0.1, 2.0, 0.25);
  CHECK(d.degenerate);
  CHECK(d.lhs == doctest::Approx(0.2 * 16.0));

  CHECK_THROWS(stroock_varopoulos_check(p32, 0.1, 1.0, 0.25));
  CHECK_THROWS(stroock_varopoulos_check(p32, 0.1, 2.0, 0.6));
}

TEST_CASE("trace diagnostic") {
  const std::size_t K = 32;
  const auto b = spectral::Basis::get({1, Boundary::neumann, static_cast<int>(K), 70});
  CHECK(trace_diagnostic(Field::zero(b), 1.2, 2.0) == 0.0);
  double expected = 0;
  for (std::size_t k = 1; k < K; ++k) expected += 2 * std::pow(pi * pi * k * k, -1.2);
  CHECK(trace_diagnostic(Field::constant(b, 1.0), 1.2, 2.0) == doctest::Approx(expected).epsilon(1e-12));
  double prev = 1e9;
  for (double g = 0.6; g < 3.0; g += 0.2) {
    const double v = trace_diagnostic(Field::constant(b, 1.0), g, 3.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("bound constants are ratios of the two sides") {
  sde::Problem p = base_problem();
  p.model.q = 1.5;
  p.model.alpha = 0.25;
  p.model.p_star = 6.0;
  p.model.sigma1 = p.model.sigma2 = 0.3;
  const Field u0 = smooth(p, 1, 0.2), v0 = smooth(p, 1, 0.2);
  const auto recs = sde::simulate_ensemble(p, u0, v0, 1e9, {0.1, 0.01}, 8);
  const auto e = moment_bounds(recs, u0, v0);
  const auto m = initial_moments(u0, v0, 6.0, 2.0, 0.25);
  CHECK(e.C_est1 == doctest::Approx(e.u_l2.estimate / (1 + m.u0_l2_sq)));
  CHECK(e.C1_est2 == doctest::Approx(e.lhs_est2 / (m.v0_halpha_sq + m.u0_lp1_pow2 + 1)));
  CHECK(e.lhs_est33 == doctest::Approx(e.u_pstar.sup.estimate + 30 * e.u_pstar.gradient.estimate));
}

TEST_CASE("CI half-width shrinks like M^{-1/2}") {
  sde::Problem p = base_problem();
  p.model.c1 = p.model.c2 = 0.0;
  p.model.sigma1 = p.model.sigma2 = 0.5;
  const Field u0 = smooth(p, 1, 0.3);
  const auto recs = sde::simulate_ensemble(p, u0, u0, 1e9, {0.05, 0.01}, 10000);
  std::vector<double> hw;
  for (std::size_t M : {100, 1000, 10000})
    hw.push_back(estimate_u_L2(std::span(recs).first(M)).ci_half_width);
  for (std::size_t i = 1; i < hw.size(); ++i) {
    const double ratio = hw[i - 1] / hw[i] / std::sqrt(10.0);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.2));
  }
}

TEST_CASE("moments stay finite and grow at most exponentially in T") {
  sde::Problem p = base_problem();
  p.space = {1, Boundary::neumann, 8, spectral::dealiased_grid_points(Boundary::neumann, 8, 1.5)};
  p.model.q = 1.5;
  p.model.alpha = 0.25;
  p.model.p_star = 6.0;
  p.model.b1 = 0.5;
  p.model.b2 = 0.1;
  p.model.sigma1 = p.model.sigma2 = 0.5;
  p.noise.gamma1 = p.noise.gamma2 = 1.0;
  REQUIRE(gate::evaluate(sde::gate_inputs(p)).overall());
  const Field u0 = smooth(p, 1, 0.3), v0 = smooth(p, 0.5, 0.2);
  const std::vector<double> Ts{0.25, 0.5, 1.0};
  std::array<std::vector<double>, 3> q;
  for (double T : Ts) {
    const auto recs = sde::simulate_ensemble(p, u0, v0, 1e9, {T, 0.005}, 100);
    const auto e = moment_bounds(recs, u0, v0);
    for (double x : {e.lhs_est1, e.lhs_est33, e.lhs_est2}) CHECK(std::isfinite(x));
    q[0].push_back(e.lhs_est1);
    q[1].push_back(e.lhs_est33);
    q[2].push_back(e.lhs_est2);
  }
  // log Q(T) against the least-squares line a + c T: growth between successive
  // T stays within a factor 1.25 of the fitted e^{c dT}.
  for (const auto& series : q) {
    std::vector<double> logs;
    for (double x : series) logs.push_back(std::log(x));
    const double tm = (Ts[0] + Ts[1] + Ts[2]) / 3, lm = (logs[0] + logs[1] + logs[2]) / 3;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      num += (Ts[i] - tm) * (logs[i] - lm);
      den += (Ts[i] - tm) * (Ts[i] - tm);
    }
    const double c = num / den;
    for (std::size_t i = 1; i < 3; ++i) {
      const double ratio = series[i] / series[i - 1];
      CHECK(ratio <= 1.25 * std::exp(c * (Ts[i] - Ts[i - 1])));
    }
  }
}
