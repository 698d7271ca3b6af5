// Acceptance suite: one PASS/FAIL line per criterion, numeric tolerance and
// runtime budget both enforced. Usage: acceptance <path-to-fracgs-cli> [criterion]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "fracgs/estimators.hpp"
#include "fracgs/fixed_point.hpp"
#include "fracgs/noise.hpp"
#include "fracgs/param_gate.hpp"
#include "fracgs/spectral.hpp"

using namespace fracgs;
using spectral::Basis;
using spectral::Boundary;
using spectral::Field;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::shared_ptr<const Basis> basis(int d, Boundary bc, int modes, double q = 2.0) {
  return Basis::get({d, bc, modes, spectral::dealiased_grid_points(bc, modes, q)});
}

Field smooth(const std::shared_ptr<const Basis>& b, double mean, double amp) {
  Field f = Field::constant(b, mean);
  f += Field::mode(b, 1, amp);
  return f;
}

// ------------------------------------------------------------------ 1

Outcome spectral_exactness() {
  std::mt19937_64 gen(20261016);
  double semigroup_err = 0.0;
  for (auto bc : {Boundary::neumann, Boundary::periodic}) {
    for (int d : {1, 2}) {
      const auto b = basis(d, bc, d == 1 ? 64 : 16);
      std::uniform_int_distribution<std::size_t> pick(0, b->size() - 1);
      std::uniform_real_distribution<double> time(0.0, 0.05), aleph(0.5, 2.0);
      for (int i = 0; i < 25; ++i) {
        const std::size_t k = pick(gen);
        const double t = time(gen);
        const spectral::Generator gen_op{spectral::OperatorKind::fractional, 0.8, -0.3, aleph(gen)};
        const Field s = spectral::semigroup_step(Field::mode(b, k), gen_op, t);
        const double exact =
            std::exp((-gen_op.r * std::pow(b->eigenvalue(k), gen_op.aleph / 2) + gen_op.a) * t);
        semigroup_err = std::max(semigroup_err, std::abs(s[k] - exact) / exact);
        for (std::size_t j = 0; j < s.size(); ++j)
          if (j != k) semigroup_err = std::max(semigroup_err, std::abs(s[j]));
      }
    }
  }
  double parseval_err = 0.0;
  std::normal_distribution<double> normal;
  for (auto bc : {Boundary::neumann, Boundary::periodic}) {
    for (int d : {1, 2}) {
      const auto b = basis(d, bc, d == 1 ? 64 : 16);
      Field f = Field::zero(b);
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = normal(gen) / (1.0 + static_cast<double>(k));
      const Field g = Field::from_grid(b, f.grid_values());
      double err = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) err += (f[k] - g[k]) * (f[k] - g[k]);
      parseval_err = std::max(parseval_err, std::sqrt(err) / f.l2_norm());
      double grid_sq = 0.0;
      for (double v : f.grid_values()) grid_sq += v * v;
      parseval_err = std::max(parseval_err,
                              std::abs(std::sqrt(grid_sq * b->quadrature_weight()) / f.l2_norm() - 1.0));
    }
  }
  return {semigroup_err <= 1e-13 && parseval_err <= 1e-12,
          fmt("100 (k,t) pairs max rel err %.2e (tol 1e-13), Parseval %.2e (tol 1e-12)", semigroup_err,
              parseval_err)};
}

// ------------------------------------------------------------------ 2

Outcome eigenvalue_asymptotics() {
  bool ok = true;
  std::string detail;
  for (auto bc : {Boundary::neumann, Boundary::periodic}) {
    for (int d : {1, 2}) {
      const auto b = basis(d, bc, d == 1 ? 256 : 32);
      std::vector<double> k, lam;
      for (std::size_t i = 10; i < b->size(); ++i) {
        k.push_back(static_cast<double>(i));
        lam.push_back(b->eigenvalue(i));
      }
      const double slope = estimators::loglog_slope(k, lam);
      ok = ok && std::abs(slope - 2.0 / d) <= 0.15;
      detail += fmt("%s d=%d slope %.4f; ", spectral::to_string(bc).c_str(), d, slope);
    }
  }
  return {ok, detail + "target 2/d +- 0.15"};
}

// ------------------------------------------------------------------ 3

Outcome ito_isometry() {
  const int N = 64;
  const double t = 0.1, gamma = 1.0;
  const auto b = basis(1, Boundary::neumann, N);
  Field u = Field::constant(b, 1.0);
  u += Field::mode(b, 1, 0.5);
  u += Field::mode(b, 3, -0.2);
  noise::NoiseConfig cfg;
  cfg.gamma1 = gamma;
  cfg.seed = 314159;
  const noise::NoiseOperator op(b, gamma, b->size(), cfg.zero_mode);
  const double hs = t * noise::hilbert_schmidt_norm_squared(u, op);

  const std::size_t paths = 10000;
  std::vector<double> values(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto [w1, w2] = noise::sample_increments(cfg, b->size(), 0.0, t, static_cast<std::uint32_t>(p));
    const Field x = noise::noise_term(u, w1, gamma, 1.0, cfg.zero_mode);
    values[p] = x.l2_norm() * x.l2_norm();
  }
  const auto mc = estimators::summarize("ito", std::move(values), false);
  const double rel = std::abs(mc.estimate / hs - 1.0);
  return {rel <= 0.05, fmt("MC %.6f +- %.6f vs HS sum %.6f, rel diff %.4f (tol 0.05)", mc.estimate,
                           mc.ci_half_width, hs, rel)};
}

// ------------------------------------------------------------------ 4

struct OdeCase {
  const char* name;
  int d;
  double q;
};

Outcome homogeneous_ode() {
  using State = std::array<double, 2>;
  sde::ModelParams m;
  m.a1 = -0.5;
  m.b1 = 0.5;
  m.c1 = 1.0;
  m.a2 = -0.5;
  m.b2 = 0.1;
  m.c2 = 1.0;
  const double u0 = 1.0, v0 = 0.5, T = 1.0, dt = 1e-4;
  bool ok = true;
  std::string detail;
  for (const OdeCase& c : {OdeCase{"q=1", 1, 1.0}, OdeCase{"q=2", 1, 2.0}, OdeCase{"d=2 q=2", 2, 2.0}}) {
    sde::Problem p;
    p.model = m;
    p.model.q = c.q;
    p.space = {c.d, Boundary::neumann, 4, spectral::dealiased_grid_points(Boundary::neumann, 4, c.q)};
    const auto b = Basis::get(p.space);
    sde::RecordOptions opts;
    opts.snapshot_every = 1000;
    const auto rec = sde::simulate_path(p, Field::constant(b, u0), Field::constant(b, v0), 1e12, {T, dt}, 0, opts);

    const auto rhs = [&](const State& x, State& dx, double) {
      const double r = x[0] * std::pow(std::max(x[1], 0.0), c.q);
      dx[0] = m.a1 * x[0] + m.b1 - m.c1 * r;
      dx[1] = m.a2 * x[1] + m.b2 + m.c2 * r;
    };
    std::vector<double> times;
    std::vector<State> oracle;
    for (std::size_t i = 0; i <= 10; ++i) times.push_back(0.1 * static_cast<double>(i));
    State x{u0, v0};
    namespace ode = boost::numeric::odeint;
    ode::integrate_times(ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, x,
                         times.begin(), times.end(), 1e-3,
                         [&](const State& s, double) { oracle.push_back(s); });

    double err = 0.0;
    for (std::size_t i = 0; i < rec.snapshot_times.size(); ++i) {
      const auto j = static_cast<std::size_t>(std::llround(rec.snapshot_times[i] / 0.1));
      err = std::max(err, std::abs(rec.u_snapshots[i][0] / oracle[j][0] - 1.0));
      err = std::max(err, std::abs(rec.v_snapshots[i][0] / oracle[j][1] - 1.0));
    }
    ok = ok && err <= 1e-4 && rec.snapshot_times.size() == 11;
    detail += fmt("%s max rel err %.2e; ", c.name, err);
  }
  return {ok, detail + "tol 1e-4"};
}

// ------------------------------------------------------------------ 5

Outcome strong_order() {
  sde::Problem p;
  p.space = {1, Boundary::neumann, 8, spectral::dealiased_grid_points(Boundary::neumann, 8, 2.0)};
  p.model.c1 = p.model.c2 = 0.0;
  p.model.a1 = -0.5;
  p.model.sigma1 = p.model.sigma2 = 1.0;
  p.noise.gamma1 = p.noise.gamma2 = 1.0;
  p.noise.seed = 5;
  const auto b = Basis::get(p.space);
  const Field u0 = smooth(b, 1.0, 0.3);
  const std::vector<int> levels{8, 9, 10, 11, 12};
  const auto s = estimators::strong_convergence(p, u0, u0, 1e9, 1.0, levels, 16, 256);
  std::string errs;
  for (double e : s.error) errs += fmt("%.3e ", e);
  return {s.order >= 0.45, fmt("order %.3f (>= 0.45) vs level-16 reference, errors %s", s.order, errs.c_str())};
}

// ------------------------------------------------------------------ shared admissible set

sde::Problem admissible_d1() {
  sde::Problem p;
  p.model.q = 1.5;
  p.model.aleph = 2.0;
  p.model.alpha = 0.25;
  p.model.p_star = 6.0;
  p.model.rho = 0.0;
  p.model.b1 = 0.5;
  p.model.b2 = 0.1;
  p.model.a2 = -0.5;
  p.model.sigma1 = p.model.sigma2 = 0.5;
  p.noise.gamma1 = p.noise.gamma2 = 1.0;
  p.space = {1, Boundary::neumann, 16, spectral::dealiased_grid_points(Boundary::neumann, 16, 1.5)};
  return p;
}

sde::Problem admissible_d2() {
  sde::Problem p = admissible_d1();
  p.model.q = 2.0;
  p.model.alpha = 0.0;
  p.noise.gamma1 = p.noise.gamma2 = 1.5;
  p.space = {2, Boundary::neumann, 16, spectral::dealiased_grid_points(Boundary::neumann, 16, 2.0)};
  return p;
}

// ------------------------------------------------------------------ 6

Outcome non_negativity() {
  sde::Problem p = admissible_d1();
  p.model.c1 = p.model.c2 = 1.0;
  const bool admissible = gate::evaluate(sde::gate_inputs(p)).overall();
  const auto b = Basis::get(p.space);
  const double dt = 0.002;
  const Field u0 = smooth(b, 1.0, 0.6), v0 = smooth(b, 0.5, 0.33);
  const auto grid_min = [](const Field& f) {
    const auto g = f.grid_values();
    return *std::min_element(g.begin(), g.end());
  };
  const double data_min = std::min(grid_min(u0), grid_min(v0));
  const auto recs = sde::simulate_ensemble(p, u0, v0, 1e9, {1.0, dt}, 100);
  std::size_t violations = 0, checked = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    for (std::size_t n = 0; n < r.series.size(); ++n) {
      for (double m : {r.series.u_min[n], r.series.v_min[n]}) {
        ++checked;
        worst = std::min(worst, m);
        if (m < -10 * dt) ++violations;
      }
    }
  }
  return {admissible && data_min >= 0.0 && violations == 0,
          fmt("gate admissible %s, data min %.3f, %zu violations below -10 dt over 100 paths (worst grid min %.3e)",
              admissible ? "yes" : "no", data_min, violations, worst)};
}

// ------------------------------------------------------------------ 7

Outcome cutoff_semantics() {
  sde::Problem p = admissible_d1();
  p.model.c1 = p.model.c2 = 1.0;
  p.model.sigma2 = 3.0;
  const auto b = Basis::get(p.space);
  const Field u0 = smooth(b, 1.0, 0.2), v0 = smooth(b, 1.0, 0.3);
  const sde::TimeGrid grid{0.5, 0.002};
  const double kappa = 1.2, kappa_wide = 1.6;
  std::size_t bad_phi = 0, bad_replay = 0, stopped = 0;
  for (std::uint32_t path = 0; path < 50; ++path) {
    const auto a = sde::simulate_path(p, u0, v0, kappa, grid, path);
    const auto w = sde::simulate_path(p, u0, v0, kappa_wide, grid, path);
    for (const auto* r : {&a, &w}) {
      const auto& s = r->series;
      for (std::size_t n = 0; n < s.size(); ++n) {
        if (s.h[n] <= r->kappa && s.phi[n] != 1.0) ++bad_phi;
        if (s.h[n] >= 2 * r->kappa && s.phi[n] != 0.0) ++bad_phi;
        if (n > 0 && s.phi[n] > s.phi[n - 1]) ++bad_phi;
      }
    }
    if (!a.stop_step) continue;
    ++stopped;
    for (std::size_t n = 0; n <= *a.stop_step; ++n) {
      if (a.series.u_l2[n] != w.series.u_l2[n] || a.series.v_halpha[n] != w.series.v_halpha[n] ||
          a.series.u_lp[n] != w.series.u_lp[n] || a.series.h[n] != w.series.h[n])
        ++bad_replay;
    }
  }
  return {bad_phi == 0 && bad_replay == 0 && stopped > 0,
          fmt("50 seeds x 2 kappas: %zu phi violations, %zu pre-stop replay mismatches (kappa %.1f vs %.1f, %zu/50 stopped)",
              bad_phi, bad_replay, kappa, kappa_wide, stopped)};
}

// ------------------------------------------------------------------ 8

Outcome fixed_point_equivalence() {
  sde::Problem p;
  p.space = {1, Boundary::neumann, 8, spectral::dealiased_grid_points(Boundary::neumann, 8, 2.0)};
  p.model.c1 = p.model.c2 = 0.01;
  p.model.b1 = 0.2;
  p.model.sigma1 = p.model.sigma2 = 0.3;
  p.noise.gamma1 = p.noise.gamma2 = 1.5;
  const auto b = Basis::get(p.space);
  const Field u0 = smooth(b, 1.0, 0.3), v0 = smooth(b, 1.0, 0.2);
  const sde::TimeGrid grid{0.25, 0.0025};
  sde::RecordOptions every;
  every.snapshot_every = 1;
  int max_iter = 0;
  double max_dist = 0.0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    p.noise.seed = seed;
    try {
      const auto r = fixed_point::picard_solve(p, u0, v0, 1e9, grid, 0, 1e-8, 20);
      const auto direct = fixed_point::control_from_record(sde::simulate_path(p, u0, v0, 1e9, grid, 0, every));
      max_iter = std::max(max_iter, r.iterations);
      max_dist = std::max(max_dist, fixed_point::m_norm_distance(r.fixed_point, direct, p.model.rho, p.model.aleph));
    } catch (const fixed_point::NoConvergence&) {
      ok = false;
    }
  }
  ok = ok && max_iter <= 20 && max_dist <= 1e-6;
  return {ok, fmt("10 seeds: max iterations %d (<= 20), max M-norm distance %.2e (tol 1e-6)", max_iter, max_dist)};
}

// ------------------------------------------------------------------ 9

struct BatchSummary {
  std::array<estimators::MomentReport, 3> lhs;
  std::array<double, 3> C{};
};

BatchSummary moment_batch(const sde::Problem& p, const Field& u0, const Field& v0, double T, double dt,
                          std::size_t M, std::uint32_t first_path) {
  const auto recs = sde::simulate_ensemble(p, u0, v0, 1e12, {T, dt}, M, first_path);
  const auto e = estimators::moment_bounds(recs, u0, v0);
  const double ps = p.model.p_star;
  std::vector<double> est33(M), est2(M);
  for (std::size_t i = 0; i < M; ++i) {
    est33[i] = e.u_pstar.sup.raw[i] + ps * (ps - 1) * e.u_pstar.gradient.raw[i];
    est2[i] = e.v_halpha.sup.raw[i] + e.v_halpha.dissipation.raw[i];
  }
  BatchSummary s;
  s.lhs = {e.u_l2, estimators::summarize("est33", est33), estimators::summarize("est2", est2)};
  s.C = {e.C_est1, e.C_est33, e.C1_est2};
  return s;
}

Outcome moment_boundedness() {
  struct Set {
    const char* name;
    sde::Problem problem;
    double T;
    double dt;
  };
  const std::size_t M = 500;
  bool ok = true;
  std::string detail;
  for (const Set& set : {Set{"d=1", admissible_d1(), 1.0, 0.005}, Set{"d=2", admissible_d2(), 0.5, 0.005}}) {
    const auto& p = set.problem;
    const auto gate = gate::evaluate(sde::gate_inputs(p));
    const auto b = Basis::get(p.space);
    const Field u0 = smooth(b, 1.0, 0.3), v0 = smooth(b, 0.5, 0.2);
    const auto first = moment_batch(p, u0, v0, set.T, set.dt, M, 0);
    const auto fresh = moment_batch(p, u0, v0, set.T, set.dt, M, static_cast<std::uint32_t>(M));
    double worst_ci = 0.0, worst_c = 0.0;
    bool finite = true;
    for (const auto* batch : {&first, &fresh}) {
      for (const auto& r : batch->lhs) {
        finite = finite && std::isfinite(r.estimate) && std::isfinite(r.ci_half_width) && r.estimate > 0;
        worst_ci = std::max(worst_ci, r.ci_half_width / r.estimate);
      }
    }
    for (std::size_t i = 0; i < 3; ++i) worst_c = std::max(worst_c, std::abs(fresh.C[i] / first.C[i] - 1.0));
    const bool pass = gate.overall() && finite && worst_ci < 0.2 && worst_c <= 0.5;
    ok = ok && pass;
    detail += fmt("%s (gate %s): lhs %.4g/%.4g/%.4g, C %.4g/%.4g/%.4g, max CI/est %.4f, max C drift %.4f; ", set.name,
                  gate.overall() ? "ok" : "fail", first.lhs[0].estimate, first.lhs[1].estimate,
                  first.lhs[2].estimate, first.C[0], first.C[1], first.C[2], worst_ci, worst_c);
  }
  return {ok, detail + "M=500, CI < 20%, C within 50%"};
}

// ------------------------------------------------------------------ 10

Outcome gate_fidelity() {
  gate::GateInputs special;
  special.d = 2;
  special.aleph = 2.0;
  special.q = 2.0;
  const auto s = gate::evaluate(special);

  const auto strict = gate::check_spaces(1.4, 1.5, 0.0, 2, 8.0);
  const auto* qb = strict.find("q_upper");
  const bool strict_fail = qb && !qb->satisfied && std::abs(qb->margin) < 1e-15;

  const auto free = gate::check_spaces(50.0, 2.0, 0.0, 1, 8.0);
  const auto* qf = free.find("q_upper");
  const bool unbounded = qf && qf->satisfied && std::isinf(qf->margin);

  return {s.special_case_d2q2 && s.overall() && strict_fail && unbounded,
          fmt("d2q2 special %s/overall %s; (d=2, aleph=1.5, q=1.4) q bound margin %.1e satisfied %s; d=1 aleph=2 "
              "q=50 %s",
              s.special_case_d2q2 ? "yes" : "no", s.overall() ? "yes" : "no", qb ? qb->margin : NAN,
              qb && qb->satisfied ? "yes" : "no", unbounded ? "unbounded" : "bounded")};
}

// ------------------------------------------------------------------ 11

Outcome hs_tail() {
  std::size_t agree = 0, total = 0;
  for (int d : {1, 2}) {
    const double delta2 = 0.3;
    for (int i = 0; i < 20; ++i) {
      const double offset = -0.25 + 0.5 * (i + 0.5) / 20.0;  // symmetric, never 0
      const double gamma = delta2 + d / 2.0 + offset;
      const bool analytic = gamma > delta2 + d / 2.0;
      const auto t = noise::hs_tail_sum(gamma, delta2, d, std::size_t{1} << 16);
      agree += t.converged == analytic;
      ++total;
    }
  }
  const double sum = noise::hs_tail_sum(2.0, 0.0, 1, 1u << 20).value;
  const double err = std::abs(sum - std::pow(pi, 4) / 90);
  return {agree == total && err <= 1e-6,
          fmt("%zu/%zu sweep verdicts agree (d=1,2), zeta(4) sum err %.2e (tol 1e-6)", agree, total, err)};
}

// ------------------------------------------------------------------ 12

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string without_wall_time(const std::string& manifest) {
  std::istringstream is(manifest);
  std::string out;
  for (std::string line; std::getline(is, line);)
    if (line.find("\"wall_time_s\"") == std::string::npos) out += line + '\n';
  return out;
}

Outcome cli_determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not given or missing"};
  const fs::path root = fs::temp_directory_path() / "fracgs_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "config.json";
  std::ofstream(config) << R"({
  "space": {"modes": 8},
  "model": {"q": 1.5, "alpha": 0.25, "p_star": 6, "sigma1": 0.5, "sigma2": 2.0, "b1": 0.5},
  "run": {"T": 0.2, "dt": 0.005, "paths": 4, "snapshot_every": 10, "dump_fields": true,
          "kappa": 1.5, "kappa_schedule": [1.0, 1.5], "level_min": 3, "level_max": 5, "reference_level": 8}
})";
  const char* commands[] = {"check-params --sweep-x q:1:3:5 --sweep-y aleph:1:2:3", "simulate", "glue",
                            "fixed-point", "estimate", "convergence"};
  std::size_t files = 0, mismatches = 0, failures = 0;
  for (const char* cmd : commands) {
    std::vector<fs::path> outs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (std::string(cmd).substr(0, 5) + std::to_string(rep));
      const std::string line = "\"" + cli + "\" --config \"" + config.string() + "\" --seed 99 --out \"" +
                               out.string() + "\" " + cmd + " > /dev/null";
      if (std::system(line.c_str()) != 0) ++failures;
      outs.push_back(out);
    }
    for (const auto& entry : fs::recursive_directory_iterator(outs[0])) {
      if (!entry.is_regular_file()) continue;
      const auto other = outs[1] / fs::relative(entry.path(), outs[0]);
      std::string a = slurp(entry.path()), b = slurp(other);
      if (entry.path().filename() == "manifest.json") {
        a = without_wall_time(a);
        b = without_wall_time(b);
      }
      ++files;
      mismatches += a != b;
    }
  }
  fs::remove_all(root);
  return {failures == 0 && mismatches == 0 && files > 20,
          fmt("6 subcommands run twice: %zu files compared, %zu differ, %zu non-zero exits (manifest wall time excluded)",
              files, mismatches, failures)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const int only = argc > 2 ? std::atoi(argv[2]) : 0;
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "spectral exactness", 1.0, spectral_exactness},
      {2, "eigenvalue asymptotics", 1.0, eigenvalue_asymptotics},
      {3, "Ito isometry", 30.0, ito_isometry},
      {4, "homogeneous ODE oracle", 10.0, homogeneous_ode},
      {5, "strong order, linear equation", 120.0, strong_order},
      {6, "non-negativity", 120.0, non_negativity},
      {7, "cutoff semantics", 60.0, cutoff_semantics},
      {8, "fixed-point/direct equivalence", 300.0, fixed_point_equivalence},
      {9, "moment boundedness", 900.0, moment_boundedness},
      {10, "parameter gate fidelity", 1.0, gate_fidelity},
      {11, "Hilbert-Schmidt tail criterion", 1.0, hs_tail},
      {12, "CLI determinism", 60.0, [&] { return cli_determinism(cli); }},
  };
  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.budget_s;
    failed += !pass;
    std::printf("%s [%2d] %s: %s (%.2f s, budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_s);
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
