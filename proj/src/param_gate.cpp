#include "fracgs/param_gate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fracgs::gate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

Condition strict_condition(std::string name, std::string formula, double margin) {
  return {std::move(name), std::move(formula), margin > 0.0, margin, true, {}};
}

Condition weak_condition(std::string name, std::string formula, double margin) {
  return {std::move(name), std::move(formula), margin >= 0.0, margin, false, {}};
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

bool GateReport::overall() const {
  if (special_case_d2q2) return true;
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const Condition& c) { return c.satisfied; });
}

void GateReport::append(const GateReport& other) {
  conditions.insert(conditions.end(), other.conditions.begin(), other.conditions.end());
  special_case_d2q2 = special_case_d2q2 || other.special_case_d2q2;
  if (other.p_star_1) p_star_1 = other.p_star_1;
  if (other.p_star) p_star = other.p_star;
}

const Condition* GateReport::find(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

GateReport check_spaces(double q, double aleph, double alpha, int d, double p_star0) {
  GateReport report;
  report.special_case_d2q2 = d == 2 && near(aleph, 2.0) && near(q, 2.0);

  const double denom_q = 2.0 * d - aleph;
  if (denom_q <= 0.0) {
    Condition c = strict_condition("q_upper", "q < min(aleph+d, 2d)/(2d-aleph)", kInf);
    c.note = "no upper bound on q (2d - aleph <= 0)";
    report.conditions.push_back(c);
  } else {
    const double bound = std::min(aleph + d, 2.0 * d) / denom_q;
    report.conditions.push_back(
        strict_condition("q_upper", "q < min(aleph+d, 2d)/(2d-aleph) = " + number(bound), bound - q));
  }

  const double alpha_lo = d * (0.5 - 1.0 / q);
  const double alpha_hi = aleph / 2.0 - d / 2.0;
  Condition lo = strict_condition("alpha_lower", "alpha > d(1/2 - 1/q) = " + number(alpha_lo),
                                  alpha - alpha_lo);
  Condition hi = strict_condition("alpha_upper", "alpha < aleph/2 - d/2 = " + number(alpha_hi),
                                  alpha_hi - alpha);
  if (alpha_lo >= alpha_hi) lo.note = hi.note = "empty alpha window";
  report.conditions.push_back(lo);
  report.conditions.push_back(hi);

  const double denom_p = aleph + 2.0 * d - d * q + 2.0 * q * alpha;
  double p_bound = 4.0;
  std::string p_note;
  if (denom_p > 0.0)
    p_bound = std::max(2.0 * d / denom_p, 4.0);
  else
    p_note = "first branch vacuous (aleph+2d-dq+2q*alpha <= 0)";
  Condition pc = strict_condition(
      "p_star0", "p*_0 > max(2d/(aleph+2d-dq+2q*alpha), 4) = " + number(p_bound), p_star0 - p_bound);
  pc.note = p_note;
  report.conditions.push_back(pc);

  if (d == 1 && q >= 2.0 && q < aleph + 1.0) {
    const double tau = 0.5 - 1.0 / q - alpha;
    if (tau > 0.0) report.p_star_1 = aleph / (q * tau);
  } else if (q >= 1.0 && q < 2.0) {
    report.p_star_1 = 1.0 / (2.0 - q);
  }
  report.p_star = report.p_star_1 ? std::max(p_star0, 2.0 * *report.p_star_1) : p_star0;
  return report;
}

GateReport check_noise(double gamma1, double gamma2, int d, double aleph, double alpha,
                       double p_star) {
  GateReport report;
  const double g1 = d / 2.0 + d / p_star - std::min(2.0 / p_star, d / p_star);
  report.conditions.push_back(strict_condition(
      "gamma1", "gamma1 > d/2 + d/p* - min(2/p*, d/p*) = " + number(g1), gamma1 - g1));

  if (d == 2) {
    const double g2 = d - aleph / 2.0;
    report.conditions.push_back(
        strict_condition("gamma2", "gamma2 > d - aleph/2 = " + number(g2), gamma2 - g2));
  } else if (alpha >= 0.0 || alpha + aleph / 2.0 <= 0.5) {
    const double g2 = 1.0 - aleph / 2.0;
    report.conditions.push_back(
        strict_condition("gamma2", "gamma2 > 1 - aleph/2 = " + number(g2), gamma2 - g2));
  } else {
    Condition c{"gamma2", "gamma2 > (no bound stated)", false,
                std::numeric_limits<double>::quiet_NaN(), true,
                "d=1, alpha<0, alpha+aleph/2>1/2 is not covered"};
    report.conditions.push_back(c);
  }
  return report;
}

Condition check_embedding(double l1, double l2, double alpha, double aleph, int d) {
  if (!(l1 > 2.0) || !(l2 > 2.0)) throw std::invalid_argument("check_embedding: l1, l2 must exceed 2");
  const double lhs = d / 2.0 - alpha;
  const double rhs = aleph / l1 + d / l2;
  return weak_condition("embedding", "d/2 - alpha <= aleph/l1 + d/l2", rhs - lhs);
}

GateReport check_rho_window(double rho, double q, double aleph, int d, double p_star) {
  GateReport report;
  const double lo = d / 2.0 - aleph / (2.0 * q) - d / (2.0 * q);
  const double hi = aleph / 2.0 - d / 2.0;
  Condition c_lo = strict_condition("rho_lower", "rho > d/2 - aleph/(2q) - d/(2q) = " + number(lo), rho - lo);
  Condition c_hi = weak_condition("rho_upper", "rho <= aleph/2 - d/2 = " + number(hi), hi - rho);
  if (lo >= hi) c_lo.note = c_hi.note = "empty rho window";
  report.conditions.push_back(c_lo);
  report.conditions.push_back(c_hi);

  const double denom = aleph + d - d * q + 2.0 * q * rho;
  double bound = 4.0;
  std::string note;
  if (denom > 0.0)
    bound = std::max(4.0 * d / denom, 4.0);
  else
    note = "first branch vacuous (aleph+d-dq+2q*rho <= 0)";
  Condition pc = strict_condition("p_star_rho",
                                  "p* > max(4d/(aleph+d-dq+2q*rho), 4) = " + number(bound),
                                  p_star - bound);
  pc.note = note;
  report.conditions.push_back(pc);
  return report;
}

GateReport evaluate(const GateInputs& in) {
  GateReport report = check_spaces(in.q, in.aleph, in.alpha, in.d, in.p_star);
  const double p_star = report.p_star.value_or(in.p_star);
  report.append(check_noise(in.gamma1, in.gamma2, in.d, in.aleph, in.alpha, p_star));
  report.append(check_rho_window(in.rho, in.q, in.aleph, in.d, p_star));
  Condition order = weak_condition("alpha_ge_rho", "alpha >= rho", in.alpha - in.rho);
  report.conditions.push_back(order);
  return report;
}

std::string format_report(const GateReport& report) {
  std::size_t name_w = 4, formula_w = 7;
  for (const auto& c : report.conditions) {
    name_w = std::max(name_w, c.name.size());
    formula_w = std::max(formula_w, c.formula.size());
  }
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %-*s  %-5s  %12s  %s\n", static_cast<int>(name_w), "name",
                static_cast<int>(formula_w), "formula", "ok", "margin", "note");
  os << line;
  for (const auto& c : report.conditions) {
    std::snprintf(line, sizeof line, "%-*s  %-*s  %-5s  %12.6g  %s\n", static_cast<int>(name_w),
                  c.name.c_str(), static_cast<int>(formula_w), c.formula.c_str(),
                  c.satisfied ? "yes" : "no", c.margin, c.note.c_str());
    os << line;
  }
  os << "special_case_d2q2: " << (report.special_case_d2q2 ? "yes" : "no") << '\n';
  if (report.p_star_1) os << "p*_1: " << number(*report.p_star_1) << '\n';
  if (report.p_star) os << "p*: " << number(*report.p_star) << '\n';
  os << "overall: " << (report.overall() ? "admissible" : "not admissible") << '\n';
  return os.str();
}

}  // namespace fracgs::gate
