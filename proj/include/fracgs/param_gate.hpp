#pragma once

// Admissibility checks for the model/space/noise parameters. Every check
// reports; none throws. Margins are value - bound (or bound - value for upper
// bounds) so that margin > 0 means satisfied for a strict inequality and
// margin >= 0 for a non-strict one.

#include <optional>
#include <string>
#include <vector>

namespace fracgs::gate {

struct Condition {
  std::string name;
  std::string formula;  ///< the inequality, human readable
  bool satisfied = false;
  double margin = 0.0;
  bool strict = true;
  /// Set when the bound degenerates (non-positive denominator, empty case).
  std::string note;
};

struct GateReport {
  std::vector<Condition> conditions;
  bool special_case_d2q2 = false;
  /// Derived exponents, when defined.
  std::optional<double> p_star_1;
  std::optional<double> p_star;

  /// Conjunction of all conditions, or the (d=2, aleph=2, q=2) escape.
  bool overall() const;
  void append(const GateReport& other);
  const Condition* find(const std::string& name) const;
};

/// q-bound, alpha window, p*_0 bound, and the derived p*_1 / p*.
GateReport check_spaces(double q, double aleph, double alpha, int d, double p_star0);

/// Lower bounds on gamma_1 and gamma_2.
GateReport check_noise(double gamma1, double gamma2, int d, double aleph, double alpha,
                       double p_star);

/// d/2 - alpha <= aleph / l1 + d / l2, for l1, l2 in (2, inf).
Condition check_embedding(double l1, double l2, double alpha, double aleph, int d);

/// Path-space index window for rho and the matching p* bound.
GateReport check_rho_window(double rho, double q, double aleph, int d, double p_star);

struct GateInputs {
  int d = 1;
  double q = 2.0;
  double aleph = 2.0;
  double alpha = 0.0;
  double rho = 0.0;
  double p_star = 8.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
};

/// All of the above for one parameter set.
GateReport evaluate(const GateInputs& in);

/// Aligned text rendering.
std::string format_report(const GateReport& report);

}  // namespace fracgs::gate
