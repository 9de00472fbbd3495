#pragma once

namespace fracsing {

/// 2n/(n - 2s); requires n > 2s.
double critical_exponent(int n, double s);

/// C^n_s = pi^{-n/2} 2^{2s-1} s Gamma((n+2s)/2) / Gamma(1-s), for 0 < s < 1.
double normalization_constant(int n, double s);

/// q(2s - 1) < 2s + 1. Throws for q <= 0 or s outside (0, 1).
bool admissible(double q, double s);

/// Parameters of  (-Delta)^s u = u^{-q} + lambda u^{2*_s - 1}  on an interval.
struct ProblemParams {
  int n = 1;
  double s = 0.4;
  double q = 2.0;
  double lambda = 0.0;

  double crit() const { return critical_exponent(n, s); }
  double cns() const { return normalization_constant(n, s); }
  /// Exponent of the critical term, 2*_s - 1.
  double power() const { return crit() - 1.0; }

  /// Throws ParameterError unless n = 1, 0 < s < 1/2, q > 0, lambda >= 0 and
  /// (q, s) is admissible.
  void validate() const;

  ProblemParams with_lambda(double l) const {
    ProblemParams p = *this;
    p.lambda = l;
    return p;
  }
};

ProblemParams make_params(double s, double q, double lambda);

}  // namespace fracsing
