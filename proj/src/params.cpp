#include "fracsing/params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fracsing/error.hpp"

namespace fracsing {

double critical_exponent(int n, double s) {
  if (!(n > 2.0 * s)) {
    std::ostringstream msg;
    msg << "critical exponent needs n > 2s (got n = " << n << ", s = " << s << ")";
    throw ParameterError(msg.str());
  }
  return 2.0 * n / (n - 2.0 * s);
}

double normalization_constant(int n, double s) {
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("normalization constant needs 0 < s < 1");
  const double half_n = 0.5 * n;
  // Gamma ratio through lgamma: both arguments are positive here.
  const double log_ratio = std::lgamma(half_n + s) - std::lgamma(1.0 - s);
  return std::pow(std::numbers::pi, -half_n) * std::exp2(2.0 * s - 1.0) * s * std::exp(log_ratio);
}

bool admissible(double q, double s) {
  if (!(q > 0.0)) throw ParameterError("singular exponent q must be positive");
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("fractional order s must lie in (0, 1)");
  return q * (2.0 * s - 1.0) < 2.0 * s + 1.0;
}

void ProblemParams::validate() const {
  if (n != 1) throw ParameterError("only n = 1 is supported");
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("fractional order s must lie in (0, 1)");
  if (!(n > 2.0 * s)) {
    std::ostringstream msg;
    msg << "need n > 2s so that 2*_s is finite (n = " << n << ", s = " << s << ")";
    throw ParameterError(msg.str());
  }
  if (!admissible(q, s)) {
    std::ostringstream msg;
    msg << "inadmissible (q, s) = (" << q << ", " << s << "): need q(2s-1) < 2s+1";
    throw ParameterError(msg.str());
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be finite and >= 0");
}

ProblemParams make_params(double s, double q, double lambda) {
  ProblemParams p;
  p.s = s;
  p.q = q;
  p.lambda = lambda;
  p.validate();
  return p;
}

}  // namespace fracsing
