#include "fracsing/validate.hpp"

#include <random>

#include "fracsing/bifurcation.hpp"
#include "fracsing/variational.hpp"

namespace fracsing {

using nlohmann::json;

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

json ValidationReport::to_json() const {
  json list = json::array();
  for (const auto& c : checks) list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"seed", seed}, {"N", N}, {"all_passed", all_passed()}, {"checks", list}};
}

namespace {

class FieldSampler {
 public:
  explicit FieldSampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  // sum of a few random positive bumps, plus a floor
  Eigen::VectorXd bumps(const Grid& grid, double floor = 0.0) {
    Eigen::VectorXd f = Eigen::VectorXd::Constant(grid.size(), floor);
    const int count = 1 + static_cast<int>(uniform(0.0, 3.0));
    for (int k = 0; k < count; ++k) {
      const double c = uniform(grid.a(), grid.b());
      const double width = uniform(0.05, 0.5) * (grid.b() - grid.a());
      const double height = uniform(0.0, 2.0);
      for (int i = 0; i < grid.size(); ++i) {
        const double r = (grid.node(i) - c) / width;
        f[i] += height * std::exp(-r * r);
      }
    }
    return f;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

ValidationReport run_validation(const RunConfig& cfg) {
  cfg.validate();
  ValidationReport rep;
  rep.seed = cfg.seed;
  rep.N = std::min(cfg.N, 64);
  const Grid grid(cfg.a, cfg.b, rep.N, cfg.grading);
  const ProblemParams p0 = cfg.params().with_lambda(0.0);
  const StiffnessSystem sys = assemble_stiffness(grid, p0);
  FieldSampler rng(cfg.seed);
  auto add = [&](std::string name, bool ok, json detail) { rep.checks.push_back({std::move(name), ok, std::move(detail)}); };

  {
    const double asym = (sys.A - sys.A.transpose()).cwiseAbs().maxCoeff();
    add("stiffness symmetric", asym <= 1e-12 * sys.A.cwiseAbs().maxCoeff(), {{"max_asymmetry", asym}});
  }
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd v(grid.size());
      for (int i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
      worst = std::min(worst, sys.form(v) / v.squaredNorm());
    }
    add("positive definite", worst > 0.0, {{"min_quotient", worst}});
  }
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd f1 = rng.bumps(grid);
      const Eigen::VectorXd f2 = f1 + rng.bumps(grid);
      worst = std::max(worst, (solve_dirichlet(sys, f1) - solve_dirichlet(sys, f2)).maxCoeff());
    }
    add("linear comparison", worst <= 1e-9, {{"max_violation", worst}});
  }
  const SpectralData eig = principal_eigenpair(sys);
  {
    const double rq = sys.form(eig.phi1) / eig.phi1.dot(sys.massw.cwiseProduct(eig.phi1));
    add("principal eigenpair", eig.phi1.minCoeff() > 0.0 && std::abs(rq - eig.lam1) <= 1e-8,
        {{"lam1", eig.lam1}, {"rayleigh_gap", std::abs(rq - eig.lam1)}, {"min_phi1", eig.phi1.minCoeff()}});
  }
  const Solution w = solve_pure_singular(sys, p0);
  add("pure singular solve", w.report.converged && w.u.minCoeff() > 0.0,
      {{"residual", w.report.residual}, {"max_w", w.u.maxCoeff()}});
  {
    double worst = -std::numeric_limits<double>::infinity();
    bool determinate = true;
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd g1 = rng.bumps(grid);
      const Eigen::VectorXd g2 = g1 + rng.bumps(grid);
      const Solution u1 = solve_singular_semilinear(sys, p0, g1);
      const Solution u2 = solve_singular_semilinear(sys, p0, g2);
      const ComparisonResult c = comparison_check(sys, p0, u1.u, u2.u, g1, g2);
      determinate = determinate && c.verdict != Verdict::indeterminate;
      worst = std::max(worst, c.worst_gap);
    }
    add("nonlinear comparison", determinate && worst <= 1e-8, {{"max_violation", worst}});
  }
  const double cert = lambda_certificate(cfg.params(), eig.lam1);
  const ProblemParams pl = cfg.params().with_lambda(0.01 * cert);
  {
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd u = w.u + rng.bumps(grid);
      const Eigen::VectorXd phi = rng.bumps(grid) - rng.bumps(grid);
      const double t = 1e-5;
      const double g = gateaux_derivative(sys, pl, u, phi);
      const double fd = (energy(sys, pl, u + t * phi) - energy(sys, pl, u - t * phi)) / (2 * t);
      worst = std::max(worst, std::abs(g - fd) / (1.0 + std::abs(g)));
    }
    add("gateaux vs finite differences", worst <= 1e-4, {{"max_relative_gap", worst}});
  }
  {
    const auto sup = search_supersolution(sys, pl, w.u, power_ladder());
    const IterationResult it = monotone_iteration(sys, pl, w.u, sup ? &sup->ubar : nullptr);
    const bool ok = it.status == IterationStatus::converged && it.min_increment >= -1e-10 &&
                    (!sup || it.max_above_bound <= 1e-8) && it.report.residual <= 1e-7;
    add("monotone iteration", ok,
        {{"lambda", pl.lambda},
         {"status", to_string(it.status)},
         {"iterations", it.report.iterations},
         {"min_increment", it.min_increment},
         {"supersolution_M", sup ? json(sup->M) : json(nullptr)},
         {"residual", it.report.residual}});
    const EnvelopeReport env = envelope_check(sys, pl, it.u, w.u);
    add("envelope", env.ok(), {{"worst_node", env.worst_node}, {"worst_violation", env.worst_violation}, {"max_u", env.max_u}});
  }
  {
    const Eigen::VectorXd delta = boundary_distance(grid).values;
    const Eigen::VectorXd synth = 3.0 * delta.array().pow(0.3).matrix();
    ProblemParams ph = p0;
    ph.q = 0.5;
    const HolderFit f = holder_fit(synth, grid, ph, 0.25 * (grid.b() - grid.a()));
    add("holder synthetic", std::abs(f.alpha_fit - 0.3) <= 0.01 && f.rsq >= 0.999,
        {{"alpha_fit", f.alpha_fit}, {"rsq", f.rsq}});
  }
  {
    const RunConfig back = config_from_json(fracsing::to_json(cfg));
    add("config round trip", back == cfg, json::object());
  }
  return rep;
}

}  // namespace fracsing
