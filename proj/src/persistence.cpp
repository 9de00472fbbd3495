#include "fracsing/persistence.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fracsing/error.hpp"

namespace fracsing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCacheVersion = 1;

std::string number(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

}  // namespace

ProblemParams RunConfig::params() const {
  ProblemParams p;
  p.s = s;
  p.q = q;
  p.lambda = lambda;
  return p;
}

Grid RunConfig::grid() const { return Grid(a, b, N, grading); }

void RunConfig::validate() const {
  params().validate();
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ParameterError("lambda list entries must be >= 0");
  if (!(residual_tol > 0.0) || !(bisection_tol > 0.0) || !(fit_width >= 0.0))
    throw ParameterError("tolerances must be positive");
  if (!(nu > 0.0)) throw ParameterError("bubble radius must be positive");
  for (double e : eps_ladder)
    if (!(e > 0.0)) throw ParameterError("bubble scales must be positive");
  Grid g = grid();
  (void)g;
}

json to_json(const RunConfig& c) {
  return {{"s", c.s},
          {"q", c.q},
          {"lambda", c.lambda},
          {"lambdas", c.lambdas},
          {"N", c.N},
          {"a", c.a},
          {"b", c.b},
          {"grading", c.grading},
          {"residual_tol", c.residual_tol},
          {"bisection_tol", c.bisection_tol},
          {"fit_width", c.fit_width},
          {"nu", c.nu},
          {"eps_ladder", c.eps_ladder},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"trace", c.trace},
          {"mountain_pass", c.mountain_pass}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.s = j.at("s").get<double>();
  c.q = j.at("q").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.lambdas = j.at("lambdas").get<std::vector<double>>();
  c.N = j.at("N").get<int>();
  c.a = j.at("a").get<double>();
  c.b = j.at("b").get<double>();
  c.grading = j.at("grading").get<double>();
  c.residual_tol = j.at("residual_tol").get<double>();
  c.bisection_tol = j.at("bisection_tol").get<double>();
  c.fit_width = j.at("fit_width").get<double>();
  c.nu = j.at("nu").get<double>();
  c.eps_ladder = j.at("eps_ladder").get<std::vector<double>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.trace = j.at("trace").get<bool>();
  c.mountain_pass = j.at("mountain_pass").get<bool>();
  return c;
}

json to_json(const ProblemParams& p) {
  return {{"n", p.n}, {"s", p.s}, {"q", p.q}, {"lambda", p.lambda}, {"crit", p.crit()}, {"cns", p.cns()}};
}

json to_json(const Grid& g) {
  return {{"a", g.a()}, {"b", g.b()}, {"N", g.size()}, {"h", g.h()}, {"grading", g.grading()}};
}

json to_json(const SolveReport& r) {
  auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"residual", finite(r.residual)},
          {"iterations", r.iterations},
          {"energy", finite(r.energy)},
          {"branch", to_string(r.branch)},
          {"converged", r.converged}};
}

json solution_json(const Grid& grid, const ProblemParams& params, const Solution& sol) {
  json j = to_json(sol.report);
  j["params"] = to_json(params);
  j["grid"] = to_json(grid);
  j["values"] = std::vector<double>(sol.u.data(), sol.u.data() + sol.u.size());
  return j;
}

json to_json(const BifurcationDiagram& d) {
  json entries = json::array();
  for (const auto& e : d.entries)
    entries.push_back({{"lambda", e.lambda},
                       {"branch", to_string(e.branch)},
                       {"supnorm", e.supnorm},
                       {"energy", e.energy},
                       {"residual", e.residual},
                       {"converged", e.converged}});
  return {{"lambda_cert", d.lambda_cert},
          {"lambda_star", d.lambda_star},
          {"bracket_width", d.bracket_width},
          {"entries", entries}};
}

json to_json(const HolderFit& f) {
  return {{"alpha_fit", f.alpha_fit}, {"alpha_theory", f.alpha_theory}, {"log_correction", f.log_correction},
          {"rsq", f.rsq},           {"fit_width", f.fit_width},       {"widened", f.widened},
          {"slope", f.slope},       {"intercept", f.intercept},       {"nodes", f.x.size()},
          {"trusted", f.trusted()}};
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::string diagram_csv(const BifurcationDiagram& d) {
  std::ostringstream o;
  o << "lambda,branch,supnorm,energy,residual,converged\n";
  for (const auto& e : d.entries)
    o << number(e.lambda) << ',' << to_string(e.branch) << ',' << number(e.supnorm) << ',' << number(e.energy) << ','
      << number(e.residual) << ',' << (e.converged ? 1 : 0) << '\n';
  return o.str();
}

std::vector<fs::path> emit_plot_data(const BifurcationDiagram& d, const fs::path& dir, const std::string& stem) {
  std::vector<fs::path> files;
  if (d.entries.empty()) {
    std::cerr << "warning: empty diagram, no plot data written\n";
    return files;
  }
  for (Branch b : {Branch::minimal, Branch::mountain_pass, Branch::extremal, Branch::pure_singular}) {
    const auto rows = d.branch(b);
    if (rows.empty()) continue;
    std::ostringstream o;
    o << "# lambda supnorm (" << to_string(b) << " branch)\n";
    for (const auto& e : rows)
      if (e.converged) o << number(e.lambda) << ' ' << number(e.supnorm) << '\n';
    const fs::path p = dir / (stem + "_" + to_string(b) + ".dat");
    write_atomic(p, o.str());
    files.push_back(p);
  }
  return files;
}

std::vector<fs::path> emit_plot_data(const HolderFit& f, const fs::path& dir, const std::string& stem) {
  std::vector<fs::path> files;
  if (f.x.empty()) {
    std::cerr << "warning: empty fit, no plot data written\n";
    return files;
  }
  std::ostringstream scatter, line;
  scatter << "# " << (f.log_correction ? "log_profile" : "log_delta") << " log_u\n";
  line << "# " << (f.log_correction ? "log_profile" : "log_delta") << " fitted_log_u\n";
  for (std::size_t k = 0; k < f.x.size(); ++k) {
    scatter << number(f.x[k]) << ' ' << number(f.y[k]) << '\n';
    line << number(f.x[k]) << ' ' << number(f.intercept + f.slope * f.x[k]) << '\n';
  }
  files.push_back(dir / (stem + "_scatter.dat"));
  write_atomic(files.back(), scatter.str());
  files.push_back(dir / (stem + "_line.dat"));
  write_atomic(files.back(), line.str());
  return files;
}

void write_system_cache(const fs::path& path, const StiffnessSystem& sys, const SpectralData* spectral) {
  json j;
  j["format"] = "fracsing-stiffness";
  j["version"] = kCacheVersion;
  j["key"] = {{"a", sys.grid.a()}, {"b", sys.grid.b()}, {"N", sys.size()}, {"s", sys.s}, {"grading", sys.grid.grading()}};
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(sys.size()) * sys.size());
  for (int i = 0; i < sys.size(); ++i)
    for (int k = 0; k < sys.size(); ++k) entries.push_back(sys.A(i, k));
  j["A"] = entries;
  if (spectral) {
    j["lam1"] = spectral->lam1;
    j["phi1"] = std::vector<double>(spectral->phi1.data(), spectral->phi1.data() + spectral->phi1.size());
  }
  write_atomic(path, j.dump());
}

std::optional<StiffnessSystem> read_system_cache(const fs::path& path, const Grid& grid, double s,
                                                 SpectralData* spectral) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "fracsing-stiffness" || j.value("version", 0) != kCacheVersion)
    return std::nullopt;
  const json& key = j.at("key");
  if (key.at("a").get<double>() != grid.a() || key.at("b").get<double>() != grid.b() ||
      key.at("N").get<int>() != grid.size() || key.at("s").get<double>() != s ||
      key.at("grading").get<double>() != grid.grading())
    return std::nullopt;
  const auto entries = j.at("A").get<std::vector<double>>();
  const int n = grid.size();
  if (entries.size() != static_cast<std::size_t>(n) * n) return std::nullopt;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) A(i, k) = entries[static_cast<std::size_t>(i) * n + k];
  if (spectral && j.contains("lam1")) {
    spectral->lam1 = j.at("lam1").get<double>();
    const auto phi = j.at("phi1").get<std::vector<double>>();
    spectral->phi1 = Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size()));
  }
  return make_system(grid, s, std::move(A));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

void RunManifest::write(const fs::path& dir) const {
  json inventory = json::array();
  for (const auto& f : files)
    inventory.push_back({{"path", fs::relative(f, dir).generic_string()}, {"sha256", sha256_file(f)}});
  const json j = {{"version", version}, {"started", started}, {"finished", finished},
                  {"config", config},   {"reports", reports},  {"files", inventory}};
  write_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace fracsing
