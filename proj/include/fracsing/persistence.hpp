#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fracsing/bifurcation.hpp"
#include "fracsing/grid.hpp"
#include "fracsing/params.hpp"
#include "fracsing/singular.hpp"
#include "fracsing/stiffness.hpp"
#include "json.hpp"

namespace fracsing {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  double s = 0.4;
  double q = 2.0;
  double lambda = 0.05;
  std::vector<double> lambdas;
  int N = 256;
  double a = -1.0;
  double b = 1.0;
  double grading = 1.0;
  double residual_tol = 1e-8;
  double bisection_tol = 1e-2;  // relative bracket width
  double fit_width = 0.0;       // <= 0: 10% of the domain
  double nu = 0.2;
  std::vector<double> eps_ladder = {0.08, 0.04, 0.02};
  std::uint64_t seed = 7;
  std::string output_dir = "fracsing-out";
  bool trace = false;
  bool mountain_pass = false;

  ProblemParams params() const;
  Grid grid() const;
  /// Throws ParameterError on inadmissible (q, s), n <= 2s or non-positive tolerances.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProblemParams& p);
nlohmann::json to_json(const Grid& g);
nlohmann::json to_json(const SolveReport& r);
nlohmann::json solution_json(const Grid& grid, const ProblemParams& params, const Solution& sol);
nlohmann::json to_json(const BifurcationDiagram& d);
nlohmann::json to_json(const HolderFit& f);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes text through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

/// CSV with columns lambda, branch, supnorm, energy, residual, converged.
std::string diagram_csv(const BifurcationDiagram& d);

/// One two-column file per branch (lambda, supnorm). Returns the files written;
/// none (plus a warning on stderr) for an empty diagram.
std::vector<std::filesystem::path> emit_plot_data(const BifurcationDiagram& d, const std::filesystem::path& dir,
                                                  const std::string& stem);
/// Scatter (log delta, log u) and the fitted line.
std::vector<std::filesystem::path> emit_plot_data(const HolderFit& f, const std::filesystem::path& dir,
                                                  const std::string& stem);

/// Versioned sidecar for assembled systems, keyed by (a, b, N, s, grading).
void write_system_cache(const std::filesystem::path& path, const StiffnessSystem& sys,
                        const SpectralData* spectral = nullptr);
/// nullopt when the file is missing, has another version, or another key.
std::optional<StiffnessSystem> read_system_cache(const std::filesystem::path& path, const Grid& grid, double s,
                                                 SpectralData* spectral = nullptr);

struct RunManifest {
  nlohmann::json config;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  nlohmann::json reports = nlohmann::json::object();
  std::vector<std::filesystem::path> files;

  /// Hashes every listed file, then writes manifest.json atomically.
  void write(const std::filesystem::path& dir) const;
};

std::string utc_timestamp();

}  // namespace fracsing
