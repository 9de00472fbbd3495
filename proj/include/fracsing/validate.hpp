#pragma once

#include <string>
#include <vector>

#include "fracsing/persistence.hpp"
#include "json.hpp"

namespace fracsing {

struct ValidationCheck {
  std::string name;
  bool passed = false;
  nlohmann::json detail;
};

struct ValidationReport {
  std::uint64_t seed = 0;
  int N = 0;
  std::vector<ValidationCheck> checks;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

/// Seeded invariant suite on a coarse copy of the configured grid (N <= 64).
/// Contains no timestamps, so equal seeds give byte-identical reports.
ValidationReport run_validation(const RunConfig& cfg);

}  // namespace fracsing
