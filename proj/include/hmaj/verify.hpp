#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hmaj/oracle.hpp"
#include "hmaj/theory.hpp"

namespace hmaj::verify {

/// One property evaluated over a grid of instances.
struct Check {
  explicit Check(std::string check_name) : name(std::move(check_name)) {}

  std::string name;
  std::size_t instances = 0;
  std::size_t violations = 0;
  double worst = 0.0;   // largest violation margin, or the estimated constant
  bool gating = true;   // false: reported only, never fails the suite
  std::string note;
  bool ok() const { return !gating || violations == 0; }
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  /// bound name -> {pass, fail, inconclusive}
  std::map<std::string, std::array<std::size_t, 3>> tally;
  /// The first report of each bound plus every fail (capped).
  std::vector<theory::VerdictReport> samples;
  double seconds = 0.0;

  bool ok() const;
  std::vector<std::string> inconclusive_bounds() const;
};

struct Options {
  oracle::Options oracle;  // TieSplit::LowestIndexWins injects the tie-break fault
  std::uint64_t seed = 0x5eed;
  std::int64_t mc_trials = 200'000;
  std::int64_t rare_rounds = 1000;
  theory::Constants constants;
};

const std::vector<std::string>& suite_names();

/// Throws InvalidParams on an unknown suite name.
SuiteResult run_suite(const std::string& name, const Options& options = {});

std::set<std::string> bounds_exercised(const std::vector<SuiteResult>& results);

/// Every non-increasing p with entries in {0, 1/steps, ..., 1} and k entries.
std::vector<NormalizedConfig> sorted_simplex_grid(std::size_t k, int steps = 20);

/// Balanced counts with one agent moved from the last opinion to the first.
Configuration near_uniform(Count n, std::size_t k);

}  // namespace hmaj::verify
