#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hmaj/error.hpp"

namespace hmaj {

// Opinion ids are 1-based throughout the public API; storage is 0-based.
using Opinion = std::uint32_t;
using Count = std::int64_t;

/// Opinion counts c(1..k) of a system of n agents.
///
/// Construction does not validate; call validate() (or make()) before use.
/// Configurations are plain values and never re-sorted.
struct Configuration {
  std::vector<Count> counts;
  Count n = 0;

  /// Builds a configuration whose n is the sum of the counts, validated.
  static Configuration make(std::vector<Count> counts);

  std::size_t k() const { return counts.size(); }
  Count count(Opinion i) const { return counts.at(i - 1); }

  bool operator==(const Configuration&) const = default;
};

/// p_i = c(i) / n, with n carried along for threshold formulas.
struct NormalizedConfig {
  std::vector<double> probs;
  Count n = 0;

  std::size_t k() const { return probs.size(); }
  double p(Opinion i) const { return probs.at(i - 1); }

  /// Wraps an explicit probability vector (used by the oracle and Monte Carlo
  /// code paths that work on arbitrary simplex points). Throws InvalidProb if
  /// an entry is negative or the vector does not sum to 1 within 1e-12.
  static NormalizedConfig from_probs(std::vector<double> probs, Count n = 0);
};

struct BiasStats {
  std::optional<Opinion> plurality;  // nullopt when the maximum is shared
  Count additive_bias = 0;           // B_t
  double normalized_bias = 0.0;      // delta_t = B_t / n

  /// p_plurality - p_j for every opinion j (0 for the plurality itself).
  /// Empty when the plurality is tied.
  std::vector<double> pairwise_gap;

  bool tied() const { return !plurality.has_value(); }
};

/// Throws EmptySystem (k == 0 or n <= 0) or SumMismatch. Negative counts are
/// reported as SumMismatch as well, since they can never sum to a valid n.
void validate(const Configuration& config);

NormalizedConfig normalize(const Configuration& config);

/// For k == 1 the bias is defined as n and the plurality as opinion 1.
BiasStats bias_stats(const Configuration& config);

std::optional<Opinion> is_consensus(const Configuration& config);

/// Indices of the top two entries of a count vector (second may be absent).
struct TopTwo {
  std::size_t first = 0;
  std::optional<std::size_t> second;
};
TopTwo top_two(std::span<const Count> counts);

}  // namespace hmaj
