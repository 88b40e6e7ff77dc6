#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hmaj/core.hpp"
#include "hmaj/oracle.hpp"
#include "hmaj/rng.hpp"

namespace hmaj {

enum class StopRule { Consensus, PluralityConsensusOn, MaxRoundsOnly };
enum class StepMode { AgentLevel, OracleLevel };

struct RunParams {
  Count h = 1;
  std::int64_t max_rounds = 1;
  StopRule stop_rule = StopRule::Consensus;
  Opinion target = 1;  // for PluralityConsensusOn
  bool stop_on_plurality_loss = false;
  std::uint64_t seed = 0;
  StepMode step_mode = StepMode::AgentLevel;

  /// Throws InvalidParams (h < 1, max_rounds < 1, target out of range).
  void validate(std::size_t k) const;
};

/// Full counts are kept for k <= kFullCountsLimit; otherwise the 16 largest
/// (opinion, count) pairs plus the remaining mass.
inline constexpr std::size_t kFullCountsLimit = 64;
inline constexpr std::size_t kTopCountsKept = 16;

struct RoundSummary {
  std::int64_t round = 0;
  std::vector<Count> counts;                           // full vector, or empty
  std::vector<std::pair<Opinion, Count>> top_counts;   // compressed form
  Count other = 0;
  Count additive_bias = 0;
  double normalized_bias = 0.0;
  std::optional<Opinion> plurality;
  double p_first = 0.0;   // largest share
  double p_second = 0.0;  // second largest share
};

enum class TerminalKind { Consensus, PluralityLost, RoundCap };

struct Trajectory {
  Count n = 0;
  std::size_t k = 0;
  Count h = 0;
  std::uint64_t seed = 0;
  std::optional<Opinion> initial_plurality;
  std::vector<RoundSummary> rounds;
  TerminalKind terminal = TerminalKind::RoundCap;
  std::optional<Opinion> winner;               // set with TerminalKind::Consensus
  std::optional<std::int64_t> consensus_round;
  std::optional<std::int64_t> plurality_lost_round;  // first round it happened
  Configuration final_config;
};

RoundSummary summarize(std::int64_t round, const Configuration& config);

/// One synchronous round: every agent draws h samples with repetition from
/// the current configuration and adopts the mode, ties broken uniformly.
/// Uses the multinomial sampler when k <= h, the alias sampler otherwise.
Configuration step(const Configuration& config, Count h, RngHandle& rng);

/// Next configuration drawn as Multinomial(n, q) from a precomputed agent
/// outcome law. Throws DimensionMismatch if win.k() != config.k().
Configuration oracle_step(const Configuration& config, const oracle::WinDistribution& win, RngHandle& rng);

/// Iterates step/oracle_step from config0 until the stop rule fires or
/// max_rounds rounds were executed. Round 0 is the initial configuration.
Trajectory run(const Configuration& config0, const RunParams& params);

}  // namespace hmaj
