#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmaj/core.hpp"
#include "hmaj/dynamics.hpp"
#include "hmaj/theory.hpp"

namespace hmaj::mc {

/// Wilson score interval; confidence is two-sided (0.999 by default).
Estimate wilson(std::int64_t successes, std::int64_t trials, double confidence = 0.999);

/// Monte Carlo frequencies of the per-agent winning events.
struct WinEventCounts {
  std::int64_t trials = 0;
  std::vector<std::int64_t> wins;    // W_i (after the uniform tie-break)
  std::vector<std::int64_t> strict;  // W_i,strict
  std::vector<std::int64_t> ties;    // W_i,ties
  std::int64_t strict_pair_12 = 0;   // W_1,strict or W_2,strict
};

WinEventCounts sample_win_events(Count h, const NormalizedConfig& p, std::int64_t trials, std::uint64_t seed);

/// Per-opinion Wilson estimates of Pr(W_i); deterministic given the seed.
std::vector<Estimate> estimate_win_probs(Count h, const NormalizedConfig& p, std::int64_t trials,
                                         std::uint64_t seed, double confidence = 0.999);

struct W1BoundReport {
  Count n = 0;
  Count h = 0;
  double c4 = 0.0;
  std::vector<double> p;
  Estimate w1, w1_strict, w1_ties, w12_strict;
  theory::VerdictReport w1_vs_p1;          // Pr(W_1) >= p_1 / 3
  theory::VerdictReport strict_vs_ties;    // Pr(W_1,strict) >= Pr(W_1,ties) / 6
  theory::VerdictReport strict_pair;       // Pr(W_1,2,strict) >= (p_1 + p_2) / 36
  bool all_pass() const;
};

/// h = ceil(c4 ln(n) / p_1). p must be non-increasing.
Count theorem_h(double p1, Count n, double c4);
W1BoundReport check_w1_lower_bound(const NormalizedConfig& p, Count n, double c4, std::int64_t trials,
                                   std::uint64_t seed);

/// Fraction of independent rounds from `config` in which every agent samples
/// opinion 1 strictly more often than each rare opinion (p_i <= rare_x p_1).
struct RareEliminationReport {
  std::int64_t rounds = 0;
  std::int64_t clean_rounds = 0;
  std::vector<Opinion> rare_set;
};
RareEliminationReport check_rare_elimination(const Configuration& config, Count h, double rare_x,
                                             std::int64_t rounds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweeps

enum class InitPattern { BalancedPlusBias, Balanced, Custom };

struct SweepSpec {
  std::vector<Count> ns;
  std::vector<std::size_t> ks;
  std::vector<Count> hs;             // fixed sample sizes, or
  std::optional<double> h_rule_c;    // h = ceil(c ln(n) / p_1)
  InitPattern pattern = InitPattern::BalancedPlusBias;
  double bias_lambda = 10.0;         // B0 >= lambda sqrt(c0(1))
  std::vector<Count> custom_counts;  // InitPattern::Custom
  std::int64_t trials = 1;
  std::uint64_t master_seed = 0;
  std::int64_t max_rounds = 1000;
  StopRule stop_rule = StopRule::Consensus;
  bool stop_on_plurality_loss = false;

  /// Throws ConfigError on an empty grid, trials < 1, or a cell whose h < 1
  /// or whose initial bias is not below c0(1).
  void validate() const;
};

struct Cell {
  std::size_t id = 0;
  Configuration config0;
  Count h = 0;
  Count b0 = 0;
};

std::vector<Cell> expand_cells(const SweepSpec& spec);

/// Balanced configuration where opinion 1 leads every other opinion by at
/// least lambda sqrt(c(1)); the others differ by at most one.
Configuration balanced_plus_bias(Count n, std::size_t k, double lambda);
Configuration balanced(Count n, std::size_t k);

struct BiasPoint {
  std::int64_t round = 0;
  double delta = 0.0;
  double p_first = 0.0;
  double p_second = 0.0;
};

struct TrialRecord {
  std::size_t cell_id = 0;
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  Count n = 0;
  std::size_t k = 0;
  Count h = 0;
  Count b0 = 0;
  std::int64_t max_rounds = 0;
  std::optional<std::int64_t> consensus_round;
  std::optional<Opinion> winner;
  std::optional<Opinion> initial_plurality;
  bool plurality_preserved = false;  // consensus reached on the initial plurality
  std::optional<std::int64_t> plurality_lost_round;
  std::vector<BiasPoint> bias_trace;
  std::optional<std::string> error;
};

/// Per-trial seed: mix of (master seed, cell index, trial index).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t cell, std::int64_t trial);

TrialRecord run_trial(const Cell& cell, const SweepSpec& spec, std::int64_t trial);

/// Receives records in (cell, trial) order regardless of worker count, with
/// the wall time of the trial in milliseconds.
using RecordSink = std::function<void(const TrialRecord&, double wall_ms)>;

void run_sweep(const SweepSpec& spec, unsigned workers, const RecordSink& sink);

// ---------------------------------------------------------------------------
// Audits and summaries

struct ThresholdRule {
  double lambda1 = 10.0;                // lower edge lambda1 sqrt(p_1 / n)
  std::optional<double> fixed_upper;    // replaces sqrt(2 (p_1 + p_2) / h)
};

struct BiasGrowthReport {
  std::size_t qualifying_pairs = 0;
  std::size_t pairs_at_least_e = 0;
  std::vector<double> growth_factors;
  std::optional<double> fraction_at_least_e() const;
};

BiasGrowthReport bias_growth_audit(const std::vector<TrialRecord>& records, const ThresholdRule& rule);

struct CellSummary {
  std::size_t cell_id = 0;
  Count n = 0;
  std::size_t k = 0;
  Count h = 0;
  Count b0 = 0;
  std::int64_t trials = 0;
  double plurality_success_rate = 0.0;
  std::optional<double> median_consensus_round;
  std::optional<double> p90_consensus_round;
  double mean_wall_time_ms = 0.0;
};

/// wall_ms may be empty (mean reported as 0) or parallel to records.
std::vector<CellSummary> summarize_cells(const std::vector<TrialRecord>& records,
                                         const std::vector<double>& wall_ms);

struct ScalingRow {
  Count n = 0;
  double ln_n = 0.0;
  std::optional<double> median_consensus_round;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  std::optional<double> slope;      // least squares of median round on ln n
  std::optional<double> intercept;
};

ScalingTable scaling_table(const std::vector<CellSummary>& cells);

/// Median with the midpoint convention; p90 by nearest rank.
std::optional<double> median(std::vector<double> values);
std::optional<double> percentile_nearest_rank(std::vector<double> values, double pct);

}  // namespace hmaj::mc
