#include "hmaj/dynamics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "hmaj/sampler.hpp"

namespace hmaj {

void RunParams::validate(std::size_t k) const {
  if (h < 1) throw Error(ErrorCode::InvalidParams, "h must be >= 1");
  if (max_rounds < 1) throw Error(ErrorCode::InvalidParams, "max_rounds must be >= 1");
  if (stop_rule == StopRule::PluralityConsensusOn && (target < 1 || target > k)) {
    throw Error(ErrorCode::InvalidParams, "target opinion " + std::to_string(target) + " out of range");
  }
}

RoundSummary summarize(std::int64_t round, const Configuration& config) {
  RoundSummary s;
  s.round = round;
  const BiasStats stats = bias_stats(config);
  s.additive_bias = stats.additive_bias;
  s.normalized_bias = stats.normalized_bias;
  s.plurality = stats.plurality;

  const TopTwo top = top_two(config.counts);
  const auto n = static_cast<double>(config.n);
  s.p_first = static_cast<double>(config.counts[top.first]) / n;
  s.p_second = top.second ? static_cast<double>(config.counts[*top.second]) / n : 0.0;

  if (config.k() <= kFullCountsLimit) {
    s.counts = config.counts;
    return s;
  }
  std::vector<std::size_t> order(config.k());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + kTopCountsKept, order.end(), [&](std::size_t a, std::size_t b) {
    return config.counts[a] != config.counts[b] ? config.counts[a] > config.counts[b] : a < b;
  });
  Count kept = 0;
  for (std::size_t r = 0; r < kTopCountsKept; ++r) {
    s.top_counts.emplace_back(static_cast<Opinion>(order[r] + 1), config.counts[order[r]]);
    kept += config.counts[order[r]];
  }
  s.other = config.n - kept;
  return s;
}

Configuration step(const Configuration& config, Count h, RngHandle& rng) {
  validate(config);
  if (h < 1) throw Error(ErrorCode::InvalidParams, "h must be >= 1");
  const std::size_t k = config.k();
  Configuration next{std::vector<Count>(k, 0), config.n};

  // Consensus is absorbing: every sample is the same opinion.
  if (auto winner = is_consensus(config)) {
    next.counts[*winner - 1] = config.n;
    return next;
  }

  const NormalizedConfig p = normalize(config);
  std::vector<Count> sample(k);
  if (static_cast<Count>(k) <= h) {
    const MultinomialPlan plan(p);
    for (Count agent = 0; agent < config.n; ++agent) {
      plan.draw_into(h, rng, sample);
      ++next.counts[mode_with_tiebreak(std::span<const Count>(sample), rng) - 1];
    }
  } else {
    const AliasTable table(p);
    for (Count agent = 0; agent < config.n; ++agent) {
      std::fill(sample.begin(), sample.end(), 0);
      table.accumulate_into(h, rng, sample);
      ++next.counts[mode_with_tiebreak(std::span<const Count>(sample), rng) - 1];
    }
  }
  return next;
}

Configuration oracle_step(const Configuration& config, const oracle::WinDistribution& win, RngHandle& rng) {
  validate(config);
  if (win.k() != config.k()) {
    throw Error(ErrorCode::DimensionMismatch,
                "win distribution has k = " + std::to_string(win.k()) + ", configuration has " +
                    std::to_string(config.k()));
  }
  // Enumeration sums carry ~1e-16 of rounding; clamp and renormalise.
  std::vector<double> q(win.q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = std::clamp(win.q[i], 0.0, 1.0);
    total += q[i];
  }
  for (double& v : q) v /= total;

  Configuration next{std::vector<Count>(config.k(), 0), config.n};
  MultinomialPlan(NormalizedConfig{std::move(q), config.n}).draw_into(config.n, rng, next.counts);
  return next;
}

Trajectory run(const Configuration& config0, const RunParams& params) {
  validate(config0);
  params.validate(config0.k());

  Trajectory t;
  t.n = config0.n;
  t.k = config0.k();
  t.h = params.h;
  t.seed = params.seed;
  t.initial_plurality = bias_stats(config0).plurality;

  RngHandle rng(params.seed, 0);
  Configuration current = config0;

  auto consensus_reached = [&](std::int64_t round) {
    const auto winner = is_consensus(current);
    if (!winner) return false;
    if (!t.consensus_round) {
      t.consensus_round = round;
      t.winner = winner;
    }
    switch (params.stop_rule) {
      case StopRule::Consensus:
      case StopRule::PluralityConsensusOn:
        // consensus on another opinion is absorbing too, so stop either way
        t.terminal = TerminalKind::Consensus;
        return true;
      case StopRule::MaxRoundsOnly:
        return false;
    }
    return false;
  };

  t.rounds.push_back(summarize(0, current));
  if (consensus_reached(0)) {
    t.final_config = current;
    return t;
  }

  for (std::int64_t round = 1; round <= params.max_rounds; ++round) {
    if (params.step_mode == StepMode::OracleLevel) {
      const auto win = oracle::win_distribution(params.h, normalize(current));
      current = oracle_step(current, win, rng);
    } else {
      current = step(current, params.h, rng);
    }
    t.rounds.push_back(summarize(round, current));

    const auto& summary = t.rounds.back();
    if (t.initial_plurality && summary.plurality != t.initial_plurality && !t.plurality_lost_round) {
      t.plurality_lost_round = round;
      if (params.stop_on_plurality_loss) {
        t.terminal = TerminalKind::PluralityLost;
        break;
      }
    }
    if (consensus_reached(round)) break;
  }

  if (t.consensus_round && params.stop_rule == StopRule::MaxRoundsOnly) t.terminal = TerminalKind::Consensus;
  t.final_config = current;
  return t;
}

}  // namespace hmaj
