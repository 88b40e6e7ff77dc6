#include "hmaj/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "hmaj/oracle.hpp"
#include "hmaj/sampler.hpp"

namespace hmaj::mc {

Estimate wilson(std::int64_t successes, std::int64_t trials, double confidence) {
  if (trials < 1) throw Error(ErrorCode::InvalidParams, "wilson interval needs trials >= 1");
  if (successes < 0 || successes > trials) throw Error(ErrorCode::InvalidParams, "successes outside [0, trials]");
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 1.0 - (1.0 - confidence) / 2.0);
  const double t = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / t;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / t;
  const double centre = (phat + z2 / (2.0 * t)) / denom;
  const double half = z / denom * std::sqrt(phat * (1.0 - phat) / t + z2 / (4.0 * t * t));

  Estimate e;
  e.point = phat;
  e.trials = trials;
  e.successes = successes;
  e.confidence = confidence;
  e.wilson_low = std::clamp(centre - half, 0.0, phat);
  e.wilson_high = std::clamp(centre + half, phat, 1.0);
  return e;
}

WinEventCounts sample_win_events(Count h, const NormalizedConfig& p, std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::InvalidParams, "trials must be >= 1");
  if (h < 1) throw Error(ErrorCode::InvalidParams, "h must be >= 1");
  const std::size_t k = p.k();
  WinEventCounts c;
  c.trials = trials;
  c.wins.assign(k, 0);
  c.strict.assign(k, 0);
  c.ties.assign(k, 0);

  RngHandle rng(seed, 0);
  std::vector<Count> x(k);
  const bool use_plan = static_cast<Count>(k) <= h;
  const std::optional<MultinomialPlan> plan = use_plan ? std::optional<MultinomialPlan>(p) : std::nullopt;
  const std::optional<AliasTable> table = use_plan ? std::nullopt : std::optional<AliasTable>(p);

  for (std::int64_t t = 0; t < trials; ++t) {
    if (use_plan) {
      plan->draw_into(h, rng, x);
    } else {
      std::fill(x.begin(), x.end(), 0);
      table->accumulate_into(h, rng, x);
    }
    const Count top = *std::max_element(x.begin(), x.end());
    const auto shared = std::count(x.begin(), x.end(), top);
    for (std::size_t i = 0; i < k; ++i) {
      if (x[i] != top) continue;
      ++c.ties[i];
      if (shared == 1) ++c.strict[i];
    }
    if (shared == 1 && (x[0] == top || (k > 1 && x[1] == top))) ++c.strict_pair_12;
    ++c.wins[mode_with_tiebreak(std::span<const Count>(x), rng) - 1];
  }
  return c;
}

std::vector<Estimate> estimate_win_probs(Count h, const NormalizedConfig& p, std::int64_t trials,
                                         std::uint64_t seed, double confidence) {
  const WinEventCounts c = sample_win_events(h, p, trials, seed);
  std::vector<Estimate> out;
  out.reserve(p.k());
  for (std::int64_t w : c.wins) out.push_back(wilson(w, trials, confidence));
  return out;
}

bool W1BoundReport::all_pass() const {
  return w1_vs_p1.verdict == theory::Verdict::Pass && strict_vs_ties.verdict == theory::Verdict::Pass &&
         strict_pair.verdict == theory::Verdict::Pass;
}

Count theorem_h(double p1, Count n, double c4) {
  if (!(p1 > 0.0)) throw Error(ErrorCode::InvalidProb, "p_1 must be positive");
  const double h = std::ceil(theory::h_threshold(p1, static_cast<double>(n), c4));
  return std::max<Count>(1, static_cast<Count>(h));
}

W1BoundReport check_w1_lower_bound(const NormalizedConfig& p, Count n, double c4, std::int64_t trials,
                                   std::uint64_t seed) {
  oracle::require_sorted(p);
  W1BoundReport r;
  r.n = n;
  r.c4 = c4;
  r.p = p.probs;
  const double p1 = p.probs[0];
  const double p2 = p.k() > 1 ? p.probs[1] : 0.0;
  r.h = theorem_h(p1, n, c4);

  const WinEventCounts c = sample_win_events(r.h, p, trials, seed);
  r.w1 = wilson(c.wins[0], trials);
  r.w1_strict = wilson(c.strict[0], trials);
  r.w1_ties = wilson(c.ties[0], trials);
  r.w12_strict = wilson(c.strict_pair_12, trials);

  r.w1_vs_p1 = theory::verdict("w1_lower", {{"p1", p1}}, r.w1);
  r.strict_pair = theory::verdict("strict_pair_lower", {{"p1", p1}, {"p2", p2}}, r.w12_strict);

  // Both sides are estimates: pass needs the strict interval above the
  // highest admissible Pr(W_1,ties)/6, fail needs it below the lowest.
  r.strict_vs_ties = theory::verdict("strict_vs_ties_lower", {{"pr_w1_ties", r.w1_ties.wilson_high}}, r.w1_strict);
  if (r.strict_vs_ties.verdict == theory::Verdict::Fail &&
      r.w1_strict.wilson_high >= theory::strict_vs_ties_lower(r.w1_ties.wilson_low)) {
    r.strict_vs_ties.verdict = theory::Verdict::Inconclusive;
  }
  return r;
}

RareEliminationReport check_rare_elimination(const Configuration& config, Count h, double rare_x,
                                             std::int64_t rounds, std::uint64_t seed) {
  const NormalizedConfig p = normalize(config);
  oracle::require_sorted(p);
  RareEliminationReport r;
  r.rounds = rounds;
  std::vector<std::size_t> rare;
  for (std::size_t i = 1; i < p.k(); ++i) {
    if (p.probs[i] <= rare_x * p.probs[0]) {
      rare.push_back(i);
      r.rare_set.push_back(static_cast<Opinion>(i + 1));
    }
  }

  const MultinomialPlan plan(p);
  std::vector<Count> x(p.k());
  for (std::int64_t round = 0; round < rounds; ++round) {
    RngHandle rng(seed, static_cast<std::uint64_t>(round));
    bool clean = true;
    for (Count agent = 0; agent < config.n && clean; ++agent) {
      plan.draw_into(h, rng, x);
      for (std::size_t i : rare) {
        if (x[0] <= x[i]) {
          clean = false;
          break;
        }
      }
    }
    if (clean) ++r.clean_rounds;
  }
  return r;
}

// ---------------------------------------------------------------------------

Configuration balanced(Count n, std::size_t k) {
  if (k == 0 || n < 1) throw Error(ErrorCode::EmptySystem, "need n >= 1 and k >= 1");
  std::vector<Count> counts(k, n / static_cast<Count>(k));
  for (Count r = 0; r < n % static_cast<Count>(k); ++r) ++counts[r];
  return Configuration::make(std::move(counts));
}

Configuration balanced_plus_bias(Count n, std::size_t k, double lambda) {
  if (k < 2) throw Error(ErrorCode::ConfigError, "a biased start needs k >= 2");
  const auto others = static_cast<Count>(k - 1);
  for (Count c1 = (n + static_cast<Count>(k) - 1) / static_cast<Count>(k); c1 <= n; ++c1) {
    const Count rest = n - c1;
    const Count largest_other = (rest + others - 1) / others;
    if (largest_other == 0) break;
    if (static_cast<double>(c1 - largest_other) >= lambda * std::sqrt(static_cast<double>(c1))) {
      std::vector<Count> counts(k, rest / others);
      counts[0] = c1;
      for (Count r = 0; r < rest % others; ++r) ++counts[1 + r];
      return Configuration::make(std::move(counts));
    }
  }
  throw Error(ErrorCode::ConfigError, "no configuration with the requested bias keeps every opinion populated");
}

std::vector<Cell> expand_cells(const SweepSpec& spec) {
  std::vector<Configuration> starts;
  if (spec.pattern == InitPattern::Custom) {
    starts.push_back(Configuration::make(spec.custom_counts));
  } else {
    for (Count n : spec.ns) {
      for (std::size_t k : spec.ks) {
        starts.push_back(spec.pattern == InitPattern::Balanced ? balanced(n, k)
                                                               : balanced_plus_bias(n, k, spec.bias_lambda));
      }
    }
  }

  std::vector<Cell> cells;
  for (const Configuration& c : starts) {
    const BiasStats stats = bias_stats(c);
    std::vector<Count> hs = spec.hs;
    if (spec.h_rule_c) {
      const double p1 = static_cast<double>(*std::max_element(c.counts.begin(), c.counts.end())) /
                        static_cast<double>(c.n);
      hs = {theorem_h(p1, c.n, *spec.h_rule_c)};
    }
    for (Count h : hs) cells.push_back(Cell{cells.size(), c, h, stats.additive_bias});
  }
  return cells;
}

void SweepSpec::validate() const {
  if (trials < 1) throw Error(ErrorCode::ConfigError, "trials must be >= 1");
  if (max_rounds < 1) throw Error(ErrorCode::ConfigError, "max_rounds must be >= 1");
  if (pattern == InitPattern::Custom) {
    if (custom_counts.empty()) throw Error(ErrorCode::ConfigError, "custom pattern needs counts");
  } else if (ns.empty() || ks.empty()) {
    throw Error(ErrorCode::ConfigError, "n and k lists must be non-empty");
  }
  if (hs.empty() && !h_rule_c) throw Error(ErrorCode::ConfigError, "give h values or an h rule");
  if (!hs.empty() && h_rule_c) throw Error(ErrorCode::ConfigError, "give either h values or an h rule, not both");

  for (const Cell& cell : expand_cells(*this)) {
    if (cell.h < 1) throw Error(ErrorCode::ConfigError, "cell " + std::to_string(cell.id) + " has h < 1");
    const Count c1 = *std::max_element(cell.config0.counts.begin(), cell.config0.counts.end());
    if (cell.config0.k() > 1 && cell.b0 >= c1) {
      throw Error(ErrorCode::ConfigError, "cell " + std::to_string(cell.id) + " has B0 >= c0(1)");
    }
  }
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t cell, std::int64_t trial) {
  return mix_seed(mix_seed(master_seed, cell), static_cast<std::uint64_t>(trial));
}

TrialRecord run_trial(const Cell& cell, const SweepSpec& spec, std::int64_t trial) {
  TrialRecord r;
  r.cell_id = cell.id;
  r.trial = trial;
  r.seed = trial_seed(spec.master_seed, cell.id, trial);
  r.n = cell.config0.n;
  r.k = cell.config0.k();
  r.h = cell.h;
  r.b0 = cell.b0;
  r.max_rounds = spec.max_rounds;
  try {
    RunParams params;
    params.h = cell.h;
    params.max_rounds = spec.max_rounds;
    params.stop_rule = spec.stop_rule;
    params.stop_on_plurality_loss = spec.stop_on_plurality_loss;
    params.seed = r.seed;
    r.initial_plurality = bias_stats(cell.config0).plurality;
    if (spec.stop_rule == StopRule::PluralityConsensusOn) params.target = r.initial_plurality.value_or(1);

    const Trajectory t = run(cell.config0, params);
    r.consensus_round = t.consensus_round;
    r.winner = t.winner;
    r.plurality_lost_round = t.plurality_lost_round;
    r.plurality_preserved = r.winner.has_value() && r.winner == r.initial_plurality;
    r.bias_trace.reserve(t.rounds.size());
    for (const RoundSummary& s : t.rounds) {
      r.bias_trace.push_back({s.round, s.normalized_bias, s.p_first, s.p_second});
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

void run_sweep(const SweepSpec& spec, unsigned workers, const RecordSink& sink) {
  spec.validate();
  const std::vector<Cell> cells = expand_cells(spec);
  const std::size_t total = cells.size() * static_cast<std::size_t>(spec.trials);
  workers = std::max(1u, workers);

  std::vector<std::optional<std::pair<TrialRecord, double>>> done(total);
  std::size_t next_emit = 0;
  std::mutex emit_mutex;
  std::atomic<std::size_t> next_job{0};

  auto work = [&] {
    for (std::size_t job = next_job++; job < total; job = next_job++) {
      const Cell& cell = cells[job / static_cast<std::size_t>(spec.trials)];
      const auto trial = static_cast<std::int64_t>(job % static_cast<std::size_t>(spec.trials));
      const auto start = std::chrono::steady_clock::now();
      TrialRecord record = run_trial(cell, spec, trial);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

      std::lock_guard lock(emit_mutex);
      done[job].emplace(std::move(record), ms);
      while (next_emit < total && done[next_emit]) {
        sink(done[next_emit]->first, done[next_emit]->second);
        done[next_emit].reset();
        ++next_emit;
      }
    }
  };

  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
}

// ---------------------------------------------------------------------------

std::optional<double> BiasGrowthReport::fraction_at_least_e() const {
  if (qualifying_pairs == 0) return std::nullopt;
  return static_cast<double>(pairs_at_least_e) / static_cast<double>(qualifying_pairs);
}

BiasGrowthReport bias_growth_audit(const std::vector<TrialRecord>& records, const ThresholdRule& rule) {
  BiasGrowthReport r;
  for (const TrialRecord& rec : records) {
    const auto& trace = rec.bias_trace;
    for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
      const BiasPoint& now = trace[t];
      if (!(now.delta > 0.0)) continue;
      const double upper = rule.fixed_upper.value_or(
          std::sqrt(2.0 * (now.p_first + now.p_second) / static_cast<double>(std::max<Count>(rec.h, 1))));
      const double lower =
          rec.n > 0 ? theory::bias_threshold(now.p_first, static_cast<double>(rec.n), rule.lambda1) : 0.0;
      if (!(now.delta < upper && now.delta >= lower)) continue;
      const double growth = trace[t + 1].delta / now.delta;
      ++r.qualifying_pairs;
      if (growth >= std::numbers::e) ++r.pairs_at_least_e;
      r.growth_factors.push_back(growth);
    }
  }
  return r;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
}

std::optional<double> percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::vector<CellSummary> summarize_cells(const std::vector<TrialRecord>& records,
                                         const std::vector<double>& wall_ms) {
  struct Acc {
    CellSummary s;
    std::int64_t successes = 0;
    std::vector<double> rounds;
    double wall_total = 0.0;
  };
  std::map<std::size_t, Acc> by_cell;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& r = records[i];
    Acc& a = by_cell[r.cell_id];
    a.s.cell_id = r.cell_id;
    a.s.n = r.n;
    a.s.k = r.k;
    a.s.h = r.h;
    a.s.b0 = r.b0;
    ++a.s.trials;
    if (r.plurality_preserved) ++a.successes;
    if (r.consensus_round) a.rounds.push_back(static_cast<double>(*r.consensus_round));
    if (i < wall_ms.size()) a.wall_total += wall_ms[i];
  }

  std::vector<CellSummary> out;
  for (auto& [id, a] : by_cell) {
    const double trials = static_cast<double>(a.s.trials);
    a.s.plurality_success_rate = static_cast<double>(a.successes) / trials;
    a.s.median_consensus_round = median(a.rounds);
    a.s.p90_consensus_round = percentile_nearest_rank(a.rounds, 90.0);
    a.s.mean_wall_time_ms = wall_ms.empty() ? 0.0 : a.wall_total / trials;
    out.push_back(a.s);
  }
  return out;
}

ScalingTable scaling_table(const std::vector<CellSummary>& cells) {
  std::map<Count, std::vector<double>> medians;
  for (const CellSummary& c : cells) {
    auto& slot = medians[c.n];
    if (c.median_consensus_round) slot.push_back(*c.median_consensus_round);
  }
  ScalingTable t;
  std::vector<std::pair<double, double>> points;
  for (auto& [n, values] : medians) {
    ScalingRow row{n, std::log(static_cast<double>(n)), median(values)};
    if (row.median_consensus_round) points.emplace_back(row.ln_n, *row.median_consensus_round);
    t.rows.push_back(row);
  }
  if (points.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (auto [x, y] : points) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0.0, sxx = 0.0;
    for (auto [x, y] : points) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    if (sxx > 0.0) {
      t.slope = sxy / sxx;
      t.intercept = my - *t.slope * mx;
    }
  }
  return t;
}

}  // namespace hmaj::mc
