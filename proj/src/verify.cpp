#include "hmaj/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "hmaj/montecarlo.hpp"

namespace hmaj::verify {

namespace {

constexpr std::size_t kMaxSamples = 64;

class Recorder {
 public:
  explicit Recorder(SuiteResult& out) : out_(out) {}

  theory::Verdict exact(const std::string& bound, const theory::Params& params, double measured) {
    return keep(theory::verdict(bound, params, measured));
  }
  theory::Verdict interval(const std::string& bound, const theory::Params& params, const Estimate& measured) {
    return keep(theory::verdict(bound, params, measured));
  }

 private:
  theory::Verdict keep(theory::VerdictReport r) {
    auto& t = out_.tally[r.bound];
    const bool first = t[0] + t[1] + t[2] == 0;
    ++t[static_cast<std::size_t>(r.verdict)];
    if ((first || r.verdict == theory::Verdict::Fail) && out_.samples.size() < kMaxSamples) {
      out_.samples.push_back(r);
    }
    return r.verdict;
  }
  SuiteResult& out_;
};

void note_violation(Check& c, double margin) {
  ++c.violations;
  c.worst = std::max(c.worst, margin);
}

// h in 1..7, k in 2..4, the 0.05-step sorted simplex.
void for_each_small_instance(const std::function<void(Count, const NormalizedConfig&)>& visit) {
  for (std::size_t k = 2; k <= 4; ++k) {
    const auto grid = sorted_simplex_grid(k);
    for (Count h = 1; h <= 7; ++h) {
      for (const auto& p : grid) visit(h, p);
    }
  }
}

SuiteResult lemma9_suite(const Options&) {
  SuiteResult out;
  Recorder rec(out);
  Check grid{"lemma9_grid"};
  std::size_t odd = 0, even = 0;
  for (Count m = 1; m <= 200; ++m) {
    for (int step = 1; step <= 99; ++step) {
      const double delta = step / 100.0;
      const auto r = oracle::binomial_pair_report(m, (1.0 + delta) / 2.0);
      ++grid.instances;
      const auto v = rec.exact("lemma9_lower", {{"m", double(m)}, {"delta", delta}}, r.diff_unconditional);
      if (v != theory::Verdict::Pass) {
        note_violation(grid, r.lemma9_bound - r.diff_unconditional);
        (m % 2 == 0 ? even : odd) += 1;
      }
    }
  }
  std::ostringstream os;
  os << "m in 1..200, delta in 0.01..0.99; violations at odd m: " << odd << ", at even m: " << even;
  grid.note = os.str();
  out.checks.push_back(grid);
  return out;
}

SuiteResult monotonicity_suite(const Options&) {
  SuiteResult out;
  Recorder rec(out);
  Check mono{"max_conditional_monotone"};
  mono.note = "m in 2..100, q in 0.51..0.99";
  Check c1{"reduction_constant_positive"};
  c1.note = "C1 estimated as the smallest ratio over every threshold of the grid";

  struct Point {
    Count m;
    double q;
    double diff;
  };
  std::vector<Point> lowest;
  double c1_hat = std::numeric_limits<double>::infinity();
  for (Count m = 2; m <= 100; ++m) {
    for (int step = 51; step <= 99; ++step) {
      const double q = step / 100.0;
      const auto r = oracle::binomial_pair_report(m, q);
      ++mono.instances;
      double prev = -std::numeric_limits<double>::infinity();
      double smallest = std::numeric_limits<double>::infinity();
      bool bad = false;
      for (const auto& [threshold, diff] : r.diff_given_max_ge) {
        if (diff < prev - theory::kExactTolerance) {
          bad = true;
          mono.worst = std::max(mono.worst, prev - diff);
        }
        prev = diff;
        smallest = std::min(smallest, diff);
      }
      if (bad) ++mono.violations;
      const double scale = std::min(std::sqrt(double(m)) * (2.0 * q - 1.0), 1.0);
      c1_hat = std::min(c1_hat, smallest / scale);
      lowest.push_back({m, q, smallest});
    }
  }
  c1.instances = lowest.size();
  c1.worst = c1_hat;
  if (!(c1_hat > 0.0)) c1.violations = 1;
  for (const Point& pt : lowest) {
    rec.exact("reduction_lower", {{"m", double(pt.m)}, {"q", pt.q}, {"C1", c1_hat}}, pt.diff);
  }
  out.checks.push_back(mono);
  out.checks.push_back(c1);
  return out;
}

SuiteResult diff_equality_suite(const Options& opts) {
  SuiteResult out;
  Recorder rec(out);
  Check eq{"cond_diff_majority_equals_comparison"};
  Check reduction{"reduction_path_agreement"};
  Check c{"cond_diff_constant_positive"};
  Check c5{"uncond_diff_constant_positive"};
  eq.note = reduction.note = "h in 1..7, k in 2..4, sorted 0.05-step simplex";
  c.note = "C estimated over instances with p1 > p2";
  c5.note = "C5 estimated over opinions j in the small-bias regime with p_j < p_1";

  struct CPoint {
    Count h;
    double p1, p2, diff;
  };
  struct C5Point {
    Count h;
    double delta, p1, p2, pr_w1, diff;
  };
  std::vector<CPoint> cpoints;
  std::vector<C5Point> c5points;
  double c_hat = std::numeric_limits<double>::infinity();
  double c5_hat = std::numeric_limits<double>::infinity();

  for_each_small_instance([&](Count h, const NormalizedConfig& p) {
    const auto r = oracle::event_report(h, p, 0.25, opts.oracle);
    if (r.pr_conditioning_event <= 0.0) return;
    ++eq.instances;
    const double gap = std::abs(r.cond_diff_majority - r.cond_diff_comparison);
    if (gap > theory::kExactTolerance) note_violation(eq, gap);

    const auto red = oracle::event_report_by_reduction(h, p);
    ++reduction.instances;
    const double red_gap = std::max({std::abs(red.pr_conditioning_event - r.pr_conditioning_event),
                                     std::abs(red.cond_diff_comparison - r.cond_diff_comparison),
                                     std::abs(red.sum_tail_conditional - r.sum_tail_conditional)});
    if (red_gap > theory::kExactTolerance) note_violation(reduction, red_gap);

    const double p1 = p.probs[0], p2 = p.probs[1];
    if (p1 > p2) {
      const double scale = std::min((p1 - p2) * std::sqrt(double(h)) / std::sqrt(2.0 * (p1 + p2)), 1.0);
      c_hat = std::min(c_hat, r.cond_diff_majority / scale);
      cpoints.push_back({h, p1, p2, r.cond_diff_majority});
    }

    const auto w = oracle::win_distribution(h, p, opts.oracle);
    for (std::size_t j = 1; j < p.k(); ++j) {
      const double delta = p1 - p.probs[j];
      if (delta <= 0.0 || delta > std::sqrt(2.0 * (p1 + p2) / double(h))) continue;
      const double scale = delta * std::sqrt(double(h) / (p1 + p2)) * w.q[0];
      const double diff = w.q[0] - w.q[j];
      c5_hat = std::min(c5_hat, diff / scale);
      c5points.push_back({h, delta, p1, p2, w.q[0], diff});
    }
  });

  c.instances = cpoints.size();
  c.worst = c_hat;
  if (!(c_hat > 0.0)) c.violations = 1;
  for (const CPoint& pt : cpoints) {
    rec.exact("cond_diff_lower", {{"p1", pt.p1}, {"p2", pt.p2}, {"h", double(pt.h)}, {"C", c_hat}}, pt.diff);
  }
  c5.instances = c5points.size();
  c5.worst = c5_hat;
  if (!(c5_hat > 0.0)) c5.violations = 1;
  for (const C5Point& pt : c5points) {
    rec.exact("uncond_diff_lower",
              {{"delta_j", pt.delta}, {"h", double(pt.h)}, {"p1", pt.p1}, {"p2", pt.p2}, {"C5", c5_hat},
               {"pr_w1", pt.pr_w1}},
              pt.diff);
  }
  out.checks.push_back(eq);
  out.checks.push_back(reduction);
  out.checks.push_back(c);
  out.checks.push_back(c5);
  return out;
}

SuiteResult dominance_suite(const Options& opts) {
  SuiteResult out;
  Check dom{"sum_tail_dominance"};
  dom.note = "h in 1..7, k in 2..4, sorted 0.05-step simplex";
  for_each_small_instance([&](Count h, const NormalizedConfig& p) {
    const auto r = oracle::event_report(h, p, 0.25, opts.oracle);
    if (r.pr_conditioning_event <= 0.0) return;
    ++dom.instances;
    const double margin = r.sum_tail_unconditional - r.sum_tail_conditional;
    if (margin > theory::kExactTolerance) note_violation(dom, margin);
  });
  out.checks.push_back(dom);
  return out;
}

SuiteResult tiemap_suite(const Options&) {
  SuiteResult out;
  Check injective{"tie_map_injective"};
  Check strict{"tie_map_images_strict"};
  Check ratio{"tie_map_ratio_identity"};
  Check any_index{"tie_map_injective_any_index"};
  any_index.gating = false;
  any_index.note = "j chosen among all opinions instead of strong ones";
  Check share{"strict_over_ties_minimum"};
  share.gating = false;
  share.note = "smallest Pr(W_1,strict)/Pr(W_1,ties) on the grid; small h lies outside the bound's hypothesis";
  share.worst = std::numeric_limits<double>::infinity();
  std::size_t undefined = 0;
  for (std::size_t k = 2; k <= 4; ++k) {
    for (Count h = 2; h <= 7; ++h) {
      for (const auto& p : sorted_simplex_grid(k)) {
        const auto a = oracle::tie_map_audit(h, p);
        ++injective.instances;
        ++strict.instances;
        ++ratio.instances;
        if (!a.injective) ++injective.violations;
        ++any_index.instances;
        if (!a.injective_any_index) ++any_index.violations;
        if (!a.images_strict) ++strict.violations;
        if (!a.ratio_identity_ok()) note_violation(ratio, a.max_ratio_rel_error);
        undefined += a.undefined_count;
        if (a.pr_w1_ties > 0.0) {
          ++share.instances;
          share.worst = std::min(share.worst, a.strict_over_ties);
        }
      }
    }
  }
  injective.note = "h in 2..7, k in 2..4, sorted 0.05-step simplex; 1-ties with a zero stolen count: " +
                   std::to_string(undefined);
  out.checks.push_back(injective);
  out.checks.push_back(strict);
  out.checks.push_back(ratio);
  out.checks.push_back(any_index);
  out.checks.push_back(share);
  return out;
}

SuiteResult oracle_suite(const Options& opts) {
  SuiteResult out;
  Check total{"win_distribution_normalized"};
  Check order{"strict_le_win_le_ties"};
  for_each_small_instance([&](Count h, const NormalizedConfig& p) {
    const auto w = oracle::win_distribution(h, p, opts.oracle);
    ++total.instances;
    ++order.instances;
    double sum = 0.0;
    for (double q : w.q) sum += q;
    if (std::abs(sum - 1.0) > theory::kExactTolerance) note_violation(total, std::abs(sum - 1.0));
    for (std::size_t i = 0; i < p.k(); ++i) {
      const double tol = theory::kExactTolerance;
      if (w.q_strict[i] > w.q[i] + tol || w.q[i] > w.q_ties[i] + tol) {
        note_violation(order, std::max(w.q_strict[i] - w.q[i], w.q[i] - w.q_ties[i]));
      }
    }
  });
  out.checks.push_back(total);
  out.checks.push_back(order);
  return out;
}

SuiteResult bounds_suite(const Options& opts) {
  SuiteResult out;
  Recorder rec(out);
  const double c4 = opts.constants.c4();
  const Count n = 20;

  Check w1{"w1_bound_checks"};
  w1.note = "n = 20, C4 = " + std::to_string(c4) + ", k in {2,4,8}, near-uniform p";
  for (std::size_t k : {2u, 4u, 8u}) {
    const auto p = normalize(near_uniform(n, k));
    const auto r = mc::check_w1_lower_bound(p, n, c4, opts.mc_trials, mix_seed(opts.seed, k));
    ++w1.instances;
    rec.exact("h_threshold", {{"p1", p.probs[0]}, {"n", double(n)}, {"C4", c4}}, double(r.h));
    for (const auto* v : {&r.w1_vs_p1, &r.strict_vs_ties, &r.strict_pair}) {
      auto& t = out.tally[v->bound];
      ++t[static_cast<std::size_t>(v->verdict)];
      if (v->verdict == theory::Verdict::Fail) ++w1.violations;
      if (out.samples.size() < kMaxSamples) out.samples.push_back(*v);
    }
  }
  out.checks.push_back(w1);

  Check ratio{"ratio_regime"};
  {
    const auto p = normalize(Configuration::make({8, 6, 4, 2}));
    const Count h = mc::theorem_h(p.probs[0], n, c4);
    const auto est = mc::estimate_win_probs(h, p, opts.mc_trials, mix_seed(opts.seed, 100));
    for (Opinion j = 2; j <= p.k(); ++j) {
      if (theory::regime_classifier(p, h, j, opts.constants.c6) == theory::BiasRegime::Small) continue;
      ++ratio.instances;
      const auto v = rec.interval("ratio_regime", {{"pr_wj", est[j - 1].wilson_high}, {"C6", opts.constants.c6}},
                                  est[0]);
      if (v == theory::Verdict::Fail) ++ratio.violations;
    }
    ratio.note = "p = (0.4, 0.3, 0.2, 0.1), n = 20, h = " + std::to_string(h);
  }
  out.checks.push_back(ratio);

  Check rare{"rare_opinion_elimination"};
  {
    const auto config = Configuration::make({480, 400, 120});
    const Count rn = config.n;
    const double p1 = 0.48;
    const Count h = mc::theorem_h(p1, rn, c4);
    const auto r = mc::check_rare_elimination(config, h, 0.25, opts.rare_rounds, mix_seed(opts.seed, 200));
    ++rare.instances;
    const auto v = rec.interval("weak_opinion_thresholds",
                                {{"n", double(rn)}, {"C2", opts.constants.c2}, {"C3", opts.constants.c3}},
                                mc::wilson(r.clean_rounds, r.rounds));
    if (v == theory::Verdict::Fail) ++rare.violations;
    rare.note = std::to_string(r.clean_rounds) + "/" + std::to_string(r.rounds) +
                " clean rounds, n = 1000, p = (0.48, 0.40, 0.12), h = " + std::to_string(h);
  }
  out.checks.push_back(rare);

  Check bias{"initial_bias_hypothesis"};
  bias.note = "balanced start with B0 = 10 sqrt(c0(1)), k = 16";
  for (Count bn : {Count{1000}, Count{10000}, Count{100000}}) {
    const auto config = mc::balanced_plus_bias(bn, 16, 10.0);
    const auto stats = bias_stats(config);
    const double p1 = double(config.counts[0]) / double(bn);
    ++bias.instances;
    const auto v = rec.exact("bias_threshold", {{"p1", p1}, {"n", double(bn)}, {"lambda1", 10.0}},
                             stats.normalized_bias);
    if (v == theory::Verdict::Fail) ++bias.violations;
  }
  out.checks.push_back(bias);
  return out;
}

using SuiteFn = SuiteResult (*)(const Options&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"oracle", oracle_suite},           {"lemma9", lemma9_suite},
      {"diff_equality", diff_equality_suite}, {"monotonicity", monotonicity_suite},
      {"dominance", dominance_suite},     {"tiemap", tiemap_suite},
      {"bounds", bounds_suite},
  };
  return suites;
}

}  // namespace

bool SuiteResult::ok() const {
  for (const Check& c : checks) {
    if (!c.ok()) return false;
  }
  for (const auto& [bound, t] : tally) {
    if (t[static_cast<std::size_t>(theory::Verdict::Fail)] > 0) return false;
  }
  return true;
}

std::vector<std::string> SuiteResult::inconclusive_bounds() const {
  std::vector<std::string> out;
  for (const auto& [bound, t] : tally) {
    if (t[static_cast<std::size_t>(theory::Verdict::Inconclusive)] > 0) out.push_back(bound);
  }
  return out;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, _] : registry()) v.push_back(name);
    return v;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, const Options& options) {
  for (const auto& [suite, fn] : registry()) {
    if (suite != name) continue;
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r = fn(options);
    r.suite = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }
  throw Error(ErrorCode::InvalidParams, "unknown suite '" + name + "'");
}

std::set<std::string> bounds_exercised(const std::vector<SuiteResult>& results) {
  std::set<std::string> out;
  for (const auto& r : results) {
    for (const auto& [bound, _] : r.tally) out.insert(bound);
  }
  return out;
}

std::vector<NormalizedConfig> sorted_simplex_grid(std::size_t k, int steps) {
  std::vector<NormalizedConfig> out;
  std::vector<int> parts(k, 0);
  // non-increasing k-tuples of non-negative integers summing to steps
  std::function<void(std::size_t, int, int)> fill = [&](std::size_t i, int left, int cap) {
    if (i + 1 == k) {
      if (left > cap) return;
      parts[i] = left;
      std::vector<double> probs;
      for (int a : parts) probs.push_back(double(a) / double(steps));
      out.push_back(NormalizedConfig::from_probs(std::move(probs)));
      return;
    }
    for (int a = std::min(left, cap); a >= 0; --a) {
      if (a * int(k - i) < left) break;
      parts[i] = a;
      fill(i + 1, left - a, a);
    }
  };
  fill(0, steps, steps);
  return out;
}

Configuration near_uniform(Count n, std::size_t k) {
  Configuration c = mc::balanced(n, k);
  if (k > 1 && c.counts[k - 1] > 0) {
    ++c.counts[0];
    --c.counts[k - 1];
  }
  return c;
}

}  // namespace hmaj::verify
