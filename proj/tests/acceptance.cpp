// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Every criterion runs even when an earlier one fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hmaj/montecarlo.hpp"
#include "hmaj/oracle.hpp"
#include "hmaj/serialize.hpp"
#include "hmaj/verify.hpp"
#include "support/independent.hpp"

namespace {

using namespace hmaj;

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

const verify::Check& find_check(const verify::SuiteResult& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("suite " + r.suite + " has no check " + name);
}

Outcome from_check(const verify::Check& c) {
  std::ostringstream os;
  os << c.violations << '/' << c.instances << " violations";
  if (c.violations > 0) os << ", worst margin " << c.worst;
  if (!c.note.empty()) os << " (" << c.note << ')';
  return {c.violations == 0 && c.instances > 0, os.str()};
}

Outcome naive_oracle_equivalence() {
  std::mt19937_64 gen(20240501);
  std::exponential_distribution<double> expo(1.0);
  double worst = 0.0;
  std::size_t points = 0;
  for (int h = 1; h <= 6; ++h) {
    for (std::size_t k = 2; k <= 4; ++k) {
      for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> v(k);
        double s = 0.0;
        for (double& x : v) s += (x = expo(gen));
        for (double& x : v) x /= s;
        const auto w = oracle::win_distribution(h, NormalizedConfig{v, 0});
        const auto ref = testing::naive_win(h, v);
        for (std::size_t i = 0; i < k; ++i) {
          worst = std::max({worst, std::abs(w.q[i] - ref.q[i]), std::abs(w.q_strict[i] - ref.q_strict[i]),
                            std::abs(w.q_ties[i] - ref.q_ties[i])});
        }
        ++points;
      }
    }
  }
  std::ostringstream os;
  os << points << " points, max deviation " << worst << " (tolerance 1e-10)";
  return {worst <= 1e-10, os.str()};
}

Outcome tie_vs_strict() {
  bool pass = true;
  std::ostringstream os;
  for (std::size_t k : {2u, 4u, 8u}) {
    const auto p = normalize(verify::near_uniform(20, k));
    const auto r = mc::check_w1_lower_bound(p, 20, 324.0, 1'000'000, mix_seed(606, k));
    const bool ok = r.strict_vs_ties.verdict == theory::Verdict::Pass && r.w1_vs_p1.verdict == theory::Verdict::Pass;
    pass = pass && ok;
    os << "k=" << k << " h=" << r.h << ": strict=" << r.w1_strict.point << " ties/6=" << r.w1_ties.point / 6
       << " w1=" << r.w1.point << " p1/3=" << p.probs[0] / 3 << " [" << theory::to_string(r.strict_vs_ties.verdict)
       << ", " << theory::to_string(r.w1_vs_p1.verdict) << "]; ";
  }
  return {pass, os.str()};
}

mc::SweepSpec theorem_regime_spec(std::vector<Count> ns) {
  mc::SweepSpec s;
  s.ns = std::move(ns);
  s.ks = {16};
  s.h_rule_c = 324.0;
  s.pattern = mc::InitPattern::BalancedPlusBias;
  s.bias_lambda = 10.0;
  s.trials = 100;
  s.master_seed = 7;
  s.max_rounds = 1000;
  return s;
}

struct SweepRun {
  std::vector<mc::TrialRecord> records;
  std::string first_cell_jsonl;
};

SweepRun run_collect(const mc::SweepSpec& spec, unsigned threads) {
  SweepRun out;
  mc::run_sweep(spec, threads, [&](const mc::TrialRecord& r, double) {
    if (r.cell_id == 0) out.first_cell_jsonl += io::to_json(r).dump() + '\n';
    out.records.push_back(r);
  });
  return out;
}

Outcome convergence(const std::vector<mc::TrialRecord>& records) {
  const auto cells = mc::summarize_cells(records, {});
  const auto table = mc::scaling_table(cells);
  bool pass = true;
  std::ostringstream os;
  for (const auto& c : cells) {
    std::int64_t on_one = 0;
    for (const auto& r : records) on_one += r.cell_id == c.cell_id && r.winner == Opinion{1};
    const double rate = static_cast<double>(on_one) / static_cast<double>(c.trials);
    pass = pass && rate >= 0.95;
    os << "n=" << c.n << " h=" << c.h << " consensus on 1: " << rate << " median round: "
       << (c.median_consensus_round ? std::to_string(*c.median_consensus_round) : "none") << "; ";
  }
  const bool slope_ok = table.slope && *table.slope > 0.0;
  pass = pass && slope_ok;
  os << "slope=" << (table.slope ? std::to_string(*table.slope) : "none") << (slope_ok ? "" : " (not positive)");
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& a = table.rows[i - 1];
    const auto& b = table.rows[i];
    if (!a.median_consensus_round || !b.median_consensus_round || *a.median_consensus_round <= 0.0) {
      pass = false;
      os << "; median ratio undefined at n=" << b.n;
      continue;
    }
    const double ratio = (*b.median_consensus_round / *a.median_consensus_round) / (b.ln_n / a.ln_n);
    const bool ok = ratio >= 1.0 / 3.0 && ratio <= 3.0;
    pass = pass && ok;
    os << "; median ratio / ln ratio at n=" << b.n << ": " << ratio;
  }
  return {pass, os.str()};
}

Outcome bias_growth(const std::vector<mc::TrialRecord>& records) {
  const auto r = mc::bias_growth_audit(records, mc::ThresholdRule{});
  const auto fraction = r.fraction_at_least_e();
  std::ostringstream os;
  os << r.qualifying_pairs << " qualifying round pairs";
  if (!fraction) {
    os << "; fraction undefined (no round pair in the small-bias window above 10 sqrt(p1/n))";
    return {false, os.str()};
  }
  os << ", fraction with growth >= e: " << *fraction;
  return {*fraction >= 0.99, os.str()};
}

Outcome rare_elimination() {
  const auto config = Configuration::make({480, 400, 120});
  const Count h = mc::theorem_h(0.48, config.n, 324.0);
  const auto r = mc::check_rare_elimination(config, h, 0.25, 1000, 909);
  std::ostringstream os;
  os << r.clean_rounds << '/' << r.rounds << " clean rounds, h=" << h;
  return {r.clean_rounds >= 999 && r.rare_set == std::vector<Opinion>{3}, os.str()};
}

Outcome lower_bound_flavor() {
  mc::SweepSpec s;
  s.ns = {10000};
  s.ks = {8, 16, 32, 64};
  s.hs = {3};
  s.pattern = mc::InitPattern::Balanced;
  s.trials = 50;
  s.master_seed = 10;
  s.max_rounds = 100000;
  const auto run = run_collect(s, workers());
  const auto cells = mc::summarize_cells(run.records, {});
  bool pass = cells.size() == 4;
  std::optional<double> previous;
  std::ostringstream os;
  for (const auto& c : cells) {
    os << "k=" << c.k << " median=" << (c.median_consensus_round ? std::to_string(*c.median_consensus_round) : "none")
       << "; ";
    if (!c.median_consensus_round || (previous && *c.median_consensus_round <= *previous)) pass = false;
    previous = c.median_consensus_round;
  }
  return {pass, os.str()};
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int id, const std::function<Outcome()>& f) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::cout << "criterion " << std::setw(2) << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << " ["
              << std::fixed << std::setprecision(1) << secs << " s]" << std::defaultfloat << std::endl;
  };

  report(1, naive_oracle_equivalence);
  report(2, [] { return from_check(find_check(verify::run_suite("lemma9"), "lemma9_grid")); });
  report(3, [] {
    return from_check(find_check(verify::run_suite("diff_equality"), "cond_diff_majority_equals_comparison"));
  });
  report(4, [] { return from_check(find_check(verify::run_suite("monotonicity"), "max_conditional_monotone")); });
  report(5, [] { return from_check(find_check(verify::run_suite("dominance"), "sum_tail_dominance")); });
  report(6, tie_vs_strict);

  SweepRun theorem;
  report(7, [&] {
    theorem = run_collect(theorem_regime_spec({1000, 10000, 100000}), workers());
    return convergence(theorem.records);
  });
  report(8, [&] { return bias_growth(theorem.records); });
  report(9, rare_elimination);
  report(10, lower_bound_flavor);
  report(11, [&] {
    const auto again = run_collect(theorem_regime_spec({1000}), 1);
    const bool same = !theorem.first_cell_jsonl.empty() && again.first_cell_jsonl == theorem.first_cell_jsonl;
    return Outcome{same, std::to_string(again.first_cell_jsonl.size()) + " bytes, " +
                             (same ? "identical" : "different") + " on rerun with one worker"};
  });

  std::cout << (all ? "acceptance: all criteria passed" : "acceptance: some criteria failed") << std::endl;
  return all ? 0 : 1;
}
