#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "hmaj/core.hpp"

namespace hmaj::oracle {

/// Hard cap on the number of enumerated outcomes; exceeding it is TooLarge.
inline constexpr std::uint64_t kMaxOutcomes = 100'000'000;

/// C(h + k - 1, k - 1), saturating at UINT64_MAX.
std::uint64_t count_outcomes(Count h, std::size_t k);

/// Visits every vector of k non-negative integers summing to h exactly once,
/// in colexicographic order, starting from (h, 0, ..., 0).
class OutcomeEnumerator {
 public:
  OutcomeEnumerator(Count h, std::size_t k);

  std::span<const Count> current() const { return x_; }
  /// Advances; returns false once the last outcome (0, ..., 0, h) was passed.
  bool next();

 private:
  std::vector<Count> x_;
};

/// Materialises the whole enumeration; meant for small instances and tests.
std::vector<std::vector<Count>> enumerate_outcomes(Count h, std::size_t k);

/// Calls visit(x) for each outcome; throws TooLarge beyond kMaxOutcomes.
void for_each_outcome(Count h, std::size_t k, const std::function<void(std::span<const Count>)>& visit);

/// log of h!/prod(x_i!) prod(p_i^x_i); -inf when p_i = 0 and x_i > 0.
double multinomial_log_pmf(std::span<const Count> x, Count h, std::span<const double> p);

/// Multinomial pmf computed in log space. Throws SumMismatch if sum(x) != h.
double multinomial_pmf(std::span<const Count> x, Count h, const NormalizedConfig& p);

/// How the oracle splits the mass of an outcome whose maximum is shared.
/// LowestIndexWins is a deliberately wrong rule (the tie index is drawn from
/// [0, 1) instead of [0, m)), kept for mutation tests of the verify suites.
enum class TieSplit { Uniform, LowestIndexWins };

struct Options {
  TieSplit tie_split = TieSplit::Uniform;
};

struct WinDistribution {
  Count h = 0;
  std::vector<double> q;         // Pr(W_i)
  std::vector<double> q_strict;  // Pr(W_i,strict): X_i strictly above all others
  std::vector<double> q_ties;    // Pr(W_i,ties): X_i a (possibly shared) maximum
  double q_strict_pair_12 = 0.0; // Pr(W_1,strict or W_2,strict)

  std::size_t k() const { return q.size(); }
};

WinDistribution win_distribution(Count h, const NormalizedConfig& p, const Options& options = {});

struct EventReport {
  Count h = 0;
  std::vector<double> p;
  double rare_x = 0.0;

  // Conditioning event E: max(X_1, X_2) > max_{i>=3} X_i, i.e. opinion 1 or 2
  // wins without a tie against any third opinion.
  double pr_conditioning_event = 0.0;
  double cond_diff_majority = 0.0;    // Pr(W_1|E) - Pr(W_2|E)
  double cond_diff_comparison = 0.0;  // Pr(X_1>X_2|E) - Pr(X_2>X_1|E)
  double sum_tail_threshold = 0.0;    // h (p_1 + p_2) / 2
  double sum_tail_conditional = 0.0;  // Pr(X_1+X_2 >= threshold | E)
  double sum_tail_unconditional = 0.0;
  double unconditional_diff = 0.0;    // Pr(W_1) - Pr(W_2)
  std::vector<Opinion> rare_set;      // p_i <= rare_x * p_1
  std::vector<Opinion> strong_set;    // p_i > p_1 / 2
};

/// Throws NotSorted unless p_1 >= p_2 >= ... >= p_k; requires k >= 2.
EventReport event_report(Count h, const NormalizedConfig& p, double rare_x, const Options& options = {});

/// cond_diff_comparison, sum_tail_conditional and pr_conditioning_event
/// recomputed by conditioning on S = X_1 + X_2: given S = s, X_1 is
/// Binomial(s, p_1/(p_1+p_2)) and independent of the remaining opinions,
/// which are Multinomial(h - s, p_rest / (1 - p_1 - p_2)).
struct ReductionReport {
  double pr_conditioning_event = 0.0;
  double cond_diff_comparison = 0.0;
  double sum_tail_conditional = 0.0;
};
ReductionReport event_report_by_reduction(Count h, const NormalizedConfig& p);

/// Two-opinion quantities for Y_1 ~ Binomial(m, q), Y_2 = m - Y_1,
/// M = max(Y_1, Y_2).
struct BinomialPairReport {
  Count m = 0;
  double q = 0.0;
  double diff_unconditional = 0.0;  // Pr(Y_1>Y_2) - Pr(Y_2>Y_1)
  /// threshold i (ceil(m/2) .. m) -> Pr(Y_1>Y_2|M>=i) - Pr(Y_2>Y_1|M>=i)
  std::map<Count, double> diff_given_max_ge;
  double lemma9_bound = 0.0;  // sqrt(2m/pi) g(2q-1, m)
};

/// Throws InvalidQ unless 1/2 < q < 1, InvalidParams unless 1 <= m <= 10^4.
BinomialPairReport binomial_pair_report(Count m, double q);

/// delta (1-delta^2)^((h-1)/2) below 1/sqrt(h); the constant
/// (1/sqrt(h)) (1-1/h)^((h-1)/2) from there on.
double g_function(double delta, Count h);

struct TieMapEntry {
  std::vector<Count> outcome;
  std::vector<Count> image;  // empty when the map is undefined (x_j == 0 or j == 1)
  Opinion j = 0;
  Opinion j_any = 0;  // same rule with i ranging over every opinion
  double pmf_ratio = 0.0;      // Pr(f(X)) / Pr(X) from the pmf
  double formula_ratio = 0.0;  // x_j / (x_1 + 1) * p_1 / p_j
};

struct TieMapAudit {
  Count h = 0;
  std::vector<double> p;
  std::vector<Opinion> strong_set;
  std::vector<TieMapEntry> entries;  // every 1-tie outcome with positive mass
  std::size_t undefined_count = 0;   // 1-ties where the stolen count is zero
  bool injective = true;             // on outcomes where the map is defined
  bool injective_any_index = true;   // f with j_any in place of j, where defined
  bool images_strict = true;         // each image is a strict win of opinion 1
  double max_ratio_rel_error = 0.0;  // max |pmf_ratio/formula_ratio - 1|
  double pr_w1_strict = 0.0;
  double pr_w1_ties = 0.0;
  double strict_over_ties = 0.0;     // 0 when Pr(W_1,ties) = 0
  bool ratio_identity_ok() const { return max_ratio_rel_error <= 1e-12; }
};

/// Enumerates the 1-ties, applies the injection that moves one sample from
/// the least-scoring strong opinion with the largest index, j, to opinion 1
/// and audits it. j_any drops the requirement that j be strong; that reading
/// is audited for injectivity only.
/// Throws NotSorted unless p is non-increasing.
TieMapAudit tie_map_audit(Count h, const NormalizedConfig& p);

/// Stable permutation sorting p in non-increasing order; result[r] is the
/// original 0-based index now at rank r.
std::vector<std::size_t> descending_order(const NormalizedConfig& p);
NormalizedConfig relabel(const NormalizedConfig& p, std::span<const std::size_t> order);

void require_sorted(const NormalizedConfig& p);

}  // namespace hmaj::oracle
