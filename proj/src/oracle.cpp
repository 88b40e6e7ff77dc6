#include "hmaj/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

namespace hmaj::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Neumaier compensated sum; enumeration adds up to 1e8 terms of very
// different magnitude.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Pmf evaluator with log p and log-factorials cached for one (h, p).
class PmfTable {
 public:
  PmfTable(Count h, std::span<const double> p) : h_(h), log_p_(p.size()), log_fact_(h + 1) {
    for (std::size_t i = 0; i < p.size(); ++i) log_p_[i] = p[i] > 0.0 ? std::log(p[i]) : kNegInf;
    for (Count x = 0; x <= h; ++x) log_fact_[x] = std::lgamma(static_cast<double>(x) + 1.0);
  }

  double log_pmf(std::span<const Count> x) const {
    double acc = log_fact_[h_];
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0) continue;
      if (log_p_[i] == kNegInf) return kNegInf;
      acc += static_cast<double>(x[i]) * log_p_[i] - log_fact_[x[i]];
    }
    return acc;
  }

  double pmf(std::span<const Count> x) const {
    const double lp = log_pmf(x);
    return lp == kNegInf ? 0.0 : std::exp(lp);
  }

 private:
  Count h_;
  std::vector<double> log_p_;
  std::vector<double> log_fact_;
};

double binomial_pmf(Count m, Count j, double q) {
  if (q == 0.0) return j == 0 ? 1.0 : 0.0;
  if (q == 1.0) return j == m ? 1.0 : 0.0;
  const double md = static_cast<double>(m);
  const double jd = static_cast<double>(j);
  return std::exp(std::lgamma(md + 1.0) - std::lgamma(jd + 1.0) - std::lgamma(md - jd + 1.0) +
                  jd * std::log(q) + (md - jd) * std::log1p(-q));
}

void guard(Count h, std::size_t k) {
  if (h < 0) throw Error(ErrorCode::InvalidParams, "negative sample size");
  if (k == 0) throw Error(ErrorCode::EmptySystem, "zero opinions");
  const std::uint64_t total = count_outcomes(h, k);
  if (total > kMaxOutcomes) {
    throw Error(ErrorCode::TooLarge, std::to_string(total) + " outcomes exceed the enumeration guard");
  }
}

struct MaxInfo {
  Count value = -1;
  std::size_t ties = 0;
  std::size_t first = 0;
};

MaxInfo max_info(std::span<const Count> x) {
  MaxInfo m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > m.value) {
      m = {x[i], 1, i};
    } else if (x[i] == m.value) {
      ++m.ties;
    }
  }
  return m;
}

// Share of an outcome's mass credited to opinion i (0-based) under a rule.
double tie_share(std::span<const Count> x, const MaxInfo& m, std::size_t i, TieSplit rule) {
  if (x[i] != m.value) return 0.0;
  if (rule == TieSplit::LowestIndexWins) return i == m.first ? 1.0 : 0.0;
  return 1.0 / static_cast<double>(m.ties);
}

}  // namespace

std::uint64_t count_outcomes(Count h, std::size_t k) {
  if (k == 0 || h < 0) return 0;
  // C(h + k - 1, r) with r = min(k - 1, h), multiplicatively
  const std::uint64_t top = static_cast<std::uint64_t>(h) + k - 1;
  const std::uint64_t r = std::min<std::uint64_t>(k - 1, static_cast<std::uint64_t>(h));
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (top - r + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

OutcomeEnumerator::OutcomeEnumerator(Count h, std::size_t k) : x_(k, 0) {
  if (k == 0) throw Error(ErrorCode::EmptySystem, "zero opinions");
  if (h < 0) throw Error(ErrorCode::InvalidParams, "negative sample size");
  x_[0] = h;
}

bool OutcomeEnumerator::next() {
  std::size_t first = 0;
  while (first < x_.size() && x_[first] == 0) ++first;
  const std::size_t bump = first + 1;
  if (first == x_.size() || bump == x_.size()) return false;
  const Count moved = x_[first];
  x_[first] = 0;
  ++x_[bump];
  x_[0] = moved - 1;
  return true;
}

std::vector<std::vector<Count>> enumerate_outcomes(Count h, std::size_t k) {
  std::vector<std::vector<Count>> out;
  for_each_outcome(h, k, [&](std::span<const Count> x) { out.emplace_back(x.begin(), x.end()); });
  return out;
}

void for_each_outcome(Count h, std::size_t k, const std::function<void(std::span<const Count>)>& visit) {
  guard(h, k);
  OutcomeEnumerator e(h, k);
  do {
    visit(e.current());
  } while (e.next());
}

double multinomial_log_pmf(std::span<const Count> x, Count h, std::span<const double> p) {
  return PmfTable(h, p).log_pmf(x);
}

double multinomial_pmf(std::span<const Count> x, Count h, const NormalizedConfig& p) {
  if (x.size() != p.k()) throw Error(ErrorCode::DimensionMismatch, "outcome and p differ in length");
  const Count sum = std::accumulate(x.begin(), x.end(), Count{0});
  if (sum != h) throw Error(ErrorCode::SumMismatch, "outcome does not sum to h");
  return PmfTable(h, p.probs).pmf(x);
}

WinDistribution win_distribution(Count h, const NormalizedConfig& p, const Options& options) {
  if (h < 1) throw Error(ErrorCode::InvalidParams, "win distribution needs h >= 1");
  guard(h, p.k());
  const std::size_t k = p.k();
  const PmfTable table(h, p.probs);
  std::vector<Accumulator> q(k), strict(k), ties(k);
  Accumulator pair12;

  for_each_outcome(h, k, [&](std::span<const Count> x) {
    const double w = table.pmf(x);
    if (w == 0.0) return;
    const MaxInfo m = max_info(x);
    for (std::size_t i = 0; i < k; ++i) {
      if (x[i] != m.value) continue;
      q[i].add(w * tie_share(x, m, i, options.tie_split));
      ties[i].add(w);
      if (m.ties == 1) strict[i].add(w);
    }
    if (m.ties == 1 && m.first < 2) pair12.add(w);
  });

  WinDistribution out;
  out.h = h;
  for (std::size_t i = 0; i < k; ++i) {
    out.q.push_back(q[i].value());
    out.q_strict.push_back(strict[i].value());
    out.q_ties.push_back(ties[i].value());
  }
  out.q_strict_pair_12 = pair12.value();
  return out;
}

void require_sorted(const NormalizedConfig& p) {
  for (std::size_t i = 1; i < p.k(); ++i) {
    if (p.probs[i] > p.probs[i - 1]) {
      throw Error(ErrorCode::NotSorted, "p must be non-increasing; relabel with descending_order()");
    }
  }
}

std::vector<std::size_t> descending_order(const NormalizedConfig& p) {
  std::vector<std::size_t> order(p.k());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.probs[a] > p.probs[b]; });
  return order;
}

NormalizedConfig relabel(const NormalizedConfig& p, std::span<const std::size_t> order) {
  NormalizedConfig out;
  out.n = p.n;
  out.probs.reserve(order.size());
  for (std::size_t idx : order) out.probs.push_back(p.probs.at(idx));
  return out;
}

EventReport event_report(Count h, const NormalizedConfig& p, double rare_x, const Options& options) {
  if (p.k() < 2) throw Error(ErrorCode::InvalidParams, "event report needs k >= 2");
  if (h < 1) throw Error(ErrorCode::InvalidParams, "event report needs h >= 1");
  require_sorted(p);
  guard(h, p.k());

  EventReport r;
  r.h = h;
  r.p = p.probs;
  r.rare_x = rare_x;
  r.sum_tail_threshold = static_cast<double>(h) * (p.probs[0] + p.probs[1]) / 2.0;

  const PmfTable table(h, p.probs);
  Accumulator event, maj1, maj2, cmp1, cmp2, tail_cond, tail_all, w1, w2;
  for_each_outcome(h, p.k(), [&](std::span<const Count> x) {
    const double w = table.pmf(x);
    if (w == 0.0) return;
    const MaxInfo m = max_info(x);
    const double share1 = tie_share(x, m, 0, options.tie_split);
    const double share2 = tie_share(x, m, 1, options.tie_split);
    w1.add(w * share1);
    w2.add(w * share2);

    const bool tail = static_cast<double>(x[0] + x[1]) >= r.sum_tail_threshold;
    if (tail) tail_all.add(w);

    Count rest_max = -1;
    for (std::size_t i = 2; i < x.size(); ++i) rest_max = std::max(rest_max, x[i]);
    if (std::max(x[0], x[1]) <= rest_max) return;

    event.add(w);
    maj1.add(w * share1);
    maj2.add(w * share2);
    if (x[0] > x[1]) cmp1.add(w);
    if (x[1] > x[0]) cmp2.add(w);
    if (tail) tail_cond.add(w);
  });

  r.pr_conditioning_event = event.value();
  if (r.pr_conditioning_event > 0.0) {
    const double e = r.pr_conditioning_event;
    r.cond_diff_majority = (maj1.value() - maj2.value()) / e;
    r.cond_diff_comparison = (cmp1.value() - cmp2.value()) / e;
    r.sum_tail_conditional = tail_cond.value() / e;
  }
  r.sum_tail_unconditional = tail_all.value();
  r.unconditional_diff = w1.value() - w2.value();

  const double p1 = p.probs[0];
  for (std::size_t i = 0; i < p.k(); ++i) {
    if (p.probs[i] <= rare_x * p1) r.rare_set.push_back(static_cast<Opinion>(i + 1));
    if (p.probs[i] > p1 / 2.0) r.strong_set.push_back(static_cast<Opinion>(i + 1));
  }
  return r;
}

ReductionReport event_report_by_reduction(Count h, const NormalizedConfig& p) {
  if (p.k() < 2) throw Error(ErrorCode::InvalidParams, "reduction needs k >= 2");
  require_sorted(p);
  guard(h, p.k());

  const double pair_mass = p.probs[0] + p.probs[1];
  const double q = p.probs[0] / pair_mass;
  const double threshold = static_cast<double>(h) * pair_mass / 2.0;
  const std::size_t rest_k = p.k() - 2;
  const double rest_mass = 1.0 - pair_mass;

  std::vector<double> rest_p;
  if (rest_k > 0) {
    for (std::size_t i = 2; i < p.k(); ++i) {
      rest_p.push_back(rest_mass > 0.0 ? p.probs[i] / rest_mass : 1.0 / static_cast<double>(rest_k));
    }
  }

  Accumulator event, diff, tail;
  for (Count s = 0; s <= h; ++s) {
    const double pr_s = binomial_pmf(h, s, std::min(1.0, pair_mass));
    if (pr_s == 0.0) continue;

    // below[y] = Pr(max of the remaining h - s draws < y)
    std::vector<double> below(h + 2, 1.0);
    if (rest_k > 0) {
      std::vector<Accumulator> at(h + 1);
      const PmfTable rest_table(h - s, rest_p);
      for_each_outcome(h - s, rest_k, [&](std::span<const Count> x) {
        at[*std::max_element(x.begin(), x.end())].add(rest_table.pmf(x));
      });
      double cumulative = 0.0;
      for (Count y = 0; y <= h + 1; ++y) {
        below[y] = cumulative;
        if (y <= h) cumulative += at[y].value();
      }
    }

    const bool in_tail = static_cast<double>(s) >= threshold;
    for (Count y1 = 0; y1 <= s; ++y1) {
      const double pr_y = binomial_pmf(s, y1, q);
      if (pr_y == 0.0) continue;
      const Count top = std::max(y1, s - y1);
      const double w = pr_s * pr_y * below[top];
      event.add(w);
      if (2 * y1 > s) diff.add(w);
      if (2 * y1 < s) diff.add(-w);
      if (in_tail) tail.add(w);
    }
  }

  ReductionReport r;
  r.pr_conditioning_event = event.value();
  if (r.pr_conditioning_event > 0.0) {
    r.cond_diff_comparison = diff.value() / r.pr_conditioning_event;
    r.sum_tail_conditional = tail.value() / r.pr_conditioning_event;
  }
  return r;
}

double g_function(double delta, Count h) {
  const double hd = static_cast<double>(h);
  const double edge = 1.0 / std::sqrt(hd);
  if (delta < edge) return delta * std::pow(1.0 - delta * delta, (hd - 1.0) / 2.0);
  return edge * std::pow(1.0 - 1.0 / hd, (hd - 1.0) / 2.0);
}

BinomialPairReport binomial_pair_report(Count m, double q) {
  if (!(q > 0.5 && q < 1.0)) throw Error(ErrorCode::InvalidQ, "q must lie in (1/2, 1)");
  if (m < 1 || m > 10'000) throw Error(ErrorCode::InvalidParams, "m must lie in [1, 10^4]");

  BinomialPairReport r;
  r.m = m;
  r.q = q;

  std::vector<double> pmf(m + 1);
  for (Count j = 0; j <= m; ++j) pmf[j] = binomial_pmf(m, j, q);

  Accumulator diff;
  for (Count j = m / 2 + 1; j <= m; ++j) {
    diff.add(pmf[j]);
    diff.add(-pmf[m - j]);
  }
  r.diff_unconditional = diff.value();

  // Pr(Y_1>Y_2|M=j) - Pr(Y_2>Y_1|M=j) = tanh((2j - m) log(q/(1-q)) / 2)
  const double log_odds = std::log(q) - std::log1p(-q);
  const Count lowest = (m + 1) / 2;
  double mass = 0.0;
  double weighted = 0.0;
  for (Count j = m; j >= lowest; --j) {
    const bool middle = 2 * j == m;
    const double pr_max = middle ? pmf[j] : pmf[j] + pmf[m - j];
    const double b = middle ? 0.0 : std::tanh(static_cast<double>(2 * j - m) * log_odds / 2.0);
    mass += pr_max;
    weighted += pr_max * b;
    r.diff_given_max_ge[j] = mass > 0.0 ? weighted / mass : b;
  }

  r.lemma9_bound = std::sqrt(2.0 * static_cast<double>(m) / std::numbers::pi) * g_function(2.0 * q - 1.0, m);
  return r;
}

TieMapAudit tie_map_audit(Count h, const NormalizedConfig& p) {
  require_sorted(p);
  guard(h, p.k());

  TieMapAudit a;
  a.h = h;
  a.p = p.probs;
  const std::size_t k = p.k();
  const double p1 = p.probs[0];
  std::vector<std::size_t> strong;
  for (std::size_t i = 0; i < k; ++i) {
    if (p.probs[i] > p1 / 2.0) {
      strong.push_back(i);
      a.strong_set.push_back(static_cast<Opinion>(i + 1));
    }
  }

  const PmfTable table(h, p.probs);
  Accumulator strict, ties;
  std::set<std::vector<Count>> images, images_any;
  for_each_outcome(h, k, [&](std::span<const Count> x) {
    const double log_w = table.log_pmf(x);
    if (log_w == kNegInf) return;
    const MaxInfo m = max_info(x);
    if (x[0] != m.value) return;
    const double w = std::exp(log_w);
    ties.add(w);
    if (m.ties == 1) {
      strict.add(w);
      return;
    }

    TieMapEntry e;
    e.outcome.assign(x.begin(), x.end());
    Count weakest = std::numeric_limits<Count>::max();
    for (std::size_t r : strong) weakest = std::min(weakest, x[r]);
    std::size_t j = 0;
    for (std::size_t r : strong) {
      if (x[r] == weakest) j = r;
    }
    std::size_t j_any = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (x[i] == weakest) j_any = i;
    }
    e.j = static_cast<Opinion>(j + 1);
    e.j_any = static_cast<Opinion>(j_any + 1);
    if (j_any != 0 && x[j_any] > 0) {
      std::vector<Count> alt = e.outcome;
      ++alt[0];
      --alt[j_any];
      if (!images_any.insert(std::move(alt)).second) a.injective_any_index = false;
    }
    if (j == 0 || x[j] == 0) {
      ++a.undefined_count;
      a.entries.push_back(std::move(e));
      return;
    }

    e.image = e.outcome;
    ++e.image[0];
    --e.image[j];
    if (!images.insert(e.image).second) a.injective = false;
    if (max_info(e.image).ties != 1 || max_info(e.image).first != 0) a.images_strict = false;

    e.pmf_ratio = std::exp(table.log_pmf(e.image) - log_w);
    e.formula_ratio = static_cast<double>(x[j]) / static_cast<double>(x[0] + 1) * p1 / p.probs[j];
    a.max_ratio_rel_error = std::max(a.max_ratio_rel_error, std::abs(e.pmf_ratio / e.formula_ratio - 1.0));
    a.entries.push_back(std::move(e));
  });

  a.pr_w1_strict = strict.value();
  a.pr_w1_ties = ties.value();
  a.strict_over_ties = a.pr_w1_ties > 0.0 ? a.pr_w1_strict / a.pr_w1_ties : 0.0;
  return a;
}

}  // namespace hmaj::oracle
