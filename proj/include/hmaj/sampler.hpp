#pragma once

#include <span>
#include <vector>

#include "hmaj/core.hpp"
#include "hmaj/rng.hpp"

namespace hmaj {

/// Sample counts X_1..X_k of h draws with repetition.
struct SampleVector {
  std::vector<Count> counts;
  Count h = 0;
};

/// Binomial(trials, prob). Sequential inversion when the mean of the smaller
/// tail is below 10, BTRD (Hormann 1993) otherwise, so the expected cost is
/// bounded independently of `trials`. Throws InvalidProb outside [0,1].
Count draw_binomial(Count trials, double prob, RngHandle& rng);

/// Conditional probabilities p_i / (p_i + ... + p_k) for the sequential
/// binomial construction of a multinomial. Build once per round, share
/// read-only.
class MultinomialPlan {
 public:
  explicit MultinomialPlan(const NormalizedConfig& p);

  std::size_t k() const { return conditional_.size(); }

  /// Writes one Multinomial(h, p) draw into out (size k).
  void draw_into(Count h, RngHandle& rng, std::span<Count> out) const;

 private:
  std::vector<double> conditional_;
};

/// Walker/Vose alias table for O(1) categorical draws after O(k) setup.
class AliasTable {
 public:
  explicit AliasTable(const NormalizedConfig& p);

  std::size_t k() const { return accept_.size(); }

  /// 0-based category index.
  std::size_t draw(RngHandle& rng) const;

  /// Adds h categorical draws into out (size k); out is not cleared.
  void accumulate_into(Count h, RngHandle& rng, std::span<Count> out) const;

 private:
  std::vector<double> accept_;
  std::vector<std::size_t> alias_;
};

/// Multinomial(h, p) by sequential conditional binomials; O(k) per draw.
SampleVector draw_multinomial(Count h, const NormalizedConfig& p, RngHandle& rng);

/// Same law as draw_multinomial, via h alias-table draws; O(h) per draw.
SampleVector draw_categorical_counts(Count h, const AliasTable& table, RngHandle& rng);
SampleVector draw_categorical_counts(Count h, const NormalizedConfig& p, RngHandle& rng);

/// Argmax of the counts; a maximum shared by m opinions is resolved with one
/// uniform integer in [0, m). Throws EmptySample when the sample has no draws.
Opinion mode_with_tiebreak(const SampleVector& x, RngHandle& rng);

/// Span form used on hot paths; counts must contain at least one draw.
Opinion mode_with_tiebreak(std::span<const Count> counts, RngHandle& rng);

}  // namespace hmaj
