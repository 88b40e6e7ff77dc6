#include "hmaj/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hmaj {

namespace {

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(2 pi)/2], the Stirling
// remainder used by BTRD.
double stirling_tail(Count k) {
  static constexpr double table[] = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
      0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
      0.009255462182712733, 0.008330563433362871,
  };
  if (k <= 9) return table[k];
  const double r = 1.0 / static_cast<double>(k + 1);
  const double r2 = r * r;
  return (1.0 / 12.0 - (1.0 / 360.0 - r2 / 1260.0) * r2) * r;
}

// Requires prob <= 1/2 and trials * prob < 10.
Count binomial_inversion(Count trials, double prob, RngHandle& rng) {
  const double q = 1.0 - prob;
  const double s = prob / q;
  const double a = static_cast<double>(trials + 1) * s;
  const double r0 = std::pow(q, static_cast<double>(trials));
  for (;;) {
    double u = rng.uniform();
    double r = r0;
    Count x = 0;
    while (u > r) {
      u -= r;
      ++x;
      if (x > trials) break;  // rounding left mass in the far tail
      r *= a / static_cast<double>(x) - s;
    }
    if (x <= trials) return x;
  }
}

// BTRD; requires prob <= 1/2 and trials * prob >= 10.
Count binomial_btrd(Count trials, double prob, RngHandle& rng) {
  const double n = static_cast<double>(trials);
  const double spq = std::sqrt(n * prob * (1.0 - prob));
  const double npq = n * prob * (1.0 - prob);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * prob;
  const double c = n * prob + 0.5;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double vr = 0.92 - 4.2 / b;
  const double urvr = 0.86 * vr;
  const auto m = static_cast<Count>(std::floor((n + 1.0) * prob));
  const double r = prob / (1.0 - prob);
  const double nr = (n + 1.0) * r;

  for (;;) {
    double v = rng.uniform();
    double u;
    if (v <= urvr) {
      u = v / vr - 0.43;
      return static_cast<Count>(std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + c));
    }
    if (v >= vr) {
      u = rng.uniform() - 0.5;
    } else {
      u = v / vr - 0.93;
      u = std::copysign(0.5, u) - u;
      v = rng.uniform() * vr;
    }

    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > n) continue;
    const auto k = static_cast<Count>(kd);
    v = v * alpha / (a / (us * us) + b);
    const Count km = k > m ? k - m : m - k;

    if (km <= 15) {
      double f = 1.0;
      if (m < k) {
        for (Count i = m + 1; i <= k; ++i) f *= nr / static_cast<double>(i) - r;
      } else if (m > k) {
        for (Count i = k + 1; i <= m; ++i) v *= nr / static_cast<double>(i) - r;
      }
      if (v <= f) return k;
      continue;
    }

    v = std::log(v);
    const double kmd = static_cast<double>(km);
    const double rho = (kmd / npq) * (((kmd / 3.0 + 0.625) * kmd + 1.0 / 6.0) / npq + 0.5);
    const double t = -kmd * kmd / (2.0 * npq);
    if (v < t - rho) return k;
    if (v > t + rho) continue;

    const double nm = n - static_cast<double>(m) + 1.0;
    const double md = static_cast<double>(m);
    const double h = (md + 0.5) * std::log((md + 1.0) / (r * nm)) + stirling_tail(m) +
                     stirling_tail(trials - m);
    const double nk = n - kd + 1.0;
    if (v <= h + (n + 1.0) * std::log(nm / nk) + (kd + 0.5) * std::log(nk * r / (kd + 1.0)) -
                 stirling_tail(k) - stirling_tail(trials - k)) {
      return k;
    }
  }
}

}  // namespace

Count draw_binomial(Count trials, double prob, RngHandle& rng) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw Error(ErrorCode::InvalidProb, "binomial prob outside [0,1]");
  if (trials < 0) throw Error(ErrorCode::InvalidParams, "negative binomial trials");
  if (trials == 0 || prob == 0.0) return 0;
  if (prob == 1.0) return trials;

  const bool flipped = prob > 0.5;
  const double p = flipped ? 1.0 - prob : prob;
  const Count x = static_cast<double>(trials) * p < 10.0 ? binomial_inversion(trials, p, rng)
                                                          : binomial_btrd(trials, p, rng);
  return flipped ? trials - x : x;
}

MultinomialPlan::MultinomialPlan(const NormalizedConfig& p) : conditional_(p.k(), 0.0) {
  double suffix = 0.0;
  for (std::size_t i = p.k(); i-- > 0;) {
    const double pi = p.probs[i];
    if (!(pi >= 0.0 && pi <= 1.0)) throw Error(ErrorCode::InvalidProb, "probability outside [0,1]");
    suffix += pi;
    conditional_[i] = suffix > 0.0 ? std::min(1.0, pi / suffix) : 0.0;
  }
}

void MultinomialPlan::draw_into(Count h, RngHandle& rng, std::span<Count> out) const {
  Count remaining = h;
  for (std::size_t i = 0; i < conditional_.size(); ++i) {
    if (remaining == 0) {
      out[i] = 0;
      continue;
    }
    const Count x = draw_binomial(remaining, conditional_[i], rng);
    out[i] = x;
    remaining -= x;
  }
  // conditional_ ends in 1 whenever the last opinion has mass; when trailing
  // opinions are empty, the last positive opinion already absorbed the rest.
}

AliasTable::AliasTable(const NormalizedConfig& p) : accept_(p.k(), 0.0), alias_(p.k(), 0) {
  const std::size_t k = p.k();
  if (k == 0) throw Error(ErrorCode::EmptySystem, "alias table over zero opinions");
  const double total = std::accumulate(p.probs.begin(), p.probs.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidProb, "alias table over zero mass");

  std::vector<double> scaled(k);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(p.probs[i] >= 0.0)) throw Error(ErrorCode::InvalidProb, "negative probability");
    scaled[i] = p.probs[i] / total * static_cast<double>(k);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    accept_[i] = 1.0;
    alias_[i] = i;
  }
  // leftovers here are rounding residue of weight ~1
  for (std::size_t i : small) {
    accept_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::draw(RngHandle& rng) const {
  const auto column = static_cast<std::size_t>(rng.below(accept_.size()));
  return rng.uniform() < accept_[column] ? column : alias_[column];
}

void AliasTable::accumulate_into(Count h, RngHandle& rng, std::span<Count> out) const {
  for (Count d = 0; d < h; ++d) ++out[draw(rng)];
}

SampleVector draw_multinomial(Count h, const NormalizedConfig& p, RngHandle& rng) {
  if (h < 0) throw Error(ErrorCode::InvalidParams, "negative sample size");
  SampleVector x{std::vector<Count>(p.k(), 0), h};
  MultinomialPlan(p).draw_into(h, rng, x.counts);
  return x;
}

SampleVector draw_categorical_counts(Count h, const AliasTable& table, RngHandle& rng) {
  if (h < 0) throw Error(ErrorCode::InvalidParams, "negative sample size");
  SampleVector x{std::vector<Count>(table.k(), 0), h};
  table.accumulate_into(h, rng, x.counts);
  return x;
}

SampleVector draw_categorical_counts(Count h, const NormalizedConfig& p, RngHandle& rng) {
  return draw_categorical_counts(h, AliasTable(p), rng);
}

Opinion mode_with_tiebreak(std::span<const Count> counts, RngHandle& rng) {
  Count best = -1;
  std::uint64_t ties = 0;
  for (Count c : counts) {
    if (c > best) {
      best = c;
      ties = 1;
    } else if (c == best) {
      ++ties;
    }
  }
  if (best <= 0) throw Error(ErrorCode::EmptySample, "mode of an empty sample");
  std::uint64_t pick = ties == 1 ? 0 : rng.below(ties);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == best && pick-- == 0) return static_cast<Opinion>(i + 1);
  }
  return 0;  // unreachable
}

Opinion mode_with_tiebreak(const SampleVector& x, RngHandle& rng) {
  if (x.h < 1) throw Error(ErrorCode::EmptySample, "mode of an empty sample");
  return mode_with_tiebreak(std::span<const Count>(x.counts), rng);
}

}  // namespace hmaj
