#include "hmaj/core.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace hmaj {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SumMismatch: return "SumMismatch";
    case ErrorCode::EmptySystem: return "EmptySystem";
    case ErrorCode::InvalidProb: return "InvalidProb";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotSorted: return "NotSorted";
    case ErrorCode::InvalidQ: return "InvalidQ";
    case ErrorCode::UnknownBound: return "UnknownBound";
    case ErrorCode::UnclassifiedOpinion: return "UnclassifiedOpinion";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Configuration Configuration::make(std::vector<Count> counts) {
  Configuration c;
  c.n = std::accumulate(counts.begin(), counts.end(), Count{0});
  c.counts = std::move(counts);
  validate(c);
  return c;
}

NormalizedConfig NormalizedConfig::from_probs(std::vector<double> probs, Count n) {
  if (probs.empty()) throw Error(ErrorCode::EmptySystem, "empty probability vector");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || p > 1.0) throw Error(ErrorCode::InvalidProb, "probability outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidProb, "probabilities sum to " + std::to_string(sum));
  }
  return NormalizedConfig{std::move(probs), n};
}

void validate(const Configuration& config) {
  if (config.counts.empty() || config.n <= 0) {
    throw Error(ErrorCode::EmptySystem, "need k >= 1 and n >= 1");
  }
  Count sum = 0;
  for (Count c : config.counts) {
    if (c < 0) throw Error(ErrorCode::SumMismatch, "negative count");
    sum += c;
  }
  if (sum != config.n) {
    throw Error(ErrorCode::SumMismatch,
                "counts sum to " + std::to_string(sum) + " but n = " + std::to_string(config.n));
  }
}

NormalizedConfig normalize(const Configuration& config) {
  validate(config);
  NormalizedConfig out;
  out.n = config.n;
  out.probs.reserve(config.k());
  const auto n = static_cast<double>(config.n);
  for (Count c : config.counts) out.probs.push_back(static_cast<double>(c) / n);
  return out;
}

TopTwo top_two(std::span<const Count> counts) {
  TopTwo t;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[t.first]) {
      t.second = t.first;
      t.first = i;
    } else if (!t.second || counts[i] > counts[*t.second]) {
      t.second = i;
    }
  }
  return t;
}

BiasStats bias_stats(const Configuration& config) {
  validate(config);
  BiasStats s;
  const auto n = static_cast<double>(config.n);
  if (config.k() == 1) {
    s.plurality = 1;
    s.additive_bias = config.n;
    s.normalized_bias = 1.0;
    s.pairwise_gap = {0.0};
    return s;
  }
  const TopTwo top = top_two(config.counts);
  const Count best = config.counts[top.first];
  const Count runner_up = config.counts[*top.second];
  s.additive_bias = best - runner_up;
  s.normalized_bias = static_cast<double>(s.additive_bias) / n;
  if (s.additive_bias == 0) return s;

  s.plurality = static_cast<Opinion>(top.first + 1);
  s.pairwise_gap.reserve(config.k());
  for (Count c : config.counts) s.pairwise_gap.push_back(static_cast<double>(best - c) / n);
  return s;
}

std::optional<Opinion> is_consensus(const Configuration& config) {
  validate(config);
  for (std::size_t i = 0; i < config.k(); ++i) {
    if (config.counts[i] == config.n) return static_cast<Opinion>(i + 1);
  }
  return std::nullopt;
}

}  // namespace hmaj
