#include "hmaj/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hmaj/oracle.hpp"

namespace hmaj::theory {

namespace {

double get(const Params& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw Error(ErrorCode::InvalidParams, "missing bound parameter '" + key + "'");
  return it->second;
}

}  // namespace

double Constants::c4() const { return weak_opinion_c4(c2, c3); }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string_view to_string(BiasRegime r) {
  switch (r) {
    case BiasRegime::Small: return "small_bias";
    case BiasRegime::Mid: return "mid_bias";
    case BiasRegime::Large: return "large_bias";
  }
  return "small_bias";
}

double lemma9_lower(double m, double delta) {
  return std::sqrt(2.0 * m / std::numbers::pi) * oracle::g_function(delta, static_cast<Count>(m));
}

double reduction_lower(double m, double q, double c1) { return c1 * std::min(std::sqrt(m) * (2.0 * q - 1.0), 1.0); }

double w1_lower(double p1) { return p1 / 3.0; }

double strict_vs_ties_lower(double pr_ties) { return pr_ties / 6.0; }

double strict_pair_lower(double p1, double p2) { return (p1 + p2) / 36.0; }

double cond_diff_lower(double p1, double p2, double h, double c) {
  return c * std::min((p1 - p2) * std::sqrt(h) / std::sqrt(2.0 * (p1 + p2)), 1.0);
}

double uncond_diff_lower(double delta_j, double h, double p1, double p2, double c5, double pr_w1) {
  return c5 * delta_j * std::sqrt(h / (p1 + p2)) * pr_w1;
}

double ratio_regime_lower(double pr_wj, double c6) { return pr_wj / (1.0 - c6); }

double bias_threshold(double p1, double n, double lambda1) { return lambda1 * std::sqrt(p1 / n); }

double h_threshold(double p1, double n, double c4) { return c4 * std::log(n) / p1; }

double weak_opinion_c4(double c2, double c3) {
  const double base = 3.0 * c3 / (1.0 - c2);
  return base * base;
}

double weak_opinion_lower(double n, double c3) { return 1.0 - std::pow(n, -(c3 - 2.0)); }

const std::vector<Bound>& bound_catalog() {
  static const std::vector<Bound> catalog = {
      {"lemma9_lower", {"m", "delta"}, "Pr(Y1>Y2) - Pr(Y2>Y1)",
       [](const Params& p) { return lemma9_lower(get(p, "m"), get(p, "delta")); }},
      {"reduction_lower", {"m", "q", "C1"}, "Pr(Y1>Y2|M>x) - Pr(Y2>Y1|M>x)",
       [](const Params& p) { return reduction_lower(get(p, "m"), get(p, "q"), get(p, "C1")); }},
      {"w1_lower", {"p1"}, "Pr(W_1)", [](const Params& p) { return w1_lower(get(p, "p1")); }},
      {"strict_vs_ties_lower", {"pr_w1_ties"}, "Pr(W_1,strict)",
       [](const Params& p) { return strict_vs_ties_lower(get(p, "pr_w1_ties")); }},
      {"strict_pair_lower", {"p1", "p2"}, "Pr(W_1,2,strict)",
       [](const Params& p) { return strict_pair_lower(get(p, "p1"), get(p, "p2")); }},
      {"cond_diff_lower", {"p1", "p2", "h", "C"}, "Pr(W_1|E) - Pr(W_2|E)",
       [](const Params& p) { return cond_diff_lower(get(p, "p1"), get(p, "p2"), get(p, "h"), get(p, "C")); }},
      {"uncond_diff_lower", {"delta_j", "h", "p1", "p2", "C5", "pr_w1"}, "Pr(W_1) - Pr(W_j)",
       [](const Params& p) {
         return uncond_diff_lower(get(p, "delta_j"), get(p, "h"), get(p, "p1"), get(p, "p2"), get(p, "C5"),
                                  get(p, "pr_w1"));
       }},
      {"ratio_regime", {"pr_wj", "C6"}, "Pr(W_1)",
       [](const Params& p) { return ratio_regime_lower(get(p, "pr_wj"), get(p, "C6")); }},
      {"bias_threshold", {"p1", "n", "lambda1"}, "delta",
       [](const Params& p) { return bias_threshold(get(p, "p1"), get(p, "n"), get(p, "lambda1")); }},
      {"h_threshold", {"p1", "n", "C4"}, "h",
       [](const Params& p) { return h_threshold(get(p, "p1"), get(p, "n"), get(p, "C4")); }},
      {"weak_opinion_thresholds", {"n", "C2", "C3"}, "Pr(X_1 > X_i for every C2-rare i)",
       [](const Params& p) { return weak_opinion_lower(get(p, "n"), get(p, "C3")); }},
  };
  return catalog;
}

const Bound& find_bound(const std::string& name) {
  const auto& catalog = bound_catalog();
  auto it = std::find_if(catalog.begin(), catalog.end(), [&](const Bound& b) { return b.name == name; });
  if (it == catalog.end()) throw Error(ErrorCode::UnknownBound, name);
  return *it;
}

Verdict compare(double bound_value, double measured) {
  return measured >= bound_value - kExactTolerance ? Verdict::Pass : Verdict::Fail;
}

Verdict compare(double bound_value, const Estimate& measured) {
  if (measured.wilson_low >= bound_value) return Verdict::Pass;
  if (measured.wilson_high < bound_value) return Verdict::Fail;
  return Verdict::Inconclusive;
}

VerdictReport verdict(const std::string& bound, const Params& params, double measured) {
  const Bound& b = find_bound(bound);
  VerdictReport r{bound, params, measured, b.value(params), Verdict::Inconclusive};
  r.verdict = compare(r.bound_value, measured);
  return r;
}

VerdictReport verdict(const std::string& bound, const Params& params, const Estimate& measured) {
  const Bound& b = find_bound(bound);
  VerdictReport r{bound, params, measured, b.value(params), Verdict::Inconclusive};
  r.verdict = compare(r.bound_value, measured);
  return r;
}

BiasRegime regime_classifier(const NormalizedConfig& p, Count h, Opinion j, double c6) {
  oracle::require_sorted(p);
  if (j < 1 || j > p.k()) throw Error(ErrorCode::InvalidParams, "opinion out of range");
  if (h < 1) throw Error(ErrorCode::InvalidParams, "h must be >= 1");
  const double p1 = p.probs[0];
  const double p2 = p.k() > 1 ? p.probs[1] : 0.0;
  const double gap = p1 - p.probs[j - 1];
  if (gap >= (1.0 - 1.0 / (1.0 + c6)) * p1) return BiasRegime::Large;
  if (gap >= std::sqrt(2.0 * (p1 + p2) / static_cast<double>(h))) return BiasRegime::Mid;
  return BiasRegime::Small;
}

namespace {

void check_pair(const Configuration& before, const Configuration& after) {
  validate(before);
  validate(after);
  if (before.k() != after.k() || before.n != after.n) {
    throw Error(ErrorCode::DimensionMismatch, "configurations differ in k or n");
  }
}

// Evaluated over integer counts: the shared factor 1/n cancels.
bool class_holds(GrowthClass c, const Configuration& before, const Configuration& after, std::size_t j) {
  const Count c1 = before.counts[0], c1_next = after.counts[0];
  const Count cj = before.counts[j], cj_next = after.counts[j];
  switch (c) {
    case GrowthClass::GapGrew: return c1_next - cj_next > c1 - cj;
    case GrowthClass::RatioShrank:
      return c1 > 0 && c1_next > 0 &&
             static_cast<double>(cj_next) * static_cast<double>(c1) <
                 static_cast<double>(cj) * static_cast<double>(c1_next);
    case GrowthClass::Vanished: return cj_next == 0;
  }
  return false;
}

}  // namespace

std::vector<std::optional<GrowthClass>> classify_growth(const Configuration& before, const Configuration& after) {
  check_pair(before, after);
  std::vector<std::optional<GrowthClass>> out(before.k());
  for (std::size_t j = 1; j < before.k(); ++j) {
    for (GrowthClass c : {GrowthClass::GapGrew, GrowthClass::RatioShrank, GrowthClass::Vanished}) {
      if (class_holds(c, before, after, j)) {
        out[j] = c;
        break;
      }
    }
  }
  return out;
}

Verdict p1_growth_audit(const Configuration& before, const Configuration& after,
                        const std::vector<std::optional<GrowthClass>>& classes) {
  check_pair(before, after);
  if (classes.size() != before.k()) throw Error(ErrorCode::DimensionMismatch, "one class per opinion expected");
  for (std::size_t j = 1; j < before.k(); ++j) {
    if (!classes[j]) {
      throw Error(ErrorCode::UnclassifiedOpinion, "opinion " + std::to_string(j + 1) + " has no class");
    }
    if (!class_holds(*classes[j], before, after, j)) {
      throw Error(ErrorCode::UnclassifiedOpinion,
                  "opinion " + std::to_string(j + 1) + " does not satisfy its claimed class");
    }
  }
  return after.counts[0] > before.counts[0] ? Verdict::Pass : Verdict::Fail;
}

}  // namespace hmaj::theory
