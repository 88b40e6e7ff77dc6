#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hmaj/core.hpp"

namespace hmaj {

/// Point estimate of a probability with its Wilson score interval.
struct Estimate {
  double point = 0.0;
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double confidence = 0.999;
};

}  // namespace hmaj

namespace hmaj::theory {

/// Default constants. C2 = 1/2 and C3 = 3 give C4 = (3 C3 / (1 - C2))^2 = 324.
struct Constants {
  double c2 = 0.5;
  double c3 = 3.0;
  double c6 = 0.05;
  double c4() const;
};

using Params = std::map<std::string, double>;

enum class Verdict { Pass, Fail, Inconclusive };
std::string_view to_string(Verdict v);

/// A named lower bound: the measured quantity passes when it is >= value(params).
struct Bound {
  std::string name;
  std::vector<std::string> params;  // required parameter names
  std::string measured;             // what the measured value means
  double (*value)(const Params&);
};

/// Every bound and threshold used by the verification suites.
const std::vector<Bound>& bound_catalog();
const Bound& find_bound(const std::string& name);  // throws UnknownBound

// Closed forms, callable directly.
double lemma9_lower(double m, double delta);
double reduction_lower(double m, double q, double c1);
double w1_lower(double p1);
double strict_vs_ties_lower(double pr_ties);
double strict_pair_lower(double p1, double p2);
double cond_diff_lower(double p1, double p2, double h, double c);
double uncond_diff_lower(double delta_j, double h, double p1, double p2, double c5, double pr_w1);
double ratio_regime_lower(double pr_wj, double c6);
double bias_threshold(double p1, double n, double lambda1);
double h_threshold(double p1, double n, double c4);
double weak_opinion_c4(double c2, double c3);
double weak_opinion_lower(double n, double c3);

struct VerdictReport {
  std::string bound;
  Params params;
  std::variant<double, Estimate> measured;
  double bound_value = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

inline constexpr double kExactTolerance = 1e-12;

/// Exact values pass when measured >= bound - 1e-12. Intervals pass when the
/// whole interval is at or above the bound, fail when it lies strictly
/// below, and are inconclusive when they straddle it.
Verdict compare(double bound_value, double measured);
Verdict compare(double bound_value, const Estimate& measured);

VerdictReport verdict(const std::string& bound, const Params& params, double measured);
VerdictReport verdict(const std::string& bound, const Params& params, const Estimate& measured);

enum class BiasRegime { Small, Mid, Large };
std::string_view to_string(BiasRegime r);

/// p must be non-increasing (NotSorted otherwise); j is a 1-based opinion.
/// Small below sqrt(2(p1+p2)/h); Large from (1 - 1/(1+C6)) p1 on; boundary
/// points go to the higher regime.
BiasRegime regime_classifier(const NormalizedConfig& p, Count h, Opinion j, double c6 = Constants{}.c6);

/// Partition classes for opinions j != 1 between two consecutive rounds.
enum class GrowthClass {
  GapGrew,       // I: p'_1 - p'_j > p_1 - p_j
  RatioShrank,   // J: p'_j / p'_1 < p_j / p_1
  Vanished,      // K: p'_j = 0
};

/// The first class (in I, J, K order) each opinion j >= 2 satisfies; nullopt
/// where none holds. Index 0 (opinion 1) is always nullopt.
std::vector<std::optional<GrowthClass>> classify_growth(const Configuration& before, const Configuration& after);

/// Checks the given classification arithmetically (UnclassifiedOpinion if an
/// opinion j >= 2 is missing or its class does not hold) and returns Pass iff
/// p'_1 > p_1.
Verdict p1_growth_audit(const Configuration& before, const Configuration& after,
                        const std::vector<std::optional<GrowthClass>>& classes);

}  // namespace hmaj::theory
