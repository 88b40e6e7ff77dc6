#include "hmaj/serialize.hpp"

#include <set>
#include <sstream>
#include <string>

namespace hmaj::io {

namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string_view stop_rule_name(StopRule r) {
  switch (r) {
    case StopRule::Consensus: return "consensus";
    case StopRule::PluralityConsensusOn: return "plurality_consensus_on";
    case StopRule::MaxRoundsOnly: return "max_rounds_only";
  }
  return "consensus";
}

std::string_view terminal_name(TerminalKind k) {
  switch (k) {
    case TerminalKind::Consensus: return "consensus";
    case TerminalKind::PluralityLost: return "plurality_lost";
    case TerminalKind::RoundCap: return "round_cap";
  }
  return "round_cap";
}

// Field-checked reader over a JSON object.
class Reader {
 public:
  Reader(const Json& j, std::string context, std::set<std::string> allowed) : j_(j), context_(std::move(context)) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, context_ + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (!allowed.contains(key)) throw Error(ErrorCode::ConfigError, context_ + ": unknown field '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  T get(const std::string& key) const {
    if (!has(key)) throw Error(ErrorCode::ConfigError, context_ + ": missing field '" + key + "'");
    return as<T>(key);
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? as<T>(key) : fallback;
  }

 private:
  template <typename T>
  T as(const std::string& key) const {
    const Json& v = j_.at(key);
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw std::invalid_argument("not an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("not a boolean");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("not a number");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, context_ + ": field '" + key + "' has the wrong type");
    }
  }

  const Json& j_;
  std::string context_;
};

void check_schema(const Reader& r, const std::string& context) {
  if (r.get<int>("schema_version") != kSchemaVersion) {
    throw Error(ErrorCode::ConfigError, context + ": unsupported schema_version");
  }
}

StopRule parse_stop_rule(const std::string& s) {
  if (s == "consensus") return StopRule::Consensus;
  if (s == "plurality_consensus_on") return StopRule::PluralityConsensusOn;
  if (s == "max_rounds_only") return StopRule::MaxRoundsOnly;
  throw Error(ErrorCode::ConfigError, "field 'stop_rule': unknown value '" + s + "'");
}

}  // namespace

Json to_json(const Trajectory& t) {
  Json rounds = Json::array();
  for (const RoundSummary& s : t.rounds) {
    Json r{{"round", s.round},
           {"B", s.additive_bias},
           {"delta", s.normalized_bias},
           {"plurality", optional_json(s.plurality)}};
    if (!s.counts.empty()) {
      r["counts"] = s.counts;
    } else {
      Json top = Json::array();
      for (auto [opinion, count] : s.top_counts) top.push_back({opinion, count});
      r["top_counts"] = top;
      r["other"] = s.other;
    }
    rounds.push_back(std::move(r));
  }
  Json terminal{{"kind", terminal_name(t.terminal)}};
  if (t.terminal == TerminalKind::Consensus) terminal["opinion"] = *t.winner;

  return Json{{"schema_version", kSchemaVersion},
              {"kind", "trajectory"},
              {"master_seed", t.seed},
              {"n", t.n},
              {"k", t.k},
              {"h", t.h},
              {"initial_plurality", optional_json(t.initial_plurality)},
              {"terminal_status", terminal},
              {"consensus_round", optional_json(t.consensus_round)},
              {"plurality_lost_round", optional_json(t.plurality_lost_round)},
              {"final_counts", t.final_config.counts},
              {"rounds", rounds}};
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory t;
  t.n = j.at("n").get<Count>();
  t.k = j.at("k").get<std::size_t>();
  t.h = j.at("h").get<Count>();
  t.seed = j.at("master_seed").get<std::uint64_t>();
  t.initial_plurality = optional_from<Opinion>(j, "initial_plurality");
  t.consensus_round = optional_from<std::int64_t>(j, "consensus_round");
  t.plurality_lost_round = optional_from<std::int64_t>(j, "plurality_lost_round");
  const std::string kind = j.at("terminal_status").at("kind").get<std::string>();
  if (kind == "consensus") {
    t.terminal = TerminalKind::Consensus;
    t.winner = j.at("terminal_status").at("opinion").get<Opinion>();
  } else if (kind == "plurality_lost") {
    t.terminal = TerminalKind::PluralityLost;
  } else {
    t.terminal = TerminalKind::RoundCap;
  }
  if (!t.winner && t.consensus_round) {
    // consensus reached under max_rounds_only still records the winner
    t.winner = optional_from<Opinion>(j.at("terminal_status"), "opinion");
  }
  t.final_config = Configuration{j.at("final_counts").get<std::vector<Count>>(), t.n};
  for (const Json& r : j.at("rounds")) {
    RoundSummary s;
    s.round = r.at("round").get<std::int64_t>();
    s.additive_bias = r.at("B").get<Count>();
    s.normalized_bias = r.at("delta").get<double>();
    s.plurality = optional_from<Opinion>(r, "plurality");
    if (r.contains("counts")) s.counts = r.at("counts").get<std::vector<Count>>();
    if (r.contains("top_counts")) {
      for (const Json& pair : r.at("top_counts")) s.top_counts.emplace_back(pair[0].get<Opinion>(), pair[1].get<Count>());
      s.other = r.at("other").get<Count>();
    }
    t.rounds.push_back(std::move(s));
  }
  return t;
}

Json to_json(const mc::TrialRecord& r) {
  Json trace = Json::array();
  for (const mc::BiasPoint& b : r.bias_trace) trace.push_back({b.round, b.delta, b.p_first, b.p_second});
  return Json{{"schema_version", kSchemaVersion},
              {"cell_id", r.cell_id},
              {"trial", r.trial},
              {"seed", r.seed},
              {"n", r.n},
              {"k", r.k},
              {"h", r.h},
              {"B0", r.b0},
              {"max_rounds", r.max_rounds},
              {"consensus_round", optional_json(r.consensus_round)},
              {"winner", optional_json(r.winner)},
              {"initial_plurality", optional_json(r.initial_plurality)},
              {"plurality_preserved", r.plurality_preserved},
              {"plurality_lost_round", optional_json(r.plurality_lost_round)},
              {"bias_trace", trace},
              {"error", optional_json(r.error)}};
}

mc::TrialRecord trial_record_from_json(const Json& j) {
  mc::TrialRecord r;
  r.cell_id = j.at("cell_id").get<std::size_t>();
  r.trial = j.at("trial").get<std::int64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n = j.at("n").get<Count>();
  r.k = j.at("k").get<std::size_t>();
  r.h = j.at("h").get<Count>();
  r.b0 = j.at("B0").get<Count>();
  r.max_rounds = j.at("max_rounds").get<std::int64_t>();
  r.consensus_round = optional_from<std::int64_t>(j, "consensus_round");
  r.winner = optional_from<Opinion>(j, "winner");
  r.initial_plurality = optional_from<Opinion>(j, "initial_plurality");
  r.plurality_preserved = j.at("plurality_preserved").get<bool>();
  r.plurality_lost_round = optional_from<std::int64_t>(j, "plurality_lost_round");
  for (const Json& b : j.at("bias_trace")) {
    r.bias_trace.push_back({b[0].get<std::int64_t>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
  }
  r.error = optional_from<std::string>(j, "error");
  return r;
}

Json to_json(const Estimate& e) {
  return Json{{"point", e.point},
              {"trials", e.trials},
              {"successes", e.successes},
              {"wilson_low", e.wilson_low},
              {"wilson_high", e.wilson_high},
              {"confidence", e.confidence}};
}

Json to_json(const oracle::WinDistribution& w, const NormalizedConfig& p) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "win_distribution"},
              {"h", w.h},
              {"p", p.probs},
              {"q", w.q},
              {"q_strict", w.q_strict},
              {"q_ties", w.q_ties},
              {"q_strict_pair_12", w.q_strict_pair_12}};
}

Json to_json(const oracle::EventReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "event_report"},
              {"h", r.h},
              {"p", r.p},
              {"rare_x", r.rare_x},
              {"pr_conditioning_event", r.pr_conditioning_event},
              {"cond_diff_majority", r.cond_diff_majority},
              {"cond_diff_comparison", r.cond_diff_comparison},
              {"sum_tail_threshold", r.sum_tail_threshold},
              {"sum_tail_conditional", r.sum_tail_conditional},
              {"sum_tail_unconditional", r.sum_tail_unconditional},
              {"unconditional_diff", r.unconditional_diff},
              {"rare_set", r.rare_set},
              {"strong_set", r.strong_set}};
}

Json to_json(const oracle::BinomialPairReport& r) {
  Json table = Json::object();
  for (auto [i, d] : r.diff_given_max_ge) table[std::to_string(i)] = d;
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "binomial_pair_report"},
              {"m", r.m},
              {"q", r.q},
              {"diff_unconditional", r.diff_unconditional},
              {"diff_given_max_ge", table},
              {"lemma9_bound", r.lemma9_bound}};
}

Json to_json(const oracle::TieMapAudit& a) {
  Json entries = Json::array();
  for (const oracle::TieMapEntry& e : a.entries) {
    Json row{{"outcome", e.outcome}, {"j", e.j}, {"j_any", e.j_any}};
    if (e.image.empty()) {
      row["image"] = nullptr;
    } else {
      row["image"] = e.image;
      row["pmf_ratio"] = e.pmf_ratio;
      row["formula_ratio"] = e.formula_ratio;
    }
    entries.push_back(std::move(row));
  }
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "tie_map_audit"},
              {"h", a.h},
              {"p", a.p},
              {"strong_set", a.strong_set},
              {"one_ties", a.entries.size()},
              {"undefined_count", a.undefined_count},
              {"injective", a.injective},
              {"injective_any_index", a.injective_any_index},
              {"images_strict", a.images_strict},
              {"max_ratio_rel_error", a.max_ratio_rel_error},
              {"ratio_identity_ok", a.ratio_identity_ok()},
              {"pr_w1_strict", a.pr_w1_strict},
              {"pr_w1_ties", a.pr_w1_ties},
              {"strict_over_ties", a.strict_over_ties},
              {"entries", entries}};
}

Json to_json(const theory::VerdictReport& v) {
  Json measured = std::holds_alternative<double>(v.measured) ? Json(std::get<double>(v.measured))
                                                             : to_json(std::get<Estimate>(v.measured));
  return Json{{"bound", v.bound},
              {"params", v.params},
              {"measured", measured},
              {"bound_value", v.bound_value},
              {"verdict", theory::to_string(v.verdict)}};
}

Json to_json(const mc::W1BoundReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "w1_bound_check"},
              {"n", r.n},
              {"h", r.h},
              {"c4", r.c4},
              {"p", r.p},
              {"pr_w1", to_json(r.w1)},
              {"pr_w1_strict", to_json(r.w1_strict)},
              {"pr_w1_ties", to_json(r.w1_ties)},
              {"pr_w12_strict", to_json(r.w12_strict)},
              {"verdicts", Json::array({to_json(r.w1_vs_p1), to_json(r.strict_vs_ties), to_json(r.strict_pair)})}};
}

SimulateConfig simulate_config_from_json(const Json& j) {
  const Reader r(j, "simulate config",
                 {"schema_version", "counts", "h", "h_rule_c", "max_rounds", "stop_rule", "target",
                  "stop_on_plurality_loss", "seed", "step_mode"});
  check_schema(r, "simulate config");
  SimulateConfig out;
  try {
    out.config0 = Configuration::make(r.get<std::vector<Count>>("counts"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("field 'counts': ") + e.what());
  }

  if (r.has("h") == r.has("h_rule_c")) {
    throw Error(ErrorCode::ConfigError, "simulate config: give exactly one of fields 'h' and 'h_rule_c'");
  }
  if (r.has("h")) {
    out.params.h = r.get<Count>("h");
  } else {
    const double c = r.get<double>("h_rule_c");
    const auto& counts = out.config0.counts;
    const double p1 = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                      static_cast<double>(out.config0.n);
    out.params.h = mc::theorem_h(p1, out.config0.n, c);
  }
  out.params.max_rounds = r.get<std::int64_t>("max_rounds");
  out.params.stop_rule = parse_stop_rule(r.get_or<std::string>("stop_rule", "consensus"));
  out.params.target = r.get_or<Opinion>("target", 1);
  out.params.stop_on_plurality_loss = r.get_or<bool>("stop_on_plurality_loss", false);
  out.params.seed = r.get_or<std::uint64_t>("seed", 0);
  const std::string mode = r.get_or<std::string>("step_mode", "agent_level");
  if (mode == "agent_level") {
    out.params.step_mode = StepMode::AgentLevel;
  } else if (mode == "oracle_level") {
    out.params.step_mode = StepMode::OracleLevel;
  } else {
    throw Error(ErrorCode::ConfigError, "field 'step_mode': unknown value '" + mode + "'");
  }
  try {
    out.params.validate(out.config0.k());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return out;
}

mc::SweepSpec sweep_spec_from_json(const Json& j) {
  const Reader r(j, "sweep spec",
                 {"schema_version", "n", "k", "h", "h_rule", "pattern", "bias_lambda", "counts", "trials",
                  "master_seed", "max_rounds", "stop_rule", "stop_on_plurality_loss"});
  check_schema(r, "sweep spec");
  mc::SweepSpec s;
  const std::string pattern = r.get_or<std::string>("pattern", "balanced_plus_bias");
  if (pattern == "balanced_plus_bias") {
    s.pattern = mc::InitPattern::BalancedPlusBias;
  } else if (pattern == "balanced") {
    s.pattern = mc::InitPattern::Balanced;
  } else if (pattern == "custom") {
    s.pattern = mc::InitPattern::Custom;
    s.custom_counts = r.get<std::vector<Count>>("counts");
  } else {
    throw Error(ErrorCode::ConfigError, "field 'pattern': unknown value '" + pattern + "'");
  }
  if (s.pattern != mc::InitPattern::Custom) {
    s.ns = r.get<std::vector<Count>>("n");
    s.ks = r.get<std::vector<std::size_t>>("k");
  }
  s.hs = r.get_or<std::vector<Count>>("h", {});
  if (r.has("h_rule")) {
    const Reader rule(j.at("h_rule"), "sweep spec h_rule", {"c"});
    s.h_rule_c = rule.get<double>("c");
  }
  s.bias_lambda = r.get_or<double>("bias_lambda", 10.0);
  s.trials = r.get<std::int64_t>("trials");
  s.master_seed = r.get_or<std::uint64_t>("master_seed", 0);
  s.max_rounds = r.get_or<std::int64_t>("max_rounds", 1000);
  s.stop_rule = parse_stop_rule(r.get_or<std::string>("stop_rule", "consensus"));
  s.stop_on_plurality_loss = r.get_or<bool>("stop_on_plurality_loss", false);
  try {
    s.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return s;
}

Json to_json(const mc::SweepSpec& s) {
  Json j{{"schema_version", kSchemaVersion},
         {"trials", s.trials},
         {"master_seed", s.master_seed},
         {"max_rounds", s.max_rounds},
         {"stop_rule", stop_rule_name(s.stop_rule)},
         {"stop_on_plurality_loss", s.stop_on_plurality_loss},
         {"bias_lambda", s.bias_lambda}};
  switch (s.pattern) {
    case mc::InitPattern::BalancedPlusBias: j["pattern"] = "balanced_plus_bias"; break;
    case mc::InitPattern::Balanced: j["pattern"] = "balanced"; break;
    case mc::InitPattern::Custom: j["pattern"] = "custom"; j["counts"] = s.custom_counts; break;
  }
  if (s.pattern != mc::InitPattern::Custom) {
    j["n"] = s.ns;
    j["k"] = s.ks;
  }
  if (s.h_rule_c) {
    j["h_rule"] = Json{{"c", *s.h_rule_c}};
  } else {
    j["h"] = s.hs;
  }
  return j;
}

std::string summary_line(const Trajectory& t) {
  std::ostringstream os;
  os << "winner=" << (t.winner ? std::to_string(*t.winner) : "none")
     << " rounds=" << (t.rounds.empty() ? 0 : t.rounds.back().round)
     << " consensus_round=" << (t.consensus_round ? std::to_string(*t.consensus_round) : "none")
     << " final_bias=" << (t.rounds.empty() ? 0 : t.rounds.back().additive_bias)
     << " terminal=" << terminal_name(t.terminal);
  return os.str();
}

}  // namespace hmaj::io
