#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "hmaj/dynamics.hpp"
#include "hmaj/montecarlo.hpp"
#include "hmaj/oracle.hpp"
#include "hmaj/theory.hpp"

namespace hmaj::io {

using Json = nlohmann::json;

/// Written into every JSON document and JSON-lines record.
inline constexpr int kSchemaVersion = 1;

Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

Json to_json(const mc::TrialRecord& r);
mc::TrialRecord trial_record_from_json(const Json& j);

Json to_json(const Estimate& e);
Json to_json(const oracle::WinDistribution& w, const NormalizedConfig& p);
Json to_json(const oracle::EventReport& r);
Json to_json(const oracle::BinomialPairReport& r);
Json to_json(const oracle::TieMapAudit& a);
Json to_json(const theory::VerdictReport& v);
Json to_json(const mc::W1BoundReport& r);

/// Input for the simulate subcommand.
struct SimulateConfig {
  Configuration config0;
  RunParams params;
};

/// Strict parsers: unknown fields, missing fields and wrong types are
/// ConfigError with the field name in the message.
SimulateConfig simulate_config_from_json(const Json& j);
mc::SweepSpec sweep_spec_from_json(const Json& j);
Json to_json(const mc::SweepSpec& s);

/// One-line human summary shared by `simulate` and `report`.
std::string summary_line(const Trajectory& t);

}  // namespace hmaj::io
