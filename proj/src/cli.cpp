#include "hmaj/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hmaj/serialize.hpp"
#include "hmaj/verify.hpp"

namespace hmaj::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

// Input problems: reported with exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class WriteMode { Fail, Append, Overwrite };

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

std::ofstream open_output(const fs::path& path, WriteMode mode) {
  if (fs::exists(path) && mode == WriteMode::Fail) {
    throw InputError("'" + path.string() + "' exists; pass --append or --force");
  }
  std::ofstream out(path, mode == WriteMode::Append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const Json& j, WriteMode mode) {
  auto out = open_output(path, mode == WriteMode::Append ? WriteMode::Overwrite : mode);
  out << j.dump(2) << '\n';
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

std::vector<double> parse_probs(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("--p: cannot parse '" + item + "' as a probability");
    }
  }
  if (out.empty()) throw InputError("--p: no probabilities given");
  return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool force = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  io::SimulateConfig cfg;
  try {
    cfg = io::simulate_config_from_json(read_json_file(a.config));
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  if (a.seed) cfg.params.seed = *a.seed;
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  const fs::path file = dir / "trajectory.json";
  if (fs::exists(file) && !a.force) throw InputError("'" + file.string() + "' exists; pass --force");

  const Trajectory t = run(cfg.config0, cfg.params);
  write_json(file, io::to_json(t), WriteMode::Overwrite);
  out << io::summary_line(t) << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string spec;
  unsigned workers = 0;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool append = false;
  bool force = false;
};

void write_summary_csv(const fs::path& path, const std::vector<mc::CellSummary>& cells) {
  auto out = open_output(path, WriteMode::Overwrite);
  out << "cell_id,n,k,h,B0,trials,plurality_success_rate,median_consensus_round,p90_consensus_round,"
         "mean_wall_time_ms\n";
  for (const auto& c : cells) {
    out << c.cell_id << ',' << c.n << ',' << c.k << ',' << c.h << ',' << c.b0 << ',' << c.trials << ','
        << fmt_double(c.plurality_success_rate) << ',' << fmt_optional(c.median_consensus_round) << ','
        << fmt_optional(c.p90_consensus_round) << ',' << fmt_double(c.mean_wall_time_ms) << '\n';
  }
}

void write_scaling(const fs::path& dir, const mc::ScalingTable& table, std::optional<std::uint64_t> master_seed) {
  auto csv = open_output(dir / "scaling.csv", WriteMode::Overwrite);
  csv << "n,ln_n,median_consensus_round\n";
  for (const auto& r : table.rows) {
    csv << r.n << ',' << fmt_double(r.ln_n) << ',' << fmt_optional(r.median_consensus_round) << '\n';
  }
  Json j{{"schema_version", io::kSchemaVersion},
         {"kind", "scaling_table"},
         {"slope", table.slope ? Json(*table.slope) : Json(nullptr)},
         {"intercept", table.intercept ? Json(*table.intercept) : Json(nullptr)}};
  if (master_seed) j["master_seed"] = *master_seed;
  write_json(dir / "scaling.json", j, WriteMode::Overwrite);
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  mc::SweepSpec spec;
  try {
    spec = io::sweep_spec_from_json(read_json_file(a.spec));
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  if (a.seed) spec.master_seed = *a.seed;
  const WriteMode mode = a.force ? WriteMode::Overwrite : a.append ? WriteMode::Append : WriteMode::Fail;
  const fs::path dir(a.out_dir);
  ensure_dir(dir);

  auto records = open_output(dir / "records.jsonl", mode);
  auto timings = open_output(dir / "timings.jsonl", mode == WriteMode::Fail ? WriteMode::Overwrite : mode);
  write_json(dir / "spec.json", io::to_json(spec), WriteMode::Overwrite);

  std::vector<mc::TrialRecord> all;
  std::vector<double> wall;
  const unsigned workers = a.workers > 0 ? a.workers : std::max(1u, std::thread::hardware_concurrency());
  mc::run_sweep(spec, workers, [&](const mc::TrialRecord& r, double ms) {
    records << io::to_json(r).dump() << '\n';
    timings << Json{{"schema_version", io::kSchemaVersion}, {"cell_id", r.cell_id}, {"trial", r.trial},
                    {"master_seed", spec.master_seed}, {"wall_time_ms", ms}}
                   .dump()
            << '\n';
    all.push_back(r);
    wall.push_back(ms);
  });
  records.flush();
  if (!records) throw std::runtime_error("writing records failed");

  const auto cells = mc::summarize_cells(all, wall);
  write_summary_csv(dir / "summary.csv", cells);
  std::size_t errors = std::count_if(all.begin(), all.end(), [](const auto& r) { return r.error.has_value(); });
  out << "trials=" << all.size() << " cells=" << cells.size() << " errors=" << errors
      << " master_seed=" << spec.master_seed << '\n';
  return errors == 0 ? kExitOk : kExitFailure;
}

struct OracleArgs {
  Count h = 0;
  std::string p;
  std::string report = "win";
  double rare_x = 0.25;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  NormalizedConfig p;
  try {
    p = NormalizedConfig::from_probs(parse_probs(a.p));
  } catch (const Error& e) {
    throw InputError(std::string("--p: ") + e.what());
  }
  if (a.h < 1) throw InputError("--h must be >= 1");
  try {
    if (a.report == "win") {
      out << io::to_json(oracle::win_distribution(a.h, p), p).dump(2) << '\n';
    } else if (a.report == "event") {
      out << io::to_json(oracle::event_report(a.h, p, a.rare_x)).dump(2) << '\n';
    } else {
      out << io::to_json(oracle::tie_map_audit(a.h, p)).dump(2) << '\n';
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotSorted || e.code() == ErrorCode::TooLarge || e.code() == ErrorCode::InvalidParams) {
      throw InputError(e.what());
    }
    throw;
  }
  return kExitOk;
}

struct VerifyArgs {
  std::vector<std::string> suites;
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string out_file;
  bool inject_fault = false;
};

Json to_json(const verify::SuiteResult& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"instances", c.instances},
                      {"violations", c.violations},
                      {"worst", c.worst},
                      {"gating", c.gating},
                      {"ok", c.ok()},
                      {"note", c.note}});
  }
  Json tally = Json::object();
  for (const auto& [bound, t] : r.tally) tally[bound] = {{"pass", t[0]}, {"fail", t[1]}, {"inconclusive", t[2]}};
  Json samples = Json::array();
  for (const auto& v : r.samples) samples.push_back(io::to_json(v));
  return Json{{"suite", r.suite}, {"ok", r.ok()},          {"seconds", r.seconds},
              {"checks", checks}, {"verdicts", tally}, {"sample_reports", samples}};
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  verify::Options opts;
  if (a.trials) opts.mc_trials = *a.trials;
  if (a.seed) opts.seed = *a.seed;
  if (a.inject_fault) opts.oracle.tie_split = oracle::TieSplit::LowestIndexWins;
  std::vector<std::string> suites = a.suites.empty() ? verify::suite_names() : a.suites;
  for (const auto& s : suites) {
    const auto& names = verify::suite_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) throw InputError("unknown suite '" + s + "'");
  }

  bool all_ok = true;
  Json report{{"schema_version", io::kSchemaVersion}, {"kind", "verify_report"}, {"master_seed", opts.seed},
              {"suites", Json::array()}};
  for (const auto& s : suites) {
    const auto r = verify::run_suite(s, opts);
    all_ok = all_ok && r.ok();
    out << (r.ok() ? "PASS " : "FAIL ") << s << " (" << fmt_double(r.seconds) << " s)\n";
    for (const auto& c : r.checks) {
      out << "  " << (c.ok() ? "ok  " : "FAIL") << ' ' << c.name << ": " << c.violations << '/' << c.instances
          << " violations" << (c.gating ? "" : " [reported only]") << ", worst=" << fmt_double(c.worst);
      if (!c.note.empty()) out << " (" << c.note << ')';
      out << '\n';
    }
    for (const auto& [bound, t] : r.tally) {
      out << "  verdicts " << bound << ": pass=" << t[0] << " fail=" << t[1] << " inconclusive=" << t[2] << '\n';
    }
    report["suites"].push_back(to_json(r));
  }
  if (!a.out_file.empty()) {
    const fs::path path(a.out_file);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_json(path, report, WriteMode::Overwrite);
  }
  out << (all_ok ? "verify: all suites passed" : "verify: failures found") << '\n';
  return all_ok ? kExitOk : kExitFailure;
}

struct ReportArgs {
  std::string in_dir;
  std::string out_dir;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path in(a.in_dir);
  if (!fs::is_directory(in)) throw InputError("input directory '" + in.string() + "' does not exist");
  const fs::path records_path = in / "records.jsonl";
  const fs::path trajectory_path = in / "trajectory.json";
  const bool has_records = fs::exists(records_path);
  const bool has_trajectory = fs::exists(trajectory_path);
  if (!has_records && !has_trajectory) {
    throw InputError("no records.jsonl or trajectory.json in '" + in.string() + "'");
  }
  const fs::path dir(a.out_dir);
  ensure_dir(dir);

  if (has_trajectory) {
    const Trajectory t = io::trajectory_from_json(read_json_file(trajectory_path.string()));
    const std::string line = io::summary_line(t);
    auto summary = open_output(dir / "summary.txt", WriteMode::Overwrite);
    summary << line << '\n';
    out << line << '\n';
  }
  if (!has_records) return kExitOk;

  std::vector<mc::TrialRecord> records;
  std::optional<std::uint64_t> master_seed;
  {
    std::ifstream f(records_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        records.push_back(io::trial_record_from_json(Json::parse(line)));
      } catch (const std::exception& e) {
        throw InputError(records_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  std::vector<double> wall;
  if (fs::exists(in / "timings.jsonl")) {
    std::ifstream f(in / "timings.jsonl");
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      wall.push_back(j.at("wall_time_ms").get<double>());
      master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (wall.size() != records.size()) wall.clear();
  }
  const auto cells = mc::summarize_cells(records, wall);
  write_summary_csv(dir / "summary.csv", cells);
  const auto table = mc::scaling_table(cells);
  write_scaling(dir, table, master_seed);
  out << "records=" << records.size() << " cells=" << cells.size()
      << " scaling_slope=" << (table.slope ? fmt_double(*table.slope) : std::string("none")) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"h-majority dynamics simulator and verifier", "hmaj"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More output");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one trajectory from a JSON config");
  simulate->add_option("--config", sim.config, "Config file")->required();
  simulate->add_option("--seed", sim.seed, "Seed override");
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->add_flag("--force", sim.force, "Overwrite an existing trajectory.json");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("--spec", sw.spec, "Sweep spec file")->required();
  sweep->add_option("--workers", sw.workers, "Worker threads (default: hardware concurrency)");
  sweep->add_option("--out", sw.out_dir, "Output directory")->required();
  sweep->add_option("--seed", sw.seed, "Master seed override");
  auto* append = sweep->add_flag("--append", sw.append, "Append to existing records");
  sweep->add_flag("--force", sw.force, "Overwrite existing records")->excludes(append);

  OracleArgs orc;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact single-agent win distribution and audits");
  oracle_cmd->set_help_flag("--help", "Print this help message and exit");
  oracle_cmd->add_option("--h", orc.h, "Sample size")->required();
  oracle_cmd->add_option("--p", orc.p, "Comma-separated probabilities")->required();
  oracle_cmd->add_option("--report", orc.report, "win, event or tiemap")
      ->check(CLI::IsMember({"win", "event", "tiemap"}));
  oracle_cmd->add_option("--rare-x", orc.rare_x, "Rarity threshold for the event report");

  VerifyArgs ver;
  auto* verify_cmd = app.add_subcommand("verify", "Run the verification suites");
  verify_cmd->add_option("--suite", ver.suites, "Suite name (repeatable)");
  verify_cmd->add_option("--trials", ver.trials, "Monte Carlo trials for statistical checks");
  verify_cmd->add_option("--seed", ver.seed, "Master seed");
  verify_cmd->add_option("--out", ver.out_file, "Write the JSON verdict report here");
  verify_cmd->add_flag("--inject-tiebreak-fault", ver.inject_fault)->group("");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Aggregate records into CSV summaries");
  report->add_option("--in", rep.in_dir, "Directory with records.jsonl or trajectory.json")->required();
  report->add_option("--out", rep.out_dir, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*sweep) return cmd_sweep(sw, out);
    if (*oracle_cmd) return cmd_oracle(orc, out);
    if (*verify_cmd) return cmd_verify(ver, out);
    if (*report) return cmd_report(rep, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace hmaj::cli
