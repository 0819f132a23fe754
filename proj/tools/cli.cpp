#include "cli.hpp"

#include "CLI11.hpp"
#include "json.hpp"
#include "pipelat/analysis.hpp"
#include "pipelat/model.hpp"
#include "pipelat/schedulability.hpp"
#include "pipelat/simulator.hpp"
#include "pipelat/synthesis.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

namespace pipelat::cli {

namespace {

using nlohmann::ordered_json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

Rational rational_flag(const std::string& name, const std::string& text) {
  try {
    return parse_rational(text);
  } catch (const std::exception&) {
    throw ConfigError("--" + name + ": not a number: '" + text + "'");
  }
}

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << content;
}

std::string with_comments(const RunManifest& m) {
  std::string out;
  for (const std::string& line : m.lines()) out += "# " + line + "\n";
  return out;
}

ordered_json manifest_json(const RunManifest& m) {
  ordered_json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["flags"] = m.flags;
  if (!m.seed.empty()) j["seed"] = m.seed;
  j["outputs"] = m.outputs;
  j["version"] = m.version;
  return j;
}

struct Common {
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Configuration file (JSON)")->required();
  cmd->add_option("--out", c.out, "Output file");
}

std::string describe_analysis(const AnalysisResult& r, const std::string& unit) {
  std::ostringstream s;
  s << "chain: " << join(r.chain, " -> ") << "\n";
  s << "metric: " << to_string(r.metric) << "\n";
  s << "mode: " << to_string(r.mode) << "\n";
  s << "bound: " << to_string(r.value) << " " << unit << "\n";
  for (std::size_t i = 0; i < r.chain.size() && i < r.pipe_latencies.size(); ++i)
    s << "  pipe " << r.chain[i] << ": latency " << to_string(r.pipe_latencies[i]) << "\n";
  for (const BoundaryLatency& b : r.boundaries)
    s << "  boundary " << b.producer << " -> " << b.consumer << ": " << to_string(b.priority) << ", "
      << to_string(b.value) << "\n";
  s << "  increments:";
  for (const Rational& v : r.increments) s << " " << to_string(v);
  s << "\n";
  if (r.composition_extension)
    s << "caveat: freshness over three or more pipes uses the pairwise composition extension\n";
  if (r.mode == AnalysisMode::zero_comm) s << "caveat: boundary communication delays are taken as 0\n";
  if (r.mode == AnalysisMode::paper_compat)
    s << "caveat: paper-compat drops boundary delays after the first pair; bounds may be optimistic\n";
  return s.str();
}

AnalysisResult analyze(const TaskGraph& g, const std::vector<std::string>& chain, Metric metric, AnalysisMode mode) {
  if (metric == Metric::reaction) return chain_reaction(g, chain, mode);
  AnalysisResult r = chain_freshness(g, chain);
  r.mode = mode;
  return r;
}

int cmd_analyze(const Common& c, const std::string& chain_text, const std::string& metric_text,
                const std::string& mode_text, bool paper, const RunManifest& manifest, std::ostream& out) {
  SystemConfig cfg = load_config_file(c.config);
  AnalysisMode mode = paper ? AnalysisMode::paper_compat : parse_mode(mode_text);
  std::string report = with_comments(manifest);
  int code = ok;
  if (!chain_text.empty()) {
    std::vector<std::string> chain = split(chain_text, ',');
    cfg.graph.require_path(chain);
    Metric metric;
    if (metric_text == "reaction")
      metric = Metric::reaction;
    else if (metric_text == "freshness")
      metric = Metric::freshness;
    else
      throw ConfigError("--metric must be reaction or freshness");
    report += describe_analysis(analyze(cfg.graph, chain, metric, mode), cfg.unit);
  } else {
    if (cfg.constraints.empty()) throw ConfigError("no --chain given and the configuration has no constraints");
    for (const TimingConstraint& tc : cfg.constraints) {
      AnalysisResult r = analyze(cfg.graph, tc.chain, tc.kind, mode);
      bool met = r.value <= tc.bound;
      if (!met) code = failed;
      report += tc.id + ": " + to_string(r.value) + " " + cfg.unit + " <= " + to_string(tc.bound) + " " +
                (met ? "met" : "VIOLATED") + "\n";
    }
  }
  out << report;
  if (!c.out.empty()) write_file(c.out, report);
  return code;
}

std::string slack_table(const std::vector<ConstraintSlack>& slack, const std::string& unit) {
  std::ostringstream s;
  for (const ConstraintSlack& x : slack)
    s << "  " << x.constraint << ": " << to_string(x.value) << " <= " << to_string(x.bound) << " " << unit
      << ", slack " << to_string(x.slack()) << (x.met() ? "" : " VIOLATED") << "\n";
  return s.str();
}

int cmd_synthesize(const Common& c, const std::string& resolution, const std::string& pad, const std::string& cap,
                   bool recompute, bool paper, const RunManifest& manifest, std::ostream& out) {
  SystemConfig cfg = load_config_file(c.config);
  SynthesisOptions options;
  options.resolution = rational_flag("resolution", resolution);
  if (!cap.empty()) options.cap = rational_flag("cap", cap);
  options.mode = paper ? InequalityMode::paper_compat : InequalityMode::with_overheads;
  const Rational pad_value = rational_flag("pad", pad);

  std::ostringstream report;
  report << with_comments(manifest);

  bool all_solved = !cfg.graph.pipes().empty();
  for (const Pipe& p : cfg.graph.pipes()) all_solved = all_solved && p.terminal.solved();
  if (all_solved && !recompute) {
    report << "configured periods:\n";
    report << slack_table(evaluate_constraints(cfg.graph, cfg.constraints, verification_mode(options.mode)), cfg.unit);
    UtilizationCheck u = rms_bound_check(cfg.graph);
    report << "  utilization " << to_string(u.utilization) << ", LL bound " << fixed4(u.bound) << ", "
           << (u.pass ? "pass" : "fail") << "\n";
  }

  TaskGraph graph = recompute ? compute_budgets(cfg.graph, pad_value) : compute_missing_budgets(cfg.graph, pad_value);
  SynthesisResult result;
  try {
    result = solve_periods(graph, cfg.constraints, options);
  } catch (const InfeasibleError& e) {
    out << report.str();
    out << e.what() << "\n";
    return failed;
  }

  report << "synthesized periods:\n";
  for (const Pipe& p : result.graph.pipes())
    report << "  " << p.id << ": C=" << to_string(p.terminal.C()) << " T=" << to_string(p.terminal.T()) << "\n";
  report << slack_table(result.slack, cfg.unit);
  report << "  utilization " << to_string(result.utilization) << " (" << fixed4(to_double(result.utilization))
         << "), LL bound " << fixed4(result.schedulability.bound) << ", "
         << (result.schedulability.pass ? "pass" : "fail") << "\n";
  report << "  branch assignments tried: " << result.assignments_tried
         << (result.exhaustive ? " (grid search)" : "") << "\n";

  SystemConfig solved = cfg;
  solved.graph = result.graph;
  ordered_json doc = ordered_json::parse(dump_config(solved));
  doc["utilization"] = to_string(result.utilization);
  doc["schedulability"] = {{"ll_bound", result.schedulability.bound}, {"pass", result.schedulability.pass}};
  ordered_json slack = ordered_json::array();
  for (const ConstraintSlack& s : result.slack)
    slack.push_back({{"constraint", s.constraint},
                     {"metric", std::string(to_string(s.metric))},
                     {"value", to_string(s.value)},
                     {"bound", to_string(s.bound)},
                     {"slack", to_string(s.slack())}});
  doc["slack"] = slack;
  ordered_json branches = ordered_json::array();
  for (std::size_t i = 0; i < result.branches.boundaries.size(); ++i)
    branches.push_back({{"producer", result.branches.boundaries[i].first},
                        {"consumer", result.branches.boundaries[i].second},
                        {"order", std::string(to_string(result.branches.orders[i]))}});
  doc["branches"] = branches;
  doc["manifest"] = manifest_json(manifest);
  const std::string text = doc.dump(2) + "\n";

  out << report.str();
  if (c.out.empty())
    out << text;
  else
    write_file(c.out, text);
  return ok;
}

SimOptions simulation_options(const SystemConfig& cfg, const std::string& horizon, const std::string& offsets,
                              const std::string& tick, std::uint64_t seed, const std::vector<std::string>& chains,
                              bool background) {
  SimOptions o;
  o.horizon = rational_flag("horizon", horizon);
  if (!tick.empty()) o.tick = rational_flag("tick", tick);
  o.seed = seed;
  o.background_load = background;
  if (offsets == "zero" || offsets.empty()) {
    o.offset_mode = OffsetMode::zero;
  } else if (offsets == "random") {
    o.offset_mode = OffsetMode::random;
  } else {
    o.offset_mode = OffsetMode::given;
    for (const std::string& item : split(offsets, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--offsets expects zero, random or pipe=value,...");
      o.offsets[item.substr(0, eq)] = rational_flag("offsets", item.substr(eq + 1));
    }
  }
  if (!chains.empty()) {
    for (const std::string& c : chains) o.chains.push_back(split(c, ','));
  } else {
    std::set<std::vector<std::string>> seen;
    for (const TimingConstraint& c : cfg.constraints)
      if (seen.insert(c.chain).second) o.chains.push_back(c.chain);
  }
  return o;
}

std::string indexed_path(const std::string& path, std::size_t index, std::size_t count) {
  if (count <= 1) return path;
  auto dot = path.find_last_of('.');
  auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "." + std::to_string(index);
  return path.substr(0, dot) + "." + std::to_string(index) + path.substr(dot);
}

int cmd_simulate(const Common& c, const SimOptions& options, const std::string& csv_out,
                 const std::string& events_out, const RunManifest& manifest, std::ostream& out) {
  SystemConfig cfg = load_config_file(c.config);
  SimOptions o = options;
  o.record_trace = !events_out.empty();
  SimReport report = run(cfg.graph, o);

  std::ostringstream text;
  text << with_comments(manifest);
  text << "# jobs read Delta_in, process p, then write Delta_out, all charged to the pipe budget\n";
  text << "tick " << to_string(report.tick) << " " << cfg.unit << ", horizon " << to_string(report.to_time(report.horizon))
       << " " << cfg.unit << "\n";
  int code = ok;
  text << std::left << std::setw(32) << "chain" << std::setw(11) << "metric" << std::setw(12) << "observed"
       << std::setw(12) << "predicted" << "status\n";
  for (const ChainReport& ch : report.chains) {
    for (Metric m : {Metric::reaction, Metric::freshness}) {
      std::optional<Tick> observed = m == Metric::reaction ? ch.max_reaction : ch.max_freshness;
      std::optional<Rational> predicted;
      try {
        predicted = analyze(cfg.graph, ch.chain, m, AnalysisMode::general).value;
      } catch (const AnalysisError&) {
      }
      std::string status = "ok";
      if (!observed)
        status = "no output";
      else if (!predicted)
        status = "no bound";
      else if (report.to_time(*observed) > *predicted) {
        status = "EXCEEDED";
        code = failed;
      }
      text << std::setw(32) << join(ch.chain, ",") << std::setw(11) << to_string(m) << std::setw(12)
           << (observed ? to_string(report.to_time(*observed)) : "-") << std::setw(12)
           << (predicted ? to_string(*predicted) : "-") << status << "\n";
    }
    text << "  inputs " << ch.records.size() << ", reachable " << ch.reachable << ", truncated " << ch.truncated
         << ", sink outputs " << ch.sink_outputs << "\n";
  }
  if (o.background_load) text << "background time " << to_string(report.to_time(report.background_time)) << "\n";

  for (std::size_t i = 0; i < report.chains.size() && !csv_out.empty(); ++i) {
    std::ostringstream csv;
    csv << with_comments(manifest) << "# chain " << join(report.chains[i].chain, ",") << "\n";
    write_lineage_csv(csv, report, i);
    write_file(indexed_path(csv_out, i, report.chains.size()), csv.str());
  }
  if (!events_out.empty()) {
    std::ostringstream csv;
    csv << with_comments(manifest);
    write_events_csv(csv, report);
    write_file(events_out, csv.str());
  }
  out << text.str();
  if (!c.out.empty()) write_file(c.out, text.str());
  return code;
}

int cmd_check(const Common& c, const RunManifest& manifest, std::ostream& out) {
  SystemConfig cfg = load_config_file(c.config);
  UtilizationCheck u = rms_bound_check(cfg.graph);
  ResponseTimeCheck rta = response_time_check(cfg.graph);
  std::ostringstream text;
  text << with_comments(manifest);
  text << "utilization " << to_string(u.utilization) << ", LL bound " << fixed4(u.bound) << ", "
       << (u.pass ? "pass" : "fail") << "; RTA " << (rta.schedulable ? "pass" : "fail") << "\n";
  for (const ResponseTime& r : rta.pipes)
    text << "  " << r.pipe << ": C=" << to_string(r.budget) << " T=" << to_string(r.period)
         << " R=" << (r.response ? to_string(*r.response) : std::string("> T")) << (r.schedulable() ? "" : " MISS")
         << "\n";
  out << text.str();
  if (!c.out.empty()) write_file(c.out, text.str());
  return rta.schedulable ? ok : failed;
}

}  // namespace

std::vector<std::string> RunManifest::lines() const {
  std::vector<std::string> out;
  out.push_back("pipelat " + version + " " + command);
  out.push_back("config: " + config);
  for (const auto& [k, v] : flags) out.push_back("flag " + k + ": " + v);
  if (!seed.empty()) out.push_back("seed: " + seed);
  if (!outputs.empty()) out.push_back("outputs: " + join(outputs, ", "));
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Timing analysis for periodic sensor-to-actuator pipelines", "pipelat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  std::string chain, metric = "reaction", mode = "general";
  bool paper = false;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Bound the reaction or freshness time of a chain");
  add_common(analyze_cmd, common);
  analyze_cmd->add_option("--chain", chain, "Comma-separated pipe ids; omit to check every constraint");
  analyze_cmd->add_option("--metric", metric, "reaction or freshness");
  analyze_cmd->add_option("--mode", mode, "general, simplified, zero-comm or paper-compat");
  analyze_cmd->add_flag("--paper-compat", paper, "Same as --mode paper-compat");

  std::string resolution = "1", pad = "0", cap;
  bool recompute = false;
  CLI::App* synth_cmd = app.add_subcommand("synthesize", "Compute budgets and periods that meet all constraints");
  add_common(synth_cmd, common);
  synth_cmd->add_option("--resolution", resolution, "Period grid");
  synth_cmd->add_option("--pad", pad, "Extra budget per pipe");
  synth_cmd->add_option("--cap", cap, "Largest period considered");
  synth_cmd->add_flag("--recompute-budgets", recompute, "Replace configured budgets with computed ones");
  synth_cmd->add_flag("--paper-compat", paper, "Translate constraints with the compat inequality forms");

  std::string horizon, offsets = "zero", tick, csv_out, events_out;
  std::uint64_t seed = 0;
  std::vector<std::string> chains;
  bool background = false;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Simulate the schedule and measure end-to-end times");
  add_common(sim_cmd, common);
  sim_cmd->add_option("--horizon", horizon, "Simulated time")->required();
  sim_cmd->add_option("--seed", seed, "Seed for random offsets");
  sim_cmd->add_option("--offsets", offsets, "zero, random, or pipe=value,...");
  sim_cmd->add_option("--tick", tick, "Simulation time step");
  sim_cmd->add_option("--chain", chains, "Chain to trace (repeatable); default: constraint chains");
  sim_cmd->add_option("--csv-out", csv_out, "Lineage CSV");
  sim_cmd->add_option("--events-out", events_out, "Event log CSV");
  sim_cmd->add_flag("--background", background, "Add a lowest-priority background load");

  CLI::App* check_cmd = app.add_subcommand("check", "Schedulability of the configured budgets and periods");
  add_common(check_cmd, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }

  RunManifest manifest;
  manifest.config = common.config;
  if (!common.out.empty()) manifest.outputs.push_back(common.out);
  try {
    if (analyze_cmd->parsed()) {
      manifest.command = "analyze";
      manifest.flags = {{"chain", chain}, {"metric", metric}, {"mode", paper ? "paper-compat" : mode}};
      return cmd_analyze(common, chain, metric, mode, paper, manifest, out);
    }
    if (synth_cmd->parsed()) {
      manifest.command = "synthesize";
      manifest.flags = {{"resolution", resolution},
                        {"pad", pad},
                        {"cap", cap.empty() ? "default" : cap},
                        {"recompute-budgets", recompute ? "true" : "false"},
                        {"paper-compat", paper ? "true" : "false"}};
      return cmd_synthesize(common, resolution, pad, cap, recompute, paper, manifest, out);
    }
    if (sim_cmd->parsed()) {
      SystemConfig cfg = load_config_file(common.config);
      SimOptions options = simulation_options(cfg, horizon, offsets, tick, seed, chains, background);
      manifest.command = "simulate";
      std::vector<std::string> traced;
      for (const auto& c : options.chains) traced.push_back(join(c, ","));
      manifest.flags = {{"horizon", horizon},
                        {"offsets", offsets},
                        {"tick", tick.empty() ? "auto" : tick},
                        {"chains", join(traced, ";")},
                        {"background", background ? "true" : "false"}};
      manifest.seed = std::to_string(seed);
      if (!csv_out.empty()) manifest.outputs.push_back(csv_out);
      if (!events_out.empty()) manifest.outputs.push_back(events_out);
      return cmd_simulate(common, options, csv_out, events_out, manifest, out);
    }
    manifest.command = "check";
    return cmd_check(common, manifest, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  } catch (const AnalysisError& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  }
}

}  // namespace pipelat::cli
