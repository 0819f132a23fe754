#include "pipelat/model.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pipelat {

using nlohmann::json;

namespace {

// DOM builder that keeps floating-point literals as their source text so
// "0.1" stays exactly 1/10.
class ExactNumberSax : public nlohmann::detail::json_sax_dom_parser<json> {
 public:
  using json_sax_dom_parser::json_sax_dom_parser;

  bool number_float(number_float_t, const string_t& text) {
    string_t copy = text;
    return json_sax_dom_parser::string(copy);
  }
};

json parse_exact(std::string_view text) {
  json root;
  ExactNumberSax sax(root);
  try {
    json::sax_parse(text, &sax);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema violation: malformed JSON: ") + e.what());
  }
  return root;
}

[[noreturn]] void schema_error(const std::string& what) { throw ConfigError("schema violation: " + what); }

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where + ": missing key '" + key + "'");
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) schema_error(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

Rational to_rational(const json& v, const std::string& where) {
  if (v.is_number_integer()) {
    return v.is_number_unsigned() ? Rational(v.get<std::uint64_t>()) : Rational(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    try {
      return parse_rational(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      schema_error(where + ": " + e.what());
    }
  }
  schema_error(where + ": expected a number or numeric string");
}

Rational get_rational(const json& obj, const char* key, const std::string& where) {
  return to_rational(require(obj, key, where), where + "." + key);
}

std::optional<Rational> get_optional_rational(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return to_rational(*it, where + "." + key);
}

const json& get_array(const json& root, const char* key) {
  static const json empty = json::array();
  auto it = root.find(key);
  if (it == root.end()) return empty;
  if (!it->is_array()) schema_error(std::string("'") + key + "' must be an array");
  return *it;
}

void require_non_negative(const Rational& v, const std::string& what) {
  if (v < 0) schema_error(what + " must be non-negative");
}

std::string default_constraint_id(Metric kind, const std::vector<std::string>& chain) {
  std::string id = kind == Metric::reaction ? "E(" : "F(";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) id += "|";
    id += chain[i];
  }
  return id + ")";
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

json rational_json(const Rational& v) { return to_string(v); }

}  // namespace

std::string_view to_string(Metric metric) { return metric == Metric::reaction ? "reaction" : "freshness"; }

std::string_view to_string(ChannelKind kind) {
  return kind == ChannelKind::shared_memory ? "shared-memory" : "bus";
}

const Rational& Terminal::C() const {
  if (!budget) throw ConfigError("unsolved terminal: budget not set");
  return *budget;
}

const Rational& Terminal::T() const {
  if (!period) throw ConfigError("unsolved terminal: period not set");
  return *period;
}

void validate_terminal(const std::string& pipe, const Terminal& terminal) {
  if (terminal.budget && *terminal.budget <= 0)
    throw ConfigError("pipe '" + pipe + "': budget must be positive");
  if (terminal.period && *terminal.period <= 0)
    throw ConfigError("pipe '" + pipe + "': period must be positive");
  if (terminal.period_fixed && !terminal.period)
    throw ConfigError("pipe '" + pipe + "': period_fixed requires a period");
  if (terminal.budget && terminal.period && *terminal.budget >= *terminal.period)
    throw ConfigError("pipe '" + pipe + "': C >= T (budget " + to_string(*terminal.budget) +
                      " must be smaller than period " + to_string(*terminal.period) + ")");
}

TaskGraph::TaskGraph(std::vector<Channel> channels, std::vector<Task> tasks, std::vector<Pipe> pipes,
                     std::vector<Edge> edges)
    : channels_(std::move(channels)), tasks_(std::move(tasks)), pipes_(std::move(pipes)), edges_(std::move(edges)) {
  validate();
}

void TaskGraph::validate() {
  channel_index_.clear();
  task_index_.clear();
  pipe_index_.clear();

  for (std::size_t i = 0; i < channels_.size(); ++i) {
    const Channel& ch = channels_[i];
    if (ch.id.empty()) schema_error("channel with empty id");
    if (!channel_index_.emplace(ch.id, i).second) throw ConfigError("duplicate channel id '" + ch.id + "'");
    if (ch.params.bandwidth && *ch.params.bandwidth <= 0)
      throw ConfigError("channel '" + ch.id + "': bandwidth must be positive or \"inf\"");
    require_non_negative(ch.params.overhead, "channel '" + ch.id + "' overhead");
  }
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const Task& t = tasks_[i];
    if (t.id.empty()) schema_error("task with empty id");
    if (!task_index_.emplace(t.id, i).second) throw ConfigError("duplicate task id '" + t.id + "'");
    require_non_negative(t.processing, "task '" + t.id + "' p");
    require_non_negative(t.input_size, "task '" + t.id + "' d_in");
    require_non_negative(t.output_size, "task '" + t.id + "' d_out");
  }
  for (std::size_t i = 0; i < pipes_.size(); ++i) {
    Pipe& p = pipes_[i];
    if (p.id.empty()) schema_error("pipe with empty id");
    if (!pipe_index_.emplace(p.id, i).second) throw ConfigError("duplicate pipe id '" + p.id + "'");
    if (!task_index_.count(p.task)) throw ConfigError("unknown reference: task '" + p.task + "' in pipe '" + p.id + "'");
    if (!channel_index_.count(p.input.channel))
      throw ConfigError("unknown reference: channel '" + p.input.channel + "' in pipe '" + p.id + "'");
    if (!channel_index_.count(p.output.channel))
      throw ConfigError("unknown reference: channel '" + p.output.channel + "' in pipe '" + p.id + "'");
    p.processing = task(p.task).processing;
    p.input.params = channel(p.input.channel).params;
    p.output.params = channel(p.output.channel).params;
    validate_terminal(p.id, p.terminal);
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (const Edge& e : edges_) {
    if (!pipe_index_.count(e.from)) throw ConfigError("unknown reference: pipe '" + e.from + "' in edge");
    if (!pipe_index_.count(e.to)) throw ConfigError("unknown reference: pipe '" + e.to + "' in edge");
    if (e.from == e.to) throw ConfigError("cyclic graph: self-edge on '" + e.from + "'");
    if (!seen.emplace(e.from, e.to).second)
      throw ConfigError("duplicate edge " + e.from + " -> " + e.to);
    require_non_negative(e.data_size, "edge " + e.from + " -> " + e.to + " data_size");
    const Pipe& producer = pipe(e.from);
    const Pipe& consumer = pipe(e.to);
    if (producer.output.channel != consumer.input.channel)
      throw ConfigError("edge " + e.from + " -> " + e.to + ": producer output channel '" + producer.output.channel +
                        "' differs from consumer input channel '" + consumer.input.channel + "'");
  }

  // Kahn's algorithm; anything left over sits on a cycle.
  std::vector<std::size_t> indegree(pipes_.size(), 0);
  for (const Edge& e : edges_) ++indegree[pipe_index(e.to)];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < pipes_.size(); ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    std::size_t n = ready.back();
    ready.pop_back();
    ++visited;
    for (const Edge& e : edges_) {
      if (e.from != pipes_[n].id) continue;
      if (--indegree[pipe_index(e.to)] == 0) ready.push_back(pipe_index(e.to));
    }
  }
  if (visited != pipes_.size()) throw ConfigError("cyclic graph");
}

bool TaskGraph::has_pipe(std::string_view id) const { return pipe_index_.find(id) != pipe_index_.end(); }

std::size_t TaskGraph::pipe_index(std::string_view id) const {
  auto it = pipe_index_.find(id);
  if (it == pipe_index_.end()) throw ConfigError("unknown reference: pipe '" + std::string(id) + "'");
  return it->second;
}

const Pipe& TaskGraph::pipe(std::string_view id) const { return pipes_[pipe_index(id)]; }

const Channel& TaskGraph::channel(std::string_view id) const {
  auto it = channel_index_.find(id);
  if (it == channel_index_.end()) throw ConfigError("unknown reference: channel '" + std::string(id) + "'");
  return channels_[it->second];
}

const Task& TaskGraph::task(std::string_view id) const {
  auto it = task_index_.find(id);
  if (it == task_index_.end()) throw ConfigError("unknown reference: task '" + std::string(id) + "'");
  return tasks_[it->second];
}

std::vector<std::size_t> TaskGraph::in_edges(std::string_view pipe) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i].to == pipe) out.push_back(i);
  return out;
}

std::vector<std::size_t> TaskGraph::out_edges(std::string_view pipe) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i].from == pipe) out.push_back(i);
  return out;
}

const Edge* TaskGraph::find_edge(std::string_view from, std::string_view to) const {
  for (const Edge& e : edges_)
    if (e.from == from && e.to == to) return &e;
  return nullptr;
}

std::vector<std::string> TaskGraph::sources() const {
  std::vector<std::string> out;
  for (const Pipe& p : pipes_)
    if (in_edges(p.id).empty()) out.push_back(p.id);
  return out;
}

std::vector<std::string> TaskGraph::sinks() const {
  std::vector<std::string> out;
  for (const Pipe& p : pipes_)
    if (out_edges(p.id).empty()) out.push_back(p.id);
  return out;
}

bool TaskGraph::is_path(const std::vector<std::string>& chain) const {
  if (chain.empty()) return false;
  std::set<std::string_view> used;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (!has_pipe(chain[i]) || !used.insert(chain[i]).second) return false;
    if (i > 0 && !find_edge(chain[i - 1], chain[i])) return false;
  }
  return true;
}

void TaskGraph::require_path(const std::vector<std::string>& chain) const {
  for (const std::string& id : chain)
    if (!has_pipe(id)) throw ConfigError("unknown reference: pipe '" + id + "' in chain");
  if (!is_path(chain)) throw ConfigError("chain is not a path: " + join(chain, ","));
}

ChannelParams TaskGraph::boundary_params(const Edge& edge) const { return pipe(edge.from).output.params; }

void TaskGraph::set_terminal(std::string_view pipe_id, Terminal terminal) {
  std::size_t i = pipe_index(pipe_id);
  validate_terminal(pipes_[i].id, terminal);
  pipes_[i].terminal = std::move(terminal);
}

void TaskGraph::set_pipe_sizes(std::string_view pipe_id, Rational input_size, Rational output_size) {
  std::size_t i = pipe_index(pipe_id);
  pipes_[i].input.data_size = std::move(input_size);
  pipes_[i].output.data_size = std::move(output_size);
}

TaskGraph aggregate_io_sizes(TaskGraph graph) {
  for (const Pipe& p : graph.pipes()) {
    const Task& task = graph.task(p.task);
    Rational in_size = 0;
    auto ins = graph.in_edges(p.id);
    if (ins.empty()) {
      in_size = task.input_size;
    } else {
      for (std::size_t e : ins) in_size += graph.edges()[e].data_size;
    }
    Rational out_size = task.output_size;
    if (graph.channel(p.output.channel).kind == ChannelKind::bus) {
      std::size_t fan_out = graph.out_edges(p.id).size();
      out_size *= std::max<std::size_t>(fan_out, 1);
    }
    graph.set_pipe_sizes(p.id, in_size, out_size);
  }
  return graph;
}

Rational delta(const ChannelParams& end, const Rational& data_size) {
  if (!end.bandwidth) return end.overhead;
  return data_size / *end.bandwidth + end.overhead;
}

Rational input_delta(const Pipe& pipe) { return delta(pipe.input.params, pipe.input.data_size); }
Rational output_delta(const Pipe& pipe) { return delta(pipe.output.params, pipe.output.data_size); }
Rational demand(const Pipe& pipe) { return input_delta(pipe) + pipe.processing + output_delta(pipe); }

bool validate_provisioned(const Pipe& pipe) {
  if (!pipe.terminal.budget) throw ConfigError("unsolved terminal: pipe '" + pipe.id + "' has no budget");
  return *pipe.terminal.budget >= demand(pipe);
}

SystemConfig load_config(std::string_view text) {
  json root = parse_exact(text);
  if (!root.is_object()) schema_error("top level must be an object");

  SystemConfig config;
  if (auto it = root.find("unit"); it != root.end()) {
    if (!it->is_string()) schema_error("'unit' must be a string");
    config.unit = it->get<std::string>();
  }

  std::vector<Channel> channels;
  for (const json& j : get_array(root, "channels")) {
    Channel ch;
    ch.id = get_string(j, "id", "channel");
    const std::string where = "channel '" + ch.id + "'";
    const json& bw = require(j, "bandwidth", where);
    if (bw.is_string() && (bw.get<std::string>() == "inf" || bw.get<std::string>() == "infinite")) {
      ch.params.bandwidth = std::nullopt;
    } else {
      ch.params.bandwidth = to_rational(bw, where + ".bandwidth");
    }
    ch.params.overhead = get_optional_rational(j, "overhead", where).value_or(0);
    std::string kind = j.contains("kind") ? get_string(j, "kind", where) : "shared-memory";
    if (kind == "shared-memory" || kind == "shm")
      ch.kind = ChannelKind::shared_memory;
    else if (kind == "bus")
      ch.kind = ChannelKind::bus;
    else
      schema_error(where + ": kind must be \"shared-memory\" or \"bus\"");
    channels.push_back(std::move(ch));
  }

  std::vector<Task> tasks;
  for (const json& j : get_array(root, "tasks")) {
    Task t;
    t.id = get_string(j, "id", "task");
    const std::string where = "task '" + t.id + "'";
    t.processing = get_rational(j, "p", where);
    t.output_size = get_optional_rational(j, "d_out", where).value_or(0);
    t.input_size = get_optional_rational(j, "d_in", where).value_or(0);
    tasks.push_back(std::move(t));
  }

  std::vector<Pipe> pipes;
  for (const json& j : get_array(root, "pipes")) {
    Pipe p;
    p.id = get_string(j, "id", "pipe");
    const std::string where = "pipe '" + p.id + "'";
    p.task = get_string(j, "task", where);
    p.input.channel = get_string(j, "input_channel", where);
    p.output.channel = get_string(j, "output_channel", where);
    p.terminal.budget = get_optional_rational(j, "budget", where);
    p.terminal.period = get_optional_rational(j, "period", where);
    if (auto it = j.find("period_fixed"); it != j.end()) {
      if (!it->is_boolean()) schema_error(where + ": period_fixed must be a boolean");
      p.terminal.period_fixed = it->get<bool>();
    }
    pipes.push_back(std::move(p));
  }

  std::vector<Edge> edges;
  for (const json& j : get_array(root, "edges")) {
    Edge e;
    e.from = get_string(j, "from", "edge");
    e.to = get_string(j, "to", "edge");
    e.data_size = get_optional_rational(j, "data_size", "edge " + e.from + " -> " + e.to).value_or(0);
    edges.push_back(std::move(e));
  }

  config.graph = aggregate_io_sizes(TaskGraph(std::move(channels), std::move(tasks), std::move(pipes), std::move(edges)));

  std::set<std::string> constraint_ids;
  for (const json& j : get_array(root, "constraints")) {
    TimingConstraint c;
    std::string kind = get_string(j, "kind", "constraint");
    if (kind == "reaction")
      c.kind = Metric::reaction;
    else if (kind == "freshness")
      c.kind = Metric::freshness;
    else
      schema_error("constraint kind must be \"reaction\" or \"freshness\"");
    const json& chain = require(j, "chain", "constraint");
    if (!chain.is_array()) schema_error("constraint chain must be an array");
    for (const json& id : chain) {
      if (!id.is_string()) schema_error("constraint chain entries must be pipe ids");
      c.chain.push_back(id.get<std::string>());
    }
    if (c.chain.empty()) throw ConfigError("constraint chain must contain at least one pipe");
    c.bound = get_rational(j, "bound", "constraint");
    require_non_negative(c.bound, "constraint bound");
    c.id = j.contains("id") ? get_string(j, "id", "constraint") : default_constraint_id(c.kind, c.chain);
    if (!constraint_ids.insert(c.id).second) throw ConfigError("duplicate constraint id '" + c.id + "'");
    config.graph.require_path(c.chain);
    config.constraints.push_back(std::move(c));
  }
  return config;
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str());
}

std::string dump_config(const SystemConfig& config) {
  json root = json::object();
  root["unit"] = config.unit;
  const TaskGraph& g = config.graph;

  json channels = json::array();
  for (const Channel& ch : g.channels()) {
    channels.push_back({{"id", ch.id},
                        {"bandwidth", ch.params.bandwidth ? rational_json(*ch.params.bandwidth) : json("inf")},
                        {"overhead", rational_json(ch.params.overhead)},
                        {"kind", std::string(to_string(ch.kind))}});
  }
  root["channels"] = channels;

  json tasks = json::array();
  for (const Task& t : g.tasks()) {
    tasks.push_back({{"id", t.id},
                     {"p", rational_json(t.processing)},
                     {"d_in", rational_json(t.input_size)},
                     {"d_out", rational_json(t.output_size)}});
  }
  root["tasks"] = tasks;

  json pipes = json::array();
  for (const Pipe& p : g.pipes()) {
    json jp = {{"id", p.id}, {"task", p.task}, {"input_channel", p.input.channel}, {"output_channel", p.output.channel}};
    if (p.terminal.budget) jp["budget"] = rational_json(*p.terminal.budget);
    if (p.terminal.period) jp["period"] = rational_json(*p.terminal.period);
    if (p.terminal.period_fixed) jp["period_fixed"] = true;
    pipes.push_back(std::move(jp));
  }
  root["pipes"] = pipes;

  json edges = json::array();
  for (const Edge& e : g.edges())
    edges.push_back({{"from", e.from}, {"to", e.to}, {"data_size", rational_json(e.data_size)}});
  root["edges"] = edges;

  json constraints = json::array();
  for (const TimingConstraint& c : config.constraints) {
    constraints.push_back(
        {{"id", c.id}, {"kind", std::string(to_string(c.kind))}, {"chain", c.chain}, {"bound", rational_json(c.bound)}});
  }
  root["constraints"] = constraints;
  return root.dump(2) + "\n";
}

}  // namespace pipelat
