#pragma once

#include "pipelat/rational.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pipelat {

/// Malformed or inconsistent input (bad schema, unknown reference, cycle,
/// chain that is not a path, budget >= period). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ChannelKind { shared_memory, bus };

/// Pipe-end parameters: bandwidth W (nullopt means infinite) and the
/// constant protocol overhead delta.
struct ChannelParams {
  std::optional<Rational> bandwidth;
  Rational overhead{0};

  bool operator==(const ChannelParams&) const = default;
};

struct Channel {
  std::string id;
  ChannelParams params;
  ChannelKind kind = ChannelKind::shared_memory;

  bool operator==(const Channel&) const = default;
};

struct Task {
  std::string id;
  Rational processing{0};  // p, uninterrupted processing time
  Rational input_size{0};  // raw sensor input size, used only when the pipe has no in-edges
  Rational output_size{0};

  bool operator==(const Task&) const = default;
};

struct Terminal {
  std::optional<Rational> budget;
  std::optional<Rational> period;
  bool period_fixed = false;

  bool solved() const { return budget.has_value() && period.has_value(); }
  const Rational& C() const;
  const Rational& T() const;

  bool operator==(const Terminal&) const = default;
};

struct PipeEnd {
  std::string channel;
  ChannelParams params;
  Rational data_size{0};  // aggregated d_i on input, effective d_o on output

  bool operator==(const PipeEnd&) const = default;
};

/// A task's timing envelope: input end, terminal (C, T), output end. The
/// channel parameters and data sizes are resolved copies, so analysis can
/// work on a Pipe alone.
struct Pipe {
  std::string id;
  std::string task;
  Rational processing{0};
  PipeEnd input;
  PipeEnd output;
  Terminal terminal;

  bool operator==(const Pipe&) const = default;
};

struct Edge {
  std::string from;
  std::string to;
  Rational data_size{0};

  bool operator==(const Edge&) const = default;
};

enum class Metric { reaction, freshness };

struct TimingConstraint {
  std::string id;
  Metric kind = Metric::reaction;
  std::vector<std::string> chain;
  Rational bound{0};

  bool operator==(const TimingConstraint&) const = default;
};

std::string_view to_string(Metric metric);
std::string_view to_string(ChannelKind kind);

/// Acyclic producer/consumer graph over pipes. Construction validates every
/// structural invariant and resolves channel parameters into the pipes.
class TaskGraph {
 public:
  TaskGraph() = default;
  TaskGraph(std::vector<Channel> channels, std::vector<Task> tasks, std::vector<Pipe> pipes,
            std::vector<Edge> edges);

  const std::vector<Channel>& channels() const { return channels_; }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<Pipe>& pipes() const { return pipes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_pipe(std::string_view id) const;
  const Pipe& pipe(std::string_view id) const;
  std::size_t pipe_index(std::string_view id) const;
  const Channel& channel(std::string_view id) const;
  const Task& task(std::string_view id) const;

  /// Indices into edges(), in declaration order.
  std::vector<std::size_t> in_edges(std::string_view pipe) const;
  std::vector<std::size_t> out_edges(std::string_view pipe) const;
  const Edge* find_edge(std::string_view from, std::string_view to) const;

  std::vector<std::string> sources() const;
  std::vector<std::string> sinks() const;

  bool is_path(const std::vector<std::string>& chain) const;
  /// Throws ConfigError("chain is not a path: ...") unless `chain` is a
  /// non-empty simple directed path.
  void require_path(const std::vector<std::string>& chain) const;

  /// Boundary channel of the edge from -> to (the producer's output channel).
  ChannelParams boundary_params(const Edge& edge) const;

  /// Replaces one pipe's terminal, re-checking 0 < C < T.
  void set_terminal(std::string_view pipe, Terminal terminal);
  void set_pipe_sizes(std::string_view pipe, Rational input_size, Rational output_size);

  bool operator==(const TaskGraph&) const = default;

 private:
  void validate();

  std::vector<Channel> channels_;
  std::vector<Task> tasks_;
  std::vector<Pipe> pipes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::size_t, std::less<>> pipe_index_;
  std::map<std::string, std::size_t, std::less<>> channel_index_;
  std::map<std::string, std::size_t, std::less<>> task_index_;
};

void validate_terminal(const std::string& pipe, const Terminal& terminal);

struct SystemConfig {
  std::string unit = "units";
  TaskGraph graph;
  std::vector<TimingConstraint> constraints;

  bool operator==(const SystemConfig&) const = default;
};

/// Parses and validates a configuration document; aggregated input sizes
/// and effective output sizes are computed.
SystemConfig load_config(std::string_view text);
SystemConfig load_config_file(const std::string& path);

/// Serializes back to the configuration schema; all numbers are written as
/// exact strings so reloading yields an identical SystemConfig.
std::string dump_config(const SystemConfig& config);

/// Recomputes every pipe's input size (sum of in-edge sizes, or the task's
/// sensor input size for sources) and output size (one copy on shared
/// memory, one copy per consumer on a bus).
TaskGraph aggregate_io_sizes(TaskGraph graph);

/// d / W + delta; delta alone when W is infinite.
Rational delta(const ChannelParams& end, const Rational& data_size);
Rational input_delta(const Pipe& pipe);
Rational output_delta(const Pipe& pipe);
/// Delta_in + p + Delta_out: the budget one full read/process/write job needs.
Rational demand(const Pipe& pipe);

/// True iff the solved budget covers one full read/process/write job.
bool validate_provisioned(const Pipe& pipe);

}  // namespace pipelat
