#pragma once

#include "pipelat/model.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace pipelat {

/// An analysis precondition does not hold (unsolved terminal, pipe not
/// provisioned for a simplified bound, read/write stages exceed the budget).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How chain bounds are composed.
///  - general: per-pipe latency plus clamped worst-case scheduling latency
///    at every boundary. Provisioned pipes use L = C, others the floor/mod
///    latency of single_pipe_latency.
///  - simplified: provisioned pipes only; pairwise T + C - delta forms and
///    their increments, delta kept everywhere.
///  - zero_comm: simplified with every boundary delta taken as 0.
///  - paper_compat: simplified first pair (delta kept), zero-comm
///    increments for every appended pipe.
enum class AnalysisMode { general, simplified, zero_comm, paper_compat };

std::string_view to_string(AnalysisMode mode);
AnalysisMode parse_mode(std::string_view text);

enum class PriorityCase { consumer_higher, producer_higher };

std::string_view to_string(PriorityCase c);

/// Producer/consumer ordering used by every two-pipe formula. Equal periods
/// take the producer_higher ("otherwise") branch.
PriorityCase priority_case(const Pipe& producer, const Pipe& consumer);

/// The data crossing one producer -> consumer boundary.
struct Boundary {
  ChannelParams channel;
  Rational data_size{0};
};

Boundary boundary_of(const TaskGraph& graph, const Edge& edge);

struct BoundaryLatency {
  std::string producer;
  std::string consumer;
  PriorityCase priority = PriorityCase::consumer_higher;
  Rational value{0};
};

struct AnalysisResult {
  std::vector<std::string> chain;
  Metric metric = Metric::reaction;
  AnalysisMode mode = AnalysisMode::general;
  Rational value{0};
  std::vector<Rational> pipe_latencies;    // per pipe, same order as chain
  std::vector<BoundaryLatency> boundaries;  // per consecutive pair
  // value = increments[0] + increments[1] + ...; increments[0] covers the
  // first pipe (length 1) or the first pair.
  std::vector<Rational> increments;
  bool composition_extension = false;  // freshness over >= 3 pipes
};

/// Floor/mod worst-case latency of one job. Requires a solved terminal and
/// Delta_in + Delta_out <= C.
Rational single_pipe_latency(const Pipe& pipe);

/// L = C; requires validate_provisioned(pipe).
Rational single_pipe_latency_simplified(const Pipe& pipe);

/// Latency a chain composition charges for one pipe in general mode.
Rational chain_pipe_latency(const Pipe& pipe);

BoundaryLatency sched_latency(const Pipe& producer, const Pipe& consumer, const Boundary& boundary);

Rational pair_reaction(const Pipe& producer, const Pipe& consumer, const Boundary& boundary, AnalysisMode mode);

/// Growth of the reaction bound when `appended` is attached after `tail`.
Rational reaction_increment(const Pipe& tail, const Pipe& appended, const Boundary& boundary, AnalysisMode mode);

/// Pairwise worst-case freshness; provisioned pipes only.
Rational pair_freshness(const Pipe& producer, const Pipe& consumer, const Boundary& boundary);

AnalysisResult chain_reaction(const TaskGraph& graph, const std::vector<std::string>& chain, AnalysisMode mode);

/// Freshness over a chain. Chains of three or more pipes add, per appended
/// pipe, the pairwise freshness minus the tail's budget; this composition
/// rule is an extension and is flagged in the result.
AnalysisResult chain_freshness(const TaskGraph& graph, const std::vector<std::string>& chain);

AnalysisResult analyze_constraint(const TaskGraph& graph, const TimingConstraint& constraint, AnalysisMode mode);

}  // namespace pipelat
