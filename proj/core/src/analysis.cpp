#include "pipelat/analysis.hpp"

namespace pipelat {

namespace {

void require_solved(const Pipe& pipe) {
  if (!pipe.terminal.solved()) throw AnalysisError("unsolved terminal: pipe '" + pipe.id + "'");
}

void require_provisioned(const Pipe& pipe) {
  require_solved(pipe);
  if (!validate_provisioned(pipe))
    throw AnalysisError("pipe '" + pipe.id + "' is not provisioned: budget " + to_string(pipe.terminal.C()) +
                        " < demand " + to_string(demand(pipe)));
}

Rational boundary_delta(const Boundary& b, AnalysisMode mode) {
  return mode == AnalysisMode::zero_comm ? Rational(0) : delta(b.channel, b.data_size);
}

// T^c + C^p - delta if the consumer is faster, else T^p + C^c - delta.
Rational simplified_pair(const Pipe& p, const Pipe& c, const Rational& d) {
  if (priority_case(p, c) == PriorityCase::consumer_higher) return c.terminal.T() + p.terminal.C() - d;
  return p.terminal.T() + c.terminal.C() - d;
}

}  // namespace

std::string_view to_string(AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::general: return "general";
    case AnalysisMode::simplified: return "simplified";
    case AnalysisMode::zero_comm: return "zero-comm";
    case AnalysisMode::paper_compat: return "paper-compat";
  }
  return "?";
}

AnalysisMode parse_mode(std::string_view text) {
  if (text == "general") return AnalysisMode::general;
  if (text == "simplified") return AnalysisMode::simplified;
  if (text == "zero-comm") return AnalysisMode::zero_comm;
  if (text == "paper-compat") return AnalysisMode::paper_compat;
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

std::string_view to_string(PriorityCase c) {
  return c == PriorityCase::consumer_higher ? "consumer-higher-priority" : "producer-higher-priority";
}

PriorityCase priority_case(const Pipe& producer, const Pipe& consumer) {
  return consumer.terminal.T() < producer.terminal.T() ? PriorityCase::consumer_higher
                                                       : PriorityCase::producer_higher;
}

Boundary boundary_of(const TaskGraph& graph, const Edge& edge) {
  return Boundary{graph.boundary_params(edge), edge.data_size};
}

Rational single_pipe_latency(const Pipe& pipe) {
  require_solved(pipe);
  const Rational& C = pipe.terminal.C();
  const Rational& T = pipe.terminal.T();
  if (input_delta(pipe) + output_delta(pipe) > C)
    throw AnalysisError("pipe '" + pipe.id + "': read and write stages exceed the budget");
  Rational work = demand(pipe);
  Integer whole = floor_integer(work / C);
  Rational rest = work - Rational(whole) * C;
  return Rational(whole) * T + rest;
}

Rational single_pipe_latency_simplified(const Pipe& pipe) {
  require_provisioned(pipe);
  return pipe.terminal.C();
}

Rational chain_pipe_latency(const Pipe& pipe) {
  require_solved(pipe);
  return validate_provisioned(pipe) ? pipe.terminal.C() : single_pipe_latency(pipe);
}

BoundaryLatency sched_latency(const Pipe& producer, const Pipe& consumer, const Boundary& boundary) {
  require_solved(producer);
  require_solved(consumer);
  BoundaryLatency out{producer.id, consumer.id, priority_case(producer, consumer), 0};
  const Pipe& waited_on = out.priority == PriorityCase::consumer_higher ? consumer : producer;
  Rational raw = waited_on.terminal.T() - waited_on.terminal.C() - delta(boundary.channel, boundary.data_size);
  out.value = raw < 0 ? Rational(0) : raw;
  return out;
}

Rational pair_reaction(const Pipe& producer, const Pipe& consumer, const Boundary& boundary, AnalysisMode mode) {
  if (mode == AnalysisMode::general) {
    return chain_pipe_latency(producer) + sched_latency(producer, consumer, boundary).value +
           chain_pipe_latency(consumer);
  }
  require_provisioned(producer);
  require_provisioned(consumer);
  return simplified_pair(producer, consumer, boundary_delta(boundary, mode));
}

Rational reaction_increment(const Pipe& tail, const Pipe& appended, const Boundary& boundary, AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::general:
      return pair_reaction(tail, appended, boundary, mode) - chain_pipe_latency(tail);
    case AnalysisMode::simplified:
      return pair_reaction(tail, appended, boundary, mode) - tail.terminal.C();
    case AnalysisMode::zero_comm:
    case AnalysisMode::paper_compat:
      require_provisioned(tail);
      require_provisioned(appended);
      if (priority_case(tail, appended) == PriorityCase::consumer_higher) return appended.terminal.T();
      return tail.terminal.T() - tail.terminal.C() + appended.terminal.C();
  }
  return 0;
}

Rational pair_freshness(const Pipe& producer, const Pipe& consumer, const Boundary& boundary) {
  require_provisioned(producer);
  require_provisioned(consumer);
  Rational d = delta(boundary.channel, boundary.data_size);
  if (priority_case(producer, consumer) == PriorityCase::consumer_higher) return 2 * producer.terminal.T() - d;
  return producer.terminal.T() + consumer.terminal.C() - d;
}

AnalysisResult chain_reaction(const TaskGraph& graph, const std::vector<std::string>& chain, AnalysisMode mode) {
  graph.require_path(chain);
  AnalysisResult result;
  result.chain = chain;
  result.metric = Metric::reaction;
  result.mode = mode;

  for (const std::string& id : chain) {
    const Pipe& p = graph.pipe(id);
    result.pipe_latencies.push_back(mode == AnalysisMode::general ? chain_pipe_latency(p)
                                                                  : single_pipe_latency_simplified(p));
  }
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const Edge* e = graph.find_edge(chain[i - 1], chain[i]);
    result.boundaries.push_back(sched_latency(graph.pipe(chain[i - 1]), graph.pipe(chain[i]), boundary_of(graph, *e)));
  }

  if (chain.size() == 1) {
    result.increments.push_back(result.pipe_latencies.front());
  } else {
    const Edge* first = graph.find_edge(chain[0], chain[1]);
    AnalysisMode pair_mode = mode == AnalysisMode::paper_compat ? AnalysisMode::simplified : mode;
    result.increments.push_back(
        pair_reaction(graph.pipe(chain[0]), graph.pipe(chain[1]), boundary_of(graph, *first), pair_mode));
    for (std::size_t i = 2; i < chain.size(); ++i) {
      const Edge* e = graph.find_edge(chain[i - 1], chain[i]);
      result.increments.push_back(
          reaction_increment(graph.pipe(chain[i - 1]), graph.pipe(chain[i]), boundary_of(graph, *e), mode));
    }
  }
  for (const Rational& inc : result.increments) result.value += inc;
  return result;
}

AnalysisResult chain_freshness(const TaskGraph& graph, const std::vector<std::string>& chain) {
  graph.require_path(chain);
  AnalysisResult result;
  result.chain = chain;
  result.metric = Metric::freshness;
  result.mode = AnalysisMode::simplified;
  result.composition_extension = chain.size() >= 3;

  for (const std::string& id : chain) result.pipe_latencies.push_back(single_pipe_latency_simplified(graph.pipe(id)));
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const Edge* e = graph.find_edge(chain[i - 1], chain[i]);
    result.boundaries.push_back(sched_latency(graph.pipe(chain[i - 1]), graph.pipe(chain[i]), boundary_of(graph, *e)));
  }

  if (chain.size() == 1) {
    result.increments.push_back(result.pipe_latencies.front());
  } else {
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const Edge* e = graph.find_edge(chain[i - 1], chain[i]);
      Rational pair = pair_freshness(graph.pipe(chain[i - 1]), graph.pipe(chain[i]), boundary_of(graph, *e));
      result.increments.push_back(i == 1 ? pair : pair - result.pipe_latencies[i - 1]);
    }
  }
  for (const Rational& inc : result.increments) result.value += inc;
  return result;
}

AnalysisResult analyze_constraint(const TaskGraph& graph, const TimingConstraint& constraint, AnalysisMode mode) {
  return constraint.kind == Metric::reaction ? chain_reaction(graph, constraint.chain, mode)
                                             : chain_freshness(graph, constraint.chain);
}

}  // namespace pipelat
