#pragma once

#include "pipelat/model.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pipelat {

using Tick = std::int64_t;

/// Sporadic-server accounting for one pipe terminal.
struct ServerState {
  std::string pipe;
  Tick capacity = 0;  // C
  Tick period = 0;    // T
  Tick remaining = 0;
  std::deque<std::pair<Tick, Tick>> replenishments;  // (time, amount), time non-decreasing

  Tick pending() const;
  bool conserved() const { return remaining + pending() == capacity; }
};

ServerState make_server(std::string pipe, Tick capacity, Tick period);

/// Charges `consumed` against the remaining budget and queues its return one
/// period after `activation`, the time the server last became ready with
/// budget. Throws std::invalid_argument if consumed exceeds the remaining
/// budget.
ServerState sporadic_replenish(ServerState state, Tick consumed, Tick activation);

enum class EventKind { release, start, preempt, resume, read_done, write_done, replenish, budget_exhausted };

std::string_view to_string(EventKind kind);

struct SimEvent {
  Tick time = 0;
  std::string pipe;
  EventKind kind = EventKind::release;
};

/// One contiguous stretch of execution on the processor.
struct ExecutionSlice {
  std::string pipe;
  Tick start = 0;
  Tick end = 0;
};

struct LineageTag {
  std::uint32_t chain = 0;
  std::uint64_t id = 0;

  auto operator<=>(const LineageTag&) const = default;
};

struct JobRecord {
  std::string pipe;
  Tick start = 0;
  Tick finish = 0;
  std::vector<LineageTag> input;   // tags taken from the read-time snapshot
  std::vector<LineageTag> output;  // tags published by the write
};

struct LineageRecord {
  std::uint64_t id = 0;
  Tick release = 0;
  std::optional<Tick> first_output;
  std::optional<Tick> last_output;

  bool reachable() const { return first_output.has_value(); }
};

struct ChainReport {
  std::vector<std::string> chain;
  /// Inputs whose fate is settled by the horizon, by id. Inputs that could
  /// still reach the sink later are left out and counted in `truncated`.
  std::vector<LineageRecord> records;
  std::uint64_t truncated = 0;
  std::uint64_t sink_outputs = 0;
  std::uint64_t reachable = 0;
  std::optional<Tick> max_reaction;
  std::optional<Tick> max_freshness;
};

struct SimReport {
  Rational tick{1};
  Tick horizon = 0;
  std::map<std::string, Tick> offsets;
  std::vector<ChainReport> chains;
  std::map<std::string, std::uint64_t> completed_jobs;
  Tick background_time = 0;  // idle time absorbed by the background load
  std::vector<SimEvent> events;
  std::vector<ExecutionSlice> slices;
  std::vector<JobRecord> jobs;

  Rational to_time(Tick t) const { return Rational(t) * tick; }
};

enum class OffsetMode { zero, random, given };

struct SimOptions {
  Rational horizon{0};
  std::optional<Rational> tick;
  OffsetMode offset_mode = OffsetMode::zero;
  std::map<std::string, Rational> offsets;  // used with OffsetMode::given, missing pipes get 0
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> chains;
  bool background_load = false;
  bool record_trace = false;  // events, slices and job records
};

/// Preemptive rate-monotonic simulation of sporadic servers on one
/// processor. Jobs read every input register at their first dispatch, then
/// process, then write to every output register. Each chain's source jobs
/// stamp a fresh lineage id; ids follow the chain's own edges to its sink.
///
/// Without an explicit tick the tick is the exact gcd of all budgets,
/// periods, phase lengths, offsets and the horizon. With one, budgets and
/// periods must be multiples of it and phase lengths are rounded up.
/// Throws ConfigError on tick misalignment, a horizon shorter than twice
/// the largest period, unsolved terminals or a chain that is not a path.
SimReport run(const TaskGraph& graph, const SimOptions& options);

struct MeasuredSeries {
  std::vector<std::uint64_t> ids;
  std::vector<Rational> reaction;
  std::vector<Rational> freshness;
};

/// Reaction and freshness of every reachable input of one chain, in the
/// configuration's time unit.
MeasuredSeries measure(const SimReport& report, const std::vector<std::string>& chain);

/// input_id,release,first_output,last_output,reaction,freshness,reachable
void write_lineage_csv(std::ostream& out, const SimReport& report, std::size_t chain_index);
/// time,pipe,event
void write_events_csv(std::ostream& out, const SimReport& report);

}  // namespace pipelat
