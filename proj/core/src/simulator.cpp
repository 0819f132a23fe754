#include "pipelat/simulator.hpp"

#include "pipelat/four_slot.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace pipelat {

Tick ServerState::pending() const {
  Tick sum = 0;
  for (const auto& r : replenishments) sum += r.second;
  return sum;
}

ServerState make_server(std::string pipe, Tick capacity, Tick period) {
  ServerState s;
  s.pipe = std::move(pipe);
  s.capacity = capacity;
  s.period = period;
  s.remaining = capacity;
  return s;
}

ServerState sporadic_replenish(ServerState state, Tick consumed, Tick activation) {
  if (consumed < 0 || consumed > state.remaining)
    throw std::invalid_argument("sporadic_replenish: consumed exceeds the remaining budget");
  if (consumed == 0) return state;
  state.remaining -= consumed;
  state.replenishments.emplace_back(activation + state.period, consumed);
  return state;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::release: return "release";
    case EventKind::start: return "start";
    case EventKind::preempt: return "preempt";
    case EventKind::resume: return "resume";
    case EventKind::read_done: return "read_done";
    case EventKind::write_done: return "write_done";
    case EventKind::replenish: return "replenish";
    case EventKind::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct Item {
  std::vector<LineageTag> tags;
};

using Register = FourSlotRegister<Item, PlainCell>;

struct Membership {
  std::uint32_t chain;
  std::size_t position;
  std::size_t edge;  // chain edge into this pipe, npos at the chain head
};

struct Server {
  ServerState state;
  std::size_t rank = 0;  // 0 is the highest priority
  Tick phase_length[3] = {0, 0, 0};
  Tick next_release = 0;
  std::uint64_t pending = 0;  // released, not yet started
  bool active = false;
  Tick activation = 0;

  bool in_job = false;
  int phase = 0;
  Tick remaining = 0;
  Tick job_start = 0;
  std::vector<LineageTag> job_input;
  std::vector<LineageTag> job_output;

  std::vector<std::size_t> in_edges;
  std::vector<std::size_t> out_edges;
  std::vector<Membership> chains;
  std::vector<std::uint32_t> sink_of;

  bool has_work() const { return in_job || pending > 0; }
};

Tick ticks_exact(const Rational& value, const Rational& tick, const std::string& what) {
  Rational q = value / tick;
  if (denominator(q) != 1)
    throw ConfigError("tick misalignment: " + what + " = " + to_string(value) + " is not a multiple of tick " +
                      to_string(tick));
  return to_int64(q);
}

Tick ticks_ceil(const Rational& value, const Rational& tick) {
  return to_int64(Rational(ceil_integer(value / tick)));
}

class Simulation {
 public:
  Simulation(const TaskGraph& graph, const SimOptions& options) : graph_(graph), options_(options) {
    for (const Pipe& p : graph.pipes())
      if (!p.terminal.solved()) throw ConfigError("unsolved terminal: pipe '" + p.id + "'");
    for (const auto& chain : options.chains) graph.require_path(chain);

    Rational max_period = 0;
    for (const Pipe& p : graph.pipes()) max_period = std::max(max_period, p.terminal.T());
    if (options.horizon < 2 * max_period || options.horizon < 0)
      throw ConfigError("horizon shorter than 2·max period (" + to_string(options.horizon) + " < " +
                        to_string(2 * max_period) + ")");

    choose_tick();
    build_servers();
    build_chains();
  }

  SimReport run() {
    Tick t = 0;
    int running = -1;
    bool exhausted = false;
    for (;;) {
      if (running >= 0) {
        settle(running, t);
        if (exhausted && servers_[running].state.remaining == 0)
          emit(t, running, EventKind::budget_exhausted);
      }
      exhausted = false;

      for (std::size_t i = 0; i < servers_.size(); ++i) {
        Server& s = servers_[i];
        while (!s.state.replenishments.empty() && s.state.replenishments.front().first <= t) {
          s.state.remaining += s.state.replenishments.front().second;
          s.state.replenishments.pop_front();
          emit(t, static_cast<int>(i), EventKind::replenish);
        }
      }
      for (std::size_t i = 0; i < servers_.size(); ++i) {
        Server& s = servers_[i];
        if (s.next_release == t && t < horizon_) {
          ++s.pending;
          s.next_release += s.state.period;
          emit(t, static_cast<int>(i), EventKind::release);
        }
      }

      for (;;) {
        for (Server& s : servers_) {
          bool eligible = s.has_work() && s.state.remaining > 0;
          if (eligible && !s.active) {
            s.active = true;
            s.activation = t;
          } else if (!eligible) {
            s.active = false;
          }
        }
        int best = -1;
        for (std::size_t i = 0; i < servers_.size(); ++i)
          if (servers_[i].active && (best < 0 || servers_[i].rank < servers_[best].rank)) best = static_cast<int>(i);
        if (best != running) {
          if (running >= 0 && servers_[running].active && servers_[running].in_job)
            emit(t, running, EventKind::preempt);
          running = best;
          if (running >= 0) {
            if (servers_[running].in_job)
              emit(t, running, EventKind::resume);
            else
              start_job(running, t);
          }
        } else if (running >= 0 && !servers_[running].in_job) {
          start_job(running, t);
        }
        if (running < 0 || !settle(running, t)) break;
      }

      if (t >= horizon_) break;

      Tick next = horizon_;
      for (const Server& s : servers_) {
        next = std::min(next, s.next_release);
        if (!s.state.replenishments.empty()) next = std::min(next, s.state.replenishments.front().first);
      }
      if (running >= 0) {
        const Server& s = servers_[running];
        next = std::min(next, t + std::min(s.remaining, s.state.remaining));
      }
      const Tick dt = next - t;
      if (running >= 0) {
        Server& s = servers_[running];
        s.remaining -= dt;
        s.state = sporadic_replenish(std::move(s.state), dt, s.activation);
        exhausted = s.state.remaining == 0;
        if (options_.record_trace && dt > 0) {
          const std::string& id = graph_.pipes()[static_cast<std::size_t>(running)].id;
          if (!report_.slices.empty() && report_.slices.back().pipe == id && report_.slices.back().end == t)
            report_.slices.back().end = next;
          else
            report_.slices.push_back({id, t, next});
        }
      } else if (options_.background_load) {
        report_.background_time += dt;
      }
      t = next;
    }
    finish();
    return std::move(report_);
  }

 private:
  void choose_tick() {
    std::vector<Rational> phases;
    if (options_.tick) {
      tick_ = *options_.tick;
      if (tick_ <= 0) throw ConfigError("tick must be positive");
    } else {
      Rational g = options_.horizon;
      for (const Pipe& p : graph_.pipes()) {
        for (const Rational& v : {p.terminal.C(), p.terminal.T(), input_delta(p), p.processing, output_delta(p)})
          g = rational_gcd(g, v);
      }
      if (options_.offset_mode == OffsetMode::given)
        for (const auto& [pipe, offset] : options_.offsets) g = rational_gcd(g, offset);
      tick_ = g == 0 ? Rational(1) : g;
    }
    report_.tick = tick_;
    horizon_ = ticks_ceil(options_.horizon, tick_);
    report_.horizon = horizon_;
  }

  void build_servers() {
    std::vector<const Pipe*> order;
    for (const Pipe& p : graph_.pipes()) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](const Pipe* a, const Pipe* b) {
      if (a->terminal.T() != b->terminal.T()) return a->terminal.T() < b->terminal.T();
      return a->id < b->id;
    });

    std::mt19937_64 rng(options_.seed);
    for (const Pipe& p : graph_.pipes()) {
      Server s;
      s.state = make_server(p.id, ticks_exact(p.terminal.C(), tick_, p.id + " budget"),
                            ticks_exact(p.terminal.T(), tick_, p.id + " period"));
      s.rank = static_cast<std::size_t>(std::find(order.begin(), order.end(), &p) - order.begin());
      s.phase_length[0] = ticks_ceil(input_delta(p), tick_);
      s.phase_length[1] = ticks_ceil(p.processing, tick_);
      s.phase_length[2] = ticks_ceil(output_delta(p), tick_);
      Tick offset = 0;
      if (options_.offset_mode == OffsetMode::random) {
        offset = std::uniform_int_distribution<Tick>(0, s.state.period - 1)(rng);
      } else if (options_.offset_mode == OffsetMode::given) {
        if (auto it = options_.offsets.find(p.id); it != options_.offsets.end()) {
          if (it->second < 0) throw ConfigError("negative offset for pipe '" + p.id + "'");
          offset = ticks_ceil(it->second, tick_);
        }
      }
      s.next_release = offset;
      s.in_edges = graph_.in_edges(p.id);
      s.out_edges = graph_.out_edges(p.id);
      report_.offsets[p.id] = offset;
      report_.completed_jobs[p.id] = 0;
      servers_.push_back(std::move(s));
    }
    for (const auto& [pipe, offset] : options_.offsets)
      if (options_.offset_mode == OffsetMode::given && !graph_.has_pipe(pipe))
        throw ConfigError("unknown reference: offset for pipe '" + pipe + "'");
    registers_.assign(graph_.edges().size(), Register{});
  }

  void build_chains() {
    for (std::uint32_t c = 0; c < options_.chains.size(); ++c) {
      const auto& chain = options_.chains[c];
      for (std::size_t k = 0; k < chain.size(); ++k) {
        std::size_t edge = npos;
        if (k > 0) {
          const Edge* e = graph_.find_edge(chain[k - 1], chain[k]);
          edge = static_cast<std::size_t>(e - graph_.edges().data());
        }
        servers_[graph_.pipe_index(chain[k])].chains.push_back({c, k, edge});
      }
      servers_[graph_.pipe_index(chain.back())].sink_of.push_back(c);
      ChainReport r;
      r.chain = chain;
      report_.chains.push_back(std::move(r));
      releases_.emplace_back();
      first_.emplace_back();
      last_.emplace_back();
    }
  }

  void emit(Tick t, int server, EventKind kind) {
    if (options_.record_trace)
      report_.events.push_back({t, graph_.pipes()[static_cast<std::size_t>(server)].id, kind});
  }

  void start_job(int index, Tick t) {
    Server& s = servers_[index];
    --s.pending;
    s.in_job = true;
    s.phase = 0;
    s.remaining = s.phase_length[0];
    s.job_start = t;
    emit(t, index, EventKind::start);

    // Implicit communication: every input is copied once, here, and the job
    // works on the copies until it writes.
    std::vector<Item> snapshot;
    snapshot.reserve(s.in_edges.size());
    s.job_input.clear();
    for (std::size_t e : s.in_edges) {
      snapshot.push_back(registers_[e].read());
      s.job_input.insert(s.job_input.end(), snapshot.back().tags.begin(), snapshot.back().tags.end());
    }
    std::sort(s.job_input.begin(), s.job_input.end());
    s.job_input.erase(std::unique(s.job_input.begin(), s.job_input.end()), s.job_input.end());

    s.job_output.clear();
    for (const Membership& m : s.chains) {
      if (m.position == 0) {
        s.job_output.push_back({m.chain, releases_[m.chain].size()});
        releases_[m.chain].push_back(t);
        first_[m.chain].emplace_back();
        last_[m.chain].emplace_back();
        continue;
      }
      std::size_t slot = static_cast<std::size_t>(std::find(s.in_edges.begin(), s.in_edges.end(), m.edge) -
                                                  s.in_edges.begin());
      for (const LineageTag& tag : snapshot[slot].tags)
        if (tag.chain == m.chain) s.job_output.push_back(tag);
    }
    std::sort(s.job_output.begin(), s.job_output.end());
  }

  // Completes every phase of the running job that has no time left.
  // Returns true if the job finished.
  bool settle(int index, Tick t) {
    Server& s = servers_[index];
    while (s.in_job && s.remaining == 0) {
      if (s.phase == 0) {
        emit(t, index, EventKind::read_done);
      } else if (s.phase == 2) {
        emit(t, index, EventKind::write_done);
        for (std::size_t e : s.out_edges) registers_[e].write(Item{s.job_output});
        for (std::uint32_t c : s.sink_of) {
          ++report_.chains[c].sink_outputs;
          for (const LineageTag& tag : s.job_output) {
            if (tag.chain != c) continue;
            if (!first_[c][tag.id]) first_[c][tag.id] = t;
            last_[c][tag.id] = t;
          }
        }
        const std::string& id = graph_.pipes()[static_cast<std::size_t>(index)].id;
        ++report_.completed_jobs[id];
        if (options_.record_trace) report_.jobs.push_back({id, s.job_start, t, s.job_input, s.job_output});
        s.in_job = false;
        return true;
      }
      ++s.phase;
      s.remaining = s.phase_length[s.phase];
    }
    return false;
  }

  void finish() {
    for (std::uint32_t c = 0; c < report_.chains.size(); ++c) {
      ChainReport& r = report_.chains[c];
      std::uint64_t alive = releases_[c].size();
      for (std::size_t k = 0; k < r.chain.size(); ++k) {
        const Server& s = servers_[graph_.pipe_index(r.chain[k])];
        if (s.in_job)
          for (const LineageTag& tag : s.job_output)
            if (tag.chain == c) alive = std::min(alive, tag.id);
        if (k + 1 < r.chain.size()) {
          const Edge* e = graph_.find_edge(r.chain[k], r.chain[k + 1]);
          Item latest = registers_[static_cast<std::size_t>(e - graph_.edges().data())].read();
          for (const LineageTag& tag : latest.tags)
            if (tag.chain == c) alive = std::min(alive, tag.id);
        }
      }
      for (std::uint64_t id = 0; id < alive; ++id) {
        LineageRecord rec{id, releases_[c][id], first_[c][id], last_[c][id]};
        if (rec.reachable()) {
          ++r.reachable;
          Tick reaction = *rec.first_output - rec.release;
          Tick freshness = *rec.last_output - rec.release;
          r.max_reaction = std::max(r.max_reaction.value_or(reaction), reaction);
          r.max_freshness = std::max(r.max_freshness.value_or(freshness), freshness);
        }
        r.records.push_back(rec);
      }
      r.truncated = releases_[c].size() - alive;
    }
  }

  const TaskGraph& graph_;
  const SimOptions& options_;
  Rational tick_{1};
  Tick horizon_ = 0;
  std::vector<Server> servers_;
  std::vector<Register> registers_;
  std::vector<std::vector<Tick>> releases_;
  std::vector<std::vector<std::optional<Tick>>> first_;
  std::vector<std::vector<std::optional<Tick>>> last_;
  SimReport report_;
};

std::string optional_time(const SimReport& report, const std::optional<Tick>& t) {
  return t ? to_string(report.to_time(*t)) : std::string();
}

}  // namespace

SimReport run(const TaskGraph& graph, const SimOptions& options) {
  return Simulation(graph, options).run();
}

MeasuredSeries measure(const SimReport& report, const std::vector<std::string>& chain) {
  auto it = std::find_if(report.chains.begin(), report.chains.end(),
                         [&](const ChainReport& r) { return r.chain == chain; });
  if (it == report.chains.end()) throw std::invalid_argument("chain was not traced in this simulation");
  MeasuredSeries out;
  for (const LineageRecord& r : it->records) {
    if (!r.reachable()) continue;
    out.ids.push_back(r.id);
    out.reaction.push_back(report.to_time(*r.first_output - r.release));
    out.freshness.push_back(report.to_time(*r.last_output - r.release));
  }
  return out;
}

void write_lineage_csv(std::ostream& out, const SimReport& report, std::size_t chain_index) {
  const ChainReport& chain = report.chains.at(chain_index);
  out << "input_id,release,first_output,last_output,reaction,freshness,reachable\n";
  for (const LineageRecord& r : chain.records) {
    out << r.id << ',' << to_string(report.to_time(r.release)) << ',' << optional_time(report, r.first_output) << ','
        << optional_time(report, r.last_output) << ',';
    if (r.reachable())
      out << to_string(report.to_time(*r.first_output - r.release)) << ','
          << to_string(report.to_time(*r.last_output - r.release)) << ",1\n";
    else
      out << ",,0\n";
  }
}

void write_events_csv(std::ostream& out, const SimReport& report) {
  out << "time,pipe,event\n";
  for (const SimEvent& e : report.events)
    out << to_string(report.to_time(e.time)) << ',' << e.pipe << ',' << to_string(e.kind) << '\n';
}

}  // namespace pipelat
