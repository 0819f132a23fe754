#pragma once

#include "json.hpp"
#include "pipelat/analysis.hpp"
#include "pipelat/model.hpp"
#include "pipelat/schedulability.hpp"

#include <random>
#include <string>
#include <vector>

namespace fixtures {

using pipelat::Rational;

inline Rational R(const char* text) { return pipelat::parse_rational(text); }

inline std::string data_path(const std::string& name) { return std::string(PIPELAT_DATA_DIR) + "/" + name; }

inline pipelat::SystemConfig load(const std::string& name) { return pipelat::load_config_file(data_path(name)); }

/// A pipe built directly, with infinite-bandwidth ends whose overheads are
/// the read and write stage lengths.
inline pipelat::Pipe make_pipe(const std::string& id, const Rational& C, const Rational& T, const Rational& d_in = 0,
                               const Rational& p = 0, const Rational& d_out = 0) {
  pipelat::Pipe pipe;
  pipe.id = id;
  pipe.task = id;
  pipe.processing = p;
  pipe.input.params.overhead = d_in;
  pipe.output.params.overhead = d_out;
  pipe.terminal.budget = C;
  pipe.terminal.period = T;
  return pipe;
}

inline pipelat::Boundary boundary(const Rational& delta) {
  return pipelat::Boundary{pipelat::ChannelParams{std::nullopt, delta}, 0};
}

struct Stage {
  std::string id;
  Rational p;
  Rational C;
  Rational T;
};

/// Linear chain s0 -> s1 -> ... over one shared link channel with overhead
/// `delta`; sources read and sinks write over zero-overhead channels.
inline pipelat::SystemConfig linear_chain(const std::vector<Stage>& stages, const Rational& delta,
                                          bool with_constraints = true) {
  using nlohmann::json;
  json doc;
  doc["unit"] = "ms";
  doc["channels"] = json::array({{{"id", "in"}, {"bandwidth", "inf"}, {"overhead", "0"}},
                                 {{"id", "link"}, {"bandwidth", "inf"}, {"overhead", pipelat::to_string(delta)}},
                                 {{"id", "out"}, {"bandwidth", "inf"}, {"overhead", "0"}}});
  json tasks = json::array(), pipes = json::array(), edges = json::array(), chain = json::array();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    tasks.push_back({{"id", s.id}, {"p", pipelat::to_string(s.p)}, {"d_out", 0}});
    pipes.push_back({{"id", s.id},
                     {"task", s.id},
                     {"input_channel", i == 0 ? "in" : "link"},
                     {"output_channel", i + 1 == stages.size() ? "out" : "link"},
                     {"budget", pipelat::to_string(s.C)},
                     {"period", pipelat::to_string(s.T)}});
    if (i > 0) edges.push_back({{"from", stages[i - 1].id}, {"to", s.id}, {"data_size", 0}});
    chain.push_back(s.id);
  }
  doc["tasks"] = tasks;
  doc["pipes"] = pipes;
  doc["edges"] = edges;
  doc["constraints"] = json::array();
  if (with_constraints) {
    doc["constraints"].push_back({{"kind", "reaction"}, {"chain", chain}, {"bound", 1000000}});
    doc["constraints"].push_back({{"kind", "freshness"}, {"chain", chain}, {"bound", 1000000}});
  }
  return pipelat::load_config(doc.dump());
}

/// Random provisioned linear chain of 3..6 pipes whose budgets pass the
/// exact response-time test. Periods are on a 5-unit grid, stage lengths
/// on a 0.5 grid.
inline pipelat::SystemConfig random_schedulable_chain(std::mt19937_64& rng, std::size_t min_len = 3,
                                                      std::size_t max_len = 6) {
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (;;) {
    const std::size_t n = static_cast<std::size_t>(uniform(static_cast<int>(min_len), static_cast<int>(max_len)));
    const Rational delta = Rational(uniform(0, 2), 2);
    std::vector<Stage> stages;
    for (std::size_t i = 0; i < n; ++i) {
      Rational T = Rational(5 * uniform(2, 40));
      Rational reads = i == 0 ? Rational(0) : delta;
      Rational writes = i + 1 == n ? Rational(0) : delta;
      Rational p = Rational(uniform(1, 16), 2);
      Rational C = reads + p + writes + Rational(uniform(0, 2), 2);
      stages.push_back({"p" + std::to_string(i), p, C, T});
    }
    bool valid = true;
    for (const Stage& s : stages) valid = valid && s.C < s.T;
    if (!valid) continue;
    pipelat::SystemConfig cfg = linear_chain(stages, delta);
    if (pipelat::response_time_check(cfg.graph).schedulable) return cfg;
  }
}

}  // namespace fixtures
