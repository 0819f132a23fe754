// Prints one PASS/FAIL line per acceptance criterion.
//
//   acceptance [--expect-fail=N,...]
//
// Exits 0 when the failing criteria are exactly the expected ones.

#include "CLI11.hpp"
#include "cli.hpp"
#include "fixtures.hpp"
#include "four_slot_check.hpp"
#include "pipelat/analysis.hpp"
#include "pipelat/simulator.hpp"
#include "pipelat/synthesis.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

using namespace pipelat;
using fixtures::R;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string dbl(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

Verdict inequality_reproduction() {
  auto start = std::chrono::steady_clock::now();
  SystemConfig cfg = fixtures::load("six_task_graph.json");
  TaskGraph g = compute_budgets(cfg.graph, 0);
  auto qs = derive_inequalities(g, cfg.constraints, initial_branches(cfg.constraints), InequalityMode::paper_compat);
  const LinearInequality* e = nullptr;
  for (const LinearInequality& q : qs)
    if (q.origin == "E(tau2|tau5|tau6)") e = &q;
  if (!e) return {false, "constraint E(tau2|tau5|tau6) missing"};
  const Rational C2 = g.pipe("tau2").terminal.C();
  const Rational delta = output_delta(g.pipe("tau2"));
  bool ok = e->terms == std::map<std::string, Rational>{{"tau5", 1}, {"tau6", 1}} && C2 == 1 &&
            delta == R("0.25") && e->constant == C2 - delta && e->bound == 25 && !e->strict;
  double t = seconds_since(start);
  return {ok && t < 1.0, e->to_string() + " (C2 = " + to_string(C2) + ", delta = " + to_string(delta) + "), " +
                             dbl(t) + " s"};
}

Verdict budget_computation() {
  TaskGraph g = compute_budgets(fixtures::load("six_task_graph.json").graph, 0);
  bool ok = true;
  std::string detail;
  for (const Pipe& p : g.pipes()) {
    const Rational expected = g.in_edges(p.id).size() > 1 ? R("1.15") : Rational(1);
    ok = ok && p.terminal.C() == expected;
    detail += (detail.empty() ? "" : " ") + p.id + "=" + to_string(p.terminal.C());
  }
  return {ok, detail};
}

Verdict flight_controller() {
  auto start = std::chrono::steady_clock::now();
  SystemConfig cfg = fixtures::load("flight_controller.json");
  std::vector<std::string> chain{"gyro", "ahrs", "pid", "pwm"};
  Rational reaction = chain_reaction(cfg.graph, chain, AnalysisMode::zero_comm).value;
  Rational freshness = chain_freshness(cfg.graph, chain).value;
  UtilizationCheck u = rms_bound_check(cfg.graph);
  bool ok = reaction == 6000 && freshness == 13900 && reaction <= 10000 && freshness <= 23000 &&
            u.utilization == R("0.68") && u.pass && std::abs(u.bound - 6 * (std::pow(2.0, 1.0 / 6) - 1)) < 1e-6;
  double t = seconds_since(start);
  return {ok && t < 1.0, "reaction " + to_string(reaction) + " us, freshness " + to_string(freshness) +
                             " us, utilization " + to_string(u.utilization) + " <= " + dbl(u.bound, 6) + ", " +
                             dbl(t) + " s"};
}

struct Scenario {
  std::string name;
  SystemConfig config;
  std::vector<std::string> chain;
};

SimOptions long_run(const Scenario& s, std::uint64_t outputs, std::uint64_t seed) {
  Rational max_period = 0;
  for (const Pipe& p : s.config.graph.pipes()) max_period = std::max(max_period, p.terminal.T());
  const Rational sink_period = s.config.graph.pipe(s.chain.back()).terminal.T();
  SimOptions o;
  o.horizon = Rational(outputs + 2) * sink_period + 2 * max_period;
  o.offset_mode = OffsetMode::random;
  o.seed = seed;
  o.chains = {s.chain};
  return o;
}

Verdict bound_dominance() {
  auto start = std::chrono::steady_clock::now();
  std::vector<Scenario> scenarios;
  const std::vector<std::string> three{"tau1", "tau2", "tau3"};
  scenarios.push_back({"case1", fixtures::load("three_pipe_a.json"), three});
  scenarios.push_back({"case2", fixtures::load("three_pipe_b.json"), three});
  std::mt19937_64 rng(2018);
  for (int i = 0; i < 20; ++i) {
    SystemConfig cfg = fixtures::random_schedulable_chain(rng, 3, 6);
    std::vector<std::string> chain = cfg.constraints.front().chain;
    scenarios.push_back({"random" + std::to_string(i), std::move(cfg), chain});
  }

  constexpr std::uint64_t kOffsetVectors = 50;
  constexpr std::uint64_t kOutputs = 10000;
  std::uint64_t runs = 0, outputs = 0, inputs = 0, violations = 0, bad_runs = 0;
  std::string worst;
  Rational worst_excess = 0;
  std::set<std::string> failing;
  for (const Scenario& s : scenarios) {
    const Rational reaction_bound = chain_reaction(s.config.graph, s.chain, AnalysisMode::general).value;
    const Rational freshness_bound = chain_freshness(s.config.graph, s.chain).value;
    for (std::uint64_t seed = 1; seed <= kOffsetVectors; ++seed) {
      SimReport r = run(s.config.graph, long_run(s, kOutputs, seed));
      const ChainReport& c = r.chains.front();
      ++runs;
      outputs += c.sink_outputs;
      if (c.sink_outputs < kOutputs) return {false, s.name + ": only " + std::to_string(c.sink_outputs) + " outputs"};
      MeasuredSeries m = measure(r, s.chain);
      inputs += m.ids.size();
      bool run_bad = false;
      for (std::size_t k = 0; k < m.ids.size(); ++k) {
        for (auto [value, bound, metric] : {std::tuple{m.reaction[k], reaction_bound, "reaction"},
                                            std::tuple{m.freshness[k], freshness_bound, "freshness"}}) {
          if (value <= bound) continue;
          ++violations;
          run_bad = true;
          failing.insert(s.name);
          if (value - bound > worst_excess) {
            worst_excess = value - bound;
            worst = s.name + " seed " + std::to_string(seed) + " " + metric + " " + to_string(value) + " > " +
                    to_string(bound);
          }
        }
      }
      bad_runs += run_bad;
    }
  }
  double t = seconds_since(start);
  std::string detail = std::to_string(scenarios.size()) + " configurations, " + std::to_string(runs) + " runs, " +
                       std::to_string(outputs) + " sink outputs, " + std::to_string(inputs) +
                       " reachable inputs, " + std::to_string(violations) + " violations in " +
                       std::to_string(bad_runs) + " runs over " + std::to_string(failing.size()) +
                       " configurations, " + dbl(t, 1) + " s";
  if (!worst.empty()) detail += "; worst: " + worst;
  return {violations == 0 && t <= 600, detail};
}

Verdict tightness() {
  SystemConfig cfg = fixtures::load("three_pipe_a.json");
  const std::vector<std::string> chain{"tau1", "tau2", "tau3"};
  const Rational bound = chain_reaction(cfg.graph, chain, AnalysisMode::general).value;
  Rational budgets = 0, demands = 0;
  for (const std::string& id : chain) {
    budgets += cfg.graph.pipe(id).terminal.C();
    demands += demand(cfg.graph.pipe(id));
  }
  Rational observed = 0;
  Scenario s{"case1", cfg, chain};
  for (std::uint64_t seed = 0; seed <= 200; ++seed) {
    SimOptions o = long_run(s, 2000, seed);
    if (seed == 0) o.offset_mode = OffsetMode::zero;
    SimReport r = run(cfg.graph, o);
    if (r.chains.front().max_reaction) observed = std::max(observed, r.to_time(*r.chains.front().max_reaction));
  }
  return {observed >= budgets && observed <= bound,
          "max observed reaction " + to_string(observed) + " over 201 offset vectors, floor " + to_string(budgets) +
              " (demand " + to_string(demands) + "), bound " + to_string(bound) + ", ratio " +
              dbl(to_double(observed / bound))};
}

Verdict synthesis_soundness() {
  std::uint64_t solved = 0, infeasible_ok = 0, checked = 0;
  std::string problem;
  auto reverify = [&](const TaskGraph& graph, const std::vector<TimingConstraint>& cs, const SynthesisResult& r) {
    ++solved;
    for (const Pipe& p : r.graph.pipes())
      if (!(p.terminal.T() > p.terminal.C()) || p.terminal.C() != graph.pipe(p.id).terminal.C())
        problem = "T > C or budget changed for " + p.id;
    for (const TimingConstraint& c : cs) {
      Rational v = c.kind == Metric::reaction ? chain_reaction(r.graph, c.chain, AnalysisMode::simplified).value
                                              : chain_freshness(r.graph, c.chain).value;
      if (v > c.bound) problem = "constraint " + c.id + " violated after synthesis";
    }
    if (!ll_bound_holds(r.utilization, r.graph.pipes().size())) problem = "LL bound violated";
  };

  SystemConfig t4 = fixtures::load("six_task_graph.json");
  TaskGraph g4 = compute_budgets(t4.graph, 0);
  reverify(g4, t4.constraints, solve_periods(g4, t4.constraints));
  ++checked;

  std::mt19937_64 rng(66);
  for (int i = 0; i < 30; ++i) {
    SystemConfig cfg = fixtures::random_schedulable_chain(rng, 2, 5);
    std::vector<std::string> chain = cfg.constraints.front().chain;
    auto factor = [&] { return Rational(std::uniform_int_distribution<int>(8, 20)(rng), 10); };
    std::vector<TimingConstraint> cs{
        {"E", Metric::reaction, chain, chain_reaction(cfg.graph, chain, AnalysisMode::simplified).value * factor()},
        {"F", Metric::freshness, chain, chain_freshness(cfg.graph, chain).value * factor()}};
    ++checked;
    try {
      reverify(cfg.graph, cs, solve_periods(cfg.graph, cs));
    } catch (const InfeasibleError&) {
    }

    // below the summed demand of the chain, nothing can work
    Rational total = 0;
    for (const std::string& id : chain) total += demand(cfg.graph.pipe(id));
    std::vector<TimingConstraint> impossible{{"E", Metric::reaction, chain, total * Rational(9, 10)}};
    ++checked;
    try {
      solve_periods(cfg.graph, impossible);
      problem = "bound below the summed demand was solved";
    } catch (const InfeasibleError& e) {
      if (e.blocking() == std::vector<std::string>{"E"}) ++infeasible_ok;
    }
  }
  return {problem.empty() && solved >= 21 && infeasible_ok == 30,
          std::to_string(checked) + " instances: " + std::to_string(solved) + " solved and re-verified, " +
              std::to_string(infeasible_ok) + "/30 sub-demand instances infeasible" +
              (problem.empty() ? "" : "; " + problem)};
}

Verdict four_slot() {
  auto start = std::chrono::steady_clock::now();
  fixtures::InterleavingStats s = fixtures::enumerate_interleavings(3, 2);
  double t = seconds_since(start);
  return {s.ok() && s.schedules > 0 && t <= 60,
          std::to_string(s.schedules) + " interleavings of 3 writes and 2 reads, " + std::to_string(s.reads) +
              " reads, torn " + std::to_string(s.torn) + ", stale " + std::to_string(s.stale) + ", regressed " +
              std::to_string(s.regressed) + ", " + dbl(t, 1) + " s"};
}

Verdict single_pipe_vector() {
  Rational a = single_pipe_latency(fixtures::make_pipe("a", 1, 10, 0, R("2.5"), 0));
  Rational b = single_pipe_latency(fixtures::make_pipe("b", 1, 10, 0, R("0.5"), 0));
  return {a == R("20.5") && b == R("0.5"), "(2.5, 1, 10) -> " + to_string(a) + ", (0.5, 1, 10) -> " + to_string(b)};
}

Verdict determinism() {
  auto path = std::filesystem::temp_directory_path() / "pipelat_acceptance_lineage.csv";
  std::vector<std::string> args{"simulate", "--config", fixtures::data_path("three_pipe_b.json"), "--horizon", "60000",
                                "--offsets", "random", "--seed", "42", "--csv-out", path.string()};
  auto once = [&] {
    std::ostringstream out, err;
    cli::run_cli(args, out, err);
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  std::string first = once(), second = once();
  return {!first.empty() && first == second, std::to_string(first.size()) + " bytes, identical: " +
                                                 (first == second ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance criteria");
  std::vector<int> expected;
  app.add_option("--expect-fail", expected, "Criteria known to fail")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"constraint translation", inequality_reproduction},
      {"budget computation", budget_computation},
      {"flight-controller chain", flight_controller},
      {"bound dominance under simulation", bound_dominance},
      {"reaction tightness", tightness},
      {"synthesis soundness", synthesis_soundness},
      {"four-slot interleavings", four_slot},
      {"single-pipe latency", single_pipe_vector},
      {"simulation determinism", determinism},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) failed.insert(number);
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << number << " " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  const std::set<int> expect(expected.begin(), expected.end());
  if (!expect.empty()) {
    std::cout << "expected failures:";
    for (int n : expect) std::cout << " " << n;
    std::cout << (failed == expect ? " (matched)" : " (mismatch)") << std::endl;
  }
  return failed == expect ? 0 : 1;
}
