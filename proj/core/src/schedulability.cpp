#include "pipelat/schedulability.hpp"

#include "pipelat/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace pipelat {

namespace {

void require_all_solved(const TaskGraph& graph) {
  for (const Pipe& p : graph.pipes())
    if (!p.terminal.solved()) throw AnalysisError("unsolved terminal: pipe '" + p.id + "'");
}

}  // namespace

bool ll_bound_holds(const Rational& utilization, std::size_t n) {
  if (n == 0) return utilization == 0;
  Rational base = 1 + utilization / Rational(n);
  Rational power = 1;
  for (std::size_t i = 0; i < n; ++i) power *= base;
  return power <= 2;
}

double ll_bound(std::size_t n) {
  if (n == 0) return 0.0;
  const double k = static_cast<double>(n);
  return k * (std::pow(2.0, 1.0 / k) - 1.0);
}

UtilizationCheck rms_bound_check(const TaskGraph& graph) {
  require_all_solved(graph);
  UtilizationCheck out;
  out.pipes = graph.pipes().size();
  for (const Pipe& p : graph.pipes()) out.utilization += p.terminal.C() / p.terminal.T();
  out.bound = ll_bound(out.pipes);
  out.pass = ll_bound_holds(out.utilization, out.pipes);
  return out;
}

std::vector<std::string> rm_priority_order(const TaskGraph& graph) {
  require_all_solved(graph);
  std::vector<const Pipe*> order;
  for (const Pipe& p : graph.pipes()) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const Pipe* a, const Pipe* b) {
    if (a->terminal.T() != b->terminal.T()) return a->terminal.T() < b->terminal.T();
    return a->id < b->id;
  });
  std::vector<std::string> ids;
  for (const Pipe* p : order) ids.push_back(p->id);
  return ids;
}

ResponseTimeCheck response_time_check(const TaskGraph& graph) {
  ResponseTimeCheck out;
  std::vector<std::string> order = rm_priority_order(graph);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Pipe& p = graph.pipe(order[i]);
    ResponseTime rt{p.id, p.terminal.C(), p.terminal.T(), std::nullopt};
    Rational r = p.terminal.C();
    for (;;) {
      Rational next = p.terminal.C();
      for (std::size_t j = 0; j < i; ++j) {
        const Pipe& hp = graph.pipe(order[j]);
        next += Rational(ceil_integer(r / hp.terminal.T())) * hp.terminal.C();
      }
      if (next > p.terminal.T()) break;  // diverged past the deadline
      if (next == r) {
        rt.response = r;
        break;
      }
      r = next;
    }
    out.schedulable = out.schedulable && rt.schedulable();
    out.pipes.push_back(std::move(rt));
  }
  return out;
}

}  // namespace pipelat
