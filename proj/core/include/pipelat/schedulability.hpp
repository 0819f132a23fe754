#pragma once

#include "pipelat/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pipelat {

struct UtilizationCheck {
  Rational utilization{0};
  std::size_t pipes = 0;
  double bound = 0.0;  // n (2^(1/n) - 1), for display
  bool pass = true;    // decided exactly, see ll_bound_holds
};

/// True iff U <= n (2^(1/n) - 1), decided exactly as (1 + U/n)^n <= 2.
bool ll_bound_holds(const Rational& utilization, std::size_t n);
double ll_bound(std::size_t n);

/// Total utilization sum C/T against the Liu-Layland rate-monotonic bound.
UtilizationCheck rms_bound_check(const TaskGraph& graph);

struct ResponseTime {
  std::string pipe;
  Rational budget{0};
  Rational period{0};
  std::optional<Rational> response;  // nullopt: iteration passed the period
  bool schedulable() const { return response.has_value() && *response <= period; }
};

struct ResponseTimeCheck {
  std::vector<ResponseTime> pipes;  // in rate-monotonic priority order
  bool schedulable = true;
};

/// Rate-monotonic priority order: shorter period first, ties by pipe id.
std::vector<std::string> rm_priority_order(const TaskGraph& graph);

/// Exact fixed-priority response-time test,
/// R = C + sum over higher-priority j of ceil(R / T_j) C_j.
ResponseTimeCheck response_time_check(const TaskGraph& graph);

}  // namespace pipelat
