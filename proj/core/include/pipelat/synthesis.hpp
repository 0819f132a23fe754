#pragma once

#include "pipelat/analysis.hpp"
#include "pipelat/model.hpp"
#include "pipelat/schedulability.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pipelat {

/// No period assignment satisfies the constraints. `blocking` names the
/// constraints that cannot be met on their own under any branch tried.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::string> blocking, std::size_t assignments_tried)
      : std::runtime_error(what), blocking_(std::move(blocking)), assignments_tried_(assignments_tried) {}

  const std::vector<std::string>& blocking() const { return blocking_; }
  std::size_t assignments_tried() const { return assignments_tried_; }

 private:
  std::vector<std::string> blocking_;
  std::size_t assignments_tried_;
};

/// C = Delta_in + p + Delta_out + pad for every pipe. Periods are
/// kept; a kept period that is no longer larger than the new budget is
/// dropped, or rejected with ConfigError when it is fixed.
TaskGraph compute_budgets(TaskGraph graph, const Rational& pad);

/// Only pipes without a configured budget get one from compute_budgets.
TaskGraph compute_missing_budgets(TaskGraph graph, const Rational& pad);

/// sum(coefficient * T[pipe]) + constant  (<= or <)  bound
struct LinearInequality {
  std::map<std::string, Rational> terms;
  Rational constant{0};
  Rational bound{0};
  bool strict = false;
  std::string origin;

  Rational lhs(const std::map<std::string, Rational>& periods) const;
  bool satisfied_by(const std::map<std::string, Rational>& periods) const;
  std::string to_string() const;
};

enum class BranchOrder { consumer_faster, producer_faster };

std::string_view to_string(BranchOrder order);

using BoundaryKey = std::pair<std::string, std::string>;  // producer, consumer

struct BranchAssignment {
  std::vector<BoundaryKey> boundaries;  // chain order, de-duplicated
  std::vector<BranchOrder> orders;

  BranchOrder at(const BoundaryKey& key) const;
  bool consistent_with(const TaskGraph& graph) const;  // against solved periods
};

/// Every boundary crossed by a constraint chain, in chain order, all
/// consumer_faster.
BranchAssignment initial_branches(const std::vector<TimingConstraint>& constraints);

/// Expression forms used when translating constraints.
///  - with_overheads: every boundary delta kept in the pair forms and their
///    increments.
///  - paper_compat: first reaction pair keeps delta, increments drop it;
///    freshness pairs drop delta.
enum class InequalityMode { with_overheads, paper_compat };

/// Translates every constraint into one inequality over periods under the
/// given branch choices, then appends the branch ordering inequalities and
/// the implicit T > C for every pipe that appears. Budgets must be set.
std::vector<LinearInequality> derive_inequalities(const TaskGraph& graph,
                                                  const std::vector<TimingConstraint>& constraints,
                                                  const BranchAssignment& branches,
                                                  InequalityMode mode = InequalityMode::with_overheads);

/// Analysis mode whose closed forms match the inequality mode.
AnalysisMode verification_mode(InequalityMode mode);

struct SynthesisOptions {
  Rational resolution{1};
  /// Upper limit for periods nothing else bounds; default 1e6 * resolution.
  std::optional<Rational> cap;
  /// Extra pinned periods on top of the graph's period_fixed pipes.
  std::map<std::string, Rational> fixed;
  InequalityMode mode = InequalityMode::with_overheads;
  std::size_t max_assignments = 1u << 16;
  /// Grid points the exhaustive fallback may visit per branch assignment.
  std::size_t exhaustive_limit = 2'000'000;
};

struct ConstraintSlack {
  std::string constraint;
  Metric metric = Metric::reaction;
  Rational value{0};
  Rational bound{0};
  Rational slack() const { return bound - value; }
  bool met() const { return value <= bound; }
};

struct SynthesisResult {
  TaskGraph graph;  // every terminal solved
  Rational utilization{0};
  UtilizationCheck schedulability;
  std::vector<ConstraintSlack> slack;
  BranchAssignment branches;
  std::size_t assignments_tried = 0;
  bool exhaustive = false;  // true when the grid fallback produced the result
};

/// Re-evaluates every constraint with the analysis module.
std::vector<ConstraintSlack> evaluate_constraints(const TaskGraph& graph,
                                                  const std::vector<TimingConstraint>& constraints,
                                                  AnalysisMode mode);

/// Searches branch assignments, maximize the sum of periods
/// under each assignment's inequalities with the exact simplex, floor to the
/// resolution, and return the first result that re-verifies (constraints,
/// branch consistency, T > C, Liu-Layland bound). Throws InfeasibleError.
SynthesisResult solve_periods(const TaskGraph& graph, const std::vector<TimingConstraint>& constraints,
                              const SynthesisOptions& options = {});

}  // namespace pipelat
