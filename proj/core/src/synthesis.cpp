#include "pipelat/synthesis.hpp"

#include "pipelat/simplex.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace pipelat {

namespace {

struct LinearExpr {
  std::map<std::string, Rational> terms;
  Rational constant{0};

  void add_period(const std::string& pipe, const Rational& coefficient) {
    terms[pipe] += coefficient;
    if (terms[pipe] == 0) terms.erase(pipe);
  }
  LinearExpr& operator+=(const LinearExpr& o) {
    for (const auto& [pipe, coefficient] : o.terms) add_period(pipe, coefficient);
    constant += o.constant;
    return *this;
  }
};

const Rational& budget_of(const Pipe& p) {
  if (!p.terminal.budget) throw ConfigError("pipe '" + p.id + "' has no budget; compute budgets first");
  return *p.terminal.budget;
}

Rational boundary_delta(const TaskGraph& g, const std::string& from, const std::string& to) {
  const Edge* e = g.find_edge(from, to);
  return delta(g.boundary_params(*e), e->data_size);
}

// T^c + C^p - d (consumer faster) or T^p + C^c - d.
LinearExpr reaction_pair(const Pipe& p, const Pipe& c, BranchOrder order, const Rational& d) {
  LinearExpr out;
  if (order == BranchOrder::consumer_faster) {
    out.add_period(c.id, 1);
    out.constant = budget_of(p) - d;
  } else {
    out.add_period(p.id, 1);
    out.constant = budget_of(c) - d;
  }
  return out;
}

LinearExpr freshness_pair(const Pipe& p, const Pipe& c, BranchOrder order, const Rational& d) {
  LinearExpr out;
  if (order == BranchOrder::consumer_faster) {
    out.add_period(p.id, 2);
    out.constant = -d;
  } else {
    out.add_period(p.id, 1);
    out.constant = budget_of(c) - d;
  }
  return out;
}

LinearExpr constraint_expression(const TaskGraph& g, const TimingConstraint& c, const BranchAssignment& branches,
                                 InequalityMode mode) {
  const auto& chain = c.chain;
  g.require_path(chain);
  LinearExpr expr;
  if (chain.size() == 1) {
    expr.constant = budget_of(g.pipe(chain[0]));
    return expr;
  }
  const bool paper = mode == InequalityMode::paper_compat;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const Pipe& p = g.pipe(chain[i - 1]);
    const Pipe& q = g.pipe(chain[i]);
    BranchOrder order = branches.at({p.id, q.id});
    Rational d = boundary_delta(g, p.id, q.id);
    if (c.kind == Metric::reaction) {
      if (i == 1) {
        expr += reaction_pair(p, q, order, d);
      } else {
        // Pair value minus the tail's simplified latency C^tail.
        LinearExpr inc = reaction_pair(p, q, order, paper ? Rational(0) : d);
        inc.constant -= budget_of(p);
        expr += inc;
      }
    } else {
      LinearExpr pair = freshness_pair(p, q, order, paper ? Rational(0) : d);
      if (i > 1) pair.constant -= budget_of(p);
      expr += pair;
    }
  }
  return expr;
}

std::string describe(const BranchAssignment& a) {
  std::string out;
  for (std::size_t i = 0; i < a.boundaries.size(); ++i) {
    if (i) out += ", ";
    out += a.boundaries[i].first + "->" + a.boundaries[i].second + ":" + std::string(to_string(a.orders[i]));
  }
  return out.empty() ? "(no boundaries)" : out;
}

// Branch assignment number k in depth-first order, first boundary outermost.
BranchAssignment assignment_at(const BranchAssignment& base, std::size_t k) {
  BranchAssignment a = base;
  const std::size_t n = a.boundaries.size();
  for (std::size_t i = 0; i < n; ++i)
    a.orders[i] = ((k >> (n - 1 - i)) & 1u) ? BranchOrder::producer_faster : BranchOrder::consumer_faster;
  return a;
}

// The period LP for one branch assignment. Unfixed periods are shifted to
// x_j = T_j - lower_j >= 0.
class PeriodProblem {
 public:
  PeriodProblem(const TaskGraph& g, const std::vector<LinearInequality>& inequalities,
                const std::map<std::string, Rational>& fixed, const Rational& resolution, const Rational& cap)
      : resolution_(resolution) {
    for (const Pipe& p : g.pipes()) {
      if (auto it = fixed.find(p.id); it != fixed.end()) {
        fixed_[p.id] = it->second;
        continue;
      }
      Rational lower = floor_to(budget_of(p), resolution) + resolution;
      if (lower > cap) {
        trivially_infeasible_ = true;
        return;
      }
      index_[p.id] = vars_.size();
      vars_.push_back(p.id);
      lower_.push_back(lower);
      upper_.push_back(floor_to(cap, resolution));
    }
    for (const LinearInequality& q : inequalities) {
      Row row{std::vector<Rational>(vars_.size(), Rational(0)), q.bound - q.constant};
      if (q.strict) row.bound -= resolution;
      for (const auto& [pipe, a] : q.terms) {
        if (auto f = fixed_.find(pipe); f != fixed_.end()) {
          row.bound -= a * f->second;
        } else {
          std::size_t j = index_.at(pipe);
          row.coefficients[j] += a;
          row.bound -= a * lower_[j];
        }
      }
      bool empty = std::all_of(row.coefficients.begin(), row.coefficients.end(), [](const Rational& v) { return v == 0; });
      if (empty) {
        if (row.bound < 0) trivially_infeasible_ = true;
        continue;
      }
      rows_.push_back(std::move(row));
    }
  }

  bool trivially_infeasible() const { return trivially_infeasible_; }
  std::size_t variables() const { return vars_.size(); }

  LpSolution solve(const std::vector<Rational>& objective) const {
    RationalSimplex lp(vars_.size());
    for (const Row& r : rows_) lp.add_row(r.coefficients, r.bound);
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      std::vector<Rational> unit(vars_.size(), Rational(0));
      unit[j] = 1;
      lp.add_row(unit, upper_[j] - lower_[j]);
    }
    lp.set_objective(objective);
    return lp.solve();
  }

  bool feasible() const {
    if (trivially_infeasible_) return false;
    if (vars_.empty()) return true;
    return solve(std::vector<Rational>(vars_.size(), Rational(0))).status == LpStatus::optimal;
  }

  /// Maximizes the sum of periods and floors each to the resolution.
  std::optional<std::map<std::string, Rational>> max_periods() const {
    if (trivially_infeasible_) return std::nullopt;
    std::map<std::string, Rational> out = fixed_;
    if (vars_.empty()) return out;
    LpSolution s = solve(std::vector<Rational>(vars_.size(), Rational(1)));
    if (s.status != LpStatus::optimal) return std::nullopt;
    for (std::size_t j = 0; j < vars_.size(); ++j) out[vars_[j]] = floor_to(lower_[j] + s.x[j], resolution_);
    return out;
  }

  /// Exhaustive grid search minimizing exact utilization subject to the
  /// rows and the Liu-Layland bound. Periods per variable range from the
  /// lower bound to the LP maximum of that variable.
  std::optional<std::map<std::string, Rational>> exhaustive(const TaskGraph& g, std::size_t limit) const {
    if (trivially_infeasible_ || vars_.empty()) return std::nullopt;
    std::vector<Rational> hi(vars_.size());
    double grid = 1.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      std::vector<Rational> obj(vars_.size(), Rational(0));
      obj[j] = 1;
      LpSolution s = solve(obj);
      if (s.status != LpStatus::optimal) return std::nullopt;
      hi[j] = floor_to(lower_[j] + s.x[j], resolution_);
      grid *= to_double((hi[j] - lower_[j]) / resolution_) + 1.0;
    }
    if (grid > static_cast<double>(limit)) return std::nullopt;

    Rational fixed_utilization = 0;
    for (const auto& [pipe, period] : fixed_) fixed_utilization += budget_of(g.pipe(pipe)) / period;
    std::vector<Rational> budgets;
    for (const std::string& v : vars_) budgets.push_back(budget_of(g.pipe(v)));

    std::vector<Rational> current(vars_.size());
    std::optional<std::vector<Rational>> best;
    Rational best_utilization;
    std::size_t visited = 0;
    const std::size_t n = vars_.size();

    std::function<void(std::size_t, const Rational&)> visit = [&](std::size_t j, const Rational& partial_u) {
      if (++visited > limit) return;
      if (j == n) {
        for (const Row& r : rows_) {
          Rational lhs = 0;
          for (std::size_t k = 0; k < n; ++k) lhs += r.coefficients[k] * (current[k] - lower_[k]);
          if (lhs > r.bound) return;
        }
        if (!ll_bound_holds(partial_u + fixed_utilization, g.pipes().size())) return;
        if (!best || partial_u < best_utilization) {
          best = current;
          best_utilization = partial_u;
        }
        return;
      }
      for (Rational t = hi[j]; t >= lower_[j]; t -= resolution_) {
        current[j] = t;
        Rational u = partial_u + budgets[j] / t;
        Rational optimistic = u;
        for (std::size_t k = j + 1; k < n; ++k) optimistic += budgets[k] / hi[k];
        if (best && optimistic >= best_utilization) break;  // larger periods come first
        bool prune = false;
        for (const Row& r : rows_) {
          Rational lhs = 0;
          for (std::size_t k = 0; k < n; ++k) {
            const Rational& a = r.coefficients[k];
            if (k <= j)
              lhs += a * (current[k] - lower_[k]);
            else if (a < 0)
              lhs += a * (hi[k] - lower_[k]);
          }
          if (lhs > r.bound) {
            prune = true;
            break;
          }
        }
        if (!prune) visit(j + 1, u);
      }
    };
    visit(0, Rational(0));
    if (!best) return std::nullopt;
    std::map<std::string, Rational> out = fixed_;
    for (std::size_t j = 0; j < n; ++j) out[vars_[j]] = (*best)[j];
    return out;
  }

 private:
  struct Row {
    std::vector<Rational> coefficients;
    Rational bound;
  };

  Rational resolution_;
  std::map<std::string, Rational> fixed_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> vars_;
  std::vector<Rational> lower_;
  std::vector<Rational> upper_;
  std::vector<Row> rows_;
  bool trivially_infeasible_ = false;
};

TaskGraph with_periods(TaskGraph g, const std::map<std::string, Rational>& periods) {
  for (const Pipe& p : g.pipes()) {
    Terminal t = p.terminal;
    t.period = periods.at(p.id);
    g.set_terminal(p.id, t);
  }
  return g;
}

}  // namespace

TaskGraph compute_budgets(TaskGraph graph, const Rational& pad) {
  if (pad < 0) throw ConfigError("budget pad must be non-negative");
  graph = aggregate_io_sizes(std::move(graph));
  for (const Pipe& p : graph.pipes()) {
    Terminal t = p.terminal;
    t.budget = demand(p) + pad;
    if (t.budget == 0) throw ConfigError("pipe '" + p.id + "' has zero demand; use a positive pad");
    if (t.period && *t.period <= *t.budget) {
      if (t.period_fixed)
        throw ConfigError("pipe '" + p.id + "': C >= T after budget computation (fixed period " +
                          to_string(*t.period) + ")");
      t.period.reset();
    }
    graph.set_terminal(p.id, t);
  }
  return graph;
}

TaskGraph compute_missing_budgets(TaskGraph graph, const Rational& pad) {
  TaskGraph computed = compute_budgets(graph, pad);
  for (const Pipe& p : graph.pipes()) {
    if (p.terminal.budget) continue;
    Terminal t = p.terminal;
    t.budget = computed.pipe(p.id).terminal.budget;
    if (t.period && *t.period <= *t.budget) {
      if (t.period_fixed) throw ConfigError("pipe '" + p.id + "': C >= T after budget computation");
      t.period.reset();
    }
    graph.set_terminal(p.id, t);
  }
  return graph;
}

Rational LinearInequality::lhs(const std::map<std::string, Rational>& periods) const {
  Rational value = constant;
  for (const auto& [pipe, a] : terms) value += a * periods.at(pipe);
  return value;
}

bool LinearInequality::satisfied_by(const std::map<std::string, Rational>& periods) const {
  Rational v = lhs(periods);
  return strict ? v < bound : v <= bound;
}

std::string LinearInequality::to_string() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [pipe, a] : terms) {
    if (!first) out << (a < 0 ? " - " : " + ");
    else if (a < 0) out << "-";
    first = false;
    Rational mag = abs(a);
    if (mag != 1) out << pipelat::to_string(mag) << "*";
    out << "T[" << pipe << "]";
  }
  if (constant != 0 || first) {
    if (first)
      out << pipelat::to_string(constant);
    else
      out << (constant < 0 ? " - " : " + ") << pipelat::to_string(abs(constant));
  }
  out << (strict ? " < " : " <= ") << pipelat::to_string(bound);
  return out.str();
}

std::string_view to_string(BranchOrder order) {
  return order == BranchOrder::consumer_faster ? "consumer-faster" : "producer-faster";
}

BranchOrder BranchAssignment::at(const BoundaryKey& key) const {
  for (std::size_t i = 0; i < boundaries.size(); ++i)
    if (boundaries[i] == key) return orders[i];
  throw std::out_of_range("no branch choice for boundary " + key.first + " -> " + key.second);
}

bool BranchAssignment::consistent_with(const TaskGraph& graph) const {
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const Pipe& p = graph.pipe(boundaries[i].first);
    const Pipe& c = graph.pipe(boundaries[i].second);
    bool consumer_faster = priority_case(p, c) == PriorityCase::consumer_higher;
    if (consumer_faster != (orders[i] == BranchOrder::consumer_faster)) return false;
  }
  return true;
}

BranchAssignment initial_branches(const std::vector<TimingConstraint>& constraints) {
  BranchAssignment a;
  std::set<BoundaryKey> seen;
  for (const TimingConstraint& c : constraints) {
    for (std::size_t i = 1; i < c.chain.size(); ++i) {
      BoundaryKey key{c.chain[i - 1], c.chain[i]};
      if (seen.insert(key).second) {
        a.boundaries.push_back(key);
        a.orders.push_back(BranchOrder::consumer_faster);
      }
    }
  }
  return a;
}

std::vector<LinearInequality> derive_inequalities(const TaskGraph& graph,
                                                  const std::vector<TimingConstraint>& constraints,
                                                  const BranchAssignment& branches, InequalityMode mode) {
  std::vector<LinearInequality> out;
  for (const TimingConstraint& c : constraints) {
    for (const std::string& id : c.chain)
      if (!graph.pipe(id).terminal.budget)
        throw AnalysisError("constraint " + c.id + " covers pipe '" + id + "' without a budget");
    LinearExpr e = constraint_expression(graph, c, branches, mode);
    out.push_back(LinearInequality{e.terms, e.constant, c.bound, false, c.id});
  }
  for (std::size_t i = 0; i < branches.boundaries.size(); ++i) {
    const auto& [p, c] = branches.boundaries[i];
    LinearInequality q;
    q.origin = "branch " + p + "->" + c;
    if (branches.orders[i] == BranchOrder::consumer_faster) {
      q.terms = {{c, 1}, {p, -1}};  // T^c < T^p
      q.strict = true;
    } else {
      q.terms = {{p, 1}, {c, -1}};  // T^p <= T^c
    }
    out.push_back(std::move(q));
  }
  for (const Pipe& p : graph.pipes()) {
    LinearInequality q;
    q.terms = {{p.id, -1}};
    q.bound = -budget_of(p);
    q.strict = true;  // T > C
    q.origin = "T>C " + p.id;
    out.push_back(std::move(q));
  }
  return out;
}

AnalysisMode verification_mode(InequalityMode mode) {
  return mode == InequalityMode::paper_compat ? AnalysisMode::paper_compat : AnalysisMode::simplified;
}

std::vector<ConstraintSlack> evaluate_constraints(const TaskGraph& graph,
                                                  const std::vector<TimingConstraint>& constraints,
                                                  AnalysisMode mode) {
  std::vector<ConstraintSlack> out;
  for (const TimingConstraint& c : constraints) {
    AnalysisResult r = analyze_constraint(graph, c, mode);
    out.push_back(ConstraintSlack{c.id, c.kind, r.value, c.bound});
  }
  return out;
}

SynthesisResult solve_periods(const TaskGraph& graph, const std::vector<TimingConstraint>& constraints,
                              const SynthesisOptions& options) {
  if (options.resolution <= 0) throw ConfigError("resolution must be positive");
  const Rational cap = options.cap.value_or(Rational(1'000'000) * options.resolution);
  if (cap <= 0) throw ConfigError("period cap must be positive");

  std::map<std::string, Rational> fixed = options.fixed;
  for (const Pipe& p : graph.pipes()) {
    budget_of(p);
    if (p.terminal.period_fixed && !fixed.count(p.id)) fixed[p.id] = *p.terminal.period;
  }
  for (const auto& [pipe, period] : fixed) {
    if (period <= budget_of(graph.pipe(pipe)))
      throw ConfigError("pipe '" + pipe + "': fixed period " + to_string(period) + " is not larger than its budget");
  }
  for (const TimingConstraint& c : constraints) graph.require_path(c.chain);

  const AnalysisMode check_mode = verification_mode(options.mode);
  const BranchAssignment base = initial_branches(constraints);
  if (base.boundaries.size() >= 63 || (std::size_t{1} << base.boundaries.size()) > options.max_assignments)
    throw ConfigError("too many undetermined boundaries to search (" + std::to_string(base.boundaries.size()) + ")");
  const std::size_t total = std::size_t{1} << base.boundaries.size();

  auto verify = [&](const std::map<std::string, Rational>& periods,
                    const BranchAssignment& branches) -> std::optional<SynthesisResult> {
    TaskGraph solved = with_periods(graph, periods);
    for (const Pipe& p : solved.pipes())
      if (!(p.terminal.T() > p.terminal.C())) return std::nullopt;
    if (!branches.consistent_with(solved)) return std::nullopt;
    for (const Pipe& p : solved.pipes())
      if (!validate_provisioned(p)) return std::nullopt;
    std::vector<ConstraintSlack> slack = evaluate_constraints(solved, constraints, check_mode);
    for (const ConstraintSlack& s : slack)
      if (!s.met()) return std::nullopt;
    UtilizationCheck u = rms_bound_check(solved);
    if (!u.pass) return std::nullopt;
    SynthesisResult r;
    r.graph = std::move(solved);
    r.utilization = u.utilization;
    r.schedulability = u;
    r.slack = std::move(slack);
    r.branches = branches;
    return r;
  };

  for (std::size_t k = 0; k < total; ++k) {
    BranchAssignment branches = assignment_at(base, k);
    PeriodProblem problem(graph, derive_inequalities(graph, constraints, branches, options.mode), fixed,
                          options.resolution, cap);
    if (auto periods = problem.max_periods()) {
      if (auto result = verify(*periods, branches)) {
        result->assignments_tried = k + 1;
        return *result;
      }
    }
    if (problem.variables() <= 8) {
      if (auto periods = problem.exhaustive(graph, options.exhaustive_limit)) {
        if (auto result = verify(*periods, branches)) {
          result->assignments_tried = k + 1;
          result->exhaustive = true;
          return *result;
        }
      }
    }
  }

  // Name the constraints that fail on their own under every ordering of
  // their own boundaries.
  std::vector<std::string> blocking;
  for (const TimingConstraint& c : constraints) {
    BranchAssignment own = initial_branches({c});
    bool feasible = false;
    for (std::size_t k = 0; k < (std::size_t{1} << own.boundaries.size()) && !feasible; ++k) {
      BranchAssignment branches = assignment_at(own, k);
      PeriodProblem problem(graph, derive_inequalities(graph, {c}, branches, options.mode), fixed,
                            options.resolution, cap);
      feasible = problem.feasible();
    }
    if (!feasible) blocking.push_back(c.id);
  }
  std::string message = "infeasible: no period assignment satisfies all constraints (" + std::to_string(total) +
                        " branch assignment(s) tried, first: " + describe(base) + ")";
  if (!blocking.empty()) {
    message += "; blocking constraints:";
    for (const std::string& b : blocking) message += " " + b;
  } else {
    message += "; constraints are jointly infeasible or fail the schedulability bound";
  }
  throw InfeasibleError(message, blocking, total);
}

}  // namespace pipelat
