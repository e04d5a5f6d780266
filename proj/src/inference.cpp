#include "pslvqa/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "solvers.hpp"

namespace pslvqa {

namespace {

void check_truth(double v, const char* op) {
  if (!(v >= 0.0 && v <= 1.0))
    throw Error(std::string(op) + ": truth value " + std::to_string(v) + " outside [0,1]");
}

double atom_value(std::span<const double> values, AtomId id) {
  if (id >= values.size() || std::isnan(values[id]))
    throw Error("atom " + std::to_string(id) + " has no assigned value");
  return values[id];
}

}  // namespace

double luk_and(double a, double b) {
  check_truth(a, "luk_and");
  check_truth(b, "luk_and");
  return std::max(0.0, a + b - 1.0);
}

double luk_or(double a, double b) {
  check_truth(a, "luk_or");
  check_truth(b, "luk_or");
  return std::min(1.0, a + b);
}

double luk_not(double a) {
  check_truth(a, "luk_not");
  return 1.0 - a;
}

double luk_conjunction(std::span<const double> values) {
  if (values.empty()) return 1.0;
  double sum = 0.0;
  for (double v : values) {
    check_truth(v, "luk_conjunction");
    sum += v;
  }
  return std::max(0.0, sum - static_cast<double>(values.size() - 1));
}

double distance_to_satisfaction(const GroundRule& rule, std::span<const double> atom_values) {
  double d = 1.0;
  for (AtomId id : rule.i_plus) d -= atom_value(atom_values, id);
  for (AtomId id : rule.i_minus) d -= 1.0 - atom_value(atom_values, id);
  return std::max(d, 0.0);
}

double HingeTerm::linear(std::span<const double> y) const {
  double v = offset;
  for (const auto& [i, c] : coefficients) v += c * y[i];
  return v;
}

InferenceProblem InferenceProblem::from_ground_program(const GroundProgram& ground,
                                                       const Database& db) {
  InferenceProblem problem;
  problem.num_variables = ground.targets.size();
  std::unordered_map<AtomId, std::size_t> var_of;
  for (std::size_t i = 0; i < ground.targets.size(); ++i) var_of.emplace(ground.targets[i], i);

  auto observed = [&](AtomId id) {
    auto v = db.value(id);
    if (!v) throw Error("observed atom without a value: " + db.atom(id).to_string());
    return *v;
  };

  for (std::size_t r = 0; r < ground.potentials.size(); ++r) {
    const GroundRule& gr = ground.potentials[r];
    HingeTerm term;
    term.weight = gr.weight;
    term.hard = gr.is_hard;
    term.source = r;
    term.offset = 1.0;
    std::unordered_map<std::size_t, double> coef;
    std::vector<std::size_t> order;
    auto add = [&](std::size_t var, double c) {
      auto [it, inserted] = coef.emplace(var, 0.0);
      if (inserted) order.push_back(var);
      it->second += c;
    };
    for (AtomId id : gr.i_plus) {
      if (auto it = var_of.find(id); it != var_of.end())
        add(it->second, -1.0);
      else
        term.offset -= observed(id);
    }
    for (AtomId id : gr.i_minus) {
      if (auto it = var_of.find(id); it != var_of.end()) {
        add(it->second, 1.0);
        term.offset -= 1.0;
      } else {
        term.offset -= 1.0 - observed(id);
      }
    }
    for (std::size_t var : order)
      if (coef[var] != 0.0) term.coefficients.emplace_back(var, coef[var]);
    problem.terms.push_back(std::move(term));
  }

  for (const GroundConstraint& gc : ground.constraints) {
    LinearConstraint lc;
    lc.bound = gc.bound;
    for (AtomId id : gc.atoms) lc.variables.push_back(var_of.at(id));
    problem.constraints.push_back(std::move(lc));
  }
  return problem;
}

double InferenceProblem::objective(std::span<const double> y) const {
  double total = 0.0;
  for (const HingeTerm& t : terms)
    if (!t.hard) total += t.weight * std::max(0.0, t.linear(y));
  return total;
}

bool InferenceProblem::feasible(std::span<const double> y, double tolerance) const {
  if (y.size() != num_variables) return false;
  for (double v : y)
    if (!(v >= -tolerance && v <= 1.0 + tolerance)) return false;
  for (const LinearConstraint& c : constraints) {
    double sum = 0.0;
    for (std::size_t i : c.variables) sum += y[i];
    if (sum > c.bound + tolerance) return false;
  }
  for (const HingeTerm& t : terms)
    if (t.hard && t.linear(y) > tolerance) return false;
  return true;
}

double InferenceProblem::total_weight() const {
  double w = 0.0;
  for (const HingeTerm& t : terms)
    if (!t.hard) w += t.weight;
  return w;
}

void project_capped_simplex(std::span<double> v, double bound) {
  auto clipped_sum = [&](double shift) {
    double s = 0.0;
    for (double x : v) s += std::clamp(x - shift, 0.0, 1.0);
    return s;
  };
  if (clipped_sum(0.0) <= bound) {
    for (double& x : v) x = std::clamp(x, 0.0, 1.0);
    return;
  }
  if (bound <= 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  // clipped_sum is continuous and non-increasing in the shift; the
  // breakpoints x and x - 1 bracket the root, so solve exactly on the
  // bracketing linear piece.
  std::vector<double> breaks;
  breaks.reserve(2 * v.size() + 1);
  breaks.push_back(0.0);
  for (double x : v) {
    if (x > 0.0) breaks.push_back(x);
    if (x - 1.0 > 0.0) breaks.push_back(x - 1.0);
  }
  std::sort(breaks.begin(), breaks.end());
  double lo = 0.0, f_lo = clipped_sum(0.0);
  double shift = breaks.back();
  for (double b : breaks) {
    if (b <= lo) continue;
    double f_b = clipped_sum(b);
    if (f_b <= bound) {
      shift = f_lo == f_b ? b : lo + (f_lo - bound) * (b - lo) / (f_lo - f_b);
      break;
    }
    lo = b;
    f_lo = f_b;
  }
  for (double& x : v) x = std::clamp(x - shift, 0.0, 1.0);
}

namespace detail {

void repair(const InferenceProblem& problem, std::span<double> y) {
  for (double& v : y) v = std::clamp(v, 0.0, 1.0);
  std::vector<double> buf;
  // Summation scopes are disjoint in grounded programs; overlapping scopes
  // are handled by a few rounds of alternating projection.
  for (int round = 0; round < 50; ++round) {
    bool violated = false;
    for (const LinearConstraint& c : problem.constraints) {
      double sum = 0.0;
      for (std::size_t i : c.variables) sum += y[i];
      if (sum <= c.bound) continue;
      violated = true;
      buf.clear();
      for (std::size_t i : c.variables) buf.push_back(y[i]);
      project_capped_simplex(buf, c.bound);
      for (std::size_t k = 0; k < c.variables.size(); ++k) y[c.variables[k]] = buf[k];
    }
    if (!violated || problem.constraints.size() <= 1) break;
  }
}

}  // namespace detail

Solution map_inference(const InferenceProblem& problem, const SolverConfig& config) {
  for (const LinearConstraint& c : problem.constraints)
    if (!(c.bound >= 0.0))
      throw InfeasibleProblem("summation bound " + std::to_string(c.bound) +
                              " is negative; no assignment in [0,1] satisfies it");
  for (const HingeTerm& t : problem.terms)
    for (const auto& [i, c] : t.coefficients)
      if (i >= problem.num_variables) throw Error("hinge term references an unknown variable");
  if (config.tolerance <= 0.0 || config.step_size <= 0.0)
    throw Error("solver tolerance and step size must be positive");

  if (config.method == SolverMethod::simplex) return detail::solve_simplex(problem, config);
  return detail::solve_admm(problem, config);
}

Solution grid_oracle(const InferenceProblem& problem, double step) {
  if (problem.num_variables > 4)
    throw Error("grid oracle supports at most 4 targets, got " +
                std::to_string(problem.num_variables));
  if (!(step > 0.0 && step <= 0.5)) throw Error("grid step must lie in (0, 0.5]");

  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    double v = static_cast<double>(k) * step;
    if (v > 1.0 + 1e-12) break;
    grid.push_back(std::min(v, 1.0));
  }
  if (grid.back() < 1.0 - 1e-12) grid.push_back(1.0);

  const std::size_t n = problem.num_variables;
  Solution best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> index(n, 0);
  std::vector<double> y(n, 0.0);
  std::size_t visited = 0;
  while (true) {
    for (std::size_t i = 0; i < n; ++i) y[i] = grid[index[i]];
    ++visited;
    if (problem.feasible(y, 1e-9)) {
      double f = problem.objective(y);
      if (f < best.objective) {
        best.objective = f;
        best.values = y;
      }
    }
    std::size_t i = 0;
    while (i < n && ++index[i] == grid.size()) index[i++] = 0;
    if (i == n) break;
  }
  if (best.values.size() != n && n > 0)
    throw InfeasibleProblem("no feasible grid point");
  if (n == 0) best.objective = problem.objective(y);
  best.iterations = visited;
  best.converged = true;
  best.objective_trace = {best.objective};
  return best;
}

std::vector<double> atom_assignment(const Database& db, const GroundProgram& ground,
                                    std::span<const double> target_values) {
  if (target_values.size() != ground.targets.size())
    throw Error("assignment size does not match the number of targets");
  std::vector<double> values(db.size(), std::numeric_limits<double>::quiet_NaN());
  for (AtomId id = 0; id < db.size(); ++id)
    if (db.status(id) == AtomStatus::observed) values[id] = *db.value(id);
  for (std::size_t i = 0; i < ground.targets.size(); ++i)
    values[ground.targets[i]] = target_values[i];
  return values;
}

}  // namespace pslvqa
