// MAP inference as a linear program: every hinge w * max(0, l(y)) becomes an
// epigraph variable t >= l(y), t >= 0 with cost w. Solved with a dense
// two-phase tableau simplex using Bland's rule, so it is exact (to floating
// point) but meant for small and medium problems.

#include <algorithm>
#include <cmath>
#include <limits>

#include "solvers.hpp"

namespace pslvqa::detail {

namespace {

constexpr double kEps = 1e-10;

enum class Sense { le, ge };

struct LpRow {
  std::vector<std::pair<std::size_t, double>> coef;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return data_[r * (cols_ + 1) + cols_]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc, std::vector<double>& obj) {
    double p = at(pr, pc);
    double* prow = &data_[pr * (cols_ + 1)];
    for (std::size_t c = 0; c <= cols_; ++c) prow[c] /= p;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      double f = at(r, pc);
      if (f == 0.0) continue;
      double* row = &data_[r * (cols_ + 1)];
      for (std::size_t c = 0; c <= cols_; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    double f = obj[pc];
    if (f != 0.0) {
      for (std::size_t c = 0; c <= cols_; ++c) obj[c] -= f * prow[c];
      obj[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  void remove_row(std::size_t r) {
    data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)),
                data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (cols_ + 1)));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

// Objective row holds reduced costs; its last entry is minus the objective.
std::vector<double> objective_row(Tableau& t, const std::vector<double>& cost) {
  std::vector<double> obj(t.cols() + 1, 0.0);
  for (std::size_t c = 0; c < t.cols(); ++c) obj[c] = cost[c];
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double cb = cost[t.basis()[r]];
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c < t.cols(); ++c) obj[c] -= cb * t.at(r, c);
    obj[t.cols()] -= cb * t.rhs(r);
  }
  return obj;
}

enum class Status { optimal, iteration_limit };

Status run_simplex(Tableau& t, std::vector<double>& obj, const std::vector<bool>& allowed,
                   std::size_t max_pivots, std::size_t& pivots, std::vector<double>* trace) {
  while (pivots < max_pivots) {
    std::size_t enter = t.cols();
    for (std::size_t c = 0; c < t.cols(); ++c)
      if (allowed[c] && obj[c] < -kEps) {
        enter = c;
        break;
      }
    if (enter == t.cols()) return Status::optimal;
    std::size_t leave = t.rows();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      double a = t.at(r, enter);
      if (a <= kEps) continue;
      double ratio = t.rhs(r) / a;
      if (ratio < best_ratio - kEps ||
          (ratio <= best_ratio + kEps && leave < t.rows() && t.basis()[r] < t.basis()[leave])) {
        best_ratio = std::min(best_ratio, ratio);
        leave = r;
      }
    }
    // Every column is bounded by the box rows, so the LP cannot be unbounded.
    if (leave == t.rows()) throw Error("linear program is unbounded");
    t.pivot(leave, enter, obj);
    ++pivots;
    if (trace) trace->push_back(-obj[t.cols()]);
  }
  return Status::iteration_limit;
}

}  // namespace

Solution solve_simplex(const InferenceProblem& problem, const SolverConfig& config) {
  const std::size_t n = problem.num_variables;
  std::vector<LpRow> rows;
  std::vector<double> cost(n, 0.0);
  double constant = 0.0;

  for (std::size_t i = 0; i < n; ++i) rows.push_back({{{i, 1.0}}, Sense::le, 1.0});
  for (const HingeTerm& term : problem.terms) {
    if (term.coefficients.empty()) {
      if (term.hard) {
        if (term.offset > 1e-9) throw InfeasibleProblem("a hard rule is violated by the evidence");
      } else {
        constant += term.weight * std::max(0.0, term.offset);
      }
      continue;
    }
    if (term.hard) {
      rows.push_back({term.coefficients, Sense::le, -term.offset});
      continue;
    }
    if (term.weight == 0.0) continue;
    std::size_t tcol = cost.size();
    cost.push_back(term.weight);
    LpRow row;
    row.coef.emplace_back(tcol, 1.0);
    for (const auto& [i, c] : term.coefficients) row.coef.emplace_back(i, -c);
    row.sense = Sense::ge;
    row.rhs = term.offset;
    rows.push_back(std::move(row));
  }
  for (const LinearConstraint& c : problem.constraints) {
    LpRow row;
    for (std::size_t i : c.variables) row.coef.emplace_back(i, 1.0);
    row.rhs = c.bound;
    rows.push_back(std::move(row));
  }

  // Normalize to non-negative right-hand sides.
  for (LpRow& row : rows) {
    if (row.rhs < 0.0) {
      row.rhs = -row.rhs;
      for (auto& [i, c] : row.coef) c = -c;
      row.sense = row.sense == Sense::le ? Sense::ge : Sense::le;
    }
  }

  const std::size_t structural = cost.size();
  std::size_t slack_cols = rows.size();
  std::size_t artificial = 0;
  for (const LpRow& row : rows)
    if (row.sense == Sense::ge) ++artificial;
  const std::size_t cols = structural + slack_cols + artificial;

  Tableau t(rows.size(), cols);
  std::vector<bool> is_artificial(cols, false);
  std::size_t next_art = structural + slack_cols;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [i, c] : rows[r].coef) t.at(r, i) += c;
    t.rhs(r) = rows[r].rhs;
    std::size_t slack = structural + r;
    if (rows[r].sense == Sense::le) {
      t.at(r, slack) = 1.0;
      t.basis()[r] = slack;
    } else {
      t.at(r, slack) = -1.0;
      t.at(r, next_art) = 1.0;
      is_artificial[next_art] = true;
      t.basis()[r] = next_art++;
    }
  }

  Solution sol;
  std::size_t pivots = 0;
  const std::size_t max_pivots = std::max<std::size_t>(config.max_iterations, 50 * (rows.size() + cols));
  std::vector<bool> allowed(cols, true);

  if (artificial > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c)
      if (is_artificial[c]) phase1[c] = 1.0;
    auto obj = objective_row(t, phase1);
    if (run_simplex(t, obj, allowed, max_pivots, pivots, nullptr) != Status::optimal) {
      sol.values.assign(n, 0.0);
      sol.objective = problem.objective(sol.values);
      sol.iterations = pivots;
      return sol;
    }
    if (-obj[cols] > 1e-9) throw InfeasibleProblem("hard rules and constraints are infeasible");
    // Drive remaining artificial variables out of the basis.
    for (std::size_t r = 0; r < t.rows();) {
      if (!is_artificial[t.basis()[r]]) {
        ++r;
        continue;
      }
      std::size_t pc = cols;
      for (std::size_t c = 0; c < cols; ++c)
        if (!is_artificial[c] && std::abs(t.at(r, c)) > 1e-9) {
          pc = c;
          break;
        }
      if (pc == cols) {
        t.remove_row(r);  // redundant row
        continue;
      }
      t.pivot(r, pc, obj);
      ++r;
    }
    for (std::size_t c = 0; c < cols; ++c) allowed[c] = !is_artificial[c];
  }

  std::vector<double> phase2(cols, 0.0);
  for (std::size_t c = 0; c < structural; ++c) phase2[c] = cost[c];
  auto obj = objective_row(t, phase2);
  sol.objective_trace.push_back(-obj[cols] + constant);
  std::vector<double> trace;
  Status status = run_simplex(t, obj, allowed, max_pivots, pivots, &trace);
  for (double v : trace) sol.objective_trace.push_back(v + constant);

  std::vector<double> y(n, 0.0);
  for (std::size_t r = 0; r < t.rows(); ++r)
    if (t.basis()[r] < n) y[t.basis()[r]] = t.rhs(r);
  repair(problem, y);
  sol.values = std::move(y);
  sol.objective = problem.objective(sol.values);
  sol.iterations = pivots;
  sol.converged = status == Status::optimal;
  return sol;
}

}  // namespace pslvqa::detail
