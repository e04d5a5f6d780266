// Consensus ADMM for hinge-loss MAP inference.
//
// Every hinge term and every summation constraint owns a local copy of the
// variables it touches. Each iteration minimizes every local objective plus
// a quadratic penalty towards the consensus (all closed form), averages the
// local copies into the consensus clipped to [0,1], and takes a dual step.

#include <algorithm>
#include <barrier>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <thread>

#include "solvers.hpp"

namespace pslvqa::detail {

namespace {

enum class BlockKind { hinge, hard, summation };

struct Block {
  BlockKind kind = BlockKind::hinge;
  std::vector<std::size_t> vars;
  std::vector<double> coef;
  double offset = 0.0;
  double weight = 0.0;
  double bound = 0.0;
  double norm_sq = 0.0;
  std::vector<double> x;
  std::vector<double> u;
};

// argmin_x  w * max(0, offset + a.x) + rho/2 |x - v|^2
void prox_hinge(Block& b, const std::vector<double>& v, double rho) {
  double lin = b.offset;
  for (std::size_t k = 0; k < v.size(); ++k) lin += b.coef[k] * v[k];
  if (lin <= 0.0) {
    b.x = v;
    return;
  }
  double shift = b.weight / rho;
  if (lin - shift * b.norm_sq >= 0.0) {
    for (std::size_t k = 0; k < v.size(); ++k) b.x[k] = v[k] - shift * b.coef[k];
    return;
  }
  double t = lin / b.norm_sq;
  for (std::size_t k = 0; k < v.size(); ++k) b.x[k] = v[k] - t * b.coef[k];
}

// Projection onto {x : offset + a.x <= 0}.
void prox_hard(Block& b, const std::vector<double>& v) {
  double lin = b.offset;
  for (std::size_t k = 0; k < v.size(); ++k) lin += b.coef[k] * v[k];
  if (lin <= 0.0) {
    b.x = v;
    return;
  }
  double t = lin / b.norm_sq;
  for (std::size_t k = 0; k < v.size(); ++k) b.x[k] = v[k] - t * b.coef[k];
}

// Splits [0, n) into `threads` chunks and runs `body(begin, end)` on each,
// reusing the same worker threads for every call.
class ChunkRunner {
 public:
  ChunkRunner(unsigned threads, std::size_t n) : threads_(std::max(1u, threads)), n_(n) {
    if (threads_ == 1) return;
    barrier_.emplace(static_cast<std::ptrdiff_t>(threads_));
    for (unsigned t = 1; t < threads_; ++t)
      workers_.emplace_back([this, t] {
        while (true) {
          barrier_->arrive_and_wait();
          if (stop_) return;
          run_chunk(t);
          barrier_->arrive_and_wait();
        }
      });
  }

  ~ChunkRunner() {
    if (threads_ == 1) return;
    stop_ = true;
    barrier_->arrive_and_wait();
    for (auto& w : workers_) w.join();
  }

  void run(const std::function<void(std::size_t, std::size_t)>& body) {
    body_ = &body;
    if (threads_ == 1) {
      body(0, n_);
      return;
    }
    barrier_->arrive_and_wait();
    run_chunk(0);
    barrier_->arrive_and_wait();
  }

 private:
  void run_chunk(unsigned t) {
    std::size_t chunk = (n_ + threads_ - 1) / threads_;
    std::size_t begin = std::min(n_, t * chunk);
    std::size_t end = std::min(n_, begin + chunk);
    if (begin < end) (*body_)(begin, end);
  }

  unsigned threads_;
  std::size_t n_;
  std::optional<std::barrier<>> barrier_;
  std::vector<std::jthread> workers_;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  bool stop_ = false;
};

}  // namespace

Solution solve_admm(const InferenceProblem& problem, const SolverConfig& config) {
  const std::size_t n = problem.num_variables;
  const double rho = config.step_size;

  std::vector<Block> blocks;
  for (const HingeTerm& t : problem.terms) {
    if (t.coefficients.empty()) continue;  // constant term
    if (!t.hard && t.weight == 0.0) continue;
    Block b;
    b.kind = t.hard ? BlockKind::hard : BlockKind::hinge;
    b.offset = t.offset;
    b.weight = t.weight;
    for (const auto& [i, c] : t.coefficients) {
      b.vars.push_back(i);
      b.coef.push_back(c);
      b.norm_sq += c * c;
    }
    blocks.push_back(std::move(b));
  }
  for (const LinearConstraint& c : problem.constraints) {
    if (c.variables.empty()) continue;
    Block b;
    b.kind = BlockKind::summation;
    b.vars = c.variables;
    b.bound = c.bound;
    blocks.push_back(std::move(b));
  }

  std::vector<double> count(n, 0.0);
  std::size_t copies = 0;
  for (Block& b : blocks) {
    b.x.assign(b.vars.size(), 0.0);
    b.u.assign(b.vars.size(), 0.0);
    for (std::size_t i : b.vars) count[i] += 1.0;
    copies += b.vars.size();
  }

  Solution sol;
  std::vector<double> z(n, 0.0), z_old(n, 0.0), acc(n, 0.0), candidate(n, 0.0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_values(n, 0.0);

  auto consider = [&]() {
    candidate = z;
    repair(problem, candidate);
    if (!problem.feasible(candidate, 1e-6)) return;
    double f = problem.objective(candidate);
    if (f < best) {
      best = f;
      best_values = candidate;
    }
  };

  if (blocks.empty()) {
    sol.values.assign(n, 0.0);
    sol.objective = problem.objective(sol.values);
    sol.converged = true;
    sol.objective_trace = {sol.objective};
    return sol;
  }

  // Thresholds on the primal and dual residuals (absolute + relative parts).
  const double eps_abs = config.tolerance * 1e-2;
  const double eps_rel = config.tolerance * 1e-1;

  unsigned threads = blocks.size() >= 2048 ? config.threads : 1;
  ChunkRunner runner(threads, blocks.size());
  std::function<void(std::size_t, std::size_t)> local_step = [&](std::size_t begin,
                                                                 std::size_t end) {
    std::vector<double> v;
    for (std::size_t bi = begin; bi < end; ++bi) {
      Block& b = blocks[bi];
      v.resize(b.vars.size());
      for (std::size_t k = 0; k < b.vars.size(); ++k) v[k] = z[b.vars[k]] - b.u[k];
      switch (b.kind) {
        case BlockKind::hinge: prox_hinge(b, v, rho); break;
        case BlockKind::hard: prox_hard(b, v); break;
        case BlockKind::summation:
          b.x = v;
          project_capped_simplex(b.x, b.bound);
          break;
      }
    }
  };

  std::size_t iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    runner.run(local_step);

    std::fill(acc.begin(), acc.end(), 0.0);
    for (const Block& b : blocks)
      for (std::size_t k = 0; k < b.vars.size(); ++k) acc[b.vars[k]] += b.x[k] + b.u[k];
    z_old = z;
    for (std::size_t i = 0; i < n; ++i)
      z[i] = count[i] > 0.0 ? std::clamp(acc[i] / count[i], 0.0, 1.0) : 0.0;

    double r_sq = 0.0, x_sq = 0.0, z_sq = 0.0, u_sq = 0.0;
    for (Block& b : blocks) {
      for (std::size_t k = 0; k < b.vars.size(); ++k) {
        double zi = z[b.vars[k]];
        double diff = b.x[k] - zi;
        b.u[k] += diff;
        r_sq += diff * diff;
        x_sq += b.x[k] * b.x[k];
        z_sq += zi * zi;
        u_sq += b.u[k] * b.u[k];
      }
    }
    double s_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = z[i] - z_old[i];
      s_sq += count[i] * d * d;
    }
    double primal = std::sqrt(r_sq);
    double dual = rho * std::sqrt(s_sq);
    double eps_pri =
        std::sqrt(static_cast<double>(copies)) * eps_abs + eps_rel * std::sqrt(std::max(x_sq, z_sq));
    double eps_dual = std::sqrt(static_cast<double>(copies)) * eps_abs + eps_rel * rho * std::sqrt(u_sq);

    consider();
    sol.objective_trace.push_back(best);
    if (iter > 0 && primal <= eps_pri && dual <= eps_dual) {
      sol.converged = true;
      ++iter;
      break;
    }
  }

  sol.iterations = iter;
  if (!std::isfinite(best)) {
    // No feasible iterate (only possible with hard rules): report the last one.
    sol.values = z;
    repair(problem, sol.values);
    sol.objective = problem.objective(sol.values);
    sol.converged = false;
    if (!problem.feasible(sol.values, 1e-6) && sol.iterations == config.max_iterations)
      throw InfeasibleProblem("hard rules could not be satisfied");
    return sol;
  }
  sol.values = std::move(best_values);
  sol.objective = problem.objective(sol.values);
  return sol;
}

}  // namespace pslvqa::detail
