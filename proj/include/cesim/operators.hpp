#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "cesim/game.hpp"
#include "cesim/outcome.hpp"
#include "cesim/qpsolve.hpp"
#include "cesim/scenario.hpp"
#include "cesim/storage.hpp"
#include "cesim/trade.hpp"

namespace cesim::operators {

struct solver_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-slot coefficients of the competitive operator's objective
// sum_t (lambda a^2 + mu a + nu l_Q^2 + xi l_Q), obtained by substituting the
// users' equilibrium response into the revenue. lambda, nu < 0 always.
struct CompetitiveObjectiveCoefficients {
  double lambda = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  double xi = 0.0;
  double eval(double a, double l_q) const {
    return lambda * a * a + mu * a + nu * l_q * l_q + xi * l_q;
  }
};

// Per-slot coefficients of the benevolent operator's objective
// sum_t (gamma1 l_Q^2 + gamma2 l_Q + gamma3); the price is pinned to
// a = delta + phi (l_Q + l_P).
struct BenevolentObjectiveCoefficients {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double eval(double l_q) const {
    return (gamma1 * l_q + gamma2) * l_q + gamma3;
  }
};

CompetitiveObjectiveCoefficients competitive_coefficients(
    const scenario::Scenario& s, int t);
BenevolentObjectiveCoefficients benevolent_coefficients(
    const scenario::Scenario& s, int t);

struct StackelbergOutcome {
  game::OperatorSignal signal;
  TradeProfile trades;
  storage::ChargeTrajectory trajectory;
  Eigen::VectorXd prices;
  double revenue = 0.0;
  std::vector<IterationRecord> iterations;
  bool converged = true;
};

struct SolveOptions {
  double qp_tol = 1e-8;
  int qp_max_iter = 200;
};

// Cooperative benchmark: minimizes the community's total grid payment over
// user trades and CES-grid exchange. No price signal exists; revenue is
// reported with a == 0 and is typically a loss.
StackelbergOutcome centralized_solve(const scenario::Scenario& s,
                                     const SolveOptions& options = {});

// One leader step of the competitive model: maximizes the coefficient-form
// objective over (a, l_Q+-) with the user flows in the storage constraints
// frozen at the supplied trades.
game::OperatorSignal competitive_leader_qp(const scenario::Scenario& s,
                                           const TradeProfile& trades,
                                           const SolveOptions& options = {});

// Single-QP solve of the competitive model with the user flows in the
// storage constraints responding to (a, l_Q) through the equilibrium map;
// the backward-induction optimum the iterative loop should reach.
StackelbergOutcome competitive_direct(const scenario::Scenario& s,
                                      const SolveOptions& options = {});

// The assembled minimization problem behind competitive_direct, variables
// laid out [a(0..H-1) | lq_plus | lq_minus]. pin_epsilon_zero replaces every
// epsilon box with the equality epsilon = 0 (the benevolent restriction).
qp::QpProblem competitive_direct_problem(const scenario::Scenario& s,
                                         bool pin_epsilon_zero = false);

// Feasible starting signal for the iteration: epsilon chosen per slot by a
// small QP (l_Q pinned to zero when possible, freed otherwise).
game::OperatorSignal initial_signal(const scenario::Scenario& s,
                                    const SolveOptions& options = {});

// The two-step leader/followers loop with relative-change termination
// |rho(r) - rho(r-1)|_2 / |rho(r)|_2 <= tau.
StackelbergOutcome algorithm1(const scenario::Scenario& s, double tau = 0.002,
                              int max_rounds = 100,
                              const SolveOptions& options = {});

// Restricted leader: price pinned to the grid price, only l_Q free. At its
// equilibrium every participating user's grid load vanishes.
StackelbergOutcome benevolent_solve(const scenario::Scenario& s,
                                    const SolveOptions& options = {});

struct ParetoVerdict {
  bool zero_sum_ok = true;
  double worst_residual = 0.0;
  int worst_slot = -1;
  double worst_theta = 0.0;
};

// Proposition-3 construction: scale the aggregate user trade by (1 + theta)
// and shift l_Q to keep the total grid load fixed; the operator's and the
// users' cost changes must cancel exactly.
ParetoVerdict pareto_perturbation_check(
    const StackelbergOutcome& outcome, const scenario::Scenario& s,
    const std::vector<double>& thetas = {-0.1, -0.05, -0.01, 0.01, 0.05, 0.1});

OutcomeReport to_report(const scenario::Scenario& s,
                        const StackelbergOutcome& outcome, Model model);

}  // namespace cesim::operators
