#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

#include "cesim/parallel.hpp"
#include "cesim/scenario.hpp"
#include "cesim/signal.hpp"
#include "cesim/trade.hpp"

namespace cesim::game {

// Equilibrium of the per-slot stage game: every user's trade deviates from
// their surplus by the same amount, x*_n = s_n - epsilon.
struct NashSlotResult {
  Eigen::VectorXd x_star;  // length I
  double epsilon = 0.0;    // NaN from the oracle when clipping broke symmetry
};

enum class BoxCase { all_deficit, all_surplus, mixed };

std::string to_string(BoxCase kind);

// Admissible range of epsilon(t) that keeps every closed-form response inside
// its trade interval: [max s_j, 0] when all users are deficit, [0, min s_i]
// when all are surplus, {0} when the classes mix.
struct EpsilonBox {
  double lower = 0.0;
  double upper = 0.0;
  BoxCase kind = BoxCase::mixed;

  bool contains(double eps, double tol = 0.0) const {
    return eps >= lower - tol && eps <= upper + tol;
  }
};

struct signal_infeasible : std::runtime_error {
  signal_infeasible(int slot_, double epsilon_, const EpsilonBox& box_);
  int slot;
  double epsilon;
  EpsilonBox box;
};

struct ibr_divergence : std::runtime_error {
  ibr_divergence(Eigen::VectorXd last, int iterations_);
  Eigen::VectorXd last_iterate;
  int iterations;
};

// epsilon(t) = -(I+1)^-1 [ (a - delta_t)/phi_t - l_P(t) - l_Q(t) ]
double epsilon_of(const scenario::Scenario& s, double a_t, double l_q_t,
                  int t);
// CES price that produces the given epsilon at slot t:
// a = delta_t + phi_t (l_P + l_Q - (I+1) epsilon)
double price_for_epsilon(const scenario::Scenario& s, double epsilon,
                         double l_q_t, int t);

EpsilonBox epsilon_box(const scenario::Scenario& s, int t);

// Cost-minimizing trade of user n against fixed rivals, clipped to the trade
// interval of the user's class ([0, s_n] surplus, [s_n, 0] deficit).
double best_response(int n, const Eigen::VectorXd& x_others, double a_t,
                     double l_q_t, const scenario::Scenario& s, int t);

// Closed-form Nash equilibrium of the stage game. Throws signal_infeasible
// when epsilon falls outside the slot's box beyond tolerance (the closed form
// is only the equilibrium when no trade-interval clip binds).
NashSlotResult nash_closed_form(const scenario::Scenario& s, double a_t,
                                double l_q_t, int t, double box_tol = 1e-6);

// Independent oracle: round-robin clipped best responses to a fixed point.
// max_iter < 0 selects the default of 10 * I sweeps.
NashSlotResult nash_oracle_ibr(const scenario::Scenario& s, double a_t,
                               double l_q_t, int t, double tol = 1e-8,
                               int max_iter = -1);

// Stacks the per-slot equilibria into the I x H trade profile. Slots are
// independent given the signal and may be solved in parallel.
TradeProfile repeated_game(const scenario::Scenario& s,
                           const OperatorSignal& signal,
                           exec mode = exec::serial);

}  // namespace cesim::game
