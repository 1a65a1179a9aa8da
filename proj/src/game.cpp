#include "cesim/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace cesim::game {

namespace {

std::string infeasible_message(int slot, double epsilon,
                               const EpsilonBox& box) {
  std::ostringstream msg;
  msg << "slot " << slot << ": epsilon " << epsilon << " outside the "
      << to_string(box.kind) << " box [" << box.lower << ", " << box.upper
      << "]";
  return msg.str();
}

// Trade interval of Eq.-(5) type for user n at slot t.
void trade_interval(const scenario::Scenario& s, int n, int t, double& lo,
                    double& hi) {
  const double surplus = s.surplus(n, t);
  if (surplus > 0.0) {
    lo = 0.0;
    hi = surplus;
  } else {
    lo = surplus;
    hi = 0.0;
  }
}

}  // namespace

std::string to_string(BoxCase kind) {
  switch (kind) {
    case BoxCase::all_deficit:
      return "all-deficit";
    case BoxCase::all_surplus:
      return "all-surplus";
    case BoxCase::mixed:
      return "mixed";
  }
  return "unknown";
}

signal_infeasible::signal_infeasible(int slot_, double epsilon_,
                                     const EpsilonBox& box_)
    : std::runtime_error(infeasible_message(slot_, epsilon_, box_)),
      slot(slot_),
      epsilon(epsilon_),
      box(box_) {}

ibr_divergence::ibr_divergence(Eigen::VectorXd last, int iterations_)
    : std::runtime_error("iterated best response did not converge after " +
                         std::to_string(iterations_) + " sweeps"),
      last_iterate(std::move(last)),
      iterations(iterations_) {}

double epsilon_of(const scenario::Scenario& s, double a_t, double l_q_t,
                  int t) {
  const double count = s.participant_count() + 1.0;
  return -((a_t - s.tariff.delta[t]) / s.tariff.phi[t] - s.l_p[t] - l_q_t) /
         count;
}

double price_for_epsilon(const scenario::Scenario& s, double epsilon,
                         double l_q_t, int t) {
  const double count = s.participant_count() + 1.0;
  return s.tariff.delta[t] +
         s.tariff.phi[t] * (s.l_p[t] + l_q_t - count * epsilon);
}

EpsilonBox epsilon_box(const scenario::Scenario& s, int t) {
  const scenario::SlotPartition part = partition_users(s, t);
  EpsilonBox box;
  if (part.surplus_users.empty()) {
    box.kind = BoxCase::all_deficit;
    box.upper = 0.0;
    box.lower = -std::numeric_limits<double>::infinity();
    for (int j : part.deficit_users)
      box.lower = std::max(box.lower, s.surplus(j, t));
  } else if (part.deficit_users.empty()) {
    box.kind = BoxCase::all_surplus;
    box.lower = 0.0;
    box.upper = std::numeric_limits<double>::infinity();
    for (int i : part.surplus_users)
      box.upper = std::min(box.upper, s.surplus(i, t));
  } else {
    box.kind = BoxCase::mixed;
    box.lower = 0.0;
    box.upper = 0.0;
  }
  return box;
}

double best_response(int n, const Eigen::VectorXd& x_others, double a_t,
                     double l_q_t, const scenario::Scenario& s, int t) {
  const int users = s.participant_count();
  double others_load = s.l_p[t] + l_q_t;
  int k = 0;
  for (int m = 0; m < users; ++m) {
    if (m == n) continue;
    others_load += x_others[k] - s.surplus(m, t);
    ++k;
  }
  const double phi = s.tariff.phi[t];
  const double k1 = phi * others_load + s.tariff.delta[t] - a_t;
  const double unconstrained = s.surplus(n, t) - k1 / (2.0 * phi);
  double lo, hi;
  trade_interval(s, n, t, lo, hi);
  return std::clamp(unconstrained, lo, hi);
}

NashSlotResult nash_closed_form(const scenario::Scenario& s, double a_t,
                                double l_q_t, int t, double box_tol) {
  const EpsilonBox box = epsilon_box(s, t);
  double eps = epsilon_of(s, a_t, l_q_t, t);
  if (!box.contains(eps, box_tol)) throw signal_infeasible(t, eps, box);
  eps = std::clamp(eps, box.lower, box.upper);

  NashSlotResult result;
  result.epsilon = eps;
  result.x_star.resize(s.participant_count());
  for (int n = 0; n < s.participant_count(); ++n)
    result.x_star[n] = s.surplus(n, t) - eps;
  return result;
}

NashSlotResult nash_oracle_ibr(const scenario::Scenario& s, double a_t,
                               double l_q_t, int t, double tol, int max_iter) {
  const int users = s.participant_count();
  if (max_iter < 0) max_iter = 10 * users;
  const double phi = s.tariff.phi[t];
  const double delta = s.tariff.delta[t];

  Eigen::VectorXd x = Eigen::VectorXd::Zero(users);
  double change = std::numeric_limits<double>::infinity();
  int sweep = 0;
  for (; sweep < max_iter && change > tol; ++sweep) {
    change = 0.0;
    for (int n = 0; n < users; ++n) {
      // Round-robin (Gauss-Seidel) order; the simultaneous update need not
      // converge for I >= 3.
      double others_load = s.l_p[t] + l_q_t;
      for (int m = 0; m < users; ++m)
        if (m != n) others_load += x[m] - s.surplus(m, t);
      const double k1 = phi * others_load + delta - a_t;
      const double unconstrained = s.surplus(n, t) - k1 / (2.0 * phi);
      double lo, hi;
      trade_interval(s, n, t, lo, hi);
      const double next = std::clamp(unconstrained, lo, hi);
      change = std::max(change, std::abs(next - x[n]));
      x[n] = next;
    }
  }
  if (change > tol) throw ibr_divergence(x, sweep);

  NashSlotResult result;
  result.x_star = x;
  // Common deviation only exists when no clip binds; report NaN otherwise.
  double eps = s.surplus(0, t) - x[0];
  for (int n = 1; n < users; ++n)
    if (std::abs((s.surplus(n, t) - x[n]) - eps) > 100.0 * tol)
      eps = std::numeric_limits<double>::quiet_NaN();
  result.epsilon = eps;
  return result;
}

TradeProfile repeated_game(const scenario::Scenario& s,
                           const OperatorSignal& signal, exec mode) {
  const int slots = s.grid.slots;
  const int users = s.participant_count();
  if (signal.slots() != slots)
    throw std::invalid_argument("repeated_game: signal length must equal H");

  TradeProfile trades;
  trades.x.resize(users, slots);
  const Eigen::VectorXd l_q = signal.l_q();

  struct SlotError {
    bool failed = false;
    double epsilon = 0.0;
    EpsilonBox box;
  };
  std::vector<SlotError> errors(slots);

  parallel_for(
      slots,
      [&](std::ptrdiff_t t) {
        try {
          const NashSlotResult result =
              nash_closed_form(s, signal.a[t], l_q[t], static_cast<int>(t));
          trades.x.col(t) = result.x_star;
        } catch (const signal_infeasible& e) {
          errors[t] = {true, e.epsilon, e.box};
        }
      },
      mode);

  for (int t = 0; t < slots; ++t)
    if (errors[t].failed)
      throw signal_infeasible(t, errors[t].epsilon, errors[t].box);
  return trades;
}

}  // namespace cesim::game
