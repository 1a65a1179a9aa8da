#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "cesim/game.hpp"
#include "cesim/pricing.hpp"
#include "cesim/rng.hpp"
#include "cesim/scenario.hpp"

using namespace cesim;
using namespace cesim::game;

namespace {

// Scenario with prescribed surpluses at a single slot (H = 1).
scenario::Scenario surplus_scenario(const std::vector<double>& surpluses,
                                    double phi, double delta, double l_p) {
  scenario::Scenario s;
  s.grid.slots = 1;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  for (std::size_t n = 0; n < surpluses.size(); ++n) {
    scenario::UserProfile user;
    user.id = static_cast<int>(n);
    user.demand = Eigen::VectorXd::Constant(1, std::max(-surpluses[n], 0.0));
    user.generation = Eigen::VectorXd::Constant(1, std::max(surpluses[n], 0.0));
    s.users.push_back(user);
  }
  s.l_p = Eigen::VectorXd::Constant(1, l_p);
  s.ces.capacity = 1e6;
  s.ces.q0 = 0.0;
  s.tariff.phi = Eigen::VectorXd::Constant(1, phi);
  s.tariff.delta = Eigen::VectorXd::Constant(1, delta);
  s.l_max = 1e9;
  return s;
}

scenario::Scenario random_scenario(rng& gen, int max_users, int max_slots) {
  const int users = 1 + static_cast<int>(gen.next_u64() % max_users);
  const int slots = 1 + static_cast<int>(gen.next_u64() % max_slots);
  scenario::Scenario s;
  s.grid.slots = slots;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  for (int n = 0; n < users; ++n) {
    scenario::UserProfile user;
    user.id = n;
    user.demand = Eigen::VectorXd::Zero(slots);
    user.generation = Eigen::VectorXd::Zero(slots);
    for (int t = 0; t < slots; ++t) {
      const double surplus = gen.uniform(-4.0, 4.0);
      if (surplus >= 0.0)
        user.generation[t] = surplus;
      else
        user.demand[t] = -surplus;
    }
    s.users.push_back(user);
  }
  s.l_p = Eigen::VectorXd::Zero(slots);
  for (int t = 0; t < slots; ++t) s.l_p[t] = gen.uniform(1.0, 20.0);
  s.ces.capacity = 1e6;
  s.ces.q0 = 0.0;
  s.tariff.phi = Eigen::VectorXd::Zero(slots);
  s.tariff.delta = Eigen::VectorXd::Zero(slots);
  for (int t = 0; t < slots; ++t) {
    s.tariff.phi[t] = gen.uniform(0.05, 2.0);
    s.tariff.delta[t] = gen.uniform(0.0, 10.0);
  }
  s.l_max = 1e9;
  return s;
}

// Signal whose epsilon sits at the given quantile of the slot's box.
void signal_at_quantile(const scenario::Scenario& s, double quantile,
                        double l_q, int t, double& a_out, double& lq_out) {
  const EpsilonBox box = epsilon_box(s, t);
  const double eps = box.lower + quantile * (box.upper - box.lower);
  a_out = price_for_epsilon(s, eps, l_q, t);
  lq_out = l_q;
}

double slot_cost(const scenario::Scenario& s, const Eigen::VectorXd& x, int n,
                 double a, double l_q, int t) {
  double load = s.l_p[t] + l_q;
  for (int m = 0; m < s.participant_count(); ++m)
    load += x[m] - s.surplus(m, t);
  const double price = s.tariff.phi[t] * load + s.tariff.delta[t];
  return price * (x[n] - s.surplus(n, t)) - a * x[n];
}

}  // namespace

TEST_CASE("epsilon box cases") {
  const scenario::Scenario deficit = surplus_scenario({-2, -5}, 1, 0, 0);
  EpsilonBox box = epsilon_box(deficit, 0);
  CHECK(box.kind == BoxCase::all_deficit);
  CHECK(box.lower == doctest::Approx(-2.0));
  CHECK(box.upper == 0.0);

  const scenario::Scenario surplus = surplus_scenario({1, 4}, 1, 0, 0);
  box = epsilon_box(surplus, 0);
  CHECK(box.kind == BoxCase::all_surplus);
  CHECK(box.lower == 0.0);
  CHECK(box.upper == doctest::Approx(1.0));

  const scenario::Scenario mixed = surplus_scenario({1, -1}, 1, 0, 0);
  box = epsilon_box(mixed, 0);
  CHECK(box.kind == BoxCase::mixed);
  CHECK(box.lower == 0.0);
  CHECK(box.upper == 0.0);
}

TEST_CASE("best response clips to the trade interval") {
  // single deficit user, phi = 0.5, a = 1: optimum s + a/(2 phi) = -2
  const scenario::Scenario s = surplus_scenario({-3}, 0.5, 0.0, 0.0);
  const Eigen::VectorXd none;
  CHECK(best_response(0, none, 1.0, 0.0, s, 0) == doctest::Approx(-2.0));

  // a = 10 pushes the unconstrained response to +7; clipped at 0
  CHECK(best_response(0, none, 10.0, 0.0, s, 0) == doctest::Approx(0.0));

  // a = delta with empty rest of grid: response = surplus
  const scenario::Scenario lone = surplus_scenario({2}, 0.5, 3.0, 0.0);
  CHECK(best_response(0, none, 3.0, 0.0, lone, 0) == doctest::Approx(2.0));
}

TEST_CASE("closed form equilibrium") {
  // a = delta + phi (l_P + l_Q) makes epsilon zero and x* = s
  {
    const scenario::Scenario s = surplus_scenario({2, -1}, 0.7, 3.0, 6.0);
    const double a = 3.0 + 0.7 * (6.0 + 0.5);
    const NashSlotResult nash = nash_closed_form(s, a, 0.5, 0);
    CHECK(nash.epsilon == doctest::Approx(0.0));
    CHECK(nash.x_star[0] == doctest::Approx(2.0));
    CHECK(nash.x_star[1] == doctest::Approx(-1.0));
  }

  // I = 1: epsilon = -(1/2)(a - delta)/phi with empty grid
  {
    const scenario::Scenario s = surplus_scenario({-3}, 0.5, 0.0, 0.0);
    const NashSlotResult nash = nash_closed_form(s, 1.0, 0.0, 0);
    CHECK(nash.epsilon == doctest::Approx(-1.0));
    CHECK(nash.x_star[0] == doctest::Approx(-2.0));
  }

  // I = 3, phi=1, delta=2, a=6, l_P=1: epsilon = -(1/4)(4 - 1) = -0.75
  {
    const scenario::Scenario s = surplus_scenario({-1, -2, -4}, 1.0, 2.0, 1.0);
    const NashSlotResult nash = nash_closed_form(s, 6.0, 0.0, 0);
    CHECK(nash.epsilon == doctest::Approx(-0.75));
    for (int n = 0; n < 3; ++n)
      CHECK(nash.x_star[n] == doctest::Approx(s.surplus(n, 0) + 0.75));
  }

  // out-of-box epsilon raises a structured error
  {
    const scenario::Scenario s = surplus_scenario({1, -1}, 1.0, 0.0, 0.0);
    CHECK_THROWS_AS(nash_closed_form(s, 50.0, 0.0, 0), signal_infeasible);
    try {
      nash_closed_form(s, 50.0, 0.0, 0);
    } catch (const signal_infeasible& e) {
      CHECK(e.box.kind == BoxCase::mixed);
      CHECK(std::string(e.what()).find("mixed") != std::string::npos);
    }
  }
}

TEST_CASE("oracle equivalence on interior signals") {
  rng gen(2024);
  for (int checked = 0; checked < 200; ++checked) {
    scenario::Scenario s = random_scenario(gen, 8, 4);
    const int t = static_cast<int>(gen.next_u64() % s.grid.slots);
    const EpsilonBox box = epsilon_box(s, t);
    const double quantile = gen.uniform(0.1, 0.9);
    double a, l_q;
    signal_at_quantile(s, quantile, gen.uniform(-5.0, 5.0), t, a, l_q);

    const NashSlotResult closed = nash_closed_form(s, a, l_q, t);
    const NashSlotResult oracle = nash_oracle_ibr(s, a, l_q, t, 1e-9, 2000);
    for (int n = 0; n < s.participant_count(); ++n)
      CHECK(std::abs(closed.x_star[n] - oracle.x_star[n]) <= 1e-8);
    if (box.kind != BoxCase::mixed && box.upper > box.lower)
      CHECK(closed.epsilon == doctest::Approx(oracle.epsilon).epsilon(1e-6));
  }
}

TEST_CASE("oracle converges in one sweep for a single user") {
  const scenario::Scenario s = surplus_scenario({-3}, 0.5, 0.0, 0.0);
  const NashSlotResult oracle = nash_oracle_ibr(s, 1.0, 0.0, 0);
  CHECK(oracle.x_star[0] == doctest::Approx(-2.0));
}

TEST_CASE("out-of-box signal clips in the oracle but not the closed form") {
  // all-deficit users with a price so high nobody should buy
  const scenario::Scenario s = surplus_scenario({-2, -3}, 0.5, 1.0, 2.0);
  const EpsilonBox box = epsilon_box(s, 0);
  const double eps_wanted = box.lower - 4.0;  // far below the box
  const double a = price_for_epsilon(s, eps_wanted, 0.0, 0);

  CHECK_THROWS_AS(nash_closed_form(s, a, 0.0, 0), signal_infeasible);
  const NashSlotResult oracle = nash_oracle_ibr(s, a, 0.0, 0);
  // clipped fixed point sits on the interval boundary
  CHECK(oracle.x_star[0] == doctest::Approx(0.0));
  CHECK(oracle.x_star[1] == doctest::Approx(0.0));
}

TEST_CASE("no profitable unilateral deviation at interior equilibria") {
  rng gen(77);
  for (int rep = 0; rep < 100; ++rep) {
    scenario::Scenario s = random_scenario(gen, 6, 2);
    const int t = static_cast<int>(gen.next_u64() % s.grid.slots);
    double a, l_q;
    signal_at_quantile(s, gen.uniform(0.1, 0.9), gen.uniform(-3.0, 3.0), t, a,
                       l_q);
    const NashSlotResult nash = nash_closed_form(s, a, l_q, t);

    for (int dev = 0; dev < 100; ++dev) {
      const int n = static_cast<int>(gen.next_u64() % s.participant_count());
      const double surplus = s.surplus(n, t);
      const double lo = std::min(surplus, 0.0);
      const double hi = std::max(surplus, 0.0);
      Eigen::VectorXd deviated = nash.x_star;
      deviated[n] = gen.uniform(lo, hi);
      CHECK(slot_cost(s, deviated, n, a, l_q, t) >=
            slot_cost(s, nash.x_star, n, a, l_q, t) - 1e-9);
    }
  }
}

TEST_CASE("epsilon sensitivity to the price") {
  rng gen(31);
  for (int rep = 0; rep < 50; ++rep) {
    scenario::Scenario s = random_scenario(gen, 9, 3);
    const int t = static_cast<int>(gen.next_u64() % s.grid.slots);
    const double a = gen.uniform(0.0, 40.0);
    const double l_q = gen.uniform(-5.0, 5.0);
    const double delta_a = gen.uniform(0.1, 5.0);
    const double before = epsilon_of(s, a, l_q, t);
    const double after = epsilon_of(s, a + delta_a, l_q, t);
    const double expected =
        -delta_a / ((s.participant_count() + 1) * s.tariff.phi[t]);
    CHECK(after - before == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("stage cost is strictly convex in the own trade") {
  const scenario::Scenario s = surplus_scenario({2, -1, 3}, 0.8, 2.0, 5.0);
  rng gen(4);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x(3);
    for (int n = 0; n < 3; ++n) x[n] = gen.uniform(-2.0, 2.0);
    const int n = rep % 3;
    const double h = gen.uniform(0.05, 1.0);
    Eigen::VectorXd up = x, down = x;
    up[n] += h;
    down[n] -= h;
    const double second_diff =
        (slot_cost(s, up, n, 5.0, 0.0, 0) -
         2.0 * slot_cost(s, x, n, 5.0, 0.0, 0) +
         slot_cost(s, down, n, 5.0, 0.0, 0)) /
        (h * h);
    CHECK(second_diff == doctest::Approx(2.0 * 0.8).epsilon(1e-8));
  }
}

TEST_CASE("repeated game stacks independent slots") {
  rng gen(12);
  scenario::Scenario s = random_scenario(gen, 5, 6);
  while (s.grid.slots < 4) s = random_scenario(gen, 5, 6);
  OperatorSignal signal = OperatorSignal::zero(s.grid.slots);
  for (int t = 0; t < s.grid.slots; ++t) {
    double a, l_q;
    signal_at_quantile(s, gen.uniform(0.2, 0.8), gen.uniform(-2.0, 2.0), t, a,
                       l_q);
    signal.a[t] = a;
    signal.lq_plus[t] = std::max(l_q, 0.0);
    signal.lq_minus[t] = std::max(-l_q, 0.0);
  }

  const TradeProfile trades = repeated_game(s, signal);
  const Eigen::VectorXd l_q = signal.l_q();
  for (int t = 0; t < s.grid.slots; ++t) {
    const NashSlotResult nash = nash_closed_form(s, signal.a[t], l_q[t], t);
    for (int n = 0; n < s.participant_count(); ++n)
      CHECK(trades.x(n, t) == doctest::Approx(nash.x_star[n]));
    const EpsilonBox box = epsilon_box(s, t);
    CHECK(box.contains(nash.epsilon, 1e-12));
  }

  // signal satisfying the zero-epsilon identity at every slot: x = s
  OperatorSignal benevolent = OperatorSignal::zero(s.grid.slots);
  for (int t = 0; t < s.grid.slots; ++t)
    benevolent.a[t] = price_for_epsilon(s, 0.0, 0.0, t);
  const TradeProfile shifted = repeated_game(s, benevolent);
  for (int t = 0; t < s.grid.slots; ++t)
    for (int n = 0; n < s.participant_count(); ++n)
      CHECK(shifted.x(n, t) == doctest::Approx(s.surplus(n, t)));

  // per-slot failures carry the slot index
  OperatorSignal bad = benevolent;
  bad.a[2] += 1e6;
  try {
    repeated_game(s, bad);
    CHECK(false);
  } catch (const signal_infeasible& e) {
    CHECK(e.slot == 2);
  }

  // serial and parallel paths agree bit for bit
  const TradeProfile parallel = repeated_game(s, signal, exec::omp);
  CHECK(parallel.x == trades.x);
}
