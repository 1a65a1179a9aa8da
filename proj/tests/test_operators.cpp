#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "cesim/game.hpp"
#include "cesim/metrics.hpp"
#include "cesim/operators.hpp"
#include "cesim/pricing.hpp"
#include "cesim/qpsolve.hpp"
#include "cesim/rng.hpp"
#include "cesim/scenario.hpp"

using namespace cesim;
using namespace cesim::operators;

namespace {

scenario::Scenario synth(std::uint64_t seed, int households,
                         double participation) {
  scenario::SynthesisSpec spec;
  spec.seed = seed;
  spec.households = households;
  spec.participation = participation;
  return scenario::synthesize(spec);
}

// Revenue of Eq.-(12) form evaluated at the raw equilibrium-map response
// x_n = s_n - epsilon (no clipping; the identity is unconditional).
double revenue_at_response(const scenario::Scenario& s, double a, double l_q,
                           int t) {
  const double eps = game::epsilon_of(s, a, l_q, t);
  const int users = s.participant_count();
  const double traded = s.surplus_total()[t] - users * eps;
  const double load = -users * eps + l_q + s.l_p[t];
  const double price = s.tariff.phi[t] * load + s.tariff.delta[t];
  return -a * traded - price * l_q;
}

double max_lq_complementarity(const game::OperatorSignal& signal) {
  double worst = 0.0;
  for (int t = 0; t < signal.slots(); ++t)
    worst = std::max(worst,
                     std::min(signal.lq_plus[t], signal.lq_minus[t]));
  return worst;
}

}  // namespace

TEST_CASE("competitive coefficients") {
  // I = 1, phi = 1, delta = 0, l_P = 0, s = 0
  scenario::Scenario s;
  s.grid.slots = 1;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  scenario::UserProfile user;
  user.demand = Eigen::VectorXd::Zero(1);
  user.generation = Eigen::VectorXd::Zero(1);
  s.users = {user};
  s.l_p = Eigen::VectorXd::Zero(1);
  s.tariff.phi = Eigen::VectorXd::Constant(1, 1.0);
  s.tariff.delta = Eigen::VectorXd::Zero(1);

  const CompetitiveObjectiveCoefficients co = competitive_coefficients(s, 0);
  CHECK(co.lambda == doctest::Approx(-0.5));
  CHECK(co.mu == doctest::Approx(0.0));
  CHECK(co.nu == doctest::Approx(-0.5));
  CHECK(co.xi == doctest::Approx(0.0));
}

TEST_CASE("leader objective identity against the revenue at the response") {
  rng gen(55);
  for (int rep = 0; rep < 300; ++rep) {
    const scenario::Scenario s =
        synth(200 + rep % 7, 10 + 5 * (rep % 4), 0.3 + 0.1 * (rep % 3));
    const int t = static_cast<int>(gen.next_u64() % s.grid.slots);
    const CompetitiveObjectiveCoefficients co = competitive_coefficients(s, t);
    CHECK((s.participant_count() + 1) * co.nu ==
          doctest::Approx(-s.tariff.phi[t]).epsilon(1e-12));

    const double a = gen.uniform(0.0, 60.0);
    const double l_q = gen.uniform(-20.0, 20.0);
    const double direct = revenue_at_response(s, a, l_q, t);
    const double via_coefficients = co.eval(a, l_q);
    CHECK(std::abs(via_coefficients - direct) <=
          1e-9 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("benevolent coefficients match the pinned-price substitution") {
  rng gen(56);
  const scenario::Scenario s = synth(77, 20, 0.4);
  for (int rep = 0; rep < 100; ++rep) {
    const int t = static_cast<int>(gen.next_u64() % s.grid.slots);
    const BenevolentObjectiveCoefficients ben = benevolent_coefficients(s, t);
    const CompetitiveObjectiveCoefficients co = competitive_coefficients(s, t);
    const double l_q = gen.uniform(-15.0, 15.0);
    const double pinned_a =
        s.tariff.delta[t] + s.tariff.phi[t] * (s.l_p[t] + l_q);
    CHECK(ben.eval(l_q) ==
          doctest::Approx(co.eval(pinned_a, l_q)).epsilon(1e-9));

    // vertex of the per-slot parabola is its interior maximum
    const double vertex = -ben.gamma2 / (2.0 * ben.gamma1);
    CHECK(ben.eval(vertex) >= ben.eval(vertex + 0.5));
    CHECK(ben.eval(vertex) >= ben.eval(vertex - 0.5));
  }
}

TEST_CASE("centralized with zero capacity reproduces the baseline") {
  scenario::Scenario s = synth(3, 10, 0.4);
  s.ces.capacity = 0.0;
  s.ces.q0 = 0.0;
  const StackelbergOutcome outcome = centralized_solve(s);
  const OutcomeReport report = to_report(s, outcome, Model::centralized);
  const OutcomeReport base = pricing::baseline_outcome(s);
  CHECK(outcome.trades.x.cwiseAbs().maxCoeff() <= 1e-5);
  CHECK((outcome.signal.l_q()).cwiseAbs().maxCoeff() <= 1e-5);
  CHECK(report.community_grid_payment ==
        doctest::Approx(base.community_grid_payment).epsilon(1e-6));
}

TEST_CASE("centralized two-slot arbitrage fills the battery") {
  // lossless symmetric storage, cheap slot then expensive slot; capacity
  // below the unconstrained optimum (L2 - L1)/2 = 10, so it binds.
  scenario::Scenario s;
  s.grid.slots = 2;
  s.grid.dt_hours = 0.5;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  scenario::UserProfile user;  // single participant pinned to zero trade
  user.demand = Eigen::VectorXd::Constant(2, 1.0);
  user.generation = Eigen::VectorXd::Constant(2, 1.0);
  s.users = {user};
  Eigen::VectorXd l_p(2);
  l_p << 10.0, 30.0;
  s.l_p = l_p;
  s.ces.capacity = 5.0;
  s.ces.q0 = 0.0;
  s.ces.alpha = 1.0;
  s.ces.beta_plus = 1.0;
  s.ces.beta_minus = 1.0;
  s.tariff.phi = Eigen::VectorXd::Constant(2, 1.0);
  s.tariff.delta = Eigen::VectorXd::Constant(2, 2.0);
  s.l_max = 100.0;

  const StackelbergOutcome outcome = centralized_solve(s);
  const Eigen::VectorXd l_q = outcome.signal.l_q();
  CHECK(l_q[0] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(l_q[1] == doctest::Approx(-5.0).epsilon(1e-6));
  CHECK(outcome.trajectory.q[1] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(outcome.trajectory.q[2] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("competitive leader QP reaches interior parabola vertices") {
  // Two single-class slots engineered so the unconstrained per-slot maximizer
  // satisfies the storage constraints exactly and sits strictly inside the
  // epsilon boxes; the solver must land on the analytic vertices.
  scenario::Scenario s;
  s.grid.slots = 2;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  scenario::UserProfile user;
  user.demand = Eigen::VectorXd::Zero(2);
  user.generation = Eigen::VectorXd::Zero(2);
  user.generation[0] = 40.0;  // big surplus at slot 0
  user.demand[1] = 40.0;      // big deficit at slot 1
  s.users = {user};
  s.l_p = Eigen::VectorXd::Constant(2, 10.0);
  s.tariff.phi = Eigen::VectorXd::Constant(2, 1.0);
  s.tariff.delta = Eigen::VectorXd::Constant(2, 4.0);
  s.ces.alpha = 1.0;
  s.ces.beta_plus = 1.0;
  s.ces.beta_minus = 1.0;
  s.ces.capacity = 500.0;
  s.ces.q0 = 250.0;
  s.l_max = 1e6;

  // per-slot vertices
  CompetitiveObjectiveCoefficients co0 = competitive_coefficients(s, 0);
  CompetitiveObjectiveCoefficients co1 = competitive_coefficients(s, 1);
  const double a0 = -co0.mu / (2.0 * co0.lambda);
  const double a1 = -co1.mu / (2.0 * co1.lambda);
  const double lq0 = -co0.xi / (2.0 * co0.nu);
  const double lq1 = -co1.xi / (2.0 * co1.nu);
  // both vertices sell to the grid (lq < 0)
  REQUIRE(lq0 < 0.0);
  REQUIRE(lq1 < 0.0);
  // vertices sit strictly inside the epsilon boxes
  const game::EpsilonBox box0 = game::epsilon_box(s, 0);
  const game::EpsilonBox box1 = game::epsilon_box(s, 1);
  const double eps0 = game::epsilon_of(s, a0, lq0, 0);
  const double eps1 = game::epsilon_of(s, a1, lq1, 1);
  REQUIRE(eps0 > box0.lower + 1e-6);
  REQUIRE(eps0 < box0.upper - 1e-6);
  REQUIRE(eps1 > box1.lower + 1e-6);
  REQUIRE(eps1 < box1.upper - 1e-6);

  // frozen charge balancing the battery exactly at the vertex flows
  TradeProfile trades = TradeProfile::zero(1, 2);
  trades.x(0, 0) = -(lq0 + lq1);  // the user charges what the grid sales take
  REQUIRE(trades.x(0, 0) <= 40.0);

  const game::OperatorSignal signal = competitive_leader_qp(s, trades);
  CHECK(signal.a[0] == doctest::Approx(a0).epsilon(1e-6));
  CHECK(signal.a[1] == doctest::Approx(a1).epsilon(1e-6));
  CHECK(signal.l_q()[0] == doctest::Approx(lq0).epsilon(1e-6));
  CHECK(signal.l_q()[1] == doctest::Approx(lq1).epsilon(1e-6));
}

TEST_CASE("mixed-class slot pins the price to the zero-epsilon level") {
  scenario::Scenario s;
  s.grid.slots = 1;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  scenario::UserProfile u0, u1;
  u0.demand = Eigen::VectorXd::Zero(1);
  u0.generation = Eigen::VectorXd::Constant(1, 2.0);
  u1.demand = Eigen::VectorXd::Constant(1, 1.5);
  u1.generation = Eigen::VectorXd::Zero(1);
  u1.id = 1;
  s.users = {u0, u1};
  s.l_p = Eigen::VectorXd::Constant(1, 8.0);
  s.tariff.phi = Eigen::VectorXd::Constant(1, 0.9);
  s.tariff.delta = Eigen::VectorXd::Constant(1, 3.0);
  s.ces.alpha = 1.0;
  s.ces.beta_plus = 0.9;
  s.ces.beta_minus = 1.1;
  s.ces.capacity = 50.0;
  s.ces.q0 = 10.0;
  s.l_max = 1e6;

  TradeProfile trades = TradeProfile::zero(2, 1);
  trades.x(0, 0) = 2.0;
  trades.x(1, 0) = -1.5;
  const game::OperatorSignal signal = competitive_leader_qp(s, trades);
  const double pinned =
      s.tariff.delta[0] +
      s.tariff.phi[0] * (s.l_p[0] + signal.l_q()[0]);
  CHECK(signal.a[0] == doctest::Approx(pinned).epsilon(1e-7));
}

TEST_CASE("leader QP against the brute-force oracle on a toy instance") {
  // H = 2, I = 1 deficit-only user. Continuity forces the leader to net-buy
  // the frozen drain back, so l_Q > 0 in both slots and the four-variable
  // restriction (a0, a1, u0 = lq+(0), u1 = lq+(1)) is exact.
  scenario::Scenario s;
  s.grid.slots = 2;
  s.grid.peak_start = 0;
  s.grid.peak_end = 0;
  scenario::UserProfile user;
  user.demand = Eigen::VectorXd::Constant(2, 3.0);
  user.generation = Eigen::VectorXd::Zero(2);
  s.users = {user};
  s.l_p = Eigen::VectorXd::Constant(2, 4.0);
  s.tariff.phi = Eigen::VectorXd::Constant(2, 1.0);
  s.tariff.delta = Eigen::VectorXd::Constant(2, 1.0);
  s.ces.alpha = 1.0;
  s.ces.beta_plus = 1.0;
  s.ces.beta_minus = 1.0;
  s.ces.capacity = 12.0;
  s.ces.q0 = 6.0;
  s.l_max = 1e6;

  TradeProfile trades = TradeProfile::zero(1, 2);
  trades.x(0, 0) = -1.0;
  trades.x(0, 1) = -2.0;

  const game::OperatorSignal solved = competitive_leader_qp(s, trades);
  // lossless storage leaves the split itself degenerate; the signed
  // exchange is unique and must be a net purchase in both slots
  REQUIRE(solved.l_q()[0] >= 0.0);
  REQUIRE(solved.l_q()[1] >= 0.0);

  qp::QpProblem restricted;
  const CompetitiveObjectiveCoefficients co0 = competitive_coefficients(s, 0);
  const CompetitiveObjectiveCoefficients co1 = competitive_coefficients(s, 1);
  restricted.Q = Eigen::MatrixXd::Zero(4, 4);
  restricted.c = Eigen::VectorXd::Zero(4);
  restricted.Q(0, 0) = -2.0 * co0.lambda;
  restricted.Q(1, 1) = -2.0 * co1.lambda;
  restricted.Q(2, 2) = -2.0 * co0.nu;
  restricted.Q(3, 3) = -2.0 * co1.nu;
  restricted.c << -co0.mu, -co1.mu, -co0.xi, -co1.xi;
  // continuity: the grid purchases re-supply the users' frozen drain
  const double drain0 = 1.0;
  const double drain1 = 2.0;
  restricted.A_eq.resize(1, 4);
  restricted.A_eq << 0.0, 0.0, 1.0, 1.0;
  restricted.b_eq.resize(1);
  restricted.b_eq << drain0 + drain1;
  // capacity after slot 0: q1 = q0 + u0 - drain0 within [0, Q_M]
  restricted.A_in.resize(2, 4);
  restricted.b_in.resize(2);
  restricted.A_in << 0, 0, 1, 0, 0, 0, -1, 0;
  restricted.b_in << s.ces.capacity - s.ces.q0 + drain0, s.ces.q0 - drain0;
  restricted.lo.resize(4);
  restricted.hi.resize(4);
  restricted.lo << 4.0, 4.0, 0.0, 0.0;
  restricted.hi << 9.0, 9.0, 4.0, 4.0;
  REQUIRE(solved.a[0] > 4.0);
  REQUIRE(solved.a[0] < 9.0);
  REQUIRE(solved.a[1] > 4.0);
  REQUIRE(solved.a[1] < 9.0);
  REQUIRE(solved.l_q()[0] < 4.0);
  REQUIRE(solved.l_q()[1] < 4.0);
  // epsilon in [-3, 0] at both slots (all-deficit boxes)
  const double ea = -0.5;
  const double el = 0.5;
  const double e0 = (1.0 / 1.0 + 4.0) / 2.0;
  Eigen::MatrixXd eps_rows(4, 4);
  Eigen::VectorXd eps_rhs(4);
  eps_rows.row(0) << ea, 0, el, 0;
  eps_rhs[0] = -e0;
  eps_rows.row(1) << -ea, 0, -el, 0;
  eps_rhs[1] = e0 + 3.0;
  eps_rows.row(2) << 0, ea, 0, el;
  eps_rhs[2] = -e0;
  eps_rows.row(3) << 0, -ea, 0, -el;
  eps_rhs[3] = e0 + 3.0;
  restricted.A_in.conservativeResize(6, 4);
  restricted.b_in.conservativeResize(6);
  restricted.A_in.bottomRows(4) = eps_rows;
  restricted.b_in.tail(4) = eps_rhs;

  const double resolution = 0.05;
  const qp::GridResult grid = qp::brute_force_grid(restricted, resolution);
  REQUIRE(grid.found);
  const double solver_objective =
      -(co0.eval(solved.a[0], solved.l_q()[0]) +
        co1.eval(solved.a[1], solved.l_q()[1]));
  // the grid may undershoot slightly through the documented tolerance on
  // its equality filter, so the bound is two-sided
  CHECK(std::abs(grid.objective - solver_objective) <= 30.0 * resolution);
  CHECK(std::abs(grid.x[0] - solved.a[0]) <= 0.2);
  CHECK(std::abs(grid.x[1] - solved.a[1]) <= 0.2);
  CHECK(std::abs(grid.x[2] - solved.l_q()[0]) <= 0.2);
  CHECK(std::abs(grid.x[3] - solved.l_q()[1]) <= 0.2);
}

TEST_CASE("algorithm1 converges to the direct optimum") {
  const scenario::Scenario s = synth(1, 20, 0.4);
  const StackelbergOutcome fixed_point = algorithm1(s, 0.002, 100);
  REQUIRE(fixed_point.converged);
  CHECK(fixed_point.iterations.size() <= 15);

  const StackelbergOutcome direct = competitive_direct(s);
  const double rel = std::abs(fixed_point.revenue - direct.revenue) /
                     std::max(1.0, std::abs(direct.revenue));
  CHECK(rel <= 1e-6);

  // fixed-point consistency: the returned trades equal the repeated game at
  // the returned signal exactly
  const TradeProfile replay = game::repeated_game(s, fixed_point.signal);
  CHECK(replay.x == fixed_point.trades.x);

  // storage feasibility and split complementarity at the optimum
  const storage::FeasibilityVerdict verdict =
      storage::check_feasible(fixed_point.trajectory, s.ces);
  CHECK(verdict.feasible);
  CHECK(max_lq_complementarity(fixed_point.signal) <= 1e-6);

  // the trace records revenue and the relative change per round
  CHECK(fixed_point.iterations.front().round == 1);
  CHECK(fixed_point.iterations.back().rho_rel_change <= 0.002);
}

TEST_CASE("initial signal is feasible") {
  for (std::uint64_t seed : {4ULL, 9ULL}) {
    const scenario::Scenario s = synth(seed, 15, 0.4);
    const game::OperatorSignal start = initial_signal(s);
    start.validate();
    const TradeProfile trades = game::repeated_game(s, start);  // no throw
    storage::FlowSplit flows;
    flows.chi_plus = trades.user_charge() + start.lq_plus;
    flows.chi_minus = trades.user_discharge() + start.lq_minus;
    const storage::ChargeTrajectory traj =
        storage::charge_trajectory(s.ces.q0, flows, s.ces);
    CHECK(storage::check_feasible(traj, s.ces, 1e-5).feasible);
  }
}

TEST_CASE("benevolent equilibrium structure") {
  const scenario::Scenario s = synth(2, 16, 0.5);
  const StackelbergOutcome ben = benevolent_solve(s);

  // every participating user ends up fully off-grid
  for (int n = 0; n < s.participant_count(); ++n)
    for (int t = 0; t < s.grid.slots; ++t)
      CHECK(std::abs(ben.trades.x(n, t) - s.surplus(n, t)) <= 1e-7);

  // CES price equals the grid price at every slot
  for (int t = 0; t < s.grid.slots; ++t)
    CHECK(ben.signal.a[t] == doctest::Approx(ben.prices[t]).epsilon(1e-7));

  CHECK(storage::check_feasible(ben.trajectory, s.ces).feasible);
}

TEST_CASE("benevolent equals the epsilon-pinned competitive restriction") {
  const scenario::Scenario s = synth(6, 14, 0.4);
  const StackelbergOutcome ben = benevolent_solve(s);

  const qp::QpProblem pinned = competitive_direct_problem(s, true);
  const qp::QpSolution sol = qp::solve_qp(pinned);
  REQUIRE(sol.status == qp::QpStatus::optimal);
  const int slots = s.grid.slots;
  game::OperatorSignal restricted;
  restricted.a = sol.x.segment(0, slots);
  restricted.lq_plus = sol.x.segment(slots, slots).cwiseMax(0.0);
  restricted.lq_minus = sol.x.segment(2 * slots, slots).cwiseMax(0.0);

  const TradeProfile trades = game::repeated_game(s, restricted);
  const Eigen::VectorXd loads =
      pricing::load_series(s, trades, restricted.l_q());
  const double revenue = pricing::ces_revenue(
      trades, restricted, pricing::price_series(loads, s.tariff));
  CHECK(revenue == doctest::Approx(ben.revenue).epsilon(1e-6));
  CHECK((restricted.l_q() - ben.signal.l_q()).cwiseAbs().maxCoeff() <= 1e-4);

  // feasible-set inclusion: the competitive optimum dominates
  const StackelbergOutcome direct = competitive_direct(s);
  CHECK(direct.revenue >= ben.revenue - 1e-7);
}

TEST_CASE("pareto perturbation is a zero-sum transfer") {
  const scenario::Scenario s = synth(5, 12, 0.4);
  const StackelbergOutcome fixed_point = algorithm1(s);

  ParetoVerdict verdict = pareto_perturbation_check(fixed_point, s);
  CHECK(verdict.zero_sum_ok);
  CHECK(verdict.worst_residual <= 1e-9);

  // theta = 0 leaves both costs unchanged
  verdict = pareto_perturbation_check(fixed_point, s, {0.0});
  CHECK(verdict.worst_residual == 0.0);
}

TEST_CASE("model orderings on a synthetic scenario") {
  const scenario::Scenario s = synth(8, 20, 0.3);
  const OutcomeReport base = pricing::baseline_outcome(s);
  const OutcomeReport comp =
      to_report(s, algorithm1(s), Model::competitive);
  const OutcomeReport ben =
      to_report(s, benevolent_solve(s), Model::benevolent);
  const OutcomeReport cen =
      to_report(s, centralized_solve(s), Model::centralized);

  CHECK(comp.revenue >= ben.revenue - 1e-6);
  CHECK(cen.community_grid_payment <=
        std::min(comp.community_grid_payment, ben.community_grid_payment) +
            1e-6);
  const double b_cen = metrics::community_benefit(cen, base, s);
  const double b_comp = metrics::community_benefit(comp, base, s);
  const double b_ben = metrics::community_benefit(ben, base, s);
  CHECK(b_cen >= std::max(b_comp, b_ben) - 1e-6);
}
