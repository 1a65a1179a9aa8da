#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "cesim/rng.hpp"
#include "cesim/storage.hpp"

using namespace cesim;
using namespace cesim::storage;

namespace {

FlowSplit random_flows(int slots, std::uint64_t seed) {
  rng gen(seed);
  FlowSplit flows;
  flows.chi_plus.resize(slots);
  flows.chi_minus.resize(slots);
  for (int t = 0; t < slots; ++t) {
    flows.chi_plus[t] = gen.uniform(0.0, 3.0);
    flows.chi_minus[t] = gen.uniform(0.0, 3.0);
  }
  return flows;
}

}  // namespace

TEST_CASE("step_charge evaluates the recurrence") {
  CesParams params;
  params.alpha = 1.0;
  params.beta_plus = 0.9;
  params.beta_minus = 1.1;
  CHECK(step_charge(10.0, 0.0, 0.0, params) == doctest::Approx(10.0));

  params.alpha = 0.9;
  CHECK(step_charge(10.0, 2.0, 0.0, params) == doctest::Approx(10.8));

  params.alpha = 1.0;
  CHECK(step_charge(10.0, 0.0, 1.0, params) == doctest::Approx(8.9));
}

TEST_CASE("charge_trajectory zero flows") {
  CesParams params;
  params.capacity = 20.0;
  params.q0 = 5.0;
  params.beta_plus = 1.0;
  params.beta_minus = 1.0;

  FlowSplit zero;
  zero.chi_plus = Eigen::VectorXd::Zero(6);
  zero.chi_minus = Eigen::VectorXd::Zero(6);

  params.alpha = 1.0;
  ChargeTrajectory constant = charge_trajectory(5.0, zero, params);
  for (int t = 0; t <= 6; ++t) CHECK(constant.q[t] == doctest::Approx(5.0));
  CHECK(constant.capacity_ok);
  CHECK(constant.continuity_residual == doctest::Approx(0.0));

  params.alpha = 0.8;
  ChargeTrajectory decay = charge_trajectory(5.0, zero, params);
  for (int t = 0; t <= 6; ++t)
    CHECK(decay.q[t] == doctest::Approx(5.0 * std::pow(0.8, t)));
}

TEST_CASE("capacity operators formula") {
  CesParams params;
  params.capacity = 10.0;
  params.q0 = 0.0;

  params.alpha = 1.0;
  CapacityOperators ones = capacity_operators(params, 3);
  CHECK(ones.eta.isApprox(Eigen::VectorXd::Ones(3)));
  for (int v = 0; v < 3; ++v)
    for (int w = 0; w <= v; ++w) CHECK(ones.psi(v, w) == 1.0);
  CHECK(ones.psi(0, 1) == 0.0);

  params.alpha = 0.5;
  CapacityOperators half = capacity_operators(params, 2);
  CHECK(half.eta[0] == doctest::Approx(0.5));
  CHECK(half.eta[1] == doctest::Approx(0.25));
  CHECK(half.psi(0, 0) == doctest::Approx(1.0));
  CHECK(half.psi(1, 0) == doctest::Approx(0.5));
  CHECK(half.psi(1, 1) == doctest::Approx(1.0));
  CHECK(half.psi(0, 1) == 0.0);
}

TEST_CASE("recurrence matches the matrix closed form") {
  CesParams params;
  params.capacity = 1000.0;
  params.q0 = 12.0;
  params.alpha = std::pow(0.9, 1.0 / 48.0);
  params.beta_plus = 0.9;
  params.beta_minus = 1.1;

  const int slots = 48;
  const FlowSplit flows = random_flows(slots, 42);
  const ChargeTrajectory traj = charge_trajectory(params.q0, flows, params);
  const CapacityOperators ops = capacity_operators(params, slots);

  const Eigen::VectorXd closed =
      params.q0 * ops.eta +
      ops.psi * (params.beta_plus * flows.chi_plus -
                 params.beta_minus * flows.chi_minus);
  for (int v = 0; v < slots; ++v)
    CHECK(traj.q[v + 1] ==
          doctest::Approx(closed[v]).epsilon(1e-9));
}

TEST_CASE("trajectory linearity in the flows") {
  CesParams params;
  params.capacity = 1e6;
  params.q0 = 3.0;
  params.alpha = 0.97;
  params.beta_plus = 0.95;
  params.beta_minus = 1.05;

  const FlowSplit f1 = random_flows(16, 1);
  const FlowSplit f2 = random_flows(16, 2);
  FlowSplit sum;
  sum.chi_plus = f1.chi_plus + f2.chi_plus;
  sum.chi_minus = f1.chi_minus + f2.chi_minus;

  const ChargeTrajectory t_sum = charge_trajectory(3.0, sum, params);
  const ChargeTrajectory t_1 = charge_trajectory(3.0, f1, params);
  const ChargeTrajectory t_2 = charge_trajectory(0.0, f2, params);
  for (int t = 0; t <= 16; ++t)
    CHECK(t_sum.q[t] == doctest::Approx(t_1.q[t] + t_2.q[t]).epsilon(1e-12));
}

TEST_CASE("lossless conservation") {
  CesParams params;
  params.capacity = 1e6;
  params.q0 = 10.0;
  params.alpha = 1.0;
  params.beta_plus = 1.0;
  params.beta_minus = 1.0;

  const FlowSplit flows = random_flows(24, 7);
  const ChargeTrajectory traj = charge_trajectory(10.0, flows, params);
  const double net = (flows.chi_plus - flows.chi_minus).sum();
  CHECK(traj.q[24] - traj.q[0] == doctest::Approx(net).epsilon(1e-12));
}

TEST_CASE("check_feasible verdicts") {
  CesParams params;
  params.capacity = 10.0;
  params.q0 = 5.0;
  params.alpha = 1.0;
  params.beta_plus = 1.0;
  params.beta_minus = 1.0;

  FlowSplit zero;
  zero.chi_plus = Eigen::VectorXd::Zero(4);
  zero.chi_minus = Eigen::VectorXd::Zero(4);
  CHECK(check_feasible(charge_trajectory(5.0, zero, params), params).feasible);

  // Push 5.5 in at slot 1: q reaches 10.5, half a kWh over.
  FlowSplit over = zero;
  over.chi_plus[1] = 5.5;
  over.chi_minus[3] = 5.5;
  const FeasibilityVerdict cap =
      check_feasible(charge_trajectory(5.0, over, params), params);
  CHECK_FALSE(cap.feasible);
  REQUIRE(!cap.violations.empty());
  CHECK(cap.violations[0].kind == "overcharge");
  CHECK(cap.violations[0].slot == 2);
  CHECK(cap.violations[0].magnitude == doctest::Approx(0.5));

  FlowSplit drift = zero;
  drift.chi_plus[0] = 2e-6;
  const FeasibilityVerdict cont = check_feasible(
      charge_trajectory(5.0, drift, params), params, 1e-6);
  CHECK_FALSE(cont.continuity_ok);
  CHECK(cont.continuity_residual == doctest::Approx(2e-6));
}

TEST_CASE("split_signed") {
  Eigen::VectorXd series(2);
  series << 3.0, -2.0;
  const FlowSplit split = split_signed(series);
  CHECK(split.chi_plus[0] == 3.0);
  CHECK(split.chi_plus[1] == 0.0);
  CHECK(split.chi_minus[0] == 0.0);
  CHECK(split.chi_minus[1] == 2.0);

  const FlowSplit zeros = split_signed(Eigen::VectorXd::Zero(3));
  CHECK(zeros.chi_plus.isZero());
  CHECK(zeros.chi_minus.isZero());

  rng gen(9);
  Eigen::VectorXd random(50);
  for (int i = 0; i < 50; ++i) random[i] = gen.uniform(-5.0, 5.0);
  const FlowSplit rsplit = split_signed(random);
  CHECK((rsplit.chi_plus - rsplit.chi_minus).isApprox(random));
  for (int i = 0; i < 50; ++i)
    CHECK(rsplit.chi_plus[i] * rsplit.chi_minus[i] == 0.0);
}

TEST_CASE("parameter validation") {
  CesParams params;
  params.alpha = 1.2;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.alpha = 0.99;
  params.beta_minus = 0.9;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.beta_minus = 1.1;
  params.q0 = 90.0;
  params.capacity = 80.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}
