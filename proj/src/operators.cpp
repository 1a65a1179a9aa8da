#include "cesim/operators.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cesim/pricing.hpp"

namespace cesim::operators {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-slot quantities reused by every QP builder.
struct SlotContext {
  game::EpsilonBox box;
  int n_surplus = 0;
  int n_deficit = 0;
  double surplus_sum = 0.0;  // sum over S(t) of s_i, >= 0
  double deficit_sum = 0.0;  // sum over D(t) of s_j, <= 0
  // epsilon(t) = ea * a(t) + el * l_Q(t) + e0
  double ea = 0.0;
  double el = 0.0;
  double e0 = 0.0;
};

std::vector<SlotContext> slot_contexts(const scenario::Scenario& s) {
  const int slots = s.grid.slots;
  const double count = s.participant_count() + 1.0;
  std::vector<SlotContext> ctx(slots);
  for (int t = 0; t < slots; ++t) {
    SlotContext& c = ctx[t];
    c.box = game::epsilon_box(s, t);
    const scenario::SlotPartition part = scenario::partition_users(s, t);
    c.n_surplus = static_cast<int>(part.surplus_users.size());
    c.n_deficit = static_cast<int>(part.deficit_users.size());
    for (int i : part.surplus_users) c.surplus_sum += s.surplus(i, t);
    for (int j : part.deficit_users) c.deficit_sum += s.surplus(j, t);
    c.ea = -1.0 / (count * s.tariff.phi[t]);
    c.el = 1.0 / count;
    c.e0 = (s.tariff.delta[t] / s.tariff.phi[t] + s.l_p[t]) / count;
  }
  return ctx;
}

// Sparse-ish description of the beta-weighted net flow entering the charge
// recurrence at one slot: flow(w) = const + sum_k coeff_k * x[col_k].
struct FlowTerm {
  double constant = 0.0;
  std::vector<std::pair<int, double>> cols;
};

// Builds the 2H capacity rows and the continuity equality from per-slot flow
// terms: q(T) = q0 alpha^(T+1) + sum_{W<=T} alpha^(T-W) flow(W).
void add_storage_constraints(const scenario::Scenario& s,
                             const std::vector<FlowTerm>& flows,
                             qp::QpProblem& p) {
  const int slots = s.grid.slots;
  const int n = static_cast<int>(p.vars());
  const double alpha = s.ces.alpha;
  const double q0 = s.ces.q0;

  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(slots, n);
  Eigen::VectorXd constants(slots);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
  double acc_const = 0.0;
  for (int t = 0; t < slots; ++t) {
    acc *= alpha;
    acc_const *= alpha;
    for (const auto& [col, coeff] : flows[t].cols) acc[col] += coeff;
    acc_const += flows[t].constant;
    rows.row(t) = acc;
    constants[t] = q0 * std::pow(alpha, t + 1) + acc_const;
  }

  const Eigen::Index base = p.A_in.rows();
  p.A_in.conservativeResize(base + 2 * slots, n);
  p.b_in.conservativeResize(base + 2 * slots);
  for (int t = 0; t < slots; ++t) {
    p.A_in.row(base + 2 * t) = rows.row(t);            // q(t) <= Q_M
    p.b_in[base + 2 * t] = s.ces.capacity - constants[t];
    p.A_in.row(base + 2 * t + 1) = -rows.row(t);       // q(t) >= 0
    p.b_in[base + 2 * t + 1] = constants[t];
  }

  const Eigen::Index eq_base = p.A_eq.rows();
  p.A_eq.conservativeResize(eq_base + 1, n);
  p.b_eq.conservativeResize(eq_base + 1);
  p.A_eq.row(eq_base) = rows.row(slots - 1);           // q(H) = q(0)
  p.b_eq[eq_base] = q0 - constants[slots - 1];
}

qp::QpProblem empty_problem(int n) {
  qp::QpProblem p;
  p.Q = Eigen::MatrixXd::Zero(n, n);
  p.c = Eigen::VectorXd::Zero(n);
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  p.A_in.resize(0, n);
  p.b_in.resize(0);
  p.lo = Eigen::VectorXd::Constant(n, -kInf);
  p.hi = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

// Adds the per-slot epsilon-box rows linking a(t) and l_Q(t); the mixed case
// is one equality, the single-class cases two inequalities. pin_zero turns
// every row into the equality epsilon = 0.
void add_epsilon_rows(const std::vector<SlotContext>& ctx, int slots,
                      int a_of, int lqp_of, int lqm_of, qp::QpProblem& p,
                      bool pin_zero = false) {
  const int n = static_cast<int>(p.vars());
  for (int t = 0; t < slots; ++t) {
    const SlotContext& c = ctx[t];
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row[a_of + t] = c.ea;
    row[lqp_of + t] = c.el;
    row[lqm_of + t] = -c.el;
    if (pin_zero || c.box.kind == game::BoxCase::mixed) {
      const Eigen::Index base = p.A_eq.rows();
      p.A_eq.conservativeResize(base + 1, n);
      p.b_eq.conservativeResize(base + 1);
      p.A_eq.row(base) = row;
      p.b_eq[base] = -c.e0;
    } else {
      const Eigen::Index base = p.A_in.rows();
      p.A_in.conservativeResize(base + 2, n);
      p.b_in.conservativeResize(base + 2);
      p.A_in.row(base) = row;                    // eps <= upper
      p.b_in[base] = c.box.upper - c.e0;
      p.A_in.row(base + 1) = -row;               // eps >= lower
      p.b_in[base + 1] = c.e0 - c.box.lower;
    }
  }
}

game::OperatorSignal extract_signal(const Eigen::VectorXd& x, int slots,
                                    int a_of, int lqp_of, int lqm_of) {
  game::OperatorSignal signal;
  signal.a = a_of >= 0 ? x.segment(a_of, slots).eval()
                       : Eigen::VectorXd::Zero(slots);
  signal.lq_plus = x.segment(lqp_of, slots).cwiseMax(0.0);
  signal.lq_minus = x.segment(lqm_of, slots).cwiseMax(0.0);
  return signal;
}

void require_optimal(const qp::QpSolution& sol, const std::string& what) {
  if (sol.status == qp::QpStatus::optimal) return;
  std::ostringstream msg;
  msg << what << ": "
      << (sol.status == qp::QpStatus::infeasible ? "QP infeasible"
                                                 : "QP did not converge");
  if (!sol.message.empty()) msg << " (" << sol.message << ")";
  throw solver_failure(msg.str());
}

StackelbergOutcome finish_outcome(const scenario::Scenario& s,
                                  const game::OperatorSignal& signal,
                                  const TradeProfile& trades) {
  StackelbergOutcome outcome;
  outcome.signal = signal;
  outcome.trades = trades;
  const Eigen::VectorXd loads = pricing::load_series(s, trades, signal.l_q());
  outcome.prices = pricing::price_series(loads, s.tariff);
  outcome.revenue = pricing::ces_revenue(trades, signal, outcome.prices);
  storage::FlowSplit flows;
  flows.chi_plus = trades.user_charge() + signal.lq_plus;
  flows.chi_minus = trades.user_discharge() + signal.lq_minus;
  outcome.trajectory = storage::charge_trajectory(s.ces.q0, flows, s.ces);
  return outcome;
}

// Leader QP over [a, lq+, lq-]; the user flow terms in the storage
// constraints are either frozen at given trades or responsive through the
// equilibrium map, per the responsive flag.
qp::QpProblem build_leader_qp(const scenario::Scenario& s,
                              const std::vector<SlotContext>& ctx,
                              const TradeProfile* frozen_trades,
                              bool responsive, bool pin_epsilon_zero = false) {
  const int slots = s.grid.slots;
  const int a_of = 0;
  const int lqp_of = slots;
  const int lqm_of = 2 * slots;
  qp::QpProblem p = empty_problem(3 * slots);

  for (int t = 0; t < slots; ++t) {
    const CompetitiveObjectiveCoefficients co = competitive_coefficients(s, t);
    p.Q(a_of + t, a_of + t) = -2.0 * co.lambda;
    p.Q(lqp_of + t, lqp_of + t) += -2.0 * co.nu;
    p.Q(lqm_of + t, lqm_of + t) += -2.0 * co.nu;
    p.Q(lqp_of + t, lqm_of + t) += 2.0 * co.nu;
    p.Q(lqm_of + t, lqp_of + t) += 2.0 * co.nu;
    p.c[a_of + t] = -co.mu;
    p.c[lqp_of + t] = -co.xi;
    p.c[lqm_of + t] = co.xi;
    p.lo[lqp_of + t] = 0.0;
    p.lo[lqm_of + t] = 0.0;
  }

  Eigen::VectorXd user_charge, user_discharge;
  if (frozen_trades) {
    user_charge = frozen_trades->user_charge();
    user_discharge = frozen_trades->user_discharge();
  }

  std::vector<FlowTerm> flows(slots);
  for (int t = 0; t < slots; ++t) {
    const SlotContext& c = ctx[t];
    FlowTerm& flow = flows[t];
    flow.cols.push_back({lqp_of + t, s.ces.beta_plus});
    flow.cols.push_back({lqm_of + t, -s.ces.beta_minus});
    if (responsive) {
      // chi+ = surplus_sum - n_surplus*eps + lq+, chi- = n_deficit*eps -
      // deficit_sum + lq-; expand eps into the decision columns.
      const double eps_weight = -(s.ces.beta_plus * c.n_surplus +
                                  s.ces.beta_minus * c.n_deficit);
      flow.constant = s.ces.beta_plus * c.surplus_sum +
                      s.ces.beta_minus * c.deficit_sum + eps_weight * c.e0;
      flow.cols.push_back({a_of + t, eps_weight * c.ea});
      flow.cols.push_back({lqp_of + t, eps_weight * c.el});
      flow.cols.push_back({lqm_of + t, -eps_weight * c.el});
    } else {
      flow.constant = s.ces.beta_plus * user_charge[t] -
                      s.ces.beta_minus * user_discharge[t];
    }
  }
  add_storage_constraints(s, flows, p);
  add_epsilon_rows(ctx, slots, a_of, lqp_of, lqm_of, p, pin_epsilon_zero);
  return p;
}

}  // namespace

CompetitiveObjectiveCoefficients competitive_coefficients(
    const scenario::Scenario& s, int t) {
  const double users = s.participant_count();
  const double inv = 1.0 / (users + 1.0);
  const double phi = s.tariff.phi[t];
  const double delta = s.tariff.delta[t];
  double surplus_sum = 0.0;
  for (int n = 0; n < s.participant_count(); ++n)
    surplus_sum += s.surplus(n, t);

  CompetitiveObjectiveCoefficients co;
  co.lambda = -users * inv / phi;
  co.mu = users * inv * (s.l_p[t] + delta / phi) - surplus_sum;
  co.nu = -phi * inv;
  co.xi = -inv * (phi * s.l_p[t] + delta);
  return co;
}

BenevolentObjectiveCoefficients benevolent_coefficients(
    const scenario::Scenario& s, int t) {
  const double phi = s.tariff.phi[t];
  const double delta = s.tariff.delta[t];
  double surplus_sum = 0.0;
  for (int n = 0; n < s.participant_count(); ++n)
    surplus_sum += s.surplus(n, t);

  BenevolentObjectiveCoefficients co;
  co.gamma1 = -phi;
  co.gamma2 = -delta - phi * (s.l_p[t] + surplus_sum);
  co.gamma3 = -surplus_sum * (delta + phi * s.l_p[t]);
  return co;
}

StackelbergOutcome centralized_solve(const scenario::Scenario& s,
                                     const SolveOptions& options) {
  // The objective and the storage constraints only see the per-class trade
  // sums, so the QP runs over the aggregates XS(t), XD(t) and the trades are
  // disaggregated afterwards (proportionally, one optimum among the
  // equivalent ones).
  const int slots = s.grid.slots;
  const std::vector<SlotContext> ctx = slot_contexts(s);
  const int xs_of = 0;
  const int xd_of = slots;
  const int lqp_of = 2 * slots;
  const int lqm_of = 3 * slots;
  qp::QpProblem p = empty_problem(4 * slots);

  for (int t = 0; t < slots; ++t) {
    const double phi = s.tariff.phi[t];
    const double delta = s.tariff.delta[t];
    const double offset =
        s.l_p[t] - (ctx[t].surplus_sum + ctx[t].deficit_sum);
    const int cols[4] = {xs_of + t, xd_of + t, lqp_of + t, lqm_of + t};
    const double signs[4] = {1.0, 1.0, 1.0, -1.0};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j)
        p.Q(cols[i], cols[j]) += 2.0 * phi * signs[i] * signs[j];
      p.c[cols[i]] += signs[i] * (delta + 2.0 * phi * offset);
    }
    p.lo[xs_of + t] = 0.0;
    p.hi[xs_of + t] = ctx[t].surplus_sum;
    p.lo[xd_of + t] = ctx[t].deficit_sum;
    p.hi[xd_of + t] = 0.0;
    p.lo[lqp_of + t] = 0.0;
    p.lo[lqm_of + t] = 0.0;
  }

  std::vector<FlowTerm> flows(slots);
  for (int t = 0; t < slots; ++t) {
    flows[t].cols = {{xs_of + t, s.ces.beta_plus},
                     {xd_of + t, s.ces.beta_minus},
                     {lqp_of + t, s.ces.beta_plus},
                     {lqm_of + t, -s.ces.beta_minus}};
  }
  add_storage_constraints(s, flows, p);

  const qp::QpSolution sol = solve_qp(p, options.qp_tol, options.qp_max_iter);
  require_optimal(sol, "centralized solve");

  TradeProfile trades = TradeProfile::zero(s.participant_count(), slots);
  for (int t = 0; t < slots; ++t) {
    const scenario::SlotPartition part = scenario::partition_users(s, t);
    const double xs = std::clamp(sol.x[xs_of + t], 0.0, ctx[t].surplus_sum);
    const double xd = std::clamp(sol.x[xd_of + t], ctx[t].deficit_sum, 0.0);
    if (ctx[t].surplus_sum > 0.0)
      for (int i : part.surplus_users)
        trades.x(i, t) = s.surplus(i, t) * xs / ctx[t].surplus_sum;
    if (ctx[t].deficit_sum < 0.0)
      for (int j : part.deficit_users)
        trades.x(j, t) = s.surplus(j, t) * xd / ctx[t].deficit_sum;
  }

  game::OperatorSignal signal =
      extract_signal(sol.x, slots, -1, lqp_of, lqm_of);
  return finish_outcome(s, signal, trades);
}

game::OperatorSignal competitive_leader_qp(const scenario::Scenario& s,
                                           const TradeProfile& trades,
                                           const SolveOptions& options) {
  const std::vector<SlotContext> ctx = slot_contexts(s);
  const qp::QpProblem p = build_leader_qp(s, ctx, &trades, false);
  const qp::QpSolution sol = solve_qp(p, options.qp_tol, options.qp_max_iter);
  require_optimal(sol, "competitive leader QP");
  return extract_signal(sol.x, s.grid.slots, 0, s.grid.slots,
                        2 * s.grid.slots);
}

qp::QpProblem competitive_direct_problem(const scenario::Scenario& s,
                                         bool pin_epsilon_zero) {
  return build_leader_qp(s, slot_contexts(s), nullptr, true,
                         pin_epsilon_zero);
}

StackelbergOutcome competitive_direct(const scenario::Scenario& s,
                                      const SolveOptions& options) {
  const std::vector<SlotContext> ctx = slot_contexts(s);
  const qp::QpProblem p = build_leader_qp(s, ctx, nullptr, true);
  const qp::QpSolution sol = solve_qp(p, options.qp_tol, options.qp_max_iter);
  require_optimal(sol, "competitive direct QP");
  const game::OperatorSignal signal = extract_signal(
      sol.x, s.grid.slots, 0, s.grid.slots, 2 * s.grid.slots);
  const TradeProfile trades = game::repeated_game(s, signal);
  return finish_outcome(s, signal, trades);
}

game::OperatorSignal initial_signal(const scenario::Scenario& s,
                                    const SolveOptions& options) {
  const int slots = s.grid.slots;
  const std::vector<SlotContext> ctx = slot_contexts(s);

  // Stage 1: keep l_Q at zero, pick in-box epsilons meeting the storage
  // constraints. Stage 2 frees l_Q when that is too tight.
  auto eps_flow = [&](int t, int eps_col) {
    FlowTerm flow;
    const SlotContext& c = ctx[t];
    flow.constant = s.ces.beta_plus * c.surplus_sum +
                    s.ces.beta_minus * c.deficit_sum;
    flow.cols.push_back({eps_col, -(s.ces.beta_plus * c.n_surplus +
                                    s.ces.beta_minus * c.n_deficit)});
    return flow;
  };

  {
    qp::QpProblem p = empty_problem(slots);
    p.Q = 2.0 * Eigen::MatrixXd::Identity(slots, slots);
    std::vector<FlowTerm> flows(slots);
    for (int t = 0; t < slots; ++t) {
      flows[t] = eps_flow(t, t);
      p.lo[t] = ctx[t].box.lower;
      p.hi[t] = ctx[t].box.upper;
    }
    add_storage_constraints(s, flows, p);
    const qp::QpSolution sol =
        solve_qp(p, options.qp_tol, options.qp_max_iter);
    if (sol.status == qp::QpStatus::optimal) {
      game::OperatorSignal signal = game::OperatorSignal::zero(slots);
      for (int t = 0; t < slots; ++t)
        signal.a[t] = game::price_for_epsilon(s, sol.x[t], 0.0, t);
      return signal;
    }
  }

  qp::QpProblem p = empty_problem(3 * slots);
  const int lqp_of = slots;
  const int lqm_of = 2 * slots;
  std::vector<FlowTerm> flows(slots);
  for (int t = 0; t < slots; ++t) {
    p.Q(t, t) = 2.0;
    p.Q(lqp_of + t, lqp_of + t) = 0.02;
    p.Q(lqm_of + t, lqm_of + t) = 0.02;
    p.lo[t] = ctx[t].box.lower;
    p.hi[t] = ctx[t].box.upper;
    p.lo[lqp_of + t] = 0.0;
    p.lo[lqm_of + t] = 0.0;
    flows[t] = eps_flow(t, t);
    flows[t].cols.push_back({lqp_of + t, s.ces.beta_plus});
    flows[t].cols.push_back({lqm_of + t, -s.ces.beta_minus});
  }
  add_storage_constraints(s, flows, p);
  const qp::QpSolution sol = solve_qp(p, options.qp_tol, options.qp_max_iter);
  require_optimal(sol, "feasible starting signal");

  game::OperatorSignal signal;
  signal.a.resize(slots);
  signal.lq_plus = sol.x.segment(lqp_of, slots).cwiseMax(0.0);
  signal.lq_minus = sol.x.segment(lqm_of, slots).cwiseMax(0.0);
  const Eigen::VectorXd l_q = signal.l_q();
  for (int t = 0; t < slots; ++t)
    signal.a[t] = game::price_for_epsilon(s, sol.x[t], l_q[t], t);
  return signal;
}

StackelbergOutcome algorithm1(const scenario::Scenario& s, double tau,
                              int max_rounds, const SolveOptions& options) {
  if (!(tau > 0.0)) throw std::invalid_argument("algorithm1: tau must be > 0");
  const int slots = s.grid.slots;
  const std::vector<SlotContext> ctx = slot_contexts(s);
  const qp::QpProblem leader_problem = build_leader_qp(s, ctx, nullptr, true);

  auto stacked = [&](const game::OperatorSignal& signal) {
    Eigen::VectorXd rho(2 * slots);
    rho.head(slots) = signal.a;
    rho.tail(slots) = signal.l_q();
    return rho;
  };
  auto record = [&](int round, const game::OperatorSignal& signal,
                    const TradeProfile& trades, double rel) {
    const Eigen::VectorXd loads =
        pricing::load_series(s, trades, signal.l_q());
    const double revenue = pricing::ces_revenue(
        trades, signal, pricing::price_series(loads, s.tariff));
    return IterationRecord{round, revenue, rel, signal};
  };

  game::OperatorSignal signal = initial_signal(s, options);
  TradeProfile trades = game::repeated_game(s, signal);

  std::vector<IterationRecord> iterations;
  iterations.push_back(
      record(1, signal, trades, std::numeric_limits<double>::quiet_NaN()));

  // Step 1 each round solves the leader's revenue maximization with the
  // users' equilibrium response folded into both objective and storage
  // constraints. Freezing the flows at the previous trades instead leaves
  // the per-slot price term decoupled from the battery, which pins every
  // epsilon at a box edge and stalls short of the optimum. The previous
  // round's point warm starts the solver; Step 2 is the users' game.
  bool converged = false;
  Eigen::VectorXd warm(3 * slots);
  for (int round = 2; round <= max_rounds; ++round) {
    warm.head(slots) = signal.a;
    warm.segment(slots, slots) = signal.lq_plus;
    warm.tail(slots) = signal.lq_minus;
    const qp::QpSolution sol =
        solve_qp(leader_problem, options.qp_tol, options.qp_max_iter, warm);
    require_optimal(sol, "competitive leader step");
    const game::OperatorSignal next =
        extract_signal(sol.x, slots, 0, slots, 2 * slots);
    trades = game::repeated_game(s, next);
    const Eigen::VectorXd rho_new = stacked(next);
    const double rel =
        (rho_new - stacked(signal)).norm() / std::max(rho_new.norm(), 1e-300);
    signal = next;
    iterations.push_back(record(round, signal, trades, rel));
    if (rel <= tau) {
      converged = true;
      break;
    }
  }

  StackelbergOutcome outcome = finish_outcome(s, signal, trades);
  outcome.iterations = std::move(iterations);
  outcome.converged = converged;
  return outcome;
}

StackelbergOutcome benevolent_solve(const scenario::Scenario& s,
                                    const SolveOptions& options) {
  const int slots = s.grid.slots;
  const std::vector<SlotContext> ctx = slot_contexts(s);
  const int lqp_of = 0;
  const int lqm_of = slots;
  qp::QpProblem p = empty_problem(2 * slots);

  std::vector<FlowTerm> flows(slots);
  for (int t = 0; t < slots; ++t) {
    const BenevolentObjectiveCoefficients co = benevolent_coefficients(s, t);
    p.Q(lqp_of + t, lqp_of + t) += -2.0 * co.gamma1;
    p.Q(lqm_of + t, lqm_of + t) += -2.0 * co.gamma1;
    p.Q(lqp_of + t, lqm_of + t) += 2.0 * co.gamma1;
    p.Q(lqm_of + t, lqp_of + t) += 2.0 * co.gamma1;
    p.c[lqp_of + t] = -co.gamma2;
    p.c[lqm_of + t] = co.gamma2;
    p.lo[lqp_of + t] = 0.0;
    p.lo[lqm_of + t] = 0.0;
    // Users shift their whole surplus onto the storage: x_n = s_n.
    flows[t].constant = s.ces.beta_plus * ctx[t].surplus_sum +
                        s.ces.beta_minus * ctx[t].deficit_sum;
    flows[t].cols = {{lqp_of + t, s.ces.beta_plus},
                     {lqm_of + t, -s.ces.beta_minus}};
  }
  add_storage_constraints(s, flows, p);

  const qp::QpSolution sol = solve_qp(p, options.qp_tol, options.qp_max_iter);
  require_optimal(sol, "benevolent solve");

  game::OperatorSignal signal;
  signal.lq_plus = sol.x.segment(lqp_of, slots).cwiseMax(0.0);
  signal.lq_minus = sol.x.segment(lqm_of, slots).cwiseMax(0.0);
  signal.a.resize(slots);
  const Eigen::VectorXd l_q = signal.l_q();
  for (int t = 0; t < slots; ++t)
    signal.a[t] = game::price_for_epsilon(s, 0.0, l_q[t], t);

  const TradeProfile trades = game::repeated_game(s, signal);
  return finish_outcome(s, signal, trades);
}

ParetoVerdict pareto_perturbation_check(const StackelbergOutcome& outcome,
                                        const scenario::Scenario& s,
                                        const std::vector<double>& thetas) {
  ParetoVerdict verdict;
  const Eigen::VectorXd aggregate = outcome.trades.column_sum();
  const Eigen::VectorXd surplus_total = s.surplus_total();
  const Eigen::VectorXd l_q = outcome.signal.l_q();
  for (int t = 0; t < s.grid.slots; ++t) {
    const double x_agg = aggregate[t];
    const double price = outcome.prices[t];
    const double a = outcome.signal.a[t];
    const double ces_cost0 = a * x_agg + price * l_q[t];
    const double users_cost0 =
        price * (x_agg - surplus_total[t]) - a * x_agg;
    for (double theta : thetas) {
      const double x_new = (1.0 + theta) * x_agg;
      const double lq_new = l_q[t] - theta * x_agg;
      const double ces_cost = a * x_new + price * lq_new;
      const double users_cost =
          price * (x_new - surplus_total[t]) - a * x_new;
      const double residual =
          std::abs((users_cost - users_cost0) + (ces_cost - ces_cost0));
      if (residual > verdict.worst_residual) {
        verdict.worst_residual = residual;
        verdict.worst_slot = t;
        verdict.worst_theta = theta;
      }
    }
  }
  verdict.zero_sum_ok = verdict.worst_residual <= 1e-9;
  return verdict;
}

OutcomeReport to_report(const scenario::Scenario& s,
                        const StackelbergOutcome& outcome, Model model) {
  OutcomeReport report =
      evaluate_outcome(s, model, outcome.signal, outcome.trades);
  report.iterations = outcome.iterations;
  report.converged = outcome.converged;
  return report;
}

}  // namespace cesim::operators
