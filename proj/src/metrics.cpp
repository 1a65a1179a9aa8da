#include "cesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cesim/operators.hpp"
#include "cesim/pricing.hpp"
#include "cesim/rng.hpp"

namespace cesim::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

OutcomeReport solve_model(const scenario::Scenario& s, Model model,
                          double tau) {
  switch (model) {
    case Model::baseline:
      return pricing::baseline_outcome(s);
    case Model::centralized:
      return operators::to_report(s, operators::centralized_solve(s), model);
    case Model::benevolent:
      return operators::to_report(s, operators::benevolent_solve(s), model);
    case Model::competitive:
      return operators::to_report(s, operators::algorithm1(s, tau), model);
  }
  throw std::invalid_argument("solve_model: unknown model");
}

}  // namespace

double par(const Eigen::VectorXd& load) {
  if (load.size() == 0) throw std::invalid_argument("par: empty load");
  const double mean = load.mean();
  if (!(mean > 0.0))
    throw std::invalid_argument("par: mean load must be positive");
  return load.maxCoeff() / mean;
}

double par_reduction_pct(const Eigen::VectorXd& baseline_load,
                         const Eigen::VectorXd& model_load) {
  const double base = par(baseline_load);
  return (base - par(model_load)) / base * 100.0;
}

SavingsReport cost_savings(const OutcomeReport& model,
                           const OutcomeReport& baseline,
                           const scenario::Scenario& s) {
  const int users = s.participant_count();
  SavingsReport report;
  report.per_user_pct.resize(users);
  double sum = 0.0;
  int included = 0;
  for (int n = 0; n < users; ++n) {
    const double base = baseline.user_cost[n];
    if (base <= 0.0) {
      report.per_user_pct[n] = kNaN;
      report.excluded.push_back(n);
      continue;
    }
    report.per_user_pct[n] = (base - model.user_cost[n]) / base * 100.0;
    sum += report.per_user_pct[n];
    ++included;
  }
  report.avg_participating_pct = included > 0 ? sum / included : kNaN;

  const double np_base = baseline.nonparticipating_cost;
  report.nonparticipating_pct =
      (s.nonparticipating_count > 0 && np_base > 0.0)
          ? (np_base - model.nonparticipating_cost) / np_base * 100.0
          : kNaN;

  if (s.nonparticipating_count > 0 && np_base > 0.0) {
    report.combined_pct =
        (sum + s.nonparticipating_count * report.nonparticipating_pct) /
        (included + s.nonparticipating_count);
  } else {
    report.combined_pct = report.avg_participating_pct;
  }
  return report;
}

BenefitRoutes community_benefit_routes(const OutcomeReport& model,
                                       const OutcomeReport& baseline,
                                       const scenario::Scenario& s) {
  (void)s;
  BenefitRoutes routes;
  routes.via_user_sum = (baseline.user_cost - model.user_cost).sum() +
                        (baseline.nonparticipating_cost -
                         model.nonparticipating_cost) +
                        model.revenue - baseline.revenue;
  routes.via_grid_payment =
      baseline.community_grid_payment - model.community_grid_payment;
  return routes;
}

double community_benefit(const OutcomeReport& model,
                         const OutcomeReport& baseline,
                         const scenario::Scenario& s) {
  return community_benefit_routes(model, baseline, s).via_user_sum;
}

ComparisonRow comparison_row(const OutcomeReport& model,
                             const OutcomeReport& baseline,
                             const scenario::Scenario& s,
                             double participation_pct) {
  ComparisonRow row;
  row.model = model.model;
  row.participation_pct = participation_pct;
  row.avg_pu_saving_pct =
      cost_savings(model, baseline, s).avg_participating_pct;
  row.ces_revenue = model.revenue;
  row.community_benefit = community_benefit(model, baseline, s);
  row.par_reduction_pct = par_reduction_pct(baseline.loads, model.loads);
  return row;
}

std::vector<SweepPoint> capacity_sweep(const scenario::Scenario& s,
                                       const std::vector<double>& capacities,
                                       const std::vector<Model>& models,
                                       double tau, exec mode) {
  for (std::size_t i = 0; i + 1 < capacities.size(); ++i)
    if (!(capacities[i] < capacities[i + 1]))
      throw std::invalid_argument(
          "capacity_sweep: capacities must be strictly increasing");
  for (double c : capacities)
    if (!(c > 0.0))
      throw std::invalid_argument("capacity_sweep: capacities must be > 0");

  const double q0_ratio =
      s.ces.capacity > 0.0 ? s.ces.q0 / s.ces.capacity : 0.25;
  const OutcomeReport baseline = pricing::baseline_outcome(s);

  struct Task {
    std::size_t point;
    std::size_t entry;
    double capacity;
    Model model;
  };
  std::vector<Task> tasks;
  std::vector<SweepPoint> points(capacities.size());
  for (std::size_t i = 0; i < capacities.size(); ++i) {
    points[i].capacity = capacities[i];
    points[i].entries.resize(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
      points[i].entries[m].model = models[m];
      tasks.push_back({i, m, capacities[i], models[m]});
    }
  }

  parallel_for(
      static_cast<std::ptrdiff_t>(tasks.size()),
      [&](std::ptrdiff_t k) {
        const Task& task = tasks[k];
        scenario::Scenario modified = s;
        modified.ces.capacity = task.capacity;
        modified.ces.q0 = q0_ratio * task.capacity;
        SweepEntry& entry = points[task.point].entries[task.entry];
        try {
          const OutcomeReport outcome =
              solve_model(modified, task.model, tau);
          entry.benefit = community_benefit(outcome, baseline, modified);
          entry.ok = true;
        } catch (const std::exception& e) {
          entry.ok = false;
          entry.error = e.what();
        }
      },
      mode);
  return points;
}

std::vector<ArgmaxEntry> sweep_argmax(const std::vector<SweepPoint>& points) {
  std::vector<ArgmaxEntry> best;
  if (points.empty()) return best;
  for (std::size_t m = 0; m < points.front().entries.size(); ++m) {
    ArgmaxEntry entry{points.front().entries[m].model, kNaN,
                      -std::numeric_limits<double>::infinity()};
    for (const SweepPoint& point : points) {
      const SweepEntry& e = point.entries[m];
      if (e.ok && e.benefit > entry.benefit) {
        entry.benefit = e.benefit;
        entry.capacity = point.capacity;
      }
    }
    best.push_back(entry);
  }
  return best;
}

std::vector<NoiseRow> noise_study(const scenario::Scenario& s,
                                  const std::vector<double>& variance_pcts,
                                  int trials, std::uint64_t seed, double tau,
                                  exec mode) {
  if (trials < 1)
    throw std::invalid_argument("noise_study: trials must be >= 1");
  const OutcomeReport baseline = pricing::baseline_outcome(s);
  const std::size_t levels = variance_pcts.size();

  struct TrialResult {
    double pu_saving = kNaN;
    double combined_saving = kNaN;
    double par_reduction = kNaN;
    double clip_events = 0.0;
  };
  std::vector<TrialResult> results(levels * trials);

  parallel_for(
      static_cast<std::ptrdiff_t>(levels * trials),
      [&](std::ptrdiff_t k) {
        const std::size_t level = k / trials;
        const std::size_t trial = k % trials;
        const double variance = variance_pcts[level];

        // Day-ahead commitment on noisy forecasts of the participating
        // users' demand and PV.
        scenario::Scenario forecast = s;
        for (std::size_t n = 0; n < forecast.users.size(); ++n) {
          const std::uint64_t base =
              mix_seed(seed, (level * 1000 + trial) * 2048 + 2 * n);
          forecast.users[n].demand = scenario::apply_forecast_noise(
              s.users[n].demand, variance, base);
          forecast.users[n].generation = scenario::apply_forecast_noise(
              s.users[n].generation, variance, base + 1);
        }

        TrialResult& out = results[k];
        try {
          const operators::StackelbergOutcome committed =
              operators::algorithm1(forecast, tau);

          // Realization: true profiles, committed trades clipped to the true
          // trade intervals, committed l_Q as scheduled.
          TradeProfile realized = committed.trades;
          int clips = 0;
          for (int n = 0; n < s.participant_count(); ++n)
            for (int t = 0; t < s.grid.slots; ++t) {
              const double true_surplus = s.surplus(n, t);
              const double lo = std::min(true_surplus, 0.0);
              const double hi = std::max(true_surplus, 0.0);
              const double clipped = std::clamp(realized.x(n, t), lo, hi);
              if (std::abs(clipped - realized.x(n, t)) > 1e-9) ++clips;
              realized.x(n, t) = clipped;
            }

          const OutcomeReport outcome = evaluate_outcome(
              s, Model::competitive, committed.signal, realized);
          const SavingsReport savings = cost_savings(outcome, baseline, s);
          out.pu_saving = savings.avg_participating_pct;
          out.combined_saving = savings.combined_pct;
          out.par_reduction = par_reduction_pct(baseline.loads, outcome.loads);
          out.clip_events = clips;
        } catch (const std::exception&) {
          // leave NaN; the row reports over successful trials
        }
      },
      mode);

  std::vector<NoiseRow> rows(levels);
  for (std::size_t level = 0; level < levels; ++level) {
    NoiseRow& row = rows[level];
    row.variance_pct = variance_pcts[level];
    row.mape_pct = variance_pcts[level] / 2.0;
    row.trials = trials;
    double pu = 0.0, combined = 0.0, parred = 0.0, clips = 0.0;
    int ok = 0;
    for (int trial = 0; trial < trials; ++trial) {
      const TrialResult& r = results[level * trials + trial];
      if (std::isnan(r.pu_saving)) continue;
      pu += r.pu_saving;
      combined += r.combined_saving;
      parred += r.par_reduction;
      clips += r.clip_events;
      ++ok;
    }
    row.avg_pu_saving_pct = ok ? pu / ok : kNaN;
    row.combined_saving_pct = ok ? combined / ok : kNaN;
    row.par_reduction_pct = ok ? parred / ok : kNaN;
    row.clip_events_mean = ok ? clips / ok : kNaN;
  }
  return rows;
}

}  // namespace cesim::metrics
