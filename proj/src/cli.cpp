#include "cesim/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "cesim/game.hpp"
#include "cesim/metrics.hpp"
#include "cesim/operators.hpp"
#include "cesim/outcome.hpp"
#include "cesim/pricing.hpp"
#include "cesim/scenario.hpp"

namespace cesim::cli {

namespace {

namespace fs = std::filesystem;

// 9 significant digits keeps the CSVs diff-able across runs.
std::string num(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_)
      throw scenario::config_error("cannot write file: " + path.string());
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

scenario::Scenario load_scenario(const RunConfig& config) {
  const bool has_file = !config.config_path.empty();
  if (has_file == config.synthesize)
    throw scenario::config_error(
        "exactly one scenario source required: --config or --seed synthesis");
  if (has_file) return scenario::load_file(config.config_path);
  scenario::SynthesisSpec spec;
  spec.seed = config.seed;
  spec.households = config.households;
  spec.participation = config.participation;
  return scenario::synthesize(spec);
}

exec exec_mode(const RunConfig& config) {
  return config.serial ? exec::serial : default_exec();
}

OutcomeReport solve(const scenario::Scenario& s, Model model, double tau) {
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
  throw std::invalid_argument("unknown model");
}

void write_timeseries(const fs::path& path, const scenario::Scenario& s,
                      const OutcomeReport& report) {
  std::vector<std::string> header = {"t", "p", "a", "l_q", "q", "L"};
  for (int n = 0; n < s.participant_count(); ++n)
    header.push_back("x_" + std::to_string(n));
  for (int n = 0; n < s.participant_count(); ++n)
    header.push_back("l_" + std::to_string(n));
  CsvFile csv(path, header);
  const Eigen::VectorXd l_q = report.signal.l_q();
  for (int t = 0; t < s.grid.slots; ++t) {
    std::vector<std::string> row = {std::to_string(t),
                                    num(report.prices[t]),
                                    num(report.signal.a[t]),
                                    num(l_q[t]),
                                    num(report.trajectory.q[t + 1]),
                                    num(report.loads[t])};
    for (int n = 0; n < s.participant_count(); ++n)
      row.push_back(num(report.trades.x(n, t)));
    for (int n = 0; n < s.participant_count(); ++n)
      row.push_back(num(report.user_grid_load(n, t)));
    csv.write_row(row);
  }
}

void write_convergence(const fs::path& path, const OutcomeReport& report) {
  CsvFile csv(path, {"round", "revenue", "rho_rel_change"});
  for (const IterationRecord& record : report.iterations)
    csv.write_row({std::to_string(record.round), num(record.revenue),
                   num(record.rho_rel_change)});
}

void append_summary(CsvFile& csv, const scenario::Scenario& s,
                    const OutcomeReport& report,
                    const OutcomeReport& baseline) {
  const std::string model = to_string(report.model);
  auto row = [&](const std::string& key, const std::string& value) {
    csv.write_row({model, key, value});
  };
  row("revenue", num(report.revenue));
  row("community_grid_payment", num(report.community_grid_payment));
  row("par", num(metrics::par(report.loads)));
  if (report.model != Model::baseline) {
    const metrics::SavingsReport savings =
        metrics::cost_savings(report, baseline, s);
    row("community_benefit",
        num(metrics::community_benefit(report, baseline, s)));
    row("par_reduction_pct",
        num(metrics::par_reduction_pct(baseline.loads, report.loads)));
    row("avg_pu_saving_pct", num(savings.avg_participating_pct));
    row("np_saving_pct", num(savings.nonparticipating_pct));
    row("combined_saving_pct", num(savings.combined_pct));
  }
  if (report.model == Model::competitive) {
    row("converged", report.converged ? "1" : "0");
    row("rounds", std::to_string(report.iterations.size()));
  }
  row("warnings", std::to_string(report.warnings.size()));
}

std::vector<Model> selected_models(const std::string& name) {
  if (name == "all")
    return {Model::baseline, Model::centralized, Model::benevolent,
            Model::competitive};
  return {parse_model(name)};
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const scenario::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolverError;
  }
}

}  // namespace

int cmd_run(const RunConfig& config) {
  return guarded([&]() {
    const scenario::Scenario s = load_scenario(config);
    const std::vector<Model> models = selected_models(config.model);
    set_default_exec(exec_mode(config));
    fs::create_directories(config.out_dir);

    const OutcomeReport baseline = pricing::baseline_outcome(s);
    CsvFile summary(fs::path(config.out_dir) / "summary.csv",
                    {"model", "key", "value"});
    for (Model model : models) {
      const OutcomeReport report = model == Model::baseline
                                       ? baseline
                                       : solve(s, model, config.tau);
      const std::string suffix =
          models.size() > 1 ? "_" + to_string(model) : "";
      write_timeseries(
          fs::path(config.out_dir) / ("timeseries" + suffix + ".csv"), s,
          report);
      if (model == Model::competitive)
        write_convergence(fs::path(config.out_dir) / "convergence.csv",
                          report);
      append_summary(summary, s, report, baseline);
      for (const std::string& warning : report.warnings)
        std::cerr << to_string(model) << ": warning: " << warning << "\n";
    }
    return kExitOk;
  });
}

int cmd_compare(const RunConfig& config) {
  return guarded([&]() {
    // Participation sweeps need the synthesis pool; explicit user files
    // carry no rule for flipping flags.
    scenario::SynthesisSpec base_spec;
    if (!config.config_path.empty()) {
      const std::optional<scenario::SynthesisSpec> from_file =
          scenario::load_synthesis_spec(config.config_path);
      if (!from_file)
        throw scenario::config_error(
            "compare needs a synthesized scenario; explicit user files have "
            "no participation rule");
      base_spec = *from_file;
    } else if (config.synthesize) {
      base_spec.seed = config.seed;
      base_spec.households = config.households;
    } else {
      throw scenario::config_error(
          "exactly one scenario source required: --config or --seed "
          "synthesis");
    }
    set_default_exec(exec_mode(config));
    fs::create_directories(config.out_dir);
    CsvFile csv(fs::path(config.out_dir) / "comparison.csv",
                {"model", "participation_pct", "avg_pu_saving_pct",
                 "ces_revenue", "community_benefit", "par_reduction_pct"});
    std::vector<std::string> failures;

    for (double fraction : config.fractions) {
      if (!(fraction > 0.0 && fraction <= 1.0))
        throw scenario::config_error("fractions must be in (0, 1]");
      scenario::SynthesisSpec spec = base_spec;
      spec.participation = fraction;
      const scenario::Scenario s = scenario::synthesize(spec);
      const OutcomeReport baseline = pricing::baseline_outcome(s);
      for (Model model :
           {Model::competitive, Model::benevolent, Model::centralized}) {
        std::vector<std::string> row = {to_string(model),
                                        num(100.0 * fraction)};
        try {
          const OutcomeReport report = solve(s, model, config.tau);
          const metrics::ComparisonRow entry = metrics::comparison_row(
              report, baseline, s, 100.0 * fraction);
          row.push_back(num(entry.avg_pu_saving_pct));
          row.push_back(num(entry.ces_revenue));
          row.push_back(num(entry.community_benefit));
          row.push_back(num(entry.par_reduction_pct));
        } catch (const std::exception& e) {
          row.insert(row.end(), {"", "", "", ""});
          failures.push_back(to_string(model) + " at " +
                             num(100.0 * fraction) + "%: " + e.what());
        }
        csv.write_row(row);
      }
    }
    if (!failures.empty()) {
      std::ofstream diag(fs::path(config.out_dir) / "comparison_errors.txt",
                         std::ios::binary);
      for (const std::string& failure : failures) diag << failure << "\n";
      std::cerr << failures.size() << " comparison cells failed; see "
                << "comparison_errors.txt\n";
    }
    return kExitOk;
  });
}

int cmd_sweep(const RunConfig& config) {
  return guarded([&]() {
    const scenario::Scenario s = load_scenario(config);
    if (config.capacity_list.empty())
      throw scenario::config_error("sweep requires --capacity-list");
    set_default_exec(exec_mode(config));
    fs::create_directories(config.out_dir);

    const std::vector<Model> models =
        config.model == "all" || config.model == "competitive"
            ? (config.model == "all"
                   ? std::vector<Model>{Model::competitive, Model::benevolent,
                                        Model::centralized}
                   : std::vector<Model>{Model::competitive})
            : std::vector<Model>{parse_model(config.model)};

    const std::vector<metrics::SweepPoint> points = metrics::capacity_sweep(
        s, config.capacity_list, models, config.tau, exec_mode(config));

    CsvFile csv(fs::path(config.out_dir) / "sweep.csv",
                {"capacity", "model", "community_benefit"});
    std::vector<std::string> failures;
    for (const metrics::SweepPoint& point : points)
      for (const metrics::SweepEntry& entry : point.entries) {
        csv.write_row({num(point.capacity), to_string(entry.model),
                       entry.ok ? num(entry.benefit) : ""});
        if (!entry.ok)
          failures.push_back(to_string(entry.model) + " at capacity " +
                             num(point.capacity) + ": " + entry.error);
      }
    for (const metrics::ArgmaxEntry& best : metrics::sweep_argmax(points))
      std::cout << "argmax " << to_string(best.model) << ": capacity "
                << num(best.capacity) << " benefit " << num(best.benefit)
                << "\n";
    if (!failures.empty()) {
      std::ofstream diag(fs::path(config.out_dir) / "sweep_errors.txt",
                         std::ios::binary);
      for (const std::string& failure : failures) diag << failure << "\n";
    }
    return kExitOk;
  });
}

int cmd_noise(const RunConfig& config) {
  return guarded([&]() {
    const scenario::Scenario s = load_scenario(config);
    if (config.trials < 1)
      throw scenario::config_error("noise study requires --trials >= 1");
    set_default_exec(exec_mode(config));
    fs::create_directories(config.out_dir);

    const std::vector<metrics::NoiseRow> rows =
        metrics::noise_study(s, config.variance_list, config.trials,
                             config.seed, config.tau, exec_mode(config));

    CsvFile csv(fs::path(config.out_dir) / "noise.csv",
                {"variance_pct", "mape_pct", "avg_pu_saving_pct",
                 "combined_saving_pct", "par_reduction_pct",
                 "clip_events_mean", "trials"});
    for (const metrics::NoiseRow& row : rows)
      csv.write_row({num(row.variance_pct), num(row.mape_pct),
                     num(row.avg_pu_saving_pct), num(row.combined_saving_pct),
                     num(row.par_reduction_pct), num(row.clip_events_mean),
                     std::to_string(row.trials)});
    if (rows.size() >= 2) {
      const metrics::NoiseRow& first = rows.front();
      const metrics::NoiseRow& last = rows.back();
      if (last.mape_pct > first.mape_pct)
        std::cout << "saving slope: "
                  << num((last.avg_pu_saving_pct - first.avg_pu_saving_pct) /
                         (last.mape_pct - first.mape_pct))
                  << " pct-points per MAPE point\n";
    }
    return kExitOk;
  });
}

int cmd_validate(const RunConfig& config) {
  return guarded([&]() {
    const scenario::Scenario s = load_scenario(config);
    std::cout << "scenario ok: " << s.participant_count()
              << " participating users, " << s.nonparticipating_count
              << " non-participating, H=" << s.grid.slots << ", Q_M="
              << num(s.ces.capacity) << " kWh\n";
    const Eigen::VectorXd baseline = s.baseline_load();
    std::cout << "baseline load range [" << num(baseline.minCoeff()) << ", "
              << num(baseline.maxCoeff()) << "] kWh, price range ["
              << num(pricing::price_series(baseline, s.tariff).minCoeff())
              << ", "
              << num(pricing::price_series(baseline, s.tariff).maxCoeff())
              << "] cents/kWh\n";
    return kExitOk;
  });
}

}  // namespace cesim::cli
