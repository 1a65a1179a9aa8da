#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cesim/storage.hpp"

namespace cesim::pricing {
struct Tariff {
  Eigen::VectorXd phi;    // cents/kWh^2, > 0; peak slots carry 1.5x the
                          // off-peak value
  Eigen::VectorXd delta;  // cents/kWh, >= 0, constant across slots
};
}  // namespace cesim::pricing

namespace cesim::scenario {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TimeGrid {
  int slots = 48;        // H
  double dt_hours = 0.5;  // slot length
  int peak_start = 32;   // peak tariff window, half-open [peak_start, peak_end)
  int peak_end = 46;

  bool in_peak(int t) const { return t >= peak_start && t < peak_end; }
  void validate() const;
};

struct UserProfile {
  int id = 0;
  Eigen::VectorXd demand;      // e_n(t), kWh per slot, >= 0
  Eigen::VectorXd generation;  // g_n(t), kWh per slot, >= 0
  bool participating = true;
};

struct SurplusView {
  Eigen::VectorXd surplus;  // s_n(t) = g_n(t) - e_n(t)
};

SurplusView surplus_view(const UserProfile& profile);

// Index sets over Scenario::users. s > 0 goes to surplus; s = 0 is classed
// deficit so its trade interval collapses to [0, 0].
struct SlotPartition {
  std::vector<int> surplus_users;
  std::vector<int> deficit_users;
};

struct Scenario {
  TimeGrid grid;
  std::vector<UserProfile> users;  // participating households only
  int nonparticipating_count = 0;
  Eigen::VectorXd l_p;  // aggregate non-participating grid load, kWh per slot
  pricing::Tariff tariff;
  storage::CesParams ces;
  double l_max = 0.0;  // maximum allowable grid energy per slot

  int slot_count() const { return grid.slots; }
  int participant_count() const { return static_cast<int>(users.size()); }
  double surplus(int n, int t) const {
    return users[n].generation[t] - users[n].demand[t];
  }
  // S_A(t) = sum over participating users of s_n(t)
  Eigen::VectorXd surplus_total() const;
  // Grid load with no CES at all: sum_n (e_n - g_n) + l_P
  Eigen::VectorXd baseline_load() const;

  void validate() const;  // throws config_error
};

SlotPartition partition_users(const Scenario& scenario, int t);

// ---------------------------------------------------------------------------
// Synthetic profile generators (stand-ins for metered data)
// ---------------------------------------------------------------------------

// Double-peak daily demand shape. Peak positions/widths are in slot units.
struct DemandSpec {
  double daily_kwh = 14.0;
  double morning_peak = 15.0;
  double morning_width = 3.0;
  double evening_peak = 37.0;
  double evening_width = 4.0;
  double morning_share = 0.35;  // fraction of peaked energy in the morning hump
  double base_level = 0.6;      // flat component before normalization
  double noise_amp = 0.15;      // uniform multiplicative jitter, [0, 1)
};

// Daylight bell for PV. Sunrise/sunset are slot indices. The default peak
// keeps the community baseline load positive even at high participation.
struct PvSpec {
  double peak_kwh = 0.4;  // per-slot output at solar noon
  double sunrise = 13.0;
  double sunset = 39.0;
  double cloud_amp = 0.2;  // uniform downward jitter, [0, 1)
};

Eigen::VectorXd synth_demand(std::uint64_t seed, const DemandSpec& spec,
                             int slots);
Eigen::VectorXd synth_pv(std::uint64_t seed, const PvSpec& spec, int slots);

// Zero-mean Gaussian perturbation with sigma proportional to each element,
// scaled so the mean absolute percentage error over many draws approaches
// variance_pct / 2. Results are clamped at zero.
Eigen::VectorXd apply_forecast_noise(const Eigen::VectorXd& series,
                                     double variance_pct, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Whole-scenario synthesis and file loading
// ---------------------------------------------------------------------------

struct SynthesisSpec {
  std::uint64_t seed = 1;
  int households = 40;
  double participation = 0.4;  // fraction in (0, 1]
  TimeGrid grid;
  storage::CesParams ces;
  DemandSpec demand;           // per-user parameters jittered around this
  PvSpec pv;
  double nonparticipant_daily_kwh = 14.0;
  double user_jitter = 0.25;   // relative spread of per-user daily totals
  double ref_price_min = 20.0;  // reference tariff calibration targets
  double ref_price_max = 52.0;
  double ref_price_avg = 30.0;
};

Scenario synthesize(const SynthesisSpec& spec);

// Scenario text format: sections [grid], [tariff], [ces], [users],
// [generation] with key = value lines. Schema documented in the README.
Scenario from_config_text(const std::string& text);
Scenario load_file(const std::string& path);

// The synthesis parameters of a config, when it describes a synthesized
// community; nullopt for explicit user files (which carry no rule for
// varying participation).
std::optional<SynthesisSpec> synthesis_spec_from_text(const std::string& text);
std::optional<SynthesisSpec> load_synthesis_spec(const std::string& path);

}  // namespace cesim::scenario
