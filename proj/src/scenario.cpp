#include "cesim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cesim/pricing.hpp"
#include "cesim/rng.hpp"

namespace cesim::scenario {

void TimeGrid::validate() const {
  if (slots < 1) throw config_error("grid: slots must be >= 1");
  if (!(dt_hours > 0.0)) throw config_error("grid: dt_hours must be > 0");
  if (peak_start < 0 || peak_end < peak_start || peak_end > slots)
    throw config_error("grid: peak window must lie within [0, slots)");
}

SurplusView surplus_view(const UserProfile& profile) {
  if (profile.demand.size() != profile.generation.size())
    throw std::invalid_argument("surplus_view: series length mismatch");
  return {profile.generation - profile.demand};
}

Eigen::VectorXd Scenario::surplus_total() const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(grid.slots);
  for (const auto& user : users) total += user.generation - user.demand;
  return total;
}

Eigen::VectorXd Scenario::baseline_load() const {
  Eigen::VectorXd load = l_p;
  for (const auto& user : users) load += user.demand - user.generation;
  return load;
}

void Scenario::validate() const {
  grid.validate();
  ces.validate();
  if (users.empty())
    throw config_error("scenario: at least one participating user required");
  for (const auto& user : users) {
    if (!user.participating)
      throw config_error("scenario: users list must hold participants only");
    if (user.demand.size() != grid.slots ||
        user.generation.size() != grid.slots)
      throw config_error("scenario: user series length must equal slots");
    if (user.demand.minCoeff() < 0.0 || user.generation.minCoeff() < 0.0)
      throw config_error("scenario: demand/generation must be >= 0");
  }
  if (l_p.size() != grid.slots)
    throw config_error("scenario: l_p length must equal slots");
  if (l_p.minCoeff() < 0.0) throw config_error("scenario: l_p must be >= 0");
  if (nonparticipating_count < 0)
    throw config_error("scenario: nonparticipating_count must be >= 0");
  pricing::validate_tariff(tariff, grid);
  if (!(l_max > baseline_load().maxCoeff()))
    throw config_error("scenario: l_max must exceed the peak baseline load");
}

SlotPartition partition_users(const Scenario& scenario, int t) {
  if (t < 0 || t >= scenario.grid.slots)
    throw std::out_of_range("partition_users: slot out of range");
  SlotPartition part;
  for (int n = 0; n < scenario.participant_count(); ++n) {
    if (scenario.surplus(n, t) > 0.0)
      part.surplus_users.push_back(n);
    else
      part.deficit_users.push_back(n);
  }
  return part;
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

Eigen::VectorXd synth_demand(std::uint64_t seed, const DemandSpec& spec,
                             int slots) {
  if (spec.daily_kwh < 0.0)
    throw std::invalid_argument("synth_demand: daily total must be >= 0");
  if (!(spec.morning_width > 0.0) || !(spec.evening_width > 0.0))
    throw std::invalid_argument("synth_demand: peak widths must be > 0");
  if (spec.morning_share < 0.0 || spec.morning_share > 1.0)
    throw std::invalid_argument("synth_demand: morning_share in [0, 1]");

  rng gen(seed);
  Eigen::VectorXd series(slots);
  for (int t = 0; t < slots; ++t) {
    const double tm = t + 0.5;
    const double zm = (tm - spec.morning_peak) / spec.morning_width;
    const double ze = (tm - spec.evening_peak) / spec.evening_width;
    double shape = spec.base_level +
                   spec.morning_share * std::exp(-0.5 * zm * zm) +
                   (1.0 - spec.morning_share) * std::exp(-0.5 * ze * ze);
    shape *= 1.0 + spec.noise_amp * gen.uniform(-1.0, 1.0);
    series[t] = std::max(shape, 0.0);
  }
  const double sum = series.sum();
  if (spec.daily_kwh == 0.0) return Eigen::VectorXd::Zero(slots);
  if (sum <= 0.0)
    throw std::invalid_argument("synth_demand: degenerate shape sums to zero");
  series *= spec.daily_kwh / sum;
  return series;
}

Eigen::VectorXd synth_pv(std::uint64_t seed, const PvSpec& spec, int slots) {
  if (spec.sunrise >= spec.sunset)
    throw std::invalid_argument("synth_pv: sunrise must precede sunset");
  if (spec.peak_kwh < 0.0)
    throw std::invalid_argument("synth_pv: peak output must be >= 0");
  if (spec.cloud_amp < 0.0 || spec.cloud_amp > 1.0)
    throw std::invalid_argument("synth_pv: cloud_amp in [0, 1]");

  rng gen(seed);
  Eigen::VectorXd series = Eigen::VectorXd::Zero(slots);
  const double span = spec.sunset - spec.sunrise;
  for (int t = 0; t < slots; ++t) {
    const double tm = t + 0.5;
    if (tm <= spec.sunrise || tm >= spec.sunset) continue;
    const double x = (tm - spec.sunrise) / span;
    const double bell = std::sin(3.141592653589793 * x);
    double value = spec.peak_kwh * bell * bell;
    value *= 1.0 - spec.cloud_amp * gen.uniform01();
    series[t] = std::max(value, 0.0);
  }
  return series;
}

Eigen::VectorXd apply_forecast_noise(const Eigen::VectorXd& series,
                                     double variance_pct, std::uint64_t seed) {
  if (variance_pct < 0.0)
    throw std::invalid_argument("apply_forecast_noise: variance must be >= 0");
  if (variance_pct == 0.0) return series;
  // sigma chosen so E|error| / value = variance_pct / 2 (in percent):
  // MAPE of a zero-mean Gaussian is sigma * sqrt(2/pi).
  const double sigma_rel =
      (variance_pct / 200.0) * std::sqrt(3.141592653589793 / 2.0);
  rng gen(seed);
  Eigen::VectorXd noisy(series.size());
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    const double draw = gen.normal();
    noisy[t] = std::max(series[t] * (1.0 + sigma_rel * draw), 0.0);
  }
  return noisy;
}

// ---------------------------------------------------------------------------
// Whole-scenario synthesis
// ---------------------------------------------------------------------------

Scenario synthesize(const SynthesisSpec& spec) {
  if (!(spec.participation > 0.0 && spec.participation <= 1.0))
    throw config_error("synthesize: participation must be in (0, 1]");
  if (spec.households < 1)
    throw config_error("synthesize: households must be >= 1");
  spec.grid.validate();
  spec.ces.validate();

  const int total = spec.households;
  const int participants = std::clamp(
      static_cast<int>(std::lround(spec.participation * total)), 1, total);

  // Deterministic shuffle decides which households participate; growing the
  // fraction only flips additional flags.
  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = i;
  rng shuffle_gen(mix_seed(spec.seed, 7));
  for (int i = total - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_gen.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }

  Scenario scenario;
  scenario.grid = spec.grid;
  scenario.ces = spec.ces;
  scenario.nonparticipating_count = total - participants;

  const int slots = spec.grid.slots;
  for (int k = 0; k < participants; ++k) {
    const int household = order[k];
    rng jitter(mix_seed(spec.seed, 100 + household));
    DemandSpec d = spec.demand;
    d.daily_kwh *= 1.0 + spec.user_jitter * jitter.uniform(-1.0, 1.0);
    d.morning_peak += jitter.uniform(-1.0, 1.0);
    d.evening_peak += jitter.uniform(-1.0, 1.0);
    PvSpec p = spec.pv;
    p.peak_kwh *= 1.0 + spec.user_jitter * jitter.uniform(-1.0, 1.0);

    UserProfile user;
    user.id = household;
    user.participating = true;
    user.demand = synth_demand(mix_seed(spec.seed, 1000 + household), d, slots);
    user.generation = synth_pv(mix_seed(spec.seed, 2000 + household), p, slots);
    scenario.users.push_back(std::move(user));
  }

  DemandSpec np = spec.demand;
  np.daily_kwh = spec.nonparticipant_daily_kwh;
  np.noise_amp = std::min(spec.demand.noise_amp, 0.05);
  scenario.l_p = static_cast<double>(scenario.nonparticipating_count) *
                 synth_demand(mix_seed(spec.seed, 3), np, slots);
  if (scenario.nonparticipating_count == 0)
    scenario.l_p = Eigen::VectorXd::Zero(slots);

  const Eigen::VectorXd baseline = scenario.baseline_load();
  scenario.tariff =
      pricing::calibrate_tariff(spec.ref_price_min, spec.ref_price_max,
                                spec.ref_price_avg, baseline, spec.grid);
  scenario.l_max = 1.5 * baseline.maxCoeff();
  scenario.validate();
  return scenario;
}

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

SectionMap parse_sections(const std::string& text) {
  SectionMap sections;
  std::istringstream stream(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config line " + std::to_string(lineno) +
                           ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || current.empty())
      throw config_error("config line " + std::to_string(lineno) +
                         ": expected key = value inside a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error("config line " + std::to_string(lineno) +
                         ": empty key");
    sections[current][key] = value;
  }
  return sections;
}

class SectionReader {
 public:
  SectionReader(const SectionMap& map, std::string name)
      : name_(std::move(name)) {
    auto it = map.find(name_);
    if (it != map.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) const {
    return entries_ && entries_->count(key) > 0;
  }

  std::string raw(const std::string& key) const {
    if (!has(key))
      throw config_error("[" + name_ + "] missing required key '" + key + "'");
    return entries_->at(key);
  }

  double number(const std::string& key) const {
    const std::string value = raw(key);
    try {
      std::size_t used = 0;
      const double parsed = std::stod(value, &used);
      if (trim(value.substr(used)).empty()) return parsed;
    } catch (const std::exception&) {
    }
    throw config_error("[" + name_ + "] key '" + key + "': not a number");
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const {
    const double value = number(key);
    const int rounded = static_cast<int>(std::lround(value));
    if (std::abs(value - rounded) > 1e-9)
      throw config_error("[" + name_ + "] key '" + key + "': not an integer");
    return rounded;
  }

  int integer_or(const std::string& key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool flag_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string value = raw(key);
    std::transform(value.begin(), value.end(), value.begin(), ::tolower);
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw config_error("[" + name_ + "] key '" + key + "': not a boolean");
  }

  Eigen::VectorXd list(const std::string& key, int expected) const {
    std::vector<double> values;
    std::istringstream stream(raw(key));
    std::string item;
    while (std::getline(stream, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw config_error("[" + name_ + "] key '" + key +
                           "': malformed number list");
      }
    }
    if (expected > 0 && static_cast<int>(values.size()) != expected)
      throw config_error("[" + name_ + "] key '" + key + "': expected " +
                         std::to_string(expected) + " values, got " +
                         std::to_string(values.size()));
    return Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* entries_ = nullptr;
};

TimeGrid grid_from_sections(const SectionReader& grid_sec) {
  TimeGrid grid;
  grid.slots = grid_sec.integer_or("slots", 48);
  grid.dt_hours = grid_sec.number_or("dt_hours", 0.5);
  grid.peak_start = grid_sec.integer_or("peak_start", 32);
  grid.peak_end = grid_sec.integer_or("peak_end", 46);
  grid.validate();
  return grid;
}

storage::CesParams ces_from_sections(const SectionReader& ces_sec,
                                     const TimeGrid& grid) {
  storage::CesParams ces;
  ces.capacity = ces_sec.number_or("capacity", 80.0);
  ces.q0 = ces_sec.number_or("initial_charge", 0.25 * ces.capacity);
  if (ces_sec.has("leakage_per_slot"))
    ces.alpha = ces_sec.number("leakage_per_slot");
  else
    ces.alpha = std::pow(ces_sec.number_or("daily_retention", 0.9),
                         1.0 / grid.slots);
  ces.beta_plus = ces_sec.number_or("charge_efficiency", 0.9);
  ces.beta_minus = ces_sec.number_or("discharge_factor", 1.1);
  try {
    ces.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("[ces] ") + e.what());
  }
  return ces;
}

SynthesisSpec spec_from_sections(const SectionMap& sections) {
  const SectionReader grid_sec(sections, "grid");
  const SectionReader tariff_sec(sections, "tariff");
  const SectionReader ces_sec(sections, "ces");
  const SectionReader users_sec(sections, "users");
  const SectionReader gen_sec(sections, "generation");

  SynthesisSpec spec;
  spec.grid = grid_from_sections(grid_sec);
  spec.ces = ces_from_sections(ces_sec, spec.grid);
  spec.seed = static_cast<std::uint64_t>(gen_sec.integer_or("seed", 1));
  spec.households = users_sec.integer_or("count", 40);
  spec.participation = users_sec.number_or("participation", 0.4);
  spec.demand.daily_kwh =
      gen_sec.number_or("demand_daily_kwh", spec.demand.daily_kwh);
  spec.demand.morning_peak =
      gen_sec.number_or("morning_peak", spec.demand.morning_peak);
  spec.demand.morning_width =
      gen_sec.number_or("morning_width", spec.demand.morning_width);
  spec.demand.evening_peak =
      gen_sec.number_or("evening_peak", spec.demand.evening_peak);
  spec.demand.evening_width =
      gen_sec.number_or("evening_width", spec.demand.evening_width);
  spec.demand.morning_share =
      gen_sec.number_or("morning_share", spec.demand.morning_share);
  spec.demand.base_level =
      gen_sec.number_or("base_level", spec.demand.base_level);
  spec.demand.noise_amp = gen_sec.number_or("noise_amp", spec.demand.noise_amp);
  spec.pv.peak_kwh = gen_sec.number_or("pv_peak_kwh", spec.pv.peak_kwh);
  spec.pv.sunrise = gen_sec.number_or("sunrise", spec.pv.sunrise);
  spec.pv.sunset = gen_sec.number_or("sunset", spec.pv.sunset);
  spec.pv.cloud_amp = gen_sec.number_or("cloud_amp", spec.pv.cloud_amp);
  spec.nonparticipant_daily_kwh =
      gen_sec.number_or("nonparticipant_daily_kwh",
                        spec.nonparticipant_daily_kwh);
  spec.user_jitter = gen_sec.number_or("user_jitter", 0.25);
  spec.ref_price_min = tariff_sec.number_or("ref_min", 20.0);
  spec.ref_price_max = tariff_sec.number_or("ref_max", 52.0);
  spec.ref_price_avg = tariff_sec.number_or("ref_avg", 30.0);
  return spec;
}

}  // namespace

Scenario from_config_text(const std::string& text) {
  const SectionMap sections = parse_sections(text);
  const SectionReader grid_sec(sections, "grid");
  const SectionReader tariff_sec(sections, "tariff");
  const SectionReader ces_sec(sections, "ces");
  const SectionReader users_sec(sections, "users");

  const TimeGrid grid = grid_from_sections(grid_sec);
  const storage::CesParams ces = ces_from_sections(ces_sec, grid);

  // Explicit users (user.N.demand present) versus synthesized community.
  const bool explicit_users = users_sec.has("user.0.demand");
  Scenario scenario;
  if (explicit_users) {
    scenario.grid = grid;
    scenario.ces = ces;
    Eigen::VectorXd folded = Eigen::VectorXd::Zero(grid.slots);
    int folded_count = 0;
    for (int i = 0;; ++i) {
      const std::string prefix = "user." + std::to_string(i) + ".";
      if (!users_sec.has(prefix + "demand")) break;
      UserProfile user;
      user.id = i;
      user.demand = users_sec.list(prefix + "demand", grid.slots);
      user.generation = users_sec.has(prefix + "generation")
                            ? users_sec.list(prefix + "generation", grid.slots)
                            : Eigen::VectorXd::Zero(grid.slots);
      user.participating = users_sec.flag_or(prefix + "participating", true);
      if (!user.participating) {
        if (user.generation.cwiseAbs().maxCoeff() > 0.0)
          throw config_error(
              "[users] non-participating users must have zero generation");
        folded += user.demand;
        ++folded_count;
        continue;
      }
      scenario.users.push_back(std::move(user));
    }
    scenario.l_p = folded;
    if (users_sec.has("l_p")) scenario.l_p += users_sec.list("l_p", grid.slots);
    scenario.nonparticipating_count =
        users_sec.integer_or("nonparticipating_count", folded_count);
  } else {
    scenario = synthesize(spec_from_sections(sections));
  }

  if (tariff_sec.has("phi_offpeak")) {
    scenario.tariff = pricing::make_tariff(tariff_sec.number("phi_offpeak"),
                                           tariff_sec.number_or("delta", 0.0),
                                           scenario.grid);
  } else if (explicit_users) {
    scenario.tariff = pricing::calibrate_tariff(
        tariff_sec.number_or("ref_min", 20.0),
        tariff_sec.number_or("ref_max", 52.0),
        tariff_sec.number_or("ref_avg", 30.0), scenario.baseline_load(),
        scenario.grid);
  }

  scenario.l_max = grid_sec.has("l_max")
                       ? grid_sec.number("l_max")
                       : 1.5 * scenario.baseline_load().maxCoeff();
  scenario.validate();
  return scenario;
}

Scenario load_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw config_error("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return from_config_text(buffer.str());
}

std::optional<SynthesisSpec> synthesis_spec_from_text(const std::string& text) {
  const SectionMap sections = parse_sections(text);
  const SectionReader users_sec(sections, "users");
  if (users_sec.has("user.0.demand")) return std::nullopt;
  return spec_from_sections(sections);
}

std::optional<SynthesisSpec> load_synthesis_spec(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw config_error("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return synthesis_spec_from_text(buffer.str());
}

}  // namespace cesim::scenario
