#include "mgdispatch/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace mgdispatch {

using nlohmann::json;

void ScenarioSet::validate() const {
  if (scenarios.empty()) throw SchemaError("scenario set is empty");
  if (horizon < 1) throw SchemaError("horizon must be >= 1");
  if (step_seconds <= 0) throw SchemaError("step_seconds must be positive");
  for (const auto& sc : scenarios) {
    if (sc.gcp_voltage_mag.size() != horizon)
      throw DimensionMismatch("scenario " + std::to_string(sc.id) +
                              ": gcp_voltage_mag length != horizon");
    for (int t = 0; t < horizon; ++t) {
      const double v = sc.gcp_voltage_mag(t);
      if (v < 0.9 || v > 1.1)
        throw SchemaError("scenario " + std::to_string(sc.id) + ": GCP voltage " +
                          std::to_string(v) + " outside [0.9, 1.1] at t=" +
                          std::to_string(t));
    }
    for (const auto& [name, inj] : sc.grids) {
      if (inj.p_unc.cols() != horizon || inj.q_unc.cols() != horizon)
        throw DimensionMismatch("scenario " + std::to_string(sc.id) + ", grid '" + name +
                                "': series length != horizon");
      if (inj.p_unc.rows() != inj.q_unc.rows())
        throw DimensionMismatch("scenario " + std::to_string(sc.id) + ", grid '" + name +
                                "': p_unc/q_unc bus counts differ");
    }
    if (sc.grids.size() != scenarios.front().grids.size())
      throw DimensionMismatch("scenarios disagree on the set of grids");
  }
}

namespace {

Eigen::MatrixXd parse_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw SchemaError(ctx + ": expected [bus][t] array of arrays");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw DimensionMismatch(ctx + ": ragged rows at bus " + std::to_string(i));
    for (int t = 0; t < cols; ++t) m(i, t) = j[i][t].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int t = 0; t < m.cols(); ++t) row.push_back(m(i, t));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ScenarioSet parse_scenarios(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("scenario file: ") + e.what());
  }
  ScenarioSet set;
  set.step_seconds = j.value("step_seconds", 900.0);
  if (!j.contains("scenarios") || !j["scenarios"].is_array() || j["scenarios"].empty())
    throw SchemaError("scenario file: missing or empty 'scenarios' array");
  int horizon = -1;
  for (const auto& sj : j["scenarios"]) {
    Scenario sc;
    sc.id = sj.value("id", static_cast<int>(set.scenarios.size()));
    const auto& vj = sj.at("gcp_voltage_mag");
    sc.gcp_voltage_mag.resize(vj.size());
    for (int t = 0; t < static_cast<int>(vj.size()); ++t)
      sc.gcp_voltage_mag(t) = vj[t].get<double>();
    if (horizon < 0) horizon = static_cast<int>(sc.gcp_voltage_mag.size());
    for (const auto& [name, gj] : sj.at("grids").items()) {
      GridInjections inj;
      inj.p_unc = parse_matrix(gj.at("p_unc"), "grid '" + name + "' p_unc");
      inj.q_unc = parse_matrix(gj.at("q_unc"), "grid '" + name + "' q_unc");
      sc.grids[name] = std::move(inj);
    }
    set.scenarios.push_back(std::move(sc));
  }
  set.horizon = horizon;
  set.validate();
  return set;
}

ScenarioSet load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenarios(ss.str());
}

void save_scenarios(const ScenarioSet& set, const std::string& path) {
  json j;
  j["step_seconds"] = set.step_seconds;
  j["scenarios"] = json::array();
  for (const auto& sc : set.scenarios) {
    json sj;
    sj["id"] = sc.id;
    json v = json::array();
    for (int t = 0; t < sc.gcp_voltage_mag.size(); ++t) v.push_back(sc.gcp_voltage_mag(t));
    sj["gcp_voltage_mag"] = v;
    sj["grids"] = json::object();
    for (const auto& [name, inj] : sc.grids) {
      sj["grids"][name] = {{"p_unc", matrix_to_json(inj.p_unc)},
                           {"q_unc", matrix_to_json(inj.q_unc)}};
    }
    j["scenarios"].push_back(sj);
  }
  std::ofstream out(path);
  out << j.dump(1) << '\n';
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open synth spec: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("synth spec: ") + e.what());
  }
  SynthSpec spec;
  spec.horizon = j.value("horizon", 96);
  spec.step_seconds = j.value("step_seconds", 900.0);
  spec.n_scenarios = j.value("n_scenarios", 7);
  spec.gcp_v_low = j.value("gcp_v_low", 0.98);
  spec.gcp_v_high = j.value("gcp_v_high", 1.02);
  if (!j.contains("grids")) throw SchemaError("synth spec: missing 'grids'");
  for (const auto& [name, gj] : j["grids"].items()) {
    SynthGridSpec g;
    g.n_nonslack = gj.at("n_nonslack").get<int>();
    g.load_buses = gj.value("load_buses", std::vector<int>{});
    g.load_peak_pu = gj.value("load_peak_pu", 0.0);
    g.load_power_factor = gj.value("load_power_factor", 0.95);
    g.pv_buses = gj.value("pv_buses", std::vector<int>{});
    g.pv_peak_pu = gj.value("pv_peak_pu", std::vector<double>{});
    g.load_noise = gj.value("load_noise", 0.05);
    g.pv_noise = gj.value("pv_noise", 0.2);
    if (g.pv_peak_pu.size() != g.pv_buses.size())
      throw SchemaError("synth spec grid '" + name + "': pv_buses/pv_peak_pu mismatch");
    for (int bus : g.load_buses)
      if (bus < 1 || bus > g.n_nonslack)
        throw SchemaError("synth spec grid '" + name + "': load bus out of range");
    for (int bus : g.pv_buses)
      if (bus < 1 || bus > g.n_nonslack)
        throw SchemaError("synth spec grid '" + name + "': pv bus out of range");
    spec.grids[name] = std::move(g);
  }
  return spec;
}

namespace {

// Clear-sky bell: zero outside [6h, 20h], cosine bell peaking at 13h.
double clear_sky(double hour) {
  if (hour < 6.0 || hour > 20.0) return 0.0;
  const double x = (hour - 13.0) / 7.0;  // [-1, 1]
  return 0.5 * (1.0 + std::cos(M_PI * x));
}

// Double-hump daily demand: morning and evening peaks over a base load.
double demand_shape(double hour) {
  const double morning = std::exp(-0.5 * std::pow((hour - 8.0) / 2.0, 2));
  const double evening = std::exp(-0.5 * std::pow((hour - 19.5) / 2.5, 2));
  return 0.45 + 0.55 * std::max(morning, evening);
}

}  // namespace

ScenarioSet synthesize_scenarios(const SynthSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ScenarioSet set;
  set.horizon = spec.horizon;
  set.step_seconds = spec.step_seconds;

  for (int w = 0; w < spec.n_scenarios; ++w) {
    Scenario sc;
    sc.id = w;
    sc.gcp_voltage_mag.resize(spec.horizon);
    for (int t = 0; t < spec.horizon; ++t)
      sc.gcp_voltage_mag(t) =
          spec.gcp_v_low + (spec.gcp_v_high - spec.gcp_v_low) * unit(rng);

    for (const auto& [name, g] : spec.grids) {
      GridInjections inj;
      inj.p_unc = Eigen::MatrixXd::Zero(g.n_nonslack, spec.horizon);
      inj.q_unc = Eigen::MatrixXd::Zero(g.n_nonslack, spec.horizon);

      // Per-scenario deviations: a small persistent multiplicative offset plus
      // a dominant slow intra-day wobble with random phase. Keeping the
      // persistent part small keeps the day's deviation energy bounded, which
      // is what storage can realistically absorb; zero noise amplitude
      // collapses every scenario onto the point forecast.
      const double load_factor = 1.0 + 0.25 * g.load_noise * (2.0 * unit(rng) - 1.0);
      const double pv_factor = 1.0 + 0.25 * g.pv_noise * (2.0 * unit(rng) - 1.0);
      const double phase = 2.0 * M_PI * unit(rng);
      const double pv_phase = 2.0 * M_PI * unit(rng);
      const double wobble_amp = g.load_noise;
      const double pv_wobble_amp = g.pv_noise;

      const double q_ratio =
          std::tan(std::acos(std::min(1.0, g.load_power_factor)));
      for (int t = 0; t < spec.horizon; ++t) {
        const double hour = (t + 0.5) * spec.step_seconds / 3600.0;
        const double wobble =
            1.0 + wobble_amp * std::sin(2.0 * M_PI * hour / 24.0 + phase);
        const double total_load =
            g.load_peak_pu * demand_shape(hour) * load_factor * wobble;
        if (!g.load_buses.empty()) {
          const double per_bus = total_load / static_cast<double>(g.load_buses.size());
          for (int bus : g.load_buses) {
            inj.p_unc(bus - 1, t) -= per_bus;           // demand: negative injection
            inj.q_unc(bus - 1, t) -= per_bus * q_ratio;
          }
        }
        const double pv_wobble =
            1.0 + pv_wobble_amp * std::sin(2.0 * M_PI * hour / 12.0 + pv_phase);
        const double sun = clear_sky(hour) * pv_factor * pv_wobble;
        for (std::size_t i = 0; i < g.pv_buses.size(); ++i)
          inj.p_unc(g.pv_buses[i] - 1, t) += g.pv_peak_pu[i] * sun;
      }
      sc.grids[name] = std::move(inj);
    }
    set.scenarios.push_back(std::move(sc));
  }
  set.validate();
  return set;
}

}  // namespace mgdispatch
