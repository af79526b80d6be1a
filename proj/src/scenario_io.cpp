#include "depopt/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace depopt::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "file", "cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError(path, "file", std::string("parse error: ") + e.what());
  }
}

const json& require(const json& j, const char* key, const std::string& file,
                    const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(file, ctx + "." + key, "missing field");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& file,
                      const std::string& ctx) {
  const json& v = require(j, key, file, ctx);
  if (!v.is_number()) throw ScenarioError(file, ctx + "." + key, "expected a number");
  return v.get<double>();
}

double optional_number(const json& j, const char* key, double fallback, const std::string& file,
                       const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ScenarioError(file, ctx + "." + key, "expected a number");
  return it->get<double>();
}

int require_int(const json& j, const char* key, const std::string& file, const std::string& ctx) {
  const json& v = require(j, key, file, ctx);
  if (!v.is_number_integer()) throw ScenarioError(file, ctx + "." + key, "expected an integer");
  return v.get<int>();
}

std::string require_string(const json& j, const char* key, const std::string& file,
                           const std::string& ctx) {
  const json& v = require(j, key, file, ctx);
  if (!v.is_string()) throw ScenarioError(file, ctx + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec2 require_xy(const json& j, const char* key, const std::string& file, const std::string& ctx) {
  const json& v = require(j, key, file, ctx);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ScenarioError(file, ctx + "." + key, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::array<int, 3> require_triple(const json& j, const char* key, const std::string& file,
                                  const std::string& ctx) {
  const json& v = require(j, key, file, ctx);
  if (!v.is_array() || v.size() != 3)
    throw ScenarioError(file, ctx + "." + key, "expected [day, evening, night]");
  std::array<int, 3> out{};
  for (std::size_t t = 0; t < 3; ++t) {
    if (!v[t].is_number_integer() || v[t].get<int>() < 0)
      throw ScenarioError(file, ctx + "." + key, "movement counts must be non-negative integers");
    out[t] = v[t].get<int>();
  }
  return out;
}

airframe::AircraftType load_aircraft_file(const std::string& path) {
  const json j = parse_json_file(path);
  if (require_string(j, "format", path, "aircraft") != "depopt-aircraft")
    throw ScenarioError(path, "format", "not a depopt-aircraft file");

  airframe::AircraftType ac;
  ac.name = require_string(j, "name", path, "aircraft");
  ac.reference_mass = require_number(j, "reference_mass_kg", path, "aircraft");
  ac.max_takeoff_thrust = require_number(j, "max_takeoff_thrust_N", path, "aircraft");
  ac.climb_thrust_fraction = require_number(j, "climb_thrust_fraction", path, "aircraft");
  const json& lapse = require(j, "thrust_lapse", path, "aircraft");
  ac.thrust_lapse.density_exponent =
      require_number(lapse, "density_exponent", path, "aircraft.thrust_lapse");
  ac.thrust_lapse.speed_coefficient =
      require_number(lapse, "speed_coefficient_per_mps", path, "aircraft.thrust_lapse");
  ac.v2_plus10 = require_number(j, "v2_plus10_kt", path, "aircraft") * kKnot;

  const json& flaps = require(j, "flap_schedule", path, "aircraft");
  if (!flaps.is_array() || flaps.empty())
    throw ScenarioError(path, "aircraft.flap_schedule", "expected a non-empty array");
  for (const auto& f : flaps) {
    airframe::FlapConfig cfg;
    cfg.name = require_string(f, "configuration", path, "aircraft.flap_schedule");
    cfg.min_eas = require_number(f, "min_eas_kt", path, "aircraft.flap_schedule") * kKnot;
    cfg.max_eas = require_number(f, "max_eas_kt", path, "aircraft.flap_schedule") * kKnot;
    cfg.cd0 = require_number(f, "cd0", path, "aircraft.flap_schedule");
    cfg.induced_factor = require_number(f, "induced_factor", path, "aircraft.flap_schedule");
    cfg.wing_area = require_number(f, "wing_area_m2", path, "aircraft.flap_schedule");
    ac.flap_schedule.push_back(cfg);
  }

  const json& fuel = require(j, "fuel_flow", path, "aircraft");
  ac.fuel_flow_model.idle = require_number(fuel, "idle_kg_s", path, "aircraft.fuel_flow");
  ac.fuel_flow_model.slope = require_number(fuel, "slope_kg_s_per_N", path, "aircraft.fuel_flow");
  ac.fuel_flow_model.speed_factor =
      require_number(fuel, "speed_factor_per_mps", path, "aircraft.fuel_flow");

  const json& npd = require(j, "npd", path, "aircraft");
  std::vector<double> thrust_grid;
  for (const auto& v : require(npd, "thrust_grid_kN", path, "aircraft.npd"))
    thrust_grid.push_back(v.get<double>() * 1000.0);
  std::vector<double> distance_grid;
  for (const auto& v : require(npd, "distance_grid_m", path, "aircraft.npd"))
    distance_grid.push_back(v.get<double>());
  std::vector<std::vector<double>> sel;
  for (const auto& row : require(npd, "sel_dba", path, "aircraft.npd"))
    sel.push_back(row.get<std::vector<double>>());
  const json& lat = require(npd, "lateral_attenuation", path, "aircraft.npd");
  noise::LateralAttenuation lateral;
  lateral.plateau_db = require_number(lat, "plateau_db", path, "aircraft.npd.lateral_attenuation");
  lateral.distance_rate =
      require_number(lat, "distance_rate_per_m", path, "aircraft.npd.lateral_attenuation");
  lateral.cutoff_elevation_deg =
      require_number(lat, "cutoff_elevation_deg", path, "aircraft.npd.lateral_attenuation");
  const double vref = require_number(npd, "reference_speed_kt", path, "aircraft.npd") * kKnot;
  ac.npd_table = noise::NpdTable(std::move(thrust_grid), std::move(distance_grid), std::move(sel),
                                 lateral, vref);
  return ac;
}

}  // namespace

GridLoadResult load_population_grid(const std::string& path, double expected_cell_size) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "file", "cannot open");

  struct Row {
    double x, y, p;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::stringstream ss(line);
    std::string fx, fy, fp;
    if (!std::getline(ss, fx, ',') || !std::getline(ss, fy, ',') || !std::getline(ss, fp, ','))
      throw ScenarioError(path, "line " + std::to_string(line_no), "expected x,y,population");
    char* end = nullptr;
    const double x = std::strtod(fx.c_str(), &end);
    if (end == fx.c_str()) {
      if (line_no == 1) continue;  // header row
      throw ScenarioError(path, "line " + std::to_string(line_no), "x is not a number");
    }
    const double y = std::strtod(fy.c_str(), &end);
    const double p = std::strtod(fp.c_str(), &end);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(p))
      throw ScenarioError(path, "line " + std::to_string(line_no), "non-finite value");
    if (p < 0.0)
      throw ScenarioError(path, "line " + std::to_string(line_no),
                          "negative population at (" + std::to_string(x) + ", " +
                              std::to_string(y) + ")");
    rows.push_back({x, y, p});
  }
  if (rows.empty()) throw ScenarioError(path, "file", "no data rows");

  auto unique_sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> u;
    for (double a : v)
      if (u.empty() || a - u.back() > 1e-6) u.push_back(a);
    return u;
  };
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.x);
    ys.push_back(r.y);
  }
  xs = unique_sorted(std::move(xs));
  ys = unique_sorted(std::move(ys));

  double spacing = expected_cell_size;
  auto infer_spacing = [&](const std::vector<double>& u) -> double {
    double s = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) {
      double d = u[i] - u[i - 1];
      if (s == 0.0 || d < s) s = d;
    }
    return s;
  };
  const double sx = infer_spacing(xs);
  const double sy = infer_spacing(ys);
  const double inferred = sx > 0.0 ? sx : sy;
  if (inferred > 0.0) {
    if (sx > 0.0 && sy > 0.0 && std::abs(sx - sy) > 1e-6)
      throw ScenarioError(path, "lattice",
                          "cells are not square: dx=" + std::to_string(sx) +
                              " dy=" + std::to_string(sy));
    spacing = inferred;
  }
  if (spacing <= 0.0)
    throw ScenarioError(path, "lattice", "cannot infer cell size from a single cell");
  if (expected_cell_size > 0.0 && std::abs(spacing - expected_cell_size) > 1e-6)
    throw ScenarioError(path, "lattice",
                        "cell size " + std::to_string(spacing) + " does not match configured " +
                            std::to_string(expected_cell_size));

  const double min_x = xs.front();
  const double min_y = ys.front();
  const int nx = static_cast<int>(std::llround((xs.back() - min_x) / spacing)) + 1;
  const int ny = static_cast<int>(std::llround((ys.back() - min_y) / spacing)) + 1;

  GridLoadResult out;
  out.grid.geometry = {{min_x, min_y}, spacing, nx, ny};
  out.grid.population.assign(out.grid.geometry.size(), -1.0);

  for (const auto& r : rows) {
    const double fx = (r.x - min_x) / spacing;
    const double fy = (r.y - min_y) / spacing;
    const long ix = std::lround(fx);
    const long iy = std::lround(fy);
    if (std::abs(fx - ix) > 1e-6 || std::abs(fy - iy) > 1e-6 || ix < 0 || iy < 0 || ix >= nx ||
        iy >= ny)
      throw ScenarioError(path, "lattice",
                          "point (" + std::to_string(r.x) + ", " + std::to_string(r.y) +
                              ") is off the inferred lattice");
    auto& cell = out.grid.population[out.grid.geometry.index(static_cast<int>(ix),
                                                             static_cast<int>(iy))];
    if (cell >= 0.0)
      throw ScenarioError(path, "lattice",
                          "duplicate cell at (" + std::to_string(r.x) + ", " +
                              std::to_string(r.y) + ")");
    cell = r.p;
  }
  for (auto& p : out.grid.population) {
    if (p < 0.0) {
      p = 0.0;
      ++out.missing_cells;
    }
  }
  return out;
}

Scenario load_scenario(const std::string& path) {
  const json j = parse_json_file(path);
  const std::string ctx = "scenario";
  if (require_string(j, "format", path, ctx) != "depopt-scenario")
    throw ScenarioError(path, "format", "not a depopt-scenario file");
  if (require_int(j, "version", path, ctx) != 1)
    throw ScenarioError(path, "version", "unsupported version");

  Scenario sc;
  sc.source_path = path;
  const fs::path base = fs::path(path).parent_path();
  sc.description = j.contains("description") ? j["description"].get<std::string>() : "";
  sc.seed = static_cast<std::uint64_t>(optional_number(j, "seed", 1.0, path, ctx));

  const json& atm = require(j, "atmosphere", path, ctx);
  sc.atmosphere.sea_level_density =
      require_number(atm, "sea_level_density_kg_m3", path, "atmosphere");
  sc.atmosphere.temperature_lapse =
      require_number(atm, "temperature_lapse_K_m", path, "atmosphere");
  sc.atmosphere.sea_level_temperature =
      require_number(atm, "sea_level_temperature_K", path, "atmosphere");
  sc.atmosphere.sea_level_pressure =
      require_number(atm, "sea_level_pressure_Pa", path, "atmosphere");
  if (sc.atmosphere.sea_level_density <= 0.0 || sc.atmosphere.temperature_lapse <= 0.0 ||
      sc.atmosphere.sea_level_temperature <= 0.0 || sc.atmosphere.sea_level_pressure <= 0.0)
    throw ScenarioError(path, "atmosphere", "constants must be positive");

  for (const auto& f : require(j, "aircraft_files", path, ctx)) {
    const std::string rel = f.get<std::string>();
    const auto ac = load_aircraft_file((base / rel).string());
    if (sc.type_index(ac.name) >= 0)
      throw ScenarioError(path, "aircraft_files", "duplicate aircraft name " + ac.name);
    sc.fleet.push_back(ac);
  }
  if (sc.fleet.empty()) throw ScenarioError(path, "aircraft_files", "at least one aircraft required");
  for (const auto& ac : sc.fleet) airframe::validate_aircraft(ac, sc.atmosphere, path);

  const json& sids = require(j, "sids", path, ctx);
  if (!sids.is_array() || sids.empty())
    throw ScenarioError(path, "sids", "expected a non-empty array");
  for (const auto& s : sids) {
    traj::SidDefinition sid;
    sid.name = require_string(s, "name", path, "sids");
    if (sc.sid_index(sid.name) >= 0)
      throw ScenarioError(path, "sids", "duplicate SID name " + sid.name);
    sid.runway_start = require_xy(s, "runway_start_xy_m", path, "sids");
    sid.initial_heading = require_number(s, "initial_heading_deg", path, "sids") * M_PI / 180.0;
    sid.start_altitude = require_number(s, "start_altitude_ft", path, "sids") * kFeet;
    sid.terminal_fix = require_xy(s, "terminal_fix_xy_m", path, "sids");
    sid.terminal_altitude = require_number(s, "terminal_altitude_ft", path, "sids") * kFeet;
    sid.terminal_eas = require_number(s, "terminal_eas_kt", path, "sids") * kKnot;
    sid.terminal_point_id = require_string(s, "terminal_point", path, "sids");
    if (sid.terminal_altitude <= sid.start_altitude)
      throw ScenarioError(path, "sids." + sid.name,
                          "terminal altitude must exceed the start altitude");
    const int capacity = require_int(s, "capacity_movements", path, "sids");
    if (capacity < 0) throw ScenarioError(path, "sids." + sid.name, "capacity must be >= 0");
    sc.sids.push_back(sid);
    if (sc.schedule.terminal_index(sid.terminal_point_id) < 0) {
      sc.schedule.terminals.push_back(sid.terminal_point_id);
      sc.schedule.totals.emplace_back(sc.fleet.size(), std::array<int, 3>{0, 0, 0});
    }
    sc.schedule.capacity.push_back(capacity);
  }

  for (const auto& row : require(j, "schedule", path, ctx)) {
    const std::string term = require_string(row, "terminal_point", path, "schedule");
    const std::string acname = require_string(row, "aircraft", path, "schedule");
    const int ti = sc.schedule.terminal_index(term);
    if (ti < 0)
      throw ScenarioError(path, "schedule",
                          "terminal point " + term + " is not served by any SID");
    const int ai = sc.type_index(acname);
    if (ai < 0) throw ScenarioError(path, "schedule", "unknown aircraft " + acname);
    const auto mv = require_triple(row, "movements_day_evening_night", path, "schedule");
    auto& slot = sc.schedule.totals[static_cast<std::size_t>(ti)][static_cast<std::size_t>(ai)];
    if (slot[0] + slot[1] + slot[2] > 0)
      throw ScenarioError(path, "schedule",
                          "duplicate row for terminal " + term + " and aircraft " + acname);
    slot = mv;
  }

  // Per-route upper bounds default to the full terminal totals.
  sc.schedule.upper_bounds.resize(sc.sids.size());
  for (std::size_t k = 0; k < sc.sids.size(); ++k) {
    const int ti = sc.terminal_of_sid(static_cast<int>(k));
    sc.schedule.upper_bounds[k] = sc.schedule.totals[static_cast<std::size_t>(ti)];
  }
  if (j.contains("upper_bounds")) {
    for (const auto& row : j["upper_bounds"]) {
      const std::string sid_name = require_string(row, "sid", path, "upper_bounds");
      const std::string acname = require_string(row, "aircraft", path, "upper_bounds");
      const int k = sc.sid_index(sid_name);
      if (k < 0) throw ScenarioError(path, "upper_bounds", "unknown SID " + sid_name);
      const int ai = sc.type_index(acname);
      if (ai < 0) throw ScenarioError(path, "upper_bounds", "unknown aircraft " + acname);
      sc.schedule.upper_bounds[static_cast<std::size_t>(k)][static_cast<std::size_t>(ai)] =
          require_triple(row, "max_day_evening_night", path, "upper_bounds");
    }
  }

  // Feasibility: terminal demand within route capacities, and the equality
  // groups must be coverable under the upper bounds.
  for (std::size_t s = 0; s < sc.schedule.terminals.size(); ++s) {
    int demand = 0;
    for (const auto& per_type : sc.schedule.totals[s])
      demand += per_type[0] + per_type[1] + per_type[2];
    int supply = 0;
    for (std::size_t k = 0; k < sc.sids.size(); ++k)
      if (sc.terminal_of_sid(static_cast<int>(k)) == static_cast<int>(s))
        supply += sc.schedule.capacity[k];
    if (demand > supply)
      throw InfeasibleScheduleError(path, "schedule",
                                    "terminal " + sc.schedule.terminals[s] + " demands " +
                                        std::to_string(demand) +
                                        " movements but its routes only admit " +
                                        std::to_string(supply));
    for (std::size_t i = 0; i < sc.fleet.size(); ++i) {
      for (std::size_t t = 0; t < 3; ++t) {
        int bound_sum = 0;
        for (std::size_t k = 0; k < sc.sids.size(); ++k)
          if (sc.terminal_of_sid(static_cast<int>(k)) == static_cast<int>(s))
            bound_sum += sc.schedule.upper_bounds[k][i][t];
        if (bound_sum < sc.schedule.totals[s][i][t])
          throw InfeasibleScheduleError(
              path, "upper_bounds",
              "terminal " + sc.schedule.terminals[s] + ", aircraft " + sc.fleet[i].name +
                  ": totals exceed the summed per-route upper bounds");
      }
    }
  }

  const json& popj = require(j, "population", path, ctx);
  const std::string grid_rel = require_string(popj, "csv", path, "population");
  const double cell = require_number(popj, "cell_size_m", path, "population");
  if (cell <= 0.0) throw ScenarioError(path, "population.cell_size_m", "must be positive");
  sc.population = load_population_grid((base / grid_rel).string(), cell).grid;

  if (j.contains("bank_limits")) {
    for (const auto& b : j["bank_limits"]) {
      traj::BankLimitBand band;
      band.min_altitude = require_number(b, "above_ft", path, "bank_limits") * kFeet;
      band.max_bank = require_number(b, "max_bank_deg", path, "bank_limits") * M_PI / 180.0;
      sc.bank_limits.push_back(band);
    }
  } else {
    sc.bank_limits = {{0.0, 15.0 * M_PI / 180.0},
                      {1000.0 * kFeet, 20.0 * M_PI / 180.0},
                      {3000.0 * kFeet, 25.0 * M_PI / 180.0}};
  }
  for (std::size_t b = 0; b < sc.bank_limits.size(); ++b) {
    if (sc.bank_limits[b].max_bank <= 0.0 || sc.bank_limits[b].max_bank >= M_PI / 2.0)
      throw ScenarioError(path, "bank_limits", "max bank must lie in (0, 90) degrees");
    if (b > 0 && sc.bank_limits[b].min_altitude <= sc.bank_limits[b - 1].min_altitude)
      throw ScenarioError(path, "bank_limits", "bands must have ascending altitudes");
  }
  if (sc.bank_limits.front().min_altitude != 0.0)
    throw ScenarioError(path, "bank_limits", "first band must start at 0 ft");

  if (j.contains("route_bounds")) {
    const json& rb = j["route_bounds"];
    sc.route_bounds.leg1_max = optional_number(rb, "leg1_max_m", 20000.0, path, "route_bounds");
    sc.route_bounds.leg2_max = optional_number(rb, "leg2_max_m", 20000.0, path, "route_bounds");
    sc.route_bounds.heading_half_range =
        optional_number(rb, "heading_half_range_deg", 80.0, path, "route_bounds") * M_PI / 180.0;
    sc.route_bounds.min_turn_radius =
        optional_number(rb, "min_turn_radius_m", 1500.0, path, "route_bounds");
    sc.route_bounds.max_turn_radius =
        optional_number(rb, "max_turn_radius_m", 20000.0, path, "route_bounds");
  }
  if (sc.route_bounds.min_turn_radius <= 0.0 ||
      sc.route_bounds.max_turn_radius <= sc.route_bounds.min_turn_radius)
    throw ScenarioError(path, "route_bounds", "need 0 < min_turn_radius < max_turn_radius");

  if (j.contains("integrator")) {
    const json& ig = j["integrator"];
    sc.integrator.time_step = optional_number(ig, "time_step_s", 0.5, path, "integrator");
    sc.integrator.event_time_tolerance =
        optional_number(ig, "event_time_tolerance_s", 1e-9, path, "integrator");
    sc.integrator.max_flight_time =
        optional_number(ig, "max_flight_time_s", 1500.0, path, "integrator");
    sc.integrator.cutback_altitude =
        optional_number(ig, "cutback_altitude_ft", 800.0, path, "integrator") * kFeet;
    sc.integrator.nadp2_climb_gamma =
        optional_number(ig, "nadp2_climb_gamma_deg", 3.4, path, "integrator") * M_PI / 180.0;
    sc.integrator.max_gamma =
        optional_number(ig, "max_gamma_deg", 12.0, path, "integrator") * M_PI / 180.0;
  }
  if (sc.integrator.time_step <= 0.0 || sc.integrator.max_flight_time <= 0.0 ||
      sc.integrator.event_time_tolerance <= 0.0)
    throw ScenarioError(path, "integrator", "time settings must be positive");
  if (sc.integrator.max_gamma >= 15.0 * M_PI / 180.0)
    throw ScenarioError(path, "integrator", "max flight path angle must stay below 15 degrees");

  sc.noise_sample_spacing_m = optional_number(j, "noise_sample_spacing_m", 300.0, path, ctx);
  if (sc.noise_sample_spacing_m < 0.0)
    throw ScenarioError(path, "noise_sample_spacing_m", "must be >= 0");

  if (j.contains("optimizer")) {
    const json& op = j["optimizer"];
    sc.optimizer.population_size =
        static_cast<int>(optional_number(op, "population_size", 50, path, "optimizer"));
    sc.optimizer.max_iterations =
        static_cast<int>(optional_number(op, "max_iterations", 1000, path, "optimizer"));
    sc.optimizer.neighborhood_size =
        static_cast<int>(optional_number(op, "neighborhood_size", 10, path, "optimizer"));
    sc.optimizer.de_scale = optional_number(op, "de_scale", 0.5, path, "optimizer");
    sc.optimizer.crossover_rate = optional_number(op, "crossover_rate", 0.9, path, "optimizer");
    sc.optimizer.mutation_rate = optional_number(op, "mutation_rate", -1.0, path, "optimizer");
    sc.optimizer.mutation_distribution_index =
        optional_number(op, "mutation_distribution_index", 20.0, path, "optimizer");
    sc.optimizer.replacement_limit =
        static_cast<int>(optional_number(op, "replacement_limit", 2, path, "optimizer"));
    sc.optimizer.neighbor_selection_prob =
        optional_number(op, "neighbor_selection_prob", 0.9, path, "optimizer");
  }
  sc.optimizer.rng_seed = sc.seed;
  if (sc.optimizer.population_size < 2)
    throw ScenarioError(path, "optimizer.population_size", "must be at least 2");
  if (sc.optimizer.neighborhood_size < 2 ||
      sc.optimizer.neighborhood_size > sc.optimizer.population_size)
    throw ScenarioError(path, "optimizer.neighborhood_size",
                        "must lie in [2, population_size]");

  return sc;
}

std::uint64_t scenario_fingerprint(const Scenario& sc) {
  Fnv1a h;
  h.feed(sc.atmosphere.sea_level_density);
  h.feed(sc.atmosphere.temperature_lapse);
  h.feed(sc.atmosphere.sea_level_temperature);
  h.feed(sc.atmosphere.sea_level_pressure);
  h.feed(static_cast<std::uint64_t>(sc.fleet.size()));
  for (const auto& ac : sc.fleet) {
    h.feed(ac.name);
    h.feed(ac.reference_mass);
    h.feed(ac.max_takeoff_thrust);
    h.feed(ac.climb_thrust_fraction);
    h.feed(ac.thrust_lapse.density_exponent);
    h.feed(ac.thrust_lapse.speed_coefficient);
    h.feed(ac.v2_plus10);
    h.feed(static_cast<std::uint64_t>(ac.flap_schedule.size()));
    for (const auto& f : ac.flap_schedule) {
      h.feed(f.name);
      h.feed(f.min_eas);
      h.feed(f.max_eas);
      h.feed(f.cd0);
      h.feed(f.induced_factor);
      h.feed(f.wing_area);
    }
    h.feed(ac.fuel_flow_model.idle);
    h.feed(ac.fuel_flow_model.slope);
    h.feed(ac.fuel_flow_model.speed_factor);
    const auto& npd = ac.npd_table;
    for (double v : npd.thrust_grid()) h.feed(v);
    for (double v : npd.distance_grid()) h.feed(v);
    for (const auto& row : npd.values())
      for (double v : row) h.feed(v);
    h.feed(npd.lateral().plateau_db);
    h.feed(npd.lateral().distance_rate);
    h.feed(npd.lateral().cutoff_elevation_deg);
    h.feed(npd.reference_speed());
  }
  h.feed(static_cast<std::uint64_t>(sc.sids.size()));
  for (const auto& s : sc.sids) {
    h.feed(s.name);
    h.feed(s.runway_start.x);
    h.feed(s.runway_start.y);
    h.feed(s.initial_heading);
    h.feed(s.start_altitude);
    h.feed(s.terminal_fix.x);
    h.feed(s.terminal_fix.y);
    h.feed(s.terminal_altitude);
    h.feed(s.terminal_eas);
    h.feed(s.terminal_point_id);
  }
  const auto& g = sc.population.geometry;
  h.feed(g.origin.x);
  h.feed(g.origin.y);
  h.feed(g.cell_size);
  h.feed(static_cast<std::int64_t>(g.nx));
  h.feed(static_cast<std::int64_t>(g.ny));
  for (double p : sc.population.population) h.feed(p);
  h.feed(static_cast<std::uint64_t>(sc.bank_limits.size()));
  for (const auto& b : sc.bank_limits) {
    h.feed(b.min_altitude);
    h.feed(b.max_bank);
  }
  h.feed(sc.route_bounds.leg1_max);
  h.feed(sc.route_bounds.leg2_max);
  h.feed(sc.route_bounds.heading_half_range);
  h.feed(sc.route_bounds.min_turn_radius);
  h.feed(sc.route_bounds.max_turn_radius);
  h.feed(sc.integrator.time_step);
  h.feed(sc.integrator.event_time_tolerance);
  h.feed(sc.integrator.max_flight_time);
  h.feed(sc.integrator.cutback_altitude);
  h.feed(sc.integrator.nadp2_climb_gamma);
  h.feed(sc.integrator.max_gamma);
  h.feed(sc.integrator.altitude_ceiling);
  h.feed(sc.noise_sample_spacing_m);
  return h.value();
}

// ---------------------------------------------------------------------------
// Route archive container
// ---------------------------------------------------------------------------

namespace {

constexpr char kArchiveMagic[4] = {'D', 'O', 'R', 'A'};
constexpr std::uint32_t kArchiveVersion = 1;

class BinaryWriter {
 public:
  explicit BinaryWriter(std::string path) : path_(std::move(path)) {
    tmp_ = path_ + ".tmp";
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open " + tmp_ + " for writing");
  }
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T> && !std::is_pointer_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void put_bytes(const char* data, std::size_t n) {
    out_.write(data, static_cast<std::streamsize>(n));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_doubles(const std::vector<double>& v) {
    put(static_cast<std::uint32_t>(v.size()));
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void put_floats(const std::vector<float>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
  void commit() {
    out_.flush();
    if (!out_) throw IoError("write failure on " + tmp_);
    out_.close();
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    if (ec) throw IoError("cannot move " + tmp_ + " to " + path_ + ": " + ec.message());
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string path) : path_(std::move(path)), in_(path_, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path_);
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    check();
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) fail("string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }
  std::vector<double> get_doubles() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 26)) fail("array length out of range");
    std::vector<double> v(n);
    in_.read(reinterpret_cast<char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
    check();
    return v;
  }
  std::vector<float> get_floats(std::size_t n) {
    std::vector<float> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    check();
    return v;
  }
  void check() {
    if (!in_) fail("unexpected end of file");
  }
  [[noreturn]] void fail(const std::string& msg) { throw ScenarioError(path_, "archive", msg); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace

void save_archive(const std::string& path, const framework::RouteArchive& archive,
                  std::uint64_t fingerprint) {
  BinaryWriter w(path);
  w.put_bytes(kArchiveMagic, 4);
  w.put(kArchiveVersion);
  w.put(fingerprint);
  w.put_string(archive.sid);
  w.put(static_cast<std::uint8_t>(archive.mode == framework::DesignMode::full_3d ? 1 : 0));
  w.put(static_cast<std::uint32_t>(archive.type_names.size()));
  for (const auto& n : archive.type_names) w.put_string(n);
  for (const auto& c : archive.assumption.per_type)
    for (int t = 0; t < 3; ++t) w.put(static_cast<std::int32_t>(c[static_cast<std::size_t>(t)]));
  noise::GridGeometry geom;
  if (!archive.entries.empty() && !archive.entries.front().sel.empty())
    geom = archive.entries.front().sel.front().geometry;
  w.put(geom.origin.x);
  w.put(geom.origin.y);
  w.put(geom.cell_size);
  w.put(static_cast<std::int32_t>(geom.nx));
  w.put(static_cast<std::int32_t>(geom.ny));
  w.put(static_cast<std::uint32_t>(archive.entries.size()));
  for (const auto& e : archive.entries) {
    w.put_doubles(e.decision);
    w.put(e.n_pa);
    w.put(e.t_fuel);
    w.put(e.track_length);
    for (std::size_t i = 0; i < archive.type_names.size(); ++i) {
      w.put(e.fuel_kg[i]);
      w.put(e.time_s[i]);
    }
    for (std::size_t i = 0; i < archive.type_names.size(); ++i) w.put_floats(e.sel[i].sel_dba);
  }
  w.commit();
}

framework::RouteArchive load_archive(const std::string& path, std::uint64_t expected_fingerprint,
                                     bool allow_mismatch) {
  BinaryReader r(path);
  const auto magic = r.get<std::array<char, 4>>();
  if (std::memcmp(magic.data(), kArchiveMagic, 4) != 0) r.fail("not a route archive file");
  const auto version = r.get<std::uint32_t>();
  if (version != kArchiveVersion)
    r.fail("unsupported archive version " + std::to_string(version));
  const auto fingerprint = r.get<std::uint64_t>();
  if (fingerprint != expected_fingerprint && !allow_mismatch)
    throw ArchiveHashMismatchError(
        path, "fingerprint",
        "archive was built from different scenario inputs; rerun design-routes or pass the "
        "override flag");

  framework::RouteArchive archive;
  archive.sid = r.get_string();
  archive.mode = r.get<std::uint8_t>() == 1 ? framework::DesignMode::full_3d
                                            : framework::DesignMode::track_only;
  const auto n_types = r.get<std::uint32_t>();
  if (n_types == 0 || n_types > 64) r.fail("type count out of range");
  for (std::uint32_t i = 0; i < n_types; ++i) archive.type_names.push_back(r.get_string());
  archive.assumption.per_type.resize(n_types);
  for (auto& c : archive.assumption.per_type)
    for (int t = 0; t < 3; ++t) c[static_cast<std::size_t>(t)] = r.get<std::int32_t>();
  noise::GridGeometry geom;
  geom.origin.x = r.get<double>();
  geom.origin.y = r.get<double>();
  geom.cell_size = r.get<double>();
  geom.nx = r.get<std::int32_t>();
  geom.ny = r.get<std::int32_t>();
  if (geom.nx < 0 || geom.ny < 0 || geom.size() > (1u << 26)) r.fail("grid size out of range");
  const auto n_entries = r.get<std::uint32_t>();
  if (n_entries > (1u << 20)) r.fail("entry count out of range");
  for (std::uint32_t e = 0; e < n_entries; ++e) {
    framework::RouteArchiveEntry entry;
    entry.decision = r.get_doubles();
    entry.n_pa = r.get<double>();
    entry.t_fuel = r.get<double>();
    entry.track_length = r.get<double>();
    entry.fuel_kg.resize(n_types);
    entry.time_s.resize(n_types);
    for (std::uint32_t i = 0; i < n_types; ++i) {
      entry.fuel_kg[i] = r.get<double>();
      entry.time_s[i] = r.get<double>();
    }
    for (std::uint32_t i = 0; i < n_types; ++i) {
      noise::SelGrid grid;
      grid.geometry = geom;
      grid.sel_dba = r.get_floats(geom.size());
      entry.sel.push_back(std::move(grid));
    }
    archive.entries.push_back(std::move(entry));
  }
  return archive;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write failure on " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

void write_front_csv(const std::string& path, const std::vector<FrontRow>& rows) {
  std::string out = "solution_id,n_pa,t_fuel_kg,distance_km,flight_time_h\n";
  for (const auto& r : rows) {
    out += std::to_string(r.solution_id) + "," + format_double(r.n_pa) + "," +
           format_double(r.t_fuel_kg) + "," + format_double(r.distance_km) + "," +
           format_double(r.flight_time_h) + "\n";
  }
  write_text_file(path, out);
}

void write_tracks_geojson(const std::string& path, const std::vector<TrackFeature>& features) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = json::array();
  for (const auto& f : features) {
    json feat;
    feat["type"] = "Feature";
    feat["properties"] = {{"sid", f.sid},
                          {"solution", f.solution_id},
                          {"n_pa", f.n_pa},
                          {"t_fuel_kg", f.t_fuel_kg}};
    json coords = json::array();
    for (const auto& p : f.points) coords.push_back({p.x, p.y});
    feat["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
    fc["features"].push_back(feat);
  }
  write_text_file(path, fc.dump(2) + "\n");
}

void write_profiles_csv(const std::string& path, const std::vector<ProfileRow>& rows) {
  std::string out =
      "solution_id,sid,aircraft,t_s,s_m,x_m,y_m,h_m,v_eas_mps,v_tas_mps,weight_N,thrust_N,"
      "gamma_rad,bank_rad\n";
  for (const auto& r : rows) {
    const auto& s = r.sample;
    out += std::to_string(r.solution_id) + "," + r.sid + "," + r.aircraft + "," +
           format_double(s.t) + "," + format_double(s.s) + "," + format_double(s.x) + "," +
           format_double(s.y) + "," + format_double(s.h) + "," + format_double(s.v_eas) + "," +
           format_double(s.v_tas) + "," + format_double(s.weight) + "," +
           format_double(s.thrust) + "," + format_double(s.gamma) + "," + format_double(s.bank) +
           "\n";
  }
  write_text_file(path, out);
}

void write_contour_asc(const std::string& path, const noise::GridGeometry& geometry,
                       const std::vector<std::uint8_t>& mask) {
  if (mask.size() != geometry.size())
    throw std::invalid_argument("mask does not match grid geometry");
  std::string out;
  out += "ncols " + std::to_string(geometry.nx) + "\n";
  out += "nrows " + std::to_string(geometry.ny) + "\n";
  out += "xllcorner " + format_double(geometry.origin.x - geometry.cell_size / 2.0) + "\n";
  out += "yllcorner " + format_double(geometry.origin.y - geometry.cell_size / 2.0) + "\n";
  out += "cellsize " + format_double(geometry.cell_size) + "\n";
  out += "NODATA_value -9999\n";
  for (int iy = geometry.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < geometry.nx; ++ix) {
      if (ix) out += ' ';
      out += mask[geometry.index(ix, iy)] ? '1' : '0';
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_allocation_tables_csv(const std::string& path,
                                 const std::vector<AllocationTableRow>& rows) {
  std::string out = "solution_id,sid,route_index,aircraft,day,evening,night\n";
  for (const auto& r : rows) {
    out += std::to_string(r.solution_id) + "," + r.sid + "," + std::to_string(r.route_index) +
           "," + r.aircraft + "," + std::to_string(r.movements[0]) + "," +
           std::to_string(r.movements[1]) + "," + std::to_string(r.movements[2]) + "\n";
  }
  write_text_file(path, out);
}

void write_trace_csv(const std::string& path, const std::vector<moead::TracePoint>& trace) {
  std::string out = "iteration,hypervolume,feasible_count\n";
  for (const auto& t : trace)
    out += std::to_string(t.iteration) + "," + format_double(t.hypervolume) + "," +
           std::to_string(t.feasible_count) + "\n";
  write_text_file(path, out);
}

namespace {

std::string fingerprint_hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void save_allocation_front(const std::string& path, const Scenario& scenario,
                           const std::vector<framework::AllocationSolution>& solutions,
                           std::uint64_t fingerprint) {
  json j;
  j["format"] = "depopt-allocation-front";
  j["version"] = 1;
  j["fingerprint"] = fingerprint_hex(fingerprint);
  j["sids"] = json::array();
  for (const auto& s : scenario.sids) j["sids"].push_back(s.name);
  j["aircraft"] = json::array();
  for (const auto& a : scenario.fleet) j["aircraft"].push_back(a.name);
  j["solutions"] = json::array();
  for (std::size_t id = 0; id < solutions.size(); ++id) {
    const auto& sol = solutions[id];
    json js;
    js["id"] = id;
    js["route_index"] = sol.route_index;
    js["n_pa"] = sol.n_pa;
    js["t_fuel_kg"] = sol.t_fuel;
    js["counts"] = json::array();
    for (int k = 0; k < sol.counts.num_routes; ++k) {
      for (int i = 0; i < sol.counts.num_types; ++i) {
        json row;
        row["sid"] = scenario.sids[static_cast<std::size_t>(k)].name;
        row["aircraft"] = scenario.fleet[static_cast<std::size_t>(i)].name;
        row["movements"] = {sol.counts.at(k, i, noise::Period::day),
                            sol.counts.at(k, i, noise::Period::evening),
                            sol.counts.at(k, i, noise::Period::night)};
        js["counts"].push_back(row);
      }
    }
    j["solutions"].push_back(js);
  }
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<framework::AllocationSolution> load_allocation_front(
    const std::string& path, const Scenario& scenario, std::uint64_t expected_fingerprint,
    bool allow_mismatch) {
  const json j = parse_json_file(path);
  if (require_string(j, "format", path, "front") != "depopt-allocation-front")
    throw ScenarioError(path, "format", "not an allocation front file");
  if (require_string(j, "fingerprint", path, "front") != fingerprint_hex(expected_fingerprint) &&
      !allow_mismatch)
    throw ArchiveHashMismatchError(path, "fingerprint",
                                   "front was produced from different scenario inputs");
  std::vector<framework::AllocationSolution> out;
  for (const auto& js : require(j, "solutions", path, "front")) {
    framework::AllocationSolution sol;
    sol.route_index = js.at("route_index").get<std::vector<int>>();
    sol.n_pa = js.at("n_pa").get<double>();
    sol.t_fuel = js.at("t_fuel_kg").get<double>();
    sol.counts = noise::OperationCounts::zeros(static_cast<int>(scenario.sids.size()),
                                               static_cast<int>(scenario.fleet.size()));
    for (const auto& row : js.at("counts")) {
      const int k = scenario.sid_index(row.at("sid").get<std::string>());
      const int i = scenario.type_index(row.at("aircraft").get<std::string>());
      if (k < 0 || i < 0)
        throw ScenarioError(path, "front.counts", "unknown SID or aircraft reference");
      const auto mv = row.at("movements").get<std::vector<int>>();
      if (mv.size() != 3) throw ScenarioError(path, "front.counts", "expected three movements");
      for (int t = 0; t < 3; ++t)
        sol.counts.at(k, i, static_cast<noise::Period>(t)) = mv[static_cast<std::size_t>(t)];
    }
    out.push_back(std::move(sol));
  }
  return out;
}

}  // namespace depopt::io
