#include "depopt/airframe.hpp"

#include <algorithm>
#include <cmath>

namespace depopt::airframe {

namespace {

void check_altitude(double h) {
  if (h < 0.0 || h > kMaxAltitude)
    throw std::domain_error("altitude " + std::to_string(h) + " m outside [0, 11000]");
}

}  // namespace

double density_at(const Atmosphere& atm, double h) {
  check_altitude(h);
  const double t0 = atm.sea_level_temperature;
  const double ratio = (t0 - atm.temperature_lapse * h) / t0;
  const double expo = kGravity / (atm.gas_constant() * atm.temperature_lapse) - 1.0;
  return atm.sea_level_density * std::pow(ratio, expo);
}

double density_gradient_at(const Atmosphere& atm, double h) {
  check_altitude(h);
  const double t0 = atm.sea_level_temperature;
  const double lapse = atm.temperature_lapse;
  const double ratio = (t0 - lapse * h) / t0;
  const double expo = kGravity / (atm.gas_constant() * lapse) - 1.0;
  return -atm.sea_level_density * expo * (lapse / t0) * std::pow(ratio, expo - 1.0);
}

const FlapConfig& AircraftType::config_for(double v_eas) const {
  for (const auto& cfg : flap_schedule) {
    if (v_eas >= cfg.min_eas && v_eas < cfg.max_eas) return cfg;
  }
  if (!flap_schedule.empty() && v_eas == flap_schedule.back().max_eas)
    return flap_schedule.back();
  throw std::domain_error(name + ": EAS " + std::to_string(v_eas) +
                          " m/s outside all flap configuration bands");
}

double available_thrust(const AircraftType& ac, double throttle, double h, double v_tas,
                        const Atmosphere& atm) {
  if (throttle < 0.0 || throttle > 1.0) {
    warnings().thrust_envelope_clamps.fetch_add(1, std::memory_order_relaxed);
    throttle = std::clamp(throttle, 0.0, 1.0);
  }
  const double rho_ratio = density_at(atm, h) / atm.sea_level_density;
  const double speed_term =
      std::max(0.0, 1.0 - ac.thrust_lapse.speed_coefficient * v_tas);
  const double max_thrust = ac.max_takeoff_thrust *
                            std::pow(rho_ratio, ac.thrust_lapse.density_exponent) * speed_term;
  const double cutback = ac.climb_thrust_fraction * max_thrust;
  return cutback + throttle * (max_thrust - cutback);
}

double drag(const AircraftType& ac, double h, double v_eas, double weight,
            const Atmosphere& atm) {
  check_altitude(h);
  const FlapConfig& cfg = ac.config_for(v_eas);
  const double q = 0.5 * atm.sea_level_density * v_eas * v_eas;  // EAS dynamic pressure
  const double cl = weight / (q * cfg.wing_area);
  return q * cfg.wing_area * (cfg.cd0 + cfg.induced_factor * cl * cl);
}

double fuel_flow(const AircraftType& ac, double thrust, double v_tas, double h) {
  (void)h;  // no altitude dependence in the shipped model
  const auto& m = ac.fuel_flow_model;
  return std::max(0.0, m.idle + m.slope * thrust * (1.0 + m.speed_factor * v_tas));
}

void validate_aircraft(const AircraftType& ac, const Atmosphere& atm, const std::string& source) {
  auto fail = [&](const std::string& field, const std::string& msg) {
    throw ScenarioError(source, field, msg);
  };
  if (ac.name.empty()) fail("name", "missing aircraft name");
  if (ac.reference_mass <= 0.0) fail("reference_mass", "must be positive");
  if (ac.max_takeoff_thrust <= 0.0) fail("max_takeoff_thrust", "must be positive");
  if (ac.climb_thrust_fraction <= 0.0 || ac.climb_thrust_fraction > 1.0)
    fail("climb_thrust_fraction", "must lie in (0, 1]");
  if (ac.flap_schedule.empty()) fail("flap_schedule", "at least one configuration required");
  for (std::size_t i = 0; i < ac.flap_schedule.size(); ++i) {
    const auto& cfg = ac.flap_schedule[i];
    if (cfg.min_eas >= cfg.max_eas)
      fail("flap_schedule", cfg.name + ": empty speed band");
    if (cfg.wing_area <= 0.0 || cfg.cd0 <= 0.0 || cfg.induced_factor < 0.0)
      fail("flap_schedule", cfg.name + ": non-positive polar coefficient");
    if (i > 0 && ac.flap_schedule[i - 1].max_eas != cfg.min_eas)
      fail("flap_schedule", cfg.name + ": bands must be contiguous and ascending");
  }
  if (ac.fuel_flow_model.idle < 0.0 || ac.fuel_flow_model.slope < 0.0)
    fail("fuel_flow_model", "negative coefficient");
  const double v2 = ac.v2_plus10;
  if (v2 < ac.flap_schedule.front().min_eas || v2 >= ac.flap_schedule.front().max_eas)
    fail("v2_plus10", "initial speed must fall in the first flap band");
  ac.npd_table.validate(source);

  const double weight = ac.reference_mass * kGravity;
  const double t = available_thrust(ac, 1.0, 0.0, v2, atm);
  const double d = drag(ac, 0.0, v2, weight, atm);
  if (t <= d)
    fail("max_takeoff_thrust", "sea-level thrust " + std::to_string(t) +
                                   " N does not exceed lift-off drag " + std::to_string(d) + " N");
}

}  // namespace depopt::airframe
