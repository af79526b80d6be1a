#pragma once

#include <string>
#include <vector>

#include "depopt/common.hpp"
#include "depopt/npd.hpp"

namespace depopt::airframe {

// ISA-style troposphere. Density follows
//   rho(h) = rho0 * (T(h)/T0)^(g0/(R L) - 1),  T(h) = T0 - L h,
// with the gas constant derived from the configured sea-level state,
// R = p0 / (rho0 T0). Valid up to 11 km.
struct Atmosphere {
  double sea_level_density = 1.225;        // kg/m^3
  double temperature_lapse = 0.0065;       // K/m
  double sea_level_temperature = 288.15;   // K
  double sea_level_pressure = 101325.0;    // Pa

  double gas_constant() const {
    return sea_level_pressure / (sea_level_density * sea_level_temperature);
  }
};

inline constexpr double kMaxAltitude = 11000.0;  // m, troposphere cap

double density_at(const Atmosphere& atm, double h);
double density_gradient_at(const Atmosphere& atm, double h);

// One flap setting with its parabolic polar, valid on [min_eas, max_eas).
struct FlapConfig {
  std::string name;
  double min_eas = 0.0;   // m/s
  double max_eas = 0.0;   // m/s
  double cd0 = 0.0;
  double induced_factor = 0.0;  // k in CD = CD0 + k CL^2
  double wing_area = 0.0;       // m^2
};

// Available thrust lapse: T(h, V) = T0 * (rho/rho0)^density_exponent
//                                      * (1 - speed_coefficient * V_TAS).
struct ThrustLapse {
  double density_exponent = 0.7;
  double speed_coefficient = 0.0;  // per m/s
};

// Fuel flow: mdot = idle + slope * T * (1 + speed_factor * V_TAS).
struct FuelFlowModel {
  double idle = 0.0;          // kg/s
  double slope = 0.0;         // kg/s per N
  double speed_factor = 0.0;  // per m/s
};

struct AircraftType {
  std::string name;
  double reference_mass = 0.0;       // kg
  double max_takeoff_thrust = 0.0;   // N, sea-level static
  double climb_thrust_fraction = 1.0;
  ThrustLapse thrust_lapse;
  std::vector<FlapConfig> flap_schedule;  // ascending, contiguous speed bands
  FuelFlowModel fuel_flow_model;
  double v2_plus10 = 0.0;  // m/s EAS, initial climb speed
  noise::NpdTable npd_table;

  // Clean-configuration entry speed: lower edge of the last flap band.
  double clean_speed() const { return flap_schedule.back().min_eas; }
  const FlapConfig& config_for(double v_eas) const;
};

// Throttle 0 maps to climb (cutback) thrust, 1 to max take-off thrust,
// linear in between. Out-of-band throttle is clamped and counted.
double available_thrust(const AircraftType& ac, double throttle, double h, double v_tas,
                        const Atmosphere& atm);

double drag(const AircraftType& ac, double h, double v_eas, double weight,
            const Atmosphere& atm);

double fuel_flow(const AircraftType& ac, double thrust, double v_tas, double h);

// Structural checks on loaded aircraft data: band layout, positive
// coefficients, and enough sea-level thrust to out-pull drag at the initial
// climb speed. Throws ScenarioError (tagged with `source`) on violation.
void validate_aircraft(const AircraftType& ac, const Atmosphere& atm, const std::string& source);

}  // namespace depopt::airframe
