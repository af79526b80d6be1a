#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "depopt/airframe.hpp"
#include "depopt/moead.hpp"
#include "depopt/noise.hpp"
#include "depopt/trajectory.hpp"

namespace depopt {

// Demand side of the allocation problem: totals that must be flown to each
// terminal point per (aircraft type, period), plus per-route movement caps.
struct FlightSchedule {
  std::vector<std::string> terminals;  // unique terminal point ids
  // totals[terminal][type][period]
  std::vector<std::vector<std::array<int, 3>>> totals;
  std::vector<int> capacity;  // movements per SID, aligned with Scenario::sids
  // upper_bounds[sid][type][period]
  std::vector<std::vector<std::array<int, 3>>> upper_bounds;

  int terminal_index(const std::string& id) const {
    for (std::size_t i = 0; i < terminals.size(); ++i)
      if (terminals[i] == id) return static_cast<int>(i);
    return -1;
  }
};

// Box limits of the ground-track decision variables.
struct RouteBounds {
  double leg1_max = 20000.0;            // m
  double leg2_max = 20000.0;            // m
  double heading_half_range = 1.4;      // rad around the bearing to the fix
  double min_turn_radius = 1500.0;      // m
  double max_turn_radius = 20000.0;     // m
};

struct Scenario {
  std::string source_path;
  std::string description;
  std::uint64_t seed = 1;
  airframe::Atmosphere atmosphere;
  std::vector<airframe::AircraftType> fleet;
  std::vector<traj::SidDefinition> sids;
  FlightSchedule schedule;
  noise::PopulationGrid population;
  traj::BankLimitProfile bank_limits;
  traj::IntegratorConfig integrator;
  RouteBounds route_bounds;
  double noise_sample_spacing_m = 300.0;  // flight-path decimation for SEL fields
  moead::MoeadConfig optimizer;

  int type_index(const std::string& name) const {
    for (std::size_t i = 0; i < fleet.size(); ++i)
      if (fleet[i].name == name) return static_cast<int>(i);
    return -1;
  }
  int sid_index(const std::string& name) const {
    for (std::size_t i = 0; i < sids.size(); ++i)
      if (sids[i].name == name) return static_cast<int>(i);
    return -1;
  }
  int terminal_of_sid(int sid) const {
    return schedule.terminal_index(sids[static_cast<std::size_t>(sid)].terminal_point_id);
  }
};

}  // namespace depopt
