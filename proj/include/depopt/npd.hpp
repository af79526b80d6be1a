#pragma once

#include <string>
#include <vector>

namespace depopt::noise {

// Ground-effect shaping for single-event levels, applied as
//   lambda(l, beta) = plateau * (1 - exp(-distance_rate * l))
//                             * max(0, 1 - beta / cutoff_elevation),
// with l the lateral (ground) distance in metres and beta the elevation
// angle of the aircraft seen from the receiver.
struct LateralAttenuation {
  double plateau_db = 10.86;
  double distance_rate = 0.0229;        // 1/m
  double cutoff_elevation_deg = 50.0;

  double operator()(double lateral_m, double elevation_rad) const;
};

// Noise-power-distance lookup: single-event SEL (dBA) on a thrust x slant
// distance grid, interpolated bilinearly in (log thrust, log distance).
// Queries outside the grid are clamped to the nearest edge; below-minimum
// distances additionally bump a warning counter.
class NpdTable {
 public:
  NpdTable() = default;
  NpdTable(std::vector<double> thrust_grid, std::vector<double> distance_grid,
           std::vector<std::vector<double>> sel_dba, LateralAttenuation lateral,
           double reference_speed);

  double sel_at(double thrust, double slant_distance) const;
  const LateralAttenuation& lateral() const { return lateral_; }
  double reference_speed() const { return reference_speed_; }

  // Smallest per-decade SEL decrement over distance anywhere in the table;
  // with the edge clamp this bounds how fast levels can fall with distance,
  // which the field evaluation uses to discard far segments exactly.
  double min_distance_slope_per_decade() const { return min_distance_slope_; }
  double max_distance() const { return distance_grid_.back(); }
  double max_thrust() const { return thrust_grid_.back(); }

  const std::vector<double>& thrust_grid() const { return thrust_grid_; }
  const std::vector<double>& distance_grid() const { return distance_grid_; }
  const std::vector<std::vector<double>>& values() const { return sel_dba_; }

  bool empty() const { return thrust_grid_.empty(); }

  // Grid monotonicity: SEL decreasing in distance, non-decreasing in thrust.
  void validate(const std::string& source) const;

 private:
  void finish_init();

  std::vector<double> thrust_grid_;    // N, ascending
  std::vector<double> distance_grid_;  // m, ascending
  std::vector<double> log_thrust_grid_;
  std::vector<double> log_distance_grid_;
  std::vector<std::vector<double>> sel_dba_;  // [thrust][distance]
  LateralAttenuation lateral_;
  double reference_speed_ = 82.3;  // m/s TAS used by the duration correction
  double min_distance_slope_ = 0.0;
};

}  // namespace depopt::noise
