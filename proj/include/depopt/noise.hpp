#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "depopt/airframe.hpp"
#include "depopt/common.hpp"
#include "depopt/npd.hpp"
#include "depopt/trajectory.hpp"

namespace depopt::noise {

enum class Period : int { day = 0, evening = 1, night = 2 };

// Day/evening/night weights of the cumulative metric, dB.
inline constexpr std::array<double, 3> kPeriodWeightsDb{0.0, 5.0, 10.0};

struct GridGeometry {
  Vec2 origin;            // centre of cell (0, 0)
  double cell_size = 0.0; // m
  int nx = 0;
  int ny = 0;

  bool operator==(const GridGeometry& o) const {
    return origin.x == o.origin.x && origin.y == o.origin.y && cell_size == o.cell_size &&
           nx == o.nx && ny == o.ny;
  }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  Vec2 cell_center(int ix, int iy) const {
    return {origin.x + cell_size * ix, origin.y + cell_size * iy};
  }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(ix);
  }
};

struct PopulationGrid {
  GridGeometry geometry;
  std::vector<double> population;  // row-major, people per cell

  double total() const;
};

// Single-event SEL footprint of one (route, aircraft type) pair. Stored in
// 32-bit floats; that is the precision contract for archived grids as well.
struct SelGrid {
  GridGeometry geometry;
  std::vector<float> sel_dba;
};

// Movement counts per (route, type, period).
struct OperationCounts {
  int num_routes = 0;
  int num_types = 0;
  std::vector<std::array<int, 3>> counts;  // [k * num_types + i][t]

  static OperationCounts zeros(int routes, int types) {
    OperationCounts c;
    c.num_routes = routes;
    c.num_types = types;
    c.counts.assign(static_cast<std::size_t>(routes) * static_cast<std::size_t>(types), {0, 0, 0});
    return c;
  }
  int at(int k, int i, Period t) const {
    return counts[static_cast<std::size_t>(k) * num_types + i][static_cast<int>(t)];
  }
  int& at(int k, int i, Period t) {
    return counts[static_cast<std::size_t>(k) * num_types + i][static_cast<int>(t)];
  }
  std::int64_t total() const;
};

// Per-movement weighted energy multiplier: sum_t a_t * 10^(w_t/10).
double weighted_movement_factor(const std::array<int, 3>& movements);

// Single-event SEL field over the grid: for every cell the highest exposure
// over the flight path, using the closest point of each sample-to-sample
// segment, NPD interpolation at the local thrust, lateral attenuation from
// the ground distance and elevation angle, and the speed/duration correction
// -10 log10(V_TAS / V_ref) clamped to +-5 dB.
SelGrid sel_field(const traj::Trajectory& trajectory, const airframe::AircraftType& ac,
                  const GridGeometry& geometry);

// Cumulative day-evening-night level of one cell from per-(route, type)
// event levels and movement counts; -inf when no movements touch the cell.
double lden_cell(const std::vector<double>& sel_by_route_type, const OperationCounts& counts,
                 double period_seconds = kDayLengthS);

// Dose-response: share of people annoyed at a given exposure, percent.
double percent_annoyed(double lden_dba);

// Sum over cells of population times annoyance share.
double people_annoyed(const PopulationGrid& pop, const std::vector<const SelGrid*>& sel_grids,
                      const OperationCounts& counts, double period_seconds = kDayLengthS);

// Linear-energy fast path used by the allocation step: energy[cell] =
// sum over (route, type) of factor * 10^(SEL/10).
struct EnergyTerm {
  const SelGrid* grid;
  double factor;
};
std::vector<double> accumulate_energy(const GridGeometry& geometry,
                                      const std::vector<EnergyTerm>& terms);
std::vector<double> lden_from_energy(const std::vector<double>& energy,
                                     double period_seconds = kDayLengthS);
double people_annoyed_from_energy(const PopulationGrid& pop, const std::vector<double>& energy,
                                  double period_seconds = kDayLengthS);

// Raster mask of cells at or above the threshold.
std::vector<std::uint8_t> contour_cells(const std::vector<double>& lden, double threshold_dba);

}  // namespace depopt::noise
