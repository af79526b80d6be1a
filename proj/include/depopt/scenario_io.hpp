#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depopt/framework.hpp"
#include "depopt/noise.hpp"
#include "depopt/scenario.hpp"

namespace depopt::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArchiveHashMismatchError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

// Parses and fully validates a scenario document plus every file it
// references. Any defect throws ScenarioError (or InfeasibleScheduleError)
// naming the file, the field, and the violated rule.
Scenario load_scenario(const std::string& path);

struct GridLoadResult {
  noise::PopulationGrid grid;
  int missing_cells = 0;
};

// CSV of "x,y,population" rows forming a regular square lattice. Missing
// cells load as zero population (counted); duplicates, negative populations
// and off-lattice coordinates are errors.
GridLoadResult load_population_grid(const std::string& path, double expected_cell_size = 0.0);

// Covers every input that shapes the step-1 objectives (atmosphere, fleet,
// SIDs, population, bank limits, route bounds, integrator and noise
// settings); deliberately excludes the schedule, the optimizer settings and
// the seed, so stored route archives stay valid across reallocation runs.
std::uint64_t scenario_fingerprint(const Scenario& scenario);

void save_archive(const std::string& path, const framework::RouteArchive& archive,
                  std::uint64_t fingerprint);
framework::RouteArchive load_archive(const std::string& path, std::uint64_t expected_fingerprint,
                                     bool allow_mismatch = false);

// ---------------------------------------------------------------------------
// Exports (deterministic; written via a temp file + rename)
// ---------------------------------------------------------------------------

struct FrontRow {
  int solution_id = 0;
  double n_pa = 0.0;
  double t_fuel_kg = 0.0;
  double distance_km = 0.0;
  double flight_time_h = 0.0;
};

struct TrackFeature {
  std::string sid;
  int solution_id = 0;
  double n_pa = 0.0;
  double t_fuel_kg = 0.0;
  std::vector<Vec2> points;
};

struct ProfileRow {
  int solution_id = 0;
  std::string sid;
  std::string aircraft;
  traj::TrajectorySample sample;
};

struct AllocationTableRow {
  int solution_id = 0;
  std::string sid;
  int route_index = 0;
  std::string aircraft;
  std::array<int, 3> movements{0, 0, 0};
};

void write_front_csv(const std::string& path, const std::vector<FrontRow>& rows);
void write_tracks_geojson(const std::string& path, const std::vector<TrackFeature>& features);
void write_profiles_csv(const std::string& path, const std::vector<ProfileRow>& rows);
void write_contour_asc(const std::string& path, const noise::GridGeometry& geometry,
                       const std::vector<std::uint8_t>& mask);
void write_allocation_tables_csv(const std::string& path,
                                 const std::vector<AllocationTableRow>& rows);
void write_trace_csv(const std::string& path, const std::vector<moead::TracePoint>& trace);

// Allocation fronts travel between `allocate` and `export` as JSON.
void save_allocation_front(const std::string& path, const Scenario& scenario,
                           const std::vector<framework::AllocationSolution>& solutions,
                           std::uint64_t fingerprint);
std::vector<framework::AllocationSolution> load_allocation_front(
    const std::string& path, const Scenario& scenario, std::uint64_t expected_fingerprint,
    bool allow_mismatch = false);

// Text writer with the atomic temp-file/rename contract used by every export.
void write_text_file(const std::string& path, const std::string& contents);

std::string format_double(double v);

}  // namespace depopt::io
