#pragma once

#include <string>
#include <vector>

#include "depopt/moead.hpp"
#include "depopt/noise.hpp"
#include "depopt/scenario.hpp"
#include "depopt/trajectory.hpp"

namespace depopt::framework {

enum class DesignMode { track_only, full_3d };

// Assumed movements per (aircraft type, period) used while designing routes.
struct DesignCounts {
  std::vector<std::array<int, 3>> per_type;

  int total() const {
    int n = 0;
    for (const auto& c : per_type) n += c[0] + c[1] + c[2];
    return n;
  }
  int type_total(std::size_t i) const {
    return per_type[i][0] + per_type[i][1] + per_type[i][2];
  }
};

struct RouteArchiveEntry {
  std::vector<double> decision;
  double n_pa = 0.0;    // people annoyed at the design assumption
  double t_fuel = 0.0;  // kg, all assumed movements
  double track_length = 0.0;  // m
  std::vector<double> fuel_kg;   // per type, single departure
  std::vector<double> time_s;    // per type, single departure
  std::vector<noise::SelGrid> sel;  // per type, single event
};

struct RouteArchive {
  std::string sid;
  DesignMode mode = DesignMode::track_only;
  std::vector<std::string> type_names;
  DesignCounts assumption;
  std::vector<RouteArchiveEntry> entries;  // mutually non-dominated, by rising n_pa
};

struct AllocationSolution {
  std::vector<int> route_index;   // per SID, into its archive
  noise::OperationCounts counts;  // [sid][type][period]
  double n_pa = 0.0;
  double t_fuel = 0.0;
};

struct AllocationResult {
  std::vector<AllocationSolution> solutions;  // Pareto set by rising n_pa
  moead::MoeadResult optimizer;
};

struct OneStepSolution {
  std::vector<std::vector<double>> route_decisions;  // per SID
  noise::OperationCounts counts;
  double n_pa = 0.0;
  double t_fuel = 0.0;
};

struct OneStepResult {
  std::vector<OneStepSolution> solutions;
  moead::MoeadResult optimizer;
};

struct SensitivityReport {
  std::vector<int> assumed_totals;
  std::vector<RouteArchive> archives;   // aligned with assumed_totals
  std::vector<double> containment;      // share covered by the largest-count front
  double epsilon_n_pa = 0.0;
  double epsilon_t_fuel = 0.0;
};

// ---------------------------------------------------------------------------
// Decision-vector encoding
// ---------------------------------------------------------------------------

inline constexpr int kTrackVariables = 5;
// Per aircraft type in 3-D mode: 9 throttle settings then 9 path angles.
inline constexpr int kProfileVariablesPerType = 2 * traj::VerticalProfileParams::kControlledSegments;

int route_dimension(DesignMode mode, int n_types);
// Total decision-vector width of the integrated one-step problem.
int one_step_dimension(int n_sids, int n_types, DesignMode mode);
traj::GroundTrackParams track_params_from_decision(const std::vector<double>& x);
traj::VerticalProfileParams profile_from_decision(const std::vector<double>& x, int type_pos);
std::vector<moead::VariableSpec> route_variable_bounds(const Scenario& scenario, int sid_index,
                                                       DesignMode mode, int n_types);
// Pushes turn radii out to the configured minimum magnitude.
void repair_route_decision(const Scenario& scenario, std::vector<double>& x);

// ---------------------------------------------------------------------------
// Route evaluation (shared by step 1, the one-step solver, and audits)
// ---------------------------------------------------------------------------

struct RouteEvaluation {
  bool feasible = false;
  double violation = 0.0;
  double n_pa = 0.0;
  double t_fuel = 0.0;
  double track_length = 0.0;
  std::vector<double> fuel_kg;  // per listed type
  std::vector<double> time_s;
  std::vector<noise::SelGrid> sel;
  std::vector<traj::Trajectory> trajectories;
};

// Evaluates one route decision for the listed fleet members. `counts` sizes
// the annoyance objective; pass an empty DesignCounts to skip it (the grids
// and fuel figures are still produced when keep_details is set).
RouteEvaluation evaluate_route(const Scenario& scenario, int sid_index,
                               const std::vector<int>& type_indices,
                               const std::vector<double>& decision, DesignMode mode,
                               const DesignCounts& counts, bool keep_details);

// ---------------------------------------------------------------------------
// Framework operations
// ---------------------------------------------------------------------------

// Largest number of movements this SID could receive, split across types and
// periods in proportion to the terminal's schedule totals.
DesignCounts choose_design_counts(const Scenario& scenario, int sid_index);

// Same split for an arbitrary assumed total (sensitivity analysis).
DesignCounts scale_design_counts(const Scenario& scenario, int sid_index,
                                 const std::vector<int>& type_indices, int total);

RouteArchive step1_design_routes(const Scenario& scenario, int sid_index,
                                 const DesignCounts& counts, DesignMode mode,
                                 const moead::MoeadConfig& cfg);

// Projects integer movement counts onto the schedule equalities: within each
// (type, period, terminal) group a bounded largest-remainder rescale meets
// the total exactly without exceeding any per-route upper bound. Feasible
// inputs are returned unchanged.
void repair_allocation(const Scenario& scenario, noise::OperationCounts& counts);

AllocationResult step2_allocate(const Scenario& scenario,
                                const std::vector<RouteArchive>& archives,
                                const moead::MoeadConfig& cfg);

OneStepResult one_step_solve(const Scenario& scenario, DesignMode mode,
                             const moead::MoeadConfig& cfg);

SensitivityReport sensitivity_flight_counts(const Scenario& scenario, int sid_index,
                                            const std::vector<int>& type_indices,
                                            const std::vector<int>& counts_list, DesignMode mode,
                                            const moead::MoeadConfig& cfg);

// Deterministic integer apportionment: `total` split proportionally to
// `weights` (largest remainder, ties by index), honouring optional caps.
std::vector<int> apportion(int total, const std::vector<double>& weights,
                           const std::vector<int>& caps);

}  // namespace depopt::framework
