#include "depopt/framework.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace depopt::framework {

namespace {

constexpr double kInfeasibleObjective = 1e9;
constexpr double kGeometryViolationScale = 1e-3;  // metres -> dimensionless
constexpr double kBankViolationWeight = 10.0;     // radians -> dimensionless

traj::Trajectory decimate_for_noise(const traj::Trajectory& t, double spacing_m) {
  if (spacing_m <= 0.0 || t.samples.size() < 3) return t;
  traj::Trajectory out;
  out.fuel_burned = t.fuel_burned;
  out.flight_time = t.flight_time;
  out.samples.push_back(t.samples.front());
  for (std::size_t i = 1; i + 1 < t.samples.size(); ++i) {
    if (t.samples[i].s - out.samples.back().s >= spacing_m - 1e-9)
      out.samples.push_back(t.samples[i]);
  }
  out.samples.push_back(t.samples.back());
  return out;
}

double bearing_to_fix(const traj::SidDefinition& sid) {
  const Vec2 d = sid.terminal_fix - sid.runway_start;
  return std::atan2(d.y, d.x);
}

}  // namespace

int route_dimension(DesignMode mode, int n_types) {
  return kTrackVariables +
         (mode == DesignMode::full_3d ? kProfileVariablesPerType * n_types : 0);
}

int one_step_dimension(int n_sids, int n_types, DesignMode mode) {
  return n_sids * route_dimension(mode, n_types) + n_sids * n_types * 3;
}

traj::GroundTrackParams track_params_from_decision(const std::vector<double>& x) {
  traj::GroundTrackParams p;
  p.leg1_length = x[0];
  p.radius1 = x[1];
  p.mid_heading = x[2];
  p.leg2_length = x[3];
  p.radius2 = x[4];
  return p;
}

traj::VerticalProfileParams profile_from_decision(const std::vector<double>& x, int type_pos) {
  traj::VerticalProfileParams vp;
  const std::size_t base = static_cast<std::size_t>(kTrackVariables) +
                           static_cast<std::size_t>(type_pos) * kProfileVariablesPerType;
  constexpr std::size_t n = traj::VerticalProfileParams::kControlledSegments;
  for (std::size_t j = 0; j < n; ++j) {
    vp.throttle[j] = x[base + j];
    vp.flight_path_angle[j] = x[base + n + j];
  }
  return vp;
}

std::vector<moead::VariableSpec> route_variable_bounds(const Scenario& scenario, int sid_index,
                                                       DesignMode mode, int n_types) {
  const auto& sid = scenario.sids[static_cast<std::size_t>(sid_index)];
  const auto& rb = scenario.route_bounds;
  const double bearing = bearing_to_fix(sid);
  std::vector<moead::VariableSpec> vars;
  vars.push_back({0.0, rb.leg1_max, false});
  vars.push_back({-rb.max_turn_radius, rb.max_turn_radius, false});
  vars.push_back({bearing - rb.heading_half_range, bearing + rb.heading_half_range, false});
  vars.push_back({0.0, rb.leg2_max, false});
  vars.push_back({-rb.max_turn_radius, rb.max_turn_radius, false});
  if (mode == DesignMode::full_3d) {
    for (int i = 0; i < n_types; ++i) {
      for (int j = 0; j < traj::VerticalProfileParams::kControlledSegments; ++j)
        vars.push_back({0.0, 1.0, false});
      for (int j = 0; j < traj::VerticalProfileParams::kControlledSegments; ++j)
        vars.push_back({0.0, scenario.integrator.max_gamma, false});
    }
  }
  return vars;
}

void repair_route_decision(const Scenario& scenario, std::vector<double>& x) {
  const double rmin = scenario.route_bounds.min_turn_radius;
  for (std::size_t idx : {std::size_t{1}, std::size_t{4}}) {
    if (std::abs(x[idx]) < rmin) x[idx] = x[idx] < 0.0 ? -rmin : rmin;
  }
}

RouteEvaluation evaluate_route(const Scenario& scenario, int sid_index,
                               const std::vector<int>& type_indices,
                               const std::vector<double>& decision, DesignMode mode,
                               const DesignCounts& counts, bool keep_details) {
  const auto& sid = scenario.sids[static_cast<std::size_t>(sid_index)];
  RouteEvaluation out;

  const traj::GroundTrackParams params = track_params_from_decision(decision);
  const traj::GroundTrack track =
      traj::synthesize_track(sid, params, scenario.route_bounds.min_turn_radius);
  if (!track.feasible()) {
    out.violation = track.violation() * kGeometryViolationScale;
    return out;
  }
  out.track_length = track.length();

  const std::size_t nt = type_indices.size();
  std::vector<traj::Trajectory> trajectories(nt);
  double violation = 0.0;
  for (std::size_t ti = 0; ti < nt; ++ti) {
    const auto& ac = scenario.fleet[static_cast<std::size_t>(type_indices[ti])];
    traj::VerticalProfileParams vp;
    const traj::VerticalProfileParams* profile = nullptr;
    if (mode == DesignMode::full_3d) {
      vp = profile_from_decision(decision, static_cast<int>(ti));
      profile = &vp;
    }
    auto res = traj::integrate_departure(ac, scenario.atmosphere, sid, track, profile,
                                         scenario.integrator);
    violation += res.ok() ? 0.0 : res.violation;
    violation += kBankViolationWeight * traj::check_bank_limit(res.trajectory, scenario.bank_limits);
    trajectories[ti] = std::move(res.trajectory);
  }
  out.violation = violation;
  out.feasible = violation <= 0.0;

  if (out.feasible) {
    out.fuel_kg.resize(nt);
    out.time_s.resize(nt);
    out.sel.resize(nt);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const auto& ac = scenario.fleet[static_cast<std::size_t>(type_indices[ti])];
      const traj::Trajectory path =
          decimate_for_noise(trajectories[ti], scenario.noise_sample_spacing_m);
      out.sel[ti] = noise::sel_field(path, ac, scenario.population.geometry);
      out.fuel_kg[ti] = trajectories[ti].fuel_burned;
      out.time_s[ti] = trajectories[ti].flight_time;
    }
    if (!counts.per_type.empty()) {
      if (counts.per_type.size() != nt)
        throw std::invalid_argument("design counts do not match the evaluated types");
      auto oc = noise::OperationCounts::zeros(1, static_cast<int>(nt));
      for (std::size_t ti = 0; ti < nt; ++ti)
        oc.counts[ti] = counts.per_type[ti];
      std::vector<const noise::SelGrid*> grids;
      for (const auto& g : out.sel) grids.push_back(&g);
      out.n_pa = noise::people_annoyed(scenario.population, grids, oc);
      double fuel = 0.0;
      for (std::size_t ti = 0; ti < nt; ++ti)
        fuel += counts.type_total(ti) * out.fuel_kg[ti];
      out.t_fuel = fuel;
    }
  }
  if (keep_details)
    out.trajectories = std::move(trajectories);
  return out;
}

std::vector<int> apportion(int total, const std::vector<double>& weights,
                           const std::vector<int>& caps) {
  const std::size_t n = weights.size();
  std::vector<int> q(n, 0);
  if (total <= 0 || n == 0) return q;
  auto cap = [&](std::size_t j) {
    return caps.empty() ? std::numeric_limits<int>::max() : caps[j];
  };
  std::vector<double> w(n);
  double sum_w = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = std::max(0.0, weights[j]);
    sum_w += w[j];
  }
  if (sum_w <= 0.0) {
    for (std::size_t j = 0; j < n; ++j) w[j] = cap(j) > 0 ? 1.0 : 0.0;
    sum_w = std::accumulate(w.begin(), w.end(), 0.0);
    if (sum_w <= 0.0) return q;
  }
  std::vector<double> exact(n);
  int assigned = 0;
  for (std::size_t j = 0; j < n; ++j) {
    exact[j] = total * w[j] / sum_w;
    q[j] = std::min(static_cast<int>(std::floor(exact[j])), cap(j));
    assigned += q[j];
  }
  int remaining = total - assigned;
  while (remaining > 0) {
    int best = -1;
    double best_key = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (q[j] >= cap(j)) continue;
      const double key = exact[j] - q[j];
      if (key > best_key) {
        best_key = key;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;  // every slot capped; caller validated totals
    ++q[static_cast<std::size_t>(best)];
    --remaining;
  }
  return q;
}

DesignCounts choose_design_counts(const Scenario& scenario, int sid_index) {
  const int term = scenario.terminal_of_sid(sid_index);
  const std::size_t n_types = scenario.fleet.size();
  DesignCounts out;
  out.per_type.assign(n_types, {0, 0, 0});
  if (term < 0) return out;
  const auto& totals = scenario.schedule.totals[static_cast<std::size_t>(term)];
  int grand = 0;
  std::vector<double> weights;
  std::vector<int> caps;
  for (std::size_t i = 0; i < n_types; ++i) {
    for (int t = 0; t < 3; ++t) {
      const int v = totals[i][static_cast<std::size_t>(t)];
      grand += v;
      weights.push_back(v);
      caps.push_back(v);
    }
  }
  const int assumed =
      std::min(scenario.schedule.capacity[static_cast<std::size_t>(sid_index)], grand);
  const auto q = apportion(assumed, weights, caps);
  for (std::size_t i = 0; i < n_types; ++i)
    for (int t = 0; t < 3; ++t)
      out.per_type[i][static_cast<std::size_t>(t)] = q[i * 3 + static_cast<std::size_t>(t)];
  return out;
}

DesignCounts scale_design_counts(const Scenario& scenario, int sid_index,
                                 const std::vector<int>& type_indices, int total) {
  const int term = scenario.terminal_of_sid(sid_index);
  DesignCounts out;
  out.per_type.assign(type_indices.size(), {0, 0, 0});
  if (term < 0) return out;
  const auto& totals = scenario.schedule.totals[static_cast<std::size_t>(term)];
  std::vector<double> weights;
  for (int idx : type_indices)
    for (int t = 0; t < 3; ++t)
      weights.push_back(totals[static_cast<std::size_t>(idx)][static_cast<std::size_t>(t)]);
  const auto q = apportion(total, weights, {});
  for (std::size_t i = 0; i < type_indices.size(); ++i)
    for (int t = 0; t < 3; ++t)
      out.per_type[i][static_cast<std::size_t>(t)] = q[i * 3 + static_cast<std::size_t>(t)];
  return out;
}

namespace {

// Objective scales taken from a nominal mid-box route so both objectives are
// O(1) for the scalarization; falls back to scenario-derived magnitudes when
// the nominal route is infeasible.
struct ObjectiveScales {
  double n_pa = 1.0;
  double t_fuel = 1.0;
};

ObjectiveScales probe_scales(const Scenario& scenario, int sid_index,
                             const std::vector<int>& type_indices, DesignMode mode,
                             const DesignCounts& counts) {
  const auto& sid = scenario.sids[static_cast<std::size_t>(sid_index)];
  const double dist = (sid.terminal_fix - sid.runway_start).norm();
  std::vector<double> x(static_cast<std::size_t>(
                            route_dimension(mode, static_cast<int>(type_indices.size()))),
                        0.0);
  x[0] = 0.1 * dist;
  x[1] = scenario.route_bounds.min_turn_radius;
  x[2] = bearing_to_fix(sid);
  x[3] = 0.1 * dist;
  x[4] = scenario.route_bounds.min_turn_radius;
  if (mode == DesignMode::full_3d) {
    for (std::size_t ti = 0; ti < type_indices.size(); ++ti) {
      const std::size_t base = static_cast<std::size_t>(kTrackVariables) +
                               ti * static_cast<std::size_t>(kProfileVariablesPerType);
      for (int j = 0; j < traj::VerticalProfileParams::kControlledSegments; ++j) {
        x[base + static_cast<std::size_t>(j)] = 0.5;
        x[base + traj::VerticalProfileParams::kControlledSegments +
          static_cast<std::size_t>(j)] =
            std::min(scenario.integrator.nadp2_climb_gamma, scenario.integrator.max_gamma);
      }
    }
  }
  ObjectiveScales s;
  const auto ev = evaluate_route(scenario, sid_index, type_indices, x, mode, counts, false);
  if (ev.feasible) {
    s.n_pa = std::max(ev.n_pa, 1.0);
    s.t_fuel = std::max(ev.t_fuel, 1.0);
  } else {
    s.n_pa = std::max(1.0, 0.01 * scenario.population.total());
    s.t_fuel = std::max(1.0, 500.0 * counts.total());
  }
  return s;
}

// One representative per weight vector, ranked by Tchebycheff distance on
// range-normalized objectives.
std::vector<std::size_t> prune_to_weights(const std::vector<moead::ArchiveEntry>& entries,
                                          int count) {
  std::vector<std::size_t> selected;
  if (entries.size() <= static_cast<std::size_t>(count)) {
    selected.resize(entries.size());
    std::iota(selected.begin(), selected.end(), std::size_t{0});
    return selected;
  }
  double lo1 = entries.front().f1, hi1 = entries.front().f1;
  double lo2 = entries.front().f2, hi2 = entries.front().f2;
  for (const auto& e : entries) {
    lo1 = std::min(lo1, e.f1);
    hi1 = std::max(hi1, e.f1);
    lo2 = std::min(lo2, e.f2);
    hi2 = std::max(hi2, e.f2);
  }
  const double r1 = std::max(hi1 - lo1, 1e-12);
  const double r2 = std::max(hi2 - lo2, 1e-12);
  std::vector<bool> chosen(entries.size(), false);
  for (const auto& w : moead::generate_weights(count)) {
    std::size_t best = 0;
    double best_g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double g = moead::tchebycheff(
          {(entries[i].f1 - lo1) / r1, (entries[i].f2 - lo2) / r2}, w, {0.0, 0.0});
      if (g < best_g) {
        best_g = g;
        best = i;
      }
    }
    chosen[best] = true;
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (chosen[i]) selected.push_back(i);
  return selected;
}

}  // namespace

RouteArchive step1_design_routes(const Scenario& scenario, int sid_index,
                                 const DesignCounts& counts, DesignMode mode,
                                 const moead::MoeadConfig& cfg) {
  std::vector<int> type_indices(scenario.fleet.size());
  std::iota(type_indices.begin(), type_indices.end(), 0);
  if (counts.per_type.size() != type_indices.size())
    throw std::invalid_argument("design counts must cover the whole fleet");
  if (counts.total() <= 0)
    throw std::invalid_argument("step 1 needs a positive flight-count assumption");

  const auto scales = probe_scales(scenario, sid_index, type_indices, mode, counts);

  moead::ProblemSpec problem;
  problem.variables =
      route_variable_bounds(scenario, sid_index, mode, static_cast<int>(type_indices.size()));
  problem.repair = [&scenario](std::vector<double>& x) { repair_route_decision(scenario, x); };
  problem.evaluate = [&, sid_index, mode](const std::vector<double>& x) -> moead::Objectives {
    const auto ev = evaluate_route(scenario, sid_index, type_indices, x, mode, counts, false);
    if (!ev.feasible) return {kInfeasibleObjective, kInfeasibleObjective, ev.violation};
    return {ev.n_pa / scales.n_pa, ev.t_fuel / scales.t_fuel, 0.0};
  };

  const auto result = moead::optimize(problem, cfg);
  if (result.archive.empty())
    throw EmptyArchiveError("no feasible route found for SID " +
                            scenario.sids[static_cast<std::size_t>(sid_index)].name);

  RouteArchive archive;
  archive.sid = scenario.sids[static_cast<std::size_t>(sid_index)].name;
  archive.mode = mode;
  for (int idx : type_indices) archive.type_names.push_back(scenario.fleet[static_cast<std::size_t>(idx)].name);
  archive.assumption = counts;

  const auto& entries = result.archive.entries();
  for (std::size_t i : prune_to_weights(entries, cfg.population_size)) {
    auto full = evaluate_route(scenario, sid_index, type_indices, entries[i].decision, mode,
                               counts, false);
    RouteArchiveEntry e;
    e.decision = entries[i].decision;
    e.n_pa = full.n_pa;
    e.t_fuel = full.t_fuel;
    e.track_length = full.track_length;
    e.fuel_kg = std::move(full.fuel_kg);
    e.time_s = std::move(full.time_s);
    e.sel = std::move(full.sel);
    archive.entries.push_back(std::move(e));
  }
  std::sort(archive.entries.begin(), archive.entries.end(),
            [](const RouteArchiveEntry& a, const RouteArchiveEntry& b) {
              if (a.n_pa != b.n_pa) return a.n_pa < b.n_pa;
              return a.t_fuel < b.t_fuel;
            });
  return archive;
}

void repair_allocation(const Scenario& scenario, noise::OperationCounts& counts) {
  const int n_sids = static_cast<int>(scenario.sids.size());
  const int n_types = static_cast<int>(scenario.fleet.size());
  if (counts.num_routes != n_sids || counts.num_types != n_types)
    throw std::invalid_argument("operation counts do not match the scenario layout");
  for (std::size_t s = 0; s < scenario.schedule.terminals.size(); ++s) {
    std::vector<int> group;
    for (int k = 0; k < n_sids; ++k)
      if (scenario.terminal_of_sid(k) == static_cast<int>(s)) group.push_back(k);
    for (int i = 0; i < n_types; ++i) {
      for (int t = 0; t < 3; ++t) {
        const auto period = static_cast<noise::Period>(t);
        const int target = scenario.schedule.totals[s][static_cast<std::size_t>(i)]
                                                   [static_cast<std::size_t>(t)];
        int sum = 0;
        bool in_bounds = true;
        std::vector<double> raw;
        std::vector<int> caps;
        for (int k : group) {
          const int v = counts.at(k, i, period);
          const int ub = scenario.schedule.upper_bounds[static_cast<std::size_t>(k)]
                                                       [static_cast<std::size_t>(i)]
                                                       [static_cast<std::size_t>(t)];
          raw.push_back(v);
          caps.push_back(ub);
          sum += v;
          if (v < 0 || v > ub) in_bounds = false;
        }
        if (sum == target && in_bounds) continue;
        std::vector<double> weights = sum > 0 ? raw : std::vector<double>(caps.begin(), caps.end());
        const auto q = apportion(target, weights, caps);
        for (std::size_t j = 0; j < group.size(); ++j)
          counts.at(group[j], i, period) = q[j];
      }
    }
  }
}

namespace {

struct AllocationLayout {
  int n_sids = 0;
  int n_types = 0;
  int route_vars = 0;  // leading variables holding one route index per SID

  std::size_t count_var(int k, int i, int t) const {
    return static_cast<std::size_t>(route_vars) +
           (static_cast<std::size_t>(k) * n_types + static_cast<std::size_t>(i)) * 3 +
           static_cast<std::size_t>(t);
  }
  noise::OperationCounts decode_counts(const std::vector<double>& x) const {
    auto counts = noise::OperationCounts::zeros(n_sids, n_types);
    for (int k = 0; k < n_sids; ++k)
      for (int i = 0; i < n_types; ++i)
        for (int t = 0; t < 3; ++t)
          counts.at(k, i, static_cast<noise::Period>(t)) =
              static_cast<int>(std::lround(x[count_var(k, i, t)]));
    return counts;
  }
  void encode_counts(const noise::OperationCounts& counts, std::vector<double>& x) const {
    for (int k = 0; k < n_sids; ++k)
      for (int i = 0; i < n_types; ++i)
        for (int t = 0; t < 3; ++t)
          x[count_var(k, i, t)] = counts.at(k, i, static_cast<noise::Period>(t));
  }
};

double capacity_violation(const Scenario& scenario, const noise::OperationCounts& counts) {
  double violation = 0.0;
  for (int k = 0; k < counts.num_routes; ++k) {
    int used = 0;
    for (int i = 0; i < counts.num_types; ++i)
      for (int t = 0; t < 3; ++t) used += counts.at(k, i, static_cast<noise::Period>(t));
    const int cap = scenario.schedule.capacity[static_cast<std::size_t>(k)];
    violation += std::max(0, used - cap) / static_cast<double>(std::max(1, cap));
  }
  return violation;
}

void append_count_bounds(const Scenario& scenario, std::vector<moead::VariableSpec>& vars) {
  for (std::size_t k = 0; k < scenario.sids.size(); ++k)
    for (std::size_t i = 0; i < scenario.fleet.size(); ++i)
      for (int t = 0; t < 3; ++t)
        vars.push_back({0.0,
                        static_cast<double>(
                            scenario.schedule.upper_bounds[k][i][static_cast<std::size_t>(t)]),
                        true});
}

void check_schedule_feasible(const Scenario& scenario) {
  for (std::size_t s = 0; s < scenario.schedule.terminals.size(); ++s) {
    int demand = 0;
    for (const auto& per_type : scenario.schedule.totals[s])
      demand += per_type[0] + per_type[1] + per_type[2];
    int supply = 0;
    for (std::size_t k = 0; k < scenario.sids.size(); ++k)
      if (scenario.terminal_of_sid(static_cast<int>(k)) == static_cast<int>(s))
        supply += scenario.schedule.capacity[k];
    if (demand > supply)
      throw InfeasibleScheduleError(
          scenario.source_path, "schedule",
          "terminal " + scenario.schedule.terminals[s] + " demands " + std::to_string(demand) +
              " movements but its routes only admit " + std::to_string(supply));
  }
}

}  // namespace

AllocationResult step2_allocate(const Scenario& scenario,
                                const std::vector<RouteArchive>& archives,
                                const moead::MoeadConfig& cfg) {
  const int n_sids = static_cast<int>(scenario.sids.size());
  const int n_types = static_cast<int>(scenario.fleet.size());
  if (archives.size() != scenario.sids.size())
    throw std::invalid_argument("one route archive per SID required");
  for (int k = 0; k < n_sids; ++k) {
    const auto& a = archives[static_cast<std::size_t>(k)];
    if (a.entries.empty())
      throw EmptyArchiveError("archive for SID " + scenario.sids[static_cast<std::size_t>(k)].name +
                              " is empty");
    for (const auto& e : a.entries)
      for (const auto& grid : e.sel)
        if (!(grid.geometry == scenario.population.geometry))
          throw ScenarioError(scenario.source_path, "archives",
                              "SEL grid geometry differs from the population grid");
  }
  check_schedule_feasible(scenario);

  AllocationLayout layout{n_sids, n_types, n_sids};

  // Per (SID, entry, type): linear single-event energy per cell.
  const std::size_t cells = scenario.population.geometry.size();
  std::vector<std::vector<std::vector<std::vector<double>>>> energy(
      static_cast<std::size_t>(n_sids));
  for (int k = 0; k < n_sids; ++k) {
    const auto& a = archives[static_cast<std::size_t>(k)];
    energy[static_cast<std::size_t>(k)].resize(a.entries.size());
    for (std::size_t e = 0; e < a.entries.size(); ++e) {
      auto& per_type = energy[static_cast<std::size_t>(k)][e];
      per_type.resize(static_cast<std::size_t>(n_types));
      for (int i = 0; i < n_types; ++i) {
        auto& vec = per_type[static_cast<std::size_t>(i)];
        vec.resize(cells);
        const auto& sel = a.entries[e].sel[static_cast<std::size_t>(i)].sel_dba;
        for (std::size_t c = 0; c < cells; ++c)
          vec[c] = std::pow(10.0, static_cast<double>(sel[c]) / 10.0);
      }
    }
  }

  auto evaluate_raw = [&](const std::vector<double>& x, noise::OperationCounts& counts,
                          std::vector<int>& routes) -> moead::Objectives {
    counts = layout.decode_counts(x);
    routes.resize(static_cast<std::size_t>(n_sids));
    for (int k = 0; k < n_sids; ++k) {
      const int nk = static_cast<int>(archives[static_cast<std::size_t>(k)].entries.size());
      routes[static_cast<std::size_t>(k)] =
          std::clamp(static_cast<int>(std::lround(x[static_cast<std::size_t>(k)])), 0, nk - 1);
    }
    const double violation = capacity_violation(scenario, counts);
    if (violation > 0.0) return {kInfeasibleObjective, kInfeasibleObjective, violation};

    std::vector<double> cell_energy(cells, 0.0);
    double fuel = 0.0;
    for (int k = 0; k < n_sids; ++k) {
      const auto& entry =
          archives[static_cast<std::size_t>(k)].entries[static_cast<std::size_t>(
              routes[static_cast<std::size_t>(k)])];
      for (int i = 0; i < n_types; ++i) {
        const auto& movements = counts.counts[static_cast<std::size_t>(k) * n_types +
                                              static_cast<std::size_t>(i)];
        const double factor = noise::weighted_movement_factor(movements);
        if (factor > 0.0) {
          const auto& ev = energy[static_cast<std::size_t>(k)][static_cast<std::size_t>(
              routes[static_cast<std::size_t>(k)])][static_cast<std::size_t>(i)];
          for (std::size_t c = 0; c < cells; ++c) cell_energy[c] += factor * ev[c];
        }
        fuel += (movements[0] + movements[1] + movements[2]) *
                entry.fuel_kg[static_cast<std::size_t>(i)];
      }
    }
    const double n_pa = noise::people_annoyed_from_energy(scenario.population, cell_energy);
    return {n_pa, fuel, 0.0};
  };

  // Scales from the all-first-route apportioned allocation.
  ObjectiveScales scales;
  {
    std::vector<double> x0(layout.count_var(n_sids - 1, n_types - 1, 2) + 1, 0.0);
    auto counts0 = noise::OperationCounts::zeros(n_sids, n_types);
    repair_allocation(scenario, counts0);
    layout.encode_counts(counts0, x0);
    noise::OperationCounts tmp_counts;
    std::vector<int> tmp_routes;
    const auto obj = evaluate_raw(x0, tmp_counts, tmp_routes);
    if (obj.feasible()) {
      scales.n_pa = std::max(obj.f1, 1.0);
      scales.t_fuel = std::max(obj.f2, 1.0);
    }
  }

  moead::ProblemSpec problem;
  for (int k = 0; k < n_sids; ++k)
    problem.variables.push_back(
        {0.0, static_cast<double>(archives[static_cast<std::size_t>(k)].entries.size() - 1),
         true});
  append_count_bounds(scenario, problem.variables);
  problem.repair = [&scenario, layout](std::vector<double>& x) {
    auto counts = layout.decode_counts(x);
    repair_allocation(scenario, counts);
    layout.encode_counts(counts, x);
  };
  problem.evaluate = [&](const std::vector<double>& x) -> moead::Objectives {
    noise::OperationCounts counts;
    std::vector<int> routes;
    const auto obj = evaluate_raw(x, counts, routes);
    if (!obj.feasible()) return obj;
    return {obj.f1 / scales.n_pa, obj.f2 / scales.t_fuel, 0.0};
  };

  AllocationResult result;
  result.optimizer = moead::optimize(problem, cfg);
  for (const auto& e : result.optimizer.archive.entries()) {
    AllocationSolution sol;
    noise::OperationCounts counts;
    std::vector<int> routes;
    const auto obj = evaluate_raw(e.decision, counts, routes);
    sol.route_index = std::move(routes);
    sol.counts = std::move(counts);
    sol.n_pa = obj.f1;
    sol.t_fuel = obj.f2;
    result.solutions.push_back(std::move(sol));
  }
  return result;
}

OneStepResult one_step_solve(const Scenario& scenario, DesignMode mode,
                             const moead::MoeadConfig& cfg) {
  const int n_sids = static_cast<int>(scenario.sids.size());
  const int n_types = static_cast<int>(scenario.fleet.size());
  check_schedule_feasible(scenario);

  std::vector<int> type_indices(static_cast<std::size_t>(n_types));
  std::iota(type_indices.begin(), type_indices.end(), 0);
  const int rd = route_dimension(mode, n_types);

  AllocationLayout layout{n_sids, n_types, n_sids * rd};

  moead::ProblemSpec problem;
  for (int k = 0; k < n_sids; ++k) {
    const auto vars = route_variable_bounds(scenario, k, mode, n_types);
    problem.variables.insert(problem.variables.end(), vars.begin(), vars.end());
  }
  append_count_bounds(scenario, problem.variables);
  problem.repair = [&scenario, layout, rd, n_sids](std::vector<double>& x) {
    for (int k = 0; k < n_sids; ++k) {
      std::vector<double> slice(x.begin() + static_cast<std::ptrdiff_t>(k) * rd,
                                x.begin() + static_cast<std::ptrdiff_t>(k + 1) * rd);
      repair_route_decision(scenario, slice);
      std::copy(slice.begin(), slice.end(), x.begin() + static_cast<std::ptrdiff_t>(k) * rd);
    }
    auto counts = layout.decode_counts(x);
    repair_allocation(scenario, counts);
    layout.encode_counts(counts, x);
  };

  auto evaluate_raw = [&](const std::vector<double>& x, noise::OperationCounts& counts,
                          std::vector<std::vector<double>>& decisions) -> moead::Objectives {
    counts = layout.decode_counts(x);
    decisions.clear();
    double violation = capacity_violation(scenario, counts);
    std::vector<RouteEvaluation> evals(static_cast<std::size_t>(n_sids));
    for (int k = 0; k < n_sids; ++k) {
      std::vector<double> slice(x.begin() + static_cast<std::ptrdiff_t>(k) * rd,
                                x.begin() + static_cast<std::ptrdiff_t>(k + 1) * rd);
      evals[static_cast<std::size_t>(k)] =
          evaluate_route(scenario, k, type_indices, slice, mode, {}, false);
      violation += evals[static_cast<std::size_t>(k)].feasible
                       ? 0.0
                       : evals[static_cast<std::size_t>(k)].violation;
      decisions.push_back(std::move(slice));
    }
    if (violation > 0.0) return {kInfeasibleObjective, kInfeasibleObjective, violation};

    const std::size_t cells = scenario.population.geometry.size();
    std::vector<noise::EnergyTerm> terms;
    double fuel = 0.0;
    for (int k = 0; k < n_sids; ++k) {
      for (int i = 0; i < n_types; ++i) {
        const auto& movements =
            counts.counts[static_cast<std::size_t>(k) * n_types + static_cast<std::size_t>(i)];
        terms.push_back({&evals[static_cast<std::size_t>(k)].sel[static_cast<std::size_t>(i)],
                         noise::weighted_movement_factor(movements)});
        fuel += (movements[0] + movements[1] + movements[2]) *
                evals[static_cast<std::size_t>(k)].fuel_kg[static_cast<std::size_t>(i)];
      }
    }
    const auto energy = noise::accumulate_energy(scenario.population.geometry, terms);
    (void)cells;
    const double n_pa = noise::people_annoyed_from_energy(scenario.population, energy);
    return {n_pa, fuel, 0.0};
  };

  // Scales: nominal routes with the apportioned allocation.
  ObjectiveScales scales;
  {
    std::vector<double> x0(static_cast<std::size_t>(n_sids) * rd +
                               static_cast<std::size_t>(n_sids) * n_types * 3,
                           0.0);
    for (int k = 0; k < n_sids; ++k) {
      const auto& sid = scenario.sids[static_cast<std::size_t>(k)];
      const double dist = (sid.terminal_fix - sid.runway_start).norm();
      const std::size_t base = static_cast<std::size_t>(k) * rd;
      x0[base + 0] = 0.1 * dist;
      x0[base + 1] = scenario.route_bounds.min_turn_radius;
      x0[base + 2] = bearing_to_fix(sid);
      x0[base + 3] = 0.1 * dist;
      x0[base + 4] = scenario.route_bounds.min_turn_radius;
      if (mode == DesignMode::full_3d) {
        for (int i = 0; i < n_types; ++i) {
          const std::size_t pbase = base + static_cast<std::size_t>(kTrackVariables) +
                                    static_cast<std::size_t>(i) * kProfileVariablesPerType;
          for (int j = 0; j < traj::VerticalProfileParams::kControlledSegments; ++j) {
            x0[pbase + static_cast<std::size_t>(j)] = 0.5;
            x0[pbase + traj::VerticalProfileParams::kControlledSegments +
               static_cast<std::size_t>(j)] =
                std::min(scenario.integrator.nadp2_climb_gamma, scenario.integrator.max_gamma);
          }
        }
      }
    }
    auto counts0 = noise::OperationCounts::zeros(n_sids, n_types);
    repair_allocation(scenario, counts0);
    layout.encode_counts(counts0, x0);
    noise::OperationCounts tmp_counts;
    std::vector<std::vector<double>> tmp_dec;
    const auto obj = evaluate_raw(x0, tmp_counts, tmp_dec);
    if (obj.feasible()) {
      scales.n_pa = std::max(obj.f1, 1.0);
      scales.t_fuel = std::max(obj.f2, 1.0);
    } else {
      scales.n_pa = std::max(1.0, 0.01 * scenario.population.total());
      scales.t_fuel = std::max(1.0, 500.0 * counts0.total());
    }
  }

  problem.evaluate = [&](const std::vector<double>& x) -> moead::Objectives {
    noise::OperationCounts counts;
    std::vector<std::vector<double>> decisions;
    const auto obj = evaluate_raw(x, counts, decisions);
    if (!obj.feasible()) return obj;
    return {obj.f1 / scales.n_pa, obj.f2 / scales.t_fuel, 0.0};
  };

  OneStepResult result;
  result.optimizer = moead::optimize(problem, cfg);
  for (const auto& e : result.optimizer.archive.entries()) {
    OneStepSolution sol;
    noise::OperationCounts counts;
    std::vector<std::vector<double>> decisions;
    const auto obj = evaluate_raw(e.decision, counts, decisions);
    sol.route_decisions = std::move(decisions);
    sol.counts = std::move(counts);
    sol.n_pa = obj.f1;
    sol.t_fuel = obj.f2;
    result.solutions.push_back(std::move(sol));
  }
  return result;
}

SensitivityReport sensitivity_flight_counts(const Scenario& scenario, int sid_index,
                                            const std::vector<int>& type_indices,
                                            const std::vector<int>& counts_list, DesignMode mode,
                                            const moead::MoeadConfig& cfg) {
  if (counts_list.empty()) throw std::invalid_argument("counts list must not be empty");

  // step1 evaluates the full fleet; restrict the scenario when a subset of
  // types is requested.
  Scenario restricted = scenario;
  if (!type_indices.empty() && type_indices.size() != scenario.fleet.size()) {
    restricted.fleet.clear();
    for (int idx : type_indices)
      restricted.fleet.push_back(scenario.fleet[static_cast<std::size_t>(idx)]);
    for (auto& per_terminal : restricted.schedule.totals) {
      std::vector<std::array<int, 3>> keep;
      for (int idx : type_indices) keep.push_back(per_terminal[static_cast<std::size_t>(idx)]);
      per_terminal = std::move(keep);
    }
    for (auto& per_sid : restricted.schedule.upper_bounds) {
      std::vector<std::array<int, 3>> keep;
      for (int idx : type_indices) keep.push_back(per_sid[static_cast<std::size_t>(idx)]);
      per_sid = std::move(keep);
    }
  }
  std::vector<int> all_types(restricted.fleet.size());
  std::iota(all_types.begin(), all_types.end(), 0);

  SensitivityReport report;
  report.assumed_totals = counts_list;
  for (int total : counts_list) {
    const auto counts = scale_design_counts(restricted, sid_index, all_types, total);
    report.archives.push_back(step1_design_routes(restricted, sid_index, counts, mode, cfg));
  }

  const std::size_t ref_idx = static_cast<std::size_t>(
      std::max_element(counts_list.begin(), counts_list.end()) - counts_list.begin());
  const auto& ref = report.archives[ref_idx];
  double lo1 = ref.entries.front().n_pa, hi1 = lo1;
  double lo2 = ref.entries.front().t_fuel, hi2 = lo2;
  for (const auto& e : ref.entries) {
    lo1 = std::min(lo1, e.n_pa);
    hi1 = std::max(hi1, e.n_pa);
    lo2 = std::min(lo2, e.t_fuel);
    hi2 = std::max(hi2, e.t_fuel);
  }
  report.epsilon_n_pa = 0.005 * (hi1 - lo1);
  report.epsilon_t_fuel = 0.005 * (hi2 - lo2);

  for (std::size_t c = 0; c < report.archives.size(); ++c) {
    const auto& archive = report.archives[c];
    std::size_t covered = 0;
    for (const auto& entry : archive.entries) {
      // Compare in the reference space: re-evaluate the design under the
      // largest assumed count.
      double n_pa = entry.n_pa, t_fuel = entry.t_fuel;
      if (c != ref_idx) {
        const auto ev = evaluate_route(restricted, sid_index, all_types, entry.decision,
                                       archive.mode, ref.assumption, false);
        n_pa = ev.n_pa;
        t_fuel = ev.t_fuel;
      }
      for (const auto& r : ref.entries) {
        if (r.n_pa <= n_pa + report.epsilon_n_pa && r.t_fuel <= t_fuel + report.epsilon_t_fuel) {
          ++covered;
          break;
        }
      }
    }
    report.containment.push_back(static_cast<double>(covered) /
                                 static_cast<double>(archive.entries.size()));
  }
  return report;
}

}  // namespace depopt::framework
