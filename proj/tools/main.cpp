#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "depopt/framework.hpp"
#include "depopt/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace depopt;

namespace {

// Exit codes: 0 ok, 2 usage, 3 scenario invalid, 4 infeasible schedule,
// 5 optimization produced an empty archive, 6 I/O failure.
enum ExitCode {
  kOk = 0,
  kUsage = 2,
  kScenarioInvalid = 3,
  kInfeasibleSchedule = 4,
  kEmptyArchive = 5,
  kIoFailure = 6,
};

struct CommonOptions {
  std::string scenario_path;
  std::string out_dir;
  std::string mode = "2d";
  std::int64_t seed = -1;
  int generations = -1;
  int population = -1;
  unsigned workers = 0;  // 0 = available parallelism
};

framework::DesignMode parse_mode(const std::string& mode) {
  if (mode == "2d") return framework::DesignMode::track_only;
  if (mode == "3d") return framework::DesignMode::full_3d;
  throw CLI::ValidationError("--mode must be 2d or 3d");
}

Scenario load_with_overrides(const CommonOptions& opt) {
  Scenario sc = io::load_scenario(opt.scenario_path);
  if (opt.seed >= 0) {
    sc.seed = static_cast<std::uint64_t>(opt.seed);
    sc.optimizer.rng_seed = sc.seed;
  }
  if (opt.generations >= 0) sc.optimizer.max_iterations = opt.generations;
  if (opt.population >= 2) sc.optimizer.population_size = opt.population;
  sc.optimizer.workers =
      opt.workers > 0 ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
  return sc;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::IoError("cannot create output directory " + dir + ": " + ec.message());
}

moead::GenerationCallback progress_printer(const std::string& label, int max_iterations) {
  const int stride = std::max(1, max_iterations / 50);
  return [label, stride, max_iterations](const moead::TracePoint& tp) {
    if (tp.iteration % stride != 0 && tp.iteration != max_iterations) return;
    std::fprintf(stderr, "[%s] generation %d/%d hypervolume %.6g feasible %d\n", label.c_str(),
                 tp.iteration, max_iterations, tp.hypervolume, tp.feasible_count);
  };
}

std::uint64_t sid_seed(std::uint64_t base, int sid_index) {
  return base + 1000003ull * static_cast<std::uint64_t>(sid_index);
}

std::vector<io::FrontRow> archive_front_rows(const framework::RouteArchive& archive) {
  std::vector<io::FrontRow> rows;
  for (std::size_t e = 0; e < archive.entries.size(); ++e) {
    const auto& entry = archive.entries[e];
    io::FrontRow row;
    row.solution_id = static_cast<int>(e);
    row.n_pa = entry.n_pa;
    row.t_fuel_kg = entry.t_fuel;
    double movements = 0.0;
    double hours = 0.0;
    for (std::size_t i = 0; i < archive.assumption.per_type.size(); ++i) {
      const double a = archive.assumption.type_total(i);
      movements += a;
      hours += a * entry.time_s[i] / 3600.0;
    }
    row.distance_km = movements * entry.track_length / 1000.0;
    row.flight_time_h = hours;
    rows.push_back(row);
  }
  return rows;
}

std::vector<io::FrontRow> allocation_front_rows(
    const Scenario& sc, const std::vector<framework::AllocationSolution>& solutions,
    const std::vector<framework::RouteArchive>& archives) {
  std::vector<io::FrontRow> rows;
  for (std::size_t id = 0; id < solutions.size(); ++id) {
    const auto& sol = solutions[id];
    io::FrontRow row;
    row.solution_id = static_cast<int>(id);
    row.n_pa = sol.n_pa;
    row.t_fuel_kg = sol.t_fuel;
    for (int k = 0; k < sol.counts.num_routes; ++k) {
      const auto& entry = archives[static_cast<std::size_t>(k)]
                              .entries[static_cast<std::size_t>(sol.route_index[
                                  static_cast<std::size_t>(k)])];
      for (int i = 0; i < sol.counts.num_types; ++i) {
        int a = 0;
        for (int t = 0; t < 3; ++t) a += sol.counts.at(k, i, static_cast<noise::Period>(t));
        row.distance_km += a * entry.track_length / 1000.0;
        row.flight_time_h += a * entry.time_s[static_cast<std::size_t>(i)] / 3600.0;
      }
    }
    rows.push_back(row);
  }
  (void)sc;
  return rows;
}

std::vector<io::AllocationTableRow> allocation_table_rows(
    const Scenario& sc, const std::vector<framework::AllocationSolution>& solutions) {
  std::vector<io::AllocationTableRow> rows;
  for (std::size_t id = 0; id < solutions.size(); ++id) {
    const auto& sol = solutions[id];
    for (int k = 0; k < sol.counts.num_routes; ++k) {
      for (int i = 0; i < sol.counts.num_types; ++i) {
        io::AllocationTableRow row;
        row.solution_id = static_cast<int>(id);
        row.sid = sc.sids[static_cast<std::size_t>(k)].name;
        row.route_index = sol.route_index[static_cast<std::size_t>(k)];
        row.aircraft = sc.fleet[static_cast<std::size_t>(i)].name;
        for (int t = 0; t < 3; ++t)
          row.movements[static_cast<std::size_t>(t)] =
              sol.counts.at(k, i, static_cast<noise::Period>(t));
        rows.push_back(row);
      }
    }
  }
  return rows;
}

io::TrackFeature track_feature(const Scenario& sc, int sid_index, const std::vector<double>& x,
                               int solution_id, double n_pa, double t_fuel) {
  const auto& sid = sc.sids[static_cast<std::size_t>(sid_index)];
  const auto track = traj::synthesize_track(sid, framework::track_params_from_decision(x),
                                            sc.route_bounds.min_turn_radius);
  io::TrackFeature f;
  f.sid = sid.name;
  f.solution_id = solution_id;
  f.n_pa = n_pa;
  f.t_fuel_kg = t_fuel;
  for (const auto& v : track.polyline(200.0)) f.points.push_back(v.pos);
  return f;
}

std::vector<framework::RouteArchive> load_archives_for_scenario(const Scenario& sc,
                                                                const std::string& dir,
                                                                bool allow_stale) {
  const std::uint64_t fp = io::scenario_fingerprint(sc);
  std::vector<framework::RouteArchive> archives;
  for (const auto& sid : sc.sids) {
    const fs::path p = fs::path(dir) / (sid.name + ".dra");
    if (!fs::exists(p))
      throw io::IoError("missing route archive " + p.string() +
                        " (run design-routes first)");
    archives.push_back(io::load_archive(p.string(), fp, allow_stale));
  }
  return archives;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_validate(const CommonOptions& opt) {
  const Scenario sc = io::load_scenario(opt.scenario_path);
  std::printf("scenario %s: %zu aircraft, %zu SIDs, %zu terminal points, %d x %d grid\n",
              opt.scenario_path.c_str(), sc.fleet.size(), sc.sids.size(),
              sc.schedule.terminals.size(), sc.population.geometry.nx,
              sc.population.geometry.ny);
  std::printf("fingerprint %016llx\n",
              static_cast<unsigned long long>(io::scenario_fingerprint(sc)));
  return kOk;
}

int cmd_design_routes(const CommonOptions& opt, const std::vector<std::string>& only_sids) {
  Scenario sc = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  const std::uint64_t fp = io::scenario_fingerprint(sc);
  const auto mode = parse_mode(opt.mode);
  int produced = 0;
  for (std::size_t k = 0; k < sc.sids.size(); ++k) {
    const auto& name = sc.sids[k].name;
    if (!only_sids.empty() &&
        std::find(only_sids.begin(), only_sids.end(), name) == only_sids.end())
      continue;
    const auto counts = framework::choose_design_counts(sc, static_cast<int>(k));
    if (counts.total() == 0) {
      std::fprintf(stderr, "[%s] rejected: no movements can be allocated to this SID\n",
                   name.c_str());
      continue;
    }
    moead::MoeadConfig cfg = sc.optimizer;
    cfg.rng_seed = sid_seed(sc.seed, static_cast<int>(k));
    std::fprintf(stderr, "[%s] designing routes (%d assumed movements, %s)\n", name.c_str(),
                 counts.total(), opt.mode.c_str());
    moead::MoeadConfig traced = cfg;
    const auto progress = progress_printer(name, cfg.max_iterations);

    // step1 runs its own optimize; recreate the trace through the result.
    const auto archive = framework::step1_design_routes(sc, static_cast<int>(k), counts, mode,
                                                        traced);
    (void)progress;
    io::save_archive((fs::path(opt.out_dir) / (name + ".dra")).string(), archive, fp);
    io::write_front_csv((fs::path(opt.out_dir) / (name + "_front.csv")).string(),
                        archive_front_rows(archive));
    std::fprintf(stderr, "[%s] archive with %zu routes written\n", name.c_str(),
                 archive.entries.size());
    ++produced;
  }
  if (produced == 0) throw EmptyArchiveError("no route archives were produced");
  return kOk;
}

int cmd_allocate(const CommonOptions& opt, const std::string& archives_dir, bool allow_stale) {
  Scenario sc = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  const auto archives = load_archives_for_scenario(sc, archives_dir, allow_stale);
  moead::MoeadConfig cfg = sc.optimizer;
  const auto result = framework::step2_allocate(sc, archives, cfg);
  if (result.solutions.empty()) throw EmptyArchiveError("allocation produced no solutions");
  const std::uint64_t fp = io::scenario_fingerprint(sc);
  io::write_front_csv((fs::path(opt.out_dir) / "allocation_front.csv").string(),
                      allocation_front_rows(sc, result.solutions, archives));
  io::write_allocation_tables_csv((fs::path(opt.out_dir) / "allocation_tables.csv").string(),
                                  allocation_table_rows(sc, result.solutions));
  io::save_allocation_front((fs::path(opt.out_dir) / "allocation_front.json").string(), sc,
                            result.solutions, fp);
  io::write_trace_csv((fs::path(opt.out_dir) / "allocation_trace.csv").string(),
                      result.optimizer.trace);
  std::fprintf(stderr, "allocation front with %zu solutions (%llu evaluations)\n",
               result.solutions.size(),
               static_cast<unsigned long long>(result.optimizer.evaluations));
  return kOk;
}

int cmd_integrated(const CommonOptions& opt) {
  Scenario sc = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  const auto mode = parse_mode(opt.mode);
  const auto result = framework::one_step_solve(sc, mode, sc.optimizer);
  if (result.solutions.empty()) throw EmptyArchiveError("integrated run produced no solutions");

  std::vector<io::FrontRow> front;
  std::vector<io::AllocationTableRow> tables;
  std::vector<io::TrackFeature> tracks;
  for (std::size_t id = 0; id < result.solutions.size(); ++id) {
    const auto& sol = result.solutions[id];
    io::FrontRow row;
    row.solution_id = static_cast<int>(id);
    row.n_pa = sol.n_pa;
    row.t_fuel_kg = sol.t_fuel;
    for (std::size_t k = 0; k < sc.sids.size(); ++k) {
      const auto ev = framework::evaluate_route(
          sc, static_cast<int>(k), [&] {
            std::vector<int> idx(sc.fleet.size());
            std::iota(idx.begin(), idx.end(), 0);
            return idx;
          }(),
          sol.route_decisions[k], mode, {}, false);
      for (std::size_t i = 0; i < sc.fleet.size(); ++i) {
        int a = 0;
        for (int t = 0; t < 3; ++t)
          a += sol.counts.at(static_cast<int>(k), static_cast<int>(i),
                             static_cast<noise::Period>(t));
        row.distance_km += a * ev.track_length / 1000.0;
        row.flight_time_h += a * ev.time_s[i] / 3600.0;
        io::AllocationTableRow trow;
        trow.solution_id = static_cast<int>(id);
        trow.sid = sc.sids[k].name;
        trow.route_index = 0;
        trow.aircraft = sc.fleet[i].name;
        for (int t = 0; t < 3; ++t)
          trow.movements[static_cast<std::size_t>(t)] =
              sol.counts.at(static_cast<int>(k), static_cast<int>(i),
                            static_cast<noise::Period>(t));
        tables.push_back(trow);
      }
      tracks.push_back(track_feature(sc, static_cast<int>(k), sol.route_decisions[k],
                                     static_cast<int>(id), sol.n_pa, sol.t_fuel));
    }
    front.push_back(row);
  }
  io::write_front_csv((fs::path(opt.out_dir) / "integrated_front.csv").string(), front);
  io::write_allocation_tables_csv((fs::path(opt.out_dir) / "integrated_tables.csv").string(),
                                  tables);
  io::write_tracks_geojson((fs::path(opt.out_dir) / "integrated_tracks.geojson").string(),
                           tracks);
  io::write_trace_csv((fs::path(opt.out_dir) / "integrated_trace.csv").string(),
                      result.optimizer.trace);
  return kOk;
}

int cmd_sensitivity(const CommonOptions& opt, const std::string& sid_name,
                    std::vector<int> counts_list, const std::vector<std::string>& aircraft) {
  Scenario sc = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  const int sid_index = sc.sid_index(sid_name);
  if (sid_index < 0)
    throw ScenarioError(opt.scenario_path, "sids", "unknown SID " + sid_name);
  std::vector<int> type_indices;
  for (const auto& name : aircraft) {
    const int idx = sc.type_index(name);
    if (idx < 0) throw ScenarioError(opt.scenario_path, "aircraft", "unknown aircraft " + name);
    type_indices.push_back(idx);
  }
  if (counts_list.empty()) counts_list = {50, 100, 150};
  const auto report = framework::sensitivity_flight_counts(
      sc, sid_index, type_indices, counts_list, parse_mode(opt.mode), sc.optimizer);

  std::string csv = "assumed_total,front_size,containment_vs_largest\n";
  for (std::size_t c = 0; c < report.archives.size(); ++c) {
    csv += std::to_string(report.assumed_totals[c]) + "," +
           std::to_string(report.archives[c].entries.size()) + "," +
           io::format_double(report.containment[c]) + "\n";
    io::write_front_csv((fs::path(opt.out_dir) /
                         ("sensitivity_front_" + std::to_string(report.assumed_totals[c]) +
                          ".csv"))
                            .string(),
                        archive_front_rows(report.archives[c]));
  }
  io::write_text_file((fs::path(opt.out_dir) / "sensitivity_containment.csv").string(), csv);
  for (std::size_t c = 0; c < report.archives.size(); ++c)
    std::fprintf(stderr, "assumed %d movements: %zu routes, containment %.3f\n",
                 report.assumed_totals[c], report.archives[c].entries.size(),
                 report.containment[c]);
  return kOk;
}

int cmd_export(const CommonOptions& opt, const std::string& archive_path,
               const std::string& allocation_path, const std::string& archives_dir, int entry,
               int solution, double threshold, bool allow_stale) {
  Scenario sc = io::load_scenario(opt.scenario_path);
  ensure_out_dir(opt.out_dir);
  const std::uint64_t fp = io::scenario_fingerprint(sc);
  std::vector<int> all_types(sc.fleet.size());
  std::iota(all_types.begin(), all_types.end(), 0);

  if (!archive_path.empty()) {
    const auto archive = io::load_archive(archive_path, fp, allow_stale);
    const int sid_index = sc.sid_index(archive.sid);
    if (sid_index < 0)
      throw ScenarioError(archive_path, "sid", "archive SID not present in scenario");
    io::write_front_csv((fs::path(opt.out_dir) / (archive.sid + "_front.csv")).string(),
                        archive_front_rows(archive));

    std::vector<io::TrackFeature> tracks;
    std::vector<io::ProfileRow> profiles;
    for (std::size_t e = 0; e < archive.entries.size(); ++e) {
      if (entry >= 0 && static_cast<std::size_t>(entry) != e) continue;
      const auto& ae = archive.entries[e];
      tracks.push_back(track_feature(sc, sid_index, ae.decision, static_cast<int>(e), ae.n_pa,
                                     ae.t_fuel));
      const auto ev = framework::evaluate_route(sc, sid_index, all_types, ae.decision,
                                                archive.mode, {}, true);
      for (std::size_t i = 0; i < sc.fleet.size(); ++i)
        for (const auto& s : ev.trajectories[i].samples)
          profiles.push_back({static_cast<int>(e), archive.sid, sc.fleet[i].name, s});
    }
    io::write_tracks_geojson((fs::path(opt.out_dir) / (archive.sid + "_tracks.geojson")).string(),
                             tracks);
    io::write_profiles_csv((fs::path(opt.out_dir) / (archive.sid + "_profiles.csv")).string(),
                           profiles);

    const std::size_t ce = entry >= 0 ? static_cast<std::size_t>(entry) : 0;
    if (ce >= archive.entries.size())
      throw ScenarioError(archive_path, "entry", "entry index out of range");
    const auto& sel_entry = archive.entries[ce];
    auto counts = noise::OperationCounts::zeros(1, static_cast<int>(sc.fleet.size()));
    for (std::size_t i = 0; i < archive.assumption.per_type.size(); ++i)
      counts.counts[i] = archive.assumption.per_type[i];
    std::vector<noise::EnergyTerm> terms;
    for (std::size_t i = 0; i < sel_entry.sel.size(); ++i)
      terms.push_back({&sel_entry.sel[i], noise::weighted_movement_factor(counts.counts[i])});
    const auto energy = noise::accumulate_energy(sc.population.geometry, terms);
    const auto lden = noise::lden_from_energy(energy);
    io::write_contour_asc((fs::path(opt.out_dir) / (archive.sid + "_contour.asc")).string(),
                          sc.population.geometry, noise::contour_cells(lden, threshold));
  }

  if (!allocation_path.empty()) {
    if (archives_dir.empty())
      throw io::IoError("--allocation export needs --archives for route geometry");
    const auto archives = load_archives_for_scenario(sc, archives_dir, allow_stale);
    const auto solutions = io::load_allocation_front(allocation_path, sc, fp, allow_stale);
    io::write_front_csv((fs::path(opt.out_dir) / "allocation_front.csv").string(),
                        allocation_front_rows(sc, solutions, archives));

    std::vector<io::TrackFeature> tracks;
    std::vector<io::ProfileRow> profiles;
    for (std::size_t id = 0; id < solutions.size(); ++id) {
      if (solution >= 0 && static_cast<std::size_t>(solution) != id) continue;
      const auto& sol = solutions[id];
      for (std::size_t k = 0; k < sc.sids.size(); ++k) {
        const auto& ae = archives[k].entries[static_cast<std::size_t>(sol.route_index[k])];
        tracks.push_back(track_feature(sc, static_cast<int>(k), ae.decision,
                                       static_cast<int>(id), sol.n_pa, sol.t_fuel));
      }
    }
    io::write_tracks_geojson((fs::path(opt.out_dir) / "allocation_tracks.geojson").string(),
                             tracks);

    const std::size_t cs = solution >= 0 ? static_cast<std::size_t>(solution) : 0;
    if (cs >= solutions.size())
      throw ScenarioError(allocation_path, "solution", "solution index out of range");
    const auto& sol = solutions[cs];
    std::vector<noise::EnergyTerm> terms;
    for (std::size_t k = 0; k < sc.sids.size(); ++k) {
      const auto& ae = archives[k].entries[static_cast<std::size_t>(sol.route_index[k])];
      for (std::size_t i = 0; i < sc.fleet.size(); ++i)
        terms.push_back({&ae.sel[i],
                         noise::weighted_movement_factor(
                             sol.counts.counts[k * sc.fleet.size() + i])});
      const auto ev = framework::evaluate_route(sc, static_cast<int>(k), all_types, ae.decision,
                                                archives[k].mode, {}, true);
      for (std::size_t i = 0; i < sc.fleet.size(); ++i)
        for (const auto& s : ev.trajectories[i].samples)
          profiles.push_back({static_cast<int>(cs), sc.sids[k].name, sc.fleet[i].name, s});
    }
    const auto energy = noise::accumulate_energy(sc.population.geometry, terms);
    const auto lden = noise::lden_from_energy(energy);
    io::write_contour_asc((fs::path(opt.out_dir) / "allocation_contour.asc").string(),
                          sc.population.geometry, noise::contour_cells(lden, threshold));
    io::write_profiles_csv((fs::path(opt.out_dir) / "allocation_profiles.csv").string(),
                           profiles);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"departure route design and flight-to-route allocation"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::vector<std::string> only_sids;
  std::vector<std::string> aircraft_filter;
  std::vector<int> counts_list;
  std::string archives_dir;
  std::string archive_path;
  std::string allocation_path;
  std::string sid_name;
  bool allow_stale = false;
  int entry = -1;
  int solution = -1;
  double threshold = 37.0;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--scenario", opt.scenario_path, "scenario file (JSON)")->required();
    if (needs_out)
      cmd->add_option("--out", opt.out_dir, "output directory")->required();
    cmd->add_option("--seed", opt.seed, "override the scenario RNG seed (default: from file)");
    cmd->add_option("--workers", opt.workers,
                    "evaluation worker threads (default: available parallelism)");
    cmd->add_option("--generations", opt.generations,
                    "override optimizer max iterations (default: from file)");
    cmd->add_option("--population", opt.population,
                    "override optimizer population size (default: from file)");
  };

  auto* validate = app.add_subcommand("validate", "load and check a scenario");
  validate->add_option("--scenario", opt.scenario_path, "scenario file (JSON)")->required();

  auto* design = app.add_subcommand("design-routes", "step 1: per-SID route design");
  add_common(design, true);
  design->add_option("--mode", opt.mode, "2d (tracks only) or 3d (tracks + profiles)");
  design->add_option("--sid", only_sids, "design only the named SIDs (repeatable)");

  auto* allocate = app.add_subcommand("allocate", "step 2: route selection + flight allocation");
  add_common(allocate, true);
  allocate->add_option("--archives", archives_dir, "directory with <SID>.dra archives")
      ->required();
  allocate->add_flag("--allow-stale", allow_stale, "accept archives with mismatched fingerprints");

  auto* integrated = app.add_subcommand("integrated", "one-step combined design + allocation");
  add_common(integrated, true);
  integrated->add_option("--mode", opt.mode, "2d or 3d");

  auto* sensitivity =
      app.add_subcommand("sensitivity", "flight-count assumption sweep for one SID");
  add_common(sensitivity, true);
  sensitivity->add_option("--sid", sid_name, "SID to analyse")->required();
  sensitivity->add_option("--counts", counts_list, "assumed movement totals (default 50 100 150)");
  sensitivity->add_option("--aircraft", aircraft_filter,
                          "restrict to the named aircraft types (repeatable)");
  sensitivity->add_option("--mode", opt.mode, "2d or 3d");

  auto* exporter = app.add_subcommand("export", "fronts, tracks, profiles and contour masks");
  exporter->add_option("--scenario", opt.scenario_path, "scenario file (JSON)")->required();
  exporter->add_option("--out", opt.out_dir, "output directory")->required();
  exporter->add_option("--archive", archive_path, "route archive (.dra) to export");
  exporter->add_option("--allocation", allocation_path, "allocation front JSON to export");
  exporter->add_option("--archives", archives_dir, "archive directory (with --allocation)");
  exporter->add_option("--entry", entry, "restrict archive export to one entry");
  exporter->add_option("--solution", solution, "restrict allocation export to one solution");
  exporter->add_option("--threshold", threshold, "contour threshold, dBA (default 37)");
  exporter->add_flag("--allow-stale", allow_stale, "accept mismatched fingerprints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(opt);
    if (app.got_subcommand(design)) return cmd_design_routes(opt, only_sids);
    if (app.got_subcommand(allocate)) return cmd_allocate(opt, archives_dir, allow_stale);
    if (app.got_subcommand(integrated)) return cmd_integrated(opt);
    if (app.got_subcommand(sensitivity))
      return cmd_sensitivity(opt, sid_name, counts_list, aircraft_filter);
    if (app.got_subcommand(exporter))
      return cmd_export(opt, archive_path, allocation_path, archives_dir, entry, solution,
                        threshold, allow_stale);
  } catch (const InfeasibleScheduleError& e) {
    std::fprintf(stderr, "infeasible schedule: %s\n", e.what());
    return kInfeasibleSchedule;
  } catch (const EmptyArchiveError& e) {
    std::fprintf(stderr, "empty archive: %s\n", e.what());
    return kEmptyArchive;
  } catch (const io::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIoFailure;
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kScenarioInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kScenarioInvalid;
  }
  return kUsage;
}
