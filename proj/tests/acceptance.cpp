#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "depopt/framework.hpp"
#include "depopt/scenario_io.hpp"
#include "test_support.hpp"

using namespace depopt;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

void report(int id, const std::string& name, bool ok) {
  std::printf("%s criterion %2d: %s\n", ok ? "[PASS]" : "[FAIL]", id, name.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(ok, "criterion ", id, ": ", name);
}

moead::MoeadConfig cfg_for(const Scenario& sc, int gens, std::uint64_t seed) {
  auto cfg = sc.optimizer;
  cfg.max_iterations = gens;
  cfg.rng_seed = seed;
  cfg.workers = 2;
  return cfg;
}

std::vector<std::pair<double, double>> front_of(
    const std::vector<framework::AllocationSolution>& sols) {
  std::vector<std::pair<double, double>> f;
  for (const auto& s : sols) f.emplace_back(s.n_pa, s.t_fuel);
  return f;
}

std::pair<double, double> union_reference(
    std::initializer_list<const std::vector<std::pair<double, double>>*> fronts) {
  std::pair<double, double> ref{0.0, 0.0};
  for (const auto* f : fronts) {
    for (const auto& p : *f) {
      ref.first = std::max(ref.first, p.first);
      ref.second = std::max(ref.second, p.second);
    }
  }
  ref.first = ref.first * 1.05 + 1.0;
  ref.second = ref.second * 1.05 + 1.0;
  return ref;
}

// Best annoyance achievable within a fuel budget.
double best_n_pa_within(const std::vector<std::pair<double, double>>& front, double fuel) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : front)
    if (p.second <= fuel) best = std::min(best, p.first);
  return best;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DEPOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

bool dirs_identical(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename());
  for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) return false;
  for (const auto& n : names_a)
    if (slurp(a / n) != slurp(b / n)) return false;
  return true;
}

fs::path work_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "depopt_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("criterion 1: dose-response exactness") {
  const bool ok = noise::percent_annoyed(37.0) == 0.0 &&
                  std::abs(noise::percent_annoyed(47.0) - 13.9956) <= 1e-4 &&
                  std::abs(noise::percent_annoyed(57.0) - 31.5967) <= 1e-4;
  report(1, "dose-response exactness at 37/47/57 dBA", ok);
}

TEST_CASE("criterion 2: cumulative-level algebra") {
  auto one_day = noise::OperationCounts::zeros(1, 1);
  one_day.at(0, 0, noise::Period::day) = 1;
  const double single = noise::lden_cell({80.0}, one_day);
  bool ok = std::abs(single - (80.0 - 49.365137424788934)) <= 1e-3;

  auto doubled = one_day;
  doubled.at(0, 0, noise::Period::day) = 2;
  ok = ok && std::abs((noise::lden_cell({80.0}, doubled) - single) - 3.010299956639812) <= 1e-9;

  auto night = noise::OperationCounts::zeros(1, 1);
  night.at(0, 0, noise::Period::night) = 1;
  auto ten_day = noise::OperationCounts::zeros(1, 1);
  ten_day.at(0, 0, noise::Period::day) = 10;
  ok = ok && std::abs(noise::weighted_movement_factor({0, 0, 1}) -
                      noise::weighted_movement_factor({10, 0, 0})) <= 1e-9;
  ok = ok && std::abs(noise::lden_cell({80.0}, night) - noise::lden_cell({80.0}, ten_day)) <=
                 1e-12;
  report(2, "single-event level, count doubling, night weighting", ok);
}

TEST_CASE("criterion 3: integrator consistency and convergence order") {
  const auto demo = load_demo();
  const auto& sid = demo.sids[0];
  const auto track = straight_track(sid, 8000.0);
  REQUIRE(track.feasible());

  auto integrate_with = [&](double dt) {
    auto cfg = demo.integrator;
    cfg.time_step = dt;
    return traj::integrate_departure(demo.fleet[0], demo.atmosphere, sid, track, nullptr, cfg);
  };

  const auto base = integrate_with(0.5);
  REQUIRE(base.ok());
  const double w0 = base.trajectory.samples.front().weight;
  const double w_end = base.trajectory.samples.back().weight;
  bool ok = rel_diff(base.trajectory.fuel_burned, (w0 - w_end) / kGravity) < 1e-3;

  const auto half = integrate_with(0.25);
  ok = ok && rel_diff(base.trajectory.fuel_burned, half.trajectory.fuel_burned) < 1e-4 &&
       rel_diff(base.trajectory.flight_time, half.trajectory.flight_time) < 1e-4 &&
       rel_diff(base.trajectory.samples.back().h, half.trajectory.samples.back().h) < 1e-4 &&
       rel_diff(base.trajectory.samples.back().v_eas, half.trajectory.samples.back().v_eas) <
           1e-4;

  // Observed order from the fuel and end-time errors against a fine
  // reference, least-squares slope in log2 space.
  const auto ref = integrate_with(0.025);
  std::vector<double> dts{1.6, 0.8, 0.4, 0.2};
  std::vector<double> errs;
  for (double dt : dts) {
    const auto r = integrate_with(dt);
    const double e = std::abs(r.trajectory.fuel_burned - ref.trajectory.fuel_burned) /
                         ref.trajectory.fuel_burned +
                     std::abs(r.trajectory.flight_time - ref.trajectory.flight_time) /
                         ref.trajectory.flight_time;
    errs.push_back(e);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(dts.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log2(dts[static_cast<std::size_t>(i)]);
    const double y = std::log2(errs[static_cast<std::size_t>(i)] + 1e-300);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  std::printf("  integrator: fuel %.6f kg, observed order %.2f\n",
              base.trajectory.fuel_burned, order);
  ok = ok && order >= 3.5;
  report(3, "fuel/weight consistency, step refinement, order >= 3.5", ok);
}

TEST_CASE("criterion 4: bank-angle constraint") {
  const double v_tas = 250.0 * 0.514444;  // kt -> m/s at sea level
  const double mu = traj::bank_angle(v_tas, 1500.0);
  bool ok = std::abs(mu - 0.8439159025718691) <= 1e-9;

  traj::Trajectory t;
  traj::TrajectorySample s;
  s.h = 50.0;
  s.bank = mu;
  t.samples.push_back(s);
  const traj::BankLimitProfile limits{{0.0, 15.0 * M_PI / 180.0}};
  const double violation = traj::check_bank_limit(t, limits);
  ok = ok && violation == doctest::Approx(mu - 15.0 * M_PI / 180.0).epsilon(1e-12);
  const traj::BankLimitProfile loose{{0.0, 0.9}};
  ok = ok && traj::check_bank_limit(t, loose) == 0.0;
  report(4, "coordinated-turn bank angle and limit flagging", ok);
}

TEST_CASE("criterion 5: solver quality on the two-parabola benchmark") {
  moead::ProblemSpec p;
  p.variables = {{-5.0, 10.0, false}};
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    return {x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0), 0.0};
  };
  // True front sampled densely.
  std::vector<std::pair<double, double>> truth;
  for (int i = 0; i <= 400000; ++i) {
    const double x = 2.0 * i / 400000;
    truth.emplace_back(x * x, (x - 2.0) * (x - 2.0));
  }
  const double hv_truth = moead::hypervolume_2d(truth, {25.0, 25.0});

  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    moead::MoeadConfig cfg;
    cfg.population_size = 50;
    cfg.max_iterations = 200;
    cfg.rng_seed = seed;
    const auto result = moead::optimize(p, cfg);
    const double hv = moead::hypervolume_2d(result.archive.objective_points(), {25.0, 25.0});
    std::printf("  seed %llu: hypervolume ratio %.5f\n",
                static_cast<unsigned long long>(seed), hv / hv_truth);
    ok = ok && hv >= 0.99 * hv_truth;
  }
  report(5, "archive hypervolume >= 99% of the true front over 5 seeds", ok);
}

TEST_CASE("criterion 6: allocation equals exhaustive enumeration") {
  const auto micro = load_micro();
  std::vector<framework::RouteArchive> archives;
  for (int k = 0; k < 2; ++k) {
    auto a = framework::step1_design_routes(micro, k, framework::choose_design_counts(micro, k),
                                            framework::DesignMode::track_only,
                                            cfg_for(micro, 60, 1000 + static_cast<unsigned>(k)));
    REQUIRE(a.entries.size() >= 3);
    // Keep three spread routes per SID.
    framework::RouteArchive trimmed = a;
    trimmed.entries = {a.entries.front(), a.entries[a.entries.size() / 2], a.entries.back()};
    archives.push_back(std::move(trimmed));
  }

  // Exhaustive oracle over route pairs and the five splits of four flights.
  std::vector<std::pair<double, double>> all;
  for (int r1 = 0; r1 < 3; ++r1) {
    for (int r2 = 0; r2 < 3; ++r2) {
      for (int a1 = 0; a1 <= 4; ++a1) {
        const int a2 = 4 - a1;
        auto counts = noise::OperationCounts::zeros(2, 1);
        counts.at(0, 0, noise::Period::day) = a1;
        counts.at(1, 0, noise::Period::day) = a2;
        const double n_pa = noise::people_annoyed(
            micro.population,
            {&archives[0].entries[static_cast<std::size_t>(r1)].sel[0],
             &archives[1].entries[static_cast<std::size_t>(r2)].sel[0]},
            counts);
        const double fuel = a1 * archives[0].entries[static_cast<std::size_t>(r1)].fuel_kg[0] +
                            a2 * archives[1].entries[static_cast<std::size_t>(r2)].fuel_kg[0];
        all.emplace_back(n_pa, fuel);
      }
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<std::pair<double, double>> oracle;
  for (const auto& p : all) {
    while (!oracle.empty() && oracle.back().second >= p.second &&
           !(oracle.back().first == p.first && oracle.back().second == p.second))
      if (oracle.back().first == p.first)
        oracle.pop_back();
      else
        break;
    const bool dominated = !oracle.empty() && oracle.back().second <= p.second;
    const bool duplicate = !oracle.empty() && oracle.back().first == p.first &&
                           oracle.back().second == p.second;
    if (!dominated && !duplicate) oracle.push_back(p);
  }

  const auto result = framework::step2_allocate(micro, archives, cfg_for(micro, 100, 77));
  const auto found = front_of(result.solutions);
  bool ok = found.size() == oracle.size();
  if (ok) {
    for (std::size_t i = 0; i < oracle.size(); ++i)
      ok = ok && rel_diff(found[i].first + 1.0, oracle[i].first + 1.0) < 1e-9 &&
           rel_diff(found[i].second, oracle[i].second) < 1e-9;
  }
  std::printf("  enumeration front %zu points, solver front %zu points\n", oracle.size(),
              found.size());
  report(6, "step-2 Pareto set equals brute-force enumeration", ok);
}

TEST_CASE("criterion 7: archived solutions reproduce from raw trajectories") {
  const auto micro = load_micro();
  std::vector<framework::RouteArchive> archives;
  for (int k = 0; k < 2; ++k)
    archives.push_back(framework::step1_design_routes(
        micro, k, framework::choose_design_counts(micro, k), framework::DesignMode::track_only,
        cfg_for(micro, 60, 2000 + static_cast<unsigned>(k))));
  const auto result = framework::step2_allocate(micro, archives, cfg_for(micro, 40, 31));
  REQUIRE(!result.solutions.empty());

  bool ok = true;
  double worst = 0.0;
  for (const auto& sol : result.solutions) {
    std::vector<noise::SelGrid> fresh_grids;
    double fuel = 0.0;
    for (int k = 0; k < 2; ++k) {
      const auto& entry = archives[static_cast<std::size_t>(k)]
                              .entries[static_cast<std::size_t>(
                                  sol.route_index[static_cast<std::size_t>(k)])];
      const auto ev = framework::evaluate_route(micro, k, {0}, entry.decision,
                                                framework::DesignMode::track_only, {}, false);
      REQUIRE(ev.feasible);
      fresh_grids.push_back(ev.sel[0]);
      int movements = 0;
      for (int t = 0; t < 3; ++t)
        movements += sol.counts.at(k, 0, static_cast<noise::Period>(t));
      fuel += movements * ev.fuel_kg[0];
    }
    const double n_pa = noise::people_annoyed(
        micro.population, {&fresh_grids[0], &fresh_grids[1]}, sol.counts);
    worst = std::max(worst, rel_diff(n_pa + 1.0, sol.n_pa + 1.0));
    worst = std::max(worst, rel_diff(fuel, sol.t_fuel));
  }
  ok = worst <= 1e-6;
  std::printf("  worst relative reproduction error %.3g over %zu solutions\n", worst,
              result.solutions.size());
  report(7, "step-1/step-2 cache soundness within 1e-6", ok);
}

TEST_CASE("criterion 8: flight-count sensitivity containment") {
  const auto demo = load_demo();
  const auto report_data = framework::sensitivity_flight_counts(
      demo, 0, {0}, {50, 100, 150}, framework::DesignMode::track_only, cfg_for(demo, 120, 42));
  bool ok = true;
  for (std::size_t c = 0; c < report_data.containment.size(); ++c) {
    std::printf("  assumed %d movements: %zu routes, containment %.3f\n",
                report_data.assumed_totals[c], report_data.archives[c].entries.size(),
                report_data.containment[c]);
    ok = ok && report_data.containment[c] >= 0.8;
  }
  report(8, "50/100-movement fronts covered by the 150-movement front", ok);
}

TEST_CASE("criterion 9: two-step against the integrated solver at equal budget") {
  const auto micro = load_micro();

  std::vector<framework::RouteArchive> archives;
  std::uint64_t step1_evals = 0;
  for (int k = 0; k < 2; ++k) {
    const auto cfg = cfg_for(micro, 80, micro.seed + 1000003ull * static_cast<unsigned>(k));
    archives.push_back(framework::step1_design_routes(
        micro, k, framework::choose_design_counts(micro, k), framework::DesignMode::track_only,
        cfg));
    step1_evals += static_cast<std::uint64_t>(cfg.population_size) *
                   static_cast<std::uint64_t>(cfg.max_iterations + 1);
  }
  const auto step2_cfg = cfg_for(micro, 15, micro.seed + 99);
  const auto two_step = framework::step2_allocate(micro, archives, step2_cfg);
  const std::uint64_t step2_evals = two_step.optimizer.evaluations;
  const std::uint64_t total = step1_evals + step2_evals;

  const int one_gens = static_cast<int>(total / 50) - 1;
  const auto one_step = framework::one_step_solve(micro, framework::DesignMode::track_only,
                                                  cfg_for(micro, one_gens, micro.seed + 7));
  const std::uint64_t one_evals = one_step.optimizer.evaluations;

  std::vector<std::pair<double, double>> front_two = front_of(two_step.solutions);
  std::vector<std::pair<double, double>> front_one;
  for (const auto& s : one_step.solutions) front_one.emplace_back(s.n_pa, s.t_fuel);
  const auto ref = union_reference({&front_two, &front_one});
  const double hv_two = moead::hypervolume_2d(front_two, ref);
  const double hv_one = moead::hypervolume_2d(front_one, ref);

  std::printf("  evaluations: two-step %llu (step 2: %llu), one-step %llu\n",
              static_cast<unsigned long long>(total),
              static_cast<unsigned long long>(step2_evals),
              static_cast<unsigned long long>(one_evals));
  std::printf("  hypervolume: two-step %.6g, one-step %.6g, gap %.2f%%\n", hv_two, hv_one,
              100.0 * std::abs(hv_two - hv_one) / hv_one);

  bool ok = std::abs(hv_two - hv_one) <= 0.10 * hv_one;
  ok = ok && step2_evals * 10 <= one_evals;
  ok = ok && total <= one_evals + 50;  // budgets genuinely comparable
  report(9, "two-step front within 10% of one-step at equal budget", ok);
}

TEST_CASE("criterion 10: optimized vertical profiles dominate fixed ones") {
  const auto demo = load_demo();

  auto run_two_step = [&](framework::DesignMode mode, int gens) {
    std::vector<framework::RouteArchive> archives;
    for (int k = 0; k < 2; ++k)
      archives.push_back(framework::step1_design_routes(
          demo, k, framework::choose_design_counts(demo, k), mode,
          cfg_for(demo, gens, demo.seed + 1000003ull * static_cast<unsigned>(k))));
    return framework::step2_allocate(demo, archives, cfg_for(demo, 150, demo.seed + 99));
  };

  const auto flat = run_two_step(framework::DesignMode::track_only, 100);
  const auto full = run_two_step(framework::DesignMode::full_3d, 220);

  const auto front2 = front_of(flat.solutions);
  const auto front3 = front_of(full.solutions);
  const auto ref = union_reference({&front2, &front3});
  const double hv2 = moead::hypervolume_2d(front2, ref);
  const double hv3 = moead::hypervolume_2d(front3, ref);
  std::printf("  hypervolume: profiles fixed %.6g vs optimized %.6g\n", hv2, hv3);
  bool ok = hv3 > hv2;

  double lo = std::max(front2.back().second, front3.back().second);
  double hi = std::min(front2.front().second, front3.front().second);
  REQUIRE(lo < hi);
  for (int i = 0; i < 5; ++i) {
    const double fuel = lo + (hi - lo) * (i + 0.5) / 5.0;
    const double best2 = best_n_pa_within(front2, fuel);
    const double best3 = best_n_pa_within(front3, fuel);
    std::printf("  fuel budget %.0f kg: annoyed %.1f (fixed) vs %.1f (optimized)\n", fuel,
                best2, best3);
    ok = ok && best3 < best2;
  }
  report(10, "3-D front beats the 2-D front in hypervolume and at matched fuel", ok);
}

TEST_CASE("criterion 11: determinism of the pipeline, and CLI exit codes") {
  const auto data = fs::path(DEPOPT_DATA_DIR);
  const auto micro_scn = (data / "micro/scenario.json").string();
  const auto demo_scn = (data / "demo/scenario.json").string();

  bool ok = run_cli("validate --scenario " + micro_scn) == 0;
  ok = ok && run_cli("validate --scenario " + demo_scn) == 0;
  ok = ok && run_cli("--definitely-not-a-flag") == 2;
  ok = ok && run_cli("validate --scenario /nonexistent/path.json") == 3;

  // Missing archives: named input error with its own exit code.
  const auto missing = work_dir("missing");
  ok = ok &&
       run_cli("allocate --scenario " + micro_scn + " --archives " + (missing / "nope").string() +
               " --out " + (missing / "out").string()) == 6;

  // Infeasible schedule: demand beyond capacity.
  {
    std::ifstream in(micro_scn);
    nlohmann::json j;
    in >> j;
    j["sids"][0]["capacity_movements"] = 1;
    j["sids"][1]["capacity_movements"] = 1;
    const auto bad = data / "micro" / "infeasible_tmp.json";
    std::ofstream out(bad);
    out << j.dump(2);
    out.close();
    ok = ok && run_cli("validate --scenario " + bad.string()) == 4;
    fs::remove(bad);
  }

  // Same seed, same bytes: two full design + allocate + export rounds.
  const auto a = work_dir("run_a");
  const auto b = work_dir("run_b");
  for (const auto& dir : {a, b}) {
    ok = ok && run_cli("design-routes --scenario " + micro_scn + " --out " +
                       (dir / "archives").string() +
                       " --generations 40 --seed 5 --workers 2") == 0;
    ok = ok && run_cli("allocate --scenario " + micro_scn + " --archives " +
                       (dir / "archives").string() + " --out " + (dir / "alloc").string() +
                       " --generations 40 --seed 5 --workers 2") == 0;
    ok = ok && run_cli("export --scenario " + micro_scn + " --archive " +
                       (dir / "archives/ALFA1.dra").string() + " --allocation " +
                       (dir / "alloc/allocation_front.json").string() + " --archives " +
                       (dir / "archives").string() + " --out " + (dir / "export").string()) == 0;
  }
  ok = ok && dirs_identical(a / "archives", b / "archives");
  ok = ok && dirs_identical(a / "alloc", b / "alloc");
  ok = ok && dirs_identical(a / "export", b / "export");

  // The demo pipeline itself completes at desk scale.
  const auto demo_dir = work_dir("demo_pipeline");
  ok = ok && run_cli("design-routes --scenario " + demo_scn + " --out " +
                     (demo_dir / "archives").string() +
                     " --generations 12 --seed 9 --workers 2") == 0;
  ok = ok && run_cli("allocate --scenario " + demo_scn + " --archives " +
                     (demo_dir / "archives").string() + " --out " +
                     (demo_dir / "alloc").string() + " --generations 60 --seed 9") == 0;
  ok = ok && run_cli("export --scenario " + demo_scn + " --allocation " +
                     (demo_dir / "alloc/allocation_front.json").string() + " --archives " +
                     (demo_dir / "archives").string() + " --out " +
                     (demo_dir / "export").string()) == 0;
  ok = ok && fs::exists(demo_dir / "export/allocation_tracks.geojson") &&
       fs::exists(demo_dir / "export/allocation_contour.asc") &&
       fs::exists(demo_dir / "export/allocation_profiles.csv");

  report(11, "byte-identical reruns, exit codes, demo pipeline", ok);
}
