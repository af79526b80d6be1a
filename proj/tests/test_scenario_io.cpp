#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "depopt/scenario_io.hpp"
#include "test_support.hpp"

using namespace depopt;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "depopt_io_tests";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << contents;
}

nlohmann::json demo_json() {
  std::ifstream in(data_path("demo/scenario.json"));
  nlohmann::json j;
  in >> j;
  return j;
}

// Writes a scenario variant next to the demo data so relative references
// keep resolving.
std::string write_demo_variant(const std::string& name, const nlohmann::json& j) {
  const auto p = fs::path(data_path("demo")) / name;
  write_file(p, j.dump(2));
  return p.string();
}

}  // namespace

TEST_CASE("the shipped scenarios load cleanly") {
  const auto demo = load_demo();
  CHECK(demo.fleet.size() == 2);
  CHECK(demo.sids.size() == 2);
  CHECK(demo.population.geometry.nx == 50);
  CHECK(demo.population.geometry.ny == 50);
  CHECK(demo.schedule.terminals.size() == 1);
  CHECK(demo.schedule.totals[0][0][0] == 84);
  CHECK(demo.optimizer.rng_seed == 42);

  const auto micro = load_micro();
  CHECK(micro.fleet.size() == 1);
  CHECK(micro.schedule.capacity == std::vector<int>{4, 4});
}

TEST_CASE("schedule demand beyond route capacity is a named infeasibility") {
  auto j = demo_json();
  j["sids"][0]["capacity_movements"] = 10;
  j["sids"][1]["capacity_movements"] = 10;
  const auto path = write_demo_variant("bad_capacity.json", j);
  CHECK_THROWS_AS(io::load_scenario(path), InfeasibleScheduleError);
  try {
    io::load_scenario(path);
  } catch (const InfeasibleScheduleError& e) {
    CHECK(std::string(e.what()).find("LIMBO") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("unknown aircraft reference names the identifier") {
  auto j = demo_json();
  j["schedule"][0]["aircraft"] = "GHOST";
  const auto path = write_demo_variant("bad_aircraft.json", j);
  CHECK_THROWS_WITH_AS(io::load_scenario(path), doctest::Contains("GHOST"), ScenarioError);
  fs::remove(path);
}

TEST_CASE("unknown terminal point is rejected") {
  auto j = demo_json();
  j["schedule"][0]["terminal_point"] = "NOWHERE";
  const auto path = write_demo_variant("bad_terminal.json", j);
  CHECK_THROWS_WITH_AS(io::load_scenario(path), doctest::Contains("NOWHERE"), ScenarioError);
  fs::remove(path);
}

TEST_CASE("population grid loader") {
  const auto dir = temp_dir();
  SUBCASE("2x2 lattice sums to 10 and carries the inferred geometry") {
    const auto p = dir / "grid.csv";
    write_file(p, "x,y,population\n0,0,1\n500,0,2\n0,500,3\n500,500,4\n");
    const auto res = io::load_population_grid(p.string());
    CHECK(res.grid.total() == 10.0);
    CHECK(res.grid.geometry.nx == 2);
    CHECK(res.grid.geometry.ny == 2);
    CHECK(res.grid.geometry.cell_size == doctest::Approx(500.0));
    CHECK(res.missing_cells == 0);
  }
  SUBCASE("negative population is rejected") {
    const auto p = dir / "neg.csv";
    write_file(p, "0,0,1\n500,0,-2\n");
    CHECK_THROWS_AS(io::load_population_grid(p.string()), ScenarioError);
  }
  SUBCASE("duplicate coordinates are rejected") {
    const auto p = dir / "dup.csv";
    write_file(p, "0,0,1\n500,0,2\n0,0,3\n");
    CHECK_THROWS_WITH_AS(io::load_population_grid(p.string()), doctest::Contains("duplicate"),
                         ScenarioError);
  }
  SUBCASE("off-lattice points are rejected with their coordinates") {
    const auto p = dir / "irregular.csv";
    write_file(p, "0,0,1\n500,0,2\n1000,0,3\n1700,0,4\n");
    CHECK_THROWS_WITH_AS(io::load_population_grid(p.string()), doctest::Contains("1700"),
                         ScenarioError);
  }
  SUBCASE("missing cells load as zero with a count") {
    const auto p = dir / "sparse.csv";
    write_file(p, "0,0,1\n500,500,4\n");
    const auto res = io::load_population_grid(p.string());
    CHECK(res.grid.total() == 5.0);
    CHECK(res.missing_cells == 2);
  }
  SUBCASE("configured cell size must match the lattice") {
    const auto p = dir / "grid2.csv";
    write_file(p, "0,0,1\n500,0,2\n0,500,3\n500,500,4\n");
    CHECK_THROWS_AS(io::load_population_grid(p.string(), 250.0), ScenarioError);
  }
}

namespace {

framework::RouteArchive random_archive(std::mt19937_64& rng, int entries, int types,
                                       const noise::GridGeometry& geom) {
  std::uniform_real_distribution<double> real(-1000.0, 1000.0);
  framework::RouteArchive a;
  a.sid = "TESTSID";
  a.mode = framework::DesignMode::track_only;
  for (int i = 0; i < types; ++i) a.type_names.push_back("T" + std::to_string(i));
  a.assumption.per_type.assign(static_cast<std::size_t>(types), {3, 2, 1});
  for (int e = 0; e < entries; ++e) {
    framework::RouteArchiveEntry entry;
    for (int d = 0; d < 5; ++d) entry.decision.push_back(real(rng));
    entry.n_pa = std::abs(real(rng));
    entry.t_fuel = std::abs(real(rng));
    entry.track_length = std::abs(real(rng)) * 20.0;
    for (int i = 0; i < types; ++i) {
      entry.fuel_kg.push_back(std::abs(real(rng)));
      entry.time_s.push_back(std::abs(real(rng)));
      noise::SelGrid grid;
      grid.geometry = geom;
      for (std::size_t c = 0; c < geom.size(); ++c)
        grid.sel_dba.push_back(static_cast<float>(real(rng) * 0.05 + 60.0));
      entry.sel.push_back(std::move(grid));
    }
    a.entries.push_back(std::move(entry));
  }
  return a;
}

}  // namespace

TEST_CASE("route archive round trip is bitwise on every payload") {
  const auto dir = temp_dir();
  std::mt19937_64 rng(555);
  const noise::GridGeometry geom{{-250.0, 125.0}, 250.0, 7, 5};
  const auto archive = random_archive(rng, 9, 2, geom);
  const auto path = (dir / "roundtrip.dra").string();
  io::save_archive(path, archive, 0xfeedbeefULL);

  const auto loaded = io::load_archive(path, 0xfeedbeefULL);
  CHECK(loaded.sid == archive.sid);
  CHECK(loaded.type_names == archive.type_names);
  CHECK(loaded.assumption.per_type == archive.assumption.per_type);
  REQUIRE(loaded.entries.size() == archive.entries.size());
  for (std::size_t e = 0; e < archive.entries.size(); ++e) {
    const auto& a = archive.entries[e];
    const auto& b = loaded.entries[e];
    CHECK(a.decision == b.decision);
    CHECK(a.n_pa == b.n_pa);
    CHECK(a.t_fuel == b.t_fuel);
    CHECK(a.track_length == b.track_length);
    CHECK(a.fuel_kg == b.fuel_kg);
    CHECK(a.time_s == b.time_s);
    for (std::size_t i = 0; i < a.sel.size(); ++i) {
      CHECK(a.sel[i].sel_dba == b.sel[i].sel_dba);
      CHECK(a.sel[i].geometry == b.sel[i].geometry);
    }
  }
}

TEST_CASE("archive fingerprint mismatch refuses unless overridden") {
  const auto dir = temp_dir();
  std::mt19937_64 rng(556);
  const auto archive = random_archive(rng, 2, 1, {{0.0, 0.0}, 500.0, 2, 2});
  const auto path = (dir / "stale.dra").string();
  io::save_archive(path, archive, 1ULL);
  CHECK_THROWS_AS(io::load_archive(path, 2ULL), io::ArchiveHashMismatchError);
  CHECK_NOTHROW(io::load_archive(path, 2ULL, true));
}

TEST_CASE("an empty archive file is valid and loads as empty") {
  const auto dir = temp_dir();
  framework::RouteArchive archive;
  archive.sid = "EMPTY";
  archive.type_names = {"T0"};
  archive.assumption.per_type = {{0, 0, 0}};
  const auto path = (dir / "empty.dra").string();
  io::save_archive(path, archive, 7ULL);
  const auto loaded = io::load_archive(path, 7ULL);
  CHECK(loaded.entries.empty());
  CHECK(loaded.sid == "EMPTY");
}

TEST_CASE("loaders reject garbage without constructing partial objects") {
  const auto dir = temp_dir();
  SUBCASE("truncated archive") {
    std::mt19937_64 rng(557);
    const auto archive = random_archive(rng, 3, 1, {{0.0, 0.0}, 500.0, 3, 3});
    const auto path = (dir / "trunc.dra").string();
    io::save_archive(path, archive, 9ULL);
    const auto full = fs::file_size(path);
    fs::resize_file(path, full / 2);
    CHECK_THROWS_WITH_AS(io::load_archive(path, 9ULL), doctest::Contains("unexpected end"),
                         ScenarioError);
  }
  SUBCASE("random bytes are not an archive") {
    const auto path = (dir / "noise.dra").string();
    write_file(path, "this is certainly not a route archive at all");
    CHECK_THROWS_AS(io::load_archive(path, 9ULL), ScenarioError);
  }
  SUBCASE("random bytes are not a scenario") {
    const auto path = (dir / "noise.json").string();
    write_file(path, "{]{]{]");
    CHECK_THROWS_AS(io::load_scenario(path), ScenarioError);
  }
  SUBCASE("missing file is reported") {
    CHECK_THROWS_AS(io::load_scenario((dir / "does_not_exist.json").string()), ScenarioError);
  }
}

TEST_CASE("scenario fingerprint tracks objective-shaping inputs only") {
  auto a = load_micro();
  auto b = a;
  CHECK(io::scenario_fingerprint(a) == io::scenario_fingerprint(b));
  b.population.population[5] += 1.0;
  CHECK(io::scenario_fingerprint(a) != io::scenario_fingerprint(b));
  auto c = a;
  c.fleet[0].fuel_flow_model.slope *= 1.01;
  CHECK(io::scenario_fingerprint(a) != io::scenario_fingerprint(c));
  auto d = a;
  d.optimizer.max_iterations += 7;  // search budget is not an objective input
  d.seed += 1;
  CHECK(io::scenario_fingerprint(a) == io::scenario_fingerprint(d));
}

TEST_CASE("exports are deterministic and structurally sound") {
  const auto dir = temp_dir();
  const std::vector<io::FrontRow> rows{{0, 12.5, 400.25, 38.2, 0.41},
                                       {1, 3.25, 512.5, 40.0, 0.43}};
  const auto p1 = (dir / "front_a.csv").string();
  const auto p2 = (dir / "front_b.csv").string();
  io::write_front_csv(p1, rows);
  io::write_front_csv(p2, rows);
  std::ifstream a(p1), b(p2);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa.find("solution_id,n_pa,t_fuel_kg,distance_km,flight_time_h\n") == 0);
  CHECK_FALSE(fs::exists(p1 + ".tmp"));

  SUBCASE("GeoJSON structure") {
    std::vector<io::TrackFeature> feats{{"ALFA1", 0, 1.0, 2.0, {{0.0, 0.0}, {100.0, 50.0}}}};
    const auto gp = (dir / "tracks.geojson").string();
    io::write_tracks_geojson(gp, feats);
    std::ifstream in(gp);
    nlohmann::json j;
    in >> j;
    CHECK(j.at("type") == "FeatureCollection");
    REQUIRE(j.at("features").size() == 1);
    const auto& f = j["features"][0];
    CHECK(f.at("type") == "Feature");
    CHECK(f.at("geometry").at("type") == "LineString");
    CHECK(f.at("geometry").at("coordinates").size() == 2);
    CHECK(f.at("properties").at("sid") == "ALFA1");
  }
  SUBCASE("contour raster header") {
    noise::GridGeometry geom{{0.0, 0.0}, 500.0, 3, 2};
    const auto cp = (dir / "mask.asc").string();
    io::write_contour_asc(cp, geom, {1, 0, 1, 0, 1, 0});
    std::ifstream in(cp);
    std::string word;
    in >> word;
    CHECK(word == "ncols");
    int ncols;
    in >> ncols;
    CHECK(ncols == 3);
  }
}

TEST_CASE("allocation front JSON round trip") {
  const auto dir = temp_dir();
  const auto micro = load_micro();
  const auto fp = io::scenario_fingerprint(micro);
  std::vector<framework::AllocationSolution> sols;
  framework::AllocationSolution s;
  s.route_index = {1, 0};
  s.counts = noise::OperationCounts::zeros(2, 1);
  s.counts.at(0, 0, noise::Period::day) = 3;
  s.counts.at(1, 0, noise::Period::day) = 1;
  s.n_pa = 123.456789;
  s.t_fuel = 987.654321;
  sols.push_back(s);
  const auto path = (dir / "front.json").string();
  io::save_allocation_front(path, micro, sols, fp);
  const auto loaded = io::load_allocation_front(path, micro, fp);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].route_index == s.route_index);
  CHECK(loaded[0].counts.counts == s.counts.counts);
  CHECK(loaded[0].n_pa == s.n_pa);
  CHECK(loaded[0].t_fuel == s.t_fuel);
  CHECK_THROWS_AS(io::load_allocation_front(path, micro, fp + 1),
                  io::ArchiveHashMismatchError);
}
