#include "doctest.h"

#include <cmath>
#include <random>

#include "depopt/moead.hpp"
#include "test_support.hpp"

using namespace depopt;
using namespace testsupport;

TEST_CASE("Tchebycheff scalarization") {
  CHECK(moead::tchebycheff({3.0, 5.0}, {0.4, 0.6}, {3.0, 5.0}) == 0.0);
  CHECK(moead::tchebycheff({3.0, 7.0}, {1.0, 0.0}, {1.0, 2.0}) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(moead::tchebycheff({0.0, 4e7}, {1.0, 0.0}, {0.0, 0.0}) ==
        doctest::Approx(40.0).epsilon(1e-12));  // the 1e-6 floor on zero weights
  CHECK(moead::tchebycheff({3.0, 6.0}, {0.5, 0.5}, {1.0, 2.0}) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("uniform weight ladder") {
  const auto two = moead::generate_weights(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == std::pair<double, double>{1.0, 0.0});
  CHECK(two[1] == std::pair<double, double>{0.0, 1.0});
  const auto three = moead::generate_weights(3);
  CHECK(three[1] == std::pair<double, double>{0.5, 0.5});
  for (int n : {2, 3, 7, 50}) {
    const auto w = moead::generate_weights(n);
    for (const auto& p : w) CHECK(p.first + p.second == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i].second > w[i - 1].second);
  }
  CHECK_THROWS_AS(moead::generate_weights(1), std::invalid_argument);
}

TEST_CASE("2-D hypervolume sweep") {
  CHECK(moead::hypervolume_2d({{0.0, 0.0}}, {1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(moead::hypervolume_2d({{0.0, 0.5}, {0.5, 0.0}}, {1.0, 1.0}) == doctest::Approx(0.75));
  CHECK(moead::hypervolume_2d({{0.0, 0.5}, {0.5, 0.0}, {0.5, 0.0}, {0.0, 0.5}}, {1.0, 1.0}) ==
        doctest::Approx(0.75));
  const auto before = warnings().hypervolume_dropped_points.load();
  CHECK(moead::hypervolume_2d({{0.0, 0.5}, {2.0, 0.0}}, {1.0, 1.0}) == doctest::Approx(0.5));
  CHECK(warnings().hypervolume_dropped_points.load() == before + 1);
  CHECK(moead::hypervolume_2d({}, {1.0, 1.0}) == 0.0);
}

TEST_CASE("Pareto archive keeps a clean staircase") {
  moead::ParetoArchive archive;
  CHECK(archive.insert({{0.0}, 5.0, 5.0, 0.0}));
  CHECK_FALSE(archive.insert({{0.0}, 6.0, 6.0, 0.0}));   // dominated
  CHECK_FALSE(archive.insert({{0.0}, 5.0, 5.0, 0.0}));   // duplicate
  CHECK_FALSE(archive.insert({{0.0}, 1.0, 1.0, 0.5}));   // infeasible
  CHECK(archive.insert({{0.0}, 3.0, 7.0, 0.0}));
  CHECK(archive.insert({{0.0}, 7.0, 3.0, 0.0}));
  CHECK(archive.insert({{0.0}, 4.0, 4.0, 0.0}));  // dominates (5,5)
  const auto& e = archive.entries();
  REQUIRE(e.size() == 3);
  for (std::size_t i = 1; i < e.size(); ++i) {
    CHECK(e[i].f1 > e[i - 1].f1);
    CHECK(e[i].f2 < e[i - 1].f2);
  }
}

namespace {

moead::ProblemSpec schaffer_problem() {
  moead::ProblemSpec p;
  p.variables = {{-5.0, 10.0, false}};
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    return {x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0), 0.0};
  };
  return p;
}

// True front sampled densely; exact within the sweep's resolution.
double schaffer_front_hypervolume(std::pair<double, double> ref) {
  std::vector<std::pair<double, double>> pts;
  const int n = 200000;
  pts.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = 2.0 * i / n;
    pts.emplace_back(x * x, (x - 2.0) * (x - 2.0));
  }
  return moead::hypervolume_2d(pts, ref);
}

}  // namespace

TEST_CASE("solver covers the Schaffer front") {
  moead::MoeadConfig cfg;
  cfg.population_size = 50;
  cfg.max_iterations = 100;
  cfg.rng_seed = 3;
  const auto result = moead::optimize(schaffer_problem(), cfg);
  REQUIRE(!result.archive.empty());
  const double hv = moead::hypervolume_2d(result.archive.objective_points(), {25.0, 25.0});
  CHECK(hv >= 0.985 * schaffer_front_hypervolume({25.0, 25.0}));
  CHECK(result.evaluations == 50u * 101u);
}

TEST_CASE("fixed seed gives a bit-identical archive; workers do not matter") {
  moead::MoeadConfig cfg;
  cfg.population_size = 24;
  cfg.max_iterations = 40;
  cfg.rng_seed = 99;
  const auto a = moead::optimize(schaffer_problem(), cfg);
  const auto b = moead::optimize(schaffer_problem(), cfg);
  cfg.workers = 2;
  const auto c = moead::optimize(schaffer_problem(), cfg);
  REQUIRE(a.archive.size() == b.archive.size());
  REQUIRE(a.archive.size() == c.archive.size());
  for (std::size_t i = 0; i < a.archive.size(); ++i) {
    const auto& ea = a.archive.entries()[i];
    for (const auto* other : {&b.archive.entries()[i], &c.archive.entries()[i]}) {
      CHECK(ea.f1 == other->f1);
      CHECK(ea.f2 == other->f2);
      CHECK(ea.decision == other->decision);
    }
  }
}

TEST_CASE("feasibility-first replacement keeps only feasible points in the archive") {
  moead::ProblemSpec p;
  p.variables = {{0.0, 1.0, false}, {0.0, 1.0, false}};
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    return {x[0], 1.0 - x[1], std::max(0.0, x[0] - x[1])};
  };
  moead::MoeadConfig cfg;
  cfg.population_size = 20;
  cfg.max_iterations = 60;
  cfg.rng_seed = 5;
  const auto result = moead::optimize(p, cfg);
  REQUIRE(!result.archive.empty());
  for (const auto& e : result.archive.entries()) {
    CHECK(e.violation == 0.0);
    CHECK(e.decision[0] <= e.decision[1] + 1e-12);
  }
  // Pairwise non-domination.
  const auto& entries = result.archive.entries();
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (i == j) continue;
      const bool dominates = entries[i].f1 <= entries[j].f1 && entries[i].f2 <= entries[j].f2 &&
                             (entries[i].f1 < entries[j].f1 || entries[i].f2 < entries[j].f2);
      CHECK_FALSE(dominates);
    }
}

TEST_CASE("ideal point decreases monotonically over the run") {
  moead::MoeadConfig cfg;
  cfg.population_size = 20;
  cfg.max_iterations = 50;
  cfg.rng_seed = 17;
  const auto result = moead::optimize(schaffer_problem(), cfg);
  for (std::size_t g = 1; g < result.trace.size(); ++g) {
    CHECK(result.trace[g].ideal_f1 <= result.trace[g - 1].ideal_f1);
    CHECK(result.trace[g].ideal_f2 <= result.trace[g - 1].ideal_f2);
  }
}

TEST_CASE("per-subproblem scalarization never worsens once the ideal settles") {
  // Integer variant of the Schaffer problem: the exact ideal (0, 0) enters
  // the run early, after which replacement guarantees monotone values.
  moead::ProblemSpec p;
  p.variables = {{-5.0, 10.0, true}};
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    return {x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0), 0.0};
  };
  moead::MoeadConfig cfg;
  cfg.population_size = 12;
  cfg.max_iterations = 60;
  cfg.rng_seed = 23;

  const auto weights = moead::generate_weights(cfg.population_size);
  std::vector<std::vector<moead::Objectives>> pops;
  moead::optimize(p, cfg, nullptr,
                  [&](int, const std::vector<moead::Objectives>& pop) { pops.push_back(pop); });

  // First generation at which the exact ideal (0, 0) has been observed; the
  // scalarizing reference is constant from there on.
  std::size_t settled = pops.size();
  for (std::size_t gen = 0; gen < pops.size(); ++gen) {
    double min_f1 = 1e300, min_f2 = 1e300;
    for (const auto& o : pops[gen]) {
      min_f1 = std::min(min_f1, o.f1);
      min_f2 = std::min(min_f2, o.f2);
    }
    if (min_f1 == 0.0 && min_f2 == 0.0) {
      settled = gen;
      break;
    }
  }
  REQUIRE(settled < pops.size());
  auto g_of = [&](std::size_t gen, std::size_t i) {
    return moead::tchebycheff({pops[gen][i].f1, pops[gen][i].f2}, weights[i], {0.0, 0.0});
  };
  for (std::size_t gen = settled + 1; gen < pops.size(); ++gen)
    for (std::size_t i = 0; i < pops[gen].size(); ++i)
      CHECK(g_of(gen, i) <= g_of(gen - 1, i) + 1e-12);
}

TEST_CASE("integer variables stay integral after variation") {
  moead::ProblemSpec p;
  p.variables = {{0.0, 9.0, true}, {-3.0, 3.0, false}};
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    return {x[0] + x[1] * x[1], (x[0] - 5.0) * (x[0] - 5.0) + std::abs(x[1]), 0.0};
  };
  moead::MoeadConfig cfg;
  cfg.population_size = 16;
  cfg.max_iterations = 30;
  cfg.rng_seed = 8;
  const auto result = moead::optimize(p, cfg);
  for (const auto& e : result.archive.entries()) {
    CHECK(e.decision[0] == std::nearbyint(e.decision[0]));
    CHECK(e.decision[0] >= 0.0);
    CHECK(e.decision[0] <= 9.0);
  }
}

TEST_CASE("non-finite evaluations are quarantined") {
  moead::ProblemSpec p;
  p.variables = {{0.0, 1.0, false}};
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    if (x[0] > 0.8) return {std::nan(""), 1.0, 0.0};
    return {x[0], 1.0 - x[0], 0.0};
  };
  moead::MoeadConfig cfg;
  cfg.population_size = 10;
  cfg.max_iterations = 30;
  cfg.rng_seed = 4;
  const auto result = moead::optimize(p, cfg);
  CHECK(result.nonfinite_evaluations > 0);
  for (const auto& e : result.archive.entries()) {
    CHECK(std::isfinite(e.f1));
    CHECK(std::isfinite(e.f2));
    CHECK(e.decision[0] <= 0.8);
  }
}

TEST_CASE("repair hook runs before evaluation") {
  moead::ProblemSpec p;
  p.variables = {{0.0, 10.0, false}};
  p.repair = [](std::vector<double>& x) { x[0] = std::max(x[0], 2.0); };
  p.evaluate = [](const std::vector<double>& x) -> moead::Objectives {
    return {x[0], 10.0 - x[0], 0.0};
  };
  moead::MoeadConfig cfg;
  cfg.population_size = 8;
  cfg.neighborhood_size = 4;
  cfg.max_iterations = 10;
  cfg.rng_seed = 2;
  const auto result = moead::optimize(p, cfg);
  for (const auto& e : result.archive.entries()) CHECK(e.decision[0] >= 2.0);
}
