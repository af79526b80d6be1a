#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace depopt::moead {

struct VariableSpec {
  double lower = 0.0;
  double upper = 1.0;
  bool integer = false;
};

struct Objectives {
  double f1 = 0.0;
  double f2 = 0.0;
  double violation = 0.0;  // 0 = feasible

  bool feasible() const { return violation <= 0.0; }
};

struct ProblemSpec {
  std::vector<VariableSpec> variables;
  std::function<Objectives(const std::vector<double>&)> evaluate;
  // Optional projection onto the feasible-encoding manifold, applied after
  // variation and integer rounding, before evaluation.
  std::function<void(std::vector<double>&)> repair;

  std::size_t dimension() const { return variables.size(); }
};

struct MoeadConfig {
  int population_size = 50;
  int max_iterations = 1000;
  int neighborhood_size = 10;
  double de_scale = 0.5;               // F
  double crossover_rate = 0.9;         // CR
  double mutation_rate = -1.0;         // < 0 selects 1/dimension
  double mutation_distribution_index = 20.0;
  int replacement_limit = 2;           // n_r
  double neighbor_selection_prob = 0.9;  // delta
  std::uint64_t rng_seed = 1;
  unsigned workers = 1;
  // Reference point for the per-iteration hypervolume trace; NaN selects the
  // archive's own nadir.
  double trace_ref_f1 = std::numeric_limits<double>::quiet_NaN();
  double trace_ref_f2 = std::numeric_limits<double>::quiet_NaN();
};

struct ArchiveEntry {
  std::vector<double> decision;
  double f1 = 0.0;
  double f2 = 0.0;
  double violation = 0.0;
};

// Non-dominated set of feasible points, kept sorted by rising f1 (and hence
// falling f2). Near-duplicates in objective space are dropped.
class ParetoArchive {
 public:
  bool insert(ArchiveEntry entry);
  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  std::vector<std::pair<double, double>> objective_points() const;

 private:
  std::vector<ArchiveEntry> entries_;
};

struct TracePoint {
  int iteration = 0;
  double hypervolume = 0.0;
  int feasible_count = 0;  // feasible members of the working population
  double ideal_f1 = 0.0;
  double ideal_f2 = 0.0;
};

struct MoeadResult {
  ParetoArchive archive;
  std::vector<TracePoint> trace;
  std::uint64_t evaluations = 0;
  std::uint64_t nonfinite_evaluations = 0;
  std::pair<double, double> ideal{std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity()};
};

double tchebycheff(std::pair<double, double> f, std::pair<double, double> weight,
                   std::pair<double, double> ideal);

// Uniform weight ladder ((n-1-i)/(n-1), i/(n-1)) for i = 0..n-1.
std::vector<std::pair<double, double>> generate_weights(int n);

// Exact 2-D hypervolume; points that fail to dominate the reference are
// skipped with a warning count.
double hypervolume_2d(const std::vector<std::pair<double, double>>& front,
                      std::pair<double, double> ref);

using GenerationCallback = std::function<void(const TracePoint&)>;
// Invoked after every generation with the working population's objectives,
// in sub-problem order; used by invariant checks.
using PopulationCallback = std::function<void(int iteration, const std::vector<Objectives>&)>;

MoeadResult optimize(const ProblemSpec& problem, const MoeadConfig& cfg,
                     const GenerationCallback& on_generation = nullptr,
                     const PopulationCallback& on_population = nullptr);

}  // namespace depopt::moead
