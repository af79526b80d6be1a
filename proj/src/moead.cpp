#include "depopt/moead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "depopt/common.hpp"

namespace depopt::moead {

namespace {

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

bool ParetoArchive::insert(ArchiveEntry entry) {
  if (entry.violation > 0.0) return false;
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), entry.f1,
                              [](const ArchiveEntry& e, double f1) { return e.f1 < f1; });
  if (pos != entries_.begin()) {
    const auto& pred = *(pos - 1);  // pred.f1 < entry.f1
    if (pred.f2 <= entry.f2) return false;
    if (nearly_equal(pred.f1, entry.f1) && nearly_equal(pred.f2, entry.f2)) return false;
  }
  if (pos != entries_.end()) {
    // Entries from pos onward have f1 >= entry.f1.
    if (nearly_equal(pos->f1, entry.f1) && pos->f2 <= entry.f2) return false;
    if (nearly_equal(pos->f1, entry.f1) && nearly_equal(pos->f2, entry.f2)) return false;
  }
  auto last = pos;
  while (last != entries_.end() && last->f2 >= entry.f2) ++last;
  if (last == pos) {
    entries_.insert(pos, std::move(entry));
  } else {
    *pos = std::move(entry);
    entries_.erase(pos + 1, last);
  }
  return true;
}

std::vector<std::pair<double, double>> ParetoArchive::objective_points() const {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(entries_.size());
  for (const auto& e : entries_) pts.emplace_back(e.f1, e.f2);
  return pts;
}

double tchebycheff(std::pair<double, double> f, std::pair<double, double> weight,
                   std::pair<double, double> ideal) {
  const double w1 = weight.first > 0.0 ? weight.first : 1e-6;
  const double w2 = weight.second > 0.0 ? weight.second : 1e-6;
  return std::max(w1 * std::abs(f.first - ideal.first), w2 * std::abs(f.second - ideal.second));
}

std::vector<std::pair<double, double>> generate_weights(int n) {
  if (n < 2) throw std::invalid_argument("at least two weight vectors required");
  std::vector<std::pair<double, double>> w;
  w.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(n - 1 - i) / (n - 1);
    const double b = static_cast<double>(i) / (n - 1);
    w.emplace_back(a, b);
  }
  return w;
}

double hypervolume_2d(const std::vector<std::pair<double, double>>& front,
                      std::pair<double, double> ref) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(front.size());
  for (const auto& p : front) {
    if (p.first <= ref.first && p.second <= ref.second) {
      pts.push_back(p);
    } else {
      warnings().hypervolume_dropped_points.fetch_add(1, std::memory_order_relaxed);
    }
  }
  std::sort(pts.begin(), pts.end());
  double hv = 0.0;
  double prev_f2 = ref.second;
  for (const auto& p : pts) {
    if (p.second < prev_f2) {
      hv += (ref.first - p.first) * (prev_f2 - p.second);
      prev_f2 = p.second;
    }
  }
  return hv;
}

// ---------------------------------------------------------------------------
// MOEA/D-DE with Tchebycheff decomposition and feasibility-first replacement
// ---------------------------------------------------------------------------

namespace {

struct Individual {
  std::vector<double> x;
  Objectives obj;
};

// Candidate production for one sub-problem, drawn ahead of evaluation so the
// random stream is independent of evaluation order.
struct PendingCandidate {
  std::vector<double> x;
  std::vector<int> replacement_order;
  Objectives obj;
};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return real_(rng_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * real_(rng_); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1))]);
  }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> real_{0.0, 1.0};
};

void clamp_and_round(const ProblemSpec& problem, std::vector<double>& x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto& v = problem.variables[j];
    x[j] = std::clamp(x[j], v.lower, v.upper);
    if (v.integer) x[j] = std::clamp(std::nearbyint(x[j]), v.lower, v.upper);
  }
}

void polynomial_mutation(const ProblemSpec& problem, double rate, double eta, Sampler& rng,
                         std::vector<double>& x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (rng.uniform() >= rate) continue;
    const auto& v = problem.variables[j];
    const double span = v.upper - v.lower;
    if (span <= 0.0) continue;
    const double u = rng.uniform();
    double delta;
    if (u < 0.5) {
      const double d1 = (x[j] - v.lower) / span;
      delta = std::pow(2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0),
                       1.0 / (eta + 1.0)) -
              1.0;
    } else {
      const double d2 = (v.upper - x[j]) / span;
      delta = 1.0 - std::pow(2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0),
                             1.0 / (eta + 1.0));
    }
    x[j] += delta * span;
  }
}

// Feasibility-first ordering: feasible beats infeasible, infeasible compare
// by violation, feasible compare by the sub-problem scalarization.
bool candidate_wins(const Objectives& cand, const Objectives& incumbent,
                    std::pair<double, double> weight, std::pair<double, double> ideal) {
  const bool cf = cand.feasible();
  const bool xf = incumbent.feasible();
  if (cf != xf) return cf;
  if (!cf) return cand.violation < incumbent.violation;
  return tchebycheff({cand.f1, cand.f2}, weight, ideal) <
         tchebycheff({incumbent.f1, incumbent.f2}, weight, ideal);
}

}  // namespace

MoeadResult optimize(const ProblemSpec& problem, const MoeadConfig& cfg,
                     const GenerationCallback& on_generation,
                     const PopulationCallback& on_population) {
  const int n = cfg.population_size;
  const std::size_t dim = problem.dimension();
  if (n < 2) throw std::invalid_argument("population_size must be at least 2");
  if (cfg.neighborhood_size < 2 || cfg.neighborhood_size > n)
    throw std::invalid_argument("neighborhood_size must lie in [2, population_size]");
  if (dim == 0) throw std::invalid_argument("problem has no variables");
  if (!problem.evaluate) throw std::invalid_argument("problem has no evaluator");

  const double mutation_rate =
      cfg.mutation_rate >= 0.0 ? cfg.mutation_rate : 1.0 / static_cast<double>(dim);

  const auto weights = generate_weights(n);

  // Neighborhoods: the T nearest weight vectors, self included.
  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      const double da = std::abs(weights[static_cast<std::size_t>(a)].first -
                                 weights[static_cast<std::size_t>(i)].first);
      const double db = std::abs(weights[static_cast<std::size_t>(b)].first -
                                 weights[static_cast<std::size_t>(i)].first);
      return da < db;
    });
    idx.resize(static_cast<std::size_t>(cfg.neighborhood_size));
    neighbors[static_cast<std::size_t>(i)] = std::move(idx);
  }

  Sampler rng(cfg.rng_seed);
  MoeadResult result;
  auto& archive = result.archive;
  std::pair<double, double>& ideal = result.ideal;

  auto account = [&](Objectives& obj) {
    ++result.evaluations;
    if (!std::isfinite(obj.f1) || !std::isfinite(obj.f2) || !std::isfinite(obj.violation)) {
      obj.violation = 1e18;
      ++result.nonfinite_evaluations;
      return;
    }
    if (obj.feasible()) {
      ideal.first = std::min(ideal.first, obj.f1);
      ideal.second = std::min(ideal.second, obj.f2);
    }
  };

  // Initial population, uniform over the box.
  std::vector<Individual> pop(static_cast<std::size_t>(n));
  for (auto& ind : pop) {
    ind.x.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
      ind.x[j] = rng.uniform(problem.variables[j].lower, problem.variables[j].upper);
    clamp_and_round(problem, ind.x);
    if (problem.repair) problem.repair(ind.x);
  }
  parallel_for(pop.size(), cfg.workers,
               [&](std::size_t i) { pop[i].obj = problem.evaluate(pop[i].x); });
  for (auto& ind : pop) {
    account(ind.obj);
    archive.insert({ind.x, ind.obj.f1, ind.obj.f2, ind.obj.violation});
  }

  auto trace_generation = [&](int iteration) {
    TracePoint tp;
    tp.iteration = iteration;
    int feasible = 0;
    for (const auto& ind : pop)
      if (ind.obj.feasible()) ++feasible;
    tp.feasible_count = feasible;
    tp.ideal_f1 = ideal.first;
    tp.ideal_f2 = ideal.second;
    std::pair<double, double> ref{cfg.trace_ref_f1, cfg.trace_ref_f2};
    if (!archive.empty()) {
      if (!std::isfinite(ref.first) || !std::isfinite(ref.second)) {
        ref = {archive.entries().front().f1, archive.entries().back().f2};
        for (const auto& e : archive.entries()) {
          ref.first = std::max(ref.first, e.f1);
          ref.second = std::max(ref.second, e.f2);
        }
      }
      tp.hypervolume = hypervolume_2d(archive.objective_points(), ref);
    }
    result.trace.push_back(tp);
    if (on_generation) on_generation(tp);
    if (on_population) {
      std::vector<Objectives> objs;
      objs.reserve(pop.size());
      for (const auto& ind : pop) objs.push_back(ind.obj);
      on_population(tp.iteration, objs);
    }
  };
  trace_generation(0);

  std::vector<PendingCandidate> pending(static_cast<std::size_t>(n));
  for (int gen = 1; gen <= cfg.max_iterations; ++gen) {
    // Variation pass: all random draws happen here, sequentially.
    for (int i = 0; i < n; ++i) {
      const auto& pool = rng.uniform() < cfg.neighbor_selection_prob
                             ? neighbors[static_cast<std::size_t>(i)]
                             : std::vector<int>{};  // empty = whole population
      auto pick = [&](int exclude1, int exclude2) {
        while (true) {
          const int r = pool.empty()
                            ? rng.uniform_int(0, n - 1)
                            : pool[static_cast<std::size_t>(
                                  rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
          if (r != exclude1 && r != exclude2) return r;
        }
      };
      const int r1 = pick(-1, -1);
      const int r2 = pick(r1, -1);
      const int r3 = pick(r1, r2);

      // DE/rand/1 with binomial crossover against the incumbent.
      std::vector<double> trial = pop[static_cast<std::size_t>(i)].x;
      const auto& x1 = pop[static_cast<std::size_t>(r1)].x;
      const auto& x2 = pop[static_cast<std::size_t>(r2)].x;
      const auto& x3 = pop[static_cast<std::size_t>(r3)].x;
      const std::size_t forced = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(dim) - 1));
      for (std::size_t j = 0; j < dim; ++j) {
        if (j == forced || rng.uniform() < cfg.crossover_rate)
          trial[j] = x1[j] + cfg.de_scale * (x2[j] - x3[j]);
      }
      polynomial_mutation(problem, mutation_rate, cfg.mutation_distribution_index, rng, trial);
      clamp_and_round(problem, trial);
      if (problem.repair) problem.repair(trial);

      auto& cand = pending[static_cast<std::size_t>(i)];
      cand.x = std::move(trial);
      cand.replacement_order =
          pool.empty() ? [&] {
            std::vector<int> all(static_cast<std::size_t>(n));
            std::iota(all.begin(), all.end(), 0);
            return all;
          }()
                       : pool;
      rng.shuffle(cand.replacement_order);
    }

    // Evaluation pass; may fan out to workers, results land by index.
    parallel_for(pending.size(), cfg.workers, [&](std::size_t i) {
      pending[i].obj = problem.evaluate(pending[i].x);
    });

    // Replacement pass, serial and in sub-problem order.
    for (int i = 0; i < n; ++i) {
      auto& cand = pending[static_cast<std::size_t>(i)];
      account(cand.obj);
      archive.insert({cand.x, cand.obj.f1, cand.obj.f2, cand.obj.violation});
      int replaced = 0;
      for (int j : cand.replacement_order) {
        if (replaced >= cfg.replacement_limit) break;
        auto& incumbent = pop[static_cast<std::size_t>(j)];
        if (candidate_wins(cand.obj, incumbent.obj, weights[static_cast<std::size_t>(j)],
                           ideal)) {
          incumbent.x = cand.x;
          incumbent.obj = cand.obj;
          ++replaced;
        }
      }
    }

    trace_generation(gen);
  }

  return result;
}

}  // namespace depopt::moead
