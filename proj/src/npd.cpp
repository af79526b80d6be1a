#include "depopt/npd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "depopt/common.hpp"

namespace depopt::noise {

double LateralAttenuation::operator()(double lateral_m, double elevation_rad) const {
  const double beta_deg = std::max(0.0, elevation_rad * 180.0 / M_PI);
  const double angle_term = std::max(0.0, 1.0 - beta_deg / cutoff_elevation_deg);
  const double ground_term = 1.0 - std::exp(-distance_rate * std::max(0.0, lateral_m));
  return plateau_db * ground_term * angle_term;
}

NpdTable::NpdTable(std::vector<double> thrust_grid, std::vector<double> distance_grid,
                   std::vector<std::vector<double>> sel_dba, LateralAttenuation lateral,
                   double reference_speed)
    : thrust_grid_(std::move(thrust_grid)),
      distance_grid_(std::move(distance_grid)),
      sel_dba_(std::move(sel_dba)),
      lateral_(lateral),
      reference_speed_(reference_speed) {
  finish_init();
}

void NpdTable::finish_init() {
  log_thrust_grid_.clear();
  log_distance_grid_.clear();
  for (double v : thrust_grid_) log_thrust_grid_.push_back(std::log(v));
  for (double v : distance_grid_) log_distance_grid_.push_back(std::log(v));
  min_distance_slope_ = std::numeric_limits<double>::infinity();
  for (const auto& row : sel_dba_) {
    for (std::size_t i = 0; i + 1 < row.size(); ++i) {
      const double slope = (row[i] - row[i + 1]) /
                           std::log10(distance_grid_[i + 1] / distance_grid_[i]);
      min_distance_slope_ = std::min(min_distance_slope_, slope);
    }
  }
}

namespace {

// Index i and weight w such that the query sits between knots i and i+1 in
// log space; edge queries clamp to the boundary knot.
struct LogBracket {
  std::size_t i;
  double w;
};

LogBracket bracket(const std::vector<double>& grid, const std::vector<double>& log_grid,
                   double value) {
  if (value <= grid.front()) return {0, 0.0};
  if (value >= grid.back()) return {grid.size() - 2, 1.0};
  std::size_t hi = 1;
  while (grid[hi] < value) ++hi;  // grids are short; linear beats binary here
  const std::size_t lo = hi - 1;
  const double w = (std::log(value) - log_grid[lo]) / (log_grid[hi] - log_grid[lo]);
  return {lo, w};
}

}  // namespace

double NpdTable::sel_at(double thrust, double slant_distance) const {
  if (empty()) throw std::logic_error("NPD table is empty");
  if (slant_distance < distance_grid_.front())
    warnings().npd_distance_clamps.fetch_add(1, std::memory_order_relaxed);
  thrust = std::max(thrust, thrust_grid_.front());
  const LogBracket t = bracket(thrust_grid_, log_thrust_grid_, thrust);
  const LogBracket d = bracket(distance_grid_, log_distance_grid_,
                               std::max(slant_distance, distance_grid_.front()));
  const double s00 = sel_dba_[t.i][d.i];
  const double s01 = sel_dba_[t.i][d.i + 1];
  const double s10 = sel_dba_[t.i + 1][d.i];
  const double s11 = sel_dba_[t.i + 1][d.i + 1];
  const double low = s00 + d.w * (s01 - s00);
  const double high = s10 + d.w * (s11 - s10);
  return low + t.w * (high - low);
}

void NpdTable::validate(const std::string& source) const {
  auto fail = [&](const std::string& msg) { throw ScenarioError(source, "npd_table", msg); };
  if (thrust_grid_.size() < 2 || distance_grid_.size() < 2) fail("need at least a 2x2 grid");
  if (sel_dba_.size() != thrust_grid_.size()) fail("sel row count does not match thrust grid");
  for (const auto& row : sel_dba_)
    if (row.size() != distance_grid_.size()) fail("sel column count does not match distance grid");
  auto ascending_positive = [](const std::vector<double>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] <= 0.0) return false;
      if (i > 0 && g[i] <= g[i - 1]) return false;
    }
    return true;
  };
  if (!ascending_positive(thrust_grid_)) fail("thrust grid must be positive and ascending");
  if (!ascending_positive(distance_grid_)) fail("distance grid must be positive and ascending");
  for (std::size_t ti = 0; ti < thrust_grid_.size(); ++ti)
    for (std::size_t di = 1; di < distance_grid_.size(); ++di)
      if (sel_dba_[ti][di] >= sel_dba_[ti][di - 1])
        fail("SEL must decrease with distance at fixed thrust");
  for (std::size_t di = 0; di < distance_grid_.size(); ++di)
    for (std::size_t ti = 1; ti < thrust_grid_.size(); ++ti)
      if (sel_dba_[ti][di] < sel_dba_[ti - 1][di])
        fail("SEL must not decrease with thrust at fixed distance");
  if (reference_speed_ <= 0.0) fail("reference speed must be positive");
}

}  // namespace depopt::noise
