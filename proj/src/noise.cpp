#include "depopt/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace depopt::noise {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double PopulationGrid::total() const {
  CompensatedSum sum;
  for (double p : population) sum.add(p);
  return sum.value();
}

std::int64_t OperationCounts::total() const {
  std::int64_t n = 0;
  for (const auto& c : counts) n += c[0] + c[1] + c[2];
  return n;
}

double weighted_movement_factor(const std::array<int, 3>& movements) {
  double f = 0.0;
  for (int t = 0; t < 3; ++t)
    f += movements[static_cast<std::size_t>(t)] *
         std::pow(10.0, kPeriodWeightsDb[static_cast<std::size_t>(t)] / 10.0);
  return f;
}

namespace {

struct PathSegment {
  double ax, ay, ah;
  double ex, ey, eh;  // deltas to the next sample
  double inv_len2;    // 0 for degenerate segments
  double thrust_a, thrust_d;
  double vtas_a, vtas_d;
};

struct SegmentExposure {
  double level;
  double slant2;
};

// Exposure at the closest point of one segment: NPD level at the local
// thrust and slant distance, minus lateral attenuation, plus the clamped
// speed/duration correction.
SegmentExposure segment_exposure(const PathSegment& s, const NpdTable& npd, double inv_vref,
                                 double cx, double cy) {
  double u = 0.0;
  if (s.inv_len2 > 0.0) {
    u = ((cx - s.ax) * s.ex + (cy - s.ay) * s.ey - s.ah * s.eh) * s.inv_len2;
    u = std::clamp(u, 0.0, 1.0);
  }
  const double dx = s.ax + u * s.ex - cx;
  const double dy = s.ay + u * s.ey - cy;
  const double ph = s.ah + u * s.eh;
  const double ground2 = dx * dx + dy * dy;
  const double ground = std::sqrt(ground2);
  const double slant2 = ground2 + ph * ph;
  const double slant = std::max(1.0, std::sqrt(slant2));
  const double thrust = s.thrust_a + u * s.thrust_d;
  const double v_tas = s.vtas_a + u * s.vtas_d;
  const double elevation = std::atan2(std::max(0.0, ph), ground);
  double level = npd.sel_at(thrust, slant);
  level -= npd.lateral()(ground, elevation);
  level += std::clamp(-10.0 * std::log10(std::max(v_tas, 1.0) * inv_vref), -5.0, 5.0);
  return {level, slant2};
}

}  // namespace

SelGrid sel_field(const traj::Trajectory& trajectory, const airframe::AircraftType& ac,
                  const GridGeometry& geometry) {
  const auto& samples = trajectory.samples;
  if (samples.empty()) throw std::invalid_argument("trajectory has no samples");
  const NpdTable& npd = ac.npd_table;
  const double inv_vref = 1.0 / npd.reference_speed();

  std::vector<PathSegment> segments;
  if (samples.size() == 1) {
    const auto& a = samples.front();
    segments.push_back({a.x, a.y, a.h, 0, 0, 0, 0.0, a.thrust, 0.0, a.v_tas, 0.0});
  } else {
    segments.reserve(samples.size() - 1);
    for (std::size_t j = 0; j + 1 < samples.size(); ++j) {
      const auto& a = samples[j];
      const auto& b = samples[j + 1];
      PathSegment s;
      s.ax = a.x;
      s.ay = a.y;
      s.ah = a.h;
      s.ex = b.x - a.x;
      s.ey = b.y - a.y;
      s.eh = b.h - a.h;
      const double len2 = s.ex * s.ex + s.ey * s.ey + s.eh * s.eh;
      s.inv_len2 = len2 > 0.0 ? 1.0 / len2 : 0.0;
      s.thrust_a = a.thrust;
      s.thrust_d = b.thrust - a.thrust;
      s.vtas_a = a.v_tas;
      s.vtas_d = b.v_tas - a.v_tas;
      segments.push_back(s);
    }
  }

  // A segment at squared distance beyond this bound cannot beat `best`:
  // levels fall by at least min_distance_slope per decade of distance up to
  // the table edge, the duration correction adds at most +5 dB and lateral
  // attenuation only subtracts.
  const double c_min = npd.min_distance_slope_per_decade();
  const double t_max = npd.max_thrust();
  const double d_table_max = npd.max_distance();
  auto skip_bound2 = [&](double d_best, double best_level) {
    const double head = npd.sel_at(t_max, d_best) + 5.0 - best_level;
    if (head <= 0.0) return d_best * d_best;
    const double thr = d_best * std::pow(10.0, head / c_min);
    if (thr > d_table_max) return std::numeric_limits<double>::infinity();
    return thr * thr;
  };

  SelGrid out;
  out.geometry = geometry;
  out.sel_dba.resize(geometry.size());

  std::vector<double> dist2(segments.size());
  for (int iy = 0; iy < geometry.ny; ++iy) {
    for (int ix = 0; ix < geometry.nx; ++ix) {
      const Vec2 cell = geometry.cell_center(ix, iy);
      // Closest-approach scan, transcendental-free.
      std::size_t nearest = 0;
      double nearest2 = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < segments.size(); ++j) {
        const auto& s = segments[j];
        double u = 0.0;
        if (s.inv_len2 > 0.0) {
          u = ((cell.x - s.ax) * s.ex + (cell.y - s.ay) * s.ey - s.ah * s.eh) * s.inv_len2;
          u = std::clamp(u, 0.0, 1.0);
        }
        const double dx = s.ax + u * s.ex - cell.x;
        const double dy = s.ay + u * s.ey - cell.y;
        const double ph = s.ah + u * s.eh;
        dist2[j] = dx * dx + dy * dy + ph * ph;
        if (dist2[j] < nearest2) {
          nearest2 = dist2[j];
          nearest = j;
        }
      }
      const auto first = segment_exposure(segments[nearest], npd, inv_vref, cell.x, cell.y);
      double best = first.level;
      double bound2 = skip_bound2(std::max(1.0, std::sqrt(nearest2)), best);
      for (std::size_t j = 0; j < segments.size(); ++j) {
        if (j == nearest || dist2[j] > bound2) continue;
        const auto e = segment_exposure(segments[j], npd, inv_vref, cell.x, cell.y);
        if (e.level > best) {
          best = e.level;
          bound2 = skip_bound2(std::max(1.0, std::sqrt(nearest2)), best);
        }
      }
      out.sel_dba[geometry.index(ix, iy)] = static_cast<float>(best);
    }
  }
  return out;
}

double lden_cell(const std::vector<double>& sel_by_route_type, const OperationCounts& counts,
                 double period_seconds) {
  const std::size_t n =
      static_cast<std::size_t>(counts.num_routes) * static_cast<std::size_t>(counts.num_types);
  if (sel_by_route_type.size() != n)
    throw std::invalid_argument("SEL values do not match the counts layout");
  CompensatedSum energy;
  for (std::size_t ki = 0; ki < n; ++ki) {
    const auto& a = counts.counts[ki];
    for (int t = 0; t < 3; ++t) {
      if (a[static_cast<std::size_t>(t)] == 0) continue;
      energy.add(a[static_cast<std::size_t>(t)] *
                 std::pow(10.0, (sel_by_route_type[ki] +
                                 kPeriodWeightsDb[static_cast<std::size_t>(t)]) /
                                    10.0));
    }
  }
  if (energy.value() <= 0.0) return kNegInf;
  return 10.0 * std::log10(energy.value()) - 10.0 * std::log10(period_seconds);
}

double percent_annoyed(double lden_dba) {
  if (!(lden_dba > 37.0)) return 0.0;  // also covers the unexposed sentinel
  const double d = lden_dba - 37.0;
  const double pa = 8.588e-6 * d * d * d + 1.777e-2 * d * d + 1.221 * d;
  return std::min(pa, 100.0);
}

std::vector<double> accumulate_energy(const GridGeometry& geometry,
                                      const std::vector<EnergyTerm>& terms) {
  std::vector<double> energy(geometry.size(), 0.0);
  for (const auto& term : terms) {
    if (term.grid == nullptr) throw std::invalid_argument("null SEL grid");
    if (!(term.grid->geometry == geometry))
      throw std::invalid_argument("SEL grid geometry mismatch");
    if (term.factor == 0.0) continue;
    const auto& sel = term.grid->sel_dba;
    for (std::size_t c = 0; c < energy.size(); ++c)
      energy[c] += term.factor * std::pow(10.0, static_cast<double>(sel[c]) / 10.0);
  }
  return energy;
}

std::vector<double> lden_from_energy(const std::vector<double>& energy, double period_seconds) {
  std::vector<double> lden(energy.size(), kNegInf);
  const double norm = 10.0 * std::log10(period_seconds);
  for (std::size_t c = 0; c < energy.size(); ++c)
    if (energy[c] > 0.0) lden[c] = 10.0 * std::log10(energy[c]) - norm;
  return lden;
}

double people_annoyed_from_energy(const PopulationGrid& pop, const std::vector<double>& energy,
                                  double period_seconds) {
  if (energy.size() != pop.geometry.size())
    throw std::invalid_argument("energy grid does not match population geometry");
  const double norm = 10.0 * std::log10(period_seconds);
  CompensatedSum sum;
  for (std::size_t c = 0; c < energy.size(); ++c) {
    if (energy[c] <= 0.0 || pop.population[c] <= 0.0) continue;
    const double lden = 10.0 * std::log10(energy[c]) - norm;
    sum.add(pop.population[c] * percent_annoyed(lden) / 100.0);
  }
  return sum.value();
}

double people_annoyed(const PopulationGrid& pop, const std::vector<const SelGrid*>& sel_grids,
                      const OperationCounts& counts, double period_seconds) {
  const std::size_t n =
      static_cast<std::size_t>(counts.num_routes) * static_cast<std::size_t>(counts.num_types);
  if (sel_grids.size() != n)
    throw std::invalid_argument("SEL grid list does not match the counts layout");
  std::vector<EnergyTerm> terms;
  terms.reserve(n);
  for (std::size_t ki = 0; ki < n; ++ki)
    terms.push_back({sel_grids[ki], weighted_movement_factor(counts.counts[ki])});
  const auto energy = accumulate_energy(pop.geometry, terms);
  return people_annoyed_from_energy(pop, energy, period_seconds);
}

std::vector<std::uint8_t> contour_cells(const std::vector<double>& lden, double threshold_dba) {
  std::vector<std::uint8_t> mask(lden.size(), 0);
  for (std::size_t c = 0; c < lden.size(); ++c) mask[c] = lden[c] >= threshold_dba ? 1 : 0;
  return mask;
}

}  // namespace depopt::noise
