#include "depopt/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace depopt::traj {

namespace {

double mod_2pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a;
}

}  // namespace

GroundTrack GroundTrack::infeasible(double violation_m) {
  GroundTrack t;
  t.feasible_ = false;
  t.violation_m_ = violation_m;
  return t;
}

GroundTrack GroundTrack::from_legs(std::vector<Leg> legs) {
  GroundTrack t;
  t.legs_ = std::move(legs);
  t.feasible_ = true;
  for (const auto& leg : t.legs_) t.length_ += leg.length;
  return t;
}

TrackPoint GroundTrack::at(double s) const {
  if (legs_.empty()) return {};
  double remaining = std::max(0.0, s);
  for (const auto& leg : legs_) {
    if (remaining <= leg.length || &leg == &legs_.back()) {
      const double d = std::min(remaining, leg.length);
      if (!leg.is_arc) {
        TrackPoint p;
        p.pos = leg.start + unit_from_heading(leg.heading_in) * d;
        p.heading = leg.heading_in;
        p.radius = 0.0;
        if (remaining > leg.length)  // straight extension past the track end
          p.pos = p.pos + unit_from_heading(leg.heading_in) * (remaining - leg.length);
        return p;
      }
      const double dir = leg.radius > 0.0 ? 1.0 : -1.0;
      const double r_abs = std::abs(leg.radius);
      const double theta = leg.theta_in + dir * d / r_abs;
      TrackPoint p;
      p.pos = leg.center + unit_from_heading(theta) * r_abs;
      p.heading = wrap_angle(theta + dir * M_PI / 2.0);
      p.radius = leg.radius;
      if (remaining > leg.length) {
        p.pos = p.pos + unit_from_heading(p.heading) * (remaining - leg.length);
        p.radius = 0.0;
      }
      return p;
    }
    remaining -= leg.length;
  }
  return {};
}

Vec2 GroundTrack::end_point() const { return at(length_).pos; }

double GroundTrack::end_heading() const { return at(length_).heading; }

std::vector<GroundTrack::Vertex> GroundTrack::polyline(double max_spacing) const {
  std::vector<Vertex> out;
  if (legs_.empty()) return out;
  max_spacing = std::max(1.0, max_spacing);
  double s0 = 0.0;
  for (std::size_t li = 0; li < legs_.size(); ++li) {
    const auto& leg = legs_[li];
    const int n = std::max(1, static_cast<int>(std::ceil(leg.length / max_spacing)));
    for (int i = 0; i < n; ++i) {
      const TrackPoint p = at(s0 + leg.length * i / n);
      out.push_back({p.pos, static_cast<int>(li), leg.is_arc ? leg.radius : 0.0});
    }
    s0 += leg.length;
  }
  const TrackPoint last = at(length_);
  out.push_back({last.pos, static_cast<int>(legs_.size()) - 1,
                 legs_.back().is_arc ? legs_.back().radius : 0.0});
  return out;
}

GroundTrack synthesize_track(const SidDefinition& sid, const GroundTrackParams& p,
                             double min_turn_radius) {
  if (p.leg1_length < 0.0 || p.leg2_length < 0.0)
    throw std::domain_error("straight leg lengths must be non-negative");
  if (std::abs(p.radius1) < min_turn_radius || std::abs(p.radius2) < min_turn_radius)
    throw std::domain_error("turn radius below configured minimum " +
                            std::to_string(min_turn_radius) + " m");

  std::vector<GroundTrack::Leg> legs;
  const double psi0 = sid.initial_heading;

  GroundTrack::Leg leg1;
  leg1.start = sid.runway_start;
  leg1.heading_in = psi0;
  leg1.length = p.leg1_length;
  legs.push_back(leg1);
  Vec2 pos = leg1.start + unit_from_heading(psi0) * leg1.length;

  // First turn: onto the intermediate heading.
  const double d1 = p.radius1 > 0.0 ? 1.0 : -1.0;
  const double r1 = std::abs(p.radius1);
  const double sweep1 = d1 > 0.0 ? mod_2pi(p.mid_heading - psi0) : mod_2pi(psi0 - p.mid_heading);
  GroundTrack::Leg arc1;
  arc1.is_arc = true;
  arc1.start = pos;
  arc1.heading_in = psi0;
  arc1.radius = p.radius1;
  arc1.center = pos + unit_from_heading(psi0 + d1 * M_PI / 2.0) * r1;
  arc1.theta_in = psi0 - d1 * M_PI / 2.0;
  arc1.length = r1 * sweep1;
  legs.push_back(arc1);
  const double theta1_out = arc1.theta_in + d1 * sweep1;
  pos = arc1.center + unit_from_heading(theta1_out) * r1;

  GroundTrack::Leg leg2;
  leg2.start = pos;
  leg2.heading_in = wrap_angle(p.mid_heading);
  leg2.length = p.leg2_length;
  legs.push_back(leg2);
  pos = pos + unit_from_heading(p.mid_heading) * p.leg2_length;

  // Second turn: sweep until a tangent line reaches the terminal fix.
  const double d2 = p.radius2 > 0.0 ? 1.0 : -1.0;
  const double r2 = std::abs(p.radius2);
  GroundTrack::Leg arc2;
  arc2.is_arc = true;
  arc2.start = pos;
  arc2.heading_in = wrap_angle(p.mid_heading);
  arc2.radius = p.radius2;
  arc2.center = pos + unit_from_heading(p.mid_heading + d2 * M_PI / 2.0) * r2;
  arc2.theta_in = p.mid_heading - d2 * M_PI / 2.0;

  const Vec2 to_fix = sid.terminal_fix - arc2.center;
  const double dist = to_fix.norm();
  if (dist < r2) return GroundTrack::infeasible(r2 - dist);

  const double phi = std::atan2(to_fix.y, to_fix.x);
  const double alpha = std::acos(std::clamp(r2 / dist, -1.0, 1.0));
  const double theta_exit = d2 > 0.0 ? phi - alpha : phi + alpha;
  const double sweep2 = d2 > 0.0 ? mod_2pi(theta_exit - arc2.theta_in)
                                 : mod_2pi(arc2.theta_in - theta_exit);
  arc2.length = r2 * sweep2;
  legs.push_back(arc2);

  const Vec2 tangent_point = arc2.center + unit_from_heading(theta_exit) * r2;
  GroundTrack::Leg closing;
  closing.start = tangent_point;
  closing.heading_in = wrap_angle(theta_exit + d2 * M_PI / 2.0);
  closing.length = (sid.terminal_fix - tangent_point).norm();
  legs.push_back(closing);

  return GroundTrack::from_legs(std::move(legs));
}

double eas_to_tas(double v_eas, double rho, double rho0) {
  if (rho <= 0.0) throw std::domain_error("density must be positive");
  return v_eas * std::sqrt(rho0 / rho);
}

double tas_to_eas(double v_tas, double rho, double rho0) {
  if (rho <= 0.0) throw std::domain_error("density must be positive");
  return v_tas * std::sqrt(rho / rho0);
}

double bank_angle(double v_tas, double radius) {
  if (radius == 0.0) throw std::domain_error("bank angle undefined for zero turn radius");
  const double mu = std::atan(v_tas * v_tas / (kGravity * std::abs(radius)));
  return radius > 0.0 ? mu : -mu;
}

double max_bank_at(const BankLimitProfile& profile, double h) {
  if (profile.empty()) throw std::domain_error("empty bank limit profile");
  double limit = profile.front().max_bank;
  for (const auto& band : profile) {
    if (h >= band.min_altitude) limit = band.max_bank;
  }
  return limit;
}

double check_bank_limit(const Trajectory& trajectory, const BankLimitProfile& profile) {
  double worst = 0.0;
  for (const auto& s : trajectory.samples)
    worst = std::max(worst, std::abs(s.bank) - max_bank_at(profile, s.h));
  return std::max(0.0, worst);
}

// ---------------------------------------------------------------------------
// Departure integration
// ---------------------------------------------------------------------------

namespace {

// State vector: equivalent airspeed, track distance, altitude, weight,
// fuel burned, and the accumulated speed deficit used as the monotonicity
// violation measure.
struct State {
  double v_eas, s, h, weight, fuel, deficit;

  State axpy(double a, const State& d) const {
    return {v_eas + a * d.v_eas, s + a * d.s, h + a * d.h,
            weight + a * d.weight, fuel + a * d.fuel, deficit + a * d.deficit};
  }
};

enum class GammaMode { fixed, hold_speed, level };

struct Controls {
  double throttle = 0.0;
  GammaMode gamma_mode = GammaMode::fixed;
  double gamma = 0.0;
  bool thrust_balance = false;  // thrust set to drag (terminal hold)
};

enum class Phase { initial_climb, segment, nadp2_accel, nadp2_speed_hold, level_accel, hold };

struct Derivs {
  State d;
  double thrust;
  double gamma;
};

class DepartureIntegrator {
 public:
  DepartureIntegrator(const airframe::AircraftType& ac, const airframe::Atmosphere& atm,
                      const SidDefinition& sid, const GroundTrack& track,
                      const VerticalProfileParams* profile, const IntegratorConfig& cfg)
      : ac_(ac), atm_(atm), sid_(sid), track_(track), profile_(profile), cfg_(cfg) {}

  IntegrationResult run();

 private:
  Derivs derivatives(const State& y, const Controls& c) const;
  State rk4_step(const State& y, double dt, const Controls& c) const;
  Controls controls_for_phase() const;
  bool conditions_met(const State& y) const {
    return y.h >= sid_.terminal_altitude && y.v_eas >= sid_.terminal_eas;
  }
  // Phase-exit test; returns a positive value once the exit condition holds.
  double exit_margin(const State& y) const;
  void advance_phase(const State& y);
  void record(double t, const State& y, const Derivs& d);

  const airframe::AircraftType& ac_;
  const airframe::Atmosphere& atm_;
  const SidDefinition& sid_;
  const GroundTrack& track_;
  const VerticalProfileParams* profile_;
  const IntegratorConfig& cfg_;

  Phase phase_ = Phase::initial_climb;
  int segment_ = 0;
  std::vector<double> segment_bounds_;  // track distances ending segments 2..9
  Trajectory out_;
};

Derivs DepartureIntegrator::derivatives(const State& y, const Controls& c) const {
  const double rho0 = atm_.sea_level_density;
  const double h = std::clamp(y.h, 0.0, airframe::kMaxAltitude);
  const double rho = airframe::density_at(atm_, h);
  const double drho = airframe::density_gradient_at(atm_, h);
  const double v_tas = eas_to_tas(y.v_eas, rho, rho0);
  const double sqrt_ratio = std::sqrt(rho / rho0);

  const double band_lo = ac_.flap_schedule.front().min_eas;
  const double band_hi = ac_.flap_schedule.back().max_eas;
  const double v_polar = std::clamp(y.v_eas, band_lo, band_hi);
  const double d = airframe::drag(ac_, h, v_polar, y.weight, atm_);

  double thrust;
  if (c.thrust_balance) {
    thrust = std::clamp(d, 0.0, airframe::available_thrust(ac_, 1.0, h, v_tas, atm_));
  } else {
    thrust = airframe::available_thrust(ac_, c.throttle, h, v_tas, atm_);
  }

  // dV_eas/dt = sqrt(rho/rho0) * [ g0 (T-D)/W - sin(gamma) * q_term ] with
  // q_term = g0 - drho/dh * V_eas^2 * rho0 / (2 rho^2); q_term > g0 in a
  // standard atmosphere, so the speed rate is strictly decreasing in gamma.
  const double accel_level = kGravity * (thrust - d) / y.weight;
  const double q_term = kGravity - drho * y.v_eas * y.v_eas * rho0 / (2.0 * rho * rho);

  double gamma = 0.0;
  switch (c.gamma_mode) {
    case GammaMode::fixed:
      gamma = std::clamp(c.gamma, 0.0, cfg_.max_gamma);
      break;
    case GammaMode::hold_speed:
      gamma = std::asin(std::clamp(accel_level / q_term, 0.0, std::sin(cfg_.max_gamma)));
      break;
    case GammaMode::level:
      gamma = 0.0;
      break;
  }
  if (y.h >= cfg_.altitude_ceiling) gamma = 0.0;

  const double v_eas_dot_raw = sqrt_ratio * (accel_level - std::sin(gamma) * q_term);

  Derivs out;
  out.thrust = thrust;
  out.gamma = gamma;
  out.d.v_eas = std::max(0.0, v_eas_dot_raw);
  out.d.deficit = std::max(0.0, -v_eas_dot_raw);
  out.d.s = v_tas * std::cos(gamma);
  out.d.h = v_tas * std::sin(gamma);
  const double mdot = airframe::fuel_flow(ac_, thrust, v_tas, h);
  out.d.weight = -mdot * kGravity;
  out.d.fuel = mdot;
  return out;
}

State DepartureIntegrator::rk4_step(const State& y, double dt, const Controls& c) const {
  const State k1 = derivatives(y, c).d;
  const State k2 = derivatives(y.axpy(dt / 2.0, k1), c).d;
  const State k3 = derivatives(y.axpy(dt / 2.0, k2), c).d;
  const State k4 = derivatives(y.axpy(dt, k3), c).d;
  State sum = k1;
  sum = sum.axpy(2.0, k2);
  sum = sum.axpy(2.0, k3);
  sum = sum.axpy(1.0, k4);
  return y.axpy(dt / 6.0, sum);
}

Controls DepartureIntegrator::controls_for_phase() const {
  Controls c;
  switch (phase_) {
    case Phase::initial_climb:
      c.throttle = 1.0;
      c.gamma_mode = GammaMode::hold_speed;
      break;
    case Phase::segment:
      c.throttle = profile_->throttle[static_cast<std::size_t>(segment_)];
      c.gamma_mode = GammaMode::fixed;
      c.gamma = profile_->flight_path_angle[static_cast<std::size_t>(segment_)];
      break;
    case Phase::nadp2_accel:
      c.throttle = 0.0;
      c.gamma_mode = GammaMode::fixed;
      c.gamma = cfg_.nadp2_climb_gamma;
      break;
    case Phase::nadp2_speed_hold:
      c.throttle = 0.0;
      c.gamma_mode = GammaMode::hold_speed;
      break;
    case Phase::level_accel:
      c.throttle = 0.0;
      c.gamma_mode = GammaMode::level;
      break;
    case Phase::hold:
      c.gamma_mode = GammaMode::level;
      c.thrust_balance = true;
      break;
  }
  return c;
}

double DepartureIntegrator::exit_margin(const State& y) const {
  switch (phase_) {
    case Phase::initial_climb:
      return y.h - cfg_.cutback_altitude;
    case Phase::segment: {
      double margin = -1.0;
      if (segment_ + 1 < VerticalProfileParams::kControlledSegments &&
          static_cast<std::size_t>(segment_) < segment_bounds_.size())
        margin = y.s - segment_bounds_[static_cast<std::size_t>(segment_)];
      // Entering the terminal hold is also a control switch.
      const double hold =
          std::min(y.h - sid_.terminal_altitude, y.v_eas - sid_.terminal_eas);
      return std::max(margin, hold);
    }
    case Phase::nadp2_accel:
      return std::max(y.v_eas - sid_.terminal_eas, y.h - sid_.terminal_altitude);
    case Phase::nadp2_speed_hold:
      return y.h - sid_.terminal_altitude;
    case Phase::level_accel:
      return y.v_eas - sid_.terminal_eas;
    case Phase::hold:
      return y.s - track_.length();
  }
  return -1.0;
}

void DepartureIntegrator::advance_phase(const State& y) {
  switch (phase_) {
    case Phase::initial_climb:
      if (profile_ != nullptr) {
        // Remaining track split evenly across the nine controlled segments.
        segment_bounds_.clear();
        const double remaining = std::max(track_.length() - y.s, 0.0);
        for (int j = 1; j < VerticalProfileParams::kControlledSegments; ++j)
          segment_bounds_.push_back(y.s + remaining * j /
                                    VerticalProfileParams::kControlledSegments);
        segment_ = 0;
        phase_ = Phase::segment;
      } else {
        phase_ = Phase::nadp2_accel;
      }
      break;
    case Phase::segment:
      if (conditions_met(y)) {
        phase_ = Phase::hold;
      } else if (segment_ + 1 < VerticalProfileParams::kControlledSegments) {
        ++segment_;
      }
      break;
    case Phase::nadp2_accel:
      phase_ = (y.v_eas >= sid_.terminal_eas) ? Phase::nadp2_speed_hold : Phase::level_accel;
      if (conditions_met(y)) phase_ = Phase::hold;
      break;
    case Phase::nadp2_speed_hold:
    case Phase::level_accel:
      phase_ = Phase::hold;
      break;
    case Phase::hold:
      break;
  }
}

void DepartureIntegrator::record(double t, const State& y, const Derivs& d) {
  const TrackPoint p = track_.at(y.s);
  TrajectorySample smp;
  smp.t = t;
  smp.x = p.pos.x;
  smp.y = p.pos.y;
  smp.s = y.s;
  smp.h = y.h;
  smp.v_eas = y.v_eas;
  const double rho = airframe::density_at(atm_, std::clamp(y.h, 0.0, airframe::kMaxAltitude));
  smp.v_tas = eas_to_tas(y.v_eas, rho, atm_.sea_level_density);
  smp.weight = y.weight;
  smp.thrust = d.thrust;
  smp.gamma = d.gamma;
  smp.bank = p.radius != 0.0 ? bank_angle(smp.v_tas, p.radius) : 0.0;
  out_.samples.push_back(smp);
}

IntegrationResult DepartureIntegrator::run() {
  State y{ac_.v2_plus10, 0.0, sid_.start_altitude, ac_.reference_mass * kGravity, 0.0, 0.0};
  double t = 0.0;

  // Flap band edges are control discontinuities for the drag polar.
  std::vector<double> flap_edges;
  for (std::size_t i = 1; i < ac_.flap_schedule.size(); ++i)
    flap_edges.push_back(ac_.flap_schedule[i].min_eas);

  // Enter the proper phase when conditions already hold at brake release.
  while (exit_margin(y) >= 0.0 && phase_ != Phase::hold) advance_phase(y);

  Controls controls = controls_for_phase();
  record(t, y, derivatives(y, controls));

  auto done = [&](const State& st) { return conditions_met(st) && st.s >= track_.length(); };

  while (!done(y)) {
    if (t >= cfg_.max_flight_time) {
      IntegrationResult res;
      res.status = IntegrationStatus::timeout;
      res.violation = std::max(0.0, (sid_.terminal_altitude - y.h) / sid_.terminal_altitude) +
                      std::max(0.0, (sid_.terminal_eas - y.v_eas) / sid_.terminal_eas) +
                      std::max(0.0, (track_.length() - y.s) / std::max(1.0, track_.length())) +
                      y.deficit;
      out_.fuel_burned = y.fuel;
      out_.flight_time = t;
      res.trajectory = std::move(out_);
      return res;
    }

    const double dt = std::min(cfg_.time_step, cfg_.max_flight_time - t);
    State trial = rk4_step(y, dt, controls);

    // Event test: phase exit, completion, or a flap-band crossing anywhere
    // inside the step. All monitored quantities are non-decreasing.
    auto event_hit = [&](const State& st) {
      if (exit_margin(st) >= 0.0) return true;
      if (done(st)) return true;
      for (double edge : flap_edges)
        if (y.v_eas < edge && st.v_eas >= edge) return true;
      return false;
    };

    if (event_hit(trial)) {
      double lo = 0.0, hi = dt;
      while (hi - lo > cfg_.event_time_tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (event_hit(rk4_step(y, mid, controls)))
          hi = mid;
        else
          lo = mid;
      }
      trial = rk4_step(y, hi, controls);
      y = trial;
      t += hi;
      record(t, y, derivatives(y, controls));
      while (exit_margin(y) >= 0.0 && !done(y)) {
        advance_phase(y);
        controls = controls_for_phase();
      }
      continue;
    }

    y = trial;
    t += dt;
    record(t, y, derivatives(y, controls));
  }

  out_.fuel_burned = y.fuel;
  out_.flight_time = t;

  IntegrationResult res;
  if (y.deficit > 1e-9) {
    res.status = IntegrationStatus::monotonicity_infeasible;
    res.violation = y.deficit;
  }
  res.trajectory = std::move(out_);
  return res;
}

}  // namespace

IntegrationResult integrate_departure(const airframe::AircraftType& ac,
                                      const airframe::Atmosphere& atm, const SidDefinition& sid,
                                      const GroundTrack& track,
                                      const VerticalProfileParams* profile,
                                      const IntegratorConfig& cfg) {
  if (!track.feasible()) throw std::domain_error("cannot integrate an infeasible ground track");
  DepartureIntegrator integrator(ac, atm, sid, track, profile, cfg);
  return integrator.run();
}

}  // namespace depopt::traj
