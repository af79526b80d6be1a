#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "depopt/airframe.hpp"
#include "depopt/common.hpp"

namespace depopt::traj {

// Departure definition: runway threshold to terminal fix. Headings use the
// local planar frame (radians, counter-clockwise from +x).
struct SidDefinition {
  std::string name;
  Vec2 runway_start;
  double initial_heading = 0.0;              // rad
  double start_altitude = 35.0 * kFeet;      // m
  Vec2 terminal_fix;
  double terminal_altitude = 6000.0 * kFeet; // m
  double terminal_eas = 250.0 * kKnot;       // m/s
  std::string terminal_point_id;
};

// Ground-track decision variables: straight - turn - straight - turn plus a
// geometrically solved closing leg. Radii are signed, positive = left turn.
struct GroundTrackParams {
  double leg1_length = 0.0;   // m
  double radius1 = 0.0;       // m, signed
  double mid_heading = 0.0;   // rad
  double leg2_length = 0.0;   // m
  double radius2 = 0.0;       // m, signed
};

struct TrackPoint {
  Vec2 pos;
  double heading = 0.0;
  double radius = 0.0;  // signed turn radius, 0 on straights
};

class GroundTrack {
 public:
  struct Leg {
    bool is_arc = false;
    Vec2 start;
    double heading_in = 0.0;
    double length = 0.0;
    double radius = 0.0;  // signed, arcs only
    Vec2 center;          // arcs only
    double theta_in = 0.0;  // arcs: polar angle of start about center
  };

  struct Vertex {
    Vec2 pos;
    int leg = 0;
    double radius = 0.0;
  };

  static GroundTrack infeasible(double violation_m);
  static GroundTrack from_legs(std::vector<Leg> legs);

  bool feasible() const { return feasible_; }
  double violation() const { return violation_m_; }
  double length() const { return length_; }
  const std::vector<Leg>& legs() const { return legs_; }

  // Point at arc length s; beyond the track the final heading is extended.
  TrackPoint at(double s) const;
  Vec2 end_point() const;
  double end_heading() const;

  std::vector<Vertex> polyline(double max_spacing) const;

 private:
  std::vector<Leg> legs_;
  double length_ = 0.0;
  bool feasible_ = false;
  double violation_m_ = 0.0;
};

// Builds the five-parameter track ending exactly on the terminal fix. The
// closing leg must leave the second arc tangentially; when the fix lies
// inside the second turn circle the result is infeasible and carries the
// miss distance for constraint handling.
GroundTrack synthesize_track(const SidDefinition& sid, const GroundTrackParams& p,
                             double min_turn_radius);

double eas_to_tas(double v_eas, double rho, double rho0);
double tas_to_eas(double v_tas, double rho, double rho0);

// Signed coordinated-turn bank angle; throws for radius 0.
double bank_angle(double v_tas, double radius);

struct BankLimitBand {
  double min_altitude = 0.0;  // m, band applies from here up to the next band
  double max_bank = 0.0;      // rad
};
using BankLimitProfile = std::vector<BankLimitBand>;

double max_bank_at(const BankLimitProfile& profile, double h);

// Controls for the climb segments after cutback. Segment 1 is always flown
// at full take-off thrust holding the initial climb speed up to the cutback
// altitude; the remaining nine segments carry (throttle, flight path angle)
// pairs and are laid out over equal fractions of the remaining track length.
struct VerticalProfileParams {
  static constexpr int kControlledSegments = 9;
  std::array<double, kControlledSegments> throttle{};
  std::array<double, kControlledSegments> flight_path_angle{};  // rad, >= 0
};

struct TrajectorySample {
  double t = 0.0;       // s
  double x = 0.0;       // m
  double y = 0.0;       // m
  double s = 0.0;       // m along track
  double h = 0.0;       // m
  double v_eas = 0.0;   // m/s
  double v_tas = 0.0;   // m/s
  double weight = 0.0;  // N
  double thrust = 0.0;  // N
  double gamma = 0.0;   // rad
  double bank = 0.0;    // rad, signed
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double fuel_burned = 0.0;  // kg
  double flight_time = 0.0;  // s
};

enum class IntegrationStatus { ok, monotonicity_infeasible, timeout };

struct IntegrationResult {
  IntegrationStatus status = IntegrationStatus::ok;
  double violation = 0.0;
  Trajectory trajectory;  // partial when status != ok

  bool ok() const { return status == IntegrationStatus::ok; }
};

struct IntegratorConfig {
  double time_step = 0.5;              // s
  double event_time_tolerance = 1e-9;  // s
  double max_flight_time = 1500.0;     // s
  double cutback_altitude = 800.0 * kFeet;  // m
  double nadp2_climb_gamma = 0.06;     // rad, post-cutback fixed climb
  double max_gamma = 0.21;             // rad, hard model cap (< 15 deg)
  double altitude_ceiling = 10500.0;   // m, climb forced level above this
};

// Integrates the departure along the track. `profile` selects the
// nine-segment controlled climb; nullptr flies the fixed noise-abatement
// procedure (full thrust holding V2+10 to the cutback altitude, cutback and
// acceleration at a moderate climb angle, flap retraction on schedule, then
// speed-hold climb to the terminal conditions). The flight ends at the later
// of reaching the terminal conditions and the track end, holding altitude
// and speed once both terminal conditions are met.
IntegrationResult integrate_departure(const airframe::AircraftType& ac,
                                      const airframe::Atmosphere& atm, const SidDefinition& sid,
                                      const GroundTrack& track,
                                      const VerticalProfileParams* profile,
                                      const IntegratorConfig& cfg);

// 0 when |bank| stays under the altitude-dependent limit, otherwise the
// largest exceedance in radians.
double check_bank_limit(const Trajectory& trajectory, const BankLimitProfile& profile);

}  // namespace depopt::traj
