//! Point-mass UAV motion: waypoint steering, climb profiles, and the six
//! maneuver classes layered on top of normal routing.

use alloc::vec::Vec;

use crate::scenario::ScenarioConfig;

/// The action classes a deconfliction decision can command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ManeuverClass {
    NoChange,
    AltUp10,
    AltDown10,
    LeftTurn,
    RightTurn,
    SlowDown,
}

impl ManeuverClass {
    pub const ALL: [ManeuverClass; 6] = [
        ManeuverClass::NoChange,
        ManeuverClass::AltUp10,
        ManeuverClass::AltDown10,
        ManeuverClass::LeftTurn,
        ManeuverClass::RightTurn,
        ManeuverClass::SlowDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManeuverClass::NoChange => "NoChange",
            ManeuverClass::AltUp10 => "AltUp10",
            ManeuverClass::AltDown10 => "AltDown10",
            ManeuverClass::LeftTurn => "LeftTurn",
            ManeuverClass::RightTurn => "RightTurn",
            ManeuverClass::SlowDown => "SlowDown",
        }
    }

    pub fn from_name(s: &str) -> Option<ManeuverClass> {
        Self::ALL.iter().copied().find(|c| c.name() == s)
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap()
    }
}

/// An active maneuver command on one UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverEffect {
    pub class: ManeuverClass,
    pub started_at_ms: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavStatus {
    Nominal,
    Maneuvering,
    Degraded,
}

/// One aircraft, modeled as a point mass on a 2-D arena with a scalar
/// altitude. The velocity vector is always
/// `(speed*cos(heading), speed*sin(heading), climb_rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: u32,
    pub pos: (f64, f64, f64),
    pub speed: f64,
    /// Radians in [0, 2pi), x east / y north, counterclockwise positive.
    pub heading: f64,
    pub climb_rate: f64,
    pub target_altitude: f64,
    pub itinerary: Vec<(f64, f64)>,
    pub cursor: usize,
    pub base_speed: f64,
    pub maneuver: Option<ManeuverEffect>,
    pub status: UavStatus,
    pub deliveries_done: u64,
}

impl UavState {
    pub fn velocity(&self) -> (f64, f64, f64) {
        (
            self.speed * libm::cos(self.heading),
            self.speed * libm::sin(self.heading),
            self.climb_rate,
        )
    }

    pub fn waypoint(&self) -> (f64, f64) {
        self.itinerary[self.cursor % self.itinerary.len()]
    }

    fn bearing_to_waypoint(&self) -> f64 {
        let (wx, wy) = self.waypoint();
        wrap_angle(libm::atan2(wy - self.pos.1, wx - self.pos.0))
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut a = a % two_pi;
    if a < 0.0 {
        a += two_pi;
    }
    a
}

/// Signed smallest rotation taking `from` onto `to`, in (-pi, pi].
fn angle_diff(to: f64, from: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let mut d = (to - from) % (2.0 * pi);
    if d > pi {
        d -= 2.0 * pi;
    }
    if d <= -pi {
        d += 2.0 * pi;
    }
    d
}

/// Advance one UAV by one kinematics substep.
///
/// Heading is steered toward the current waypoint at the configured turn
/// rate; an active turn maneuver instead steers toward the waypoint bearing
/// offset by the commanded course deviation. Altitude moves toward
/// `target_altitude` at the configured climb rate and snaps when within one
/// substep of it.
pub fn step_uav(state: &UavState, dt: f64, now_ms: u64, config: &ScenarioConfig) -> UavState {
    let mut s = state.clone();
    expire_maneuver(&mut s, now_ms, config);

    let turn_rate = config.turn_rate_deg_s.to_radians();
    let offset = config.turn_offset_deg.to_radians();
    let commanded = match s.maneuver.map(|m| m.class) {
        Some(ManeuverClass::LeftTurn) => wrap_angle(s.bearing_to_waypoint() + offset),
        Some(ManeuverClass::RightTurn) => wrap_angle(s.bearing_to_waypoint() - offset),
        _ => s.bearing_to_waypoint(),
    };
    let diff = angle_diff(commanded, s.heading);
    let max_turn = turn_rate * dt;
    let applied = diff.clamp(-max_turn, max_turn);
    s.heading = wrap_angle(s.heading + applied);

    s.pos.0 += s.speed * libm::cos(s.heading) * dt;
    s.pos.1 += s.speed * libm::sin(s.heading) * dt;

    // Waypoints are interior; clamping is a safety net only.
    s.pos.0 = s.pos.0.clamp(0.0, config.area_side);
    s.pos.1 = s.pos.1.clamp(0.0, config.area_side);

    if s.climb_rate != 0.0 {
        let dz = s.climb_rate * dt;
        if (s.target_altitude - s.pos.2).abs() <= dz.abs() + 1e-12 {
            s.pos.2 = s.target_altitude;
            s.climb_rate = 0.0;
        } else {
            s.pos.2 += dz;
        }
    }
    s
}

/// Drop an expired maneuver effect and restore nominal flight.
pub fn expire_maneuver(state: &mut UavState, now_ms: u64, config: &ScenarioConfig) {
    if let Some(m) = state.maneuver {
        if now_ms >= m.started_at_ms + m.duration_ms {
            state.maneuver = None;
            state.speed = state.base_speed;
            if state.status == UavStatus::Maneuvering {
                state.status = UavStatus::Nominal;
            }
            let _ = config;
        }
    }
}

/// Command a maneuver. A new command replaces any active effect.
pub fn apply_maneuver(
    state: &UavState,
    class: ManeuverClass,
    now_ms: u64,
    config: &ScenarioConfig,
) -> UavState {
    let mut s = state.clone();
    // Replacing an active SlowDown must not leave speed stuck low.
    s.speed = s.base_speed;
    match class {
        ManeuverClass::NoChange => {
            s.maneuver = None;
            return s;
        }
        ManeuverClass::AltUp10 => {
            s.target_altitude += 10.0;
            s.climb_rate = config.climb_rate;
        }
        ManeuverClass::AltDown10 => {
            s.target_altitude -= 10.0;
            s.climb_rate = -config.climb_rate;
        }
        ManeuverClass::LeftTurn | ManeuverClass::RightTurn => {}
        ManeuverClass::SlowDown => {
            s.speed = config.slowdown_factor * s.base_speed;
        }
    }
    s.maneuver = Some(ManeuverEffect {
        class,
        started_at_ms: now_ms,
        duration_ms: config.maneuver_duration_ms,
    });
    if s.status == UavStatus::Nominal {
        s.status = UavStatus::Maneuvering;
    }
    s
}

/// Check arrival at the current waypoint; on arrival the delivery counter
/// and the (cyclic) itinerary cursor advance.
pub fn advance_waypoint(state: &UavState, arrival_radius: f64) -> (UavState, bool) {
    let (wx, wy) = state.waypoint();
    let dx = wx - state.pos.0;
    let dy = wy - state.pos.1;
    if libm::sqrt(dx * dx + dy * dy) < arrival_radius {
        let mut s = state.clone();
        s.deliveries_done += 1;
        s.cursor = (s.cursor + 1) % s.itinerary.len();
        (s, true)
    } else {
        (state.clone(), false)
    }
}
