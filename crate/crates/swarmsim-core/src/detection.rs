//! Neighbor search, closest-point-of-approach forecasting, conflict
//! prediction, and loss-of-separation auditing.
//!
//! Separation is cylindrical: a loss is a pair simultaneously closer than
//! the horizontal threshold AND the vertical threshold (both strict).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::kinematics::{ManeuverClass, UavState};
use crate::scenario::{ScenarioConfig, WorldState};

/// Uniform 2-D grid over the arena; cells hold UAV ids keyed by
/// `floor(pos / cell_size)`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell_size: f64,
    cells: BTreeMap<(i64, i64), Vec<u32>>,
    positions: BTreeMap<u32, (f64, f64, f64)>,
}

pub const DEFAULT_CELL_SIZE: f64 = 100.0;

impl SpatialIndex {
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            libm::floor(x / self.cell_size) as i64,
            libm::floor(y / self.cell_size) as i64,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn build_index(uavs: &[UavState], cell_size: f64) -> SpatialIndex {
    let mut index = SpatialIndex {
        cell_size,
        cells: BTreeMap::new(),
        positions: BTreeMap::new(),
    };
    for u in uavs {
        let key = index.cell_of(u.pos.0, u.pos.1);
        index.cells.entry(key).or_default().push(u.id);
        index.positions.insert(u.id, u.pos);
    }
    index
}

fn dist3(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    let dz = a.2 - b.2;
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

/// Ids (excluding `ego`) whose 3-D distance to ego is at most `radius`,
/// ascending by id.
pub fn neighbors_within(index: &SpatialIndex, ego: &UavState, radius: f64) -> Vec<u32> {
    let reach = libm::ceil(radius / index.cell_size) as i64;
    let (cx, cy) = index.cell_of(ego.pos.0, ego.pos.1);
    let mut out = Vec::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            if let Some(ids) = index.cells.get(&(cx + dx, cy + dy)) {
                for &id in ids {
                    if id == ego.id {
                        continue;
                    }
                    if dist3(index.positions[&id], ego.pos) <= radius {
                        out.push(id);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Closest-point-of-approach forecast between two linear trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpaResult {
    /// Time of horizontal closest approach, clamped to [0, horizon], seconds.
    pub t_cpa: f64,
    /// Horizontal miss distance at `t_cpa`, meters.
    pub d_horiz: f64,
    /// Vertical miss distance at `t_cpa`, meters.
    pub d_vert: f64,
    /// min over t in [0, horizon] of max(h(t)/R_h, v(t)/R_v).
    pub sep_score: f64,
}

/// One linear segment of a relative trajectory: horizontal offset `r` and
/// rate `w`, vertical offset `dz` and rate `dvz`, valid on [t0, t1].
struct Segment {
    t0: f64,
    t1: f64,
    r: (f64, f64),
    w: (f64, f64),
    dz: f64,
    dvz: f64,
}

/// Minimum of max(h/Rh, v/Rv) on one segment, found analytically.
///
/// Both squared profiles are quadratics in t, so the minimum of the max
/// lies at an endpoint, a vertex, or a crossing of the two quadratics.
fn segment_min_score(seg: &Segment, r_h: f64, r_v: f64) -> f64 {
    // Squared-score quadratics q(t) = a t^2 + b t + c.
    let (rx, ry) = seg.r;
    let (wx, wy) = seg.w;
    let ah = (wx * wx + wy * wy) / (r_h * r_h);
    let bh = 2.0 * (rx * wx + ry * wy) / (r_h * r_h);
    let ch = (rx * rx + ry * ry) / (r_h * r_h);
    let av = seg.dvz * seg.dvz / (r_v * r_v);
    let bv = 2.0 * seg.dz * seg.dvz / (r_v * r_v);
    let cv = seg.dz * seg.dz / (r_v * r_v);

    let mut candidates = [seg.t0, seg.t1, f64::NAN, f64::NAN, f64::NAN, f64::NAN];
    let mut n = 2;
    if ah > 0.0 {
        candidates[n] = -bh / (2.0 * ah);
        n += 1;
    }
    if av > 0.0 {
        candidates[n] = -bv / (2.0 * av);
        n += 1;
    }
    // Crossings of the two quadratics.
    let da = ah - av;
    let db = bh - bv;
    let dc = ch - cv;
    if da.abs() < 1e-12 {
        if db.abs() > 1e-12 {
            candidates[n] = -dc / db;
            n += 1;
        }
    } else {
        let disc = db * db - 4.0 * da * dc;
        if disc >= 0.0 {
            let sq = libm::sqrt(disc);
            candidates[n] = (-db + sq) / (2.0 * da);
            n += 1;
            candidates[n] = (-db - sq) / (2.0 * da);
            n += 1;
        }
    }

    let eval = |t: f64| -> f64 {
        let qh = (ah * t + bh) * t + ch;
        let qv = (av * t + bv) * t + cv;
        libm::sqrt(qh.max(qv).max(0.0))
    };
    let mut best = f64::INFINITY;
    for &t in candidates.iter().take(n) {
        if t >= seg.t0 - 1e-12 && t <= seg.t1 + 1e-12 {
            best = best.min(eval(t.clamp(seg.t0, seg.t1)));
        }
    }
    best
}

fn min_score_over_segments(segments: &[Segment], r_h: f64, r_v: f64) -> f64 {
    segments
        .iter()
        .map(|s| segment_min_score(s, r_h, r_v))
        .fold(f64::INFINITY, f64::min)
}

/// CPA between two constant-velocity trajectories over `[0, horizon]`.
///
/// `t_cpa` minimizes horizontal distance (`t = 0` when the relative
/// horizontal velocity is zero); `sep_score` is the minimum over the
/// horizon of the cylindrical separation ratio.
pub fn cpa(
    p1: (f64, f64, f64),
    v1: (f64, f64, f64),
    p2: (f64, f64, f64),
    v2: (f64, f64, f64),
    horizon: f64,
    r_h: f64,
    r_v: f64,
) -> CpaResult {
    let r = (p2.0 - p1.0, p2.1 - p1.1);
    let w = (v2.0 - v1.0, v2.1 - v1.1);
    let w_sq = w.0 * w.0 + w.1 * w.1;
    let t_cpa = if w_sq == 0.0 {
        0.0
    } else {
        (-(r.0 * w.0 + r.1 * w.1) / w_sq).clamp(0.0, horizon)
    };
    let hx = r.0 + w.0 * t_cpa;
    let hy = r.1 + w.1 * t_cpa;
    let d_horiz = libm::sqrt(hx * hx + hy * hy);
    let dz = p2.2 - p1.2;
    let dvz = v2.2 - v1.2;
    let d_vert = (dz + dvz * t_cpa).abs();
    let seg = Segment {
        t0: 0.0,
        t1: horizon,
        r,
        w,
        dz,
        dvz,
    };
    CpaResult {
        t_cpa,
        d_horiz,
        d_vert,
        sep_score: segment_min_score(&seg, r_h, r_v),
    }
}

/// Climb-capped vertical rate of a UAV at forecast time `t` (seconds).
/// Returns the time at which the climb ends (target altitude reached).
fn climb_end_time(u: &UavState) -> f64 {
    if u.climb_rate == 0.0 {
        0.0
    } else {
        ((u.target_altitude - u.pos.2) / u.climb_rate).max(0.0)
    }
}

fn altitude_at(u: &UavState, t: f64) -> f64 {
    let end = climb_end_time(u);
    if t >= end {
        if u.climb_rate == 0.0 {
            u.pos.2
        } else {
            u.target_altitude
        }
    } else {
        u.pos.2 + u.climb_rate * t
    }
}

/// CPA forecast between two UAVs: constant horizontal velocity plus the
/// deterministic piecewise-linear climb profile of each aircraft.
pub fn cpa_between(u1: &UavState, u2: &UavState, horizon: f64, r_h: f64, r_v: f64) -> CpaResult {
    let v1 = u1.velocity();
    let v2 = u2.velocity();
    let r = (u2.pos.0 - u1.pos.0, u2.pos.1 - u1.pos.1);
    let w = (v2.0 - v1.0, v2.1 - v1.1);
    let w_sq = w.0 * w.0 + w.1 * w.1;
    let t_cpa = if w_sq == 0.0 {
        0.0
    } else {
        (-(r.0 * w.0 + r.1 * w.1) / w_sq).clamp(0.0, horizon)
    };
    let hx = r.0 + w.0 * t_cpa;
    let hy = r.1 + w.1 * t_cpa;
    let d_horiz = libm::sqrt(hx * hx + hy * hy);
    let d_vert = (altitude_at(u2, t_cpa) - altitude_at(u1, t_cpa)).abs();

    // Break the horizon at each climb-completion time.
    let mut breaks = [0.0, horizon, 0.0, 0.0];
    let mut n = 2;
    for end in [climb_end_time(u1), climb_end_time(u2)] {
        if end > 0.0 && end < horizon {
            breaks[n] = end;
            n += 1;
        }
    }
    let breaks = &mut breaks[..n];
    breaks.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut segments = Vec::with_capacity(n - 1);
    for pair in breaks.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        if t1 <= t0 {
            continue;
        }
        let z1 = altitude_at(u1, t0);
        let z2 = altitude_at(u2, t0);
        let vz1 = if t0 < climb_end_time(u1) { u1.climb_rate } else { 0.0 };
        let vz2 = if t0 < climb_end_time(u2) { u2.climb_rate } else { 0.0 };
        segments.push(Segment {
            t0: 0.0,
            t1: t1 - t0,
            r: (r.0 + w.0 * t0, r.1 + w.1 * t0),
            w,
            dz: z2 - z1,
            dvz: vz2 - vz1,
        });
    }
    CpaResult {
        t_cpa,
        d_horiz,
        d_vert,
        sep_score: min_score_over_segments(&segments, r_h, r_v),
    }
}

/// Instantaneous cylindrical separation ratio of a pair; below 1 means the
/// pair is inside the protected cylinder right now.
pub fn instantaneous_score(u1: &UavState, u2: &UavState, r_h: f64, r_v: f64) -> f64 {
    let dx = u2.pos.0 - u1.pos.0;
    let dy = u2.pos.1 - u1.pos.1;
    let h = libm::sqrt(dx * dx + dy * dy);
    let v = (u2.pos.2 - u1.pos.2).abs();
    (h / r_h).max(v / r_v)
}

/// Identity of one conflict: unordered id pair plus detection clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConflictKey {
    pub a: u32,
    pub b: u32,
    pub detected_at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictOutcome {
    Open,
    Resolved,
    LossOfSeparation,
    Expired,
}

impl ConflictOutcome {
    pub fn name(self) -> &'static str {
        match self {
            ConflictOutcome::Open => "Open",
            ConflictOutcome::Resolved => "Resolved",
            ConflictOutcome::LossOfSeparation => "LossOfSeparation",
            ConflictOutcome::Expired => "Expired",
        }
    }
}

/// Per-UAV request progress within one conflict.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavResolution {
    pub reported_at_ms: Option<u64>,
    pub command_at_ms: Option<u64>,
    pub applied_at_ms: Option<u64>,
    pub chosen: Option<ManeuverClass>,
    pub degraded: bool,
}

/// Lifecycle of one detected pairwise conflict.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictRecord {
    pub key: ConflictKey,
    /// Resolution progress for the lower id (index 0) and higher id (index 1).
    pub per_uav: [UavResolution; 2],
    pub outcome: ConflictOutcome,
    /// Set when the resolution deadline passed before both commands applied.
    pub expired: bool,
    pub min_sep_score_observed: f64,
    /// Absolute forecast time of closest approach at detection, ms.
    pub t_cpa_abs_ms: u64,
}

impl ConflictRecord {
    pub fn new(key: ConflictKey, t_cpa_abs_ms: u64) -> Self {
        ConflictRecord {
            key,
            per_uav: [UavResolution::default(), UavResolution::default()],
            outcome: ConflictOutcome::Open,
            expired: false,
            min_sep_score_observed: f64::INFINITY,
            t_cpa_abs_ms,
        }
    }

    /// The conflict counts as applied once both involved UAVs have a
    /// maneuver in effect.
    pub fn applied_at_ms(&self) -> Option<u64> {
        match (self.per_uav[0].applied_at_ms, self.per_uav[1].applied_at_ms) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        }
    }

    pub fn slot_for(&self, uav_id: u32) -> usize {
        if uav_id == self.key.a {
            0
        } else {
            1
        }
    }
}

/// New conflict candidates this tick: pairs within detection range whose
/// forecast predicts a separation violation, excluding pairs already
/// covered by an open record. Sorted by (min id, max id).
pub fn detect_conflicts(
    world: &WorldState,
    index: &SpatialIndex,
    config: &ScenarioConfig,
) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for ego in &world.uavs {
        for id in neighbors_within(index, ego, config.detection_range) {
            if id <= ego.id {
                continue;
            }
            if pair_has_open_record(world, ego.id, id) {
                continue;
            }
            let other = &world.uavs[id as usize];
            let result = cpa_between(
                ego,
                other,
                config.forecast_horizon_s,
                config.horiz_sep_threshold,
                config.vert_sep_threshold,
            );
            if result.sep_score < 1.0 {
                out.push((ego.id, id));
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn pair_has_open_record(world: &WorldState, a: u32, b: u32) -> bool {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    world
        .open_conflicts
        .range(
            ConflictKey { a, b, detected_at_ms: 0 }..=ConflictKey {
                a,
                b,
                detected_at_ms: u64::MAX,
            },
        )
        .next()
        .is_some()
}

/// Pairs currently in loss of separation (strictly inside both thresholds).
/// Episode bookkeeping (one event per continuous violation) is the
/// caller's responsibility.
pub fn check_separation(
    world: &WorldState,
    index: &SpatialIndex,
    config: &ScenarioConfig,
) -> Vec<(u32, u32)> {
    let r_h = config.horiz_sep_threshold;
    let r_v = config.vert_sep_threshold;
    let reach = libm::sqrt(r_h * r_h + r_v * r_v) + 1e-9;
    let mut out = Vec::new();
    for ego in &world.uavs {
        for id in neighbors_within(index, ego, reach) {
            if id <= ego.id {
                continue;
            }
            let other = &world.uavs[id as usize];
            let dx = other.pos.0 - ego.pos.0;
            let dy = other.pos.1 - ego.pos.1;
            let h = libm::sqrt(dx * dx + dy * dy);
            let v = (other.pos.2 - ego.pos.2).abs();
            if h < r_h && v < r_v {
                out.push((ego.id, id));
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::UavStatus;
    use alloc::vec;

    pub(crate) fn uav_at(id: u32, pos: (f64, f64, f64), v: (f64, f64, f64)) -> UavState {
        let speed = libm::sqrt(v.0 * v.0 + v.1 * v.1);
        UavState {
            id,
            pos,
            speed,
            heading: crate::kinematics::wrap_angle(libm::atan2(v.1, v.0)),
            climb_rate: v.2,
            target_altitude: if v.2 == 0.0 { pos.2 } else { pos.2 + v.2.signum() * 1e6 },
            itinerary: vec![(pos.0 + 1e5 * libm::cos(libm::atan2(v.1, v.0)), pos.1)],
            cursor: 0,
            base_speed: speed.max(1.0),
            maneuver: None,
            status: UavStatus::Nominal,
            deliveries_done: 0,
        }
    }

    /// Brute-force CPA oracle: sample the horizontal distance every `dt`
    /// seconds and return the minimizing time and distance.
    pub(crate) fn sampled_cpa(
        p1: (f64, f64, f64),
        v1: (f64, f64, f64),
        p2: (f64, f64, f64),
        v2: (f64, f64, f64),
        horizon: f64,
        dt: f64,
    ) -> (f64, f64) {
        let mut best_t = 0.0;
        let mut best_d = f64::INFINITY;
        let steps = (horizon / dt) as usize;
        for i in 0..=steps {
            let t = i as f64 * dt;
            let dx = (p2.0 + v2.0 * t) - (p1.0 + v1.0 * t);
            let dy = (p2.1 + v2.1 * t) - (p1.1 + v1.1 * t);
            let d = libm::sqrt(dx * dx + dy * dy);
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        (best_t, best_d)
    }

    #[test]
    fn empty_index() {
        let index = build_index(&[], DEFAULT_CELL_SIZE);
        assert!(index.is_empty());
    }

    #[test]
    fn floor_cell_rule() {
        let index = build_index(&[uav_at(0, (150.0, 150.0, 100.0), (1.0, 0.0, 0.0))], 100.0);
        assert_eq!(index.cell_of(150.0, 150.0), (1, 1));
    }

    #[test]
    fn rebuild_moves_only_changed_cell() {
        let a = uav_at(0, (50.0, 50.0, 100.0), (1.0, 0.0, 0.0));
        let b = uav_at(1, (250.0, 250.0, 100.0), (1.0, 0.0, 0.0));
        let before = build_index(&[a.clone(), b.clone()], 100.0);
        let mut moved = a.clone();
        moved.pos = (350.0, 50.0, 100.0);
        let after = build_index(&[moved, b], 100.0);
        assert_eq!(before.cells.get(&(2, 2)), after.cells.get(&(2, 2)));
        assert!(after.cells.contains_key(&(3, 0)));
        assert!(!after.cells.contains_key(&(0, 0)));
    }

    #[test]
    fn lone_uav_has_no_neighbors() {
        let ego = uav_at(0, (500.0, 500.0, 100.0), (10.0, 0.0, 0.0));
        let index = build_index(core::slice::from_ref(&ego), DEFAULT_CELL_SIZE);
        assert!(neighbors_within(&index, &ego, 100.0).is_empty());
    }

    #[test]
    fn neighbor_included_at_80m() {
        let ego = uav_at(0, (500.0, 500.0, 100.0), (10.0, 0.0, 0.0));
        let near = uav_at(1, (580.0, 500.0, 100.0), (10.0, 0.0, 0.0));
        let index = build_index(&[ego.clone(), near], DEFAULT_CELL_SIZE);
        assert_eq!(neighbors_within(&index, &ego, 100.0), vec![1]);
    }

    #[test]
    fn neighbor_excluded_by_3d_distance() {
        // Horizontal 80 m plus vertical 80 m is ~113.1 m in 3-D.
        let ego = uav_at(0, (500.0, 500.0, 100.0), (10.0, 0.0, 0.0));
        let high = uav_at(1, (580.0, 500.0, 180.0), (10.0, 0.0, 0.0));
        let index = build_index(&[ego.clone(), high], DEFAULT_CELL_SIZE);
        assert!(neighbors_within(&index, &ego, 100.0).is_empty());
    }

    #[test]
    fn head_on_cpa() {
        let r = cpa(
            (0.0, 0.0, 100.0),
            (20.0, 0.0, 0.0),
            (100.0, 0.0, 100.0),
            (-20.0, 0.0, 0.0),
            10.0,
            30.0,
            10.0,
        );
        assert!((r.t_cpa - 2.5).abs() < 1e-12);
        assert!(r.d_horiz.abs() < 1e-9);
        assert!(r.d_vert.abs() < 1e-12);
        assert!(r.sep_score < 1e-9);
    }

    #[test]
    fn zero_relative_velocity_convention() {
        let r = cpa(
            (0.0, 0.0, 100.0),
            (20.0, 0.0, 0.0),
            (80.0, 0.0, 100.0),
            (20.0, 0.0, 0.0),
            10.0,
            30.0,
            10.0,
        );
        assert_eq!(r.t_cpa, 0.0);
        assert!((r.d_horiz - 80.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_cpa_matches_sampled_oracle() {
        let p1 = (0.0, 0.0, 100.0);
        let v1 = (10.0, 0.0, 0.0);
        let p2 = (50.0, 50.0, 100.0);
        let v2 = (0.0, -10.0, 0.0);
        let r = cpa(p1, v1, p2, v2, 10.0, 30.0, 10.0);
        assert!((r.t_cpa - 5.0).abs() < 1e-12);
        assert!(r.d_horiz.abs() < 1e-9);
        let (st, sd) = sampled_cpa(p1, v1, p2, v2, 10.0, 0.001);
        assert!((r.t_cpa - st).abs() <= 0.001 + 1e-12);
        assert!((r.d_horiz - sd).abs() <= 0.1);
    }

    #[test]
    fn detect_converging_pair() {
        let cfg = ScenarioConfig::default();
        let mut world = crate::scenario::init_world(&cfg);
        world.uavs = vec![
            uav_at(0, (0.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
            uav_at(1, (80.0, 0.0, 100.0), (-20.0, 0.0, 0.0)),
        ];
        let index = build_index(&world.uavs, DEFAULT_CELL_SIZE);
        assert_eq!(detect_conflicts(&world, &index, &cfg), vec![(0, 1)]);
    }

    #[test]
    fn parallel_pair_not_detected() {
        let cfg = ScenarioConfig::default();
        let mut world = crate::scenario::init_world(&cfg);
        world.uavs = vec![
            uav_at(0, (0.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
            uav_at(1, (80.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
        ];
        let index = build_index(&world.uavs, DEFAULT_CELL_SIZE);
        assert!(detect_conflicts(&world, &index, &cfg).is_empty());
    }

    #[test]
    fn out_of_range_pair_not_detected() {
        let cfg = ScenarioConfig::default();
        let mut world = crate::scenario::init_world(&cfg);
        world.uavs = vec![
            uav_at(0, (0.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
            uav_at(1, (150.0, 0.0, 100.0), (-20.0, 0.0, 0.0)),
        ];
        let index = build_index(&world.uavs, DEFAULT_CELL_SIZE);
        assert!(detect_conflicts(&world, &index, &cfg).is_empty());
    }

    #[test]
    fn open_record_suppresses_redetection() {
        let cfg = ScenarioConfig::default();
        let mut world = crate::scenario::init_world(&cfg);
        world.uavs = vec![
            uav_at(0, (0.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
            uav_at(1, (80.0, 0.0, 100.0), (-20.0, 0.0, 0.0)),
        ];
        let key = ConflictKey { a: 0, b: 1, detected_at_ms: 0 };
        world.open_conflicts.insert(key, ConflictRecord::new(key, 2500));
        let index = build_index(&world.uavs, DEFAULT_CELL_SIZE);
        assert!(detect_conflicts(&world, &index, &cfg).is_empty());
    }

    #[test]
    fn separation_loss_thresholds() {
        let cfg = ScenarioConfig::default();
        let mut world = crate::scenario::init_world(&cfg);
        let check = |world: &WorldState| {
            let index = build_index(&world.uavs, DEFAULT_CELL_SIZE);
            check_separation(world, &index, &cfg)
        };
        world.uavs = vec![
            uav_at(0, (0.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
            uav_at(1, (25.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
        ];
        assert_eq!(check(&world), vec![(0, 1)]);

        // Vertical distance exactly at the threshold is not a loss (strict).
        world.uavs[1].pos = (25.0, 0.0, 110.0);
        assert!(check(&world).is_empty());

        world.uavs[1].pos = (31.0, 0.0, 100.0);
        assert!(check(&world).is_empty());
    }

    #[test]
    fn score_below_one_implies_loss_reported() {
        let cfg = ScenarioConfig::default();
        let mut world = crate::scenario::init_world(&cfg);
        world.uavs = vec![
            uav_at(0, (0.0, 0.0, 100.0), (20.0, 0.0, 0.0)),
            uav_at(1, (20.0, 5.0, 104.0), (-20.0, 0.0, 0.0)),
        ];
        let s = instantaneous_score(&world.uavs[0], &world.uavs[1], 30.0, 10.0);
        assert!(s < 1.0);
        let index = build_index(&world.uavs, DEFAULT_CELL_SIZE);
        assert_eq!(check_separation(&world, &index, &cfg), vec![(0, 1)]);
    }

    #[test]
    fn climb_profile_score_reaches_threshold() {
        // A pair diverging vertically under opposite climbs scores >= 1
        // even though co-altitude today.
        let mut a = uav_at(0, (0.0, 0.0, 100.0), (10.0, 0.0, 2.0));
        a.target_altitude = 110.0;
        let mut b = uav_at(1, (500.0, 0.0, 100.0), (-10.0, 0.0, -2.0));
        b.target_altitude = 90.0;
        let r = cpa_between(&a, &b, 30.0, 30.0, 10.0);
        // Horizontal meet at t = 25 s; by then vertical gap is 20 m.
        assert!(r.sep_score >= 1.0);
    }
}
