//! Run configuration, validation, and deterministic world construction.
//!
//! Configuration is a line-oriented `key = value` document; every omitted
//! key takes its documented default, so the empty document is the canonical
//! scenario.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::detection::{ConflictKey, ConflictRecord};
use crate::engine::LogEvent;
use crate::kinematics::{wrap_angle, UavState, UavStatus};
use crate::netmodel::{CentralStation, EdgeNodeState};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Controller {
    Edge,
    Centralized,
}

impl Controller {
    pub fn name(self) -> &'static str {
        match self {
            Controller::Edge => "edge",
            Controller::Centralized => "centralized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Oracle,
    Mlp,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::Mlp => "mlp",
        }
    }
}

/// Network and inference delay model parameters, all in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyParams {
    pub uplink_ms: u64,
    pub downlink_ms: u64,
    pub inference_ms: u64,
    pub handover_ms: u64,
    pub central_backhaul_ms: u64,
    pub budget_ms: u64,
    /// Inference cost of the onboard fallback model; constrained flight
    /// hardware is slower than an edge server.
    pub onboard_inference_ms: u64,
    /// Period (seconds) at which every covered UAV submits a background
    /// monitoring inference job to its edge node; 0 disables monitoring.
    pub monitor_period_s: f64,
    /// Edge nodes shed background monitoring jobs once their backlog exceeds
    /// this bound, protecting resolution latency under local overload.
    pub monitor_shed_ms: u64,
    /// Monitoring period for the centralized controller; the backhaul can
    /// only sustain much sparser status traffic. 0 disables monitoring.
    pub central_monitor_period_s: f64,
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams {
            uplink_ms: 20,
            downlink_ms: 20,
            inference_ms: 80,
            handover_ms: 50,
            central_backhaul_ms: 50,
            budget_ms: 500,
            onboard_inference_ms: 120,
            monitor_period_s: 1.0,
            monitor_shed_ms: 240,
            central_monitor_period_s: 18.0,
        }
    }
}

/// Initial placement override for scripted encounter fixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedUav {
    pub pos: (f64, f64, f64),
    pub speed: f64,
    pub heading_deg: f64,
    pub waypoint: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_side: f64,
    pub n_uavs: usize,
    pub n_edge_nodes: usize,
    pub comm_range: f64,
    pub horiz_sep_threshold: f64,
    pub vert_sep_threshold: f64,
    pub detection_range: f64,
    pub resolution_deadline_ms: u64,
    pub tick_ms: u64,
    pub kinematics_substep_ms: u64,
    pub sim_duration_s: u64,
    pub seed: u64,
    pub speed_range: (f64, f64),
    pub altitude_bands: Vec<f64>,
    pub arrival_radius: f64,
    pub forecast_horizon_s: f64,
    pub controller: Controller,
    pub policy: PolicyKind,
    pub latency: LatencyParams,
    pub n_delivery_points: usize,
    // Maneuver calibration constants. The defaults are documented
    // calibration values, overridable like any other key.
    pub turn_rate_deg_s: f64,
    pub turn_offset_deg: f64,
    pub climb_rate: f64,
    pub slowdown_factor: f64,
    pub maneuver_duration_ms: u64,
    /// When non-empty, replaces random initialization entirely.
    pub scripted_uavs: Vec<ScriptedUav>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_side: 10_000.0,
            n_uavs: 100,
            n_edge_nodes: 9,
            comm_range: 1000.0,
            horiz_sep_threshold: 30.0,
            vert_sep_threshold: 10.0,
            detection_range: 100.0,
            resolution_deadline_ms: 1500,
            tick_ms: 100,
            kinematics_substep_ms: 100,
            sim_duration_s: 600,
            seed: 0,
            speed_range: (15.0, 25.0),
            altitude_bands: alloc::vec![100.0, 110.0, 120.0, 130.0, 140.0, 150.0],
            arrival_radius: 50.0,
            forecast_horizon_s: 10.0,
            controller: Controller::Edge,
            policy: PolicyKind::Oracle,
            latency: LatencyParams::default(),
            n_delivery_points: 40,
            turn_rate_deg_s: 30.0,
            turn_offset_deg: 30.0,
            climb_rate: 2.0,
            slowdown_factor: 0.6,
            maneuver_duration_ms: 10_000,
            scripted_uavs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    /// Line number (1-based) and message.
    Parse(usize, String),
    /// Violated invariant, named.
    Validation(String),
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConfigError::Parse(line, msg) => write!(f, "line {line}: {msg}"),
            ConfigError::Validation(msg) => write!(f, "{msg}"),
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::Parse(line, format!("invalid number for {key}: {v:?}")))
}

fn parse_u64(line: usize, key: &str, v: &str) -> Result<u64, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::Parse(line, format!("invalid integer for {key}: {v:?}")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::Parse(line, format!("invalid count for {key}: {v:?}")))
}

fn parse_f64_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| parse_f64(line, key, s)).collect()
}

/// Parse a configuration document, apply defaults, and validate.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse(lineno, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "area_side" => cfg.area_side = parse_f64(lineno, key, value)?,
            "n_uavs" => cfg.n_uavs = parse_usize(lineno, key, value)?,
            "n_edge_nodes" => cfg.n_edge_nodes = parse_usize(lineno, key, value)?,
            "comm_range" => cfg.comm_range = parse_f64(lineno, key, value)?,
            "horiz_sep_threshold" => cfg.horiz_sep_threshold = parse_f64(lineno, key, value)?,
            "vert_sep_threshold" => cfg.vert_sep_threshold = parse_f64(lineno, key, value)?,
            "detection_range" => cfg.detection_range = parse_f64(lineno, key, value)?,
            "resolution_deadline" => cfg.resolution_deadline_ms = parse_u64(lineno, key, value)?,
            "tick" => cfg.tick_ms = parse_u64(lineno, key, value)?,
            "kinematics_substep" => cfg.kinematics_substep_ms = parse_u64(lineno, key, value)?,
            "sim_duration" => cfg.sim_duration_s = parse_u64(lineno, key, value)?,
            "seed" => cfg.seed = parse_u64(lineno, key, value)?,
            "speed_range" => {
                let list = parse_f64_list(lineno, key, value)?;
                if list.len() != 2 {
                    return Err(ConfigError::Parse(lineno, "speed_range needs two values".to_string()));
                }
                cfg.speed_range = (list[0], list[1]);
            }
            "altitude_bands" => cfg.altitude_bands = parse_f64_list(lineno, key, value)?,
            "arrival_radius" => cfg.arrival_radius = parse_f64(lineno, key, value)?,
            "forecast_horizon" => cfg.forecast_horizon_s = parse_f64(lineno, key, value)?,
            "controller" => {
                cfg.controller = match value {
                    "edge" => Controller::Edge,
                    "centralized" => Controller::Centralized,
                    other => {
                        return Err(ConfigError::Parse(lineno, format!("unknown controller {other:?}")))
                    }
                }
            }
            "policy" => {
                cfg.policy = match value {
                    "oracle" => PolicyKind::Oracle,
                    "mlp" => PolicyKind::Mlp,
                    other => return Err(ConfigError::Parse(lineno, format!("unknown policy {other:?}"))),
                }
            }
            "uplink_ms" => cfg.latency.uplink_ms = parse_u64(lineno, key, value)?,
            "downlink_ms" => cfg.latency.downlink_ms = parse_u64(lineno, key, value)?,
            "inference_ms" => cfg.latency.inference_ms = parse_u64(lineno, key, value)?,
            "handover_ms" => cfg.latency.handover_ms = parse_u64(lineno, key, value)?,
            "central_backhaul_ms" => cfg.latency.central_backhaul_ms = parse_u64(lineno, key, value)?,
            "budget_ms" => cfg.latency.budget_ms = parse_u64(lineno, key, value)?,
            "onboard_inference_ms" => cfg.latency.onboard_inference_ms = parse_u64(lineno, key, value)?,
            "monitor_period" => cfg.latency.monitor_period_s = parse_f64(lineno, key, value)?,
            "monitor_shed_ms" => cfg.latency.monitor_shed_ms = parse_u64(lineno, key, value)?,
            "central_monitor_period" => {
                cfg.latency.central_monitor_period_s = parse_f64(lineno, key, value)?
            }
            "n_delivery_points" => cfg.n_delivery_points = parse_usize(lineno, key, value)?,
            "turn_rate_deg_s" => cfg.turn_rate_deg_s = parse_f64(lineno, key, value)?,
            "turn_offset_deg" => cfg.turn_offset_deg = parse_f64(lineno, key, value)?,
            "climb_rate" => cfg.climb_rate = parse_f64(lineno, key, value)?,
            "slowdown_factor" => cfg.slowdown_factor = parse_f64(lineno, key, value)?,
            "maneuver_duration_ms" => cfg.maneuver_duration_ms = parse_u64(lineno, key, value)?,
            "uav" => {
                let list = parse_f64_list(lineno, key, value)?;
                if list.len() != 7 {
                    return Err(ConfigError::Parse(
                        lineno,
                        "uav needs x,y,z,speed,heading_deg,wx,wy".to_string(),
                    ));
                }
                cfg.scripted_uavs.push(ScriptedUav {
                    pos: (list[0], list[1], list[2]),
                    speed: list[3],
                    heading_deg: list[4],
                    waypoint: (list[5], list[6]),
                });
            }
            other => return Err(ConfigError::Parse(lineno, format!("unknown key {other:?}"))),
        }
    }
    if !cfg.scripted_uavs.is_empty() {
        cfg.n_uavs = cfg.scripted_uavs.len();
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn is_perfect_square(n: usize) -> bool {
    let r = libm::sqrt(n as f64) as usize;
    r * r == n || (r + 1) * (r + 1) == n
}

pub fn validate(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    let positive = [
        ("area_side", cfg.area_side),
        ("comm_range", cfg.comm_range),
        ("horiz_sep_threshold", cfg.horiz_sep_threshold),
        ("vert_sep_threshold", cfg.vert_sep_threshold),
        ("detection_range", cfg.detection_range),
        ("arrival_radius", cfg.arrival_radius),
        ("forecast_horizon", cfg.forecast_horizon_s),
        ("speed_range low", cfg.speed_range.0),
        ("speed_range high", cfg.speed_range.1),
        ("turn_rate_deg_s", cfg.turn_rate_deg_s),
        ("climb_rate", cfg.climb_rate),
        ("slowdown_factor", cfg.slowdown_factor),
    ];
    for (name, v) in positive {
        if v <= 0.0 {
            return Err(ConfigError::Validation(format!("{name} strictly positive violated")));
        }
    }
    let positive_int = [
        ("n_uavs", cfg.n_uavs as u64),
        ("n_edge_nodes", cfg.n_edge_nodes as u64),
        ("n_delivery_points", cfg.n_delivery_points as u64),
        ("resolution_deadline", cfg.resolution_deadline_ms),
        ("tick", cfg.tick_ms),
        ("kinematics_substep", cfg.kinematics_substep_ms),
        ("sim_duration", cfg.sim_duration_s),
        ("maneuver_duration_ms", cfg.maneuver_duration_ms),
    ];
    for (name, v) in positive_int {
        if v == 0 {
            return Err(ConfigError::Validation(format!("{name} strictly positive violated")));
        }
    }
    if cfg.detection_range <= cfg.horiz_sep_threshold {
        return Err(ConfigError::Validation(
            "detection_range > horiz_sep_threshold violated".to_string(),
        ));
    }
    if cfg.comm_range > cfg.area_side {
        return Err(ConfigError::Validation("comm_range <= area_side violated".to_string()));
    }
    if cfg.tick_ms % cfg.kinematics_substep_ms != 0 {
        return Err(ConfigError::Validation(
            "kinematics_substep divides tick violated".to_string(),
        ));
    }
    if !is_perfect_square(cfg.n_edge_nodes) {
        return Err(ConfigError::Validation(
            "n_edge_nodes is a perfect square violated".to_string(),
        ));
    }
    if cfg.speed_range.0 > cfg.speed_range.1 {
        return Err(ConfigError::Validation("speed_range low <= high violated".to_string()));
    }
    if cfg.altitude_bands.is_empty() {
        return Err(ConfigError::Validation("altitude_bands non-empty violated".to_string()));
    }
    let lat = &cfg.latency;
    if lat.uplink_ms + lat.inference_ms + lat.downlink_ms > lat.budget_ms {
        return Err(ConfigError::Validation(
            "uplink_ms + inference_ms + downlink_ms <= budget_ms violated".to_string(),
        ));
    }
    if lat.monitor_period_s < 0.0 || lat.central_monitor_period_s < 0.0 {
        return Err(ConfigError::Validation("monitor_period non-negative violated".to_string()));
    }
    Ok(())
}

/// Echo a config as a canonical `key = value` document. Parsing the echo
/// reproduces the config exactly; used by run manifests.
pub fn echo_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("area_side", format!("{}", cfg.area_side));
    push("n_uavs", format!("{}", cfg.n_uavs));
    push("n_edge_nodes", format!("{}", cfg.n_edge_nodes));
    push("comm_range", format!("{}", cfg.comm_range));
    push("horiz_sep_threshold", format!("{}", cfg.horiz_sep_threshold));
    push("vert_sep_threshold", format!("{}", cfg.vert_sep_threshold));
    push("detection_range", format!("{}", cfg.detection_range));
    push("resolution_deadline", format!("{}", cfg.resolution_deadline_ms));
    push("tick", format!("{}", cfg.tick_ms));
    push("kinematics_substep", format!("{}", cfg.kinematics_substep_ms));
    push("sim_duration", format!("{}", cfg.sim_duration_s));
    push("seed", format!("{}", cfg.seed));
    push("speed_range", format!("{},{}", cfg.speed_range.0, cfg.speed_range.1));
    let bands: Vec<String> = cfg.altitude_bands.iter().map(|b| format!("{b}")).collect();
    push("altitude_bands", bands.join(","));
    push("arrival_radius", format!("{}", cfg.arrival_radius));
    push("forecast_horizon", format!("{}", cfg.forecast_horizon_s));
    push("controller", cfg.controller.name().to_string());
    push("policy", cfg.policy.name().to_string());
    push("uplink_ms", format!("{}", cfg.latency.uplink_ms));
    push("downlink_ms", format!("{}", cfg.latency.downlink_ms));
    push("inference_ms", format!("{}", cfg.latency.inference_ms));
    push("handover_ms", format!("{}", cfg.latency.handover_ms));
    push("central_backhaul_ms", format!("{}", cfg.latency.central_backhaul_ms));
    push("budget_ms", format!("{}", cfg.latency.budget_ms));
    push("onboard_inference_ms", format!("{}", cfg.latency.onboard_inference_ms));
    push("monitor_period", format!("{}", cfg.latency.monitor_period_s));
    push("monitor_shed_ms", format!("{}", cfg.latency.monitor_shed_ms));
    push("central_monitor_period", format!("{}", cfg.latency.central_monitor_period_s));
    push("n_delivery_points", format!("{}", cfg.n_delivery_points));
    push("turn_rate_deg_s", format!("{}", cfg.turn_rate_deg_s));
    push("turn_offset_deg", format!("{}", cfg.turn_offset_deg));
    push("climb_rate", format!("{}", cfg.climb_rate));
    push("slowdown_factor", format!("{}", cfg.slowdown_factor));
    push("maneuver_duration_ms", format!("{}", cfg.maneuver_duration_ms));
    for u in &cfg.scripted_uavs {
        push(
            "uav",
            format!(
                "{},{},{},{},{},{},{}",
                u.pos.0, u.pos.1, u.pos.2, u.speed, u.heading_deg, u.waypoint.0, u.waypoint.1
            ),
        );
    }
    out
}

/// The full simulated airspace for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub clock_ms: u64,
    pub uavs: Vec<UavState>,
    pub edge_nodes: Vec<EdgeNodeState>,
    pub central: CentralStation,
    pub delivery_points: Vec<(f64, f64)>,
    pub open_conflicts: BTreeMap<ConflictKey, ConflictRecord>,
    pub event_log: Vec<LogEvent>,
}

/// Build the initial world. A pure function of the config: all randomness
/// comes from named sub-streams of the config seed.
pub fn init_world(config: &ScenarioConfig) -> WorldState {
    let side = config.area_side;
    let grid = libm::sqrt(config.n_edge_nodes as f64) as usize;
    let mut edge_nodes = Vec::with_capacity(config.n_edge_nodes);
    for row in 0..grid {
        for col in 0..grid {
            // Cell centers so no node sits on the boundary.
            edge_nodes.push(EdgeNodeState {
                id: (row * grid + col) as u32,
                pos: (
                    (col as f64 + 0.5) * side / grid as f64,
                    (row as f64 + 0.5) * side / grid as f64,
                ),
                busy_until_ms: 0,
                queue_len: 0,
                served: 0,
            });
        }
    }

    let mut delivery_rng = Rng::stream(config.seed, "delivery_points");
    // Keep delivery points interior so arrival circles never leave the arena.
    let margin = 2.0 * config.arrival_radius;
    let delivery_points: Vec<(f64, f64)> = (0..config.n_delivery_points)
        .map(|_| {
            (
                delivery_rng.range_f64(margin, side - margin),
                delivery_rng.range_f64(margin, side - margin),
            )
        })
        .collect();

    let uavs = if config.scripted_uavs.is_empty() {
        let mut uav_rng = Rng::stream(config.seed, "uav_init");
        (0..config.n_uavs as u32)
            .map(|id| {
                let pos = (
                    uav_rng.range_f64(0.0, side),
                    uav_rng.range_f64(0.0, side),
                    config.altitude_bands[uav_rng.range_usize(config.altitude_bands.len())],
                );
                let speed = uav_rng.range_f64(config.speed_range.0, config.speed_range.1);
                let mut itinerary = delivery_points.clone();
                uav_rng.shuffle(&mut itinerary);
                let heading = wrap_angle(libm::atan2(
                    itinerary[0].1 - pos.1,
                    itinerary[0].0 - pos.0,
                ));
                UavState {
                    id,
                    pos,
                    speed,
                    heading,
                    climb_rate: 0.0,
                    target_altitude: pos.2,
                    itinerary,
                    cursor: 0,
                    base_speed: speed,
                    maneuver: None,
                    status: UavStatus::Nominal,
                    deliveries_done: 0,
                }
            })
            .collect()
    } else {
        config
            .scripted_uavs
            .iter()
            .enumerate()
            .map(|(id, s)| UavState {
                id: id as u32,
                pos: s.pos,
                speed: s.speed,
                heading: wrap_angle(s.heading_deg.to_radians()),
                climb_rate: 0.0,
                target_altitude: s.pos.2,
                itinerary: alloc::vec![s.waypoint],
                cursor: 0,
                base_speed: s.speed,
                maneuver: None,
                status: UavStatus::Nominal,
                deliveries_done: 0,
            })
            .collect()
    };

    WorldState {
        clock_ms: 0,
        uavs,
        edge_nodes,
        central: CentralStation {
            pos: (side / 2.0, side / 2.0),
            busy_until_ms: 0,
            queue_len: 0,
            served: 0,
        },
        delivery_points,
        open_conflicts: BTreeMap::new(),
        event_log: Vec::new(),
    }
}
