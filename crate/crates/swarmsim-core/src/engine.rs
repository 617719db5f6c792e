//! The deterministic simulation loop.
//!
//! Time advances in fixed 100 ms ticks for physics and detection, while a
//! millisecond-resolution event queue carries request phases, deadlines, and
//! resolution confirmation windows. Every data structure iterates in a
//! deterministic order, so a run is a pure function of its config.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::detection::{
    self, build_index, instantaneous_score, ConflictKey, ConflictOutcome, ConflictRecord,
    SpatialIndex, DEFAULT_CELL_SIZE,
};
use crate::kinematics::{apply_maneuver, ManeuverClass, UavState, UavStatus};
use crate::metrics::{summarize, MetricsReport};
use crate::mlp::MlpModel;
use crate::netmodel::{
    associate, central_roundtrip, edge_roundtrip, onboard_roundtrip, LinkChange, LinkState,
    ResolutionRequest,
};
use crate::policy::{featurize, oracle_decide};
use crate::scenario::{init_world, Controller, PolicyKind, ScenarioConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Tick,
    Detect,
    Report,
    Command,
    Apply,
    Resolve,
    Loss,
    Expire,
    Handover,
    Delivery,
    Degraded,
}

impl EventKind {
    pub const ALL: [EventKind; 11] = [
        EventKind::Tick,
        EventKind::Detect,
        EventKind::Report,
        EventKind::Command,
        EventKind::Apply,
        EventKind::Resolve,
        EventKind::Loss,
        EventKind::Expire,
        EventKind::Handover,
        EventKind::Delivery,
        EventKind::Degraded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Tick => "Tick",
            EventKind::Detect => "Detect",
            EventKind::Report => "Report",
            EventKind::Command => "Command",
            EventKind::Apply => "Apply",
            EventKind::Resolve => "Resolve",
            EventKind::Loss => "Loss",
            EventKind::Expire => "Expire",
            EventKind::Handover => "Handover",
            EventKind::Delivery => "Delivery",
            EventKind::Degraded => "Degraded",
        }
    }

    pub fn from_name(s: &str) -> Option<EventKind> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }
}

/// One row of the canonical event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEvent {
    pub time_ms: u64,
    pub kind: EventKind,
    pub a: Option<u32>,
    pub b: Option<u32>,
    pub detail: String,
}

impl LogEvent {
    fn sort_key(&self) -> (u64, EventKind, u32, u32) {
        (
            self.time_ms,
            self.kind,
            self.a.unwrap_or(u32::MAX),
            self.b.unwrap_or(u32::MAX),
        )
    }

    /// Look up a `key=value` entry in the detail field.
    pub fn detail_get(&self, key: &str) -> Option<&str> {
        self.detail.split(';').find_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            (k == key).then_some(v)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    Report(ResolutionRequest),
    Command(ResolutionRequest, ManeuverClass),
    Apply(ResolutionRequest, ManeuverClass),
    ExpireCheck(ConflictKey),
    Confirm(ConflictKey),
}

/// Priority queue of (due time, insertion sequence, action); the sequence
/// number makes pop order total.
struct EventQueue {
    heap: BinaryHeap<Reverse<(u64, u64, usize)>>,
    actions: Vec<Action>,
}

impl EventQueue {
    fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            actions: Vec::new(),
        }
    }

    fn schedule(&mut self, due_ms: u64, action: Action) {
        let seq = self.actions.len() as u64;
        self.actions.push(action);
        self.heap.push(Reverse((due_ms, seq, seq as usize)));
    }

    fn pop_due(&mut self, now_ms: u64) -> Option<(u64, Action)> {
        if let Some(Reverse((due, _, idx))) = self.heap.peek().copied() {
            if due <= now_ms {
                self.heap.pop();
                return Some((due, self.actions[idx].clone()));
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineError {
    /// policy = mlp but no model was supplied.
    MissingModel,
}

impl core::fmt::Display for EngineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EngineError::MissingModel => write!(f, "policy = mlp requires a trained model"),
        }
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub log: Vec<LogEvent>,
    pub report: MetricsReport,
    /// Terminal conflict records, plus any still open at the horizon
    /// (outcome `Open`, counted as truncated).
    pub conflicts: Vec<ConflictRecord>,
}

/// Legal lifecycle transitions; anything else is an engine bug.
fn transition(record: &mut ConflictRecord, next: ConflictOutcome) {
    let legal = matches!(
        (record.outcome, next),
        (ConflictOutcome::Open, ConflictOutcome::Resolved)
            | (ConflictOutcome::Open, ConflictOutcome::LossOfSeparation)
            | (ConflictOutcome::Open, ConflictOutcome::Expired)
            | (ConflictOutcome::Expired, ConflictOutcome::Resolved)
            | (ConflictOutcome::Expired, ConflictOutcome::LossOfSeparation)
    );
    assert!(
        legal,
        "illegal conflict transition {} -> {} for pair ({}, {})",
        record.outcome.name(),
        next.name(),
        record.key.a,
        record.key.b
    );
    record.outcome = next;
}

struct Engine<'a> {
    config: &'a ScenarioConfig,
    model: Option<&'a MlpModel>,
    world: WorldState,
    queue: EventQueue,
    links: Vec<LinkState>,
    /// Per-UAV offset into the monitoring period, so background jobs spread
    /// over time instead of arriving in synchronized bursts.
    monitor_phases: Vec<u64>,
    monitor_period_ms: u64,
    violating: BTreeSet<(u32, u32)>,
    closed: Vec<ConflictRecord>,
    events: Vec<LogEvent>,
}

impl<'a> Engine<'a> {
    fn emit(&mut self, time_ms: u64, kind: EventKind, a: Option<u32>, b: Option<u32>, detail: String) {
        self.events.push(LogEvent {
            time_ms,
            kind,
            a,
            b,
            detail,
        });
    }

    fn uav_index(&self, id: u32) -> usize {
        // Ids are assigned densely at init and never change.
        id as usize
    }

    fn decide(&self, ego_id: u32, index: &SpatialIndex, priority: bool) -> ManeuverClass {
        let ego = &self.world.uavs[self.uav_index(ego_id)];
        let neighbor_ids = detection::neighbors_within(index, ego, self.config.detection_range);
        let neighbors: Vec<UavState> = neighbor_ids
            .iter()
            .map(|&id| self.world.uavs[self.uav_index(id)].clone())
            .collect();
        match self.config.policy {
            PolicyKind::Oracle => oracle_decide(ego, &neighbors, priority, self.config),
            PolicyKind::Mlp => {
                let features = featurize(ego, &neighbors, self.config);
                // Model presence is checked before the run starts.
                self.model.unwrap().decide(&features).unwrap()
            }
        }
    }

    /// Onboard decision used for degraded coverage and deadline fallback:
    /// always the geometric oracle, applied with zero network delay.
    fn decide_onboard(&self, ego_id: u32, index: &SpatialIndex, priority: bool) -> ManeuverClass {
        let ego = &self.world.uavs[self.uav_index(ego_id)];
        let neighbor_ids = detection::neighbors_within(index, ego, self.config.detection_range);
        let neighbors: Vec<UavState> = neighbor_ids
            .iter()
            .map(|&id| self.world.uavs[self.uav_index(id)].clone())
            .collect();
        oracle_decide(ego, &neighbors, priority, self.config)
    }

    fn apply_command(
        &mut self,
        time_ms: u64,
        req: &ResolutionRequest,
        class: ManeuverClass,
    ) {
        let Some(record) = self.world.open_conflicts.get(&req.key).cloned() else {
            return; // conflict already closed (loss); command dropped
        };
        if record.expired && !req.is_degraded() {
            return; // deadline fallback already acted; late command dropped
        }
        let idx = self.uav_index(req.uav_id);
        self.world.uavs[idx] = apply_maneuver(&self.world.uavs[idx], class, time_ms, self.config);

        let mut record = record;
        let slot = record.slot_for(req.uav_id);
        record.per_uav[slot].applied_at_ms = Some(time_ms);
        record.per_uav[slot].chosen = Some(class);
        record.per_uav[slot].degraded = req.is_degraded();
        let fully_applied = record.applied_at_ms();
        self.world.open_conflicts.insert(req.key, record);

        self.emit(
            time_ms,
            EventKind::Apply,
            Some(req.uav_id),
            None,
            format!(
                "pair={}-{};detected={};class={};latency_ms={};degraded={}",
                req.key.a,
                req.key.b,
                req.key.detected_at_ms,
                class.name(),
                req.roundtrip_ms(),
                u8::from(req.is_degraded()),
            ),
        );

        if let Some(applied) = fully_applied {
            let record = &self.world.open_conflicts[&req.key];
            let due = record.t_cpa_abs_ms.max(applied) + 5000;
            self.queue.schedule(due, Action::Confirm(req.key));
        }
    }

    fn handle_action(&mut self, due_ms: u64, action: Action) {
        match action {
            Action::Report(req) => {
                self.emit(
                    due_ms,
                    EventKind::Report,
                    Some(req.uav_id),
                    None,
                    format!(
                        "pair={}-{};detected={};arrival={}",
                        req.key.a, req.key.b, req.key.detected_at_ms, req.uplink_done_ms
                    ),
                );
            }
            // Logged even when the conflict has already closed: the server
            // spent the service time either way, and queue replays need the
            // complete job history.
            Action::Command(req, class) => {
                let node = match req.target {
                    crate::netmodel::RequestTarget::Node(id) => format!("{id}"),
                    crate::netmodel::RequestTarget::Central => String::from("central"),
                    crate::netmodel::RequestTarget::Onboard => String::from("onboard"),
                };
                self.emit(
                    due_ms,
                    EventKind::Command,
                    Some(req.uav_id),
                    None,
                    format!(
                        "pair={}-{};detected={};class={};node={};arrival={};start={};done={}",
                        req.key.a,
                        req.key.b,
                        req.key.detected_at_ms,
                        class.name(),
                        node,
                        req.uplink_done_ms,
                        req.service_start_ms,
                        req.service_done_ms
                    ),
                );
            }
            Action::Apply(req, class) => self.apply_command(due_ms, &req, class),
            Action::ExpireCheck(key) => self.handle_expiry(due_ms, key),
            Action::Confirm(key) => self.handle_confirm(due_ms, key),
        }
    }

    fn handle_expiry(&mut self, due_ms: u64, key: ConflictKey) {
        let Some(record) = self.world.open_conflicts.get(&key).cloned() else {
            return;
        };
        if record.applied_at_ms().is_some() {
            return; // both commands landed in time
        }
        let mut record = record;
        transition(&mut record, ConflictOutcome::Expired);
        record.expired = true;
        self.emit(
            due_ms,
            EventKind::Expire,
            Some(key.a),
            Some(key.b),
            format!("detected={}", key.detected_at_ms),
        );
        self.world.open_conflicts.insert(key, record.clone());

        // Immediate onboard fallback for every UAV still waiting.
        let index = build_index(&self.world.uavs, DEFAULT_CELL_SIZE);
        for (slot, uav_id) in [(0usize, key.a), (1usize, key.b)] {
            if record.per_uav[slot].applied_at_ms.is_none() {
                let class = self.decide_onboard(uav_id, &index, uav_id == key.a);
                let req = onboard_roundtrip(
                    key,
                    uav_id,
                    due_ms,
                    self.config.latency.onboard_inference_ms,
                );
                self.queue.schedule(req.downlink_done_ms, Action::Apply(req, class));
            }
        }
    }

    fn handle_confirm(&mut self, due_ms: u64, key: ConflictKey) {
        let Some(mut record) = self.world.open_conflicts.remove(&key) else {
            return;
        };
        // The confirmation window elapsed without a loss of separation.
        transition(&mut record, ConflictOutcome::Resolved);
        let applied = record.applied_at_ms().unwrap();
        self.emit(
            due_ms,
            EventKind::Resolve,
            Some(key.a),
            Some(key.b),
            format!(
                "detected={};resolution_ms={};expired={}",
                key.detected_at_ms,
                applied - key.detected_at_ms,
                u8::from(record.expired),
            ),
        );
        self.closed.push(record);
    }

    fn audit_separation(&mut self, now_ms: u64, index: &SpatialIndex) {
        let current: BTreeSet<(u32, u32)> =
            detection::check_separation(&self.world, index, self.config)
                .into_iter()
                .collect();
        for &(a, b) in &current {
            if self.violating.contains(&(a, b)) {
                continue; // same continuous violation episode
            }
            let covering: Vec<ConflictKey> = self
                .world
                .open_conflicts
                .range(
                    ConflictKey { a, b, detected_at_ms: 0 }..=ConflictKey {
                        a,
                        b,
                        detected_at_ms: u64::MAX,
                    },
                )
                .map(|(k, _)| *k)
                .collect();
            let detail = match covering.first() {
                Some(k) => format!("detected={}", k.detected_at_ms),
                None => String::from("record=none"),
            };
            self.emit(now_ms, EventKind::Loss, Some(a), Some(b), detail);
            for key in covering {
                let mut record = self.world.open_conflicts.remove(&key).unwrap();
                transition(&mut record, ConflictOutcome::LossOfSeparation);
                self.closed.push(record);
            }
        }
        self.violating = current;
    }

    fn update_links(&mut self, now_ms: u64) {
        if self.config.controller != Controller::Edge {
            return;
        }
        for i in 0..self.world.uavs.len() {
            let pos = (self.world.uavs[i].pos.0, self.world.uavs[i].pos.1);
            let assoc = associate(pos, &self.world.edge_nodes, self.config.comm_range);
            let change = crate::netmodel::update_link(
                &mut self.links[i],
                assoc,
                now_ms,
                self.config.latency.handover_ms,
            );
            let id = self.world.uavs[i].id;
            match change {
                Some(LinkChange::Handover { old, new }) => {
                    self.emit(
                        now_ms,
                        EventKind::Handover,
                        Some(id),
                        None,
                        format!("old={old};new={new}"),
                    );
                }
                Some(LinkChange::CoverageLost { old }) => {
                    self.emit(now_ms, EventKind::Degraded, Some(id), None, format!("node={old}"));
                    if self.world.uavs[i].status == UavStatus::Nominal {
                        self.world.uavs[i].status = UavStatus::Degraded;
                    }
                }
                Some(LinkChange::CoverageRegained { .. }) => {
                    if self.world.uavs[i].status == UavStatus::Degraded {
                        self.world.uavs[i].status = UavStatus::Nominal;
                    }
                }
                None => {}
            }
        }
    }

    /// Background monitoring traffic: every covered UAV periodically submits
    /// a status-assessment inference job to its server. The jobs occupy
    /// service time (so conflict requests queue behind them) but need no
    /// individual responses, so they are not logged.
    fn submit_monitoring(&mut self, now_ms: u64) {
        let period_ms = self.monitor_period_ms;
        if period_ms == 0 {
            return;
        }
        let lat = self.config.latency;
        for i in 0..self.world.uavs.len() {
            if (now_ms + self.monitor_phases[i]) % period_ms >= self.config.tick_ms {
                continue;
            }
            match self.config.controller {
                Controller::Centralized => {
                    let arrival = now_ms + lat.uplink_ms + lat.central_backhaul_ms;
                    self.world.central.enqueue(arrival, lat.inference_ms);
                }
                Controller::Edge => {
                    if let Some(node) = self.links[i].node {
                        let arrival = now_ms + lat.uplink_ms;
                        let node = &mut self.world.edge_nodes[node as usize];
                        // Background jobs are shed first when the node falls
                        // behind; resolution traffic is never shed.
                        if node.busy_until_ms <= arrival + lat.monitor_shed_ms {
                            node.enqueue(arrival, lat.inference_ms);
                        }
                    }
                }
            }
        }
    }

    fn detect_and_dispatch(&mut self, now_ms: u64, index: &SpatialIndex) {
        let candidates = detection::detect_conflicts(&self.world, index, self.config);
        for (a, b) in candidates {
            if self.violating.contains(&(a, b)) {
                continue; // already inside a loss episode; no new record
            }
            let key = ConflictKey { a, b, detected_at_ms: now_ms };
            let ua = &self.world.uavs[self.uav_index(a)];
            let ub = &self.world.uavs[self.uav_index(b)];
            let forecast = detection::cpa_between(
                ua,
                ub,
                self.config.forecast_horizon_s,
                self.config.horiz_sep_threshold,
                self.config.vert_sep_threshold,
            );
            let t_cpa_abs_ms = now_ms + libm::round(forecast.t_cpa * 1000.0) as u64;
            let mut record = ConflictRecord::new(key, t_cpa_abs_ms);
            record.min_sep_score_observed = instantaneous_score(
                ua,
                ub,
                self.config.horiz_sep_threshold,
                self.config.vert_sep_threshold,
            );
            self.emit(
                now_ms,
                EventKind::Detect,
                Some(a),
                Some(b),
                format!("score={:.6};t_cpa_ms={}", forecast.sep_score, t_cpa_abs_ms),
            );
            self.world.open_conflicts.insert(key, record);
            self.queue
                .schedule(now_ms + self.config.resolution_deadline_ms, Action::ExpireCheck(key));

            for uav_id in [a, b] {
                let priority = uav_id == a;
                let class = match self.config.controller {
                    Controller::Centralized => {
                        let req = central_roundtrip(
                            key,
                            uav_id,
                            now_ms,
                            &mut self.world.central,
                            &self.config.latency,
                        );
                        let class = self.decide(uav_id, index, priority);
                        self.queue.schedule(req.uplink_done_ms, Action::Report(req));
                        self.queue
                            .schedule(req.service_done_ms, Action::Command(req, class));
                        self.queue
                            .schedule(req.downlink_done_ms, Action::Apply(req, class));
                        continue;
                    }
                    Controller::Edge => {
                        let link = self.links[self.uav_index(uav_id)];
                        match link.node {
                            Some(node_id) => {
                                // Handover block delays the uplink start.
                                let start = now_ms.max(link.blocked_until_ms);
                                let mut req = edge_roundtrip(
                                    key,
                                    uav_id,
                                    start,
                                    &mut self.world.edge_nodes[node_id as usize],
                                    &self.config.latency,
                                );
                                req.created_at_ms = now_ms;
                                let class = self.decide(uav_id, index, priority);
                                self.queue.schedule(req.uplink_done_ms, Action::Report(req));
                                self.queue
                                    .schedule(req.service_done_ms, Action::Command(req, class));
                                self.queue
                                    .schedule(req.downlink_done_ms, Action::Apply(req, class));
                                continue;
                            }
                            None => self.decide_onboard(uav_id, index, priority),
                        }
                    }
                };
                // Out of coverage: the onboard model decides locally. No
                // network hops, but local inference still takes time.
                let req = onboard_roundtrip(
                    key,
                    uav_id,
                    now_ms,
                    self.config.latency.onboard_inference_ms,
                );
                self.queue.schedule(req.uplink_done_ms, Action::Report(req));
                self.queue.schedule(req.service_done_ms, Action::Command(req, class));
                self.queue.schedule(req.downlink_done_ms, Action::Apply(req, class));
            }
        }
    }

    fn observe_open_conflicts(&mut self) {
        let scores: Vec<(ConflictKey, f64)> = self
            .world
            .open_conflicts
            .keys()
            .map(|k| {
                let s = instantaneous_score(
                    &self.world.uavs[self.uav_index(k.a)],
                    &self.world.uavs[self.uav_index(k.b)],
                    self.config.horiz_sep_threshold,
                    self.config.vert_sep_threshold,
                );
                (*k, s)
            })
            .collect();
        for (key, s) in scores {
            let record = self.world.open_conflicts.get_mut(&key).unwrap();
            if s < record.min_sep_score_observed {
                record.min_sep_score_observed = s;
            }
        }
    }

    fn run(mut self) -> RunOutput {
        let tick = self.config.tick_ms;
        let substep = self.config.kinematics_substep_ms;
        let dt = substep as f64 / 1000.0;
        let horizon_ms = self.config.sim_duration_s * 1000;

        // Initial attachment and scan at t = 0.
        self.update_links(0);
        self.submit_monitoring(0);
        let index = build_index(&self.world.uavs, DEFAULT_CELL_SIZE);
        self.audit_separation(0, &index);
        self.detect_and_dispatch(0, &index);

        let mut tick_end = tick;
        while tick_end <= horizon_ms {
            // Drain queue actions that fall inside this tick.
            while let Some((due, action)) = self.queue.pop_due(tick_end - 1) {
                self.handle_action(due, action);
            }

            // Physics substeps.
            for s in 0..(tick / substep) {
                let now = tick_end - tick + (s + 1) * substep;
                for i in 0..self.world.uavs.len() {
                    self.world.uavs[i] =
                        crate::kinematics::step_uav(&self.world.uavs[i], dt, now, self.config);
                }
            }
            self.world.clock_ms = tick_end;

            // Deliveries.
            for i in 0..self.world.uavs.len() {
                let (updated, delivered) =
                    crate::kinematics::advance_waypoint(&self.world.uavs[i], self.config.arrival_radius);
                if delivered {
                    let id = updated.id;
                    let count = updated.deliveries_done;
                    self.world.uavs[i] = updated;
                    self.emit(
                        tick_end,
                        EventKind::Delivery,
                        Some(id),
                        None,
                        format!("total={count}"),
                    );
                }
            }

            self.update_links(tick_end);
            self.submit_monitoring(tick_end);

            let index = build_index(&self.world.uavs, DEFAULT_CELL_SIZE);
            self.audit_separation(tick_end, &index);
            self.observe_open_conflicts();

            // Actions due exactly on the boundary run before the scan sees
            // their effects as "unresolved".
            while let Some((due, action)) = self.queue.pop_due(tick_end) {
                self.handle_action(due, action);
            }

            self.detect_and_dispatch(tick_end, &index);
            tick_end += tick;
        }

        // Conflicts still open at the horizon are truncated, not failed.
        let world = &mut self.world;
        let mut truncated: Vec<ConflictRecord> = Vec::new();
        while let Some((key, record)) = world.open_conflicts.pop_first() {
            let _ = key;
            truncated.push(record);
        }
        self.closed.extend(truncated);

        let mut log = core::mem::take(&mut self.events);
        log.sort_by_key(|e| e.sort_key());
        let report = summarize(&log, self.config);
        RunOutput {
            log,
            report,
            conflicts: self.closed,
        }
    }
}

/// Execute one full simulation run.
pub fn run(config: &ScenarioConfig, model: Option<&MlpModel>) -> Result<RunOutput, EngineError> {
    if config.policy == PolicyKind::Mlp && model.is_none() {
        return Err(EngineError::MissingModel);
    }
    let world = init_world(config);
    let links = alloc::vec![LinkState::default(); world.uavs.len()];
    let period_s = match config.controller {
        Controller::Edge => config.latency.monitor_period_s,
        Controller::Centralized => config.latency.central_monitor_period_s,
    };
    let monitor_period_ms = libm::round(period_s * 1000.0) as u64;
    let mut monitor_phases = alloc::vec![0u64; world.uavs.len()];
    if monitor_period_ms > 0 {
        let mut rng = crate::rng::Rng::stream(config.seed, "monitor_phase");
        for p in monitor_phases.iter_mut() {
            *p = rng.next_u64() % monitor_period_ms;
        }
    }
    let engine = Engine {
        config,
        model,
        world,
        queue: EventQueue::new(),
        links,
        monitor_phases,
        monitor_period_ms,
        violating: BTreeSet::new(),
        closed: Vec::new(),
        events: Vec::new(),
    };
    Ok(engine.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::ConflictOutcome;
    use crate::scenario::load_config;

    /// Two-UAV head-on fixture on a small 2x2 grid so the pair attaches to
    /// two different (idle) nodes.
    pub(crate) const HEAD_ON_FIXTURE: &str = "\
area_side = 4000
n_edge_nodes = 4
comm_range = 1000
monitor_period = 0
central_monitor_period = 0
sim_duration = 60
n_delivery_points = 4
uav = 1950,1000,100,10,0,3800,1000
uav = 2050,1000,100,10,180,200,1000
";

    #[test]
    fn single_uav_run_has_no_conflicts() {
        let cfg =
            load_config("n_uavs = 1\narea_side = 1000\nsim_duration = 300\nseed = 5").unwrap();
        let out = run(&cfg, None).unwrap();
        assert!(!out.log.iter().any(|e| e.kind == EventKind::Detect));
        assert!(!out.log.iter().any(|e| e.kind == EventKind::Loss));
        assert!(out.log.iter().any(|e| e.kind == EventKind::Delivery));
    }

    #[test]
    fn head_on_fixture_resolves_in_120ms() {
        let cfg = load_config(HEAD_ON_FIXTURE).unwrap();
        let out = run(&cfg, None).unwrap();
        let detects: Vec<_> = out.log.iter().filter(|e| e.kind == EventKind::Detect).collect();
        assert_eq!(detects.len(), 1);
        assert_eq!(out.conflicts.len(), 1);
        let record = &out.conflicts[0];
        assert_eq!(record.outcome, ConflictOutcome::Resolved);
        assert!(!record.expired);
        let resolution = record.applied_at_ms().unwrap() - record.key.detected_at_ms;
        assert_eq!(resolution, 120);
        assert_eq!(out.report.avg_resolution_time_ms, Some(120.0));
        assert_eq!(out.report.resolution_accuracy_pct, Some(100.0));
    }

    #[test]
    fn head_on_fixture_with_tight_deadline_expires_then_recovers() {
        let mut text = String::from(HEAD_ON_FIXTURE);
        text.push_str("resolution_deadline = 100\n");
        let cfg = load_config(&text).unwrap();
        let out = run(&cfg, None).unwrap();
        assert_eq!(out.conflicts.len(), 1);
        let record = &out.conflicts[0];
        assert!(record.expired);
        assert_eq!(record.outcome, ConflictOutcome::Resolved);
        assert_eq!(out.report.counts.expired, 1);
        assert!(out.log.iter().any(|e| e.kind == EventKind::Expire));
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = load_config("n_uavs = 30\nsim_duration = 60\nseed = 11").unwrap();
        let a = run(&cfg, None).unwrap();
        let b = run(&cfg, None).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn log_is_sorted_and_clock_monotone() {
        let cfg = load_config("n_uavs = 50\nsim_duration = 60\nseed = 2").unwrap();
        let out = run(&cfg, None).unwrap();
        for pair in out.log.windows(2) {
            assert!(pair[0].sort_key() <= pair[1].sort_key());
        }
    }

    #[test]
    fn every_conflict_reaches_terminal_or_truncated() {
        let cfg = load_config("n_uavs = 80\nsim_duration = 120\nseed = 4").unwrap();
        let out = run(&cfg, None).unwrap();
        let detect_count = out.log.iter().filter(|e| e.kind == EventKind::Detect).count();
        assert_eq!(out.conflicts.len(), detect_count);
    }

    #[test]
    fn centralized_controller_runs() {
        let cfg =
            load_config("n_uavs = 40\nsim_duration = 60\nseed = 8\ncontroller = centralized").unwrap();
        let out = run(&cfg, None).unwrap();
        // No handovers or degraded decisions in centralized mode.
        assert!(!out.log.iter().any(|e| e.kind == EventKind::Handover));
        assert_eq!(out.report.counts.degraded, 0);
    }

    #[test]
    fn mlp_policy_without_model_rejected() {
        let cfg = load_config("policy = mlp").unwrap();
        assert_eq!(run(&cfg, None).unwrap_err(), EngineError::MissingModel);
    }

    #[test]
    #[should_panic(expected = "illegal conflict transition")]
    fn illegal_transition_aborts() {
        let key = ConflictKey { a: 0, b: 1, detected_at_ms: 0 };
        let mut record = ConflictRecord::new(key, 0);
        transition(&mut record, ConflictOutcome::Resolved);
        transition(&mut record, ConflictOutcome::LossOfSeparation);
    }

    #[test]
    fn lifecycle_timestamps() {
        // Worked arithmetic: detect at 10000 ms, apply at 10300 ms.
        let key = ConflictKey { a: 0, b: 1, detected_at_ms: 10_000 };
        let mut record = ConflictRecord::new(key, 12_000);
        record.per_uav[0].applied_at_ms = Some(10_250);
        record.per_uav[1].applied_at_ms = Some(10_300);
        assert_eq!(record.applied_at_ms(), Some(10_300));
        let resolution = record.applied_at_ms().unwrap() - key.detected_at_ms;
        assert_eq!(resolution, 300);
    }
}
