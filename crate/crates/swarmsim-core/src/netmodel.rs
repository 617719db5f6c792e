//! Edge-node association, handover bookkeeping, FIFO inference queues, and
//! the centralized ground-station baseline.

use crate::detection::ConflictKey;
use crate::scenario::LatencyParams;

/// A stationary compute node with a single-server FIFO inference queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeNodeState {
    pub id: u32,
    pub pos: (f64, f64),
    pub busy_until_ms: u64,
    pub queue_len: u64,
    pub served: u64,
}

/// The centralized controller baseline: one server for the whole arena.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralStation {
    pub pos: (f64, f64),
    pub busy_until_ms: u64,
    pub queue_len: u64,
    pub served: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestTarget {
    Node(u32),
    Central,
    /// Out-of-coverage fallback: the decision runs on the aircraft.
    Onboard,
}

/// Phase timeline of one resolution request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionRequest {
    pub key: ConflictKey,
    pub uav_id: u32,
    pub created_at_ms: u64,
    pub target: RequestTarget,
    pub uplink_done_ms: u64,
    pub service_start_ms: u64,
    pub service_done_ms: u64,
    pub downlink_done_ms: u64,
}

impl ResolutionRequest {
    pub fn roundtrip_ms(&self) -> u64 {
        self.downlink_done_ms - self.created_at_ms
    }

    pub fn is_degraded(&self) -> bool {
        self.target == RequestTarget::Onboard
    }
}

/// Nearest node within communication range (closed interval), ties to the
/// lower id; `None` when no node covers the position.
pub fn associate(uav_pos: (f64, f64), nodes: &[EdgeNodeState], comm_range: f64) -> Option<u32> {
    let mut best: Option<(f64, u32)> = None;
    for node in nodes {
        let dx = node.pos.0 - uav_pos.0;
        let dy = node.pos.1 - uav_pos.1;
        let d = libm::sqrt(dx * dx + dy * dy);
        match best {
            Some((bd, _)) if d >= bd => {}
            _ => best = Some((d, node.id)),
        }
    }
    best.filter(|&(d, _)| d <= comm_range).map(|(_, id)| id)
}

/// FIFO single-server recurrence: service starts when both the request has
/// arrived and the server is free. Returns (start, completion).
pub fn enqueue_inference(busy_until_ms: &mut u64, arrival_ms: u64, inference_ms: u64) -> (u64, u64) {
    let start = arrival_ms.max(*busy_until_ms);
    let completion = start + inference_ms;
    *busy_until_ms = completion;
    (start, completion)
}

impl EdgeNodeState {
    pub fn enqueue(&mut self, arrival_ms: u64, inference_ms: u64) -> (u64, u64) {
        let (start, completion) = enqueue_inference(&mut self.busy_until_ms, arrival_ms, inference_ms);
        if start > arrival_ms {
            self.queue_len += 1;
        }
        self.served += 1;
        (start, completion)
    }
}

impl CentralStation {
    pub fn enqueue(&mut self, arrival_ms: u64, inference_ms: u64) -> (u64, u64) {
        let (start, completion) = enqueue_inference(&mut self.busy_until_ms, arrival_ms, inference_ms);
        if start > arrival_ms {
            self.queue_len += 1;
        }
        self.served += 1;
        (start, completion)
    }
}

/// Build the phase timeline for a request routed to an edge node.
pub fn edge_roundtrip(
    key: ConflictKey,
    uav_id: u32,
    created_at_ms: u64,
    node: &mut EdgeNodeState,
    params: &LatencyParams,
) -> ResolutionRequest {
    let uplink_done = created_at_ms + params.uplink_ms;
    let (start, done) = node.enqueue(uplink_done, params.inference_ms);
    ResolutionRequest {
        key,
        uav_id,
        created_at_ms,
        target: RequestTarget::Node(node.id),
        uplink_done_ms: uplink_done,
        service_start_ms: start,
        service_done_ms: done,
        downlink_done_ms: done + params.downlink_ms,
    }
}

/// Phase timeline for a request routed through the backhaul to the central
/// station.
pub fn central_roundtrip(
    key: ConflictKey,
    uav_id: u32,
    created_at_ms: u64,
    station: &mut CentralStation,
    params: &LatencyParams,
) -> ResolutionRequest {
    let uplink_done = created_at_ms + params.uplink_ms + params.central_backhaul_ms;
    let (start, done) = station.enqueue(uplink_done, params.inference_ms);
    ResolutionRequest {
        key,
        uav_id,
        created_at_ms,
        target: RequestTarget::Central,
        uplink_done_ms: uplink_done,
        service_start_ms: start,
        service_done_ms: done,
        downlink_done_ms: done + params.central_backhaul_ms + params.downlink_ms,
    }
}

/// Out-of-coverage fallback: the decision runs onboard. No network hops, but
/// the constrained flight computer still pays an inference cost. Tagged
/// degraded and excluded from edge-latency statistics.
pub fn onboard_roundtrip(
    key: ConflictKey,
    uav_id: u32,
    created_at_ms: u64,
    onboard_inference_ms: u64,
) -> ResolutionRequest {
    let done = created_at_ms + onboard_inference_ms;
    ResolutionRequest {
        key,
        uav_id,
        created_at_ms,
        target: RequestTarget::Onboard,
        uplink_done_ms: created_at_ms,
        service_start_ms: created_at_ms,
        service_done_ms: done,
        downlink_done_ms: done,
    }
}

/// Per-UAV network attachment state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkState {
    pub node: Option<u32>,
    /// Requests are blocked during a handover window.
    pub blocked_until_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkChange {
    /// Node-to-node migration; requests block for the handover window.
    Handover { old: u32, new: u32 },
    /// Coverage lost; onboard fallback engages.
    CoverageLost { old: u32 },
    /// Coverage regained; fresh association, no block window.
    CoverageRegained { new: u32 },
}

/// Fold a new association into the link state, reporting the transition.
pub fn update_link(
    link: &mut LinkState,
    new_assoc: Option<u32>,
    now_ms: u64,
    handover_ms: u64,
) -> Option<LinkChange> {
    let change = match (link.node, new_assoc) {
        (Some(old), Some(new)) if old != new => {
            link.blocked_until_ms = now_ms + handover_ms;
            Some(LinkChange::Handover { old, new })
        }
        (Some(old), None) => Some(LinkChange::CoverageLost { old }),
        (None, Some(new)) => Some(LinkChange::CoverageRegained { new }),
        _ => None,
    };
    link.node = new_assoc;
    change
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{init_world, ScenarioConfig};

    fn key() -> ConflictKey {
        ConflictKey { a: 0, b: 1, detected_at_ms: 0 }
    }

    #[test]
    fn associate_at_node_position() {
        let world = init_world(&ScenarioConfig::default());
        let pos = world.edge_nodes[4].pos;
        assert_eq!(associate(pos, &world.edge_nodes, 1000.0), Some(4));
    }

    fn node(id: u32, pos: (f64, f64)) -> EdgeNodeState {
        EdgeNodeState { id, pos, busy_until_ms: 0, queue_len: 0, served: 0 }
    }

    #[test]
    fn associate_closed_boundary() {
        let nodes = [node(0, (0.0, 0.0)), node(1, (5000.0, 0.0))];
        // Exactly on the range boundary: still covered (closed interval).
        assert_eq!(associate((1000.0, 0.0), &nodes, 1000.0), Some(0));
        // Just beyond: nearer to node 0 than node 1, but out of range.
        assert_eq!(associate((1000.1, 0.0), &nodes, 1000.0), None);
    }

    #[test]
    fn associate_arena_corner_uncovered() {
        // Corner (0,0): nearest node sits at (1666.7, 1666.7), about 2357 m
        // away, beyond the 1 km range.
        let world = init_world(&ScenarioConfig::default());
        assert_eq!(associate((0.0, 0.0), &world.edge_nodes, 1000.0), None);
    }

    #[test]
    fn associate_ties_to_lower_id() {
        let nodes = [node(0, (0.0, 0.0)), node(1, (2000.0, 0.0))];
        // Equidistant from both: the lower id wins.
        assert_eq!(associate((1000.0, 0.0), &nodes, 5000.0), Some(0));
    }

    #[test]
    fn fifo_idle_service() {
        let mut busy = 0u64;
        assert_eq!(enqueue_inference(&mut busy, 0, 80), (0, 80));
    }

    #[test]
    fn fifo_two_simultaneous_arrivals() {
        let mut busy = 0u64;
        assert_eq!(enqueue_inference(&mut busy, 0, 80), (0, 80));
        assert_eq!(enqueue_inference(&mut busy, 0, 80), (80, 160));
    }

    #[test]
    fn fifo_recurrence_staggered() {
        let mut busy = 0u64;
        let completions: Vec<u64> = [0u64, 50, 100]
            .iter()
            .map(|&a| enqueue_inference(&mut busy, a, 80).1)
            .collect();
        assert_eq!(completions, vec![80, 160, 240]);
    }

    #[test]
    fn idle_edge_roundtrip_is_120ms() {
        let params = crate::scenario::LatencyParams::default();
        let mut node = EdgeNodeState {
            id: 0,
            pos: (0.0, 0.0),
            busy_until_ms: 0,
            queue_len: 0,
            served: 0,
        };
        let req = edge_roundtrip(key(), 0, 0, &mut node, &params);
        assert_eq!(req.roundtrip_ms(), 120);
        assert!(req.roundtrip_ms() <= params.budget_ms);
    }

    #[test]
    fn idle_central_roundtrip_is_220ms() {
        let params = crate::scenario::LatencyParams::default();
        let mut station = CentralStation {
            pos: (0.0, 0.0),
            busy_until_ms: 0,
            queue_len: 0,
            served: 0,
        };
        let req = central_roundtrip(key(), 0, 0, &mut station, &params);
        assert_eq!(req.roundtrip_ms(), 220);
    }

    #[test]
    fn loaded_edge_roundtrip_waits_for_queue() {
        let params = crate::scenario::LatencyParams::default();
        let mut node = EdgeNodeState {
            id: 0,
            pos: (0.0, 0.0),
            busy_until_ms: 0,
            queue_len: 0,
            served: 0,
        };
        // Four jobs already queued at the same arrival instant.
        for _ in 0..4 {
            node.enqueue(20, params.inference_ms);
        }
        let req = edge_roundtrip(key(), 0, 0, &mut node, &params);
        assert_eq!(req.roundtrip_ms(), 440);
    }

    #[test]
    fn onboard_roundtrip_charges_local_inference_only() {
        let req = onboard_roundtrip(key(), 3, 1234, 120);
        assert_eq!(req.roundtrip_ms(), 120);
        assert_eq!(req.uplink_done_ms, 1234);
        assert!(req.is_degraded());
    }

    #[test]
    fn handover_block_window() {
        let mut link = LinkState { node: Some(0), blocked_until_ms: 0 };
        let change = update_link(&mut link, Some(1), 1000, 50);
        assert_eq!(change, Some(LinkChange::Handover { old: 0, new: 1 }));
        assert_eq!(link.blocked_until_ms, 1050);
    }

    #[test]
    fn coverage_transitions() {
        let mut link = LinkState { node: Some(0), blocked_until_ms: 0 };
        assert_eq!(
            update_link(&mut link, None, 0, 50),
            Some(LinkChange::CoverageLost { old: 0 })
        );
        assert_eq!(link.blocked_until_ms, 0);
        assert_eq!(
            update_link(&mut link, Some(2), 100, 50),
            Some(LinkChange::CoverageRegained { new: 2 })
        );
        // Fresh association carries no block window.
        assert_eq!(link.blocked_until_ms, 0);
        assert_eq!(update_link(&mut link, Some(2), 200, 50), None);
    }
}
