//! Metrics are derived purely from the event log, so a persisted log replays
//! to bit-identical numbers.

use alloc::vec::Vec;

use crate::engine::{EventKind, LogEvent};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    /// Conflict records opened (Detect events).
    pub conflicts: u64,
    /// Separation-loss episodes, with or without a covering record.
    pub losses: u64,
    /// Records that blew the resolution deadline.
    pub expired: u64,
    /// Decisions taken onboard because coverage was unavailable.
    pub degraded: u64,
    /// Node-to-node link migrations.
    pub handovers: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Mean over resolved conflicts of max(applied) - detected; None when no
    /// conflict resolved.
    pub avg_resolution_time_ms: Option<f64>,
    /// Resolved / (resolved + record-closing losses), percent; None when no
    /// record reached a terminal outcome.
    pub resolution_accuracy_pct: Option<f64>,
    /// Deliveries per minute across the whole swarm.
    pub throughput_dpm: f64,
    /// Mean request roundtrip over networked (non-degraded) commands.
    pub edge_latency_ms: Option<f64>,
    pub resolved: u64,
    /// Losses that closed an open conflict record.
    pub record_losses: u64,
    pub deliveries: u64,
    pub counts: Counts,
}

/// Mean and population standard deviation; None for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, libm::sqrt(var)))
}

/// Least-squares slope of y against x; None with fewer than two distinct x.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fold a sorted event log into the run-level report.
pub fn summarize(log: &[LogEvent], config: &ScenarioConfig) -> MetricsReport {
    let mut counts = Counts::default();
    let mut resolution_times: Vec<f64> = Vec::new();
    let mut latencies: Vec<f64> = Vec::new();
    let mut record_losses = 0u64;
    let mut deliveries = 0u64;

    for event in log {
        match event.kind {
            EventKind::Detect => counts.conflicts += 1,
            EventKind::Apply => {
                let degraded = event.detail_get("degraded") == Some("1");
                if degraded {
                    counts.degraded += 1;
                } else if let Some(ms) = event.detail_get("latency_ms") {
                    if let Ok(v) = ms.parse::<f64>() {
                        latencies.push(v);
                    }
                }
            }
            EventKind::Resolve => {
                if let Some(ms) = event.detail_get("resolution_ms") {
                    if let Ok(v) = ms.parse::<f64>() {
                        resolution_times.push(v);
                    }
                }
            }
            EventKind::Loss => {
                counts.losses += 1;
                if event.detail_get("detected").is_some() {
                    record_losses += 1;
                }
            }
            EventKind::Expire => counts.expired += 1,
            EventKind::Handover => counts.handovers += 1,
            EventKind::Delivery => deliveries += 1,
            _ => {}
        }
    }

    let resolved = resolution_times.len() as u64;
    let terminal = resolved + record_losses;
    let minutes = config.sim_duration_s as f64 / 60.0;

    MetricsReport {
        avg_resolution_time_ms: mean_std(&resolution_times).map(|(m, _)| m),
        resolution_accuracy_pct: (terminal > 0)
            .then(|| 100.0 * resolved as f64 / terminal as f64),
        throughput_dpm: deliveries as f64 / minutes,
        edge_latency_ms: mean_std(&latencies).map(|(m, _)| m),
        resolved,
        record_losses,
        deliveries,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::String;

    fn ev(time_ms: u64, kind: EventKind, detail: &str) -> LogEvent {
        LogEvent {
            time_ms,
            kind,
            a: Some(0),
            b: Some(1),
            detail: String::from(detail),
        }
    }

    #[test]
    fn empty_log_yields_empty_report() {
        let cfg = ScenarioConfig::default();
        let report = summarize(&[], &cfg);
        assert_eq!(report.avg_resolution_time_ms, None);
        assert_eq!(report.resolution_accuracy_pct, None);
        assert_eq!(report.edge_latency_ms, None);
        assert_eq!(report.throughput_dpm, 0.0);
        assert_eq!(report.counts, Counts::default());
    }

    #[test]
    fn hand_computed_report() {
        // Two conflicts: one resolves in 120 ms, one closes in a loss.
        // Three networked applies at 120/200/120 ms, one degraded apply.
        // Five deliveries over a 600 s run -> 0.5 per minute.
        let cfg = ScenarioConfig::default();
        let mut log = vec![
            ev(0, EventKind::Detect, "score=0.5;t_cpa_ms=2500"),
            ev(120, EventKind::Apply, "pair=0-1;detected=0;class=AltUp10;latency_ms=120;degraded=0"),
            ev(120, EventKind::Apply, "pair=0-1;detected=0;class=AltDown10;latency_ms=120;degraded=0"),
            ev(7620, EventKind::Resolve, "detected=0;resolution_ms=120;expired=0"),
            ev(10_000, EventKind::Detect, "score=0.4;t_cpa_ms=12000"),
            ev(10_200, EventKind::Apply, "pair=2-3;detected=10000;class=LeftTurn;latency_ms=200;degraded=0"),
            ev(10_200, EventKind::Apply, "pair=2-3;detected=10000;class=RightTurn;latency_ms=0;degraded=1"),
            ev(11_500, EventKind::Loss, "detected=10000"),
            ev(50_000, EventKind::Loss, "record=none"),
            ev(30_000, EventKind::Handover, "old=0;new=1"),
        ];
        for i in 0..5u64 {
            log.push(ev(1000 * i, EventKind::Delivery, &format!("total={i}")));
        }
        let report = summarize(&log, &cfg);
        assert_eq!(report.avg_resolution_time_ms, Some(120.0));
        assert_eq!(report.resolution_accuracy_pct, Some(50.0));
        assert!((report.edge_latency_ms.unwrap() - (120.0 + 120.0 + 200.0) / 3.0).abs() < 1e-12);
        assert_eq!(report.throughput_dpm, 0.5);
        assert_eq!(report.counts.conflicts, 2);
        assert_eq!(report.counts.losses, 2);
        assert_eq!(report.record_losses, 1);
        assert_eq!(report.counts.degraded, 1);
        assert_eq!(report.counts.handovers, 1);
        assert_eq!(report.deliveries, 5);
    }

    #[test]
    fn mean_std_known_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((m - 5.0).abs() < 1e-12);
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(mean_std(&[]), None);
    }

    #[test]
    fn slope_of_exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 + 2.5 * i as f64)).collect();
        assert!((least_squares_slope(&pts).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(least_squares_slope(&pts[..1]), None);
        assert_eq!(least_squares_slope(&[(1.0, 2.0), (1.0, 4.0)]), None);
    }
}
