//! On-disk formats: event-log CSV, metrics JSON, sweep CSV, run manifests,
//! and model files.

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::Path;
use swarmsim_core::engine::{EventKind, LogEvent};
use swarmsim_core::metrics::{Counts, MetricsReport};
use swarmsim_core::mlp::MlpModel;
use swarmsim_core::policy::{LabeledSample, FEATURE_LEN};

pub const LOG_HEADER: &str = "time_ms,kind,id_a,id_b,detail";
pub const SWEEP_HEADER: &str = "uav_count,controller,seed,avg_resolution_time_ms,\
resolution_accuracy_pct,throughput_dpm,edge_latency_ms,conflicts,losses,expired,\
degraded,handovers";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn fmt_id(id: Option<u32>) -> String {
    id.map(|v| v.to_string()).unwrap_or_default()
}

/// Serialize a sorted event log to canonical CSV.
pub fn log_to_csv(log: &[LogEvent]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for e in log {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.time_ms,
            e.kind.name(),
            fmt_id(e.a),
            fmt_id(e.b),
            e.detail
        ));
    }
    out
}

/// Parse the canonical log CSV; errors name the offending row.
pub fn log_from_csv(text: &str) -> Result<Vec<LogEvent>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == LOG_HEADER => {}
        _ => bail!("log row 1: expected header `{LOG_HEADER}`"),
    }
    let mut log = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(5, ',');
        let time_ms: u64 = parts
            .next()
            .unwrap()
            .parse()
            .with_context(|| format!("log row {row}: bad time_ms"))?;
        let kind_name = parts
            .next()
            .with_context(|| format!("log row {row}: missing kind"))?;
        let kind = EventKind::from_name(kind_name)
            .with_context(|| format!("log row {row}: unknown kind `{kind_name}`"))?;
        let parse_id = |field: Option<&str>, name: &str| -> Result<Option<u32>> {
            let field = field.with_context(|| format!("log row {row}: missing {name}"))?;
            if field.is_empty() {
                Ok(None)
            } else {
                Ok(Some(field.parse().with_context(|| {
                    format!("log row {row}: bad {name}")
                })?))
            }
        };
        let a = parse_id(parts.next(), "id_a")?;
        let b = parse_id(parts.next(), "id_b")?;
        let detail = parts
            .next()
            .with_context(|| format!("log row {row}: missing detail"))?
            .to_string();
        log.push(LogEvent { time_ms, kind, a, b, detail });
    }
    Ok(log)
}

fn opt_num(v: Option<f64>) -> Value {
    match v {
        Some(x) => json!(x),
        None => Value::Null,
    }
}

/// Flat JSON document with one key per report field; undefined means are
/// null, never 0/0.
pub fn report_to_json(r: &MetricsReport) -> Value {
    json!({
        "avg_resolution_time_ms": opt_num(r.avg_resolution_time_ms),
        "resolution_accuracy_pct": opt_num(r.resolution_accuracy_pct),
        "throughput_dpm": r.throughput_dpm,
        "edge_latency_ms": opt_num(r.edge_latency_ms),
        "resolved": r.resolved,
        "record_losses": r.record_losses,
        "deliveries": r.deliveries,
        "conflicts": r.counts.conflicts,
        "losses": r.counts.losses,
        "expired": r.counts.expired,
        "degraded": r.counts.degraded,
        "handovers": r.counts.handovers,
    })
}

pub fn report_to_string(r: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(&report_to_json(r)).unwrap();
    s.push('\n');
    s
}

pub fn report_from_json(text: &str) -> Result<MetricsReport> {
    let value: Value = serde_json::from_str(text).context("metrics.json: invalid JSON")?;
    let obj: &Map<String, Value> = value
        .as_object()
        .context("metrics.json: expected an object")?;
    let opt = |key: &str| -> Result<Option<f64>> {
        match obj.get(key) {
            Some(Value::Null) => Ok(None),
            Some(v) => Ok(Some(
                v.as_f64().with_context(|| format!("metrics.json: `{key}` not a number"))?,
            )),
            None => bail!("metrics.json: missing `{key}`"),
        }
    };
    let num = |key: &str| -> Result<f64> {
        obj.get(key)
            .and_then(Value::as_f64)
            .with_context(|| format!("metrics.json: missing numeric `{key}`"))
    };
    let count = |key: &str| -> Result<u64> {
        obj.get(key)
            .and_then(Value::as_u64)
            .with_context(|| format!("metrics.json: missing count `{key}`"))
    };
    Ok(MetricsReport {
        avg_resolution_time_ms: opt("avg_resolution_time_ms")?,
        resolution_accuracy_pct: opt("resolution_accuracy_pct")?,
        throughput_dpm: num("throughput_dpm")?,
        edge_latency_ms: opt("edge_latency_ms")?,
        resolved: count("resolved")?,
        record_losses: count("record_losses")?,
        deliveries: count("deliveries")?,
        counts: Counts {
            conflicts: count("conflicts")?,
            losses: count("losses")?,
            expired: count("expired")?,
            degraded: count("degraded")?,
            handovers: count("handovers")?,
        },
    })
}

/// Manifest accompanying every output directory: enough to reproduce it.
pub fn manifest_json(config_echo: &str, seed: u64, artifacts: &[(&str, String)]) -> String {
    let mut map = Map::new();
    for (name, digest) in artifacts {
        map.insert((*name).to_string(), json!(digest));
    }
    let doc = json!({
        "config": config_echo,
        "seed": seed,
        "artifacts": Value::Object(map),
    });
    let mut s = serde_json::to_string_pretty(&doc).unwrap();
    s.push('\n');
    s
}

/// Dump a training set for inspection: 36 feature columns plus the label
/// name, one scene per row.
pub fn training_set_to_csv(samples: &[LabeledSample]) -> String {
    let mut out: String = (0..FEATURE_LEN).map(|i| format!("f{i},")).collect();
    out.push_str("label\n");
    for s in samples {
        for v in &s.features {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(s.label.name());
        out.push('\n');
    }
    out
}

pub fn read_model(path: &Path) -> Result<MlpModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model file {}", path.display()))?;
    MlpModel::from_text(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmsim_core::{load_config, run};

    fn sample_report() -> MetricsReport {
        MetricsReport {
            avg_resolution_time_ms: Some(123.456789),
            resolution_accuracy_pct: Some(92.3),
            throughput_dpm: 41.0 / 3.0,
            edge_latency_ms: None,
            resolved: 12,
            record_losses: 1,
            deliveries: 410,
            counts: Counts {
                conflicts: 13,
                losses: 2,
                expired: 1,
                degraded: 4,
                handovers: 7,
            },
        }
    }

    #[test]
    fn training_csv_has_feature_columns_and_label() {
        let cfg = swarmsim_core::ScenarioConfig::default();
        let samples = swarmsim_core::generate_training_set(3, &cfg, 9);
        let csv = training_set_to_csv(&samples);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("f0,f1,"));
        assert!(header.ends_with("f35,label"));
        assert_eq!(lines.count(), 3);
        for (line, s) in csv.lines().skip(1).zip(&samples) {
            assert_eq!(line.split(',').count(), FEATURE_LEN + 1);
            assert!(line.ends_with(s.label.name()));
        }
    }

    #[test]
    fn metrics_json_round_trip_is_exact() {
        let r = sample_report();
        assert_eq!(report_from_json(&report_to_string(&r)).unwrap(), r);
    }

    #[test]
    fn metrics_json_null_for_undefined_means() {
        let mut r = sample_report();
        r.avg_resolution_time_ms = None;
        let v = report_to_json(&r);
        assert!(v["avg_resolution_time_ms"].is_null());
    }

    #[test]
    fn log_csv_round_trip() {
        let cfg = load_config("n_uavs = 40\nsim_duration = 60\nseed = 3").unwrap();
        let out = run(&cfg, None).unwrap();
        let csv = log_to_csv(&out.log);
        let parsed = log_from_csv(&csv).unwrap();
        assert_eq!(parsed, out.log);
        // And re-serialization is byte-identical.
        assert_eq!(log_to_csv(&parsed), csv);
    }

    #[test]
    fn log_csv_error_names_row() {
        let text = format!("{LOG_HEADER}\n0,Detect,0,1,ok\nnonsense");
        let err = log_from_csv(&text).unwrap_err();
        assert!(format!("{err:#}").contains("row 3"));
    }

    #[test]
    fn unknown_kind_rejected() {
        let text = format!("{LOG_HEADER}\n0,Nonsense,0,1,x");
        assert!(log_from_csv(&text).is_err());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
