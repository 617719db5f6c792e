//! Deterministic simulation core for edge-assisted conflict detection and
//! resolution in delivery-drone swarms.
//!
//! The crate is `no_std` + `alloc`: every algorithm here (kinematics, conflict
//! geometry, policies, the MLP, the network model, and the engine itself) is a
//! pure function of its inputs, which is what makes runs reproducible down to
//! the byte. File formats, CLI, and parallel sweeps live in the companion
//! binary crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod detection;
pub mod engine;
pub mod kinematics;
pub mod metrics;
pub mod mlp;
pub mod netmodel;
pub mod policy;
pub mod rng;
pub mod scenario;

pub use detection::{ConflictKey, ConflictOutcome, ConflictRecord, CpaResult};
pub use engine::{run, EngineError, EventKind, LogEvent, RunOutput};
pub use kinematics::{ManeuverClass, UavState, UavStatus};
pub use metrics::{summarize, MetricsReport};
pub use mlp::{mlp_train, MlpModel};
pub use policy::{featurize, generate_training_set, oracle_decide, FeatureVector, LabeledSample};
pub use rng::Rng;
pub use scenario::{init_world, load_config, Controller, PolicyKind, ScenarioConfig, WorldState};
