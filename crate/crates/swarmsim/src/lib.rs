//! IO, file formats, sweeps, and the command-line front end for the
//! deterministic swarm deconfliction simulator in `swarmsim-core`.

pub mod cli;
pub mod io;
pub mod sweep;
