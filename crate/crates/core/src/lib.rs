//! A desk-scale laboratory for Tor path selection.
//!
//! The crate generates a synthetic Tor world ([`netmodel`]), simulates streams
//! over it under load-dependent congestion ([`simcore`]), implements the
//! circuit-selection algorithms under comparison ([`pathsel`]), trains the
//! circuit-performance classifier ([`learn`]) and measures anonymity
//! ([`anonmetrics`]). The [`cli`] module wires everything into reproducible
//! experiment commands that read a config file and write CSV/JSON reports.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod anonmetrics;
pub mod cli;
mod error;
pub mod learn;
pub mod netmodel;
pub mod pathsel;
pub mod seed;
pub mod simcore;
pub mod stats;

pub use error::{Error, Result};
pub use netmodel::{
    AsTopology, CountryCode, Endpoint, EndpointKind, NetworkConfig, NetworkModel, Relay, RelayId,
};
pub use pathsel::{Algorithm, Circuit};
