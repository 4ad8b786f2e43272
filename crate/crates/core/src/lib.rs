//! Discrete-event simulator for LTE vehicle-to-pedestrian (V2P) latency and
//! packet delivery at an urban intersection.
//!
//! VRUs (pedestrians) emit awareness messages that travel uplink to the
//! eNodeB, through the backhaul and either the conventional transport/core
//! network or an edge server co-located with the gateway, and back downlink
//! to the vehicles. The radio hops are abstracted at resource-block
//! granularity with synthesized Rayleigh fading, an effective-SNR mapping, a
//! calibrated BLER curve and HARQ.
//!
//! Module map:
//! - [`scenario`]: configuration schema, defaults and validation.
//! - [`mobility`]: traffic generation, hard-core placement, movement-script traces.
//! - [`channel`]: tapped-delay-line fading, pathloss, noise and SNR.
//! - [`linkphy`]: resource grid capacity, effective SNR, BLER and HARQ.
//! - [`latency`]: the six-term end-to-end latency decomposition.
//! - [`engine`]: the event queue and the per-packet simulation loop.
//! - [`metrics`]: Monte Carlo aggregation and parameter sweeps.
//! - [`cli`]: the `v2psim` command-line front end.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod engine;
pub mod latency;
pub mod linkphy;
pub mod metrics;
pub mod mobility;
pub mod rng;
pub mod scenario;

pub use scenario::{validate_config, ScenarioConfig, ValidatedConfig};
