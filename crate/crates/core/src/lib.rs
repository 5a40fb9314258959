//! Energy-efficient semi-static power control and link adaptation for HSDPA.
//!
//! The crate contains the Node-B power model, the CQI/MCS table, a TTI-level
//! link model with multipath Rayleigh fading, the EE-optimal power
//! controller with its dual reconfiguration trigger, the D-TxAA dual-stream
//! extension and a deterministic simulator for comparing strategies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ee_controller;
pub mod link_channel;
pub mod mcs_table;
pub mod mimo_dtxaa;
pub mod power_model;
pub mod sim_engine;

pub use ee_controller::{ControllerConfig, ControllerState, McsChoice, Selection};
pub use link_channel::{ChannelParams, FadingChannel, PowerDelayProfile};
pub use mcs_table::McsTable;
pub use power_model::PowerModelParams;
pub use sim_engine::{
    derive_seed, run, run_metrics, sweep, AntennaMode, RunMetrics, ScenarioConfig, SimError, Strategy, SweepPoint,
    SweepValue, SweepVariable, TtiOutcome, TtiRecord,
};
