//! TTI-driven link simulator binding the fading channel, the MCS table, the
//! power controller and a power-control strategy.
//!
//! Each TTI the channel advances, the report measured `feedback_delay_ttis`
//! earlier reaches the Node B together with the HARQ outcome of that TTI,
//! the strategy picks the power, the MCS is chosen from the report, and the
//! block is decoded against the current channel.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ee_controller::{
    serve_cqi, Action, ControllerConfig, ControllerError, ControllerState, Feedback, McsChoice, Report, TriggerPolicy,
};
use crate::link_channel::{hs_sinr_db, ChannelError, ChannelParams, ChannelState, DecodeModel, FadingChannel, Outcome};
use crate::mcs_table::{McsTable, CQI_OUT_OF_RANGE};
use crate::mimo_dtxaa::{
    gram2, pci_codebook, per_stream_sinr, select_mode_and_feedback, single_stream_sinr, StreamMode,
};
use crate::power_model::{db_to_linear, dbm_to_watt, linear_to_db, total_power, PowerModelError, PowerModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Power(#[from] PowerModelError),
    #[error("unknown sweep variable {0:?} (expected speed, distance, theta_min, fixed_power or antenna_mode)")]
    UnknownVariable(String),
    #[error("sweep value {value} does not fit variable {variable}")]
    BadValue { variable: SweepVariable, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntennaMode {
    Siso,
    /// One transmit antenna, two receive antennas with maximal-ratio combining.
    Simo,
    /// 2x2 D-TxAA.
    Mimo,
}

impl AntennaMode {
    /// `(n_tx, n_rx)`.
    pub fn dimensions(self) -> (usize, usize) {
        match self {
            AntennaMode::Siso => (1, 1),
            AntennaMode::Simo => (1, 2),
            AntennaMode::Mimo => (2, 2),
        }
    }

    /// Transmit chains powered at the Node B.
    pub fn active_antennas(self) -> u8 {
        self.dimensions().0 as u8
    }
}

impl fmt::Display for AntennaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AntennaMode::Siso => "siso",
            AntennaMode::Simo => "simo",
            AntennaMode::Mimo => "mimo",
        })
    }
}

impl FromStr for AntennaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "siso" => Ok(AntennaMode::Siso),
            "simo" => Ok(AntennaMode::Simo),
            "mimo" => Ok(AntennaMode::Mimo),
            _ => Err(format!("unknown antenna mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Constant transmit power, MCS from the report.
    FixedBaseline,
    /// EE-optimal power applied on every TTI.
    PerTtiOptimal,
    /// EE-optimal power applied through the dual trigger.
    SemiStatic,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::FixedBaseline, Strategy::PerTtiOptimal, Strategy::SemiStatic];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::FixedBaseline => "fixed_baseline",
            Strategy::PerTtiOptimal => "per_tti_optimal",
            Strategy::SemiStatic => "semi_static",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed_baseline" => Ok(Strategy::FixedBaseline),
            "per_tti_optimal" => Ok(Strategy::PerTtiOptimal),
            "semi_static" => Ok(Strategy::SemiStatic),
            _ => Err(format!("unknown strategy {s:?}")),
        }
    }
}

pub const REFERENCE_DISTANCE_M: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub antenna_mode: AntennaMode,
    pub strategy: Strategy,
    pub duration_ttis: u64,
    pub seed: u64,
    pub channel: ChannelParams,
    pub controller: ControllerConfig,
    pub power_model: PowerModelParams,
    pub feedback_delay_ttis: u32,
    pub baseline_power_dbm: f64,
    pub decode: DecodeModel,
    #[serde(skip)]
    pub table: McsTable,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            antenna_mode: AntennaMode::Siso,
            strategy: Strategy::SemiStatic,
            duration_ttis: 10_000,
            seed: 1,
            channel: ChannelParams::default(),
            controller: ControllerConfig::default(),
            power_model: PowerModelParams::default(),
            feedback_delay_ttis: 3,
            baseline_power_dbm: 40.5,
            decode: DecodeModel::default(),
            table: McsTable::default_table(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.duration_ttis == 0 {
            return Err(SimError::Invalid("duration_ttis must be positive".into()));
        }
        if self.feedback_delay_ttis == 0 {
            return Err(SimError::Invalid("feedback_delay_ttis must be at least 1".into()));
        }
        if !self.baseline_power_dbm.is_finite() || self.baseline_power_dbm > self.controller.p_max_dbm {
            return Err(SimError::Invalid(format!(
                "baseline_power_dbm ({}) must be finite and not above p_max_dbm ({})",
                self.baseline_power_dbm, self.controller.p_max_dbm
            )));
        }
        if !(self.decode.margin_db.is_finite()) {
            return Err(SimError::Invalid("decode margin must be finite".into()));
        }
        self.channel.validate()?;
        self.controller.validate(&self.table)?;
        self.power_model_for_mode().validate()?;
        Ok(())
    }

    /// User 60 m from the Node B on pedestrian A at 3 km/h, served with the
    /// category-10 table. Inter-cell interference stays at the level that
    /// gives the default 5 dB geometry at 300 m.
    pub fn reference() -> Self {
        Self {
            channel: ChannelParams {
                distance_m: REFERENCE_DISTANCE_M,
                ..ChannelParams::default()
            },
            table: McsTable::category10(),
            ..Self::default()
        }
    }

    /// Power model with the antenna count implied by the antenna mode.
    pub fn power_model_for_mode(&self) -> PowerModelParams {
        self.power_model.with_antennas(self.antenna_mode.active_antennas())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TtiOutcome {
    Idle,
    Ack,
    Nack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtiRecord {
    pub tti_index: u64,
    pub p_tx_dbm: f64,
    pub mcs: McsChoice,
    /// Primary-stream CQI measured this TTI.
    pub reported_cqi: u8,
    /// Effective SINR of the primary stream, dB.
    pub sinr_db: f64,
    /// Ack only when every stream decoded.
    pub outcome: TtiOutcome,
    pub delivered_bits: u64,
    pub consumed_energy_j: f64,
    pub delta_db: f64,
    pub reconfigured: bool,
    /// HARQ retransmission of an earlier block.
    pub retransmission: bool,
}

impl TtiRecord {
    /// Instantaneous EE of this TTI, bit/J.
    pub fn ee(&self) -> f64 {
        self.delivered_bits as f64 / self.consumed_energy_j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Delivered bits over consumed energy, bit/J.
    pub avg_ee_bits_per_joule: f64,
    pub throughput_bps: f64,
    pub reconfig_count: u64,
    /// NACKs over first transmissions, per stream.
    pub nack_rate: f64,
    pub retransmissions: u64,
    pub delivered_bits: u64,
    pub consumed_energy_j: f64,
    pub mean_power_dbm: f64,
    pub ttis: u64,
}

/// Accumulates a run and optionally keeps its trace.
struct Recorder {
    keep_trace: bool,
    trace: Vec<TtiRecord>,
    bits: u64,
    energy: f64,
    reconfigs: u64,
    streams: u64,
    nacks: u64,
    retransmissions: u64,
    power_dbm_sum: f64,
    ttis: u64,
}

impl Recorder {
    fn push(&mut self, rec: TtiRecord, streams: u64, nacks: u64) {
        self.bits += rec.delivered_bits;
        self.energy += rec.consumed_energy_j;
        self.reconfigs += u64::from(rec.reconfigured);
        self.retransmissions += u64::from(rec.retransmission);
        self.streams += streams;
        self.nacks += nacks;
        self.power_dbm_sum += rec.p_tx_dbm;
        self.ttis += 1;
        if self.keep_trace {
            self.trace.push(rec);
        }
    }

    fn metrics(&self, tti_s: f64) -> RunMetrics {
        RunMetrics {
            avg_ee_bits_per_joule: self.bits as f64 / self.energy,
            throughput_bps: self.bits as f64 / (self.ttis as f64 * tti_s),
            reconfig_count: self.reconfigs,
            nack_rate: if self.streams == 0 {
                0.0
            } else {
                self.nacks as f64 / self.streams as f64
            },
            retransmissions: self.retransmissions,
            delivered_bits: self.bits,
            consumed_energy_j: self.energy,
            mean_power_dbm: self.power_dbm_sum / self.ttis as f64,
            ttis: self.ttis,
        }
    }
}

/// HARQ state of one transmission. `soft[k]` is the linear SINR stream `k`
/// has accumulated over earlier failed attempts (chase combining); zero
/// marks a first transmission.
#[derive(Debug, Clone)]
struct Harq {
    mcs: McsChoice,
    attempts: u32,
    soft: Vec<f64>,
    acked: Vec<bool>,
}

struct Pending {
    feedback: Feedback,
    harq: Harq,
}

/// What the user measures and reports in one TTI.
fn measure(
    mode: AntennaMode,
    state: &ChannelState,
    p_w: f64,
    table: &McsTable,
    params: &ChannelParams,
) -> (Report, Option<[[num_complex::Complex64; 2]; 2]>) {
    match mode {
        AntennaMode::Siso | AntennaMode::Simo => {
            let cqi = table.cqi_from_sinr(hs_sinr_db(p_w, state, params));
            (Report::Single { cqi }, None)
        }
        AntennaMode::Mimo => {
            let g = gram2(&state.gram());
            (Report::Mimo(select_mode_and_feedback(&g, table, p_w, params)), Some(g))
        }
    }
}

/// MCS for the current power from a report measured at `measured_dbm`.
fn link_adapt(report: &Report, measured_dbm: f64, p_now_dbm: f64, delta_db: f64, table: &McsTable) -> McsChoice {
    let serve = |cqi| serve_cqi(cqi, measured_dbm, p_now_dbm, delta_db, table);
    let choice = match *report {
        Report::Single { cqi } => McsChoice::Single(serve(cqi)),
        Report::Mimo(fb) => match fb.mode {
            StreamMode::Single => McsChoice::Single(serve(fb.cqi_primary)),
            StreamMode::Dual => match (serve(fb.cqi_primary), serve(fb.cqi_secondary)) {
                (j1, CQI_OUT_OF_RANGE) => McsChoice::Single(j1),
                (j1, j2) => McsChoice::Dual(j1, j2),
            },
        },
    };
    match choice {
        McsChoice::Single(CQI_OUT_OF_RANGE) => McsChoice::None,
        other => other,
    }
}

/// Effective SINR per stream for the chosen MCS on the current channel.
fn stream_sinrs(
    mcs: McsChoice,
    report: &Report,
    state: &ChannelState,
    gram: Option<&[[num_complex::Complex64; 2]; 2]>,
    p_w: f64,
    params: &ChannelParams,
) -> Vec<f64> {
    match (gram, mcs) {
        (_, McsChoice::None) => Vec::new(),
        (None, _) => vec![hs_sinr_db(p_w, state, params)],
        (Some(g), mcs) => {
            let pci = match report {
                Report::Mimo(fb) => fb.pci as usize,
                Report::Single { .. } => 0,
            };
            let w = pci_codebook()[pci];
            match mcs {
                McsChoice::Dual(..) => {
                    let (s1, s2) = per_stream_sinr(g, &w, p_w / 2.0, params);
                    vec![s1, s2]
                }
                _ => vec![single_stream_sinr(g, &w, p_w, params)],
            }
        }
    }
}

fn stream_cqis(mcs: McsChoice) -> Vec<u8> {
    match mcs {
        McsChoice::None => Vec::new(),
        McsChoice::Single(c) => vec![c],
        McsChoice::Dual(a, b) => vec![a, b],
    }
}

fn simulate(scenario: &ScenarioConfig, keep_trace: bool) -> Result<(RunMetrics, Vec<TtiRecord>), SimError> {
    scenario.validate()?;
    let table = &scenario.table;
    let cfg = &scenario.controller;
    let params = &scenario.channel;
    let pm = scenario.power_model_for_mode();
    let tti_s = cfg.tti_s();
    let (n_tx, n_rx) = scenario.antenna_mode.dimensions();

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut channel = FadingChannel::new(params, n_tx, n_rx, &mut rng)?;
    let mut ctrl = ControllerState::new(scenario.baseline_power_dbm, cfg);
    let policy = match scenario.strategy {
        Strategy::PerTtiOptimal => TriggerPolicy::EveryTti,
        _ => TriggerPolicy::DualTrigger,
    };

    let delay = scenario.feedback_delay_ttis as usize;
    let mut in_flight: VecDeque<Pending> = VecDeque::with_capacity(delay + 1);
    let mut latest: Option<Feedback> = None;
    let mut retx: VecDeque<Harq> = VecDeque::new();
    let mut rec = Recorder {
        keep_trace,
        trace: Vec::with_capacity(if keep_trace { scenario.duration_ttis as usize } else { 0 }),
        bits: 0,
        energy: 0.0,
        reconfigs: 0,
        streams: 0,
        nacks: 0,
        retransmissions: 0,
        power_dbm_sum: 0.0,
        ttis: 0,
    };

    for k in 0..scenario.duration_ttis {
        let state = channel.step(tti_s)?;

        // Feedback measured `delay` TTIs ago arrives now.
        let mut reconfigured = false;
        if in_flight.len() == delay {
            let Pending { feedback, harq } = in_flight.pop_front().expect("queue holds `delay` entries");
            if harq.acked.contains(&false) && harq.attempts < scenario.decode.max_retransmissions {
                retx.push_back(Harq {
                    attempts: harq.attempts + 1,
                    // Decoded streams carry fresh data in the retransmission.
                    soft: harq
                        .soft
                        .iter()
                        .zip(&harq.acked)
                        .map(|(&s, &a)| if a { 0.0 } else { s })
                        .collect(),
                    ..harq
                });
            }
            match scenario.strategy {
                Strategy::FixedBaseline => ctrl.observe(&feedback, cfg),
                Strategy::PerTtiOptimal | Strategy::SemiStatic => {
                    let decision = ctrl.on_tti_with(&feedback, table, cfg, &pm, policy)?;
                    reconfigured = decision.action == Action::Reconfigure;
                }
            }
            latest = Some(feedback);
        }

        let p_dbm = match scenario.strategy {
            Strategy::FixedBaseline => scenario.baseline_power_dbm,
            _ => ctrl.p_current_dbm,
        };
        let p_w = dbm_to_watt(p_dbm);

        let (report_now, gram) = measure(scenario.antenna_mode, state, p_w, table, params);
        let (mut harq, link_report) = match (retx.pop_front(), &latest) {
            (Some(h), Some(fb)) => (h, fb.report),
            (None, Some(fb)) => {
                let mcs = link_adapt(&fb.report, fb.measured_power_dbm, p_dbm, ctrl.delta_db, table);
                let n = stream_cqis(mcs).len();
                (
                    Harq {
                        mcs,
                        attempts: 0,
                        soft: vec![0.0; n],
                        acked: vec![false; n],
                    },
                    fb.report,
                )
            }
            (_, None) => (
                Harq {
                    mcs: McsChoice::None,
                    attempts: 0,
                    soft: Vec::new(),
                    acked: Vec::new(),
                },
                report_now,
            ),
        };
        let mcs = harq.mcs;

        let sinrs = stream_sinrs(mcs, &link_report, state, gram.as_ref(), p_w, params);
        // First-transmission outcomes drive the offset loop and the NACK rate.
        let mut outcomes = Vec::with_capacity(sinrs.len());
        let mut any_nack = false;
        let mut bits = 0u64;
        for (k, (&sinr, cqi)) in sinrs.iter().zip(stream_cqis(mcs)).enumerate() {
            let first = harq.soft[k] == 0.0;
            harq.soft[k] += db_to_linear(sinr);
            let o = scenario.decode.decode(linear_to_db(harq.soft[k]), cqi, table)?;
            harq.acked[k] = o == Outcome::Ack;
            if o == Outcome::Ack {
                bits += u64::from(table.tbs_bits(cqi).map_err(ChannelError::from)?);
            }
            any_nack |= o == Outcome::Nack;
            if first {
                outcomes.push(o);
            }
        }
        let nacks = outcomes.iter().filter(|&&o| o == Outcome::Nack).count() as u64;
        let energy = tti_s * total_power(p_w, &pm)?;

        let primary_sinr = match gram {
            None => hs_sinr_db(p_w, state, params),
            Some(_) => sinrs.first().copied().unwrap_or(f64::NEG_INFINITY),
        };
        rec.push(
            TtiRecord {
                tti_index: k,
                p_tx_dbm: p_dbm,
                mcs,
                reported_cqi: match report_now {
                    Report::Single { cqi } => cqi,
                    Report::Mimo(fb) => fb.cqi_primary,
                },
                sinr_db: primary_sinr,
                outcome: match (sinrs.is_empty(), any_nack) {
                    (true, _) => TtiOutcome::Idle,
                    (false, false) => TtiOutcome::Ack,
                    (false, true) => TtiOutcome::Nack,
                },
                retransmission: harq.attempts > 0,
                delivered_bits: bits,
                consumed_energy_j: energy,
                delta_db: ctrl.delta_db,
                reconfigured,
            },
            outcomes.len() as u64,
            nacks,
        );

        in_flight.push_back(Pending {
            feedback: Feedback {
                report: report_now,
                measured_power_dbm: p_dbm,
                outcomes,
                delivered_bits: bits,
                energy_j: energy,
            },
            harq,
        });
    }

    let metrics = rec.metrics(tti_s);
    Ok((metrics, rec.trace))
}

/// Runs one scenario and returns its metrics and per-TTI trace.
pub fn run(scenario: &ScenarioConfig) -> Result<(RunMetrics, Vec<TtiRecord>), SimError> {
    simulate(scenario, true)
}

/// Same as [`run`] without keeping the trace.
pub fn run_metrics(scenario: &ScenarioConfig) -> Result<RunMetrics, SimError> {
    simulate(scenario, false).map(|(m, _)| m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Speed,
    Distance,
    ThetaMin,
    FixedPower,
    AntennaMode,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::Speed => "speed",
            SweepVariable::Distance => "distance",
            SweepVariable::ThetaMin => "theta_min",
            SweepVariable::FixedPower => "fixed_power",
            SweepVariable::AntennaMode => "antenna_mode",
        })
    }
}

impl FromStr for SweepVariable {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "speed" => Ok(SweepVariable::Speed),
            "distance" => Ok(SweepVariable::Distance),
            "theta_min" => Ok(SweepVariable::ThetaMin),
            "fixed_power" => Ok(SweepVariable::FixedPower),
            "antenna_mode" => Ok(SweepVariable::AntennaMode),
            _ => Err(SimError::UnknownVariable(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Num(f64),
    Mode(AntennaMode),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Num(x) => write!(f, "{x}"),
            SweepValue::Mode(m) => write!(f, "{m}"),
        }
    }
}

impl SweepVariable {
    /// Copy of `template` with this variable set to `value`. Distance changes
    /// keep the absolute inter-cell interference of the template.
    pub fn apply(self, template: &ScenarioConfig, value: SweepValue) -> Result<ScenarioConfig, SimError> {
        let mut s = template.clone();
        let bad = || SimError::BadValue {
            variable: self,
            value: value.to_string(),
        };
        match (self, value) {
            (SweepVariable::Speed, SweepValue::Num(v)) => s.channel.speed_kmh = v,
            (SweepVariable::Distance, SweepValue::Num(v)) => s.channel.distance_m = v,
            (SweepVariable::ThetaMin, SweepValue::Num(v)) => {
                if !(v.fract() == 0.0 && (1.0..=255.0).contains(&v)) {
                    return Err(bad());
                }
                s.controller.theta_min = v as u8;
            }
            (SweepVariable::FixedPower, SweepValue::Num(v)) => s.baseline_power_dbm = v,
            (SweepVariable::AntennaMode, SweepValue::Mode(m)) => s.antenna_mode = m,
            _ => return Err(bad()),
        }
        Ok(s)
    }
}

/// Seed of repetition `rep` derived from a base seed (SplitMix64 finaliser).
/// Every sweep value and strategy reuses the same channel realisations.
pub fn derive_seed(base: u64, rep: u32) -> u64 {
    let mut z = base ^ (u64::from(rep) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub variable: SweepVariable,
    pub value: SweepValue,
    pub strategy: Strategy,
    pub mean_ee: f64,
    pub std_ee: f64,
    pub mean_reconfigs: f64,
    pub mean_throughput: f64,
    pub runs: Vec<RunMetrics>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every `value x repetition x strategy` combination (in parallel) and
/// aggregates per `(value, strategy)`. Points are ordered by value, then by
/// the order of `strategies`.
pub fn sweep(
    template: &ScenarioConfig,
    variable: SweepVariable,
    values: &[SweepValue],
    repetitions: u32,
    strategies: &[Strategy],
) -> Result<Vec<SweepPoint>, SimError> {
    if values.is_empty() {
        return Err(SimError::Invalid("sweep needs at least one value".into()));
    }
    if repetitions == 0 || strategies.is_empty() {
        return Err(SimError::Invalid(
            "sweep needs at least one repetition and one strategy".into(),
        ));
    }
    let mut jobs = Vec::new();
    for (vi, &value) in values.iter().enumerate() {
        let base = variable.apply(template, value)?;
        for (si, &strategy) in strategies.iter().enumerate() {
            for rep in 0..repetitions {
                let mut s = base.clone();
                s.strategy = strategy;
                s.seed = derive_seed(template.seed, rep);
                s.validate()?;
                jobs.push(((vi, si, rep), s));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|(key, s)| run_metrics(s).map(|m| (*key, m)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut points = Vec::with_capacity(values.len() * strategies.len());
    for (vi, &value) in values.iter().enumerate() {
        for (si, &strategy) in strategies.iter().enumerate() {
            let runs: Vec<RunMetrics> = results
                .iter()
                .filter(|((v, s, _), _)| *v == vi && *s == si)
                .map(|(_, m)| *m)
                .collect();
            let (mean_ee, std_ee) = mean_std(runs.iter().map(|m| m.avg_ee_bits_per_joule));
            let (mean_reconfigs, _) = mean_std(runs.iter().map(|m| m.reconfig_count as f64));
            let (mean_throughput, _) = mean_std(runs.iter().map(|m| m.throughput_bps));
            points.push(SweepPoint {
                variable,
                value,
                strategy,
                mean_ee,
                std_ee,
                mean_reconfigs,
                mean_throughput,
                runs,
            });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(strategy: Strategy, ttis: u64) -> ScenarioConfig {
        ScenarioConfig {
            strategy,
            duration_ttis: ttis,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn duration_bounds() {
        assert!(matches!(
            run(&short(Strategy::SemiStatic, 0)),
            Err(SimError::Invalid(_))
        ));
        let (m, trace) = run(&short(Strategy::SemiStatic, 1)).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(m.ttis, 1);
    }

    #[test]
    fn zero_delay_rejected() {
        let s = ScenarioConfig {
            feedback_delay_ttis: 0,
            ..ScenarioConfig::default()
        };
        assert!(run(&s).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        for mode in [AntennaMode::Siso, AntennaMode::Mimo] {
            let s = ScenarioConfig {
                antenna_mode: mode,
                ..short(Strategy::SemiStatic, 2000)
            };
            let a = run(&s).unwrap();
            let b = run(&s).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn baseline_holds_power() {
        let (m, trace) = run(&short(Strategy::FixedBaseline, 3000)).unwrap();
        assert_eq!(m.reconfig_count, 0);
        assert!(trace.iter().all(|r| r.p_tx_dbm == 40.5));
    }

    #[test]
    fn first_ttis_wait_for_feedback() {
        let (_, trace) = run(&short(Strategy::SemiStatic, 10)).unwrap();
        for r in &trace[..3] {
            assert_eq!(r.outcome, TtiOutcome::Idle);
            assert_eq!(r.p_tx_dbm, 40.5);
        }
        assert!(trace[3].reconfigured, "first report forces an optimisation");
    }

    #[test]
    fn energy_bookkeeping() {
        for mode in [AntennaMode::Simo, AntennaMode::Mimo] {
            let s = ScenarioConfig {
                antenna_mode: mode,
                ..short(Strategy::PerTtiOptimal, 2000)
            };
            let (m, trace) = run(&s).unwrap();
            let pm = s.power_model_for_mode();
            let mut energy = 0.0;
            let mut bits = 0;
            for r in &trace {
                let expected = 0.002 * total_power(dbm_to_watt(r.p_tx_dbm), &pm).unwrap();
                assert_eq!(r.consumed_energy_j, expected);
                energy += r.consumed_energy_j;
                bits += r.delivered_bits;
                if r.outcome != TtiOutcome::Ack && !matches!(r.mcs, McsChoice::Dual(..)) {
                    assert_eq!(r.delivered_bits, 0);
                }
            }
            assert_eq!(m.consumed_energy_j, energy);
            assert!((m.avg_ee_bits_per_joule - bits as f64 / energy).abs() <= 1e-9 * m.avg_ee_bits_per_joule);
        }
    }

    #[test]
    fn sweep_shape_and_degenerate_case() {
        let template = short(Strategy::SemiStatic, 500);
        let values = [3.0, 30.0, 120.0].map(SweepValue::Num);
        let pts = sweep(&template, SweepVariable::Speed, &values, 2, &Strategy::ALL).unwrap();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|p| p.runs.len() == 2));

        let one = sweep(
            &template,
            SweepVariable::Speed,
            &[SweepValue::Num(3.0)],
            1,
            &[Strategy::SemiStatic],
        )
        .unwrap();
        let direct = {
            let mut s = template.clone();
            s.seed = derive_seed(template.seed, 0);
            run_metrics(&s).unwrap()
        };
        assert_eq!(one[0].runs[0], direct);
        assert_eq!(one[0].mean_ee, direct.avg_ee_bits_per_joule);
    }

    #[test]
    fn sweep_errors() {
        let template = short(Strategy::SemiStatic, 10);
        assert!(sweep(&template, SweepVariable::Speed, &[], 1, &Strategy::ALL).is_err());
        assert!(matches!(
            "altitude".parse::<SweepVariable>(),
            Err(SimError::UnknownVariable(_))
        ));
        assert!(SweepVariable::AntennaMode
            .apply(&template, SweepValue::Num(2.0))
            .is_err());
        assert!(SweepVariable::ThetaMin.apply(&template, SweepValue::Num(2.5)).is_err());
    }

    #[test]
    fn seeds_differ_per_repetition() {
        let seeds: Vec<u64> = (0..100).map(|r| derive_seed(7, r)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), seeds.len());
    }
}
