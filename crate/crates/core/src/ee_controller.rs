//! Energy-efficient power control and link adaptation at the Node B.
//!
//! From a CQI report `i` received while transmitting at `P` dBm, the power
//! needed for any other MCS `j` is estimated by shifting along the SINR
//! thresholds of the MCS table:
//!
//! ```text
//! P_j = P + beta_j - beta_i + delta
//! xi_j = tau_j / (t_s * (P_j / eta + P_dyn + P_sta))
//! ```
//!
//! The MCS with the highest estimated EE is clamped to the minimum-MCS and
//! maximum-power constraints. A dual trigger (event + periodic) decides when
//! the chosen power is actually configured, so reconfigurations stay rare.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link_channel::Outcome;
use crate::mcs_table::{McsTable, TableError, CQI_OUT_OF_RANGE};
use crate::mimo_dtxaa::{self, MimoFeedback, StreamMode};
use crate::power_model::{dbm_to_watt, total_power, PowerModelError, PowerModelParams};

/// Slack on power comparisons and threshold arithmetic, dB.
pub(crate) const POWER_EPS_DB: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Power(#[from] PowerModelError),
    #[error("feedback CQI is out of range; no power estimate is possible")]
    NoFeedback,
    #[error("transport block size must be positive")]
    ZeroTbs,
    #[error("optimal EE must be positive, got {0}")]
    NonPositiveEe(f64),
    #[error(
        "minimum MCS {theta_min} needs {p_min_dbm:.2} dBm, above the {p_max_dbm:.2} dBm budget; \
         falling back to the highest feasible MCS at maximum power"
    )]
    Infeasible {
        theta_min: u8,
        p_min_dbm: f64,
        p_max_dbm: f64,
        fallback: Selection,
    },
    #[error("invalid controller configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub p_max_dbm: f64,
    /// Minimum CQI/MCS index the user must be served with once reconfigured.
    pub theta_min: u8,
    /// Relative EE gap that arms the event trigger.
    pub delta_threshold: f64,
    pub gamma_prohibit_ms: f64,
    pub gamma_periodic_ms: f64,
    pub tti_ms: f64,
    /// Offset increase on NACK, dB.
    pub offset_step_up_db: f64,
    /// Offset decrease on ACK, dB.
    pub offset_step_down_db: f64,
    pub bler_target: f64,
    /// The offset is kept within `[-offset_clamp_db, offset_clamp_db]`.
    pub offset_clamp_db: f64,
    /// Weight of the newest sample in the realised-EE average.
    pub ee_smoothing: f64,
    /// Multiplier on the per-stream threshold shift when estimating the
    /// dual-stream power. 2.0 charges the shift to each stream separately,
    /// 1.0 applies it once to the total power.
    pub dual_power_factor: f64,
    /// Tolerance on equal threshold shifts between streams, dB.
    pub dual_pair_tolerance_db: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            p_max_dbm: 43.0,
            theta_min: 1,
            delta_threshold: 0.2,
            gamma_prohibit_ms: 20.0,
            gamma_periodic_ms: 200.0,
            tti_ms: 2.0,
            offset_step_up_db: 0.5,
            offset_step_down_db: 0.5 * 0.1 / 0.9,
            bler_target: 0.1,
            offset_clamp_db: 6.0,
            ee_smoothing: 0.05,
            dual_power_factor: 2.0,
            dual_pair_tolerance_db: 0.0,
        }
    }
}

impl ControllerConfig {
    /// Sets the down step so that `up / down = (1 - target) / target`, which
    /// makes the target NACK rate the stationary point of the offset loop.
    pub fn with_bler_target(mut self, step_up_db: f64, target: f64) -> Self {
        self.bler_target = target;
        self.offset_step_up_db = step_up_db;
        self.offset_step_down_db = step_up_db * target / (1.0 - target);
        self
    }

    pub fn tti_s(&self) -> f64 {
        self.tti_ms * 1e-3
    }

    pub fn validate(&self, table: &McsTable) -> Result<(), ControllerError> {
        let bad = |msg: String| Err(ControllerError::Config(msg));
        if !(self.tti_ms > 0.0 && self.tti_ms.is_finite()) {
            return bad(format!("tti_ms must be positive, got {}", self.tti_ms));
        }
        if !(self.delta_threshold > 0.0 && self.delta_threshold < 1.0) {
            return bad(format!(
                "delta_threshold must lie in (0, 1), got {}",
                self.delta_threshold
            ));
        }
        if !(self.gamma_prohibit_ms >= 0.0) || !(self.gamma_periodic_ms >= 5.0 * self.gamma_prohibit_ms) {
            return bad(format!(
                "gamma_periodic_ms ({}) must be at least 5x gamma_prohibit_ms ({})",
                self.gamma_periodic_ms, self.gamma_prohibit_ms
            ));
        }
        if !(self.gamma_periodic_ms > 0.0) {
            return bad("gamma_periodic_ms must be positive".into());
        }
        if self.theta_min == 0 || self.theta_min > table.max_cqi() {
            return bad(format!(
                "theta_min must lie in 1..={}, got {}",
                table.max_cqi(),
                self.theta_min
            ));
        }
        if !self.p_max_dbm.is_finite() {
            return bad("p_max_dbm must be finite".into());
        }
        if !(self.offset_step_up_db >= 0.0 && self.offset_step_down_db >= 0.0 && self.offset_clamp_db >= 0.0) {
            return bad("offset steps and clamp must be non-negative".into());
        }
        if !(self.bler_target > 0.0 && self.bler_target < 1.0) {
            return bad(format!("bler_target must lie in (0, 1), got {}", self.bler_target));
        }
        if !(self.ee_smoothing > 0.0 && self.ee_smoothing <= 1.0) {
            return bad(format!("ee_smoothing must lie in (0, 1], got {}", self.ee_smoothing));
        }
        if !(self.dual_power_factor > 0.0) || !(self.dual_pair_tolerance_db >= 0.0) {
            return bad("dual_power_factor must be positive and dual_pair_tolerance_db non-negative".into());
        }
        Ok(())
    }
}

/// A configured (or candidate) MCS and power with its estimated EE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub mcs: McsChoice,
    pub power_dbm: f64,
    /// Estimated EE, bit/J.
    pub ee: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum McsChoice {
    None,
    Single(u8),
    Dual(u8, u8),
}

impl McsChoice {
    pub fn primary(&self) -> u8 {
        match *self {
            McsChoice::None => CQI_OUT_OF_RANGE,
            McsChoice::Single(c) | McsChoice::Dual(c, _) => c,
        }
    }

    pub fn secondary(&self) -> Option<u8> {
        match *self {
            McsChoice::Dual(_, c) => Some(c),
            _ => None,
        }
    }
}

/// Channel-quality part of the user's report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Report {
    Single { cqi: u8 },
    Mimo(MimoFeedback),
}

impl Report {
    /// CQI that drives the single-stream path, if this is a single-stream report.
    pub fn single_cqi(&self) -> Option<u8> {
        match *self {
            Report::Single { cqi } => Some(cqi),
            Report::Mimo(fb) if fb.mode == StreamMode::Single => Some(fb.cqi_primary),
            Report::Mimo(fb) if fb.cqi_primary == 0 || fb.cqi_secondary == 0 => Some(fb.cqi_primary),
            Report::Mimo(_) => None,
        }
    }

    pub fn is_out_of_range(&self) -> bool {
        match *self {
            Report::Single { cqi } => cqi == CQI_OUT_OF_RANGE,
            Report::Mimo(fb) => fb.cqi_primary == CQI_OUT_OF_RANGE,
        }
    }
}

/// Everything the Node B learns about one earlier TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub report: Report,
    /// Transmit power in force when the report was measured, dBm.
    pub measured_power_dbm: f64,
    /// HARQ outcome of each stream sent for the first time in that TTI.
    pub outcomes: Vec<Outcome>,
    pub delivered_bits: u64,
    pub energy_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Keep,
    Reconfigure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerDecision {
    pub action: Action,
    pub new_power_dbm: f64,
    pub new_mcs: McsChoice,
    /// Estimated EE of the optimal configuration, bit/J. Zero when no
    /// estimate was possible this TTI.
    pub estimated_ee: f64,
}

/// How often the optimiser's choice is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerPolicy {
    /// Event trigger gated by the prohibit timer, plus the periodic trigger.
    DualTrigger,
    /// Apply the optimum on every TTI with a valid report.
    EveryTti,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub p_current_dbm: f64,
    pub current_mcs: McsChoice,
    pub delta_db: f64,
    /// Time since the last reconfiguration.
    pub timer_ms: f64,
    /// Smoothed realised EE of the current configuration, bit/J.
    pub last_ee: Option<f64>,
}

impl ControllerState {
    /// Starts at `p_dbm` with the timer expired, so the first valid report
    /// triggers an optimisation.
    pub fn new(p_dbm: f64, cfg: &ControllerConfig) -> Self {
        Self {
            p_current_dbm: p_dbm.min(cfg.p_max_dbm),
            current_mcs: McsChoice::None,
            delta_db: 0.0,
            timer_ms: cfg.gamma_periodic_ms,
            last_ee: None,
        }
    }

    /// Outer-loop jump update of the offset.
    pub fn update_offset(&mut self, outcome: Outcome, cfg: &ControllerConfig) {
        self.delta_db = match outcome {
            Outcome::Nack => self.delta_db + cfg.offset_step_up_db,
            Outcome::Ack => self.delta_db - cfg.offset_step_down_db,
        }
        .clamp(-cfg.offset_clamp_db, cfg.offset_clamp_db);
    }

    /// Applies the HARQ outcomes to the offset and folds the realised EE of
    /// the reported TTI into the running average.
    pub fn observe(&mut self, feedback: &Feedback, cfg: &ControllerConfig) {
        for &o in &feedback.outcomes {
            self.update_offset(o, cfg);
        }
        if feedback.energy_j > 0.0 {
            let sample = feedback.delivered_bits as f64 / feedback.energy_j;
            self.last_ee = Some(match self.last_ee {
                Some(prev) => prev + cfg.ee_smoothing * (sample - prev),
                None => sample,
            });
        }
    }

    /// One controller step with the dual trigger.
    pub fn on_tti(
        &mut self,
        feedback: &Feedback,
        table: &McsTable,
        cfg: &ControllerConfig,
        pm: &PowerModelParams,
    ) -> Result<ControllerDecision, ControllerError> {
        self.on_tti_with(feedback, table, cfg, pm, TriggerPolicy::DualTrigger)
    }

    /// Advances the timer, adapts the offset, estimates the optimum and
    /// applies it when the trigger policy allows.
    pub fn on_tti_with(
        &mut self,
        feedback: &Feedback,
        table: &McsTable,
        cfg: &ControllerConfig,
        pm: &PowerModelParams,
        policy: TriggerPolicy,
    ) -> Result<ControllerDecision, ControllerError> {
        self.timer_ms += cfg.tti_ms;
        self.observe(feedback, cfg);

        let keep = |state: &Self, ee: f64| ControllerDecision {
            action: Action::Keep,
            new_power_dbm: state.p_current_dbm,
            new_mcs: state.current_mcs,
            estimated_ee: ee,
        };
        if feedback.report.is_out_of_range() {
            return Ok(keep(self, 0.0));
        }

        let p_meas = feedback.measured_power_dbm;
        let result = match feedback.report {
            Report::Mimo(fb) if feedback.report.single_cqi().is_none() => {
                mimo_dtxaa::select_optimal_dual(p_meas, &fb, self.delta_db, table, cfg, pm)
            }
            report => {
                let cqi = report.single_cqi().unwrap_or(CQI_OUT_OF_RANGE);
                select_optimal(p_meas, cqi, self.delta_db, table, cfg, pm)
            }
        };
        let best = match result {
            Ok(sel) => sel,
            Err(ControllerError::Infeasible { fallback, .. }) => fallback,
            Err(e) => return Err(e),
        };

        let fire = match policy {
            TriggerPolicy::EveryTti => true,
            TriggerPolicy::DualTrigger => {
                let gap = relative_ee_difference(best.ee, self.last_ee.unwrap_or(0.0)).unwrap_or(0.0);
                should_trigger(gap, self.timer_ms, cfg)
            }
        };
        if !fire {
            return Ok(keep(self, best.ee));
        }
        self.p_current_dbm = best.power_dbm;
        self.current_mcs = best.mcs;
        self.timer_ms = 0.0;
        // The new configuration starts from its own estimate.
        self.last_ee = Some(best.ee);
        Ok(ControllerDecision {
            action: Action::Reconfigure,
            new_power_dbm: best.power_dbm,
            new_mcs: best.mcs,
            estimated_ee: best.ee,
        })
    }
}

/// Transmit power needed for MCS `j` given report `i` at power `p_dbm`.
pub fn estimate_power_for_mcs(
    p_dbm: f64,
    feedback_cqi: u8,
    target_cqi: u8,
    table: &McsTable,
    delta_db: f64,
) -> Result<f64, ControllerError> {
    if feedback_cqi == CQI_OUT_OF_RANGE {
        return Err(ControllerError::NoFeedback);
    }
    Ok(p_dbm + table.threshold_delta(feedback_cqi, target_cqi)? + delta_db)
}

/// Estimated EE of sending `tbs_bits` per TTI at `p_dbm`, bit/J.
pub fn estimate_ee(p_dbm: f64, tbs_bits: u64, pm: &PowerModelParams, tti_ms: f64) -> Result<f64, ControllerError> {
    if tbs_bits == 0 {
        return Err(ControllerError::ZeroTbs);
    }
    if !(tti_ms > 0.0) {
        return Err(ControllerError::Config(format!(
            "tti_ms must be positive, got {tti_ms}"
        )));
    }
    let consumed = total_power(dbm_to_watt(p_dbm), pm)?;
    Ok(tbs_bits as f64 / (tti_ms * 1e-3 * consumed))
}

/// One rung of an MCS ladder ordered by increasing required power.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rung {
    /// Index compared against the minimum-MCS constraint.
    pub level: u8,
    pub power_dbm: f64,
    pub ee: f64,
}

pub(crate) enum Clamped {
    Chosen { rung: usize, power_dbm: f64 },
    Infeasible { p_min_dbm: f64, fallback: Option<usize> },
}

/// Unconstrained argmax of EE (lowest rung wins ties) followed by the
/// min-MCS / max-power clamp:
///
/// ```text
/// theta_opt = min(max(theta_min, theta_j*), theta_max)
/// P_opt     = min(max(P_min, P_j*), P_max)
/// ```
pub(crate) fn clamp_to_constraints(rungs: &[Rung], theta_min: u8, p_max_dbm: f64) -> Clamped {
    let best = rungs
        .iter()
        .enumerate()
        .fold(0, |best, (k, r)| if r.ee > rungs[best].ee { k } else { best });
    let top = rungs.iter().rposition(|r| r.power_dbm <= p_max_dbm + POWER_EPS_DB);
    let floor = rungs.iter().position(|r| r.level >= theta_min);
    let (Some(top), Some(floor)) = (top, floor) else {
        return Clamped::Infeasible {
            p_min_dbm: floor.map_or(f64::INFINITY, |f| rungs[f].power_dbm),
            fallback: top,
        };
    };
    let p_min = rungs[floor].power_dbm;
    if p_min > p_max_dbm + POWER_EPS_DB {
        return Clamped::Infeasible {
            p_min_dbm: p_min,
            fallback: Some(top),
        };
    }
    let rung = best.max(floor).min(top);
    let power_dbm = rungs[best].power_dbm.max(p_min).min(p_max_dbm);
    Clamped::Chosen { rung, power_dbm }
}

/// Single-stream optimum over all table entries, clamped to the constraints.
///
/// On an infeasible minimum-MCS constraint the error carries the fallback
/// `(theta_max, P_max)` selection.
pub fn select_optimal(
    p_dbm: f64,
    feedback_cqi: u8,
    delta_db: f64,
    table: &McsTable,
    cfg: &ControllerConfig,
    pm: &PowerModelParams,
) -> Result<Selection, ControllerError> {
    if feedback_cqi == CQI_OUT_OF_RANGE {
        return Err(ControllerError::NoFeedback);
    }
    let rungs = (1..=table.max_cqi())
        .map(|j| {
            let power_dbm = estimate_power_for_mcs(p_dbm, feedback_cqi, j, table, delta_db)?;
            let ee = estimate_ee(power_dbm, u64::from(table.tbs_bits(j)?), pm, cfg.tti_ms)?;
            Ok(Rung {
                level: j,
                power_dbm,
                ee,
            })
        })
        .collect::<Result<Vec<_>, ControllerError>>()?;

    let selection = |rung: usize, power_dbm: f64| -> Result<Selection, ControllerError> {
        let cqi = rung as u8 + 1;
        Ok(Selection {
            mcs: McsChoice::Single(cqi),
            power_dbm,
            ee: estimate_ee(power_dbm, u64::from(table.tbs_bits(cqi)?), pm, cfg.tti_ms)?,
        })
    };
    match clamp_to_constraints(&rungs, cfg.theta_min, cfg.p_max_dbm) {
        Clamped::Chosen { rung, power_dbm } => selection(rung, power_dbm),
        Clamped::Infeasible { p_min_dbm, fallback } => Err(ControllerError::Infeasible {
            theta_min: cfg.theta_min,
            p_min_dbm,
            p_max_dbm: cfg.p_max_dbm,
            fallback: selection(fallback.unwrap_or(0), cfg.p_max_dbm)?,
        }),
    }
}

/// `D = (xi_opt - xi) / xi_opt`.
pub fn relative_ee_difference(xi_opt: f64, xi: f64) -> Result<f64, ControllerError> {
    if !(xi_opt > 0.0) {
        return Err(ControllerError::NonPositiveEe(xi_opt));
    }
    Ok((xi_opt - xi) / xi_opt)
}

/// Event trigger `D >= Delta && t > gamma_prohibit`, or periodic trigger
/// `t > gamma_periodic`.
pub fn should_trigger(relative_gap: f64, timer_ms: f64, cfg: &ControllerConfig) -> bool {
    (relative_gap >= cfg.delta_threshold && timer_ms > cfg.gamma_prohibit_ms) || timer_ms > cfg.gamma_periodic_ms
}

/// MCS served at `p_now_dbm` for a report `cqi` measured at `measured_dbm`:
/// the largest `j` whose estimated power does not exceed the power in force.
pub fn serve_cqi(cqi: u8, measured_dbm: f64, p_now_dbm: f64, delta_db: f64, table: &McsTable) -> u8 {
    let Ok(beta) = table.threshold_db(cqi) else {
        return CQI_OUT_OF_RANGE;
    };
    table.cqi_from_sinr(beta + (p_now_dbm - measured_dbm) - delta_db + POWER_EPS_DB)
}
