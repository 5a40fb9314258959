//! D-TxAA dual-stream support.
//!
//! The primary stream is precoded with `(w1, w2)` and the secondary with
//! `(w3, w4)`, where `w1 = w3 = 1/sqrt(2)`, `w4 = -w2` and `w2` is one of
//! `(±1 ± j)/2` selected by the PCI. Transmit power is split equally between
//! streams. The receiver is a per-stream linear MMSE filter.
//!
//! When both streams are reconfigured together their SINR thresholds must
//! move by the same amount, so candidate MCS pairs are `(j1, j2)` with
//! `beta_j1 - beta_i1 == beta_j2 - beta_i2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ee_controller::{
    clamp_to_constraints, estimate_ee, Clamped, ControllerConfig, ControllerError, McsChoice, Rung, Selection,
    POWER_EPS_DB,
};
use crate::link_channel::ChannelParams;
use crate::mcs_table::{McsTable, TableError, CQI_OUT_OF_RANGE};
use crate::power_model::{linear_to_db, PowerModelParams};

/// Tap-summed `H^H H` of a 2x2 link, `[[g00, g01], [g10, g11]]`.
pub type Gram2 = [[Complex64; 2]; 2];

pub fn gram2(flat: &[Complex64]) -> Gram2 {
    assert_eq!(flat.len(), 4, "expected a 2x2 Gram matrix");
    [[flat[0], flat[1]], [flat[2], flat[3]]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecodingWeights {
    pub w1: Complex64,
    pub w2: Complex64,
    pub w3: Complex64,
    pub w4: Complex64,
}

impl PrecodingWeights {
    pub fn primary(&self) -> [Complex64; 2] {
        [self.w1, self.w2]
    }

    pub fn secondary(&self) -> [Complex64; 2] {
        [self.w3, self.w4]
    }
}

/// The four PCI precoders.
pub fn pci_codebook() -> [PrecodingWeights; 4] {
    let w1 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].map(|(re, im)| {
        let w2 = Complex64::new(re, im) / 2.0;
        PrecodingWeights {
            w1,
            w2,
            w3: w1,
            w4: -w2,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamMode {
    Single,
    Dual,
}

/// Mode, PCI and CQI(s) reported by a D-TxAA user. `cqi_secondary` is
/// [`CQI_OUT_OF_RANGE`] in single-stream mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MimoFeedback {
    pub mode: StreamMode,
    pub pci: u8,
    pub cqi_primary: u8,
    pub cqi_secondary: u8,
}

/// `v^H G u`.
fn quad(g: &Gram2, v: &[Complex64; 2], u: &[Complex64; 2]) -> Complex64 {
    let gu = [g[0][0] * u[0] + g[0][1] * u[1], g[1][0] * u[0] + g[1][1] * u[1]];
    v[0].conj() * gu[0] + v[1].conj() * gu[1]
}

/// SINR of the primary stream alone carrying `p_w`, dB.
pub fn single_stream_sinr(gram: &Gram2, weights: &PrecodingWeights, p_w: f64, params: &ChannelParams) -> f64 {
    let w = weights.primary();
    linear_to_db(params.sinr_scale() * p_w * quad(gram, &w, &w).re.max(0.0))
}

/// Per-stream SINRs (dB) after linear MMSE detection of both streams, each
/// carrying `p_per_stream_w`.
pub fn per_stream_sinr(
    gram: &Gram2,
    weights: &PrecodingWeights,
    p_per_stream_w: f64,
    params: &ChannelParams,
) -> (f64, f64) {
    let s = params.sinr_scale() * p_per_stream_w.max(0.0);
    let (u, v) = (weights.primary(), weights.secondary());
    let a11 = quad(gram, &u, &u).re.max(0.0);
    let a22 = quad(gram, &v, &v).re.max(0.0);
    let a12 = quad(gram, &u, &v).norm_sqr();
    // SINR_k = s a_kk - s^2 |a_12|^2 / (1 + s a_ll)
    let sinr1 = (s * a11 - s * s * a12 / (1.0 + s * a22)).max(0.0);
    let sinr2 = (s * a22 - s * s * a12 / (1.0 + s * a11)).max(0.0);
    (linear_to_db(sinr1), linear_to_db(sinr2))
}

/// One mode/PCI hypothesis evaluated by the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub feedback: MimoFeedback,
    pub tbs_sum: u64,
}

fn tbs_or_zero(table: &McsTable, cqi: u8) -> u64 {
    table.tbs_bits(cqi).map_or(0, u64::from)
}

/// All eight single/dual x PCI hypotheses at total power `p_hs_w`.
pub fn hypotheses(gram: &Gram2, table: &McsTable, p_hs_w: f64, params: &ChannelParams) -> Vec<Hypothesis> {
    let book = pci_codebook();
    let mut out = Vec::with_capacity(8);
    for mode in [StreamMode::Single, StreamMode::Dual] {
        for (pci, w) in book.iter().enumerate() {
            let (c1, c2) = match mode {
                StreamMode::Single => (
                    table.cqi_from_sinr(single_stream_sinr(gram, w, p_hs_w, params)),
                    CQI_OUT_OF_RANGE,
                ),
                StreamMode::Dual => {
                    let (s1, s2) = per_stream_sinr(gram, w, p_hs_w / 2.0, params);
                    (table.cqi_from_sinr(s1), table.cqi_from_sinr(s2))
                }
            };
            out.push(Hypothesis {
                feedback: MimoFeedback {
                    mode,
                    pci: pci as u8,
                    cqi_primary: c1,
                    cqi_secondary: c2,
                },
                tbs_sum: tbs_or_zero(table, c1) + tbs_or_zero(table, c2),
            });
        }
    }
    out
}

/// The user's choice: the hypothesis with the largest total transport block
/// size; ties go to single-stream, then to the lower PCI.
pub fn select_mode_and_feedback(gram: &Gram2, table: &McsTable, p_hs_w: f64, params: &ChannelParams) -> MimoFeedback {
    let all = hypotheses(gram, table, p_hs_w, params);
    // Hypotheses are ordered single-first, PCI ascending; keep the first max.
    all.iter()
        .fold(all[0], |best, h| if h.tbs_sum > best.tbs_sum { *h } else { best })
        .feedback
}

/// All `(j1, j2)` whose threshold shifts from `(i1, i2)` agree within `tol_db`.
pub fn enumerate_equal_delta_pairs(i1: u8, i2: u8, table: &McsTable, tol_db: f64) -> Result<Vec<(u8, u8)>, TableError> {
    let b1 = table.threshold_db(i1)?;
    let b2 = table.threshold_db(i2)?;
    let n = table.max_cqi();
    let mut pairs = Vec::new();
    for j1 in 1..=n {
        let d1 = table.threshold_db(j1)? - b1;
        for j2 in 1..=n {
            let d2 = table.threshold_db(j2)? - b2;
            if (d1 - d2).abs() <= tol_db + POWER_EPS_DB {
                pairs.push((j1, j2));
            }
        }
    }
    Ok(pairs)
}

/// Total power for the pair reached by shifting stream 1 from `i1` to `j1`:
/// `P + factor * (beta_j1 - beta_i1) + delta`.
pub fn estimate_dual_power(
    p_dbm: f64,
    i1: u8,
    j1: u8,
    table: &McsTable,
    delta_db: f64,
    factor: f64,
) -> Result<f64, TableError> {
    Ok(p_dbm + factor * table.threshold_delta(i1, j1)? + delta_db)
}

/// Dual-stream optimum over all feasible MCS pairs, maximising the sum EE
/// `(tau_j1 + tau_j2) / (t_s (P_new / eta + P_dyn + P_sta))`. The power model
/// is evaluated with both transmit chains active. The minimum-MCS constraint
/// applies to the weaker stream of a pair.
pub fn select_optimal_dual(
    p_dbm: f64,
    feedback: &MimoFeedback,
    delta_db: f64,
    table: &McsTable,
    cfg: &ControllerConfig,
    pm: &PowerModelParams,
) -> Result<Selection, ControllerError> {
    let (i1, i2) = (feedback.cqi_primary, feedback.cqi_secondary);
    if i1 == CQI_OUT_OF_RANGE || i2 == CQI_OUT_OF_RANGE {
        return Err(ControllerError::NoFeedback);
    }
    let pm = pm.with_antennas(2);
    let pairs = enumerate_equal_delta_pairs(i1, i2, table, cfg.dual_pair_tolerance_db)?;
    let tbs = |(j1, j2): (u8, u8)| -> Result<u64, TableError> {
        Ok(u64::from(table.tbs_bits(j1)?) + u64::from(table.tbs_bits(j2)?))
    };
    let mut rungs = Vec::with_capacity(pairs.len());
    for &(j1, j2) in &pairs {
        let power_dbm = estimate_dual_power(p_dbm, i1, j1, table, delta_db, cfg.dual_power_factor)?;
        rungs.push(Rung {
            level: j1.min(j2),
            power_dbm,
            ee: estimate_ee(power_dbm, tbs((j1, j2))?, &pm, cfg.tti_ms)?,
        });
    }
    // Pairs come out ordered by j1, hence by required power.
    let selection = |k: usize, power_dbm: f64| -> Result<Selection, ControllerError> {
        let (j1, j2) = pairs[k];
        Ok(Selection {
            mcs: McsChoice::Dual(j1, j2),
            power_dbm,
            ee: estimate_ee(power_dbm, tbs((j1, j2))?, &pm, cfg.tti_ms)?,
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
