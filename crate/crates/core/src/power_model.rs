//! Node-B power consumption model and the Shannon-capacity SE/EE baseline.
//!
//! Total consumption is split into a power-conversion part (transmit power
//! over amplifier efficiency), a dynamic circuit part proportional to the
//! number of active transmit chains, and a static part:
//!
//! ```text
//! P_total = P / eta + M_a * P_cir + P_sta
//! ```
//!
//! All powers are in watts. dBm only appears at configuration boundaries,
//! see [`dbm_to_watt`] and [`watt_to_dbm`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerModelError {
    #[error("power conversion efficiency must lie in (0, 1], got {0}")]
    Efficiency(f64),
    #[error("circuit and static powers must be non-negative and finite (p_cir = {p_cir}, p_sta = {p_sta})")]
    Overhead { p_cir: f64, p_sta: f64 },
    #[error("active antenna count must be 1 or 2, got {0}")]
    Antennas(u8),
    #[error("transmit power must be non-negative and finite, got {0} W")]
    NegativeTxPower(f64),
    #[error("noise power N0*W must be positive, got {0} W")]
    NoisePower(f64),
    #[error("maximum transmit power must be positive, got {0} W")]
    MaxPower(f64),
}

/// Parameters of the Node-B consumption model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModelParams {
    /// Power-conversion (amplifier + feeder) efficiency.
    pub eta: f64,
    /// Dynamic circuit power per active transmit antenna, W.
    pub p_cir_w: f64,
    /// Static power independent of antenna count and load, W.
    pub p_sta_w: f64,
    /// Number of active transmit antennas.
    pub active_antennas: u8,
}

impl Default for PowerModelParams {
    /// Macro Node-B values: eta = 0.38, 6 W circuit power, 6 W static, one chain.
    fn default() -> Self {
        Self {
            eta: 0.38,
            p_cir_w: 6.0,
            p_sta_w: 6.0,
            active_antennas: 1,
        }
    }
}

impl PowerModelParams {
    pub fn new(eta: f64, p_cir_w: f64, p_sta_w: f64, active_antennas: u8) -> Result<Self, PowerModelError> {
        let params = Self {
            eta,
            p_cir_w,
            p_sta_w,
            active_antennas,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_antennas(mut self, active_antennas: u8) -> Self {
        self.active_antennas = active_antennas;
        self
    }

    pub fn validate(&self) -> Result<(), PowerModelError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(PowerModelError::Efficiency(self.eta));
        }
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.p_cir_w) || !ok(self.p_sta_w) {
            return Err(PowerModelError::Overhead {
                p_cir: self.p_cir_w,
                p_sta: self.p_sta_w,
            });
        }
        if !matches!(self.active_antennas, 1 | 2) {
            return Err(PowerModelError::Antennas(self.active_antennas));
        }
        Ok(())
    }

    /// Consumption that does not scale with transmit power: `M_a * P_cir + P_sta`.
    pub fn overhead_w(&self) -> f64 {
        f64::from(self.active_antennas) * self.p_cir_w + self.p_sta_w
    }
}

pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(p_w: f64) -> f64 {
    10.0 * p_w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Total Node-B consumption for a given transmit power.
pub fn total_power(p_tx_w: f64, params: &PowerModelParams) -> Result<f64, PowerModelError> {
    if !(p_tx_w.is_finite() && p_tx_w >= 0.0) {
        return Err(PowerModelError::NegativeTxPower(p_tx_w));
    }
    params.validate()?;
    Ok(p_tx_w / params.eta + params.overhead_w())
}

fn check_noise(n0: f64, w: f64) -> Result<f64, PowerModelError> {
    let noise = n0 * w;
    if !(n0 > 0.0 && w > 0.0 && noise.is_finite()) {
        return Err(PowerModelError::NoisePower(noise));
    }
    Ok(noise)
}

/// AWGN spectral efficiency `log2(1 + P / (N0 W))` in bit/s/Hz.
pub fn shannon_se(p_tx_w: f64, n0: f64, w: f64) -> Result<f64, PowerModelError> {
    let noise = check_noise(n0, w)?;
    if !(p_tx_w.is_finite() && p_tx_w >= 0.0) {
        return Err(PowerModelError::NegativeTxPower(p_tx_w));
    }
    Ok((p_tx_w / noise).ln_1p() / std::f64::consts::LN_2)
}

/// AWGN energy efficiency `W * SE / P_total` in bit/J.
///
/// Returns 0 at zero transmit power, including the degenerate case where the
/// overhead terms are zero as well.
pub fn shannon_ee(p_tx_w: f64, n0: f64, w: f64, params: &PowerModelParams) -> Result<f64, PowerModelError> {
    let se = shannon_se(p_tx_w, n0, w)?;
    let total = total_power(p_tx_w, params)?;
    if se == 0.0 {
        return Ok(0.0);
    }
    Ok(w * se / total)
}

/// Golden-section tolerance on the transmit power, W.
pub const GOLDEN_TOLERANCE_W: f64 = 1e-6;

/// Transmit power in `[0, p_max]` maximising [`shannon_ee`].
///
/// The EE curve is quasiconcave in the transmit power, so a golden-section
/// search converges to the global optimum.
pub fn optimal_shannon_power(params: &PowerModelParams, n0: f64, w: f64, p_max_w: f64) -> Result<f64, PowerModelError> {
    params.validate()?;
    check_noise(n0, w)?;
    if !(p_max_w > 0.0 && p_max_w.is_finite()) {
        return Err(PowerModelError::MaxPower(p_max_w));
    }
    let ee = |p: f64| shannon_ee(p, n0, w, params).unwrap_or(0.0);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;

    let (mut lo, mut hi) = (0.0, p_max_w);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (ee(x1), ee(x2));
    while hi - lo > GOLDEN_TOLERANCE_W {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ee(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ee(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    // The search brackets an interior optimum; check the endpoints for the
    // monotone cases.
    let best = [0.0, mid, p_max_w]
        .into_iter()
        .fold((mid, ee(mid)), |acc, p| if ee(p) > acc.1 { (p, ee(p)) } else { acc });
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn macro_params() -> PowerModelParams {
        PowerModelParams::default()
    }

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(0.0) - 0.001).abs() < 1e-18);
        assert!((dbm_to_watt(43.0) - 19.9526).abs() < 1e-4);
        assert!((watt_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn total_power_examples() {
        assert_eq!(total_power(0.0, &macro_params()).unwrap(), 12.0);
        let p43 = total_power(19.9526, &macro_params()).unwrap();
        assert!((p43 - 64.507).abs() < 1e-3, "{p43}");
        let two = macro_params().with_antennas(2);
        assert!((total_power(10.0, &two).unwrap() - 44.316).abs() < 1e-3);
        assert!(matches!(
            total_power(-1.0, &macro_params()),
            Err(PowerModelError::NegativeTxPower(_))
        ));
    }

    #[test]
    fn params_are_validated() {
        assert!(PowerModelParams::new(0.0, 6.0, 6.0, 1).is_err());
        assert!(PowerModelParams::new(1.2, 6.0, 6.0, 1).is_err());
        assert!(PowerModelParams::new(0.38, -1.0, 6.0, 1).is_err());
        assert!(PowerModelParams::new(0.38, 6.0, 6.0, 3).is_err());
        assert!(PowerModelParams::new(1.0, 0.0, 0.0, 2).is_ok());
    }

    #[test]
    fn shannon_se_examples() {
        let (n0, w) = (2e-7, 5e6);
        let noise = n0 * w;
        assert!((shannon_se(noise, n0, w).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(shannon_se(0.0, n0, w).unwrap(), 0.0);
        assert!((shannon_se(3.0 * noise, n0, w).unwrap() - 2.0).abs() < 1e-12);
        assert!(shannon_se(1.0, 0.0, w).is_err());
    }

    #[test]
    fn shannon_ee_examples() {
        let w = 5e6;
        let n0 = 1.0 / w;
        assert_eq!(shannon_ee(0.0, n0, w, &macro_params()).unwrap(), 0.0);
        let ee = shannon_ee(1.0, n0, w, &macro_params()).unwrap();
        let expected = 5e6 / (1.0 / 0.38 + 12.0);
        assert!((ee - expected).abs() < 1e-6);
        assert!((ee - 341_726.6).abs() < 0.1, "{ee}");
    }

    #[test]
    fn no_overhead_optimum_is_left_boundary() {
        let params = PowerModelParams::new(0.38, 0.0, 0.0, 1).unwrap();
        let p = optimal_shannon_power(&params, 1e-9, 5e6, 20.0).unwrap();
        assert!(p < 1e-5, "{p}");
    }
}
