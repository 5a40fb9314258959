//! HS-PDSCH link model: large-scale path loss, multipath Rayleigh fading with
//! a Jakes Doppler spectrum, the HS-PDSCH SINR and a threshold decoder.
//!
//! The SINR of the data channel is
//!
//! ```text
//! rho(P_hs) = SF * P_hs * g / ((1 - alpha) * I_or + I_oc + N0 * W)
//! ```
//!
//! with `g` the instantaneous path gain (large-scale gain times the combined
//! fading power). Interference is held constant, so the SINR in dB moves
//! one-for-one with the HS-PDSCH power in dBm.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcs_table::{McsTable, TableError};
use crate::power_model::{db_to_linear, dbm_to_watt, linear_to_db};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    Distance(f64),
    #[error("spreading factor must be at least 1, got {0}")]
    SpreadingFactor(f64),
    #[error("orthogonality factor must lie in [0, 1], got {0}")]
    Orthogonality(f64),
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("noise power N0*W must be positive, got {0} W")]
    Noise(f64),
    #[error("power delay profile must contain at least one tap")]
    EmptyProfile,
    #[error("power delay profile tap {0} has a non-finite power or delay")]
    BadTap(usize),
    #[error("at least one sinusoid per fading tap is required")]
    Sinusoids,
    #[error("time step must be positive, got {0} s")]
    TimeStep(f64),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Large-scale gain of the UMTS macro-cell model,
/// `-(128.1 + 37.6 log10(d_km))` dB.
pub fn path_gain_db(distance_m: f64) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(ChannelError::Distance(distance_m));
    }
    Ok(-(128.1 + 37.6 * (distance_m / 1000.0).log10()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay_ns: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDelayProfile {
    pub taps: Vec<Tap>,
}

impl PowerDelayProfile {
    /// ITU Pedestrian A.
    pub fn pedestrian_a() -> Self {
        let taps = [(0.0, 0.0), (110.0, -9.7), (190.0, -19.2), (410.0, -22.8)]
            .into_iter()
            .map(|(delay_ns, power_db)| Tap { delay_ns, power_db })
            .collect();
        Self { taps }
    }

    pub fn flat() -> Self {
        Self {
            taps: vec![Tap {
                delay_ns: 0.0,
                power_db: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.taps.is_empty() {
            return Err(ChannelError::EmptyProfile);
        }
        for (k, t) in self.taps.iter().enumerate() {
            if !t.delay_ns.is_finite() || !t.power_db.is_finite() {
                return Err(ChannelError::BadTap(k));
            }
        }
        Ok(())
    }

    /// Linear tap powers normalised to unit sum.
    pub fn weights(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps.iter().map(|t| db_to_linear(t.power_db)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|x| x / total).collect()
    }
}

/// Static link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// HS-PDSCH spreading factor.
    pub sf: f64,
    /// Downlink orthogonality factor.
    pub alpha: f64,
    /// Total transmit power of the serving cell, dBm. The received `I_or` is
    /// this power times the large-scale gain.
    pub cell_power_dbm: f64,
    /// Inter-cell interference at the receiver, W.
    pub i_oc_w: f64,
    /// Thermal noise density including the receiver noise figure, W/Hz.
    pub n0_w_per_hz: f64,
    pub bandwidth_hz: f64,
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    pub pdp: PowerDelayProfile,
    pub distance_m: f64,
    /// Sinusoids per fading process.
    pub sinusoids: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        let mut params = Self {
            sf: 16.0,
            alpha: 0.995,
            cell_power_dbm: 43.0,
            i_oc_w: 0.0,
            // -174 dBm/Hz thermal noise with a 7 dB receiver noise figure.
            n0_w_per_hz: dbm_to_watt(-174.0 + 7.0),
            bandwidth_hz: 5e6,
            speed_kmh: 3.0,
            carrier_hz: 2.14e9,
            pdp: PowerDelayProfile::pedestrian_a(),
            distance_m: 300.0,
            sinusoids: 64,
        };
        params.set_geometry_db(5.0);
        params
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.sf >= 1.0 && self.sf.is_finite()) {
            return Err(ChannelError::SpreadingFactor(self.sf));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ChannelError::Orthogonality(self.alpha));
        }
        for (name, value) in [
            ("i_oc_w", self.i_oc_w),
            ("speed_kmh", self.speed_kmh),
            ("carrier_hz", self.carrier_hz),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ChannelError::Negative { name, value });
            }
        }
        if !self.cell_power_dbm.is_finite() {
            return Err(ChannelError::Negative {
                name: "cell_power_dbm",
                value: self.cell_power_dbm,
            });
        }
        let noise = self.noise_w();
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(ChannelError::Noise(noise));
        }
        path_gain_db(self.distance_m)?;
        self.pdp.validate()?;
        if self.sinusoids == 0 {
            return Err(ChannelError::Sinusoids);
        }
        Ok(())
    }

    pub fn noise_w(&self) -> f64 {
        self.n0_w_per_hz * self.bandwidth_hz
    }

    /// Large-scale gain, linear.
    pub fn path_gain(&self) -> f64 {
        db_to_linear(path_gain_db(self.distance_m).unwrap_or(f64::NEG_INFINITY))
    }

    /// Received serving-cell power `I_or`, W.
    pub fn i_or_w(&self) -> f64 {
        dbm_to_watt(self.cell_power_dbm) * self.path_gain()
    }

    /// Denominator of the HS-PDSCH SINR, W.
    pub fn interference_w(&self) -> f64 {
        (1.0 - self.alpha) * self.i_or_w() + self.i_oc_w + self.noise_w()
    }

    /// Geometry factor `I_or / (I_oc + N0 W)` in dB at the current distance.
    pub fn geometry_db(&self) -> f64 {
        linear_to_db(self.i_or_w() / (self.i_oc_w + self.noise_w()))
    }

    /// Sets `I_oc` so the geometry factor at the current distance equals
    /// `geometry_db`. When the noise alone already exceeds the requested
    /// interference level, `I_oc` is set to zero.
    pub fn set_geometry_db(&mut self, geometry_db: f64) {
        let target = self.i_or_w() / db_to_linear(geometry_db);
        self.i_oc_w = (target - self.noise_w()).max(0.0);
    }

    /// Maximum Doppler shift `v f_c / c`, Hz.
    pub fn doppler_hz(&self) -> f64 {
        self.speed_kmh / 3.6 * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// Per-unit-fading-power SNR scale: SINR = scale * P_hs * fading_power.
    pub fn sinr_scale(&self) -> f64 {
        self.sf * self.path_gain() / self.interference_w()
    }
}

/// Instantaneous fading gains. `taps[l]` holds the `n_rx x n_tx` matrix of
/// tap `l` in row-major order; each entry has mean power equal to the tap's
/// profile weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub n_tx: usize,
    pub n_rx: usize,
    pub taps: Vec<Vec<Complex64>>,
    pub time_s: f64,
}

impl ChannelState {
    /// Flat (single tap, unit gain on every antenna pair) state.
    pub fn unit(n_tx: usize, n_rx: usize) -> Self {
        Self {
            n_tx,
            n_rx,
            taps: vec![vec![Complex64::new(1.0, 0.0); n_tx * n_rx]],
            time_s: 0.0,
        }
    }

    pub fn gain(&self, tap: usize, rx: usize, tx: usize) -> Complex64 {
        self.taps[tap][rx * self.n_tx + tx]
    }

    /// Fading power seen by a single-stream receiver combining all taps and
    /// receive antennas (maximal-ratio). Only transmit antenna 0 is used.
    pub fn combined_power(&self) -> f64 {
        self.taps
            .iter()
            .map(|m| (0..self.n_rx).map(|r| m[r * self.n_tx].norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Tap-summed Gram matrix `sum_l H_l^H H_l` over transmit antennas
    /// (`n_tx x n_tx`, row-major).
    pub fn gram(&self) -> Vec<Complex64> {
        let n = self.n_tx;
        let mut g = vec![Complex64::new(0.0, 0.0); n * n];
        for m in &self.taps {
            for a in 0..n {
                for b in 0..n {
                    g[a * n + b] += (0..self.n_rx)
                        .map(|r| m[r * n + a].conj() * m[r * n + b])
                        .sum::<Complex64>();
                }
            }
        }
        g
    }
}

/// Unit-amplitude sum of sinusoids with random phases and arrival angles
/// spread evenly around the circle. The even spread with a quarter-slot
/// offset keeps every Doppler frequency distinct, so the long-run power
/// equals the configured weight.
#[derive(Debug, Clone)]
struct SinusoidBank {
    amplitude: f64,
    omegas: Vec<f64>,
    phasors: Vec<Complex64>,
    rotations: Vec<Complex64>,
    rotation_dt: f64,
}

impl SinusoidBank {
    fn new<R: Rng + ?Sized>(weight: f64, doppler_hz: f64, n: usize, rng: &mut R) -> Self {
        let offset = rng.gen_range(-PI / 4.0..PI / 4.0);
        let omegas = (0..n)
            .map(|k| {
                let angle = (2.0 * PI * (k as f64 + 0.25) + offset) / n as f64;
                2.0 * PI * doppler_hz * angle.cos()
            })
            .collect();
        let phasors = (0..n)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(-PI..PI)))
            .collect();
        Self {
            amplitude: (weight / n as f64).sqrt(),
            omegas,
            phasors,
            rotations: Vec::new(),
            rotation_dt: f64::NAN,
        }
    }

    fn value(&self) -> Complex64 {
        self.phasors.iter().sum::<Complex64>() * self.amplitude
    }

    fn advance(&mut self, dt: f64, renormalise: bool) {
        if self.rotation_dt != dt {
            self.rotations = self.omegas.iter().map(|w| Complex64::from_polar(1.0, w * dt)).collect();
            self.rotation_dt = dt;
        }
        for (p, r) in self.phasors.iter_mut().zip(&self.rotations) {
            *p *= r;
            if renormalise {
                *p /= p.norm();
            }
        }
    }
}

/// Multipath Rayleigh fading generator for an `n_rx x n_tx` link. Every tap
/// of every antenna pair is an independent process; evolution is a pure
/// function of the construction-time random draws and the step sequence.
#[derive(Debug, Clone)]
pub struct FadingChannel {
    banks: Vec<SinusoidBank>,
    state: ChannelState,
    steps: u64,
}

impl FadingChannel {
    pub fn new<R: Rng + ?Sized>(
        params: &ChannelParams,
        n_tx: usize,
        n_rx: usize,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        params.validate()?;
        let doppler = params.doppler_hz();
        let weights = params.pdp.weights();
        let mut banks = Vec::with_capacity(weights.len() * n_tx * n_rx);
        for &w in &weights {
            for _ in 0..n_tx * n_rx {
                banks.push(SinusoidBank::new(w, doppler, params.sinusoids, rng));
            }
        }
        let mut channel = Self {
            banks,
            state: ChannelState {
                n_tx,
                n_rx,
                taps: vec![vec![Complex64::new(0.0, 0.0); n_tx * n_rx]; weights.len()],
                time_s: 0.0,
            },
            steps: 0,
        };
        channel.refresh();
        Ok(channel)
    }

    fn refresh(&mut self) {
        let pairs = self.state.n_tx * self.state.n_rx;
        for (k, bank) in self.banks.iter().enumerate() {
            self.state.taps[k / pairs][k % pairs] = bank.value();
        }
    }

    /// Advances every process by `dt_s` seconds.
    pub fn step(&mut self, dt_s: f64) -> Result<&ChannelState, ChannelError> {
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(ChannelError::TimeStep(dt_s));
        }
        self.steps += 1;
        let renormalise = self.steps.is_multiple_of(1024);
        for bank in &mut self.banks {
            bank.advance(dt_s, renormalise);
        }
        self.refresh();
        self.state.time_s += dt_s;
        Ok(&self.state)
    }

    pub fn state(&self) -> &ChannelState {
        &self.state
    }
}

/// HS-PDSCH SINR in dB for a single stream received over transmit antenna 0
/// with all receive antennas combined.
pub fn hs_sinr_db(p_hs_w: f64, state: &ChannelState, params: &ChannelParams) -> f64 {
    linear_to_db(params.sinr_scale() * p_hs_w.max(0.0) * state.combined_power())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ack,
    Nack,
}

/// Threshold decoder: a block sent with MCS `cqi` is received when the
/// effective SINR reaches the MCS threshold minus `margin_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeModel {
    pub margin_db: f64,
    /// Retransmissions of a failed block before it is dropped.
    pub max_retransmissions: u32,
}

impl Default for DecodeModel {
    fn default() -> Self {
        Self {
            margin_db: 0.0,
            max_retransmissions: 3,
        }
    }
}

impl DecodeModel {
    pub fn decode(&self, sinr_db: f64, used_cqi: u8, table: &McsTable) -> Result<Outcome, ChannelError> {
        let threshold = table.threshold_db(used_cqi)?;
        Ok(if sinr_db >= threshold - self.margin_db {
            Outcome::Ack
        } else {
            Outcome::Nack
        })
    }
}
