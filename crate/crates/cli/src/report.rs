//! CSV rows and writers. Floats are written in shortest round-trip form, so
//! every file re-parses to the exact values that were simulated.

use std::path::Path;

use hsdpa_ee::{AntennaMode, McsChoice, RunMetrics, Strategy, SweepPoint, TtiOutcome, TtiRecord};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub strategy: Strategy,
    pub tti: u64,
    pub p_tx_dbm: f64,
    pub mcs_primary: u8,
    /// 0 when a single stream is scheduled.
    pub mcs_secondary: u8,
    pub reported_cqi: u8,
    pub sinr_db: f64,
    pub outcome: TtiOutcome,
    pub delivered_bits: u64,
    pub consumed_energy_j: f64,
    pub ee: f64,
    pub ee_smoothed: f64,
    pub delta_db: f64,
    pub reconfigured: bool,
    pub retransmission: bool,
}

/// Trace rows for one strategy. `ee_smoothed` is the mean EE over the last
/// `window` TTIs (fewer at the start).
pub fn trace_rows(strategy: Strategy, records: &[TtiRecord], window: usize) -> Vec<TraceRow> {
    let ee: Vec<f64> = records.iter().map(TtiRecord::ee).collect();
    let smoothed = moving_average(&ee, window.max(1));
    records
        .iter()
        .zip(ee.iter().zip(smoothed))
        .map(|(r, (&ee, ee_smoothed))| {
            let (mcs_primary, mcs_secondary) = match r.mcs {
                McsChoice::None => (0, 0),
                McsChoice::Single(c) => (c, 0),
                McsChoice::Dual(a, b) => (a, b),
            };
            TraceRow {
                strategy,
                tti: r.tti_index,
                p_tx_dbm: r.p_tx_dbm,
                mcs_primary,
                mcs_secondary,
                reported_cqi: r.reported_cqi,
                sinr_db: r.sinr_db,
                outcome: r.outcome,
                delivered_bits: r.delivered_bits,
                consumed_energy_j: r.consumed_energy_j,
                ee,
                ee_smoothed,
                delta_db: r.delta_db,
                reconfigured: r.reconfigured,
                retransmission: r.retransmission,
            }
        })
        .collect()
}

pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for k in 0..xs.len() {
        sum += xs[k];
        if k >= window {
            sum -= xs[k - window];
        }
        out.push(sum / (k + 1).min(window) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub strategy: Strategy,
    pub avg_ee_bits_per_joule: f64,
    pub throughput_bps: f64,
    pub reconfig_count: u64,
    pub nack_rate: f64,
    pub retransmissions: u64,
    pub delivered_bits: u64,
    pub consumed_energy_j: f64,
    pub mean_power_dbm: f64,
    pub ttis: u64,
}

impl MetricsRow {
    pub fn new(strategy: Strategy, m: &RunMetrics) -> Self {
        Self {
            strategy,
            avg_ee_bits_per_joule: m.avg_ee_bits_per_joule,
            throughput_bps: m.throughput_bps,
            reconfig_count: m.reconfig_count,
            nack_rate: m.nack_rate,
            retransmissions: m.retransmissions,
            delivered_bits: m.delivered_bits,
            consumed_energy_j: m.consumed_energy_j,
            mean_power_dbm: m.mean_power_dbm,
            ttis: m.ttis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub variable: String,
    pub value: String,
    pub strategy: Strategy,
    pub mean_ee: f64,
    pub std_ee: f64,
    pub mean_reconfigs: f64,
    pub mean_throughput: f64,
    pub antenna_mode: AntennaMode,
}

impl SeriesRow {
    pub fn new(p: &SweepPoint, antenna_mode: AntennaMode) -> Self {
        Self {
            variable: p.variable.to_string(),
            value: p.value.to_string(),
            strategy: p.strategy,
            mean_ee: p.mean_ee,
            std_ee: p.std_ee,
            mean_reconfigs: p.mean_reconfigs,
            mean_throughput: p.mean_throughput,
            antenna_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShannonRow {
    pub p_tx_w: f64,
    pub p_tx_dbm: f64,
    pub se_bits_per_hz: f64,
    pub ee_bits_per_joule: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    for row in rows {
        w.serialize(row).map_err(to_io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}
