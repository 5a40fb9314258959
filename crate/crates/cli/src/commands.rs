//! The `run`, `sweep` and `tablegen` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hsdpa_ee::mcs_table::{synthetic_table_comment, McsTable};
use hsdpa_ee::power_model::{dbm_to_watt, optimal_shannon_power, shannon_ee, shannon_se, watt_to_dbm};
use hsdpa_ee::{run, sweep};

use crate::config::{ExperimentSpec, ShannonBlock};
use crate::report::{self, MetricsRow, SeriesRow, ShannonRow};
use crate::{presets, CliError};

/// Where the experiment comes from. Exactly one field should be set.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub reps: Option<u32>,
}

/// Parsed experiment and the directory its relative paths resolve against.
pub fn load(source: &Source) -> Result<(ExperimentSpec, PathBuf), CliError> {
    match (&source.config, &source.preset) {
        (Some(path), None) => {
            let spec = ExperimentSpec::load(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((spec, base))
        }
        (None, Some(name)) => {
            let text = presets::preset(name).ok_or_else(|| {
                let known: Vec<_> = presets::names().collect();
                CliError::Invalid(format!("unknown preset {name:?}; known presets: {}", known.join(", ")))
            })?;
            Ok((ExperimentSpec::from_toml(text)?, PathBuf::from(".")))
        }
        _ => Err(CliError::Invalid("give exactly one of --config and --preset".into())),
    }
}

fn output_dir(spec: &ExperimentSpec, overrides: &Overrides) -> Result<PathBuf, CliError> {
    let dir = overrides
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| Path::new("out").join(&spec.name));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub metrics: Vec<MetricsRow>,
    /// EE-optimal transmit power (W) and its EE when a `[shannon]` block is present.
    pub shannon_optimum: Option<(f64, f64)>,
}

impl RunOutput {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for m in &self.metrics {
            let _ = writeln!(
                s,
                "{:<16} EE {:>12.1} bit/J  throughput {:>7.3} Mbit/s  mean power {:>5.2} dBm  reconfigurations {:>5}  NACK rate {:.3}",
                m.strategy.to_string(),
                m.avg_ee_bits_per_joule,
                m.throughput_bps / 1e6,
                m.mean_power_dbm,
                m.reconfig_count,
                m.nack_rate
            );
        }
        if let Some((p, ee)) = self.shannon_optimum {
            let _ = writeln!(
                s,
                "Shannon EE optimum: {:.3} W ({:.2} dBm), {:.1} bit/J",
                p,
                watt_to_dbm(p),
                ee
            );
        }
        let _ = write!(s, "results in {}", self.dir.display());
        s
    }
}

/// Simulates the scenario once per strategy on the same seed and writes
/// `trace.csv` and `metrics.csv` (plus `shannon.csv` when requested).
pub fn cmd_run(source: &Source, overrides: &Overrides) -> Result<RunOutput, CliError> {
    let (spec, base) = load(source)?;
    let mut scenario = spec.scenario(&base)?;
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    let strategies = spec.run_strategies();
    let shannon = spec
        .shannon
        .as_ref()
        .map(|b| shannon_curve(b, &scenario.power_model))
        .transpose()?;
    let dir = output_dir(&spec, overrides)?;

    let mut trace = Vec::new();
    let mut metrics = Vec::new();
    for &strategy in &strategies {
        let mut s = scenario.clone();
        s.strategy = strategy;
        let (m, records) = run(&s)?;
        trace.extend(report::trace_rows(strategy, &records, spec.run.smoothing_ttis));
        metrics.push(MetricsRow::new(strategy, &m));
    }
    report::write_csv(&dir.join("trace.csv"), &trace)?;
    report::write_csv(&dir.join("metrics.csv"), &metrics)?;
    let shannon_optimum = match shannon {
        Some((rows, optimum)) => {
            report::write_csv(&dir.join("shannon.csv"), &rows)?;
            Some(optimum)
        }
        None => None,
    };
    Ok(RunOutput {
        dir,
        metrics,
        shannon_optimum,
    })
}

fn shannon_curve(b: &ShannonBlock, pm: &hsdpa_ee::PowerModelParams) -> Result<(Vec<ShannonRow>, (f64, f64)), CliError> {
    if b.points < 2 {
        return Err(CliError::Invalid("shannon points must be at least 2".into()));
    }
    let invalid = |e: hsdpa_ee::power_model::PowerModelError| CliError::Invalid(e.to_string());
    let p_max = dbm_to_watt(b.p_max_dbm);
    let rows = (1..=b.points)
        .map(|k| {
            let p = p_max * k as f64 / b.points as f64;
            Ok(ShannonRow {
                p_tx_w: p,
                p_tx_dbm: watt_to_dbm(p),
                se_bits_per_hz: shannon_se(p, b.n0_w_per_hz, b.bandwidth_hz).map_err(invalid)?,
                ee_bits_per_joule: shannon_ee(p, b.n0_w_per_hz, b.bandwidth_hz, pm).map_err(invalid)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let p_opt = optimal_shannon_power(pm, b.n0_w_per_hz, b.bandwidth_hz, p_max).map_err(invalid)?;
    let ee_opt = shannon_ee(p_opt, b.n0_w_per_hz, b.bandwidth_hz, pm).map_err(invalid)?;
    Ok((rows, (p_opt, ee_opt)))
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub dir: PathBuf,
    pub rows: Vec<SeriesRow>,
}

impl SweepOutput {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:<16} {:>12} {:>10} {:>10} {:>10}",
            "mode", "value", "strategy", "mean EE", "sd EE", "reconfigs", "Mbit/s"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:<16} {:>12.1} {:>10.1} {:>10.1} {:>10.3}",
                r.antenna_mode.to_string(),
                r.value,
                r.strategy.to_string(),
                r.mean_ee,
                r.std_ee,
                r.mean_reconfigs,
                r.mean_throughput / 1e6
            );
        }
        let _ = write!(s, "results in {}", self.dir.display());
        s
    }
}

/// Runs the `[sweep]` block, once per listed antenna mode, and writes
/// `series.csv`.
pub fn cmd_sweep(source: &Source, overrides: &Overrides) -> Result<SweepOutput, CliError> {
    let (spec, base) = load(source)?;
    let mut template = spec.scenario(&base)?;
    if let Some(seed) = overrides.seed {
        template.seed = seed;
    }
    let mut plan = spec.resolved_sweep()?;
    if let Some(reps) = overrides.reps {
        if reps == 0 {
            return Err(CliError::Invalid("--reps must be positive".into()));
        }
        plan.reps = reps;
    }
    let modes = if plan.antenna_modes.is_empty() {
        vec![template.antenna_mode]
    } else {
        plan.antenna_modes.clone()
    };
    let dir = output_dir(&spec, overrides)?;

    let mut rows = Vec::new();
    for mode in modes {
        let mut t = template.clone();
        t.antenna_mode = mode;
        let points = sweep(&t, plan.variable, &plan.values, plan.reps, &plan.strategies)?;
        rows.extend(points.iter().map(|p| SeriesRow::new(p, mode)));
    }
    report::write_csv(&dir.join("series.csv"), &rows)?;
    Ok(SweepOutput { dir, rows })
}

/// Writes a synthetic MCS table and returns it.
pub fn cmd_tablegen(step_db: f64, entries: usize, out: &Path) -> Result<McsTable, CliError> {
    let table = McsTable::synthetic(step_db, entries).map_err(|e| CliError::Invalid(e.to_string()))?;
    let csv = table.to_csv(Some(&synthetic_table_comment(step_db, entries)));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(out, csv).map_err(|e| CliError::io(out, e))?;
    Ok(table)
}

/// The command a preset is meant for.
pub fn preset_command(spec: &ExperimentSpec) -> &'static str {
    if spec.sweep.is_some() {
        "sweep"
    } else {
        "run"
    }
}
