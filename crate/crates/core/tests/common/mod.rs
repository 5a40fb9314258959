#![allow(dead_code)]

use hsdpa_ee::ee_controller::ControllerConfig;
use hsdpa_ee::mcs_table::{McsEntry, McsTable};
use hsdpa_ee::power_model::{dbm_to_watt, total_power, PowerModelParams};
use rand::Rng;

/// Random valid table: 2..=40 rows, irregular threshold gaps, non-decreasing
/// block sizes with occasional repeats.
pub fn random_table<R: Rng>(rng: &mut R) -> McsTable {
    let n = rng.gen_range(2..=40usize);
    let mut beta = rng.gen_range(-10.0..0.0);
    let mut tbs: u32 = rng.gen_range(50..400);
    let rows = (1..=n)
        .map(|k| {
            if k > 1 {
                beta += rng.gen_range(0.05..2.5);
                if rng.gen_bool(0.9) {
                    tbs = (f64::from(tbs) * rng.gen_range(1.01..1.4)).ceil() as u32;
                }
            }
            McsEntry {
                cqi: k as u8,
                sinr_threshold_db: beta,
                tbs_bits: tbs,
                modulation_order: 2,
                num_codes: 1,
            }
        })
        .collect();
    McsTable::from_entries(rows, 0.1).expect("generated table is valid")
}

pub fn random_config<R: Rng>(rng: &mut R, table: &McsTable) -> ControllerConfig {
    ControllerConfig {
        p_max_dbm: rng.gen_range(25.0..46.0),
        theta_min: if rng.gen_bool(0.5) {
            1
        } else {
            rng.gen_range(1..=table.max_cqi())
        },
        ..ControllerConfig::default()
    }
}

pub fn random_power_model<R: Rng>(rng: &mut R) -> PowerModelParams {
    PowerModelParams::new(
        rng.gen_range(0.2..0.6),
        rng.gen_range(0.0..20.0),
        rng.gen_range(0.0..20.0),
        1,
    )
    .expect("valid power model")
}

/// EE of sending `tbs` bits per TTI at `p_dbm`, evaluated from scratch.
pub fn ee_oracle(p_dbm: f64, tbs: u64, pm: &PowerModelParams, tti_ms: f64) -> f64 {
    tbs as f64 / (tti_ms * 1e-3 * total_power(dbm_to_watt(p_dbm), pm).unwrap())
}

/// Brute-force optimum of a ladder of `(level, power, ee)` rungs under the
/// minimum-level and maximum-power constraints. Returns `(index, power)` or
/// `None` when no rung satisfies both.
pub fn brute_force_clamp(rungs: &[(u8, f64, f64)], theta_min: u8, p_max: f64) -> Option<(usize, f64)> {
    let eps = 1e-9;
    let best = (0..rungs.len()).fold(0, |b, k| if rungs[k].2 > rungs[b].2 { k } else { b });
    let feasible_top = (0..rungs.len()).filter(|&k| rungs[k].1 <= p_max + eps).max()?;
    let floor = (0..rungs.len()).find(|&k| rungs[k].0 >= theta_min)?;
    let p_min = rungs[floor].1;
    if p_min > p_max + eps {
        return None;
    }
    let k = best.max(floor).min(feasible_top);
    Some((k, rungs[best].1.max(p_min).min(p_max)))
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One-sided 95% lower confidence bound on `mean(a - b)` for paired samples.
pub fn paired_lower_bound(a: &[f64], b: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, sd) = mean_sd(&d);
    let n = d.len() as f64;
    let t = StudentsT::new(0.0, 1.0, n - 1.0).unwrap().inverse_cdf(0.95);
    mean - t * sd / n.sqrt()
}
