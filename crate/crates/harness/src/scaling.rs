//! Log-log scaling fits over sweep rows: least-squares slope of
//! `log(samples_used)` against `log s` or `log |A|`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{HarnessError, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// The fitted `(axis value, mean samples)` points.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleAxis {
    S,
    ASize,
}

/// OLS on `(ln x, ln y)`. Needs at least 3 points.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<ScalingFit, HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::DegenerateGrid(format!(
            "need at least 3 points for a fit, got {}",
            points.len()
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateGrid("all axis values identical".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit { slope, intercept, r2, points: points.to_vec() })
}

/// Group rows by the chosen axis, average `samples_used` per group, and fit.
pub fn scaling_report(rows: &[SweepRow], axis: ScaleAxis) -> Result<ScalingFit, HarnessError> {
    let mut groups: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
    for r in rows {
        let x = match axis {
            ScaleAxis::S => r.s,
            ScaleAxis::ASize => r.a_size as f64,
        };
        let e = groups.entry(x.to_bits()).or_insert((x, 0.0, 0.0));
        e.1 += r.samples_used as f64;
        e.2 += 1.0;
    }
    let points: Vec<(f64, f64)> = groups.values().map(|&(x, sum, n)| (x, sum / n)).collect();
    fit_log_log(&points)
}
