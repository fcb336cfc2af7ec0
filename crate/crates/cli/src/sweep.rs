//! Interaction-strength sweeps. Every point reuses the base seed, so the
//! same random amplitudes are rescaled by `v0` across the sweep.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::{execute, write, Regime};
use crate::output::{number, OutputDir, Table};

/// Drops repeated values, keeping first occurrences in order, and reports
/// what was dropped.
pub fn dedupe(values: &[f64]) -> (Vec<f64>, Vec<String>) {
    let mut kept: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    for &v in values {
        if kept.contains(&v) {
            warnings.push(format!("duplicate v0 = {v} ignored"));
        } else {
            kept.push(v);
        }
    }
    (kept, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub v0: f64,
    pub dir: String,
    /// "ok" or the error that stopped this point.
    pub status: String,
    pub gamma0: Option<f64>,
    pub delta_e: Option<f64>,
    pub gamma0_over_delta_e: Option<f64>,
    pub regime: Option<Regime>,
    pub gamma_fit: Option<f64>,
    pub delta_sq_fit: Option<f64>,
    pub prefactor_fit: Option<f64>,
    pub saturation_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config_sha256: String,
    pub warnings: Vec<String>,
    pub points: Vec<PointReport>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.status != "ok").count()
    }
}

pub fn sweep(base: &ExperimentConfig, v0_values: &[f64], dir: &Path) -> Result<SweepReport> {
    base.validate()?;
    let (values, warnings) = dedupe(v0_values);
    if values.len() < 2 {
        return Err(CliError::Config(format!(
            "a sweep needs at least 2 distinct v0 values, got {}",
            values.len()
        )));
    }
    let mut out = OutputDir::create(dir)?;
    let configs: Vec<(String, ExperimentConfig)> = values
        .iter()
        .enumerate()
        .map(|(k, &v0)| {
            let mut c = base.clone();
            c.model.v0 = v0;
            (format!("point_{k:02}"), c)
        })
        .collect();
    for (_, c) in &configs {
        c.validate()?;
    }

    let results: Vec<Result<_>> = configs
        .par_iter()
        .map(|(name, c)| execute(c).and_then(|data| write(&data, &dir.join(name))))
        .collect();

    let mut points = Vec::with_capacity(values.len());
    for ((name, c), result) in configs.iter().zip(results) {
        let mut p = PointReport {
            v0: c.model.v0,
            dir: name.clone(),
            status: "ok".into(),
            gamma0: None,
            delta_e: None,
            gamma0_over_delta_e: None,
            regime: None,
            gamma_fit: None,
            delta_sq_fit: None,
            prefactor_fit: None,
            saturation_ratio: None,
        };
        match result {
            Ok(summary) => {
                let e = &summary.ensemble;
                let tail = e.decay.as_ref().and_then(|d| d.tail.as_ref());
                p.gamma0 = Some(e.gamma0_mean);
                p.delta_e = Some(e.delta_e_sq_mean.sqrt());
                p.gamma0_over_delta_e = e.gamma0_over_delta_e;
                p.regime = Some(e.regime);
                p.gamma_fit = tail.map(|t| t.gamma_fit);
                p.delta_sq_fit = e.decay.as_ref().map(|d| d.delta_sq_fit);
                p.prefactor_fit = tail.map(|t| t.prefactor_fit);
                p.saturation_ratio = e.saturation_ratio_mean;
                out.record(&format!("{name}/{}", crate::output::MANIFEST))?;
            }
            Err(e) => p.status = e.to_string(),
        }
        points.push(p);
    }

    let hash = base.hash();
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_owned(), number);
    let mut table = Table::new(&[
        "v0",
        "gamma0",
        "delta_e",
        "gamma0_over_delta_e",
        "gamma_fit",
        "delta_sq_fit",
        "prefactor_fit",
        "w_inf_npc_over_3",
        "regime",
        "status",
    ]);
    table
        .comment("interaction-strength sweep, one row per distinct v0")
        .comment(format!("config_sha256 (base): {hash}"))
        .comment("units: energies in d0; fits from the ensemble-mean survival probability");
    for w in &warnings {
        table.comment(format!("warning: {w}"));
    }
    for p in &points {
        table.push_cells(vec![
            number(p.v0),
            opt(p.gamma0),
            opt(p.delta_e),
            opt(p.gamma0_over_delta_e),
            opt(p.gamma_fit),
            opt(p.delta_sq_fit),
            opt(p.prefactor_fit),
            opt(p.saturation_ratio),
            p.regime.map_or("none", Regime::label).to_owned(),
            p.status.clone(),
        ]);
    }
    let report = SweepReport {
        config_sha256: hash.clone(),
        warnings,
        points,
    };
    out.write_table("sweep.csv", &table)?;
    out.write_json("sweep.json", &report)?;
    out.finish(&hash)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedupe_keeps_first_occurrences() {
        let (kept, warnings) = dedupe(&[0.1, 0.3, 0.1, 0.2, 0.3]);
        assert_eq!(kept, vec![0.1, 0.3, 0.2]);
        assert_eq!(warnings.len(), 2);
    }
}
