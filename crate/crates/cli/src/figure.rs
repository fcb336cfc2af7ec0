//! Plot data for the schematic `W(t)`: the Gaussian short-time law, the
//! interpolating law and the strong-coupling exponential tail, with the two
//! crossover-time conventions marked.

use std::path::Path;

use serde::Serialize;
use tbri_core::analytic::{intersection_time, tail_prefactor};
use tbri_core::DecayLaw;

use crate::config::sha256_hex;
use crate::error::{CliError, Result};
use crate::output::{number, FileEntry, OutputDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Params {
    pub gamma: f64,
    pub delta_e: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for Figure1Params {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            delta_e: 1.2,
            t_max: 1.5,
            points: 301,
        }
    }
}

impl Figure1Params {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.gamma) || !ok(self.delta_e) {
            return Err(CliError::Config(format!(
                "gamma and delta_e must be positive (got {}, {})",
                self.gamma, self.delta_e
            )));
        }
        if !ok(self.t_max) {
            return Err(CliError::Config(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config("points must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure1Summary {
    pub params: Figure1Params,
    /// `C = (π²Γ²/8Δ_E²) exp(Γ²/4Δ_E²)`.
    pub prefactor: f64,
    /// `Γ/Δ_E²`.
    pub t_c: f64,
    /// `Γ/(2Δ_E²)`.
    pub t_c_half: f64,
    /// Where the tail overtakes the Gaussian for good, if within `t_max`.
    pub t_intersection: Option<f64>,
    pub note: String,
    pub files: Vec<FileEntry>,
}

pub fn discrepancy_note(t_c: f64, t_c_half: f64) -> String {
    format!(
        "two crossover conventions: t_c = Gamma/Delta_E^2 = {t_c:.4} from the crossover estimate, \
         and t_c/2 = Gamma/(2 Delta_E^2) = {t_c_half:.4}, where the schematic places its marker; \
         they differ by a factor of 2 and both are emitted"
    )
}

pub fn figure1(params: Figure1Params, dir: &Path) -> Result<Figure1Summary> {
    params.validate()?;
    let Figure1Params {
        gamma,
        delta_e,
        t_max,
        points,
    } = params;
    let laws = [
        DecayLaw::Gaussian { delta_e },
        DecayLaw::Interpolation { gamma, delta_e },
        DecayLaw::AsymptoticTail { gamma, delta_e },
    ];
    let prefactor = tail_prefactor(gamma, delta_e);
    let t_c = gamma / (delta_e * delta_e);
    let t_c_half = 0.5 * t_c;
    let t_intersection = intersection_time(gamma, delta_e, prefactor, t_max).ok();
    let note = discrepancy_note(t_c, t_c_half);
    let tag = sha256_hex(
        serde_json::to_string(&params)
            .map_err(CliError::numeric)?
            .as_bytes(),
    );

    let header = |t: &mut Table| {
        t.comment(format!(
            "parameters: Gamma = {gamma}, Delta_E = {delta_e}, t_max = {t_max}"
        ))
        .comment(format!("params_sha256: {tag}"))
        .comment("units: t in hbar per energy unit of Gamma and Delta_E; W dimensionless")
        .comment(format!(
            "t_c = {} ; t_c_half = {}",
            number(t_c),
            number(t_c_half)
        ))
        .comment(note.clone());
    };
    let mut curves = Table::new(&["t", "W_gauss", "W_interp", "W_tail"]);
    curves.comment(
        "schematic survival probability: exp(-Delta^2 t^2), interpolation, C exp(-Gamma t)",
    );
    header(&mut curves);
    for k in 0..points {
        let t = t_max * k as f64 / (points - 1) as f64;
        curves.push(vec![t, laws[0].eval(t), laws[1].eval(t), laws[2].eval(t)]);
    }
    let mut markers = Table::new(&["t", "W_gauss", "W_interp", "W_tail"]);
    markers.comment("crossover markers: row 1 t_c = Gamma/Delta_E^2, row 2 t_c_half, row 3 intersection (if any)");
    header(&mut markers);
    for t in [Some(t_c), Some(t_c_half), t_intersection]
        .into_iter()
        .flatten()
    {
        markers.push(vec![t, laws[0].eval(t), laws[1].eval(t), laws[2].eval(t)]);
    }

    let mut out = OutputDir::create(dir)?;
    out.write_table("figure1.csv", &curves)?;
    out.write_table("figure1_markers.csv", &markers)?;
    let summary = Figure1Summary {
        params,
        prefactor,
        t_c,
        t_c_half,
        t_intersection,
        note,
        files: out.entries(),
    };
    out.write_json("figure1.json", &summary)?;
    out.finish(&tag)?;
    Ok(summary)
}
