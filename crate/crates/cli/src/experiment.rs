//! The `run` pipeline: ensemble members are built, diagonalized and evolved
//! as independent tasks; their results are reduced in index order so the
//! output never depends on scheduling.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tbri_core::analytic::{crossover_time, fit_decay, fit_gaussian_window, Crossover, FitOptions};
use tbri_core::dynamics::{
    oscillation_analysis, participation_series, saturation_value, shell_class_count, survival_at,
    survival_probability, OscillationStatus,
};
use tbri_core::fit::GaussianFit;
use tbri_core::spectral::{
    density_of_states, diagonalize, participation_number, smoothed_participation_number,
    strength_function, InvariantReport, StrengthHistogram,
};
use tbri_core::tbri_model::{
    build_hamiltonian, delta_e_squared_theory, direct_coupling_stats, sample_model,
    SingleParticleSpectrum, SHIFT_DENOMINATOR_FLOOR,
};
use tbri_core::{
    DecayLaw, FockBasis, Provenance, SeriesMeta, ShellStats, SurvivalSeries, TimeGrid,
};

use crate::config::{EnergyName, EnergyTarget, ExperimentConfig, TimeUnit};
use crate::error::{CliError, Result};
use crate::output::{FileEntry, OutputDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// No interaction: `W ≡ 1`.
    Trivial,
    /// `Γ₀/Δ_E` below the threshold: Lorentzian-like strength function.
    BreitWigner,
    /// `Γ₀/Δ_E` at or above the threshold.
    Gaussian,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Self::Trivial => "trivial",
            Self::BreitWigner => "breit-wigner",
            Self::Gaussian => "gaussian",
        }
    }

    pub fn classify(ratio: Option<f64>, threshold: f64) -> Self {
        match ratio {
            None => Self::Trivial,
            Some(r) if r >= threshold => Self::Gaussian,
            Some(_) => Self::BreitWigner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub index: usize,
    /// Unperturbed energy `Σ ε` of the basis state.
    pub h0_energy: f64,
    pub h_ii: f64,
    /// Strength-function variance from the eigen-sums.
    pub delta_e_sq: f64,
    /// `Σ_{f≠i} H_if²` from the matrix row.
    pub coupling_sum_sq: f64,
    /// `|delta_e_sq − coupling_sum_sq| / coupling_sum_sq`.
    pub identity_residual: f64,
    pub gamma0: f64,
    pub gamma0_over_delta_e: Option<f64>,
    pub regime: Regime,
    /// `(1 − W(t))/(t² Δ_E²)` at `t = 10⁻²/Δ_E`.
    pub short_time_ratio: Option<f64>,
    pub n_pc: f64,
    pub n_pc_smoothed: f64,
    pub shell: Option<ShellStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<OscillationStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosSummary {
    pub sigma: f64,
    pub e_center: f64,
    pub level_spacing: f64,
    pub energy_variance: f64,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationSummary {
    pub index: u64,
    pub seed: u64,
    pub dos: DosSummary,
    pub invariants: InvariantReport,
    pub states: Vec<StateSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub gamma_fit: f64,
    pub prefactor_fit: f64,
    pub window: (f64, f64),
    pub rms: f64,
    pub points: usize,
    pub t_c: Crossover,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub early_window: (f64, f64),
    /// `−d ln W̄ / d t²` over the early window.
    pub delta_sq_fit: f64,
    pub early_rms: f64,
    pub early_points: usize,
    pub tail: Option<TailReport>,
    /// "ok", or why the tail could not be fitted.
    pub tail_status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthReport {
    pub bandwidth: f64,
    pub states: usize,
    pub gaussian_fit: Option<GaussianFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub states: usize,
    pub delta_e_sq_theory: f64,
    pub delta_e_sq_mean: f64,
    pub coupling_sum_sq_mean: f64,
    pub gamma0_mean: f64,
    pub gamma0_over_delta_e: Option<f64>,
    pub regime: Regime,
    pub max_identity_residual: f64,
    pub short_time_ratio_range: Option<(f64, f64)>,
    pub level_spacing_mean: f64,
    pub w_inf_mean: Option<f64>,
    pub n_pc_mean: f64,
    pub n_pc_smoothed_mean: f64,
    /// Mean over states of `W_∞ · N_pc / 3` (smoothed `N_pc`).
    pub saturation_ratio_mean: Option<f64>,
    pub decay: Option<DecayReport>,
    pub strength: Option<StrengthReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config_sha256: String,
    pub config: ExperimentConfig,
    /// Multiplier that turned the configured times into `ħ/d0`.
    pub time_scale: f64,
    pub ensemble: EnsembleSummary,
    pub realizations: Vec<RealizationSummary>,
    /// Data files written alongside the summary.
    pub files: Vec<FileEntry>,
}

/// Everything a run computes, before it is written out.
pub struct RunData {
    pub summary: RunSummary,
    pub grid: TimeGrid,
    pub saturation_grid: TimeGrid,
    pub w_mean: Vec<f64>,
    pub w_saturation_mean: Vec<f64>,
    /// Mean `N_pc(t)` over the tracked states.
    pub n_pc_mean: Vec<f64>,
    pub laws: Option<[DecayLaw; 3]>,
    pub strength: Option<StrengthHistogram>,
    pub hamiltonians: Vec<(u64, Vec<u8>)>,
}

struct StateRun {
    summary: StateSummary,
    w: Vec<f64>,
    w_saturation: Vec<f64>,
    n_pc_t: Option<Vec<f64>>,
    /// `(E^(k) − H_ii, |C_i^(k)|²)`.
    strength: Vec<(f64, f64)>,
}

struct RealizationRun {
    summary: RealizationSummary,
    states: Vec<StateRun>,
    hamiltonian: Option<Vec<u8>>,
}

fn numeric<E: std::fmt::Display>(context: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Numeric(format!("{context}: {e}"))
}

/// Unit of the configured times in `ħ/d0`.
pub fn time_scale(config: &ExperimentConfig) -> f64 {
    match config.times.unit {
        TimeUnit::Absolute => 1.0,
        TimeUnit::InverseDeltaE => {
            let d2 = delta_e_squared_theory(&config.model);
            if d2 > 0.0 {
                1.0 / d2.sqrt()
            } else {
                1.0
            }
        }
    }
}

pub fn grids(config: &ExperimentConfig) -> Result<(TimeGrid, TimeGrid)> {
    let s = time_scale(config);
    let t = &config.times;
    let grid_err = |e: tbri_core::series::GridError| CliError::Config(format!("times: {e}"));
    let log =
        TimeGrid::logarithmic(t.log_start * s, t.log_stop * s, t.log_points).map_err(grid_err)?;
    let grid = TimeGrid::merged(&[&log], true).map_err(grid_err)?;
    let sat = TimeGrid::linear(
        t.saturation_start * s,
        t.saturation_stop * s,
        t.saturation_points,
    )
    .map_err(grid_err)?;
    Ok((grid, sat))
}

/// Basis indices to start from, in selection order.
pub fn select_states(
    config: &ExperimentConfig,
    basis: &FockBasis,
    spectrum: &SingleParticleSpectrum,
) -> Result<Vec<usize>> {
    let sel = &config.initial_state;
    if let Some(i) = sel.index {
        if i >= basis.len() {
            return Err(CliError::Config(format!(
                "initial_state.index {i} out of range for dimension {}",
                basis.len()
            )));
        }
        return Ok(vec![i]);
    }
    if sel.count > basis.len() {
        return Err(CliError::Config(format!(
            "initial_state.count {} exceeds the dimension {}",
            sel.count,
            basis.len()
        )));
    }
    let h0: Vec<f64> = basis
        .states()
        .iter()
        .map(|s| s.orbitals().map(|o| spectrum.eps[o]).sum())
        .collect();
    let target = match sel.energy.expect("validated selector") {
        EnergyTarget::Value(e) => e,
        EnergyTarget::Named(EnergyName::Center) => {
            let (lo, hi) = h0
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| {
                    (a.min(e), b.max(e))
                });
            0.5 * (lo + hi)
        }
    };
    let mut idx: Vec<usize> = (0..h0.len()).collect();
    idx.sort_by(|&a, &b| {
        (h0[a] - target)
            .abs()
            .total_cmp(&(h0[b] - target).abs())
            .then(a.cmp(&b))
    });
    idx.truncate(sel.count);
    Ok(idx)
}

fn realize(
    config: &ExperimentConfig,
    basis: &FockBasis,
    r: u64,
    grid: &TimeGrid,
    sat: &TimeGrid,
) -> Result<RealizationRun> {
    let a = &config.analysis;
    let model = config.model.realization(r);
    let (spectrum, amplitudes) = sample_model(&model).map_err(numeric("model"))?;
    let h = build_hamiltonian(basis, &spectrum, &amplitudes).map_err(numeric("hamiltonian"))?;
    let decomp = diagonalize(&h).map_err(numeric("diagonalization"))?;
    let dos = density_of_states(&decomp, a.dos_bins).map_err(numeric("density of states"))?;
    let invariants = decomp.check_invariants(&h);
    let diagonal = h.diagonal();
    let coupling_bin = a.coupling_bin.unwrap_or(config.model.d0);
    let states = select_states(config, basis, &spectrum)?;

    let mut runs = Vec::with_capacity(states.len());
    for (slot, &i) in states.iter().enumerate() {
        let stats = direct_coupling_stats(&h, i, coupling_bin, SHIFT_DENOMINATOR_FLOOR)
            .map_err(numeric("couplings"))?;
        let d2 = strength_function(&decomp, i, a.sf_bandwidth_spacings * dos.level_spacing)
            .map_err(numeric("strength function"))?
            .moments
            .variance;
        let delta_e = d2.sqrt();
        let coupled = stats.coupled > 0 && d2 > 0.0;
        let ratio = coupled.then(|| stats.gamma0 / delta_e);
        let short_time_ratio = if coupled {
            let t = 1e-2 / delta_e;
            let w = survival_at(&decomp, i, t).map_err(numeric("survival"))?;
            Some((1.0 - w) / (t * t) / d2)
        } else {
            None
        };
        let w = survival_probability(&decomp, i, grid)
            .map_err(numeric("survival"))?
            .w;
        let n_pc = participation_number(&decomp, i).map_err(numeric("participation"))?;
        let n_pc_smoothed =
            smoothed_participation_number(&decomp, i, a.npc_bandwidth_spacings * dos.level_spacing)
                .map_err(numeric("participation"))?;
        let shell_width = stats.gamma0.min(dos.sigma);
        let n_c = shell_class_count(basis, &diagonal, i, shell_width);

        let mut sat_series = survival_probability(&decomp, i, sat).map_err(numeric("survival"))?;
        sat_series.meta = SeriesMeta {
            shell_width: Some(shell_width),
            n_pc: Some(n_pc_smoothed),
            n_c: Some(n_c),
            level_spacing: Some(dos.level_spacing),
            ..sat_series.meta
        };
        let window = (
            sat.values()[0],
            *sat.values().last().expect("non-empty grid"),
        );
        let (shell, saturation_note) = match saturation_value(&sat_series, window) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };

        let tracked = slot < a.npc_states;
        let n_pc_t = if tracked {
            Some(participation_series(&decomp, i, grid).map_err(numeric("participation"))?)
        } else {
            None
        };
        let oscillation = if tracked && coupled && a.oscillation_points > 0 && shell_width > 0.0 {
            let win = TimeGrid::linear(2.0 / delta_e, 40.0 / delta_e, a.oscillation_points)
                .map_err(numeric("oscillation window"))?;
            let values =
                participation_series(&decomp, i, &win).map_err(numeric("participation"))?;
            let scales = shell.unwrap_or(ShellStats {
                delta: shell_width,
                w_inf: f64::NAN,
                n_pc: n_pc_smoothed,
                n_c,
                level_spacing: dos.level_spacing,
                ratio: f64::NAN,
            });
            Some(oscillation_analysis(
                win.values(),
                &values,
                &scales,
                2.0 * n_c as f64 / shell_width,
            ))
        } else {
            None
        };

        let weights = decomp.weights(i).map_err(numeric("weights"))?;
        let h_ii = diagonal[i];
        let strength = decomp
            .energies
            .iter()
            .zip(weights)
            .map(|(e, w)| (e - h_ii, w))
            .collect();
        runs.push(StateRun {
            summary: StateSummary {
                index: i,
                h0_energy: basis.state_at(i).orbitals().map(|o| spectrum.eps[o]).sum(),
                h_ii,
                delta_e_sq: d2,
                coupling_sum_sq: stats.sum_sq,
                identity_residual: if stats.sum_sq > 0.0 {
                    (d2 - stats.sum_sq).abs() / stats.sum_sq
                } else {
                    d2.abs()
                },
                gamma0: stats.gamma0,
                gamma0_over_delta_e: ratio,
                regime: Regime::classify(ratio, a.regime_threshold),
                short_time_ratio,
                n_pc,
                n_pc_smoothed,
                shell,
                saturation_note,
                oscillation,
            },
            w,
            w_saturation: sat_series.w,
            n_pc_t,
            strength,
        });
    }

    let hamiltonian = if a.dump_hamiltonian {
        let mut buf = Vec::new();
        h.write_text(&mut buf)
            .map_err(CliError::io("<hamiltonian dump>"))?;
        Some(buf)
    } else {
        None
    };
    Ok(RealizationRun {
        summary: RealizationSummary {
            index: r,
            seed: model.seed,
            dos: DosSummary {
                sigma: dos.sigma,
                e_center: dos.e_center,
                level_spacing: dos.level_spacing,
                energy_variance: dos.energy_variance,
                r_squared: dos.r_squared,
            },
            invariants,
            states: runs.iter().map(|s| s.summary.clone()).collect(),
        },
        states: runs,
        hamiltonian,
    })
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn column_mean<'a>(rows: impl IntoIterator<Item = &'a Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    let mut n = 0usize;
    for row in rows {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        n += 1;
    }
    // no rows gives NaN columns
    acc.iter().map(|a| a / n as f64).collect()
}

fn decay_report(
    config: &ExperimentConfig,
    grid: &TimeGrid,
    w_mean: &[f64],
    gamma: f64,
    delta_sq: f64,
    w_inf: Option<f64>,
) -> Result<DecayReport> {
    let a = &config.analysis;
    let series = SurvivalSeries::new(
        grid.clone(),
        w_mean.to_vec(),
        Provenance::ExactSpectral,
        SeriesMeta {
            delta_e_sq: Some(delta_sq),
            gamma: Some(gamma),
            label: "ensemble mean".into(),
            ..SeriesMeta::default()
        },
    );
    let options = FitOptions {
        gamma_estimate: Some(gamma),
        delta_sq_estimate: Some(delta_sq),
        early_end: a.early_end,
        late_start: a.late_start,
        late_end: a.late_end,
        saturation_level: w_inf,
    };
    match fit_decay(&series, &options) {
        Ok(fit) => {
            let t_c = match a.tc_scan_max {
                Some(scan) if fit.delta_sq_fit > 0.0 => crossover_time(
                    fit.gamma_fit,
                    fit.delta_sq_fit.sqrt(),
                    fit.prefactor_fit,
                    scan,
                )
                .map_err(numeric("crossover"))?,
                _ => fit.t_c,
            };
            Ok(DecayReport {
                early_window: fit.early_window,
                delta_sq_fit: fit.delta_sq_fit,
                early_rms: fit.early_rms,
                early_points: fit.early_points,
                tail: Some(TailReport {
                    gamma_fit: fit.gamma_fit,
                    prefactor_fit: fit.prefactor_fit,
                    window: fit.late_window,
                    rms: fit.late_rms,
                    points: fit.late_points,
                    t_c,
                }),
                tail_status: "ok".into(),
            })
        }
        Err(tail_err) => {
            let end = a.early_end.unwrap_or(0.5 * gamma / delta_sq);
            let early =
                fit_gaussian_window(&series, end).map_err(numeric("gaussian window fit"))?;
            Ok(DecayReport {
                early_window: (0.0, end),
                delta_sq_fit: -early.slope,
                early_rms: early.rms_residual,
                early_points: early.points,
                tail: None,
                tail_status: tail_err.to_string(),
            })
        }
    }
}

/// Runs the whole ensemble in memory.
pub fn execute(config: &ExperimentConfig) -> Result<RunData> {
    config.validate()?;
    let basis = FockBasis::new(config.model.n, config.model.m)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (grid, sat) = grids(config)?;
    let runs: Vec<Result<RealizationRun>> = (0..config.ensemble.realizations)
        .into_par_iter()
        .map(|r| realize(config, &basis, r, &grid, &sat))
        .collect();
    let runs: Vec<RealizationRun> = runs.into_iter().collect::<Result<_>>()?;

    let states: Vec<&StateRun> = runs.iter().flat_map(|r| &r.states).collect();
    let sums = |f: &dyn Fn(&StateSummary) -> f64| mean(states.iter().map(|s| f(&s.summary)));
    let delta_e_sq_mean = sums(&|s| s.delta_e_sq);
    let gamma0_mean = sums(&|s| s.gamma0);
    let coupled = delta_e_sq_mean > 0.0
        && states
            .iter()
            .all(|s| s.summary.gamma0_over_delta_e.is_some());
    let ratio = coupled.then(|| gamma0_mean / delta_e_sq_mean.sqrt());
    let threshold = config.analysis.regime_threshold;
    let regime = Regime::classify(ratio, threshold);

    let short: Vec<f64> = states
        .iter()
        .filter_map(|s| s.summary.short_time_ratio)
        .collect();
    let short_time_ratio_range = (!short.is_empty()).then(|| {
        short
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            })
    });
    let shells: Vec<ShellStats> = states.iter().filter_map(|s| s.summary.shell).collect();
    let all_shells = shells.len() == states.len();
    let w_inf_mean = all_shells.then(|| mean(shells.iter().map(|s| s.w_inf)));
    let saturation_ratio_mean = all_shells.then(|| mean(shells.iter().map(|s| s.ratio)));
    let level_spacing_mean = mean(runs.iter().map(|r| r.summary.dos.level_spacing));

    let w_mean = column_mean(states.iter().map(|s| &s.w), grid.len());
    let w_saturation_mean = column_mean(states.iter().map(|s| &s.w_saturation), sat.len());
    let n_pc_mean = column_mean(states.iter().filter_map(|s| s.n_pc_t.as_ref()), grid.len());

    let (decay, laws) = if coupled {
        let report = decay_report(
            config,
            &grid,
            &w_mean,
            gamma0_mean,
            delta_e_sq_mean,
            w_inf_mean,
        )?;
        let delta_e = delta_e_sq_mean.sqrt();
        let laws = [
            DecayLaw::Gaussian { delta_e },
            DecayLaw::Interpolation {
                gamma: gamma0_mean,
                delta_e,
            },
            DecayLaw::AsymptoticTail {
                gamma: gamma0_mean,
                delta_e,
            },
        ];
        (Some(report), Some(laws))
    } else {
        (None, None)
    };

    let bandwidth = config.analysis.sf_bandwidth_spacings * level_spacing_mean;
    let strength = (bandwidth > 0.0 && bandwidth.is_finite()).then(|| {
        let mut hist = StrengthHistogram::new(bandwidth);
        for s in &states {
            hist.add_relative(&s.strength);
        }
        hist
    });
    let strength_report = strength.as_ref().map(|h| StrengthReport {
        bandwidth,
        states: h.states(),
        gaussian_fit: if coupled { h.gaussian_fit() } else { None },
    });

    let ensemble = EnsembleSummary {
        states: states.len(),
        delta_e_sq_theory: delta_e_squared_theory(&config.model),
        delta_e_sq_mean,
        coupling_sum_sq_mean: sums(&|s| s.coupling_sum_sq),
        gamma0_mean,
        gamma0_over_delta_e: ratio,
        regime,
        max_identity_residual: states
            .iter()
            .map(|s| s.summary.identity_residual)
            .fold(0.0, f64::max),
        short_time_ratio_range,
        level_spacing_mean,
        w_inf_mean,
        n_pc_mean: sums(&|s| s.n_pc),
        n_pc_smoothed_mean: sums(&|s| s.n_pc_smoothed),
        saturation_ratio_mean,
        decay,
        strength: strength_report,
    };
    let hamiltonians = runs
        .iter()
        .filter_map(|r| r.hamiltonian.clone().map(|h| (r.summary.index, h)))
        .collect();
    Ok(RunData {
        summary: RunSummary {
            config_sha256: config.hash(),
            config: config.recorded(),
            time_scale: time_scale(config),
            ensemble,
            realizations: runs.into_iter().map(|r| r.summary).collect(),
            files: Vec::new(),
        },
        grid,
        saturation_grid: sat,
        w_mean,
        w_saturation_mean,
        n_pc_mean,
        laws,
        strength,
        hamiltonians,
    })
}

fn law_value(laws: &Option<[DecayLaw; 3]>, k: usize, t: f64) -> f64 {
    laws.as_ref().map_or(1.0, |l| l[k].eval(t))
}

#[derive(Serialize)]
struct SeriesDoc<'a> {
    t: &'a [f64],
    w_exact: &'a [f64],
    w_gauss_law: Vec<f64>,
    w_interp: Vec<f64>,
    w_exp_tail: Vec<f64>,
    n_pc_t: &'a [f64],
    saturation_t: &'a [f64],
    saturation_w: &'a [f64],
    strength: Vec<(f64, f64)>,
}

/// Writes the run's files into `dir` and returns the summary with the
/// manifest of data files filled in.
pub fn write(data: &RunData, dir: &Path) -> Result<RunSummary> {
    let summary = &data.summary;
    let config = &summary.config;
    let hash = &summary.config_sha256;
    let format = config.output.format;
    let mut out = OutputDir::create(dir)?;
    let e = &summary.ensemble;
    let times = data.grid.values();
    let laws_line = match &data.laws {
        Some(_) => format!(
            "laws use Gamma0 = {:e}, Delta_E^2 = {:e} (ensemble means); W_exp_tail = (pi^2 Gamma^2 / 8 Delta^2) exp(Gamma^2 / 4 Delta^2 - Gamma t)",
            e.gamma0_mean, e.delta_e_sq_mean
        ),
        None => "no interaction: every law is identically 1".to_owned(),
    };

    if format.csv() {
        let mut t = Table::new(&[
            "t",
            "W_exact",
            "W_gauss_law",
            "W_interp",
            "W_exp_tail",
            "N_pc_t",
        ]);
        t.comment(format!(
            "survival probability, mean over {} initial states in {} realizations",
            e.states,
            summary.realizations.len()
        ))
        .comment(format!("config_sha256: {hash}"))
        .comment("units: t in hbar/d0; W and N_pc dimensionless")
        .comment(laws_line.clone())
        .comment(format!(
            "N_pc_t: mean participation number of the evolved state over the first {} state(s) of each realization",
            config.analysis.npc_states.min(config.initial_state.count)
        ));
        for (k, &tk) in times.iter().enumerate() {
            t.push(vec![
                tk,
                data.w_mean[k],
                law_value(&data.laws, 0, tk),
                law_value(&data.laws, 1, tk),
                law_value(&data.laws, 2, tk),
                data.n_pc_mean[k],
            ]);
        }
        out.write_table("survival.csv", &t)?;

        let mut s = Table::new(&["t", "W_exact"]);
        s.comment("survival probability on the linear saturation window, ensemble mean")
            .comment(format!("config_sha256: {hash}"))
            .comment("units: t in hbar/d0");
        for (&tk, &w) in data
            .saturation_grid
            .values()
            .iter()
            .zip(&data.w_saturation_mean)
        {
            s.push(vec![tk, w]);
        }
        out.write_table("saturation.csv", &s)?;

        if let Some(hist) = &data.strength {
            let fit = e.strength.as_ref().and_then(|r| r.gaussian_fit);
            let mut p = Table::new(&["E_minus_H_ii", "P", "P_gauss_fit"]);
            p.comment(format!(
                "strength function averaged over {} states, bin width {:e}",
                hist.states(),
                hist.width()
            ))
            .comment(format!("config_sha256: {hash}"))
            .comment("units: energies in d0; P in 1/d0");
            for (x, y) in hist.samples() {
                p.push(vec![x, y, fit.map_or(f64::NAN, |f| f.eval(x))]);
            }
            out.write_table("strength.csv", &p)?;
        }
    }
    if format.json() {
        let doc = SeriesDoc {
            t: times,
            w_exact: &data.w_mean,
            w_gauss_law: times.iter().map(|&t| law_value(&data.laws, 0, t)).collect(),
            w_interp: times.iter().map(|&t| law_value(&data.laws, 1, t)).collect(),
            w_exp_tail: times.iter().map(|&t| law_value(&data.laws, 2, t)).collect(),
            n_pc_t: &data.n_pc_mean,
            saturation_t: data.saturation_grid.values(),
            saturation_w: &data.w_saturation_mean,
            strength: data
                .strength
                .as_ref()
                .map(|h| h.samples())
                .unwrap_or_default(),
        };
        out.write_json("series.json", &doc)?;
    }
    for (r, text) in &data.hamiltonians {
        out.write(&format!("hamiltonian_r{r:03}.txt"), text)?;
    }

    let mut summary = summary.clone();
    summary.files = out.entries();
    out.write_json("summary.json", &summary)?;
    out.finish(hash)?;
    Ok(summary)
}

/// `execute` followed by `write` into the configured output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    let data = execute(config)?;
    write(&data, &config.out_dir())
}
