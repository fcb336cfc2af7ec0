//! Exact time evolution of a basis state from the spectral sums: the return
//! probability `W_i(t)`, the populations `w_f(t)` of the other basis states,
//! the long-time plateau and the oscillations of `N_pc(t)`.

use faer::Mat;
use serde::Serialize;
use thiserror::Error;

use crate::fock_basis::{class_distance, FockBasis};
use crate::series::{Provenance, SeriesMeta, SurvivalSeries, TimeGrid};
use crate::spectral::{EigenDecomposition, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("averaging window [{start}, {stop}] is too short: need {required} (10 n_c / Δ) and at least two samples")]
    WindowTooShort {
        start: f64,
        stop: f64,
        required: f64,
    },
    #[error("series metadata lacks {0}")]
    MissingMeta(&'static str),
    #[error("ensemble series do not share one time grid")]
    GridMismatch,
    #[error("empty ensemble")]
    EmptyEnsemble,
}

/// Phase-table evaluation of `A_i(t) e^{iH_ii t} = Σ_k |C_i^(k)|² e^{−i(E^(k)−H_ii)t}`.
/// The reference energy only changes the global phase and keeps the phases
/// small for the `t → 0` expansion.
fn amplitude(weights: &[f64], energies: &[f64], reference: f64, t: f64) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for (w, e) in weights.iter().zip(energies) {
        let (s, c) = ((e - reference) * t).sin_cos();
        re += w * c;
        im -= w * s;
    }
    (re, im)
}

/// `W_i(t)` at a single (possibly negative) time.
pub fn survival_at(decomp: &EigenDecomposition, i: usize, t: f64) -> Result<f64, DynamicsError> {
    let w = decomp.weights(i)?;
    let (re, im) = amplitude(&w, &decomp.energies, decomp.diagonal[i], t);
    Ok(re * re + im * im)
}

pub fn survival_probability(
    decomp: &EigenDecomposition,
    i: usize,
    grid: &TimeGrid,
) -> Result<SurvivalSeries, DynamicsError> {
    let w = decomp.weights(i)?;
    let reference = decomp.diagonal[i];
    let values = grid
        .values()
        .iter()
        .map(|&t| {
            let (re, im) = amplitude(&w, &decomp.energies, reference, t);
            re * re + im * im
        })
        .collect();
    Ok(SurvivalSeries::new(
        grid.clone(),
        values,
        Provenance::ExactSpectral,
        SeriesMeta::default(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    /// `w_f(t) = |⟨f|Ψ(t)⟩|²`.
    pub w: Vec<f64>,
    /// `(Σ_f w_f²)⁻¹`.
    pub n_pc: f64,
}

/// Populations of all basis states at each time, one column per time.
/// `ψ_f(t) = Σ_k C_f^(k) C_i^(k) e^{−iE^(k)t}`, done as two matrix products.
fn population_matrix(
    decomp: &EigenDecomposition,
    i: usize,
    times: &[f64],
) -> Result<Mat<f64>, DynamicsError> {
    decomp.weights(i)?;
    let n = decomp.dim();
    let c = &decomp.components;
    let reference = decomp.diagonal[i];
    let nt = times.len();
    let mut re_phase = Mat::<f64>::zeros(n, nt);
    let mut im_phase = Mat::<f64>::zeros(n, nt);
    for (col, &t) in times.iter().enumerate() {
        for k in 0..n {
            let (s, co) = ((decomp.energies[k] - reference) * t).sin_cos();
            let cik = c[(i, k)];
            re_phase[(k, col)] = cik * co;
            im_phase[(k, col)] = -cik * s;
        }
    }
    let re = c * &re_phase;
    let im = c * &im_phase;
    Ok(Mat::from_fn(n, nt, |f, col| {
        re[(f, col)].powi(2) + im[(f, col)].powi(2)
    }))
}

pub fn component_populations(
    decomp: &EigenDecomposition,
    i: usize,
    t: f64,
) -> Result<Populations, DynamicsError> {
    let p = population_matrix(decomp, i, &[t])?;
    let w: Vec<f64> = (0..decomp.dim()).map(|f| p[(f, 0)]).collect();
    let n_pc = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    Ok(Populations { w, n_pc })
}

/// Instantaneous `N_pc(t)` on a grid.
pub fn participation_series(
    decomp: &EigenDecomposition,
    i: usize,
    grid: &TimeGrid,
) -> Result<Vec<f64>, DynamicsError> {
    // Chunked so the phase tables stay small for long grids.
    const CHUNK: usize = 256;
    let mut out = Vec::with_capacity(grid.len());
    for times in grid.values().chunks(CHUNK) {
        let p = population_matrix(decomp, i, times)?;
        for col in 0..times.len() {
            let s2: f64 = (0..decomp.dim()).map(|f| p[(f, col)].powi(2)).sum();
            out.push(1.0 / s2);
        }
    }
    Ok(out)
}

/// Infinite-time averages `w̄_f = Σ_k |C_f^(k)|² |C_i^(k)|²` (non-degenerate
/// spectrum).
pub fn long_time_populations(
    decomp: &EigenDecomposition,
    i: usize,
) -> Result<Vec<f64>, DynamicsError> {
    let wi = decomp.weights(i)?;
    Ok((0..decomp.dim())
        .map(|f| (0..decomp.dim()).map(|k| decomp.weight(f, k) * wi[k]).sum())
        .collect())
}

/// Pointwise mean over realizations sharing one grid.
pub fn ensemble_mean(series: &[SurvivalSeries]) -> Result<SurvivalSeries, DynamicsError> {
    let first = series.first().ok_or(DynamicsError::EmptyEnsemble)?;
    if series.iter().any(|s| s.grid != first.grid) {
        return Err(DynamicsError::GridMismatch);
    }
    let n = series.len() as f64;
    let w = (0..first.w.len())
        .map(|k| series.iter().map(|s| s.w[k]).sum::<f64>() / n)
        .collect();
    Ok(SurvivalSeries::new(
        first.grid.clone(),
        w,
        first.provenance,
        first.meta.clone(),
    ))
}

/// Largest interaction-class distance `⌈d/2⌉` from state `i` to the basis
/// states whose unperturbed energy lies within `delta` of `H_ii`; at least 1.
pub fn shell_class_count(basis: &FockBasis, diagonal: &[f64], i: usize, delta: f64) -> u32 {
    let origin = basis.state_at(i);
    let e_i = diagonal[i];
    diagonal
        .iter()
        .enumerate()
        .filter(|(_, &e)| (e - e_i).abs() <= delta)
        .map(|(f, _)| class_distance(origin, basis.state_at(f)) as u32)
        .max()
        .unwrap_or(0)
        .max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellStats {
    /// Shell half width `Δ = min(Γ₀, σ)`.
    pub delta: f64,
    /// Long-time average of `W_i`.
    pub w_inf: f64,
    pub n_pc: f64,
    pub n_c: u32,
    /// Mean level spacing `D`.
    pub level_spacing: f64,
    /// `W_∞ · N_pc / 3`.
    pub ratio: f64,
}

/// Trapezoid time average of the series over `[start, stop]`, packaged with
/// the shell scales from the series metadata.
pub fn saturation_value(
    series: &SurvivalSeries,
    window: (f64, f64),
) -> Result<ShellStats, DynamicsError> {
    let meta = &series.meta;
    let delta = meta
        .shell_width
        .ok_or(DynamicsError::MissingMeta("shell_width"))?;
    let n_pc = meta.n_pc.ok_or(DynamicsError::MissingMeta("n_pc"))?;
    let n_c = meta.n_c.unwrap_or(1).max(1);
    let level_spacing = meta.level_spacing.unwrap_or(f64::NAN);
    let (start, stop) = window;
    let required = if delta > 0.0 {
        10.0 * n_c as f64 / delta
    } else {
        0.0
    };
    let pts: Vec<(f64, f64)> = series
        .points()
        .filter(|&(t, _)| t >= start && t <= stop)
        .collect();
    let span = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => b.0 - a.0,
        _ => 0.0,
    };
    if pts.len() < 2 || span <= 0.0 || span < required {
        return Err(DynamicsError::WindowTooShort {
            start,
            stop,
            required,
        });
    }
    let area: f64 = pts
        .windows(2)
        .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
        .sum();
    let w_inf = area / span;
    Ok(ShellStats {
        delta,
        w_inf,
        n_pc,
        n_c,
        level_spacing,
        ratio: w_inf * n_pc / 3.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum OscillationStatus {
    Detected {
        /// Mean spacing of successive maxima.
        period: f64,
        /// `period · Δ / n_c`.
        ratio: f64,
        maxima: Vec<f64>,
    },
    NoOscillationsDetected {
        maxima: usize,
    },
}

/// Centred moving average over `half` samples on each side (shrinking at the
/// ends, where callers should not trust it).
fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    let n = y.len();
    let mut prefix = vec![0.0; n + 1];
    for (k, v) in y.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v;
    }
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Period of the oscillations of a sampled series (typically `N_pc(t)`), from
/// the mean spacing of its maxima after subtracting a centred moving average
/// spanning `detrend_span` in time. One maximum is taken per excursion above
/// the trend and refined by a parabola through its neighbours; peaks within
/// half a detrending span of either end are skipped.
pub fn oscillation_analysis(
    times: &[f64],
    values: &[f64],
    shell: &ShellStats,
    detrend_span: f64,
) -> OscillationStatus {
    assert_eq!(times.len(), values.len());
    let n = times.len();
    if n < 5 {
        return OscillationStatus::NoOscillationsDetected { maxima: 0 };
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let half = ((0.5 * detrend_span / dt).round() as usize).max(1);
    let trend = moving_average(values, half);
    let x: Vec<f64> = values.iter().zip(&trend).map(|(v, m)| v - m).collect();
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-9 * scale.max(f64::MIN_POSITIVE);

    let mut maxima = Vec::new();
    let mut k = 0;
    while k < n {
        if x[k] <= floor {
            k += 1;
            continue;
        }
        let begin = k;
        while k < n && x[k] > floor {
            k += 1;
        }
        // Excursions cut by the ends of the series are incomplete.
        if begin == 0 || k == n {
            continue;
        }
        let top = (begin..k)
            .max_by(|&a, &b| x[a].total_cmp(&x[b]))
            .expect("non-empty");
        // Near the ends the averaging window is lopsided and shifts the peaks.
        if top < half || top + half >= n {
            continue;
        }
        let t = if top > 0 && top + 1 < n {
            let (y0, y1, y2) = (x[top - 1], x[top], x[top + 1]);
            let curv = y0 - 2.0 * y1 + y2;
            let offset = if curv < 0.0 {
                0.5 * (y0 - y2) / curv
            } else {
                0.0
            };
            times[top] + offset.clamp(-1.0, 1.0) * (times[top + 1] - times[top - 1]) / 2.0
        } else {
            times[top]
        };
        maxima.push(t);
    }
    if maxima.len() < 3 {
        return OscillationStatus::NoOscillationsDetected {
            maxima: maxima.len(),
        };
    }
    let period = (maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64;
    OscillationStatus::Detected {
        period,
        ratio: period * shell.delta / shell.n_c.max(1) as f64,
        maxima,
    }
}
