//! Time grids and sampled return-probability curves shared by the exact and
//! analytic routes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("time grid is empty")]
    Empty,
    #[error("time grid starts at negative time {0}")]
    Negative(f64),
    #[error("time grid is not strictly increasing at position {0}")]
    NotIncreasing(usize),
    #[error("time grid contains a non-finite value")]
    NonFinite,
    #[error("invalid grid parameters: {0}")]
    Parameters(String),
}

/// Ascending, non-negative sample times (ħ = 1, units of 1/energy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self, GridError> {
        if t.is_empty() {
            return Err(GridError::Empty);
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(GridError::NonFinite);
        }
        if t[0] < 0.0 {
            return Err(GridError::Negative(t[0]));
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(GridError::NotIncreasing(i + 1));
        }
        Ok(Self { t })
    }

    /// `points` samples from `start` to `stop`, both included.
    pub fn linear(start: f64, stop: f64, points: usize) -> Result<Self, GridError> {
        if points < 2 || !(stop > start) {
            return Err(GridError::Parameters(format!(
                "linear grid needs stop > start and >= 2 points (got {start}..{stop}, {points})"
            )));
        }
        let step = (stop - start) / (points - 1) as f64;
        Self::new((0..points).map(|k| start + k as f64 * step).collect())
    }

    /// Logarithmically spaced samples from `start > 0` to `stop`.
    pub fn logarithmic(start: f64, stop: f64, points: usize) -> Result<Self, GridError> {
        if points < 2 || !(start > 0.0) || !(stop > start) {
            return Err(GridError::Parameters(format!(
                "log grid needs 0 < start < stop and >= 2 points (got {start}..{stop}, {points})"
            )));
        }
        let (l0, l1) = (start.ln(), stop.ln());
        let step = (l1 - l0) / (points - 1) as f64;
        Self::new((0..points).map(|k| (l0 + k as f64 * step).exp()).collect())
    }

    /// Union of several grids (sorted, exact duplicates removed), optionally
    /// prefixed by `t = 0`.
    pub fn merged(parts: &[&TimeGrid], include_zero: bool) -> Result<Self, GridError> {
        let mut t: Vec<f64> = parts.iter().flat_map(|g| g.t.iter().copied()).collect();
        if include_zero {
            t.push(0.0);
        }
        t.sort_by(f64::total_cmp);
        t.dedup();
        Self::new(t)
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Which route produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactSpectral,
    HybridFourier,
    ClosedForm,
}

/// Scales attached to a series so fits and saturation analysis can be run
/// without re-deriving them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    /// Strength-function variance `Δ_E²`.
    pub delta_e_sq: Option<f64>,
    /// Golden-rule or model width `Γ`.
    pub gamma: Option<f64>,
    /// Participation number used for the saturation comparison.
    pub n_pc: Option<f64>,
    /// Number of interaction classes `n_c`.
    pub n_c: Option<u32>,
    /// Mean level spacing `D` at the initial energy.
    pub level_spacing: Option<f64>,
    /// Energy-shell half width `Δ = min(Γ, σ)`.
    pub shell_width: Option<f64>,
    /// Free-form model identifier.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSeries {
    pub grid: TimeGrid,
    pub w: Vec<f64>,
    pub provenance: Provenance,
    pub meta: SeriesMeta,
}

impl SurvivalSeries {
    pub fn new(grid: TimeGrid, w: Vec<f64>, provenance: Provenance, meta: SeriesMeta) -> Self {
        assert_eq!(grid.len(), w.len(), "one value per grid point");
        Self {
            grid,
            w,
            provenance,
            meta,
        }
    }

    pub fn times(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .values()
            .iter()
            .copied()
            .zip(self.w.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert_eq!(TimeGrid::new(vec![]), Err(GridError::Empty));
        assert_eq!(
            TimeGrid::new(vec![-1.0, 0.0]),
            Err(GridError::Negative(-1.0))
        );
        assert_eq!(
            TimeGrid::new(vec![0.0, 1.0, 1.0]),
            Err(GridError::NotIncreasing(2))
        );
        assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn log_and_merge() {
        let a = TimeGrid::logarithmic(1e-3, 10.0, 5).unwrap();
        assert!((a.values()[0] - 1e-3).abs() < 1e-18);
        assert!((a.values()[4] - 10.0).abs() < 1e-12);
        let b = TimeGrid::linear(11.0, 20.0, 4).unwrap();
        let m = TimeGrid::merged(&[&a, &b], true).unwrap();
        assert_eq!(m.values()[0], 0.0);
        assert_eq!(m.len(), 1 + 5 + 4);
    }
}
