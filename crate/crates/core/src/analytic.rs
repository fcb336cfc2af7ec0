//! Closed-form strength functions and decay laws.
//!
//! The hybrid strength function is a Lorentzian of width `Γ` cut off by a
//! Gaussian envelope of width `σ`,
//!
//! ```text
//! P(E) = B · exp(−(E−E₀)²/2σ²) / ((E−E₀)² + Γ²/4),
//! 1/B  = 2 erfc(x) (π/Γ) exp(x²),        x = Γ/(σ√8),
//! Δ_E² = B { σ√(2π) − (πΓ/2) exp(x²) erfc(x) },
//! ```
//!
//! and its Fourier transform `A(t) = ∫ P(E) e^{−iEt} dE` is evaluated by
//! adaptive quadrature. Everything here is in units with `ħ = 1`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::fit::{linear_regression, LinearFit};
use crate::quadrature::{geometric_points, integrate, refine_points, QuadResult, Tolerance};
use crate::series::{Provenance, SeriesMeta, SurvivalSeries, TimeGrid};
use crate::special::{erfc_scaled, gaussian_density, SCALED_ERFC_SWITCH};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hybrid normalization {formula} disagrees with quadrature {quadrature}")]
    NormalizationMismatch { formula: f64, quadrature: f64 },
    #[error("insufficient time range: {0}")]
    InsufficientRange(String),
    #[error(
        "tail window is empty after excluding points below {threshold:e} (10 × saturation level)"
    )]
    SaturationDominates { threshold: f64 },
    #[error("the tail C·exp(−Γt) does not cross exp(−Δ²t²) for 0 < t <= {scan_max}")]
    NoIntersection { scan_max: f64 },
}

fn require_positive(name: &str, v: f64) -> Result<(), AnalyticError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// Golden-rule spreading width `Γ = 2π · mean|V_if|² · ρ_f`.
pub fn golden_rule_gamma(mean_v_sq: f64, rho_f_at_e: f64) -> f64 {
    2.0 * PI * mean_v_sq * rho_f_at_e
}

/// Normalization constant of the hybrid strength function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridNorm {
    pub b: f64,
    /// `Γ²/8σ² > 700`: `exp(x²)` alone would overflow, so only the scaled
    /// complementary error function is usable.
    pub overflow_regime: bool,
}

pub fn hybrid_normalization(gamma: f64, sigma: f64) -> Result<HybridNorm, AnalyticError> {
    require_positive("gamma", gamma)?;
    require_positive("sigma", sigma)?;
    let x = gamma / (sigma * 8f64.sqrt());
    Ok(HybridNorm {
        b: gamma / (2.0 * PI * erfc_scaled(x)),
        overflow_regime: x * x > SCALED_ERFC_SWITCH,
    })
}

/// Variance `Δ_E²` of the hybrid strength function.
pub fn hybrid_variance(gamma: f64, sigma: f64) -> Result<f64, AnalyticError> {
    let norm = hybrid_normalization(gamma, sigma)?;
    let x = gamma / (sigma * 8f64.sqrt());
    Ok(norm.b * ((2.0 * PI).sqrt() * sigma - 0.5 * PI * gamma * erfc_scaled(x)))
}

/// `∫ exp(−u²/2σ²) u^{2k} / (u² + a²) du` over the real line, `k = 0, 1`, by
/// adaptive quadrature.
pub fn hybrid_moment_quadrature(gamma: f64, sigma: f64, power: u32) -> QuadResult {
    let a = 0.5 * gamma;
    let upper = 40.0 * sigma;
    let pts = refine_points(
        [
            geometric_points(a.min(sigma), upper),
            geometric_points(sigma, upper),
        ]
        .concat(),
        None,
    );
    let mut r = integrate(
        |u| (-0.5 * (u / sigma).powi(2)).exp() * u.powi(2 * power as i32) / (u * u + a * a),
        &pts,
        Tolerance::new(0.0, 1e-13),
        20_000,
    );
    r.value *= 2.0;
    r.error *= 2.0;
    r.abs_value *= 2.0;
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridModel {
    gamma: f64,
    sigma: f64,
    center: f64,
    norm: HybridNorm,
}

impl HybridModel {
    /// Relative tolerance of the construction-time quadrature check of `B`.
    pub const NORM_CHECK: f64 = 1e-6;

    pub fn new(gamma: f64, sigma: f64, center: f64) -> Result<Self, AnalyticError> {
        let norm = hybrid_normalization(gamma, sigma)?;
        if !center.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "center must be finite, got {center}"
            )));
        }
        let quadrature = 1.0 / hybrid_moment_quadrature(gamma, sigma, 0).value;
        if !((quadrature - norm.b).abs() <= Self::NORM_CHECK * norm.b) {
            return Err(AnalyticError::NormalizationMismatch {
                formula: norm.b,
                quadrature,
            });
        }
        Ok(Self {
            gamma,
            sigma,
            center,
            norm,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn norm(&self) -> HybridNorm {
        self.norm
    }

    pub fn variance(&self) -> f64 {
        hybrid_variance(self.gamma, self.sigma).expect("validated at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrengthFunctionModel {
    BreitWigner { gamma: f64, center: f64 },
    Gaussian { sigma: f64, center: f64 },
    Hybrid(HybridModel),
}

impl StrengthFunctionModel {
    pub fn breit_wigner(gamma: f64, center: f64) -> Result<Self, AnalyticError> {
        require_positive("gamma", gamma)?;
        Ok(Self::BreitWigner { gamma, center })
    }

    pub fn gaussian(sigma: f64, center: f64) -> Result<Self, AnalyticError> {
        require_positive("sigma", sigma)?;
        Ok(Self::Gaussian { sigma, center })
    }

    pub fn hybrid(gamma: f64, sigma: f64, center: f64) -> Result<Self, AnalyticError> {
        Ok(Self::Hybrid(HybridModel::new(gamma, sigma, center)?))
    }

    /// Density `P(E)`.
    pub fn evaluate(&self, e: f64) -> f64 {
        match *self {
            Self::BreitWigner { gamma, center } => {
                gamma / (2.0 * PI * ((center - e).powi(2) + 0.25 * gamma * gamma))
            }
            Self::Gaussian { sigma, center } => gaussian_density(e, center, sigma),
            Self::Hybrid(h) => {
                let d = e - h.center;
                h.norm.b * (-0.5 * (d / h.sigma).powi(2)).exp() / (d * d + 0.25 * h.gamma * h.gamma)
            }
        }
    }
}

/// Which evaluation of the Fourier integral produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeRoute {
    /// Real-line quadrature with panels no wider than `π/4t`.
    RealLine,
    /// Contour shifted to `Im E = −σ²t` plus the Lorentzian pole residue.
    ShiftedContour,
}

/// Route selection for [`hybrid_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RouteChoice {
    /// Real line when it resolves `A` to `10⁻⁶` relative, else shifted contour.
    #[default]
    Auto,
    Only(AmplitudeRoute),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudePoint {
    pub t: f64,
    /// `A(t) e^{iE₀t}`, real because `P` is symmetric about `E₀`.
    pub amplitude: f64,
    /// Estimated absolute error of `amplitude`.
    pub error: f64,
    pub route: AmplitudeRoute,
    /// Error above `10⁻¹⁰ + 10⁻⁶ |A|`.
    pub accuracy_loss: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridAmplitude {
    pub series: SurvivalSeries,
    pub points: Vec<AmplitudePoint>,
}

impl HybridAmplitude {
    pub fn accuracy_loss_count(&self) -> usize {
        self.points.iter().filter(|p| p.accuracy_loss).count()
    }
}

const AMPLITUDE_ABS_TOL: f64 = 1e-10;
const AMPLITUDE_REL_TOL: f64 = 1e-6;

/// `2B ∫₀^L exp(−u²/2σ²) cos(ut) / (u² + a²) du`.
///
/// The range stops at 40σ for every Γ: the envelope is below 10⁻³⁰⁰ there,
/// and extending to 40Γ for Γ ≫ σ would only add empty panels.
fn real_line_amplitude(h: &HybridModel, t: f64) -> (f64, f64) {
    let (a, s) = (0.5 * h.gamma, h.sigma);
    let upper = 40.0 * s;
    let base = [
        geometric_points(a.min(s), upper),
        geometric_points(s, upper),
    ]
    .concat();
    let width = (t > 0.0).then(|| PI / (4.0 * t));
    let pts = refine_points(base, width);
    let scale = 2.0 * h.norm.b;
    let r = integrate(
        |u| (-0.5 * (u / s).powi(2)).exp() * (u * t).cos() / (u * u + a * a),
        &pts,
        Tolerance::new(1e-16 / scale, 1e-12),
        pts.len() * 4 + 4000,
    );
    (scale * r.value, scale * r.error)
}

/// The same integral moved to `Im E = −η` with `η = σ²t` (so the integrand
/// stops oscillating), plus the residue of the pole at `−ia` once it is
/// crossed. `η` is nudged away from `a` so the pole never sits on the path.
fn shifted_contour_amplitude(h: &HybridModel, t: f64) -> (f64, f64) {
    let (a, s) = (0.5 * h.gamma, h.sigma);
    let s2 = s * s;
    let mut eta = s2 * t;
    let margin = (0.25 * a).min(2.0 * s);
    if (eta - a).abs() < margin {
        eta = if eta >= a { a + margin } else { a - margin };
    }
    let phi = eta / s2 - t;
    let log_pref = eta * eta / (2.0 * s2) - eta * t;
    let integrand = |x: f64| {
        let c = x * x - eta * eta + a * a;
        let (sn, cs) = (phi * x).sin_cos();
        let den = c * c + 4.0 * x * x * eta * eta;
        (-0.5 * x * x / s2 + log_pref).exp() * 2.0 * (c * cs - 2.0 * x * eta * sn) / den
    };
    let upper = 40.0 * s;
    let feature = ((a * a - eta * eta).abs() / (2.0 * eta.max(a)))
        .min(s)
        .max(1e-6 * s);
    let mut base = [geometric_points(feature, upper), geometric_points(s, upper)].concat();
    if eta > a {
        let x0 = (eta * eta - a * a).sqrt();
        if x0 < upper {
            base.push(x0);
        }
    }
    let width = (phi.abs() > 0.0).then(|| PI / (4.0 * phi.abs()));
    let pts = refine_points(base, width);
    let b = h.norm.b;
    let residue = if eta > a {
        (PI / a) * (a * a / (2.0 * s2) - a * t).exp()
    } else {
        0.0
    };
    let r = integrate(
        integrand,
        &pts,
        Tolerance::new(1e-16 * residue.abs().max(1e-300), 1e-12),
        pts.len() * 4 + 4000,
    );
    (b * (r.value + residue), b * r.error)
}

/// Return amplitude `A(t)` of the hybrid strength function and `W = |A|²`.
pub fn hybrid_amplitude(
    model: &HybridModel,
    grid: &TimeGrid,
    route: RouteChoice,
) -> HybridAmplitude {
    let points: Vec<AmplitudePoint> = grid
        .values()
        .iter()
        .map(|&t| {
            let (route, (amplitude, error)) = match route {
                RouteChoice::Only(AmplitudeRoute::RealLine) => {
                    (AmplitudeRoute::RealLine, real_line_amplitude(model, t))
                }
                RouteChoice::Only(AmplitudeRoute::ShiftedContour) => (
                    AmplitudeRoute::ShiftedContour,
                    shifted_contour_amplitude(model, t),
                ),
                RouteChoice::Auto => {
                    let (v, e) = real_line_amplitude(model, t);
                    if t == 0.0 || e <= AMPLITUDE_REL_TOL * v.abs() {
                        (AmplitudeRoute::RealLine, (v, e))
                    } else {
                        (
                            AmplitudeRoute::ShiftedContour,
                            shifted_contour_amplitude(model, t),
                        )
                    }
                }
            };
            AmplitudePoint {
                t,
                amplitude,
                error,
                route,
                accuracy_loss: error > AMPLITUDE_ABS_TOL + AMPLITUDE_REL_TOL * amplitude.abs(),
            }
        })
        .collect();
    let w = points.iter().map(|p| p.amplitude * p.amplitude).collect();
    let meta = SeriesMeta {
        delta_e_sq: Some(model.variance()),
        gamma: Some(model.gamma),
        label: format!("hybrid gamma={} sigma={}", model.gamma, model.sigma),
        ..SeriesMeta::default()
    };
    HybridAmplitude {
        series: SurvivalSeries::new(grid.clone(), w, Provenance::HybridFourier, meta),
        points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortTimeValue {
    /// `1 − ½(Γσ/√(2π)) t² + (1/24)(Γσ³/√(2π)) t⁴`.
    pub value: f64,
    /// `Γ ≤ 0.2σ` and `σt < 1`; outside this the truncation is not trustworthy.
    pub valid: bool,
}

/// Truncated small-`Γ` expansion of `|A(t)|` in `(σt)²`.
pub fn short_time_series(gamma: f64, sigma: f64, t: f64) -> ShortTimeValue {
    let c = gamma * sigma / (2.0 * PI).sqrt();
    let t2 = t * t;
    ShortTimeValue {
        value: 1.0 - 0.5 * c * t2 + c * sigma * sigma * t2 * t2 / 24.0,
        valid: gamma <= 0.2 * sigma && sigma * t.abs() < 1.0,
    }
}

/// Closed-form decay laws for `W(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum DecayLaw {
    /// `exp(−Δ_E² t²)`.
    Gaussian { delta_e: f64 },
    /// `C exp(−Γt)`.
    Exponential { gamma: f64, prefactor: f64 },
    /// `exp(Γ²/2Δ² − √(Γ⁴/4Δ⁴ + Γ²t²))`: Gaussian at small `t`, rate `Γ` at
    /// large `t`.
    Interpolation { gamma: f64, delta_e: f64 },
    /// `(π²Γ²/8Δ²) exp(Γ²/4Δ² − Γt)`, the strong-coupling tail.
    AsymptoticTail { gamma: f64, delta_e: f64 },
}

impl DecayLaw {
    pub fn ln_eval(&self, t: f64) -> f64 {
        match *self {
            Self::Gaussian { delta_e } => -(delta_e * t).powi(2),
            Self::Exponential { gamma, prefactor } => prefactor.ln() - gamma * t,
            Self::Interpolation { gamma, delta_e } => {
                let r = gamma * gamma / (2.0 * delta_e * delta_e);
                // r − √(r² + Γ²t²), written without cancellation
                let g2t2 = (gamma * t).powi(2);
                -g2t2 / (r + (r * r + g2t2).sqrt())
            }
            Self::AsymptoticTail { gamma, delta_e } => {
                tail_prefactor(gamma, delta_e).ln() - gamma * t
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_eval(t).exp()
    }

    /// `C` of laws that are pure exponentials.
    pub fn prefactor(&self) -> Option<f64> {
        match *self {
            Self::Exponential { prefactor, .. } => Some(prefactor),
            Self::AsymptoticTail { gamma, delta_e } => Some(tail_prefactor(gamma, delta_e)),
            _ => None,
        }
    }

    pub fn series(&self, grid: &TimeGrid, label: &str) -> SurvivalSeries {
        let w = grid.values().iter().map(|&t| self.eval(t)).collect();
        SurvivalSeries::new(
            grid.clone(),
            w,
            Provenance::ClosedForm,
            SeriesMeta {
                label: label.to_owned(),
                ..SeriesMeta::default()
            },
        )
    }
}

/// Strong-coupling tail prefactor `(π²Γ²/8Δ_E²) exp(Γ²/4Δ_E²)`.
pub fn tail_prefactor(gamma: f64, delta_e: f64) -> f64 {
    let r = (gamma / delta_e).powi(2);
    PI * PI * r / 8.0 * (0.25 * r).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    /// `Γ/Δ_E²`.
    pub estimate: f64,
    /// `Γ/(2Δ_E²)`, half the estimate.
    pub half_estimate: f64,
    /// Time where `exp(−Δ²t²)` falls below `C exp(−Γt)` for good, i.e. the
    /// larger root of `Δ²t² − Γt + ln C = 0`.
    pub intersection: Option<f64>,
}

/// Larger positive root of `Δ²t² − Γt + ln C = 0` within `(0, scan_max]`.
pub fn intersection_time(
    gamma: f64,
    delta_e: f64,
    prefactor: f64,
    scan_max: f64,
) -> Result<f64, AnalyticError> {
    require_positive("delta_e", delta_e)?;
    require_positive("prefactor", prefactor)?;
    if !(gamma >= 0.0) {
        return Err(AnalyticError::InvalidParameter(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    let d2 = delta_e * delta_e;
    let ln_c = prefactor.ln();
    let disc = gamma * gamma - 4.0 * d2 * ln_c;
    if disc < 0.0 {
        return Err(AnalyticError::NoIntersection { scan_max });
    }
    let root = (gamma + disc.sqrt()) / (2.0 * d2);
    if root > 0.0 && root <= scan_max {
        Ok(root)
    } else {
        Err(AnalyticError::NoIntersection { scan_max })
    }
}

pub fn crossover_time(
    gamma: f64,
    delta_e: f64,
    prefactor: f64,
    scan_max: f64,
) -> Result<Crossover, AnalyticError> {
    require_positive("delta_e", delta_e)?;
    let estimate = gamma / (delta_e * delta_e);
    Ok(Crossover {
        estimate,
        half_estimate: 0.5 * estimate,
        intersection: intersection_time(gamma, delta_e, prefactor, scan_max).ok(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitOptions {
    /// Overrides `Γ` used for the windows (default: `meta.gamma`).
    pub gamma_estimate: Option<f64>,
    /// Overrides `Δ_E²` used for the windows (default: `meta.delta_e_sq`).
    pub delta_sq_estimate: Option<f64>,
    /// End of the Gaussian window (default `0.5 Γ/Δ²`).
    pub early_end: Option<f64>,
    /// Start of the tail window (default `2 Γ/Δ²`).
    pub late_start: Option<f64>,
    /// End of the tail window (default: end of series).
    pub late_end: Option<f64>,
    /// Saturation level `W_∞`; points below `10 W_∞` are dropped from the
    /// tail. Exact-spectral series default to the mean over their last
    /// quarter; other series are not guarded unless this is set.
    pub saturation_level: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma_fit: f64,
    pub delta_sq_fit: f64,
    pub prefactor_fit: f64,
    pub t_c: Crossover,
    pub early_window: (f64, f64),
    pub late_window: (f64, f64),
    /// RMS residual of `ln W` in each window.
    pub early_rms: f64,
    pub late_rms: f64,
    pub early_points: usize,
    pub late_points: usize,
}

/// Fit of `ln W` against `t²` over `[0, end]`; `−slope` estimates `Δ_E²`.
pub fn fit_gaussian_window(series: &SurvivalSeries, end: f64) -> Result<LinearFit, AnalyticError> {
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .points()
        .filter(|&(t, w)| t >= 0.0 && t <= end && w > 0.0)
        .map(|(t, w)| (t * t, w.ln()))
        .unzip();
    linear_regression(&x, &y).ok_or_else(|| {
        AnalyticError::InsufficientRange(format!(
            "fewer than two samples in the early window [0, {end}]"
        ))
    })
}

/// Fits `ln W` against `t²` on the early window and against `t` on the tail
/// window.
pub fn fit_decay(series: &SurvivalSeries, options: &FitOptions) -> Result<DecayFit, AnalyticError> {
    let gamma = options
        .gamma_estimate
        .or(series.meta.gamma)
        .ok_or_else(|| {
            AnalyticError::InvalidParameter("no Γ estimate for the fit windows".into())
        })?;
    let delta_sq = options
        .delta_sq_estimate
        .or(series.meta.delta_e_sq)
        .ok_or_else(|| {
            AnalyticError::InvalidParameter("no Δ_E² estimate for the fit windows".into())
        })?;
    require_positive("gamma estimate", gamma)?;
    require_positive("delta_e_sq estimate", delta_sq)?;
    let times = series.times();
    let t_max = *times.last().expect("grids are non-empty");
    let t_min = times
        .iter()
        .copied()
        .find(|&t| t > 0.0)
        .unwrap_or(f64::INFINITY);
    if !(t_max * gamma > 5.0) {
        return Err(AnalyticError::InsufficientRange(format!(
            "series ends at t = {t_max}, need t·Γ > 5 (Γ = {gamma})"
        )));
    }
    if !(t_min < 0.3 / delta_sq.sqrt()) {
        return Err(AnalyticError::InsufficientRange(format!(
            "first nonzero time {t_min} is not below 0.3/Δ_E = {}",
            0.3 / delta_sq.sqrt()
        )));
    }
    let t_c = gamma / delta_sq;
    let early = (0.0, options.early_end.unwrap_or(0.5 * t_c));
    let late = (
        options.late_start.unwrap_or(2.0 * t_c),
        options.late_end.unwrap_or(t_max),
    );
    if !(early.1 < late.0) || !(late.0 < late.1) {
        return Err(AnalyticError::InsufficientRange(format!(
            "fit windows {early:?} and {late:?} overlap or are empty"
        )));
    }

    let saturation = options.saturation_level.or_else(|| {
        (series.provenance == Provenance::ExactSpectral).then(|| {
            let tail = &series.w[series.w.len() * 3 / 4..];
            tail.iter().sum::<f64>() / tail.len().max(1) as f64
        })
    });
    let threshold = saturation.map_or(0.0, |w| 10.0 * w);

    let tail = |floor: f64| -> (Vec<f64>, Vec<f64>) {
        series
            .points()
            .filter(|&(t, w)| t >= late.0 && t <= late.1 && w > floor && w > 0.0)
            .map(|(t, w)| (t, w.ln()))
            .unzip()
    };
    let early_fit = fit_gaussian_window(series, early.1)?;
    let (x_late, y_late) = tail(threshold);
    let late_fit = match linear_regression(&x_late, &y_late) {
        Some(f) => f,
        None if threshold > 0.0 && tail(0.0).0.len() >= 2 => {
            return Err(AnalyticError::SaturationDominates { threshold })
        }
        None => {
            return Err(AnalyticError::InsufficientRange(format!(
                "fewer than two samples in the tail window {late:?}"
            )))
        }
    };
    let gamma_fit = -late_fit.slope;
    let delta_sq_fit = -early_fit.slope;
    let prefactor_fit = late_fit.intercept.exp();
    let t_c = if delta_sq_fit > 0.0 {
        crossover_time(gamma_fit, delta_sq_fit.sqrt(), prefactor_fit, t_max)?
    } else {
        Crossover {
            estimate: f64::NAN,
            half_estimate: f64::NAN,
            intersection: None,
        }
    };
    Ok(DecayFit {
        gamma_fit,
        delta_sq_fit,
        prefactor_fit,
        t_c,
        early_window: early,
        late_window: late,
        early_rms: early_fit.rms_residual,
        late_rms: late_fit.rms_residual,
        early_points: early_fit.points,
        late_points: late_fit.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_values() {
        let bw = StrengthFunctionModel::breit_wigner(0.4, 1.0).unwrap();
        assert!((bw.evaluate(1.0) - 2.0 / (PI * 0.4)).abs() < 1e-14);
        let g = StrengthFunctionModel::gaussian(0.7, -2.0).unwrap();
        assert!((g.evaluate(-2.0) - 1.0 / (2.0 * PI * 0.49).sqrt()).abs() < 1e-14);
        assert!(StrengthFunctionModel::gaussian(0.0, 0.0).is_err());
        assert!(StrengthFunctionModel::hybrid(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn golden_rule_scaling() {
        assert_eq!(golden_rule_gamma(0.0, 3.0), 0.0);
        let g1 = golden_rule_gamma(0.01, 2.0);
        assert!((g1 - 2.0 * PI * 0.02).abs() < 1e-15);
        assert!((golden_rule_gamma(0.04, 2.0) / g1 - 4.0).abs() < 1e-14);
    }

    #[test]
    fn breit_wigner_limit_of_norm() {
        let gamma = 1e-4;
        let n = hybrid_normalization(gamma, 1.0).unwrap();
        let bw = gamma / (2.0 * PI);
        assert!((n.b / bw - 1.0).abs() < 2.0 * gamma);
        assert!(!n.overflow_regime);
        assert!(hybrid_normalization(100.0, 1.0).unwrap().overflow_regime);
    }

    #[test]
    fn variance_limits() {
        let v = hybrid_variance(0.01, 1.0).unwrap();
        assert!((v / (0.01 / (2.0 * PI).sqrt()) - 1.0).abs() < 0.01);
        let v = hybrid_variance(20.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 0.05);
    }

    #[test]
    fn amplitude_at_zero_is_one() {
        let h = HybridModel::new(1.0, 1.0, 0.3).unwrap();
        let grid = TimeGrid::new(vec![0.0]).unwrap();
        for route in [AmplitudeRoute::RealLine, AmplitudeRoute::ShiftedContour] {
            let a = hybrid_amplitude(&h, &grid, RouteChoice::Only(route));
            assert!((a.points[0].amplitude - 1.0).abs() < 1e-10, "{route:?}");
        }
    }

    #[test]
    fn routes_agree() {
        for (g, s) in [(0.05, 1.0), (1.0, 1.0), (3.0, 1.0), (5.0, 1.0)] {
            let h = HybridModel::new(g, s, 0.0).unwrap();
            let grid = TimeGrid::new(vec![0.05, 0.3, 1.0, 2.0, 3.0]).unwrap();
            let a = hybrid_amplitude(&h, &grid, RouteChoice::Only(AmplitudeRoute::RealLine));
            let b = hybrid_amplitude(&h, &grid, RouteChoice::Only(AmplitudeRoute::ShiftedContour));
            for (p, q) in a.points.iter().zip(&b.points) {
                let tol = 1e-9 + 1e-7 * p.amplitude.abs();
                assert!(
                    (p.amplitude - q.amplitude).abs() < tol,
                    "Γ={g} t={}: {} vs {}",
                    p.t,
                    p.amplitude,
                    q.amplitude
                );
            }
        }
    }

    #[test]
    fn interpolation_law() {
        let law = DecayLaw::Interpolation {
            gamma: 0.5,
            delta_e: 1.2,
        };
        assert_eq!(law.eval(0.0), 1.0);
        let t: f64 = 1e-3;
        let expected = 1.0 - 1.44 * t * t;
        assert!((law.eval(t) - expected).abs() < 1e-10);
        let t = 100.0 * 0.5 / 1.44;
        let slope = (law.ln_eval(t + 1e-3) - law.ln_eval(t - 1e-3)) / 2e-3;
        assert!((slope + 0.5).abs() < 1e-3);
    }

    #[test]
    fn tail_prefactor_with_figure_parameters() {
        let c = tail_prefactor(0.5, 1.2);
        let base = PI * PI * 0.25 / (8.0 * 1.44);
        assert!((base - 0.2142).abs() < 1e-4);
        assert!((c - base * (0.25f64 / (4.0 * 1.44)).exp()).abs() < 1e-15);
    }

    #[test]
    fn crossover_values() {
        let c = crossover_time(0.5, 1.2, tail_prefactor(0.5, 1.2), 100.0).unwrap();
        assert!((c.estimate - 0.3472).abs() < 1e-4);
        assert!((c.half_estimate - 0.1736).abs() < 1e-4);
        let t = c.intersection.unwrap();
        let residual = 1.44 * t * t - 0.5 * t + tail_prefactor(0.5, 1.2).ln();
        assert!(residual.abs() < 1e-8);
        assert!(crossover_time(1e-9, 1.2, 1.0, 100.0).unwrap().estimate < 1e-8);
        // a huge prefactor keeps the tail above the Gaussian
        assert!(matches!(
            intersection_time(0.1, 1.0, 1e10, 100.0),
            Err(AnalyticError::NoIntersection { .. })
        ));
    }

    #[test]
    fn gaussian_self_fit() {
        let grid = TimeGrid::linear(0.0, 20.0, 2001).unwrap();
        let s = DecayLaw::Gaussian { delta_e: 1.2 }.series(&grid, "g");
        let opts = FitOptions {
            gamma_estimate: Some(0.5),
            delta_sq_estimate: Some(1.44),
            ..FitOptions::default()
        };
        let fit = fit_decay(&s, &opts).unwrap();
        assert!((fit.delta_sq_fit - 1.44).abs() < 1e-6);
    }

    #[test]
    fn fit_range_errors() {
        let grid = TimeGrid::linear(0.0, 1.0, 11).unwrap();
        let s = DecayLaw::Gaussian { delta_e: 1.0 }.series(&grid, "g");
        let opts = FitOptions {
            gamma_estimate: Some(0.5),
            delta_sq_estimate: Some(1.0),
            ..FitOptions::default()
        };
        assert!(matches!(
            fit_decay(&s, &opts),
            Err(AnalyticError::InsufficientRange(_))
        ));
    }

    #[test]
    fn saturation_guard() {
        let grid = TimeGrid::linear(0.0, 40.0, 4001).unwrap();
        let law = DecayLaw::Interpolation {
            gamma: 1.0,
            delta_e: 1.0,
        };
        let w: Vec<f64> = grid.values().iter().map(|&t| law.eval(t) + 0.05).collect();
        let s = SurvivalSeries::new(grid, w, Provenance::ExactSpectral, SeriesMeta::default());
        let opts = FitOptions {
            gamma_estimate: Some(1.0),
            delta_sq_estimate: Some(1.0),
            ..FitOptions::default()
        };
        assert!(matches!(
            fit_decay(&s, &opts),
            Err(AnalyticError::SaturationDominates { .. })
        ));
    }

    #[test]
    fn short_time_validity() {
        assert_eq!(short_time_series(0.01, 1.0, 0.0).value, 1.0);
        assert!(short_time_series(0.01, 1.0, 0.5).valid);
        assert!(!short_time_series(0.5, 1.0, 0.5).valid);
        assert!(!short_time_series(0.01, 1.0, 2.0).valid);
    }
}
