//! Exact eigendecomposition and the statistical objects built from it:
//! strength function (local density of states), density of states and
//! participation numbers.
//!
//! Moments always come from the exact eigen-sums; binning is only used for the
//! sampled shapes that get plotted or fitted.

use faer::{Mat, Side};
use serde::Serialize;
use thiserror::Error;

use crate::fit::{gaussian_fit, linear_regression, r_squared, GaussianFit};
use crate::special::{gaussian_density, normal_quantile};
use crate::tbri_model::HamiltonianMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("symmetric eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Eigenvalues `E^(k)` (ascending) and eigenvectors as the columns of
/// `C_f^(k)`, each with its largest-magnitude component made positive.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub energies: Vec<f64>,
    pub components: Mat<f64>,
    /// Diagonal of the decomposed matrix, kept for centroid shifts.
    pub diagonal: Vec<f64>,
}

/// Largest deviations from the decomposition invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    /// `max |CᵀC − I|`.
    pub orthonormality: f64,
    /// `max |H − C diag(E) Cᵀ| / max |H|`.
    pub reconstruction: f64,
    /// `max_i |Σ_k C_ik² − 1|`.
    pub row_completeness: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `|C_i^(k)|²`.
    #[inline]
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        let c = self.components[(i, k)];
        c * c
    }

    /// `|C_i^(k)|²` for all `k`.
    pub fn weights(&self, i: usize) -> Result<Vec<f64>, SpectralError> {
        self.check_index(i)?;
        Ok((0..self.dim()).map(|k| self.weight(i, k)).collect())
    }

    fn check_index(&self, i: usize) -> Result<(), SpectralError> {
        if i >= self.dim() {
            return Err(SpectralError::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    pub fn check_invariants(&self, h: &HamiltonianMatrix) -> InvariantReport {
        let n = self.dim();
        let c = &self.components;
        let gram = c.transpose() * c;
        let mut orthonormality: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                orthonormality = orthonormality.max((gram[(i, j)] - target).abs());
            }
        }
        let scaled = Mat::from_fn(n, n, |i, k| c[(i, k)] * self.energies[k]);
        let rebuilt = &scaled * c.transpose();
        let mut residual: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                residual = residual.max((h.get(i, j) - rebuilt[(i, j)]).abs());
            }
        }
        let scale = h.max_abs();
        let row_completeness = (0..n)
            .map(|i| ((0..n).map(|k| self.weight(i, k)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        InvariantReport {
            orthonormality,
            reconstruction: if scale > 0.0 {
                residual / scale
            } else {
                residual
            },
            row_completeness,
        }
    }
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<EigenDecomposition, SpectralError> {
    let n = h.dim();
    for i in 0..n {
        for j in i..n {
            if !h.get(i, j).is_finite() {
                return Err(SpectralError::NonFinite(i, j));
            }
        }
    }
    if (0..n).all(|i| (i + 1..n).all(|j| h.get(i, j) == 0.0)) {
        // Already diagonal: return the exact levels rather than the solver's
        // rounding of them.
        let diagonal = h.diagonal();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| diagonal[x].total_cmp(&diagonal[y]));
        let mut components = Mat::<f64>::zeros(n, n);
        for (k, &src) in order.iter().enumerate() {
            components[(src, k)] = 1.0;
        }
        return Ok(EigenDecomposition {
            energies: order.iter().map(|&k| diagonal[k]).collect(),
            components,
            diagonal,
        });
    }
    let a = Mat::from_fn(n, n, |i, j| h.get(i, j));
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| SpectralError::ConvergenceFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[x].total_cmp(&s[y]));
    let u = evd.U();
    let mut components = Mat::<f64>::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        energies.push(s[src]);
        let col = u.col(src);
        let mut pivot = 0;
        for r in 1..n {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            components[(r, k)] = sign * col[r];
        }
    }
    Ok(EigenDecomposition {
        energies,
        components,
        diagonal: h.diagonal(),
    })
}

/// Exact moments of the strength function of one basis state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrengthMoments {
    /// `Σ_k |C_i^(k)|² E^(k)`.
    pub centroid: f64,
    /// `Δ_E² = Σ_k |C_i^(k)|² (E^(k) − centroid)²`.
    pub variance: f64,
    /// `centroid − H_ii`; vanishes identically since the centroid is `H_ii`.
    pub shift: f64,
    /// Energy of the eigenstate with the largest weight, relative to `H_ii`.
    pub peak_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthFunctionEstimate {
    pub index: usize,
    /// `(E, P_i(E))` bin centres and densities; integrates to 1.
    pub samples: Vec<(f64, f64)>,
    pub moments: StrengthMoments,
    pub bandwidth: f64,
}

impl StrengthFunctionEstimate {
    /// Least-squares Gaussian fit of the binned samples.
    pub fn gaussian_fit(&self) -> Option<GaussianFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.samples.iter().copied().unzip();
        let peak = y.iter().copied().fold(0.0, f64::max);
        gaussian_fit(
            &x,
            &y,
            (
                peak,
                self.moments.centroid,
                self.moments.variance.sqrt().max(self.bandwidth),
            ),
        )
    }
}

/// Bins of width `w` centred on `origin + k·w`.
fn bin_of(e: f64, origin: f64, w: f64) -> i64 {
    ((e - origin) / w).round() as i64
}

pub fn strength_function(
    decomp: &EigenDecomposition,
    i: usize,
    bandwidth: f64,
) -> Result<StrengthFunctionEstimate, SpectralError> {
    decomp.check_index(i)?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(SpectralError::InvalidArgument(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    let weights = decomp.weights(i)?;
    let h_ii = decomp.diagonal[i];
    let total: f64 = weights.iter().sum();
    let centroid = weights
        .iter()
        .zip(&decomp.energies)
        .map(|(w, e)| w * e)
        .sum::<f64>()
        / total;
    let variance = weights
        .iter()
        .zip(&decomp.energies)
        .map(|(w, e)| w * (e - centroid).powi(2))
        .sum::<f64>()
        / total;
    let peak = (0..weights.len())
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
        .expect("non-empty");

    let lo = bin_of(decomp.energies[0], h_ii, bandwidth);
    let hi = bin_of(*decomp.energies.last().expect("non-empty"), h_ii, bandwidth);
    let mut mass = vec![0.0; (hi - lo + 1) as usize];
    for (w, &e) in weights.iter().zip(&decomp.energies) {
        mass[(bin_of(e, h_ii, bandwidth) - lo) as usize] += w;
    }
    let samples = mass
        .iter()
        .enumerate()
        .map(|(k, m)| {
            (
                h_ii + (lo + k as i64) as f64 * bandwidth,
                m / (total * bandwidth),
            )
        })
        .collect();
    Ok(StrengthFunctionEstimate {
        index: i,
        samples,
        moments: StrengthMoments {
            centroid,
            variance: variance.max(0.0),
            shift: centroid - h_ii,
            peak_shift: decomp.energies[peak] - h_ii,
        },
        bandwidth,
    })
}

/// Strength function averaged over several states (and realizations) in the
/// relative energy `E − H_ii`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthHistogram {
    width: f64,
    mass: std::collections::BTreeMap<i64, f64>,
    states: usize,
}

impl StrengthHistogram {
    pub fn new(width: f64) -> Self {
        assert!(width > 0.0);
        Self {
            width,
            mass: Default::default(),
            states: 0,
        }
    }

    pub fn add(&mut self, decomp: &EigenDecomposition, i: usize) -> Result<(), SpectralError> {
        let weights = decomp.weights(i)?;
        let h_ii = decomp.diagonal[i];
        for (w, &e) in weights.iter().zip(&decomp.energies) {
            *self.mass.entry(bin_of(e, h_ii, self.width)).or_insert(0.0) += w;
        }
        self.states += 1;
        Ok(())
    }

    /// Adds one state given as `(E^(k) − H_ii, |C_i^(k)|²)` pairs, for when the
    /// decomposition is no longer at hand.
    pub fn add_relative(&mut self, samples: &[(f64, f64)]) {
        for &(de, w) in samples {
            *self.mass.entry(bin_of(de, 0.0, self.width)).or_insert(0.0) += w;
        }
        self.states += 1;
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// Averaged `(E − H_ii, P(E))` on contiguous bins.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let (Some((&lo, _)), Some((&hi, _))) =
            (self.mass.first_key_value(), self.mass.last_key_value())
        else {
            return Vec::new();
        };
        let norm = self.states.max(1) as f64 * self.width;
        (lo..=hi)
            .map(|k| {
                (
                    k as f64 * self.width,
                    self.mass.get(&k).copied().unwrap_or(0.0) / norm,
                )
            })
            .collect()
    }

    pub fn gaussian_fit(&self) -> Option<GaussianFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.samples().into_iter().unzip();
        let total: f64 = y.iter().sum::<f64>() * self.width;
        if total <= 0.0 {
            return None;
        }
        let mean = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() * self.width / total;
        let var = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - mean).powi(2) * b)
            .sum::<f64>()
            * self.width
            / total;
        let peak = y.iter().copied().fold(0.0, f64::max);
        gaussian_fit(&x, &y, (peak, mean, var.sqrt().max(self.width)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    /// `(E, ρ(E))` bin centres and densities; `Σ ρ·width = N`.
    pub rho: Vec<(f64, f64)>,
    pub bin_width: f64,
    /// Gaussian width of `ρ(E)` from a least-squares fit of the level
    /// quantiles over the central 80% of the spectrum.
    pub sigma: f64,
    pub e_center: f64,
    /// Mean level spacing `1/ρ(E_center)` of the fitted Gaussian.
    pub level_spacing: f64,
    pub dim: usize,
    /// Variance of the full eigenvalue list.
    pub energy_variance: f64,
    /// False when the fit failed and `sigma`/`e_center` are moment estimates.
    pub fitted: bool,
    /// Agreement of the fitted density with the central bins.
    pub r_squared: Option<f64>,
}

impl SpectralSummary {
    /// Fitted density `N/√(2πσ²) · exp(−(E−E_c)²/2σ²)`.
    pub fn density(&self, e: f64) -> f64 {
        gaussian_density(e, self.e_center, self.sigma) * self.dim as f64
    }
}

/// Density of states on `bins` bins whose centres span the spectrum, with a
/// Gaussian fitted over the central 80% of the levels.
pub fn density_of_states(
    decomp: &EigenDecomposition,
    bins: usize,
) -> Result<SpectralSummary, SpectralError> {
    density_of_energies(&decomp.energies, bins)
}

/// As [`density_of_states`] for any ascending list of levels (e.g. pooled over
/// realizations; `dim` is then the pooled count).
pub fn density_of_energies(
    energies: &[f64],
    bins: usize,
) -> Result<SpectralSummary, SpectralError> {
    let n = energies.len();
    if bins < 2 || n < 2 {
        return Err(SpectralError::InvalidArgument(format!(
            "need at least 2 bins and 2 levels (got {bins} bins, {n} levels)"
        )));
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let width = if hi > lo {
        (hi - lo) / (bins - 1) as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &e in &sorted {
        let k = (bin_of(e, lo, width).max(0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let rho: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + k as f64 * width, c as f64 / width))
        .collect();

    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let energy_variance = sorted.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / nf;
    let moment_sigma = energy_variance.sqrt();

    // Normal-quantile regression over the central 80% of the levels: the
    // sorted levels against Φ⁻¹((k+½)/N) have slope σ and intercept E_c. This
    // fits the Gaussian to the cumulative count, so it does not depend on the
    // binning, and the edges of the spectrum are left out.
    let (lo_k, hi_k) = (
        (0.1 * nf).ceil() as usize,
        ((0.9 * nf).floor() as usize).min(n - 1),
    );
    let (q, e): (Vec<f64>, Vec<f64>) = (lo_k..=hi_k)
        .map(|k| (normal_quantile((k as f64 + 0.5) / nf), sorted[k]))
        .unzip();
    let fit = linear_regression(&q, &e).filter(|f| f.slope > 0.0 && f.slope.is_finite());
    let (sigma, e_center, fitted) = match fit {
        Some(f) => (f.slope, f.intercept, true),
        None => (moment_sigma.max(f64::MIN_POSITIVE), mean, false),
    };
    let central: Vec<(f64, f64)> = rho
        .iter()
        .copied()
        .filter(|&(x, _)| x >= sorted[lo_k] && x <= sorted[hi_k])
        .collect();
    let r_squared = (central.len() >= 2).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = central.into_iter().unzip();
        r_squared(&x, &y, |v| nf * gaussian_density(v, e_center, sigma))
    });
    let mut summary = SpectralSummary {
        rho,
        bin_width: width,
        sigma,
        e_center,
        level_spacing: 0.0,
        dim: n,
        energy_variance,
        fitted,
        r_squared,
    };
    summary.level_spacing = 1.0 / summary.density(e_center);
    Ok(summary)
}

/// `N_pc = (Σ_k |C_i^(k)|⁴)⁻¹`.
pub fn participation_number(decomp: &EigenDecomposition, i: usize) -> Result<f64, SpectralError> {
    let w = decomp.weights(i)?;
    Ok(1.0 / w.iter().map(|x| x * x).sum::<f64>())
}

/// Participation number of the energy-smoothed strength function: each
/// `|C_i^(k)|²` is replaced by its Gaussian-kernel average over neighbouring
/// levels (kernel width `bandwidth`), then `N_pc = (Σ w̄)² / Σ w̄²`.
///
/// This is the `Δ/D`-type count of principal components; the raw
/// `(Σ|C|⁴)⁻¹` of a single state also sees the Porter-Thomas fluctuations of
/// the individual components, which lower it by about a factor of three.
pub fn smoothed_participation_number(
    decomp: &EigenDecomposition,
    i: usize,
    bandwidth: f64,
) -> Result<f64, SpectralError> {
    if !(bandwidth > 0.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    let w = decomp.weights(i)?;
    let e = &decomp.energies;
    let n = e.len();
    let reach = 6.0 * bandwidth;
    let mut smoothed = vec![0.0; n];
    let mut start = 0;
    for k in 0..n {
        while e[start] < e[k] - reach {
            start += 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for l in start..n {
            let d = e[l] - e[k];
            if d > reach {
                break;
            }
            let kern = (-0.5 * (d / bandwidth).powi(2)).exp();
            num += kern * w[l];
            den += kern;
        }
        smoothed[k] = num / den;
    }
    let s1: f64 = smoothed.iter().sum();
    let s2: f64 = smoothed.iter().map(|x| x * x).sum();
    Ok(s1 * s1 / s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level(v: f64, d: f64) -> HamiltonianMatrix {
        HamiltonianMatrix::from_upper_fn(2, |i, j| match (i, j) {
            (0, 0) => 0.0,
            (0, 1) => v,
            _ => d,
        })
    }

    #[test]
    fn two_by_two_closed_form() {
        let (v, d) = (0.3, 1.1);
        let dec = diagonalize(&two_level(v, d)).unwrap();
        let root = (d * d + 4.0 * v * v).sqrt();
        assert!((dec.energies[0] - (d - root) / 2.0).abs() < 1e-14);
        assert!((dec.energies[1] - (d + root) / 2.0).abs() < 1e-14);
        for k in 0..2 {
            let col = [dec.components[(0, k)], dec.components[(1, k)]];
            let big = if col[0].abs() >= col[1].abs() {
                col[0]
            } else {
                col[1]
            };
            assert!(big > 0.0);
        }
    }

    #[test]
    fn diagonal_matrix_gives_permutation() {
        let diag = [3.0, -1.0, 2.0, 0.5];
        let h = HamiltonianMatrix::from_upper_fn(4, |i, j| if i == j { diag[i] } else { 0.0 });
        let dec = diagonalize(&h).unwrap();
        assert_eq!(dec.energies, vec![-1.0, 0.5, 2.0, 3.0]);
        for k in 0..4 {
            let ones = (0..4).filter(|&r| dec.components[(r, k)] == 1.0).count();
            assert_eq!(ones, 1);
        }
        let sf = strength_function(&dec, 2, 0.1).unwrap();
        assert_eq!(sf.moments.variance, 0.0);
        assert_eq!(participation_number(&dec, 2).unwrap(), 1.0);
    }

    #[test]
    fn non_finite_rejected() {
        let h = HamiltonianMatrix::from_upper_fn(2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert!(matches!(
            diagonalize(&h),
            Err(SpectralError::NonFinite(0, 0))
        ));
    }

    #[test]
    fn strength_function_integrates_to_one() {
        let h = HamiltonianMatrix::from_upper_fn(30, |i, j| {
            if i == j {
                i as f64 * 0.1
            } else {
                ((i * 7 + j * 13) % 11) as f64 * 0.01 - 0.05
            }
        });
        let dec = diagonalize(&h).unwrap();
        for bw in [0.05, 0.2, 1.0] {
            let sf = strength_function(&dec, 12, bw).unwrap();
            let integral: f64 = sf.samples.iter().map(|(_, p)| p * bw).sum();
            assert!((integral - 1.0).abs() < 1e-10);
            assert!(sf.moments.shift.abs() < 1e-12);
            assert!((sf.moments.variance - h.row_variance(12)).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_spectrum_density() {
        let energies: Vec<f64> = (0..12).map(f64::from).collect();
        let s = density_of_energies(&energies, 12).unwrap();
        assert!(s.rho.iter().all(|&(_, r)| (r - 1.0).abs() < 1e-12));
        let total: f64 = s.rho.iter().map(|(_, r)| r * s.bin_width).sum();
        assert!((total - 12.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_from_relative_samples() {
        let h = HamiltonianMatrix::from_upper_fn(6, |i, j| if i == j { i as f64 } else { 0.1 });
        let dec = diagonalize(&h).unwrap();
        let mut direct = StrengthHistogram::new(0.25);
        direct.add(&dec, 3).unwrap();
        let pairs: Vec<(f64, f64)> = (0..6)
            .map(|k| (dec.energies[k] - 3.0, dec.weight(3, k)))
            .collect();
        let mut relative = StrengthHistogram::new(0.25);
        relative.add_relative(&pairs);
        assert_eq!(direct, relative);
    }

    #[test]
    fn gaussian_levels_recover_width() {
        // Levels placed exactly at the normal quantiles of N(2, 3²).
        let n = 500;
        let energies: Vec<f64> = (0..n)
            .map(|k| 2.0 + 3.0 * normal_quantile((k as f64 + 0.5) / n as f64))
            .collect();
        let s = density_of_energies(&energies, 40).unwrap();
        assert!(s.fitted);
        assert!((s.sigma - 3.0).abs() < 1e-10 && (s.e_center - 2.0).abs() < 1e-10);
        assert!(s.r_squared.unwrap() > 0.95);
    }

    #[test]
    fn participation_of_uniform_components() {
        // Hadamard-like orthonormal basis: |C|² = 1/N for all entries.
        let n = 4;
        let c = Mat::from_fn(n, n, |i, k| {
            let parity = (i & k).count_ones() % 2;
            if parity == 0 {
                0.5
            } else {
                -0.5
            }
        });
        let dec = EigenDecomposition {
            energies: vec![0.0, 1.0, 2.0, 3.0],
            components: c,
            diagonal: vec![1.5; 4],
        };
        assert!((participation_number(&dec, 0).unwrap() - 4.0).abs() < 1e-12);
    }
}
