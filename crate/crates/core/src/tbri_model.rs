//! The two-body random interaction Hamiltonian `H = H₀ + V`.
//!
//! `H₀` is diagonal in the determinant basis with single-particle energies
//! `ε_s`; the interaction is
//!
//! ```text
//! V = Σ_{p<q, r<s} v_{pq,rs} a⁺_p a⁺_q a_s a_r,   v_{pq,rs} = v_{rs,pq} ~ N(0, V₀²)
//! ```
//!
//! summed over all ordered pairs-of-pairs, so `V` is Hermitian as written and
//! the diagonal terms `v_{pq,pq}` contribute to `H_ii`. With this convention
//! the mean of `Σ_{f≠i} H_if²` is exactly `¼ V₀² n(n−1)(m−n)(m−n+3)`: the
//! `C(n,2)·C(m−n,2)` two-particle moves carry one amplitude each and the
//! `n(m−n)` one-particle moves carry a sum over `n−1` spectators.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock_basis::{pair_excitation, FockBasis};
use crate::seed::derive_seed;

const SPECTRUM_STREAM: u64 = 0x5350_4543;
const AMPLITUDE_STREAM: u64 = 0x414d_504c;

/// Denominator floor for the second-order shift, in units of `d0`.
pub const SHIFT_DENOMINATOR_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error(
        "second-order shift unavailable: |H_ii - H_ff| = {gap:e} below floor {floor:e} for f = {f}"
    )]
    DegenerateDenominator { f: usize, gap: f64, floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    /// `ε_s = s·d0`.
    #[default]
    EquallySpaced,
    /// `ε_s = s·d0 + d0·η·u_s` with `u_s` uniform on `[−1, 1]`.
    Jittered(f64),
}

fn default_d0() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    pub v0: f64,
    #[serde(default = "default_d0")]
    pub d0: f64,
    pub seed: u64,
    #[serde(default)]
    pub spectrum: SpectrumKind,
}

impl ModelConfig {
    pub fn new(n: usize, m: usize, v0: f64, seed: u64) -> Self {
        Self {
            n,
            m,
            v0,
            d0: 1.0,
            seed,
            spectrum: SpectrumKind::EquallySpaced,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return bad(format!("v0 must be finite and >= 0, got {}", self.v0));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return bad(format!("d0 must be finite and > 0, got {}", self.d0));
        }
        if self.n == 0 || self.n > self.m {
            return bad(format!(
                "need 0 < n <= m, got n = {}, m = {}",
                self.n, self.m
            ));
        }
        if self.m > crate::fock_basis::MAX_ORBITALS {
            return bad(format!(
                "m = {} exceeds {}",
                self.m,
                crate::fock_basis::MAX_ORBITALS
            ));
        }
        if let SpectrumKind::Jittered(eta) = self.spectrum {
            if !(eta >= 0.0 && eta.is_finite()) {
                return bad(format!("jitter must be finite and >= 0, got {eta}"));
            }
        }
        Ok(())
    }

    /// Same model with the seed of ensemble member `index`.
    pub fn realization(&self, index: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, index),
            ..self.clone()
        }
    }
}

/// Orbital energies, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleSpectrum {
    pub eps: Vec<f64>,
}

/// Number of unordered orbital pairs `p < q`.
pub fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Index of the pair `(p, q)`, `p < q`, in lexicographic order.
pub fn pair_index(m: usize, p: usize, q: usize) -> usize {
    debug_assert!(p < q && q < m);
    p * (2 * m - p - 1) / 2 + (q - p - 1)
}

/// Symmetric table of real amplitudes `v_{pq,rs}` indexed by pair indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyAmplitudes {
    m: usize,
    pairs: usize,
    values: Vec<f64>,
    pub v0: f64,
    pub seed: u64,
}

impl TwoBodyAmplitudes {
    pub fn orbitals(&self) -> usize {
        self.m
    }

    /// `v_{pq,rs}` for `p < q`, `r < s`.
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.by_pair(pair_index(self.m, p, q), pair_index(self.m, r, s))
    }

    #[inline]
    pub fn by_pair(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.pairs + b]
    }

    /// Independent amplitudes (`a ≤ b` in pair order) in draw order.
    pub fn independent(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.pairs).flat_map(move |a| (a..self.pairs).map(move |b| self.by_pair(a, b)))
    }
}

/// Draws the single-particle spectrum and the amplitudes; a pure function of
/// the configuration (the seed feeds two independent ChaCha8 streams).
pub fn sample_model(
    config: &ModelConfig,
) -> Result<(SingleParticleSpectrum, TwoBodyAmplitudes), ModelError> {
    config.validate()?;
    let m = config.m;
    let mut eps: Vec<f64> = (0..m).map(|s| s as f64 * config.d0).collect();
    if let SpectrumKind::Jittered(eta) = config.spectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SPECTRUM_STREAM));
        for e in &mut eps {
            *e += config.d0 * eta * rng.random_range(-1.0..=1.0);
        }
        eps.sort_by(f64::total_cmp);
    }

    let pairs = pair_count(m);
    let mut values = vec![0.0; pairs * pairs];
    if config.v0 > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, AMPLITUDE_STREAM));
        for a in 0..pairs {
            for b in a..pairs {
                let z: f64 = rng.sample(StandardNormal);
                let v = config.v0 * z;
                values[a * pairs + b] = v;
                values[b * pairs + a] = v;
            }
        }
    }
    Ok((
        SingleParticleSpectrum { eps },
        TwoBodyAmplitudes {
            m,
            pairs,
            values,
            v0: config.v0,
            seed: config.seed,
        },
    ))
}

/// Dense real symmetric matrix stored once as its packed upper triangle, so
/// `get(i, j)` and `get(j, i)` read the same word.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    packed: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub v0: f64,
    pub seed: u64,
}

impl HamiltonianMatrix {
    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.dim - r * r.saturating_sub(1) / 2 + (c - r)
    }

    /// Symmetric matrix from its upper triangle, `f(i, j)` for `i ≤ j`.
    /// Model metadata is zeroed.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                packed.push(f(i, j));
            }
        }
        Self {
            dim,
            packed,
            n: 0,
            m: 0,
            v0: 0.0,
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[self.offset(i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(i, j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `(H²)_ii − H_ii²`, evaluated from row `i`.
    pub fn row_variance(&self, i: usize) -> f64 {
        (0..self.dim)
            .filter(|&j| j != i)
            .map(|j| self.get(i, j).powi(2))
            .sum()
    }

    /// Plain-text dump: `#` header lines with `n m v0 seed dim`, then one
    /// row per line, whitespace-separated, row-major, shortest round-trip
    /// decimal representation.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# tbri hamiltonian, dense row-major")?;
        writeln!(out, "# n = {}", self.n)?;
        writeln!(out, "# m = {}", self.m)?;
        writeln!(out, "# v0 = {}", self.v0)?;
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# dim = {}", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{}", self.get(i, j)))
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Assembles `H = H₀ + V` in the given basis.
pub fn build_hamiltonian(
    basis: &FockBasis,
    spectrum: &SingleParticleSpectrum,
    amplitudes: &TwoBodyAmplitudes,
) -> Result<HamiltonianMatrix, ModelError> {
    let m = basis.orbitals();
    if spectrum.eps.len() != m || amplitudes.orbitals() != m {
        return Err(ModelError::DimensionMismatch(format!(
            "basis has {m} orbitals, spectrum {}, amplitudes {}",
            spectrum.eps.len(),
            amplitudes.orbitals()
        )));
    }
    let dim = basis.len();
    let mut h = HamiltonianMatrix {
        dim,
        packed: vec![0.0; dim * (dim + 1) / 2],
        n: basis.particles(),
        m,
        v0: amplitudes.v0,
        seed: amplitudes.seed,
    };
    let all_pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|p| (p + 1..m).map(move |q| (p, q)))
        .collect();
    let mut occupied = Vec::with_capacity(m);
    for (i, &state) in basis.states().iter().enumerate() {
        occupied.clear();
        occupied.extend(state.orbitals());
        let h0: f64 = occupied.iter().map(|&o| spectrum.eps[o]).sum();
        let k = h.offset(i, i);
        h.packed[k] += h0;
        for (x, &r) in occupied.iter().enumerate() {
            for &s in &occupied[x + 1..] {
                let rs = pair_index(m, r, s);
                for (pq, &(p, q)) in all_pairs.iter().enumerate() {
                    let Some((f, sign)) = pair_excitation(state, p, q, r, s) else {
                        continue;
                    };
                    let j = basis.index_of(f).expect("pair operator stays in the basis");
                    // Column i holds every contribution to <f|V|i>; keep the
                    // upper-triangle entries only.
                    if j <= i {
                        let k = h.offset(j, i);
                        h.packed[k] += sign * amplitudes.by_pair(pq, rs);
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Mean `Σ_{f≠i} H_if²` over the ensemble: `¼ V₀² n(n−1)(m−n)(m−n+3)`.
pub fn delta_e_squared_theory(config: &ModelConfig) -> f64 {
    let n = config.n as f64;
    let m = config.m as f64;
    0.25 * config.v0 * config.v0 * n * (n - 1.0) * (m - n) * (m - n + 3.0)
}

/// Histogram of the basis states directly coupled to state `i`, binned by
/// unperturbed energy `H_ff` on bins of width `bin_width` centred at `H_ii`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingStats {
    pub index: usize,
    pub energy: f64,
    /// `Σ_{f≠i} H_if²`.
    pub sum_sq: f64,
    pub coupled: usize,
    /// Mean of `H_if²` over coupled states.
    pub mean_v_sq: f64,
    pub bin_width: f64,
    /// Bin centres.
    pub bin_energies: Vec<f64>,
    /// Coupled-state density `ρ_f(E)` per bin.
    pub rho_f: Vec<f64>,
    /// `2π · mean(H_if² | f in bin) · ρ_f(E)` per bin.
    pub gamma_of_e: Vec<f64>,
    /// `Γ₀ = 2π ρ_f(H_ii) · mean_v_sq`.
    pub gamma0: f64,
    /// Second-order shift `Σ_{f≠i} H_if² / (H_ii − H_ff)`.
    pub delta_i: Result<f64, ModelError>,
}

pub fn direct_coupling_stats(
    h: &HamiltonianMatrix,
    i: usize,
    bin_width: f64,
    denominator_floor: f64,
) -> Result<CouplingStats, ModelError> {
    let dim = h.dim();
    if i >= dim {
        return Err(ModelError::IndexOutOfRange { index: i, dim });
    }
    if !(bin_width > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    let e_i = h.get(i, i);
    let mut sum_sq = 0.0;
    let mut coupled = 0usize;
    let mut bins: std::collections::BTreeMap<i64, (usize, f64)> = Default::default();
    let mut shift = Ok(0.0);
    for f in 0..dim {
        let v = h.get(i, f);
        if f == i || v == 0.0 {
            continue;
        }
        let e_f = h.get(f, f);
        let v2 = v * v;
        sum_sq += v2;
        coupled += 1;
        let k = ((e_f - e_i) / bin_width).round() as i64;
        let slot = bins.entry(k).or_insert((0, 0.0));
        slot.0 += 1;
        slot.1 += v2;
        let gap = e_i - e_f;
        if let Ok(acc) = shift.as_mut() {
            if gap.abs() < denominator_floor {
                shift = Err(ModelError::DegenerateDenominator {
                    f,
                    gap: gap.abs(),
                    floor: denominator_floor,
                });
            } else {
                *acc += v2 / gap;
            }
        }
    }
    let (mut bin_energies, mut rho_f, mut gamma_of_e) = (Vec::new(), Vec::new(), Vec::new());
    if let (Some((&lo, _)), Some((&hi, _))) = (bins.first_key_value(), bins.last_key_value()) {
        for k in lo..=hi {
            let (count, s) = bins.get(&k).copied().unwrap_or((0, 0.0));
            bin_energies.push(e_i + k as f64 * bin_width);
            rho_f.push(count as f64 / bin_width);
            gamma_of_e.push(2.0 * PI * s / bin_width);
        }
    }
    let mean_v_sq = if coupled > 0 {
        sum_sq / coupled as f64
    } else {
        0.0
    };
    let rho_at_e = bins.get(&0).map_or(0.0, |&(c, _)| c as f64 / bin_width);
    Ok(CouplingStats {
        index: i,
        energy: e_i,
        sum_sq,
        coupled,
        mean_v_sq,
        bin_width,
        bin_energies,
        rho_f,
        gamma_of_e,
        gamma0: 2.0 * PI * rho_at_e * mean_v_sq,
        delta_i: shift,
    })
}
