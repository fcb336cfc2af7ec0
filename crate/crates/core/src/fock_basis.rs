//! Slater-determinant basis of `n` fermions on `m` orbitals.
//!
//! A basis state `a⁺_{f1} … a⁺_{fn}|0⟩` is stored as a bitmask with the
//! creation operators in ascending orbital order; that ordering fixes every
//! fermionic sign. The basis is listed in ascending mask order (colex order
//! on the occupied orbitals), which makes `index_of` a combinadic rank.

use std::fmt;

use thiserror::Error;

/// Largest orbital count representable by the 64-bit occupation mask.
pub const MAX_ORBITALS: usize = 64;

/// Default refusal threshold for the basis dimension.
pub const DEFAULT_BASIS_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FockError {
    #[error("invalid dimensions: n = {n}, m = {m} (need 0 <= n <= m <= {MAX_ORBITALS})")]
    InvalidDimensions { n: usize, m: usize },
    #[error("basis of C({m}, {n}) = {size} states exceeds the cap of {cap}")]
    BasisTooLarge {
        n: usize,
        m: usize,
        size: u128,
        cap: usize,
    },
    #[error("orbital index {index} out of range for {m} orbitals")]
    IndexOutOfRange { index: usize, m: usize },
}

/// Occupied orbitals of one basis determinant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitalSet(u64);

impl OrbitalSet {
    pub const fn from_mask(mask: u64) -> Self {
        Self(mask)
    }

    /// Builds a set from orbital indices; duplicates collapse.
    pub fn from_orbitals(orbitals: &[usize]) -> Self {
        Self(orbitals.iter().fold(0u64, |m, &o| m | (1u64 << o)))
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, orbital: usize) -> bool {
        orbital < 64 && (self.0 >> orbital) & 1 == 1
    }

    /// Occupied orbitals in ascending (canonical creation) order.
    pub fn orbitals(self) -> impl Iterator<Item = usize> {
        let mut mask = self.0;
        std::iter::from_fn(move || {
            if mask == 0 {
                return None;
            }
            let o = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(o)
        })
    }

    /// Number of occupied orbitals strictly below `orbital`.
    const fn occupied_below(self, orbital: usize) -> u32 {
        (self.0 & ((1u64 << orbital) - 1)).count_ones()
    }
}

impl fmt::Debug for OrbitalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.orbitals()).finish()
    }
}

/// Number of orbitals occupied in `a` but not in `b`.
///
/// Two-body matrix elements vanish when this exceeds 2.
pub fn orbital_distance(a: OrbitalSet, b: OrbitalSet) -> usize {
    (a.0 & !b.0).count_ones() as usize
}

/// Class index of the pair: the number of two-body steps separating them.
pub fn class_distance(a: OrbitalSet, b: OrbitalSet) -> usize {
    orbital_distance(a, b).div_ceil(2)
}

/// `a_o` on a mask: `None` if `o` is empty, otherwise the new mask and the
/// sign `(−1)^(occupied orbitals below o)`.
#[inline]
fn annihilate(state: OrbitalSet, o: usize) -> Option<(OrbitalSet, bool)> {
    if !state.contains(o) {
        return None;
    }
    let odd = state.occupied_below(o) % 2 == 1;
    Some((OrbitalSet(state.0 & !(1u64 << o)), odd))
}

#[inline]
fn create(state: OrbitalSet, o: usize) -> Option<(OrbitalSet, bool)> {
    if state.contains(o) {
        return None;
    }
    let odd = state.occupied_below(o) % 2 == 1;
    Some((OrbitalSet(state.0 | (1u64 << o)), odd))
}

/// `a⁺_p a⁺_q a_s a_r |state⟩` without range checks. Returns the resulting
/// determinant and its sign (`+1.0` or `−1.0`), or `None` when the result
/// vanishes.
#[inline]
pub(crate) fn pair_excitation(
    state: OrbitalSet,
    p: usize,
    q: usize,
    r: usize,
    s: usize,
) -> Option<(OrbitalSet, f64)> {
    let (st, o1) = annihilate(state, r)?;
    let (st, o2) = annihilate(st, s)?;
    let (st, o3) = create(st, q)?;
    let (st, o4) = create(st, p)?;
    let odd = o1 ^ o2 ^ o3 ^ o4;
    Some((st, if odd { -1.0 } else { 1.0 }))
}

/// Ordered list of all `C(m, n)` determinants with an O(n) reverse index.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n: usize,
    m: usize,
    states: Vec<OrbitalSet>,
    binomial: Vec<Vec<u64>>,
}

/// `C(m, n)` in 128-bit arithmetic.
pub fn binomial(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    let k = n.min(m - n);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl FockBasis {
    /// Enumerates the basis with the default size cap.
    pub fn new(n: usize, m: usize) -> Result<Self, FockError> {
        Self::with_cap(n, m, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(n: usize, m: usize, cap: usize) -> Result<Self, FockError> {
        if n > m || m > MAX_ORBITALS {
            return Err(FockError::InvalidDimensions { n, m });
        }
        let size = binomial(m, n);
        if size > cap as u128 {
            return Err(FockError::BasisTooLarge { n, m, size, cap });
        }
        let size = size as usize;
        let mut states = Vec::with_capacity(size);
        if n == 0 {
            states.push(OrbitalSet(0));
        } else {
            // Gosper's hack walks n-bit masks in increasing numeric order.
            let mut v: u64 = (1u64 << n) - 1;
            let limit: u128 = 1u128 << m;
            while (v as u128) < limit {
                states.push(OrbitalSet(v));
                let c = v & v.wrapping_neg();
                let r = v.wrapping_add(c);
                if r == 0 {
                    break;
                }
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len(), size);
        let binomial = (0..=m)
            .map(|a| (0..=n).map(|b| binomial(a, b) as u64).collect())
            .collect();
        Ok(Self {
            n,
            m,
            states,
            binomial,
        })
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn orbitals(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OrbitalSet] {
        &self.states
    }

    pub fn state_at(&self, index: usize) -> OrbitalSet {
        self.states[index]
    }

    /// Position of `state` in the basis, `None` if it does not belong to it.
    pub fn index_of(&self, state: OrbitalSet) -> Option<usize> {
        if state.len() != self.n || (self.m < 64 && state.0 >> self.m != 0) {
            return None;
        }
        let rank = state
            .orbitals()
            .enumerate()
            .map(|(j, c)| self.binomial[c][j + 1])
            .sum::<u64>();
        Some(rank as usize)
    }

    /// `a⁺_p a⁺_q a_s a_r |state⟩`. `None` when `r` or `s` is empty or when
    /// `p` or `q` is already occupied after the annihilations (this includes
    /// `p == q` and `r == s`).
    pub fn apply_pair_operator(
        &self,
        state: OrbitalSet,
        p: usize,
        q: usize,
        r: usize,
        s: usize,
    ) -> Result<Option<(OrbitalSet, i8)>, FockError> {
        for index in [p, q, r, s] {
            if index >= self.m {
                return Err(FockError::IndexOutOfRange { index, m: self.m });
            }
        }
        Ok(pair_excitation(state, p, q, r, s).map(|(st, sign)| (st, sign as i8)))
    }
}
