//! The Hamiltonian against a brute-force second-quantization oracle, plus
//! ensemble statistics of the couplings.

use proptest::prelude::*;
use tbri_core::fock_basis::{orbital_distance, FockBasis};
use tbri_core::tbri_model::{
    build_hamiltonian, delta_e_squared_theory, direct_coupling_stats, sample_model, ModelConfig,
    SpectrumKind,
};

/// Applies an operator string (rightmost first) to a determinant written as
/// an ordered creation string `a⁺_{o0} a⁺_{o1} … |0⟩`, anticommuting each
/// operator into place. Returns the sorted orbitals and the sign.
fn apply_ops(ops: &[(bool, usize)], state: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut list = state.to_vec();
    let mut sign = 1;
    for &(create, orb) in ops.iter().rev() {
        if create {
            if list.contains(&orb) {
                return None;
            }
            list.insert(0, orb);
            // bubble into ascending position
            let mut k = 0;
            while k + 1 < list.len() && list[k] > list[k + 1] {
                list.swap(k, k + 1);
                sign = -sign;
                k += 1;
            }
        } else {
            let pos = list.iter().position(|&o| o == orb)?;
            if pos % 2 == 1 {
                sign = -sign;
            }
            list.remove(pos);
        }
    }
    Some((list, sign))
}

fn oracle_matrix(config: &ModelConfig) -> Vec<Vec<f64>> {
    let basis = FockBasis::new(config.n, config.m).unwrap();
    let (sp, amp) = sample_model(config).unwrap();
    let m = config.m;
    let states: Vec<Vec<usize>> = basis
        .states()
        .iter()
        .map(|s| s.orbitals().collect())
        .collect();
    let dim = states.len();
    let mut h = vec![vec![0.0; dim]; dim];
    for (i, si) in states.iter().enumerate() {
        h[i][i] += si.iter().map(|&o| sp.eps[o]).sum::<f64>();
        for p in 0..m {
            for q in p + 1..m {
                for r in 0..m {
                    for s in r + 1..m {
                        let ops = [(true, p), (true, q), (false, s), (false, r)];
                        if let Some((out, sign)) = apply_ops(&ops, si) {
                            let f = states.iter().position(|x| *x == out).unwrap();
                            h[f][i] += sign as f64 * amp.get(p, q, r, s);
                        }
                    }
                }
            }
        }
    }
    h
}

#[test]
fn matches_brute_force_oracle() {
    for (n, m, seed) in [(2, 5, 1), (3, 6, 2), (3, 7, 3), (4, 7, 4)] {
        let config = ModelConfig::new(n, m, 0.8, seed);
        let basis = FockBasis::new(n, m).unwrap();
        let (sp, amp) = sample_model(&config).unwrap();
        let h = build_hamiltonian(&basis, &sp, &amp).unwrap();
        let oracle = oracle_matrix(&config);
        for (i, row) in oracle.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(
                    (h.get(i, j) - v).abs() < 1e-13,
                    "n={n} m={m} ({i},{j}): {} vs {v}",
                    h.get(i, j)
                );
            }
        }
    }
}

#[test]
fn ensemble_mean_matches_theory() {
    // Mean Σ_f H_if² over all states of 400 realizations of a small system.
    let base = ModelConfig::new(4, 8, 0.5, 2024);
    let basis = FockBasis::new(4, 8).unwrap();
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..400 {
        let config = base.realization(r);
        let (sp, amp) = sample_model(&config).unwrap();
        let h = build_hamiltonian(&basis, &sp, &amp).unwrap();
        for i in 0..h.dim() {
            total += h.row_variance(i);
            count += 1;
        }
    }
    let mean = total / count as f64;
    let theory = delta_e_squared_theory(&base);
    assert!((mean / theory - 1.0).abs() < 0.02, "{mean} vs {theory}");
}

#[test]
fn six_in_twelve_coupling_counts() {
    // n = 6, m = 12: 225 two-particle and 36 one-particle moves.
    let config = ModelConfig::new(6, 12, 0.3, 5);
    let basis = FockBasis::new(6, 12).unwrap();
    let (sp, amp) = sample_model(&config).unwrap();
    let h = build_hamiltonian(&basis, &sp, &amp).unwrap();
    assert_eq!(h.dim(), 924);
    let s = direct_coupling_stats(&h, 400, 1.0, 1e-9).unwrap();
    assert_eq!(s.coupled, 261);
    assert!((delta_e_squared_theory(&config) - 405.0 * 0.09).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structural_invariants(n in 1usize..5, extra in 0usize..4, seed in any::<u64>(), v0 in 0.0f64..2.0, jitter in prop::option::of(0.0f64..0.5)) {
        let m = n + extra + 1;
        let mut config = ModelConfig::new(n, m, v0, seed);
        if let Some(eta) = jitter {
            config.spectrum = SpectrumKind::Jittered(eta);
        }
        let basis = FockBasis::new(n, m).unwrap();
        let (sp, amp) = sample_model(&config).unwrap();
        let h = build_hamiltonian(&basis, &sp, &amp).unwrap();
        for i in 0..h.dim() {
            let si = basis.state_at(i);
            let mut diag: f64 = si.orbitals().map(|o| sp.eps[o]).sum();
            let occ: Vec<usize> = si.orbitals().collect();
            for (x, &r) in occ.iter().enumerate() {
                for &s in &occ[x + 1..] {
                    diag += amp.get(r, s, r, s);
                }
            }
            prop_assert!((h.get(i, i) - diag).abs() < 1e-12);
            for j in 0..h.dim() {
                prop_assert_eq!(h.get(i, j).to_bits(), h.get(j, i).to_bits());
                if orbital_distance(si, basis.state_at(j)) > 2 {
                    prop_assert_eq!(h.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn coupling_variance_scales_with_v0_squared(seed in any::<u64>(), k in 1.0f64..5.0) {
        let a = ModelConfig::new(3, 7, 0.1, seed);
        let b = ModelConfig { v0: 0.1 * k, ..a.clone() };
        let basis = FockBasis::new(3, 7).unwrap();
        let build = |c: &ModelConfig| {
            let (sp, amp) = sample_model(c).unwrap();
            build_hamiltonian(&basis, &sp, &amp).unwrap()
        };
        let (ha, hb) = (build(&a), build(&b));
        let ra = ha.row_variance(11);
        let rb = hb.row_variance(11);
        prop_assert!((rb / ra - k * k).abs() < 1e-9 * k * k);
    }
}
