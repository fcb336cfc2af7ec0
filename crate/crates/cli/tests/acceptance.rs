//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line (written past the test harness's output capture, so
//! the lines show up in a plain `cargo test` log).

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use tbri_cli::experiment::{execute, write, Regime, RunSummary};
use tbri_cli::figure::{figure1, Figure1Params};
use tbri_cli::ExperimentConfig;
use tbri_core::analytic::{
    fit_decay, hybrid_amplitude, hybrid_normalization, hybrid_variance, short_time_series,
    tail_prefactor, FitOptions, HybridModel, RouteChoice,
};
use tbri_core::quadrature::{integrate, Tolerance};
use tbri_core::TimeGrid;

fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "{} criterion {criterion:>2}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {criterion}: {detail}");
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `∫ u^{2k} e^{−u²/2σ²} / (u² + Γ²/4) du` over the real line, with
/// geometric breakpoints resolving both the Lorentzian core and the envelope.
fn moment_quadrature(gamma: f64, sigma: f64, k: i32) -> f64 {
    let a = 0.5 * gamma;
    let mut pts = vec![0.0];
    let mut x = a.min(sigma) / 100.0;
    while x < 50.0 * sigma {
        pts.push(x);
        x *= 1.5;
    }
    pts.push(50.0 * sigma);
    let r = integrate(
        |u| u.powi(2 * k) * (-0.5 * u * u / (sigma * sigma)).exp() / (u * u + a * a),
        &pts,
        Tolerance::new(0.0, 1e-14),
        50_000,
    );
    2.0 * r.value
}

#[test]
fn criterion_01_hybrid_identities() {
    let start = Instant::now();
    let mut worst_b: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for ratio in log_grid(1e-2, 1e2, 25) {
        let b = hybrid_normalization(ratio, 1.0).unwrap().b;
        let b_quad = 1.0 / moment_quadrature(ratio, 1.0, 0);
        let v = hybrid_variance(ratio, 1.0).unwrap();
        let v_quad = b_quad * moment_quadrature(ratio, 1.0, 1);
        worst_b = worst_b.max((b / b_quad - 1.0).abs());
        worst_v = worst_v.max((v / v_quad - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst_b < 1e-6 && worst_v < 1e-6 && elapsed < Duration::from_secs(10);
    report(
        1,
        pass,
        &format!(
            "25 ratios in [1e-2, 1e2]: max rel. error B {worst_b:.2e}, Delta_E^2 {worst_v:.2e} (tol 1e-6), {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_short_time_series() {
    let start = Instant::now();
    let (gamma, sigma) = (0.01, 1.0);
    let model = HybridModel::new(gamma, sigma, 0.0).unwrap();
    let times: Vec<f64> = (1..=100).map(|k| 1e-3 * k as f64).collect();
    let amp = hybrid_amplitude(&model, &TimeGrid::new(times).unwrap(), RouteChoice::Auto);
    let worst = amp
        .points
        .iter()
        .map(|p| (short_time_series(gamma, sigma, p.t).value - p.amplitude.abs()).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = worst < 1e-4 && amp.accuracy_loss_count() == 0 && elapsed < Duration::from_secs(10);
    report(
        2,
        pass,
        &format!(
            "Gamma = 0.01, sigma = 1, sigma*t <= 0.1: max |series - |A(t)|| = {worst:.2e} (tol 1e-4), {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Hybrid survival probability on a log grid up to the Gaussian window plus a linear
/// tail grid on `[start, stop]`.
fn hybrid_series(gamma: f64, start: f64, stop: f64) -> (tbri_core::SurvivalSeries, usize, f64) {
    let model = HybridModel::new(gamma, 1.0, 0.0).unwrap();
    let d2 = model.variance();
    let early =
        TimeGrid::logarithmic(1e-3 / d2.sqrt(), (0.5 * gamma / d2).min(0.5 * start), 60).unwrap();
    let late = TimeGrid::linear(start, stop, 120).unwrap();
    let grid = TimeGrid::merged(&[&early, &late], true).unwrap();
    let amp = hybrid_amplitude(&model, &grid, RouteChoice::Auto);
    let lost = amp.accuracy_loss_count();
    (amp.series, lost, d2)
}

#[test]
fn criterion_03_weak_coupling_tail() {
    let start = Instant::now();
    let gamma = 0.05;
    // tail well past t_c = 1/sigma, down to W ~ e^-10
    let (series, lost, _) = hybrid_series(gamma, 2.0 / gamma, 10.0 / gamma);
    let fit = fit_decay(
        &series,
        &FitOptions {
            late_start: Some(2.0 / gamma),
            ..FitOptions::default()
        },
    )
    .unwrap();
    let rate_err = (fit.gamma_fit / gamma - 1.0).abs();
    let c_err = (fit.prefactor_fit - 1.0).abs();
    let elapsed = start.elapsed();
    let pass = rate_err < 0.02 && c_err < 0.10 && lost == 0 && elapsed < Duration::from_secs(60);
    report(
        3,
        pass,
        &format!(
            "Gamma/sigma = 0.05: Gamma_fit/Gamma - 1 = {:+.2e} (tol 2%), C = {:.4} (tol 10% of 1), {:.2} s",
            fit.gamma_fit / gamma - 1.0,
            fit.prefactor_fit,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_04_strong_coupling_prefactor() {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut c5 = 0.0;
    for gamma in [3.0, 5.0] {
        let t0 = 3.0 * gamma;
        let (series, lost, d2) = hybrid_series(gamma, t0, t0 + 10.0 / gamma);
        let fit = fit_decay(
            &series,
            &FitOptions {
                late_start: Some(t0),
                ..FitOptions::default()
            },
        )
        .unwrap();
        let predicted = tail_prefactor(gamma, d2.sqrt());
        let ratio = fit.prefactor_fit / predicted;
        let rate_ok = (fit.gamma_fit / gamma - 1.0).abs() < 0.05;
        let c_ok = (0.5..=2.0).contains(&ratio);
        pass &= rate_ok && c_ok && lost == 0;
        // Same formula with the envelope width sigma in place of Delta_E, the
        // identification made for this limit: diagnostic only (it also misses
        // the factor of 2 at Gamma/sigma = 5).
        let sigma_ratio = fit.prefactor_fit / tail_prefactor(gamma, 1.0);
        parts.push(format!(
            "Gamma/sigma={gamma}: Gamma_fit/Gamma={:.4}, C_fit={:.4e}, law C={predicted:.4e} (Delta_E^2={d2:.4}), ratio={ratio:.3} [{}]; with sigma for Delta_E ratio={sigma_ratio:.3}",
            fit.gamma_fit / gamma,
            fit.prefactor_fit,
            if c_ok { "within 2x" } else { "outside 2x" }
        ));
        if gamma == 5.0 {
            c5 = fit.prefactor_fit;
        }
    }
    pass &= c5 > 5.0;
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(
        4,
        pass,
        &format!(
            "{}; C(5) = {c5:.1} > 5; {:.2} s",
            parts.join("; "),
            elapsed.as_secs_f64()
        ),
    );
}

struct Ensemble {
    summary: RunSummary,
    dir: PathBuf,
    elapsed: Duration,
}

const BASE: &str = r#"
[model]
n = 6
m = 12
v0 = V0
seed = 2024

[ensemble]
realizations = 20

[initial_state]
energy = "center"
count = 10
"#;

fn config(v0: f64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&BASE.replace("V0", &v0.to_string())).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tbri-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run_into(config: &ExperimentConfig, dir: &Path) -> Ensemble {
    let start = Instant::now();
    let data = execute(config).unwrap();
    let elapsed = start.elapsed();
    let summary = write(&data, dir).unwrap();
    Ensemble {
        summary,
        dir: dir.to_path_buf(),
        elapsed,
    }
}

const WEAK_V0: f64 = 0.05;
const STRONG_V0: f64 = 0.3;

fn weak() -> &'static Ensemble {
    static CELL: OnceLock<Ensemble> = OnceLock::new();
    CELL.get_or_init(|| run_into(&config(WEAK_V0), &scratch("weak")))
}

fn strong() -> &'static Ensemble {
    static CELL: OnceLock<Ensemble> = OnceLock::new();
    CELL.get_or_init(|| run_into(&config(STRONG_V0), &scratch("strong")))
}

#[test]
fn criterion_05_moment_oracle() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, e) in [("weak", weak()), ("strong", strong())] {
        let s = &e.summary.ensemble;
        let rel = s.coupling_sum_sq_mean / s.delta_e_sq_theory - 1.0;
        let ok = rel.abs() < 0.05 && s.max_identity_residual < 1e-8 && s.states == 200;
        pass &= ok && e.elapsed < Duration::from_secs(300);
        parts.push(format!(
            "{label} V0={}: mean sum H_if^2 = {:.4} vs moment formula {:.4} ({:+.2}%), identity residual {:.1e}, {:.1} s",
            e.summary.config.model.v0,
            s.coupling_sum_sq_mean,
            s.delta_e_sq_theory,
            100.0 * rel,
            s.max_identity_residual,
            e.elapsed.as_secs_f64()
        ));
    }
    report(
        5,
        pass,
        &format!("20 realizations x 10 states; {}", parts.join("; ")),
    );
}

#[test]
fn criterion_06_gaussian_decay() {
    let s = &strong().summary.ensemble;
    let ratio = s.gamma0_over_delta_e.unwrap();
    let decay = s.decay.as_ref().unwrap();
    let rel = decay.delta_sq_fit / s.delta_e_sq_mean - 1.0;
    let pass = s.regime == Regime::Gaussian && ratio >= 1.0 && rel.abs() < 0.10;
    report(
        6,
        pass,
        &format!(
            "Gamma0/Delta_E = {ratio:.3}; -ln W vs t^2 on [0, {:.4}] gives {:.4} vs measured Delta_E^2 {:.4} ({:+.2}%, tol 10%)",
            decay.early_window.1,
            decay.delta_sq_fit,
            s.delta_e_sq_mean,
            100.0 * rel
        ),
    );
}

#[test]
fn criterion_07_short_time_universality() {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut missing = 0;
    for e in [weak(), strong()] {
        for r in &e.summary.realizations {
            for st in &r.states {
                match st.short_time_ratio {
                    Some(x) => {
                        worst = worst.max((x - 1.0).abs());
                        count += 1;
                    }
                    None => missing += 1,
                }
            }
        }
    }
    let pass = missing == 0 && count == 400 && worst < 1e-3;
    report(
        7,
        pass,
        &format!("{count} states, both regimes: max |(1-W)/(t^2 Delta_E^2) - 1| at t = 0.01/Delta_E is {worst:.2e} (tol 1e-3)"),
    );
}

#[test]
fn criterion_08_saturation() {
    let s = &strong().summary.ensemble;
    let ratio = s.saturation_ratio_mean.unwrap();
    let pass = (0.5..=2.0).contains(&ratio);
    report(
        8,
        pass,
        &format!(
            "strong ensemble: W_inf = {:.4e}, smoothed N_pc = {:.1}, mean W_inf*N_pc/3 = {ratio:.3} (range [0.5, 2])",
            s.w_inf_mean.unwrap(),
            s.n_pc_smoothed_mean
        ),
    );
}

#[test]
fn criterion_09_figure1() {
    let (a, b) = (scratch("fig-a"), scratch("fig-b"));
    let start = Instant::now();
    let s = figure1(Figure1Params::default(), &a).unwrap();
    let elapsed = start.elapsed();
    figure1(Figure1Params::default(), &b).unwrap();
    let csv = std::fs::read_to_string(a.join("figure1.csv")).unwrap();
    let json = std::fs::read_to_string(a.join("figure1.json")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    let three_curves = header == "t,W_gauss,W_interp,W_tail";
    let markers = (s.t_c - 0.347).abs() < 5e-4 && (s.t_c_half - 0.17).abs() < 5e-3;
    let mentioned = csv.contains("t_c = 3.47")
        && csv.contains("t_c_half = 1.736")
        && json.contains("factor of 2");
    let identical = [
        "figure1.csv",
        "figure1_markers.csv",
        "figure1.json",
        "manifest.json",
    ]
    .iter()
    .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    let pass =
        three_curves && markers && mentioned && identical && elapsed < Duration::from_secs(1);
    report(
        9,
        pass,
        &format!(
            "Gamma = 0.5, Delta_E = 1.2: curves [{header}], t_c = {:.4}, t_c_half = {:.4}, note present: {mentioned}, deterministic: {identical}, {:.1} ms",
            s.t_c,
            s.t_c_half,
            1e3 * elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_10_determinism() {
    let first = strong();
    let second = run_into(&config(STRONG_V0), &scratch("strong-again"));
    let mut names: Vec<String> = std::fs::read_dir(&first.dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(first.dir.join(n)).ok() != std::fs::read(second.dir.join(n)).ok())
        .collect();
    let pass = differing.is_empty() && names.len() >= 5;
    report(
        10,
        pass,
        &format!(
            "two runs of the strong config, seed 2024: {} files compared ({}), differing: {differing:?}",
            names.len(),
            names.join(", ")
        ),
    );
}

#[test]
fn asymptotic_prefactor_is_pi_times_the_residue() {
    // Background for criterion 4: for Gamma >> sigma the exact pole residue
    // of the hybrid amplitude tends to (pi Gamma^2 / 8 sigma^2) e^{Gamma^2/4 sigma^2},
    // a factor pi below (pi^2 Gamma^2 / 8 Delta_E^2) e^{Gamma^2/4 Delta_E^2}
    // even with Delta_E -> sigma.
    for gamma in [20.0, 40.0] {
        let b = hybrid_normalization(gamma, 1.0).unwrap().b;
        let residue_over_exp = b * b * (2.0 * PI / gamma).powi(2);
        let law_over_exp = PI * PI * gamma * gamma / 8.0;
        let r = residue_over_exp / law_over_exp;
        assert!(
            (r * PI - 1.0).abs() < 4.0 / (gamma * gamma / 8.0),
            "Gamma={gamma}: {r}"
        );
    }
}
