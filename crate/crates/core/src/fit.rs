//! Small least-squares fitters: straight lines, quadratics and Gaussians.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fitted line.
    pub rms_residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ intercept + slope·x`. `None` with fewer than
/// two points or no spread in `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Some(LinearFit {
        slope,
        intercept,
        rms_residual: (ss / nf).sqrt(),
        points: n,
    })
}

/// Least-squares quadratic `c[0] + c[1] x + c[2] x²`, with `x` centred at
/// `x0` for conditioning.
pub fn quadratic_fit(x: &[f64], y: &[f64], x0: f64) -> Option<[f64; 3]> {
    if x.len() < 3 {
        return None;
    }
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - x0;
        let phi = [1.0, u, u * u];
        for r in 0..3 {
            b[r] += phi[r] * yi;
            for c in 0..3 {
                a[r][c] += phi[r] * phi[c];
            }
        }
    }
    solve3(a, b)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// `amplitude · exp(−(x − center)² / 2 sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub r_squared: f64,
}

impl GaussianFit {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

/// Coefficient of determination of `model` against samples `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64], model: impl Fn(f64) -> f64) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - model(xi)).powi(2))
        .sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Levenberg-Marquardt fit of a Gaussian profile, starting from `initial`
/// (amplitude, center, sigma).
pub fn gaussian_fit(x: &[f64], y: &[f64], initial: (f64, f64, f64)) -> Option<GaussianFit> {
    if x.len() < 3 || !(initial.2 > 0.0) {
        return None;
    }
    let mut p = [initial.0, initial.1, initial.2];
    let cost = |p: &[f64; 3]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let z = (xi - p[1]) / p[2];
                (yi - p[0] * (-0.5 * z * z).exp()).powi(2)
            })
            .sum()
    };
    let mut current = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&xi, &yi) in x.iter().zip(y) {
            let z = (xi - p[1]) / p[2];
            let e = (-0.5 * z * z).exp();
            let r = yi - p[0] * e;
            let j = [e, p[0] * e * z / p[2], p[0] * e * z * z / p[2]];
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for (d, row) in damped.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(1e-300);
            }
            let Some(step) = solve3(damped, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], (p[2] + step[2]).abs()];
            let c = cost(&trial);
            if c.is_finite() && c <= current {
                let rel = (current - c) / current.max(1e-300);
                p = trial;
                current = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let mut fit = GaussianFit {
        amplitude: p[0],
        center: p[1],
        sigma: p[2],
        r_squared: 0.0,
    };
    if !(fit.sigma.is_finite() && fit.sigma > 0.0 && fit.amplitude.is_finite()) {
        return None;
    }
    fit.r_squared = r_squared(x, y, |v| fit.eval(v));
    Some(fit)
}
