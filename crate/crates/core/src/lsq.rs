//! Damped least squares (Levenberg–Marquardt) with a numerically
//! differenced Jacobian. Iteration cap 200, convergence on relative
//! residual change < 1e−10.

use crate::error::{EngineError, Result};

pub struct FitOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub lambda0: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iter: 200, rel_tol: 1e-10, lambda0: 1e-3 }
    }
}

pub struct FitOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub cost: f64,
    pub iterations: usize,
    /// Diagonal of the (JᵀJ)⁻¹·(cost/(m−p)) covariance estimate, when
    /// the normal matrix is invertible; parameter standard errors are
    /// the square roots.
    pub variance: Option<Vec<f64>>,
}

/// Minimize ‖r(p)‖² for a residual vector function `r`.
pub fn levenberg_marquardt<F>(
    residuals: F,
    p0: &[f64],
    opts: &FitOptions,
) -> Result<FitOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut p = p0.to_vec();
    let np = p.len();
    let mut r = residuals(&p);
    let m = r.len();
    if m < np {
        return Err(EngineError::DegenerateSamples(format!(
            "{m} residuals cannot constrain {np} parameters"
        )));
    }
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = opts.lambda0;
    let mut iterations = 0;
    let mut jac = vec![0.0; m * np];
    for _ in 0..opts.max_iter {
        iterations += 1;
        // central-difference Jacobian
        for j in 0..np {
            let h = 1e-6 * p[j].abs().max(1.0);
            let mut pp = p.clone();
            pp[j] += h;
            let rp = residuals(&pp);
            pp[j] = p[j] - h;
            let rm = residuals(&pp);
            for i in 0..m {
                jac[i * np + j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for i in 0..m {
            for a in 0..np {
                let ja = jac[i * np + a];
                jtr[a] += ja * r[i];
                for b in a..np {
                    jtj[a * np + b] += ja * jac[i * np + b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[a * np + b] = jtj[b * np + a];
            }
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for a in 0..np {
                damped[a * np + a] += lambda * (jtj[a * np + a].abs() + 1e-12);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let step = match solve(&damped, &rhs, np) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let pn: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rn = residuals(&pn);
            let cn: f64 = rn.iter().map(|v| v * v).sum();
            if cn.is_finite() && cn < cost {
                let rel = (cost - cn) / cost.max(1e-300);
                p = pn;
                r = rn;
                cost = cn;
                lambda = (lambda / 10.0).max(1e-14);
                improved = true;
                if rel < opts.rel_tol {
                    return Ok(finish(p, cost, iterations, &jtj, np, m));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // damping saturated: stationary point
            return Ok(finish(p, cost, iterations, &jtj, np, m));
        }
    }
    Err(EngineError::NonConvergence { iterations, residual: cost })
}

fn finish(p: Vec<f64>, cost: f64, iterations: usize, jtj: &[f64], np: usize, m: usize) -> FitOutcome {
    let variance = invert_diag(jtj, np).map(|d| {
        let dof = (m.saturating_sub(np)).max(1) as f64;
        d.into_iter().map(|v| v * cost / dof).collect()
    });
    FitOutcome { params: p, cost, iterations, variance }
}

/// Solve the dense n×n system `a · x = b` (row-major `a`); `None` if
/// singular to working precision.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    solve(a, b, n)
}

/// Gaussian elimination with partial pivoting.
fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[piv * n + col].abs() {
                piv = row;
            }
        }
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Diagonal of the inverse of a symmetric positive-ish matrix, via
/// column solves; `None` if singular.
fn invert_diag(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(a, &e, n)?;
        out.push(col[j]);
    }
    Some(out)
}
