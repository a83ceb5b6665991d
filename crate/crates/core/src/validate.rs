//! Desk-scale self-validation: the oracle-equivalence and invariant
//! checks behind `subplanck validate`, with per-check timings and a
//! machine-readable report.

use crate::error::Result;
use crate::evaluate::evaluate_grid;
use crate::fock;
use crate::grid::GridSpec;
use crate::hypercube::KrausSpec;
use crate::limit::LimitState;
use crate::state::PhaseSpaceState;
use crate::term::GaussianTerm;
use num_complex::Complex64 as C64;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {} {:.3}s {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.seconds,
                c.detail
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (i, c) in self.checks.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"name\":\"{}\",\"passed\":{},\"seconds\":{:.4},\"detail\":\"{}\"}}",
                c.name,
                c.passed,
                c.seconds,
                c.detail.replace('"', "'")
            ));
        }
        out.push(']');
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidateOptions {
    /// Multiplies the analytic engine's Wigner values inside the
    /// comparison checks. 1.0 for real validation; a test fixture sets
    /// it ≠ 1 as a negative control (the suite must then fail).
    pub wigner_scale: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { wigner_scale: 1.0 }
    }
}

fn run_check<F>(report: &mut Report, name: &str, f: F)
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok((p, d)) => (p, d),
        Err(e) => (false, format!("error: {e}")),
    };
    report.checks.push(CheckResult {
        name: name.into(),
        passed,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    });
}

/// Run the desk-scale suite (a few seconds).
pub fn run_suite(opts: &ValidateOptions) -> Report {
    let scale = opts.wigner_scale;
    let mut report = Report::default();

    run_check(&mut report, "vacuum-anchor", || {
        let s = PhaseSpaceState::displaced_thermal(C64::new(0.0, 0.0), 0.0);
        let spec = GridSpec::square(5.0, 101);
        let w = evaluate_grid(&s, &spec)?;
        let peak = scale * w.at(50, 50);
        let norm = scale * w.quadrature_sum();
        let ok = (peak - 1.0 / std::f64::consts::PI).abs() < 1e-12 && (norm - 1.0).abs() < 1e-4;
        Ok((ok, format!("peak {peak:.12} quad {norm:.8}")))
    });

    run_check(&mut report, "parity-chain", || {
        // analytic cross term == series oracle == literal displaced parity
        let (gl, gr) = (C64::new(0.9, 0.3), C64::new(-0.4, 0.1));
        let t = GaussianTerm::new(C64::new(1.0, 0.0), gl, gr);
        let cutoff = 40;
        let ka = fock::displacement_matrix(gl, cutoff);
        let kb = fock::displacement_matrix(gr, cutoff);
        let dim = cutoff + 1;
        let mut rho = fock::CMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                rho.a[i * dim + j] = ka.at(i, 0) * kb.at(j, 0).conj()
                    + (ka.at(j, 0) * kb.at(i, 0).conj()).conj();
            }
        }
        let fr = fock::FockDensityMatrix { cutoff, elements: rho };
        let mut worst: f64 = 0.0;
        for &(x, p) in &[(0.3, -0.7), (1.2, 0.4), (-2.0, 1.5), (0.0, 0.0)] {
            let analytic = scale * 2.0 * t.wigner_at(0.0, x, p).re;
            let parity = fock::displaced_parity_point(&fr, x, p);
            let probe = GridSpec { x_min: x, x_max: x + 1.0, p_min: p, p_max: p + 1.0, nx: 2, ny: 2 };
            let series = fock::wigner(&fr, &probe)?.at(0, 0);
            worst = worst.max((analytic - parity).abs()).max((series - parity).abs());
        }
        Ok((worst < 1e-10, format!("max dev {worst:.2e}")))
    });

    run_check(&mut report, "term-counts", || {
        let mut ok = true;
        let mut detail = String::new();
        for (n, want) in [(2usize, 16usize), (3, 64), (4, 256)] {
            let s = crate::hypercube::build_state(&KrausSpec::new(n, 1.0))?;
            ok &= s.terms.len() == want;
            detail.push_str(&format!("n{n}:{} ", s.terms.len()));
        }
        Ok((ok, detail))
    });

    run_check(&mut report, "oracle-equivalence", || {
        let mut worst: f64 = 0.0;
        for (n, mu, nbar) in [(1usize, 1.0, 0.0), (2, 1.0, 0.0), (2, 2.0, 0.5)] {
            let spec = KrausSpec::new(n, mu).with_nbar(nbar);
            let state = crate::hypercube::build_state(&spec)?;
            let cutoff = fock::suggest_cutoff(&spec);
            let rho = fock::build(&spec, cutoff)?;
            let g = GridSpec::square(6.0 + 3.0 * mu, 65);
            let mut wa = evaluate_grid(&state, &g)?;
            for v in &mut wa.values {
                *v *= scale;
            }
            let wf = fock::wigner(&rho, &g)?;
            worst = worst.max(wa.max_abs_diff(&wf)?);
        }
        Ok((worst < 1e-6, format!("max |analytic − fock| {worst:.2e}")))
    });

    run_check(&mut report, "normalization", || {
        let mut worst: f64 = 0.0;
        for (n, mu, nbar) in [(2usize, 2.0, 0.0), (3, 1.5, 1.0)] {
            let state = crate::hypercube::build_state(&KrausSpec::new(n, mu).with_nbar(nbar))?;
            let h = crate::grid::GridHeuristic::default();
            let (radius, sep) = crate::state::WignerSource::extent_hints(&state);
            let g = h.build(radius, sep, nbar);
            let w = evaluate_grid(&state, &g)?;
            let dev: f64 = w.quadrature_sum() - 1.0;
            worst = worst.max(dev.abs());
        }
        Ok((worst < 1e-4, format!("max |quad − 1| {worst:.2e}")))
    });

    run_check(&mut report, "hermiticity", || {
        let state = crate::hypercube::build_state(&KrausSpec::new(2, 2.0).with_nbar(0.5))?;
        let probes: Vec<(f64, f64)> =
            (0..40).map(|k| (0.3 * k as f64 - 6.0, 5.5 - 0.27 * k as f64)).collect();
        let res = state.hermiticity_residual(&probes);
        let g = GridSpec::square(8.0, 33);
        let w = evaluate_grid(&state, &g)?;
        let bound = 1e-10 * w.max_abs();
        Ok((res < bound.max(1e-290), format!("residual {res:.2e} bound {bound:.2e}")))
    });

    run_check(&mut report, "displacement-covariance", || {
        use crate::state::WignerSource;
        let state = crate::hypercube::build_state(&KrausSpec::new(2, 1.5))?;
        let d = C64::new(0.31, -0.17);
        let moved = state.displaced(d);
        let mut worst: f64 = 0.0;
        for &(x, p) in &[(0.0, 0.0), (1.1, 0.6), (-0.4, 2.0)] {
            let w0: f64 = state
                .terms
                .iter()
                .map(|t| t.wigner_at(0.0, x, p).re)
                .sum();
            let w1: f64 = moved
                .terms
                .iter()
                .map(|t| {
                    t.wigner_at(
                        0.0,
                        x + std::f64::consts::SQRT_2 * d.re,
                        p + std::f64::consts::SQRT_2 * d.im,
                    )
                    .re
                })
                .sum();
            worst = worst.max((w0 - w1).abs());
        }
        Ok((worst < 1e-10, format!("max pointwise dev {worst:.2e}")))
    });

    run_check(&mut report, "small-mu-limit", || {
        // the limit form against the Fock oracle at μ = 1e−3: the
        // representation error is O(μ·√(2n̄+1))
        let spec = KrausSpec::new(2, 1e-3);
        let lim = LimitState::build(&spec)?;
        let rho = fock::build(&spec, 40)?;
        let g = GridSpec::square(6.0, 81);
        let mut wl = evaluate_grid(&lim, &g)?;
        for v in &mut wl.values {
            *v *= scale;
        }
        let wf = fock::wigner(&rho, &g)?;
        let dev = wl.max_abs_diff(&wf)? / wf.max_abs();
        Ok((dev < 5e-3, format!("rel max dev {dev:.2e}")))
    });

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_clean() {
        let report = run_suite(&ValidateOptions::default());
        assert!(report.all_passed(), "{}", report.to_text());
        assert!(report.checks.iter().all(|c| c.seconds >= 0.0));
    }

    #[test]
    fn corrupted_convention_fails() {
        let report = run_suite(&ValidateOptions { wigner_scale: 2.0 });
        assert!(!report.all_passed());
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "oracle-equivalence" && !c.passed));
    }
}
