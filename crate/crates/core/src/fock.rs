//! Truncated number-basis oracle.
//!
//! An independent, deliberately plain implementation used to validate
//! the analytic engine and to produce reference values. Displacement
//! matrices come from a scaling-and-squaring matrix exponential (no
//! closed forms), states from literal operator products, Wigner values
//! from the Moyal series in normalized Laguerre functions
//! `φ_n^d(y) = √(n!/(n+d)!) y^{d/2} e^{−y/2} L_n^d(y)` (each bounded by
//! 1 in magnitude — they are displaced-number-state overlaps), with a
//! scaled three-term recurrence so large grids neither under- nor
//! overflow. A literal displaced-parity evaluator is included for
//! spot-checking the series itself.
//!
//! Not performance-tuned and never used in the hot regime: thermal
//! occupations above [`MAX_NBAR`] are rejected.

use crate::error::{EngineError, Result};
use crate::grid::{GridSpec, WignerGrid};
use crate::hypercube::KrausSpec;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Hot-regime guard: the truncated basis is pointless past this.
pub const MAX_NBAR: f64 = 50.0;

const TAIL_LIMIT: f64 = 1e-8;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct CMat {
    pub dim: usize,
    pub a: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat { dim, a: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.dim + j]
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = CMat::zeros(n);
        out.a
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                for k in 0..n {
                    let aik = self.a[i * n + k];
                    if aik.re == 0.0 && aik.im == 0.0 {
                        continue;
                    }
                    let brow = &rhs.a[k * n..(k + 1) * n];
                    for (o, &b) in row.iter_mut().zip(brow) {
                        *o += aik * b;
                    }
                }
            });
        out
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        out
    }

    pub fn add_scaled(&mut self, z: C64, rhs: &CMat) {
        for (s, r) in self.a.iter_mut().zip(&rhs.a) {
            *s += z * r;
        }
    }

    pub fn scale(&mut self, z: C64) {
        for s in self.a.iter_mut() {
            *s *= z;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    fn one_norm(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).map(|i| self.a[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(&self) -> CMat {
        let norm = self.one_norm();
        let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let mut base = self.clone();
        base.scale(C64::new(1.0 / 2f64.powi(s as i32), 0.0));
        let mut sum = CMat::identity(self.dim);
        let mut term = CMat::identity(self.dim);
        for k in 1..=64 {
            term = term.mul(&base);
            term.scale(C64::new(1.0 / k as f64, 0.0));
            let tn = term.one_norm();
            sum.add_scaled(C64::new(1.0, 0.0), &term);
            if tn < 1e-20 * sum.one_norm() {
                break;
            }
        }
        let mut out = sum;
        for _ in 0..s {
            out = out.mul(&out);
        }
        out
    }
}

/// Annihilation operator b at the given cutoff (dim = cutoff + 1).
pub fn lowering(cutoff: usize) -> CMat {
    let dim = cutoff + 1;
    let mut m = CMat::zeros(dim);
    for n in 1..dim {
        m.a[(n - 1) * dim + n] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// D(β) = exp(β b† − β* b) in the truncated basis.
pub fn displacement_matrix(beta: C64, cutoff: usize) -> CMat {
    let b = lowering(cutoff);
    let mut gen = b.adjoint();
    gen.scale(beta);
    gen.add_scaled(-beta.conj(), &b);
    gen.expm()
}

/// R(θ) = diag(e^{iθ n}); matches the engine's γ → γ e^{iθ}.
pub fn rotation_matrix(theta: f64, cutoff: usize) -> CMat {
    let dim = cutoff + 1;
    let mut m = CMat::zeros(dim);
    for n in 0..dim {
        m.a[n * dim + n] = C64::from_polar(1.0, theta * n as f64);
    }
    m
}

/// Thermal state as truncated, renormalized Boltzmann weights
/// (1−q)qⁿ with q = n̄/(n̄+1).
pub fn thermal_matrix(nbar: f64, cutoff: usize) -> CMat {
    let dim = cutoff + 1;
    let mut m = CMat::zeros(dim);
    if nbar <= 0.0 {
        m.a[0] = C64::new(1.0, 0.0);
        return m;
    }
    let q = nbar / (nbar + 1.0);
    let mut w = 1.0;
    let mut total = 0.0;
    let mut diag = Vec::with_capacity(dim);
    for _ in 0..dim {
        diag.push(w);
        total += w;
        w *= q;
    }
    for (n, d) in diag.into_iter().enumerate() {
        m.a[n * dim + n] = C64::new(d / total, 0.0);
    }
    m
}

/// Truncated density matrix with convergence bookkeeping.
#[derive(Clone, Debug)]
pub struct FockDensityMatrix {
    pub cutoff: usize,
    pub elements: CMat,
}

impl FockDensityMatrix {
    /// Population in the top 5 levels (the convergence guard reads this).
    pub fn tail_population(&self) -> f64 {
        let dim = self.cutoff + 1;
        (dim.saturating_sub(5)..dim).map(|i| self.elements.at(i, i).re).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.elements.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.elements.at(i, j) - self.elements.at(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    pub fn purity(&self) -> f64 {
        self.elements.mul(&self.elements).trace().re
    }
}

/// Cutoff estimate for a Kraus recipe: displaced-thermal occupation plus
/// a generous tail margin. The convergence guard is still checked.
pub fn suggest_cutoff(spec: &KrausSpec<f64>) -> usize {
    let gmax = spec.order as f64 * spec.mu / std::f64::consts::SQRT_2
        + spec.initial_center.norm();
    let s = 2.0 * spec.nbar + 1.0;
    let n = gmax * gmax + spec.nbar + 8.0 * s.sqrt() * (gmax + 1.0) + 24.0;
    n.ceil() as usize
}

/// Apply the same operator string as `hypercube::build_state` in the
/// truncated basis and normalize.
pub fn build(spec: &KrausSpec<f64>, cutoff: usize) -> Result<FockDensityMatrix> {
    spec.validate()?;
    if spec.nbar > MAX_NBAR {
        return Err(EngineError::InvalidInput(format!(
            "fock oracle is limited to nbar <= {MAX_NBAR} (got {})",
            spec.nbar
        )));
    }
    if cutoff < 1 {
        return Err(EngineError::InvalidInput("cutoff must be >= 1".into()));
    }
    let dim = cutoff + 1;
    let beta = C64::new(0.0, spec.mu / std::f64::consts::SQRT_2);
    let d = displacement_matrix(beta, cutoff);
    let mut u = d;
    let phase = C64::from_polar(1.0, spec.phi);
    for i in 0..dim {
        u.a[i * dim + i] += phase;
    }
    let mut m = CMat::identity(dim);
    for theta in spec.angles() {
        m = rotation_matrix(theta, cutoff).mul(&u.mul(&m));
    }
    let mut rho0 = thermal_matrix(spec.nbar, cutoff);
    if spec.initial_center.norm() > 0.0 {
        let d0 = displacement_matrix(spec.initial_center, cutoff);
        rho0 = d0.mul(&rho0).mul(&d0.adjoint());
    }
    let mut out = m.mul(&rho0).mul(&m.adjoint());
    let tr = out.trace().re;
    if !(tr > 1e-300) {
        return Err(EngineError::ZeroNormState(tr));
    }
    out.scale(C64::new(1.0 / tr, 0.0));
    // clean rounding asymmetry
    let adj = out.adjoint();
    out.add_scaled(C64::new(1.0, 0.0), &adj);
    out.scale(C64::new(0.5, 0.0));
    let rho = FockDensityMatrix { cutoff, elements: out };
    let tail = rho.tail_population();
    if tail > TAIL_LIMIT {
        return Err(EngineError::CutoffTooSmall { cutoff, tail, limit: TAIL_LIMIT });
    }
    Ok(rho)
}

/// Moyal-series Wigner evaluation on a grid (dx dp measure, matching the
/// analytic engine's convention exactly).
pub fn wigner(rho: &FockDensityMatrix, spec: &GridSpec<f64>) -> Result<WignerGrid<f64>> {
    spec.validate()?;
    let dim = rho.cutoff + 1;
    let npts = spec.len();
    let mut y = vec![0.0f64; npts];
    let mut u = vec![C64::new(0.0, 0.0); npts];
    for i in 0..spec.nx {
        let x = spec.x_at(i);
        for j in 0..spec.ny {
            let p = spec.p_at(j);
            let zeta = C64::new(x, p) / std::f64::consts::SQRT_2;
            let idx = i * spec.ny + j;
            let r = 2.0 * zeta.norm();
            y[idx] = r * r;
            u[idx] = if r > 0.0 { 2.0 * zeta.conj() / r } else { C64::new(0.0, 0.0) };
        }
    }
    let mut w = vec![0.0f64; npts];
    let mut upow = vec![C64::new(1.0, 0.0); npts];
    let rho_scale = (0..dim * dim).map(|k| rho.elements.a[k].norm()).fold(0.0, f64::max);
    let mut coeffs: Vec<C64> = Vec::with_capacity(dim);
    let mut recur_a = vec![0.0f64; dim];
    let mut recur_inv = vec![0.0f64; dim];
    let mut recur_b = vec![0.0f64; dim];
    for d in 0..dim {
        if d > 0 {
            upow.par_iter_mut().zip(&u).for_each(|(pw, &uu)| *pw *= uu);
        }
        coeffs.clear();
        let mut cmax = 0.0f64;
        for n in 0..dim - d {
            let mut c = rho.elements.at(n + d, n);
            if n % 2 == 1 {
                c = -c;
            }
            cmax = cmax.max(c.norm());
            coeffs.push(c);
        }
        if cmax < 5e-17 * rho_scale {
            continue;
        }
        let m = dim - d;
        for n in 0..m {
            recur_a[n] = (2 * n + d + 1) as f64;
            let denom = ((n + 1) as f64 * (n + d + 1) as f64).sqrt();
            recur_inv[n] = 1.0 / denom;
            recur_b[n] = ((n as f64) * (n + d) as f64).sqrt() / denom;
        }
        let ln_fact_half = 0.5 * ln_factorial(d);
        let weight = if d == 0 { 1.0 } else { 2.0 };
        let coeffs_ref = &coeffs;
        let (ra, ri, rb) = (&recur_a[..m], &recur_inv[..m], &recur_b[..m]);
        w.par_iter_mut().enumerate().for_each(|(idx, wv)| {
            let yy = y[idx];
            let s = diagonal_sum(yy, d, ln_fact_half, coeffs_ref, ra, ri, rb);
            let contrib = if d == 0 { s.re } else { (s * upow[idx]).re };
            *wv += weight * contrib;
        });
    }
    let inv_pi = 1.0 / std::f64::consts::PI;
    w.iter_mut().for_each(|v| *v *= inv_pi);
    WignerGrid::new(*spec, w)
}

/// Σ_n c_n φ_n^d(y) via the scaled three-term recurrence; φ values are
/// carried as f·e^{off} so the e^{−y/2} head never underflows away the
/// later, O(1)-sized entries.
fn diagonal_sum(
    y: f64,
    d: usize,
    ln_fact_half: f64,
    coeffs: &[C64],
    ra: &[f64],
    ri: &[f64],
    rb: &[f64],
) -> C64 {
    let ln_phi0 = if y > 0.0 {
        -0.5 * y + 0.5 * (d as f64) * y.ln() - ln_fact_half
    } else if d == 0 {
        0.0
    } else {
        return C64::new(0.0, 0.0);
    };
    let mut off = ln_phi0;
    let mut scale = if off > -745.0 { off.exp() } else { 0.0 };
    let mut prev = 0.0f64; // φ_{n−1} / e^{off}
    let mut curr = 1.0f64; // φ_n / e^{off}
    let mut sum = coeffs[0] * (curr * scale);
    for n in 0..coeffs.len() - 1 {
        let next = (ra[n] - y) * ri[n] * curr - rb[n] * prev;
        prev = curr;
        curr = next;
        if curr.abs() > 1e120 {
            let k = 1e-120;
            curr *= k;
            prev *= k;
            off += 276.310_211_159_285_74; // ln(1e120)
            scale = if off > -745.0 { off.exp() } else { 0.0 };
        }
        sum += coeffs[n + 1] * (curr * scale);
    }
    sum
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Literal displaced-parity Wigner value `(1/π)·Tr[D(ζ)† ρ D(ζ) Π]`;
/// builds a matrix exponential per call, so only for spot checks.
pub fn displaced_parity_point(rho: &FockDensityMatrix, x: f64, p: f64) -> f64 {
    let zeta = C64::new(x, p) / std::f64::consts::SQRT_2;
    let dmat = displacement_matrix(zeta, rho.cutoff);
    let m = dmat.adjoint().mul(&rho.elements).mul(&dmat);
    let mut tr = 0.0;
    for n in 0..=rho.cutoff {
        let v = m.at(n, n).re;
        tr += if n % 2 == 0 { v } else { -v };
    }
    tr / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displacement_anchors() {
        let cutoff = 60;
        let d = displacement_matrix(C64::new(0.0, 0.0), cutoff);
        for i in 0..=cutoff {
            for j in 0..=cutoff {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d.at(i, j) - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        // column 0 = coherent amplitudes e^{−|β|²/2} βⁿ/√n!
        let beta = C64::new(0.7, -0.4);
        let d = displacement_matrix(beta, cutoff);
        for n in 0..=12 {
            let want = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0) * beta.powu(n as u32)
                / factorial(n).sqrt();
            assert!((d.at(n, 0) - want).norm() < 1e-12, "n = {n}");
        }
        // D(1)·D(−1) ≈ 1 on the low subspace
        let d1 = displacement_matrix(C64::new(1.0, 0.0), cutoff);
        let dm1 = displacement_matrix(C64::new(-1.0, 0.0), cutoff);
        let prod = d1.mul(&dm1);
        for i in 0..=20 {
            for j in 0..=20 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod.at(i, j) - C64::new(expect, 0.0)).norm() < 1e-8);
            }
        }
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
    }

    #[test]
    fn vacuum_and_fock1_wigner() {
        let spec = GridSpec::square(5.0, 41);
        let vac = FockDensityMatrix { cutoff: 30, elements: thermal_matrix(0.0, 30) };
        let w = wigner(&vac, &spec).unwrap();
        for i in 0..spec.nx {
            for j in 0..spec.ny {
                let (x, p) = (spec.x_at(i), spec.p_at(j));
                let expect = (1.0 / std::f64::consts::PI) * (-(x * x + p * p)).exp();
                assert!((w.at(i, j) - expect).abs() < 1e-8);
            }
        }
        let mut one = CMat::zeros(31);
        one.a[1 * 31 + 1] = C64::new(1.0, 0.0);
        let rho1 = FockDensityMatrix { cutoff: 30, elements: one };
        let w1 = wigner(&rho1, &spec).unwrap();
        assert!((w1.at(20, 20) + 1.0 / std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn series_matches_displaced_parity() {
        // pure-state coherence with non-trivial phases
        let cutoff = 50;
        let ka = displacement_matrix(C64::new(0.9, 0.3), cutoff);
        let kb = displacement_matrix(C64::new(-0.4, 0.1), cutoff);
        let dim = cutoff + 1;
        let mut rho = CMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = ka.at(i, 0) * kb.at(j, 0).conj();
                rho.a[i * dim + j] = v + (ka.at(j, 0) * kb.at(i, 0).conj()).conj();
            }
        }
        let fr = FockDensityMatrix { cutoff, elements: rho };
        for &(x, p) in &[(0.3, -0.7), (1.2, 0.4), (-2.0, 1.5)] {
            let spec = GridSpec { x_min: x, x_max: x + 1.0, p_min: p, p_max: p + 1.0, nx: 2, ny: 2 };
            let ws = wigner(&fr, &spec).unwrap().at(0, 0);
            let wp = displaced_parity_point(&fr, x, p);
            assert!((ws - wp).abs() < 1e-12, "({x},{p}): {ws} vs {wp}");
        }
    }

    #[test]
    fn purity_of_conditioned_pure_state() {
        let spec = KrausSpec::new(2, 1.0);
        let rho = build(&spec, 40).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
        assert!(rho.hermiticity_residual() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        let mixed = build(&KrausSpec::new(2, 1.0).with_nbar(0.5), 80).unwrap();
        assert!(mixed.purity() < 1.0 - 1e-3);
    }

    #[test]
    fn cutoff_guard_fires() {
        let spec = KrausSpec::new(2, 6.0);
        match build(&spec, 40) {
            Err(EngineError::CutoffTooSmall { .. }) => {}
            other => panic!("expected CutoffTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn rejects_hot_regime() {
        let spec = KrausSpec::new(1, 1.0).with_nbar(100.0);
        assert!(build(&spec, 100).is_err());
    }
}
