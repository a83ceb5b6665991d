//! Exact μ→0 limit of the hypercube map at φ = π.
//!
//! As μ→0 each heralding factor collapses to its leading order,
//! Υ = D(ε) − 1 → ε b† − ε* b (a rotated quadrature operator, ε = iμ/√2),
//! so the normalized state converges to
//!
//! ```text
//! ρ ∝ (∏ₖ Aₖ) ρ_th (∏ₖ Aₖ)†,   Aₖ = vₖ b† − vₖ* b,  vₖ = i·e^{iΘₖ},
//! ```
//!
//! which is μ-independent. Its Wigner function is a degree-2n polynomial
//! times the thermal Gaussian, obtained by applying the phase-space
//! (Bopp) correspondences of left/right ladder multiplication:
//!
//! ```text
//! b ρ  ↔ (ζ + ½∂_{ζ*}) W     ρ b  ↔ (ζ − ½∂_{ζ*}) W
//! b†ρ  ↔ (ζ* − ½∂_ζ) W       ρ b† ↔ (ζ* + ½∂_ζ) W
//! ```
//!
//! This form is what the engine uses whenever μ·√(2n̄+1) is so small
//! that the cancellation of the 4ⁿ Gaussian terms exceeds f64: at the
//! experimental μ = 8×10⁻⁹ the direct sum would need ~30–130 decimal
//! digits. The representation error of the limit is O(μ·√(2n̄+1)),
//! verified against the Fock oracle at μ = 10⁻³.

use crate::error::{EngineError, Result};
use crate::grid::GridSpec;
use crate::hypercube::KrausSpec;
use crate::real::Real;
use crate::state::{RowEval, WignerSource};
use num_complex::Complex;

/// Dense polynomial in (w, w*) with complex coefficients:
/// `c[a][b] · w^a w*^b`.
#[derive(Clone, Debug)]
struct Poly2<T> {
    deg: usize,
    c: Vec<Complex<T>>,
}

impl<T: Real> Poly2<T> {
    fn zero(deg: usize) -> Self {
        Poly2 { deg, c: vec![Complex::new(T::zero(), T::zero()); (deg + 1) * (deg + 1)] }
    }

    fn one(deg: usize) -> Self {
        let mut p = Self::zero(deg);
        p.c[0] = Complex::new(T::one(), T::zero());
        p
    }

    #[inline]
    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.deg + 1) + b
    }

    fn shift_w(&self) -> Self {
        let mut out = Self::zero(self.deg);
        for a in 0..self.deg {
            for b in 0..=self.deg {
                out.c[self.idx(a + 1, b)] = self.c[self.idx(a, b)];
            }
        }
        out
    }

    fn shift_wc(&self) -> Self {
        let mut out = Self::zero(self.deg);
        for a in 0..=self.deg {
            for b in 0..self.deg {
                out.c[self.idx(a, b + 1)] = self.c[self.idx(a, b)];
            }
        }
        out
    }

    fn d_w(&self) -> Self {
        let mut out = Self::zero(self.deg);
        for a in 1..=self.deg {
            for b in 0..=self.deg {
                out.c[self.idx(a - 1, b)] = self.c[self.idx(a, b)] * T::of_usize(a);
            }
        }
        out
    }

    fn d_wc(&self) -> Self {
        let mut out = Self::zero(self.deg);
        for a in 0..=self.deg {
            for b in 1..=self.deg {
                out.c[self.idx(a, b - 1)] = self.c[self.idx(a, b)] * T::of_usize(b);
            }
        }
        out
    }

    fn axpy(&mut self, z: Complex<T>, other: &Self) {
        for (s, o) in self.c.iter_mut().zip(&other.c) {
            *s += o * z;
        }
    }

    fn scaled(&self, z: Complex<T>) -> Self {
        Poly2 { deg: self.deg, c: self.c.iter().map(|v| v * z).collect() }
    }

    /// Horner evaluation at (w, w*).
    fn eval(&self, w: Complex<T>) -> Complex<T> {
        let wc = w.conj();
        let mut res = Complex::new(T::zero(), T::zero());
        for a in (0..=self.deg).rev() {
            let mut row = Complex::new(T::zero(), T::zero());
            for b in (0..=self.deg).rev() {
                row = row * wc + self.c[self.idx(a, b)];
            }
            res = res * w + row;
        }
        res
    }
}

/// A hypercube state in the μ→0 limit form: polynomial × displaced
/// thermal Gaussian, normalized.
#[derive(Clone, Debug)]
pub struct LimitState<T> {
    poly: Poly2<T>,
    /// Gaussian center (the rotated initial center, plus any external
    /// displacement applied afterwards).
    pub center: Complex<T>,
    pub nbar: T,
    pub order: usize,
}

enum Side {
    Left,
    Right,
}

impl<T: Real> LimitState<T> {
    /// Build from a Kraus recipe (requires φ = π; μ is ignored — the
    /// limit is μ-independent).
    pub fn build(spec: &KrausSpec<T>) -> Result<Self> {
        spec.validate()?;
        if (spec.phi - T::PI()).abs() > T::of(1e-9) {
            return Err(EngineError::InvalidInput(
                "small-mu limit form requires phi = pi (Y ∝ D − 1)".into(),
            ));
        }
        let n = spec.order;
        let deg = 2 * n;
        let c0 = spec.rotated_center();
        let s = (T::of(2.0) * spec.nbar + T::one()) / T::of(2.0);
        // unit directions of the effective quadrature operators
        let dirs: Vec<Complex<T>> = spec
            .effective_displacements()
            .into_iter()
            .map(|e| {
                let r = e.norm();
                if r > T::zero() {
                    e / r
                } else {
                    // μ = 0: direction from the angles alone
                    Complex::new(T::zero(), T::one())
                }
            })
            .collect();
        let mut p = Poly2::one(deg);
        for v in &dirs {
            p = apply_ladder(&p, *v, c0, s, Side::Left);
        }
        for v in &dirs {
            p = apply_ladder(&p, *v, c0, s, Side::Right);
        }
        // normalize: ∫ w^a w̄^b G dx dp = δ_ab a! s^a
        let mut tr = T::zero();
        let mut fact = T::one();
        let mut spow = T::one();
        for a in 0..=deg {
            if a > 0 {
                fact *= T::of_usize(a);
                spow *= s;
            }
            tr += p.c[p.idx(a, a)].re * fact * spow;
        }
        if !(tr > T::of(1e-300)) {
            return Err(EngineError::ZeroNormState(tr.to_f64().unwrap_or(0.0)));
        }
        let poly = p.scaled(Complex::new(tr.recip(), T::zero()));
        Ok(LimitState { poly, center: c0, nbar: spec.nbar, order: n })
    }

    pub fn wigner_at(&self, x: T, p: T) -> T {
        let zeta = Complex::new(x, p) / T::SQRT_2();
        let w = zeta - self.center;
        let s = (T::of(2.0) * self.nbar + T::one()) / T::of(2.0);
        let g = (-(w.norm_sqr()) / s).exp() / (T::PI() * T::of(2.0) * s);
        self.poly.eval(w).re * g
    }
}

/// Apply A = v b† − v* b (left) or A† = v* b − v b† (right) to P·G.
fn apply_ladder<T: Real>(
    p: &Poly2<T>,
    v: Complex<T>,
    c0: Complex<T>,
    s: T,
    side: Side,
) -> Poly2<T> {
    let half = T::of(0.5);
    let w = p.shift_w();
    let wc = p.shift_wc();
    let dw = p.d_w();
    let dwc = p.d_wc();
    // ζ·P = (w + c0)P, ∂_ζ(P G) = (∂_w P − (w*/s) P) G, and ζ*/∂_{ζ*} mirrored.
    let zeta = |mut acc: Poly2<T>| -> Poly2<T> {
        acc.axpy(c0, p);
        acc
    };
    let zeta_c = |mut acc: Poly2<T>| -> Poly2<T> {
        acc.axpy(c0.conj(), p);
        acc
    };
    let (b_op, bd_op) = match side {
        Side::Left => {
            // b: ζ + ½∂_{ζ*}  ;  b†: ζ* − ½∂_ζ
            let mut b = zeta(w.clone());
            b.axpy(Complex::new(half, T::zero()), &dwc);
            b.axpy(Complex::new(-(half / s), T::zero()), &w);
            let mut bd = zeta_c(wc.clone());
            bd.axpy(Complex::new(-half, T::zero()), &dw);
            bd.axpy(Complex::new(half / s, T::zero()), &wc);
            (b, bd)
        }
        Side::Right => {
            // b: ζ − ½∂_{ζ*}  ;  b†: ζ* + ½∂_ζ
            let mut b = zeta(w.clone());
            b.axpy(Complex::new(-half, T::zero()), &dwc);
            b.axpy(Complex::new(half / s, T::zero()), &w);
            let mut bd = zeta_c(wc.clone());
            bd.axpy(Complex::new(half, T::zero()), &dw);
            bd.axpy(Complex::new(-(half / s), T::zero()), &wc);
            (b, bd)
        }
    };
    let mut out = match side {
        // A = v b† − v* b
        Side::Left => bd_op.scaled(v),
        // A† = v* b − v b†
        Side::Right => b_op.scaled(v.conj()),
    };
    match side {
        Side::Left => out.axpy(-v.conj(), &b_op),
        Side::Right => out.axpy(-v, &bd_op),
    }
    out
}

struct LimitRows<'a, T> {
    state: &'a LimitState<T>,
    spec: GridSpec<T>,
}

impl<'a, T: Real> RowEval<T> for LimitRows<'a, T> {
    fn fill_row(&self, i: usize, out: &mut [T]) {
        let x = self.spec.x_at(i);
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.state.wigner_at(x, self.spec.p_at(j));
        }
    }
}

impl<T: Real> WignerSource<T> for LimitState<T> {
    fn prepare<'a>(&'a self, spec: &GridSpec<T>) -> Box<dyn RowEval<T> + 'a> {
        Box::new(LimitRows { state: self, spec: *spec })
    }

    fn displaced(&self, delta: Complex<T>) -> Self {
        let mut out = self.clone();
        out.center += delta;
        out
    }

    fn nbar(&self) -> T {
        self.nbar
    }

    fn extent_hints(&self) -> (T, T) {
        (T::SQRT_2() * self.center.norm(), T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::evaluate_grid;
    use crate::grid::GridSpec;

    #[test]
    fn normalized_on_grid() {
        for (n, nbar) in [(1usize, 0.0), (2, 0.0), (3, 0.5), (4, 2.0)] {
            let spec = KrausSpec::new(n, 8e-9).with_nbar(nbar);
            let st = LimitState::build(&spec).unwrap();
            let sigma = ((2.0 * nbar + 1.0f64) / 2.0).sqrt();
            let g = GridSpec::square(6.5 * sigma.max(1.0), 501);
            let w = evaluate_grid(&st, &g).unwrap();
            assert!(
                (w.quadrature_sum() - 1.0).abs() < 1e-4,
                "n={n} nbar={nbar}: {}",
                w.quadrature_sum()
            );
        }
    }

    #[test]
    fn known_minima_at_nbar_zero() {
        // frozen from the oracle-validated prototype: min W over the
        // plane for n = 2, 3, 4 (dx dp convention)
        for (n, expect) in [(2usize, -0.196806), (3, -0.318310), (4, -0.234435)] {
            let st = LimitState::build(&KrausSpec::<f64>::new(n, 8e-9)).unwrap();
            let g = GridSpec::square(6.0, 601);
            let w = evaluate_grid(&st, &g).unwrap();
            assert!(
                (w.min_value() - expect).abs() < 2e-4,
                "n={n}: {} vs {expect}",
                w.min_value()
            );
        }
    }

    #[test]
    fn displacement_is_rigid() {
        let st = LimitState::build(&KrausSpec::new(2, 8e-9).with_nbar(1.0)).unwrap();
        let d = num_complex::Complex::new(0.3, -0.2);
        let moved = st.displaced(d);
        let (x, p) = (0.7, 0.4);
        let shifted = moved.wigner_at(
            x + std::f64::consts::SQRT_2 * d.re,
            p + std::f64::consts::SQRT_2 * d.im,
        );
        assert!((st.wigner_at(x, p) - shifted).abs() < 1e-14);
    }

    #[test]
    fn rejects_phi_away_from_pi() {
        let spec = KrausSpec::new(2, 8e-9).with_phi(3.0);
        assert!(LimitState::build(&spec).is_err());
    }
}
