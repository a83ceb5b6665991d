//! The analytic atom: one displaced-thermal Gaussian cross term.

use crate::amplitude::Coefficient;
use crate::real::Real;
use num_complex::Complex;

/// One cross term `coeff · D(γ_L) ρ_th(n̄) D(γ_R)†` of an expanded state.
///
/// Its Wigner function (dx dp measure, ζ = (x+ip)/√2) is the closed form
///
/// ```text
/// W(ζ) = coeff · exp(−2|ζ−m|²/(2n̄+1)) / (π(2n̄+1))
///              · exp(ζ*δ − ζδ*) · exp(−i·Im(γ_L γ_R*))
/// ```
///
/// with `m = (γ_L+γ_R)/2` and `δ = γ_L−γ_R`, obtained by reducing the
/// characteristic function `Tr[D(γ_R)† D(ξ) D(γ_L) ρ_th]` with the
/// displacement composition rule and `Tr[ρ_th D(η)] = e^{−(2n̄+1)|η|²/2}`,
/// then Fourier-inverting the Gaussian analytically. The diagonal case
/// γ_L = γ_R reduces to the displaced thermal Gaussian
/// `W(ζ) = exp(−2|ζ−γ|²/(2n̄+1))/(π(2n̄+1)/2)` in the d²ζ measure,
/// i.e. half that per unit dx dp. Correctness is established against the
/// Fock oracle (see `fock` and the validation suite), not re-derived in
/// tests.
#[derive(Clone, Copy, Debug)]
pub struct GaussianTerm<T> {
    pub coeff: Coefficient<T>,
    pub gamma_l: Complex<T>,
    pub gamma_r: Complex<T>,
}

/// Precomputed separable factors: on an axis-aligned grid the term value
/// splits as `W(x_i, p_j) = Re(fx(x_i) · fp(p_j))`, with all magnitude
/// and static phase folded into `fx`. Exponents are assembled in log
/// space and exponentiated last, so n̄ ~ 10¹⁵ grids neither overflow nor
/// underflow spuriously.
#[derive(Clone, Copy, Debug)]
pub struct SeparableTerm<T> {
    /// ln of the magnitude prefactor |coeff|/(π(2n̄+1)).
    ln_pref: T,
    /// static phase: arg(coeff) − Im(γ_L γ_R*).
    phase0: T,
    /// envelope center, xp units.
    center_x: T,
    center_p: T,
    /// 1/(2n̄+1).
    inv_s: T,
    /// fringe wavevector along x: +√2·Im δ.
    kx: T,
    /// fringe wavevector along p: −√2·Re δ.
    kp: T,
}

impl<T: Real> GaussianTerm<T> {
    pub fn new(coeff: Complex<T>, gamma_l: Complex<T>, gamma_r: Complex<T>) -> Self {
        GaussianTerm { coeff: Coefficient::from_complex(coeff), gamma_l, gamma_r }
    }

    /// Envelope center (γ_L + γ_R)/2 in complex units.
    pub fn center(&self) -> Complex<T> {
        (self.gamma_l + self.gamma_r) / T::of(2.0)
    }

    /// Left/right separation γ_L − γ_R (sets the fringe wavelength).
    pub fn separation(&self) -> Complex<T> {
        self.gamma_l - self.gamma_r
    }

    /// Closed-form trace `coeff · e^{−(2n̄+1)|δ|²/2} · e^{+i·Im(γ_L γ_R*)}`.
    /// Diagonal terms return `coeff` exactly.
    pub fn trace(&self, nbar: T) -> Complex<T> {
        let d = self.separation();
        if d.re == T::zero() && d.im == T::zero() {
            return self.coeff.to_complex();
        }
        let s = T::of(2.0) * nbar + T::one();
        let ln_mag = self.coeff.ln_mag - s * d.norm_sqr() / T::of(2.0);
        let kappa = self.gamma_l.im * self.gamma_r.re - self.gamma_l.re * self.gamma_r.im;
        // kappa = Im(γ_L γ_R*)... note Im(a·conj(b)) = a.im b.re − a.re b.im
        Complex::from_polar(ln_mag.exp(), self.coeff.phase + kappa)
    }

    /// Wigner value at one point, complex (a lone cross term is not
    /// Hermitian; the conjugate partner restores a real sum).
    pub fn wigner_at(&self, nbar: T, x: T, p: T) -> Complex<T> {
        let f = self.separable(nbar);
        let fx = f.fx(x);
        let fp = f.fp(p);
        fx * fp
    }

    /// The grid-evaluation form.
    pub fn separable(&self, nbar: T) -> SeparableTerm<T> {
        let s = T::of(2.0) * nbar + T::one();
        let m = self.center();
        let d = self.separation();
        // static phase −Im(γ_L γ_R*)
        let neg_kappa = self.gamma_l.re * self.gamma_r.im - self.gamma_l.im * self.gamma_r.re;
        SeparableTerm {
            ln_pref: self.coeff.ln_mag - (T::PI() * s).ln(),
            phase0: self.coeff.phase + neg_kappa,
            center_x: T::SQRT_2() * m.re,
            center_p: T::SQRT_2() * m.im,
            inv_s: s.recip(),
            kx: T::SQRT_2() * d.im,
            kp: -(T::SQRT_2() * d.re),
        }
    }

    /// Conjugate partner (γ_R, γ_L) with conjugated coefficient.
    pub fn conjugate_partner(&self) -> Self {
        GaussianTerm { coeff: self.coeff.conj(), gamma_l: self.gamma_r, gamma_r: self.gamma_l }
    }
}

impl<T: Real> SeparableTerm<T> {
    #[inline]
    pub fn fx(&self, x: T) -> Complex<T> {
        let dx = x - self.center_x;
        let ln = self.ln_pref - dx * dx * self.inv_s;
        Complex::from_polar(ln.exp(), self.phase0 + self.kx * x)
    }

    #[inline]
    pub fn fp(&self, p: T) -> Complex<T> {
        let dp = p - self.center_p;
        let ln = -(dp * dp * self.inv_s);
        Complex::from_polar(ln.exp(), self.kp * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn term(c: C64, gl: C64, gr: C64) -> GaussianTerm<f64> {
        GaussianTerm::new(c, gl, gr)
    }

    #[test]
    fn vacuum_peak_is_one_over_pi() {
        let t = term(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let w = t.wigner_at(0.0, 0.0, 0.0);
        assert!((w.re - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(w.im.abs() < 1e-15);
    }

    #[test]
    fn displacement_covariance_of_diagonal_term() {
        // coherent term at β: peak value 1/π at the phase-space point of β
        let beta = C64::new(1.3, -0.6);
        let t = term(C64::new(1.0, 0.0), beta, beta);
        let (x, p) = (std::f64::consts::SQRT_2 * beta.re, std::f64::consts::SQRT_2 * beta.im);
        let w = t.wigner_at(0.0, x, p);
        assert!((w.re - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn thermal_peak_value() {
        let t = term(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let w = t.wigner_at(1.0, 0.0, 0.0);
        assert!((w.re - 1.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn trace_of_diagonal_is_coeff() {
        let c = C64::new(0.3, -0.8);
        let g = C64::new(2.0, 1.0);
        for nbar in [0.0, 1.0, 1e15] {
            let tr = term(c, g, g).trace(nbar);
            assert!((tr - c).norm() < 1e-15);
        }
    }

    #[test]
    fn trace_of_displacement_overlap() {
        // coeff=1, γL=β, γR=0, n̄=0 → ⟨0|β⟩ = e^{−|β|²/2}
        let beta = C64::new(1.5, 0.0);
        let tr = term(C64::new(1.0, 0.0), beta, C64::new(0.0, 0.0)).trace(0.0);
        assert!((tr.re - (-beta.norm_sqr() / 2.0).exp()).abs() < 1e-15);
        assert!(tr.im.abs() < 1e-15);
    }

    #[test]
    fn conjugate_partner_evaluates_to_conjugate() {
        let t = term(C64::new(0.4, 0.9), C64::new(0.7, -0.2), C64::new(-0.3, 0.5));
        let tc = t.conjugate_partner();
        for &(x, p) in &[(0.0, 0.0), (0.8, -1.1), (-2.0, 0.4)] {
            let a = t.wigner_at(0.5, x, p);
            let b = tc.wigner_at(0.5, x, p);
            assert!((a - b.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn huge_nbar_evaluates_finite() {
        let nbar = 1e15;
        let scale = (2.0 * nbar + 1.0f64).sqrt();
        let g = C64::new(0.0, 8e-9 / std::f64::consts::SQRT_2);
        let t = term(C64::new(1.0, 0.0), g, C64::new(0.0, 0.0));
        let w = t.wigner_at(nbar, 6.0 * scale, -6.0 * scale);
        assert!(w.re.is_finite() && w.im.is_finite());
        let w0 = t.wigner_at(nbar, 0.0, 0.0);
        assert!(w0.norm() > 0.0 && w0.norm() < 1.0);
    }
}
