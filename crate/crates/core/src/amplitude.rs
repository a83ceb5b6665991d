//! Displacement-operator algebra on complex amplitudes.

use crate::real::Real;
use num_complex::Complex;

/// `D(a) D(b) = phase · D(a + b)` with `phase = exp((a b* − a* b)/2)`.
///
/// `b` is the displacement applied first. The exponent is purely
/// imaginary, so the returned phase has unit modulus by construction.
pub fn compose_displacements<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
) -> (Complex<T>, Complex<T>) {
    // (a b* − a* b)/2 = i·Im(a b*)
    let arg = a.im * b.re - a.re * b.im; // Im(a·conj(b))
    let phase = Complex::from_polar(T::one(), arg);
    (phase, a + b)
}

/// Phase-space rotation of a displacement: `R(θ): γ → γ·e^{iθ}`
/// (counter-clockwise in (x, p); the Fock oracle uses the matching
/// `e^{iθ b†b}`).
pub fn rotate_displacement<T: Real>(g: Complex<T>, theta: T) -> Complex<T> {
    g * Complex::from_polar(T::one(), theta)
}

/// Term coefficient stored as (log-magnitude, phase) so that the deeply
/// normalized regimes (trace norms down to ~1e−66 at small μ) never
/// saturate the significand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient<T> {
    pub ln_mag: T,
    pub phase: T,
}

impl<T: Real> Coefficient<T> {
    pub fn one() -> Self {
        Coefficient { ln_mag: T::zero(), phase: T::zero() }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        let (r, th) = z.to_polar();
        Coefficient { ln_mag: r.ln(), phase: th }
    }

    /// Unit-modulus coefficient `e^{i·phase}`.
    pub fn from_phase(phase: T) -> Self {
        Coefficient { ln_mag: T::zero(), phase }
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::from_polar(self.ln_mag.exp(), self.phase)
    }

    pub fn conj(self) -> Self {
        Coefficient { ln_mag: self.ln_mag, phase: -self.phase }
    }

    pub fn mul(self, other: Self) -> Self {
        Coefficient { ln_mag: self.ln_mag + other.ln_mag, phase: self.phase + other.phase }
    }

    pub fn mul_complex(self, z: Complex<T>) -> Self {
        self.mul(Self::from_complex(z))
    }

    /// Divide by a positive real in log space.
    pub fn div_ln(self, ln_denom: T) -> Self {
        Coefficient { ln_mag: self.ln_mag - ln_denom, phase: self.phase }
    }

    pub fn is_finite(self) -> bool {
        // ln_mag = −inf encodes an exact zero, which is fine.
        (self.ln_mag.is_finite() || self.ln_mag == T::neg_infinity()) && self.phase.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn compose_identity_displacement() {
        let a = C64::new(0.7, -1.3);
        let (phase, sum) = compose_displacements(a, C64::new(0.0, 0.0));
        assert_eq!(sum, a);
        assert!((phase - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn compose_inverse_displacement() {
        let a = C64::new(0.4, 2.0);
        let (phase, sum) = compose_displacements(a, -a);
        assert!(sum.norm() < 1e-15);
        assert!((phase - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn compose_one_and_i() {
        // D(1) D(i) = e^{−i} D(1 + i): (1·(−i) − 1·i)/2 = −i.
        let (phase, sum) = compose_displacements(C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        assert!((sum - C64::new(1.0, 1.0)).norm() < 1e-15);
        assert!((phase - C64::from_polar(1.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn compose_phase_is_unit_modulus() {
        let a = C64::new(3.7e8, -2.2e8);
        let b = C64::new(-1.1e8, 9.9e7);
        let (phase, _) = compose_displacements(a, b);
        assert!((phase.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotate_quarter_turn() {
        let g = C64::new(1.0, 0.0);
        assert!((rotate_displacement(g, 0.0) - g).norm() < 1e-15);
        assert!((rotate_displacement(g, std::f64::consts::PI) + g).norm() < 1e-15);
        let r = rotate_displacement(g, std::f64::consts::FRAC_PI_2);
        assert!((r - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((rotate_displacement(g, 0.3).norm() - g.norm()).abs() < 1e-15);
    }

    #[test]
    fn coefficient_round_trip() {
        let z = C64::new(-3.2e-40, 1.7e-40);
        let c = Coefficient::from_complex(z);
        assert!((c.to_complex() - z).norm() < 1e-52);
        let w = c.mul(c.conj()).to_complex();
        assert!((w.re - z.norm_sqr()).abs() < 1e-92 && w.im.abs() < 1e-92);
    }
}
