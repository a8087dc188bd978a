//! Scattering by a rectangular barrier of height `W` on `[0, d]`
//! (hbar = m = 1).
//!
//! The transmission amplitude
//!
//! ```text
//! T(p) = 4ipκ e^{-ipd} / [(p+iκ)^2 e^{κd} - (p-iκ)^2 e^{-κd}],   κ = (2W - p^2)^{1/2}
//! ```
//!
//! is evaluated in the equivalent form `2ip e^{-ipd} / [(2p^2-2W) S + 2ip C]`
//! with `S = sinh(κd)/κ` and `C = cosh(κd)`. Both are even in `κ`, so the
//! choice of square-root branch drops out and `p^2 = 2W` is a regular point.
//! For `κd` large the pair is carried with the factor `e^{κd}` split off into
//! the logarithm, which keeps `ln T` finite at any barrier width.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitude::Amplitude;
use crate::error::{Error, Result};
use crate::numerics::{shift_spectrum, ComplexField, MomentumGrid, ShiftWindow, SpatialGrid, UniformGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative half-width, in units of `W`, of the band around `p^2 = 2W`
/// treated as the branch point.
pub const BRANCH_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangularBarrier {
    height_w: f64,
    width_d: f64,
}

/// `ȳ = i T^{-1} ∂T/∂p`, the complex shift of the transmitted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakShift {
    pub re_shift: f64,
    pub im_shift: f64,
}

impl WeakShift {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re_shift, self.im_shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShiftMethod {
    Analytic,
    FiniteDifference,
}

/// `S`, `C` and `E = (d C - S) / κ^2`, all multiplied by `e^{-scale}`.
struct Kernel {
    s: f64,
    c: f64,
    e: f64,
    scale: f64,
}

impl RectangularBarrier {
    pub fn new(height_w: f64, width_d: f64) -> Result<Self> {
        if !(height_w.is_finite() && height_w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "barrier height must be positive, got {height_w}"
            )));
        }
        if !(width_d.is_finite() && width_d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "barrier width must be positive, got {width_d}"
            )));
        }
        Ok(Self { height_w, width_d })
    }

    pub fn height(&self) -> f64 {
        self.height_w
    }

    pub fn width(&self) -> f64 {
        self.width_d
    }

    /// `κ = √(2W - p²)`: positive real under the barrier, `+i√(p² - 2W)` above.
    pub fn kappa(&self, p: f64) -> Complex64 {
        let k2 = 2.0 * self.height_w - p * p;
        if k2 >= 0.0 {
            Complex64::new(k2.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-k2).sqrt())
        }
    }

    pub fn is_tunnelling(&self, p: f64) -> bool {
        p * p < 2.0 * self.height_w
    }

    fn kernel(&self, p: f64) -> Kernel {
        let d = self.width_d;
        let k2 = 2.0 * self.height_w - p * p;
        let u = k2 * d * d;
        if u.abs() <= 1.0 {
            // Taylor series in u = κ²d²; 22 terms reach machine precision.
            let (mut s, mut c, mut e) = (0.0, 0.0, 0.0);
            let mut pow = 1.0;
            let mut fact_even = 1.0; // (2n)!
            for n in 0..22 {
                let fact_odd = fact_even * (2 * n + 1) as f64; // (2n+1)!
                let fact_odd3 = fact_odd * (2 * n + 2) as f64 * (2 * n + 3) as f64; // (2n+3)!
                c += pow / fact_even;
                s += pow / fact_odd;
                e += pow * (2 * n + 2) as f64 / fact_odd3;
                pow *= u;
                fact_even = fact_odd * (2 * n + 2) as f64;
            }
            Kernel {
                s: d * s,
                c,
                e: d * d * d * e,
                scale: 0.0,
            }
        } else if u > 0.0 {
            let kappa = k2.sqrt();
            let x = kappa * d;
            let decay = (-2.0 * x).exp();
            let s = (1.0 - decay) / (2.0 * kappa);
            let c = (1.0 + decay) / 2.0;
            Kernel {
                s,
                c,
                e: (d * c - s) / k2,
                scale: x,
            }
        } else {
            let q = (-k2).sqrt();
            let x = q * d;
            let s = x.sin() / q;
            let c = x.cos();
            Kernel {
                s,
                c,
                e: (d * c - s) / k2,
                scale: 0.0,
            }
        }
    }

    /// Scaled denominator `D e^{-scale}` and the log-derivative `D'/D`.
    fn denominator(&self, p: f64) -> (Complex64, Complex64, f64) {
        let k = self.kernel(p);
        let w = self.height_w;
        let d = self.width_d;
        let a = 2.0 * p * p - 2.0 * w;
        let den = Complex64::new(a * k.s, 2.0 * p * k.c);
        let ds = -p * k.e;
        let dc = -p * d * k.s;
        let dden = Complex64::new(4.0 * p * k.s + a * ds, 2.0 * k.c + 2.0 * p * dc);
        (den, dden / den, k.scale)
    }

    /// `ln T(p)` for any real `p`; `T(-p) = T(p)*` and `T(0) = 0`.
    fn ln_transmission_unchecked(&self, p: f64) -> Complex64 {
        if p == 0.0 {
            return Complex64::new(f64::NEG_INFINITY, 0.0);
        }
        let (den, _, scale) = self.denominator(p);
        let num = Complex64::new(0.0, 2.0 * p).ln();
        num - I * (p * self.width_d) - scale - den.ln()
    }

    fn transmission_unchecked(&self, p: f64) -> Complex64 {
        if p == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.ln_transmission_unchecked(p).exp()
    }

    fn check_momentum(p: f64) -> Result<()> {
        if p.is_finite() && p > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidMomentum(p))
        }
    }

    /// Complex logarithm of the transmission amplitude; finite even where
    /// `T` itself underflows.
    pub fn ln_transmission(&self, p: f64) -> Result<Complex64> {
        Self::check_momentum(p)?;
        Ok(self.ln_transmission_unchecked(p))
    }

    pub fn transmission_amplitude(&self, p: f64) -> Result<Complex64> {
        Self::check_momentum(p)?;
        Ok(self.transmission_unchecked(p))
    }

    /// Opaque-barrier form `4ipκ/(p+iκ)^2 · exp[-i(p - iκ)d]`, logarithm.
    pub fn ln_asymptotic_transmission(&self, p: f64) -> Result<Complex64> {
        Self::check_momentum(p)?;
        if !self.is_tunnelling(p) {
            return Err(Error::OutsideTunnellingRegime { p, w: self.height_w });
        }
        let kappa = (2.0 * self.height_w - p * p).sqrt();
        let pre = Complex64::new(0.0, 4.0 * p * kappa).ln() - 2.0 * Complex64::new(p, kappa).ln();
        Ok(pre - I * (p * self.width_d) - kappa * self.width_d)
    }

    pub fn asymptotic_transmission(&self, p: f64) -> Result<Complex64> {
        self.ln_asymptotic_transmission(p).map(|l| l.exp())
    }

    fn check_branch(&self, p0: f64) -> Result<()> {
        Self::check_momentum(p0)?;
        if (2.0 * self.height_w - p0 * p0).abs() < BRANCH_EPS * self.height_w {
            return Err(Error::BranchPointSingularity { p: p0, w: self.height_w });
        }
        Ok(())
    }

    /// Finite-difference step used by [`ShiftMethod::FiniteDifference`].
    pub fn fd_step(p0: f64) -> f64 {
        1e-5 * p0
    }

    pub fn weak_shift(&self, p0: f64, method: ShiftMethod) -> Result<WeakShift> {
        self.check_branch(p0)?;
        let dln = match method {
            ShiftMethod::Analytic => {
                let (_, dlog_den, _) = self.denominator(p0);
                Complex64::new(0.0, -self.width_d) + 1.0 / p0 - dlog_den
            }
            ShiftMethod::FiniteDifference => {
                let h = Self::fd_step(p0);
                let hi = self.ln_transmission_unchecked(p0 + h);
                let lo = self.ln_transmission_unchecked(p0 - h);
                let mut diff = hi - lo;
                diff.im = wrap_phase(diff.im);
                diff / (2.0 * h)
            }
        };
        let y = I * dln;
        Ok(WeakShift {
            re_shift: y.re,
            im_shift: y.im,
        })
    }

    /// `d - Re ȳ(p0)`, computed without forming the difference of two
    /// numbers of size `d`.
    pub fn spatial_delay(&self, p0: f64) -> Result<f64> {
        self.check_branch(p0)?;
        let (_, dlog_den, _) = self.denominator(p0);
        Ok(-dlog_den.im)
    }

    /// Phase time `(d - Re ȳ) m / p0` with `m = 1`.
    pub fn phase_time(&self, p0: f64) -> Result<f64> {
        Ok(self.spatial_delay(p0)? / p0)
    }

    /// Half-width of the symmetric momentum window used by
    /// [`RectangularBarrier::shift_spectrum`].
    pub fn spectrum_momentum_cutoff(&self) -> f64 {
        40.0 * self.reference_scale()
    }

    fn reference_scale(&self) -> f64 {
        (2.0 * self.height_w).sqrt().max(1.0 / self.width_d)
    }

    /// Shift spectrum `ξ(y)` of the barrier on an `n_points` grid.
    ///
    /// `T` is sampled on `[-P, P)` using `T(-p) = T(p)*`. Before the
    /// transform, the free part `1` and the causal reference
    /// `a/(p+iα) + b/(p+iα)^2` matching the `1/p` and `1/p^2` terms of
    /// `T - 1` are subtracted; their spectra (a discrete delta at `y = 0`
    /// and `(-Wd + b y) e^{αy}` for `y < 0`) are added back exactly. What
    /// remains is smooth at `y = 0`, so the transform does not ring across
    /// the edge of the delayed half-line.
    pub fn shift_spectrum(&self, n_points: usize) -> Result<ComplexField<SpatialGrid>> {
        if !n_points.is_power_of_two() || n_points < 4 {
            return Err(Error::GridShape(format!(
                "shift spectrum needs a power-of-two grid of at least 4 points, got {n_points}"
            )));
        }
        let cutoff = self.spectrum_momentum_cutoff();
        let dp = 2.0 * cutoff / n_points as f64;
        let grid = MomentumGrid::from(UniformGrid::from_spacing(-cutoff, dp, n_points)?);
        let wd = self.height_w * self.width_d;
        let alpha = self.reference_scale();
        let a = Complex64::new(0.0, -wd);
        let b = -0.5 * wd * wd + alpha * wd;
        let residual = ComplexField::from_fn(grid, |p| {
            let z = Complex64::new(p, alpha);
            self.transmission_unchecked(p) - 1.0 - a / z - b / (z * z)
        })?;
        let xi = shift_spectrum(&residual, ShiftWindow::causal())?;
        let dy = xi.grid().spacing();
        xi.map(|y, v| {
            let j = (y / dy).round();
            if j == 0.0 {
                v + 1.0 / dy - 0.5 * wd
            } else if j < 0.0 {
                v + (-wd + b * y) * (alpha * y).exp()
            } else {
                v
            }
        })
    }
}

impl Amplitude for RectangularBarrier {
    fn ln_amplitude(&self, p: f64) -> Complex64 {
        self.ln_transmission_unchecked(p)
    }

    fn domain_floor(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Reduces a phase difference to `(-π, π]`.
fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn kappa_branches() {
        let b = RectangularBarrier::new(1.0, 1.0).unwrap();
        assert_eq!(b.kappa(1.0), Complex64::new(1.0, 0.0));
        assert!((b.kappa(0.0).re - 2f64.sqrt()).abs() < 1e-15);
        let b = RectangularBarrier::new(0.5, 1.0).unwrap();
        let k = b.kappa(2.0);
        assert_eq!(k.re, 0.0);
        assert!((k.im - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.kappa(1.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(RectangularBarrier::new(0.0, 1.0).is_err());
        assert!(RectangularBarrier::new(1.0, -1.0).is_err());
        let b = RectangularBarrier::new(1.0, 1.0).unwrap();
        assert_eq!(b.transmission_amplitude(0.0), Err(Error::InvalidMomentum(0.0)));
        assert!(b.transmission_amplitude(-1.0).is_err());
        assert!(matches!(
            b.asymptotic_transmission(2.0),
            Err(Error::OutsideTunnellingRegime { .. })
        ));
        assert!(matches!(
            b.weak_shift(2f64.sqrt(), ShiftMethod::Analytic),
            Err(Error::BranchPointSingularity { .. })
        ));
    }

    #[test]
    fn d10_reference_value() {
        let b = RectangularBarrier::new(1.0, 10.0).unwrap();
        let t = b.transmission_amplitude(1.0).unwrap();
        let expected = 2.0 * Complex64::from_polar(1.0, -10.0) / (10f64.exp() + (-10f64).exp());
        assert!(rel(t, expected) < 1e-13, "{t} vs {expected}");
        assert!((t.norm() - 9.0799e-5).abs() < 1e-8);
    }

    #[test]
    fn small_momentum_and_vanishing_barrier() {
        let b = RectangularBarrier::new(1.0, 2.0).unwrap();
        assert!(b.transmission_amplitude(1e-9).unwrap().norm() < 1e-8);
        let free = RectangularBarrier::new(1e-14, 3.0).unwrap();
        assert!((free.transmission_amplitude(0.8).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn matches_textbook_formula_off_branch() {
        // direct evaluation of the four-exponential form
        let direct = |w: f64, d: f64, p: f64| {
            let k = Complex64::new(2.0 * w - p * p, 0.0).sqrt();
            let ip = Complex64::new(p, 0.0);
            let num = 4.0 * I * ip * k * (-I * ip * d).exp();
            let den = (ip + I * k).powu(2) * (k * d).exp() - (ip - I * k).powu(2) * (-k * d).exp();
            num / den
        };
        for &(w, d, p) in &[(1.0, 3.0, 0.7), (0.5, 2.0, 1.6), (2.0, 0.4, 0.3), (1.0, 1.0, 1.4)] {
            let b = RectangularBarrier::new(w, d).unwrap();
            let t = b.transmission_amplitude(p).unwrap();
            assert!(rel(t, direct(w, d, p)) < 1e-12, "{w} {d} {p}");
            // κ -> -κ leaves the four-exponential form unchanged
            let k = Complex64::new(2.0 * w - p * p, 0.0).sqrt();
            let ip = Complex64::new(p, 0.0);
            let km = -k;
            let num = 4.0 * I * ip * km * (-I * ip * d).exp();
            let den = (ip + I * km).powu(2) * (km * d).exp() - (ip - I * km).powu(2) * (-km * d).exp();
            assert!(rel(num / den, t) < 1e-12);
        }
    }

    #[test]
    fn continuous_across_branch_point() {
        let b = RectangularBarrier::new(1.0, 4.0).unwrap();
        let pb = 2f64.sqrt();
        let at = b.transmission_amplitude(pb).unwrap();
        let limit = Complex64::from_polar(1.0, -pb * 4.0) / (1.0 - I * pb * 4.0 / 2.0);
        assert!(rel(at, limit) < 1e-12);
        let mut prev = f64::INFINITY;
        for delta in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let gap = (b.transmission_amplitude(pb - delta).unwrap()
                - b.transmission_amplitude(pb + delta).unwrap())
            .norm();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn asymptotic_form_error_scales_like_exp_minus_2kd() {
        let b = RectangularBarrier::new(1.0, 1.0).unwrap();
        let e = rel(b.asymptotic_transmission(1.0).unwrap(), b.transmission_amplitude(1.0).unwrap());
        assert!((e - (-2f64).exp()).abs() < 0.02, "{e}");
        let b = RectangularBarrier::new(1.0, 20.0).unwrap();
        let e = rel(b.asymptotic_transmission(1.0).unwrap(), b.transmission_amplitude(1.0).unwrap());
        assert!(e < 1e-8);
        // modulus of the opaque form
        let b = RectangularBarrier::new(1.3, 2.5).unwrap();
        let p: f64 = 0.9;
        let k = (2.6 - p * p).sqrt();
        let m = 4.0 * p * k / (p * p + k * k) * (-k * 2.5).exp();
        assert!((b.asymptotic_transmission(p).unwrap().norm() - m).abs() < 1e-14);
    }

    #[test]
    fn weak_shift_routes_agree() {
        let b = RectangularBarrier::new(1.0, 10.0).unwrap();
        let a = b.weak_shift(1.0, ShiftMethod::Analytic).unwrap().as_complex();
        let f = b.weak_shift(1.0, ShiftMethod::FiniteDifference).unwrap().as_complex();
        assert!(rel(f, a) < 1e-6, "{a} vs {f}");
    }

    #[test]
    fn weak_shift_opaque_limit() {
        let b = RectangularBarrier::new(1.0, 1000.0).unwrap();
        let y = b.weak_shift(1.0, ShiftMethod::Analytic).unwrap();
        assert!((y.re_shift / 1000.0 - 1.0).abs() < 1e-2);
        assert!((y.im_shift / 1000.0 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn free_limit_has_no_shift() {
        let b = RectangularBarrier::new(1e-14, 7.0).unwrap();
        let y = b.weak_shift(1.2, ShiftMethod::Analytic).unwrap();
        assert!(y.as_complex().norm() < 1e-10);
        let tau = b.phase_time(1.2).unwrap();
        assert!((tau - 7.0 / 1.2).abs() < 1e-10);
    }

    #[test]
    fn phase_time_saturates() {
        let b600 = RectangularBarrier::new(1.0, 600.0).unwrap();
        let b1000 = RectangularBarrier::new(1.0, 1000.0).unwrap();
        let t600 = b600.phase_time(1.0).unwrap();
        let t1000 = b1000.phase_time(1.0).unwrap();
        assert!(((t600 - t1000) / t1000).abs() <= 1e-6);
        assert!(t1000 < 1000.0 / 100.0);
        // consistency with the complex shift
        let y = b1000.weak_shift(1.0, ShiftMethod::Analytic).unwrap();
        assert!(((1000.0 - y.re_shift) - t1000).abs() < 1e-9);
    }

    #[test]
    fn advancement_is_positive_and_bounded() {
        for &(w, d, p) in &[(1.0, 10.0, 1.0), (2.0, 8.0, 0.5), (0.5, 30.0, 0.6)] {
            let b = RectangularBarrier::new(w, d).unwrap();
            let k0 = (2.0 * w - p * p).sqrt();
            assert!(k0 * d >= 10.0);
            let y = b.weak_shift(p, ShiftMethod::Analytic).unwrap();
            assert!(y.re_shift > 0.0 && y.re_shift < d, "{y:?}");
        }
    }

    #[test]
    fn shift_spectrum_is_causal() {
        let b = RectangularBarrier::new(1.0, 5.0).unwrap();
        let xi = b.shift_spectrum(1 << 14).unwrap();
        let (mut adv, mut tot) = (0.0, 0.0);
        for (y, v) in xi.iter() {
            tot += v.norm_sqr();
            if y > 0.0 {
                adv += v.norm_sqr();
            }
        }
        assert!(adv / tot < 1e-6, "{}", adv / tot);
    }

    proptest! {
        #[test]
        fn unitarity_bound(w in 1e-3f64..5.0, d in 1e-2f64..50.0, p in 1e-4f64..6.0) {
            let b = RectangularBarrier::new(w, d).unwrap();
            let t = b.transmission_amplitude(p).unwrap();
            prop_assert!(t.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn negative_momenta_conjugate(w in 0.1f64..3.0, d in 0.1f64..20.0, p in 0.01f64..4.0) {
            let b = RectangularBarrier::new(w, d).unwrap();
            let plus = b.transmission_unchecked(p);
            let minus = b.transmission_unchecked(-p);
            prop_assert!((plus.conj() - minus).norm() <= 1e-12 * plus.norm().max(1e-300));
        }
    }
}
