//! Momentum-space amplitudes multiplying the incident pulse: barrier
//! transmission, state-dependent measurement amplitudes, pure translations.
//!
//! Amplitudes are handled through their complex logarithm so that pulses
//! transmitted with probabilities far below `f64::MIN_POSITIVE` can still be
//! integrated after an analytic rescaling.

use num_complex::Complex64;

pub trait Amplitude: Sync {
    /// `ln A(p)`: real part the log-modulus, imaginary part the phase (any
    /// branch). `-inf` real part encodes an exact zero.
    fn ln_amplitude(&self, p: f64) -> Complex64;

    fn amplitude(&self, p: f64) -> Complex64 {
        self.ln_amplitude(p).exp()
    }

    /// Lower edge of the momenta the amplitude is defined for, if any.
    fn domain_floor(&self) -> Option<f64> {
        None
    }
}

impl<A: Amplitude + ?Sized> Amplitude for &A {
    fn ln_amplitude(&self, p: f64) -> Complex64 {
        (**self).ln_amplitude(p)
    }

    fn domain_floor(&self) -> Option<f64> {
        (**self).domain_floor()
    }
}

/// Free propagation, `A ≡ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unit;

impl Amplitude for Unit {
    fn ln_amplitude(&self, _p: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// Rigid translation by `shift`: `A(p) = e^{-i shift p}`.
#[derive(Debug, Clone, Copy)]
pub struct PureShift {
    pub shift: f64,
}

impl Amplitude for PureShift {
    fn ln_amplitude(&self, p: f64) -> Complex64 {
        Complex64::new(0.0, -self.shift * p)
    }
}

/// `A(p) e^{scale}` with a constant complex log-scale, e.g. to undo the
/// exponential suppression of a tunnelling amplitude before quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<A> {
    pub inner: A,
    pub ln_scale: Complex64,
}

impl<A: Amplitude> Amplitude for Scaled<A> {
    fn ln_amplitude(&self, p: f64) -> Complex64 {
        self.inner.ln_amplitude(p) + self.ln_scale
    }

    fn domain_floor(&self) -> Option<f64> {
        self.inner.domain_floor()
    }
}

/// Adapter for an amplitude given by value.
pub struct FnAmplitude<F>(pub F);

impl<F> Amplitude for FnAmplitude<F>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    fn ln_amplitude(&self, p: f64) -> Complex64 {
        (self.0)(p).ln()
    }

    fn amplitude(&self, p: f64) -> Complex64 {
        (self.0)(p)
    }
}
