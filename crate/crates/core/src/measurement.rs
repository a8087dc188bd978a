//! Von Neumann measurements on a finite-dimensional system with pre- and
//! post-selection.
//!
//! A pointer coupled impulsively to an operator `Â` with eigenvalues `A_n`,
//! with the system prepared in `|ψ_I⟩` and found in `|ψ_F⟩` afterwards, is
//! left in `Σ_n c_n Ψ⁰(x - A_n, t)`, `c_n = ⟨ψ_F|n⟩⟨n|ψ_I⟩`. In momentum
//! space the same state is the free pulse multiplied by the selection
//! amplitude `T^{F←I}(p) = Σ_n c_n e^{-iA_n p}`, which plays the part of a
//! transmission amplitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitude::Amplitude;
use crate::barrier::RectangularBarrier;
use crate::error::{Error, Result};
use crate::numerics::{ln_erfc, SpatialGrid, UniformGrid};
use crate::wavepacket::{transmitted_state, Dispersion, GaussianPulse, QuadratureOptions, TransmittedState};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Overlaps `|⟨ψ_F|ψ_I⟩|` below this are treated as orthogonal.
pub const TOL_OVERLAP: f64 = 1e-12;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuredOperator {
    eigenvalues: Vec<f64>,
}

impl MeasuredOperator {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() < 2 {
            return Err(Error::Dimension(format!(
                "operator needs at least 2 eigenvalues, got {}",
                eigenvalues.len()
            )));
        }
        if let Some(a) = eigenvalues.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite eigenvalue {a}")));
        }
        Ok(Self { eigenvalues })
    }

    /// `σ_z` with eigenvalues `+1` (up) and `-1` (down).
    pub fn pauli_z() -> Self {
        Self {
            eigenvalues: vec![1.0, -1.0],
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Pre- and post-selected states as components in the eigenbasis of the
/// measured operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionPair {
    pre_state: Vec<Complex64>,
    post_state: Vec<Complex64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl SelectionPair {
    /// Both states must already be normalised to `1e-12`.
    pub fn new(pre_state: Vec<Complex64>, post_state: Vec<Complex64>) -> Result<Self> {
        if pre_state.len() != post_state.len() {
            return Err(Error::Dimension(format!(
                "pre-selected state has {} components, post-selected state {}",
                pre_state.len(),
                post_state.len()
            )));
        }
        for (name, v) in [("pre", &pre_state), ("post", &post_state)] {
            if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::InvalidParameter(format!("{name}-selected state has non-finite components")));
            }
            let n = norm(v);
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name}-selected state has norm {n}, expected 1"
                )));
            }
        }
        Ok(Self { pre_state, post_state })
    }

    /// Normalises both vectors first.
    pub fn normalized(pre_state: Vec<Complex64>, post_state: Vec<Complex64>) -> Result<Self> {
        let scale = |v: Vec<Complex64>| -> Result<Vec<Complex64>> {
            let n = norm(&v);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::InvalidParameter("cannot normalise a zero or non-finite state".into()));
            }
            Ok(v.into_iter().map(|c| c / n).collect())
        };
        Self::new(scale(pre_state)?, scale(post_state)?)
    }

    pub fn pre_state(&self) -> &[Complex64] {
        &self.pre_state
    }

    pub fn post_state(&self) -> &[Complex64] {
        &self.post_state
    }

    pub fn dimension(&self) -> usize {
        self.pre_state.len()
    }

    /// `c_n = ⟨ψ_F|n⟩⟨n|ψ_I⟩`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.post_state.iter().zip(&self.pre_state).map(|(f, i)| f.conj() * i).collect()
    }

    /// `⟨ψ_F|ψ_I⟩`.
    pub fn overlap(&self) -> Complex64 {
        self.coefficients().into_iter().sum()
    }
}

/// The spin-1/2 family `ψ_I = (↑ + ↓)/√2`, `ψ_F = [↑ - (1 - 1/d)↓]/√N`,
/// `N = 1 + (1 - 1/d)²`, measuring `σ_z`. The weak value is `2d - 1`.
pub fn spin_half_example(d: f64) -> Result<(MeasuredOperator, SelectionPair)> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter(format!("spin example needs d > 0, got {d}")));
    }
    let r = 1.0 - 1.0 / d;
    let n = (1.0 + r * r).sqrt();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pre = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
    let post = vec![Complex64::new(1.0 / n, 0.0), Complex64::new(-r / n, 0.0)];
    Ok((MeasuredOperator::pauli_z(), SelectionPair::new(pre, post)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakValue {
    pub value: Complex64,
}

impl WeakValue {
    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn im(&self) -> f64 {
        self.value.im
    }
}

/// The weak value obtained three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakValueRoutes {
    /// `Σ A_n c_n / Σ c_n`.
    pub eigen_sum: Complex64,
    /// `i ∂_p ln T^{F←I}(0)` by a five-point stencil.
    pub log_derivative: Complex64,
    /// `∫ y η(y) dy / ∫ η(y) dy` over the discrete shift distribution at `p0 = 0`.
    pub improper_average: Complex64,
}

impl WeakValueRoutes {
    pub fn max_discrepancy(&self) -> f64 {
        let a = self.eigen_sum;
        (self.log_derivative - a).norm().max((self.improper_average - a).norm())
    }
}

/// An operator together with a compatible selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostSelectedMeasurement {
    eigenvalues: Vec<f64>,
    coefficients: Vec<Complex64>,
}

/// Stencil step for [`WeakValueRoutes::log_derivative`].
const STENCIL_H: f64 = 1e-4;

impl PostSelectedMeasurement {
    pub fn new(op: &MeasuredOperator, sel: &SelectionPair) -> Result<Self> {
        if op.dimension() != sel.dimension() {
            return Err(Error::Dimension(format!(
                "operator has dimension {}, selection {}",
                op.dimension(),
                sel.dimension()
            )));
        }
        Ok(Self {
            eigenvalues: op.eigenvalues().to_vec(),
            coefficients: sel.coefficients(),
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn overlap(&self) -> Complex64 {
        self.coefficients.iter().sum()
    }

    /// `T^{F←I}(p) = Σ_n c_n e^{-iA_n p}`.
    pub fn selection_amplitude(&self, p: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * Complex64::from_polar(1.0, -a * p))
            .sum()
    }

    /// `∂^k T^{F←I}(0) = Σ c_n (-iA_n)^k`.
    pub fn amplitude_derivative_at_zero(&self, k: u32) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * Complex64::new(0.0, -a).powu(k))
            .sum()
    }

    fn check_overlap(&self) -> Result<Complex64> {
        let o = self.overlap();
        if o.norm() < TOL_OVERLAP {
            return Err(Error::NearOrthogonalSelection { overlap: o.norm() });
        }
        Ok(o)
    }

    pub fn weak_value(&self) -> Result<WeakValue> {
        let o = self.check_overlap()?;
        let num: Complex64 = self.eigenvalues.iter().zip(&self.coefficients).map(|(a, c)| *a * c).sum();
        Ok(WeakValue { value: num / o })
    }

    /// `∫ y η(y, p0) dy / ∫ η(y, p0) dy` with
    /// `η(y, p0) = e^{-ip0y} Σ_n c_n δ(y - A_n)`; equals `i T'(p0)/T(p0)`.
    pub fn improper_average(&self, p0: f64) -> Result<Complex64> {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for (a, c) in self.eigenvalues.iter().zip(&self.coefficients) {
            let eta = c * Complex64::from_polar(1.0, -p0 * a);
            num += *a * eta;
            den += eta;
        }
        if den.norm() < TOL_OVERLAP {
            return Err(Error::NearOrthogonalSelection { overlap: den.norm() });
        }
        Ok(num / den)
    }

    pub fn weak_value_routes(&self) -> Result<WeakValueRoutes> {
        let eigen_sum = self.weak_value()?.value;
        let h = STENCIL_H;
        let t = |p: f64| self.selection_amplitude(p);
        let dt = (t(-2.0 * h) - 8.0 * t(-h) + 8.0 * t(h) - t(2.0 * h)) / (12.0 * h);
        let log_derivative = I * dt / t(0.0);
        Ok(WeakValueRoutes {
            eigen_sum,
            log_derivative,
            improper_average: self.improper_average(0.0)?,
        })
    }

    /// `[g', g'', g''']` for `g = ln T^{F←I}` at `p = 0`.
    pub fn log_derivatives(&self) -> Result<[Complex64; 3]> {
        let t0 = self.check_overlap()?;
        let r1 = self.amplitude_derivative_at_zero(1) / t0;
        let r2 = self.amplitude_derivative_at_zero(2) / t0;
        let r3 = self.amplitude_derivative_at_zero(3) / t0;
        Ok([r1, r2 - r1 * r1, r3 - 3.0 * r1 * r2 + 2.0 * r1 * r1 * r1])
    }

    /// `2|g''(0)|/σ²`: size of the first neglected term of the expansion of
    /// `ln T^{F←I}` over momenta `p ~ 2/σ`.
    pub fn expansion_parameter(&self, sigma: f64) -> Result<f64> {
        let g = self.log_derivatives()?;
        Ok(2.0 * g[1].norm() / (sigma * sigma))
    }

    /// Exact pointer state `Σ_n c_n Ψ⁰(x - A_n, t)`.
    pub fn pointer_final_state(&self, pulse: &GaussianPulse, x: f64, t: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * pulse.free_state(x - a, t))
            .sum()
    }

    /// The same state as `∫ T^{F←I}(p) C(p) e^{ipx - iε(p)t} dp`.
    pub fn pointer_final_state_momentum(
        &self,
        pulse: &GaussianPulse,
        x_grid: &SpatialGrid,
        t: f64,
        opts: &QuadratureOptions,
    ) -> Result<TransmittedState> {
        transmitted_state(pulse, self, x_grid, t, opts)
    }

    /// Heavy-pointer Gaussian `K e^{2iĀ2x/σ²} e^{-(x-Ā1)²/σ²}`,
    /// `K = T^{F←I}(0) (2/πσ²)^{1/4} e^{(Ā2² - 2iĀ1Ā2)/σ²}`.
    pub fn gaussian_pointer_approx(&self, pulse: &GaussianPulse, x: f64) -> Result<Complex64> {
        require_static_pointer(pulse)?;
        let a = self.weak_value()?.value;
        Ok(gaussian_pointer(self.overlap().ln(), a, pulse.sigma(), x).exp())
    }
}

impl Amplitude for PostSelectedMeasurement {
    fn ln_amplitude(&self, p: f64) -> Complex64 {
        self.selection_amplitude(p).ln()
    }

    fn amplitude(&self, p: f64) -> Complex64 {
        self.selection_amplitude(p)
    }
}

fn require_static_pointer(pulse: &GaussianPulse) -> Result<()> {
    if pulse.regime() != Dispersion::Static || pulse.p0() != 0.0 || pulse.x0() != 0.0 {
        return Err(Error::InvalidParameter(
            "the heavy-pointer form needs a static pointer at rest at the origin".into(),
        ));
    }
    Ok(())
}

/// `ln` of `e^{ln_t0} (2/πσ²)^{1/4} e^{(a2² - 2i a1 a2)/σ²} e^{2i a2 x/σ²} e^{-(x-a1)²/σ²}`.
fn gaussian_pointer(ln_t0: Complex64, a: Complex64, sigma: f64, x: f64) -> Complex64 {
    let s2 = sigma * sigma;
    let (a1, a2) = (a.re, a.im);
    ln_t0 + 0.25 * (2.0 / (PI * s2)).ln() + Complex64::new(a2 * a2, -2.0 * a1 * a2) / s2 + I * (2.0 * a2 * x / s2)
        - (x - a1) * (x - a1) / s2
}

pub fn selection_amplitude(op: &MeasuredOperator, sel: &SelectionPair, p: f64) -> Result<Complex64> {
    Ok(PostSelectedMeasurement::new(op, sel)?.selection_amplitude(p))
}

pub fn weak_value(op: &MeasuredOperator, sel: &SelectionPair) -> Result<WeakValue> {
    PostSelectedMeasurement::new(op, sel)?.weak_value()
}

pub fn pointer_final_state(op: &MeasuredOperator, sel: &SelectionPair, pulse: &GaussianPulse, x: f64, t: f64) -> Result<Complex64> {
    Ok(PostSelectedMeasurement::new(op, sel)?.pointer_final_state(pulse, x, t))
}

pub fn gaussian_pointer_approx(op: &MeasuredOperator, sel: &SelectionPair, pulse: &GaussianPulse, x: f64) -> Result<Complex64> {
    PostSelectedMeasurement::new(op, sel)?.gaussian_pointer_approx(pulse, x)
}

/// `σ = γ d^{(1+ε)/2}`, for `d >= 1`, `0 < γ < 1`, `0 < ε <= 1`.
pub fn sigma_schedule(d: f64, gamma: f64, epsilon: f64) -> Result<f64> {
    check_schedule(d, gamma, epsilon)?;
    Ok(gamma * d.powf(0.5 * (1.0 + epsilon)))
}

pub(crate) fn check_schedule(d: f64, gamma: f64, epsilon: f64) -> Result<()> {
    if !(d.is_finite() && d >= 1.0) {
        return Err(Error::ScheduleDomain(format!("d must be finite and at least 1, got {d}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::ScheduleDomain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::ScheduleDomain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(())
}

/// The exponent profile `F(q)` of an amplitude `B e^{-iF(q)d}`.
pub trait NrwProfile: Sync {
    fn value(&self, q: f64) -> Complex64;

    /// `F'(q)`; central differences unless overridden.
    fn derivative(&self, q: f64) -> Complex64 {
        let h = 1e-5;
        (self.value(q + h) - self.value(q - h)) / (2.0 * h)
    }
}

/// Profile given by a closure.
pub struct FnProfile<F>(pub F);

impl<F> NrwProfile for FnProfile<F>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    fn value(&self, q: f64) -> Complex64 {
        (self.0)(q)
    }
}

/// `F(q) = p - iκ(p)` at `p = p0 + q`: a barrier of height `W` seen by
/// momenta near `p0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnellingProfile {
    pub height_w: f64,
    pub p0: f64,
}

impl TunnellingProfile {
    fn kappa(&self, p: f64) -> Complex64 {
        let k2 = 2.0 * self.height_w - p * p;
        if k2 >= 0.0 {
            Complex64::new(k2.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-k2).sqrt())
        }
    }

    /// Prefactor `B = 4ip0κ0/(p0 + iκ0)²` of the opaque-barrier amplitude.
    pub fn prefactor(&self) -> Complex64 {
        let k0 = self.kappa(self.p0);
        4.0 * I * self.p0 * k0 / (self.p0 + I * k0).powu(2)
    }
}

impl NrwProfile for TunnellingProfile {
    fn value(&self, q: f64) -> Complex64 {
        let p = self.p0 + q;
        p - I * self.kappa(p)
    }

    fn derivative(&self, q: f64) -> Complex64 {
        let p = self.p0 + q;
        1.0 + I * p / self.kappa(p)
    }
}

/// Amplitudes `B e^{-iF(p)d}` with `Im F(0) < 0`; the weak value `d F'(0)`
/// grows with `d` while the pointer width follows `σ = γ d^{(1+ε)/2}`.
pub struct NrwFamily<F> {
    profile: F,
    b: Complex64,
    d: f64,
}

impl<F: NrwProfile> NrwFamily<F> {
    pub fn new(profile: F, b: Complex64, d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!("large parameter d must be positive, got {d}")));
        }
        if !(b.norm() > 0.0 && b.re.is_finite() && b.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("prefactor B must be finite and nonzero, got {b}")));
        }
        let f0 = profile.value(0.0);
        if !(f0.im < 0.0) {
            return Err(Error::InvalidParameter(format!("profile needs Im F(0) < 0, got {}", f0.im)));
        }
        Ok(Self { profile, b, d })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn prefactor(&self) -> Complex64 {
        self.b
    }

    pub fn profile(&self) -> &F {
        &self.profile
    }

    /// `d F'(0)`.
    pub fn weak_value(&self) -> WeakValue {
        WeakValue {
            value: self.d * self.profile.derivative(0.0),
        }
    }

    /// `ln` of the limiting pointer state
    /// `K e^{2ixF2'/(γ²d^ε)} e^{-(x - dF1')²/(γ²d^{1+ε})}` with
    /// `K = B (2/πγ²d^{1+ε})^{1/4} exp{-iF(0)d + d^{1-ε}(F2'² - 2iF1'F2')/γ²}`.
    pub fn ln_limit_state(&self, gamma: f64, epsilon: f64, x: f64) -> Result<Complex64> {
        let sigma = sigma_schedule(self.d, gamma, epsilon)?;
        let ln_t0 = self.b.ln() - I * self.profile.value(0.0) * self.d;
        Ok(gaussian_pointer(ln_t0, self.weak_value().value, sigma, x))
    }

    pub fn limit_state(&self, gamma: f64, epsilon: f64, x: f64) -> Result<Complex64> {
        self.ln_limit_state(gamma, epsilon, x).map(|l| l.exp())
    }
}

impl<F: NrwProfile> Amplitude for NrwFamily<F> {
    fn ln_amplitude(&self, q: f64) -> Complex64 {
        self.b.ln() - I * self.profile.value(q) * self.d
    }
}

/// Family reproducing an opaque barrier near `p0`.
pub fn tunnelling_family(barrier: &RectangularBarrier, p0: f64) -> Result<NrwFamily<TunnellingProfile>> {
    if !(p0 > 0.0 && barrier.is_tunnelling(p0)) {
        return Err(Error::OutsideTunnellingRegime { p: p0, w: barrier.height() });
    }
    let profile = TunnellingProfile {
        height_w: barrier.height(),
        p0,
    };
    let b = profile.prefactor();
    NrwFamily::new(profile, b, barrier.width())
}

pub fn nrw_limit_state<F: NrwProfile>(family: &NrwFamily<F>, gamma: f64, epsilon: f64, x: f64) -> Result<Complex64> {
    family.limit_state(gamma, epsilon, x)
}

/// High-momentum tail of the pointer integral, in logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailContribution {
    /// `ln |∫_{p_min}^∞ e^{-(p-c)²σ²/4} A(p) e^{ipx} dp|`.
    pub ln_integral: f64,
    /// `ln [√π σ^{-1} erfc(σ(p_min - c)/2)]`.
    pub ln_bound: f64,
    pub n_points: usize,
}

impl TailContribution {
    pub fn integral(&self) -> f64 {
        self.ln_integral.exp()
    }

    pub fn bound(&self) -> f64 {
        self.ln_bound.exp()
    }

    pub fn log10_integral(&self) -> f64 {
        self.ln_integral / std::f64::consts::LN_10
    }

    pub fn log10_bound(&self) -> f64 {
        self.ln_bound / std::f64::consts::LN_10
    }

    pub fn within_bound(&self) -> bool {
        self.ln_integral <= self.ln_bound + 1e-9
    }
}

/// `ln [√π σ^{-1} erfc(σ(p_min - centre)/2)]`.
pub fn ln_tail_bound(sigma: f64, p_min: f64, centre: f64) -> f64 {
    (PI.sqrt() / sigma).ln() + ln_erfc(0.5 * sigma * (p_min - centre))
}

/// Tail integral and its bound for a Gaussian centred at `centre`
/// (`0` for a pointer at rest, `p0` for an incident pulse) evaluated at `x`.
///
/// The integral is carried out in logarithms with the largest term of the
/// integrand factored out, so it stays finite when the value itself does
/// not fit in a double.
pub fn tail_contribution<A: Amplitude>(amplitude: &A, sigma: f64, p_min: f64, centre: f64, x: f64) -> Result<TailContribution> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if !(p_min.is_finite() && p_min > 0.0) {
        return Err(Error::InvalidParameter(format!("p_min must be positive, got {p_min}")));
    }
    let offset = (p_min - centre).max(0.0);
    let p_max = centre + (offset * offset + 200.0 / (sigma * sigma)).sqrt();
    let ln_f = |p: f64| -> Complex64 {
        let q = p - centre;
        amplitude.ln_amplitude(p) + Complex64::new(-q * q * sigma * sigma / 4.0, p * x)
    };
    let eval = |n: usize| -> Result<(f64, f64)> {
        let g = UniformGrid::new(p_min, p_max, n)?;
        let logs: Vec<Complex64> = g.points().map(ln_f).collect();
        let m = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let h = g.spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, l) in logs.iter().enumerate() {
            if l.re == f64::NEG_INFINITY {
                continue;
            }
            let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
            acc += w * (l - m).exp();
        }
        Ok((m + (acc.norm() * h).ln(), m))
    };
    let mut n = 1025;
    let (mut prev, _) = eval(n)?;
    loop {
        let next_n = 2 * n - 1;
        let (cur, _) = eval(next_n)?;
        if (cur - prev).abs() <= 1e-9 || next_n > (1 << 20) {
            return Ok(TailContribution {
                ln_integral: cur,
                ln_bound: ln_tail_bound(sigma, p_min, centre),
                n_points: next_n,
            });
        }
        prev = cur;
        n = next_n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::erfc;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spin(d: f64) -> PostSelectedMeasurement {
        let (op, sel) = spin_half_example(d).unwrap();
        PostSelectedMeasurement::new(&op, &sel).unwrap()
    }

    #[test]
    fn eigenstate_selection() {
        let op = MeasuredOperator::new(vec![0.5, -2.0, 3.0]).unwrap();
        let e1 = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let sel = SelectionPair::new(e1.clone(), e1).unwrap();
        let m = PostSelectedMeasurement::new(&op, &sel).unwrap();
        let t = m.selection_amplitude(0.7);
        assert!((t - Complex64::from_polar(1.0, 1.4)).norm() < 1e-15);
        assert_eq!(m.weak_value().unwrap().value, c(-2.0, 0.0));
    }

    #[test]
    fn amplitude_at_zero_is_overlap() {
        let m = spin(5.0);
        assert!((m.selection_amplitude(0.0) - m.overlap()).norm() < 1e-15);
    }

    #[test]
    fn spin_half_closed_form() {
        let d = 5.0;
        let m = spin(d);
        let n = 1.0 + (1.0 - 1.0 / d).powi(2);
        for p in [-1.3, 0.0, 0.4, 2.9] {
            let expected = (-2.0 * I * f64::sin(p) + Complex64::from_polar(1.0, p) / d) / (2.0 * n).sqrt();
            assert!((m.selection_amplitude(p) - expected).norm() < 1e-14);
            // as printed, up to the global sign of the post-selected state
            let printed = (2.0 * I * f64::sin(p) - Complex64::from_polar(1.0, p) / d) / (2.0 * n).sqrt();
            assert!((m.selection_amplitude(p) + printed).norm() < 1e-14);
        }
    }

    #[test]
    fn spin_half_weak_value() {
        for d in [1.0, 2.0, 5.0, 50.0] {
            let m = spin(d);
            let routes = m.weak_value_routes().unwrap();
            assert!((routes.eigen_sum - c(2.0 * d - 1.0, 0.0)).norm() < 1e-10);
            assert!(routes.max_discrepancy() < 1e-8, "{routes:?}");
        }
    }

    #[test]
    fn no_post_selection_gives_expectation_value() {
        let op = MeasuredOperator::new(vec![1.0, 2.0, -4.0]).unwrap();
        let s = vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)];
        let sel = SelectionPair::new(s.clone(), s).unwrap();
        let w = weak_value(&op, &sel).unwrap().value;
        let expected = 0.36 + 2.0 * 0.2304 - 4.0 * 0.4096;
        assert!((w - c(expected, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn post_selected_eigenstate_yields_eigenvalue() {
        let op = MeasuredOperator::new(vec![1.0, 2.0, -4.0]).unwrap();
        let pre = vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)];
        let post = vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)];
        let sel = SelectionPair::new(pre, post).unwrap();
        assert!((weak_value(&op, &sel).unwrap().value - c(-4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn orthogonal_selection_rejected() {
        let op = MeasuredOperator::pauli_z();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sel = SelectionPair::new(vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]).unwrap();
        assert!(matches!(weak_value(&op, &sel), Err(Error::NearOrthogonalSelection { .. })));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(MeasuredOperator::new(vec![1.0]), Err(Error::Dimension(_))));
        let op = MeasuredOperator::new(vec![1.0, 2.0, 3.0]).unwrap();
        let (_, sel) = spin_half_example(2.0).unwrap();
        assert!(matches!(selection_amplitude(&op, &sel, 0.1), Err(Error::Dimension(_))));
        assert!(SelectionPair::new(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn anomaly_grows_as_overlap_vanishes() {
        let mut last = 0.0;
        for d in [10.0, 100.0, 1000.0, 1e4] {
            let m = spin(d);
            let w = m.weak_value().unwrap().re();
            assert!(w > last);
            last = w;
            assert!(m.overlap().norm() < 1.0 / d);
        }
    }

    #[test]
    fn log_derivatives_scale_like_powers_of_d() {
        let d = 1e3;
        let g = spin(d).log_derivatives().unwrap();
        for (n, v) in g.iter().enumerate() {
            let ratio = v.norm() / d.powi(n as i32 + 1);
            assert!(ratio > 0.5 && ratio < 20.0, "order {}: {ratio}", n + 1);
        }
        // at σ = d the linear term does not dominate
        let sigma = d;
        let terms: Vec<f64> = (0..3)
            .map(|n| g[n].norm() / sigma.powi(n as i32 + 1) / [1.0, 2.0, 6.0][n])
            .collect();
        assert!(terms[1] / terms[0] > 0.99 && terms[2] > terms[0], "{terms:?}");
        // at σ = 100 d it does
        let sigma = 100.0 * d;
        assert!(g[1].norm() / (2.0 * sigma * sigma) < 0.01 * g[0].norm() / sigma);
    }

    #[test]
    fn single_eigenvalue_shifts_pointer() {
        let op = MeasuredOperator::new(vec![3.5, 3.5]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![c(s, 0.0), c(s, 0.0)];
        let sel = SelectionPair::new(v.clone(), v).unwrap();
        let pulse = GaussianPulse::static_pointer(1.5).unwrap();
        for x in [-1.0, 2.0, 3.5, 6.0] {
            let psi = pointer_final_state(&op, &sel, &pulse, x, 0.0).unwrap();
            assert!((psi - pulse.free_state(x - 3.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn heavy_pointer_limits() {
        let pulse = GaussianPulse::static_pointer(4.0).unwrap();
        // real weak value: no phase gradient
        let op = MeasuredOperator::new(vec![1.0, 3.0]).unwrap();
        let v = vec![c(0.6, 0.0), c(0.8, 0.0)];
        let m = PostSelectedMeasurement::new(&op, &SelectionPair::new(v.clone(), v).unwrap()).unwrap();
        let a = m.weak_value().unwrap().value;
        assert_eq!(a.im, 0.0);
        for x in [-3.0, 0.0, 2.0, 5.0] {
            let g = m.gaussian_pointer_approx(&pulse, x).unwrap();
            let gauss = (2.0 / (PI * 16.0)).powf(0.25) * (-(x - a.re) * (x - a.re) / 16.0f64).exp();
            assert!((g - gauss).norm() < 1e-15);
        }
        // imaginary weak value: unshifted Gaussian with a linear phase
        let ln = gaussian_pointer(c(0.0, 0.0), c(0.0, 0.7), 4.0, 1.3);
        let expected = c(0.49 / 16.0, 2.0 * 0.7 * 1.3 / 16.0) + 0.25 * (2.0 / (PI * 16.0)).ln() - 1.69 / 16.0;
        assert!((ln - expected).norm() < 1e-15);
        let moving = GaussianPulse::massive(4.0, 1.0, 0.0).unwrap();
        assert!(m.gaussian_pointer_approx(&moving, 0.0).is_err());
    }

    #[test]
    fn heavy_pointer_approximation_for_spin() {
        let m = spin(2.0);
        let sigma = 200.0;
        let pulse = GaussianPulse::static_pointer(sigma).unwrap();
        let g = SpatialGrid::new(-8.0 * sigma, 8.0 * sigma, 4001).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for x in g.points() {
            let exact = m.pointer_final_state(&pulse, x, 0.0);
            let approx = m.gaussian_pointer_approx(&pulse, x).unwrap();
            num += (exact - approx).norm_sqr();
            den += exact.norm_sqr();
        }
        assert!((num / den).sqrt() <= 1e-3, "{}", (num / den).sqrt());
    }

    #[test]
    fn strong_and_weak_pointer_readings() {
        let d = 2.0;
        let m = spin(d);
        let strong = GaussianPulse::static_pointer(0.05).unwrap();
        let cs = m.coefficients();
        for (a, cn) in m.eigenvalues().iter().zip(cs) {
            let rho = m.pointer_final_state(&strong, *a, 0.0).norm_sqr();
            let expected = cn.norm_sqr() * strong.free_state(0.0, 0.0).norm_sqr();
            assert!((rho - expected).abs() < 1e-12 * expected);
        }
        assert!(m.pointer_final_state(&strong, 0.0, 0.0).norm() < 1e-100);
    }

    #[test]
    fn schedule() {
        let s = sigma_schedule(1000.0, 0.8, 0.85).unwrap();
        assert!((s - 476.529_714_823_208_5).abs() < 1e-9);
        assert!((1000.0 + 10.0 * s - 5765.297).abs() < 1e-3);
        for d in [1.0, 10.0, 1e5] {
            assert!((sigma_schedule(d, 0.3, 1.0).unwrap() / d - 0.3).abs() < 1e-15);
        }
        let mut last = f64::INFINITY;
        for d in [1e2, 1e4, 1e6, 1e8] {
            let r = sigma_schedule(d, 0.8, 0.5).unwrap() / d;
            assert!(r < last);
            last = r;
        }
        assert!((last - 0.8e-2).abs() < 1e-12);
        for (d, g, e) in [(1000.0, 1.0, 0.5), (1000.0, 0.5, 0.0), (1000.0, 0.5, 1.2), (0.5, 0.5, 0.5)] {
            assert!(matches!(sigma_schedule(d, g, e), Err(Error::ScheduleDomain(_))));
        }
    }

    #[test]
    fn nrw_state_shape() {
        let fam = NrwFamily::new(FnProfile(|q: f64| c(q, -1.0 + 0.1 * q * q)), c(1.0, 0.0), 400.0).unwrap();
        let (gamma, eps) = (0.5, 0.8);
        let sigma = sigma_schedule(400.0, gamma, eps).unwrap();
        let g = SpatialGrid::new(400.0 - 3.0 * sigma, 400.0 + 3.0 * sigma, 6001).unwrap();
        let rho: Vec<f64> = g.points().map(|x| fam.ln_limit_state(gamma, eps, x).unwrap().re).collect();
        let imax = rho.iter().enumerate().fold(0, |b, (i, r)| if *r > rho[b] { i } else { b });
        assert!((g.point(imax) - 400.0).abs() <= g.spacing());
        // F2' = 0: no phase gradient
        let l1 = fam.ln_limit_state(gamma, eps, 390.0).unwrap();
        let l2 = fam.ln_limit_state(gamma, eps, 410.0).unwrap();
        assert!((l1.im - l2.im).abs() < 1e-6);
        assert!(NrwFamily::new(FnProfile(|q: f64| c(q, 0.5)), c(1.0, 0.0), 10.0).is_err());
    }

    #[test]
    fn tail_bound_values() {
        let b = ln_tail_bound(2.0, 2.0, 0.0).exp();
        let expected = PI.sqrt() / 2.0 * erfc(2.0);
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 4.145_534_69e-3).abs() < 1e-11);
        let b0 = ln_tail_bound(3.0, 1e-12, 0.0).exp();
        assert!((b0 - PI.sqrt() / 3.0).abs() < 1e-11);
    }

    #[test]
    fn tail_integral_within_bound() {
        let m = spin(5.0);
        for &(sigma, p_min) in &[(2.0, 2.0), (1.0, 0.5), (10.0, 0.3)] {
            let tc = tail_contribution(&m, sigma, p_min, 0.0, 9.0).unwrap();
            assert!(tc.within_bound(), "{tc:?}");
        }
        let barrier = RectangularBarrier::new(1.0, 1000.0).unwrap();
        let sigma = sigma_schedule(1000.0, 0.8, 0.85).unwrap();
        let tc = tail_contribution(&barrier, sigma, 2f64.sqrt(), 1.0, 1000.0).unwrap();
        assert!(tc.within_bound());
        // far below the tunnelled pulse, whose modulus is ~ e^{-κ0 d} = e^{-1000}
        assert!(tc.ln_integral < -5000.0, "{tc:?}");
    }

    #[test]
    fn tunnelling_family_matches_opaque_barrier() {
        let barrier = RectangularBarrier::new(1.0, 40.0).unwrap();
        let fam = tunnelling_family(&barrier, 1.0).unwrap();
        for q in [-0.05, 0.0, 0.03] {
            let a = fam.ln_amplitude(q);
            let b = barrier.ln_asymptotic_transmission(1.0 + q).unwrap();
            // prefactor frozen at p0 against one evaluated at p0 + q
            assert!((a.re - b.re).abs() < 0.2 && (a.re - b.re).abs() < 3.0 * q.abs() + 1e-12);
        }
        let w = fam.weak_value().value;
        assert!((w - c(40.0, 40.0)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn amplitude_bounded(
            a in prop::collection::vec(-5.0f64..5.0, 4),
            pre in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            post in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            p in -20.0f64..20.0,
        ) {
            let op = MeasuredOperator::new(a).unwrap();
            let pre: Vec<_> = pre.into_iter().map(|(r, i)| c(r, i)).collect();
            let post: Vec<_> = post.into_iter().map(|(r, i)| c(r, i)).collect();
            prop_assume!(norm(&pre) > 1e-3 && norm(&post) > 1e-3);
            let sel = SelectionPair::normalized(pre, post).unwrap();
            prop_assert!(selection_amplitude(&op, &sel, p).unwrap().norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn integer_spectrum_is_periodic(p in -10.0f64..10.0, d in 1.0f64..100.0) {
            let m = spin(d);
            let diff = m.selection_amplitude(p + 2.0 * PI) - m.selection_amplitude(p);
            prop_assert!(diff.norm() < 1e-12);
        }
    }
}
