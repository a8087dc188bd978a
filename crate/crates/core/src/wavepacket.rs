//! Gaussian pulses and their propagation.
//!
//! A pulse is specified by its momentum distribution
//! `C(p) = σ^{1/2} (2π)^{-3/4} exp[-(p-p0)²σ²/4 - i(p-p0)x0]`, normalised so
//! that `Ψ⁰(x, t) = ∫ C(p) e^{ipx - iε(p)t} dp` has unit norm. After an
//! amplitude `A(p)` acts on it the pulse becomes `∫ A(p) C(p) e^{ipx - iε(p)t} dp`,
//! evaluated here by trapezoidal quadrature with an n-versus-2n convergence
//! check, or equivalently as a superposition of shifted free pulses weighted
//! by the shift spectrum of `A`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::amplitude::Amplitude;
use crate::barrier::RectangularBarrier;
use crate::error::{Error, Result};
use crate::numerics::{erfc, relative_l2, ComplexField, MomentumGrid, SpatialGrid, UniformGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dispersion relation `ε(p)` of the propagating pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Dispersion {
    /// `ε = p²/2`, unit mass.
    Massive,
    /// `ε = c p`.
    Photon { c: f64 },
    /// `ε = 0`: an infinitely heavy pointer that does not move or spread.
    Static,
}

impl Dispersion {
    pub fn energy(&self, p: f64) -> f64 {
        match *self {
            Dispersion::Massive => 0.5 * p * p,
            Dispersion::Photon { c } => c * p,
            Dispersion::Static => 0.0,
        }
    }
}

/// `σ_t² = σ² + 2it` (massive), `σ²` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexWidth {
    pub sigma_t_sq: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianPulse {
    sigma: f64,
    p0: f64,
    x0: f64,
    regime: Dispersion,
}

impl GaussianPulse {
    pub fn new(sigma: f64, p0: f64, x0: f64, regime: Dispersion) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("pulse width sigma must be positive, got {sigma}")));
        }
        if !p0.is_finite() {
            return Err(Error::InvalidParameter(format!("mean momentum must be finite, got {p0}")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidParameter(format!("initial centre must be finite, got {x0}")));
        }
        if let Dispersion::Photon { c } = regime {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter(format!("photon speed must be positive, got {c}")));
            }
        }
        Ok(Self { sigma, p0, x0, regime })
    }

    /// Massive pulse of unit mass.
    pub fn massive(sigma: f64, p0: f64, x0: f64) -> Result<Self> {
        Self::new(sigma, p0, x0, Dispersion::Massive)
    }

    /// Heavy pointer at rest at the origin.
    pub fn static_pointer(sigma: f64) -> Result<Self> {
        Self::new(sigma, 0.0, 0.0, Dispersion::Static)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn regime(&self) -> Dispersion {
        self.regime
    }

    pub fn with_x0(&self, x0: f64) -> Self {
        Self { x0, ..*self }
    }

    /// `2/σ > 0.2 p0`: the momentum spread is not small against `p0`.
    pub fn narrow_momentum_warning(&self) -> bool {
        2.0 / self.sigma > 0.2 * self.p0.abs()
    }

    /// True when the pulse starts on the incident side of a barrier at `x >= 0`.
    pub fn starts_left(&self) -> bool {
        self.x0 < 0.0
    }

    pub fn energy(&self, p: f64) -> f64 {
        self.regime.energy(p)
    }

    /// Group velocity of the envelope.
    pub fn velocity(&self) -> f64 {
        match self.regime {
            Dispersion::Massive => self.p0,
            Dispersion::Photon { c } => c,
            Dispersion::Static => 0.0,
        }
    }

    /// Centre of the free envelope at time `t`.
    pub fn centre(&self, t: f64) -> f64 {
        self.x0 + self.velocity() * t
    }

    pub fn complex_width(&self, t: f64) -> ComplexWidth {
        let s2 = self.sigma * self.sigma;
        let sigma_t_sq = match self.regime {
            Dispersion::Massive => Complex64::new(s2, 2.0 * t),
            _ => Complex64::new(s2, 0.0),
        };
        ComplexWidth { sigma_t_sq }
    }

    /// Length scale of `|Ψ⁰|` at time `t`: `|σ_t²|/σ`.
    pub fn spatial_extent(&self, t: f64) -> f64 {
        self.complex_width(t).sigma_t_sq.norm() / self.sigma
    }

    pub fn ln_momentum_distribution(&self, p: f64) -> Complex64 {
        let q = p - self.p0;
        Complex64::new(
            0.5 * self.sigma.ln() - 0.75 * (2.0 * PI).ln() - q * q * self.sigma * self.sigma / 4.0,
            -q * self.x0,
        )
    }

    pub fn momentum_distribution(&self, p: f64) -> Complex64 {
        self.ln_momentum_distribution(p).exp()
    }

    pub fn free_envelope(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        match self.regime {
            Dispersion::Massive => {
                let st2 = self.complex_width(t).sigma_t_sq;
                let xr = x - self.p0 * t - self.x0;
                (2.0 * s2 / PI).powf(0.25) / st2.sqrt() * (-(xr * xr) / st2).exp()
            }
            Dispersion::Photon { c } => {
                let xr = x - c * t - self.x0;
                Complex64::new((2.0 / (PI * s2)).powf(0.25) * (-(xr * xr) / s2).exp(), 0.0)
            }
            Dispersion::Static => {
                let xr = x - self.x0;
                Complex64::new((2.0 / (PI * s2)).powf(0.25) * (-(xr * xr) / s2).exp(), 0.0)
            }
        }
    }

    pub fn carrier(&self, x: f64, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.p0 * x - self.energy(self.p0) * t)
    }

    /// `Ψ⁰(x, t) = e^{ip0x - iε(p0)t} G⁰(x, t)`.
    pub fn free_state(&self, x: f64, t: f64) -> Complex64 {
        self.carrier(x, t) * self.free_envelope(x, t)
    }

    pub fn free_field(&self, grid: &SpatialGrid, t: f64) -> Result<ComplexField<SpatialGrid>> {
        ComplexField::from_fn(*grid, |x| self.free_state(x, t))
    }
}

/// Controls for [`transmitted_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Minimum half-width of the momentum window around `p0`, in units of `1/σ`.
    pub half_width: f64,
    /// The window is widened to every momentum where `|A C|` exceeds
    /// `e^{-log_dynamic_range}` times its maximum.
    pub log_dynamic_range: f64,
    /// Relative L2 change between successive refinements accepted as converged.
    pub tolerance: f64,
    /// Upper limit on quadrature nodes.
    pub max_points: usize,
    /// Starting number of nodes; derived from the x-span when `None`.
    pub initial_points: Option<usize>,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            half_width: 12.0,
            log_dynamic_range: 36.0,
            tolerance: 1e-10,
            max_points: (1 << 20) + 1,
            initial_points: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub rel_change: f64,
    /// Weight of `|C(p)|²` outside the integration window, as a fraction of
    /// the total.
    pub neglected_weight: f64,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone)]
pub struct TransmittedState {
    pub field: ComplexField<SpatialGrid>,
    /// Momentum nodes of the accepted (finer) quadrature.
    pub momentum_grid: MomentumGrid,
    pub report: ConvergenceReport,
}

/// Momentum interval carrying the product `A(p) C(p)`.
pub fn momentum_window<A: Amplitude>(pulse: &GaussianPulse, amplitude: &A, opts: &QuadratureOptions) -> Result<(f64, f64)> {
    let s = pulse.sigma();
    let p0 = pulse.p0();
    let floor = amplitude.domain_floor();
    let mut lo = p0 - opts.half_width / s;
    let mut hi = p0 + opts.half_width / s;

    let scan_lo = p0 - 5.0 * opts.half_width / s;
    let scan_hi = p0 + 5.0 * opts.half_width / s;
    let n_scan = 4097;
    let h = (scan_hi - scan_lo) / (n_scan - 1) as f64;
    let logs: Vec<(f64, f64)> = (0..n_scan)
        .map(|i| scan_lo + i as f64 * h)
        .filter(|&p| floor.is_none_or(|f| p > f))
        .map(|p| (p, (amplitude.ln_amplitude(p) + pulse.ln_momentum_distribution(p)).re))
        .filter(|(_, l)| l.is_finite())
        .collect();
    let max = logs.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        for &(p, l) in &logs {
            if l >= max - opts.log_dynamic_range {
                lo = lo.min(p - h);
                hi = hi.max(p + h);
            }
        }
    }
    if let Some(f) = floor {
        lo = lo.max(f);
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "momentum window [{lo}, {hi}] is empty after clipping"
        )));
    }
    Ok((lo, hi))
}

fn neglected_weight(pulse: &GaussianPulse, lo: f64, hi: f64) -> f64 {
    let s = pulse.sigma() / 2f64.sqrt();
    0.5 * erfc((hi - pulse.p0()) * s) + 0.5 * erfc((pulse.p0() - lo) * s)
}

fn quadrature<A: Amplitude>(
    pulse: &GaussianPulse,
    amplitude: &A,
    x_grid: &SpatialGrid,
    t: f64,
    p_grid: &UniformGrid,
) -> Vec<Complex64> {
    let h = p_grid.spacing();
    let n = p_grid.n_points();
    let weights: Vec<(f64, Complex64)> = p_grid
        .points()
        .enumerate()
        .map(|(k, p)| {
            let w = if k == 0 || k + 1 == n { 0.5 * h } else { h };
            let l = amplitude.ln_amplitude(p) + pulse.ln_momentum_distribution(p) - I * (pulse.energy(p) * t);
            let v = if l.re == f64::NEG_INFINITY { Complex64::new(0.0, 0.0) } else { w * l.exp() };
            (p, v)
        })
        .collect();
    let xs: Vec<f64> = x_grid.points().collect();
    xs.par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(p, v) in &weights {
                acc += v * Complex64::from_polar(1.0, p * x);
            }
            acc
        })
        .collect()
}

/// `Ψ(x, t) = ∫ A(p) C(p) e^{ipx - iε(p)t} dp` on `x_grid`.
///
/// The node count starts from the smallest power of two whose period
/// `2π/Δp` holds the x-span with margin, and doubles until two successive
/// results agree to `opts.tolerance` in relative L2.
pub fn transmitted_state<A: Amplitude>(
    pulse: &GaussianPulse,
    amplitude: &A,
    x_grid: &SpatialGrid,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<TransmittedState> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let (lo, hi) = momentum_window(pulse, amplitude, opts)?;
    let centre = pulse.centre(t);
    let span = (x_grid.min() - centre).abs().max((x_grid.max() - centre).abs());
    let period = 2.0 * (span + 20.0 * pulse.spatial_extent(t));
    let intervals = match opts.initial_points {
        Some(n) => n.saturating_sub(1).max(2).next_power_of_two(),
        None => (((hi - lo) * period / (2.0 * PI)).ceil() as usize).max(256).next_power_of_two(),
    };
    let mut grid = UniformGrid::new(lo, hi, intervals + 1)?;
    let mut coarse = quadrature(pulse, amplitude, x_grid, t, &grid);
    let mut n_coarse = grid.n_points();
    loop {
        let fine_grid = grid.refined();
        if fine_grid.n_points() > opts.max_points {
            let rel_change = f64::INFINITY;
            return Err(Error::QuadratureNotConverged {
                rel_change,
                n_points: grid.n_points(),
                tolerance: opts.tolerance,
            });
        }
        let fine = quadrature(pulse, amplitude, x_grid, t, &fine_grid);
        let rel_change = relative_l2(&coarse, &fine);
        let converged = rel_change <= opts.tolerance || fine.iter().all(|v| *v == Complex64::new(0.0, 0.0));
        if converged {
            let report = ConvergenceReport {
                n_coarse,
                n_fine: fine_grid.n_points(),
                rel_change: if rel_change.is_finite() { rel_change } else { 0.0 },
                neglected_weight: neglected_weight(pulse, lo, hi),
                p_min: lo,
                p_max: hi,
            };
            return Ok(TransmittedState {
                field: ComplexField::new(*x_grid, fine)?,
                momentum_grid: MomentumGrid::from(fine_grid),
                report,
            });
        }
        if fine_grid.refined().n_points() > opts.max_points {
            return Err(Error::QuadratureNotConverged {
                rel_change,
                n_points: fine_grid.n_points(),
                tolerance: opts.tolerance,
            });
        }
        grid = fine_grid;
        coarse = fine;
        n_coarse = grid.n_points();
    }
}

/// Power-of-two momentum grid sharing the nodes of a converged quadrature,
/// as needed to compute the matching shift spectrum.
pub fn spectral_grid(state: &TransmittedState) -> Result<MomentumGrid> {
    let g = state.momentum_grid;
    let n = (g.n_points() - 1).next_power_of_two();
    Ok(MomentumGrid::from(UniformGrid::from_spacing(g.min(), g.spacing(), n)?))
}

/// `Ψ(x, t) = Σ_j ξ(y_j) Ψ⁰(x - y_j, t) Δy` for one `x`.
pub fn shift_superposition(pulse: &GaussianPulse, xi: &ComplexField<SpatialGrid>, x: f64, t: f64) -> Result<Complex64> {
    let grid = xi.grid();
    let w = pulse.spatial_extent(t);
    let rel = x - pulse.centre(t);
    let (y_lo, y_hi) = (grid.min(), grid.max());
    if rel < y_lo + 10.0 * w || rel > y_hi - 10.0 * w {
        return Err(Error::ShiftWindowTooNarrow {
            y_min: y_lo,
            y_max: y_hi,
            x_rel: rel,
        });
    }
    let dy = grid.spacing();
    let mut acc = Complex64::new(0.0, 0.0);
    for (y, v) in xi.iter() {
        acc += v * pulse.free_state(x - y, t);
    }
    Ok(acc * dy)
}

pub fn shift_superposition_field(
    pulse: &GaussianPulse,
    xi: &ComplexField<SpatialGrid>,
    x_grid: &SpatialGrid,
    t: f64,
) -> Result<ComplexField<SpatialGrid>> {
    let xs: Vec<f64> = x_grid.points().collect();
    let values = xs
        .par_iter()
        .map(|&x| shift_superposition(pulse, xi, x, t))
        .collect::<Result<Vec<_>>>()?;
    ComplexField::new(*x_grid, values)
}

/// Small parameter `|2d σ^{-2} F''(p0)| = 4Wd/(σ²κ0³)` of the linear
/// expansion of `ln T` about `p0`.
pub fn linear_expansion_parameter(pulse: &GaussianPulse, barrier: &RectangularBarrier) -> Result<f64> {
    let p0 = pulse.p0();
    if !(p0 > 0.0 && barrier.is_tunnelling(p0)) {
        return Err(Error::OutsideTunnellingRegime { p: p0, w: barrier.height() });
    }
    let k0 = (2.0 * barrier.height() - p0 * p0).sqrt();
    let s = pulse.sigma();
    Ok(4.0 * barrier.height() * barrier.width() / (s * s * k0.powi(3)))
}

/// `ln` of the complex-shifted Gaussian
/// `T(p0) (2/πσ²)^{1/4} e^{(ȳ2² - 2iȳ1ȳ2)/σ²} e^{i(p0x - ε0t)} e^{2iȳ2X/σ²} e^{-(X-ȳ1)²/σ²}`
/// with `ȳ1 = d`, `ȳ2 = p0d/κ0` and `X = x - p0t - x0`; spreading is neglected.
pub fn ln_approximate_transmitted(pulse: &GaussianPulse, barrier: &RectangularBarrier, x: f64, t: f64) -> Result<Complex64> {
    let p0 = pulse.p0();
    if !(p0 > 0.0 && barrier.is_tunnelling(p0)) {
        return Err(Error::OutsideTunnellingRegime { p: p0, w: barrier.height() });
    }
    let d = barrier.width();
    let k0 = (2.0 * barrier.height() - p0 * p0).sqrt();
    let (y1, y2) = (d, p0 * d / k0);
    let s2 = pulse.sigma() * pulse.sigma();
    let big_x = x - p0 * t - pulse.x0();
    let ln_k = barrier.ln_transmission(p0)? + 0.25 * (2.0 / (PI * s2)).ln() + Complex64::new(y2 * y2, -2.0 * y1 * y2) / s2;
    let phase = Complex64::new(0.0, p0 * x - pulse.energy(p0) * t + 2.0 * y2 * big_x / s2);
    Ok(ln_k + phase - (big_x - y1) * (big_x - y1) / s2)
}

pub fn approximate_transmitted(pulse: &GaussianPulse, barrier: &RectangularBarrier, x: f64, t: f64) -> Result<Complex64> {
    ln_approximate_transmitted(pulse, barrier, x, t).map(|l| l.exp())
}

/// Sub-grid maximum of `|ψ|²` by a parabola through the three samples
/// around the largest one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub position: f64,
    pub density: f64,
    pub index: usize,
}

pub fn density_peak(field: &ComplexField<SpatialGrid>) -> Result<Peak> {
    let rho: Vec<f64> = field.values().iter().map(|v| v.norm_sqr()).collect();
    let (index, _) = rho
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &r)| if r > best.1 { (i, r) } else { best });
    let grid = field.grid();
    if index == 0 || index + 1 == rho.len() {
        return Err(Error::WindowTooNarrow(format!(
            "density maximum at grid edge x = {}",
            grid.point(index)
        )));
    }
    let (a, b, c) = (rho[index - 1], rho[index], rho[index + 1]);
    let h = grid.spacing();
    let denom = a - 2.0 * b + c;
    let offset = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let density = b - 0.25 * (a - c) * offset;
    Ok(Peak {
        position: grid.point(index) + offset * h,
        density,
        index,
    })
}

/// Width `w` of `|ψ|² ∝ exp(-(x - x_p)²/w²)` from a least-squares parabola
/// fit to `ln |ψ|²` over `x_p ± half_range`.
pub fn log_parabola_width(field: &ComplexField<SpatialGrid>, peak: &Peak, half_range: f64) -> Result<f64> {
    let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for (x, v) in field.iter() {
        let u = x - peak.position;
        let r = v.norm_sqr();
        if u.abs() > half_range || r <= 0.0 {
            continue;
        }
        let l = r.ln();
        s0 += 1.0;
        s1 += u;
        s2 += u * u;
        s3 += u * u * u;
        s4 += u * u * u * u;
        t0 += l;
        t1 += u * l;
        t2 += u * u * l;
    }
    if s0 < 3.0 {
        return Err(Error::WindowTooNarrow(format!(
            "fewer than 3 samples within ±{half_range} of the peak"
        )));
    }
    // normal equations for l ≈ a0 + a1 u + a2 u², solved by Cramer's rule
    let m = [[s0, s1, s2], [s1, s2, s3], [s2, s3, s4]];
    let rhs = [t0, t1, t2];
    let det = det3(&m);
    let mut m2 = m;
    for (row, r) in m2.iter_mut().zip(rhs) {
        row[2] = r;
    }
    let a2 = det3(&m2) / det;
    if !(a2 < 0.0) {
        return Err(Error::WindowTooNarrow("log-density is not concave at the peak".into()));
    }
    Ok(1.0 / (-a2).sqrt())
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{PureShift, Unit};
    use crate::numerics::{integrate, shift_spectrum, ShiftWindow};
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, n: usize) -> SpatialGrid {
        SpatialGrid::new(lo, hi, n).unwrap()
    }

    #[test]
    fn momentum_distribution_shape() {
        let pulse = GaussianPulse::massive(3.0, 1.5, 0.0).unwrap();
        let peak = pulse.momentum_distribution(1.5);
        assert!((peak.re - 3f64.sqrt() / (2.0 * PI).powf(0.75)).abs() < 1e-15 && peak.im == 0.0);
        let r = pulse.momentum_distribution(1.5 + 2f64.sqrt() / 3.0).norm() / peak.norm();
        assert!((r - (-0.5f64).exp()).abs() < 1e-14);
        let pulse = GaussianPulse::massive(3.0, 1.5, -7.0).unwrap();
        let g = MomentumGrid::new(-6.0, 9.0, 8193).unwrap();
        let f = ComplexField::from_fn(g, |p| Complex64::new(pulse.momentum_distribution(p).norm_sqr(), 0.0)).unwrap();
        assert!((integrate(&f).unwrap().re - 1.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn invalid_pulses() {
        assert!(GaussianPulse::massive(0.0, 1.0, -1.0).is_err());
        assert!(GaussianPulse::massive(-1.0, 1.0, -1.0).is_err());
        assert!(GaussianPulse::new(1.0, 1.0, -1.0, Dispersion::Photon { c: 0.0 }).is_err());
    }

    #[test]
    fn envelope_at_origin_of_time() {
        for regime in [Dispersion::Massive, Dispersion::Photon { c: 2.0 }, Dispersion::Static] {
            let pulse = GaussianPulse::new(2.5, 1.0, -4.0, regime).unwrap();
            let g = pulse.free_envelope(-4.0, 0.0);
            assert!((g - (2.0 / (PI * 6.25)).powf(0.25)).norm() < 1e-15);
            let x = -3.1;
            let psi = pulse.free_state(x, 0.0);
            let gauss = (2.0 / (PI * 6.25)).powf(0.25) * (-(x + 4.0) * (x + 4.0) / 6.25f64).exp();
            assert!((psi - Complex64::from_polar(gauss, x)).norm() < 1e-15);
        }
    }

    #[test]
    fn free_norm_conserved() {
        let pulse = GaussianPulse::massive(4.0, 1.0, -30.0).unwrap();
        for t in [0.0, 16.0, 160.0] {
            let g = grid(-800.0, 800.0, 40001);
            let f = pulse.free_field(&g, t).unwrap();
            assert!((f.norm_sqr_integral() - 1.0).abs() < 1e-10, "t={t}");
            let env = ComplexField::from_fn(g, |x| pulse.free_envelope(x, t)).unwrap();
            for (a, b) in f.values().iter().zip(env.values()) {
                assert!((a.norm() - b.norm()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn free_peak_moves_with_group_velocity() {
        let pulse = GaussianPulse::massive(5.0, 1.3, -40.0).unwrap();
        let t = 60.0;
        let g = grid(-40.0, 120.0, 1601);
        let f = pulse.free_field(&g, t).unwrap();
        let peak = density_peak(&f).unwrap();
        assert!((peak.position - (-40.0 + 1.3 * t)).abs() < g.spacing());
    }

    #[test]
    fn unit_amplitude_is_free_propagation() {
        let pulse = GaussianPulse::massive(10.0, 1.0, -50.0).unwrap();
        let t = 80.0;
        let g = grid(-60.0, 150.0, 421);
        let st = transmitted_state(&pulse, &Unit, &g, t, &QuadratureOptions::default()).unwrap();
        for (x, v) in st.field.iter() {
            assert!((v - pulse.free_state(x, t)).norm() < 1e-9);
        }
        assert!(st.report.rel_change <= 1e-10);
        assert!(st.report.neglected_weight < 1e-30);
    }

    #[test]
    fn pure_shift_translates() {
        let pulse = GaussianPulse::massive(10.0, 1.0, -50.0).unwrap();
        let (t, y0) = (40.0, 17.5);
        let g = grid(-60.0, 120.0, 361);
        let st = transmitted_state(&pulse, &PureShift { shift: y0 }, &g, t, &QuadratureOptions::default()).unwrap();
        for (x, v) in st.field.iter() {
            assert!((v - pulse.free_state(x - y0, t)).norm() < 1e-9);
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let pulse = GaussianPulse::massive(10.0, 1.0, -50.0).unwrap();
        let g = grid(-60.0, 120.0, 50);
        let opts = QuadratureOptions {
            initial_points: Some(9),
            max_points: 33,
            ..Default::default()
        };
        let e = transmitted_state(&pulse, &Unit, &g, 0.0, &opts).unwrap_err();
        assert!(e.is_convergence_failure());
    }

    #[test]
    fn delta_spectra_give_shifted_free_states() {
        let pulse = GaussianPulse::massive(3.0, 1.0, -10.0).unwrap();
        let t = 5.0;
        let n = 512;
        let dy = 0.25;
        let y_grid = SpatialGrid::from(UniformGrid::from_spacing(-(n as f64 / 2.0) * dy, dy, n).unwrap());
        for j0 in [256usize, 300] {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[j0] = Complex64::new(1.0 / dy, 0.0);
            let xi = ComplexField::new(y_grid, v).unwrap();
            let y0 = y_grid.point(j0);
            for x in [-8.0, -5.0, 0.0, 4.0] {
                let s = shift_superposition(&pulse, &xi, x, t).unwrap();
                assert!((s - pulse.free_state(x - y0, t)).norm() < 1e-14);
            }
        }
        let narrow = SpatialGrid::new(-1.0, 1.0, 8).unwrap();
        let xi = ComplexField::from_fn(narrow, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(
            shift_superposition(&pulse, &xi, 30.0, t),
            Err(Error::ShiftWindowTooNarrow { .. })
        ));
    }

    #[test]
    fn barrier_representations_agree() {
        let barrier = RectangularBarrier::new(1.0, 5.0).unwrap();
        let pulse = GaussianPulse::massive(50.0, 1.0, -250.0).unwrap();
        let t = (5.0 + 10.0 * 50.0) / 1.0;
        let c = pulse.centre(t);
        let g = grid(c - 200.0, c + 200.0, 401);
        let st = transmitted_state(&pulse, &barrier, &g, t, &QuadratureOptions::default()).unwrap();
        let pg = spectral_grid(&st).unwrap();
        let tp = ComplexField::from_fn(pg, |p| barrier.amplitude(p)).unwrap();
        let xi = shift_spectrum(&tp, ShiftWindow::symmetric()).unwrap();
        let alt = shift_superposition_field(&pulse, &xi, &g, t).unwrap();
        let e = relative_l2(alt.values(), st.field.values());
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn approximation_peaks_advanced_by_width() {
        let d = 100.0;
        let barrier = RectangularBarrier::new(1.0, d).unwrap();
        let sigma = 0.8 * d.powf(0.925);
        let pulse = GaussianPulse::massive(sigma, 1.0, -5.0 * sigma).unwrap();
        let t = (d + 10.0 * sigma) / 1.0;
        let c = pulse.centre(t);
        let g = grid(c - 4.0 * sigma, c + 4.0 * sigma + d, 2001);
        let scale = barrier.ln_asymptotic_transmission(1.0).unwrap().re;
        let f = ComplexField::from_fn(g, |x| (ln_approximate_transmitted(&pulse, &barrier, x, t).unwrap() - scale).exp()).unwrap();
        let peak = density_peak(&f).unwrap();
        assert!((peak.position - c - d).abs() < 1e-6 * d);
        let w = log_parabola_width(&f, &peak, sigma / 4.0).unwrap();
        assert!((w - sigma / 2f64.sqrt()).abs() < 1e-6 * sigma);
        assert!(matches!(
            approximate_transmitted(&pulse, &RectangularBarrier::new(0.4, d).unwrap(), c, t),
            Err(Error::OutsideTunnellingRegime { .. })
        ));
    }

    #[test]
    fn peak_at_edge_is_rejected() {
        let g = grid(0.0, 1.0, 11);
        let f = ComplexField::from_fn(g, |x| Complex64::new(x, 0.0)).unwrap();
        assert!(matches!(density_peak(&f), Err(Error::WindowTooNarrow(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn translation_covariance(a in -20.0f64..20.0, y0 in -5.0f64..5.0) {
            let pulse = GaussianPulse::massive(6.0, 1.0, -30.0).unwrap();
            let t = 12.0;
            let g = grid(-60.0, 40.0, 101);
            let gs = grid(-60.0 + a, 40.0 + a, 101);
            let amp = PureShift { shift: y0 };
            let opts = QuadratureOptions::default();
            let base = transmitted_state(&pulse, &amp, &g, t, &opts).unwrap();
            let moved = transmitted_state(&pulse.with_x0(-30.0 + a), &amp, &gs, t, &opts).unwrap();
            // C(p) carries e^{-i(p-p0)x0}, so moving x0 also multiplies by e^{ip0 a}
            let phase = Complex64::from_polar(1.0, a);
            for (u, v) in base.field.values().iter().zip(moved.field.values()) {
                prop_assert!((u * phase - v).norm() < 1e-9);
            }
        }

        #[test]
        fn transmission_reduces_norm(w in 0.2f64..1.5, d in 0.5f64..4.0) {
            let barrier = RectangularBarrier::new(w, d).unwrap();
            let pulse = GaussianPulse::massive(8.0, 1.0, -40.0).unwrap();
            let t = 60.0;
            let c = pulse.centre(t);
            let g = grid(c - 80.0, c + 80.0, 1601);
            let st = transmitted_state(&pulse, &barrier, &g, t, &QuadratureOptions::default()).unwrap();
            prop_assert!(st.field.norm_sqr_integral() <= 1.0 + 1e-9);
        }
    }
}
