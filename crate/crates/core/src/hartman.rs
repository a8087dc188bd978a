//! Experiment drivers for the Hartman effect.
//!
//! Along a scan in the barrier width `d`, the pulse width follows
//! `σ = γ d^{(1+ε)/2}` so that the momentum spread shrinks while the
//! transmitted peak, advanced by roughly `d`, stays separated from the free
//! one by more than its own width. All transmission probabilities are kept as
//! logarithms.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::amplitude::{Amplitude, Scaled};
use crate::barrier::{RectangularBarrier, ShiftMethod};
use crate::error::{Error, Result};
use crate::measurement::{check_schedule, sigma_schedule, tail_contribution};
use crate::numerics::{log_sum_exp, ComplexField, SpatialGrid, UniformGrid};
use crate::wavepacket::{
    density_peak, linear_expansion_parameter, ln_approximate_transmitted, log_parabola_width, transmitted_state,
    ConvergenceReport, GaussianPulse, QuadratureOptions,
};

/// Grid points per pulse width `σ` on the x-grids built here.
const POINTS_PER_SIGMA: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvancementReport {
    /// Transmitted peak minus free peak; positive when the transmitted pulse leads.
    pub advancement: f64,
    /// `w` in `|Ψ^T|² ∝ exp(-(x - x_p)²/w²)` near the peak.
    pub width: f64,
    pub transmitted_peak: f64,
    pub free_peak: f64,
    /// `ln ∫ |Ψ^T|² dx`.
    pub ln_trans_prob: f64,
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityReport {
    /// `ln P^T` from the x-quadrature of `|Ψ^T|²`.
    pub ln_trans_prob: f64,
    /// `ln P^T` from `2π ∫ |T(p)|² |C(p)|² dp`.
    pub ln_trans_prob_momentum: f64,
    /// `ln exp(-8/ν²) = -8/ν²`, `ν = σ/d`.
    pub ln_bound: f64,
    /// `4Wd/(σ²κ0³)`; the bound is asserted only where this is below 1.
    pub validity: f64,
    pub bound_holds: bool,
}

impl ProbabilityReport {
    pub fn log10_trans_prob(&self) -> f64 {
        self.ln_trans_prob / LN_10
    }

    pub fn log10_bound(&self) -> f64 {
        self.ln_bound / LN_10
    }

    pub fn bound_applies(&self) -> bool {
        self.validity < 1.0
    }
}

/// `t = (d + 10σ)/p0`, the time at which the free pulse has cleared the barrier.
pub fn default_time(barrier: &RectangularBarrier, pulse: &GaussianPulse) -> f64 {
    (barrier.width() + 10.0 * pulse.sigma()) / pulse.p0()
}

fn centred_grid(centre: f64, reach: f64, sigma: f64) -> Result<SpatialGrid> {
    let n = ((2.0 * reach * POINTS_PER_SIGMA / sigma).ceil() as usize + 1).max(513);
    Ok(SpatialGrid::from(UniformGrid::new(centre - reach, centre + reach, n)?))
}

/// Peak advancement and width of `∫ A(p) C(p) e^{ipx - iε(p)t} dp` on the
/// grid `free centre ± reach`.
///
/// The amplitude is divided by `|A(p0)|` before quadrature, so the result
/// does not depend on whether `A` itself is representable.
pub fn measure_advancement_with<A: Amplitude>(
    pulse: &GaussianPulse,
    amplitude: &A,
    reach: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<AdvancementReport> {
    let centre = pulse.centre(t);
    let grid = centred_grid(centre, reach, pulse.sigma())?;
    let ln_a0 = amplitude.ln_amplitude(pulse.p0()).re;
    let shift = if ln_a0.is_finite() { -ln_a0 } else { 0.0 };
    let scaled = Scaled {
        inner: amplitude,
        ln_scale: Complex64::new(shift, 0.0),
    };
    let state = transmitted_state(pulse, &scaled, &grid, t, opts)?;
    let peak = density_peak(&state.field)?;
    let width = log_parabola_width(&state.field, &peak, pulse.sigma() / 4.0)?;
    let free = pulse.free_field(&grid, t)?;
    let free_peak = density_peak(&free)?;
    let ln_trans_prob = state.field.norm_sqr_integral().ln() - 2.0 * shift;
    Ok(AdvancementReport {
        advancement: peak.position - free_peak.position,
        width,
        transmitted_peak: peak.position,
        free_peak: free_peak.position,
        ln_trans_prob,
        convergence: state.report,
    })
}

/// [`measure_advancement_with`] for a barrier, on free centre `± (d + 8σ)`.
pub fn measure_advancement(pulse: &GaussianPulse, barrier: &RectangularBarrier, t: f64) -> Result<AdvancementReport> {
    let reach = barrier.width() + 8.0 * pulse.sigma();
    measure_advancement_with(pulse, barrier, reach, t, &QuadratureOptions::default())
}

/// `n_osc = d^{(1-ε)/2}/(πγ)`, the number of oscillations of `T(p)` across
/// the momentum width of the pulse.
pub fn oscillation_count(d: f64, gamma: f64, epsilon: f64) -> Result<f64> {
    check_schedule(d, gamma, epsilon)?;
    Ok(d.powf(0.5 * (1.0 - epsilon)) / (PI * gamma))
}

/// `ln [2π ∫ |A(p)|² |C(p)|² dp]` over the quadrature window.
fn ln_momentum_probability<A: Amplitude>(pulse: &GaussianPulse, amplitude: &A, report: &ConvergenceReport) -> Result<f64> {
    let n = 16385;
    let g = UniformGrid::new(report.p_min, report.p_max, n)?;
    let h = g.spacing();
    let terms: Vec<f64> = g
        .points()
        .enumerate()
        .map(|(k, p)| {
            let w: f64 = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
            2.0 * (amplitude.ln_amplitude(p) + pulse.ln_momentum_distribution(p)).re + w.ln()
        })
        .collect();
    Ok((2.0 * PI * h).ln() + log_sum_exp(terms.iter().copied()))
}

fn probability_from(pulse: &GaussianPulse, barrier: &RectangularBarrier, adv: &AdvancementReport) -> Result<ProbabilityReport> {
    let nu = pulse.sigma() / barrier.width();
    let ln_bound = -8.0 / (nu * nu);
    let validity = linear_expansion_parameter(pulse, barrier)?;
    let ln_trans_prob = adv.ln_trans_prob;
    Ok(ProbabilityReport {
        ln_trans_prob,
        ln_trans_prob_momentum: ln_momentum_probability(pulse, barrier, &adv.convergence)?,
        ln_bound,
        validity,
        bound_holds: ln_trans_prob <= ln_bound,
    })
}

/// Transmission probability at `t = (d + 10σ)/p0` against `exp(-8/ν²)`.
pub fn probability_report(pulse: &GaussianPulse, barrier: &RectangularBarrier) -> Result<ProbabilityReport> {
    let adv = measure_advancement(pulse, barrier, default_time(barrier, pulse))?;
    probability_from(pulse, barrier, &adv)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub height_w: f64,
    pub p0: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub d_list: Vec<f64>,
    /// Initial pulse centre in units of `-σ`.
    pub start_sigmas: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            height_w: 1.0,
            p0: 1.0,
            gamma: 0.8,
            epsilon: 0.85,
            d_list: vec![100.0, 10f64.powf(2.5), 1000.0],
            start_sigmas: 5.0,
            quadrature: QuadratureOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HartmanScanRow {
    pub d: f64,
    pub sigma: f64,
    pub advancement: f64,
    pub width: f64,
    pub log10_trans_prob: f64,
    pub log10_trans_prob_momentum: f64,
    pub log10_prob_bound: f64,
    pub n_osc: f64,
    /// `log10` of `√π σ^{-1} erfc(σ(p_min - p0)/2)`, `p_min = √(2W)`.
    pub log10_tail_bound: f64,
    pub log10_tail_integral: f64,
    pub phase_time: f64,
    pub re_weak_shift: f64,
    pub validity: f64,
    pub convergence: ConvergenceReport,
}

impl HartmanScanRow {
    pub fn bound_applies(&self) -> bool {
        self.validity < 1.0
    }
}

/// One row of the scan.
pub fn scan_row(cfg: &ScanConfig, d: f64) -> Result<HartmanScanRow> {
    let barrier = RectangularBarrier::new(cfg.height_w, d)?;
    if !(cfg.p0 > 0.0 && barrier.is_tunnelling(cfg.p0)) {
        return Err(Error::OutsideTunnellingRegime { p: cfg.p0, w: cfg.height_w });
    }
    let sigma = sigma_schedule(d, cfg.gamma, cfg.epsilon)?;
    let pulse = GaussianPulse::massive(sigma, cfg.p0, -cfg.start_sigmas * sigma)?;
    let t = default_time(&barrier, &pulse);
    let adv = measure_advancement_with(&pulse, &barrier, d + 8.0 * sigma, t, &cfg.quadrature)?;
    let prob = probability_from(&pulse, &barrier, &adv)?;
    let p_min = (2.0 * cfg.height_w).sqrt();
    let tail = tail_contribution(&barrier, sigma, p_min, cfg.p0, adv.transmitted_peak - pulse.centre(t))?;
    Ok(HartmanScanRow {
        d,
        sigma,
        advancement: adv.advancement,
        width: adv.width,
        log10_trans_prob: prob.log10_trans_prob(),
        log10_trans_prob_momentum: prob.ln_trans_prob_momentum / LN_10,
        log10_prob_bound: prob.log10_bound(),
        n_osc: oscillation_count(d, cfg.gamma, cfg.epsilon)?,
        log10_tail_bound: tail.log10_bound(),
        log10_tail_integral: tail.log10_integral(),
        phase_time: barrier.phase_time(cfg.p0)?,
        re_weak_shift: barrier.weak_shift(cfg.p0, ShiftMethod::Analytic)?.re_shift,
        validity: prob.validity,
        convergence: adv.convergence,
    })
}

/// Rows in the order of `cfg.d_list`; a failing row does not stop the others.
pub fn hartman_scan(cfg: &ScanConfig) -> Vec<Result<HartmanScanRow>> {
    cfg.d_list.par_iter().map(|&d| scan_row(cfg, d)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Config {
    pub height_w: f64,
    pub d: f64,
    pub p0: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Defaults to `(d + 10σ)/p0`.
    pub t: Option<f64>,
    /// Defaults to `-5σ`.
    pub x0: Option<f64>,
    pub z1: f64,
    pub n_x: Option<usize>,
    pub quadrature: QuadratureOptions,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            height_w: 1.0,
            d: 1000.0,
            p0: 1.0,
            epsilon: 0.85,
            gamma: 0.8,
            t: None,
            x0: None,
            z1: 200.0,
            n_x: None,
            quadrature: QuadratureOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSummary {
    pub peak: f64,
    pub width: f64,
    /// Peak position minus the final free peak.
    pub advancement: f64,
    pub max_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Metadata {
    pub height_w: f64,
    pub d: f64,
    pub p0: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub t: f64,
    pub x0: f64,
    pub kappa0: f64,
    /// `ln Z2 = i p0 d + κ0 d`.
    pub ln_z2: Complex64,
    pub z1: f64,
    pub exact: CurveSummary,
    pub approx: CurveSummary,
    pub free_final_peak: f64,
    /// Relative L2 distance of the complex envelopes over exact peak ± 3 widths.
    pub rel_l2_complex: f64,
    /// The same for the moduli.
    pub rel_l2_modulus: f64,
    pub validity: f64,
    pub log10_trans_prob: f64,
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Clone)]
pub struct Fig1Output {
    /// `Z2 e^{-ip0x + iε(p0)t} Ψ^T(x, t)`, exact.
    pub exact: ComplexField<SpatialGrid>,
    /// The same envelope in the complex-shifted Gaussian approximation.
    pub approx: ComplexField<SpatialGrid>,
    /// `Z1 G⁰(x, 0)`.
    pub free_initial: ComplexField<SpatialGrid>,
    /// `Z1 G⁰(x, t)`.
    pub free_final: ComplexField<SpatialGrid>,
    pub metadata: Fig1Metadata,
}

fn summarise(field: &ComplexField<SpatialGrid>, free_peak: f64, sigma: f64) -> Result<CurveSummary> {
    let peak = density_peak(field)?;
    let width = log_parabola_width(field, &peak, sigma / 4.0)?;
    Ok(CurveSummary {
        peak: peak.position,
        width,
        advancement: peak.position - free_peak,
        max_modulus: field.values().iter().map(|v| v.norm()).fold(0.0, f64::max),
    })
}

fn windowed_l2(a: &ComplexField<SpatialGrid>, b: &ComplexField<SpatialGrid>, lo: f64, hi: f64, modulus: bool) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, u), v) in b.iter().zip(a.values()) {
        if x < lo || x > hi {
            continue;
        }
        let diff = if modulus { (v.norm() - u.norm()).powi(2) } else { (v - u).norm_sqr() };
        num += diff;
        den += u.norm_sqr();
    }
    (num / den).sqrt()
}

/// Exact and approximate transmitted envelopes on a grid from the initial
/// pulse to beyond the advanced peak.
pub fn fig1_reproduce(cfg: &Fig1Config) -> Result<Fig1Output> {
    let barrier = RectangularBarrier::new(cfg.height_w, cfg.d)?;
    if !(cfg.p0 > 0.0 && barrier.is_tunnelling(cfg.p0)) {
        return Err(Error::OutsideTunnellingRegime { p: cfg.p0, w: cfg.height_w });
    }
    let sigma = sigma_schedule(cfg.d, cfg.gamma, cfg.epsilon)?;
    let x0 = cfg.x0.unwrap_or(-5.0 * sigma);
    let pulse = GaussianPulse::massive(sigma, cfg.p0, x0)?;
    let t = cfg.t.unwrap_or_else(|| default_time(&barrier, &pulse));
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let k0 = (2.0 * cfg.height_w - cfg.p0 * cfg.p0).sqrt();
    let ln_z2 = Complex64::new(k0 * cfg.d, cfg.p0 * cfg.d);
    let e0 = pulse.energy(cfg.p0);
    let centre = pulse.centre(t);

    let x_min = x0 - 4.0 * sigma;
    let x_max = centre + cfg.d + 4.0 * sigma;
    let n_x = cfg
        .n_x
        .unwrap_or(((x_max - x_min) * 32.0 / sigma).ceil() as usize + 1);
    let grid = SpatialGrid::new(x_min, x_max, n_x)?;

    let scaled = Scaled {
        inner: &barrier,
        ln_scale: ln_z2,
    };
    let state = transmitted_state(&pulse, &scaled, &grid, t, &cfg.quadrature)?;
    let exact = state.field.map(|x, v| v * Complex64::from_polar(1.0, -cfg.p0 * x + e0 * t))?;
    let approx = ComplexField::new(
        grid,
        grid.points()
            .map(|x| {
                ln_approximate_transmitted(&pulse, &barrier, x, t)
                    .map(|l| (l + ln_z2 + Complex64::new(0.0, -cfg.p0 * x + e0 * t)).exp())
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let free_initial = ComplexField::from_fn(grid, |x| cfg.z1 * pulse.free_envelope(x, 0.0))?;
    let free_final = ComplexField::from_fn(grid, |x| cfg.z1 * pulse.free_envelope(x, t))?;

    let free_final_peak = density_peak(&free_final)?.position;
    let exact_summary = summarise(&exact, free_final_peak, sigma)?;
    let approx_summary = summarise(&approx, free_final_peak, sigma)?;
    let lo = exact_summary.peak - 3.0 * exact_summary.width;
    let hi = exact_summary.peak + 3.0 * exact_summary.width;
    let ln_trans_prob = state.field.norm_sqr_integral().ln() - 2.0 * ln_z2.re;

    let metadata = Fig1Metadata {
        height_w: cfg.height_w,
        d: cfg.d,
        p0: cfg.p0,
        epsilon: cfg.epsilon,
        gamma: cfg.gamma,
        sigma,
        t,
        x0,
        kappa0: k0,
        ln_z2,
        z1: cfg.z1,
        exact: exact_summary,
        approx: approx_summary,
        free_final_peak,
        rel_l2_complex: windowed_l2(&approx, &exact, lo, hi, false),
        rel_l2_modulus: windowed_l2(&approx, &exact, lo, hi, true),
        validity: linear_expansion_parameter(&pulse, &barrier)?,
        log10_trans_prob: ln_trans_prob / LN_10,
        convergence: state.report,
    };
    Ok(Fig1Output {
        exact,
        approx,
        free_initial,
        free_final,
        metadata,
    })
}
