//! Uniform grids, trapezoidal quadrature, the momentum <-> shift discrete
//! Fourier pair and the complementary error function.
//!
//! Every reduction here is a plain left-to-right sum over grid indices, so a
//! given input always produces the same bits no matter how callers spread
//! work across threads.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Evenly spaced points `min + i * spacing`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformGrid {
    min: f64,
    max: f64,
    n_points: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::DegenerateGrid(format!(
                "non-finite bounds [{min}, {max}]"
            )));
        }
        if n_points < 2 {
            return Err(Error::DegenerateGrid(format!(
                "{n_points} points; at least 2 are required"
            )));
        }
        if min >= max {
            return Err(Error::DegenerateGrid(format!(
                "empty interval [{min}, {max}]"
            )));
        }
        Ok(Self { min, max, n_points })
    }

    /// Grid of `n_points` starting at `min` with the given spacing.
    pub fn from_spacing(min: f64, spacing: f64, n_points: usize) -> Result<Self> {
        let max = min + spacing * (n_points.saturating_sub(1)) as f64;
        Self::new(min, max, n_points)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.n_points).map(move |i| self.min + i as f64 * h)
    }

    /// Same interval, twice as many intervals.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * (self.n_points - 1) + 1,
            ..*self
        }
    }
}

/// Access to the underlying uniform axis of a typed grid.
pub trait GridAxis: Clone {
    fn axis(&self) -> &UniformGrid;
}

/// Grid over momentum `p` (units with hbar = m = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumGrid(UniformGrid);

/// Grid over a coordinate: position `x` or spatial shift `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialGrid(UniformGrid);

impl MomentumGrid {
    pub fn new(p_min: f64, p_max: f64, n_points: usize) -> Result<Self> {
        UniformGrid::new(p_min, p_max, n_points).map(Self)
    }
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        UniformGrid::new(x_min, x_max, n_points).map(Self)
    }
}

impl From<UniformGrid> for MomentumGrid {
    fn from(g: UniformGrid) -> Self {
        Self(g)
    }
}

impl From<UniformGrid> for SpatialGrid {
    fn from(g: UniformGrid) -> Self {
        Self(g)
    }
}

impl GridAxis for MomentumGrid {
    fn axis(&self) -> &UniformGrid {
        &self.0
    }
}

impl GridAxis for SpatialGrid {
    fn axis(&self) -> &UniformGrid {
        &self.0
    }
}

impl std::ops::Deref for MomentumGrid {
    type Target = UniformGrid;
    fn deref(&self) -> &UniformGrid {
        &self.0
    }
}

impl std::ops::Deref for SpatialGrid {
    type Target = UniformGrid;
    fn deref(&self) -> &UniformGrid {
        &self.0
    }
}

/// Complex samples of a function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<G: GridAxis> {
    grid: G,
    values: Vec<Complex64>,
}

impl<G: GridAxis> ComplexField<G> {
    pub fn new(grid: G, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.axis().n_points() {
            return Err(Error::GridShape(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.axis().n_points()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample {} at index {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: G, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.axis().points().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(grid point, value)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.grid.axis().points().zip(self.values.iter().copied())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let values = self.iter().map(|(x, v)| f(x, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    /// Trapezoidal `∫ |f|^2`.
    pub fn norm_sqr_integral(&self) -> f64 {
        let h = self.grid.axis().spacing();
        let n = self.values.len();
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            acc += w * v.norm_sqr();
        }
        acc * h
    }
}

/// Composite trapezoidal rule over uniformly spaced samples, summed in index
/// order.
pub fn trapezoid(values: &[Complex64], spacing: f64) -> Complex64 {
    let n = values.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = 0.5 * values[0];
    for v in &values[1..n - 1] {
        acc += *v;
    }
    acc += 0.5 * values[n - 1];
    acc * spacing
}

/// `∫ f d(grid variable)` by the trapezoidal rule.
pub fn integrate<G: GridAxis>(field: &ComplexField<G>) -> Result<Complex64> {
    let axis = field.grid().axis();
    if field.len() < 2 {
        return Err(Error::DegenerateGrid("integration needs at least 2 points".into()));
    }
    Ok(trapezoid(field.values(), axis.spacing()))
}

/// Relative L2 distance `||a - b|| / ||b||` of two equally sampled vectors.
pub fn relative_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_l2 on vectors of different length");
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y).norm_sqr();
        den += y.norm_sqr();
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Placement of the shift axis inside the one period the discrete transform
/// determines. `positive_fraction` of the `n` output cells carry `y > 0`
/// shifts; the rest carry `y <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftWindow {
    pub positive_fraction: f64,
}

impl ShiftWindow {
    pub const fn symmetric() -> Self {
        Self { positive_fraction: 0.5 }
    }

    /// Most of the period on the delayed side, for spectra known to vanish
    /// at `y > 0`.
    pub const fn causal() -> Self {
        Self { positive_fraction: 1.0 / 32.0 }
    }

    /// Number of cells with index `j >= 0` (y = j * dy); at least one.
    fn non_negative_cells(&self, n: usize) -> usize {
        let m = (self.positive_fraction * n as f64).round() as usize;
        m.clamp(1, n - 1)
    }
}

impl Default for ShiftWindow {
    fn default() -> Self {
        Self::symmetric()
    }
}

fn require_power_of_two(n: usize) -> Result<()> {
    if n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::GridShape(format!(
            "discrete transform needs a power-of-two length, got {n}"
        )))
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Shift spectrum `ξ(y) = (2π)^{-1} ∫ T(p) e^{ipy} dp` of an amplitude
/// sampled on a uniform momentum grid.
///
/// The output grid has spacing `2π / (n Δp)` and spans one period
/// `2π / Δp`; `window` decides how that period is split between advanced
/// and delayed shifts. The pair is inverted exactly by [`shift_transform`].
pub fn shift_spectrum(
    t_of_p: &ComplexField<MomentumGrid>,
    window: ShiftWindow,
) -> Result<ComplexField<SpatialGrid>> {
    let n = t_of_p.len();
    require_power_of_two(n)?;
    let grid = t_of_p.grid();
    let dp = grid.spacing();
    let dy = 2.0 * PI / (n as f64 * dp);
    let m = window.non_negative_cells(n) as i64;
    let first = m - n as i64;

    let mut buf = t_of_p.values().to_vec();
    plan(n, true).process(&mut buf);

    let p_min = grid.min();
    let scale = dp / (2.0 * PI);
    let values = (first..m)
        .map(|j| {
            let y = j as f64 * dy;
            let idx = j.rem_euclid(n as i64) as usize;
            buf[idx] * Complex64::from_polar(scale, p_min * y)
        })
        .collect();
    let y_grid = SpatialGrid::from(UniformGrid::from_spacing(first as f64 * dy, dy, n)?);
    ComplexField::new(y_grid, values)
}

/// Inverse of [`shift_spectrum`]: `T(p_k) = Σ_j ξ(y_j) e^{-i p_k y_j} Δy`.
pub fn shift_transform(
    xi: &ComplexField<SpatialGrid>,
    grid: &MomentumGrid,
) -> Result<ComplexField<MomentumGrid>> {
    let n = xi.len();
    require_power_of_two(n)?;
    if grid.n_points() != n {
        return Err(Error::GridShape(format!(
            "{n} shift samples for a {}-point momentum grid",
            grid.n_points()
        )));
    }
    let dy = xi.grid().spacing();
    let expected_dy = 2.0 * PI / (n as f64 * grid.spacing());
    if ((dy - expected_dy) / expected_dy).abs() > 1e-9 {
        return Err(Error::GridShape(format!(
            "shift spacing {dy} is not conjugate to momentum spacing {}",
            grid.spacing()
        )));
    }
    let first = (xi.grid().min() / dy).round() as i64;
    let p_min = grid.min();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, v) in xi.values().iter().enumerate() {
        let j = first + k as i64;
        let y = j as f64 * dy;
        buf[j.rem_euclid(n as i64) as usize] = *v * Complex64::from_polar(dy, -p_min * y);
    }
    plan(n, false).process(&mut buf);
    ComplexField::new(*grid, buf)
}

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

/// `erfc(z)` from its large-argument expansion
/// `e^{-z^2}/(z√π) Σ (-1)^n (2n-1)!! / (2z^2)^n`, truncated at the smallest
/// term. Meaningful for `z` beyond roughly 5.
pub fn erfc_asymptotic(z: f64) -> f64 {
    (-z * z).exp() / (z * PI.sqrt()) * asymptotic_series(z)
}

fn asymptotic_series(z: f64) -> f64 {
    let inv = 1.0 / (2.0 * z * z);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..60 {
        let next = -term * (2 * n - 1) as f64 * inv;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `ln erfc(z)`, finite far past the point where `erfc` itself underflows.
pub fn ln_erfc(z: f64) -> f64 {
    if z < 20.0 {
        erfc(z).ln()
    } else {
        -z * z - (z * PI.sqrt()).ln() + asymptotic_series(z).ln()
    }
}

/// `ln Σ exp(a_i)` without overflow; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}
