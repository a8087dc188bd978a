//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;

/// Region of constant potential `v` starting at `start`.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub start: f64,
    pub v: f64,
}

fn wavenumber(e: f64, v: f64) -> Complex64 {
    let k = Complex64::new(2.0 * (e - v), 0.0).sqrt();
    if k.norm() == 0.0 {
        Complex64::new(1e-300, 0.0)
    } else {
        k
    }
}

/// Transmission and reflection amplitudes at energy `e` for a piecewise
/// constant potential, from plane-wave matching at each step. The first
/// region extends to `-inf`, the last to `+inf`; both must have `v = 0`.
/// `t` multiplies `e^{ipx}` on the right, `r` multiplies `e^{-ipx}` on the left.
pub fn transfer_matrix(e: f64, regions: &[Region]) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let n = regions.len();
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for j in (1..n).rev() {
        let x = regions[j].start;
        let kr = wavenumber(e, regions[j].v);
        let kl = wavenumber(e, regions[j - 1].v);
        let er = (i * kr * x).exp();
        let psi = a * er + b / er;
        let dpsi = i * kr * (a * er - b / er);
        let el = (i * kl * x).exp();
        let q = dpsi / (i * kl);
        a = 0.5 * (psi + q) / el;
        b = 0.5 * (psi - q) * el;
    }
    (1.0 / a, b / a)
}

/// `(t, r)` for a rectangular barrier of height `w` on `[0, d]` at momentum `p`.
pub fn rectangular(w: f64, d: f64, p: f64) -> (Complex64, Complex64) {
    transfer_matrix(
        0.5 * p * p,
        &[
            Region { start: f64::NEG_INFINITY, v: 0.0 },
            Region { start: 0.0, v: w },
            Region { start: d, v: 0.0 },
        ],
    )
}

/// Composite Simpson rule for `f` on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}
