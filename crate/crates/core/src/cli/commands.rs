//! One function per subcommand. Parameters are validated before any computation.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::amplitude::Scaled;
use crate::barrier::{RectangularBarrier, ShiftMethod};
use crate::hartman::{default_time, fig1_reproduce, hartman_scan, Fig1Config, ScanConfig};
use crate::measurement::{
    sigma_schedule, spin_half_example, tunnelling_family, MeasuredOperator, PostSelectedMeasurement, SelectionPair,
};
use crate::numerics::{ComplexField, SpatialGrid};
use crate::wavepacket::{transmitted_state, ConvergenceReport, GaussianPulse, QuadratureOptions};

use super::output::{field_csv, format_float, row, write_to};
use super::{resolve_output, CliError, Command, RunConfig, EXIT_OK};

pub(crate) fn execute(cfg: &RunConfig, output_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    if cfg.command == Command::Fig1 {
        return fig1(cfg, output_dir, stdout, stderr);
    }
    let dest = resolve_output(cfg, output_dir);
    let (text, code) = match cfg.command {
        Command::Transmit => (transmit(cfg, stderr)?, EXIT_OK),
        Command::Shifts => (shifts(cfg)?, EXIT_OK),
        Command::BarrierScan => (barrier_scan(cfg)?, EXIT_OK),
        Command::WeakValue => (weak_value(cfg)?, EXIT_OK),
        Command::Pointer => (pointer(cfg)?, EXIT_OK),
        Command::NrwLimit => (nrw_limit(cfg)?, EXIT_OK),
        Command::HartmanScan => scan(cfg, stderr)?,
        Command::Fig1 => unreachable!(),
    };
    write_to(dest.as_deref(), &text, stdout)?;
    Ok(code)
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureOptions, CliError> {
    let opts = QuadratureOptions {
        half_width: cfg.positive("half_width")?,
        tolerance: cfg.positive("tolerance")?,
        max_points: cfg.usize("max_points")?,
        initial_points: cfg.opt_usize("n_points")?,
        ..QuadratureOptions::default()
    };
    if opts.max_points < 3 {
        return Err(CliError::Usage(format!("max_points={}: must be at least 3", opts.max_points)));
    }
    Ok(opts)
}

fn n_grid(cfg: &RunConfig, key: &str) -> Result<usize, CliError> {
    let n = cfg.usize(key)?;
    if n < 2 {
        return Err(CliError::Usage(format!("{key}={n}: must be at least 2")));
    }
    Ok(n)
}

fn x_grid(cfg: &RunConfig, lo: f64, hi: f64, n: usize) -> Result<SpatialGrid, CliError> {
    let x_min = cfg.opt_f64("x_min")?.unwrap_or(lo);
    let x_max = cfg.opt_f64("x_max")?.unwrap_or(hi);
    if !(x_max > x_min) {
        return Err(CliError::Usage(format!("x range [{x_min}, {x_max}] is empty")));
    }
    Ok(SpatialGrid::new(x_min, x_max, n)?)
}

fn convergence_line(r: &ConvergenceReport) -> String {
    format!(
        "# convergence n_coarse={} n_fine={} rel_change={} neglected_weight={} p_min={} p_max={}\n",
        r.n_coarse,
        r.n_fine,
        format_float(r.rel_change),
        format_float(r.neglected_weight),
        format_float(r.p_min),
        format_float(r.p_max)
    )
}

fn warn_narrow(pulse: &GaussianPulse, stderr: &mut dyn Write) {
    if pulse.narrow_momentum_warning() {
        let _ = writeln!(
            stderr,
            "warning: momentum spread 2/sigma = {} exceeds 0.2 p0",
            2.0 / pulse.sigma()
        );
    }
}

fn transmit(cfg: &RunConfig, stderr: &mut dyn Write) -> Result<String, CliError> {
    let w = cfg.positive("W")?;
    let d = cfg.positive("d")?;
    let p0 = cfg.positive("p0")?;
    let sigma = cfg.positive("sigma")?;
    let n_x = n_grid(cfg, "n_x")?;
    let rescale = cfg.bool("rescale")?;
    let opts = quadrature(cfg)?;
    let x0 = cfg.opt_f64("x0")?.unwrap_or(-5.0 * sigma);
    let t_opt = cfg.opt_f64("t")?;
    if let Some(t) = t_opt.filter(|t| *t < 0.0) {
        return Err(CliError::Usage(format!("t={t}: must be non-negative")));
    }

    let barrier = RectangularBarrier::new(w, d)?;
    let pulse = GaussianPulse::massive(sigma, p0, x0)?;
    warn_narrow(&pulse, stderr);
    let t = t_opt.unwrap_or_else(|| default_time(&barrier, &pulse));
    let centre = pulse.centre(t);
    let reach = d + 8.0 * sigma;
    let grid = x_grid(cfg, centre - reach, centre + reach, n_x)?;
    let ln_scale = if rescale { -barrier.ln_transmission(p0)?.re } else { 0.0 };
    let scaled = Scaled {
        inner: &barrier,
        ln_scale: Complex64::new(ln_scale, 0.0),
    };
    let state = transmitted_state(&pulse, &scaled, &grid, t, &opts)?;
    let mut header = cfg.header();
    let _ = writeln!(header, "# t_resolved={}", format_float(t));
    let _ = writeln!(header, "# ln_scale={}", format_float(ln_scale));
    header.push_str(&convergence_line(&state.report));
    Ok(field_csv(&header, &state.field))
}

fn shifts(cfg: &RunConfig) -> Result<String, CliError> {
    let w = cfg.positive("W")?;
    let d = cfg.positive("d")?;
    let n = cfg.usize("n_points")?;
    if !n.is_power_of_two() || n < 4 {
        return Err(CliError::Usage(format!("n_points={n}: must be a power of two, at least 4")));
    }
    let barrier = RectangularBarrier::new(w, d)?;
    let xi = barrier.shift_spectrum(n)?;
    let total: f64 = xi.values().iter().map(|v| v.norm_sqr()).sum();
    let advanced: f64 = xi.iter().filter(|(y, _)| *y > 0.0).map(|(_, v)| v.norm_sqr()).sum();
    let mut header = cfg.header();
    let _ = writeln!(header, "# positive_shift_weight={}", format_float(advanced / total));
    Ok(field_csv(&header, &xi))
}

fn barrier_scan(cfg: &RunConfig) -> Result<String, CliError> {
    let w = cfg.positive("W")?;
    let d = cfg.positive("d")?;
    let p_min = cfg.positive("p_min")?;
    let p_max = cfg.positive("p_max")?;
    let n = n_grid(cfg, "n_p")?;
    if !(p_max > p_min) {
        return Err(CliError::Usage(format!("momentum range [{p_min}, {p_max}] is empty")));
    }
    let barrier = RectangularBarrier::new(w, d)?;
    let mut s = cfg.header();
    s.push_str("p,re_T,im_T,abs_T,re_ybar,im_ybar,phase_time\n");
    for i in 0..n {
        let p = p_min + (p_max - p_min) * i as f64 / (n - 1) as f64;
        let t = barrier.transmission_amplitude(p).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        let y = barrier
            .weak_shift(p, ShiftMethod::Analytic)
            .map(|y| y.as_complex())
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        let tau = barrier.phase_time(p).unwrap_or(f64::NAN);
        let _ = writeln!(s, "{}", row(&[p, t.re, t.im, t.norm(), y.re, y.im, tau]));
    }
    Ok(s)
}

fn selection(cfg: &RunConfig) -> Result<(MeasuredOperator, SelectionPair), CliError> {
    if let Some(spin_d) = cfg.opt_f64("spin_d")? {
        return Ok(spin_half_example(spin_d)?);
    }
    let eig = cfg.f64_list("eigenvalues")?;
    let pre = cfg.complex_list("pre")?;
    let post = cfg.complex_list("post")?;
    if pre.is_empty() || post.is_empty() {
        return Err(CliError::Usage("pre and post states are required unless spin_d is set".into()));
    }
    if pre.len() != eig.len() || post.len() != eig.len() {
        return Err(CliError::Usage(format!(
            "{} eigenvalues but pre has {} and post has {} components",
            eig.len(),
            pre.len(),
            post.len()
        )));
    }
    Ok((MeasuredOperator::new(eig)?, SelectionPair::normalized(pre, post)?))
}

fn weak_value(cfg: &RunConfig) -> Result<String, CliError> {
    let (op, sel) = selection(cfg)?;
    let m = PostSelectedMeasurement::new(&op, &sel)?;
    let routes = m.weak_value_routes()?;
    let g = m.log_derivatives()?;
    let mut s = cfg.header();
    let _ = writeln!(s, "# route_discrepancy={}", format_float(routes.max_discrepancy()));
    s.push_str("quantity,re,im\n");
    let rows: [(&str, Complex64); 8] = [
        ("weak_value", m.weak_value()?.value),
        ("eigen_sum", routes.eigen_sum),
        ("log_derivative", routes.log_derivative),
        ("improper_average", routes.improper_average),
        ("overlap", m.overlap()),
        ("g1", g[0]),
        ("g2", g[1]),
        ("g3", g[2]),
    ];
    for (name, v) in rows {
        let _ = writeln!(s, "{name},{}", row(&[v.re, v.im]));
    }
    Ok(s)
}

fn pointer(cfg: &RunConfig) -> Result<String, CliError> {
    let sigma = cfg.positive("sigma")?;
    let n_x = n_grid(cfg, "n_x")?;
    let route = cfg.raw("route").unwrap_or("sum").to_string();
    if !matches!(route.as_str(), "sum" | "momentum" | "approx") {
        return Err(CliError::Usage(format!("route={route:?}: expected sum, momentum or approx")));
    }
    let opts = quadrature(cfg)?;
    let (op, sel) = selection(cfg)?;
    let m = PostSelectedMeasurement::new(&op, &sel)?;
    let pulse = GaussianPulse::static_pointer(sigma)?;
    let a = m.weak_value().map(|w| w.re()).unwrap_or(0.0);
    let lo = op.eigenvalues().iter().copied().fold(a, f64::min) - 6.0 * sigma;
    let hi = op.eigenvalues().iter().copied().fold(a, f64::max) + 6.0 * sigma;
    let grid = x_grid(cfg, lo, hi, n_x)?;
    let mut header = cfg.header();
    let field = match route.as_str() {
        "sum" => ComplexField::from_fn(grid, |x| m.pointer_final_state(&pulse, x, 0.0))?,
        "momentum" => {
            let state = m.pointer_final_state_momentum(&pulse, &grid, 0.0, &opts)?;
            header.push_str(&convergence_line(&state.report));
            state.field
        }
        _ => ComplexField::new(
            grid,
            grid.points()
                .map(|x| m.gaussian_pointer_approx(&pulse, x))
                .collect::<crate::Result<Vec<_>>>()?,
        )?,
    };
    Ok(field_csv(&header, &field))
}

fn nrw_limit(cfg: &RunConfig) -> Result<String, CliError> {
    let w = cfg.positive("W")?;
    let p0 = cfg.positive("p0")?;
    let d = cfg.positive("d")?;
    let gamma = cfg.f64("gamma")?;
    let epsilon = cfg.f64("epsilon")?;
    let n_x = n_grid(cfg, "n_x")?;
    let rescale = cfg.bool("rescale")?;
    let barrier = RectangularBarrier::new(w, d)?;
    let family = tunnelling_family(&barrier, p0)?;
    let sigma = sigma_schedule(d, gamma, epsilon)?;
    let centre = family.weak_value().re();
    let grid = x_grid(cfg, centre - 6.0 * sigma, centre + 6.0 * sigma, n_x)?;
    let logs = grid
        .points()
        .map(|x| family.ln_limit_state(gamma, epsilon, x))
        .collect::<crate::Result<Vec<_>>>()?;
    let ln_scale = if rescale {
        -logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    } else {
        0.0
    };
    let field = ComplexField::new(grid, logs.into_iter().map(|l| (l + ln_scale).exp()).collect())?;
    let mut header = cfg.header();
    let _ = writeln!(header, "# sigma={}", format_float(sigma));
    let _ = writeln!(header, "# ln_scale={}", format_float(ln_scale));
    Ok(field_csv(&header, &field))
}

fn scan(cfg: &RunConfig, stderr: &mut dyn Write) -> Result<(String, i32), CliError> {
    let scan_cfg = ScanConfig {
        height_w: cfg.positive("W")?,
        p0: cfg.positive("p0")?,
        gamma: cfg.f64("gamma")?,
        epsilon: cfg.f64("epsilon")?,
        d_list: cfg.f64_list("d_list")?,
        start_sigmas: cfg.positive("start_sigmas")?,
        quadrature: quadrature(cfg)?,
    };
    if scan_cfg.d_list.is_empty() {
        return Err(CliError::Usage("d_list is empty".into()));
    }
    let mut s = cfg.header();
    s.push_str("d,sigma,advancement,width,log10_PT,log10_bound,n_osc,log10_tail,phase_time\n");
    let mut code = EXIT_OK;
    for (d, r) in scan_cfg.d_list.iter().zip(hartman_scan(&scan_cfg)) {
        match r {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "{}",
                    row(&[r.d, r.sigma, r.advancement, r.width, r.log10_trans_prob, r.log10_prob_bound, r.n_osc, r.log10_tail_bound, r.phase_time])
                );
            }
            Err(e) => {
                let e = CliError::from(e);
                let _ = writeln!(s, "# error d={}: {e}", format_float(*d));
                let _ = writeln!(stderr, "error: row d={d}: {e}");
                if code == EXIT_OK {
                    code = e.exit_code();
                }
            }
        }
    }
    Ok((s, code))
}

fn fig1(cfg: &RunConfig, output_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let t = cfg.opt_f64("t")?;
    if let Some(t) = t.filter(|t| *t < 0.0) {
        return Err(CliError::Usage(format!("t={t}: must be non-negative")));
    }
    let n_x = cfg.opt_usize("n_x")?;
    if let Some(n) = n_x.filter(|n| *n < 2) {
        return Err(CliError::Usage(format!("n_x={n}: must be at least 2")));
    }
    let fig_cfg = Fig1Config {
        height_w: cfg.positive("W")?,
        d: cfg.positive("d")?,
        p0: cfg.positive("p0")?,
        epsilon: cfg.f64("epsilon")?,
        gamma: cfg.f64("gamma")?,
        t,
        x0: cfg.opt_f64("x0")?,
        z1: cfg.positive("z1")?,
        n_x,
        quadrature: quadrature(cfg)?,
    };
    let dir = match (cfg.output(), output_dir) {
        (Some(p), Some(base)) if p.is_relative() => base.join(p),
        (Some(p), _) => p,
        (None, Some(base)) => base.join("fig1"),
        (None, None) => "fig1".into(),
    };
    let out = fig1_reproduce(&fig_cfg)?;
    if out.metadata.validity >= 1.0 {
        let _ = writeln!(stderr, "warning: linear expansion parameter {} is not small", out.metadata.validity);
    }
    let header = cfg.header();
    let files = [
        ("exact.csv", &out.exact),
        ("approx.csv", &out.approx),
        ("free_initial.csv", &out.free_initial),
        ("free_final.csv", &out.free_final),
    ];
    for (name, field) in files {
        let path = dir.join(name);
        write_to(Some(&path), &field_csv(&header, field), stdout)?;
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    let path = dir.join("metadata.json");
    let json = serde_json::to_string_pretty(&out.metadata).expect("metadata serializes");
    write_to(Some(&path), &(json + "\n"), stdout)?;
    let _ = writeln!(stdout, "wrote {}", path.display());
    Ok(EXIT_OK)
}
