//! `--key=value` flags and `key=value` config files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Transmit,
    Shifts,
    BarrierScan,
    WeakValue,
    Pointer,
    NrwLimit,
    HartmanScan,
    Fig1,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Transmit,
        Command::Shifts,
        Command::BarrierScan,
        Command::WeakValue,
        Command::Pointer,
        Command::NrwLimit,
        Command::HartmanScan,
        Command::Fig1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Transmit => "transmit",
            Command::Shifts => "shifts",
            Command::BarrierScan => "barrier-scan",
            Command::WeakValue => "weakvalue",
            Command::Pointer => "pointer",
            Command::NrwLimit => "nrw-limit",
            Command::HartmanScan => "hartman-scan",
            Command::Fig1 => "fig1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn summary(&self) -> &'static str {
        match self {
            Command::Transmit => "transmitted pulse behind a rectangular barrier (field CSV)",
            Command::Shifts => "shift spectrum of a rectangular barrier (field CSV over y)",
            Command::BarrierScan => "T(p), complex shift and phase time over a momentum range",
            Command::WeakValue => "weak value of a pre/post-selected measurement",
            Command::Pointer => "final pointer state of a pre/post-selected measurement (field CSV)",
            Command::NrwLimit => "limiting pointer state of the opaque-barrier family (field CSV)",
            Command::HartmanScan => "advancement, width and bounds along a barrier-width scan (scan CSV)",
            Command::Fig1 => "exact and approximate transmitted envelopes at the reference parameters",
        }
    }

    /// Accepted keys with their defaults. `auto` marks values derived from
    /// the others at run time; an empty default marks an optional key.
    pub fn keys(&self) -> &'static [(&'static str, &'static str)] {
        const QUAD: [(&str, &str); 4] = [
            ("half_width", "12"),
            ("tolerance", "1e-10"),
            ("max_points", "1048577"),
            ("n_points", "auto"),
        ];
        match self {
            Command::Transmit => &[
                ("W", "1"),
                ("d", "10"),
                ("p0", "1"),
                ("sigma", "50"),
                ("x0", "auto"),
                ("t", "auto"),
                ("x_min", "auto"),
                ("x_max", "auto"),
                ("n_x", "1025"),
                ("rescale", "false"),
                ("output", ""),
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
            ],
            Command::Shifts => &[("W", "1"), ("d", "5"), ("n_points", "16384"), ("output", "")],
            Command::BarrierScan => &[
                ("W", "1"),
                ("d", "10"),
                ("p_min", "0.05"),
                ("p_max", "2"),
                ("n_p", "40"),
                ("output", ""),
            ],
            Command::WeakValue => &[
                ("eigenvalues", "1;-1"),
                ("pre", ""),
                ("post", ""),
                ("spin_d", ""),
                ("output", ""),
            ],
            Command::Pointer => &[
                ("eigenvalues", "1;-1"),
                ("pre", ""),
                ("post", ""),
                ("spin_d", ""),
                ("sigma", "1"),
                ("route", "sum"),
                ("x_min", "auto"),
                ("x_max", "auto"),
                ("n_x", "1001"),
                ("output", ""),
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
            ],
            Command::NrwLimit => &[
                ("W", "1"),
                ("p0", "1"),
                ("d", "1000"),
                ("gamma", "0.8"),
                ("epsilon", "0.85"),
                ("x_min", "auto"),
                ("x_max", "auto"),
                ("n_x", "1001"),
                ("rescale", "true"),
                ("output", ""),
            ],
            Command::HartmanScan => &[
                ("W", "1"),
                ("p0", "1"),
                ("gamma", "0.8"),
                ("epsilon", "0.85"),
                ("d_list", "100;316.22776601683796;1000"),
                ("start_sigmas", "5"),
                ("output", ""),
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
            ],
            Command::Fig1 => &[
                ("W", "1"),
                ("d", "1000"),
                ("p0", "1"),
                ("epsilon", "0.85"),
                ("gamma", "0.8"),
                ("t", "auto"),
                ("x0", "auto"),
                ("z1", "200"),
                ("n_x", "auto"),
                ("output", "fig1"),
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
            ],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Effective configuration of one run: defaults, then the config file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}

/// Parses the lines of a config file: `key = value`, `#` starts a comment.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_pair(line)
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got {raw:?}", n + 1)))?;
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Merges defaults, file entries and flags (`--key=value`) for `command`.
pub fn parse_config(command: Command, flags: &[String], file: Option<&str>) -> Result<RunConfig, CliError> {
    let keys = command.keys();
    let mut params: BTreeMap<String, String> = keys
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let known = |k: &str| keys.iter().any(|(name, _)| *name == k);
    let mut set = |k: &str, v: &str, origin: &str| -> Result<(), CliError> {
        if !known(k) {
            return Err(CliError::Usage(format!("unknown key {k:?} for {command} ({origin})")));
        }
        params.insert(k.to_string(), v.to_string());
        Ok(())
    };
    if let Some(text) = file {
        for (k, v) in parse_file(text)? {
            set(&k, &v, "config file")?;
        }
    }
    for flag in flags {
        let body = flag
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("expected --key=value, got {flag:?}")))?;
        let (k, v) = split_pair(body).ok_or_else(|| CliError::Usage(format!("expected --key=value, got {flag:?}")))?;
        set(k, v, "flag")?;
    }
    Ok(RunConfig { command, params })
}

impl RunConfig {
    /// `# key=value` lines in key order.
    pub fn header(&self) -> String {
        let mut s = format!("# command={}\n", self.command);
        for (k, v) in &self.params {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        CliError::Usage(format!(
            "{key}={:?}: expected {what}",
            self.params.get(key).map(String::as_str).unwrap_or("")
        ))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.opt_f64(key)?.ok_or_else(|| CliError::Usage(format!("missing required value {key}")))
    }

    /// `None` when unset or `auto`.
    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None | Some("auto") => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| self.bad(key, "a finite number")),
        }
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v = self.f64(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("{key}={v}: must be positive")))
        }
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.raw(key) {
            None | Some("auto") => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| self.bad(key, "a non-negative integer")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.opt_usize(key)?.ok_or_else(|| CliError::Usage(format!("missing required value {key}")))
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") | None => Ok(false),
            Some(_) => Err(self.bad(key, "true or false")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.raw(key).unwrap_or("");
        raw.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| self.bad(key, "numbers separated by ';'")))
            .collect()
    }

    /// Complex numbers `re,im` (or a bare real) separated by `;`.
    pub fn complex_list(&self, key: &str) -> Result<Vec<Complex64>, CliError> {
        let raw = self.raw(key).unwrap_or("");
        raw.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_complex(s).ok_or_else(|| self.bad(key, "complex numbers re,im separated by ';'")))
            .collect()
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.raw("output").map(PathBuf::from)
    }
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let mut parts = s.split(',').map(str::trim);
    let re = parts.next()?.parse::<f64>().ok()?;
    let im = match parts.next() {
        Some(v) => v.parse::<f64>().ok()?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return None;
    }
    Some(Complex64::new(re, im))
}
