//! CSV and JSON writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::numerics::{ComplexField, GridAxis};

use super::CliError;

/// `{:.16e}`, with `nan`/`inf` spelled out.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn row(values: &[f64]) -> String {
    values.iter().map(|&v| format_float(v)).collect::<Vec<_>>().join(",")
}

/// `x,re,im,abs` rows after the given comment header.
pub fn field_csv<G: GridAxis>(header: &str, field: &ComplexField<G>) -> String {
    let mut s = String::with_capacity(header.len() + 96 * field.len());
    s.push_str(header);
    s.push_str("x,re,im,abs\n");
    for (x, v) in field.iter() {
        let _ = writeln!(s, "{}", row(&[x, v.re, v.im, v.norm()]));
    }
    s
}

pub fn write_to(dest: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match dest {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(path, text).map_err(|e| CliError::io(path, e))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SpatialGrid;
    use num_complex::Complex64;

    #[test]
    fn float_format() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.5), "-5.0000000000000000e-1");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
        let v = 0.1 + 0.2;
        assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn csv_layout() {
        let grid = SpatialGrid::new(0.0, 1.0, 2).unwrap();
        let f = ComplexField::new(grid, vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, -1.0)]).unwrap();
        let s = field_csv("# a=1\n", &f);
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "# a=1");
        assert_eq!(lines[1], "x,re,im,abs");
        assert_eq!(lines[2], "0.0000000000000000e0,3.0000000000000000e0,4.0000000000000000e0,5.0000000000000000e0");
        assert_eq!(lines.len(), 4);
    }
}
