//! CSV/JSON rendering and file writing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cqed_core::{DrivenResponse, Spectrum, TimeTrace};
use num_complex::Complex64;
use serde::Serialize;

use crate::CliError;

pub const SPECTRUM_HEADER: &str = "omega,s_at,s_cav,p_omega";
pub const DYNAMICS_HEADER: &str = "t,pop_atom,pop_cav,p_detect";
pub const DRIVEN_HEADER: &str = "omega,power_at,power_cav,power_absorbed,residual";

/// 17 significant digits, `.` decimal separator.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn table<const N: usize>(header: &str, rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut out = String::with_capacity(64 * N);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&number(*v));
        }
        out.push('\n');
    }
    out
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    table(
        SPECTRUM_HEADER,
        (0..s.omega.len()).map(|k| [s.omega[k], s.density_at[k], s.density_cav[k], s.p_omega[k]]),
    )
}

pub fn dynamics_csv(t: &TimeTrace) -> String {
    table(
        DYNAMICS_HEADER,
        (0..t.len()).map(|k| [t.t[k], t.pop_atom[k], t.pop_cav[k], t.p_detect[k]]),
    )
}

pub fn driven_csv(rows: &[DrivenResponse]) -> String {
    table(
        DRIVEN_HEADER,
        rows.iter().map(|r| {
            [
                r.omega_drive,
                r.power_at,
                r.power_cav,
                r.power_absorbed,
                r.residual,
            ]
        }),
    )
}

/// Rows of mixed integer/float cells under a free-form header.
pub fn summary_csv(header: &str, rows: &[(usize, Vec<f64>)]) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for (index, cells) in rows {
        let _ = write!(out, "{index}");
        for v in cells {
            out.push(',');
            out.push_str(&number(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| CliError::Output(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))
}
