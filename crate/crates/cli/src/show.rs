use std::io::Write;

use clap::ValueEnum;
use plkks::reduction::{kks_vector, lax_reduced, n_matrix, nu, reduced_hamiltonian, rs_lax};
use plkks::{CMatrix, Tolerances};
use serde::Serialize;

use crate::config::{Format, RunParams};
use crate::error::{CliError, CliResult};
use crate::output::to_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShowWhat {
    /// The constant Borel element ν(x).
    Nu,
    /// The positive vector v(x).
    V,
    /// The slice matrix n(T).
    Nmatrix,
    /// The reduced Lax matrix L(T, a).
    Lax,
    /// The Ruijsenaars–Schneider Lax matrix.
    Rslax,
    /// The reduced Hamiltonian H_μ (default μ = 1:1,-1:-1).
    Hamiltonian,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Shown {
    Matrix {
        object: &'static str,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
    Vector {
        object: &'static str,
        values: Vec<f64>,
    },
    Scalar {
        object: &'static str,
        value: f64,
    },
}

/// Rounds to 15 significant digits in plain or scientific notation.
pub fn fmt_sig15(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        format!("{:.*}", (14 - exp).max(0) as usize, v)
    } else {
        format!("{v:.14e}")
    }
}

fn fmt_complex(re: f64, im: f64) -> String {
    if im == 0.0 {
        fmt_sig15(re)
    } else if im < 0.0 {
        format!("{}-{}i", fmt_sig15(re), fmt_sig15(-im))
    } else {
        format!("{}+{}i", fmt_sig15(re), fmt_sig15(im))
    }
}

fn matrix(object: &'static str, m: &CMatrix) -> Shown {
    let part = |f: fn(&plkks::C64) -> f64| {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    Shown::Matrix {
        object,
        re: part(|z| z.re),
        im: part(|z| z.im),
    }
}

fn render_text(shown: &Shown) -> String {
    match shown {
        Shown::Matrix { re, im, .. } => re
            .iter()
            .zip(im)
            .map(|(r, i)| {
                let cells: Vec<String> = r.iter().zip(i).map(|(&a, &b)| fmt_complex(a, b)).collect();
                format!("[{}]\n", cells.join(", "))
            })
            .collect(),
        Shown::Vector { values, .. } => {
            let cells: Vec<String> = values.iter().map(|&v| fmt_sig15(v)).collect();
            format!("[{}]\n", cells.join(", "))
        }
        Shown::Scalar { value, .. } => format!("{}\n", fmt_sig15(*value)),
    }
}

pub fn show(what: ShowWhat, params: &RunParams, tol: &Tolerances) -> CliResult<()> {
    let shown = match what {
        ShowWhat::Nu => matrix("nu", nu(params.require_x()?, params.require_n()?).matrix()),
        ShowWhat::V => Shown::Vector {
            object: "v",
            values: kks_vector(params.require_x()?, params.require_n()?),
        },
        ShowWhat::Nmatrix => {
            let x = params.require_x()?;
            matrix("nmatrix", &n_matrix(params.require_point(tol)?.q(), x))
        }
        ShowWhat::Lax => {
            let x = params.require_x()?;
            matrix("lax", &lax_reduced(&params.require_point(tol)?, x))
        }
        ShowWhat::Rslax => {
            let x = params.require_x()?;
            matrix("rslax", &rs_lax(&params.require_point(tol)?, x))
        }
        ShowWhat::Hamiltonian => {
            let x = params.require_x()?;
            let point = params.require_point(tol)?;
            let value = reduced_hamiltonian(&point, x, &params.mu_or_default()?, tol)?;
            Shown::Scalar {
                object: "hamiltonian",
                value,
            }
        }
    };
    let bytes = match params.format.unwrap_or(Format::Json) {
        Format::Json if params.format.is_some() => {
            to_json(&shown).map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?
        }
        Format::Csv => return Err(CliError::Usage("show supports --format json only".into())),
        _ => render_text(&shown).into_bytes(),
    };
    std::io::stdout()
        .lock()
        .write_all(&bytes)
        .map_err(|e| CliError::io("stdout", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_sig15(1.5), "1.50000000000000");
        assert_eq!(fmt_sig15(-0.25), "-0.250000000000000");
        assert_eq!(fmt_sig15(123.0), "123.000000000000");
        assert_eq!(fmt_sig15(1e-7), "1.00000000000000e-7");
        assert_eq!(fmt_sig15(0.0), "0");
        assert_eq!(fmt_complex(1.0, -2.0), "1.00000000000000-2.00000000000000i");
    }
}
