//! Parameter sweeps over lattice period and drive strength.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{second_slowest_rate_with, subradiant_count_with, SpectrumOptions, SpectrumResult};
use crate::error::{Error, Result};
use crate::model::build_liouvillian;
use crate::operators::ArrayParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SecondSlowestRate,
    SubradiantCount,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SecondSlowestRate => "second_slowest_rate",
            Self::SubradiantCount => "subradiant_count",
        })
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "second_slowest_rate" => Ok(Self::SecondSlowestRate),
            "subradiant_count" => Ok(Self::SubradiantCount),
            other => Err(Error::Argument(format!(
                "unknown observable {other:?}; expected second_slowest_rate or subradiant_count"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The subradiant count changed when the drive was doubled.
    Unstable,
    Failed(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ok => f.write_str("ok"),
            Self::Unstable => f.write_str("unstable"),
            // commas would break the CSV column
            Self::Failed(msg) => write!(f, "failed: {}", msg.replace(',', ";")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub phi: f64,
    pub d_over_lambda: f64,
    pub omega_r: f64,
    pub n_qubits: usize,
    pub observable: Observable,
    /// NaN when the row failed.
    pub value: f64,
    pub zero_multiplicity: usize,
    pub status: RowStatus,
}

/// Evaluates `observable` on the grid `d_over_lambda x omega_r` (period
/// outermost). Rows run in parallel on the current rayon pool and come back
/// in grid order; a failing point becomes a `Failed` row instead of aborting.
pub fn sweep(
    n_qubits: usize,
    d_over_lambda: &[f64],
    omega_r: &[f64],
    gamma_1d: f64,
    observable: Observable,
    opts: &SpectrumOptions,
) -> Vec<SweepRow> {
    let grid: Vec<(f64, f64)> = d_over_lambda
        .iter()
        .flat_map(|&d| omega_r.iter().map(move |&w| (d, w)))
        .collect();
    grid.par_iter()
        .map(|&(d, w)| evaluate(n_qubits, d, w, gamma_1d, observable, opts))
        .collect()
}

fn evaluate(
    n_qubits: usize,
    d: f64,
    omega_r: f64,
    gamma_1d: f64,
    observable: Observable,
    opts: &SpectrumOptions,
) -> SweepRow {
    let mut row = SweepRow {
        phi: f64::NAN,
        d_over_lambda: d,
        omega_r,
        n_qubits,
        observable,
        value: f64::NAN,
        zero_multiplicity: 0,
        status: RowStatus::Ok,
    };
    let outcome = ArrayParams::from_period(n_qubits, d, omega_r)
        .and_then(|p| p.with_gamma(gamma_1d))
        .and_then(|params| {
            row.phi = params.phi;
            match observable {
                Observable::SecondSlowestRate => {
                    let r = second_slowest_rate_with(&build_liouvillian(&params)?, opts)?;
                    Ok((r.rate, r.zero_multiplicity, true))
                }
                Observable::SubradiantCount => {
                    let c = subradiant_count_with(&params, opts)?;
                    Ok((c.count as f64, c.zero_multiplicity, c.is_stable()))
                }
            }
        });
    match outcome {
        Ok((value, zeros, stable)) => {
            row.value = value;
            row.zero_multiplicity = zeros;
            if !stable {
                row.status = RowStatus::Unstable;
            }
        }
        Err(e) => row.status = RowStatus::Failed(e.to_string()),
    }
    row
}

pub const SWEEP_CSV_HEADER: &str =
    "phi,d_over_lambda,omega_r,n_qubits,observable,value,zero_multiplicity,status";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{},{},{:.16e},{},{}",
            r.phi,
            r.d_over_lambda,
            r.omega_r,
            r.n_qubits,
            r.observable,
            r.value,
            r.zero_multiplicity,
            r.status
        )?;
    }
    Ok(())
}

/// `index,re,im` rows in the sorted order of the spectrum.
pub fn write_eigenvalues_csv<W: Write>(mut w: W, spec: &SpectrumResult) -> Result<()> {
    writeln!(w, "index,re,im")?;
    for (i, e) in spec.eigenvalues.iter().enumerate() {
        writeln!(w, "{i},{:.16e},{:.16e}", e.re, e.im)?;
    }
    Ok(())
}
