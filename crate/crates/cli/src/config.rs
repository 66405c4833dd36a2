use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// `start:stop:count` with inclusive endpoints, or a single value.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            count: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }

    /// The value of a one-point range.
    pub fn scalar(&self, flag: &str) -> Result<f64, String> {
        if self.count == 1 {
            Ok(self.start)
        } else {
            Err(format!(
                "--{flag} takes a single value for this command, got {self}"
            ))
        }
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 1 {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.stop, self.count)
        }
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| format!("invalid number {t:?} in range {s:?}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value in range {s:?}"))
            }
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Self::single(num(v)?)),
            [a, b, c] => {
                let count: usize = c
                    .trim()
                    .parse()
                    .map_err(|_| format!("invalid count {c:?} in range {s:?}"))?;
                if count == 0 {
                    return Err(format!("range {s:?} has zero points"));
                }
                Ok(Self {
                    start: num(a)?,
                    stop: num(b)?,
                    count,
                })
            }
            _ => Err(format!("expected start:stop:count or a number, got {s:?}")),
        }
    }
}

impl Serialize for RangeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Everything that determines a run; echoed into every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub n_qubits: usize,
    pub d_over_lambda: RangeSpec,
    /// `2π d/λ` for single-point runs.
    pub phi: Option<f64>,
    pub omega_r: RangeSpec,
    pub gamma_1d: f64,
    pub incidence: &'static str,
    pub zero_tol: f64,
    pub subradiant_threshold: f64,
    pub tol_integrator: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targeted: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub version: &'static str,
}
