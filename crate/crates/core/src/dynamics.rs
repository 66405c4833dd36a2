//! Time evolution `dρ/dt = L ρ` and spin-spin correlators along the way.
//!
//! Integration uses the Dormand-Prince 5(4) pair with local extrapolation and
//! per-step error control; output times are hit exactly by clipping steps.
//! The scheme is linear, so `Tr ρ` is conserved to rounding.

use std::io::Write;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{build_liouvillian, unvectorize, vectorize};
use crate::operators::{correlation_matrix, ArrayParams};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_SAMPLES: usize = 200;
/// Smallest eigenvalue of `ρ` below this aborts the run.
pub const POSITIVITY_FLOOR: f64 = -1e-6;
const INPUT_TOL: f64 = 1e-10;

/// Projector onto `|1...1>`, index `2^N - 1`.
pub fn fully_excited_state(n_qubits: usize) -> Result<Mat<C64>> {
    if n_qubits == 0 {
        return Err(Error::Argument("need at least one qubit".into()));
    }
    let dim = 1usize << n_qubits;
    let mut rho = Mat::<C64>::zeros(dim, dim);
    rho[(dim - 1, dim - 1)] = C64::new(1.0, 0.0);
    Ok(rho)
}

/// `Tr[ρ σn† σm]` with 1-based sites.
pub fn correlator(rho: MatRef<'_, C64>, n: usize, m: usize) -> Result<C64> {
    let dim = rho.nrows();
    if !dim.is_power_of_two() || rho.ncols() != dim || dim < 2 {
        return Err(Error::Argument(format!(
            "density matrix must be 2^N x 2^N, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let n_qubits = dim.trailing_zeros() as usize;
    if n == 0 || m == 0 || n > n_qubits || m > n_qubits {
        return Err(Error::Argument(format!(
            "sites ({n}, {m}) outside 1..={n_qubits}"
        )));
    }
    Ok(correlation_matrix(rho, n_qubits)[(n - 1, m - 1)])
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Local error tolerance, relative and absolute.
    pub tol: f64,
    /// Positivity is checked on every `positivity_stride`-th sample (0 disables).
    pub positivity_stride: usize,
    /// Keep the full density matrix at each sample.
    pub keep_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            positivity_stride: 10,
            keep_states: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub n_qubits: usize,
    pub times: Vec<f64>,
    /// `N x N` matrix `Tr[ρ σn† σm]` per sample, 0-based.
    pub correlators: Vec<Mat<C64>>,
    pub trace_drift: Vec<f64>,
    pub purity: Vec<f64>,
    /// Accumulated local error estimates (1-norm over `vec ρ`) up to each sample;
    /// bounds the error of any correlator to first order.
    pub error_estimate: Vec<f64>,
    /// Smallest eigenvalue of `ρ` where it was checked.
    pub min_eigenvalue: Vec<Option<f64>>,
    pub states: Option<Vec<Mat<C64>>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    /// `Tr[ρ σn† σm]` over time, 1-based sites.
    pub fn series(&self, n: usize, m: usize) -> Result<Vec<C64>> {
        if n == 0 || m == 0 || n > self.n_qubits || m > self.n_qubits {
            return Err(Error::Argument(format!(
                "sites ({n}, {m}) outside 1..={}",
                self.n_qubits
            )));
        }
        Ok(self.correlators.iter().map(|c| c[(n - 1, m - 1)]).collect())
    }

    /// Correlator value at the sample closest to `t`.
    pub fn at(&self, t: f64, n: usize, m: usize) -> Result<C64> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Argument("empty trajectory".into()))?;
        Ok(self.series(n, m)?[idx])
    }
}

fn check_density_matrix(rho: MatRef<'_, C64>, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::Argument(format!(
            "initial state is {}x{}, expected {dim}x{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut herm = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if herm > INPUT_TOL {
        return Err(Error::Argument(format!(
            "initial state is not Hermitian (error {herm:e})"
        )));
    }
    let trace: C64 = (0..dim).map(|i| rho[(i, i)]).sum();
    if (trace - 1.0).norm() > INPUT_TOL {
        return Err(Error::Argument(format!("initial state has trace {trace}")));
    }
    let min = min_eigenvalue(rho)?;
    if min < -INPUT_TOL {
        return Err(Error::Argument(format!(
            "initial state is not positive semidefinite (eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn min_eigenvalue(rho: MatRef<'_, C64>) -> Result<f64> {
    let ev = rho
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigenvalues of the state failed: {e:?}")))?;
    Ok(ev.first().copied().unwrap_or(0.0))
}

// Dormand-Prince 5(4) tableau in autonomous form (no nodes).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Propagates `rho0` to `t_max`, recording `samples` uniformly spaced times
/// including `0` and `t_max`.
pub fn evolve(
    params: &ArrayParams,
    rho0: MatRef<'_, C64>,
    t_max: f64,
    samples: usize,
) -> Result<Trajectory> {
    evolve_with(params, rho0, t_max, samples, &EvolveOptions::default())
}

pub fn evolve_with(
    params: &ArrayParams,
    rho0: MatRef<'_, C64>,
    t_max: f64,
    samples: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Argument(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if samples < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let dim = params.hilbert_dim();
    check_density_matrix(rho0, dim)?;
    let l = build_liouvillian(params)?;
    let n = l.dim();

    let times: Vec<f64> = (0..samples)
        .map(|i| t_max * i as f64 / (samples - 1) as f64)
        .collect();
    let mut traj = Trajectory {
        n_qubits: params.n_qubits,
        times: times.clone(),
        correlators: Vec::with_capacity(samples),
        trace_drift: Vec::with_capacity(samples),
        purity: Vec::with_capacity(samples),
        error_estimate: Vec::with_capacity(samples),
        min_eigenvalue: Vec::with_capacity(samples),
        states: opts.keep_states.then(Vec::new),
        accepted_steps: 0,
        rejected_steps: 0,
    };

    let mut y = vectorize(rho0);
    let mut t = 0.0;
    let mut acc_err = 0.0;
    let max_row: f64 = (0..n)
        .map(|r| l.matrix.row(r).1.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut h = 0.01 / max_row.max(1.0);
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    l.matrix.mul_vec_into(&y, &mut k[0]);
    let mut stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    for (sample, &target) in times.iter().enumerate() {
        while t < target {
            let step = h.min(target - t);
            if step < 1e-14 * t.abs().max(1.0) && target - t > step {
                return Err(Error::StepUnderflow {
                    last_good_time: t,
                    step,
                });
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (step * A[s][j]);
                        }
                    }
                    stage[i] = acc;
                }
                let (_, rest) = k.split_at_mut(s);
                l.matrix.mul_vec_into(&stage, &mut rest[0]);
            }
            // stage 6 evaluated at the fifth-order solution
            y_new.copy_from_slice(&stage);
            let mut err_sq = 0.0;
            let mut err_l1 = 0.0;
            for i in 0..n {
                let e: C64 = (0..7).map(|j| k[j][i] * (step * E[j])).sum();
                let scale = opts.tol * (1.0 + y[i].norm().max(y_new[i].norm()));
                err_sq += (e.norm() / scale).powi(2);
                err_l1 += e.norm();
            }
            let err = (err_sq / n as f64).sqrt();
            if err <= 1.0 {
                t = if target - t <= step { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                acc_err += err_l1;
                traj.accepted_steps += 1;
            } else {
                traj.rejected_steps += 1;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a clipped step says nothing about the natural step size
            if err > 1.0 || step == h {
                h = step * factor;
            }
            if !h.is_finite() || h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow {
                    last_good_time: t,
                    step: h,
                });
            }
        }
        let rho = unvectorize(&y, dim);
        let trace: C64 = (0..dim).map(|i| rho[(i, i)]).sum();
        let purity: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        let checked = opts.positivity_stride > 0
            && (sample % opts.positivity_stride == 0 || sample + 1 == samples);
        let min_ev = if checked {
            let herm = Mat::from_fn(dim, dim, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
            let m = min_eigenvalue(herm.as_ref())?;
            if m < POSITIVITY_FLOOR {
                return Err(Error::Positivity {
                    time: t,
                    min_eigenvalue: m,
                });
            }
            Some(m)
        } else {
            None
        };
        traj.correlators
            .push(correlation_matrix(rho.as_ref(), params.n_qubits));
        traj.trace_drift.push((trace - 1.0).norm());
        traj.purity.push(purity);
        traj.error_estimate.push(acc_err);
        traj.min_eigenvalue.push(min_ev);
        if let Some(states) = traj.states.as_mut() {
            states.push(rho);
        }
    }
    Ok(traj)
}

/// `t,re_c_1_1,im_c_1_1,...,trace_drift,purity` with sites 1-based and
/// `(n, m)` in row-major order.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let n = traj.n_qubits;
    let mut header = vec!["t".to_string()];
    for a in 1..=n {
        for b in 1..=n {
            header.push(format!("re_c_{a}_{b}"));
            header.push(format!("im_c_{a}_{b}"));
        }
    }
    header.push("trace_drift".into());
    header.push("purity".into());
    writeln!(w, "{}", header.join(","))?;
    for (i, t) in traj.times.iter().enumerate() {
        let mut row = vec![format!("{t:.16e}")];
        let c = &traj.correlators[i];
        for a in 0..n {
            for b in 0..n {
                row.push(format!("{:.16e}", c[(a, b)].re));
                row.push(format!("{:.16e}", c[(a, b)].im));
            }
        }
        row.push(format!("{:.16e}", traj.trace_drift[i]));
        row.push(format!("{:.16e}", traj.purity[i]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn fully_excited_state_is_pure_and_inverted() {
        let rho = fully_excited_state(3).unwrap();
        let trace: C64 = (0..8).map(|i| rho[(i, i)]).sum();
        assert_eq!(trace, C64::new(1.0, 0.0));
        assert_eq!(rho[(7, 7)], C64::new(1.0, 0.0));
        for n in 1..=3 {
            for m in 1..=3 {
                let want = if n == m { 1.0 } else { 0.0 };
                assert_eq!(correlator(rho.as_ref(), n, m).unwrap(), C64::new(want, 0.0));
            }
        }
        assert!(fully_excited_state(0).is_err());
    }

    #[test]
    fn correlator_rejects_bad_sites() {
        let rho = fully_excited_state(2).unwrap();
        assert!(matches!(
            correlator(rho.as_ref(), 0, 1),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            correlator(rho.as_ref(), 1, 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn rejects_invalid_initial_states() {
        let p = ArrayParams::new(1, 0.0, 0.0).unwrap();
        let mut rho = Mat::<C64>::zeros(2, 2);
        rho[(0, 0)] = C64::new(0.5, 0.0);
        assert!(matches!(
            evolve(&p, rho.as_ref(), 1.0, 3),
            Err(Error::Argument(_))
        ));
        rho[(1, 1)] = C64::new(0.5, 0.0);
        rho[(0, 1)] = C64::new(0.6, 0.0);
        rho[(1, 0)] = C64::new(0.6, 0.0);
        assert!(matches!(
            evolve(&p, rho.as_ref(), 1.0, 3),
            Err(Error::Argument(_))
        ));
        let ok = fully_excited_state(1).unwrap();
        assert!(matches!(
            evolve(&p, ok.as_ref(), 0.0, 3),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            evolve(&p, ok.as_ref(), 1.0, 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn single_qubit_decay_is_exponential() {
        let p = ArrayParams::new(1, 0.0, 0.0).unwrap();
        let rho0 = fully_excited_state(1).unwrap();
        let traj = evolve(&p, rho0.as_ref(), 5.0, 51).unwrap();
        for (t, c) in traj.times.iter().zip(traj.series(1, 1).unwrap()) {
            assert!((c.re - (-2.0 * t).exp()).abs() < 1e-8, "t={t}");
        }
        assert_eq!(*traj.times.last().unwrap(), 5.0);
    }

    #[test]
    fn csv_has_row_major_columns() {
        let p = ArrayParams::new(2, FRAC_PI_2, 1.0).unwrap();
        let rho0 = fully_excited_state(2).unwrap();
        let traj = evolve(&p, rho0.as_ref(), 0.5, 3).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,re_c_1_1,im_c_1_1,re_c_1_2,im_c_1_2,re_c_2_1,im_c_2_1,re_c_2_2,im_c_2_2,trace_drift,purity"
        );
        assert_eq!(lines.count(), 3);
    }
}
