//! Stationary distribution of the energy-state chain.

use crate::error::{Error, Result};
use crate::transition::TransitionModel;
use nalgebra::{DMatrix, DVector};

/// Residual bound certified by a successful solve.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Successive-change stopping threshold for the power-iteration fallback.
pub const POWER_ITERATION_TOL: f64 = 1e-14;
pub const POWER_ITERATION_MAX: usize = 1_000_000;
/// Entries of pi may dip this far below zero before clamping.
pub const NEGATIVITY_TOL: f64 = 1e-12;
/// Normalization tolerance on the output vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    PowerIteration,
}

/// A stationary distribution with its validity certificates.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    /// Max-norm of A^T pi - pi.
    pub residual: f64,
    pub method: SolveMethod,
}

fn residual(matrix: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(pi);
    let r = matrix.transpose() * &v - &v;
    r.amax()
}

fn finish(matrix: &DMatrix<f64>, mut pi: Vec<f64>, method: SolveMethod) -> Option<StationaryDistribution> {
    for p in &mut pi {
        if *p < -NEGATIVITY_TOL {
            return None;
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = pi.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return None;
    }
    for p in &mut pi {
        *p /= sum;
    }
    let res = residual(matrix, &pi);
    if res > RESIDUAL_TOL {
        return None;
    }
    Some(StationaryDistribution {
        pi,
        residual: res,
        method,
    })
}

fn solve_direct(matrix: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = matrix.nrows();
    // (A^T - E + Q) pi = b with b all ones, E identity, Q all ones.
    let mut m = matrix.transpose();
    for i in 0..n {
        m[(i, i)] -= 1.0;
    }
    m.add_scalar_mut(1.0);
    let b = DVector::from_element(n, 1.0);
    m.lu().solve(&b).map(|x| x.as_slice().to_vec())
}

fn solve_power(matrix: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = matrix.nrows();
    let at = matrix.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_ITERATION_MAX {
        let next = &at * &pi;
        let change = (&next - &pi).amax();
        pi = next;
        if change < POWER_ITERATION_TOL {
            return Some(pi.as_slice().to_vec());
        }
    }
    None
}

/// Solves pi = A^T pi. The primary path is the rank-corrected dense linear
/// system; if its residual fails certification, power iteration from the
/// uniform vector takes over. Both failing signals a reducible or periodic
/// chain, which is reported instead of silently normalized away.
pub fn solve_stationary(model: &TransitionModel) -> Result<StationaryDistribution> {
    let matrix = &model.matrix;
    if let Some(sd) = solve_direct(matrix).and_then(|pi| finish(matrix, pi, SolveMethod::Direct)) {
        return Ok(sd);
    }
    if let Some(sd) = solve_power(matrix).and_then(|pi| finish(matrix, pi, SolveMethod::PowerIteration))
    {
        return Ok(sd);
    }
    let diag = solve_direct(matrix)
        .map(|pi| format!("direct-solve residual {:.3e}", residual(matrix, &pi)))
        .unwrap_or_else(|| "singular linear system".to_string());
    Err(Error::Solver(format!(
        "no certified stationary distribution ({diag}); the chain may be reducible or periodic"
    )))
}

/// Pass/fail report for a candidate stationary vector.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub residual: f64,
    pub min_entry: f64,
    pub sum: f64,
    pub pass: bool,
}

pub fn validate_stationary(model: &TransitionModel, pi: &[f64]) -> Result<Certificate> {
    if pi.len() != model.matrix.nrows() {
        return Err(Error::Domain(format!(
            "pi has {} entries, matrix has {} states",
            pi.len(),
            model.matrix.nrows()
        )));
    }
    let res = residual(&model.matrix, pi);
    let min_entry = pi.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = pi.iter().sum();
    let pass = res <= RESIDUAL_TOL
        && min_entry >= -NEGATIVITY_TOL
        && (sum - 1.0).abs() <= NORMALIZATION_TOL;
    Ok(Certificate {
        residual: res,
        min_entry,
        sum,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(a: f64, b: f64) -> TransitionModel {
        TransitionModel {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0 - a, a, b, 1.0 - b]),
            selection: vec![vec![], vec![]],
        }
    }

    #[test]
    fn symmetric_two_state_chain() {
        let sd = solve_stationary(&two_state(0.2, 0.2)).unwrap();
        assert!((sd.pi[0] - 0.5).abs() < 1e-12);
        assert!((sd.pi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_two_state_chain_closed_form() {
        // pi = [b/(a+b), a/(a+b)]
        let sd = solve_stationary(&two_state(0.3, 0.1)).unwrap();
        assert!((sd.pi[0] - 0.25).abs() < 1e-12);
        assert!((sd.pi[1] - 0.75).abs() < 1e-12);
        assert!(sd.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn invalid_model_is_rejected() {
        // Substochastic rows: no stationary distribution exists.
        let model = TransitionModel {
            matrix: DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.25, 0.25]),
            selection: vec![vec![], vec![]],
        };
        assert!(matches!(solve_stationary(&model), Err(Error::Solver(_))));
    }

    #[test]
    fn certificate_flags_bad_vectors() {
        let model = two_state(0.3, 0.1);
        let exact = solve_stationary(&model).unwrap();
        assert!(validate_stationary(&model, &exact.pi).unwrap().pass);

        let uniform = vec![0.5, 0.5];
        let cert = validate_stationary(&model, &uniform).unwrap();
        assert!(!cert.pass);
        assert!(cert.residual > 1e-2);

        let negative = vec![1.2, -0.2];
        assert!(!validate_stationary(&model, &negative).unwrap().pass);

        assert!(validate_stationary(&model, &[1.0]).is_err());
    }

    #[test]
    fn direct_and_power_iteration_agree() {
        let model = two_state(0.37, 0.21);
        let direct = solve_direct(&model.matrix).unwrap();
        let power = solve_power(&model.matrix).unwrap();
        for (d, p) in direct.iter().zip(&power) {
            assert!((d - p).abs() < 1e-8);
        }
    }
}
