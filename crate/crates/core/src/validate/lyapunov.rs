//! Steady-state covariance from K·V + V·Kᵀ + D = 0.

use nalgebra::{DMatrix, DVector, Matrix6};

use super::{active_indices, reachable};
use crate::dynamics::{classify, BathModel, DiffusionMatrix, DriftMatrix, Stability};
use crate::error::{Error, Result};

/// V = ⟨{φ_i, φ_j}⟩/2 at steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Matrix6<f64>,
    pub bath: BathModel,
    /// Variables reached by noise; the others are identically zero.
    pub active: [bool; 6],
}

pub fn lyapunov_covariance(k: &DriftMatrix, d: &DiffusionMatrix) -> Result<CovarianceMatrix> {
    if d.bath == BathModel::QuantumExact {
        return Err(Error::UnsupportedCombination(
            "the quantum-exact bath is frequency dependent and has no Lyapunov form; use high-t-white"
                .into(),
        ));
    }
    let (matrix, active) = solve_lyapunov(&k.matrix, &d.matrix)?;
    Ok(CovarianceMatrix {
        matrix,
        bath: d.bath,
        active,
    })
}

/// Solve the Lyapunov equation on the noise-reachable subspace as a dense
/// n²-unknown linear system (n ≤ 6).
pub fn solve_lyapunov(k: &Matrix6<f64>, d: &Matrix6<f64>) -> Result<(Matrix6<f64>, [bool; 6])> {
    let active = reachable(k, d);
    let idx = active_indices(&active);
    let n = idx.len();
    if n == 0 {
        return Ok((Matrix6::zeros(), active));
    }
    let kr = DMatrix::from_fn(n, n, |i, j| k[(idx[i], idx[j])]);
    let dr = DMatrix::from_fn(n, n, |i, j| d[(idx[i], idx[j])]);

    let scale = kr.amax();
    if scale == 0.0 {
        return Err(Error::NoSteadyState(
            "drift vanishes on the driven subspace".into(),
        ));
    }
    let max_real = kr
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if classify(max_real, 1e-9 * scale) != Stability::Stable {
        return Err(Error::NoSteadyState(format!(
            "driven subspace is not strictly stable (max Re = {max_real:.3e} rad/s)"
        )));
    }

    // Column-major vec: vec(KV + VKᵀ) = (I⊗K + K⊗I) vec(V). Work with K/s, D/s.
    let ks = &kr / scale;
    let ds = &dr / scale;
    let eye = DMatrix::<f64>::identity(n, n);
    let a = eye.kronecker(&ks) + ks.kronecker(&eye);
    let rhs = -DVector::from_column_slice(ds.as_slice());
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NoSteadyState("Lyapunov system is singular".into()))?;
    // One refinement sweep.
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }

    let v = DMatrix::from_column_slice(n, n, x.as_slice());
    let v = (&v + v.transpose()) * 0.5;
    let mut out = Matrix6::zeros();
    for (i, &gi) in idx.iter().enumerate() {
        for (j, &gj) in idx.iter().enumerate() {
            out[(gi, gj)] = v[(i, j)];
        }
    }

    let residual = (k * out + out * k.transpose() + d).amax();
    // 1e-10·‖D‖, unless the basis makes that smaller than the round-off in KV.
    let floor = 64.0 * f64::EPSILON * (k.abs() * out.abs()).amax();
    let bound = (1e-10 * d.amax()).max(floor);
    if !(residual < bound) {
        return Err(Error::Internal(format!(
            "Lyapunov residual {residual:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok((out, active))
}
