//! Linearized fluctuation dynamics ∂ₜφ = Kφ + N.
//!
//! Fluctuation vector, fixed order:
//!
//! | index | variable | convention |
//! |-------|----------|------------|
//! | 0 | δx  | a + a†, [x, y] = 2i |
//! | 1 | δy  | i(a† − a) |
//! | 2 | δq̃ | q / x_zpf |
//! | 3 | δp̃ | p / p_zpf, [q̃, p̃] = i |
//! | 4 | δQ  | (c + c†)/√2 |
//! | 5 | δP  | i(c† − c)/√2 |
//!
//! Field rows carry 2G and matter rows carry G, which follows from the
//! different commutator normalization of the two kinds of quadrature.

use std::fmt;

use nalgebra::{Matrix4, Matrix6, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DerivedCouplings, PhysicalParams};
use crate::steadystate::OperatingPoint;

pub const X: usize = 0;
pub const Y: usize = 1;
pub const MIRROR_Q: usize = 2;
pub const MIRROR_P: usize = 3;
pub const ATOM_Q: usize = 4;
pub const ATOM_P: usize = 5;

pub const BASIS_LABELS: [&str; 6] = ["dx", "dy", "dq", "dp", "dQ", "dP"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    pub matrix: Matrix6<f64>,
    pub point: OperatingPoint,
    /// κ, which also sets the input-noise coupling √(2κ).
    pub cavity_decay: f64,
}

impl DriftMatrix {
    pub fn max_abs(&self) -> f64 {
        self.matrix.amax()
    }

    /// True when no entry links the Bogoliubov pair to the other four variables.
    pub fn atom_decoupled(&self) -> bool {
        let m = &self.matrix;
        (0..4).all(|i| (4..6).all(|j| m[(i, j)] == 0.0 && m[(j, i)] == 0.0))
    }
}

pub fn build_drift_matrix(
    op: &OperatingPoint,
    params: &PhysicalParams,
    couplings: &DerivedCouplings,
) -> DriftMatrix {
    let kappa = params.cavity_decay;
    let delta = op.delta;
    let wm = params.mirror_freq;
    let wa = params.bogoliubov_freq;
    let gm = op.g_mirror;
    let ga = op.g_atom;

    let mut k = Matrix6::zeros();
    k[(X, X)] = -kappa;
    k[(X, Y)] = delta;

    k[(Y, X)] = -delta;
    k[(Y, Y)] = -kappa;
    k[(Y, MIRROR_Q)] = 2.0 * gm;
    k[(Y, ATOM_Q)] = -2.0 * ga;

    k[(MIRROR_Q, MIRROR_P)] = wm;

    k[(MIRROR_P, MIRROR_Q)] = -wm;
    k[(MIRROR_P, MIRROR_P)] = -couplings.gamma;
    k[(MIRROR_P, X)] = gm;

    k[(ATOM_Q, ATOM_P)] = wa;

    k[(ATOM_P, ATOM_Q)] = -wa;
    k[(ATOM_P, X)] = -ga;

    DriftMatrix {
        matrix: k,
        point: *op,
        cavity_decay: kappa,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathModel {
    /// Frequency-dependent ω·coth(ħω/2k_BT) weight; spectral engine only.
    /// The stored matrix holds its value at ω_m for reference.
    QuantumExact,
    /// White Brownian noise, Markov limit with the vacuum half-quantum kept.
    HighTWhite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    pub matrix: Matrix6<f64>,
    pub bath: BathModel,
}

/// Symmetrized diffusion D with ⟨{N_i(t), N_j(t')}⟩/2 = D_ij δ(t − t').
///
/// The input noise enters with strength √(2κ), so an undriven empty cavity
/// relaxes to the vacuum variance ⟨δx²⟩ = ⟨δy²⟩ = 1. The high-T-white mirror
/// entry γ(2n̄_cl + 1) relaxes a decoupled mirror to n̄_cl + 1/2.
pub fn build_diffusion_matrix(
    params: &PhysicalParams,
    couplings: &DerivedCouplings,
    bath: BathModel,
) -> DiffusionMatrix {
    let kappa = params.cavity_decay;
    let mut d = Matrix6::zeros();
    d[(X, X)] = 2.0 * kappa;
    d[(Y, Y)] = 2.0 * kappa;
    d[(MIRROR_P, MIRROR_P)] = match bath {
        BathModel::HighTWhite => couplings.gamma * (2.0 * couplings.classical_occupancy + 1.0),
        BathModel::QuantumExact => couplings.gamma * (2.0 * couplings.thermal_occupancy + 1.0),
    };
    DiffusionMatrix { matrix: d, bath }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Sorted by decreasing real part.
    pub eigenvalues: [Complex64; 6],
    pub max_real: f64,
    pub class: Stability,
}

pub fn eigenvalues(matrix: &Matrix6<f64>) -> Result<[Complex64; 6]> {
    let schur = Schur::try_new(*matrix, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let ev = schur.complex_eigenvalues();
    let mut out = [Complex64::new(0.0, 0.0); 6];
    for (o, e) in out.iter_mut().zip(ev.iter()) {
        *o = *e;
    }
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(out)
}

/// Marginal band half-width used by [`stability`].
pub fn marginal_tolerance(matrix: &Matrix6<f64>) -> f64 {
    1e-9 * matrix.amax()
}

pub fn classify(max_real: f64, tolerance: f64) -> Stability {
    if max_real < -tolerance {
        Stability::Stable
    } else if max_real > tolerance {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

pub fn stability(k: &DriftMatrix) -> Result<StabilityReport> {
    let eigenvalues = eigenvalues(&k.matrix)?;
    let max_real = eigenvalues[0].re;
    Ok(StabilityReport {
        eigenvalues,
        max_real,
        class: classify(max_real, marginal_tolerance(&k.matrix)),
    })
}

/// Stability of the noise-driven part of the system. With the Bogoliubov
/// pair decoupled only the cavity-mirror block is classified, since the
/// undamped atomic pair never receives noise.
pub fn driven_stability(k: &DriftMatrix) -> Result<Stability> {
    if !k.atom_decoupled() {
        return Ok(stability(k)?.class);
    }
    let block: Matrix4<f64> = k.matrix.fixed_view::<4, 4>(0, 0).into_owned();
    let schur = Schur::try_new(block, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let max_real = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max_real.is_finite() {
        return Err(Error::EigenFailure);
    }
    Ok(classify(max_real, 1e-9 * block.amax()))
}

/// K and D as two 6×6 CSV blocks with a basis header line.
pub fn dump_csv(k: &DriftMatrix, d: &DiffusionMatrix) -> String {
    let mut out = String::new();
    let header = format!("# basis,{}\n", BASIS_LABELS.join(","));
    for (name, m) in [("K", &k.matrix), ("D", &d.matrix)] {
        out.push_str(&format!("# block={name}\n"));
        out.push_str(&header);
        for i in 0..6 {
            // + 0.0 prints -0 as 0.
            let row: Vec<String> = (0..6)
                .map(|j| format!("{:.15e}", m[(i, j)] + 0.0))
                .collect();
            out.push_str(&format!("{},{}\n", BASIS_LABELS[i], row.join(",")));
        }
    }
    out
}
