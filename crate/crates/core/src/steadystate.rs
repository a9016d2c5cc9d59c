//! Classical operating point: mean intracavity amplitude and the static
//! displacements of the mirror and of the Bogoliubov mode.
//!
//! The total detuning Δ already contains the static shifts, so for a given Δ
//! everything is explicit. Starting instead from the bare detuning Δ₀, the
//! shifts feed back on Δ and Δ solves the cubic
//!
//! ```text
//! Δ³ − Δ₀Δ² + κ²Δ − Δ₀κ² + Cη² = 0,   C = ħχ²/(mω_m²) + 2ζ²/ω̃
//! ```
//!
//! which has one or three real roots (optical bistability).

use nalgebra::Matrix3;

use crate::constants::HBAR;
use crate::dynamics::{build_drift_matrix, stability, Stability};
use crate::error::{Error, Result};
use crate::model::{DerivedCouplings, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Total detuning, rad/s.
    pub delta: f64,
    /// Mean intracavity amplitude, real and non-negative.
    pub alpha_s: f64,
    /// Static mirror displacement, m.
    pub q_s: f64,
    /// Static Bogoliubov position quadrature (dimensionless, ≤ 0).
    pub atom_q_s: f64,
    /// Light-mirror fluctuation coupling χ·x_zpf·α_s, rad/s.
    pub g_mirror: f64,
    /// Light-atom fluctuation coupling √2·ζ·α_s, rad/s.
    pub g_atom: f64,
}

impl OperatingPoint {
    pub fn provenance(&self) -> Vec<(String, String)> {
        [
            ("delta_rad_s", self.delta),
            ("alpha_s", self.alpha_s),
            ("q_s_m", self.q_s),
            ("atom_q_s", self.atom_q_s),
            ("g_mirror_rad_s", self.g_mirror),
            ("g_atom_rad_s", self.g_atom),
        ]
        .into_iter()
        .map(|(k, v)| (format!("op.{k}"), format!("{v:.15e}")))
        .collect()
    }
}

/// One self-consistent solution and its dynamical stability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub point: OperatingPoint,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    /// Bare detuning the branches were solved for, rad/s.
    pub delta0: f64,
    /// Branches ordered by increasing Δ. One or three entries; a double root
    /// appears twice.
    pub branches: Vec<Branch>,
}

impl BranchSet {
    pub const CSV_HEADER: &'static str = "delta0,delta,alpha_s,q_s,Q_s,stability";

    pub fn csv_rows(&self) -> Vec<String> {
        self.branches
            .iter()
            .map(|b| {
                format!(
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                    self.delta0,
                    b.point.delta,
                    b.point.alpha_s,
                    b.point.q_s,
                    b.point.atom_q_s + 0.0, // -0 → 0
                    b.stability
                )
            })
            .collect()
    }
}

pub fn operating_point_at_detuning(
    delta: f64,
    params: &PhysicalParams,
    couplings: &DerivedCouplings,
) -> OperatingPoint {
    let kappa = params.cavity_decay;
    let alpha_s = couplings.eta / delta.hypot(kappa);
    let alpha_sq = alpha_s * alpha_s;
    let zeta = params.atom_cavity_rate;
    OperatingPoint {
        delta,
        alpha_s,
        q_s: HBAR * couplings.chi * alpha_sq
            / (params.mirror_mass * params.mirror_freq * params.mirror_freq),
        atom_q_s: -std::f64::consts::SQRT_2 * zeta * alpha_sq / params.bogoliubov_freq,
        g_mirror: couplings.mirror_rate() * alpha_s,
        g_atom: std::f64::consts::SQRT_2 * zeta * alpha_s,
    }
}

/// C = ħχ²/(mω_m²) + 2ζ²/ω̃, so that Δ₀ = Δ + C·α_s².
pub fn radiation_pressure_constant(
    params: &PhysicalParams,
    couplings: &DerivedCouplings,
) -> Result<f64> {
    let zeta = params.atom_cavity_rate;
    let mirror = HBAR * couplings.chi * couplings.chi
        / (params.mirror_mass * params.mirror_freq * params.mirror_freq);
    if zeta == 0.0 {
        return Ok(mirror);
    }
    if params.bogoliubov_freq <= 0.0 {
        return Err(Error::SingularConfiguration(
            "zeta > 0 requires a positive Bogoliubov frequency".into(),
        ));
    }
    Ok(mirror + 2.0 * zeta * zeta / params.bogoliubov_freq)
}

/// Bare detuning Δ₀ that produces total detuning `delta`.
pub fn bare_detuning(
    delta: f64,
    params: &PhysicalParams,
    couplings: &DerivedCouplings,
) -> Result<f64> {
    let c = radiation_pressure_constant(params, couplings)?;
    let kappa = params.cavity_decay;
    Ok(delta + c * couplings.eta * couplings.eta / (delta * delta + kappa * kappa))
}

/// All real solutions Δ for a given bare detuning Δ₀ (which already includes
/// any condensate pull).
pub fn solve_self_consistent(
    delta0: f64,
    params: &PhysicalParams,
    couplings: &DerivedCouplings,
) -> Result<BranchSet> {
    let kappa = params.cavity_decay;
    let c = radiation_pressure_constant(params, couplings)?;
    // Work in units of κ: x³ − d x² + x − d + s = 0.
    let d = delta0 / kappa;
    let s = c * couplings.eta * couplings.eta / kappa.powi(3);
    let coeffs = [1.0, -d, 1.0, s - d];

    let roots = real_cubic_roots(coeffs)?;
    let double_root = roots.len() == 3 && is_double(coeffs);

    let tol = 1e-9 * delta0.abs().max(kappa);
    let mut branches = Vec::with_capacity(roots.len());
    for x in roots {
        let delta = x * kappa;
        let residual =
            delta - delta0 + c * couplings.eta * couplings.eta / (delta * delta + kappa * kappa);
        if !(residual.abs() < tol) {
            return Err(Error::Internal(format!(
                "detuning root {delta:e} leaves residual {residual:e} (tolerance {tol:e})"
            )));
        }
        let point = operating_point_at_detuning(delta, params, couplings);
        let stability = if double_root {
            Stability::Marginal
        } else {
            stability(&build_drift_matrix(&point, params, couplings))?.class
        };
        branches.push(Branch { point, stability });
    }
    Ok(BranchSet { delta0, branches })
}

/// Bare detuning including the condensate pull, for a given laser–cavity
/// detuning ω_C − ω_L.
pub fn bare_detuning_from_cavity(cavity_detuning: f64, params: &PhysicalParams) -> f64 {
    cavity_detuning + params.condensate_pull.unwrap_or(0.0)
}

fn discriminant([a, b, c, d]: [f64; 4]) -> (f64, f64) {
    let terms = [
        18.0 * a * b * c * d,
        -4.0 * b * b * b * d,
        b * b * c * c,
        -4.0 * a * c * c * c,
        -27.0 * a * a * d * d,
    ];
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>();
    (terms.iter().sum(), scale)
}

fn is_double(coeffs: [f64; 4]) -> bool {
    let (disc, scale) = discriminant(coeffs);
    disc.abs() <= 1e-12 * scale
}

/// Real roots of a monic real cubic, ascending. Companion-matrix eigenvalues
/// followed by one Newton step each.
fn real_cubic_roots(coeffs: [f64; 4]) -> Result<Vec<f64>> {
    let [a, b, c, d] = coeffs;
    debug_assert_eq!(a, 1.0);
    let companion = Matrix3::new(-b, -c, -d, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eig = companion.complex_eigenvalues();
    let (disc, scale) = discriminant(coeffs);
    let three_real = disc >= -1e-12 * scale;

    let mut roots: Vec<f64> = if three_real {
        eig.iter().map(|z| z.re).collect()
    } else {
        let best = eig
            .iter()
            .min_by(|p, q| p.im.abs().total_cmp(&q.im.abs()))
            .ok_or_else(|| Error::Internal("empty companion spectrum".into()))?;
        vec![best.re]
    };
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::Internal(
            "cubic solver produced a non-finite root".into(),
        ));
    }
    for r in roots.iter_mut() {
        let p = ((*r + b) * *r + c) * *r + d;
        let dp = (3.0 * *r + 2.0 * b) * *r + c;
        if dp != 0.0 {
            let step = p / dp;
            if step.is_finite() {
                *r -= step;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}
