//! Spectral variances vs. Lyapunov vs. time-domain estimates.

use nalgebra::Matrix6;

use super::lyapunov::solve_lyapunov;
use super::timedomain::{simulate_time_domain, TimeDomainConfig};
use crate::dynamics::{
    build_diffusion_matrix, build_drift_matrix, BathModel, ATOM_Q, BASIS_LABELS, MIRROR_P, MIRROR_Q,
};
use crate::error::Result;
use crate::model::{derive_couplings, PhysicalParams};
use crate::spectra::{MomentumMode, NoiseModel, Observable, SpectrumEngine};
use crate::steadystate::operating_point_at_detuning;
use crate::thermo::{variance, Integration};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheckOptions {
    /// Relative tolerance between spectral and Lyapunov variances.
    pub spectral_tolerance: f64,
    /// Allowed deviation of time-domain entries, in standard errors.
    pub sigma: f64,
    pub time_domain: Option<TimeDomainConfig>,
    /// Feed the Lyapunov oracle a diffusion matrix with the Brownian entry
    /// doubled. The comparison must then fail.
    pub negative_control: bool,
    pub integration: Integration,
}

impl Default for CrossCheckOptions {
    fn default() -> Self {
        CrossCheckOptions {
            spectral_tolerance: 0.01,
            sigma: 3.0,
            time_domain: None,
            negative_control: false,
            integration: Integration::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub method: String,
    pub quantity: String,
    pub value: f64,
    pub reference: f64,
    /// Relative tolerance for spectral rows, absolute (σ·SE) for time-domain rows.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckReport {
    pub delta: f64,
    pub rows: Vec<CheckRow>,
}

impl CrossCheckReport {
    pub const CSV_HEADER: &'static str = "method,quantity,value,reference,tolerance,pass";

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{:.12e},{:.12e},{:.6e},{}",
                    r.method, r.quantity, r.value, r.reference, r.tolerance, r.pass
                )
            })
            .collect()
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<12} {:<10} {:>20} {:>20} {:>12}  {}\n",
            "method", "quantity", "value", "reference", "tolerance", "result"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:<10} {:>20.12e} {:>20.12e} {:>12.3e}  {}\n",
                r.method,
                r.quantity,
                r.value,
                r.reference,
                r.tolerance,
                if r.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Compare the three variance routes at total detuning `delta`. The spectral
/// engine runs in white-noise mode with exact momentum so that all routes
/// describe the same Markovian model.
pub fn cross_check(
    params: &PhysicalParams,
    delta: f64,
    opts: &CrossCheckOptions,
) -> Result<CrossCheckReport> {
    let couplings = derive_couplings(params)?;
    let op = operating_point_at_detuning(delta, params, &couplings);
    let k = build_drift_matrix(&op, params, &couplings);
    let d = build_diffusion_matrix(params, &couplings, BathModel::HighTWhite);

    let mut d_oracle = d.matrix;
    if opts.negative_control {
        d_oracle[(MIRROR_P, MIRROR_P)] *= 2.0;
    }
    let (v, active) = solve_lyapunov(&k.matrix, &d_oracle)?;

    let engine = SpectrumEngine::new(
        k.clone(),
        params,
        &couplings,
        NoiseModel::HighTWhite,
        MomentumMode::Exact,
    );
    let mut rows = Vec::new();
    let mut observables = vec![
        (Observable::MirrorPosition, MIRROR_Q),
        (Observable::MirrorMomentum, MIRROR_P),
    ];
    if active[ATOM_Q] {
        observables.push((Observable::AtomPosition, ATOM_Q));
    }
    for (obs, i) in observables {
        let s = variance(&engine, obs, params, opts.integration)?;
        let reference = v[(i, i)];
        let rel = (s.value - reference).abs() / reference.abs();
        rows.push(CheckRow {
            method: "spectral".into(),
            quantity: format!("var_{}", obs.symbol()),
            value: s.value,
            reference,
            tolerance: opts.spectral_tolerance,
            pass: rel <= opts.spectral_tolerance,
        });
    }

    if let Some(cfg) = &opts.time_domain {
        let emp = simulate_time_domain(&k.matrix, &d.matrix, cfg)?;
        if emp.aborted() {
            rows.push(CheckRow {
                method: "time-domain".into(),
                quantity: "trajectory".into(),
                value: f64::NAN,
                reference: f64::NAN,
                tolerance: f64::NAN,
                pass: false,
            });
        } else {
            rows.extend(time_domain_rows(
                &emp.matrix,
                &emp.std_error,
                &v,
                &active,
                opts.sigma,
            ));
        }
    }
    Ok(CrossCheckReport { delta, rows })
}

fn time_domain_rows(
    emp: &Matrix6<f64>,
    se: &Matrix6<f64>,
    v: &Matrix6<f64>,
    active: &[bool; 6],
    sigma: f64,
) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for i in 0..6 {
        for j in i..6 {
            if !(active[i] && active[j]) {
                continue;
            }
            let tol = sigma * se[(i, j)];
            rows.push(CheckRow {
                method: "time-domain".into(),
                quantity: format!("V[{},{}]", BASIS_LABELS[i], BASIS_LABELS[j]),
                value: emp[(i, j)],
                reference: v[(i, j)],
                tolerance: tol,
                pass: (emp[(i, j)] - v[(i, j)]).abs() <= tol,
            });
        }
    }
    rows
}
