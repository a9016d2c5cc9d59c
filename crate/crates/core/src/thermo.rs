//! Variances from spectral areas, effective temperature, and sweeps.

use std::fmt;

use rayon::prelude::*;

use crate::constants::{HBAR, K_B};
use crate::dynamics::{
    build_drift_matrix, driven_stability, eigenvalues, marginal_tolerance, Stability,
};
use crate::error::{Error, Result};
use crate::model::{derive_couplings, PhysicalParams};
use crate::quadrature::{integrate, QuadOptions};
use crate::spectra::{MomentumMode, NoiseModel, Observable, SpectrumEngine};
use crate::steadystate::operating_point_at_detuning;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub rel_tol: f64,
    /// Upper limit Ω_max as a multiple of max(κ, ω_m, ω̃).
    pub span_factor: f64,
}

impl Default for Integration {
    fn default() -> Self {
        Integration {
            rel_tol: 1e-6,
            span_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub error: f64,
}

/// Breakpoints at each resonance center c = |Im λ| and at c ± |Re λ|·4^k.
fn resonance_seeds(engine: &SpectrumEngine, upper: f64) -> Result<Vec<f64>> {
    let k = &engine.drift.matrix;
    let tol = marginal_tolerance(k);
    let mut pts = vec![0.0, upper];
    for z in eigenvalues(k)? {
        if z.im < 0.0 || z.re.abs() <= tol {
            continue;
        }
        let c = z.im;
        let w = z.re.abs().max(1e-12 * upper);
        pts.push(c);
        let mut step = w;
        while step < upper {
            pts.push(c - step);
            pts.push(c + step);
            step *= 4.0;
        }
    }
    pts.retain(|x| (0.0..=upper).contains(x));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| *b - *a <= 1e-12 * upper);
    if *pts.last().expect("upper bound kept") < upper {
        pts.push(upper);
    }
    Ok(pts)
}

/// ∫ S(ω) dω over (−Ω_max, Ω_max), folded onto [0, Ω_max].
///
/// Unstable points, and points whose noise-driven part is only marginally
/// stable, have no stationary variance. An undriven decoupled Bogoliubov
/// pair gives zero for `Q` and does not affect `q`, `p`.
pub fn variance(
    engine: &SpectrumEngine,
    observable: Observable,
    params: &PhysicalParams,
    integration: Integration,
) -> Result<VarianceEstimate> {
    match driven_stability(&engine.drift)? {
        Stability::Stable => {}
        class => {
            return Err(Error::DivergentVariance(format!(
                "operating point at delta = {:.6e} rad/s is {class}",
                engine.drift.point.delta
            )))
        }
    }
    if observable == Observable::AtomPosition && engine.drift.atom_decoupled() {
        return Ok(VarianceEstimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let upper = integration.span_factor
        * params
            .cavity_decay
            .max(params.mirror_freq)
            .max(params.bogoliubov_freq);
    let seeds = resonance_seeds(engine, upper)?;
    let opts = QuadOptions {
        rel_tol: integration.rel_tol,
        ..QuadOptions::default()
    };
    let r = integrate(
        |w| Ok(engine.dns(observable, w)? + engine.dns(observable, -w)?),
        &seeds,
        opts,
    )?;
    Ok(VarianceEstimate {
        value: r.value,
        error: r.error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperaturePoint {
    pub t_eff: f64,
    pub var_q: VarianceEstimate,
    pub var_p: VarianceEstimate,
}

/// T_eff = (ħω_m/2k_B)(⟨δq̃²⟩ + ⟨δp̃²⟩).
pub fn effective_temperature(
    engine: &SpectrumEngine,
    params: &PhysicalParams,
    integration: Integration,
) -> Result<TemperaturePoint> {
    let var_q = variance(engine, Observable::MirrorPosition, params, integration)?;
    let var_p = match engine.momentum {
        MomentumMode::Static => var_q,
        MomentumMode::Exact => variance(engine, Observable::MirrorMomentum, params, integration)?,
    };
    Ok(TemperaturePoint {
        t_eff: HBAR * params.mirror_freq / (2.0 * K_B) * (var_q.value + var_p.value),
        var_q,
        var_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Total detuning, rad/s.
    Delta,
    /// Atom-cavity rate ζ, rad/s.
    Zeta,
    /// Bogoliubov frequency ω̃, rad/s.
    OmegaTilde,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Delta => "delta",
            SweepVariable::Zeta => "zeta",
            SweepVariable::OmegaTilde => "omega_tilde",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Strictly increasing, rad/s.
    pub values: Vec<f64>,
    /// Total detuning for ζ and ω̃ sweeps, rad/s.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub value: f64,
    pub stability: Stability,
    /// `None` marks a gap (no stationary state).
    pub temperature: Option<TemperaturePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureCurve {
    pub variable: SweepVariable,
    pub noise: NoiseModel,
    pub momentum: MomentumMode,
    pub points: Vec<CurvePoint>,
}

impl TemperatureCurve {
    pub const CSV_HEADER: &'static str = "sweep_value,T_eff_K,var_q,var_p,stable_flag";

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| match &p.temperature {
                Some(t) => format!(
                    "{:.12e},{:.12e},{:.12e},{:.12e},{}",
                    p.value, t.t_eff, t.var_q.value, t.var_p.value, p.stability
                ),
                None => format!("{:.12e},,,,{}", p.value, p.stability),
            })
            .collect()
    }

    pub fn t_eff(&self) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|p| p.temperature.map(|t| t.t_eff))
            .collect()
    }

    pub fn provenance(&self) -> Vec<(String, String)> {
        vec![
            ("sweep".into(), self.variable.as_str().into()),
            ("noise".into(), self.noise.as_str().into()),
            ("momentum".into(), self.momentum.as_str().into()),
        ]
    }
}

/// Parameters and detuning at one sweep value.
pub fn sweep_point(spec: &SweepSpec, value: f64, params: &PhysicalParams) -> (PhysicalParams, f64) {
    match spec.variable {
        SweepVariable::Delta => (params.clone(), value),
        SweepVariable::Zeta => (
            PhysicalParams {
                atom_cavity_rate: value,
                ..params.clone()
            },
            spec.delta,
        ),
        SweepVariable::OmegaTilde => (
            PhysicalParams {
                bogoliubov_freq: value,
                ..params.clone()
            },
            spec.delta,
        ),
    }
}

pub fn temperature_sweep(
    spec: &SweepSpec,
    params: &PhysicalParams,
    noise: NoiseModel,
    momentum: MomentumMode,
    integration: Integration,
) -> Result<TemperatureCurve> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if spec.values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    let points = spec
        .values
        .par_iter()
        .map(|&value| {
            let (p, delta) = sweep_point(spec, value, params);
            let c = derive_couplings(&p)?;
            let op = operating_point_at_detuning(delta, &p, &c);
            let k = build_drift_matrix(&op, &p, &c);
            let stability = driven_stability(&k)?;
            let temperature = if stability == Stability::Stable {
                let engine = SpectrumEngine::new(k, &p, &c, noise, momentum);
                Some(effective_temperature(&engine, &p, integration)?)
            } else {
                None
            };
            Ok(CurvePoint {
                value,
                stability,
                temperature,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperatureCurve {
        variable: spec.variable,
        noise,
        momentum,
        points,
    })
}
