//! Fixtures shared by the benchmarks.

use optomech_core::{
    build_drift_matrix, derive_couplings, operating_point_at_detuning, DerivedCouplings,
    MomentumMode, NoiseModel, PhysicalParams, SpectrumEngine,
};

pub struct Fixture {
    pub params: PhysicalParams,
    pub couplings: DerivedCouplings,
    pub engine: SpectrumEngine,
}

/// Reference parameters at Δ = κ/2, optionally with the Bogoliubov mode
/// resonant with the mirror at ζ = `zeta` rad/s.
pub fn fixture(zeta: f64) -> Fixture {
    let params = PhysicalParams {
        atom_cavity_rate: zeta,
        ..PhysicalParams::reference()
    };
    let couplings = derive_couplings(&params).expect("reference parameters are valid");
    let op = operating_point_at_detuning(0.5 * params.cavity_decay, &params, &couplings);
    let k = build_drift_matrix(&op, &params, &couplings);
    let engine = SpectrumEngine::new(
        k,
        &params,
        &couplings,
        NoiseModel::Symmetrized,
        MomentumMode::Static,
    );
    Fixture {
        params,
        couplings,
        engine,
    }
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
