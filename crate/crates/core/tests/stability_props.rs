mod common;

use common::{draw, driven_stable, well_damped};
use nalgebra::{Matrix6, Vector6};
use optomech_core::dynamics::eigenvalues;
use optomech_core::validate::{routh_hurwitz, solve_lyapunov};
use optomech_core::{build_diffusion_matrix, stability, BathModel, Stability};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (1e-3..2e-2_f64, -2.0..2.0_f64, 0.1..2.0_f64, 0.0..300.0_f64)
}

fn scaling(decades: f64) -> impl Strategy<Value = Vector6<f64>> {
    proptest::array::uniform6(-decades..decades)
        .prop_map(|e| Vector6::from(e.map(|x| 10f64.powf(x))))
}

proptest! {
    #![proptest_config(common::config(1000))]

    #[test]
    fn routh_matches_eigenvalues((power, dk, wt, zeta) in point()) {
        prop_assume!(dk.abs() > 1e-3);
        let d = draw(power, dk, wt, zeta, 1e5);
        let eig = stability(&d.drift).unwrap().class;
        // Inside the eigenvalue marginal band the sign is below resolution.
        prop_assume!(eig != Stability::Marginal);
        prop_assert_eq!(routh_hurwitz(&d.drift.matrix).class, eig);
    }

    #[test]
    fn drift_trace_is_total_damping((power, dk, wt, zeta) in point()) {
        let d = draw(power, dk, wt, zeta, 1e5);
        let want = -2.0 * d.params.cavity_decay - d.couplings.gamma;
        prop_assert!((d.drift.matrix.trace() - want).abs() <= 1e-15 * want.abs());
    }
}

proptest! {
    #![proptest_config(common::config(256))]

    #[test]
    fn classification_survives_rescaling_the_basis(
        (power, dk, wt, zeta) in point(),
        s in scaling(2.0),
    ) {
        prop_assume!(dk.abs() > 1e-3);
        let d = draw(power, dk, wt, zeta, 1e5);
        let k = d.drift.matrix;
        let sk = Matrix6::from_diagonal(&s) * k * Matrix6::from_diagonal(&s.map(|x| 1.0 / x));
        let (a, b) = (eigenvalues(&k).unwrap(), eigenvalues(&sk).unwrap());
        // Backward error of the eigensolver is relative to the rescaled matrix.
        let size = sk.amax();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-9 * size, "{x} vs {y}");
        }
        let eig = stability(&d.drift).unwrap().class;
        prop_assume!(eig != Stability::Marginal);
        prop_assert_eq!(routh_hurwitz(&sk).class, eig);
    }

    /// V → SVS under the canonical rescalings q̃ → s·q̃, p̃ → p̃/s and
    /// Q → t·Q, P → P/t.
    #[test]
    fn covariance_transforms_with_canonical_rescaling(
        (power, dk, wt, zeta) in point(),
        log_s in -1.0..1.0_f64,
        log_t in -1.0..1.0_f64,
    ) {
        let d = draw(power, dk.abs().max(0.05), wt, zeta, 1e3);
        prop_assume!(well_damped(&d));
        let (s, t) = (10f64.powf(log_s), 10f64.powf(log_t));
        let diag = Vector6::new(1.0, 1.0, s, 1.0 / s, t, 1.0 / t);
        let sm = Matrix6::from_diagonal(&diag);
        let si = Matrix6::from_diagonal(&diag.map(|x| 1.0 / x));
        let diff = build_diffusion_matrix(&d.params, &d.couplings, BathModel::HighTWhite).matrix;
        let (v, _) = solve_lyapunov(&d.drift.matrix, &diff).unwrap();
        let (w, _) = solve_lyapunov(&(sm * d.drift.matrix * si), &(sm * diff * sm)).unwrap();
        let want = sm * v * sm;
        for i in 0..6 {
            for j in 0..6 {
                let scale = (want[(i, i)] * want[(j, j)]).sqrt();
                prop_assert!(
                    (w[(i, j)] - want[(i, j)]).abs() <= 1e-8 * scale.max(1e-300),
                    "({i},{j}): {} vs {}", w[(i, j)], want[(i, j)]
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(common::config(128))]

    #[test]
    fn lyapunov_residual_is_small((power, dk, wt, zeta) in point(), log_q in 2.0..5.0_f64) {
        let d = draw(power, dk.abs().max(0.05), wt, zeta, 10f64.powf(log_q));
        prop_assume!(driven_stable(&d));
        let diff = build_diffusion_matrix(&d.params, &d.couplings, BathModel::HighTWhite).matrix;
        let (v, _) = solve_lyapunov(&d.drift.matrix, &diff).unwrap();
        let k = d.drift.matrix;
        let residual = (k * v + v * k.transpose() + diff).amax();
        prop_assert!(residual < 1e-10 * diff.amax(), "{residual:e}");
        prop_assert!((v - v.transpose()).amax() <= 1e-12 * v.amax());
        prop_assert!((0..6).all(|i| v[(i, i)] >= 0.0));
    }

    /// q̃ → s·q̃, p̃ → p̃/s leaves the SI position variance unchanged.
    #[test]
    fn si_variance_ignores_mechanical_scaling(
        (power, dk, wt, zeta) in point(),
        log_s in -1.0..1.0_f64,
    ) {
        let d = draw(power, dk.abs().max(0.05), wt, zeta, 1e3);
        prop_assume!(well_damped(&d));
        let s = 10f64.powf(log_s);
        let t = Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, s, 1.0 / s, 1.0, 1.0));
        let ti = Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0 / s, s, 1.0, 1.0));
        let diff = build_diffusion_matrix(&d.params, &d.couplings, BathModel::HighTWhite).matrix;
        let (v, _) = solve_lyapunov(&d.drift.matrix, &diff).unwrap();
        let (w, _) = solve_lyapunov(&(t * d.drift.matrix * ti), &(t * diff * t)).unwrap();
        let x2 = d.couplings.x_zpf * d.couplings.x_zpf;
        let (a, b) = (x2 * v[(2, 2)], x2 * w[(2, 2)] / (s * s));
        prop_assert!((a - b).abs() <= 1e-10 * a, "{a:e} vs {b:e}");
    }
}

#[test]
fn negative_detuning_is_unstable_for_both_tests() {
    for dk in [-1.5, -0.5, -0.1] {
        let d = draw(4e-3, dk, 1.0, 25.0, 1e5);
        assert_eq!(stability(&d.drift).unwrap().class, Stability::Unstable);
        assert_eq!(routh_hurwitz(&d.drift.matrix).class, Stability::Unstable);
    }
}

#[test]
fn decoupled_bogoliubov_pair_is_marginal_for_both_tests() {
    let d = draw(4e-3, 0.5, 1.0, 0.0, 1e5);
    assert_eq!(stability(&d.drift).unwrap().class, Stability::Marginal);
    assert_eq!(routh_hurwitz(&d.drift.matrix).class, Stability::Marginal);
}
