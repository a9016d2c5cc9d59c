//! Independent oracles for the spectral engine.

pub mod crosscheck;
pub mod lyapunov;
pub mod routh;
pub mod timedomain;

pub use crosscheck::{cross_check, CheckRow, CrossCheckOptions, CrossCheckReport};
pub use lyapunov::{lyapunov_covariance, solve_lyapunov, CovarianceMatrix};
pub use routh::{characteristic_polynomial, routh_hurwitz, RouthReport};
pub use timedomain::{
    simulate_ensemble, simulate_time_domain, EmpiricalCovariance, TimeDomainConfig,
};

use nalgebra::Matrix6;

/// Indices that receive noise, directly through D or through the coupling
/// graph of K. The rest stay at zero and are left out of the oracles.
pub fn reachable(k: &Matrix6<f64>, d: &Matrix6<f64>) -> [bool; 6] {
    let mut on = [false; 6];
    for (i, flag) in on.iter_mut().enumerate() {
        *flag = (0..6).any(|j| d[(i, j)] != 0.0);
    }
    loop {
        let mut changed = false;
        for i in 0..6 {
            if !on[i] && (0..6).any(|j| on[j] && k[(i, j)] != 0.0) {
                on[i] = true;
                changed = true;
            }
        }
        if !changed {
            return on;
        }
    }
}

pub(crate) fn active_indices(mask: &[bool; 6]) -> Vec<usize> {
    (0..6).filter(|&i| mask[i]).collect()
}
