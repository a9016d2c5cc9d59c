//! Euler–Maruyama integration of dφ = Kφ dt + B dW with B·Bᵀ = D.
//!
//! Each trajectory starts at φ = 0, discards the first half as burn-in and
//! accumulates φφᵀ over the second half in equal batches. The spread of the
//! batch means gives the standard error.
//!
//! Seeding: trajectory `i` of an ensemble uses `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `i`, so trajectories are independent and the result
//! does not depend on how many threads run them.

use nalgebra::{Matrix6, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{active_indices, reachable};
use crate::dynamics::{classify, eigenvalues, Stability};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainConfig {
    /// Step, s.
    pub dt: f64,
    /// Total simulated time per trajectory, s.
    pub t_end: f64,
    pub seed: u64,
    /// Batches over the sampling half.
    pub batches: usize,
}

impl TimeDomainConfig {
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub steps: u64,
    pub samples: u64,
    /// Largest |φ|∞ seen.
    pub max_norm: f64,
    /// Set when the trajectory blew up and was stopped.
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    pub matrix: Matrix6<f64>,
    pub std_error: Matrix6<f64>,
    pub active: [bool; 6],
    pub summaries: Vec<TrajectorySummary>,
}

impl EmpiricalCovariance {
    pub fn aborted(&self) -> bool {
        self.summaries.iter().any(|s| s.aborted.is_some())
    }
}

struct Prepared {
    idx: Vec<usize>,
    k: Vec<f64>,
    /// Noise columns b_j·√dt of B restricted to `idx`.
    noise: Vec<Vec<f64>>,
}

fn prepare(
    k: &Matrix6<f64>,
    d: &Matrix6<f64>,
    cfg: &TimeDomainConfig,
) -> Result<(Prepared, [bool; 6])> {
    if !(cfg.dt > 0.0 && cfg.t_end > cfg.dt) || cfg.batches < 2 {
        return Err(Error::Config(
            "time-domain run needs dt > 0, t_end > dt and at least 2 batches".into(),
        ));
    }
    let active = reachable(k, d);
    let idx = active_indices(&active);
    let n = idx.len();

    let ev = eigenvalues(k)?;
    let kr = nalgebra::DMatrix::from_fn(n, n, |i, j| k[(idx[i], idx[j])]);
    if n > 0 {
        let max_real = kr
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if classify(max_real, 1e-9 * kr.amax()) != Stability::Stable {
            return Err(Error::NoSteadyState(format!(
                "driven subspace is not strictly stable (max Re = {max_real:.3e} rad/s)"
            )));
        }
    }
    let spectral_radius = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let limit = 0.05 / spectral_radius;
    if cfg.dt > limit {
        return Err(Error::StepSize { dt: cfg.dt, limit });
    }

    if n == 0 {
        return Ok((
            Prepared {
                idx,
                k: Vec::new(),
                noise: Vec::new(),
            },
            active,
        ));
    }
    let dr = nalgebra::DMatrix::from_fn(n, n, |i, j| d[(idx[i], idx[j])]);
    let eig = SymmetricEigen::new(dr.clone());
    let floor = 1e-14 * dr.amax();
    if eig.eigenvalues.iter().any(|&l| l < -floor) {
        return Err(Error::Config(
            "diffusion matrix is not positive semidefinite".into(),
        ));
    }
    let sqrt_dt = cfg.dt.sqrt();
    let noise = (0..n)
        .filter(|&c| eig.eigenvalues[c] > floor)
        .map(|c| {
            let s = eig.eigenvalues[c].sqrt() * sqrt_dt;
            (0..n).map(|r| eig.eigenvectors[(r, c)] * s).collect()
        })
        .collect();
    let k_flat = (0..n * n).map(|e| kr[(e / n, e % n)]).collect();
    Ok((
        Prepared {
            idx,
            k: k_flat,
            noise,
        },
        active,
    ))
}

struct RawRun {
    batch_means: Vec<Vec<f64>>,
    summary: TrajectorySummary,
}

fn run_one(p: &Prepared, cfg: &TimeDomainConfig, stream: u64) -> RawRun {
    let n = p.idx.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let steps = cfg.steps();
    let burn = steps / 2;
    let per_batch = (steps - burn) / cfg.batches as u64;
    let sampled = per_batch * cfg.batches as u64;
    let start = steps - sampled;

    let mut phi = [0.0_f64; 6];
    let mut next = [0.0_f64; 6];
    let mut z = [0.0_f64; 6];
    let mut acc = vec![0.0_f64; n * n];
    let mut batch_means = Vec::with_capacity(cfg.batches);
    let mut max_norm = 0.0_f64;
    let mut aborted = None;
    let dt = cfg.dt;
    let blowup = 1e150;

    for step in 0..steps {
        for zj in z.iter_mut().take(p.noise.len()) {
            *zj = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            let row = &p.k[i * n..(i + 1) * n];
            let mut drift = 0.0;
            for j in 0..n {
                drift += row[j] * phi[j];
            }
            let mut kick = 0.0;
            for (col, zj) in p.noise.iter().zip(&z) {
                kick += col[i] * zj;
            }
            next[i] = phi[i] + drift * dt + kick;
        }
        phi[..n].copy_from_slice(&next[..n]);

        if step % 1024 == 0 {
            let norm = phi[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(norm < blowup) {
                aborted = Some(format!("state norm {norm:.3e} at step {step}"));
                break;
            }
            max_norm = max_norm.max(norm);
        }
        if step >= start {
            for i in 0..n {
                for j in i..n {
                    acc[i * n + j] += phi[i] * phi[j];
                }
            }
            if (step - start + 1).is_multiple_of(per_batch) {
                let mean: Vec<f64> = acc.iter().map(|a| a / per_batch as f64).collect();
                batch_means.push(mean);
                acc.iter_mut().for_each(|a| *a = 0.0);
            }
        }
    }
    RawRun {
        batch_means,
        summary: TrajectorySummary {
            steps,
            samples: sampled,
            max_norm,
            aborted,
        },
    }
}

/// Single trajectory (stream 0).
pub fn simulate_time_domain(
    k: &Matrix6<f64>,
    d: &Matrix6<f64>,
    cfg: &TimeDomainConfig,
) -> Result<EmpiricalCovariance> {
    simulate_ensemble(k, d, cfg, 1)
}

/// `trajectories` independent runs pooled into one estimate.
pub fn simulate_ensemble(
    k: &Matrix6<f64>,
    d: &Matrix6<f64>,
    cfg: &TimeDomainConfig,
    trajectories: usize,
) -> Result<EmpiricalCovariance> {
    let (prep, active) = prepare(k, d, cfg)?;
    let runs: Vec<RawRun> = (0..trajectories.max(1) as u64)
        .into_par_iter()
        .map(|i| run_one(&prep, cfg, i))
        .collect();
    let n = prep.idx.len();
    let summaries: Vec<_> = runs.iter().map(|r| r.summary.clone()).collect();
    let means: Vec<&Vec<f64>> = runs.iter().flat_map(|r| r.batch_means.iter()).collect();

    let mut matrix = Matrix6::zeros();
    let mut std_error = Matrix6::zeros();
    if summaries.iter().all(|s| s.aborted.is_none()) && means.len() >= 2 {
        let b = means.len() as f64;
        for i in 0..n {
            for j in i..n {
                let e = i * n + j;
                let mean = means.iter().map(|m| m[e]).sum::<f64>() / b;
                let var = means.iter().map(|m| (m[e] - mean).powi(2)).sum::<f64>() / (b - 1.0);
                let se = (var / b).sqrt();
                let (gi, gj) = (prep.idx[i], prep.idx[j]);
                matrix[(gi, gj)] = mean;
                matrix[(gj, gi)] = mean;
                std_error[(gi, gj)] = se;
                std_error[(gj, gi)] = se;
            }
        }
    }
    Ok(EmpiricalCovariance {
        matrix,
        std_error,
        active,
        summaries,
    })
}
