//! Expected squared worst-case error of stratified sampling on `S^2 × [0, ∞)`
//! with one random point per product of an equal-area cell and an
//! equal-mass radial shell.
//!
//! With `M` cells and `K` shells the expectation is exactly
//! `(1/(MK)) Ḡ + (C_d/(MK)) R̄ D̄`, where for shell `k`
//! `G_k = K ∫_k Φ ψ̃ − K² ∫∫_{k×k} Φ(min) ψ̃ ψ̃` and `R_k` is the second
//! integral, and `D̄` is the mean over cells of the expected distance between
//! two independent uniform points of a cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::quad::{integrate, integrate_to_inf};
use crate::specfun;
use crate::spheremap::{radial_shells, SpherePartition};
use crate::stats::{pairwise_sum, Moments};

use super::{lambda_k, sphere_constants, KernelParams};

/// Per-shell radial terms for `K` equal-mass shells.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RadialStrata {
    pub k: usize,
    /// `K ∫_k Φ ψ̃`, the mean of `Φ` on each shell.
    pub phi_mean: Vec<f64>,
    /// `K² ∫∫_{k×k} Φ(min(r, ρ)) ψ̃(r) ψ̃(ρ)`.
    pub r: Vec<f64>,
    /// `phi_mean − r`, nonnegative.
    pub g: Vec<f64>,
    /// `(1/K) Σ G_k` from the closed form `2 (A/B)^μ (K Λ_K − K I_{A/(A+B)}(μ,μ) − 1/2)`.
    pub g_mean_closed: f64,
}

impl RadialStrata {
    pub fn g_mean(&self) -> f64 {
        pairwise_sum(&self.g) / self.k as f64
    }

    pub fn r_mean(&self) -> f64 {
        pairwise_sum(&self.r) / self.k as f64
    }
}

/// Closed-form `(1/K) Σ_k G_k`.
pub fn g_mean_closed(p: &KernelParams, k: usize) -> Result<f64> {
    let mu = p.mu();
    let kf = k as f64;
    let lam = lambda_k(mu, p.b / p.a, k)?;
    let i = specfun::reg_beta_i(p.a / (p.a + p.b), mu, mu)?;
    Ok(2.0 * p.ratio_pow() * (kf * lam - kf * i - 0.5))
}

/// Radial terms of every shell, each by one adaptive quadrature.
pub fn radial_strata(p: &KernelParams, k: usize) -> Result<RadialStrata> {
    if k == 0 {
        return config("need at least one radial shell");
    }
    let mu = p.mu();
    let kf = k as f64;
    let ratio = p.ratio_pow();
    let shells = radial_shells(mu, p.b, k)?;
    // shell edges in the variable x = μ ρ² / A
    let mut edges = vec![0.0];
    edges.extend(shells.boundaries.iter().map(|r| mu * r * r / p.a));
    edges.push(f64::INFINITY);
    let per_shell: Vec<(f64, f64)> = (1..=k)
        .into_par_iter()
        .map(|j| {
            let (lo, hi) = (edges[j - 1], edges[j]);
            let upper = 1.0 - j as f64 / kf;
            // k/K − F(ρ) written on whichever tail is smaller
            let h = |x: f64| {
                let y = p.a / p.b * x;
                let v = if upper < 0.5 {
                    specfun::reg_gamma_q(mu, y).map(|q| q - upper)
                } else {
                    specfun::reg_gamma_p(mu, y).map(|pp| j as f64 / kf - pp)
                };
                specfun::gamma_density(mu, x) * v.unwrap_or(f64::NAN).max(0.0)
            };
            let dj = if hi.is_finite() {
                integrate(h, lo, hi, 1e-300, 1e-12)?.value
            } else {
                integrate_to_inf(h, lo, 1e-300, 1e-12)?.value
            };
            let (pl, ql) = (specfun::reg_gamma_p(mu, lo)?, specfun::reg_gamma_q(mu, lo)?);
            let (ph, qh) = if hi.is_finite() {
                (specfun::reg_gamma_p(mu, hi)?, specfun::reg_gamma_q(mu, hi)?)
            } else {
                (1.0, 0.0)
            };
            let dp = if lo > mu { ql - qh } else { ph - pl };
            Ok((dp, dj))
        })
        .collect::<Result<_>>()?;
    let mut phi_mean = Vec::with_capacity(k);
    let mut r = Vec::with_capacity(k);
    let mut g = Vec::with_capacity(k);
    for &(dp, dj) in &per_shell {
        let gk = ratio * kf * (2.0 * kf * dj - dp);
        let a = 1.0 - kf * ratio * dp;
        phi_mean.push(a);
        r.push(a - gk);
        g.push(gk);
    }
    Ok(RadialStrata { k, phi_mean, r, g, g_mean_closed: g_mean_closed(p, k)? })
}

/// Monte Carlo `E‖Y − Y'‖` for independent uniform points of each cell,
/// estimated once per zone. Returns `(mean, std_error)` per cell.
pub fn cell_mean_distances(partition: &SpherePartition, samples: u64, seed: u64) -> Vec<(f64, f64)> {
    let mut zones: Vec<usize> = partition.cells.iter().map(|c| c.zone).collect();
    zones.sort_unstable();
    zones.dedup();
    let per_zone: Vec<(usize, f64, f64)> = zones
        .par_iter()
        .map(|&z| {
            let cell = partition.cells.iter().find(|c| c.zone == z).expect("zone has a cell");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(z as u64);
            let mut m = Moments::default();
            for _ in 0..samples {
                let a = cell.sample(rng.random(), rng.random());
                let b = cell.sample(rng.random(), rng.random());
                m.push(a.distance(&b));
            }
            (z, m.mean, m.std_error())
        })
        .collect();
    partition
        .cells
        .iter()
        .map(|c| {
            let &(_, mean, se) = per_zone.iter().find(|(z, _, _)| *z == c.zone).expect("zone estimated");
            (mean, se)
        })
        .collect()
}

/// Prediction for stratified sampling, with its decomposition.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StratifiedPrediction {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// `E[wce²]`.
    pub value: f64,
    /// Standard error from the Monte Carlo cell distances.
    pub value_se: f64,
    /// `(1/(MK)) Ḡ`.
    pub radial_term: f64,
    /// `(C_d/(MK)) R̄ D̄`.
    pub angular_term: f64,
    pub g_mean: f64,
    pub r_mean: f64,
    pub dist_mean: f64,
    pub dist_se: f64,
}

/// Exact expected `wce²` of stratified sampling on `S^2 × [0, ∞)`; the cell
/// distance integrals are estimated with `samples` draws per zone.
pub fn stratified_expected_wce_sq(
    p: &KernelParams,
    partition: &SpherePartition,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<StratifiedPrediction> {
    if p.d != 2 {
        return config("stratified predictions are implemented on S^2 only");
    }
    if k == 0 {
        return config("need at least one radial shell");
    }
    let m = partition.count();
    let g_mean = g_mean_closed(p, k)?;
    // (1/K) Σ K ∫_k Φ ψ̃ = ∫ Φ ψ̃ = 1 − (A/B)^μ
    let r_mean = 1.0 - p.ratio_pow() - g_mean;
    let dists = cell_mean_distances(partition, samples, seed);
    let mut zone_weight: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for (cell, &(_, se)) in partition.cells.iter().zip(&dists) {
        let e = zone_weight.entry(cell.zone).or_insert((0.0, se));
        e.0 += 1.0 / m as f64;
    }
    let dist_mean = pairwise_sum(&dists.iter().map(|d| d.0).collect::<Vec<_>>()) / m as f64;
    let dist_se = zone_weight.values().map(|(w, se)| (w * se).powi(2)).sum::<f64>().sqrt();
    let c_d = sphere_constants(2)?.c_d;
    let n = m * k;
    let nf = n as f64;
    let radial_term = g_mean / nf;
    let angular_term = c_d * r_mean * dist_mean / nf;
    Ok(StratifiedPrediction {
        m,
        k,
        n,
        value: radial_term + angular_term,
        value_se: c_d * r_mean * dist_se / nf,
        radial_term,
        angular_term,
        g_mean,
        r_mean,
        dist_mean,
        dist_se,
    })
}
