//! Worst-case errors for the spherical-cone kernel
//! `K(r x*, ρ y*) = Φ(min(r, ρ)) (1 − C_d ‖x* − y*‖)` on `R^{d+1}`
//! with the Nakagami radial weight, plus the sphere-only cap discrepancy,
//! expected-value formulas, stratification predictions and Monte Carlo oracles.

mod general;
mod oracle;
mod strata;

pub use general::{wce_isotropic_general, NakagamiModel, RadialModel};
pub use oracle::{mc_cap_discrepancy_oracle, mc_cone_discrepancy_oracle, mc_radial_discrepancy_oracle, McEstimate};
pub use strata::{
    cell_mean_distances, g_mean_closed, radial_strata, stratified_expected_wce_sq, RadialStrata, StratifiedPrediction,
};

use rayon::prelude::*;

use crate::error::{config, domain, Result};
use crate::specfun::{self, ShapeParam};
use crate::spheremap::{SpacePoint, UnitVector};
use crate::stats::pairwise_sum;

/// Constants of the distance kernel on `S^d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SphereConstants {
    pub c_d: f64,
    /// Mean distance `∫∫ ‖x − y‖ dσ dσ`.
    pub w_sd: f64,
    /// `1 − C_d W(S^d)`.
    pub w_ks: f64,
}

/// Constants for the sphere `S^d`, `d >= 1`.
pub fn sphere_constants(d: usize) -> Result<SphereConstants> {
    if d == 0 {
        return domain("sphere dimension must be at least 1");
    }
    let df = d as f64;
    let lg = specfun::ln_gamma;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let c_d = (lg(0.5 * (df + 1.0)) - lg(0.5 * df)).exp() / (df * sqrt_pi);
    let w_sd = (df * std::f64::consts::LN_2 + 2.0 * lg(0.5 * (df + 1.0)) - lg(df + 0.5)).exp() / sqrt_pi;
    Ok(SphereConstants { c_d, w_sd, w_ks: 1.0 - c_d * w_sd })
}

/// Shape `μ` and scales `0 < A < B` of the radial part, and the sphere dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelParams {
    pub mu: ShapeParam,
    pub a: f64,
    pub b: f64,
    pub d: usize,
}

impl KernelParams {
    pub fn new(mu: f64, a: f64, b: f64, d: usize) -> Result<Self> {
        let mu = ShapeParam::new(mu)?;
        if !(a.is_finite() && b.is_finite() && a > 0.0 && a < b) {
            return config(format!("kernel scales need 0 < A < B, got A = {a}, B = {b}"));
        }
        if d == 0 {
            return config("sphere dimension must be at least 1");
        }
        Ok(Self { mu, a, b, d })
    }

    pub fn mu(&self) -> f64 {
        self.mu.get()
    }

    /// Rate `μ (1/A − 1/B)` of `Φ`.
    pub fn kappa(&self) -> f64 {
        self.mu() * (1.0 / self.a - 1.0 / self.b)
    }

    /// `Φ(ρ) = 1 − exp(−μ (1/A − 1/B) ρ²)`.
    pub fn phi(&self, rho: f64) -> f64 {
        -(-self.kappa() * rho * rho).exp_m1()
    }

    /// Density of `Φ`.
    pub fn phi_density(&self, rho: f64) -> f64 {
        let k = self.kappa();
        2.0 * k * rho * (-k * rho * rho).exp()
    }

    /// Radius with `Φ(R) = u`.
    pub fn phi_quantile(&self, u: f64) -> f64 {
        ((-(-u).ln_1p()) / self.kappa()).sqrt()
    }

    /// Nakagami(μ, B) density `ψ̃`.
    pub fn psi(&self, rho: f64) -> f64 {
        nakagami_density(self.mu(), self.b, rho)
    }

    /// `∫_ρ^∞ ψ̃ = Q(μ, μρ²/B)`.
    pub fn psi_tail(&self, rho: f64) -> f64 {
        specfun::reg_gamma_q(self.mu(), self.mu() * rho * rho / self.b).unwrap_or(f64::NAN)
    }

    /// Radius with `ψ̃`-law from `u ∈ [0,1)`.
    pub fn psi_quantile(&self, u: f64) -> Result<f64> {
        let z = specfun::inv_reg_gamma_p(self.mu(), u)?;
        Ok((self.b / self.mu() * z).sqrt())
    }

    /// `(A/B)^μ`.
    pub fn ratio_pow(&self) -> f64 {
        (self.a / self.b).powf(self.mu())
    }

    pub fn sphere(&self) -> SphereConstants {
        sphere_constants(self.d).expect("validated dimension")
    }

    /// `W(K) = W(K_R, ψ̃) W(K_S)`.
    pub fn w_k(&self) -> f64 {
        w_kr_psi(self) * self.sphere().w_ks
    }

    /// `∫ K_R(r, ρ) ψ̃(ρ) dρ − W(K_R, ψ̃)`, the radial bracket of the single sum.
    pub fn radial_bracket(&self, r: f64) -> f64 {
        let mu = self.mu();
        let x2 = r * r;
        let q = specfun::reg_gamma_q(mu, mu * x2 / self.b).unwrap_or(f64::NAN);
        let p = specfun::reg_gamma_p(mu, mu * x2 / self.a).unwrap_or(f64::NAN);
        1.0 - (1.0 - self.phi(r)) * q - self.ratio_pow() * p - w_kr_psi(self)
    }
}

pub(crate) fn nakagami_density(mu: f64, omega: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return if mu == 0.5 {
            (2.0 / (std::f64::consts::PI * omega)).sqrt()
        } else if mu < 0.5 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    let ln = std::f64::consts::LN_2 + mu * (mu / omega).ln() - specfun::ln_gamma(mu) + (2.0 * mu - 1.0) * rho.ln()
        - mu * rho * rho / omega;
    ln.exp()
}

/// `W(K_R, ψ̃) = 1 − 2 (A/B)^μ I_{B/(A+B)}(μ, μ)`.
pub fn w_kr_psi(p: &KernelParams) -> f64 {
    let mu = p.mu();
    let i = specfun::reg_beta_i(p.b / (p.a + p.b), mu, mu).expect("valid arguments");
    1.0 - 2.0 * p.ratio_pow() * i
}

fn check_point(p: &KernelParams, x: &SpacePoint) -> Result<()> {
    if x.ambient_dim() != p.d + 1 {
        return config(format!("point in R^{} used with a kernel on R^{}", x.ambient_dim(), p.d + 1));
    }
    Ok(())
}

/// `K(x, y) = Φ(min(‖x‖, ‖y‖)) (1 − C_d ‖x* − y*‖)`.
pub fn kernel_k(p: &KernelParams, x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    check_point(p, x)?;
    check_point(p, y)?;
    Ok(p.phi(x.radius.min(y.radius)) * (1.0 - p.sphere().c_d * x.direction.distance(&y.direction)))
}

/// Worst-case error together with its decomposition
/// `wce² = double_sum_term − single_sum_term`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WceReport {
    pub wce: f64,
    /// `(1/N²) ΣΣ (K − W(K))`.
    pub double_sum_term: f64,
    /// `(2/N) Σ ∫ (K(x_j, y) − W(K)) ψ(y) dy`.
    pub single_sum_term: f64,
    #[serde(rename = "W_K")]
    pub w_k: f64,
    pub n_points: usize,
    /// Set when the squared error came out below `-1e-9` before clamping.
    pub clamped: bool,
}

impl WceReport {
    pub fn wce_sq(&self) -> f64 {
        self.wce * self.wce
    }

    pub(crate) fn assemble(double: f64, single: f64, w_k: f64, n: usize) -> Self {
        let sq = double - single;
        let clamped = sq < -1e-9;
        if clamped {
            log::warn!("squared worst-case error {sq:e} is negative beyond roundoff; clamped to 0");
        }
        Self { wce: sq.max(0.0).sqrt(), double_sum_term: double, single_sum_term: single, w_k, n_points: n, clamped }
    }
}

/// Mean of `f(i, j)` over all ordered pairs, symmetric `f`, in a fixed order.
pub(crate) fn symmetric_pair_mean<F: Fn(usize, usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let off: Vec<f64> = (0..i).map(|j| f(i, j)).collect();
            f(i, i) + 2.0 * pairwise_sum(&off)
        })
        .collect();
    pairwise_sum(&rows) / (n as f64 * n as f64)
}

fn wce_nakagami_shifted(p: &KernelParams, x: &[SpacePoint], shift: f64) -> Result<WceReport> {
    if x.is_empty() {
        return domain("worst-case error of an empty point set");
    }
    for pt in x {
        check_point(p, pt)?;
    }
    let n = x.len();
    let sc = p.sphere();
    let w_k = w_kr_psi(p) * sc.w_ks;
    let phis: Vec<f64> = x.iter().map(|pt| p.phi(pt.radius)).collect();
    let mean_k = symmetric_pair_mean(n, |i, j| {
        phis[i].min(phis[j]) * (1.0 - sc.c_d * x[i].direction.distance(&x[j].direction)) + shift
    });
    let brackets: Vec<f64> = x.iter().map(|pt| sc.w_ks * p.radial_bracket(pt.radius)).collect();
    // a constant added to K shifts the row integrals and W(K) by the same amount
    let double = mean_k - (w_k + shift);
    let single = 2.0 * pairwise_sum(&brackets) / n as f64;
    Ok(WceReport::assemble(double, single, w_k, n))
}

/// `n` i.i.d. nodes with uniform directions and `ψ̃` radii.
pub fn iid_nodes<R: rand::Rng>(p: &KernelParams, n: usize, rng: &mut R) -> Result<Vec<SpacePoint>> {
    (0..n)
        .map(|_| {
            let direction = UnitVector::new(oracle::random_direction(rng, p.d + 1))?;
            let radius = p.psi_quantile(rng.random())?;
            SpacePoint::new(direction, radius)
        })
        .collect()
}

/// Closed-form worst-case error of equal-weight integration with nodes `x`.
pub fn wce_nakagami(p: &KernelParams, x: &[SpacePoint]) -> Result<WceReport> {
    wce_nakagami_shifted(p, x, 0.0)
}

/// Cap discrepancy of directions on `S^d`: `sqrt(C_d (W(S^d) − mean pairwise distance))`.
pub fn wce_sphere_cap(d: usize, y: &[UnitVector]) -> Result<f64> {
    if y.is_empty() {
        return domain("cap discrepancy of an empty point set");
    }
    if let Some(bad) = y.iter().find(|v| v.ambient_dim() != d + 1) {
        return config(format!("direction in R^{} on S^{d}", bad.ambient_dim()));
    }
    let sc = sphere_constants(d)?;
    let mean_dist = symmetric_pair_mean(y.len(), |i, j| y[i].distance(&y[j]));
    Ok((sc.c_d * (sc.w_sd - mean_dist)).max(0.0).sqrt())
}

/// `N E[wce²]` for `N` i.i.d. `ψ`-distributed nodes:
/// `1 − (A/B)^μ − W(K_S) W(K_R, ψ̃)`. The rms error is `sqrt(value / N)`.
pub fn rms_wce_iid(p: &KernelParams) -> f64 {
    1.0 - p.ratio_pow() - p.sphere().w_ks * w_kr_psi(p)
}

/// Root-mean-square worst-case error of `n` i.i.d. nodes.
pub fn rms_wce_iid_at(p: &KernelParams, n: usize) -> f64 {
    (rms_wce_iid(p) / n as f64).sqrt()
}

/// Expected `wce²` with fixed directions `y` and i.i.d. `ψ̃` radii.
pub fn rms_wce_fixed_directions(p: &KernelParams, y: &[UnitVector]) -> Result<f64> {
    if y.is_empty() {
        return domain("empty direction set");
    }
    if let Some(bad) = y.iter().find(|v| v.ambient_dim() != p.d + 1) {
        return config(format!("direction in R^{} for S^{}", bad.ambient_dim(), p.d));
    }
    let n = y.len() as f64;
    let sc = p.sphere();
    let i = specfun::reg_beta_i(p.b / (p.a + p.b), p.mu(), p.mu())?;
    let energy = symmetric_pair_mean(y.len(), |a, b| 1.0 - sc.c_d * y[a].distance(&y[b]) - sc.w_ks);
    Ok(p.ratio_pow() * (2.0 * i - 1.0) / n + w_kr_psi(p) * energy)
}

/// Expected `wce²` when the radii are assigned to the directions by a uniform
/// random permutation. Radii must be pairwise different.
pub fn expected_wce_sq_permutation(p: &KernelParams, y: &[UnitVector], radii: &[f64]) -> Result<f64> {
    let n = y.len();
    if n == 0 || radii.len() != n {
        return config(format!("need equally many directions ({n}) and radii ({})", radii.len()));
    }
    if let Some(bad) = y.iter().find(|v| v.ambient_dim() != p.d + 1) {
        return config(format!("direction in R^{} for S^{}", bad.ambient_dim(), p.d));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return domain("radii must be finite and nonnegative");
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return domain("radii must be pairwise different");
    }
    let nf = n as f64;
    let sc = p.sphere();
    let w_r = w_kr_psi(p);
    let w_k = w_r * sc.w_ks;
    let phis: Vec<f64> = radii.iter().map(|&r| p.phi(r)).collect();
    let phi_mean = pairwise_sum(&phis) / nf;
    // mean of K_R over ordered pairs of distinct radii
    let kr_off = if n > 1 {
        (symmetric_pair_mean(n, |i, j| phis[i].min(phis[j])) * nf * nf - pairwise_sum(&phis)) / (nf * (nf - 1.0))
    } else {
        0.0
    };
    let ks_sum = symmetric_pair_mean(n, |i, j| 1.0 - sc.c_d * y[i].distance(&y[j])) * nf * nf;
    let double = (kr_off * (ks_sum - nf) + nf * phi_mean) / (nf * nf) - w_k;
    let brackets: Vec<f64> = radii.iter().map(|&r| p.radial_bracket(r)).collect();
    let single = 2.0 * sc.w_ks * pairwise_sum(&brackets) / nf;
    Ok(double - single)
}

/// L2 discrepancy of radii against `ψ̃` with weight `Φ`.
pub fn radial_discrepancy(p: &KernelParams, radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return domain("radial discrepancy of an empty set");
    }
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return domain("radii must be finite and nonnegative");
    }
    let n = radii.len() as f64;
    let phis: Vec<f64> = radii.iter().map(|&r| p.phi(r)).collect();
    let double = symmetric_pair_mean(radii.len(), |i, j| phis[i].min(phis[j])) - w_kr_psi(p);
    let brackets: Vec<f64> = radii.iter().map(|&r| p.radial_bracket(r)).collect();
    let single = 2.0 * pairwise_sum(&brackets) / n;
    Ok((double - single).max(0.0).sqrt())
}

/// `Λ_K = (1/K) Σ_{k=1}^K Q(μ, c Q^{-1}(μ, k/K))`.
pub fn lambda_k(mu: f64, c: f64, k: usize) -> Result<f64> {
    ShapeParam::new(mu)?;
    if !(c.is_finite() && c > 1.0) {
        return domain(format!("c = {c} must exceed 1"));
    }
    if k == 0 {
        return domain("K must be at least 1");
    }
    let kf = k as f64;
    let terms: Vec<f64> = (1..=k)
        .into_par_iter()
        .map(|j| {
            let z = specfun::inv_reg_gamma_q(mu, j as f64 / kf)?;
            specfun::reg_gamma_q(mu, c * z)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms) / kf)
}

/// Asymptotic expansion `I_{1/(1+c)}(μ, μ) + 1/(2K) + c^μ/(12K²)` of [`lambda_k`].
pub fn lambda_k_asymptotic(mu: f64, c: f64, k: usize) -> Result<f64> {
    let kf = k as f64;
    Ok(specfun::reg_beta_i(1.0 / (1.0 + c), mu, mu)? + 0.5 / kf + c.powf(mu) / (12.0 * kf * kf))
}
