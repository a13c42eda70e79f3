//! Arithmetic-average options under geometric Brownian motion, priced with
//! pseudo-random, inverse-normal Sobol' and sphere-lifted Sobol' normals.
//!
//! The Brownian path `B = A z` at the monitoring dates `t_j = j T / d` uses
//! either the cumulative-sum matrix or the principal-component factor of
//! `Σ_ij = Δt min(i, j)`. Every estimate is the mean of independent replicate
//! means; QMC replicates are independent scramblings and MC replicates are
//! independent ChaCha8 streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::lds::{bits_to_open_unit, SobolStream};
use crate::linalg::jacobi_eigen;
use crate::specfun::inv_normal_cdf;
use crate::spheremap::Lift;
use crate::stats::{mean, pairwise_sum, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    /// `max(S̄ − K, 0)`.
    Asian,
    /// Asian payoff knocked out when any monitored price reaches the barrier.
    Barrier,
    /// `1{S̄ > K}`.
    Digital,
    /// The terminal price `S_T`; its discounted value is `S0`.
    Terminal,
}

/// Contract and market parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptionSpec {
    pub s0: f64,
    pub strike: f64,
    pub maturity: f64,
    pub sigma: f64,
    pub rate: f64,
    pub steps: usize,
    pub barrier: Option<f64>,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(
        s0: f64,
        strike: f64,
        maturity: f64,
        sigma: f64,
        rate: f64,
        steps: usize,
        barrier: Option<f64>,
        kind: OptionKind,
    ) -> Result<Self> {
        let positive = [s0, strike, maturity].iter().all(|v| v.is_finite() && *v > 0.0);
        if !positive || !(sigma.is_finite() && sigma >= 0.0) || !rate.is_finite() {
            return config("S0, K and T must be positive, sigma nonnegative and r finite");
        }
        if steps == 0 {
            return config("need at least one monitoring date");
        }
        if kind == OptionKind::Barrier {
            match barrier {
                Some(b) if b > s0 => {}
                _ => return config("a barrier option needs a barrier above S0"),
            }
        }
        Ok(Self { s0, strike, maturity, sigma, rate, steps, barrier, kind })
    }

    /// `S0 = K = 100`, `T = 1`, `σ = 0.2`, `r = 0.05`, 30 dates, barrier 130.
    pub fn benchmark(kind: OptionKind) -> Self {
        Self { s0: 100.0, strike: 100.0, maturity: 1.0, sigma: 0.2, rate: 0.05, steps: 30, barrier: Some(130.0), kind }
    }

    pub fn with_kind(mut self, kind: OptionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    /// Discounted payoff for a Brownian path sampled at the monitoring dates.
    pub fn payoff(&self, path: &[f64]) -> f64 {
        let dt = self.maturity / self.steps as f64;
        let drift = self.rate - 0.5 * self.sigma * self.sigma;
        let mut sum = 0.0;
        let mut max = f64::NEG_INFINITY;
        let mut last = self.s0;
        for (j, &b) in path.iter().enumerate() {
            let s = self.s0 * (drift * (j + 1) as f64 * dt + self.sigma * b).exp();
            sum += s;
            max = max.max(s);
            last = s;
        }
        let avg = sum / self.steps as f64;
        let disc = self.discount();
        match self.kind {
            OptionKind::Asian => disc * (avg - self.strike).max(0.0),
            OptionKind::Barrier => {
                let alive = self.barrier.is_none_or(|b| max < b);
                if alive {
                    disc * (avg - self.strike).max(0.0)
                } else {
                    0.0
                }
            }
            OptionKind::Digital => {
                if avg > self.strike {
                    disc
                } else {
                    0.0
                }
            }
            OptionKind::Terminal => disc * last,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionKind {
    Standard,
    Pca,
}

/// A factor `A` with `A Aᵀ = Σ`, row-major.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PathConstruction {
    pub kind: ConstructionKind,
    pub steps: usize,
    pub dt: f64,
    pub matrix: Vec<f64>,
    /// PCA eigenvalues in descending order; empty for the standard construction.
    pub eigenvalues: Vec<f64>,
}

impl PathConstruction {
    /// Writes `A z` into `out`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let d = self.steps;
        match self.kind {
            ConstructionKind::Standard => {
                let h = self.dt.sqrt();
                let mut acc = 0.0;
                for (o, &zi) in out.iter_mut().zip(z) {
                    acc += h * zi;
                    *o = acc;
                }
            }
            ConstructionKind::Pca => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &self.matrix[i * d..(i + 1) * d];
                    *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `max |A Aᵀ − Σ|`.
    pub fn covariance_error(&self) -> f64 {
        let d = self.steps;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let aat: f64 = (0..d).map(|k| self.matrix[i * d + k] * self.matrix[j * d + k]).sum();
                let sigma = self.dt * (i.min(j) + 1) as f64;
                worst = worst.max((aat - sigma).abs());
            }
        }
        worst
    }
}

/// Brownian covariance factor for `steps` equally spaced dates on `[0, T]`.
pub fn brownian_transform(steps: usize, maturity: f64, kind: ConstructionKind) -> Result<PathConstruction> {
    if steps == 0 || !(maturity > 0.0 && maturity.is_finite()) {
        return config("need at least one step and a positive maturity");
    }
    let d = steps;
    let dt = maturity / d as f64;
    match kind {
        ConstructionKind::Standard => {
            let h = dt.sqrt();
            let mut matrix = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..=i {
                    matrix[i * d + j] = h;
                }
            }
            Ok(PathConstruction { kind, steps, dt, matrix, eigenvalues: Vec::new() })
        }
        ConstructionKind::Pca => {
            let mut sigma = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    sigma[i * d + j] = dt * (i.min(j) + 1) as f64;
                }
            }
            let eig = jacobi_eigen(&sigma, d)?;
            let mut matrix = vec![0.0; d * d];
            for (k, (lam, v)) in eig.values.iter().zip(&eig.vectors).enumerate() {
                let s = lam.max(0.0).sqrt();
                for i in 0..d {
                    matrix[i * d + k] = s * v[i];
                }
            }
            Ok(PathConstruction { kind, steps, dt, matrix, eigenvalues: eig.values })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Pseudo-random normals.
    #[value(name = "mc")]
    Mc,
    /// Coordinatewise inverse normal CDF of scrambled Sobol' points.
    #[value(name = "sobol")]
    SobolInverseNormal,
    /// Sphere map and chi radius applied to scrambled Sobol' points.
    #[value(name = "sphere")]
    SphereNormal,
}

impl Generator {
    pub fn is_qmc(self) -> bool {
        !matches!(self, Generator::Mc)
    }
}

/// Source of standard normal vectors for one replicate.
pub struct NormalSource {
    kind: Generator,
    d: usize,
    rng: Option<ChaCha8Rng>,
    sobol: Option<SobolStream>,
    lift: Option<Lift>,
    bits: Vec<u32>,
    unit: Vec<f64>,
}

impl NormalSource {
    pub fn new(kind: Generator, d: usize, seed: u64, replicate: u64) -> Result<Self> {
        let mut src = Self { kind, d, rng: None, sobol: None, lift: None, bits: vec![0; d], unit: vec![0.0; d] };
        match kind {
            Generator::Mc => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(replicate);
                src.rng = Some(rng);
            }
            Generator::SobolInverseNormal => src.sobol = Some(SobolStream::scrambled(d, seed, replicate)?),
            Generator::SphereNormal => {
                if d < 2 {
                    return config("sphere-lifted normals need d >= 2");
                }
                src.sobol = Some(SobolStream::scrambled(d, seed, replicate)?);
                src.lift = Some(Lift::new(d)?);
            }
        }
        Ok(src)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn next_into(&mut self, out: &mut [f64]) -> Result<()> {
        match self.kind {
            Generator::Mc => {
                let rng = self.rng.as_mut().expect("rng present");
                for o in out.iter_mut() {
                    *o = StandardNormal.sample(rng);
                }
            }
            Generator::SobolInverseNormal => {
                let s = self.sobol.as_mut().expect("stream present");
                s.next_bits(&mut self.bits)?;
                for (o, &b) in out.iter_mut().zip(&self.bits) {
                    *o = inv_normal_cdf(bits_to_open_unit(b))?;
                }
            }
            Generator::SphereNormal => {
                let s = self.sobol.as_mut().expect("stream present");
                s.next_into(&mut self.unit)?;
                self.lift.as_ref().expect("lift present").lift_into(&self.unit, out)?;
            }
        }
        Ok(())
    }
}

fn per_replicate(kind: Generator, n_points: usize, n_replicates: usize) -> Result<usize> {
    if n_replicates == 0 || n_points == 0 || n_points % n_replicates != 0 {
        return config(format!("{n_points} points do not split into {n_replicates} replicates"));
    }
    let m = n_points / n_replicates;
    if kind.is_qmc() && !m.is_power_of_two() {
        return config(format!("QMC replicates need a power-of-two size, got {m}"));
    }
    Ok(m)
}

/// `n_replicates` lists of `n_points / n_replicates` standard normal vectors in `R^d`.
pub fn normal_vectors(
    kind: Generator,
    d: usize,
    n_points: usize,
    n_replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let m = per_replicate(kind, n_points, n_replicates)?;
    (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut src = NormalSource::new(kind, d, seed, r as u64)?;
            (0..m)
                .map(|_| {
                    let mut z = vec![0.0; d];
                    src.next_into(&mut z)?;
                    Ok(z)
                })
                .collect()
        })
        .collect()
}

/// Price and dispersion over replicates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PriceEstimate {
    pub mean: f64,
    /// Sample standard deviation of the replicate means.
    pub std_dev_across_replicates: f64,
    /// `std_dev_across_replicates / sqrt(n_replicates)`.
    pub std_error: f64,
    pub n_points: usize,
    pub n_replicates: usize,
    pub construction: ConstructionKind,
    pub generator: Generator,
}

/// Replicate means of several payoffs under several constructions, all
/// evaluated on the same normal draws. Indexed `[construction][spec][replicate]`.
pub fn replicate_means(
    specs: &[OptionSpec],
    constructions: &[&PathConstruction],
    kind: Generator,
    n_points: usize,
    n_replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let Some(first) = constructions.first() else {
        return config("no path construction given");
    };
    let d = first.steps;
    if constructions.iter().any(|c| c.steps != d) {
        return config("constructions disagree on the number of dates");
    }
    if let Some(bad) = specs.iter().find(|s| s.steps != d) {
        return config(format!("option has {} dates but the construction has {d}", bad.steps));
    }
    let m = per_replicate(kind, n_points, n_replicates)?;
    let per_rep: Vec<Vec<Vec<f64>>> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut src = NormalSource::new(kind, d, seed, r as u64)?;
            let mut z = vec![0.0; d];
            let mut path = vec![0.0; d];
            let mut values = vec![vec![Vec::with_capacity(m); specs.len()]; constructions.len()];
            for _ in 0..m {
                src.next_into(&mut z)?;
                for (vc, c) in values.iter_mut().zip(constructions) {
                    c.apply(&z, &mut path);
                    for (v, s) in vc.iter_mut().zip(specs) {
                        v.push(s.payoff(&path));
                    }
                }
            }
            Ok(values.iter().map(|vc| vc.iter().map(|v| pairwise_sum(v) / m as f64).collect()).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..constructions.len())
        .map(|c| (0..specs.len()).map(|i| per_rep.iter().map(|r| r[c][i]).collect()).collect())
        .collect())
}

fn summarize(means: &[f64], construction: ConstructionKind, kind: Generator, n_points: usize) -> PriceEstimate {
    let sd = sample_sd(means);
    PriceEstimate {
        mean: mean(means),
        std_dev_across_replicates: sd,
        std_error: sd / (means.len() as f64).sqrt(),
        n_points,
        n_replicates: means.len(),
        construction,
        generator: kind,
    }
}

/// Prices several payoffs on shared paths.
pub fn price_options(
    specs: &[OptionSpec],
    construction: &PathConstruction,
    kind: Generator,
    n_points: usize,
    n_replicates: usize,
    seed: u64,
) -> Result<Vec<PriceEstimate>> {
    let means = replicate_means(specs, &[construction], kind, n_points, n_replicates, seed)?;
    Ok(means[0].iter().map(|m| summarize(m, construction.kind, kind, n_points)).collect())
}

/// Prices one option with `n_points` paths split into `n_replicates` replicates.
pub fn price_option(
    spec: &OptionSpec,
    construction: &PathConstruction,
    kind: Generator,
    n_points: usize,
    n_replicates: usize,
    seed: u64,
) -> Result<PriceEstimate> {
    Ok(price_options(std::slice::from_ref(spec), construction, kind, n_points, n_replicates, seed)?[0])
}

/// The five method columns of the option tables.
pub const TABLE_METHODS: [(Generator, ConstructionKind); 5] = [
    (Generator::Mc, ConstructionKind::Standard),
    (Generator::SobolInverseNormal, ConstructionKind::Standard),
    (Generator::SobolInverseNormal, ConstructionKind::Pca),
    (Generator::SphereNormal, ConstructionKind::Standard),
    (Generator::SphereNormal, ConstructionKind::Pca),
];

pub fn method_label(g: Generator, c: ConstructionKind) -> &'static str {
    match (g, c) {
        (Generator::Mc, _) => "MC",
        (Generator::SobolInverseNormal, ConstructionKind::Standard) => "Sobol-Std",
        (Generator::SobolInverseNormal, ConstructionKind::Pca) => "Sobol-PCA",
        (Generator::SphereNormal, ConstructionKind::Standard) => "Sphere-Std",
        (Generator::SphereNormal, ConstructionKind::Pca) => "Sphere-PCA",
    }
}

/// One cell of an option table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TableRow {
    pub kind: OptionKind,
    pub n: usize,
    pub method: &'static str,
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
}

/// Runs every method column at every `N` for all `specs`, sharing normal draws
/// across payoffs and constructions. Uses `replicates` replicates per cell.
/// Rows come in the order of [`TABLE_METHODS`] within each `N`.
pub fn experiment_table(specs: &[OptionSpec], n_list: &[usize], replicates: usize, seed: u64) -> Result<Vec<TableRow>> {
    let d = specs.first().map(|s| s.steps).ok_or_else(|| crate::Error::Config("no option given".into()))?;
    let maturity = specs[0].maturity;
    if specs.iter().any(|s| s.maturity != maturity) {
        return config("all options in a table must share the maturity");
    }
    let std = brownian_transform(d, maturity, ConstructionKind::Standard)?;
    let pca = brownian_transform(d, maturity, ConstructionKind::Pca)?;
    let mut rows = Vec::new();
    for &n in n_list {
        for g in [Generator::Mc, Generator::SobolInverseNormal, Generator::SphereNormal] {
            let cons: Vec<&PathConstruction> = if g == Generator::Mc { vec![&std] } else { vec![&std, &pca] };
            let means = replicate_means(specs, &cons, g, n, replicates, seed)?;
            for (c, per_spec) in cons.iter().zip(&means) {
                for (s, m) in specs.iter().zip(per_spec) {
                    let e = summarize(m, c.kind, g, n);
                    rows.push(TableRow {
                        kind: s.kind,
                        n,
                        method: method_label(g, c.kind),
                        mean: e.mean,
                        std_dev: e.std_dev_across_replicates,
                        std_error: e.std_error,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Large pseudo-random reference prices for several payoffs with the standard construction.
pub fn reference_prices(specs: &[OptionSpec], n_paths: usize, seed: u64) -> Result<Vec<PriceEstimate>> {
    let d = specs.first().map(|s| s.steps).ok_or_else(|| crate::Error::Config("no option given".into()))?;
    let cons = brownian_transform(d, specs[0].maturity, ConstructionKind::Standard)?;
    price_options(specs, &cons, Generator::Mc, n_paths, 1024, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_constructions() {
        for kind in [ConstructionKind::Standard, ConstructionKind::Pca] {
            let c = brownian_transform(1, 0.5, kind).unwrap();
            assert!((c.matrix[0] - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn standard_factor_is_exact() {
        let c = brownian_transform(3, 1.0, ConstructionKind::Standard).unwrap();
        assert!(c.covariance_error() < 1e-15);
    }

    #[test]
    fn pca_spectrum() {
        let d = 30;
        let c = brownian_transform(d, 1.0, ConstructionKind::Pca).unwrap();
        assert!(c.covariance_error() < 1e-10);
        let dt = 1.0 / d as f64;
        for (k, &lam) in c.eigenvalues.iter().enumerate() {
            let angle = (2 * k + 1) as f64 * std::f64::consts::PI / (2.0 * (2 * d + 1) as f64);
            let exact = 0.25 * dt / angle.sin().powi(2);
            assert!(((lam - exact) / exact).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn payoff_bounds() {
        let s = OptionSpec::benchmark(OptionKind::Digital);
        assert_eq!(s.payoff(&[0.0; 30]), s.discount());
        let a = OptionSpec::benchmark(OptionKind::Asian);
        let b = OptionSpec::benchmark(OptionKind::Barrier);
        let path: Vec<f64> = (0..30).map(|i| 0.05 * i as f64).collect();
        assert!(b.payoff(&path) <= a.payoff(&path));
    }

    #[test]
    fn validation() {
        assert!(OptionSpec::new(100.0, 100.0, 1.0, 0.2, 0.05, 30, Some(90.0), OptionKind::Barrier).is_err());
        assert!(OptionSpec::new(100.0, 100.0, 1.0, 0.2, 0.05, 0, None, OptionKind::Asian).is_err());
        let c = brownian_transform(4, 1.0, ConstructionKind::Standard).unwrap();
        let s = OptionSpec::new(100.0, 100.0, 1.0, 0.2, 0.05, 4, None, OptionKind::Asian).unwrap();
        assert!(price_option(&s, &c, Generator::SobolInverseNormal, 96, 2, 1).is_err());
        assert!(price_option(&s, &c, Generator::Mc, 96, 2, 1).is_ok());
    }

    #[test]
    fn mc_is_reproducible() {
        let a = normal_vectors(Generator::Mc, 3, 64, 2, 9).unwrap();
        let b = normal_vectors(Generator::Mc, 3, 64, 2, 9).unwrap();
        assert_eq!(a, b);
    }
}
