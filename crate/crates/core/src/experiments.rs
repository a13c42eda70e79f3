//! Numerical studies: a polynomial integral on the sphere and the scaling of
//! stratified sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, Result};
use crate::lds::{bits_to_open_unit, SobolStream};
use crate::specfun::inv_normal_cdf;
use crate::spheremap::{equal_area_partition_s2, radial_shells, stratified_sample_with, SphereMap};
use crate::stats::{log_log_slope, pairwise_sum, Moments};
use crate::wce::{iid_nodes, rms_wce_iid, stratified_expected_wce_sq, wce_nakagami, KernelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SphereGenerator {
    /// Scrambled Sobol' points through the sphere map.
    InverseBeta,
    /// Normalized inverse-normal images of scrambled Sobol' points.
    InverseNormal,
    /// Pseudo-random points through the sphere map.
    Random,
}

/// Equal-weight estimate of `∫ (x_1 + … + x_d)² dσ = 1` on the unit sphere of `R^d`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TrialRow {
    pub d: usize,
    pub n: usize,
    pub generator: SphereGenerator,
    pub estimate: f64,
    pub error: f64,
}

fn trial_f(x: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    s * s
}

/// Runs the trial integral for one generator at each `N`, using the first `N`
/// points of one sequence.
pub fn trial_integral(d: usize, n_list: &[usize], generator: SphereGenerator, seed: u64) -> Result<Vec<TrialRow>> {
    if d < 2 {
        return config("the trial integral needs d >= 2");
    }
    if n_list.contains(&0) {
        return config("N must be positive");
    }
    // every N uses a prefix of the same point sequence
    let values = trial_values(d, n_list.iter().copied().max().unwrap_or(0), generator, seed)?;
    Ok(n_list
        .iter()
        .map(|&n| {
            let estimate = pairwise_sum(&values[..n]) / n as f64;
            TrialRow { d, n, generator, estimate, error: (estimate - 1.0).abs() }
        })
        .collect())
}

fn trial_values(d: usize, n: usize, generator: SphereGenerator, seed: u64) -> Result<Vec<f64>> {
    let map = SphereMap::new(d - 1)?;
    let mut y = vec![0.0; d];
    let mut out = Vec::with_capacity(n);
    match generator {
        SphereGenerator::InverseBeta => {
            let mut s = SobolStream::scrambled(d - 1, seed, 0)?;
            let mut u = vec![0.0; d - 1];
            for _ in 0..n {
                s.next_into(&mut u)?;
                map.map_into(&u, &mut y)?;
                out.push(trial_f(&y));
            }
        }
        SphereGenerator::InverseNormal => {
            let mut s = SobolStream::scrambled(d, seed, 0)?;
            let mut bits = vec![0u32; d];
            for _ in 0..n {
                s.next_bits(&mut bits)?;
                for (v, &b) in y.iter_mut().zip(&bits) {
                    *v = inv_normal_cdf(bits_to_open_unit(b))?;
                }
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                out.push(trial_f(&y) / (norm * norm));
            }
        }
        SphereGenerator::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u = vec![0.0; d - 1];
            for _ in 0..n {
                u.iter_mut().for_each(|v| *v = rng.random());
                map.map_into(&u, &mut y)?;
                out.push(trial_f(&y));
            }
        }
    }
    Ok(out)
}

/// One `(M, K)` level of the stratification study.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StrataRow {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// Expected `wce²` from the stratification formula.
    pub formula: f64,
    pub formula_se: f64,
    pub radial_term: f64,
    pub angular_term: f64,
    /// Mean `wce²` over stratified draws, when the level is small enough.
    pub empirical: Option<f64>,
    pub empirical_se: Option<f64>,
    /// Expected `wce²` of `N` i.i.d. nodes.
    pub iid: f64,
    /// Mean `wce²` over i.i.d. draws, when the level is small enough.
    pub iid_empirical: Option<f64>,
    pub iid_empirical_se: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct StrataStudy {
    pub rows: Vec<StrataRow>,
    /// Log-log slope of the formula against `N`.
    pub formula_slope: f64,
    pub empirical_slope: Option<f64>,
    pub iid_slope: f64,
    pub iid_empirical_slope: Option<f64>,
}

/// Settings for [`strata_scaling`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StrataSettings {
    /// Random point sets per level for the empirical means.
    pub draws: usize,
    /// Largest `N = MK` for which empirical means are computed.
    pub empirical_max_n: usize,
    /// Monte Carlo pairs per zone for the cell distance integrals.
    pub distance_samples: u64,
    pub seed: u64,
}

impl Default for StrataSettings {
    fn default() -> Self {
        Self { draws: 100, empirical_max_n: 2048, distance_samples: 200_000, seed: 1 }
    }
}

/// Expected `wce²` of stratified sampling on `S^2 × [0, ∞)` with
/// `K = round(sqrt(M))` shells, against `N = MK`.
pub fn strata_scaling(p: &KernelParams, m_list: &[usize], settings: &StrataSettings) -> Result<StrataStudy> {
    if p.d != 2 {
        return config("the stratification study runs on S^2");
    }
    if m_list.len() < 2 {
        return config("need at least two values of M for a slope");
    }
    let mut rows = Vec::with_capacity(m_list.len());
    for (level, &m) in m_list.iter().enumerate() {
        let k = ((m as f64).sqrt().round() as usize).max(1);
        let partition = equal_area_partition_s2(m)?;
        let pred = stratified_expected_wce_sq(p, &partition, k, settings.distance_samples, settings.seed)?;
        let n = pred.n;
        let iid = rms_wce_iid(p) / n as f64;
        let (mut empirical, mut empirical_se, mut iid_empirical, mut iid_empirical_se) = (None, None, None, None);
        if n <= settings.empirical_max_n && settings.draws > 1 {
            let shells = radial_shells(p.mu(), p.b, k)?;
            let base = (level as u64) << 32;
            let strat = sample_mean(settings.draws, settings.seed, base, |rng| {
                let x = stratified_sample_with(&partition, &shells, rng)?;
                Ok(wce_nakagami(p, &x)?.wce_sq())
            })?;
            let plain = sample_mean(settings.draws, settings.seed, base | (1 << 31), |rng| {
                let x = iid_nodes(p, n, rng)?;
                Ok(wce_nakagami(p, &x)?.wce_sq())
            })?;
            empirical = Some(strat.mean);
            empirical_se = Some(strat.std_error());
            iid_empirical = Some(plain.mean);
            iid_empirical_se = Some(plain.std_error());
        }
        log::info!("strata M={m} K={k}: formula {:.6e}, empirical {empirical:?}", pred.value);
        rows.push(StrataRow {
            m,
            k,
            n,
            formula: pred.value,
            formula_se: pred.value_se,
            radial_term: pred.radial_term,
            angular_term: pred.angular_term,
            empirical,
            empirical_se,
            iid,
            iid_empirical,
            iid_empirical_se,
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let slope_of = |ys: Vec<Option<f64>>| {
        let pairs: Vec<(f64, f64)> = ns.iter().zip(ys).filter_map(|(&n, y)| y.map(|y| (n, y))).collect();
        (pairs.len() >= 2).then(|| {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            log_log_slope(&x, &y)
        })
    };
    Ok(StrataStudy {
        formula_slope: log_log_slope(&ns, &rows.iter().map(|r| r.formula).collect::<Vec<_>>()),
        empirical_slope: slope_of(rows.iter().map(|r| r.empirical).collect()),
        iid_slope: log_log_slope(&ns, &rows.iter().map(|r| r.iid).collect::<Vec<_>>()),
        iid_empirical_slope: slope_of(rows.iter().map(|r| r.iid_empirical).collect()),
        rows,
    })
}

/// Mean of `f` over `draws` independent streams.
fn sample_mean<F>(draws: usize, seed: u64, stream_base: u64, f: F) -> Result<Moments>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64>,
{
    let mut m = Moments::default();
    for i in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_base + i as u64);
        m.push(f(&mut rng)?);
    }
    Ok(m)
}
