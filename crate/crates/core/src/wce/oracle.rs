//! Brute-force Monte Carlo estimates of the squared discrepancies, used to
//! check the closed forms. Samples are split into fixed chunks, each with its
//! own ChaCha8 stream, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{config, domain, Result};
use crate::spheremap::{cap_measure, SpacePoint, UnitVector};
use crate::stats::Moments;

use super::KernelParams;

const CHUNKS: u64 = 256;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

fn run_chunks<F>(n_samples: u64, seed: u64, sample: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let moments = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = n_samples / CHUNKS + u64::from(c < n_samples % CHUNKS);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(sample(&mut rng));
            }
            m
        })
        .collect::<Vec<_>>()
        .iter()
        .fold(Moments::default(), |acc, m| acc.merge(m));
    McEstimate { estimate: moments.mean, std_error: moments.std_error(), samples: moments.n }
}

pub(crate) fn random_direction<R: Rng>(rng: &mut R, ambient: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..ambient).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared spherical-cone L2 discrepancy of `x`, averaged over random cones
/// `{r y* : r >= R, <y*, z*> >= t}` with `z*` uniform, `t` uniform on `[-1, 1]`
/// (total mass 2) and `R ~ Φ`.
pub fn mc_cone_discrepancy_oracle(p: &KernelParams, x: &[SpacePoint], n_samples: u64, seed: u64) -> Result<McEstimate> {
    if x.is_empty() {
        return domain("discrepancy of an empty point set");
    }
    if let Some(bad) = x.iter().find(|pt| pt.ambient_dim() != p.d + 1) {
        return config(format!("point in R^{} for S^{}", bad.ambient_dim(), p.d));
    }
    let n = x.len() as f64;
    let ambient = p.d + 1;
    Ok(run_chunks(n_samples, seed, |rng| {
        let z = random_direction(rng, ambient);
        let t: f64 = rng.random_range(-1.0..=1.0);
        let r = p.phi_quantile(rng.random());
        let hits = x.iter().filter(|pt| pt.radius >= r && dot(pt.direction.coords(), &z) >= t).count() as f64;
        let mass = p.psi_tail(r) * cap_measure(p.d, t).unwrap_or(f64::NAN);
        let delta = hits / n - mass;
        2.0 * delta * delta
    }))
}

/// Squared spherical-cap L2 discrepancy of directions on `S^d`.
pub fn mc_cap_discrepancy_oracle(d: usize, y: &[UnitVector], n_samples: u64, seed: u64) -> Result<McEstimate> {
    if y.is_empty() {
        return domain("discrepancy of an empty point set");
    }
    if let Some(bad) = y.iter().find(|v| v.ambient_dim() != d + 1) {
        return config(format!("direction in R^{} on S^{d}", bad.ambient_dim()));
    }
    let n = y.len() as f64;
    Ok(run_chunks(n_samples, seed, |rng| {
        let z = random_direction(rng, d + 1);
        let t: f64 = rng.random_range(-1.0..=1.0);
        let hits = y.iter().filter(|v| dot(v.coords(), &z) >= t).count() as f64;
        let delta = hits / n - cap_measure(d, t).unwrap_or(f64::NAN);
        2.0 * delta * delta
    }))
}

/// Squared radial discrepancy: `E[δ(R)²]` with `R ~ Φ` and
/// `δ(R) = (1/N) #{ρ_j >= R} − ∫_R^∞ ψ̃`.
pub fn mc_radial_discrepancy_oracle(p: &KernelParams, radii: &[f64], n_samples: u64, seed: u64) -> Result<McEstimate> {
    if radii.is_empty() {
        return domain("discrepancy of an empty set");
    }
    let n = radii.len() as f64;
    Ok(run_chunks(n_samples, seed, |rng| {
        let r = p.phi_quantile(rng.random());
        let hits = radii.iter().filter(|&&rho| rho >= r).count() as f64;
        let delta = hits / n - p.psi_tail(r);
        delta * delta
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wce::{radial_discrepancy, wce_nakagami, wce_sphere_cap};

    #[test]
    fn origin_gives_w_k() {
        let p = KernelParams::new(1.5, 1.5, 3.0, 2).unwrap();
        let est = mc_cone_discrepancy_oracle(&p, &[SpacePoint::origin(3)], 200_000, 5).unwrap();
        assert!((est.estimate - p.w_k()).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn small_configuration_matches() {
        let p = KernelParams::new(1.0, 1.0, 2.0, 1).unwrap();
        let x: Vec<SpacePoint> = (0..5)
            .map(|i| {
                let t = 1.3 * i as f64;
                SpacePoint::from_cartesian(&[t.cos() * (0.3 + 0.2 * t), t.sin() * (0.3 + 0.2 * t)]).unwrap()
            })
            .collect();
        let exact = wce_nakagami(&p, &x).unwrap().wce_sq();
        let est = mc_cone_discrepancy_oracle(&p, &x, 400_000, 9).unwrap();
        assert!((est.estimate - exact).abs() < 3.5 * est.std_error, "{exact} vs {est:?}");
    }

    #[test]
    fn cap_pair() {
        let y = vec![UnitVector::pole(3), UnitVector::new(vec![-1.0, 0.0, 0.0]).unwrap()];
        let est = mc_cap_discrepancy_oracle(2, &y, 200_000, 1).unwrap();
        let exact = wce_sphere_cap(2, &y).unwrap().powi(2);
        assert!((est.estimate - exact).abs() < 3.5 * est.std_error);
    }

    #[test]
    fn radial_matches() {
        let p = KernelParams::new(2.0, 1.0, 3.0, 2).unwrap();
        let radii = [0.3, 0.9, 1.4, 2.2];
        let exact = radial_discrepancy(&p, &radii).unwrap().powi(2);
        let est = mc_radial_discrepancy_oracle(&p, &radii, 200_000, 4).unwrap();
        assert!((est.estimate - exact).abs() < 3.5 * est.std_error);
    }

    #[test]
    fn deterministic() {
        let p = KernelParams::new(1.0, 1.0, 2.0, 2).unwrap();
        let x = [SpacePoint::from_cartesian(&[0.1, 0.2, 0.3]).unwrap()];
        let a = mc_cone_discrepancy_oracle(&p, &x, 10_000, 3).unwrap();
        let b = mc_cone_discrepancy_oracle(&p, &x, 10_000, 3).unwrap();
        assert_eq!(a, b);
    }
}
