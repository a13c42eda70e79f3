use crate::error::{config, domain, Result};
use crate::quad::{integrate, integrate_to_inf};
use crate::spheremap::SpacePoint;
use crate::stats::pairwise_sum;

use super::{nakagami_density, sphere_constants, symmetric_pair_mean, KernelParams, WceReport};

const TOL: f64 = 1e-11;

/// A radial weight `Φ` (a cdf on `[0, ∞)`) and radial density `ψ̃`.
pub trait RadialModel: Sync {
    fn phi(&self, r: f64) -> f64;
    fn psi(&self, r: f64) -> f64;
    /// `∫_r^∞ ψ̃`, if known in closed form.
    fn psi_tail(&self, _r: f64) -> Option<f64> {
        None
    }
}

/// The Nakagami specialization as a [`RadialModel`].
#[derive(Debug, Clone, Copy)]
pub struct NakagamiModel(pub KernelParams);

impl RadialModel for NakagamiModel {
    fn phi(&self, r: f64) -> f64 {
        self.0.phi(r)
    }
    fn psi(&self, r: f64) -> f64 {
        nakagami_density(self.0.mu(), self.0.b, r)
    }
    fn psi_tail(&self, r: f64) -> Option<f64> {
        Some(self.0.psi_tail(r))
    }
}

fn tail<M: RadialModel + ?Sized>(m: &M, r: f64) -> Result<f64> {
    match m.psi_tail(r) {
        Some(t) => Ok(t),
        None => Ok(integrate_to_inf(|s| m.psi(s), r, TOL, TOL)?.value),
    }
}

/// Worst-case error for an arbitrary isotropic weight, with the radial
/// integrals done by adaptive quadrature.
pub fn wce_isotropic_general<M: RadialModel + ?Sized>(model: &M, d: usize, x: &[SpacePoint]) -> Result<WceReport> {
    if x.is_empty() {
        return domain("worst-case error of an empty point set");
    }
    if let Some(bad) = x.iter().find(|p| p.ambient_dim() != d + 1) {
        return config(format!("point in R^{} used on S^{d}", bad.ambient_dim()));
    }
    let sc = sphere_constants(d)?;
    if model.phi(0.0).abs() > 1e-8 || (model.phi(1e150) - 1.0).abs() > 1e-8 {
        return config("Φ must be a cdf on [0, ∞)");
    }
    let mass = integrate_to_inf(|s| model.psi(s), 0.0, TOL, TOL)?.value;
    if (mass - 1.0).abs() > 1e-8 {
        return config(format!("radial density integrates to {mass}, not 1"));
    }
    // W(K_R, ψ̃) = 2 ∫ Φ ψ̃ T with T the upper tail of ψ̃
    // a failed inner tail shows up as a non-finite integrand
    let w_r = 2.0
        * integrate_to_inf(|s| model.phi(s) * model.psi(s) * tail(model, s).unwrap_or(f64::NAN), 0.0, TOL, TOL)?.value;
    // ∫_0^r Φ ψ̃ accumulated over the sorted radii
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].radius.total_cmp(&x[j].radius));
    let mut lower = vec![0.0; x.len()];
    let (mut acc, mut prev) = (0.0, 0.0);
    for &i in &order {
        let r = x[i].radius;
        acc += integrate(|s| model.phi(s) * model.psi(s), prev, r, TOL * 1e-2, TOL)?.value;
        prev = r;
        lower[i] = acc;
    }
    let brackets: Vec<f64> = x
        .iter()
        .zip(&lower)
        .map(|(p, &lo)| Ok(sc.w_ks * (model.phi(p.radius) * tail(model, p.radius)? + lo - w_r)))
        .collect::<Result<_>>()?;
    let phis: Vec<f64> = x.iter().map(|p| model.phi(p.radius)).collect();
    let w_k = w_r * sc.w_ks;
    let mean_k = symmetric_pair_mean(x.len(), |i, j| {
        phis[i].min(phis[j]) * (1.0 - sc.c_d * x[i].direction.distance(&x[j].direction))
    });
    let n = x.len();
    Ok(WceReport::assemble(mean_k - w_k, 2.0 * pairwise_sum(&brackets) / n as f64, w_k, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wce::{w_kr_psi, wce_nakagami};

    // Nakagami model without the closed-form tail
    struct Opaque(KernelParams);
    impl RadialModel for Opaque {
        fn phi(&self, r: f64) -> f64 {
            self.0.phi(r)
        }
        fn psi(&self, r: f64) -> f64 {
            self.0.psi(r)
        }
    }

    fn points() -> Vec<SpacePoint> {
        (0..9)
            .map(|i| {
                let t = i as f64 * 0.9;
                SpacePoint::from_cartesian(&[t.cos() * (0.2 + 0.3 * t), t.sin(), 0.5 - 0.1 * t]).unwrap()
            })
            .collect()
    }

    #[test]
    fn agrees_with_closed_form() {
        for (mu, a, b) in [(1.5, 1.5, 3.0), (15.0, 15.0, 30.0), (0.8, 0.5, 1.7)] {
            let p = KernelParams::new(mu, a, b, 2).unwrap();
            let x = points();
            let exact = wce_nakagami(&p, &x).unwrap();
            let quad = wce_isotropic_general(&Opaque(p), 2, &x).unwrap();
            assert!((exact.wce - quad.wce).abs() < 1e-7, "{mu} {a} {b}");
            assert!((exact.w_k - quad.w_k).abs() < 1e-9);
            assert!((w_kr_psi(&p) * p.sphere().w_ks - quad.w_k).abs() < 1e-9);
        }
    }

    #[test]
    fn origin_and_radius_scan() {
        let p = KernelParams::new(2.0, 1.0, 3.0, 2).unwrap();
        let m = NakagamiModel(p);
        let o = wce_isotropic_general(&m, 2, &[SpacePoint::origin(3)]).unwrap();
        assert!((o.wce - p.w_k().sqrt()).abs() < 1e-9);
        let scan: Vec<f64> = (0..60)
            .map(|i| {
                let x = SpacePoint::from_cartesian(&[0.0, 0.0, 0.05 * i as f64]).unwrap();
                wce_isotropic_general(&m, 2, &[x]).unwrap().wce
            })
            .collect();
        let best = scan.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(best > 0 && best < scan.len() - 1);
    }

    #[test]
    fn rejects_unnormalized_density() {
        struct Bad;
        impl RadialModel for Bad {
            fn phi(&self, r: f64) -> f64 {
                1.0 - (-r).exp()
            }
            fn psi(&self, r: f64) -> f64 {
                2.0 * (-r).exp()
            }
        }
        let x = [SpacePoint::origin(3)];
        assert!(matches!(wce_isotropic_general(&Bad, 2, &x), Err(crate::Error::Config(_))));
    }
}
