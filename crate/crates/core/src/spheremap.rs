//! Cube-to-sphere map, chi-radial lift to `R^d`, radial shells and
//! equal-area partitions of `S^2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, domain, Error, Result};
use crate::specfun::{self, SymmetricBetaInverse};

/// Tolerance on the norm of a [`UnitVector`].
pub const UNIT_TOL: f64 = 1e-12;

/// A point on `S^m`, stored with its `m + 1` ambient coordinates.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return domain("a unit vector needs at least two coordinates");
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > UNIT_TOL {
            return domain(format!("vector norm {n} is not 1"));
        }
        Ok(Self(coords))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if !(n > 0.0 && n.is_finite()) || coords.len() < 2 {
            return domain("cannot normalize a zero or non-finite vector");
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self(coords))
    }

    /// The first standard basis vector of `R^{m+1}`.
    pub fn pole(ambient: usize) -> Self {
        let mut c = vec![0.0; ambient.max(2)];
        c[0] = 1.0;
        Self(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    /// `m` for a point on `S^m`.
    pub fn sphere_dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Euclidean (chordal) distance.
    pub fn distance(&self, other: &UnitVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A point `r x*` of `R^{m+1}` split into radius and direction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpacePoint {
    pub direction: UnitVector,
    pub radius: f64,
}

impl SpacePoint {
    pub fn new(direction: UnitVector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return domain(format!("radius {radius} must be finite and nonnegative"));
        }
        Ok(Self { direction, radius })
    }

    /// Splits a Cartesian point. The origin gets the first basis vector as direction.
    pub fn from_cartesian(x: &[f64]) -> Result<Self> {
        if x.len() < 2 {
            return domain("points need at least two coordinates");
        }
        if x.iter().any(|v| !v.is_finite()) {
            return domain("non-finite coordinate");
        }
        let r = norm(x);
        if r == 0.0 {
            return Ok(Self { direction: UnitVector::pole(x.len()), radius: 0.0 });
        }
        Ok(Self { direction: UnitVector(x.iter().map(|v| v / r).collect()), radius: r })
    }

    pub fn origin(ambient: usize) -> Self {
        Self { direction: UnitVector::pole(ambient), radius: 0.0 }
    }

    pub fn cartesian(&self) -> Vec<f64> {
        self.direction.0.iter().map(|c| c * self.radius).collect()
    }

    pub fn ambient_dim(&self) -> usize {
        self.direction.ambient_dim()
    }
}

/// The map `T: [0,1)^s → S^s`, with the inverse symmetric-beta solvers cached per level.
#[derive(Debug, Clone)]
pub struct SphereMap {
    s: usize,
    levels: Vec<SymmetricBetaInverse>,
}

impl SphereMap {
    pub fn new(s: usize) -> Result<Self> {
        if s == 0 {
            return config("sphere map needs at least one input coordinate");
        }
        let levels = (3..=s).map(|q| SymmetricBetaInverse::new(0.5 * q as f64)).collect::<Result<_>>()?;
        Ok(Self { s, levels })
    }

    pub fn input_dim(&self) -> usize {
        self.s
    }

    /// Writes `T(x)` into `out` (length `s + 1`).
    pub fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.s || out.len() != self.s + 1 {
            return config(format!(
                "sphere map of {} coordinates got {} inputs and {} outputs",
                self.s,
                x.len(),
                out.len()
            ));
        }
        if let Some(bad) = x.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return domain(format!("coordinate {bad} outside [0, 1)"));
        }
        let (s, c) = (2.0 * PI * x[0]).sin_cos();
        out[0] = c;
        out[1] = s;
        for q in 2..=self.s {
            let y = if q == 2 { x[1] } else { self.levels[q - 3].eval(x[q - 1])? };
            let t = 1.0 - 2.0 * y;
            let scale = 2.0 * (y * (1.0 - y)).sqrt();
            out[..q].iter_mut().for_each(|v| *v *= scale);
            out[q] = t;
        }
        Ok(())
    }

    pub fn map(&self, x: &[f64]) -> Result<UnitVector> {
        let mut out = vec![0.0; self.s + 1];
        self.map_into(x, &mut out)?;
        Ok(UnitVector(out))
    }
}

/// `T(x)` for `x ∈ [0,1)^s`, a point on `S^s ⊂ R^{s+1}`.
pub fn map_to_sphere(x: &[f64]) -> Result<UnitVector> {
    SphereMap::new(x.len())?.map(x)
}

/// Maps cube points of dimension `d` to `R^d`: the first `d-1` coordinates
/// give a direction through [`SphereMap`], the last a chi(`d`) radius.
#[derive(Debug, Clone)]
pub struct Lift {
    d: usize,
    sphere: SphereMap,
    radius_cap: f64,
}

impl Lift {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return config("the radial lift needs d >= 2");
        }
        let radius_cap = specfun::chi_quantile(d as u32, 1.0 - 2f64.powi(-32))?;
        Ok(Self { d, sphere: SphereMap::new(d - 1)?, radius_cap })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return domain(format!("radial coordinate {u} outside [0, 1)"));
        }
        match specfun::chi_quantile(self.d as u32, u) {
            Ok(r) => Ok(r.min(self.radius_cap)),
            Err(Error::Infinite(_)) => Ok(self.radius_cap),
            Err(e) => Err(e),
        }
    }

    /// Writes the Cartesian image of `x` into `out` (both of length `d`).
    pub fn lift_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.d || out.len() != self.d {
            return config(format!("lift to R^{} got {} inputs", self.d, x.len()));
        }
        self.sphere.map_into(&x[..self.d - 1], out)?;
        let r = self.radius(x[self.d - 1])?;
        out.iter_mut().for_each(|v| *v *= r);
        Ok(())
    }

    pub fn lift(&self, x: &[f64]) -> Result<SpacePoint> {
        if x.len() != self.d {
            return config(format!("lift to R^{} got {} inputs", self.d, x.len()));
        }
        let direction = self.sphere.map(&x[..self.d - 1])?;
        Ok(SpacePoint { direction, radius: self.radius(x[self.d - 1])? })
    }
}

/// Lifts `x ∈ [0,1)^d` to a point of `R^d`; uniform inputs give standard normal outputs.
pub fn lift_to_space(x: &[f64]) -> Result<SpacePoint> {
    Lift::new(x.len())?.lift(x)
}

/// Normalized surface measure of a cap `{y : <y, z> >= t}` on `S^m`.
pub fn cap_measure(m: usize, t: f64) -> Result<f64> {
    if m == 0 {
        return domain("cap measure needs a sphere of dimension >= 1");
    }
    if !(-1.0..=1.0).contains(&t) {
        return domain(format!("cap height {t} outside [-1, 1]"));
    }
    let h = 0.5 * m as f64;
    specfun::reg_beta_i(0.5 * (1.0 - t), h, h)
}

/// Equal-mass radial shells of the Nakagami(μ, B) density.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RadialShells {
    /// Interior boundaries `ρ_1 < … < ρ_{K-1}`.
    pub boundaries: Vec<f64>,
    pub mu: f64,
    pub b: f64,
}

impl RadialShells {
    pub fn count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Bounds `[ρ_{k-1}, ρ_k)` of shell `k` in `1..=K`; the last one is unbounded.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        let lo = if k <= 1 { 0.0 } else { self.boundaries[k - 2] };
        let hi = if k >= self.count() { f64::INFINITY } else { self.boundaries[k - 1] };
        (lo, hi)
    }

    /// Radius with conditional Nakagami law on shell `k`, from `u ∈ [0,1)`.
    pub fn sample(&self, k: usize, u: f64) -> Result<f64> {
        let kk = self.count() as f64;
        let (lo, hi) = self.bounds(k);
        // upper-tail mass from the outer edge of the shell
        let tail = (kk - (k as f64 - 1.0) - u) / kk;
        let z = specfun::inv_reg_gamma_q(self.mu, tail.clamp(f64::MIN_POSITIVE, 1.0))?;
        let r = (self.b / self.mu * z).sqrt();
        Ok(r.clamp(lo, if hi.is_finite() { hi.next_down() } else { hi }))
    }
}

/// Boundaries `ρ_k = sqrt((B/μ) Q^{-1}(μ, 1 - k/K))` for `k = 1..K-1`.
pub fn radial_shells(mu: f64, b: f64, k: usize) -> Result<RadialShells> {
    specfun::ShapeParam::new(mu)?;
    specfun::ShapeParam::new(b)?;
    if k == 0 {
        return config("need at least one radial shell");
    }
    let boundaries = (1..k)
        .map(|j| {
            let s = 1.0 - j as f64 / k as f64;
            specfun::inv_reg_gamma_q(mu, s).map(|z| (b / mu * z).sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(RadialShells { boundaries, mu, b })
}

/// A colatitude band sector `[θ_lo, θ_hi] × [φ_lo, φ_hi]` of `S^2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Cell {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
    /// Index of the zone this cell belongs to; cells of one zone are congruent.
    pub zone: usize,
}

impl Cell {
    /// Normalized area.
    pub fn area(&self) -> f64 {
        0.5 * (self.theta_lo.cos() - self.theta_hi.cos()) * (self.phi_hi - self.phi_lo) / (2.0 * PI)
    }

    /// Uniform point of the cell from two uniforms.
    pub fn sample(&self, u: f64, v: f64) -> UnitVector {
        let (c_lo, c_hi) = (self.theta_hi.cos(), self.theta_lo.cos());
        let z = (c_lo + u * (c_hi - c_lo)).clamp(-1.0, 1.0);
        let phi = self.phi_lo + v * (self.phi_hi - self.phi_lo);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        UnitVector(vec![rho * phi.cos(), rho * phi.sin(), z])
    }

    pub fn contains(&self, y: &UnitVector) -> bool {
        let c = y.coords();
        let theta = c[2].clamp(-1.0, 1.0).acos();
        let mut phi = c[1].atan2(c[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        theta >= self.theta_lo && theta <= self.theta_hi && phi >= self.phi_lo && phi <= self.phi_hi
    }

    fn boundary(&self, per_edge: usize) -> Vec<UnitVector> {
        let mut pts = Vec::with_capacity(4 * per_edge);
        for i in 0..per_edge {
            let s = i as f64 / (per_edge - 1) as f64;
            let phi = self.phi_lo + s * (self.phi_hi - self.phi_lo);
            let theta = self.theta_lo + s * (self.theta_hi - self.theta_lo);
            pts.push(spherical(self.theta_lo, phi));
            pts.push(spherical(self.theta_hi, phi));
            pts.push(spherical(theta, self.phi_lo));
            pts.push(spherical(theta, self.phi_hi));
        }
        pts
    }

    /// Diameter estimated from a dense sampling of the boundary.
    pub fn diameter(&self) -> f64 {
        if self.theta_lo <= 0.0 && self.theta_hi >= PI {
            return 2.0;
        }
        let full_circle = self.phi_hi - self.phi_lo >= 2.0 * PI - 1e-12;
        if full_circle {
            // a polar cap: diameter is the chord across its rim or 2 past the equator
            let rim = if self.theta_lo <= 0.0 { self.theta_hi } else { PI - self.theta_lo };
            return if rim >= 0.5 * PI { 2.0 } else { 2.0 * rim.sin() };
        }
        let pts = self.boundary(48);
        let mut best = 0.0_f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(pts[i].distance(&pts[j]));
            }
        }
        best
    }
}

fn spherical(theta: f64, phi: f64) -> UnitVector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    UnitVector(vec![st * cp, st * sp, ct])
}

/// Equal-area partition of `S^2` into polar caps and collars of sectors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpherePartition {
    pub cells: Vec<Cell>,
}

impl SpherePartition {
    pub fn count(&self) -> usize {
        self.cells.len()
    }

    /// Largest cell diameter, computed once per zone.
    pub fn max_diameter(&self) -> f64 {
        let mut seen = std::collections::BTreeMap::new();
        for c in &self.cells {
            seen.entry(c.zone).or_insert_with(|| c.diameter());
        }
        seen.values().cloned().fold(0.0, f64::max)
    }

    /// `max diameter × sqrt(M)`.
    pub fn diameter_constant(&self) -> f64 {
        self.max_diameter() * (self.count() as f64).sqrt()
    }
}

fn cap_angle(area_fraction: f64) -> f64 {
    // colatitude of a polar cap with the given normalized area
    2.0 * area_fraction.clamp(0.0, 1.0).sqrt().asin()
}

/// Zonal equal-area partition of `S^2` into `m` cells.
pub fn equal_area_partition_s2(m: usize) -> Result<SpherePartition> {
    if m == 0 {
        return config("partition needs at least one cell");
    }
    let full = |zone| Cell { theta_lo: 0.0, theta_hi: PI, phi_lo: 0.0, phi_hi: 2.0 * PI, zone };
    if m == 1 {
        return Ok(SpherePartition { cells: vec![full(0)] });
    }
    let mf = m as f64;
    let theta_c = cap_angle(1.0 / mf);
    let ideal_angle = (4.0 * PI / mf).sqrt();
    let n_collars = if m == 2 { 0 } else { (((PI - 2.0 * theta_c) / ideal_angle).round() as usize).max(1) };
    let mut counts = Vec::with_capacity(n_collars);
    if n_collars > 0 {
        let fitted = (PI - 2.0 * theta_c) / n_collars as f64;
        let mut carry = 0.0;
        for i in 0..n_collars {
            let a = theta_c + i as f64 * fitted;
            let b = a + fitted;
            let ideal = 0.5 * (a.cos() - b.cos()) * mf;
            let n = (ideal + carry).round();
            carry += ideal - n;
            counts.push(n as usize);
        }
    }
    let total: usize = 2 + counts.iter().sum::<usize>();
    if total != m {
        return Err(Error::Numeric(format!("zonal partition produced {total} cells instead of {m}")));
    }
    let mut cells = vec![Cell { theta_lo: 0.0, theta_hi: theta_c, phi_lo: 0.0, phi_hi: 2.0 * PI, zone: 0 }];
    let mut below = 1usize;
    let mut theta_prev = theta_c;
    for (i, &n) in counts.iter().enumerate() {
        below += n;
        let theta_next = if below == m - 1 { PI - theta_c } else { cap_angle(below as f64 / mf) };
        let width = 2.0 * PI / n as f64;
        for j in 0..n {
            let phi_hi = if j + 1 == n { 2.0 * PI } else { (j + 1) as f64 * width };
            cells.push(Cell {
                theta_lo: theta_prev,
                theta_hi: theta_next,
                phi_lo: j as f64 * width,
                phi_hi,
                zone: i + 1,
            });
        }
        theta_prev = theta_next;
    }
    cells.push(Cell { theta_lo: theta_prev, theta_hi: PI, phi_lo: 0.0, phi_hi: 2.0 * PI, zone: n_collars + 1 });
    Ok(SpherePartition { cells })
}

/// One random point per product cell `D_m × [ρ_{k-1}, ρ_k)`, cell-major order.
pub fn stratified_sample(partition: &SpherePartition, shells: &RadialShells, seed: u64) -> Result<Vec<SpacePoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    stratified_sample_with(partition, shells, &mut rng)
}

pub fn stratified_sample_with<R: Rng>(
    partition: &SpherePartition,
    shells: &RadialShells,
    rng: &mut R,
) -> Result<Vec<SpacePoint>> {
    let k = shells.count();
    let mut out = Vec::with_capacity(partition.count() * k);
    for cell in &partition.cells {
        for shell in 1..=k {
            let direction = cell.sample(rng.random(), rng.random());
            let radius = shells.sample(shell, rng.random())?;
            out.push(SpacePoint { direction, radius });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn map_examples() {
        assert!(approx(map_to_sphere(&[0.0]).unwrap().coords(), &[1.0, 0.0], 0.0));
        assert!(approx(map_to_sphere(&[0.25, 0.5]).unwrap().coords(), &[0.0, 1.0, 0.0], 1e-15));
        assert!(approx(map_to_sphere(&[0.0, 0.5, 0.5]).unwrap().coords(), &[1.0, 0.0, 0.0, 0.0], 1e-15));
        // x_2 = 0 puts the level-2 height at the pole
        assert!(approx(map_to_sphere(&[0.0, 0.0, 0.5]).unwrap().coords(), &[0.0, 0.0, 1.0, 0.0], 1e-15));
        assert!(map_to_sphere(&[1.0]).is_err());
        assert!(map_to_sphere(&[0.3, -0.1]).is_err());
    }

    #[test]
    fn lift_examples() {
        let u = 1.0 - (-0.5f64).exp();
        let p = lift_to_space(&[0.0, u]).unwrap();
        assert!((p.radius - 1.0).abs() < 1e-14);
        assert!(approx(&p.cartesian(), &[1.0, 0.0], 1e-14));
        let p = lift_to_space(&[0.5, 0.3]).unwrap();
        assert!(approx(p.direction.coords(), &[-1.0, 0.0], 1e-15));
    }

    #[test]
    fn radius_is_capped() {
        let l = Lift::new(4).unwrap();
        let top = l.radius(1.0 - 2f64.powi(-33)).unwrap();
        assert_eq!(top, l.radius_cap);
    }

    #[test]
    fn cap_examples() {
        assert!((cap_measure(2, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((cap_measure(1, -1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((cap_measure(2, 0.5).unwrap() - 0.25).abs() < 1e-15);
        let t: f64 = 0.3;
        assert!((cap_measure(1, t).unwrap() - t.acos() / PI).abs() < 1e-14);
    }

    #[test]
    fn shells() {
        let s = radial_shells(1.0, 1.0, 2).unwrap();
        assert!((s.boundaries[0] - 2f64.ln().sqrt()).abs() < 1e-14);
        assert!(radial_shells(1.0, 1.0, 1).unwrap().boundaries.is_empty());
        let s = radial_shells(15.0, 30.0, 4).unwrap();
        let mut edges = vec![0.0];
        edges.extend(&s.boundaries);
        let tails: Vec<f64> = edges.iter().map(|r| specfun::reg_gamma_q(15.0, 0.5 * r * r).unwrap()).collect();
        for w in tails.windows(2) {
            assert!((w[0] - w[1] - 0.25).abs() < 1e-10);
        }
        assert!((tails[3] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn partition_small_cases() {
        let p = equal_area_partition_s2(1).unwrap();
        assert_eq!(p.count(), 1);
        assert_eq!(p.max_diameter(), 2.0);
        let p = equal_area_partition_s2(2).unwrap();
        assert_eq!(p.count(), 2);
        assert!(p.cells.iter().all(|c| (c.area() - 0.5).abs() < 1e-12));
    }

    #[test]
    fn partition_areas_and_diameters() {
        for m in [3, 5, 10, 33, 100, 257, 1000, 4096] {
            let p = equal_area_partition_s2(m).unwrap();
            assert_eq!(p.count(), m);
            for c in &p.cells {
                assert!((c.area() - 1.0 / m as f64).abs() < 1e-10, "m={m}");
            }
            assert!(p.diameter_constant() <= 7.0, "m={m} c={}", p.diameter_constant());
        }
    }

    #[test]
    fn stratified_points_land_in_their_cells() {
        let p = equal_area_partition_s2(20).unwrap();
        let s = radial_shells(1.5, 3.0, 5).unwrap();
        let pts = stratified_sample(&p, &s, 11).unwrap();
        assert_eq!(pts.len(), 100);
        for (i, pt) in pts.iter().enumerate() {
            let (cell, shell) = (i / 5, i % 5 + 1);
            assert!(p.cells[cell].contains(&pt.direction));
            let (lo, hi) = s.bounds(shell);
            assert!(pt.radius >= lo && pt.radius < hi);
        }
    }
}
