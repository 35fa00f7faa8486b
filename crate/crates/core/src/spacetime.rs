//! 1+1-dimensional Minkowski geometry: configurations, boosts, spinor
//! conventions, piecewise-linear spacelike hypersurfaces and the surface
//! probability density `φ̄ (γ·n ⊗ … ⊗ γ·n) φ`.
//!
//! Units have `c = 1`, metric signature `(+, -)`. Spinor component `0` is the
//! upper `σ3` eigenvector (right-mover for the massless Dirac operator),
//! component `1` the lower one. Multi-particle spinors are stored with the
//! first particle as the most significant index.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::linalg::{c, C64, ONE, ZERO};
use crate::quadrature::Composite;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub z: f64,
}

impl SpacetimePoint {
    pub const fn new(t: f64, z: f64) -> Self {
        SpacetimePoint { t, z }
    }

    /// `Δt² - Δz²`: negative for spacelike separation.
    pub fn interval(&self, other: &SpacetimePoint) -> f64 {
        let dt = self.t - other.t;
        let dz = self.z - other.z;
        dt * dt - dz * dz
    }
}

/// Relation between two space-time points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separation {
    Equal,
    Spacelike,
    Lightlike,
    Timelike,
}

pub fn separation(a: &SpacetimePoint, b: &SpacetimePoint) -> Separation {
    let dt = (a.t - b.t).abs();
    let dz = (a.z - b.z).abs();
    if dt == 0.0 && dz == 0.0 {
        Separation::Equal
    } else if dt < dz {
        Separation::Spacelike
    } else if dt == dz {
        Separation::Lightlike
    } else {
        Separation::Timelike
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigClass {
    Spacelike,
    Collision,
    NonSpacelike,
}

/// Classify an ordered tuple of space-time points. Lightlike pairs are not
/// spacelike; see [`has_lightlike_pair`] for callers that treat them as
/// boundary values.
pub fn classify(points: &[SpacetimePoint]) -> ConfigClass {
    let mut collision = false;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            match separation(a, b) {
                Separation::Equal => collision = true,
                Separation::Spacelike => {}
                _ => return ConfigClass::NonSpacelike,
            }
        }
    }
    if collision {
        ConfigClass::Collision
    } else {
        ConfigClass::Spacelike
    }
}

pub fn has_lightlike_pair(points: &[SpacetimePoint]) -> bool {
    points
        .iter()
        .enumerate()
        .any(|(i, a)| points[i + 1..].iter().any(|b| separation(a, b) == Separation::Lightlike))
}

/// Fixed gamma-matrix conventions: `γ0 = σ1`, `γ1 = σ1 σ3`.
pub struct SpinorConventions;

impl SpinorConventions {
    pub fn sigma1() -> Matrix2<C64> {
        Matrix2::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma3() -> Matrix2<C64> {
        Matrix2::new(ONE, ZERO, ZERO, -ONE)
    }

    pub fn gamma0() -> Matrix2<C64> {
        Self::sigma1()
    }

    pub fn gamma1() -> Matrix2<C64> {
        Self::sigma1() * Self::sigma3()
    }
}

/// Lorentz boost with rapidity `β`, acting on points and spinors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boost {
    pub rapidity: f64,
}

impl Boost {
    pub fn new(rapidity: f64) -> Self {
        Boost { rapidity }
    }

    pub fn inverse(&self) -> Boost {
        Boost { rapidity: -self.rapidity }
    }

    /// `Λ(β)` acting on `(t, z)` column vectors.
    pub fn point_matrix(&self) -> Matrix2<f64> {
        let (ch, sh) = (self.rapidity.cosh(), self.rapidity.sinh());
        Matrix2::new(ch, -sh, -sh, ch)
    }

    pub fn apply(&self, p: SpacetimePoint) -> SpacetimePoint {
        let (ch, sh) = (self.rapidity.cosh(), self.rapidity.sinh());
        SpacetimePoint::new(p.t * ch - p.z * sh, p.z * ch - p.t * sh)
    }

    /// Diagonal of `S(β) = diag(e^{-β/2}, e^{β/2})`, so that
    /// `S⁻¹ γ^μ S = Λ^μ_ν γ^ν` and the current transforms as a vector.
    pub fn spinor_diag(&self) -> [f64; 2] {
        let h = 0.5 * self.rapidity;
        [(-h).exp(), h.exp()]
    }

    pub fn spinor_matrix(&self) -> Matrix2<C64> {
        let d = self.spinor_diag();
        Matrix2::new(c(d[0], 0.0), ZERO, ZERO, c(d[1], 0.0))
    }

    /// Apply `S(β)^{⊗n}` to an `n`-particle spinor of length `2^n`.
    pub fn apply_spinor(&self, amp: &[C64]) -> Vec<C64> {
        let n = particles_of_len(amp.len());
        let d = self.spinor_diag();
        amp.iter()
            .enumerate()
            .map(|(idx, v)| {
                let f: f64 = (0..n).map(|p| d[(idx >> (n - 1 - p)) & 1]).product();
                v * f
            })
            .collect()
    }
}

fn particles_of_len(len: usize) -> usize {
    assert!(len.is_power_of_two(), "spinor length {len} is not 2^n");
    len.trailing_zeros() as usize
}

/// Sign of the velocity of spinor component `s` (0 -> +1, 1 -> -1).
pub fn velocity(s: usize) -> f64 {
    if s == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Future unit normal `n_μ` (lower index) of a segment `t = τ(z)` of slope
/// `s`: `(1, -s) / sqrt(1 - s²)`.
pub fn unit_normal_lower(slope: f64) -> [f64; 2] {
    let g = 1.0 / (1.0 - slope * slope).sqrt();
    [g, -slope * g]
}

/// `φ̄ [γ^μ n_μ ⊗ …] φ` for an `n`-particle spinor where particle `j` sits on a
/// segment of slope `slopes[j]`. With `γ0 γ^μ n_μ = n_0 + n_1 σ3` the
/// operator is diagonal.
pub fn born_density(amp: &[C64], slopes: &[f64]) -> f64 {
    let n = particles_of_len(amp.len());
    assert_eq!(n, slopes.len());
    let normals: Vec<[f64; 2]> = slopes.iter().map(|s| unit_normal_lower(*s)).collect();
    amp.iter()
        .enumerate()
        .map(|(idx, v)| {
            let w: f64 = (0..n)
                .map(|p| {
                    let s = (idx >> (n - 1 - p)) & 1;
                    normals[p][0] + normals[p][1] * velocity(s)
                })
                .product();
            w * v.norm_sqr()
        })
        .sum()
}

/// Density per unit coordinate length `dz` on each particle's axis:
/// `born_density × Π sqrt(1 - s_j²)`.
pub fn born_density_dz(amp: &[C64], slopes: &[f64]) -> f64 {
    let n = particles_of_len(amp.len());
    amp.iter()
        .enumerate()
        .map(|(idx, v)| {
            let w: f64 = (0..n).map(|p| 1.0 - slopes[p] * velocity((idx >> (n - 1 - p)) & 1)).product();
            w * v.norm_sqr()
        })
        .sum()
}

/// A spacelike Cauchy surface `t = τ(z)`, piecewise linear between nodes and
/// constant outside them. Serialized as a JSON array of `[z, t]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Hypersurface {
    nodes: Vec<[f64; 2]>,
}

impl TryFrom<Vec<[f64; 2]>> for Hypersurface {
    type Error = crate::error::Error;
    fn try_from(nodes: Vec<[f64; 2]>) -> Result<Self> {
        Hypersurface::new(nodes)
    }
}

impl From<Hypersurface> for Vec<[f64; 2]> {
    fn from(h: Hypersurface) -> Self {
        h.nodes
    }
}

impl Hypersurface {
    /// Nodes are `[z, t]`. Rejects unsorted nodes and any segment with
    /// `|slope| >= 1`.
    pub fn new(nodes: Vec<[f64; 2]>) -> Result<Self> {
        if nodes.is_empty() {
            return domain("hypersurface needs at least one node");
        }
        if nodes.iter().any(|n| !n[0].is_finite() || !n[1].is_finite()) {
            return domain("hypersurface nodes must be finite");
        }
        for w in nodes.windows(2) {
            let dz = w[1][0] - w[0][0];
            if dz <= 0.0 {
                return domain("hypersurface nodes must have strictly increasing z");
            }
            let slope = (w[1][1] - w[0][1]) / dz;
            if slope.abs() >= 1.0 {
                return domain(format!("segment slope {slope} is not spacelike"));
            }
        }
        Ok(Hypersurface { nodes })
    }

    pub fn flat(t: f64) -> Self {
        Hypersurface { nodes: vec![[0.0, t]] }
    }

    /// Surface rising linearly with `slope` on `[z0, z1]`, passing through
    /// `(t_mid, (z0 + z1)/2)`.
    pub fn tilted(t_mid: f64, slope: f64, z0: f64, z1: f64) -> Result<Self> {
        let mid = 0.5 * (z0 + z1);
        Hypersurface::new(vec![[z0, t_mid + slope * (z0 - mid)], [z1, t_mid + slope * (z1 - mid)]])
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n[0]).collect()
    }

    pub fn time_at(&self, z: f64) -> f64 {
        let first = self.nodes[0];
        let last = self.nodes[self.nodes.len() - 1];
        if z <= first[0] {
            return first[1];
        }
        if z >= last[0] {
            return last[1];
        }
        let k = self.nodes.partition_point(|n| n[0] <= z) - 1;
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        a[1] + (b[1] - a[1]) * (z - a[0]) / (b[0] - a[0])
    }

    /// Slope of the segment containing `z` (right-continuous at nodes).
    pub fn slope_at(&self, z: f64) -> f64 {
        let first = self.nodes[0];
        let last = self.nodes[self.nodes.len() - 1];
        if z < first[0] || z >= last[0] {
            return 0.0;
        }
        let k = self.nodes.partition_point(|n| n[0] <= z) - 1;
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        (b[1] - a[1]) / (b[0] - a[0])
    }

    pub fn point_at(&self, z: f64) -> SpacetimePoint {
        SpacetimePoint::new(self.time_at(z), z)
    }

    pub fn contains(&self, p: &SpacetimePoint, tol: f64) -> bool {
        (self.time_at(p.z) - p.t).abs() <= tol
    }

    pub fn time_range(&self) -> (f64, f64) {
        let lo = self.nodes.iter().map(|n| n[1]).fold(f64::INFINITY, f64::min);
        let hi = self.nodes.iter().map(|n| n[1]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Apply a boost to the node set. The boosted surface is again a graph
    /// over space because every segment is spacelike.
    pub fn boosted(&self, b: &Boost, window: (f64, f64)) -> Result<Hypersurface> {
        let mut zs = vec![window.0];
        zs.extend(self.breakpoints().into_iter().filter(|z| *z > window.0 && *z < window.1));
        zs.push(window.1);
        let nodes = zs
            .into_iter()
            .map(|z| {
                let p = b.apply(self.point_at(z));
                [p.z, p.t]
            })
            .collect();
        Hypersurface::new(nodes)
    }
}

/// Density of a configuration lying on `surface`, per unit induced length.
pub fn born_density_on(surface: &Hypersurface, points: &[SpacetimePoint], amp: &[C64]) -> Result<f64> {
    for p in points {
        if !surface.contains(p, 1e-12 * (1.0 + p.t.abs())) {
            return domain(format!("point ({}, {}) is not on the surface", p.t, p.z));
        }
    }
    let slopes: Vec<f64> = points.iter().map(|p| surface.slope_at(p.z)).collect();
    Ok(born_density(amp, &slopes))
}

/// One-particle restriction sampled on a uniform grid along `z`.
#[derive(Clone, Debug)]
pub struct SampledRestriction1 {
    pub z0: f64,
    pub dz: f64,
    pub values: Vec<[C64; 2]>,
}

/// Two-particle restriction sampled on a uniform `z1 × z2` grid, row-major
/// in `z1`.
#[derive(Clone, Debug)]
pub struct SampledRestriction2 {
    pub z0: f64,
    pub dz: f64,
    pub n: usize,
    pub values: Vec<[C64; 4]>,
}

/// Rectangle-rule norm of a sampled one-particle restriction.
pub fn hypersurface_norm_sampled1(phi: &SampledRestriction1, surface: &Hypersurface) -> f64 {
    phi.values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let z = phi.z0 + i as f64 * phi.dz;
            born_density_dz(v, &[surface.slope_at(z)]) * phi.dz
        })
        .sum()
}

/// Rectangle-rule norm of a sampled two-particle restriction.
pub fn hypersurface_norm_sampled2(phi: &SampledRestriction2, surface: &Hypersurface, exec: Exec) -> f64 {
    let n = phi.n;
    exec.sum_range(n, |i| {
        let s1 = surface.slope_at(phi.z0 + i as f64 * phi.dz);
        (0..n)
            .map(|j| {
                let s2 = surface.slope_at(phi.z0 + j as f64 * phi.dz);
                born_density_dz(&phi.values[i * n + j], &[s1, s2])
            })
            .sum::<f64>()
            * phi.dz
            * phi.dz
    })
}

/// Norm of a one-particle function on `surface` over `window`, by composite
/// Gauss–Legendre quadrature split at the surface kinks.
pub fn hypersurface_norm1<F>(surface: &Hypersurface, window: (f64, f64), phi: F) -> f64
where
    F: Fn(SpacetimePoint) -> [C64; 2],
{
    let rule = Composite::new(window.0, window.1, &surface.breakpoints(), 0.25, 10);
    rule.integrate(|z| born_density_dz(&phi(surface.point_at(z)), &[surface.slope_at(z)]))
}

/// Norm of a two-particle function on `surface × surface` over
/// `window × window`. Panels are split at the surface kinks and, in the
/// inner integral, at the diagonal `z1 = z2` where zero-range solutions
/// jump. `phi(x1, x2, side)` receives `side = sign(z1 - z2)` so the
/// integrand on the diagonal uses the matching one-sided limit.
pub fn hypersurface_norm2<F>(surface: &Hypersurface, window: (f64, f64), exec: Exec, phi: F) -> f64
where
    F: Fn(SpacetimePoint, SpacetimePoint) -> [C64; 4] + Sync + Send,
{
    let kinks = surface.breakpoints();
    let outer = Composite::new(window.0, window.1, &kinks, 0.2, 10);
    exec.sum_range(outer.nodes.len(), |k| {
        let z2 = outer.nodes[k];
        let p2 = surface.point_at(z2);
        let s2 = surface.slope_at(z2);
        let mut cuts = kinks.clone();
        cuts.push(z2);
        let inner = Composite::new(window.0, window.1, &cuts, 0.2, 10);
        outer.weights[k]
            * inner.integrate(|z1| {
                let p1 = surface.point_at(z1);
                born_density_dz(&phi(p1, p2), &[surface.slope_at(z1), s2])
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use proptest::prelude::*;

    fn p(t: f64, z: f64) -> SpacetimePoint {
        SpacetimePoint::new(t, z)
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&[p(0.0, 0.0), p(0.0, 1.0)]), ConfigClass::Spacelike);
        assert_eq!(classify(&[p(0.0, 0.0), p(1.0, 0.5)]), ConfigClass::NonSpacelike);
        assert_eq!(classify(&[p(2.0, 3.0), p(2.0, 3.0)]), ConfigClass::Collision);
        assert_eq!(classify(&[p(0.0, 0.0), p(1.0, 1.0)]), ConfigClass::NonSpacelike);
        assert!(has_lightlike_pair(&[p(0.0, 0.0), p(1.0, 1.0)]));
        assert_eq!(classify(&[]), ConfigClass::Spacelike);
    }

    #[test]
    fn gamma_conventions() {
        let g0 = SpinorConventions::gamma0();
        let g1 = SpinorConventions::gamma1();
        assert_eq!(g0 * g0, Matrix2::identity());
        assert_eq!(g0 * g1, SpinorConventions::sigma3());
        assert_eq!(g1, Matrix2::new(ZERO, -ONE, ONE, ZERO));
    }

    #[test]
    fn boost_examples() {
        assert_eq!(Boost::new(0.0).apply(p(1.0, 2.0)), p(1.0, 2.0));
        assert_eq!(Boost::new(0.7).apply(p(0.0, 0.0)), p(0.0, 0.0));
        // Λ(ln 2) by formula and by exponentiating the generator K = [[0,-1],[-1,0]].
        let b = Boost::new(2f64.ln());
        let q = b.apply(p(0.0, 1.0));
        let gen = Matrix2::new(0.0, -1.0, -1.0, 0.0) * b.rapidity;
        let mut expm = Matrix2::identity();
        let mut term = Matrix2::identity();
        for k in 1..40 {
            term = term * gen / k as f64;
            expm += term;
        }
        let q2 = expm * Vector2::new(0.0, 1.0);
        assert!((q.t - q2[0]).abs() < 1e-14 && (q.z - q2[1]).abs() < 1e-14);
        assert!((q.t * q.t - q.z * q.z + 1.0).abs() < 1e-14);
        // cosh(ln2) = 5/4, sinh(ln2) = 3/4
        assert!((q.t + 0.75).abs() < 1e-15 && (q.z - 1.25).abs() < 1e-15);
    }

    #[test]
    fn spinor_boost_intertwines_gammas() {
        let b = Boost::new(0.83);
        let s = b.spinor_matrix();
        let s_inv = b.inverse().spinor_matrix();
        let lam = b.point_matrix();
        let g = [SpinorConventions::gamma0(), SpinorConventions::gamma1()];
        for mu in 0..2 {
            let lhs = s_inv * g[mu] * s;
            let rhs = g[0] * c(lam[(mu, 0)], 0.0) + g[1] * c(lam[(mu, 1)], 0.0);
            assert!((lhs - rhs).norm() < 1e-14);
        }
        let one = Boost::new(1.0).apply_spinor(&[ONE, ZERO]);
        assert!((one[0].re - (-0.5f64).exp()).abs() < 1e-15 && one[1] == ZERO);
        let two = Boost::new(1.3).apply_spinor(&[ONE, ONE, ONE, ONE]);
        assert!((two[1] - ONE).norm() < 1e-15 && (two[2] - ONE).norm() < 1e-15);
        assert_eq!(Boost::new(0.0).apply_spinor(&[c(0.3, 0.1), ONE]), vec![c(0.3, 0.1), ONE]);
    }

    #[test]
    fn current_transforms_as_a_vector() {
        let b = Boost::new(0.6);
        let lam = b.point_matrix();
        let g = [SpinorConventions::gamma0(), SpinorConventions::gamma1()];
        let phi = Vector2::new(c(0.3, -0.4), c(0.7, 0.2));
        let current = |v: &Vector2<C64>| -> [f64; 2] {
            [0, 1].map(|mu| (v.adjoint() * g[0] * g[mu] * v)[(0, 0)].re)
        };
        let j = current(&phi);
        let j2 = current(&(b.spinor_matrix() * phi));
        for mu in 0..2 {
            assert!((j2[mu] - (lam[(mu, 0)] * j[0] + lam[(mu, 1)] * j[1])).abs() < 1e-14);
        }
    }

    /// Brute-force `φ† γ0 (γ0 n_0 + γ1 n_1) φ` with explicit matrices.
    fn density_bruteforce(phi: [C64; 2], slope: f64) -> f64 {
        let n = unit_normal_lower(slope);
        let g0 = SpinorConventions::gamma0();
        let g1 = SpinorConventions::gamma1();
        let m = g0 * (g0 * c(n[0], 0.0) + g1 * c(n[1], 0.0));
        let v = nalgebra::Vector2::new(phi[0], phi[1]);
        (v.adjoint() * m * v)[(0, 0)].re
    }

    #[test]
    fn born_density_examples() {
        let amp = [c(0.3, 0.4), c(-0.2, 0.1)];
        assert!((born_density(&amp, &[0.0]) - (0.25 + 0.05)).abs() < 1e-15);
        assert_eq!(born_density(&[ZERO; 4], &[0.3, -0.2]), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [c(h, 0.0), c(h, 0.0)];
        let brute = density_bruteforce(phi, 0.5);
        assert!((born_density(&phi, &[0.5]) - brute).abs() < 1e-15);
        assert!((brute - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        // n^μ for slope 1/2 is (2, 1)/sqrt(3)
        let n = unit_normal_lower(0.5);
        assert!((n[0] - 2.0 / 3f64.sqrt()).abs() < 1e-15 && (n[1] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn surface_geometry() {
        assert!(Hypersurface::new(vec![[0.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(Hypersurface::new(vec![[0.0, 0.0], [1.0, 0.999]]).is_ok());
        let s = Hypersurface::new(vec![[-1.0, 0.0], [1.0, 1.0], [2.0, 0.5]]).unwrap();
        assert_eq!(s.time_at(-5.0), 0.0);
        assert_eq!(s.time_at(0.0), 0.5);
        assert_eq!(s.time_at(1.5), 0.75);
        assert_eq!(s.time_at(9.0), 0.5);
        assert_eq!(s.slope_at(0.0), 0.5);
        assert_eq!(s.slope_at(1.5), -0.5);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[-1.0,0.0],[1.0,1.0],[2.0,0.5]]");
        let back: Hypersurface = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Hypersurface>("[[0,0],[1,2]]").is_err());
        assert!(born_density_on(&s, &[p(3.0, 0.0)], &[ONE, ZERO]).is_err());
    }

    #[test]
    fn sampled_norm_scales_quadratically() {
        let surf = Hypersurface::flat(0.0);
        let dz = 0.01;
        let values: Vec<[C64; 2]> = (0..2001)
            .map(|i| {
                let z = -10.0 + i as f64 * dz;
                let g = (-z * z / 2.0).exp() / std::f64::consts::PI.powf(0.25);
                [c(g, 0.0), ZERO]
            })
            .collect();
        let phi = SampledRestriction1 { z0: -10.0, dz, values };
        let n1 = hypersurface_norm_sampled1(&phi, &surf);
        assert!((n1 - 1.0).abs() < 1e-10);
        let doubled = SampledRestriction1 { values: phi.values.iter().map(|v| [v[0] * 2.0, v[1] * 2.0]).collect(), ..phi };
        assert!((hypersurface_norm_sampled1(&doubled, &surf) - 4.0 * n1).abs() < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = SpacetimePoint> {
        (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(t, z)| p(t, z))
    }

    proptest! {
        #[test]
        fn classification_is_permutation_and_boost_invariant(
            pts in prop::collection::vec(arb_point(), 2..5), beta in -2.0..2.0f64
        ) {
            let class = classify(&pts);
            let mut rev = pts.clone();
            rev.reverse();
            prop_assert_eq!(classify(&rev), class);
            let b = Boost::new(beta);
            let boosted: Vec<_> = pts.iter().map(|q| b.apply(*q)).collect();
            // boosts preserve intervals up to rounding; skip near-lightlike draws
            let near_null = pts.iter().enumerate().any(|(i, a)| pts[i+1..].iter().any(|b| a.interval(b).abs() < 1e-9));
            if !near_null {
                prop_assert_eq!(classify(&boosted), class);
            }
        }

        #[test]
        fn density_nonnegative(re in prop::collection::vec(-1.0..1.0f64, 8), s1 in -0.999..0.999f64, s2 in -0.999..0.999f64) {
            let amp: Vec<C64> = (0..4).map(|k| c(re[2*k], re[2*k+1])).collect();
            prop_assert!(born_density(&amp, &[s1, s2]) >= 0.0);
        }

        #[test]
        fn boosts_compose(b1 in -2.0..2.0f64, b2 in -2.0..2.0f64) {
            let m = Boost::new(b1).point_matrix() * Boost::new(b2).point_matrix();
            prop_assert!((m - Boost::new(b1 + b2).point_matrix()).norm() < 1e-12 * m.norm());
            let s = Boost::new(b1).spinor_matrix() * Boost::new(b2).spinor_matrix();
            prop_assert!((s - Boost::new(b1 + b2).spinor_matrix()).norm() < 1e-12 * s.norm());
        }

        #[test]
        fn flat_density_is_plain_norm(re in prop::collection::vec(-1.0..1.0f64, 4)) {
            let amp = [c(re[0], re[1]), c(re[2], re[3])];
            let plain = amp[0].norm_sqr() + amp[1].norm_sqr();
            prop_assert!((born_density(&amp, &[0.0]) - plain).abs() < 1e-15);
        }
    }
}
