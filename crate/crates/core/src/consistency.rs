//! Commutators `[i∂_{t_j} - H_j, i∂_{t_k} - H_k]` of two-particle Dirac
//! operators in 1+1 dimensions, evaluated on smooth probes by nested
//! five-point differences.
//!
//! Spinor components are indexed `2 s_1 + s_2`.

use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::{richardson3, C64, I};
use crate::spacetime::SpacetimePoint;

pub use crate::qft::qft_commutator_check;

pub type Config2 = [SpacetimePoint; 2];
pub type Spinor4 = Vector4<C64>;
pub type PotentialFn = Arc<dyn Fn(&Config2) -> Matrix4<C64> + Send + Sync>;

/// `H_j = -i σ3 ∂_{z_j} + m_j σ1` on particle `j`'s spinor slot, plus a
/// matrix potential `V_j(x_1, x_2)`.
#[derive(Clone)]
pub struct MultiTimeOperatorSpec {
    pub particle: usize,
    pub mass: f64,
    pub potential: Option<PotentialFn>,
}

impl MultiTimeOperatorSpec {
    pub fn free(particle: usize, mass: f64) -> Self {
        MultiTimeOperatorSpec { particle, mass, potential: None }
    }

    /// Potential `v(x_1, x_2)` times the identity.
    pub fn with_scalar(particle: usize, mass: f64, v: impl Fn(&Config2) -> f64 + Send + Sync + 'static) -> Self {
        let potential: PotentialFn = Arc::new(move |x| Matrix4::identity() * C64::new(v(x), 0.0));
        MultiTimeOperatorSpec { particle, mass, potential: Some(potential) }
    }

    /// `(1 + |z_1 - z_2|^2)^{-1/2}`, the same for both particles.
    pub fn smoothed_coulomb(particle: usize, mass: f64) -> Self {
        Self::with_scalar(particle, mass, |x| (1.0 + (x[0].z - x[1].z).powi(2)).powf(-0.5))
    }

    /// Gaussian pair potential `λ exp(-|z_1 - z_2|^2)`.
    pub fn gaussian_pair(particle: usize, mass: f64, strength: f64) -> Self {
        Self::with_scalar(particle, mass, move |x| strength * (-(x[0].z - x[1].z).powi(2)).exp())
    }

    fn sigma3(&self, v: &Spinor4) -> Spinor4 {
        let mut out = *v;
        for c in 0..4 {
            let s = if self.particle == 0 { c >> 1 } else { c & 1 };
            if s == 1 {
                out[c] = -out[c];
            }
        }
        out
    }

    fn sigma1(&self, v: &Spinor4) -> Spinor4 {
        let flip = if self.particle == 0 { 2 } else { 1 };
        Spinor4::from_fn(|c, _| v[c ^ flip])
    }
}

/// Smooth two-time probe `Gaussian × polynomial × plane wave × spinor`,
/// evaluated at base configurations.
#[derive(Clone, Debug)]
pub struct TestFunctionBundle {
    pub base_points: Vec<Config2>,
    pub centers: [f64; 2],
    pub width: f64,
    pub momenta: [f64; 2],
    pub frequencies: [f64; 2],
    pub spinor: [C64; 4],
}

impl TestFunctionBundle {
    pub fn standard(base_points: Vec<Config2>) -> Self {
        TestFunctionBundle {
            base_points,
            centers: [-0.4, 0.7],
            width: 1.3,
            momenta: [0.8, -0.5],
            frequencies: [1.1, 0.6],
            spinor: [C64::new(0.7, 0.0), C64::new(0.2, 0.3), C64::new(-0.1, 0.4), C64::new(0.35, -0.2)],
        }
    }

    pub fn eval(&self, x: &Config2) -> Spinor4 {
        let w2 = 2.0 * self.width * self.width;
        let env = (-(x[0].z - self.centers[0]).powi(2) / w2 - (x[1].z - self.centers[1]).powi(2) / w2).exp();
        let poly = 1.0 + 0.3 * x[0].t - 0.2 * x[1].t + 0.1 * x[0].z * x[1].z;
        let phase = self.momenta[0] * x[0].z + self.momenta[1] * x[1].z
            - self.frequencies[0] * x[0].t
            - self.frequencies[1] * x[1].t;
        let s = C64::from_polar(env * poly, phase);
        Spinor4::from_fn(|c, _| self.spinor[c] * s)
    }
}

const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn shifted(x: &Config2, particle: usize, dt: f64, dz: f64) -> Config2 {
    let mut y = *x;
    y[particle] = SpacetimePoint::new(y[particle].t + dt, y[particle].z + dz);
    y
}

type Field<'a> = dyn Fn(&Config2) -> Result<Spinor4> + 'a;

/// `(i∂_{t_j} - H_j) f` at `x`.
fn apply(op: &MultiTimeOperatorSpec, f: &Field, x: &Config2, h: f64) -> Result<Spinor4> {
    let j = op.particle;
    let mut dt = Spinor4::zeros();
    let mut dz = Spinor4::zeros();
    for (k, c) in STENCIL {
        dt += f(&shifted(x, j, k * h, 0.0))? * C64::new(c, 0.0);
        dz += f(&shifted(x, j, 0.0, k * h))? * C64::new(c, 0.0);
    }
    let scale = C64::new(1.0 / (12.0 * h), 0.0);
    let (dt, dz) = (dt * scale, dz * scale);
    let here = f(x)?;
    let mut out = dt * I + op.sigma3(&dz) * I - op.sigma1(&here) * C64::new(op.mass, 0.0);
    if let Some(v) = &op.potential {
        let m = v(x);
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return domain("potential is not finite on the stencil");
        }
        out -= m * here;
    }
    Ok(out)
}

/// Max over the probe's base points of `|[i∂_j - H_j, i∂_k - H_k] φ|`,
/// divided by the max of `|φ|` there.
pub fn commutator_residual(
    hj: &MultiTimeOperatorSpec,
    hk: &MultiTimeOperatorSpec,
    probe: &TestFunctionBundle,
    h: f64,
) -> Result<f64> {
    if hj.particle == hk.particle {
        return domain("commutator needs two different particles");
    }
    let f = |x: &Config2| -> Result<Spinor4> { Ok(probe.eval(x)) };
    let fk = |x: &Config2| apply(hk, &f, x, h);
    let fj = |x: &Config2| apply(hj, &f, x, h);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for x in &probe.base_points {
        let r = apply(hj, &fk, x, h)? - apply(hk, &fj, x, h)?;
        worst = worst.max(r.norm());
        scale = scale.max(probe.eval(x).norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Residuals at `h, h/2, h/4` and their Richardson limit.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub steps: [f64; 3],
    pub residuals: [f64; 3],
    pub limit: f64,
}

pub fn commutator_convergence(
    hj: &MultiTimeOperatorSpec,
    hk: &MultiTimeOperatorSpec,
    probe: &TestFunctionBundle,
    h: f64,
) -> Result<ConvergenceReport> {
    let steps = [h, h / 2.0, h / 4.0];
    let mut residuals = [0.0; 3];
    for (r, s) in residuals.iter_mut().zip(steps) {
        *r = commutator_residual(hj, hk, probe, s)?;
    }
    let limit = richardson3(residuals[0], residuals[1], residuals[2]);
    Ok(ConvergenceReport { steps, residuals, limit })
}

/// Analytic commutator for scalar potentials `v_j`, for cross-checking:
/// `-i(∂_{t_1} + σ3^{(1)} ∂_{z_1}) V_2 + i(∂_{t_2} + σ3^{(2)} ∂_{z_2}) V_1`
/// applied to `φ`, given the potential derivatives.
pub fn scalar_commutator_exact(
    dv2_dt1: f64,
    dv2_dz1: f64,
    dv1_dt2: f64,
    dv1_dz2: f64,
    phi: &Spinor4,
) -> Spinor4 {
    let p1 = MultiTimeOperatorSpec::free(0, 0.0);
    let p2 = MultiTimeOperatorSpec::free(1, 0.0);
    let a = (*phi * C64::new(dv2_dt1, 0.0) + p1.sigma3(phi) * C64::new(dv2_dz1, 0.0)) * (-I);
    let b = (*phi * C64::new(dv1_dt2, 0.0) + p2.sigma3(phi) * C64::new(dv1_dz2, 0.0)) * I;
    a + b
}

/// Spacelike base configurations used by the regression fixtures.
pub fn standard_base_points() -> Vec<Config2> {
    vec![
        [SpacetimePoint::new(0.0, -0.5), SpacetimePoint::new(0.0, 0.5)],
        [SpacetimePoint::new(0.2, -1.0), SpacetimePoint::new(-0.1, 0.8)],
        [SpacetimePoint::new(0.1, 0.3), SpacetimePoint::new(0.4, 1.6)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe() -> TestFunctionBundle {
        TestFunctionBundle::standard(standard_base_points())
    }

    #[test]
    fn free_operators_commute() {
        let r = commutator_residual(
            &MultiTimeOperatorSpec::free(0, 0.5),
            &MultiTimeOperatorSpec::free(1, 1.0),
            &probe(),
            1e-3,
        )
        .unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn single_particle_potentials_commute() {
        let a = MultiTimeOperatorSpec::with_scalar(0, 0.5, |x| (x[0].z).cos() * (1.0 + 0.1 * x[0].t));
        let b = MultiTimeOperatorSpec::with_scalar(1, 0.2, |x| 1.0 / (1.0 + x[1].z * x[1].z));
        let r = commutator_residual(&a, &b, &probe(), 1e-3).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn residual_is_antisymmetric_in_the_pair() {
        let a = MultiTimeOperatorSpec::smoothed_coulomb(0, 0.3);
        let b = MultiTimeOperatorSpec::smoothed_coulomb(1, 0.3);
        let p = probe();
        let f = |x: &Config2| -> Result<Spinor4> { Ok(p.eval(x)) };
        let x = &p.base_points[1];
        let ab = apply(&a, &|y: &Config2| apply(&b, &f, y, 1e-2), x, 1e-2).unwrap()
            - apply(&b, &|y: &Config2| apply(&a, &f, y, 1e-2), x, 1e-2).unwrap();
        let ba = apply(&b, &|y: &Config2| apply(&a, &f, y, 1e-2), x, 1e-2).unwrap()
            - apply(&a, &|y: &Config2| apply(&b, &f, y, 1e-2), x, 1e-2).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn pair_potential_matches_analytic_commutator() {
        let a = MultiTimeOperatorSpec::smoothed_coulomb(0, 0.3);
        let b = MultiTimeOperatorSpec::smoothed_coulomb(1, 0.7);
        let p = TestFunctionBundle::standard(vec![standard_base_points()[1]]);
        let x = p.base_points[0];
        let dz = x[0].z - x[1].z;
        let dv = -dz * (1.0 + dz * dz).powf(-1.5);
        let phi = p.eval(&x);
        let exact = scalar_commutator_exact(0.0, dv, 0.0, -dv, &phi);
        let rep = commutator_convergence(&a, &b, &p, 2e-2).unwrap();
        let expect = exact.norm() / phi.norm();
        assert!((rep.limit - expect).abs() < 1e-6 * expect, "{rep:?} {expect}");
        assert!(rep.limit > 1e-3);
    }

    #[test]
    fn non_finite_potential_is_a_domain_error() {
        let a = MultiTimeOperatorSpec::with_scalar(0, 0.0, |x| 1.0 / (x[0].z - x[1].z));
        let b = MultiTimeOperatorSpec::free(1, 0.0);
        let p = TestFunctionBundle::standard(vec![[SpacetimePoint::new(0.0, 0.0), SpacetimePoint::new(0.0, 0.0)]]);
        assert!(commutator_residual(&a, &b, &p, 1e-2).is_err());
    }
}
