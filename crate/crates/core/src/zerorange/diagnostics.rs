use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::linalg::{C64, ZERO};
use crate::spacetime::{classify, hypersurface_norm2, Boost, ConfigClass, Hypersurface, SpacetimePoint};

use super::initial::{GridSamples, InitialData2P};
use super::oracle::lattice_oracle;
use super::solver::{Side, SliceGrid, ZeroRangeModel};

/// `j^{μν} = φ̄ γ^μ ⊗ γ^ν φ`, indexed `j[μ][ν]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorCurrent {
    pub j: [[f64; 2]; 2],
}

/// Velocity signs `(v1, v2)` of the four spin components.
const VELOCITIES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// With `γ0 γ0 = 1` and `γ0 γ1 = σ3` the current is diagonal in the spin
/// basis: `j^{μν} = Σ_c |φ_c|² v1^μ v2^ν`.
pub fn current_from_amplitude(phi: &[C64; 4]) -> TensorCurrent {
    let mut j = [[0.0; 2]; 2];
    for (v, (v1, v2)) in phi.iter().zip(VELOCITIES) {
        let p = v.norm_sqr();
        j[0][0] += p;
        j[0][1] += p * v2;
        j[1][0] += p * v1;
        j[1][1] += p * v1 * v2;
    }
    TensorCurrent { j }
}

pub fn tensor_current(model: &ZeroRangeModel, x1: SpacetimePoint, x2: SpacetimePoint) -> Result<TensorCurrent> {
    Ok(current_from_amplitude(&model.evaluate(x1, x2, None)?))
}

/// Finite-difference divergence of the tensor current in both slots,
/// `Σ_ν |∂_{t1} j^{0ν} + ∂_{z1} j^{1ν}| + Σ_μ |∂_{t2} j^{μ0} + ∂_{z2} j^{μ1}|`,
/// with central differences of step `h` in time and `h/2` in space.
///
/// Equal steps would cancel exactly for massless transport (each component
/// is a function of `z ∓ t`), leaving only rounding; the unequal stencil
/// keeps a genuine `O(h²)` truncation error.
pub fn current_conservation_residual(model: &ZeroRangeModel, x1: SpacetimePoint, x2: SpacetimePoint, h: f64) -> Result<f64> {
    current_conservation_residual_with(model, x1, x2, h, 0.5 * h)
}

pub fn current_conservation_residual_with(
    model: &ZeroRangeModel,
    x1: SpacetimePoint,
    x2: SpacetimePoint,
    ht: f64,
    hz: f64,
) -> Result<f64> {
    let reach = ht + hz;
    if classify(&[x1, x2]) != ConfigClass::Spacelike || (x1.z - x2.z).abs() - (x1.t - x2.t).abs() <= 2.0 * reach {
        return domain("stencil neighbourhood leaves the spacelike set");
    }
    let j = |a: SpacetimePoint, b: SpacetimePoint| tensor_current(model, a, b).map(|c| c.j);
    let shift = |p: SpacetimePoint, dt: f64, dz: f64| SpacetimePoint::new(p.t + dt, p.z + dz);
    let mut total = 0.0;
    // particle 1: ∂_{t1} j^{0ν} + ∂_{z1} j^{1ν}
    let (tp, tm) = (j(shift(x1, ht, 0.0), x2)?, j(shift(x1, -ht, 0.0), x2)?);
    let (zp, zm) = (j(shift(x1, 0.0, hz), x2)?, j(shift(x1, 0.0, -hz), x2)?);
    for nu in 0..2 {
        total += ((tp[0][nu] - tm[0][nu]) / (2.0 * ht) + (zp[1][nu] - zm[1][nu]) / (2.0 * hz)).abs();
    }
    let (tp, tm) = (j(x1, shift(x2, ht, 0.0))?, j(x1, shift(x2, -ht, 0.0))?);
    let (zp, zm) = (j(x1, shift(x2, 0.0, hz))?, j(x1, shift(x2, 0.0, -hz))?);
    for mu in 0..2 {
        total += ((tp[mu][0] - tm[mu][0]) / (2.0 * ht) + (zp[mu][1] - zm[mu][1]) / (2.0 * hz)).abs();
    }
    Ok(total)
}

/// Residuals `|i∂_{t_j} φ - (-i σ3^{(j)} ∂_{z_j}) φ|` for `j = 1, 2` by central
/// differences of step `h`.
pub fn free_equation_residual(model: &ZeroRangeModel, x1: SpacetimePoint, x2: SpacetimePoint, h: f64) -> Result<[f64; 2]> {
    if (x1.z - x2.z).abs() - (x1.t - x2.t).abs() <= 4.0 * h {
        return domain("stencil neighbourhood leaves the spacelike set");
    }
    let eval = |a: SpacetimePoint, b: SpacetimePoint| model.evaluate(a, b, None);
    let shift = |p: SpacetimePoint, dt: f64, dz: f64| SpacetimePoint::new(p.t + dt, p.z + dz);
    let mut out = [0.0f64; 2];
    for (slot, res) in out.iter_mut().enumerate() {
        let moved = |dt: f64, dz: f64| {
            if slot == 0 {
                eval(shift(x1, dt, dz), x2)
            } else {
                eval(x1, shift(x2, dt, dz))
            }
        };
        let (tp, tm, zp, zm) = (moved(h, 0.0)?, moved(-h, 0.0)?, moved(0.0, h)?, moved(0.0, -h)?);
        for c in 0..4 {
            let v = if slot == 0 { VELOCITIES[c].0 } else { VELOCITIES[c].1 };
            let dt = (tp[c] - tm[c]) / (2.0 * h);
            let dz = (zp[c] - zm[c]) / (2.0 * h);
            // i∂_t φ = -i v ∂_z φ  <=>  ∂_t φ + v ∂_z φ = 0
            *res = (*res).max((dt + dz * v).norm());
        }
    }
    Ok(out)
}

/// Purity `Tr ρ1²` of the one-particle reduced density matrix of a sampled
/// equal-time slice, with `ρ1` acting on spin ⊗ position of particle 1.
pub fn purity_of_slice(slice: &GridSamples) -> f64 {
    let n = slice.n;
    // rows: (s1, i), columns: (s2, j)
    let a = DMatrix::from_fn(2 * n, 2 * n, |r, col| {
        let (s1, i) = (r / n, r % n);
        let (s2, j) = (col / n, col % n);
        slice.at(i, j)[2 * s1 + s2]
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    if tr == 0.0 {
        return 1.0;
    }
    rho.iter().map(|v| v.norm_sqr()).sum::<f64>() / (tr * tr)
}

pub fn entanglement_purity(model: &ZeroRangeModel, t: f64, grid: &SliceGrid, exec: Exec) -> f64 {
    purity_of_slice(&model.equal_time_slice(t, grid, exec))
}

/// Norm of the solution restricted to `surface`, integrated over
/// `window × window`.
pub fn surface_norm(model: &ZeroRangeModel, surface: &Hypersurface, window: (f64, f64), exec: Exec) -> f64 {
    hypersurface_norm2(surface, window, exec, |p1, p2| {
        model.evaluate(p1, p2, None).expect("points on a spacelike surface are spacelike")
    })
}

/// Norm of the sampled equal-time slice (rectangle rule).
pub fn slice_norm(slice: &GridSamples) -> f64 {
    slice.norm_sqr()
}

/// Model with initial datum `S(β)⊗S(β) φ(Λ(β)⁻¹(0, z1), Λ(β)⁻¹(0, z2))`.
pub fn boosted_model(model: &ZeroRangeModel, beta: f64) -> ZeroRangeModel {
    let b = Boost::new(beta);
    let inv = b.inverse();
    let base = model.clone();
    let f = move |z1: f64, z2: f64| {
        let p1 = inv.apply(SpacetimePoint::new(0.0, z1));
        let p2 = inv.apply(SpacetimePoint::new(0.0, z2));
        let side = if z1 < z2 { Side::Below } else { Side::Above };
        let v = base.evaluate(p1, p2, Some(side)).expect("boosted equal-time configurations are spacelike");
        let s = b.apply_spinor(&v);
        [s[0], s[1], s[2], s[3]]
    };
    let support = model.initial.support();
    let widen = 2.0 * beta.abs().cosh() * support.0.abs().max(support.1.abs());
    ZeroRangeModel {
        theta: model.theta,
        initial: InitialData2P::Function { f: Arc::new(f), support: (-widen, widen) },
    }
}

/// Largest deviation `|φ′(x1, x2) - S⊗S φ(Λ⁻¹x1, Λ⁻¹x2)|` over `configs`,
/// where `φ′` solves the model with boosted initial data.
pub fn boost_covariance_check(model: &ZeroRangeModel, beta: f64, configs: &[(SpacetimePoint, SpacetimePoint)], exec: Exec) -> Result<f64> {
    let boosted = boosted_model(model, beta);
    let b = Boost::new(beta);
    let inv = b.inverse();
    let devs = exec.map(configs, |(x1, x2)| -> Result<f64> {
        let lhs = boosted.evaluate(*x1, *x2, None)?;
        let rhs = b.apply_spinor(&model.evaluate(inv.apply(*x1), inv.apply(*x2), None)?);
        Ok((0..4).map(|k| (lhs[k] - rhs[k]).norm()).fold(0.0, f64::max))
    });
    devs.into_iter().try_fold(0.0, |acc: f64, d| Ok(acc.max(d?)))
}

/// Random spacelike two-point configurations with times in `t_range` and
/// positions in `z_range`.
pub fn random_spacelike_configs(n: usize, seed: u64, t_range: (f64, f64), z_range: (f64, f64)) -> Vec<(SpacetimePoint, SpacetimePoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x1 = SpacetimePoint::new(rng.gen_range(t_range.0..t_range.1), rng.gen_range(z_range.0..z_range.1));
        let x2 = SpacetimePoint::new(rng.gen_range(t_range.0..t_range.1), rng.gen_range(z_range.0..z_range.1));
        if classify(&[x1, x2]) == ConfigClass::Spacelike {
            out.push((x1, x2));
        }
    }
    out
}

/// Largest violation of the collision boundary condition over `points`
/// `(t, z)`, relative to the size of the one-sided limits.
pub fn boundary_condition_defect(model: &ZeroRangeModel, points: &[(f64, f64)]) -> f64 {
    let mut worst = 0.0f64;
    for &(t, z) in points {
        let x = SpacetimePoint::new(t, z);
        let below = model.evaluate(x, x, Some(Side::Below)).expect("collision with side");
        let above = model.evaluate(x, x, Some(Side::Above)).expect("collision with side");
        let db = (below[1] - C64::from_polar(1.0, -model.theta) * below[2]).norm();
        let da = (above[1] - C64::from_polar(1.0, model.theta) * above[2]).norm();
        let scale = [below[1], below[2], above[1], above[2]].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            worst = worst.max(db.max(da) / scale);
        }
    }
    worst
}

/// Largest `|ψ_{s1 s2}(z1, z2) + ψ_{s2 s1}(z2, z1)|` over a sampled slice.
pub fn antisymmetry_defect(slice: &GridSamples) -> f64 {
    let swap = [0, 2, 1, 3];
    let mut worst = 0.0f64;
    for i in 0..slice.n {
        for j in 0..slice.n {
            let (a, b) = (slice.at(i, j), slice.at(j, i));
            for c in 0..4 {
                worst = worst.max((a[c] + b[swap[c]]).norm());
            }
        }
    }
    worst
}

/// Max-norm difference between the exact solver and the lattice oracle,
/// reading the oracle as piecewise constant on cells (value of the lower
/// left node) and probing at cell midpoints. Cells touching the diagonal
/// are skipped since the solution jumps across it.
pub fn oracle_difference(model: &ZeroRangeModel, grid: &SliceGrid, t_final: f64, exec: Exec) -> Result<f64> {
    let oracle = lattice_oracle(model, grid, t_final, exec)?;
    let n = grid.n;
    let half = 0.5 * grid.dz;
    let rows = exec.map_range(n - 1, |i| {
        let mut worst = 0.0f64;
        for j in 0..n - 1 {
            if i.abs_diff(j) <= 1 {
                continue;
            }
            let x1 = SpacetimePoint::new(t_final, grid.coord(i) + half);
            let x2 = SpacetimePoint::new(t_final, grid.coord(j) + half);
            let exact = model.evaluate(x1, x2, None).expect("equal-time off-diagonal points are spacelike");
            let node = oracle.at(i, j);
            for c in 0..4 {
                worst = worst.max((exact[c] - node[c]).norm());
            }
        }
        worst
    });
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Zero amplitude stand-in, handy for the trivial current checks.
pub fn zero_current() -> TensorCurrent {
    current_from_amplitude(&[ZERO; 4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, loglog_slope, ONE};
    use crate::zerorange::initial::{Packet, ProductTerm};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn head_on(theta: f64) -> ZeroRangeModel {
        let s = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
        ZeroRangeModel::new(theta, InitialData2P::head_on(6.0, 0.5, s, theta).unwrap()).unwrap()
    }

    fn pt(t: f64, z: f64) -> SpacetimePoint {
        SpacetimePoint::new(t, z)
    }

    #[test]
    fn current_of_zero_is_zero() {
        assert_eq!(zero_current().j, [[0.0; 2]; 2]);
        let j = current_from_amplitude(&[c(0.5, 0.0), c(0.0, 0.5), ZERO, c(0.5, 0.5)]);
        assert!((j.j[0][0] - 1.0).abs() < 1e-15);
        assert!((j.j[1][1] - (0.25 - 0.25 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn conservation_converges_at_second_order() {
        let m = head_on(0.8);
        let (x1, x2) = (pt(1.1, -2.2), pt(0.7, 1.9));
        let hs = [0.02, 0.01, 0.005];
        let r: Vec<f64> = hs.iter().map(|h| current_conservation_residual(&m, x1, x2, *h).unwrap()).collect();
        let slope = loglog_slope(&hs, &r);
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}, residuals {r:?}");
        // equal steps cancel to rounding for massless transport
        let same = current_conservation_residual_with(&m, x1, x2, 0.01, 0.01).unwrap();
        assert!(same < 1e-10, "{same}");
        assert!(current_conservation_residual(&m, pt(0.0, 0.0), pt(0.0, 0.01), 0.01).is_err());
    }

    #[test]
    fn free_equations_hold_away_from_collisions() {
        let m = head_on(1.0);
        let r = free_equation_residual(&m, pt(0.5, -2.0), pt(1.5, 1.0), 1e-3).unwrap();
        assert!(r[0] < 1e-9 && r[1] < 1e-9, "{r:?}");
    }

    #[test]
    fn boundary_condition_holds_on_collision_sweep() {
        let m = head_on(0.6);
        let pts: Vec<(f64, f64)> = (0..50).map(|k| (2.0 + 0.04 * k as f64, -0.5 + 0.02 * k as f64)).collect();
        assert!(boundary_condition_defect(&m, &pts) < 1e-12);
    }

    #[test]
    fn crossing_entangles_and_transport_does_not() {
        let m = head_on(FRAC_PI_2);
        let grid = SliceGrid::covering(-10.0, 10.0, 0.1);
        let p0 = entanglement_purity(&m, 0.0, &grid, Exec::Parallel);
        let p5 = entanglement_purity(&m, 5.0, &grid, Exec::Parallel);
        assert!((p0 - 1.0).abs() < 1e-10, "{p0}");
        assert!(p5 < 0.99, "{p5}");
        let right = [ONE, ZERO];
        let a = Packet::new(-3.0, 0.5, 0.0, right);
        let b = Packet::new(3.0, 0.5, 0.0, right);
        let data = InitialData2P::packets(vec![ProductTerm { weight: [1.0, 0.0], first: a, second: b }], FRAC_PI_2).unwrap();
        let free = ZeroRangeModel::new(FRAC_PI_2, data).unwrap();
        let pf = entanglement_purity(&free, 5.0, &grid, Exec::Parallel);
        assert!((pf - 1.0).abs() < 1e-10, "{pf}");
    }

    #[test]
    fn boost_covariance_is_exact() {
        let m = head_on(0.4);
        let configs = random_spacelike_configs(20, 7, (-1.0, 4.0), (-6.0, 6.0));
        assert_eq!(boost_covariance_check(&m, 0.0, &configs, Exec::Sequential).unwrap(), 0.0);
        let d = boost_covariance_check(&m, 0.3, &configs, Exec::Parallel).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn unitarity_on_tilted_surface() {
        let m = head_on(FRAC_PI_2);
        let tilted = Hypersurface::tilted(3.0, 0.5, -6.0, 6.0).unwrap();
        let n = surface_norm(&m, &tilted, (-12.0, 12.0), Exec::Parallel);
        assert!((n - 1.0).abs() < 1e-8, "{n}");
    }

    #[test]
    fn antisymmetric_data_stays_antisymmetric() {
        let theta = 1.1;
        let (sa, sb) = ([c(0.6, 0.0), c(0.0, 0.8)], [c(0.8, 0.0), c(0.6, 0.0)]);
        let a = Packet::new(-3.0, 0.5, 0.4, sa);
        let b = Packet::new(3.0, 0.5, -0.3, sb);
        let w = FRAC_1_SQRT_2;
        let terms = vec![
            ProductTerm { weight: [w, 0.0], first: a, second: b },
            ProductTerm { weight: [-w, 0.0], first: b, second: a },
        ];
        let m = ZeroRangeModel::new(theta, InitialData2P::packets(terms, theta).unwrap()).unwrap();
        let grid = SliceGrid::covering(-9.0, 9.0, 0.1);
        assert!(antisymmetry_defect(&m.equal_time_slice(0.0, &grid, Exec::Parallel)) < 1e-14);
        assert!(antisymmetry_defect(&m.equal_time_slice(4.0, &grid, Exec::Parallel)) < 1e-12);
    }
}
