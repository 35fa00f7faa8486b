use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::linalg::{chebyshev_expmv, C64, I, ZERO};

use super::heisenberg::{configuration_spacelike, FockFunction, LatticePoint};

/// Argument whose time is varied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    X(usize),
    Y(usize),
}

/// Where the annihilation (Green's function) term is attributed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    /// Green's term in the x-equations, y-equations free.
    GreenInX,
    /// Green's term in the y-equations.
    GreenInY,
}

fn replace(points: &[LatticePoint], k: usize, p: LatticePoint) -> Vec<LatticePoint> {
    let mut v = points.to_vec();
    v[k] = p;
    v
}

fn without(points: &[LatticePoint], k: usize) -> Vec<LatticePoint> {
    let mut v = points.to_vec();
    v.remove(k);
    v
}

/// `Σ_μ' h[μ, μ'] φ(slot → μ')` for the free one-particle term of `slot`.
fn free_term(phi: &FockFunction, xs: &[LatticePoint], ys: &[LatticePoint], slot: Slot) -> Result<C64> {
    let model = phi.model;
    let (h, p) = match slot {
        Slot::X(j) => (&model.hamiltonian.h_x, xs[j]),
        Slot::Y(k) => (&model.hamiltonian.h_y, ys[k]),
    };
    let row = p.mode();
    let mut acc = ZERO;
    for col in 0..h.ncols() {
        let hv = h[(row, col)];
        if hv == ZERO {
            continue;
        }
        let q = p.with_mode(col);
        let v = match slot {
            Slot::X(j) => phi.eval(&replace(xs, j, q), ys)?,
            Slot::Y(k) => phi.eval(xs, &replace(ys, k, q))?,
        };
        acc += hv * v;
    }
    Ok(acc)
}

/// `sqrt(N+1) Σ a φ_cut g*_s φ^{(M,N+1)}(X, (Y, x_j))`, with the new
/// y-point appended last at the time of `x_j` and smeared like the
/// interaction. Zero when the sector `N+1` is truncated away.
pub fn creation_term(phi: &FockFunction, xs: &[LatticePoint], ys: &[LatticePoint], j: usize) -> Result<C64> {
    let model = phi.model;
    let n = ys.len();
    if n + 1 > model.space.n_max {
        return Ok(ZERO);
    }
    let lat = model.lattice();
    let x = xs[j];
    let mut acc = ZERO;
    for &(d, w) in &model.cutoff.kernel {
        let Some(site) = lat.shift(x.site, d) else { continue };
        for s in 0..2 {
            let g = model.coupling.g[s].conj();
            if g == ZERO {
                continue;
            }
            let mut y2 = ys.to_vec();
            y2.push(LatticePoint::new(x.t, site, s));
            acc += g * (lat.spacing * w) * phi.eval(xs, &y2)?;
        }
    }
    Ok(acc * ((n + 1) as f64).sqrt())
}

/// `(1/sqrt N) G_{s_k}(y_k - x_j) φ^{(M,N-1)}(X, Y \ y_k)`.
pub fn green_term(phi: &FockFunction, xs: &[LatticePoint], ys: &[LatticePoint], j: usize, k: usize) -> Result<C64> {
    let g = phi.model.green.value(&ys[k], &xs[j]);
    if g == ZERO {
        return Ok(ZERO);
    }
    Ok(g * phi.eval(xs, &without(ys, k))? / (ys.len() as f64).sqrt())
}

/// Right-hand side `H_slot φ` of the multi-time equation for `slot`.
pub fn apply_partial_hamiltonian(
    phi: &FockFunction,
    xs: &[LatticePoint],
    ys: &[LatticePoint],
    slot: Slot,
    splitting: Splitting,
) -> Result<C64> {
    let mut acc = free_term(phi, xs, ys, slot)?;
    match (slot, splitting) {
        (Slot::X(j), Splitting::GreenInX) => {
            acc += creation_term(phi, xs, ys, j)?;
            for k in 0..ys.len() {
                acc += green_term(phi, xs, ys, j, k)?;
            }
        }
        (Slot::X(j), Splitting::GreenInY) => acc += creation_term(phi, xs, ys, j)?,
        (Slot::Y(_), Splitting::GreenInX) => {}
        (Slot::Y(k), Splitting::GreenInY) => {
            for j in 0..xs.len() {
                acc += green_term(phi, xs, ys, j, k)?;
            }
        }
    }
    Ok(acc)
}

fn shift_time(xs: &[LatticePoint], ys: &[LatticePoint], slot: Slot, dt: f64) -> (Vec<LatticePoint>, Vec<LatticePoint>) {
    match slot {
        Slot::X(j) => (replace(xs, j, xs[j].at_time(xs[j].t + dt)), ys.to_vec()),
        Slot::Y(k) => (xs.to_vec(), replace(ys, k, ys[k].at_time(ys[k].t + dt))),
    }
}

fn check_neighborhood(phi: &FockFunction, xs: &[LatticePoint], ys: &[LatticePoint], slot: Slot, dt: f64) -> Result<()> {
    let lat = phi.model.lattice();
    for s in [-dt, dt] {
        let (a, b) = shift_time(xs, ys, slot, s);
        let all: Vec<LatticePoint> = a.into_iter().chain(b).collect();
        if !configuration_spacelike(lat, &all) {
            return domain("central-difference neighborhood leaves the spacelike configurations");
        }
    }
    let radius = phi.model.cutoff.radius;
    for x in xs {
        for y in ys {
            if lat.distance(x.site, y.site) <= radius + 1e-12 {
                return domain("x-y separation inside the cutoff radius");
            }
        }
    }
    Ok(())
}

/// `|i ∂φ/∂t_slot - H_slot φ|` with a central difference of step `dt`,
/// using the Green's term in the x-equations.
pub fn multitime_equation_residual(
    phi: &FockFunction,
    xs: &[LatticePoint],
    ys: &[LatticePoint],
    slot: Slot,
    dt: f64,
) -> Result<f64> {
    check_neighborhood(phi, xs, ys, slot, dt)?;
    let (xp, yp) = shift_time(xs, ys, slot, dt);
    let (xm, ym) = shift_time(xs, ys, slot, -dt);
    let lhs = I * (phi.eval(&xp, &yp)? - phi.eval(&xm, &ym)?) / (2.0 * dt);
    let rhs = apply_partial_hamiltonian(phi, xs, ys, slot, Splitting::GreenInX)?;
    Ok((lhs - rhs).norm())
}

/// Difference between the two attributions of the Green's term, summed
/// over all x- and y-equations at the configuration.
pub fn splitting_equivalence_residual(phi: &FockFunction, xs: &[LatticePoint], ys: &[LatticePoint]) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..xs.len() {
        let a = apply_partial_hamiltonian(phi, xs, ys, Slot::X(j), Splitting::GreenInX)?;
        let b = apply_partial_hamiltonian(phi, xs, ys, Slot::X(j), Splitting::GreenInY)?;
        total += (a - b).norm();
    }
    for k in 0..ys.len() {
        let a = apply_partial_hamiltonian(phi, xs, ys, Slot::Y(k), Splitting::GreenInX)?;
        let b = apply_partial_hamiltonian(phi, xs, ys, Slot::Y(k), Splitting::GreenInY)?;
        total += (a - b).norm();
    }
    Ok(total)
}

fn tuples(modes: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|t| (0..modes).map(move |m| [t.clone(), vec![m]].concat())).collect();
    }
    out
}

/// Max over all sectors and mode configurations of
/// `|φ(all times t) - (e^{-iHt}Ψ)(positions)|`. The Schrödinger side is
/// propagated with a Chebyshev expansion and read from the coefficients.
pub fn equal_time_reduction_check(phi: &FockFunction, t: f64, exec: Exec) -> Result<f64> {
    let model = phi.model;
    let h = &model.hamiltonian;
    let state = chebyshev_expmv(&h.matrix, h.norm_bound, t, &phi.psi);
    let modes = model.lattice().modes();
    let mut jobs = Vec::new();
    for &m in &model.space.x_counts {
        for n in 0..=model.space.n_max {
            if m + n == 0 {
                continue;
            }
            for rest in tuples(modes, m + n - 1) {
                jobs.push((m, n, rest));
            }
        }
    }
    let devs = exec.map(&jobs, |(m, _, rest)| -> Result<f64> {
        let m = *m;
        let mut all = vec![0usize];
        all.extend(rest);
        let pts = |mode_list: &[usize]| mode_list.iter().map(|&q| LatticePoint::new(t, q / 2, q % 2)).collect::<Vec<_>>();
        let xs = pts(&all[..m]);
        let ys = pts(&all[m..]);
        let first = phi.eval_first_slot(&xs, &ys)?;
        let mut worst = 0.0f64;
        for (q, v) in first.iter().enumerate() {
            let mut modes_all = all.clone();
            modes_all[0] = q;
            let expect = model.position_amplitude(&state, &modes_all[..m], &modes_all[m..]);
            worst = worst.max((v - expect).norm());
        }
        Ok(worst)
    });
    let (zero_sector, m0) = (model.space.x_counts.contains(&0), model.space.vacuum_index());
    let mut worst = 0.0f64;
    if zero_sector {
        let v = phi.eval(&[], &[])?;
        worst = worst.max((v - state[m0.unwrap()]).norm());
    }
    for d in devs {
        worst = worst.max(d?);
    }
    Ok(worst)
}

/// Weight of `e^{-iHt}Ψ` in the top retained y-sector, a bound on what the
/// truncation drops.
pub fn truncation_leak(phi: &FockFunction, t: f64) -> f64 {
    phi.model.space.top_sector_weight(&phi.evolved(t))
}
