//! Hypersurface evolution on the lattice: restriction of multi-time Fock
//! functions to discrete surfaces, the interaction-picture map, and
//! Tomonaga–Schwinger stepping by single-site deformations.
//!
//! The reference surface `Σ0` is the flat surface `t = 0`, on which the
//! interaction-picture vector is the Heisenberg state `Ψ`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{config, domain, Result};
use crate::exec::Exec;
use crate::fock::{build_hamiltonian, site_interaction, CouplingSpec, FreePropagator, Hamiltonian, LatticeSpec};
use crate::linalg::{expmv, linear_fit, norm, Csr, C64, I, ZERO};
use crate::qft::{FockFunction, LatticePoint, QftModel};

/// Time `τ_i` per lattice site.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteHypersurface {
    pub times: Vec<f64>,
}

impl DiscreteHypersurface {
    /// Checks `|τ_{i+1} - τ_i| < a` (including the wrap on a ring).
    pub fn new(lattice: &LatticeSpec, times: Vec<f64>) -> Result<Self> {
        if times.len() != lattice.sites {
            return config(format!("surface has {} times for {} sites", times.len(), lattice.sites));
        }
        let s = DiscreteHypersurface { times };
        if !s.is_spacelike(lattice) {
            return domain("surface violates the lattice spacelike condition");
        }
        Ok(s)
    }

    pub fn flat(lattice: &LatticeSpec, t: f64) -> Self {
        DiscreteHypersurface { times: vec![t; lattice.sites] }
    }

    /// Surface rising with slope `slope` from `base` at site 0 to the middle
    /// of the ring and falling back.
    pub fn tent(lattice: &LatticeSpec, base: f64, slope: f64) -> Result<Self> {
        let l = lattice.sites as f64;
        let times = (0..lattice.sites)
            .map(|i| {
                let i = i as f64;
                base + slope * lattice.spacing * (l / 2.0 - (i - l / 2.0).abs())
            })
            .collect();
        Self::new(lattice, times)
    }

    pub fn is_spacelike(&self, lattice: &LatticeSpec) -> bool {
        let l = self.times.len();
        let pairs = if lattice.periodic { l } else { l - 1 };
        (0..pairs).all(|i| (self.times[(i + 1) % l] - self.times[i]).abs() < lattice.spacing)
    }

    pub fn time(&self, site: usize) -> f64 {
        self.times[site]
    }

    /// Surface with site `site` advanced by `dt`.
    pub fn advanced(&self, lattice: &LatticeSpec, site: usize, dt: f64) -> Result<Self> {
        let mut times = self.times.clone();
        times[site] += dt;
        Self::new(lattice, times)
    }
}

/// Amplitudes of one sector `(M, N)`: index `q_1 … q_M r_1 … r_N` in
/// row-major order over `2L` modes per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorTensor {
    pub m: usize,
    pub n: usize,
    pub data: Vec<C64>,
}

/// `φ_Σ`: a surface with sector amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceState {
    pub surface: DiscreteHypersurface,
    pub sectors: BTreeMap<(usize, usize), SectorTensor>,
}

impl SurfaceState {
    /// `Σ_{M,N} a^{M+N} Σ |φ_Σ|^2` over ordered configurations.
    pub fn norm_sqr(&self, lattice: &LatticeSpec) -> f64 {
        self.sectors
            .values()
            .map(|s| lattice.spacing.powi((s.m + s.n) as i32) * s.data.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn max_abs_diff(&self, other: &SurfaceState) -> f64 {
        let mut worst = 0.0f64;
        for (k, s) in &self.sectors {
            if let Some(o) = other.sectors.get(k) {
                for (a, b) in s.data.iter().zip(&o.data) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
        worst
    }
}

fn decode(mut index: usize, modes: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for k in (0..len).rev() {
        out[k] = index % modes;
        index /= modes;
    }
    out
}

/// Applies `mat` to slot `slot` of a tensor with `slots` slots of size `modes`.
fn apply_to_slot(data: &[C64], modes: usize, slots: usize, slot: usize, mat: &DMatrix<C64>) -> Vec<C64> {
    let stride = modes.pow((slots - 1 - slot) as u32);
    let mut out = vec![ZERO; data.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let q = (idx / stride) % modes;
        let base = idx - q * stride;
        let mut acc = ZERO;
        for q2 in 0..modes {
            let m = mat[(q, q2)];
            if m != ZERO {
                acc += m * data[base + q2 * stride];
            }
        }
        *o = acc;
    }
    out
}

/// Per-slot free map `F^{(1)}_{Σ0→Σ}`: row `q` evolves for `τ(site q)`.
pub fn free_restriction_matrix(lattice: &LatticeSpec, mass: f64, surface: &DiscreteHypersurface) -> DMatrix<C64> {
    let prop = FreePropagator::new(lattice, mass);
    let modes = lattice.modes();
    let mut r = DMatrix::from_element(modes, modes, ZERO);
    let mut cache: Vec<(f64, DMatrix<C64>)> = Vec::new();
    for q in 0..modes {
        let t = surface.time(q / 2);
        let u = match cache.iter().find(|(s, _)| *s == t) {
            Some((_, u)) => u.clone(),
            None => {
                let u = prop.matrix(t);
                cache.push((t, u.clone()));
                u
            }
        };
        for q2 in 0..modes {
            r[(q, q2)] = u[(q, q2)];
        }
    }
    r
}

fn sectors_of(model: &QftModel) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for &m in &model.space.x_counts {
        for n in 0..=model.space.n_max {
            v.push((m, n));
        }
    }
    v
}

/// Position representation of a Fock vector on the flat surface `t = 0`.
pub fn fock_to_tensors(model: &QftModel, state: &[C64]) -> BTreeMap<(usize, usize), SectorTensor> {
    let modes = model.lattice().modes();
    sectors_of(model)
        .into_iter()
        .map(|(m, n)| {
            let len = modes.pow((m + n) as u32);
            let data = (0..len)
                .map(|idx| {
                    let q = decode(idx, modes, m + n);
                    model.position_amplitude(state, &q[..m], &q[m..])
                })
                .collect();
            ((m, n), SectorTensor { m, n, data })
        })
        .collect()
}

/// Inverse of [`fock_to_tensors`], reading each basis coefficient from its
/// canonically ordered configuration.
pub fn tensors_to_fock(model: &QftModel, sectors: &BTreeMap<(usize, usize), SectorTensor>) -> Vec<C64> {
    let modes = model.lattice().modes();
    let mut out = vec![ZERO; model.space.dim()];
    for (k, s) in model.space.states().iter().enumerate() {
        let (m, n) = (s.x_count(), s.y_count());
        let Some(t) = sectors.get(&(m, n)) else { continue };
        let xq: Vec<usize> = (0..modes).filter(|q| s.x & (1u64 << q) != 0).collect();
        let yq: Vec<usize> = (0..modes).flat_map(|q| std::iter::repeat_n(q, s.y[q] as usize)).collect();
        let idx = xq.iter().chain(&yq).fold(0usize, |acc, &q| acc * modes + q);
        let unit = model.position_amplitude(&unit_vector(model, k), &xq, &yq);
        out[k] = t.data[idx] / unit;
    }
    out
}

fn unit_vector(model: &QftModel, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; model.space.dim()];
    v[k] = C64::new(1.0, 0.0);
    v
}

fn map_slots(
    model: &QftModel,
    sectors: &BTreeMap<(usize, usize), SectorTensor>,
    fx: &DMatrix<C64>,
    fy: &DMatrix<C64>,
) -> BTreeMap<(usize, usize), SectorTensor> {
    let modes = model.lattice().modes();
    sectors
        .iter()
        .map(|(&key, s)| {
            let slots = s.m + s.n;
            let mut data = s.data.clone();
            for slot in 0..slots {
                let mat = if slot < s.m { fx } else { fy };
                data = apply_to_slot(&data, modes, slots, slot, mat);
            }
            (key, SectorTensor { m: s.m, n: s.n, data })
        })
        .collect()
}

/// `φ_Σ = F_{Σ0→Σ} ψ̃`.
pub fn from_interaction_picture(model: &QftModel, psi_tilde: &[C64], surface: &DiscreteHypersurface) -> SurfaceState {
    let lat = model.lattice();
    let fx = free_restriction_matrix(lat, model.coupling.mass_x, surface);
    let fy = free_restriction_matrix(lat, model.coupling.mass_y, surface);
    SurfaceState { surface: surface.clone(), sectors: map_slots(model, &fock_to_tensors(model, psi_tilde), &fx, &fy) }
}

/// `ψ̃_Σ = F_{Σ→Σ0} φ_Σ`, inverting the per-slot free restriction.
pub fn interaction_picture_map(model: &QftModel, state: &SurfaceState) -> Result<Vec<C64>> {
    let lat = model.lattice();
    let inv = |mass: f64| {
        free_restriction_matrix(lat, mass, &state.surface)
            .try_inverse()
            .ok_or_else(|| crate::Error::Domain("free restriction map is singular on this surface".into()))
    };
    let fx = inv(model.coupling.mass_x)?;
    let fy = inv(model.coupling.mass_y)?;
    Ok(tensors_to_fock(model, &map_slots(model, &state.sectors, &fx, &fy)))
}

/// Restriction of the Heisenberg-constructed `φ` to `Σ`: every argument's
/// time is taken from the surface at its site.
pub fn restrict(phi: &FockFunction, surface: &DiscreteHypersurface, exec: Exec) -> Result<SurfaceState> {
    let model = phi.model;
    let modes = model.lattice().modes();
    let mut sectors = BTreeMap::new();
    for (m, n) in sectors_of(model) {
        let data = if m + n == 0 {
            vec![phi.eval(&[], &[])?]
        } else {
            let rests: Vec<Vec<usize>> = (0..modes.pow((m + n - 1) as u32)).map(|i| decode(i, modes, m + n - 1)).collect();
            let rows = exec.map(&rests, |rest| restricted_first_slot(phi, surface, m, rest));
            let mut data = vec![ZERO; modes.pow((m + n) as u32)];
            let stride = modes.pow((m + n - 1) as u32);
            for (ri, row) in rows.into_iter().enumerate() {
                for (q, v) in row?.into_iter().enumerate() {
                    data[q * stride + ri] = v;
                }
            }
            data
        };
        sectors.insert((m, n), SectorTensor { m, n, data });
    }
    Ok(SurfaceState { surface: surface.clone(), sectors })
}

/// `φ_Σ` for all modes of the first argument, the others given by `rest`.
pub fn restricted_first_slot(
    phi: &FockFunction,
    surface: &DiscreteHypersurface,
    m: usize,
    rest: &[usize],
) -> Result<Vec<C64>> {
    let on = |mode: usize| LatticePoint::new(surface.time(mode / 2), mode / 2, mode % 2);
    let mut all = vec![0usize];
    all.extend_from_slice(rest);
    let xs: Vec<LatticePoint> = all[..m].iter().map(|&q| on(q)).collect();
    let ys: Vec<LatticePoint> = all[m..].iter().map(|&q| on(q)).collect();
    phi.model.phi_first_slot_timed(&|t| phi.evolved(t), &xs, &ys, &|site| surface.time(site))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `ψ̃' = ψ̃ - i a dt H_I(τ_i) ψ̃`.
    Euler,
    /// `ψ̃' = exp(-i a dt H_I(τ_i + dt/2)) ψ̃`.
    Midpoint,
}

/// Tomonaga–Schwinger stepping for a model.
pub struct TsEvolver<'a> {
    pub model: &'a QftModel,
    free: Hamiltonian,
    site_terms: Vec<Csr>,
}

impl<'a> TsEvolver<'a> {
    pub fn new(model: &'a QftModel) -> Self {
        let c = model.coupling;
        let free = build_hamiltonian(&model.space, &CouplingSpec::free(c.mass_x, c.mass_y), &model.cutoff);
        let site_terms =
            (0..model.lattice().sites).map(|i| site_interaction(&model.space, &c, &model.cutoff, i)).collect();
        TsEvolver { model, free, site_terms }
    }

    /// `a H_I(t, site) v = e^{iH_0 t} D_site e^{-iH_0 t} v`.
    pub fn apply_density(&self, site: usize, t: f64, v: &[C64]) -> Vec<C64> {
        let w = self.free.evolve(v, t);
        let w = self.site_terms[site].matvec(&w);
        self.free.evolve(&w, -t)
    }

    pub fn step(
        &self,
        psi: &[C64],
        surface: &DiscreteHypersurface,
        site: usize,
        dt: f64,
        scheme: Scheme,
    ) -> Result<(Vec<C64>, DiscreteHypersurface)> {
        let next = surface.advanced(self.model.lattice(), site, dt)?;
        let t = surface.time(site);
        let out = match scheme {
            Scheme::Euler => {
                let h = self.apply_density(site, t, psi);
                psi.iter().zip(&h).map(|(p, h)| p - I * dt * h).collect()
            }
            Scheme::Midpoint => {
                let tm = t + 0.5 * dt;
                let w = self.free.evolve(psi, tm);
                let w = expmv(&self.site_terms[site], dt, &w);
                self.free.evolve(&w, -tm)
            }
        };
        Ok((out, next))
    }

    /// Runs a path of `(site, dt)` deformations starting at `(ψ̃, Σ)`.
    pub fn run(
        &self,
        psi: &[C64],
        surface: &DiscreteHypersurface,
        path: &[(usize, f64)],
        scheme: Scheme,
    ) -> Result<(Vec<C64>, DiscreteHypersurface)> {
        let mut state = (psi.to_vec(), surface.clone());
        for &(site, dt) in path {
            state = self.step(&state.0, &state.1, site, dt, scheme)?;
        }
        Ok(state)
    }
}

/// Path from `from` to `to` in `rounds` sweeps over the sites, each
/// advancing every site by `1/rounds` of its total change.
pub fn uniform_path(from: &DiscreteHypersurface, to: &DiscreteHypersurface, rounds: usize) -> Vec<(usize, f64)> {
    let mut path = Vec::new();
    for _ in 0..rounds {
        for (i, (a, b)) in from.times.iter().zip(&to.times).enumerate() {
            if a != b {
                path.push((i, (b - a) / rounds as f64));
            }
        }
    }
    path
}

/// Configurations on which [`ts_vs_multitime`] compares amplitudes: for
/// each sector, lists of "rest" modes; the first argument runs over all
/// modes. `limit` caps the number of rest tuples per sector.
pub fn comparison_sample(model: &QftModel, limit: usize) -> Vec<(usize, usize, Vec<usize>)> {
    let modes = model.lattice().modes();
    let mut out = Vec::new();
    for (m, n) in sectors_of(model) {
        if m + n == 0 {
            out.push((0, 0, vec![]));
            continue;
        }
        let total = modes.pow((m + n - 1) as u32);
        let stride = (total / limit.max(1)).max(1);
        let mut i = 0;
        while i < total {
            out.push((m, n, decode(i, modes, m + n - 1)));
            i += stride;
        }
    }
    out
}

/// Heisenberg-side `φ_Σ` on a comparison sample, computed once per surface.
pub struct SurfaceReference {
    pub surface: DiscreteHypersurface,
    pub sample: Vec<(usize, usize, Vec<usize>)>,
    pub values: Vec<Vec<C64>>,
}

impl SurfaceReference {
    pub fn new(phi: &FockFunction, surface: &DiscreteHypersurface, limit: usize, exec: Exec) -> Result<Self> {
        let sample = comparison_sample(phi.model, limit);
        let values = exec.map(&sample, |(m, n, rest)| {
            if m + n == 0 {
                Ok(vec![phi.eval(&[], &[])?])
            } else {
                restricted_first_slot(phi, surface, *m, rest)
            }
        });
        let values = values.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(SurfaceReference { surface: surface.clone(), sample, values })
    }

    /// Max deviation of `F_{Σ0→Σ} ψ̃` from the reference.
    pub fn deviation(&self, model: &QftModel, psi_tilde: &[C64]) -> f64 {
        let state = from_interaction_picture(model, psi_tilde, &self.surface);
        let modes = model.lattice().modes();
        let mut worst = 0.0f64;
        for ((m, n, rest), vals) in self.sample.iter().zip(&self.values) {
            let t = &state.sectors[&(*m, *n)];
            if m + n == 0 {
                worst = worst.max((t.data[0] - vals[0]).norm());
                continue;
            }
            let ri = rest.iter().fold(0usize, |acc, &q| acc * modes + q);
            let stride = modes.pow((m + n - 1) as u32);
            for (q, v) in vals.iter().enumerate() {
                worst = worst.max((t.data[q * stride + ri] - v).norm());
            }
        }
        worst
    }
}

/// Evolves `Ψ` from the flat surface `t = 0` along `path` and returns the
/// max deviation of the mapped-back amplitudes from `reference`.
pub fn ts_vs_multitime(
    evolver: &TsEvolver,
    psi: &[C64],
    path: &[(usize, f64)],
    scheme: Scheme,
    reference: &SurfaceReference,
) -> Result<f64> {
    let start = DiscreteHypersurface::flat(evolver.model.lattice(), 0.0);
    let (psi_t, end) = evolver.run(psi, &start, path, scheme)?;
    if end.times.iter().zip(&reference.surface.times).any(|(a, b)| (a - b).abs() > 1e-9) {
        return domain("path does not end on the reference surface");
    }
    Ok(reference.deviation(evolver.model, &psi_t))
}

/// Exponential fit `A exp(-d / ξ)` of the free propagator's amplitude
/// outside the light cone, `max_{|t| <= ratio d} |U(t)_{i, i+d}|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailFit {
    pub amplitude: f64,
    pub xi: f64,
}

impl TailFit {
    pub fn floor(&self, distance: f64) -> f64 {
        self.amplitude * (-distance / self.xi).exp()
    }
}

pub fn free_tail_fit(lattice: &LatticeSpec, mass: f64, ratio: f64) -> TailFit {
    let prop = FreePropagator::new(lattice, mass);
    let mut ds = Vec::new();
    let mut logs = Vec::new();
    for d in 1..=lattice.sites / 2 {
        let dist = d as f64 * lattice.spacing;
        let mut worst = 0.0f64;
        for k in 0..=8 {
            let t = ratio * dist * k as f64 / 8.0;
            let u = prop.matrix(t);
            for a in 0..2 {
                for b in 0..2 {
                    worst = worst.max(u[(a, 2 * d + b)].norm());
                }
            }
        }
        ds.push(dist);
        logs.push(worst.max(1e-300).ln());
    }
    let (slope, intercept) = linear_fit(&ds, &logs);
    TailFit { amplitude: intercept.exp(), xi: -1.0 / slope }
}

/// `max_v |[H_I(x), H_I(y)] v|` over the given unit vectors, with
/// `H_I = D / a`.
pub fn density_commutator_norm(evolver: &TsEvolver, x: (f64, usize), y: (f64, usize), probes: &[Vec<C64>]) -> f64 {
    let a = evolver.model.lattice().spacing;
    let mut worst = 0.0f64;
    for v in probes {
        let xy = evolver.apply_density(x.1, x.0, &evolver.apply_density(y.1, y.0, v));
        let yx = evolver.apply_density(y.1, y.0, &evolver.apply_density(x.1, x.0, v));
        let d: Vec<C64> = xy.iter().zip(&yx).map(|(p, q)| (p - q) / (a * a)).collect();
        worst = worst.max(norm(&d));
    }
    worst
}

/// `U_{Σ'}^{Σ''} U_{Σ0}^{Σ'}` against `U_{Σ0}^{Σ''}`: max amplitude
/// difference on `target` between the path through `via` (two legs of
/// `rounds / 2` sweeps) and the direct path of `rounds` sweeps.
pub fn composition_defect(
    evolver: &TsEvolver,
    psi: &[C64],
    via: &DiscreteHypersurface,
    target: &DiscreteHypersurface,
    rounds: usize,
    scheme: Scheme,
) -> Result<f64> {
    let model = evolver.model;
    let start = DiscreteHypersurface::flat(model.lattice(), 0.0);
    let legs = (rounds / 2).max(1);
    let mut path = uniform_path(&start, via, legs);
    path.extend(uniform_path(via, target, legs));
    let (composed, _) = evolver.run(psi, &start, &path, scheme)?;
    let (direct, _) = evolver.run(psi, &start, &uniform_path(&start, target, rounds), scheme)?;
    let a = from_interaction_picture(model, &composed, target);
    let b = from_interaction_picture(model, &direct, target);
    Ok(a.max_abs_diff(&b))
}

/// One spacelike pair `x = (0, 0)`, `y = (ratio * d, d)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutatorSample {
    pub distance: f64,
    pub time_offset: f64,
    pub commutator: f64,
    pub floor: f64,
}

/// `‖[H_I(x), H_I(y)]‖` on `probes` for separations beyond the cutoff
/// radius and below half the ring, with the floor
/// `‖H_I(x)‖ ‖H_I(y)‖ A e^{-d/ξ}` from the slower-decaying free tail.
pub fn spacelike_commutator_scan(evolver: &TsEvolver, ratio: f64, probes: &[Vec<C64>]) -> Result<Vec<CommutatorSample>> {
    if !(0.0..1.0).contains(&ratio) {
        return domain("time offset ratio must lie in [0, 1) for lattice-spacelike pairs");
    }
    let model = evolver.model;
    let lat = model.lattice();
    let fits = [free_tail_fit(lat, model.coupling.mass_x, ratio), free_tail_fit(lat, model.coupling.mass_y, ratio)];
    let h = |site: usize| evolver.site_terms[site].norm_bound() / lat.spacing;
    let mut out = Vec::new();
    for d in 1..lat.sites.div_ceil(2) {
        let distance = lat.distance(0, d);
        if distance <= model.cutoff.radius + 1e-12 {
            continue;
        }
        let time_offset = ratio * distance;
        let commutator = density_commutator_norm(evolver, (0.0, 0), (time_offset, d), probes);
        let tail = fits.iter().map(|f| f.floor(distance)).fold(0.0, f64::max);
        out.push(CommutatorSample { distance, time_offset, commutator, floor: h(0) * h(d) * tail });
    }
    Ok(out)
}
