//! Truncated Fock space of the emission–absorption model on a periodic (or
//! open) one-dimensional lattice.
//!
//! Fermionic x-modes and bosonic y-modes are indexed site-major, spin-minor:
//! `mode = 2 * site + spin`. Fermionic signs follow the Jordan–Wigner string
//! over lower x-modes. Position-space operators carry the lattice delta
//! normalization, `a(q) = c_q / sqrt(a)`, so that
//! `{a_r(q), a†_{r'}(q')} = δ_{rr'} δ_{qq'} / a`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{config, Error, Result};
use crate::linalg::{c, expmv_with_norm, Csr, HermitianEig, C64, I, ZERO};

pub const DEFAULT_DIM_BUDGET: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    pub sites: usize,
    pub spacing: f64,
    pub periodic: bool,
}

impl LatticeSpec {
    pub fn new(sites: usize, spacing: f64, periodic: bool) -> Result<Self> {
        if sites < 2 {
            return config("lattice needs at least two sites");
        }
        if sites > 32 {
            return config("lattice supports at most 32 sites");
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return config("lattice spacing must be positive");
        }
        Ok(LatticeSpec { sites, spacing, periodic })
    }

    pub fn modes(&self) -> usize {
        2 * self.sites
    }

    /// Signed offset `j - i`, wrapped into `(-L/2, L/2]` on a ring.
    pub fn offset(&self, i: usize, j: usize) -> isize {
        let l = self.sites as isize;
        let d = j as isize - i as isize;
        if !self.periodic {
            return d;
        }
        let mut w = d.rem_euclid(l);
        if w > l / 2 {
            w -= l;
        }
        w
    }

    /// Lattice distance in units of length.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).unsigned_abs() as f64 * self.spacing
    }

    /// Site `i + d`, or `None` past an open edge.
    pub fn shift(&self, i: usize, d: isize) -> Option<usize> {
        let l = self.sites as isize;
        let j = i as isize + d;
        if self.periodic {
            Some(j.rem_euclid(l) as usize)
        } else if (0..l).contains(&j) {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// Smearing kernel replacing the point interaction: `φ_cut(d)` for site
/// offsets `|d| a <= radius`, normalized by `Σ a φ_cut = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffProfile {
    pub radius: f64,
    /// `(offset, φ_cut(offset))` with nonzero values.
    pub kernel: Vec<(isize, f64)>,
}

impl CutoffProfile {
    /// Single-site kernel `δ / a`.
    pub fn delta(lattice: &LatticeSpec) -> Self {
        CutoffProfile { radius: 0.0, kernel: vec![(0, 1.0 / lattice.spacing)] }
    }

    /// Gaussian of standard deviation `radius / 2`, truncated at `radius`.
    pub fn gaussian(lattice: &LatticeSpec, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius < 0.0 {
            return config("cutoff radius must be nonnegative");
        }
        let a = lattice.spacing;
        let reach = (radius / a + 1e-9).floor() as isize;
        if 2 * reach + 1 > lattice.sites as isize {
            return config("cutoff radius wraps around the lattice");
        }
        let sigma = (0.5 * radius).max(1e-12);
        let raw: Vec<(isize, f64)> =
            (-reach..=reach).map(|d| (d, (-(d as f64 * a).powi(2) / (2.0 * sigma * sigma)).exp())).collect();
        let total: f64 = raw.iter().map(|(_, v)| v * a).sum();
        Ok(CutoffProfile { radius, kernel: raw.into_iter().map(|(d, v)| (d, v / total)).collect() })
    }

    pub fn value(&self, offset: isize) -> f64 {
        self.kernel.iter().find(|(d, _)| *d == offset).map_or(0.0, |(_, v)| *v)
    }

    /// Number of sites on either side covered by the kernel.
    pub fn reach(&self) -> usize {
        self.kernel.iter().map(|(d, _)| d.unsigned_abs()).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSpec {
    pub g: [C64; 2],
    pub mass_x: f64,
    pub mass_y: f64,
}

impl CouplingSpec {
    pub fn free(mass_x: f64, mass_y: f64) -> Self {
        CouplingSpec { g: [ZERO; 2], mass_x, mass_y }
    }
}

/// One-particle Wilson–Dirac Hamiltonian on `2L` modes,
/// `-i σ3 ∇_c + σ1 (m + (a/2) Δ)` with central difference `∇_c` and the
/// Wilson term removing the doubler at `k = π/a`. For `m = 0` the
/// dispersion is `ω(k) = 2 |sin(k a / 2)| / a` with group velocity at most 1.
pub fn dirac_hamiltonian(lattice: &LatticeSpec, mass: f64) -> DMatrix<C64> {
    let n = lattice.modes();
    let a = lattice.spacing;
    let mut h = DMatrix::from_element(n, n, ZERO);
    for i in 0..lattice.sites {
        // σ1 (m + 1/a) on site
        h[(2 * i, 2 * i + 1)] += c(mass + 1.0 / a, 0.0);
        h[(2 * i + 1, 2 * i)] += c(mass + 1.0 / a, 0.0);
        for (d, sign) in [(1isize, 1.0), (-1, -1.0)] {
            if let Some(j) = lattice.shift(i, d) {
                // -i σ3 (ψ_{i+1} - ψ_{i-1}) / (2a)
                h[(2 * i, 2 * j)] += -I * (sign / (2.0 * a));
                h[(2 * i + 1, 2 * j + 1)] += I * (sign / (2.0 * a));
                // Wilson hopping -σ1 / (2a)
                h[(2 * i, 2 * j + 1)] += c(-0.5 / a, 0.0);
                h[(2 * i + 1, 2 * j)] += c(-0.5 / a, 0.0);
            }
        }
    }
    h
}

/// Occupation-number basis state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    /// Bit `μ` set iff x-mode `μ` is occupied.
    pub x: u64,
    /// Occupation of each y-mode.
    pub y: Vec<u8>,
}

impl BasisState {
    pub fn x_count(&self) -> usize {
        self.x.count_ones() as usize
    }

    pub fn y_count(&self) -> usize {
        self.y.iter().map(|&n| n as usize).sum()
    }

    /// Jordan–Wigner sign `(-1)^{#occupied x-modes below μ}`.
    fn jw_sign(&self, mode: usize) -> f64 {
        if (self.x & ((1u64 << mode) - 1)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(usize::MAX as u128) as usize
}

/// Dimension of the truncated space with the given x-particle numbers and
/// at most `n_max` y-particles.
pub fn truncated_dimension(lattice: &LatticeSpec, x_counts: &[usize], n_max: usize) -> usize {
    let m = lattice.modes();
    let x: usize = x_counts.iter().map(|&k| binomial(m, k)).fold(0usize, |a, b| a.saturating_add(b));
    // bosonic states of total number <= n_max over m modes: C(m + n_max, n_max)
    x.saturating_mul(binomial(m + n_max, n_max))
}

/// Truncated Fock space: x-particle numbers from `x_counts`, total y-number
/// at most `n_max`.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub lattice: LatticeSpec,
    pub n_max: usize,
    pub x_counts: Vec<usize>,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl FockSpace {
    pub fn new(lattice: LatticeSpec, x_counts: &[usize], n_max: usize) -> Result<Self> {
        Self::with_budget(lattice, x_counts, n_max, DEFAULT_DIM_BUDGET)
    }

    pub fn with_budget(lattice: LatticeSpec, x_counts: &[usize], n_max: usize, budget: usize) -> Result<Self> {
        let dim = truncated_dimension(&lattice, x_counts, n_max);
        if dim > budget {
            return Err(Error::Budget { dim, limit: budget });
        }
        let m = lattice.modes();
        if x_counts.iter().any(|&k| k > m) {
            return config("more x-particles than modes");
        }
        let mut counts = x_counts.to_vec();
        counts.sort_unstable();
        counts.dedup();
        let mut x_patterns: Vec<u64> = (0..(1u64 << m)).filter(|p| counts.contains(&(p.count_ones() as usize))).collect();
        x_patterns.sort_by_key(|p| (p.count_ones(), *p));
        let mut y_patterns = Vec::new();
        let mut occ = vec![0u8; m];
        enumerate_bosons(&mut occ, 0, n_max, &mut y_patterns);
        y_patterns.sort_by_key(|y: &Vec<u8>| (y.iter().map(|&v| v as usize).sum::<usize>(), y.clone()));
        let mut states = Vec::with_capacity(dim);
        for &x in &x_patterns {
            for y in &y_patterns {
                states.push(BasisState { x, y: y.clone() });
            }
        }
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(FockSpace { lattice, n_max, x_counts: counts, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn vacuum_index(&self) -> Option<usize> {
        self.index_of(&BasisState { x: 0, y: vec![0; self.lattice.modes()] })
    }

    pub fn basis_vector(&self, s: &BasisState) -> Option<Vec<C64>> {
        let k = self.index_of(s)?;
        let mut v = vec![ZERO; self.dim()];
        v[k] = c(1.0, 0.0);
        Some(v)
    }

    fn build(&self, f: impl Fn(&BasisState) -> Vec<(BasisState, C64)>) -> Csr {
        let mut trip = Vec::new();
        for (col, s) in self.states.iter().enumerate() {
            for (target, amp) in f(s) {
                if let Some(row) = self.index_of(&target) {
                    trip.push((row, col, amp));
                }
            }
        }
        Csr::from_triplets(self.dim(), self.dim(), trip)
    }

    /// `a_r(q)` for x-mode `mode = 2 q + r`.
    pub fn annihilate_x(&self, mode: usize) -> Csr {
        let scale = 1.0 / self.lattice.spacing.sqrt();
        self.build(|s| match lower_x(s, mode) {
            Some((t, sign)) => vec![(t, c(sign * scale, 0.0))],
            None => vec![],
        })
    }

    pub fn create_x(&self, mode: usize) -> Csr {
        let scale = 1.0 / self.lattice.spacing.sqrt();
        self.build(|s| match raise_x(s, mode) {
            Some((t, sign)) => vec![(t, c(sign * scale, 0.0))],
            None => vec![],
        })
    }

    pub fn annihilate_y(&self, mode: usize) -> Csr {
        let scale = 1.0 / self.lattice.spacing.sqrt();
        self.build(|s| match lower_y(s, mode) {
            Some((t, f)) => vec![(t, c(f * scale, 0.0))],
            None => vec![],
        })
    }

    /// `b†_s(q)`; amplitude that would exceed `n_max` is dropped (see
    /// [`FockSpace::truncation_loss`]).
    pub fn create_y(&self, mode: usize) -> Csr {
        let scale = 1.0 / self.lattice.spacing.sqrt();
        let n_max = self.n_max;
        self.build(|s| match raise_y(s, mode, n_max) {
            Some((t, f)) => vec![(t, c(f * scale, 0.0))],
            None => vec![],
        })
    }

    /// Squared norm that `b†` applied to `state` would send above `n_max`,
    /// summed over all y-modes.
    pub fn truncation_loss(&self, state: &[C64]) -> f64 {
        let a = self.lattice.spacing;
        self.states
            .iter()
            .zip(state)
            .filter(|(s, _)| s.y_count() == self.n_max)
            .map(|(s, v)| v.norm_sqr() * s.y.iter().map(|&n| (n as f64 + 1.0) / a).sum::<f64>())
            .sum()
    }

    /// Weight of `state` in the top y-sector `N = n_max`.
    pub fn top_sector_weight(&self, state: &[C64]) -> f64 {
        self.states.iter().zip(state).filter(|(s, _)| s.y_count() == self.n_max).map(|(_, v)| v.norm_sqr()).sum()
    }

    pub fn number_x(&self) -> Csr {
        self.build(|s| vec![(s.clone(), c(s.x_count() as f64, 0.0))])
    }

    pub fn number_y(&self) -> Csr {
        self.build(|s| vec![(s.clone(), c(s.y_count() as f64, 0.0))])
    }

    /// Projector onto the sector with `m` x-particles and `n` y-particles.
    pub fn sector_projector(&self, m: usize, n: usize) -> Csr {
        self.build(|s| if s.x_count() == m && s.y_count() == n { vec![(s.clone(), c(1.0, 0.0))] } else { vec![] })
    }
}

fn enumerate_bosons(occ: &mut Vec<u8>, pos: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if pos == occ.len() {
        out.push(occ.clone());
        return;
    }
    for k in 0..=left {
        occ[pos] = k as u8;
        enumerate_bosons(occ, pos + 1, left - k, out);
    }
    occ[pos] = 0;
}

fn lower_x(s: &BasisState, mode: usize) -> Option<(BasisState, f64)> {
    if s.x & (1u64 << mode) == 0 {
        return None;
    }
    let sign = s.jw_sign(mode);
    Some((BasisState { x: s.x & !(1u64 << mode), y: s.y.clone() }, sign))
}

fn raise_x(s: &BasisState, mode: usize) -> Option<(BasisState, f64)> {
    if s.x & (1u64 << mode) != 0 {
        return None;
    }
    let sign = s.jw_sign(mode);
    Some((BasisState { x: s.x | (1u64 << mode), y: s.y.clone() }, sign))
}

fn lower_y(s: &BasisState, mode: usize) -> Option<(BasisState, f64)> {
    let n = s.y[mode];
    if n == 0 {
        return None;
    }
    let mut y = s.y.clone();
    y[mode] -= 1;
    Some((BasisState { x: s.x, y }, (n as f64).sqrt()))
}

fn raise_y(s: &BasisState, mode: usize, n_max: usize) -> Option<(BasisState, f64)> {
    if s.y_count() >= n_max {
        return None;
    }
    let n = s.y[mode];
    let mut y = s.y.clone();
    y[mode] += 1;
    Some((BasisState { x: s.x, y }, (n as f64 + 1.0).sqrt()))
}

/// `H = H_x + H_y + H_int` on a truncated space, with a cached norm bound
/// for the exponential.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub matrix: Csr,
    pub norm_bound: f64,
    pub h_x: DMatrix<C64>,
    pub h_y: DMatrix<C64>,
}

impl Hamiltonian {
    /// `exp(-i H t) state`.
    pub fn evolve(&self, state: &[C64], t: f64) -> Vec<C64> {
        expmv_with_norm(&self.matrix, self.norm_bound, t, state)
    }

    /// Dense eigendecomposition, for small spaces.
    pub fn dense(&self) -> HermitianEig {
        HermitianEig::new(&self.matrix.to_dense())
    }
}

/// Second-quantized Hamiltonian of the emission–absorption model:
/// `Σ c†_μ h^x_{μν} c_ν + Σ d†_μ h^y_{μν} d_ν`
/// `+ Σ_i n_i Σ_{j,s} a φ_cut(j - i) (g*_s d_{js} + g_s d†_{js}) / sqrt(a)`,
/// where `c, d` are the dimensionless mode operators and `n_i` counts the
/// x-particles on site `i`.
pub fn build_hamiltonian(space: &FockSpace, coupling: &CouplingSpec, cutoff: &CutoffProfile) -> Hamiltonian {
    let lat = &space.lattice;
    let a = lat.spacing;
    let h_x = dirac_hamiltonian(lat, coupling.mass_x);
    let h_y = dirac_hamiltonian(lat, coupling.mass_y);
    let m = lat.modes();
    let hop = |h: &DMatrix<C64>| -> Vec<(usize, usize, C64)> {
        let mut v = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if h[(i, j)] != ZERO {
                    v.push((i, j, h[(i, j)]));
                }
            }
        }
        v
    };
    let hx = hop(&h_x);
    let hy = hop(&h_y);
    let sqrt_a = a.sqrt();
    let matrix = space.build(|s| {
        let mut out = Vec::new();
        for &(mu, nu, val) in &hx {
            if let Some((mid, s1)) = lower_x(s, nu) {
                if let Some((t, s2)) = raise_x(&mid, mu) {
                    out.push((t, val * (s1 * s2)));
                }
            }
        }
        for &(mu, nu, val) in &hy {
            if let Some((mid, f1)) = lower_y(s, nu) {
                // hopping conserves the y-number, so no truncation here
                if let Some((t, f2)) = raise_y(&mid, mu, usize::MAX) {
                    out.push((t, val * (f1 * f2)));
                }
            }
        }
        for site in 0..lat.sites {
            let n_i = ((s.x >> (2 * site)) & 0b11).count_ones() as f64;
            if n_i == 0.0 {
                continue;
            }
            for &(d, phi) in &cutoff.kernel {
                let Some(j) = lat.shift(site, d) else { continue };
                let w = a * phi * n_i / sqrt_a;
                for spin in 0..2 {
                    let mode = 2 * j + spin;
                    if let Some((t, f)) = lower_y(s, mode) {
                        out.push((t, coupling.g[spin].conj() * (w * f)));
                    }
                    if let Some((t, f)) = raise_y(s, mode, space.n_max) {
                        out.push((t, coupling.g[spin] * (w * f)));
                    }
                }
            }
        }
        out
    });
    let norm_bound = matrix.norm_bound();
    Hamiltonian { matrix, norm_bound, h_x, h_y }
}

/// Interaction term of one x-site, `n_i Σ_{j,s} a φ_cut(j - i)
/// (g*_s d_{js} + g_s d†_{js}) / sqrt(a)`. Summing over sites gives the
/// interaction part of [`build_hamiltonian`]; dividing by `a` gives the
/// Hamiltonian density at the site.
pub fn site_interaction(space: &FockSpace, coupling: &CouplingSpec, cutoff: &CutoffProfile, site: usize) -> Csr {
    let lat = &space.lattice;
    let a = lat.spacing;
    space.build(|s| {
        let mut out = Vec::new();
        let n_i = ((s.x >> (2 * site)) & 0b11).count_ones() as f64;
        if n_i == 0.0 {
            return out;
        }
        for &(d, phi) in &cutoff.kernel {
            let Some(j) = lat.shift(site, d) else { continue };
            let w = a * phi * n_i / a.sqrt();
            for spin in 0..2 {
                let mode = 2 * j + spin;
                if let Some((t, f)) = lower_y(s, mode) {
                    out.push((t, coupling.g[spin].conj() * (w * f)));
                }
                if let Some((t, f)) = raise_y(s, mode, space.n_max) {
                    out.push((t, coupling.g[spin] * (w * f)));
                }
            }
        }
        out
    })
}

/// One-particle free propagator `exp(-i h t)` on `2L` modes.
#[derive(Clone, Debug)]
pub struct FreePropagator {
    eig: HermitianEig,
}

impl FreePropagator {
    pub fn new(lattice: &LatticeSpec, mass: f64) -> Self {
        FreePropagator { eig: HermitianEig::new(&dirac_hamiltonian(lattice, mass)) }
    }

    pub fn matrix(&self, t: f64) -> DMatrix<C64> {
        self.eig.exp_minus_i(t)
    }

    pub fn apply(&self, t: f64, v: &[C64]) -> Vec<C64> {
        self.eig.apply(t, v)
    }
}

fn anticommutator(a: &Csr, b: &Csr) -> Csr {
    a.mul(b).add(&b.mul(a))
}

fn commutator(a: &Csr, b: &Csr) -> Csr {
    a.mul(b).add(&b.mul(a).scale(c(-1.0, 0.0)))
}

/// Largest entry of `{a_μ, a†_ν} - δ/a`, `{a_μ, a_ν}`, `[b_μ, b†_ν] - δ/a`,
/// `[b_μ, b_ν]` and the mixed x-y commutators, restricted to the sectors
/// where the truncation cannot clip a creation operator.
pub fn canonical_relations_defect(space: &FockSpace) -> f64 {
    let modes = space.lattice.modes();
    let dim = space.dim();
    let unit = Csr::identity(dim).scale(c(1.0 / space.lattice.spacing, 0.0));
    let mut safe = Csr::zeros(dim, dim);
    let top_x = space.x_counts.iter().copied().max().unwrap_or(0);
    for &m in &space.x_counts {
        if m == top_x && top_x < modes {
            continue;
        }
        for n in 0..space.n_max {
            safe = safe.add(&space.sector_projector(m, n));
        }
    }
    let (ax, cx, ay, cy): (Vec<Csr>, Vec<Csr>, Vec<Csr>, Vec<Csr>) = (
        (0..modes).map(|q| space.annihilate_x(q)).collect(),
        (0..modes).map(|q| space.create_x(q)).collect(),
        (0..modes).map(|q| space.annihilate_y(q)).collect(),
        (0..modes).map(|q| space.create_y(q)).collect(),
    );
    let mut worst = 0.0f64;
    for mu in 0..modes {
        for nu in 0..modes {
            let mut car = anticommutator(&ax[mu], &cx[nu]).mul(&safe);
            let mut ccr = commutator(&ay[mu], &cy[nu]).mul(&safe);
            if mu == nu {
                car = car.add(&unit.mul(&safe).scale(c(-1.0, 0.0)));
                ccr = ccr.add(&unit.mul(&safe).scale(c(-1.0, 0.0)));
            }
            worst = worst
                .max(car.max_abs())
                .max(ccr.max_abs())
                .max(anticommutator(&ax[mu], &ax[nu]).mul(&safe).max_abs())
                .max(commutator(&ay[mu], &ay[nu]).mul(&safe).max_abs())
                .max(commutator(&ax[mu], &ay[nu]).mul(&safe).max_abs())
                .max(commutator(&ax[mu], &cy[nu]).mul(&safe).max_abs());
        }
    }
    worst
}
