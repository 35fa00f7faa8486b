use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{config, Result};
use crate::fock::{
    build_hamiltonian, BasisState, CouplingSpec, CutoffProfile, FockSpace, FreePropagator, Hamiltonian, LatticeSpec,
};
use crate::linalg::{c, Csr, C64, ONE, ZERO};

/// Space-time point of the lattice model: continuous time, site, spinor index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticePoint {
    pub t: f64,
    pub site: usize,
    pub spin: usize,
}

impl LatticePoint {
    pub fn new(t: f64, site: usize, spin: usize) -> Self {
        LatticePoint { t, site, spin }
    }

    pub fn mode(&self) -> usize {
        2 * self.site + self.spin
    }

    pub fn at_time(self, t: f64) -> Self {
        LatticePoint { t, ..self }
    }

    pub fn with_mode(self, mode: usize) -> Self {
        LatticePoint { site: mode / 2, spin: mode % 2, ..self }
    }
}

/// Spacelike on the lattice: equal points, or `|Δt| < distance`.
pub fn lattice_spacelike(lattice: &LatticeSpec, p: &LatticePoint, q: &LatticePoint) -> bool {
    let d = lattice.distance(p.site, q.site);
    (p.site == q.site && p.t == q.t) || (p.t - q.t).abs() < d
}

/// All pairs of `points` spacelike.
pub fn configuration_spacelike(lattice: &LatticeSpec, points: &[LatticePoint]) -> bool {
    points.iter().enumerate().all(|(i, p)| points[i + 1..].iter().all(|q| lattice_spacelike(lattice, p, q)))
}

/// `G(t, y - x)`: free y-evolution of `g φ_cut(· - x)` for time `t`.
#[derive(Clone, Debug)]
pub struct GreenFunctionCut {
    lattice: LatticeSpec,
    g: [C64; 2],
    cutoff: CutoffProfile,
    propagator: FreePropagator,
}

impl GreenFunctionCut {
    pub fn new(lattice: LatticeSpec, g: [C64; 2], cutoff: CutoffProfile, mass_y: f64) -> Self {
        let propagator = FreePropagator::new(&lattice, mass_y);
        GreenFunctionCut { lattice, g, cutoff, propagator }
    }

    pub fn initial(&self, source: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.lattice.modes()];
        for &(d, phi) in &self.cutoff.kernel {
            if let Some(j) = self.lattice.shift(source, d) {
                for s in 0..2 {
                    v[2 * j + s] += self.g[s] * phi;
                }
            }
        }
        v
    }

    /// Field over all y-modes at time `t` for a source at `source`.
    pub fn field(&self, t: f64, source: usize) -> Vec<C64> {
        let v = self.initial(source);
        if t == 0.0 {
            v
        } else {
            self.propagator.apply(t, &v)
        }
    }

    /// `G_s(y - x)` for the y-point `y` and x-point `x`.
    pub fn value(&self, y: &LatticePoint, x: &LatticePoint) -> C64 {
        self.field(y.t - x.t, x.site)[y.mode()]
    }
}

/// Emission–absorption model on a truncated lattice Fock space, with the
/// operators needed to build multi-time Fock functions.
pub struct QftModel {
    pub space: FockSpace,
    pub coupling: CouplingSpec,
    pub cutoff: CutoffProfile,
    pub hamiltonian: Hamiltonian,
    pub green: GreenFunctionCut,
    annihilate_x: Vec<Csr>,
    annihilate_y: Vec<Csr>,
}

impl QftModel {
    /// The space must hold every x-number from 0 to its maximum, since the
    /// operator chains pass through all lower sectors.
    pub fn new(space: FockSpace, coupling: CouplingSpec, cutoff: CutoffProfile) -> Result<Self> {
        let top = space.x_counts.iter().copied().max().unwrap_or(0);
        if (0..=top).any(|k| !space.x_counts.contains(&k)) {
            return config("x-particle numbers must form a range starting at 0");
        }
        let hamiltonian = build_hamiltonian(&space, &coupling, &cutoff);
        let lattice = space.lattice;
        let m = lattice.modes();
        let annihilate_x = (0..m).map(|k| space.annihilate_x(k)).collect();
        let annihilate_y = (0..m).map(|k| space.annihilate_y(k)).collect();
        let green = GreenFunctionCut::new(lattice, coupling.g, cutoff.clone(), coupling.mass_y);
        Ok(QftModel { space, coupling, cutoff, hamiltonian, green, annihilate_x, annihilate_y })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.space.lattice
    }

    pub fn max_x(&self) -> usize {
        self.space.x_counts.iter().copied().max().unwrap_or(0)
    }

    /// `e^{-iHt} v`.
    pub fn evolve(&self, v: &[C64], t: f64) -> Vec<C64> {
        self.hamiltonian.evolve(v, t)
    }

    /// State with one x-particle and the given y-modes occupied, normalized.
    pub fn product_state(&self, x_mode: Option<usize>, y_modes: &[usize]) -> Result<Vec<C64>> {
        let mut y = vec![0u8; self.lattice().modes()];
        for &m in y_modes {
            y[m] += 1;
        }
        let s = BasisState { x: x_mode.map_or(0, |m| 1u64 << m), y };
        match self.space.basis_vector(&s) {
            Some(v) => Ok(v),
            None => config("state lies outside the truncated space"),
        }
    }

    fn check_sector(&self, m: usize, n: usize) -> Result<()> {
        if !self.space.x_counts.contains(&m) || n > self.space.n_max {
            return config(format!("sector ({m},{n}) outside the truncated space"));
        }
        Ok(())
    }

    /// `(-1)^{M(M-1)/2} / sqrt(M! N!)`.
    pub fn prefactor(m: usize, n: usize) -> f64 {
        let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
        let sign = if (m * (m.saturating_sub(1)) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign / (fact(m) * fact(n)).sqrt()
    }

    /// Runs the Heisenberg chain for all operators after the first. Returns
    /// `v` and the time `t_2` of the second operator such that the matrix
    /// element is `⟨∅|O_1 e^{-iH(t_1 - t_2)} v`; with a single operator `v`
    /// is `None` and the caller evolves `Ψ` directly.
    ///
    /// `evolved(t)` must return `e^{-iHt} Ψ`.
    fn chain_tail(&self, evolved: &dyn Fn(f64) -> Vec<C64>, ops: &[(LatticePoint, bool)]) -> Option<(Vec<C64>, f64)> {
        let last = ops.len() - 1;
        if last == 0 {
            return None;
        }
        let mut v = evolved(ops[last].0.t);
        for k in (1..=last).rev() {
            let (p, is_x) = ops[k];
            let op = if is_x { &self.annihilate_x[p.mode()] } else { &self.annihilate_y[p.mode()] };
            v = op.matvec(&v);
            if k > 1 {
                v = self.evolve(&v, ops[k - 1].0.t - p.t);
            }
        }
        Some((v, ops[1].0.t))
    }

    fn single_index(&self, mode: usize, is_x: bool) -> Option<usize> {
        let m = self.lattice().modes();
        let s = if is_x {
            BasisState { x: 1u64 << mode, y: vec![0; m] }
        } else {
            let mut y = vec![0u8; m];
            y[mode] = 1;
            BasisState { x: 0, y }
        };
        self.space.index_of(&s)
    }

    /// Multi-time amplitude for `Ψ` given through `evolved(t) = e^{-iHt}Ψ`.
    pub fn phi_with(&self, evolved: &dyn Fn(f64) -> Vec<C64>, xs: &[LatticePoint], ys: &[LatticePoint]) -> Result<C64> {
        Ok(self.phi_first_slot_with(evolved, xs, ys)?.map_or_else(
            || evolved(0.0)[self.space.vacuum_index().expect("vacuum in space")],
            |all| {
                let first = xs.first().or(ys.first()).unwrap();
                all[first.mode()]
            },
        ))
    }

    /// Amplitudes for every mode of the first argument (first x if any,
    /// else first y), other arguments fixed. `None` for the (0,0) sector.
    pub fn phi_first_slot_with(
        &self,
        evolved: &dyn Fn(f64) -> Vec<C64>,
        xs: &[LatticePoint],
        ys: &[LatticePoint],
    ) -> Result<Option<Vec<C64>>> {
        let first = match xs.first().or(ys.first()) {
            Some(p) => p.t,
            None => {
                self.check_sector(0, ys.len())?;
                return Ok(None);
            }
        };
        self.phi_first_slot_timed(evolved, xs, ys, &|_| first).map(Some)
    }

    /// As [`phi_first_slot_with`](Self::phi_first_slot_with) but the first
    /// argument's time depends on its site through `first_time`, as on a
    /// curved surface.
    pub fn phi_first_slot_timed(
        &self,
        evolved: &dyn Fn(f64) -> Vec<C64>,
        xs: &[LatticePoint],
        ys: &[LatticePoint],
        first_time: &dyn Fn(usize) -> f64,
    ) -> Result<Vec<C64>> {
        let (m, n) = (xs.len(), ys.len());
        self.check_sector(m, n)?;
        if m + n == 0 {
            return config("the (0,0) sector has no first argument");
        }
        let ops: Vec<(LatticePoint, bool)> =
            xs.iter().map(|p| (*p, true)).chain(ys.iter().map(|p| (*p, false))).collect();
        let tail = self.chain_tail(evolved, &ops);
        let is_x = ops[0].1;
        let scale = Self::prefactor(m, n) / self.lattice().spacing.sqrt();
        let lat = *self.lattice();
        let mut out = vec![ZERO; lat.modes()];
        let mut done = vec![false; lat.sites];
        for site in 0..lat.sites {
            if done[site] {
                continue;
            }
            let t = first_time(site);
            let v = match &tail {
                Some((v, t2)) => self.evolve(v, t - t2),
                None => evolved(t),
            };
            for (other, seen) in done.iter_mut().enumerate().skip(site) {
                if !*seen && first_time(other) == t {
                    *seen = true;
                    for spin in 0..2 {
                        let mode = 2 * other + spin;
                        out[mode] = self.single_index(mode, is_x).map_or(ZERO, |k| v[k] * scale);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Coefficient readout of a Schrödinger-picture state in position
    /// representation, `ψ^{(M,N)}(q_1..q_M, r_1..r_N)`. Independent of the
    /// operator chain.
    pub fn position_amplitude(&self, state: &[C64], x_modes: &[usize], y_modes: &[usize]) -> C64 {
        let (m, n) = (x_modes.len(), y_modes.len());
        let mut x = 0u64;
        for &q in x_modes {
            if x & (1u64 << q) != 0 {
                return ZERO;
            }
            x |= 1u64 << q;
        }
        // sign of the permutation sorting x_modes
        let mut inversions = 0;
        for i in 0..m {
            for j in i + 1..m {
                if x_modes[i] > x_modes[j] {
                    inversions += 1;
                }
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        let mut y = vec![0u8; self.lattice().modes()];
        for &r in y_modes {
            y[r] += 1;
        }
        let bose: f64 = y.iter().map(|&k| (1..=k as usize).map(|v| v as f64).product::<f64>().sqrt()).product();
        let Some(k) = self.space.index_of(&BasisState { x, y }) else { return ZERO };
        let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
        let scale = sign * bose / (fact(m) * fact(n)).sqrt() / self.lattice().spacing.powf((m + n) as f64 / 2.0);
        state[k] * scale
    }
}

/// Multi-time Fock function of a fixed Heisenberg state `Ψ`, with
/// `e^{-iHt}Ψ` cached per time.
pub struct FockFunction<'a> {
    pub model: &'a QftModel,
    pub psi: Vec<C64>,
    cache: Mutex<HashMap<u64, Vec<C64>>>,
}

impl<'a> FockFunction<'a> {
    pub fn new(model: &'a QftModel, psi: Vec<C64>) -> Self {
        FockFunction { model, psi, cache: Mutex::new(HashMap::new()) }
    }

    pub fn evolved(&self, t: f64) -> Vec<C64> {
        if t == 0.0 {
            return self.psi.clone();
        }
        if let Some(v) = self.cache.lock().unwrap().get(&t.to_bits()) {
            return v.clone();
        }
        let v = self.model.evolve(&self.psi, t);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() > 256 {
            cache.clear();
        }
        cache.insert(t.to_bits(), v.clone());
        v
    }

    /// `φ(x_1..x_M, y_1..y_N)`.
    pub fn eval(&self, xs: &[LatticePoint], ys: &[LatticePoint]) -> Result<C64> {
        self.model.phi_with(&|t| self.evolved(t), xs, ys)
    }

    /// Amplitudes for all modes of the first argument.
    pub fn eval_first_slot(&self, xs: &[LatticePoint], ys: &[LatticePoint]) -> Result<Vec<C64>> {
        match self.model.phi_first_slot_with(&|t| self.evolved(t), xs, ys)? {
            Some(v) => Ok(v),
            None => Ok(vec![self.eval(xs, ys)?]),
        }
    }
}

/// Normalized state with a single x-particle in a Gaussian packet around
/// `center` (spin up) and the y-vacuum, optionally plus a y-particle.
pub fn packet_state(model: &QftModel, center: usize, width: f64, spinor: [C64; 2], y_mode: Option<usize>) -> Vec<C64> {
    let lat = *model.lattice();
    let mut psi = vec![ZERO; model.space.dim()];
    for site in 0..lat.sites {
        let d = lat.distance(center, site);
        let amp = (-d * d / (4.0 * width * width)).exp();
        for (s, w) in spinor.iter().enumerate() {
            let v = model.product_state(Some(2 * site + s), &y_mode.into_iter().collect::<Vec<_>>());
            if let Ok(v) = v {
                let k = v.iter().position(|z| *z == ONE).unwrap();
                psi[k] += w * amp;
            }
        }
    }
    let nrm = crate::linalg::norm(&psi);
    psi.iter_mut().for_each(|z| *z /= c(nrm, 0.0));
    psi
}
