//! Commutators of the multi-time operators `i∂_{x_j^0} - H_{x_j}` applied to
//! smooth probe Fock functions, for the model's statistics and for variants
//! with the particle statistics changed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{config, Result};
use crate::exec::Exec;
use crate::fock::{dirac_hamiltonian, CouplingSpec, CutoffProfile, LatticeSpec};
use crate::linalg::{C64, I, ZERO};

use super::heisenberg::{configuration_spacelike, GreenFunctionCut, LatticePoint};

/// Lattice emission–absorption model without a Fock space.
#[derive(Clone, Debug)]
pub struct EmissionAbsorptionSpec {
    pub lattice: LatticeSpec,
    pub coupling: CouplingSpec,
    pub cutoff: CutoffProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    /// Fermionic x, bosonic y (the model as defined).
    YBosonic,
    YFermionic,
    XBosonic,
}

impl Statistics {
    pub const ALL: [Statistics; 3] = [Statistics::YBosonic, Statistics::XBosonic, Statistics::YFermionic];

    fn x_antisymmetric(self) -> bool {
        !matches!(self, Statistics::XBosonic)
    }

    fn y_antisymmetric(self) -> bool {
        matches!(self, Statistics::YFermionic)
    }

    pub fn label(self) -> &'static str {
        match self {
            Statistics::YBosonic => "y-bosonic",
            Statistics::YFermionic => "y-fermionic",
            Statistics::XBosonic => "x-bosonic",
        }
    }
}

/// Gaussian orbital with a time-dependent phase and a linear time factor.
#[derive(Clone, Copy, Debug)]
pub struct Orbital {
    pub center: f64,
    pub width: f64,
    pub omega: f64,
    pub drift: f64,
    pub spinor: [C64; 2],
}

impl Orbital {
    fn value(&self, lattice: &LatticeSpec, p: &LatticePoint) -> C64 {
        let z = p.site as f64 * lattice.spacing;
        let mut d = z - self.center;
        if lattice.periodic {
            let len = lattice.sites as f64 * lattice.spacing;
            d -= len * (d / len).round();
        }
        let env = (-d * d / (2.0 * self.width * self.width)).exp();
        self.spinor[p.spin] * env * C64::from_polar(1.0 + self.drift * p.t, -self.omega * p.t)
    }
}

/// Smooth multi-time test function: (anti)symmetrized products of orbitals
/// in every sector.
#[derive(Clone, Debug)]
pub struct ProbeFockFunction {
    pub lattice: LatticeSpec,
    pub x_orbitals: Vec<Orbital>,
    pub y_orbitals: Vec<Orbital>,
    pub statistics: Statistics,
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(vec![], 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            // inserting at pos passes (len - pos) larger-index elements
            let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

impl ProbeFockFunction {
    /// Standard probe with orbitals spread over the lattice.
    pub fn standard(lattice: LatticeSpec, statistics: Statistics) -> Self {
        let len = lattice.sites as f64 * lattice.spacing;
        let orb = |k: usize, shift: f64| Orbital {
            center: shift + len * (0.17 + 0.21 * k as f64),
            width: 0.18 * len,
            omega: 0.6 + 0.35 * k as f64,
            drift: 0.2 - 0.07 * k as f64,
            spinor: [C64::new(0.8, 0.1 * k as f64), C64::new(0.2 * k as f64 - 0.3, 0.55)],
        };
        ProbeFockFunction {
            lattice,
            x_orbitals: (0..3).map(|k| orb(k, 0.0)).collect(),
            y_orbitals: (0..5).map(|k| orb(k, 0.11 * len)).collect(),
            statistics,
        }
    }

    fn combine(&self, orbitals: &[Orbital], points: &[LatticePoint], antisymmetric: bool) -> C64 {
        let n = points.len();
        let mut acc = ZERO;
        for (perm, sign) in permutations(n) {
            let mut prod = C64::new(if antisymmetric { sign } else { 1.0 }, 0.0);
            for (k, p) in points.iter().enumerate() {
                prod *= orbitals[perm[k]].value(&self.lattice, p);
            }
            acc += prod;
        }
        acc
    }

    pub fn eval(&self, xs: &[LatticePoint], ys: &[LatticePoint]) -> C64 {
        assert!(xs.len() <= self.x_orbitals.len() && ys.len() <= self.y_orbitals.len(), "probe sector too large");
        self.combine(&self.x_orbitals, xs, self.statistics.x_antisymmetric())
            * self.combine(&self.y_orbitals, ys, self.statistics.y_antisymmetric())
    }
}

type FockFn<'a> = dyn Fn(&[LatticePoint], &[LatticePoint]) -> C64 + 'a;

/// Operators `i∂_{x_j^0} - H_{x_j}` with the Green's term in the
/// x-equations and the annihilation sign set by the y-statistics.
pub struct MultiTimeOperators {
    spec: EmissionAbsorptionSpec,
    h_x: DMatrix<C64>,
    green: GreenFunctionCut,
    statistics: Statistics,
    step: f64,
}

impl MultiTimeOperators {
    pub fn new(spec: EmissionAbsorptionSpec, statistics: Statistics, step: f64) -> Self {
        let h_x = dirac_hamiltonian(&spec.lattice, spec.coupling.mass_x);
        let green = GreenFunctionCut::new(spec.lattice, spec.coupling.g, spec.cutoff.clone(), spec.coupling.mass_y);
        MultiTimeOperators { spec, h_x, green, statistics, step }
    }

    /// `H_{x_j} f` at `(xs, ys)`.
    fn hamiltonian(&self, f: &FockFn, xs: &[LatticePoint], ys: &[LatticePoint], j: usize) -> C64 {
        let lat = &self.spec.lattice;
        let x = xs[j];
        let mut acc = ZERO;
        let row = x.mode();
        let mut moved = xs.to_vec();
        for col in 0..self.h_x.ncols() {
            let h = self.h_x[(row, col)];
            if h != ZERO {
                moved[j] = x.with_mode(col);
                acc += h * f(&moved, ys);
            }
        }
        let n = ys.len();
        let mut created = ys.to_vec();
        created.push(x);
        let mut creation = ZERO;
        for &(d, w) in &self.spec.cutoff.kernel {
            let Some(site) = lat.shift(x.site, d) else { continue };
            for s in 0..2 {
                let g = self.spec.coupling.g[s].conj();
                if g != ZERO {
                    created[n] = LatticePoint::new(x.t, site, s);
                    creation += g * (lat.spacing * w) * f(xs, &created);
                }
            }
        }
        acc += creation * ((n + 1) as f64).sqrt();
        if n > 0 {
            let mut annihilation = ZERO;
            for k in 0..n {
                let g = self.green.value(&ys[k], &x);
                if g == ZERO {
                    continue;
                }
                let mut rest = ys.to_vec();
                rest.remove(k);
                // moving y_k past the later y's before removing it
                let sign = if self.statistics.y_antisymmetric() && (n - 1 - k) % 2 == 1 { -1.0 } else { 1.0 };
                annihilation += g * sign * f(xs, &rest);
            }
            acc += annihilation / (n as f64).sqrt();
        }
        acc
    }

    /// `(i∂_{x_j^0} - H_{x_j}) f` at `(xs, ys)`, time derivative by a
    /// five-point central difference.
    fn apply(&self, f: &FockFn, xs: &[LatticePoint], ys: &[LatticePoint], j: usize) -> C64 {
        let h = self.step;
        let mut shifted = xs.to_vec();
        let t = xs[j].t;
        let mut d = ZERO;
        for (k, c) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            shifted[j] = xs[j].at_time(t + k * h);
            d += f(&shifted, ys) * c;
        }
        I * d / (12.0 * h) - self.hamiltonian(f, xs, ys, j)
    }

    /// `[i∂_{x_j} - H_{x_j}, i∂_{x_k} - H_{x_k}] f` at `(xs, ys)`.
    pub fn commutator(&self, f: &FockFn, xs: &[LatticePoint], ys: &[LatticePoint], j: usize, k: usize) -> C64 {
        let dk = |a: &[LatticePoint], b: &[LatticePoint]| self.apply(f, a, b, k);
        let dj = |a: &[LatticePoint], b: &[LatticePoint]| self.apply(f, a, b, j);
        self.apply(&dk, xs, ys, j) - self.apply(&dj, xs, ys, k)
    }
}

/// `|[i∂_{x_1} - H_{x_1}, i∂_{x_2} - H_{x_2}] φ|` for a probe at a
/// configuration with two x-particles.
pub fn qft_commutator_check(
    spec: &EmissionAbsorptionSpec,
    probe: &ProbeFockFunction,
    xs: &[LatticePoint],
    ys: &[LatticePoint],
    step: f64,
) -> Result<f64> {
    if xs.len() < 2 {
        return config("commutator check needs two x-points");
    }
    let ops = MultiTimeOperators::new(spec.clone(), probe.statistics, step);
    let f = |a: &[LatticePoint], b: &[LatticePoint]| probe.eval(a, b);
    Ok(ops.commutator(&f, xs, ys, 0, 1).norm())
}

#[derive(Clone, Debug, Serialize)]
pub struct StatisticsOutcome {
    pub variant: Statistics,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Configuration with the largest residual, as `(t, site, spin)` for
    /// x-points then y-points.
    pub witness_x: Vec<(f64, usize, usize)>,
    pub witness_y: Vec<(f64, usize, usize)>,
}

/// Deterministic sweep of spacelike configurations with two x-points and
/// up to `max_y` y-points, all x-y and x-x separations beyond the cutoff.
pub fn statistics_sweep(spec: &EmissionAbsorptionSpec, max_y: usize) -> Vec<(Vec<LatticePoint>, Vec<LatticePoint>)> {
    let lat = &spec.lattice;
    let l = lat.sites;
    let mut out = Vec::new();
    let radius = spec.cutoff.radius;
    let offsets = [l / 4, l / 3, l / 2];
    let times = [0.0, 0.1, -0.2, 0.35];
    for (a, &off) in offsets.iter().enumerate() {
        for (b, &dt) in times.iter().enumerate() {
            let s1 = (3 * a + b) % l;
            let s2 = (s1 + off) % l;
            let x1 = LatticePoint::new(0.2, s1, (a + b) % 2);
            let x2 = LatticePoint::new(0.2 + dt, s2, (a + b + 1) % 2);
            for n in 0..=max_y {
                let mut ys = Vec::new();
                for k in 0..n {
                    let site = (s1 + off / 2 + k * (l / 5).max(1) + 1) % l;
                    ys.push(LatticePoint::new(0.1 * k as f64, site, k % 2));
                }
                let all: Vec<LatticePoint> = [x1, x2].into_iter().chain(ys.iter().copied()).collect();
                let clear = ys.iter().all(|y| [x1, x2].iter().all(|x| lat.distance(x.site, y.site) > radius))
                    && lat.distance(s1, s2) > radius;
                if clear && configuration_spacelike(lat, &all) {
                    out.push((vec![x1, x2], ys));
                }
            }
        }
    }
    out
}

/// Commutator sweep for each statistics variant. A variant passes when its
/// maximal residual is below `tolerance`.
pub fn statistics_consistency_experiment(
    spec: &EmissionAbsorptionSpec,
    variants: &[Statistics],
    tolerance: f64,
    step: f64,
    exec: Exec,
) -> Result<Vec<StatisticsOutcome>> {
    let configs = statistics_sweep(spec, 2);
    if configs.is_empty() {
        return config("lattice too small for a spacelike sweep beyond the cutoff");
    }
    let mut outcomes = Vec::new();
    for &variant in variants {
        let probe = ProbeFockFunction::standard(spec.lattice, variant);
        let res = exec.map(&configs, |(xs, ys)| qft_commutator_check(spec, &probe, xs, ys, step));
        let mut best = (0.0f64, 0usize);
        for (i, r) in res.into_iter().enumerate() {
            let r = r?;
            if r > best.0 {
                best = (r, i);
            }
        }
        let (xs, ys) = &configs[best.1];
        let tup = |p: &LatticePoint| (p.t, p.site, p.spin);
        outcomes.push(StatisticsOutcome {
            variant,
            max_residual: best.0,
            tolerance,
            passed: best.0 < tolerance,
            witness_x: xs.iter().map(tup).collect(),
            witness_y: ys.iter().map(tup).collect(),
        });
    }
    Ok(outcomes)
}
