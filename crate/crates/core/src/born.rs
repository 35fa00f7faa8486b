//! Iterated detection with collapse on a staircase of horizontal detector
//! pieces approximating a curved surface, compared with `|φ_Σ|²`.
//!
//! All dynamics here are massless in 1+1 dimensions and run on a grid whose
//! spacing divides the staircase step, so one cell per `dz` of time is an
//! exact shift along the characteristics.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::linalg::{C64, ZERO};
use crate::quadrature::Composite;
use crate::spacetime::{born_density_dz, velocity, Boost, Hypersurface, SpacetimePoint};
use crate::zerorange::{pair_step, Packet, Side, SliceGrid, ZeroRangeModel};

/// Which neighbor of a level step carries the overlap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapPolicy {
    /// The later piece reaches back over the earlier one.
    #[default]
    ExtendLater,
    /// The earlier piece reaches forward under the later one.
    ExtendEarlier,
}

/// Horizontal detector at `time = level * eps` covering grid cells
/// `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectorPiece {
    pub level: i64,
    pub time: f64,
    pub start: usize,
    pub end: usize,
}

impl DetectorPiece {
    fn contains(&self, cell: usize) -> bool {
        (self.start..self.end).contains(&cell)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DetectionSchedule {
    pub eps: f64,
    #[serde(skip)]
    pub grid: SliceGrid,
    /// Sorted by time, then position.
    pub pieces: Vec<DetectorPiece>,
    /// Staircase level of each cell before overlaps are added.
    pub base_levels: Vec<i64>,
}

/// Staircase approximation of `surface` on `grid` with time step `eps`.
/// Piece times are multiples of `eps` counted from the initial time 0.
pub fn build_schedule(surface: &Hypersurface, eps: f64, grid: SliceGrid, policy: OverlapPolicy) -> Result<DetectionSchedule> {
    let ratio = eps / grid.dz;
    if eps.is_nan() || eps <= 0.0 || (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
        return domain(format!("eps {eps} is not a positive multiple of the grid spacing {}", grid.dz));
    }
    let per_level = ratio.round() as usize;
    let base_levels: Vec<i64> = (0..grid.n).map(|i| (surface.time_at(grid.coord(i)) / eps).round() as i64).collect();
    if base_levels.iter().any(|&l| l < 0) {
        return domain("surface reaches below the initial time inside the window");
    }
    let mut runs: Vec<DetectorPiece> = Vec::new();
    for (i, &level) in base_levels.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.level == level => r.end = i + 1,
            _ => runs.push(DetectorPiece { level, time: level as f64 * eps, start: i, end: i + 1 }),
        }
    }
    let mut pieces = runs.clone();
    for k in 0..runs.len().saturating_sub(1) {
        let (a, b) = (runs[k], runs[k + 1]);
        let reach = (a.level - b.level).unsigned_abs() as usize * per_level;
        let later_is_right = b.level > a.level;
        match (policy, later_is_right) {
            (OverlapPolicy::ExtendLater, true) | (OverlapPolicy::ExtendEarlier, false) => {
                pieces[k + 1].start = pieces[k + 1].start.saturating_sub(reach)
            }
            _ => pieces[k].end = (pieces[k].end + reach).min(grid.n),
        }
    }
    pieces.sort_by(|p, q| p.level.cmp(&q.level).then(p.start.cmp(&q.start)));
    let schedule = DetectionSchedule { eps, grid, pieces, base_levels };
    schedule.coverage_audit()?;
    Ok(schedule)
}

impl DetectionSchedule {
    /// Every cell lies on a piece, and wherever the staircase steps, the two
    /// pieces overlap by at least the light travel distance `|Δt|` across
    /// the step, so no causal curve slips between them.
    pub fn coverage_audit(&self) -> Result<()> {
        let n = self.grid.n;
        if (0..n).any(|i| !self.pieces.iter().any(|p| p.contains(i))) {
            return domain("detector pieces leave cells uncovered");
        }
        for i in 0..n.saturating_sub(1) {
            let (la, lb) = (self.base_levels[i], self.base_levels[i + 1]);
            if la == lb {
                continue;
            }
            let pa = self.piece_of_run(i);
            let pb = self.piece_of_run(i + 1);
            let overlap = pa.end.min(pb.end).saturating_sub(pa.start.max(pb.start));
            let needed = (pa.time - pb.time).abs();
            let reaches_edge = pa.start == 0 && pb.start == 0 || pa.end == n && pb.end == n;
            if (overlap as f64) * self.grid.dz + 1e-9 < needed && !reaches_edge {
                return domain(format!("staircase step at z = {} lacks causal overlap", self.grid.coord(i)));
            }
        }
        Ok(())
    }

    fn piece_of_run(&self, cell: usize) -> DetectorPiece {
        let level = self.base_levels[cell];
        *self.pieces.iter().find(|p| p.level == level && p.contains(cell)).expect("run cell lies on its own piece")
    }

    /// Whether the polyline `(t, z)` (time increasing, each segment
    /// timelike) meets a piece. Used to audit coverage independently.
    pub fn curve_is_detected(&self, curve: &[SpacetimePoint]) -> bool {
        self.pieces.iter().any(|p| {
            curve.windows(2).any(|w| {
                let (a, b) = (w[0], w[1]);
                if p.time < a.t || p.time > b.t {
                    return false;
                }
                let s = if b.t > a.t { (p.time - a.t) / (b.t - a.t) } else { 0.0 };
                let z = a.z + s * (b.z - a.z);
                let cell = ((z - self.grid.z0) / self.grid.dz).round();
                cell >= 0.0 && (cell as usize) < self.grid.n && p.contains(cell as usize)
            })
        })
    }

    /// Distinct piece times with the union mask and the piece index per cell.
    fn levels(&self) -> Vec<Level> {
        let mut out: Vec<Level> = Vec::new();
        for (idx, p) in self.pieces.iter().enumerate() {
            if out.last().map(|l| l.level) != Some(p.level) {
                out.push(Level { level: p.level, time: p.time, piece: vec![None; self.grid.n] });
            }
            let l = out.last_mut().unwrap();
            for cell in p.start..p.end {
                l.piece[cell].get_or_insert(idx);
            }
        }
        out
    }
}

struct Level {
    level: i64,
    time: f64,
    piece: Vec<Option<usize>>,
}

/// Dynamics in the lab frame together with their exact multi-time `φ`.
#[derive(Clone, Debug)]
pub enum Dynamics {
    /// One free massless particle, optionally seen from a frame boosted by
    /// the given rapidity.
    Free1 { packet: Packet, rapidity: Option<f64> },
    /// Two distinguishable free particles in a product state.
    Bloch2 { first: Packet, second: Packet },
    /// The zero-range pair; detected particles no longer interact.
    ZeroRange(ZeroRangeModel),
}

impl Dynamics {
    pub fn particles(&self) -> usize {
        match self {
            Dynamics::Free1 { .. } => 1,
            _ => 2,
        }
    }

    fn free_amplitude(packet: &Packet, p: SpacetimePoint) -> [C64; 2] {
        let s = packet.spinor();
        [0, 1].map(|k| s[k] * packet.envelope(p.z - velocity(k) * p.t))
    }

    /// `φ` at one point per particle (`2^n` components).
    pub fn amplitude(&self, points: &[SpacetimePoint]) -> Result<Vec<C64>> {
        match self {
            Dynamics::Free1 { packet, rapidity } => match rapidity {
                None => Ok(Self::free_amplitude(packet, points[0]).to_vec()),
                Some(r) => {
                    let b = Boost::new(*r);
                    let v = Self::free_amplitude(packet, b.inverse().apply(points[0]));
                    Ok(b.apply_spinor(&v))
                }
            },
            Dynamics::Bloch2 { first, second } => {
                let (a, b) = (Self::free_amplitude(first, points[0]), Self::free_amplitude(second, points[1]));
                Ok(vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
            }
            Dynamics::ZeroRange(m) => Ok(m.evaluate(points[0], points[1], Some(Side::Above))?.to_vec()),
        }
    }
}

/// Detection statistics, marginalized over piece indices.
#[derive(Clone, Debug, Serialize)]
pub struct DetectionDistribution {
    pub particles: usize,
    pub cells: usize,
    /// Probability per cell tuple, row-major, `cells^particles` entries.
    pub joint: Vec<f64>,
    /// Expected number of detections per piece.
    pub piece_mass: Vec<f64>,
}

impl DetectionDistribution {
    /// Probability that every particle was detected.
    pub fn total_probability(&self) -> f64 {
        self.joint.iter().sum()
    }

    pub fn marginal(&self, particle: usize) -> Vec<f64> {
        let n = self.cells;
        let mut out = vec![0.0; n];
        for (idx, p) in self.joint.iter().enumerate() {
            let cell = if self.particles == 1 { idx } else if particle == 0 { idx / n } else { idx % n };
            out[cell] += p;
        }
        out
    }

    /// Mutual information (nats) between the two particles' cells, with
    /// cells merged into bins of `bin` cells.
    pub fn mutual_information(&self, bin: usize) -> f64 {
        assert_eq!(self.particles, 2);
        let n = self.cells;
        let nb = n.div_ceil(bin);
        let mut joint = vec![0.0; nb * nb];
        for (idx, p) in self.joint.iter().enumerate() {
            joint[(idx / n / bin) * nb + (idx % n) / bin] += p;
        }
        let total: f64 = joint.iter().sum();
        let mut a = vec![0.0; nb];
        let mut b = vec![0.0; nb];
        for (k, p) in joint.iter().enumerate() {
            a[k / nb] += p / total;
            b[k % nb] += p / total;
        }
        joint
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| {
                let p = p / total;
                p * (p / (a[k / nb] * b[k % nb])).ln()
            })
            .sum()
    }
}

fn shift1(psi: &[[C64; 2]], cells: usize) -> Vec<[C64; 2]> {
    let n = psi.len();
    (0..n)
        .map(|i| {
            let right = if i >= cells { psi[i - cells][0] } else { ZERO };
            let left = if i + cells < n { psi[i + cells][1] } else { ZERO };
            [right, left]
        })
        .collect()
}

fn shift2(psi: &[[C64; 4]], n: usize, cells: usize) -> Vec<[C64; 4]> {
    let src = |i: usize, s: usize| -> Option<usize> {
        let from = i as isize - velocity(s) as isize * cells as isize;
        (0..n as isize).contains(&from).then_some(from as usize)
    };
    let mut out = vec![[ZERO; 4]; n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..4 {
                if let (Some(a), Some(b)) = (src(i, k >> 1), src(j, k & 1)) {
                    out[i * n + j][k] = psi[a * n + b][k];
                }
            }
        }
    }
    out
}

fn steps_between(from: f64, to: f64, dz: f64) -> usize {
    ((to - from) / dz).round() as usize
}

/// Detection statistics of one free particle whose (unnormalized) states
/// `branches` are at time `start`, detected on `levels`. Returns the
/// probability per cell and adds to `piece_mass`.
fn run_single(mut branches: Vec<Vec<[C64; 2]>>, start: f64, levels: &[Level], dz: f64, piece_mass: &mut [f64]) -> Vec<f64> {
    let n = branches.first().map_or(0, |b| b.len());
    let mut out = vec![0.0; n];
    let mut now = start;
    for level in levels {
        let steps = steps_between(now, level.time, dz);
        now = level.time;
        for psi in branches.iter_mut() {
            *psi = shift1(psi, steps);
            for (cell, piece) in level.piece.iter().enumerate() {
                if let Some(p) = piece {
                    let w = (psi[cell][0].norm_sqr() + psi[cell][1].norm_sqr()) * dz;
                    out[cell] += w;
                    piece_mass[*p] += w;
                    psi[cell] = [ZERO; 2];
                }
            }
        }
    }
    out
}

/// Exact enumeration of the iterated detection process on `schedule`.
pub fn iterated_collapse_distribution(dynamics: &Dynamics, schedule: &DetectionSchedule, exec: Exec) -> Result<DetectionDistribution> {
    let grid = schedule.grid;
    let (n, dz) = (grid.n, grid.dz);
    let levels = schedule.levels();
    let mut piece_mass = vec![0.0; schedule.pieces.len()];
    if dynamics.particles() == 1 {
        let psi: Vec<[C64; 2]> = (0..n)
            .map(|i| {
                let v = dynamics.amplitude(&[SpacetimePoint::new(0.0, grid.coord(i))])?;
                Ok([v[0], v[1]])
            })
            .collect::<Result<_>>()?;
        let joint = run_single(vec![psi], 0.0, &levels, dz, &mut piece_mass);
        return Ok(DetectionDistribution { particles: 1, cells: n, joint, piece_mass });
    }

    let rows = exec.map_range(n, |i| -> Result<Vec<[C64; 4]>> {
        (0..n)
            .map(|j| {
                let v = dynamics.amplitude(&[SpacetimePoint::new(0.0, grid.coord(i)), SpacetimePoint::new(0.0, grid.coord(j))])?;
                Ok([v[0], v[1], v[2], v[3]])
            })
            .collect()
    });
    let mut psi: Vec<[C64; 4]> = Vec::with_capacity(n * n);
    for r in rows {
        psi.extend(r?);
    }
    let mut joint = vec![0.0; n * n];
    let mut now = 0.0;
    for (k, level) in levels.iter().enumerate() {
        let steps = steps_between(now, level.time, dz);
        now = level.time;
        psi = match dynamics {
            Dynamics::ZeroRange(m) => {
                let phase = C64::from_polar(1.0, m.theta);
                (0..steps).fold(psi, |cur, _| pair_step(&cur, n, phase, exec))
            }
            _ => shift2(&psi, n, steps),
        };
        let mask = &level.piece;
        let hit: Vec<usize> = (0..n).filter(|&i| mask[i].is_some()).collect();
        let later = &levels[k + 1..];

        // Both particles caught on this level.
        for &i in &hit {
            for &j in &hit {
                let w = psi[i * n + j].iter().map(|z| z.norm_sqr()).sum::<f64>() * dz * dz;
                joint[i * n + j] += w;
                piece_mass[mask[i].unwrap()] += w;
                piece_mass[mask[j].unwrap()] += w;
            }
        }
        // One particle caught, the other continues freely.
        let branches = exec.map(&hit, |&c| {
            let mut mass = vec![0.0; piece_mass.len()];
            let slice = |first: bool| -> Vec<Vec<[C64; 2]>> {
                (0..2)
                    .map(|kept| {
                        (0..n)
                            .map(|o| {
                                if mask[o].is_some() {
                                    return [ZERO; 2];
                                }
                                let v = if first { psi[c * n + o] } else { psi[o * n + c] };
                                // the caught particle's spin `kept` is traced out
                                if first {
                                    [v[2 * kept], v[2 * kept + 1]]
                                } else {
                                    [v[kept], v[2 + kept]]
                                }
                            })
                            .collect()
                    })
                    .collect()
            };
            let second = run_single(slice(true), level.time, later, dz, &mut mass);
            let first = run_single(slice(false), level.time, later, dz, &mut mass);
            (c, second, first, mass)
        });
        for (c, second, first, mass) in branches {
            let p = mask[c].unwrap();
            for o in 0..n {
                joint[c * n + o] += second[o] * dz;
                joint[o * n + c] += first[o] * dz;
                piece_mass[p] += (second[o] + first[o]) * dz;
            }
            for (m, v) in piece_mass.iter_mut().zip(mass) {
                *m += v * dz;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if mask[i].is_some() || mask[j].is_some() {
                    psi[i * n + j] = [ZERO; 4];
                }
            }
        }
    }
    Ok(DetectionDistribution { particles: 2, cells: n, joint, piece_mass })
}

/// `|φ_Σ|²` per cell tuple: the surface density per unit `dz` integrated
/// over each cell with Gauss rules split at the surface's kinks (where the
/// density jumps with the slope).
pub fn born_distribution(dynamics: &Dynamics, surface: &Hypersurface, grid: SliceGrid, exec: Exec) -> Result<Vec<f64>> {
    let kinks = surface.breakpoints();
    let order = if dynamics.particles() == 1 { 3 } else { 2 };
    let rules: Vec<Vec<(SpacetimePoint, f64, f64)>> = (0..grid.n)
        .map(|i| {
            let z = grid.coord(i);
            let rule = Composite::new(z - 0.5 * grid.dz, z + 0.5 * grid.dz, &kinks, grid.dz, order);
            rule.nodes.iter().zip(&rule.weights).map(|(x, w)| (surface.point_at(*x), surface.slope_at(*x), *w)).collect()
        })
        .collect();
    if dynamics.particles() == 1 {
        return rules
            .iter()
            .map(|r| r.iter().map(|(p, s, w)| Ok(w * born_density_dz(&dynamics.amplitude(&[*p])?, &[*s]))).sum())
            .collect();
    }
    let n = grid.n;
    let rows = exec.map_range(n, |i| -> Result<Vec<f64>> {
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for (p1, s1, w1) in &rules[i] {
                    for (p2, s2, w2) in &rules[j] {
                        acc += w1 * w2 * born_density_dz(&dynamics.amplitude(&[*p1, *p2])?, &[*s1, *s2]);
                    }
                }
                Ok(acc)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(n * n);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Convolves a cell distribution with a normalized Gaussian of standard
/// deviation `sigma` (in cells) along every particle axis. Mass leaving the
/// window is dropped.
pub fn smooth_distribution(p: &[f64], particles: usize, cells: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return p.to_vec();
    }
    let reach = (5.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-reach..=reach).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let kernel: Vec<f64> = raw.iter().map(|k| k / total).collect();
    let conv = |line: &[f64]| -> Vec<f64> {
        (0..cells as isize)
            .map(|i| {
                (-reach..=reach)
                    .filter_map(|d| {
                        let j = i + d;
                        (0..cells as isize).contains(&j).then(|| line[j as usize] * kernel[(d + reach) as usize])
                    })
                    .sum()
            })
            .collect()
    };
    let mut out = p.to_vec();
    for axis in 0..particles {
        let stride = cells.pow((particles - 1 - axis) as u32);
        let outer = out.len() / (cells * stride);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * cells * stride + inner;
                let line: Vec<f64> = (0..cells).map(|k| out[base + k * stride]).collect();
                for (k, v) in conv(&line).into_iter().enumerate() {
                    out[base + k * stride] = v;
                }
            }
        }
    }
    out
}

/// Total-variation distance between the detection statistics and the Born
/// distribution on `surface`, both smoothed to `resolution` (a length).
///
/// Unsmoothed cells resolve the staircase itself: within each step the
/// detections pile up on the part not swept by the previous level, a comb
/// of period `~eps` that does not shrink in amplitude as `eps -> 0`. The
/// statistics converge weakly, which the smoothed distance measures.
pub fn compare_to_born(
    dist: &DetectionDistribution,
    born: &[f64],
    grid: SliceGrid,
    resolution: f64,
) -> f64 {
    let sigma = resolution / grid.dz;
    total_variation(
        &smooth_distribution(&dist.joint, dist.particles, dist.cells, sigma),
        &smooth_distribution(born, dist.particles, dist.cells, sigma),
    )
}

/// One refinement level of a Born-rule run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BornRow {
    pub eps: f64,
    pub tv_distance: f64,
    pub total_probability: f64,
}

/// TV distance and total probability for `eps, eps/2, …` (`refinements`
/// levels) on a fixed grid.
#[allow(clippy::too_many_arguments)]
pub fn refinement_study(
    dynamics: &Dynamics,
    surface: &Hypersurface,
    grid: SliceGrid,
    eps: f64,
    refinements: usize,
    resolution: f64,
    policy: OverlapPolicy,
    exec: Exec,
) -> Result<Vec<BornRow>> {
    let born = born_distribution(dynamics, surface, grid, exec)?;
    (0..refinements)
        .map(|k| {
            let e = eps / (1u64 << k) as f64;
            let schedule = build_schedule(surface, e, grid, policy)?;
            let dist = iterated_collapse_distribution(dynamics, &schedule, exec)?;
            Ok(BornRow { eps: e, tv_distance: compare_to_born(&dist, &born, grid, resolution), total_probability: dist.total_probability() })
        })
        .collect()
}

/// Piecewise-linear CDF of cell masses at nodes `coords`, evaluated at `x`.
fn cdf_at(coords: &[f64], mass: &[f64], dz: f64, x: f64) -> f64 {
    coords
        .iter()
        .zip(mass)
        .map(|(z, m)| m * ((x - (z - 0.5 * dz)) / dz).clamp(0.0, 1.0))
        .sum()
}

/// Kolmogorov distance between the one-particle detection statistics along
/// `surface` computed in the lab frame and in a frame boosted by `rapidity`
/// (boosted data and boosted staircase), compared as functions of the lab
/// position of the surface point.
pub fn frame_independence_gap(
    packet: Packet,
    surface: &Hypersurface,
    eps: f64,
    grid: SliceGrid,
    rapidity: f64,
    policy: OverlapPolicy,
) -> Result<f64> {
    let window = (grid.coord(0), grid.coord(grid.n - 1));
    let lab = Dynamics::Free1 { packet, rapidity: None };
    let lab_dist = iterated_collapse_distribution(&lab, &build_schedule(surface, eps, grid, policy)?, Exec::Sequential)?;
    let boost = Boost::new(rapidity);
    let moved = surface.boosted(&boost, window)?;
    let lo = boost.apply(surface.point_at(window.0)).z;
    let hi = boost.apply(surface.point_at(window.1)).z;
    let moved_grid = SliceGrid::covering(lo, hi, grid.dz);
    let frame = Dynamics::Free1 { packet, rapidity: Some(rapidity) };
    let frame_dist = iterated_collapse_distribution(&frame, &build_schedule(&moved, eps, moved_grid, policy)?, Exec::Sequential)?;
    let inv = boost.inverse();
    let lab_coords: Vec<f64> = (0..grid.n).map(|i| grid.coord(i)).collect();
    let frame_coords: Vec<f64> = (0..moved_grid.n).map(|i| inv.apply(moved.point_at(moved_grid.coord(i))).z).collect();
    // boosted cells map to lab segments of varying length; use their
    // midpoints as nodes and the local spacing as the width
    let mut gap = 0.0f64;
    let mut acc = 0.0;
    for (k, (z, m)) in frame_coords.iter().zip(&frame_dist.joint).enumerate() {
        acc += m;
        let right = if k + 1 < frame_coords.len() { 0.5 * (z + frame_coords[k + 1]) } else { *z };
        let lab_cdf = cdf_at(&lab_coords, &lab_dist.joint, grid.dz, right);
        gap = gap.max((acc - lab_cdf).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};

    fn packet(center: f64, width: f64, spinor: [C64; 2]) -> Packet {
        Packet::new(center, width, 0.0, spinor)
    }

    fn mixed() -> [C64; 2] {
        [c(0.8, 0.0), c(0.0, 0.6)]
    }

    #[test]
    fn flat_surface_is_one_piece() {
        let grid = SliceGrid::covering(-4.0, 4.0, 0.05);
        let s = build_schedule(&Hypersurface::flat(1.0), 0.1, grid, OverlapPolicy::default()).unwrap();
        assert_eq!(s.pieces.len(), 1);
        assert_eq!((s.pieces[0].start, s.pieces[0].end), (0, grid.n));
    }

    #[test]
    fn lightlike_surface_is_rejected() {
        assert!(Hypersurface::tilted(2.0, 1.0, -2.0, 2.0).is_err());
        let grid = SliceGrid::covering(-4.0, 4.0, 0.05);
        assert!(build_schedule(&Hypersurface::flat(1.0), 0.125, grid, OverlapPolicy::default()).is_err());
    }

    #[test]
    fn tilted_staircase_passes_coverage_audit() {
        let grid = SliceGrid::covering(-6.0, 6.0, 0.025);
        let surface = Hypersurface::tilted(2.0, 0.5, -3.0, 3.0).unwrap();
        for policy in [OverlapPolicy::ExtendLater, OverlapPolicy::ExtendEarlier] {
            let s = build_schedule(&surface, 0.1, grid, policy).unwrap();
            assert!(s.pieces.len() > 20);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
            for _ in 0..500 {
                let mut p = SpacetimePoint::new(0.0, rng.gen_range(-5.0..5.0));
                let mut curve = vec![p];
                while p.t < 4.0 {
                    let dt = rng.gen_range(0.01..0.2);
                    p = SpacetimePoint::new(p.t + dt, p.z + rng.gen_range(-0.999..0.999) * dt);
                    curve.push(p);
                }
                if p.z.abs() < 5.5 {
                    assert!(s.curve_is_detected(&curve), "{policy:?} missed {curve:?}");
                }
            }
            // without overlaps the audit must object
            let mut bare = s.clone();
            for (p, run) in bare.pieces.iter_mut().zip(runs(&s)) {
                *p = run;
            }
            assert!(bare.coverage_audit().is_err());
        }
    }

    fn runs(s: &DetectionSchedule) -> Vec<DetectorPiece> {
        let mut out: Vec<DetectorPiece> = Vec::new();
        for (i, &level) in s.base_levels.iter().enumerate() {
            match out.last_mut() {
                Some(r) if r.level == level => r.end = i + 1,
                _ => out.push(DetectorPiece { level, time: level as f64 * s.eps, start: i, end: i + 1 }),
            }
        }
        out.sort_by(|p, q| p.level.cmp(&q.level).then(p.start.cmp(&q.start)));
        out
    }

    #[test]
    fn flat_surface_reproduces_born_exactly() {
        // collapse reads cell centres, Born integrates cells: the only gap is
        // the midpoint-rule bias, which must shrink as dz^2
        let d = Dynamics::Free1 { packet: packet(0.0, 0.7, mixed()), rapidity: None };
        let surface = Hypersurface::flat(1.5);
        let gap = |dz: f64| {
            let grid = SliceGrid::covering(-8.0, 8.0, dz);
            let s = build_schedule(&surface, 0.1, grid, OverlapPolicy::default()).unwrap();
            let dist = iterated_collapse_distribution(&d, &s, Exec::Sequential).unwrap();
            assert_eq!(s.pieces.len(), 1);
            assert!((dist.total_probability() - 1.0).abs() < 1e-9);
            let born = born_distribution(&d, &surface, grid, Exec::Sequential).unwrap();
            compare_to_born(&dist, &born, grid, 0.0)
        };
        let (coarse, fine) = (gap(0.025), gap(0.0125));
        assert!(coarse < 1e-4, "{coarse}");
        assert!((coarse / fine - 4.0).abs() < 0.3, "{coarse} {fine}");
    }

    #[test]
    fn right_mover_is_caught_where_it_crosses() {
        let grid = SliceGrid::covering(-8.0, 8.0, 0.025);
        let d = Dynamics::Free1 { packet: packet(-2.0, 0.4, [c(1.0, 0.0), ZERO]), rapidity: None };
        // rises to the left, far from the packet on the right side
        let surface = Hypersurface::new(vec![[-6.0, 4.0], [6.0, 1.0]]).unwrap();
        let s = build_schedule(&surface, 0.05, grid, OverlapPolicy::default()).unwrap();
        let dist = iterated_collapse_distribution(&d, &s, Exec::Sequential).unwrap();
        assert!((dist.total_probability() - 1.0).abs() < 1e-6);
        // crossing near t = 2.2, z = 0.2
        let crossed: f64 = s.pieces.iter().zip(&dist.piece_mass).filter(|(p, _)| (p.time - 2.2).abs() < 0.5).map(|(_, m)| m).sum();
        assert!(crossed > 0.999, "{crossed}");
    }

    #[test]
    fn tilted_surface_converges_to_born() {
        let grid = SliceGrid::covering(-10.0, 10.0, 0.0125);
        let d = Dynamics::Free1 { packet: packet(0.0, 1.0, mixed()), rapidity: None };
        let surface = Hypersurface::tilted(2.0, 0.5, -3.0, 3.0).unwrap();
        let rows = refinement_study(&d, &surface, grid, 0.2, 3, 0.25, OverlapPolicy::default(), Exec::Sequential).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].tv_distance < w[0].tv_distance, "{rows:?}");
        }
        for r in &rows {
            assert!((r.total_probability - 1.0).abs() < 1e-6);
        }
        assert!(rows[2].tv_distance < 0.02, "{rows:?}");
    }

    #[test]
    fn boosted_frame_gives_the_same_statistics() {
        let grid = SliceGrid::covering(-10.0, 10.0, 0.0125);
        let surface = Hypersurface::tilted(2.0, 0.5, -3.0, 3.0).unwrap();
        let gap = frame_independence_gap(packet(0.0, 1.0, mixed()), &surface, 0.05, grid, 0.3, OverlapPolicy::default()).unwrap();
        assert!(gap < 0.02, "{gap}");
    }

    #[test]
    fn bloch_pair_factorizes() {
        let grid = SliceGrid::covering(-10.0, 10.0, 0.05);
        let d = Dynamics::Bloch2 { first: packet(-4.5, 0.5, mixed()), second: packet(4.5, 0.5, mixed()) };
        let surface = Hypersurface::new(vec![[-1.5, 1.0], [1.5, 2.0]]).unwrap();
        let s = build_schedule(&surface, 0.1, grid, OverlapPolicy::default()).unwrap();
        let dist = iterated_collapse_distribution(&d, &s, Exec::default()).unwrap();
        assert!((dist.total_probability() - 1.0).abs() < 1e-6);
        assert!(dist.mutual_information(4) < 1e-9);
        let born = born_distribution(&d, &surface, grid, Exec::default()).unwrap();
        let tv = compare_to_born(&dist, &born, grid, 0.25);
        assert!(tv < 1e-3, "{tv}");
    }

    #[test]
    fn zero_range_pair_after_collision_matches_born() {
        use crate::zerorange::InitialData2P;
        let grid = SliceGrid::covering(-10.0, 10.0, 0.05);
        let theta = 0.7;
        let model = ZeroRangeModel::new(theta, InitialData2P::head_on(4.0, 0.3, mixed(), theta).unwrap()).unwrap();
        let d = Dynamics::ZeroRange(model);
        // the packets meet near t = 2; the surface lies entirely after that
        let surface = Hypersurface::new(vec![[-2.0, 3.0], [2.0, 4.0]]).unwrap();
        let born = born_distribution(&d, &surface, grid, Exec::default()).unwrap();
        assert!((born.iter().sum::<f64>() - 1.0).abs() < 1e-3);
        let tvs: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&eps| {
                let s = build_schedule(&surface, eps, grid, OverlapPolicy::default()).unwrap();
                let dist = iterated_collapse_distribution(&d, &s, Exec::default()).unwrap();
                assert!((dist.total_probability() - 1.0).abs() < 1e-6);
                compare_to_born(&dist, &born, grid, 0.25)
            })
            .collect();
        assert!(tvs[1] < tvs[0] && tvs[1] < 0.02, "{tvs:?}");
    }
}
