use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::linalg::{C64, ZERO};

use super::initial::GridSamples;
use super::solver::{SliceGrid, ZeroRangeModel};

/// Single-time lattice evolution with `dt = dz`.
///
/// Every component is shifted one cell along its characteristic per step.
/// Components 2 and 3 that would jump over the diagonal are reflected into
/// the other component with the boundary phase instead; diagonal cells hold
/// the outgoing values (component 2 above, component 3 below). The step is
/// a permutation of cells with unit phases, so the grid norm is conserved
/// up to outflow through the window edge.
pub fn lattice_oracle(model: &ZeroRangeModel, grid: &SliceGrid, t_final: f64, exec: Exec) -> Result<GridSamples> {
    if grid.dz <= 0.0 || grid.n < 2 {
        return domain("grid needs dz > 0 and at least two nodes");
    }
    let steps_f = t_final / grid.dz;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps_f.abs().max(1.0) || steps < 0.0 {
        return domain(format!("t_final {t_final} is not a nonnegative multiple of dz {}", grid.dz));
    }
    let n = grid.n;
    let mut cur: Vec<[C64; 4]> = exec
        .map_range(n * n, |k| model.initial.eval(grid.coord(k / n), grid.coord(k % n)));
    let phase = C64::from_polar(1.0, model.theta);
    for _ in 0..steps as usize {
        cur = step(&cur, n, phase, exec);
    }
    Ok(GridSamples { z0: grid.z0, dz: grid.dz, n, values: cur })
}

pub(crate) fn step(cur: &[[C64; 4]], n: usize, phase: C64, exec: Exec) -> Vec<[C64; 4]> {
    let get = |i: isize, j: isize, c: usize| -> C64 {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            ZERO
        } else {
            cur[i as usize * n + j as usize][c]
        }
    };
    let rows = exec.map_range(n, |i| {
        let i = i as isize;
        (0..n as isize)
            .map(|j| {
                let d = j - i;
                let c2 = if d == -1 || d == 0 { phase * get(j + 1, i - 1, 2) } else { get(i - 1, j + 1, 1) };
                let c3 = if d == 1 || d == 0 { phase * get(j - 1, i + 1, 1) } else { get(i + 1, j - 1, 2) };
                [get(i - 1, j - 1, 0), c2, c3, get(i + 1, j + 1, 3)]
            })
            .collect::<Vec<_>>()
    });
    rows.into_iter().flatten().collect()
}
