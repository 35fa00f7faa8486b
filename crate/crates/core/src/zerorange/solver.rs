use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::linalg::C64;
use crate::spacetime::{classify, ConfigClass, Separation, SpacetimePoint};

use super::initial::{GridSamples, InitialData2P};

/// Side of the collision set: `Below` is the limit `z1 → z2` from
/// `z1 < z2`, `Above` from `z1 > z2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

impl Side {
    fn of(dz: f64) -> Option<Side> {
        if dz < 0.0 {
            Some(Side::Below)
        } else if dz > 0.0 {
            Some(Side::Above)
        } else {
            None
        }
    }
}

/// Two massless Dirac particles in 1+1 dimensions with a zero-range
/// interaction given by the phase `θ` on the collision set.
#[derive(Clone, Debug)]
pub struct ZeroRangeModel {
    pub theta: f64,
    pub initial: InitialData2P,
}

impl ZeroRangeModel {
    pub fn new(theta: f64, initial: InitialData2P) -> Result<Self> {
        if !(theta > -std::f64::consts::PI && theta <= std::f64::consts::PI) {
            return domain(format!("theta {theta} outside (-pi, pi]"));
        }
        Ok(ZeroRangeModel { theta, initial })
    }

    /// `φ(t1, z1, t2, z2)` by characteristic tracing. Collision
    /// configurations need `side`; for other configurations it is ignored.
    pub fn evaluate(&self, x1: SpacetimePoint, x2: SpacetimePoint, side: Option<Side>) -> Result<[C64; 4]> {
        match classify(&[x1, x2]) {
            ConfigClass::NonSpacelike => domain("phi is not defined at non-spacelike configurations"),
            ConfigClass::Spacelike => Ok(self.trace(x1, x2, Side::of(x1.z - x2.z).unwrap())),
            ConfigClass::Collision => match side {
                Some(s) => Ok(self.trace(x1, x2, s)),
                None => domain("collision configuration needs a side for the one-sided limit"),
            },
        }
    }

    /// Like [`evaluate`](Self::evaluate) but also accepts lightlike pairs,
    /// returning the boundary value obtained as a limit from inside the
    /// spacelike set.
    pub fn evaluate_closure(&self, x1: SpacetimePoint, x2: SpacetimePoint, side: Option<Side>) -> Result<[C64; 4]> {
        if crate::spacetime::separation(&x1, &x2) == Separation::Lightlike {
            return Ok(self.trace(x1, x2, Side::of(x1.z - x2.z).unwrap()));
        }
        self.evaluate(x1, x2, side)
    }

    fn trace(&self, x1: SpacetimePoint, x2: SpacetimePoint, side: Side) -> [C64; 4] {
        let psi = &self.initial;
        let phase_in = C64::from_polar(1.0, self.theta);
        let phase_out = C64::from_polar(1.0, -self.theta);
        let mut out = [psi.eval(x1.z - x1.t, x2.z - x2.t)[0], C64::default(), C64::default(), psi.eval(x1.z + x1.t, x2.z + x2.t)[3]];
        for (comp, v1) in [(1usize, 1.0), (2usize, -1.0)] {
            let p1 = x1.z - v1 * x1.t;
            let p2 = x2.z + v1 * x2.t;
            let swapped = match side {
                Side::Below => p1 > p2,
                Side::Above => p1 < p2,
            };
            out[comp] = if swapped {
                let other = 3 - comp;
                // φ_2 = e^{-iθ} φ_3 below, e^{+iθ} above; φ_3 the inverse.
                let phase = match (comp, side) {
                    (1, Side::Below) | (2, Side::Above) => phase_out,
                    _ => phase_in,
                };
                phase * psi.eval(p2, p1)[other]
            } else {
                psi.eval(p1, p2)[comp]
            };
        }
        out
    }

    /// Equal-time slice on a square grid. Diagonal nodes carry the outgoing
    /// limits: component 2 from above, component 3 from below.
    pub fn equal_time_slice(&self, t: f64, grid: &SliceGrid, exec: Exec) -> GridSamples {
        let n = grid.n;
        let rows = exec.map_range(n, |i| {
            let z1 = grid.coord(i);
            (0..n)
                .map(|j| {
                    let z2 = grid.coord(j);
                    let (a, b) = (SpacetimePoint::new(t, z1), SpacetimePoint::new(t, z2));
                    if i == j {
                        let above = self.trace(a, b, Side::Above);
                        let below = self.trace(a, b, Side::Below);
                        [above[0], above[1], below[2], above[3]]
                    } else {
                        self.trace(a, b, Side::of(z1 - z2).unwrap())
                    }
                })
                .collect::<Vec<_>>()
        });
        GridSamples { z0: grid.z0, dz: grid.dz, n, values: rows.into_iter().flatten().collect() }
    }
}

/// Square grid `z0 + i dz`, `i < n`, used on both particle axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceGrid {
    pub z0: f64,
    pub dz: f64,
    pub n: usize,
}

impl SliceGrid {
    /// Grid covering `[lo, hi]` with spacing `dz` (`hi` rounded up).
    pub fn covering(lo: f64, hi: f64, dz: f64) -> Self {
        let n = ((hi - lo) / dz).ceil() as usize + 1;
        SliceGrid { z0: lo, dz, n }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.z0 + i as f64 * self.dz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE, ZERO};
    use crate::zerorange::initial::{Packet, ProductTerm};

    fn pt(t: f64, z: f64) -> SpacetimePoint {
        SpacetimePoint::new(t, z)
    }

    fn model(theta: f64, spin1: [C64; 2], spin2: [C64; 2]) -> ZeroRangeModel {
        let a = Packet::new(-4.0, 0.5, 0.7, spin1);
        let b = Packet::new(4.0, 0.5, -0.2, spin2);
        let data = InitialData2P::packets(vec![ProductTerm { weight: [1.0, 0.0], first: a, second: b }], theta).unwrap();
        ZeroRangeModel::new(theta, data).unwrap()
    }

    #[test]
    fn right_movers_are_transported() {
        let m = model(1.0, [ONE, ZERO], [ONE, ZERO]);
        for (x1, x2) in [(pt(0.3, -1.0), pt(1.2, 2.0)), (pt(2.0, -3.0), pt(-0.5, 4.0)), (pt(5.0, 1.0), pt(5.0, -1.0))] {
            let v = m.evaluate(x1, x2, None).unwrap();
            let expect = m.initial.eval(x1.z - x1.t, x2.z - x2.t)[0];
            assert_eq!(v[0], expect);
            assert_eq!([v[1], v[2], v[3]], [ZERO; 3]);
        }
    }

    #[test]
    fn crossing_component_picks_up_phase() {
        let theta = 0.9;
        // component 3 only: particle 1 at +4 moving left, particle 2 at -4 moving right
        let a = Packet::new(4.0, 0.5, 0.0, [ZERO, ONE]);
        let b = Packet::new(-4.0, 0.5, 0.0, [ONE, ZERO]);
        let data = InitialData2P::packets(vec![ProductTerm { weight: [1.0, 0.0], first: a, second: b }], theta).unwrap();
        let m = ZeroRangeModel::new(theta, data).unwrap();
        let t = 4.5;
        let (z1, z2) = (0.6, -0.2);
        assert!(z1 - z2 <= 2.0 * t);
        let v = m.evaluate(pt(t, z1), pt(t, z2), None).unwrap();
        let expect = C64::from_polar(1.0, theta) * m.initial.eval(z2 + t, z1 - t)[2];
        assert!((v[1] - expect).norm() < 1e-15);
        assert!(expect.norm() > 1e-3);
    }

    #[test]
    fn no_crossing_is_theta_independent() {
        let a = model(0.4, [ONE, ZERO], [ZERO, ONE]);
        let b = model(-2.0, [ONE, ZERO], [ZERO, ONE]);
        // packets approach but have not met yet at these configurations
        for (x1, x2) in [(pt(1.0, -3.5), pt(0.8, 3.2)), (pt(2.0, -1.9), pt(1.5, 2.5))] {
            let va = a.evaluate(x1, x2, None).unwrap();
            let vb = b.evaluate(x1, x2, None).unwrap();
            assert_eq!(va, vb);
            assert_eq!(va[1], a.initial.eval(x1.z - x1.t, x2.z + x2.t)[1]);
        }
    }

    #[test]
    fn collision_needs_side_and_timelike_is_rejected() {
        let m = model(0.1, [ONE, ZERO], [ZERO, ONE]);
        assert!(m.evaluate(pt(1.0, 0.0), pt(1.0, 0.0), None).is_err());
        assert!(m.evaluate(pt(1.0, 0.0), pt(1.0, 0.0), Some(Side::Below)).is_ok());
        assert!(m.evaluate(pt(0.0, 0.0), pt(2.0, 1.0), None).is_err());
        assert!(m.evaluate(pt(0.0, 0.0), pt(1.0, 1.0), None).is_err());
        assert!(m.evaluate_closure(pt(0.0, 0.0), pt(1.0, 1.0), None).is_ok());
        assert!(ZeroRangeModel::new(-std::f64::consts::PI, m.initial.clone()).is_err());
    }

    #[test]
    fn slice_at_zero_is_initial_data() {
        let m = model(0.3, [c(0.6, 0.0), c(0.0, 0.8)], [c(0.8, 0.0), c(0.6, 0.0)]);
        let grid = SliceGrid::covering(-6.0, 6.0, 0.5);
        let s = m.equal_time_slice(0.0, &grid, Exec::Sequential);
        for i in 0..grid.n {
            for j in 0..grid.n {
                assert_eq!(s.at(i, j), m.initial.eval(grid.coord(i), grid.coord(j)));
            }
        }
    }
}
