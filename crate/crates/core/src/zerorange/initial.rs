use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{c, C64, ZERO};
use crate::quadrature::Composite;

/// One-particle Gaussian packet
/// `χ (2πσ²)^{-1/4} exp(-(z - z0)²/(4σ²) + i k z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
    /// Spinor weights as `[re, im]` pairs.
    pub spinor: [[f64; 2]; 2],
}

impl Packet {
    pub fn new(center: f64, width: f64, momentum: f64, spinor: [C64; 2]) -> Self {
        Packet {
            center,
            width,
            momentum,
            spinor: [[spinor[0].re, spinor[0].im], [spinor[1].re, spinor[1].im]],
        }
    }

    pub fn spinor(&self) -> [C64; 2] {
        [c(self.spinor[0][0], self.spinor[0][1]), c(self.spinor[1][0], self.spinor[1][1])]
    }

    pub fn envelope(&self, z: f64) -> C64 {
        let s2 = self.width * self.width;
        let amp = (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (-(z - self.center).powi(2) / (4.0 * s2)).exp();
        C64::from_polar(amp, self.momentum * z)
    }
}

/// `weight · (a ⊗ b)(z1, z2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub weight: [f64; 2],
    pub first: Packet,
    pub second: Packet,
}

impl ProductTerm {
    pub fn eval(&self, z1: f64, z2: f64) -> [C64; 4] {
        let w = c(self.weight[0], self.weight[1]) * self.first.envelope(z1) * self.second.envelope(z2);
        let (a, b) = (self.first.spinor(), self.second.spinor());
        [w * a[0] * b[0], w * a[0] * b[1], w * a[1] * b[0], w * a[1] * b[1]]
    }
}

/// Samples on a uniform square grid `z0 + i dz`, `i < n`, row-major in `z1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSamples {
    pub z0: f64,
    pub dz: f64,
    pub n: usize,
    pub values: Vec<[C64; 4]>,
}

impl GridSamples {
    pub fn at(&self, i: usize, j: usize) -> [C64; 4] {
        self.values[i * self.n + j]
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.z0 + i as f64 * self.dz
    }

    /// Bilinear interpolation, zero outside the grid.
    pub fn bilinear(&self, z1: f64, z2: f64) -> [C64; 4] {
        let u = (z1 - self.z0) / self.dz;
        let v = (z2 - self.z0) / self.dz;
        let last = (self.n - 1) as f64;
        if !(0.0..=last).contains(&u) || !(0.0..=last).contains(&v) {
            return [ZERO; 4];
        }
        let i = (u.floor() as usize).min(self.n.saturating_sub(2));
        let j = (v.floor() as usize).min(self.n.saturating_sub(2));
        let (fu, fv) = (u - i as f64, v - j as f64);
        let mut out = [ZERO; 4];
        for (di, wi) in [(0, 1.0 - fu), (1, fu)] {
            for (dj, wj) in [(0, 1.0 - fv), (1, fv)] {
                let s = self.at(i + di, j + dj);
                for k in 0..4 {
                    out[k] += s[k] * (wi * wj);
                }
            }
        }
        out
    }

    /// Rectangle-rule norm `Σ |ψ|² dz²`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().flat_map(|v| v.iter()).map(|x| x.norm_sqr()).sum::<f64>() * self.dz * self.dz
    }
}

pub type AmplitudeFn = Arc<dyn Fn(f64, f64) -> [C64; 4] + Send + Sync>;

/// Equal-time initial datum `ψ0(z1, z2)` for the two-particle model.
#[derive(Clone)]
pub enum InitialData2P {
    Packets(Vec<ProductTerm>),
    Grid(GridSamples),
    /// Arbitrary closure; `support` bounds the region used for the
    /// normalization check.
    Function { f: AmplitudeFn, support: (f64, f64) },
}

impl fmt::Debug for InitialData2P {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData2P::Packets(t) => f.debug_tuple("Packets").field(t).finish(),
            InitialData2P::Grid(g) => write!(f, "Grid({}x{}, dz={})", g.n, g.n, g.dz),
            InitialData2P::Function { support, .. } => write!(f, "Function(support={support:?})"),
        }
    }
}

/// Tolerance on `|‖ψ0‖² - 1|` accepted at construction.
pub const NORM_TOL: f64 = 1e-6;
/// Tolerance on the boundary-condition mismatch of the data on the diagonal,
/// relative to the largest sampled amplitude.
pub const BC_TOL: f64 = 1e-6;

impl InitialData2P {
    /// Packet data, checked for normalization and the boundary condition.
    pub fn packets(terms: Vec<ProductTerm>, theta: f64) -> Result<Self> {
        if terms.is_empty() {
            return domain("at least one product term is required");
        }
        if terms.iter().any(|t| !(t.first.width > 0.0 && t.second.width > 0.0)) {
            return domain("packet widths must be positive");
        }
        let data = InitialData2P::Packets(terms);
        data.validate(theta)?;
        Ok(data)
    }

    pub fn grid(samples: GridSamples, theta: f64) -> Result<Self> {
        if samples.n < 2 || samples.values.len() != samples.n * samples.n || samples.dz <= 0.0 {
            return domain("grid samples must be an n x n array with n >= 2 and dz > 0");
        }
        let data = InitialData2P::Grid(samples);
        data.validate(theta)?;
        Ok(data)
    }

    pub fn function(f: AmplitudeFn, support: (f64, f64), theta: f64) -> Result<Self> {
        let data = InitialData2P::Function { f, support };
        data.validate(theta)?;
        Ok(data)
    }

    /// Unchecked construction, for data that is deliberately not normalized.
    pub fn unchecked_packets(terms: Vec<ProductTerm>) -> Self {
        InitialData2P::Packets(terms)
    }

    /// Two packets moving toward each other, particle 1 at `-separation/2`
    /// and particle 2 at `+separation/2`, both with spinor `spinor`.
    pub fn head_on(separation: f64, width: f64, spinor: [C64; 2], theta: f64) -> Result<Self> {
        let n = (spinor[0].norm_sqr() + spinor[1].norm_sqr()).sqrt();
        let s = [spinor[0] / n, spinor[1] / n];
        let a = Packet::new(-0.5 * separation, width, 0.0, s);
        let b = Packet::new(0.5 * separation, width, 0.0, s);
        InitialData2P::packets(vec![ProductTerm { weight: [1.0, 0.0], first: a, second: b }], theta)
    }

    pub fn eval(&self, z1: f64, z2: f64) -> [C64; 4] {
        match self {
            InitialData2P::Packets(terms) => {
                let mut out = [ZERO; 4];
                for t in terms {
                    let v = t.eval(z1, z2);
                    for k in 0..4 {
                        out[k] += v[k];
                    }
                }
                out
            }
            InitialData2P::Grid(g) => g.bilinear(z1, z2),
            InitialData2P::Function { f, .. } => f(z1, z2),
        }
    }

    /// Interval outside which the datum is negligible.
    pub fn support(&self) -> (f64, f64) {
        match self {
            InitialData2P::Packets(terms) => {
                let lo = terms
                    .iter()
                    .flat_map(|t| [t.first.center - 10.0 * t.first.width, t.second.center - 10.0 * t.second.width])
                    .fold(f64::INFINITY, f64::min);
                let hi = terms
                    .iter()
                    .flat_map(|t| [t.first.center + 10.0 * t.first.width, t.second.center + 10.0 * t.second.width])
                    .fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            InitialData2P::Grid(g) => (g.z0, g.coord(g.n - 1)),
            InitialData2P::Function { support, .. } => *support,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        if let InitialData2P::Grid(g) = self {
            return g.norm_sqr();
        }
        let (lo, hi) = self.support();
        let width = match self {
            InitialData2P::Packets(terms) => terms
                .iter()
                .flat_map(|t| [t.first.width, t.second.width])
                .fold(f64::INFINITY, f64::min)
                .min(0.5),
            _ => 0.1,
        };
        let rule = Composite::new(lo, hi, &[], width, 10);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(z1, w1)| {
                w1 * rule.integrate(|z2| self.eval(*z1, z2).iter().map(|v| v.norm_sqr()).sum())
            })
            .sum()
    }

    /// Largest violation of `ψ_2 = e^{∓iθ} ψ_3` on the diagonal over the
    /// support, for continuous data (both one-sided limits coincide).
    pub fn boundary_mismatch(&self, theta: f64) -> f64 {
        let (lo, hi) = self.support();
        let n = 2001;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..n {
            let z = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = self.eval(z, z);
            scale = scale.max(v.iter().map(|x| x.norm()).fold(0.0, f64::max));
            let below = (v[1] - C64::from_polar(1.0, -theta) * v[2]).norm();
            let above = (v[1] - C64::from_polar(1.0, theta) * v[2]).norm();
            worst = worst.max(below).max(above);
        }
        let peak = self.peak_amplitude();
        if peak == 0.0 {
            worst
        } else {
            worst / peak.max(scale)
        }
    }

    fn peak_amplitude(&self) -> f64 {
        let (lo, hi) = self.support();
        let n = 201;
        let mut peak = 0.0f64;
        for i in 0..n {
            let z1 = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let z2 = lo + (hi - lo) * j as f64 / (n - 1) as f64;
                peak = peak.max(self.eval(z1, z2).iter().map(|x| x.norm()).fold(0.0, f64::max));
            }
        }
        peak
    }

    fn validate(&self, theta: f64) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return domain(format!("initial datum has squared norm {norm}, expected 1"));
        }
        let bc = self.boundary_mismatch(theta);
        if bc > BC_TOL {
            return domain(format!("initial datum violates the collision boundary condition by {bc:e}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn right_mover(center: f64) -> Packet {
        Packet::new(center, 0.5, 0.0, [ONE, ZERO])
    }

    #[test]
    fn packets_are_normalized() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = InitialData2P::head_on(8.0, 0.5, [c(h, 0.0), c(h, 0.0)], 0.3).unwrap();
        assert!((d.norm_sqr() - 1.0).abs() < 1e-12);
        let unnormalized = vec![ProductTerm { weight: [2.0, 0.0], first: right_mover(-4.0), second: right_mover(4.0) }];
        assert!(InitialData2P::packets(unnormalized, 0.0).is_err());
    }

    #[test]
    fn overlapping_mixed_data_violates_boundary_condition() {
        let a = Packet::new(0.0, 0.5, 0.0, [ONE, ZERO]);
        let b = Packet::new(0.0, 0.5, 0.0, [ZERO, ONE]);
        let terms = vec![ProductTerm { weight: [1.0, 0.0], first: a, second: b }];
        assert!(InitialData2P::packets(terms, 0.0).is_err());
    }

    #[test]
    fn bilinear_reproduces_nodes_and_linear_functions() {
        let n = 11;
        let values = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let v = c(1.0 + 0.5 * i as f64 - 0.25 * j as f64, 0.1 * j as f64);
                [v, ZERO, ZERO, v]
            })
            .collect();
        let g = GridSamples { z0: -1.0, dz: 0.2, n, values };
        let at_node = g.bilinear(g.coord(3), g.coord(7));
        assert!((at_node[0] - g.at(3, 7)[0]).norm() < 1e-14);
        let z1 = -0.37;
        let z2 = 0.51;
        let (u, v) = ((z1 + 1.0) / 0.2, (z2 + 1.0) / 0.2);
        let expect = c(1.0 + 0.5 * u - 0.25 * v, 0.1 * v);
        assert!((g.bilinear(z1, z2)[3] - expect).norm() < 1e-13);
        assert_eq!(g.bilinear(5.0, 0.0), [ZERO; 4]);
    }
}
