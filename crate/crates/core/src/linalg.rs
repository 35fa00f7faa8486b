//! Small linear-algebra toolkit: compressed sparse rows, the action of
//! `exp(-iHt)` on a vector, dense Hermitian exponentials and a few vector
//! helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    norm_sqr(v).sqrt()
}

/// `<a|b>` (conjugate-linear in the first argument).
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Compressed sparse row matrix over `C64`.
#[derive(Clone, Debug)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        // drop cancelled entries
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(vals) {
            if v != ZERO {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n_rows, n_cols, row_ptr, col_idx: keep_cols, vals: keep_vals }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Csr::from_triplets(n_rows, n_cols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Csr::from_triplets(n, n, (0..n).map(|i| (i, i, ONE)).collect())
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.vals[k]))
        })
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Csr {
        Csr::from_triplets(
            self.n_cols,
            self.n_rows,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Csr {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let trip = self.triplets().chain(other.triplets()).collect();
        Csr::from_triplets(self.n_rows, self.n_cols, trip)
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Csr) -> Csr {
        assert_eq!(self.n_cols, other.n_rows);
        let mut trip = Vec::new();
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.col_idx[k];
                let a = self.vals[k];
                for kk in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    trip.push((r, other.col_idx[kk], a * other.vals[kk]));
                }
            }
        }
        Csr::from_triplets(self.n_rows, other.n_cols, trip)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Upper bound on the spectral norm: `sqrt(||A||_1 ||A||_inf)`.
    pub fn norm_bound(&self) -> f64 {
        let row_max = (0..self.n_rows)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut col = vec![0.0; self.n_cols];
        for (_, c, v) in self.triplets() {
            col[c] += v.norm();
        }
        let col_max = col.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.add(&self.adjoint().scale(-ONE)).max_abs()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

/// `exp(-i H t) v` for Hermitian `H` by a scaled Taylor series.
///
/// The interval is split so that `||H dt|| <= 1`; on every substep terms
/// are summed until they fall below double precision relative to the
/// partial sum.
pub fn expmv(h: &Csr, t: f64, v: &[C64]) -> Vec<C64> {
    expmv_with_norm(h, h.norm_bound(), t, v)
}

/// As [`expmv`] with a precomputed norm bound.
pub fn expmv_with_norm(h: &Csr, h_norm: f64, t: f64, v: &[C64]) -> Vec<C64> {
    if t == 0.0 || h_norm == 0.0 {
        return v.to_vec();
    }
    let steps = ((t.abs() * h_norm).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let coef = C64::new(0.0, -dt);
    let mut acc = v.to_vec();
    let mut term = vec![ZERO; v.len()];
    let mut next = vec![ZERO; v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&acc);
        let scale = norm(&acc).max(f64::MIN_POSITIVE);
        for k in 1..80 {
            h.matvec_into(&term, &mut next);
            let f = coef / k as f64;
            let mut tn = 0.0;
            for (t_i, n_i) in term.iter_mut().zip(&next) {
                *t_i = n_i * f;
                tn += t_i.norm_sqr();
            }
            for (a, t_i) in acc.iter_mut().zip(&term) {
                *a += t_i;
            }
            if tn.sqrt() <= 1e-17 * scale {
                break;
            }
        }
    }
    acc
}

/// Dense Hermitian matrix held in diagonal form for repeated exponentials.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEig {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let eig = nalgebra::linalg::SymmetricEigen::new(h.clone());
        HermitianEig { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    /// `exp(-i H t)` as a dense matrix.
    pub fn exp_minus_i(&self, t: f64) -> DMatrix<C64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let ph = C64::from_polar(1.0, -self.values[j] * t);
            for i in 0..n {
                scaled[(i, j)] *= ph;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// `exp(-i H t) v`.
    pub fn apply(&self, t: f64, v: &[C64]) -> Vec<C64> {
        let n = self.values.len();
        let vv = nalgebra::DVector::from_column_slice(v);
        let mut coeffs = self.vectors.adjoint() * vv;
        for j in 0..n {
            coeffs[j] *= C64::from_polar(1.0, -self.values[j] * t);
        }
        (&self.vectors * coeffs).iter().copied().collect()
    }
}

/// Bessel functions `J_0(x) ..= J_{n-1}(x)` for `x >= 0` by Miller's
/// backward recurrence, normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if x == 0.0 {
        if n > 0 {
            out[0] = 1.0;
        }
        return out;
    }
    let start = n.max(x as usize) + 40 + (x.sqrt() * 4.0) as usize;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut all = vec![0.0; start + 1];
    for k in (0..=start).rev() {
        all[k] = cur;
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            // rescale to stay finite
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in all.iter_mut().skip(k) {
                *v *= 1e-250;
            }
        }
    }
    for k in 0..n {
        out[k] = all[k] / norm;
    }
    out
}

/// `exp(-i H t) v` by a Chebyshev expansion with Bessel coefficients, using
/// `h_norm` as the spectral bound. Independent of the Taylor scheme in
/// [`expmv`]; used as a cross-check oracle.
pub fn chebyshev_expmv(h: &Csr, h_norm: f64, t: f64, v: &[C64]) -> Vec<C64> {
    let rho = h_norm.max(1e-300);
    let x = rho * t.abs();
    let terms = (x + 10.0 * x.cbrt() + 30.0).ceil() as usize;
    let j = bessel_j(terms, x);
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let mut prev = v.to_vec();
    let mut cur = h.matvec(v);
    cur.iter_mut().for_each(|z| *z /= rho);
    let mut acc: Vec<C64> = v.iter().map(|z| z * j[0]).collect();
    let mut phase = C64::new(0.0, -sign);
    let mut scratch = vec![ZERO; v.len()];
    for (k, jk) in j.iter().enumerate().skip(1) {
        let coef = phase * (2.0 * jk);
        for (a, z) in acc.iter_mut().zip(&cur) {
            *a += coef * z;
        }
        if k + 1 == terms {
            break;
        }
        h.matvec_into(&cur, &mut scratch);
        for (s, p) in scratch.iter_mut().zip(&prev) {
            *s = *s * (2.0 / rho) - p;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut scratch);
        phase *= C64::new(0.0, -sign);
    }
    acc
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Richardson extrapolation to `h -> 0` from values at `h, h/2, h/4`,
/// with the convergence order estimated from the three values. Falls back to
/// the finest value when the sequence is not contracting.
pub fn richardson3(v_h: f64, v_h2: f64, v_h4: f64) -> f64 {
    let d1 = v_h - v_h2;
    let d2 = v_h2 - v_h4;
    if d1.abs() <= f64::EPSILON * v_h.abs().max(1e-300) || d2.abs() >= d1.abs() || d1 * d2 <= 0.0 {
        return v_h4;
    }
    let ratio = d1 / d2; // = 2^p
    v_h4 - d2 / (ratio - 1.0)
}
