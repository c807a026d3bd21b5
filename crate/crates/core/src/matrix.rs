//! Dense real matrices and the singular value decomposition.
//!
//! Storage is row-major. The SVD is the Golub–Kahan–Reinsch algorithm:
//! Householder bidiagonalization followed by implicitly shifted QR on the
//! bidiagonal. The factorization is thin: for an `s x t` matrix with
//! `k = min(s, t)`, `u` is `s x k`, `v` is `t x k` and there are `k`
//! singular values.

use std::fmt;

use crate::error::{Error, Result};

/// Singular values at or below this fraction of `sigma_1` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Upper bound on implicit QR steps spent deflating a single singular value.
pub const MAX_QR_STEPS_PER_VALUE: usize = 60;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::dims(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(n_rows, n_cols, data)
    }

    /// Entries are produced by arithmetic on finite inputs, so only the
    /// length is checked.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec_unchecked(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|x| c * x).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// `max |self - other|` over all entries.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "cannot compare {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "matmul of {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, p) = (self.rows, other.cols);
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let out_row = &mut out[i * p..(i + 1) * p];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix::from_vec_unchecked(n, p, out))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.cols != x.len() {
            return Err(Error::dims(format!(
                "matvec of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵗ · x` without materializing the transpose.
    pub fn transpose_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.rows != x.len() {
            return Err(Error::dims(format!(
                "transpose matvec of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul(b)
}

pub fn matvec(a: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    a.matvec(x)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin singular value decomposition `M = U · diag(sigma) · Vᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: Matrix,
    /// Non-negative, sorted descending.
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma_min(&self) -> f64 {
        *self.sigma.last().expect("at least one singular value")
    }

    /// Number of singular values above `RANK_TOLERANCE * sigma_1`.
    pub fn rank(&self) -> usize {
        let cut = RANK_TOLERANCE * self.sigma_max();
        self.sigma.iter().filter(|&&s| s > cut).count()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.sigma.len() && self.sigma_max() > 0.0
    }

    pub fn reconstruct(&self) -> Matrix {
        let (s, t, k) = (self.u.rows(), self.v.rows(), self.sigma.len());
        Matrix::from_fn(s, t, |i, j| {
            (0..k)
                .map(|l| self.u.get(i, l) * self.sigma[l] * self.v.get(j, l))
                .sum()
        })
    }

    fn inverse_sigma(&self) -> Vec<f64> {
        let cut = RANK_TOLERANCE * self.sigma_max();
        self.sigma
            .iter()
            .map(|&s| if s > cut { 1.0 / s } else { 0.0 })
            .collect()
    }

    /// `V · Σ⁺ · Uᵗ`.
    pub fn pseudo_inverse(&self) -> Matrix {
        let inv = self.inverse_sigma();
        let (s, t) = (self.u.rows(), self.v.rows());
        Matrix::from_fn(t, s, |i, j| {
            inv.iter()
                .enumerate()
                .map(|(l, &w)| self.v.get(i, l) * w * self.u.get(j, l))
                .sum()
        })
    }

    /// `V · Σ⁺ · Uᵗ · y`, cheaper than forming the pseudo-inverse.
    pub fn pseudo_solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut w = self.u.transpose_matvec(y)?;
        for (wi, inv) in w.iter_mut().zip(self.inverse_sigma()) {
            *wi *= inv;
        }
        self.v.matvec(&w)
    }
}

/// Full thin SVD with both singular vector sets.
pub fn svd(m: &Matrix) -> Result<SvdFactors> {
    if m.rows() >= TALL_RATIO * m.cols() {
        // M = QR and R = U_r Σ Vᵗ  ⇒  M = (Q U_r) Σ Vᵗ. The QR sweeps then
        // touch an n x n U instead of the tall one.
        let qr = HouseholderQr::new(m);
        let raw = golub_kahan(&qr.r, true)?;
        let u = qr.apply_q(&raw.u.unwrap());
        Ok(fix_signs(u, raw.sigma, raw.v.unwrap()))
    } else if m.rows() >= m.cols() {
        let raw = golub_kahan(m, true)?;
        let (u, v) = (raw.u.unwrap(), raw.v.unwrap());
        Ok(fix_signs(u, raw.sigma, v))
    } else {
        // Mᵗ = U' Σ V'ᵗ  ⇒  M = V' Σ U'ᵗ
        let raw = svd(&m.transpose())?;
        Ok(fix_signs(raw.v, raw.sigma, raw.u))
    }
}

/// Singular values only, descending.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let raw = if m.rows() >= TALL_RATIO * m.cols() {
        golub_kahan(&HouseholderQr::new(m).r, false)?
    } else if m.rows() >= m.cols() {
        golub_kahan(m, false)?
    } else {
        return singular_values(&m.transpose());
    };
    Ok(raw.sigma)
}

/// `(sigma_1, sigma_min(rows, cols))`.
pub fn sigma_extreme(m: &Matrix) -> Result<(f64, f64)> {
    let s = singular_values(m)?;
    Ok((s[0], s[s.len() - 1]))
}

pub fn pseudo_inverse(m: &Matrix) -> Result<Matrix> {
    Ok(svd(m)?.pseudo_inverse())
}

/// Flips each singular pair so the largest-magnitude entry of every right
/// singular vector is non-negative.
fn fix_signs(mut u: Matrix, sigma: Vec<f64>, mut v: Matrix) -> SvdFactors {
    for l in 0..sigma.len() {
        let mut pivot = 0.0f64;
        for i in 0..v.rows() {
            let x = v.get(i, l);
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        if pivot < 0.0 {
            for i in 0..v.rows() {
                v.data[i * v.cols + l] = -v.data[i * v.cols + l];
            }
            for i in 0..u.rows() {
                u.data[i * u.cols + l] = -u.data[i * u.cols + l];
            }
        }
    }
    SvdFactors { u, sigma, v }
}

/// Row-to-column ratio from which an SVD starts with a QR factorization.
const TALL_RATIO: usize = 2;

/// Householder QR of a tall matrix. Reflector `k` is `I - v_k v_kᵗ` with
/// `v_k` supported on rows `k..`.
struct HouseholderQr {
    reflectors: Vec<Vec<f64>>,
    r: Matrix,
}

impl HouseholderQr {
    fn new(m: &Matrix) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let mut a = ColMajor::from_matrix(m);
        let mut reflectors = Vec::with_capacity(cols);
        let mut r = Matrix::zeros(cols, cols);
        for k in 0..cols {
            let mut v = a.col(k)[k..].to_vec();
            let nrm = norm(&v);
            let alpha = if v[0] > 0.0 { -nrm } else { nrm };
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|x| x * x).sum();
            if vv > 0.0 {
                let scale = (2.0 / vv).sqrt();
                v.iter_mut().for_each(|x| *x *= scale);
                for j in (k + 1)..cols {
                    let col = &mut a.col_mut(j)[k..];
                    let d = dot(&v, col);
                    col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= d * vi);
                }
            }
            r.data[k * cols + k] = if vv > 0.0 { alpha } else { a.col(k)[k] };
            for j in (k + 1)..cols {
                r.data[k * cols + j] = a.col(j)[k];
            }
            reflectors.push(if vv > 0.0 { v } else { vec![0.0; rows - k] });
        }
        Self { reflectors, r }
    }

    /// `Q · [x; 0]` for an `n x c` block `x`.
    fn apply_q(&self, x: &Matrix) -> Matrix {
        let rows = self.reflectors.first().map_or(x.rows(), Vec::len);
        let mut out = ColMajor::zeros(rows, x.cols());
        for j in 0..x.cols() {
            for i in 0..x.rows() {
                out.col_mut(j)[i] = x.get(i, j);
            }
        }
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            for j in 0..x.cols() {
                let col = &mut out.col_mut(j)[k..];
                let d = dot(v, col);
                if d != 0.0 {
                    col.iter_mut().zip(v).for_each(|(c, vi)| *c -= d * vi);
                }
            }
        }
        out.into_matrix(x.cols())
    }
}

struct RawSvd {
    sigma: Vec<f64>,
    u: Option<Matrix>,
    v: Option<Matrix>,
}

/// Column-major scratch matrix used inside the decomposition, where all the
/// inner loops run down columns.
struct ColMajor {
    rows: usize,
    data: Vec<f64>,
}

impl ColMajor {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            data: vec![0.0; rows * cols],
        }
    }

    fn from_matrix(m: &Matrix) -> Self {
        let mut out = Self::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.data[j * m.rows() + i] = m.get(i, j);
            }
        }
        out
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable views of two distinct columns.
    fn col_pair(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert_ne!(a, b);
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            (&mut hi[..r], &mut lo[b * r..(b + 1) * r])
        }
    }

    /// `(col_a, col_b) <- (c·a + s·b, -s·a + c·b)`.
    fn rotate(&mut self, a: usize, b: usize, c: f64, s: f64) {
        let (ca, cb) = self.col_pair(a, b);
        for (x, y) in ca.iter_mut().zip(cb.iter_mut()) {
            let t = c * *x + s * *y;
            *y = -s * *x + c * *y;
            *x = t;
        }
    }

    fn into_matrix(self, cols: usize) -> Matrix {
        let rows = self.rows;
        Matrix::from_fn(rows, cols, |i, j| self.data[j * rows + i])
    }
}

fn norm(xs: &[f64]) -> f64 {
    let scale = xs.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// Golub–Kahan–Reinsch SVD for `rows >= cols`.
fn golub_kahan(m: &Matrix, want_vectors: bool) -> Result<RawSvd> {
    let (rows, cols) = (m.rows(), m.cols());
    debug_assert!(rows >= cols);
    let nu = cols;
    let mut a = ColMajor::from_matrix(m);
    let mut s = vec![0.0; cols.min(rows + 1)];
    let mut e = vec![0.0; cols];
    let mut work = vec![0.0; rows];
    let mut u = want_vectors.then(|| ColMajor::zeros(rows, nu));
    let mut v = want_vectors.then(|| ColMajor::zeros(cols, cols));

    // Householder reduction to bidiagonal form: diagonal in `s`,
    // superdiagonal in `e`.
    let nct = (rows - 1).min(cols);
    let nrt = cols.saturating_sub(2).min(rows);
    for k in 0..nct.max(nrt) {
        if k < nct {
            s[k] = norm(&a.col(k)[k..]);
            if s[k] != 0.0 {
                if a.col(k)[k] < 0.0 {
                    s[k] = -s[k];
                }
                let sk = s[k];
                for x in &mut a.col_mut(k)[k..] {
                    *x /= sk;
                }
                a.col_mut(k)[k] += 1.0;
            }
            s[k] = -s[k];
        }
        for j in (k + 1)..cols {
            if k < nct && s[k] != 0.0 {
                let (ck, cj) = a.col_pair(k, j);
                let t = -dot(&ck[k..], &cj[k..]) / ck[k];
                for (x, y) in cj[k..].iter_mut().zip(&ck[k..]) {
                    *x += t * y;
                }
            }
            e[j] = a.col(j)[k];
        }
        if k < nct {
            if let Some(u) = u.as_mut() {
                u.col_mut(k)[k..].copy_from_slice(&a.col(k)[k..]);
            }
        }
        if k < nrt {
            e[k] = norm(&e[k + 1..]);
            if e[k] != 0.0 {
                if e[k + 1] < 0.0 {
                    e[k] = -e[k];
                }
                let ek = e[k];
                for x in &mut e[k + 1..] {
                    *x /= ek;
                }
                e[k + 1] += 1.0;
            }
            e[k] = -e[k];
            if k + 1 < rows && e[k] != 0.0 {
                work[k + 1..].iter_mut().for_each(|w| *w = 0.0);
                for j in (k + 1)..cols {
                    let ej = e[j];
                    for (w, x) in work[k + 1..].iter_mut().zip(&a.col(j)[k + 1..]) {
                        *w += ej * x;
                    }
                }
                for j in (k + 1)..cols {
                    let t = -e[j] / e[k + 1];
                    for (x, w) in a.col_mut(j)[k + 1..].iter_mut().zip(&work[k + 1..]) {
                        *x += t * w;
                    }
                }
            }
            if let Some(v) = v.as_mut() {
                v.col_mut(k)[k + 1..].copy_from_slice(&e[k + 1..]);
            }
        }
    }

    let mut p = cols.min(rows + 1);
    if nct < cols {
        s[nct] = a.col(nct)[nct];
    }
    if rows < p {
        s[p - 1] = 0.0;
    }
    if nrt + 1 < p {
        e[nrt] = a.col(p - 1)[nrt];
    }
    e[p - 1] = 0.0;

    // Accumulate the left and right transformations.
    if let Some(u) = u.as_mut() {
        for j in nct..nu {
            u.col_mut(j).iter_mut().for_each(|x| *x = 0.0);
            u.col_mut(j)[j] = 1.0;
        }
        for k in (0..nct).rev() {
            if s[k] != 0.0 {
                for j in (k + 1)..nu {
                    let (ck, cj) = u.col_pair(k, j);
                    let t = -dot(&ck[k..], &cj[k..]) / ck[k];
                    for (x, y) in cj[k..].iter_mut().zip(&ck[k..]) {
                        *x += t * y;
                    }
                }
                let ck = u.col_mut(k);
                for x in &mut ck[k..] {
                    *x = -*x;
                }
                ck[k] += 1.0;
                for x in &mut ck[..k] {
                    *x = 0.0;
                }
            } else {
                let ck = u.col_mut(k);
                ck.iter_mut().for_each(|x| *x = 0.0);
                ck[k] = 1.0;
            }
        }
    }
    if let Some(v) = v.as_mut() {
        for k in (0..cols).rev() {
            if k < nrt && e[k] != 0.0 {
                for j in (k + 1)..nu {
                    let (ck, cj) = v.col_pair(k, j);
                    let t = -dot(&ck[k + 1..], &cj[k + 1..]) / ck[k + 1];
                    for (x, y) in cj[k + 1..].iter_mut().zip(&ck[k + 1..]) {
                        *x += t * y;
                    }
                }
            }
            let ck = v.col_mut(k);
            ck.iter_mut().for_each(|x| *x = 0.0);
            ck[k] = 1.0;
        }
    }

    // Implicitly shifted QR iteration on the bidiagonal.
    let pp = p - 1;
    let mut steps = 0usize;
    let eps = f64::EPSILON;
    let tiny = 2.0f64.powi(-966);
    while p > 0 {
        if steps > MAX_QR_STEPS_PER_VALUE {
            return Err(Error::NoConvergence {
                steps,
                residual: if p >= 2 { e[p - 2].abs() } else { 0.0 },
            });
        }

        // Locate the split: kase 1 if s[p-1] is negligible, 2 if some
        // s[k] is negligible, 3 for a QR step, 4 if e[p-2] is negligible
        // (convergence).
        let mut k = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = 0.0;
                break;
            }
            k -= 1;
        }
        let kase;
        if k == p as isize - 2 {
            kase = 4;
        } else {
            let mut ks = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t = if ksu != p { e[ksu].abs() } else { 0.0 }
                    + if ks != k + 1 { e[ksu - 1].abs() } else { 0.0 };
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = 0.0;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kase = 3;
            } else if ks == p as isize - 1 {
                kase = 1;
            } else {
                kase = 2;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kase {
            1 => {
                // Deflate negligible s[p-1].
                let mut f = e[p - 2];
                e[p - 2] = 0.0;
                for j in (k..=p - 2).rev() {
                    let t = s[j].hypot(f);
                    let (cs, sn) = (s[j] / t, f / t);
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] *= cs;
                    }
                    if let Some(v) = v.as_mut() {
                        v.rotate(j, p - 1, cs, sn);
                    }
                }
            }
            2 => {
                // Split at negligible s[k-1].
                let mut f = e[k - 1];
                e[k - 1] = 0.0;
                for j in k..p {
                    let t = s[j].hypot(f);
                    let (cs, sn) = (s[j] / t, f / t);
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] *= cs;
                    if let Some(u) = u.as_mut() {
                        u.rotate(j, k - 1, cs, sn);
                    }
                }
            }
            3 => {
                // One QR step with a Wilkinson-style shift from the trailing 2x2.
                let scale = s[p - 1]
                    .abs()
                    .max(s[p - 2].abs())
                    .max(e[p - 2].abs())
                    .max(s[k].abs())
                    .max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = 0.0;
                if b != 0.0 || c != 0.0 {
                    shift = (b * b + c).sqrt();
                    if b < 0.0 {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;

                for j in k..p - 1 {
                    let t = f.hypot(g);
                    let (cs, sn) = (f / t, g / t);
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] *= cs;
                    if let Some(v) = v.as_mut() {
                        v.rotate(j, j + 1, cs, sn);
                    }
                    let t = f.hypot(g);
                    let (cs, sn) = (f / t, g / t);
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] *= cs;
                    if j < rows - 1 {
                        if let Some(u) = u.as_mut() {
                            u.rotate(j, j + 1, cs, sn);
                        }
                    }
                }
                e[p - 2] = f;
                steps += 1;
            }
            _ => {
                // Converged: make s[k] non-negative, then bubble it into
                // descending position.
                if s[k] <= 0.0 {
                    s[k] = if s[k] < 0.0 { -s[k] } else { 0.0 };
                    if let Some(v) = v.as_mut() {
                        v.col_mut(k)[..=pp].iter_mut().for_each(|x| *x = -*x);
                    }
                }
                let mut k = k;
                while k < pp && s[k] < s[k + 1] {
                    s.swap(k, k + 1);
                    if k < cols - 1 {
                        if let Some(v) = v.as_mut() {
                            let (a, b) = v.col_pair(k, k + 1);
                            a.swap_with_slice(b);
                        }
                    }
                    if k < rows - 1 {
                        if let Some(u) = u.as_mut() {
                            let (a, b) = u.col_pair(k, k + 1);
                            a.swap_with_slice(b);
                        }
                    }
                    k += 1;
                }
                steps = 0;
                p -= 1;
            }
        }
    }

    s.truncate(nu);
    Ok(RawSvd {
        sigma: s,
        u: u.map(|u| u.into_matrix(nu)),
        v: v.map(|v| v.into_matrix(cols)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    /// Singular values of a 2x2 matrix from the characteristic polynomial
    /// of MᵗM: λ² - tr·λ + det = 0.
    fn sigma_2x2_oracle(a: &Matrix) -> (f64, f64) {
        let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
        let g11 = p * p + r * r;
        let g12 = p * q + r * s;
        let g22 = q * q + s * s;
        let tr = g11 + g22;
        let det = g11 * g22 - g12 * g12;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        ((tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).max(0.0).sqrt())
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            Matrix::new(0, 3, vec![]),
            Err(Error::EmptyMatrix { .. })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0; 3]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0, 0.0, f64::INFINITY, 0.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn svd_identity() {
        let f = svd(&Matrix::identity(3)).unwrap();
        assert_close(&f.sigma, &[1.0, 1.0, 1.0], 1e-15);
    }

    #[test]
    fn svd_diagonal_is_reordered() {
        let f = svd(&Matrix::from_diag(&[3.0, 4.0])).unwrap();
        assert_close(&f.sigma, &[4.0, 3.0], 1e-14);
        assert!(
            f.reconstruct()
                .max_abs_diff(&Matrix::from_diag(&[3.0, 4.0]))
                .unwrap()
                < 1e-14
        );
    }

    #[test]
    fn svd_symmetric_2x2_matches_characteristic_polynomial() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let (hi, lo) = sigma_2x2_oracle(&a);
        assert!((hi - 3.0).abs() < 1e-12 && (lo - 1.0).abs() < 1e-12);
        let f = svd(&a).unwrap();
        assert_close(&f.sigma, &[hi, lo], 1e-12);
        assert_eq!(sigma_extreme(&a).unwrap(), (f.sigma[0], f.sigma[1]));
    }

    #[test]
    fn svd_wide_and_tall_shapes() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        for mat in [a.clone(), a.transpose()] {
            let f = svd(&mat).unwrap();
            assert_eq!(f.sigma.len(), 2);
            assert_eq!(f.u.rows(), mat.rows());
            assert_eq!(f.v.rows(), mat.cols());
            assert!(f.reconstruct().max_abs_diff(&mat).unwrap() < 1e-12);
        }
    }

    #[test]
    fn tall_qr_path_agrees_with_direct_bidiagonalization() {
        let mut mat = Matrix::from_fn(23, 5, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64
        });
        // A zero column exercises the degenerate reflector.
        for i in 0..23 {
            mat.data[i * 5 + 2] = 0.0;
        }
        let f = svd(&mat).unwrap();
        let direct = golub_kahan(&mat, false).unwrap().sigma;
        assert_close(&f.sigma, &direct, 1e-12);
        assert_close(&singular_values(&mat).unwrap(), &direct, 1e-12);
        assert!(f.sigma[4] < 1e-12);
        assert!(f.reconstruct().max_abs_diff(&mat).unwrap() < 1e-12);
        let utu = f.u.transpose().matmul(&f.u).unwrap();
        // Columns of U belonging to non-zero singular values are orthonormal.
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((utu.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_single_entry_and_zero_matrix() {
        let f = svd(&m(&[&[-2.5]])).unwrap();
        assert_eq!(f.sigma, vec![2.5]);
        assert!(f.reconstruct().max_abs_diff(&m(&[&[-2.5]])).unwrap() < 1e-15);

        let z = Matrix::zeros(3, 2);
        let f = svd(&z).unwrap();
        assert_eq!(f.sigma, vec![0.0, 0.0]);
        assert_eq!(f.rank(), 0);
    }

    #[test]
    fn right_vectors_follow_sign_convention() {
        let a = m(&[&[0.3, -1.2, 0.4], &[-2.0, 0.1, 0.9], &[0.5, 0.5, -0.7]]);
        let f = svd(&a).unwrap();
        for l in 0..3 {
            let col = f.v.column(l);
            let pivot = col
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            assert!(pivot >= 0.0);
        }
        assert!(f.reconstruct().max_abs_diff(&a).unwrap() < 1e-13);
    }

    #[test]
    fn sigma_extreme_examples() {
        assert_eq!(sigma_extreme(&Matrix::identity(2)).unwrap(), (1.0, 1.0));
        let (hi, lo) = sigma_extreme(&Matrix::from_diag(&[5.0, 0.1, 2.0])).unwrap();
        assert!((hi - 5.0).abs() < 1e-14 && (lo - 0.1).abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let i4 = Matrix::identity(4);
        assert!(pseudo_inverse(&i4).unwrap().max_abs_diff(&i4).unwrap() < 1e-15);

        let p = pseudo_inverse(&Matrix::from_diag(&[2.0, 4.0])).unwrap();
        assert!(p.max_abs_diff(&Matrix::from_diag(&[0.5, 0.25])).unwrap() < 1e-15);

        let p = pseudo_inverse(&Matrix::from_diag(&[2.0, 0.0])).unwrap();
        assert!(p.max_abs_diff(&Matrix::from_diag(&[0.5, 0.0])).unwrap() < 1e-15);
    }

    #[test]
    fn pseudo_inverse_of_rank_deficient_rectangular() {
        // rank one: every row a multiple of (1, 2)
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let f = svd(&a).unwrap();
        assert_eq!(f.rank(), 1);
        let p = f.pseudo_inverse();
        let back = a.matmul(&p).unwrap().matmul(&a).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn pseudo_solve_matches_explicit_pseudo_inverse() {
        let a = m(&[&[1.0, 2.0], &[3.0, 1.0], &[0.5, -1.0]]);
        let f = svd(&a).unwrap();
        let y = [1.0, -2.0, 0.25];
        let direct = f.pseudo_inverse().matvec(&y).unwrap();
        assert_close(&f.pseudo_solve(&y).unwrap(), &direct, 1e-13);
    }

    #[test]
    fn products() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(Matrix::identity(2).matmul(&a).unwrap(), a);
        assert_eq!(
            Matrix::from_diag(&[2.0, 3.0]).matvec(&[1.0, 1.0]).unwrap(),
            vec![2.0, 3.0]
        );
        let swap = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(swap.matmul(&a).unwrap(), m(&[&[3.0, 4.0], &[1.0, 2.0]]));
        assert_eq!(a.transpose_matvec(&[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
    }

    #[test]
    fn product_dimension_mismatch() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::Dimension(_))));
        assert!(matches!(a.matvec(&[1.0, 2.0]), Err(Error::Dimension(_))));
        assert!(matches!(
            a.transpose_matvec(&[1.0, 2.0, 3.0]),
            Err(Error::Dimension(_))
        ));
    }
}
