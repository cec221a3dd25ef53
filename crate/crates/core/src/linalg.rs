//! Minimal row-major dense matrix used by the hand-differentiated models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Entries drawn i.i.d. from `uniform(-scale, scale)`.
    pub fn uniform<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| S::lit(rng.gen_range(-scale..=scale)))
            .collect();
        Self { rows, cols, data }
    }

    /// Glorot/Xavier uniform initialisation.
    pub fn xavier<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let scale = (6.0 / (rows + cols).max(1) as f64).sqrt();
        Self::uniform(rows, cols, scale, rng)
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self · x`
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `selfᵀ · x`
    pub fn matvec_t(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.rows, "matvec_t dimension");
        let mut out = vec![S::zero(); self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == S::zero() {
                continue;
            }
            axpy(xr, self.row(r), &mut out);
        }
        out
    }

    /// `self += alpha · u vᵀ`
    pub fn add_outer(&mut self, alpha: S, u: &[S], v: &[S]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            let a = alpha * ur;
            if a == S::zero() {
                continue;
            }
            axpy(a, v, self.row_mut(r));
        }
    }

    /// `self · other`
    pub fn matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a != S::zero() {
                    axpy(a, other.row(k), dst);
                }
            }
        }
        out
    }

    /// `selfᵀ · other`
    pub fn t_matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.rows, other.rows, "t_matmul dimension");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a != S::zero() {
                    axpy(a, b, out.row_mut(i));
                }
            }
        }
        out
    }

    /// `self · otherᵀ`
    pub fn matmul_t(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.cols, "matmul_t dimension");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for r in 0..self.rows {
            for c in 0..other.rows {
                out[(r, c)] = dot(self.row(r), other.row(c));
            }
        }
        out
    }

    /// `self -= lr · grad`
    pub fn sgd_step(&mut self, lr: S, grad: &Matrix<S>) {
        assert_eq!(self.shape(), grad.shape());
        axpy(-lr, &grad.data, &mut self.data);
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = S::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Matrix<S> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &S {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += alpha · x`
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn l1_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// Rescale to unit L2 norm. Zero vectors are left untouched.
pub fn normalize_l2<S: Scalar>(v: &mut [S]) {
    let n = l2_norm(v);
    if n > S::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Sign with `sign(0) = 0`, the subgradient used for L1 terms.
#[inline]
pub fn sign<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        S::one()
    } else if x < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

/// Serialises a matrix as `name rows cols` followed by one whitespace-separated row per line.
pub fn write_matrix<S: Scalar>(out: &mut String, name: &str, m: &Matrix<S>) {
    use std::fmt::Write;
    let _ = writeln!(out, "matrix {} {} {}", name, m.rows, m.cols);
    for r in 0..m.rows {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{}", v.as_f64())).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

/// Inverse of [`write_matrix`]. Advances `lines` past the matrix block.
pub fn read_matrix<'a, S: Scalar>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    expected_name: &str,
) -> Result<Matrix<S>, String> {
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| format!("missing matrix `{expected_name}`"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "matrix" || parts[1] != expected_name {
        return Err(format!(
            "line {}: expected `matrix {} <rows> <cols>`",
            lineno + 1,
            expected_name
        ));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("line {}: bad dimension `{s}`", lineno + 1))
    };
    let rows = parse_dim(parts[2])?;
    let cols = parse_dim(parts[3])?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| format!("matrix `{expected_name}` truncated"))?;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| format!("line {}: bad number `{tok}`", ln + 1))?;
            data.push(S::lit(v));
        }
        if data.len() - before != cols {
            return Err(format!("line {}: expected {} values", ln + 1, cols));
        }
    }
    Ok(Matrix::from_vec(rows, cols, data))
}
