//! Exact linear algebra over ℚ and over the rational function field ℚ(vars).

use std::fmt::Debug;

use num_traits::{One, Zero};

use super::{Poly, RatFunc, Rational};
use crate::error::{Error, Result};

/// Exact field operations needed by Gaussian elimination.
pub trait Field: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Size measure used to prefer cheap pivots.
    fn weight(&self) -> u32;
}

impl Field for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn weight(&self) -> u32 {
        (self.numer().bits() + self.denom().bits()) as u32
    }
}

impl Field for RatFunc {
    fn zero() -> Self {
        RatFunc::zero()
    }
    fn one() -> Self {
        RatFunc::one()
    }
    fn is_zero(&self) -> bool {
        RatFunc::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        RatFunc::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        RatFunc::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        RatFunc::mul(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        RatFunc::div(self, o)
    }
    fn neg(&self) -> Self {
        RatFunc::neg(self)
    }
    fn weight(&self) -> u32 {
        // degree first, then number of terms
        1000 * self.total_degree() + (self.num().len() + self.den().len()) as u32
    }
}

/// Dense rectangular matrix, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<T>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r);
        }
        Matrix { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_map<U: Clone, E>(&self, f: impl Fn(&T) -> Result<U, E>) -> Result<Matrix<U>, E> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    /// Appends the rows of `other`, which must have the same width.
    pub fn stack(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.cols, "stacking matrices of different widths");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn transpose(&self) -> Matrix<T> {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).clone());
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::filled(rows, cols, F::zero())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    pub fn mul(&self, o: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, o.rows, "matrix product shape mismatch");
        let mut out: Matrix<F> = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(F::zero(), |acc, (a, b)| acc.add(&a.mul(b)))
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    ///
    /// Within a column the lightest nonzero entry is chosen as pivot.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..self.cols {
            if prow >= self.rows {
                break;
            }
            let best = (prow..self.rows)
                .filter(|&r| !self.get(r, col).is_zero())
                .min_by_key(|&r| self.get(r, col).weight());
            let Some(best) = best else { continue };
            self.swap_rows(best, prow);
            let inv = F::one().div(self.get(prow, col));
            for c in col..self.cols {
                let v = self.get(prow, c).mul(&inv);
                self.set(prow, c, v);
            }
            for r in 0..self.rows {
                if r == prow || self.get(r, col).is_zero() {
                    continue;
                }
                let factor = self.get(r, col).clone();
                for c in col..self.cols {
                    let p = self.get(prow, c);
                    if p.is_zero() {
                        continue;
                    }
                    let v = self.get(r, c).sub(&factor.mul(p));
                    self.set(r, c, v);
                }
            }
            pivots.push(col);
            prow += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place().len()
    }

    /// Basis of the right kernel `{v : M v = 0}`; one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<F>> {
        let mut r = self.clone();
        let pivots = r.rref_in_place();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![F::zero(); self.cols];
                v[free] = F::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = r.get(row, free).neg();
                }
                v
            })
            .collect()
    }
}

impl Matrix<Poly> {
    /// Evaluates every entry at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<Matrix<Rational>> {
        self.try_map(|p| p.eval(point))
    }

    pub fn to_ratfunc(&self) -> Matrix<RatFunc> {
        self.map(|p| RatFunc::from_poly(p.clone()))
    }
}

impl Matrix<RatFunc> {
    /// Clears denominators row by row; the row space over ℚ(vars) is unchanged.
    pub fn clear_denominators(&self) -> Matrix<Poly> {
        let rows = (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut den = Poly::one();
                for e in row {
                    if !e.den().is_constant() && den.div_exact(e.den()).is_none() {
                        den = &den * e.den();
                    }
                }
                row.iter()
                    .map(|e| {
                        let scaled = e.mul_poly(&den);
                        scaled.as_poly().expect("common denominator clears the row")
                    })
                    .collect()
            })
            .collect();
        Matrix::from_rows(self.cols, rows)
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Option<Matrix<Rational>>> {
        let mut out = Vec::with_capacity(self.data.len());
        for e in &self.data {
            match e.eval(point)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(Matrix { rows: self.rows, cols: self.cols, data: out }))
    }
}

/// Rank over the rational function field, by fraction-free (Bareiss)
/// elimination with full pivoting on the entry of lowest total degree.
pub fn generic_rank(m: &Matrix<Poly>) -> Result<usize> {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut prev = Poly::one();
    let mut rank = 0;
    while rank < rows.min(cols) {
        // pick the lightest nonzero entry in the trailing block
        let mut best: Option<(usize, usize, (u32, usize))> = None;
        for r in rank..rows {
            for c in rank..cols {
                let e = a.get(r, c);
                if e.is_zero() {
                    continue;
                }
                let key = (e.total_degree(), e.len());
                if best.as_ref().is_none_or(|b| key < b.2) {
                    best = Some((r, c, key));
                }
            }
        }
        let Some((pr, pc, _)) = best else { break };
        a.swap_rows(pr, rank);
        if pc != rank {
            for r in 0..rows {
                a.data.swap(r * cols + pc, r * cols + rank);
            }
        }
        let pivot = a.get(rank, rank).clone();
        for r in rank + 1..rows {
            let lead = a.get(r, rank).clone();
            for c in rank + 1..cols {
                let num = &(&pivot * a.get(r, c)) - &(&lead * a.get(rank, c));
                let v = num.div_exact(&prev).ok_or_else(|| {
                    Error::Invariant("Bareiss step is not an exact division".into())
                })?;
                a.set(r, c, v);
            }
            a.set(r, rank, Poly::zero());
        }
        prev = pivot;
        rank += 1;
    }
    Ok(rank)
}

/// Rank of a matrix of rational functions over ℚ(vars).
pub fn generic_rank_ratfunc(m: &Matrix<RatFunc>) -> Result<usize> {
    generic_rank(&m.clear_denominators())
}

/// Clears the denominators of a vector over ℚ(vars), yielding a polynomial
/// vector spanning the same line.
pub fn clear_vector(v: &[RatFunc]) -> Vec<Poly> {
    let m = Matrix::from_rows(v.len(), vec![v.to_vec()]);
    m.clear_denominators().row(0).to_vec()
}
