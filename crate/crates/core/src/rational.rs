//! Exact rational scalars and the handful of dense linear-algebra routines the
//! root-system code needs (inverse, determinant, leading minors).

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn qf(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

/// Parses `p`, `p/q` or a finite decimal like `-0.125` exactly.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: i128 = if int.is_empty() || int == "-" || int == "+" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 30 {
            return Err(bad());
        }
        let den = 10i128.pow(frac.len() as u32);
        let num: i128 = frac.parse().map_err(|_| bad())?;
        let f = Q::new(num, den);
        let i = q(int_part);
        return Ok(if neg { i - f } else { i + f });
    }
    let n: i128 = s.parse().map_err(|_| bad())?;
    Ok(q(n))
}

pub fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Row-major dense rational matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMatrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Q::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)])
        })
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Q::zero(), |acc, k| acc + self[(i, k)] * v[k]))
            .collect()
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Principal submatrix on the given (sorted) index set.
    pub fn principal(&self, idx: &[usize]) -> QMatrix {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn determinant(&self) -> Q {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Q::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Q::zero();
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pivot = a[(col, col)];
            det *= pivot;
            for r in col + 1..n {
                let f = a[(r, col)] / pivot;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        det
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<QMatrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            let pivot = a[(col, col)];
            for c in 0..n {
                a[(col, c)] /= pivot;
                inv[(col, c)] /= pivot;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let (x, y) = (a[(col, c)], inv[(col, c)]);
                    a[(r, c)] -= f * x;
                    inv[(r, c)] -= f * y;
                }
            }
        }
        Some(inv)
    }

    /// Solves `self * x = b` exactly.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        Some(self.inverse()?.mul_vec(b))
    }

    /// Sylvester's criterion, exact.
    pub fn is_positive_definite(&self) -> bool {
        self.is_square()
            && (1..=self.rows).all(|k| {
                let idx: Vec<usize> = (0..k).collect();
                self.principal(&idx).determinant().is_positive()
            })
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Exact dot product.
pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// A direction in Lie(A) written in diagonal coordinates (one block per
/// simple factor, each block summing to zero).
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Direction(pub Vec<Q>);

impl Direction {
    pub fn zero(n: usize) -> Self {
        Direction(vec![Q::zero(); n])
    }

    pub fn parse(items: &[impl AsRef<str>]) -> Result<Self> {
        items.iter().map(|s| parse_q(s.as_ref())).collect::<Result<Vec<_>>>().map(Direction)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, s: Q) -> Self {
        Direction(self.0.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &Direction) -> Self {
        Direction(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Direction) -> Self {
        Direction(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    pub fn strings(&self) -> Vec<String> {
        self.0.iter().map(|x| x.to_string()).collect()
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([',', ' ']).filter(|p| !p.is_empty()).collect();
        Direction::parse(&parts)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.strings().join(", "))
    }
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_q("3").unwrap(), q(3));
        assert_eq!(parse_q("-6/4").unwrap(), qf(-3, 2));
        assert_eq!(parse_q("-0.125").unwrap(), qf(-1, 8));
        assert_eq!(parse_q("1.5").unwrap(), qf(3, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn inverse_of_a2_cartan() {
        let c = QMatrix::from_fn(2, 2, |i, j| if i == j { q(2) } else { q(-1) });
        let inv = c.inverse().unwrap();
        assert_eq!(inv[(0, 0)], qf(2, 3));
        assert_eq!(inv[(0, 1)], qf(1, 3));
        assert_eq!(c.mul(&inv), QMatrix::identity(2));
        assert_eq!(c.determinant(), q(3));
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = QMatrix::from_fn(2, 2, |_, _| q(1));
        assert!(m.inverse().is_none());
        assert_eq!(m.determinant(), q(0));
        assert!(!m.is_positive_definite());
    }
}
