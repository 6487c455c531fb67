use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Exact integer `n x n` matrix with determinant `±1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    /// Row-major entries; rejects non-square input, `n < 1` and `|det| != 1`.
    pub fn new(n: usize, entries: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        let det = determinant(n, &entries)?;
        if det != 1 && det != -1 {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        Self::new(n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        Self { n, entries }
    }

    /// Elementary matrix `I + e_i e_j^T`, `i != j`.
    pub fn elementary(n: usize, i: usize, j: usize, k: i64) -> Self {
        let mut m = Self::identity(n);
        m.entries[i * n + j] += k;
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn det(&self) -> i64 {
        determinant(self.n, &self.entries).expect("validated at construction") as i64
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Exact product; `WordOverflow` instead of wraparound.
    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let n = self.n;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: i128 = 0;
                for k in 0..n {
                    acc += self.get(i, k) as i128 * other.get(k, j) as i128;
                }
                out[i * n + j] = i64::try_from(acc).map_err(|_| Error::WordOverflow)?;
            }
        }
        Ok(IntMatrix { n, entries: out })
    }

    pub fn checked_mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        (0..self.n)
            .map(|i| {
                let acc: i128 = (0..self.n).map(|k| self.get(i, k) as i128 * v[k] as i128).sum();
                i64::try_from(acc).map_err(|_| Error::WordOverflow)
            })
            .collect()
    }

    /// Exact inverse via the adjugate; integral because `det = ±1`.
    pub fn inverse(&self) -> IntMatrix {
        let n = self.n;
        if n == 1 {
            return self.clone();
        }
        let det = self.det() as i128;
        let mut out = vec![0i64; n * n];
        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            for j in 0..n {
                minor.clear();
                for r in (0..n).filter(|&r| r != i) {
                    for c in (0..n).filter(|&c| c != j) {
                        minor.push(self.get(r, c));
                    }
                }
                let cof = determinant(n - 1, &minor).expect("minor of small matrix");
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // adj[j][i] = cofactor[i][j]
                out[j * n + i] = (sign * cof * det) as i64;
            }
        }
        IntMatrix { n, entries: out }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    pub fn to_scalar_vec<T: crate::Scalar>(&self) -> Vec<T> {
        self.entries.iter().map(|&v| T::of(v as f64)).collect()
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        self.to_f64().singular_values().max()
    }
}

/// Fraction-free (Bareiss) determinant in `i128`.
pub(crate) fn determinant(n: usize, entries: &[i64]) -> Result<i128> {
    if n == 0 {
        return Ok(1);
    }
    let mut m: Vec<i128> = entries.iter().map(|&v| v as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k * n + k] == 0 {
            match (k + 1..n).find(|&r| m[r * n + k] != 0) {
                Some(r) => {
                    for c in 0..n {
                        m.swap(k * n + c, r * n + c);
                    }
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = m[i * n + j]
                    .checked_mul(m[k * n + k])
                    .and_then(|x| x.checked_sub(m[i * n + k].checked_mul(m[k * n + j])?))
                    .ok_or(Error::WordOverflow)?;
                m[i * n + j] = a / prev;
            }
        }
        prev = m[k * n + k];
    }
    Ok(sign * m[n * n - 1])
}

impl fmt::Display for IntMatrix {
    /// Inline form `r1;r2;..` with comma-separated entries.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            if i > 0 {
                f.write_str(";")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

impl FromStr for IntMatrix {
    type Err = Error;

    /// Parses `"2,1;1,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|e| {
                        e.trim()
                            .parse::<i64>()
                            .map_err(|err| Error::InvalidArgument(format!("bad matrix entry `{}`: {err}", e.trim())))
                    })
                    .collect::<Result<Vec<i64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        let a: IntMatrix = "2,1;1,1".parse().unwrap();
        assert_eq!(a.n(), 2);
        assert_eq!(a.det(), 1);
        assert_eq!(a.to_string(), "2,1;1,1");
    }

    #[test]
    fn rejects_non_unimodular() {
        let err = "1,0;0,2".parse::<IntMatrix>().unwrap_err();
        assert!(matches!(err, Error::NotUnimodular { det: 2 }));
        assert!(matches!("1,0;0".parse::<IntMatrix>(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn determinant_with_pivoting() {
        // [[0,1],[1,0]] needs a row swap
        let p: IntMatrix = "0,1;1,0".parse().unwrap();
        assert_eq!(p.det(), -1);
        let m = IntMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        assert_eq!(m.det(), 1);
    }

    #[test]
    fn overflow_is_reported() {
        let a: IntMatrix = "2,1;1,1".parse().unwrap();
        let mut p = a.clone();
        let mut overflowed = false;
        for _ in 0..200 {
            match p.checked_mul(&a) {
                Ok(q) => p = q,
                Err(Error::WordOverflow) => {
                    overflowed = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(overflowed);
    }

    proptest! {
        #[test]
        fn inverse_is_exact(k1 in -3i64..=3, k2 in -3i64..=3, k3 in -3i64..=3) {
            let m = IntMatrix::elementary(3, 0, 1, k1)
                .checked_mul(&IntMatrix::elementary(3, 2, 0, k2)).unwrap()
                .checked_mul(&IntMatrix::elementary(3, 1, 2, k3)).unwrap();
            prop_assert!(m.checked_mul(&m.inverse()).unwrap().is_identity());
            prop_assert!(m.inverse().checked_mul(&m).unwrap().is_identity());
        }
    }
}
