//! Exact characteristic polynomials and square-free factorization.
//!
//! Repeated eigenvalues of integer matrices (unipotent and parabolic
//! elements are common in word products) are ill-conditioned for a plain
//! numerical eigensolver: a double root at `-1` comes back as `-1 ± 1e-8`,
//! which lands outside a `1e-9` neutral band. Splitting the characteristic
//! polynomial into square-free factors first leaves only simple roots to
//! the numerical stage, with multiplicities known exactly.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::IntMatrix;
use crate::error::{Error, Result};

/// Polynomial over Q, coefficients low to high, no trailing zeros.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly(Vec<BigRational>);

impl Poly {
    fn trimmed(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly(c)
    }

    pub(crate) fn from_ints(c: &[i128]) -> Self {
        Self::trimmed(c.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
    }

    pub(crate) fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn lead(&self) -> &BigRational {
        self.0.last().expect("nonzero polynomial")
    }

    fn monic(&self) -> Self {
        let l = self.lead().clone();
        Poly(self.0.iter().map(|c| c / &l).collect())
    }

    fn derivative(&self) -> Self {
        Self::trimmed(
            self.0.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect(),
        )
    }

    fn sub(&self, other: &Poly) -> Self {
        let len = self.0.len().max(other.0.len());
        let zero = BigRational::zero();
        Self::trimmed((0..len).map(|i| self.0.get(i).unwrap_or(&zero) - other.0.get(i).unwrap_or(&zero)).collect())
    }

    fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let mut r = self.0.clone();
        if self.0.len() < d.0.len() {
            return (Poly(Vec::new()), self.clone());
        }
        let dl = d.lead().clone();
        let mut q = vec![BigRational::zero(); self.0.len() - d.0.len() + 1];
        for k in (0..q.len()).rev() {
            let coef = &r[k + d.0.len() - 1] / &dl;
            for (j, dc) in d.0.iter().enumerate() {
                r[k + j] = &r[k + j] - &coef * dc;
            }
            q[k] = coef;
        }
        (Self::trimmed(q), Self::trimmed(r))
    }

    fn exact_div(&self, d: &Poly) -> Poly {
        let (q, r) = self.div_rem(d);
        debug_assert!(r.is_zero());
        q
    }

    fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Characteristic polynomial `det(xI - A)` (low to high) by Faddeev-LeVerrier;
/// every division is exact over the integers.
pub(crate) fn char_poly(a: &IntMatrix) -> Result<Vec<i128>> {
    let n = a.n();
    let av: Vec<i128> = a.entries().iter().map(|&v| v as i128).collect();
    let mut c = vec![0i128; n + 1];
    c[n] = 1;
    let mut m = vec![0i128; n * n];
    for k in 1..=n {
        // m <- A m + c[n-k+1] I
        let mut next = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for l in 0..n {
                    acc = acc
                        .checked_add(av[i * n + l].checked_mul(m[l * n + j]).ok_or(Error::WordOverflow)?)
                        .ok_or(Error::WordOverflow)?;
                }
                next[i * n + j] = acc;
            }
            next[i * n + i] = next[i * n + i].checked_add(c[n - k + 1]).ok_or(Error::WordOverflow)?;
        }
        m = next;
        let mut tr = 0i128;
        for i in 0..n {
            for l in 0..n {
                tr = tr
                    .checked_add(av[i * n + l].checked_mul(m[l * n + i]).ok_or(Error::WordOverflow)?)
                    .ok_or(Error::WordOverflow)?;
            }
        }
        c[n - k] = -tr / k as i128;
    }
    Ok(c)
}

/// Yun's square-free factorization: pairs `(factor, multiplicity)` with
/// pairwise coprime monic square-free factors.
pub(crate) fn square_free(f: &Poly) -> Vec<(Poly, usize)> {
    let f = f.monic();
    let df = f.derivative();
    let a0 = f.gcd(&df);
    let mut b = f.exact_div(&a0);
    let c = df.exact_div(&a0);
    let mut d = c.sub(&b.derivative());
    let mut out = Vec::new();
    let mut i = 1;
    while b.degree() > 0 {
        let a = b.gcd(&d);
        b = b.exact_div(&a);
        let c = d.exact_div(&a);
        d = c.sub(&b.derivative());
        if a.degree() > 0 {
            out.push((a, i));
        }
        i += 1;
    }
    out
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::zero();
    let mut dp = Complex64::zero();
    for &ci in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ci;
    }
    (p, dp)
}

/// Roots of a square-free polynomial, polished by Newton steps.
fn simple_roots(p: &Poly) -> Result<Vec<Complex64>> {
    let c = p.monic().to_f64();
    let deg = c.len() - 1;
    let raw = match deg {
        0 => Vec::new(),
        1 => vec![Complex64::new(-c[0], 0.0)],
        2 => {
            let (b, cc) = (c[1], c[0]);
            let disc = b * b - 4.0 * cc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                let q = -0.5 * (b + b.signum() * s);
                let q = if q == 0.0 { -0.5 * s } else { q };
                let r1 = q;
                let r2 = if q != 0.0 { cc / q } else { 0.0 };
                vec![Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
            } else {
                let im = (-disc).sqrt() / 2.0;
                vec![Complex64::new(-b / 2.0, im), Complex64::new(-b / 2.0, -im)]
            }
        }
        _ => {
            let comp = DMatrix::from_fn(deg, deg, |i, j| {
                if i == 0 {
                    -c[deg - 1 - j]
                } else if i == j + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            let schur = comp
                .clone()
                .try_schur(1e-15, 10_000)
                .ok_or_else(|| Error::EigenNonConvergence { matrix: format!("{comp}") })?;
            schur.complex_eigenvalues().iter().copied().collect()
        }
    };
    Ok(raw
        .into_iter()
        .map(|mut z| {
            for _ in 0..8 {
                let (pv, dpv) = horner(&c, z);
                if dpv.norm() == 0.0 {
                    break;
                }
                let nz = z - pv / dpv;
                if horner(&c, nz).0.norm() < pv.norm() {
                    z = nz;
                } else {
                    break;
                }
            }
            z
        })
        .collect())
}

/// Eigenvalues with exact multiplicities.
pub(crate) fn eigenvalues(a: &IntMatrix) -> Result<Vec<(Complex64, usize)>> {
    let cp = char_poly(a)?;
    let poly = Poly::from_ints(&cp);
    let mut out = Vec::new();
    for (factor, mult) in square_free(&poly) {
        for z in simple_roots(&factor)? {
            out.push((z, mult));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn char_poly_of_cat_map() {
        let a: IntMatrix = "2,1;1,1".parse().unwrap();
        assert_eq!(char_poly(&a).unwrap(), vec![1, -3, 1]);
    }

    #[test]
    fn char_poly_3x3() {
        let a = IntMatrix::from_rows(&[vec![2, 1, 1], vec![1, 1, 1], vec![1, 0, 1]]).unwrap();
        // det(xI - A) = x^3 - 4x^2 + 3x - 1
        assert_eq!(char_poly(&a).unwrap(), vec![-1, 3, -4, 1]);
    }

    #[test]
    fn square_free_parabolic() {
        // (x+1)^2
        let f = Poly::from_ints(&[1, 2, 1]);
        let sf = square_free(&f);
        assert_eq!(sf.len(), 1);
        assert_eq!(sf[0].1, 2);
        assert_eq!(sf[0].0, Poly::from_ints(&[1, 1]));
    }

    #[test]
    fn square_free_mixed() {
        // (x-1)^3 (x^2 - 3x + 1) = expand
        let f = Poly::from_ints(&[-1, 6, -13, 13, -6, 1]);
        let mut sf = square_free(&f);
        sf.sort_by_key(|(_, m)| *m);
        assert_eq!(sf.len(), 2);
        assert_eq!(sf[0], (Poly::from_ints(&[1, -3, 1]), 1));
        assert_eq!(sf[1], (Poly::from_ints(&[-1, 1]), 3));
    }

    #[test]
    fn parabolic_roots_are_exact() {
        let a: IntMatrix = "-3,2;-2,1".parse().unwrap();
        let ev = eigenvalues(&a).unwrap();
        assert_eq!(ev, vec![(Complex64::new(-1.0, 0.0), 2)]);
    }

    #[test]
    fn cubic_roots_via_companion() {
        let a = IntMatrix::from_rows(&[vec![2, 1, 1], vec![1, 1, 1], vec![1, 0, 1]]).unwrap();
        let ev = eigenvalues(&a).unwrap();
        let prod = ev.iter().fold(Complex64::one(), |acc, (z, m)| acc * z.powu(*m as u32));
        assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let sum: Complex64 = ev.iter().map(|(z, m)| z * *m as f64).sum();
        assert!((sum - Complex64::new(4.0, 0.0)).norm() < 1e-12);
    }
}
