use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point scalar used for grid samples, lifts and series sums: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for tolerances and matrix entries.
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

pub(crate) fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y)).sqrt()
}

/// Reduce each coordinate into `[0, 1)`.
pub(crate) fn reduce_mod1<T: Scalar>(x: &mut [T]) {
    for xi in x.iter_mut() {
        let r = *xi - xi.floor();
        // `x - floor(x)` rounds to 1.0 for tiny negative inputs
        *xi = if r >= T::one() { T::zero() } else { r };
    }
}

/// Dense row-major `n x n` matrix times vector.
pub(crate) fn mat_vec<T: Scalar>(m: &[T], v: &[T], out: &mut [T]) {
    let n = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m[i * n..(i + 1) * n];
        *o = row.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    }
}

/// Solve `m x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `false` when a pivot vanishes.
pub(crate) fn solve_in_place<T: Scalar>(m: &mut [T], b: &mut [T]) -> bool {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col] == T::zero() || !m[piv * n + col].is_finite() {
            return false;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = m[col * n + c];
                m[r * n + c] = m[r * n + c] - f * v;
            }
            b[r] = b[r] - f * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s = s - m[row * n + c] * b[c];
        }
        b[row] = s / m[row * n + row];
    }
    true
}
