use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A continuous map `T^d → R^m` stored as samples on the uniform grid
/// `(k_1/r_1, .., k_d/r_d)`, evaluated by periodic multilinear interpolation.
///
/// Samples are row-major over grid points (axis 0 slowest), with the `m`
/// components of each point stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T = f64> {
    res: Vec<usize>,
    m: usize,
    strides: Vec<usize>,
    data: Vec<T>,
}

fn strides_for(res: &[usize]) -> Vec<usize> {
    let mut s = vec![1; res.len()];
    for i in (0..res.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * res[i + 1];
    }
    s
}

fn check_res(res: &[usize], m: usize) -> Result<()> {
    if res.is_empty() {
        return Err(Error::InvalidArgument("grid needs at least one axis".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("codomain dimension must be positive".into()));
    }
    if let Some(&r) = res.iter().find(|&&r| r < 2) {
        return Err(Error::InvalidArgument(format!("grid resolution {r} per axis is below 2")));
    }
    Ok(())
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(res: Vec<usize>, m: usize, data: Vec<T>) -> Result<Self> {
        check_res(&res, m)?;
        let points: usize = res.iter().product();
        if data.len() != points * m {
            return Err(Error::DimensionMismatch { expected: points * m, found: data.len() });
        }
        let g = Self { strides: strides_for(&res), res, m, data };
        if let Some(idx) = g.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::SampleNotFinite { point: g.point_f64(idx / m) });
        }
        Ok(g)
    }

    pub fn zeros(res: Vec<usize>, m: usize) -> Result<Self> {
        check_res(&res, m)?;
        let points: usize = res.iter().product();
        Ok(Self { strides: strides_for(&res), res, m, data: vec![T::zero(); points * m] })
    }

    /// Samples `f` at every grid point; points are independent and filled in parallel.
    pub fn sample<F>(res: Vec<usize>, m: usize, f: F) -> Result<Self>
    where
        F: Fn(&[T], &mut [T]) -> Result<()> + Sync,
    {
        let mut g = Self::zeros(res, m)?;
        let d = g.d();
        let (res, strides) = (&g.res, &g.strides);
        g.data.par_chunks_mut(m).enumerate().try_for_each(|(idx, out)| {
            let mut x = vec![T::zero(); d];
            point_coords(res, strides, idx, &mut x);
            f(&x, out)
        })?;
        if let Some(idx) = g.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::SampleNotFinite { point: g.point_f64(idx / m) });
        }
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.res.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn num_points(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn value(&self, idx: usize) -> &[T] {
        &self.data[idx * self.m..(idx + 1) * self.m]
    }

    /// Coordinates of grid point `idx`.
    pub fn point(&self, idx: usize, x: &mut [T]) {
        point_coords(&self.res, &self.strides, idx, x);
    }

    pub fn points(&self) -> Vec<Vec<T>> {
        (0..self.num_points())
            .map(|i| {
                let mut x = vec![T::zero(); self.d()];
                self.point(i, &mut x);
                x
            })
            .collect()
    }

    fn point_f64(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![T::zero(); self.d()];
        self.point(idx, &mut x);
        x.into_iter().map(T::as_f64).collect()
    }

    /// Periodic multilinear interpolation at `x` (any real point).
    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        self.eval_impl(x, out, None);
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        self.eval_into(x, &mut out);
        out
    }

    /// Value and Jacobian (row-major `m x d`) of the interpolant at `x`.
    pub fn eval_with_jacobian(&self, x: &[T], out: &mut [T], jac: &mut [T]) {
        self.eval_impl(x, out, Some(jac));
    }

    fn eval_impl(&self, x: &[T], out: &mut [T], mut jac: Option<&mut [T]>) {
        let d = self.d();
        debug_assert_eq!(x.len(), d);
        assert!(d <= MAX_AXES, "at most {MAX_AXES} axes supported");
        // per axis: sample offsets and weights of the lower and upper corner
        let mut off = [[0usize; 2]; MAX_AXES];
        let mut wt = [[T::zero(); 2]; MAX_AXES];
        for i in 0..d {
            let (k, frac) = cell(x[i], self.res[i]);
            let hi = if k + 1 == self.res[i] { 0 } else { k + 1 };
            off[i] = [k * self.strides[i] * self.m, hi * self.strides[i] * self.m];
            wt[i] = [T::one() - frac, frac];
        }
        out.iter_mut().for_each(|o| *o = T::zero());
        if let Some(j) = jac.as_deref_mut() {
            j.iter_mut().for_each(|v| *v = T::zero());
        }
        for corner in 0..(1usize << d) {
            let mut w = T::one();
            let mut base = 0;
            for i in 0..d {
                let b = corner >> i & 1;
                w = w * wt[i][b];
                base += off[i][b];
            }
            let v = &self.data[base..base + self.m];
            if w != T::zero() {
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = *o + w * vi;
                }
            }
            if let Some(j) = jac.as_deref_mut() {
                for ax in 0..d {
                    // ∂w/∂x_ax = r_ax · (±1) · ∏_{i≠ax} (t_i or 1-t_i)
                    let up = corner >> ax & 1 == 1;
                    let r = T::of(self.res[ax] as f64);
                    let mut dw = if up { r } else { -r };
                    for i in (0..d).filter(|&i| i != ax) {
                        dw = dw * wt[i][corner >> i & 1];
                    }
                    if dw != T::zero() {
                        for (c, &vi) in v.iter().enumerate() {
                            j[c * d + ax] = j[c * d + ax] + dw * vi;
                        }
                    }
                }
            }
        }
    }

    /// Largest Euclidean norm over samples; the sup of the interpolant.
    pub fn sup_norm(&self) -> T {
        self.data.chunks(self.m).map(crate::scalar::norm).fold(T::zero(), T::max)
    }

    /// Largest Euclidean distance between corresponding samples.
    pub fn max_distance(&self, other: &GridFunction<T>) -> Result<T> {
        if self.res != other.res || self.m != other.m {
            return Err(Error::DimensionMismatch { expected: self.data.len(), found: other.data.len() });
        }
        Ok(self
            .data
            .chunks(self.m)
            .zip(other.data.chunks(self.m))
            .map(|(a, b)| crate::scalar::dist(a, b))
            .fold(T::zero(), T::max))
    }

    /// For each axis, the largest `‖f(k + e_i) - f(k)‖ · r_i` over the grid:
    /// the exact sup of `‖∂_i f‖` for the multilinear interpolant.
    pub fn axis_slopes(&self) -> Vec<T> {
        (0..self.d())
            .map(|ax| {
                let r = T::of(self.res[ax] as f64);
                (0..self.num_points())
                    .map(|idx| {
                        let j = self.neighbour(idx, ax, 1);
                        crate::scalar::dist(self.value(idx), self.value(j)) * r
                    })
                    .fold(T::zero(), T::max)
            })
            .collect()
    }

    /// A-priori multilinear interpolation error estimate
    /// `(1/8) Σ_i max |f(k+e_i) - 2 f(k) + f(k-e_i)|` from second differences.
    pub fn interpolation_error_estimate(&self) -> T {
        let eighth = T::of(0.125);
        (0..self.d())
            .map(|ax| {
                (0..self.num_points())
                    .map(|idx| {
                        let (p, q) = (self.neighbour(idx, ax, 1), self.neighbour(idx, ax, self.res[ax] - 1));
                        let (a, b, c) = (self.value(p), self.value(idx), self.value(q));
                        (0..self.m).map(|k| (a[k] - b[k] - b[k] + c[k]).abs()).fold(T::zero(), T::max)
                    })
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), |acc, v| acc + v)
            * eighth
    }

    /// Index of the point `step` cells further along `axis`, wrapping.
    fn neighbour(&self, idx: usize, axis: usize, step: usize) -> usize {
        let r = self.res[axis];
        let s = self.strides[axis];
        let k = (idx / s) % r;
        let nk = (k + step) % r;
        idx - k * s + nk * s
    }

    pub fn map_values<F: Fn(&[T], &mut [T]) + Sync>(&self, m_out: usize, f: F) -> Result<Self> {
        let mut g = Self::zeros(self.res.clone(), m_out)?;
        g.data.par_chunks_mut(m_out).zip(self.data.par_chunks(self.m)).for_each(|(o, v)| f(v, o));
        Ok(g)
    }

    pub fn cast<U: Scalar>(&self) -> GridFunction<U> {
        GridFunction {
            res: self.res.clone(),
            m: self.m,
            strides: self.strides.clone(),
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }
}

const MAX_AXES: usize = 8;

fn point_coords<T: Scalar>(res: &[usize], strides: &[usize], idx: usize, x: &mut [T]) {
    for i in 0..res.len() {
        let k = (idx / strides[i]) % res[i];
        x[i] = T::of(k as f64 / res[i] as f64);
    }
}

/// Cell index and fractional offset of `x` along an axis with `r` samples.
/// Values within a few ulps of a grid line snap onto it, so points built as
/// `k / r` hit their sample exactly.
fn cell<T: Scalar>(x: T, r: usize) -> (usize, T) {
    let rt = T::of(r as f64);
    let t = x - x.floor();
    let mut u = t * rt;
    let ku = u.round();
    if (u - ku).abs() <= T::of(8.0) * T::epsilon() * ku.max(T::one()) {
        u = ku;
    }
    if u >= rt {
        u = u - rt;
    }
    if u < T::zero() {
        u = T::zero();
    }
    let k = u.floor();
    let ki = k.to_usize().unwrap_or(0).min(r - 1);
    (ki, u - k)
}
