use super::GridFunction;
use crate::error::{Error, Result};
use crate::scalar::{mat_vec, norm, reduce_mod1, solve_in_place, Scalar};
use crate::spectral::IntMatrix;

/// Tolerance and iteration cap for [`TorusMap::invert_point`].
#[derive(Debug, Clone, Copy)]
pub struct InvertOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for InvertOptions<T> {
    fn default() -> Self {
        Self { tol: T::of(1e-12), max_iter: 200 }
    }
}

/// A torus map with lift `x ↦ A x + δ(x mod 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusMap<T = f64> {
    linear: IntMatrix,
    a: Vec<T>,
    a_inv: Vec<T>,
    delta: GridFunction<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomeoReport {
    /// Largest per-axis slope of the displacement.
    pub lip_delta_estimate: f64,
    /// `sqrt(Σ_i slope_i^2)`, an upper bound on the Lipschitz constant of the interpolant.
    pub lip_delta_bound: f64,
    pub a_inv_norm: f64,
    /// `lip_delta_bound · ‖A^{-1}‖ < 1`; sufficient only.
    pub sufficient: bool,
}

impl<T: Scalar> TorusMap<T> {
    pub fn new(linear: IntMatrix, delta: GridFunction<T>) -> Result<Self> {
        let n = linear.n();
        if delta.d() != n {
            return Err(Error::DimensionMismatch { expected: n, found: delta.d() });
        }
        if delta.m() != n {
            return Err(Error::DimensionMismatch { expected: n, found: delta.m() });
        }
        let a = linear.to_scalar_vec();
        let a_inv = linear.inverse().to_scalar_vec();
        Ok(Self { linear, a, a_inv, delta })
    }

    pub fn linear(a: IntMatrix, res: Vec<usize>) -> Result<Self> {
        let n = a.n();
        Self::new(a, GridFunction::zeros(res, n)?)
    }

    pub fn identity(n: usize, res: Vec<usize>) -> Result<Self> {
        Self::linear(IntMatrix::identity(n), res)
    }

    pub fn n(&self) -> usize {
        self.linear.n()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.linear
    }

    pub fn delta(&self) -> &GridFunction<T> {
        &self.delta
    }

    pub(crate) fn a_scalar(&self) -> &[T] {
        &self.a
    }

    pub(crate) fn a_inv_scalar(&self) -> &[T] {
        &self.a_inv
    }

    /// `F̃(x) = A x + δ(x mod 1)`.
    pub fn lift_eval(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n()];
        self.lift_eval_into(x, &mut out);
        out
    }

    pub fn lift_eval_into(&self, x: &[T], out: &mut [T]) {
        let n = self.n();
        let mut d = [T::zero(); 8];
        self.delta.eval_into(x, &mut d[..n]);
        mat_vec(&self.a, x, out);
        for (o, di) in out.iter_mut().zip(&d[..n]) {
            *o = *o + *di;
        }
    }

    /// Solves `F̃(x) = y` starting at `A^{-1} y` with damped Newton steps on the
    /// interpolant, whose Jacobian is exact cell-wise. When a Newton step does
    /// not reduce the residual, falls back to the fixed-point step
    /// `x ← A^{-1}(y - δ(x))`, which contracts when `Lip(δ)·‖A^{-1}‖ < 1`.
    pub fn invert_point(&self, y: &[T], opts: InvertOptions<T>) -> Result<Vec<T>> {
        let n = self.n();
        let mut x = vec![T::zero(); n];
        mat_vec(&self.a_inv, y, &mut x);
        let mut fx = vec![T::zero(); n];
        let residual = |x: &[T], fx: &mut [T]| -> T {
            self.lift_eval_into(x, fx);
            let r: Vec<T> = fx.iter().zip(y).map(|(&a, &b)| a - b).collect();
            norm(&r)
        };
        let mut res = residual(&x, &mut fx);
        let mut iters = 0;
        let mut jac = vec![T::zero(); n * n];
        let mut dval = vec![T::zero(); n];
        let mut tmp = vec![T::zero(); n];
        let mut cand = vec![T::zero(); n];
        while res > opts.tol && iters < opts.max_iter {
            iters += 1;
            self.delta.eval_with_jacobian(&x, &mut dval, &mut jac);
            for (jv, &av) in jac.iter_mut().zip(&self.a) {
                *jv = *jv + av;
            }
            self.lift_eval_into(&x, &mut fx);
            let mut step: Vec<T> = fx.iter().zip(y).map(|(&a, &b)| a - b).collect();
            let mut accepted = false;
            if solve_in_place(&mut jac, &mut step) {
                let mut lambda = T::one();
                for _ in 0..20 {
                    for i in 0..n {
                        cand[i] = x[i] - lambda * step[i];
                    }
                    let r = residual(&cand, &mut fx);
                    if r < res {
                        x.copy_from_slice(&cand);
                        res = r;
                        accepted = true;
                        break;
                    }
                    lambda = lambda * T::of(0.5);
                }
            }
            if !accepted {
                self.delta.eval_into(&x, &mut dval);
                for i in 0..n {
                    tmp[i] = y[i] - dval[i];
                }
                mat_vec(&self.a_inv, &tmp, &mut cand);
                let r = residual(&cand, &mut fx);
                if r < res {
                    x.copy_from_slice(&cand);
                    res = r;
                } else {
                    break;
                }
            }
        }
        if res <= opts.tol {
            Ok(x)
        } else {
            Err(Error::InvertDiverged { iterations: iters, residual: res.as_f64() })
        }
    }

    /// Sufficient condition for `F` to be a homeomorphism with a contracting
    /// inversion iteration.
    pub fn homeo_condition(&self) -> HomeoReport {
        let slopes: Vec<f64> = self.delta.axis_slopes().into_iter().map(T::as_f64).collect();
        let lip_delta_estimate = slopes.iter().copied().fold(0.0, f64::max);
        let lip_delta_bound = slopes.iter().map(|s| s * s).sum::<f64>().sqrt();
        let a_inv_norm = self.linear.inverse().norm2();
        HomeoReport { lip_delta_estimate, lip_delta_bound, a_inv_norm, sufficient: lip_delta_bound * a_inv_norm < 1.0 }
    }
}

/// `T1 ∘ T2` resampled on `res`: linear part `A1 A2`, displacement
/// `x ↦ A1 δ2(x) + δ1(T2(x) mod 1)`.
pub fn compose<T: Scalar>(t1: &TorusMap<T>, t2: &TorusMap<T>, res: Vec<usize>) -> Result<TorusMap<T>> {
    let n = t1.n();
    if t2.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: t2.n() });
    }
    let linear = t1.matrix().checked_mul(t2.matrix())?;
    let delta = GridFunction::sample(res, n, |x, out| {
        let d2 = t2.delta().eval(x);
        mat_vec(t1.a_scalar(), &d2, out);
        let mut y = t2.lift_eval(x);
        reduce_mod1(&mut y);
        let d1 = t1.delta().eval(&y);
        for (o, v) in out.iter_mut().zip(d1) {
            *o = *o + v;
        }
        Ok(())
    })?;
    TorusMap::new(linear, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn bump(res: usize, amp: f64) -> GridFunction<f64> {
        GridFunction::<f64>::sample(vec![res, res], 2, |x, o| {
            o[0] = amp * (TAU * x[1]).sin();
            o[1] = amp * (TAU * x[0]).sin();
            Ok(())
        })
        .unwrap()
    }

    fn m(s: &str) -> IntMatrix {
        s.parse().unwrap()
    }

    #[test]
    fn linear_lift() {
        let t = TorusMap::<f64>::linear(m("2,1;1,1"), vec![4, 4]).unwrap();
        assert_eq!(t.lift_eval(&[0.5, 0.25]), vec![1.25, 0.75]);
        assert_eq!(t.lift_eval(&[3.0, -2.0]), vec![4.0, 1.0]);
    }

    #[test]
    fn invert_linear_in_one_step() {
        let t = TorusMap::<f64>::linear(m("2,1;1,1"), vec![4, 4]).unwrap();
        let x = t.invert_point(&[1.25, 0.75], InvertOptions::default()).unwrap();
        assert_eq!(x, vec![0.5, 0.25]);
    }

    #[test]
    fn invert_one_dimensional_contraction() {
        // A = (1), δ amplitude 0.1: the iteration contracts with ratio ≤ Lip(δ)
        let delta = GridFunction::<f64>::sample(vec![512], 1, |x, o| {
            o[0] = 0.1 / TAU * (TAU * x[0]).sin();
            Ok(())
        })
        .unwrap();
        let t = TorusMap::new(IntMatrix::identity(1), delta).unwrap();
        let rep = t.homeo_condition();
        assert!(rep.lip_delta_estimate <= 0.1 + 1e-12);
        let y = [0.37];
        let x = t.invert_point(&y, InvertOptions::default()).unwrap();
        assert!((t.lift_eval(&x)[0] - y[0]).abs() <= 1e-12);
    }

    #[test]
    fn homeo_condition_examples() {
        let zero = TorusMap::<f64>::identity(2, vec![8, 8]).unwrap().homeo_condition();
        assert_eq!(zero.lip_delta_estimate, 0.0);
        assert!(zero.sufficient);
        let t = TorusMap::new(IntMatrix::identity(2), bump(1024, 0.05)).unwrap();
        let rep = t.homeo_condition();
        assert!((rep.lip_delta_estimate - 0.1 * PI).abs() < 1e-4, "{rep:?}");
        assert!(rep.lip_delta_bound >= rep.lip_delta_estimate);
        assert!(rep.sufficient);
        let big = TorusMap::new(IntMatrix::identity(2), bump(64, 10.0)).unwrap();
        assert!(!big.homeo_condition().sufficient);
    }

    #[test]
    fn invert_diverged_reports() {
        let t = TorusMap::new(m("1,2;0,1"), bump(64, 0.05)).unwrap();
        let err = t.invert_point(&[0.3, 0.4], InvertOptions { tol: 1e-12, max_iter: 1 }).unwrap_err();
        assert!(matches!(err, Error::InvertDiverged { iterations: 1, .. }));
    }

    #[test]
    fn invert_beyond_contraction_regime() {
        // Lip(δ)·‖A^{-1}‖ > 1 for this shear; Newton finishes the job.
        let t = TorusMap::new(m("1,2;0,1"), bump(256, 0.05)).unwrap();
        assert!(!t.homeo_condition().sufficient);
        for y in [[0.1, 0.9], [0.77, 0.31], [2.5, -1.25]] {
            let x = t.invert_point(&y, InvertOptions::default()).unwrap();
            let back = t.lift_eval(&x);
            assert!(crate::scalar::dist(&back, &y) <= 1e-12);
        }
    }

    #[test]
    fn compose_with_identity_and_linear() {
        let t = TorusMap::new(m("2,1;1,1"), bump(16, 0.05)).unwrap();
        let id = TorusMap::identity(2, vec![16, 16]).unwrap();
        let c = compose(&t, &id, vec![16, 16]).unwrap();
        assert_eq!(c.matrix(), t.matrix());
        assert_eq!(c.delta(), t.delta());
        let a = TorusMap::<f64>::linear(m("1,2;0,1"), vec![8, 8]).unwrap();
        let b = TorusMap::<f64>::linear(m("1,0;2,1"), vec![8, 8]).unwrap();
        let ab = compose(&a, &b, vec![8, 8]).unwrap();
        assert_eq!(ab.matrix(), &m("5,2;2,1"));
        assert_eq!(ab.delta().sup_norm(), 0.0);
    }

    #[test]
    fn compose_associative_at_grid_points() {
        let r = vec![64, 64];
        let t1 = TorusMap::new(m("1,2;0,1"), bump(64, 0.03)).unwrap();
        let t2 = TorusMap::new(m("1,0;2,1"), bump(64, 0.02)).unwrap();
        let t3 = TorusMap::new(m("2,1;1,1"), bump(64, 0.01)).unwrap();
        let left = compose(&compose(&t1, &t2, r.clone()).unwrap(), &t3, r.clone()).unwrap();
        let right = compose(&t1, &compose(&t2, &t3, r.clone()).unwrap(), r.clone()).unwrap();
        let budget = [&t1, &t2, &t3].iter().map(|t| t.delta().interpolation_error_estimate() * 40.0).sum::<f64>();
        let diff = left.delta().max_distance(right.delta()).unwrap();
        assert!(diff <= budget, "{diff} > {budget}");
    }

    proptest! {
        #[test]
        fn lift_commutes_with_deck_translations(x in -2.0f64..2.0, y in -2.0f64..2.0, k0 in -5i64..5, k1 in -5i64..5) {
            let t = TorusMap::new(m("5,2;2,1"), bump(32, 0.05)).unwrap();
            let base = t.lift_eval(&[x, y]);
            let shifted = t.lift_eval(&[x + k0 as f64, y + k1 as f64]);
            let ak = [5.0 * k0 as f64 + 2.0 * k1 as f64, 2.0 * k0 as f64 + k1 as f64];
            for i in 0..2 {
                prop_assert!((shifted[i] - base[i] - ak[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn invert_then_forward(y0 in 0.0f64..1.0, y1 in 0.0f64..1.0) {
            let t = TorusMap::new(m("2,1;1,1"), bump(64, 0.05)).unwrap();
            let x = t.invert_point(&[y0, y1], InvertOptions::default()).unwrap();
            prop_assert!(crate::scalar::dist(&t.lift_eval(&x), &[y0, y1]) <= 1e-12);
        }
    }
}
