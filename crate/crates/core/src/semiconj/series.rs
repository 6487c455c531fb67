use nalgebra::DMatrix;

use super::cocycle::{word_cocycle, CocycleField};
use crate::error::{Error, Result};
use crate::scalar::{mat_vec, Scalar};
use crate::spectral::{restricted_inverse_norms, RestrictedNorms, Splitting};
use crate::torusmap::{ActionSpec, GridFunction, InvertOptions};
use crate::word::Word;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesBudget {
    /// Target for the certified truncation error, in sup norm.
    pub tol_tail: f64,
    /// Largest number of terms.
    pub max_n: usize,
}

impl Default for SeriesBudget {
    fn default() -> Self {
        Self { tol_tail: 1e-8, max_n: 200 }
    }
}

/// `P_E φ` for one word, stored in ambient coordinates.
#[derive(Debug, Clone)]
pub struct PartialSolution<T = f64> {
    pub word: Word,
    pub splitting: Splitting,
    pub values: GridFunction<T>,
    pub n_used: usize,
    /// Certified bound on the dropped terms.
    pub tail_bound: f64,
    /// Bound on `sup ‖α(w, ·)‖` used for the tail: grid sup plus interpolation estimate.
    pub sup_alpha: f64,
    pub alpha: CocycleField<T>,
    pub norms: RestrictedNorms,
}

/// `Q B^i C` for `i = 1..=n`, where `P_E A^{-i} = Q B^i C`.
fn projected_powers<T: Scalar>(s: &Splitting, n: usize) -> Vec<Vec<T>> {
    let b = s.restricted_inverse();
    let mut bi = DMatrix::<f64>::identity(b.nrows(), b.ncols());
    (0..n)
        .map(|_| {
            bi = &bi * &b;
            let m = s.e_basis() * &bi * s.e_coords();
            let dim = m.nrows();
            (0..dim * dim).map(|k| T::of(m[(k / dim, k % dim)])).collect()
        })
        .collect()
}

/// Truncates `φ_E(m) = Σ_{i ≥ 1} P_E A_w^{-i} α(w, F_w^{i-1}(m))` at the
/// smallest `N` whose certified tail is within `budget.tol_tail`. Orbit points
/// are iterated pointwise and terms are summed in ascending `i`.
pub fn series_solve_on_e<T: Scalar>(
    spec: &ActionSpec<T>,
    word: &Word,
    s: &Splitting,
    budget: SeriesBudget,
    res: Vec<usize>,
    opts: InvertOptions<T>,
) -> Result<PartialSolution<T>> {
    let n = spec.n();
    if s.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.n() });
    }
    if s.dim_e() == 0 {
        return Err(Error::InvalidArgument(format!("word `{}` has no expanding subspace", spec.show(word))));
    }
    let norms = restricted_inverse_norms(s, budget.max_n)?;
    let alpha = word_cocycle(spec, word, res.clone(), opts)?;
    let grid_sup = alpha.values.sup_norm().as_f64();
    let sup_alpha = if grid_sup == 0.0 { 0.0 } else { grid_sup + alpha.values.interpolation_error_estimate().as_f64() };
    let n_used = if sup_alpha == 0.0 {
        1
    } else {
        (1..=budget.max_n).find(|&k| norms.tail_after(k) * sup_alpha <= budget.tol_tail).ok_or(
            Error::BudgetExceeded { achieved: norms.tail_after(budget.max_n) * sup_alpha, max_n: budget.max_n },
        )?
    };
    let tail_bound = norms.tail_after(n_used) * sup_alpha;
    let mats = projected_powers::<T>(s, n_used);
    if let [m1] = mats.as_slice() {
        // one term: M_1 α(w, m), read off the sampled cocycle
        let values = alpha.values.map_values(n, |a, out| mat_vec(m1, a, out))?;
        return Ok(PartialSolution {
            word: word.clone(),
            splitting: s.clone(),
            values,
            n_used,
            tail_bound,
            sup_alpha,
            alpha,
            norms,
        });
    }
    let values = GridFunction::sample(res, n, |m, out| {
        let mut x = m.to_vec();
        let mut next = vec![T::zero(); n];
        let mut shift = vec![T::zero(); n];
        let mut a = vec![T::zero(); n];
        let mut term = vec![T::zero(); n];
        out.fill(T::zero());
        for mi in &mats {
            spec.word_step_into(word, &x, opts, &mut next, &mut shift, &mut a)?;
            mat_vec(mi, &a, &mut term);
            for (o, t) in out.iter_mut().zip(&term) {
                *o = *o + *t;
            }
            std::mem::swap(&mut x, &mut next);
        }
        Ok(())
    })?;
    Ok(PartialSolution {
        word: word.clone(),
        splitting: s.clone(),
        values,
        n_used,
        tail_bound,
        sup_alpha,
        alpha,
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{splitting, DEFAULT_TOL_UNIT};
    use crate::torusmap::TorusMap;
    use std::f64::consts::TAU;

    fn single(a: &str, amp: f64, res: usize) -> ActionSpec<f64> {
        let d = GridFunction::<f64>::sample(vec![res, res], 2, |x, o| {
            o[0] = amp * (TAU * x[1]).sin();
            o[1] = amp * (TAU * x[0]).sin();
            Ok(())
        })
        .unwrap();
        ActionSpec::new(vec!["a".into()], vec![TorusMap::new(a.parse().unwrap(), d).unwrap()]).unwrap()
    }

    #[test]
    fn zero_cocycle_gives_zero_series() {
        let s = single("2,1;1,1", 0.0, 32);
        let w = s.parse_word("a").unwrap();
        let sp = splitting(&s.word_matrix(&w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
        let p =
            series_solve_on_e(&s, &w, &sp, SeriesBudget::default(), vec![32, 32], InvertOptions::default()).unwrap();
        assert_eq!(p.n_used, 1);
        assert_eq!(p.values.sup_norm(), 0.0);
        assert_eq!(p.tail_bound, 0.0);
    }

    #[test]
    fn truncation_for_cat_map() {
        // sup ‖α‖ = 0.1·√2 on the grid; tail q^{N+1}/(1-q)·sup ≤ 1e-8 with q = φ^{-2}
        let s = single("2,1;1,1", 0.1, 64);
        let w = s.parse_word("a").unwrap();
        let sp = splitting(&s.word_matrix(&w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
        let p =
            series_solve_on_e(&s, &w, &sp, SeriesBudget::default(), vec![64, 64], InvertOptions::default()).unwrap();
        let q: f64 = 0.381_966_011_250_105_1;
        let expect = (1..).find(|&n| q.powi(n + 1) / (1.0 - q) * p.sup_alpha <= 1e-8).unwrap() as usize;
        assert_eq!(p.n_used, expect);
        assert!(p.tail_bound <= 1e-8);
        assert!((16..=20).contains(&p.n_used));
        // values lie in E
        let id = DMatrix::<f64>::identity(2, 2);
        let off = &id - sp.proj_e();
        for k in 0..p.values.num_points() {
            let v = p.values.value(k);
            let r = &off * nalgebra::DVector::from_column_slice(v);
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn budget_exceeded_reports_bound() {
        let s = single("2,1;1,1", 0.1, 16);
        let w = s.parse_word("a").unwrap();
        let sp = splitting(&s.word_matrix(&w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
        let r = series_solve_on_e(
            &s,
            &w,
            &sp,
            SeriesBudget { tol_tail: 1e-8, max_n: 5 },
            vec![16, 16],
            InvertOptions::default(),
        );
        match r {
            Err(Error::BudgetExceeded { achieved, max_n }) => {
                assert_eq!(max_n, 5);
                assert!(achieved > 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_expanding_subspace_rejected() {
        let s = single("1,2;0,1", 0.01, 16);
        let w = s.parse_word("a").unwrap();
        let sp = splitting(&s.word_matrix(&w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
        assert!(
            series_solve_on_e(&s, &w, &sp, SeriesBudget::default(), vec![16, 16], InvertOptions::default()).is_err()
        );
    }

    #[test]
    fn more_terms_change_little() {
        let s = single("2,1;1,1", 0.05, 32);
        let w = s.parse_word("a").unwrap();
        let sp = splitting(&s.word_matrix(&w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
        let opts = InvertOptions::default();
        let p =
            series_solve_on_e(&s, &w, &sp, SeriesBudget { tol_tail: 1e-4, max_n: 200 }, vec![32, 32], opts).unwrap();
        let fine =
            series_solve_on_e(&s, &w, &sp, SeriesBudget { tol_tail: 1e-12, max_n: 200 }, vec![32, 32], opts).unwrap();
        assert!(fine.n_used > p.n_used);
        assert!(fine.tail_bound <= p.tail_bound);
        assert!(p.values.max_distance(&fine.values).unwrap() <= p.tail_bound);
    }
}
